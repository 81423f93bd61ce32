//! Pass/fail/inconclusive outcomes for individual theorem hypotheses.

use std::fmt;

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Status {
    Pass,
    Fail,
    Inconclusive,
}

impl fmt::Display for Status {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Status::Pass => "pass",
            Status::Fail => "fail",
            Status::Inconclusive => "inconclusive",
        })
    }
}

/// The outcome of checking one labelled hypothesis.
#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub struct Verdict {
    pub label: &'static str,
    pub status: Status,
    pub detail: String,
}

impl Verdict {
    pub fn new(label: &'static str, status: Status, detail: impl Into<String>) -> Self {
        Self {
            label,
            status,
            detail: detail.into(),
        }
    }

    pub fn pass_if(label: &'static str, ok: bool, detail: impl Into<String>) -> Self {
        let status = if ok { Status::Pass } else { Status::Fail };
        Self::new(label, status, detail)
    }

    /// Verdict for a hypothesis `value < 1` when only bounds on `value` are
    /// known: pass on a passing upper bound, fail on a failing lower bound.
    pub fn below_one(label: &'static str, upper: f64, lower: Option<f64>) -> Self {
        // `+ 0.0` folds negative zero
        let (upper, lower) = (upper + 0.0, lower.map(|l| l + 0.0));
        let detail = match lower {
            Some(l) => format!("{l:.6} ≤ value ≤ {upper:.6}"),
            None => format!("value ≤ {upper:.6}"),
        };
        let status = if upper < 1.0 {
            Status::Pass
        } else if lower.is_some_and(|l| l >= 1.0) {
            Status::Fail
        } else {
            Status::Inconclusive
        };
        Self::new(label, status, detail)
    }
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} {}: {}", self.label, self.status, self.detail)
    }
}

/// Combines verdicts: any failure fails, otherwise any inconclusive entry
/// makes the whole inconclusive.
pub fn overall(verdicts: &[Verdict]) -> Status {
    if verdicts.iter().any(|v| v.status == Status::Fail) {
        Status::Fail
    } else if verdicts.iter().any(|v| v.status == Status::Inconclusive) {
        Status::Inconclusive
    } else {
        Status::Pass
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn below_one_rules() {
        assert_eq!(Verdict::below_one("B6", 0.8, None).status, Status::Pass);
        assert_eq!(Verdict::below_one("B6", 4.0, Some(2.0)).status, Status::Fail);
        assert_eq!(Verdict::below_one("B6", 4.0, Some(0.5)).status, Status::Inconclusive);
        assert_eq!(Verdict::below_one("B6", 4.0, None).status, Status::Inconclusive);
    }

    #[test]
    fn combining() {
        let p = Verdict::pass_if("A7", true, "");
        let i = Verdict::new("B6", Status::Inconclusive, "");
        let f = Verdict::pass_if("A8", false, "");
        assert_eq!(overall(std::slice::from_ref(&p)), Status::Pass);
        assert_eq!(overall(&[p.clone(), i.clone()]), Status::Inconclusive);
        assert_eq!(overall(&[p, i, f]), Status::Fail);
        assert_eq!(overall(&[]), Status::Pass);
    }
}
