//! Batch front-end for `hammer-core`: loads a problem-spec document, runs a
//! solver or checker and writes a CSV table or a JSON report.
//!
//! Exit codes: 0 success, 1 hypothesis failure, 2 non-convergence,
//! 3 malformed input. Every failure prints one line of the form
//! `hammer: exit=<code> kind=<kind> label=<label|-> reason=<text>`.

pub mod doc;
pub mod examples;
mod run;

use std::fmt;
use std::path::PathBuf;

pub use run::{read_solution, run, solution_csv, RunOutput};

/// Largest accepted tolerance.
pub const MAX_TOL: f64 = 1e-2;
pub const DEFAULT_GRID: usize = 256;
pub const DEFAULT_TOL: f64 = 1e-8;
pub const DEFAULT_MAX_ITER: usize = 10_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Command {
    Solve,
    Eig,
    Check,
    Verify,
    Examples,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Format {
    Csv,
    Report,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub command: Command,
    pub spec: Option<PathBuf>,
    /// Solution table read by `verify`.
    pub solution: Option<PathBuf>,
    pub grid: Option<usize>,
    pub tol: Option<f64>,
    pub max_iter: Option<usize>,
    pub out: Option<PathBuf>,
    pub format: Format,
}

/// Grid and tolerance after merging flags, the document's solver section and
/// defaults.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Resolved {
    pub grid: usize,
    pub tol: f64,
    pub max_iter: usize,
}

impl Resolved {
    pub fn new(grid: usize, tol: f64, max_iter: usize) -> Result<Self, Failure> {
        if grid < 8 || !grid.is_power_of_two() {
            return Err(Failure::malformed(format!("grid {grid} must be a power of two ≥ 8")));
        }
        if !(tol > 0.0 && tol <= MAX_TOL) {
            return Err(Failure::malformed(format!("tol {tol:e} must lie in (0, {MAX_TOL:e}]")));
        }
        if max_iter == 0 {
            return Err(Failure::malformed("max-iter must be positive"));
        }
        Ok(Self { grid, tol, max_iter })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FailureKind {
    Hypothesis,
    NonConvergence,
    Malformed,
}

impl FailureKind {
    pub fn exit_code(self) -> i32 {
        match self {
            FailureKind::Hypothesis => 1,
            FailureKind::NonConvergence => 2,
            FailureKind::Malformed => 3,
        }
    }
}

impl fmt::Display for FailureKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            FailureKind::Hypothesis => "hypothesis",
            FailureKind::NonConvergence => "non-convergence",
            FailureKind::Malformed => "malformed",
        })
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
#[error("{kind}: {reason}")]
pub struct Failure {
    pub kind: FailureKind,
    /// Assumption label, when one is involved.
    pub label: Option<String>,
    pub reason: String,
}

impl Failure {
    pub fn malformed(reason: impl Into<String>) -> Self {
        Self {
            kind: FailureKind::Malformed,
            label: None,
            reason: reason.into(),
        }
    }

    pub fn hypothesis(label: impl Into<String>, reason: impl Into<String>) -> Self {
        Self {
            kind: FailureKind::Hypothesis,
            label: Some(label.into()),
            reason: reason.into(),
        }
    }

    pub fn non_convergence(reason: impl Into<String>) -> Self {
        Self {
            kind: FailureKind::NonConvergence,
            label: None,
            reason: reason.into(),
        }
    }

    pub fn exit_code(&self) -> i32 {
        self.kind.exit_code()
    }

    /// The single diagnostic line written to stderr.
    pub fn line(&self) -> String {
        let reason: String = self
            .reason
            .chars()
            .map(|c| if c == '\n' || c == '\r' { ' ' } else { c })
            .collect();
        format!(
            "hammer: exit={} kind={} label={} reason={}",
            self.exit_code(),
            self.kind,
            self.label.as_deref().unwrap_or("-"),
            reason
        )
    }
}

impl From<hammer_core::Error> for Failure {
    /// Violated assumptions become hypothesis failures, except the partition
    /// of unity `v + w = 1`, which makes the input malformed.
    fn from(e: hammer_core::Error) -> Self {
        match e.assumption_label() {
            Some("A9") => Self {
                kind: FailureKind::Malformed,
                label: Some("A9".into()),
                reason: e.to_string(),
            },
            Some(label) => Self::hypothesis(label, e.to_string()),
            None => Self::malformed(e.to_string()),
        }
    }
}

/// Runs the command, writes the artifact to `--out` or stdout and the
/// failure line to stderr. Returns the process exit code.
pub fn execute(cfg: &RunConfig) -> i32 {
    let failure = match run(cfg) {
        Ok(output) => match write_artifact(cfg, &output.artifact) {
            Ok(()) => output.failure,
            Err(e) => Some(e),
        },
        Err(e) => Some(e),
    };
    match failure {
        Some(f) => {
            eprintln!("{}", f.line());
            f.exit_code()
        }
        None => 0,
    }
}

fn write_artifact(cfg: &RunConfig, artifact: &str) -> Result<(), Failure> {
    use std::io::Write;
    match &cfg.out {
        Some(path) => std::fs::write(path, artifact)
            .map_err(|e| Failure::malformed(format!("{}: {e}", path.display()))),
        None => std::io::stdout()
            .write_all(artifact.as_bytes())
            .map_err(|e| Failure::malformed(format!("stdout: {e}"))),
    }
}
