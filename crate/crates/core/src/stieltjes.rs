//! Riemann–Stieltjes integrals and the linear functionals they induce on
//! continuous functions of bounded variation.
//!
//! Both orientations are integrated exactly on polynomial pieces: `∫ x dA`
//! splits into the jumps of `A` plus `∫ x A′`, and `∫ A dx` is `∫ A x′` for
//! continuous piecewise-polynomial `x`.

use crate::bvfun::{BvFunction, GridFunction};
use crate::error::{Error, Result};
use crate::quadrature;

fn merged_cuts(f: &BvFunction, g: &BvFunction) -> Vec<f64> {
    let mut cuts: Vec<f64> = f
        .structure_points()
        .into_iter()
        .chain(g.structure_points())
        .filter(|c| (0.0..=1.0).contains(c))
        .chain([0.0, 1.0])
        .collect();
    cuts.sort_by(f64::total_cmp);
    cuts.dedup();
    cuts
}

fn require_continuous(x: &BvFunction, what: &str) -> Result<()> {
    if x.is_continuous() {
        Ok(())
    } else {
        Err(Error::Discontinuous(format!("{what} has jumps")))
    }
}

/// `∫₀¹ x(s) dA(s)` for continuous `x` and any `A` of bounded variation.
pub fn rs_da(x: &BvFunction, a: &BvFunction) -> Result<f64> {
    require_continuous(x, "integrand x")?;
    let jumps: f64 = a.discontinuities().iter().map(|&(loc, h)| h * x.eval(loc)).sum();
    let smooth: f64 = merged_cuts(x, a)
        .windows(2)
        .map(|w| quadrature::gauss_legendre(|s| x.eval(s) * a.derivative_at(s), w[0], w[1]))
        .sum();
    Ok(jumps + smooth)
}

/// `∫₀¹ A(s) dx(s)` for continuous piecewise-polynomial `x`.
pub fn rs_dx(a: &BvFunction, x: &BvFunction) -> Result<f64> {
    require_continuous(x, "integrator x")?;
    Ok(merged_cuts(x, a)
        .windows(2)
        .map(|w| quadrature::gauss_legendre(|s| a.eval(s) * x.derivative_at(s), w[0], w[1]))
        .sum())
}

/// The Riemann–Stieltjes sum `Σ A(τᵢ)(x(tᵢ) − x(tᵢ₋₁))` for a tagged partition.
pub fn rs_sum(a: &BvFunction, x: &BvFunction, partition: &[f64], tags: &[f64]) -> Result<f64> {
    if partition.len() < 2 || partition[0] != 0.0 || *partition.last().unwrap() != 1.0 {
        return Err(Error::InvalidPartition("partition must run from 0 to 1".into()));
    }
    if partition.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(Error::InvalidPartition("partition must be strictly increasing".into()));
    }
    if tags.len() + 1 != partition.len() {
        return Err(Error::InvalidPartition(format!(
            "{} subintervals need {} tags, got {}",
            partition.len() - 1,
            partition.len() - 1,
            tags.len()
        )));
    }
    let a_jumps = a.discontinuities();
    let x_jumps = x.discontinuities();
    let mut sum = 0.0;
    for (w, &tag) in partition.windows(2).zip(tags) {
        if !(tag >= w[0] && tag <= w[1]) {
            return Err(Error::InvalidPartition(format!(
                "tag {tag} outside [{}, {}]",
                w[0], w[1]
            )));
        }
        let shared = a_jumps.iter().any(|j| j.0 == tag) && x_jumps.iter().any(|j| j.0 == tag);
        if shared {
            return Err(Error::InvalidPartition(format!(
                "tag {tag} sits on a jump shared by A and x"
            )));
        }
        sum += a.eval(tag) * (x.eval(w[1]) - x.eval(w[0]));
    }
    Ok(sum)
}

/// Uniform partition of `[0, 1]` into `2^depth` pieces with midpoint tags.
pub fn dyadic_partition(depth: u32) -> (Vec<f64>, Vec<f64>) {
    let n = 1usize << depth;
    let partition: Vec<f64> = (0..=n).map(|i| i as f64 / n as f64).collect();
    let tags = partition.windows(2).map(|w| 0.5 * (w[0] + w[1])).collect();
    (partition, tags)
}

/// How a functional acts on `x ∈ CBV[0, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub enum FunctionalKind {
    /// `x ↦ ∫ A dx`.
    StieltjesDx(BvFunction),
    /// `x ↦ ∫ x dA`.
    StieltjesDa(BvFunction),
    /// `x ↦ Σ wᵢ x(aᵢ)` with rows `(wᵢ, aᵢ)`.
    Points(Vec<(f64, f64)>),
    /// `Σ cᵢ Fᵢ`, produced when functionals of different kinds are combined.
    Combination(Vec<(f64, Functional)>),
}

/// A continuous linear functional on `CBV[0, 1]` with a cached upper bound
/// for its norm.
#[derive(Debug, Clone, PartialEq)]
pub struct Functional {
    kind: FunctionalKind,
    norm_upper: f64,
}

impl Functional {
    fn with_kind(kind: FunctionalKind) -> Self {
        let norm_upper = match &kind {
            FunctionalKind::StieltjesDa(a) => a.total_variation(),
            FunctionalKind::StieltjesDx(a) => a.sup_norm(),
            FunctionalKind::Points(rows) => rows.iter().map(|r| r.0.abs()).sum(),
            FunctionalKind::Combination(terms) => {
                terms.iter().map(|(c, f)| c.abs() * f.norm_upper).sum()
            }
        };
        Self { kind, norm_upper }
    }

    pub fn dx(a: BvFunction) -> Self {
        Self::with_kind(FunctionalKind::StieltjesDx(a))
    }

    pub fn da(a: BvFunction) -> Self {
        Self::with_kind(FunctionalKind::StieltjesDa(a))
    }

    /// Point evaluations from `(weight, node)` rows; rows sharing a node are
    /// merged and zero weights dropped.
    pub fn points(rows: &[(f64, f64)]) -> Result<Self> {
        let mut merged: Vec<(f64, f64)> = Vec::with_capacity(rows.len());
        for &(w, node) in rows {
            if !(0.0..=1.0).contains(&node) || !w.is_finite() {
                return Err(Error::InvalidParameter(format!("bad point row ({w}, {node})")));
            }
            match merged.iter_mut().find(|r| r.1 == node) {
                Some(r) => r.0 += w,
                None => merged.push((w, node)),
            }
        }
        merged.retain(|r| r.0 != 0.0);
        merged.sort_by(|a, b| a.1.total_cmp(&b.1));
        Ok(Self::with_kind(FunctionalKind::Points(merged)))
    }

    pub fn zero() -> Self {
        Self::with_kind(FunctionalKind::Points(Vec::new()))
    }

    pub fn kind(&self) -> &FunctionalKind {
        &self.kind
    }

    /// Upper bound for `‖F‖` on `CBV[0, 1]`.
    pub fn norm_upper(&self) -> f64 {
        self.norm_upper
    }

    /// Why [`Functional::norm_upper`] bounds the norm.
    pub fn norm_justification(&self) -> &'static str {
        match self.kind {
            FunctionalKind::StieltjesDa(_) => "|∫x dA| ≤ ‖x‖∞·var A ≤ ‖x‖BV·var A",
            FunctionalKind::StieltjesDx(_) => "|∫A dx| ≤ sup|A|·var x ≤ sup|A|·‖x‖BV (upper bound only)",
            FunctionalKind::Points(_) => "|Σwᵢx(aᵢ)| ≤ Σ|wᵢ|·‖x‖∞ ≤ Σ|wᵢ|·‖x‖BV",
            FunctionalKind::Combination(_) => "triangle inequality over the terms",
        }
    }

    pub fn is_zero(&self) -> bool {
        matches!(&self.kind, FunctionalKind::Points(rows) if rows.is_empty())
    }

    pub fn apply(&self, x: &BvFunction) -> Result<f64> {
        match &self.kind {
            FunctionalKind::StieltjesDx(a) => rs_dx(a, x),
            FunctionalKind::StieltjesDa(a) => rs_da(x, a),
            FunctionalKind::Points(rows) => Ok(rows.iter().map(|&(w, node)| w * x.eval(node)).sum()),
            FunctionalKind::Combination(terms) => terms
                .iter()
                .map(|(c, f)| f.apply(x).map(|v| c * v))
                .sum(),
        }
    }

    /// Applies the functional to the piecewise-cubic interpolant of `x`.
    pub fn apply_grid(&self, x: &GridFunction) -> Result<f64> {
        match &self.kind {
            FunctionalKind::Points(rows) => Ok(rows.iter().map(|&(w, node)| w * x.eval(node)).sum()),
            _ => self.apply(&x.interpolant()),
        }
    }

    /// `self − other`, kept in closed form when both have the same kind.
    pub fn minus(&self, other: &Functional) -> Functional {
        match (&self.kind, &other.kind) {
            (FunctionalKind::StieltjesDa(a), FunctionalKind::StieltjesDa(b)) => Self::da(a - b),
            (FunctionalKind::StieltjesDx(a), FunctionalKind::StieltjesDx(b)) => Self::dx(a - b),
            (FunctionalKind::Points(p), FunctionalKind::Points(q)) => {
                let rows: Vec<(f64, f64)> = p
                    .iter()
                    .copied()
                    .chain(q.iter().map(|&(w, node)| (-w, node)))
                    .collect();
                Self::points(&rows).expect("rows were validated on construction")
            }
            _ => Self::with_kind(FunctionalKind::Combination(vec![
                (1.0, self.clone()),
                (-1.0, other.clone()),
            ])),
        }
    }

    /// Points where the functional concentrates or changes behaviour.
    pub fn nodes(&self) -> Vec<f64> {
        let mut out: Vec<f64> = match &self.kind {
            FunctionalKind::StieltjesDa(a) | FunctionalKind::StieltjesDx(a) => a.structure_points(),
            FunctionalKind::Points(rows) => rows.iter().map(|r| r.1).collect(),
            FunctionalKind::Combination(terms) => terms.iter().flat_map(|(_, f)| f.nodes()).collect(),
        };
        out.retain(|t| (0.0..=1.0).contains(t));
        out.sort_by(f64::total_cmp);
        out.dedup();
        out
    }

    /// Test functions for [`Functional::norm_witness`]: constants, the two
    /// linear ramps and monotone polyline ramps between pairs of nodes.
    pub fn witness_family(&self) -> Vec<BvFunction> {
        let mut nodes = self.nodes();
        nodes.extend([0.0, 1.0]);
        nodes.sort_by(f64::total_cmp);
        nodes.dedup();
        nodes.truncate(24);
        let mut family = vec![
            BvFunction::one(),
            BvFunction::identity(),
            BvFunction::polyline(&[(0.0, 1.0), (1.0, 0.0)]).expect("valid polyline"),
        ];
        for (i, &p) in nodes.iter().enumerate() {
            for &q in &nodes[i + 1..] {
                for (lo, hi) in [(0.0, 1.0), (1.0, 0.0)] {
                    let mut pts = vec![(0.0, lo)];
                    if p > 0.0 {
                        pts.push((p, lo));
                    }
                    pts.push((q, hi));
                    if q < 1.0 {
                        pts.push((1.0, hi));
                    }
                    family.push(BvFunction::polyline(&pts).expect("nodes are increasing"));
                }
            }
        }
        family
    }

    /// Certified lower bound `max |F[x]| / ‖x‖BV` over a family of test
    /// functions.
    pub fn norm_witness(&self, family: &[BvFunction]) -> Result<f64> {
        if family.is_empty() {
            return Err(Error::InvalidParameter("witness family is empty".into()));
        }
        let mut best = 0.0_f64;
        for x in family {
            let norm = x.bv_norm();
            if norm == 0.0 {
                return Err(Error::InvalidParameter("witness with zero BV norm".into()));
            }
            best = best.max(self.apply(x)?.abs() / norm);
        }
        Ok(best)
    }
}
