//! The Hammerstein operator `F₂(x)(t) = ∫ k(t,s) f(s, x(s)) ds`, the
//! rank-two perturbation `F₁(x) = α[x]v + β[x]w`, and the constants of the
//! existence theorems for `x = F₁(x) + λF₂(x)`.

use crate::bvfun::{interp_window, BvFunction, GridFunction};
use crate::error::{Error, Result};
use crate::kernels::{Kernel, KernelKind};
use crate::quadrature::{self, DEFAULT_INTERVALS};
use crate::stieltjes::Functional;
use crate::verdict::{Status, Verdict};

/// Tolerance for treating `α[e]`, `β[e]` and `v + w − 1` as zero.
pub const FUNCTIONAL_ZERO_TOL: f64 = 1e-12;

const PSI_NODES: usize = 4096;
const MAX_NEUMANN_TERMS: usize = 100_000;

/// Nondecreasing piecewise-linear majorant `ψ` on `[0, r_max]`.
#[derive(Debug, Clone, PartialEq)]
pub struct PsiTable {
    r_max: f64,
    values: Vec<f64>,
}

impl PsiTable {
    pub fn new(r_max: f64, values: Vec<f64>) -> Result<Self> {
        if !(r_max > 0.0) || values.len() < 2 {
            return Err(Error::InvalidParameter("ψ table needs r_max > 0 and two nodes".into()));
        }
        if values.iter().any(|v| !(*v >= 0.0) || !v.is_finite()) {
            return Err(Error::InvalidParameter("ψ values must be finite and nonnegative".into()));
        }
        if values.windows(2).any(|w| w[1] < w[0]) {
            return Err(Error::InvalidParameter("ψ must be nondecreasing".into()));
        }
        Ok(Self { r_max, values })
    }

    pub fn r_max(&self) -> f64 {
        self.r_max
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    fn step(&self) -> f64 {
        self.r_max / (self.values.len() - 1) as f64
    }

    pub fn node(&self, k: usize) -> f64 {
        k as f64 * self.step()
    }

    pub fn eval(&self, r: f64) -> Result<f64> {
        if !(r >= 0.0) || r > self.r_max {
            return Err(Error::InvalidParameter(format!(
                "r = {r} outside the ψ table range [0, {}]",
                self.r_max
            )));
        }
        let last = self.values.len() - 1;
        let pos = r / self.step();
        let k = (pos.floor() as usize).min(last - 1);
        let frac = pos - k as f64;
        Ok(self.values[k] + frac * (self.values[k + 1] - self.values[k]))
    }

    /// Smallest `r > 0` in the table with `ψ(r) ≤ slope·r`.
    ///
    /// On every segment `ψ(r) − slope·r` is affine, so the first crossing is
    /// found exactly. When the inequality holds immediately to the right of
    /// zero the first positive node is returned.
    pub fn first_below_line(&self, slope: f64) -> Option<f64> {
        let h = self.step();
        let g = |k: usize| self.values[k] - slope * self.node(k);
        if self.values[0] == 0.0 && g(1) <= 0.0 {
            return Some(h);
        }
        for k in 1..self.values.len() {
            let (g0, g1) = (g(k - 1), g(k));
            if g1 > 0.0 {
                continue;
            }
            if g0 <= 0.0 {
                return Some(self.node(k - 1).max(h));
            }
            let r = self.node(k - 1) + h * g0 / (g0 - g1);
            let holds = |r: f64| self.eval(r).is_ok_and(|v| v <= slope * r);
            let nudged = r * (1.0 + 4.0 * f64::EPSILON);
            return Some(if holds(r) {
                r
            } else if holds(nudged) {
                nudged
            } else {
                self.node(k)
            });
        }
        None
    }
}

/// Closed-form families of nonlinearities `f(t, u)`.
#[derive(Debug, Clone, PartialEq)]
pub enum NonlinearityKind {
    /// `Σ c·tⁱ·uʲ` over rows `(c, i, j)` with `i, j ≤ 4`.
    Polynomial(Vec<(f64, u32, u32)>),
    /// `√|u|`.
    SqrtAbs,
}

/// How `ψ(r)/r` behaves as `r → ∞` for the canonical majorant.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Growth {
    Sublinear,
    AtLeastLinear,
}

/// A nonlinearity with the canonical majorants `φ ≡ 1` and
/// `ψ(r) = Σⱼ (Σᵢ |cᵢⱼ|) rʲ` (or `√r`), valid since `t ∈ [0, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Nonlinearity {
    kind: NonlinearityKind,
    name: String,
}

/// Names accepted by [`Nonlinearity::catalog`].
pub const CATALOG: &[&str] = &[
    "zero",
    "one",
    "two",
    "u",
    "u2",
    "one_plus_u2",
    "one_plus_t_u2",
    "sqrt_abs",
];

impl Nonlinearity {
    pub fn polynomial(terms: Vec<(f64, u32, u32)>) -> Result<Self> {
        if terms.iter().any(|&(c, i, j)| i > 4 || j > 4 || !c.is_finite()) {
            return Err(Error::InvalidParameter(
                "polynomial terms need finite coefficients and degrees ≤ 4".into(),
            ));
        }
        let name = if terms.is_empty() {
            "0".to_string()
        } else {
            terms
                .iter()
                .map(|(c, i, j)| format!("{c}·t^{i}·u^{j}"))
                .collect::<Vec<_>>()
                .join(" + ")
        };
        Ok(Self {
            kind: NonlinearityKind::Polynomial(terms),
            name,
        })
    }

    pub fn constant(c: f64) -> Self {
        let mut f = Self::polynomial(vec![(c, 0, 0)]).expect("degree zero");
        f.name = format!("{c}");
        f
    }

    pub fn catalog(name: &str) -> Result<Self> {
        let terms = match name {
            "zero" => vec![],
            "one" => vec![(1.0, 0, 0)],
            "two" => vec![(2.0, 0, 0)],
            "u" => vec![(1.0, 0, 1)],
            "u2" => vec![(1.0, 0, 2)],
            "one_plus_u2" => vec![(1.0, 0, 0), (1.0, 0, 2)],
            "one_plus_t_u2" => vec![(1.0, 0, 0), (1.0, 1, 2)],
            "sqrt_abs" => {
                return Ok(Self {
                    kind: NonlinearityKind::SqrtAbs,
                    name: name.into(),
                })
            }
            _ => {
                return Err(Error::InvalidParameter(format!(
                    "unknown nonlinearity {name:?}; known: {}",
                    CATALOG.join(", ")
                )))
            }
        };
        let mut f = Self::polynomial(terms)?;
        f.name = name.into();
        Ok(f)
    }

    pub fn kind(&self) -> &NonlinearityKind {
        &self.kind
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn eval(&self, t: f64, u: f64) -> f64 {
        match &self.kind {
            NonlinearityKind::Polynomial(terms) => terms
                .iter()
                .map(|&(c, i, j)| c * t.powi(i as i32) * u.powi(j as i32))
                .sum(),
            NonlinearityKind::SqrtAbs => u.abs().sqrt(),
        }
    }

    /// `true` when `f` does not depend on `u`.
    pub fn is_u_independent(&self) -> bool {
        match &self.kind {
            NonlinearityKind::Polynomial(terms) => terms.iter().all(|t| t.2 == 0 || t.0 == 0.0),
            NonlinearityKind::SqrtAbs => false,
        }
    }

    pub fn phi(&self, _t: f64) -> f64 {
        1.0
    }

    /// The canonical `ψ(r)`, evaluated exactly.
    pub fn psi(&self, r: f64) -> f64 {
        match &self.kind {
            NonlinearityKind::Polynomial(terms) => {
                terms.iter().map(|&(c, _, j)| c.abs() * r.powi(j as i32)).sum()
            }
            NonlinearityKind::SqrtAbs => r.sqrt(),
        }
    }

    pub fn growth(&self) -> Growth {
        match &self.kind {
            NonlinearityKind::SqrtAbs => Growth::Sublinear,
            NonlinearityKind::Polynomial(_) if self.is_u_independent() => Growth::Sublinear,
            NonlinearityKind::Polynomial(_) => Growth::AtLeastLinear,
        }
    }

    /// Default table range: wide for `u`-independent `f`, where (B₅) may
    /// need large radii, moderate otherwise.
    pub fn default_r_max(&self) -> f64 {
        if self.is_u_independent() {
            1e6
        } else {
            1e3
        }
    }

    /// Piecewise-linear majorant of `ψ` on `[0, r_max]`.
    ///
    /// Polynomial `ψ` has nonnegative coefficients and is convex, so chords
    /// through exact node values lie above it. Concave `√r` is majorized by
    /// shifting node values one step to the right.
    pub fn psi_table(&self, r_max: f64) -> Result<PsiTable> {
        let h = r_max / PSI_NODES as f64;
        let values = (0..=PSI_NODES)
            .map(|k| match self.kind {
                NonlinearityKind::Polynomial(_) => self.psi(k as f64 * h),
                NonlinearityKind::SqrtAbs => self.psi((k + 1) as f64 * h),
            })
            .collect();
        PsiTable::new(r_max, values)
    }

    /// Largest `|f(t,u)| − φ(t)ψ(|u|)` over a `(t, u)` sample grid with
    /// `|u| ≤ u_max`; nonpositive means the growth bound held everywhere.
    pub fn growth_excess(&self, psi: &PsiTable, u_max: f64) -> Result<f64> {
        let mut worst = f64::NEG_INFINITY;
        for i in 0..=32 {
            let t = i as f64 / 32.0;
            for j in 0..=400 {
                let u = u_max * (j as f64 / 200.0 - 1.0);
                worst = worst.max(self.eval(t, u).abs() - self.phi(t) * psi.eval(u.abs())?);
            }
        }
        Ok(worst)
    }

    /// Sampled infimum of `f(t, u)` over `t` in the grid nodes of `domain`
    /// and `lo ≤ |u| ≤ hi`.
    pub fn sampled_inf(&self, domain: &crate::bvfun::Domain, lo: f64, hi: f64) -> f64 {
        let mut best = f64::INFINITY;
        for &(a, b) in domain.intervals() {
            for i in 0..=64 {
                let t = a + (b - a) * i as f64 / 64.0;
                for j in 0..=200 {
                    let mag = lo + (hi - lo) * j as f64 / 200.0;
                    best = best.min(self.eval(t, mag)).min(self.eval(t, -mag));
                }
            }
        }
        best
    }
}

/// Nyström discretization of `x ↦ ∫ k(·, s) g(s) ds` on the grid `i/n`.
///
/// Nodal values `gⱼ` are interpolated by the same piecewise cubic as
/// [`GridFunction::interpolant`], and each row integrates `k(tᵢ, s)` against
/// that interpolant with 5-point Gauss-Legendre on every grid cell. The
/// diagonal `s = tᵢ` is a cell boundary, so the kernel's kink never falls
/// inside a cell.
#[derive(Debug, Clone)]
pub struct NystromMatrix {
    n: usize,
    weights: Vec<f64>,
}

const GL5: [(f64, f64); 5] = [
    (-0.906_179_845_938_664, 0.236_926_885_056_189_1),
    (-0.538_469_310_105_683, 0.478_628_670_499_366_5),
    (0.0, 0.568_888_888_888_888_9),
    (0.538_469_310_105_683, 0.478_628_670_499_366_5),
    (0.906_179_845_938_664, 0.236_926_885_056_189_1),
];

impl NystromMatrix {
    pub fn new(kernel: &Kernel, n: usize) -> Result<Self> {
        if n < 2 {
            return Err(Error::InvalidParameter(format!("grid of {n} intervals")));
        }
        let h = 1.0 / n as f64;
        // Per cell: quadrature points and the interpolation weights they give
        // to the nodes of the cell's window.
        let cells: Vec<(std::ops::Range<usize>, Vec<(f64, Vec<f64>)>)> = (0..n)
            .map(|c| {
                let window = interp_window(n, c);
                let nodes: Vec<f64> = window.clone().map(|i| i as f64 * h).collect();
                let mid = (c as f64 + 0.5) * h;
                let pts = GL5
                    .iter()
                    .map(|&(x, w)| {
                        let s = mid + 0.5 * h * x;
                        let basis = (0..nodes.len())
                            .map(|k| {
                                let prod: f64 = (0..nodes.len())
                                    .filter(|&m| m != k)
                                    .map(|m| (s - nodes[m]) / (nodes[k] - nodes[m]))
                                    .product();
                                0.5 * h * w * prod
                            })
                            .collect();
                        (s, basis)
                    })
                    .collect();
                (window, pts)
            })
            .collect();
        let mut weights = vec![0.0; (n + 1) * (n + 1)];
        for i in 0..=n {
            let t = i as f64 * h;
            let row = &mut weights[i * (n + 1)..(i + 1) * (n + 1)];
            for (window, pts) in &cells {
                for (s, basis) in pts {
                    let k = kernel.value(t, *s);
                    for (j, b) in window.clone().zip(basis) {
                        row[j] += k * b;
                    }
                }
            }
        }
        Ok(Self { n, weights })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.weights[i * (self.n + 1)..(i + 1) * (self.n + 1)]
    }

    /// Applies the matrix to nodal values `g`.
    pub fn apply_values(&self, g: &[f64]) -> Result<GridFunction> {
        if g.len() != self.n + 1 {
            return Err(Error::GridMismatch {
                expected: self.n,
                got: g.len().saturating_sub(1),
            });
        }
        let values = (0..=self.n)
            .map(|i| self.row(i).iter().zip(g).map(|(w, v)| w * v).sum())
            .collect();
        GridFunction::new(values)
    }

    /// `F₂(x)` at the grid nodes.
    pub fn apply(&self, f: &Nonlinearity, x: &GridFunction) -> Result<GridFunction> {
        let g: Vec<f64> = x.nodes().zip(x.values()).map(|(s, &u)| f.eval(s, u)).collect();
        self.apply_values(&g)
    }
}

/// `F₂(x)` on the grid of `x`; assembles a fresh [`NystromMatrix`].
pub fn apply_f2(kernel: &Kernel, f: &Nonlinearity, x: &GridFunction) -> Result<GridFunction> {
    NystromMatrix::new(kernel, x.n())?.apply(f, x)
}

/// `F₂(x)` computed row by row without a matrix: the nodal values of
/// `f(s, x(s))` are interpolated as a [`BvFunction`] and each row integrated
/// cell by cell. Used to cross-check [`NystromMatrix`].
pub fn apply_f2_direct(kernel: &Kernel, f: &Nonlinearity, x: &GridFunction) -> GridFunction {
    let g = x.map(|s, u| f.eval(s, u)).interpolant();
    let n = x.n();
    let values = (0..=n)
        .map(|i| {
            let t = x.node(i);
            (0..n)
                .map(|c| {
                    quadrature::gauss_legendre(
                        |s| kernel.value(t, s) * g.eval(s),
                        c as f64 / n as f64,
                        (c + 1) as f64 / n as f64,
                    )
                })
                .sum()
        })
        .collect();
    GridFunction::new(values).expect("grid from a valid grid")
}

/// `∫₀¹ (m(s) + |k(0, s)|) φ(s) ds`, the factor bounding `‖F₂x‖BV` by `ψ`.
pub fn majorant_integral(kernel: &Kernel, f: &Nonlinearity) -> f64 {
    let splits: Vec<f64> = match kernel.kind() {
        KernelKind::Tabulated(table) => {
            let cols = table.values()[0].len() - 1;
            (1..cols).map(|j| j as f64 / cols as f64).collect()
        }
        _ => Vec::new(),
    };
    let mut splits = splits;
    if let crate::kernels::Majorant::Function(m) = kernel.majorant() {
        splits.extend(m.breakpoints().iter().copied());
        splits.extend(m.jumps().iter().map(|j| j.0));
    }
    quadrature::simpson_split(
        |s| (kernel.majorant().eval(s) + kernel.value(0.0, s).abs()) * f.phi(s),
        0.0,
        1.0,
        &splits,
        DEFAULT_INTERVALS,
    )
}

/// `ψ(R)·∫(m + |k(0,·)|)φ`, bounding `‖F₂x‖BV` for `‖x‖BV ≤ R`.
pub fn f2_bv_bound(kernel: &Kernel, f: &Nonlinearity, psi: &PsiTable, r: f64) -> Result<f64> {
    if !(r > 0.0) {
        return Err(Error::InvalidParameter(format!("R = {r} must be positive")));
    }
    Ok(psi.eval(r)? * majorant_integral(kernel, f))
}

/// Result of [`LinearPerturbation::neumann_apply`].
#[derive(Debug, Clone)]
pub struct NeumannResult {
    pub x: GridFunction,
    /// Number of powers `F₁ⁿ`, `1 ≤ n ≤ terms`, added to `y`.
    pub terms: usize,
    /// Certified bound on the truncated tail in the BV norm.
    pub tail_bound: f64,
    /// Measured `‖x − F₁x − y‖∞`.
    pub defect: f64,
}

/// `F₁(x) = α[x]v + β[x]w` with `v + w ≡ 1`.
#[derive(Debug, Clone)]
pub struct LinearPerturbation {
    alpha: Functional,
    beta: Functional,
    diff: Functional,
    v: BvFunction,
    w: BvFunction,
    av: f64,
    aw: f64,
    bv: f64,
    bw: f64,
    ae: f64,
    be: f64,
    partition_defect: f64,
}

impl LinearPerturbation {
    /// Fails with label `A9` unless `v + w = 1` at 1025 uniform nodes and
    /// every breakpoint of `v` and `w`.
    pub fn new(alpha: Functional, beta: Functional, v: BvFunction, w: BvFunction) -> Result<Self> {
        if !v.is_continuous() || !w.is_continuous() {
            return Err(Error::Discontinuous("v and w must be continuous".into()));
        }
        let mut probes: Vec<f64> = (0..=1024).map(|i| i as f64 / 1024.0).collect();
        probes.extend(v.breakpoints());
        probes.extend(w.breakpoints());
        let partition_defect = probes
            .iter()
            .map(|&t| (v.eval(t) + w.eval(t) - 1.0).abs())
            .fold(0.0, f64::max);
        if partition_defect > FUNCTIONAL_ZERO_TOL {
            return Err(Error::assumption(
                "A9",
                format!("max |v + w − 1| = {partition_defect:.3e}"),
            ));
        }
        let e = BvFunction::one();
        let diff = alpha.minus(&beta);
        Ok(Self {
            av: alpha.apply(&v)?,
            aw: alpha.apply(&w)?,
            bv: beta.apply(&v)?,
            bw: beta.apply(&w)?,
            ae: alpha.apply(&e)?,
            be: beta.apply(&e)?,
            alpha,
            beta,
            diff,
            v,
            w,
            partition_defect,
        })
    }

    /// The standard pair `v = 1 − t`, `w = t`.
    pub fn linear(alpha: Functional, beta: Functional) -> Result<Self> {
        let v = BvFunction::polyline(&[(0.0, 1.0), (1.0, 0.0)])?;
        Self::new(alpha, beta, v, BvFunction::identity())
    }

    pub fn zero() -> Self {
        Self::linear(Functional::zero(), Functional::zero()).expect("zero perturbation is valid")
    }

    pub fn alpha(&self) -> &Functional {
        &self.alpha
    }

    pub fn beta(&self) -> &Functional {
        &self.beta
    }

    /// `α − β`.
    pub fn difference(&self) -> &Functional {
        &self.diff
    }

    pub fn v(&self) -> &BvFunction {
        &self.v
    }

    pub fn w(&self) -> &BvFunction {
        &self.w
    }

    /// `max |v + w − 1|` over the probe nodes.
    pub fn partition_defect(&self) -> f64 {
        self.partition_defect
    }

    /// `(α[e], β[e])` for `e ≡ 1`.
    pub fn on_constant(&self) -> (f64, f64) {
        (self.ae, self.be)
    }

    /// `[[α[v], α[w]], [β[v], β[w]]]`, the action of `F₁` on the coefficients
    /// of `span{v, w}`.
    pub fn coefficient_matrix(&self) -> [[f64; 2]; 2] {
        [[self.av, self.aw], [self.bv, self.bw]]
    }

    /// `α[e] = β[e] = 0`.
    pub fn a7_holds(&self) -> bool {
        self.ae.abs() <= FUNCTIONAL_ZERO_TOL && self.be.abs() <= FUNCTIONAL_ZERO_TOL
    }

    /// `|α[v] − β[v]| < 1`.
    pub fn a8_holds(&self) -> bool {
        self.spectral_radius_bound() < 1.0
    }

    pub fn apply(&self, x: &BvFunction) -> Result<BvFunction> {
        let a = self.alpha.apply(x)?;
        let b = self.beta.apply(x)?;
        Ok(BvFunction::linear_combination(&[(a, &self.v), (b, &self.w)]))
    }

    pub fn apply_grid(&self, x: &GridFunction) -> Result<GridFunction> {
        let (a, b) = self.grid_coefficients(x)?;
        Ok(self.combine(x.n(), a, b))
    }

    fn grid_coefficients(&self, x: &GridFunction) -> Result<(f64, f64)> {
        let interp = if self.needs_interpolant() { Some(x.interpolant()) } else { None };
        let eval = |f: &Functional| match &interp {
            Some(i) => f.apply(i),
            None => f.apply_grid(x),
        };
        Ok((eval(&self.alpha)?, eval(&self.beta)?))
    }

    fn needs_interpolant(&self) -> bool {
        use crate::stieltjes::FunctionalKind::Points;
        !(matches!(self.alpha.kind(), Points(_)) && matches!(self.beta.kind(), Points(_)))
    }

    fn combine(&self, n: usize, a: f64, b: f64) -> GridFunction {
        GridFunction::from_fn(n, |t| a * self.v.eval(t) + b * self.w.eval(t))
            .expect("grid size already validated")
    }

    /// `‖α‖ + ‖α − β‖·‖w‖BV` from the functional norm upper bounds.
    pub fn norm_bound(&self) -> f64 {
        self.alpha.norm_upper() + self.diff.norm_upper() * self.w.bv_norm()
    }

    /// Lower bound for the same expression from witness families.
    pub fn norm_bound_witness(&self) -> Result<f64> {
        let a = self.alpha.norm_witness(&self.alpha.witness_family())?;
        let d = if self.diff.is_zero() {
            0.0
        } else {
            self.diff.norm_witness(&self.diff.witness_family())?
        };
        Ok(a + d * self.w.bv_norm())
    }

    /// `|α[v] − β[v]|`.
    pub fn spectral_radius_bound(&self) -> f64 {
        (self.av - self.bv).abs()
    }

    /// Spectral radius of the coefficient matrix, which carries every
    /// nonzero eigenvalue of `F₁`. Diagnostic only.
    pub fn spectral_radius_exact(&self) -> f64 {
        let tr = self.av + self.bw;
        let det = self.av * self.bw - self.aw * self.bv;
        let disc = tr * tr - 4.0 * det;
        if disc >= 0.0 {
            let root = disc.sqrt();
            ((tr + root) / 2.0).abs().max(((tr - root) / 2.0).abs())
        } else {
            det.abs().sqrt()
        }
    }

    /// `‖α[v]v + β[v]w‖BV`.
    pub fn u_norm(&self) -> f64 {
        BvFunction::linear_combination(&[(self.av, &self.v), (self.bv, &self.w)]).bv_norm()
    }

    /// The displayed estimate `‖α−β‖·|α[v]−β[v]|ⁿ·‖α[v]v+β[v]w‖BV` for
    /// `‖F₁ⁿ⁺²‖`, which relies on `α[e] = β[e] = 0`.
    pub fn lemma_power_bound(&self, n: u32) -> f64 {
        self.diff.norm_upper() * self.spectral_radius_bound().powi(n as i32) * self.u_norm()
    }

    /// Bound on `‖F₁ⁿ⁺²‖`: the smaller of the lemma estimate and
    /// `‖F₁‖ⁿ⁺²` when `α[e] = β[e] = 0`, otherwise `‖F₁‖ⁿ⁺²` alone.
    pub fn power_bound(&self, n: u32) -> f64 {
        let submult = self.norm_bound().powi(n as i32 + 2);
        if self.a7_holds() {
            self.lemma_power_bound(n).min(submult)
        } else {
            submult
        }
    }

    /// Bound on `‖F₁ᵏ‖` for every `k ≥ 0`.
    pub fn iterate_bound(&self, k: u32) -> f64 {
        match k {
            0 => 1.0,
            1 => self.norm_bound(),
            _ => self.power_bound(k - 2),
        }
    }

    /// Bound on `Σ_{n > terms} ‖F₁ⁿ‖`, or `None` when no geometric tail is
    /// available.
    fn tail_bound(&self, terms: usize) -> Option<f64> {
        let q = self.norm_bound();
        let rho = self.spectral_radius_bound();
        let mut best: Option<f64> = None;
        if self.a7_holds() && rho < 1.0 {
            let lemma = self.diff.norm_upper() * self.u_norm();
            let tail = if terms == 0 {
                q + lemma / (1.0 - rho)
            } else {
                lemma * rho.powi(terms as i32 - 1) / (1.0 - rho)
            };
            best = Some(tail);
        }
        if q < 1.0 {
            let tail = q.powi(terms as i32 + 1) / (1.0 - q);
            best = Some(best.map_or(tail, |b| b.min(tail)));
        }
        best
    }

    /// Whether the Neumann series for `(I − F₁)⁻¹` has a certified tail.
    pub fn neumann_certified(&self) -> bool {
        self.tail_bound(0).is_some()
    }

    /// `Σ_{n ≤ N} F₁ⁿ y` with `N` chosen so the certified tail is below `tol`,
    /// followed by an a-posteriori check of `‖x − F₁x − y‖∞ ≤ tol`.
    pub fn neumann_apply(&self, y: &GridFunction, tol: f64) -> Result<NeumannResult> {
        if !(tol > 0.0) {
            return Err(Error::InvalidParameter(format!("tol = {tol} must be positive")));
        }
        if self.tail_bound(0).is_none() {
            return Err(Error::NotCertified(format!(
                "|α[v] − β[v]| = {:.6} with α[e] = β[e] = 0 {}; ‖α‖ + ‖α−β‖‖w‖ ≤ {:.6}",
                self.spectral_radius_bound(),
                if self.a7_holds() { "holding" } else { "failing" },
                self.norm_bound()
            )));
        }
        let y_norm = y.interpolant().bv_norm();
        let mut terms = 0;
        let mut tail = self.tail_bound(0).unwrap_or(f64::INFINITY) * y_norm;
        while tail > tol {
            terms += 1;
            if terms > MAX_NEUMANN_TERMS {
                return Err(Error::NotCertified(format!(
                    "tail above {tol:e} after {MAX_NEUMANN_TERMS} terms"
                )));
            }
            tail = self.tail_bound(terms).unwrap_or(f64::INFINITY) * y_norm;
        }
        let (mut a, mut b) = if terms > 0 { self.grid_coefficients(y)? } else { (0.0, 0.0) };
        let (mut sum_a, mut sum_b) = (0.0, 0.0);
        for _ in 0..terms {
            sum_a += a;
            sum_b += b;
            (a, b) = (self.av * a + self.aw * b, self.bv * a + self.bw * b);
        }
        let x = y.axpy(1.0, &self.combine(y.n(), sum_a, sum_b))?;
        let fx = self.apply_grid(&x)?;
        let defect = x
            .values()
            .iter()
            .zip(fx.values())
            .zip(y.values())
            .map(|((xi, fi), yi)| (xi - fi - yi).abs())
            .fold(0.0, f64::max);
        if defect > tol {
            return Err(Error::NotCertified(format!(
                "a-posteriori defect {defect:.3e} exceeds {tol:.3e}"
            )));
        }
        Ok(NeumannResult {
            x,
            terms,
            tail_bound: tail,
            defect,
        })
    }
}

/// `x = F₁(x) + λ∫k(·,s)f(s,x(s))ds`.
#[derive(Debug, Clone)]
pub struct PerturbedProblem {
    pub kernel: Kernel,
    pub f: Nonlinearity,
    pub perturbation: LinearPerturbation,
    pub lambda: f64,
}

/// Which theorem supplies the constant `c ≥ ‖(I − F₁)⁻¹‖`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize)]
#[serde(rename_all = "snake_case")]
pub enum KrasRoute {
    /// `α[e] = β[e] = 0` and `|α[v] − β[v]| < 1`: the lemma's series bound.
    SpectralLemma,
    /// `‖α‖ + ‖α − β‖·‖w‖BV < 1`: geometric series in `‖F₁‖`.
    SmallNorm,
    Infeasible,
}

/// Constants and hypothesis verdicts for `x = F₁(x) + λF₂(x)`.
#[derive(Debug, Clone, serde::Serialize)]
pub struct KrasReport {
    pub norm_f1_bound: f64,
    pub spectral_radius_bound: f64,
    pub spectral_radius_exact: f64,
    pub route: KrasRoute,
    pub c: f64,
    pub majorant_integral: f64,
    pub psi_at_one: f64,
    pub lambda0: f64,
    /// Smallest `r` satisfying (B₅) at `λ = 1`, if any within the ψ table.
    pub psi_r_feasible_r: Option<f64>,
    pub verdicts: Vec<Verdict>,
}

impl KrasReport {
    pub fn verdict(&self, label: &str) -> Option<&Verdict> {
        self.verdicts.iter().find(|v| v.label == label)
    }

    /// Smallest `r` with `|λ|ψ(r) ≤ r c⁻¹ (1 + I)⁻¹`.
    pub fn b5_radius(&self, psi: &PsiTable, lambda: f64) -> Option<f64> {
        if self.route == KrasRoute::Infeasible {
            return None;
        }
        let slope = 1.0 / (self.c * (1.0 + self.majorant_integral));
        if lambda == 0.0 {
            return Some(psi.node(1));
        }
        psi.first_below_line(slope / lambda.abs())
    }
}

/// Computes `c`, `λ₀` and the (B₅) radius, and records verdicts for
/// (A₇)–(A₁₃), (B₅) and (B₆).
pub fn kras_constants(
    lin: &LinearPerturbation,
    kernel: &Kernel,
    f: &Nonlinearity,
    psi: &PsiTable,
) -> Result<KrasReport> {
    let q = lin.norm_bound();
    let rho = lin.spectral_radius_bound();
    let a7 = lin.a7_holds();
    let a8 = rho < 1.0;
    let (route, c) = if a7 && a8 {
        let c = 1.0 + q + lin.difference().norm_upper() * lin.u_norm() / (1.0 - rho);
        (KrasRoute::SpectralLemma, c)
    } else if q < 1.0 {
        (KrasRoute::SmallNorm, 1.0 / (1.0 - q))
    } else {
        (KrasRoute::Infeasible, f64::INFINITY)
    };
    let integral = majorant_integral(kernel, f);
    let psi_at_one = psi.eval(1.0)?;
    let lambda0 = if route == KrasRoute::Infeasible {
        0.0
    } else {
        1.0 / (c * (psi_at_one + 1.0) * (1.0 + integral))
    };

    let mut verdicts = Vec::new();
    let (ae, be) = lin.on_constant();
    verdicts.push(Verdict::pass_if(
        "A7",
        a7,
        format!("α[e] = {:.6e}, β[e] = {:.6e}", ae + 0.0, be + 0.0),
    ));
    verdicts.push(Verdict::pass_if("A8", a8, format!("|α[v] − β[v]| = {rho:.12}")));
    verdicts.push(Verdict::pass_if(
        "A9",
        true,
        format!("max |v + w − 1| = {:.3e}", lin.partition_defect()),
    ));
    let u_max = psi.r_max().min(100.0);
    let excess = f.growth_excess(psi, u_max)?;
    verdicts.push(Verdict::pass_if(
        "A10",
        excess <= 1e-12,
        format!("max |f| − φψ = {excess:.3e} on a grid with |u| ≤ {u_max}"),
    ));
    verdicts.push(match f.growth() {
        Growth::Sublinear => Verdict::new("A11", Status::Pass, "ψ(r)/r → 0"),
        Growth::AtLeastLinear => Verdict::new("A11", Status::Fail, "ψ grows at least linearly"),
    });
    let mut worst_var = f64::NEG_INFINITY;
    for i in 0..=256 {
        let s = i as f64 / 256.0;
        worst_var = worst_var.max(kernel.t_variation(s)? - kernel.majorant().eval(s));
    }
    verdicts.push(Verdict::pass_if(
        "A12",
        worst_var <= 1e-12,
        format!("max var k(·,s) − m(s) = {worst_var:.3e} at 257 nodes"),
    ));
    let phi = GridFunction::from_fn(256, |s| f.phi(s))?;
    let phi_integral = quadrature::simpson(|s| f.phi(s), 0.0, 1.0, DEFAULT_INTERVALS);
    let delta = 1e-3;
    let mut worst_mod = 0.0_f64;
    for tau in [0.0, 0.25, 0.5, 0.75, 1.0] {
        worst_mod = worst_mod.max(kernel.continuity_modulus(&phi, tau, delta)?);
    }
    let lip = kernel.lipschitz_t() * delta * phi_integral;
    verdicts.push(Verdict::pass_if(
        "A13",
        worst_mod <= lip + 1e-10,
        format!("modulus at δ = {delta}: {worst_mod:.3e} ≤ Lδ∫φ = {lip:.3e}"),
    ));

    let partial = KrasReport {
        norm_f1_bound: q,
        spectral_radius_bound: rho,
        spectral_radius_exact: lin.spectral_radius_exact(),
        route,
        c,
        majorant_integral: integral,
        psi_at_one,
        lambda0,
        psi_r_feasible_r: None,
        verdicts: Vec::new(),
    };
    let r = partial.b5_radius(psi, 1.0);
    verdicts.push(match (route, r) {
        (KrasRoute::Infeasible, _) => Verdict::new("B5", Status::Fail, "no bound on ‖(I − F₁)⁻¹‖"),
        (_, Some(r)) => Verdict::new("B5", Status::Pass, format!("ψ(r) ≤ r/(c(1 + I)) at r = {r:.6}")),
        (_, None) => Verdict::new(
            "B5",
            Status::Fail,
            format!("no r ≤ {} satisfies ψ(r) ≤ r/(c(1 + I))", psi.r_max()),
        ),
    });
    let witness = lin.norm_bound_witness().ok();
    verdicts.push(Verdict::below_one("B6", q, witness));
    Ok(KrasReport {
        psi_r_feasible_r: r,
        verdicts,
        ..partial
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    const A: f64 = 0.2;
    const B: f64 = 0.6;
    const C: f64 = 0.8;

    fn example1() -> LinearPerturbation {
        let a = BvFunction::steps(&[(A, 0.2), (C, 0.2)]).unwrap();
        let b = BvFunction::steps(&[(B, 0.2), (C, 0.2)]).unwrap();
        LinearPerturbation::linear(Functional::da(a), Functional::da(b)).unwrap()
    }

    fn example3() -> LinearPerturbation {
        let alpha = Functional::points(&[(2.0, A), (-2.0, C)]).unwrap();
        let beta = Functional::points(&[(2.0, B), (-2.0, C)]).unwrap();
        LinearPerturbation::linear(alpha, beta).unwrap()
    }

    fn example3_solution(lambda: f64) -> impl Fn(f64) -> f64 {
        move |t| -lambda * t * t + 1.8 * lambda * t - 0.96 * lambda
    }

    #[test]
    fn psi_table_majorizes() {
        for f in [Nonlinearity::catalog("u2").unwrap(), Nonlinearity::catalog("sqrt_abs").unwrap()] {
            let table = f.psi_table(10.0).unwrap();
            for i in 0..=997 {
                let r = 10.0 * i as f64 / 997.0;
                assert!(table.eval(r).unwrap() >= f.psi(r) - 1e-12, "{} at {r}", f.name());
            }
            assert!(table.eval(10.5).is_err());
            assert!(f.growth_excess(&table, 5.0).unwrap() <= 0.0);
        }
        assert!(PsiTable::new(1.0, vec![1.0, 0.5]).is_err());
    }

    #[test]
    fn first_below_line_is_exact_on_segments() {
        let table = PsiTable::new(4.0, vec![2.0, 2.0, 2.0, 2.0, 2.0]).unwrap();
        assert!((table.first_below_line(1.0).unwrap() - 2.0).abs() < 1e-15);
        assert!((table.first_below_line(0.8).unwrap() - 2.5).abs() < 1e-14);
        assert_eq!(table.first_below_line(0.1), None);
        let zero = PsiTable::new(4.0, vec![0.0; 5]).unwrap();
        assert_eq!(zero.first_below_line(1e-3), Some(1.0));
        let sqrt = Nonlinearity::catalog("sqrt_abs").unwrap().psi_table(1e4).unwrap();
        let r = sqrt.first_below_line(0.1).unwrap();
        assert!(sqrt.eval(r).unwrap() <= 0.1 * r + 1e-12);
        // exact crossing of √r is 100; the shifted table moves it by about one step
        assert!((100.0..100.0 + 2.0 * 1e4 / 4096.0).contains(&r));
    }

    #[test]
    fn f2_closed_forms() {
        let x = GridFunction::from_fn(64, |t| (5.0 * t).sin()).unwrap();
        let zero = apply_f2(&Kernel::dirichlet(), &Nonlinearity::catalog("zero").unwrap(), &x).unwrap();
        assert_eq!(zero.sup_norm(), 0.0);

        let two = Nonlinearity::constant(2.0);
        let y = apply_f2(&Kernel::dirichlet(), &two, &x).unwrap();
        for (t, v) in y.nodes().zip(y.values()) {
            assert!((v - t * (1.0 - t)).abs() < 1e-8);
        }
        for omega in [PI / 2.0, PI, 1.5 * PI] {
            let y = apply_f2(&Kernel::periodic(omega).unwrap(), &Nonlinearity::constant(1.0), &x).unwrap();
            for v in y.values() {
                assert!((v - omega.powi(-2)).abs() < 1e-13);
            }
        }
    }

    #[test]
    fn f2_matrix_matches_direct_quadrature() {
        let x = GridFunction::from_fn(32, |t| 0.3 + t * (1.0 - t)).unwrap();
        let f = Nonlinearity::catalog("one_plus_t_u2").unwrap();
        for kernel in [Kernel::dirichlet(), Kernel::periodic(1.5 * PI).unwrap()] {
            let a = apply_f2(&kernel, &f, &x).unwrap();
            let b = apply_f2_direct(&kernel, &f, &x);
            assert!(a.sup_distance(&b).unwrap() < 1e-14);
        }
    }

    #[test]
    fn f2_converges_under_refinement() {
        let f = Nonlinearity::catalog("one_plus_u2").unwrap();
        let k = Kernel::periodic(PI).unwrap();
        let value_at_half = |n: usize| {
            let x = GridFunction::from_fn(n, |t| (2.0 * PI * t).cos()).unwrap();
            let y = apply_f2(&k, &f, &x).unwrap();
            y.values()[n / 2]
        };
        let (a, b, c) = (value_at_half(16), value_at_half(32), value_at_half(64));
        assert!((b - c).abs() < (a - b).abs() / 8.0);
    }

    #[test]
    fn f1_examples() {
        let e = BvFunction::one();
        let lin3 = example3();
        assert!(lin3.a7_holds());
        assert_eq!(lin3.apply(&e).unwrap().sup_norm(), 0.0);

        // x_λ at λ = 1: F₁x is the affine function through x(0) and x(1).
        let x = BvFunction::polynomial(&[-0.96, 1.8, -1.0]).unwrap();
        let fx = lin3.apply(&x).unwrap();
        for t in [0.0, 0.3, 1.0] {
            let affine = -0.96 + 0.8 * t;
            assert!((fx.eval(t) - affine).abs() < 1e-14);
        }

        let same = Functional::points(&[(0.5, 0.3)]).unwrap();
        let lin = LinearPerturbation::linear(same.clone(), same.clone()).unwrap();
        let y = lin.apply(&x).unwrap();
        let ax = same.apply(&x).unwrap();
        for t in [0.0, 0.5, 1.0] {
            assert!((y.eval(t) - ax).abs() < 1e-15);
        }
        // α[e] ≠ 0 here, so only the submultiplicative bound applies.
        assert!(lin.power_bound(3) > 0.0);
        assert_eq!(lin.lemma_power_bound(3), 0.0);
        assert_eq!(lin.spectral_radius_bound(), 0.0);

        let centred = Functional::points(&[(1.0, 0.3), (-1.0, 0.7)]).unwrap();
        let lin = LinearPerturbation::linear(centred.clone(), centred).unwrap();
        assert!(lin.a7_holds());
        for n in 0..5 {
            assert_eq!(lin.power_bound(n), 0.0);
        }
    }

    #[test]
    fn partition_of_unity_is_enforced() {
        let err = LinearPerturbation::new(
            Functional::zero(),
            Functional::zero(),
            BvFunction::one(),
            BvFunction::identity(),
        )
        .unwrap_err();
        assert_eq!(err.assumption_label(), Some("A9"));
    }

    #[test]
    fn norm_bounds_for_the_examples() {
        let lin1 = example1();
        assert!((lin1.norm_bound() - 0.8).abs() < 1e-15);
        assert!(!lin1.a7_holds());
        let (ae, _) = lin1.on_constant();
        assert!((ae - 0.4).abs() < 1e-15);
        // α[v] − β[v] = (1/5)(v(a) − v(b)) = (b − a)/5
        assert!((lin1.spectral_radius_bound() - 0.08).abs() < 1e-15);
        // F₁ on span{v, w} has matrix [[0.2, 0.2], [0.12, 0.28]] with eigenvalues 0.4 and 0.08.
        assert!((lin1.spectral_radius_exact() - 0.4).abs() < 1e-14);
        assert!(lin1.power_bound(4) >= lin1.spectral_radius_exact().powi(6));
        // lemma estimate at n = 0 from α[v] = 0.2, β[v] = 0.12
        let u = BvFunction::linear_combination(&[(0.2, lin1.v()), (0.12, lin1.w())]);
        assert!((lin1.lemma_power_bound(0) - 0.4 * u.bv_norm()).abs() < 1e-15);

        let lin3 = example3();
        assert_eq!(lin3.norm_bound(), 4.0 + 4.0);
        assert!(lin3.norm_bound_witness().unwrap() >= 2.0);
        assert!((lin3.spectral_radius_bound() - 0.8).abs() < 1e-14);
        assert!((lin3.u_norm() - 2.0).abs() < 1e-14);
        assert!((lin3.spectral_radius_exact() - 0.8).abs() < 1e-14);

        let zero = LinearPerturbation::zero();
        assert_eq!(zero.norm_bound(), 0.0);
        assert_eq!(zero.spectral_radius_bound(), 0.0);
    }

    #[test]
    fn neumann_series() {
        let y = GridFunction::from_fn(64, |t| t * (1.0 - t)).unwrap();
        let zero = LinearPerturbation::zero().neumann_apply(&y, 1e-12).unwrap();
        assert_eq!(zero.x, y);
        let theta = GridFunction::zeros(64).unwrap();
        let out = example3().neumann_apply(&theta, 1e-12).unwrap();
        assert_eq!(out.x.sup_norm(), 0.0);

        for lin in [example1(), example3()] {
            let out = lin.neumann_apply(&y, 1e-11).unwrap();
            assert!(out.defect <= 1e-11);
            assert!(out.tail_bound <= 1e-11);
        }
        // Example 3 with λ = 1: (I − F₁)⁻¹ t(1 − t) = x_1.
        let out = example3().neumann_apply(&y, 1e-13).unwrap();
        let exact = example3_solution(1.0);
        for (t, v) in out.x.nodes().zip(out.x.values()) {
            assert!((v - exact(t)).abs() < 1e-12);
        }

        let big = Functional::points(&[(3.0, 0.5)]).unwrap();
        let lin = LinearPerturbation::linear(big, Functional::zero()).unwrap();
        assert!(matches!(lin.neumann_apply(&y, 1e-8), Err(Error::NotCertified(_))));
    }

    #[test]
    fn kras_constants_for_the_examples() {
        let dirichlet = Kernel::dirichlet();
        let two = Nonlinearity::constant(2.0);
        let psi = two.psi_table(two.default_r_max()).unwrap();
        assert!((majorant_integral(&dirichlet, &two) - 1.0).abs() < 1e-15);
        assert!((f2_bv_bound(&dirichlet, &two, &psi, 3.0).unwrap() - 2.0).abs() < 1e-15);
        assert!(f2_bv_bound(&dirichlet, &two, &psi, 2e6).is_err());

        let report = kras_constants(&example3(), &dirichlet, &two, &psi).unwrap();
        assert_eq!(report.route, KrasRoute::SpectralLemma);
        assert!((report.c - 49.0).abs() < 1e-12);
        assert!((report.lambda0 - 1.0 / 294.0).abs() < 1e-15);
        assert_eq!(report.verdict("B6").unwrap().status, Status::Fail);
        assert_eq!(report.verdict("A7").unwrap().status, Status::Pass);
        assert_eq!(report.verdict("A12").unwrap().status, Status::Pass);
        assert_eq!(report.verdict("A13").unwrap().status, Status::Pass);
        let r = report.psi_r_feasible_r.unwrap();
        assert!((r - 2.0 * 49.0 * 2.0).abs() < 1e-9);

        let report = kras_constants(&example1(), &dirichlet, &two, &psi).unwrap();
        assert_eq!(report.route, KrasRoute::SmallNorm);
        assert!((report.c - 5.0).abs() < 1e-12);
        assert_eq!(report.verdict("B6").unwrap().status, Status::Pass);
        assert_eq!(report.verdict("A7").unwrap().status, Status::Fail);

        let zero = Nonlinearity::catalog("zero").unwrap();
        let zpsi = zero.psi_table(10.0).unwrap();
        let report = kras_constants(&LinearPerturbation::zero(), &dirichlet, &zero, &zpsi).unwrap();
        assert_eq!(report.c, 1.0);
        assert!(report.psi_r_feasible_r.is_some());
        assert!((report.lambda0 - 0.5).abs() < 1e-15);
    }
}
