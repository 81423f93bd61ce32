//! Fixed-point iteration for `x = F₁(x) + λF₂(x)`, a normalized iteration for
//! eigenpairs `F(x) = λx` on a seminorm sphere, the hypothesis check for the
//! cone-localized eigenpair theorem, and an empirical Lipschitz probe.
//!
//! The underlying existence theorems are not constructive, so every result
//! carries residuals recomputed from scratch; only residuals certify.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::bvfun::{cone_check, lp_seminorm, Domain, GridFunction};
use crate::error::{Error, Result};
use crate::kernels::{BoundingFunction, Kernel};
use crate::operators::{
    apply_f2_direct, kras_constants, KrasReport, KrasRoute, Nonlinearity, NystromMatrix,
    PerturbedProblem,
};
use crate::verdict::{Status, Verdict};

/// Iterations without residual decrease before the eigenpair search
/// switches to averaged steps.
const STALL_WINDOW: usize = 5;
/// Smallest admissible eigenvalue estimate.
pub const DEGENERATE_LAMBDA: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Outcome {
    Converged,
    NonConverged,
    /// The iterate left the ball of radius `2r`.
    Diverged,
}

impl std::fmt::Display for Outcome {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Outcome::Converged => "converged",
            Outcome::NonConverged => "non-converged",
            Outcome::Diverged => "diverged",
        })
    }
}

/// Side conditions of a computed solution.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Constraints {
    /// `∫_{Ω₀} x − c‖x‖∞`, when a cone constant is known.
    pub cone_margin: Option<f64>,
    /// `|x|_p − m` for eigenpairs.
    pub seminorm_defect: Option<f64>,
    pub sup_norm: f64,
    /// Discrete BV norm `|x₀| + Σ|xᵢ − xᵢ₋₁|`.
    pub bv_norm: f64,
    pub radius: f64,
    pub within_range: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct SolveResult {
    #[serde(skip)]
    pub x: GridFunction,
    pub lambda: f64,
    /// Residual from the assembled Nyström matrix.
    pub residual_sup: f64,
    /// The same residual recomputed row by row without the matrix.
    pub residual_direct: f64,
    pub iterations: usize,
    pub outcome: Outcome,
    pub constraints: Constraints,
    /// Step size (fixed point) or residual (eigenpair) per iteration.
    pub history: Vec<f64>,
    pub notes: Vec<String>,
}

/// Settings for [`kras_solve`].
#[derive(Debug, Clone, Copy)]
pub struct KrasConfig {
    pub n: usize,
    pub r: f64,
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for KrasConfig {
    fn default() -> Self {
        Self {
            n: 256,
            r: 1.0,
            tol: 1e-8,
            max_iter: 10_000,
        }
    }
}

fn sup_diff(a: &GridFunction, b: &GridFunction) -> f64 {
    a.sup_distance(b).expect("iterates share a grid")
}

/// `‖x − F₁x − λF₂x‖∞` evaluated through the Nyström matrix.
fn kras_residual(p: &PerturbedProblem, nystrom: &NystromMatrix, x: &GridFunction) -> Result<f64> {
    let f1 = p.perturbation.apply_grid(x)?;
    let f2 = nystrom.apply(&p.f, x)?;
    Ok(x.values()
        .iter()
        .zip(f1.values())
        .zip(f2.values())
        .map(|((xi, a), b)| (xi - a - p.lambda * b).abs())
        .fold(0.0, f64::max))
}

/// The same residual by an independent route: `F₁` acts on the continuous
/// interpolant as a [`crate::bvfun::BvFunction`] and `F₂` is integrated row
/// by row.
pub fn kras_residual_direct(p: &PerturbedProblem, x: &GridFunction) -> Result<f64> {
    let f1 = p.perturbation.apply(&x.interpolant())?;
    let f2 = apply_f2_direct(&p.kernel, &p.f, x);
    Ok(x.nodes()
        .zip(x.values())
        .zip(f2.values())
        .map(|((t, xi), b)| (xi - f1.eval(t) - p.lambda * b).abs())
        .fold(0.0, f64::max))
}

/// Solves `x = F₁(x) + λF₂(x)` by `x_{k+1} = (I − F₁)⁻¹ λF₂(x_k)` from
/// `x₀ = θ`.
///
/// Requires a bound on `‖(I − F₁)⁻¹‖` and the radius condition
/// `|λ|ψ(r) ≤ r c⁻¹ (1 + ∫(m + |k(0,·)|)φ)⁻¹` at the supplied `r`.
pub fn kras_solve(p: &PerturbedProblem, cfg: &KrasConfig) -> Result<SolveResult> {
    kras_solve_from(p, cfg, &GridFunction::zeros(cfg.n)?)
}

/// [`kras_solve`] from a given starting iterate.
pub fn kras_solve_from(
    p: &PerturbedProblem,
    cfg: &KrasConfig,
    x0: &GridFunction,
) -> Result<SolveResult> {
    if !(cfg.tol > 0.0) || !(cfg.r > 0.0) {
        return Err(Error::InvalidParameter("tol and r must be positive".into()));
    }
    if x0.n() != cfg.n {
        return Err(Error::GridMismatch {
            expected: cfg.n,
            got: x0.n(),
        });
    }
    let psi = p.f.psi_table(p.f.default_r_max().max(cfg.r))?;
    let report = kras_constants(&p.perturbation, &p.kernel, &p.f, &psi)?;
    check_radius(&report, &psi, p.lambda, cfg.r)?;

    let nystrom = NystromMatrix::new(&p.kernel, cfg.n)?;
    let mut x = x0.clone();
    let mut history = Vec::new();
    let mut outcome = Outcome::NonConverged;
    let mut notes = vec![format!("route {:?}, c = {:.6}", report.route, report.c)];
    for _ in 0..cfg.max_iter {
        let rhs = nystrom.apply(&p.f, &x)?.scale(p.lambda);
        let neumann_tol = (cfg.tol * 1e-3).min(1e-12).max(1e-14 * (1.0 + rhs.sup_norm()));
        let next = p.perturbation.neumann_apply(&rhs, neumann_tol)?.x;
        let step = sup_diff(&next, &x);
        history.push(step);
        x = next;
        if x.discrete_bv_norm() > 2.0 * cfg.r {
            outcome = Outcome::Diverged;
            notes.push(format!(
                "iterate BV norm {:.6} left the ball of radius 2r = {}",
                x.discrete_bv_norm(),
                2.0 * cfg.r
            ));
            break;
        }
        if step <= cfg.tol {
            outcome = Outcome::Converged;
            break;
        }
    }
    let residual_sup = kras_residual(p, &nystrom, &x)?;
    let residual_direct = kras_residual_direct(p, &x)?;
    let bv_norm = x.discrete_bv_norm();
    Ok(SolveResult {
        lambda: p.lambda,
        residual_sup,
        residual_direct,
        iterations: history.len(),
        outcome,
        constraints: Constraints {
            cone_margin: None,
            seminorm_defect: None,
            sup_norm: x.sup_norm(),
            bv_norm,
            radius: cfg.r,
            within_range: bv_norm <= cfg.r,
        },
        history,
        notes,
        x,
    })
}

fn check_radius(report: &KrasReport, psi: &crate::operators::PsiTable, lambda: f64, r: f64) -> Result<()> {
    if report.route == KrasRoute::Infeasible {
        return Err(Error::assumption(
            "B6",
            format!(
                "no bound on ‖(I − F₁)⁻¹‖: ‖F₁‖ ≤ {:.6}, |α[v] − β[v]| = {:.6}",
                report.norm_f1_bound, report.spectral_radius_bound
            ),
        ));
    }
    let lhs = lambda.abs() * psi.eval(r)?;
    let rhs = r / (report.c * (1.0 + report.majorant_integral));
    if lhs > rhs {
        return Err(Error::assumption(
            "B5",
            format!("|λ|ψ(r) = {lhs:.6e} > r/(c(1 + I)) = {rhs:.6e} at r = {r}"),
        ));
    }
    Ok(())
}

/// Settings for [`eigenpair_search`].
#[derive(Debug, Clone, Copy)]
pub struct EigenConfig {
    pub n: usize,
    pub m: f64,
    pub p: f64,
    pub r: f64,
    pub tol: f64,
    pub max_iter: usize,
}

impl EigenConfig {
    pub fn new(m: f64, p: f64, r: f64) -> Self {
        Self {
            n: 256,
            m,
            p,
            r,
            tol: 1e-8,
            max_iter: 10_000,
        }
    }
}

fn normalize(y: &GridFunction, domain: &Domain, p: f64, m: f64) -> Result<(GridFunction, f64)> {
    let lambda = lp_seminorm(y, domain, p)? / m;
    if !(lambda >= DEGENERATE_LAMBDA) {
        return Err(Error::Degenerate(format!(
            "|F(x)|_p / m = {lambda:.3e} below {DEGENERATE_LAMBDA:e}"
        )));
    }
    Ok((y.scale(1.0 / lambda), lambda))
}

/// Looks for `F(x) = λx` with `|x|_p = m`, `F(x)(t) = ∫k(t,s)f(s,x(s))ds`,
/// by the normalized iteration `x_{k+1} = F(x_k)/λ_k`, `λ_k = |F(x_k)|_p/m`,
/// started from the constant `m·μ(Ω₀)^{−1/p}`.
///
/// If the residual fails to decrease for five consecutive steps the
/// iteration switches to averaged steps `(x_k + F(x_k)/λ_k)/2`,
/// renormalized. Non-convergence is reported in the outcome, not as an
/// error; the only error besides bad parameters is a degenerate image.
pub fn eigenpair_search(
    kernel: &Kernel,
    f: &Nonlinearity,
    domain: &Domain,
    cfg: &EigenConfig,
) -> Result<SolveResult> {
    if !(cfg.m > 0.0) || !(cfg.r > 0.0) || !(cfg.tol > 0.0) {
        return Err(Error::InvalidParameter("m, r and tol must be positive".into()));
    }
    if !(cfg.p >= 1.0) || !cfg.p.is_finite() {
        return Err(Error::InvalidParameter(format!("p = {} must lie in [1, ∞)", cfg.p)));
    }
    let nystrom = NystromMatrix::new(kernel, cfg.n)?;
    let mu = domain.measure();
    let start = cfg.m * mu.powf(-1.0 / cfg.p);
    let mut x = GridFunction::constant(cfg.n, start)?;
    let mut history = Vec::new();
    let mut notes = Vec::new();
    let mut damped = false;
    let mut outcome = Outcome::NonConverged;
    let mut lambda = f64::NAN;
    let mut best_recent = f64::INFINITY;
    let mut stalled = 0;
    for k in 0..=cfg.max_iter {
        let y = nystrom.apply(f, &x)?;
        let (next, lam) = normalize(&y, domain, cfg.p, cfg.m)?;
        lambda = lam;
        let residual = y.axpy(-lam, &x)?.sup_norm();
        history.push(residual);
        if residual <= cfg.tol {
            outcome = Outcome::Converged;
            break;
        }
        if k == cfg.max_iter {
            break;
        }
        if residual < best_recent {
            best_recent = residual;
            stalled = 0;
        } else {
            stalled += 1;
        }
        if !damped && stalled >= STALL_WINDOW {
            damped = true;
            notes.push(format!("switched to averaged steps after iteration {k}"));
        }
        x = if damped {
            let avg = x.axpy(1.0, &next)?.scale(0.5);
            normalize(&avg, domain, cfg.p, cfg.m)?.0
        } else {
            next
        };
    }
    let y = nystrom.apply(f, &x)?;
    let residual_sup = y.axpy(-lambda, &x)?.sup_norm();
    let direct = apply_f2_direct(kernel, f, &x);
    let residual_direct = direct.axpy(-lambda, &x)?.sup_norm();
    let seminorm_defect = (lp_seminorm(&x, domain, cfg.p)? - cfg.m).abs();
    let cone_margin = kernel
        .build_bounding(domain, cfg.n)
        .ok()
        .map(|b| cone_check(&x, domain, b.c).map(|c| c.margin))
        .transpose()?;
    if outcome != Outcome::Converged {
        notes.push(format!(
            "no convergence in {} iterations: last residual {:.3e}, best {:.3e}, λ estimate {:.6e}",
            history.len() - 1,
            residual_sup,
            history.iter().copied().fold(f64::INFINITY, f64::min),
            lambda
        ));
    }
    let sup = x.sup_norm();
    Ok(SolveResult {
        lambda,
        residual_sup,
        residual_direct,
        iterations: history.len(),
        outcome,
        constraints: Constraints {
            cone_margin,
            seminorm_defect: Some(seminorm_defect),
            sup_norm: sup,
            bv_norm: x.discrete_bv_norm(),
            radius: cfg.r,
            within_range: sup <= cfg.r,
        },
        history,
        notes,
        x,
    })
}

/// Constants and verdicts for the cone-localized eigenpair theorem.
#[derive(Debug, Clone, Serialize)]
pub struct LwReport {
    pub domain_measure: f64,
    pub p: f64,
    /// Conjugate exponent; `None` stands for `q = ∞`.
    pub q: Option<f64>,
    pub theta: f64,
    pub m: f64,
    pub r: f64,
    pub eta1: f64,
    pub eta2: Option<f64>,
    pub c: Option<f64>,
    pub big_m: Option<f64>,
    pub delta: Option<f64>,
    /// Largest admissible `m`, `r c μ(Ω₀)^{−1/q}`.
    pub m_bound: Option<f64>,
    pub verified_nodes: usize,
    pub verdicts: Vec<Verdict>,
}

impl LwReport {
    pub fn verdict(&self, label: &str) -> Option<&Verdict> {
        self.verdicts.iter().find(|v| v.label == label)
    }
}

/// Checks the hypotheses of the eigenpair theorem for `F(x) = ∫k f` on the
/// cone `{x : ∫_{Ω₀} x ≥ c‖x‖∞}`, building `Φ`, `η₂` and `c` from the row
/// integrals as in the standard continuous-data shortcut.
#[allow(clippy::too_many_arguments)]
pub fn lw_hypothesis_check(
    kernel: &Kernel,
    f: &Nonlinearity,
    domain: &Domain,
    p: f64,
    m: f64,
    r: f64,
    theta: f64,
    n: usize,
) -> Result<LwReport> {
    if !(p >= 1.0) || !p.is_finite() {
        return Err(Error::InvalidParameter(format!("p = {p} must lie in [1, ∞)")));
    }
    if !(m > 0.0) || !(r > 0.0) {
        return Err(Error::InvalidParameter("m and r must be positive".into()));
    }
    if !(theta > 0.0 && theta < 1.0) {
        return Err(Error::InvalidParameter(format!("ϑ = {theta} must lie in (0, 1)")));
    }
    let mu = domain.measure();
    let q = if p == 1.0 { None } else { Some(p / (p - 1.0)) };
    let mu_q = q.map_or(1.0, |q| mu.powf(1.0 / q));
    let level = m * mu.powf(-1.0 / p);
    let full = Domain::full();
    let mut verdicts = Vec::new();

    let f_min = f.sampled_inf(&full, 0.0, r);
    verdicts.push(Verdict::pass_if(
        "A1",
        f_min >= 0.0,
        format!("closed-form f, g_r ≡ ψ(r) = {:.6}; sampled min f on [0,1]×[−r,r] = {f_min:.6}", f.psi(r)),
    ));
    let eta1 = f.sampled_inf(domain, theta * level, r);
    verdicts.push(Verdict::pass_if(
        "A2",
        eta1 > 0.0,
        format!("η₁ = {eta1:.6} on ϑmμ^(−1/p) = {:.6} ≤ |u| ≤ {r}", theta * level),
    ));
    let b1 = if level <= r { f.sampled_inf(domain, level, r) } else { f64::INFINITY };
    verdicts.push(Verdict::pass_if(
        "B1",
        b1 > 0.0,
        format!("sampled min f = {b1:.6} on mμ^(−1/p) = {level:.6} ≤ |u| ≤ {r}"),
    ));

    let phi = GridFunction::constant(n, f.psi(r))?;
    let delta_t = 1e-3;
    let mut worst = 0.0_f64;
    for tau in [0.0, 0.25, 0.5, 0.75, 1.0] {
        worst = worst.max(kernel.continuity_modulus(&phi, tau, delta_t)?);
    }
    let lip = kernel.lipschitz_t() * delta_t * f.psi(r);
    verdicts.push(Verdict::pass_if(
        "A3",
        worst <= lip + 1e-10,
        format!("∫|k(t,s) − k(τ,s)|g_r ds ≤ {worst:.3e} for |t − τ| ≤ {delta_t}"),
    ));

    let bounding: Result<BoundingFunction> = kernel.build_bounding(domain, n);
    let (c, eta2, verified_nodes) = match &bounding {
        Ok(b) => {
            verdicts.push(Verdict::new(
                "B2",
                Status::Pass,
                format!("min row integral {:.6e} over {} nodes", b.row_min, b.verified_nodes),
            ));
            verdicts.push(Verdict::new(
                "A4",
                Status::Pass,
                format!(
                    "Φ = ‖k‖∞R/min R, η₂ = {:.6}, c = {:.6}; verified at {} grid nodes",
                    b.eta2, b.c, b.verified_nodes
                ),
            ));
            let integral = b.phi.interpolant().integral(0.0, 1.0)? * f.psi(r);
            verdicts.push(Verdict::pass_if(
                "A5",
                integral.is_finite(),
                format!("∫Φ g_r = {integral:.6}"),
            ));
            (Some(b.c), Some(b.eta2), b.verified_nodes)
        }
        Err(e) => {
            verdicts.push(Verdict::new("B2", Status::Fail, e.to_string()));
            verdicts.push(Verdict::new("A4", Status::Fail, "no bounding function"));
            verdicts.push(Verdict::new("A5", Status::Fail, "no bounding function"));
            (None, None, 0)
        }
    };
    let m_bound = c.map(|c| r * c / mu_q);
    verdicts.push(match m_bound {
        Some(bound) => Verdict::pass_if("A6", m <= bound, format!("m = {m:.6} ≤ r c μ^(−1/q) = {bound:.6}")),
        None => Verdict::new("A6", Status::Fail, "c unavailable"),
    });
    let b3 = verdicts.last().expect("just pushed").clone();
    verdicts.push(Verdict { label: "B3", ..b3 });

    let big_m = c.map(|c| mu_q / c);
    let delta = match (c, eta2) {
        (Some(c), Some(eta2)) if eta1 > 0.0 => {
            Some(c * eta1 * eta2 / mu_q * m.powf(p) * (1.0 - theta.powf(p)) * r.powf(-p))
        }
        _ => None,
    };
    Ok(LwReport {
        domain_measure: mu,
        p,
        q,
        theta,
        m,
        r,
        eta1,
        eta2,
        c,
        big_m,
        delta,
        m_bound,
        verified_nodes,
        verdicts,
    })
}

/// Largest observed `‖F(x) − F(y)‖∞ / ‖x − y‖∞` over random pairs in the
/// sup-ball of radius `r`, with `F(x)(t) = ∫k(t,s)f(s,x(s))ds` on a grid of
/// `n` intervals.
///
/// Half the pairs are independent random grid functions; the other half
/// differ by a small constant, which probes the local slope of `f`.
pub fn contraction_probe(
    kernel: &Kernel,
    f: &Nonlinearity,
    r: f64,
    samples: usize,
    n: usize,
    seed: u64,
) -> Result<f64> {
    if !(r > 0.0) {
        return Err(Error::InvalidParameter(format!("r = {r} must be positive")));
    }
    let nystrom = NystromMatrix::new(kernel, n)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut best = 0.0_f64;
    for i in 0..samples {
        let x: Vec<f64> = if i % 4 == 0 {
            vec![rng.gen_range(-r..=r); n + 1]
        } else {
            (0..=n).map(|_| rng.gen_range(-r..=r)).collect()
        };
        let y: Vec<f64> = if i % 2 == 0 {
            (0..=n).map(|_| rng.gen_range(-r..=r)).collect()
        } else {
            let shift = rng.gen_range(1e-3..1e-1) * r;
            x.iter().map(|v| if *v + shift <= r { v + shift } else { v - shift }).collect()
        };
        let gx = GridFunction::new(x)?;
        let gy = GridFunction::new(y)?;
        let den = gx.sup_distance(&gy)?;
        if den == 0.0 {
            continue;
        }
        let num = nystrom.apply(f, &gx)?.sup_distance(&nystrom.apply(f, &gy)?)?;
        best = best.max(num / den);
    }
    Ok(best)
}
