//! Green's functions on `[0, 1]²` and the bounding-function system used for
//! sign-changing kernels.

use crate::bvfun::{BvFunction, Domain, GridFunction};
use crate::error::{Error, Result};
use crate::quadrature::{self, DEFAULT_INTERVALS};

/// Smallest admissible `|sin(ω/2)|` for the periodic kernel.
pub const OMEGA_GUARD: f64 = 1e-9;

const SUP_TOL: f64 = 1e-9;
const SUP_MAX_GRID: usize = 2048;

/// A kernel given as a matrix of samples on a uniform grid, interpolated
/// bilinearly. Row `i` is `t = i/(rows−1)`, column `j` is `s = j/(cols−1)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    values: Vec<Vec<f64>>,
}

impl Table {
    pub fn new(values: Vec<Vec<f64>>) -> Result<Self> {
        let rows = values.len();
        if rows < 2 {
            return Err(Error::KernelRejected("table needs at least two rows".into()));
        }
        let cols = values[0].len();
        if cols < 2 || values.iter().any(|r| r.len() != cols) {
            return Err(Error::KernelRejected(
                "table rows must share a length of at least two".into(),
            ));
        }
        if values.iter().flatten().any(|v| !v.is_finite()) {
            return Err(Error::KernelRejected("table has non-finite entries".into()));
        }
        Ok(Self { values })
    }

    /// Parses a comma-separated matrix; blank lines are ignored.
    pub fn from_csv(text: &str) -> Result<Self> {
        let mut rows = Vec::new();
        for (lineno, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() {
                continue;
            }
            let row = line
                .split(',')
                .map(|cell| cell.trim().parse::<f64>())
                .collect::<std::result::Result<Vec<f64>, _>>()
                .map_err(|e| Error::KernelRejected(format!("line {}: {e}", lineno + 1)))?;
            rows.push(row);
        }
        Self::new(rows)
    }

    pub fn values(&self) -> &[Vec<f64>] {
        &self.values
    }

    fn t_intervals(&self) -> usize {
        self.values.len() - 1
    }

    fn s_intervals(&self) -> usize {
        self.values[0].len() - 1
    }

    fn locate(x: f64, n: usize) -> (usize, f64) {
        let scaled = x * n as f64;
        let i = (scaled.floor() as usize).min(n - 1);
        (i, scaled - i as f64)
    }

    fn eval(&self, t: f64, s: f64) -> f64 {
        let (i, ft) = Self::locate(t, self.t_intervals());
        let (j, fs) = Self::locate(s, self.s_intervals());
        let v = &self.values;
        (1.0 - ft) * ((1.0 - fs) * v[i][j] + fs * v[i][j + 1])
            + ft * ((1.0 - fs) * v[i + 1][j] + fs * v[i + 1][j + 1])
    }
}

/// Which Green's function a [`Kernel`] represents.
#[derive(Debug, Clone, PartialEq)]
pub enum KernelKind {
    /// Green's function of `x″ + ω²x = h` with periodic conditions.
    Periodic { omega: f64 },
    /// Green's function of `−x″ = h`, `x(0) = x(1) = 0`.
    Dirichlet,
    Tabulated(Table),
}

/// Majorant `m(s)` for the variation of the sections `t ↦ k(t, s)`.
#[derive(Debug, Clone, PartialEq)]
pub enum Majorant {
    Constant(f64),
    Function(BvFunction),
}

impl Majorant {
    pub fn eval(&self, s: f64) -> f64 {
        match self {
            Majorant::Constant(c) => *c,
            Majorant::Function(f) => f.eval(s),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Kernel {
    kind: KernelKind,
    majorant: Majorant,
    lipschitz_t: f64,
}

/// A bounding function `Φ` for a sign-changing kernel together with the
/// constants `η₂` and `c`, checked at every node of its grid.
#[derive(Debug, Clone, PartialEq)]
pub struct BoundingFunction {
    pub phi: GridFunction,
    pub eta2: f64,
    pub c: f64,
    pub row_min: f64,
    pub sup_abs: f64,
    pub verified_nodes: usize,
}

impl Kernel {
    pub fn periodic(omega: f64) -> Result<Self> {
        if !(omega > 0.0) || !omega.is_finite() {
            return Err(Error::KernelRejected(format!("ω = {omega} must be positive")));
        }
        let sin_half = (0.5 * omega).sin();
        if sin_half.abs() <= OMEGA_GUARD {
            return Err(Error::KernelRejected(format!(
                "ω = {omega} is too close to a multiple of 2π (|sin(ω/2)| = {:.3e})",
                sin_half.abs()
            )));
        }
        // sup over the phase range [−ω/2, ω/2] of |sin|, times 1/(2|sin(ω/2)|)
        let max_sin = if omega >= std::f64::consts::PI { 1.0 } else { sin_half.abs() };
        let lipschitz_t = max_sin / (2.0 * sin_half.abs());
        Ok(Self {
            kind: KernelKind::Periodic { omega },
            majorant: Majorant::Constant(lipschitz_t),
            lipschitz_t,
        })
    }

    pub fn dirichlet() -> Self {
        Self {
            kind: KernelKind::Dirichlet,
            majorant: Majorant::Constant(1.0),
            lipschitz_t: 1.0,
        }
    }

    pub fn tabulated(table: Table) -> Self {
        let nt = table.t_intervals() as f64;
        let mut lipschitz_t = 0.0_f64;
        let mut var_max = 0.0_f64;
        for j in 0..=table.s_intervals() {
            let mut var = 0.0;
            for i in 0..table.t_intervals() {
                let d = (table.values[i + 1][j] - table.values[i][j]).abs();
                var += d;
                lipschitz_t = lipschitz_t.max(d * nt);
            }
            var_max = var_max.max(var);
        }
        Self {
            kind: KernelKind::Tabulated(table),
            majorant: Majorant::Constant(var_max),
            lipschitz_t,
        }
    }

    /// Replaces the variation majorant `m(s)`.
    pub fn with_majorant(mut self, majorant: Majorant) -> Self {
        self.majorant = majorant;
        self
    }

    pub fn kind(&self) -> &KernelKind {
        &self.kind
    }

    pub fn majorant(&self) -> &Majorant {
        &self.majorant
    }

    /// Lipschitz constant of `t ↦ k(t, s)`, uniform in `s`.
    pub fn lipschitz_t(&self) -> f64 {
        self.lipschitz_t
    }

    pub fn eval(&self, t: f64, s: f64) -> Result<f64> {
        for v in [t, s] {
            if !(0.0..=1.0).contains(&v) {
                return Err(Error::OutOfRange(v));
            }
        }
        Ok(self.value(t, s))
    }

    /// Kernel value without range checks; arguments are assumed in `[0, 1]`.
    pub(crate) fn value(&self, t: f64, s: f64) -> f64 {
        match &self.kind {
            KernelKind::Periodic { omega } => {
                let phase = if s <= t { 0.5 - t + s } else { 0.5 - s + t };
                (omega * phase).cos() / (2.0 * omega * (0.5 * omega).sin())
            }
            KernelKind::Dirichlet => {
                if s <= t {
                    s * (1.0 - t)
                } else {
                    t * (1.0 - s)
                }
            }
            KernelKind::Tabulated(table) => table.eval(t, s),
        }
    }

    /// Points where `t ↦ k(t, s)` may fail to be smooth.
    fn t_kinks(&self, s: f64) -> Vec<f64> {
        match &self.kind {
            KernelKind::Tabulated(table) => {
                let n = table.t_intervals();
                (1..n).map(|i| i as f64 / n as f64).collect()
            }
            _ => vec![s],
        }
    }

    /// `∫_{Ω₀} k(t, s) dt` with the default number of Simpson intervals.
    pub fn row_integral(&self, s: f64, domain: &Domain) -> f64 {
        self.row_integral_n(s, domain, DEFAULT_INTERVALS)
    }

    /// `∫_{Ω₀} k(t, s) dt` by composite Simpson with `n` intervals on each
    /// smooth piece, split at the diagonal.
    pub fn row_integral_n(&self, s: f64, domain: &Domain, n: usize) -> f64 {
        let kinks = self.t_kinks(s);
        domain
            .intervals()
            .iter()
            .map(|&(lo, hi)| quadrature::simpson_split(|t| self.value(t, s), lo, hi, &kinks, n))
            .sum()
    }

    /// `max |k|` over the closed square.
    ///
    /// The grid `{i/n}²` together with a twice finer diagonal is refined by
    /// doubling until two successive maxima agree to 1e-9.
    pub fn sup_abs(&self) -> f64 {
        if let KernelKind::Tabulated(table) = &self.kind {
            return table.values.iter().flatten().fold(0.0, |m, v| m.max(v.abs()));
        }
        let sample = |n: usize| {
            let mut best = 0.0_f64;
            for i in 0..=n {
                let t = i as f64 / n as f64;
                for j in 0..=n {
                    best = best.max(self.value(t, j as f64 / n as f64).abs());
                }
            }
            for i in 0..=2 * n {
                let t = i as f64 / (2 * n) as f64;
                best = best.max(self.value(t, t).abs());
            }
            best
        };
        let mut n = 32;
        let mut prev = sample(n);
        while n < SUP_MAX_GRID {
            n *= 2;
            let next = sample(n);
            if (next - prev).abs() < SUP_TOL {
                return next;
            }
            prev = next;
        }
        prev
    }

    /// Variation of `t ↦ k(t, s)` over `[0, 1]`.
    pub fn t_variation(&self, s: f64) -> Result<f64> {
        if !(0.0..=1.0).contains(&s) {
            return Err(Error::OutOfRange(s));
        }
        Ok(match &self.kind {
            KernelKind::Dirichlet => 2.0 * s * (1.0 - s),
            KernelKind::Periodic { omega } => {
                // k depends on d = |t − s| through g(d) = C cos(ω(1/2 − d)),
                // stationary at d = 1/2 + jπ/ω.
                let g = |d: f64| self.value(d, 0.0);
                let var_up_to = |len: f64| {
                    let mut pts = vec![0.0];
                    let step = std::f64::consts::PI / omega;
                    let first = ((0.5 - len) / step).ceil() as i64;
                    let last = (0.5 / step).floor() as i64;
                    for j in first..=last {
                        let d = 0.5 - j as f64 * step;
                        if d > 0.0 && d < len {
                            pts.push(d);
                        }
                    }
                    pts.push(len);
                    pts.sort_by(f64::total_cmp);
                    pts.windows(2).map(|w| (g(w[1]) - g(w[0])).abs()).sum::<f64>()
                };
                var_up_to(s) + var_up_to(1.0 - s)
            }
            KernelKind::Tabulated(table) => {
                let n = table.t_intervals();
                (0..n)
                    .map(|i| {
                        let t0 = i as f64 / n as f64;
                        let t1 = (i + 1) as f64 / n as f64;
                        (table.eval(t1, s) - table.eval(t0, s)).abs()
                    })
                    .sum()
            }
        })
    }

    /// `max_{|t−τ| ≤ δ} ∫₀¹ |k(t, s) − k(τ, s)| φ(s) ds`, with `t` sampled at
    /// 33 points of the window.
    pub fn continuity_modulus(&self, phi: &GridFunction, tau: f64, delta: f64) -> Result<f64> {
        if !(0.0..=1.0).contains(&tau) {
            return Err(Error::OutOfRange(tau));
        }
        if !(delta >= 0.0) {
            return Err(Error::InvalidParameter(format!("δ = {delta} must be nonnegative")));
        }
        if delta == 0.0 {
            return Ok(0.0);
        }
        let lo = (tau - delta).max(0.0);
        let hi = (tau + delta).min(1.0);
        let mut best = 0.0_f64;
        for i in 0..=32 {
            let t = lo + (hi - lo) * i as f64 / 32.0;
            let mut splits = vec![t, tau];
            splits.extend(self.t_kinks(t));
            let v = quadrature::simpson_split(
                |s| (self.value(t, s) - self.value(tau, s)).abs() * phi.eval(s),
                0.0,
                1.0,
                &splits,
                DEFAULT_INTERVALS,
            );
            best = best.max(v);
        }
        Ok(best)
    }

    /// Builds `Φ(s) = ‖k‖∞ R(s) / min R` with `R(s) = ∫_{Ω₀} k(t, s) dt` on
    /// the nodes `s = i/n`, and checks the three bounding conditions there.
    pub fn build_bounding(&self, domain: &Domain, n: usize) -> Result<BoundingFunction> {
        if n < 2 {
            return Err(Error::InvalidParameter(format!("grid of {n} intervals")));
        }
        let rows: Vec<f64> = (0..=n)
            .map(|i| self.row_integral(i as f64 / n as f64, domain))
            .collect();
        let (argmin, row_min) = rows
            .iter()
            .copied()
            .enumerate()
            .min_by(|a, b| a.1.total_cmp(&b.1))
            .expect("grid is nonempty");
        if !(row_min > 0.0) {
            return Err(Error::KernelRejected(format!(
                "row integral {row_min:.3e} ≤ 0 at s = {}",
                argmin as f64 / n as f64
            )));
        }
        let sup_abs = self.sup_abs();
        let c = row_min / sup_abs;
        let phi = GridFunction::new(rows.iter().map(|r| sup_abs * r / row_min).collect())?;
        let eta2 = phi
            .nodes()
            .zip(phi.values())
            .filter(|(s, _)| domain.contains(*s))
            .map(|(_, v)| *v)
            .fold(f64::INFINITY, f64::min);
        for (i, (&p, &r)) in phi.values().iter().zip(&rows).enumerate() {
            let s = i as f64 / n as f64;
            if p < 0.0 || c * p > r + 1e-9 || p + 1e-12 < sup_abs {
                return Err(Error::KernelRejected(format!(
                    "bounding conditions fail at s = {s}"
                )));
            }
        }
        Ok(BoundingFunction {
            phi,
            eta2,
            c,
            row_min,
            sup_abs,
            verified_nodes: n + 1,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::PI;

    #[test]
    fn formula_values() {
        let d = Kernel::dirichlet();
        for s in [0.0, 0.3, 1.0] {
            assert_eq!(d.eval(0.0, s).unwrap(), 0.0);
            assert_eq!(d.eval(1.0, s).unwrap(), 0.0);
        }
        assert_eq!(d.eval(0.5, 0.5).unwrap(), 0.25);
        assert!(d.eval(1.2, 0.5).is_err());

        let k = Kernel::periodic(1.5 * PI).unwrap();
        for i in 0..=10 {
            let t = i as f64 / 10.0;
            assert!((k.eval(t, t).unwrap() + 1.0 / (3.0 * PI)).abs() < 1e-14);
        }
    }

    #[test]
    fn omega_guard() {
        assert!(Kernel::periodic(2.0 * PI).is_err());
        assert!(Kernel::periodic(4.0 * PI).is_err());
        assert!(Kernel::periodic(0.0).is_err());
        assert!(Kernel::periodic(2.0 * PI + 1e-6).is_ok());
    }

    #[test]
    fn periodic_symmetry_and_sign() {
        for omega in [PI / 4.0, PI / 2.0, PI, 1.5 * PI, 5.0] {
            let k = Kernel::periodic(omega).unwrap();
            let mut min = f64::INFINITY;
            for i in 0..=100 {
                for j in 0..=100 {
                    let (t, s) = (i as f64 / 100.0, j as f64 / 100.0);
                    let v = k.value(t, s);
                    assert!((v - k.value(s, t)).abs() <= 1e-14);
                    min = min.min(v);
                }
            }
            if omega <= PI {
                assert!(min >= 0.0, "ω = {omega}");
            } else {
                assert!(min < 0.0, "ω = {omega}");
            }
        }
    }

    #[test]
    fn row_integrals_match_closed_forms() {
        let full = Domain::full();
        for omega in [PI / 2.0, PI, 1.5 * PI, 5.0] {
            let k = Kernel::periodic(omega).unwrap();
            for i in 0..=10 {
                let s = i as f64 / 10.0;
                assert!((k.row_integral(s, &full) - omega.powi(-2)).abs() < 1e-8);
            }
        }
        let d = Kernel::dirichlet();
        for i in 0..=20 {
            let s = i as f64 / 20.0;
            // ∫₀ˢ t(1−s) dt + ∫ₛ¹ s(1−t) dt
            let oracle = s * s * (1.0 - s) / 2.0 + s * (1.0 - s) * (1.0 - s) / 2.0;
            assert!((d.row_integral(s, &full) - oracle).abs() < 1e-15);
        }
        let eps = 1e-7;
        let thin = Domain::new(vec![(0.4, 0.4 + eps)]).unwrap();
        assert!(d.row_integral(0.5, &thin).abs() < eps);
    }

    #[test]
    fn sup_abs_closed_forms() {
        assert!((Kernel::dirichlet().sup_abs() - 0.25).abs() < 1e-15);
        for omega in [PI / 4.0, PI / 2.0, PI, 1.5 * PI] {
            let k = Kernel::periodic(omega).unwrap();
            let closed = 1.0 / (2.0 * omega * (0.5 * omega).sin().abs());
            assert!((k.sup_abs() - closed).abs() < 1e-6, "ω = {omega}");
        }
        let zero = Kernel::tabulated(Table::new(vec![vec![0.0; 3]; 3]).unwrap());
        assert_eq!(zero.sup_abs(), 0.0);
    }

    fn dense_variation(k: &Kernel, s: f64) -> f64 {
        let n = 20_000;
        (0..n)
            .map(|i| {
                let a = k.value(i as f64 / n as f64, s);
                let b = k.value((i + 1) as f64 / n as f64, s);
                (b - a).abs()
            })
            .sum()
    }

    #[test]
    fn t_variation_exact() {
        let d = Kernel::dirichlet();
        assert_eq!(d.t_variation(0.5).unwrap(), 0.5);
        for i in 0..=10 {
            let s = i as f64 / 10.0;
            let v = d.t_variation(s).unwrap();
            assert!(v <= 1.0);
            assert!((v - dense_variation(&d, s)).abs() < 1e-12);
        }
        for omega in [PI / 2.0, 1.5 * PI, 5.0, 9.0] {
            let k = Kernel::periodic(omega).unwrap();
            for i in 0..=10 {
                let s = i as f64 / 10.0;
                let v = k.t_variation(s).unwrap();
                assert!((v - dense_variation(&k, s)).abs() < 1e-7, "ω = {omega}, s = {s}");
                assert!(v <= k.majorant().eval(s) + 1e-12);
            }
        }
        let flat = Kernel::tabulated(Table::new(vec![vec![1.0, 2.0], vec![1.0, 2.0]]).unwrap());
        assert_eq!(flat.t_variation(0.3).unwrap(), 0.0);
    }

    #[test]
    fn dirichlet_is_lipschitz_in_t() {
        let d = Kernel::dirichlet();
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..100_000 {
            let (t, tau, s): (f64, f64, f64) = (rng.gen(), rng.gen(), rng.gen());
            assert!((d.value(t, s) - d.value(tau, s)).abs() <= (t - tau).abs());
        }
    }

    #[test]
    fn continuity_modulus_bounds() {
        let one = GridFunction::constant(64, 1.0).unwrap();
        let d = Kernel::dirichlet();
        assert_eq!(d.continuity_modulus(&one, 0.3, 0.0).unwrap(), 0.0);
        for delta in [1e-1, 1e-2, 1e-3] {
            assert!(d.continuity_modulus(&one, 0.3, delta).unwrap() <= delta + 1e-12);
        }
        let k = Kernel::periodic(1.5 * PI).unwrap();
        assert!((k.lipschitz_t() - 1.0 / (2.0 * (0.75 * PI).sin())).abs() < 1e-15);
        let delta = 1e-3;
        let v = k.continuity_modulus(&one, 0.5, delta).unwrap();
        assert!(v <= k.lipschitz_t() * delta + 1e-12);
        // dense sampling of the t-derivative
        let h = 1e-6;
        let mut slope = 0.0_f64;
        for i in 0..=1000 {
            let t = (i as f64 / 1000.0).clamp(h, 1.0 - h);
            slope = slope.max(((k.value(t + h, 0.0) - k.value(t - h, 0.0)) / (2.0 * h)).abs());
        }
        assert!((slope - k.lipschitz_t()).abs() < 1e-6);
    }

    #[test]
    fn bounding_constants() {
        let full = Domain::full();
        for (omega, expected) in [
            (1.5 * PI, 2.0 * 2f64.sqrt() / (3.0 * PI)),
            (PI / 2.0, 2.0 * 2f64.sqrt() / PI),
        ] {
            let b = Kernel::periodic(omega).unwrap().build_bounding(&full, 64).unwrap();
            assert!((b.c - expected).abs() < 1e-6, "ω = {omega}");
            assert_eq!(b.verified_nodes, 65);
            assert!(b.eta2 > 0.0);
        }
        let err = Kernel::dirichlet().build_bounding(&full, 64).unwrap_err();
        assert!(matches!(err, Error::KernelRejected(msg) if msg.contains("s = 0")));
    }

    #[test]
    fn csv_tables() {
        let t = Table::from_csv("0,1\n2,3\n\n").unwrap();
        let k = Kernel::tabulated(t);
        assert!((k.eval(0.5, 0.5).unwrap() - 1.5).abs() < 1e-15);
        assert!(Table::from_csv("0,1\n2").is_err());
        assert!(Table::from_csv("0,x\n2,3").is_err());
        assert!(Table::from_csv("0,NaN\n2,3").is_err());
    }
}
