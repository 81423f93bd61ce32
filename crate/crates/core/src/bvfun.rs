//! Bounded-variation functions on `[0, 1]`.
//!
//! A [`BvFunction`] is a piecewise cubic with an explicit list of jumps.
//! Pieces live on `[t_i, t_{i+1})` (the last one is closed) and a jump of
//! height `h` at `a` adds `h` on `[a, 1]`, so `χ_{[a,1]}(a) = 1`. Both jumps
//! and mismatched piece endpoints are genuine discontinuities and are counted
//! by [`BvFunction::variation`].
//!
//! Variation, suprema and oscillation are computed exactly from the monotone
//! runs of each polynomial piece (roots of the derivative), not by sampling.

use std::ops::{Add, Mul, Neg, Sub};

use crate::error::{Error, Result};
use crate::quadrature;

/// Tolerance used when deciding that piece endpoints or jumps cancel.
pub const CONTINUITY_TOL: f64 = 1e-12;

/// A cubic `c0 + c1 s + c2 s² + c3 s³`.
///
/// Inside a [`BvFunction`] the variable is local, `s = t − tᵢ` for the piece
/// starting at `tᵢ`; this keeps interpolants on fine grids well conditioned.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Poly(pub [f64; 4]);

impl Poly {
    /// `s ↦ p(s + delta)`.
    pub fn shifted(&self, delta: f64) -> Poly {
        let mut c = self.0;
        if delta == 0.0 {
            return Poly(c);
        }
        for k in 0..3 {
            for j in (k..3).rev() {
                c[j] += delta * c[j + 1];
            }
        }
        Poly(c)
    }

    pub fn eval(&self, t: f64) -> f64 {
        let c = &self.0;
        ((c[3] * t + c[2]) * t + c[1]) * t + c[0]
    }

    pub fn derivative(&self) -> Poly {
        let c = &self.0;
        Poly([c[1], 2.0 * c[2], 3.0 * c[3], 0.0])
    }

    fn scaled(&self, s: f64) -> Poly {
        Poly(self.0.map(|c| c * s))
    }

    fn plus(&self, other: &Poly) -> Poly {
        let mut c = self.0;
        for (a, b) in c.iter_mut().zip(other.0.iter()) {
            *a += b;
        }
        Poly(c)
    }

    /// Roots of the derivative strictly inside `(a, b)`, sorted.
    pub fn critical_points(&self, a: f64, b: f64) -> Vec<f64> {
        let qa = 3.0 * self.0[3];
        let qb = 2.0 * self.0[2];
        let qc = self.0[1];
        let mut roots = Vec::with_capacity(2);
        if qa == 0.0 {
            if qb != 0.0 {
                roots.push(-qc / qb);
            }
        } else {
            let disc = qb * qb - 4.0 * qa * qc;
            if disc >= 0.0 {
                let q = -0.5 * (qb + qb.signum() * disc.sqrt());
                if q != 0.0 {
                    roots.push(q / qa);
                    roots.push(qc / q);
                } else {
                    // qb == 0 and disc == 0, so qc == 0 too: double root at 0.
                    roots.push(0.0);
                }
            }
        }
        roots.retain(|r| r.is_finite() && *r > a && *r < b);
        roots.sort_by(f64::total_cmp);
        roots.dedup();
        roots
    }

    /// Exact total variation of the polynomial over `[a, b]`.
    pub fn variation_on(&self, a: f64, b: f64) -> f64 {
        if b <= a {
            return 0.0;
        }
        let mut prev = self.eval(a);
        let mut total = 0.0;
        for x in self.critical_points(a, b).into_iter().chain(std::iter::once(b)) {
            let v = self.eval(x);
            total += (v - prev).abs();
            prev = v;
        }
        total
    }
}

/// One stretch `[a, b)` on which the function is `poly + offset`.
#[derive(Debug, Clone, Copy)]
struct Segment {
    a: f64,
    b: f64,
    origin: f64,
    poly: Poly,
    offset: f64,
}

impl Segment {
    fn value(&self, t: f64) -> f64 {
        self.poly.eval(t - self.origin) + self.offset
    }

    fn start_value(&self) -> f64 {
        self.value(self.a)
    }

    fn left_limit(&self) -> f64 {
        self.value(self.b)
    }

    fn variation(&self) -> f64 {
        self.poly.variation_on(self.a - self.origin, self.b - self.origin)
    }

    /// Values at `a`, interior critical points and the left limit at `b`.
    fn candidates(&self) -> impl Iterator<Item = f64> + '_ {
        std::iter::once(self.start_value())
            .chain(
                self.poly
                    .critical_points(self.a - self.origin, self.b - self.origin)
                    .into_iter()
                    .map(move |s| self.poly.eval(s) + self.offset),
            )
            .chain(std::iter::once(self.left_limit()))
    }
}

/// A function of bounded variation on `[0, 1]`: cubic pieces plus jumps.
#[derive(Debug, Clone, PartialEq)]
pub struct BvFunction {
    breakpoints: Vec<f64>,
    pieces: Vec<Poly>,
    jumps: Vec<(f64, f64)>,
}

fn check_unit(t: f64) -> Result<()> {
    if (0.0..=1.0).contains(&t) {
        Ok(())
    } else {
        Err(Error::OutOfRange(t))
    }
}

fn check_sub(lo: f64, hi: f64) -> Result<()> {
    if !(lo.is_finite() && hi.is_finite()) || lo > hi || lo < 0.0 || hi > 1.0 {
        return Err(Error::InvalidInterval { lo, hi });
    }
    Ok(())
}

fn merge_jumps(mut jumps: Vec<(f64, f64)>) -> Vec<(f64, f64)> {
    jumps.sort_by(|a, b| a.0.total_cmp(&b.0));
    let mut merged: Vec<(f64, f64)> = Vec::with_capacity(jumps.len());
    for (loc, h) in jumps {
        match merged.last_mut() {
            Some(last) if last.0 == loc => last.1 += h,
            _ => merged.push((loc, h)),
        }
    }
    merged.retain(|&(_, h)| h != 0.0);
    merged
}

impl BvFunction {
    /// Builds a function from breakpoints, coefficient rows in absolute `t`
    /// (at most four coefficients each, lowest degree first) and
    /// `(location, height)` jumps.
    pub fn new(breakpoints: Vec<f64>, pieces: Vec<Vec<f64>>, jumps: Vec<(f64, f64)>) -> Result<Self> {
        if breakpoints.len() < 2 {
            return Err(Error::MalformedFunction("need at least two breakpoints".into()));
        }
        if breakpoints[0] != 0.0 || *breakpoints.last().unwrap() != 1.0 {
            return Err(Error::MalformedFunction("breakpoints must start at 0 and end at 1".into()));
        }
        if breakpoints.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::MalformedFunction("breakpoints must be strictly increasing".into()));
        }
        if pieces.len() + 1 != breakpoints.len() {
            return Err(Error::MalformedFunction(format!(
                "{} breakpoints need {} pieces, got {}",
                breakpoints.len(),
                breakpoints.len() - 1,
                pieces.len()
            )));
        }
        let mut polys = Vec::with_capacity(pieces.len());
        for (row, &origin) in pieces.into_iter().zip(&breakpoints) {
            if row.len() > 4 {
                return Err(Error::MalformedFunction("piece degree exceeds 3".into()));
            }
            if row.iter().any(|c| !c.is_finite()) {
                return Err(Error::MalformedFunction("non-finite coefficient".into()));
            }
            let mut c = [0.0; 4];
            c[..row.len()].copy_from_slice(&row);
            polys.push(Poly(c).shifted(origin));
        }
        for &(loc, h) in &jumps {
            if !(0.0..=1.0).contains(&loc) || !h.is_finite() {
                return Err(Error::MalformedFunction(format!("bad jump ({loc}, {h})")));
            }
        }
        Ok(Self {
            breakpoints,
            pieces: polys,
            jumps: merge_jumps(jumps),
        })
    }

    fn from_parts(breakpoints: Vec<f64>, pieces: Vec<Poly>, jumps: Vec<(f64, f64)>) -> Self {
        Self {
            breakpoints,
            pieces,
            jumps: merge_jumps(jumps),
        }
    }

    pub fn constant(c: f64) -> Self {
        Self::from_parts(vec![0.0, 1.0], vec![Poly([c, 0.0, 0.0, 0.0])], vec![])
    }

    /// The constant function `e ≡ 1`.
    pub fn one() -> Self {
        Self::constant(1.0)
    }

    pub fn zero() -> Self {
        Self::constant(0.0)
    }

    /// A single cubic on `[0, 1]`.
    pub fn polynomial(coeffs: &[f64]) -> Result<Self> {
        Self::new(vec![0.0, 1.0], vec![coeffs.to_vec()], vec![])
    }

    /// The identity `t ↦ t`.
    pub fn identity() -> Self {
        Self::from_parts(vec![0.0, 1.0], vec![Poly([0.0, 1.0, 0.0, 0.0])], vec![])
    }

    /// The indicator `χ_{[a,1]}`.
    pub fn indicator(a: f64) -> Result<Self> {
        check_unit(a)?;
        if a == 0.0 {
            return Ok(Self::one());
        }
        Ok(Self::from_parts(vec![0.0, 1.0], vec![Poly::default()], vec![(a, 1.0)]))
    }

    /// Step function `Σ hᵢ χ_{[aᵢ,1]}`.
    pub fn steps(jumps: &[(f64, f64)]) -> Result<Self> {
        Self::new(vec![0.0, 1.0], vec![vec![0.0]], jumps.to_vec())
    }

    /// The continuous piecewise-linear interpolant of `points`.
    pub fn polyline(points: &[(f64, f64)]) -> Result<Self> {
        if points.len() < 2 {
            return Err(Error::MalformedFunction("polyline needs at least two points".into()));
        }
        if points[0].0 != 0.0 || points.last().unwrap().0 != 1.0 {
            return Err(Error::MalformedFunction("polyline must span [0, 1]".into()));
        }
        if points.windows(2).any(|w| !(w[1].0 > w[0].0)) {
            return Err(Error::MalformedFunction(
                "polyline abscissae must be strictly increasing".into(),
            ));
        }
        let breakpoints = points.iter().map(|p| p.0).collect();
        let pieces = points
            .windows(2)
            .map(|w| {
                let slope = (w[1].1 - w[0].1) / (w[1].0 - w[0].0);
                Poly([w[0].1, slope, 0.0, 0.0])
            })
            .collect();
        Ok(Self::from_parts(breakpoints, pieces, vec![]))
    }

    pub fn breakpoints(&self) -> &[f64] {
        &self.breakpoints
    }

    /// Pieces in local coordinates `s = t − tᵢ`.
    pub fn pieces(&self) -> &[Poly] {
        &self.pieces
    }

    /// Coefficient rows of every piece in absolute `t`.
    pub fn absolute_coefficients(&self) -> Vec<[f64; 4]> {
        self.pieces
            .iter()
            .zip(&self.breakpoints)
            .map(|(p, &origin)| p.shifted(-origin).0)
            .collect()
    }

    fn piece_value(&self, i: usize, t: f64) -> f64 {
        self.pieces[i].eval(t - self.breakpoints[i])
    }

    /// Explicit jumps, merged by location and sorted.
    pub fn jumps(&self) -> &[(f64, f64)] {
        &self.jumps
    }

    fn piece_index(&self, t: f64) -> usize {
        let idx = self.breakpoints.partition_point(|&b| b <= t);
        idx.saturating_sub(1).min(self.pieces.len() - 1)
    }

    fn piece_index_left(&self, t: f64) -> usize {
        let idx = self.breakpoints.partition_point(|&b| b < t);
        idx.saturating_sub(1).min(self.pieces.len() - 1)
    }

    fn jump_sum(&self, t: f64) -> f64 {
        self.jumps.iter().take_while(|j| j.0 <= t).map(|j| j.1).sum()
    }

    fn jump_sum_left(&self, t: f64) -> f64 {
        self.jumps.iter().take_while(|j| j.0 < t).map(|j| j.1).sum()
    }

    /// Value at `t`; arguments are clamped into `[0, 1]`.
    pub fn eval(&self, t: f64) -> f64 {
        let t = t.clamp(0.0, 1.0);
        self.piece_value(self.piece_index(t), t) + self.jump_sum(t)
    }

    /// Checked evaluation.
    pub fn try_eval(&self, t: f64) -> Result<f64> {
        check_unit(t)?;
        Ok(self.eval(t))
    }

    /// `lim_{s→t⁻} f(s)` for `t ∈ (0, 1]`; equals `f(0)` at zero.
    pub fn left_limit(&self, t: f64) -> f64 {
        let t = t.clamp(0.0, 1.0);
        if t == 0.0 {
            return self.eval(0.0);
        }
        self.piece_value(self.piece_index_left(t), t) + self.jump_sum_left(t)
    }

    /// Derivative of the smooth part at `t` (jumps contribute nothing).
    pub fn derivative_at(&self, t: f64) -> f64 {
        let t = t.clamp(0.0, 1.0);
        let i = self.piece_index(t);
        self.pieces[i].derivative().eval(t - self.breakpoints[i])
    }

    fn segments(&self, lo: f64, hi: f64) -> Vec<Segment> {
        if hi <= lo {
            return Vec::new();
        }
        let mut cuts: Vec<f64> = self
            .breakpoints
            .iter()
            .copied()
            .chain(self.jumps.iter().map(|j| j.0))
            .filter(|&c| c > lo && c < hi)
            .collect();
        cuts.sort_by(f64::total_cmp);
        cuts.dedup();
        let mut out = Vec::with_capacity(cuts.len() + 1);
        let mut a = lo;
        for b in cuts.into_iter().chain(std::iter::once(hi)) {
            let i = self.piece_index(a);
            out.push(Segment {
                a,
                b,
                origin: self.breakpoints[i],
                poly: self.pieces[i],
                offset: self.jump_sum(a),
            });
            a = b;
        }
        out
    }

    /// Union of the structural points of two functions (breakpoints and jump
    /// locations), used to split integrals into smooth stretches.
    pub(crate) fn structure_points(&self) -> Vec<f64> {
        self.breakpoints
            .iter()
            .copied()
            .chain(self.jumps.iter().map(|j| j.0))
            .collect()
    }

    /// Exact Jordan variation over `[lo, hi]`.
    pub fn variation(&self, lo: f64, hi: f64) -> Result<f64> {
        check_sub(lo, hi)?;
        let segs = self.segments(lo, hi);
        let mut total = 0.0;
        for (k, seg) in segs.iter().enumerate() {
            total += seg.variation();
            let next = match segs.get(k + 1) {
                Some(n) => n.start_value(),
                None => self.eval(hi),
            };
            total += (next - seg.left_limit()).abs();
        }
        Ok(total)
    }

    /// Variation over `[0, 1]`.
    pub fn total_variation(&self) -> f64 {
        self.variation(0.0, 1.0).expect("unit interval is valid")
    }

    /// `|f(0)| + var_{[0,1]} f`.
    pub fn bv_norm(&self) -> f64 {
        self.eval(0.0).abs() + self.total_variation()
    }

    fn range_on(&self, lo: f64, hi: f64) -> (f64, f64) {
        let end = self.eval(hi);
        let mut min = end;
        let mut max = end;
        for seg in self.segments(lo, hi) {
            for v in seg.candidates() {
                min = min.min(v);
                max = max.max(v);
            }
        }
        (min, max)
    }

    /// `sup |f|` over `[0, 1]`, exact up to root-finding rounding.
    pub fn sup_norm(&self) -> f64 {
        let (min, max) = self.range_on(0.0, 1.0);
        min.abs().max(max.abs())
    }

    /// `sup_{lo ≤ τ ≤ σ ≤ hi} |f(σ) − f(τ)|`.
    pub fn oscillation(&self, lo: f64, hi: f64) -> Result<f64> {
        check_sub(lo, hi)?;
        let (min, max) = self.range_on(lo, hi);
        Ok(max - min)
    }

    /// Exact integral of `f` over `[lo, hi]`.
    pub fn integral(&self, lo: f64, hi: f64) -> Result<f64> {
        check_sub(lo, hi)?;
        Ok(self
            .segments(lo, hi)
            .iter()
            .map(|s| quadrature::gauss_legendre(|t| s.value(t), s.a, s.b))
            .sum())
    }

    /// All discontinuities in `(0, 1]` as `(location, f(loc) − f(loc⁻))`,
    /// including mismatched piece endpoints.
    pub fn discontinuities(&self) -> Vec<(f64, f64)> {
        let segs = self.segments(0.0, 1.0);
        let mut out = Vec::new();
        for (k, seg) in segs.iter().enumerate() {
            let next = match segs.get(k + 1) {
                Some(n) => n.start_value(),
                None => self.eval(1.0),
            };
            let d = next - seg.left_limit();
            if d != 0.0 {
                out.push((seg.b, d));
            }
        }
        out
    }

    /// True when every discontinuity is below [`CONTINUITY_TOL`] (relative to
    /// the function's scale).
    pub fn is_continuous(&self) -> bool {
        let scale = self.sup_norm().max(1.0);
        self.discontinuities()
            .iter()
            .all(|&(_, d)| d.abs() <= CONTINUITY_TOL * scale)
    }

    /// The same function with an additional breakpoint at `t`.
    pub fn refine_at(&self, t: f64) -> Result<Self> {
        check_unit(t)?;
        if self.breakpoints.contains(&t) {
            return Ok(self.clone());
        }
        let i = self.piece_index(t);
        let mut breakpoints = self.breakpoints.clone();
        let mut pieces = self.pieces.clone();
        breakpoints.insert(i + 1, t);
        pieces.insert(i + 1, self.pieces[i].shifted(t - self.breakpoints[i]));
        Ok(Self::from_parts(breakpoints, pieces, self.jumps.clone()))
    }

    /// `Σ cᵢ fᵢ` over a common refinement of the breakpoints.
    pub fn linear_combination(terms: &[(f64, &BvFunction)]) -> BvFunction {
        if terms.is_empty() {
            return BvFunction::zero();
        }
        let mut breakpoints: Vec<f64> = terms
            .iter()
            .flat_map(|(_, f)| f.breakpoints.iter().copied())
            .collect();
        breakpoints.sort_by(f64::total_cmp);
        breakpoints.dedup();
        let pieces = breakpoints[..breakpoints.len() - 1]
            .iter()
            .map(|&a| {
                terms.iter().fold(Poly::default(), |acc, (c, f)| {
                    let i = f.piece_index(a);
                    acc.plus(&f.pieces[i].shifted(a - f.breakpoints[i]).scaled(*c))
                })
            })
            .collect();
        let jumps = terms
            .iter()
            .flat_map(|(c, f)| f.jumps.iter().map(move |&(loc, h)| (loc, c * h)))
            .collect();
        BvFunction::from_parts(breakpoints, pieces, jumps)
    }

    pub fn scale(&self, s: f64) -> BvFunction {
        BvFunction::linear_combination(&[(s, self)])
    }
}

impl Add for &BvFunction {
    type Output = BvFunction;
    fn add(self, rhs: &BvFunction) -> BvFunction {
        BvFunction::linear_combination(&[(1.0, self), (1.0, rhs)])
    }
}

impl Sub for &BvFunction {
    type Output = BvFunction;
    fn sub(self, rhs: &BvFunction) -> BvFunction {
        BvFunction::linear_combination(&[(1.0, self), (-1.0, rhs)])
    }
}

impl Mul<f64> for &BvFunction {
    type Output = BvFunction;
    fn mul(self, rhs: f64) -> BvFunction {
        self.scale(rhs)
    }
}

impl Neg for &BvFunction {
    type Output = BvFunction;
    fn neg(self) -> BvFunction {
        self.scale(-1.0)
    }
}

/// Values at the uniform nodes `tᵢ = i/n`, `i = 0..=n`.
#[derive(Debug, Clone, PartialEq)]
pub struct GridFunction {
    values: Vec<f64>,
}

impl GridFunction {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if values.len() < 3 {
            return Err(Error::MalformedFunction("grid needs n ≥ 2 intervals".into()));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::MalformedFunction("non-finite grid value".into()));
        }
        Ok(Self { values })
    }

    pub fn from_fn(n: usize, f: impl Fn(f64) -> f64) -> Result<Self> {
        Self::new((0..=n).map(|i| f(i as f64 / n as f64)).collect())
    }

    pub fn zeros(n: usize) -> Result<Self> {
        Self::new(vec![0.0; n + 1])
    }

    pub fn constant(n: usize, c: f64) -> Result<Self> {
        Self::new(vec![c; n + 1])
    }

    /// Number of intervals.
    pub fn n(&self) -> usize {
        self.values.len() - 1
    }

    pub fn node(&self, i: usize) -> f64 {
        i as f64 / self.n() as f64
    }

    pub fn nodes(&self) -> impl Iterator<Item = f64> + '_ {
        (0..=self.n()).map(move |i| self.node(i))
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    /// Grid maximum of `|x|`.
    pub fn sup_norm(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// `|x₀| + Σ |xᵢ − xᵢ₋₁|`; a lower bound for the BV norm of any function
    /// sampled on the grid.
    pub fn discrete_bv_norm(&self) -> f64 {
        self.values[0].abs() + self.values.windows(2).map(|w| (w[1] - w[0]).abs()).sum::<f64>()
    }

    pub fn map(&self, f: impl Fn(f64, f64) -> f64) -> GridFunction {
        let n = self.n() as f64;
        GridFunction {
            values: self
                .values
                .iter()
                .enumerate()
                .map(|(i, &v)| f(i as f64 / n, v))
                .collect(),
        }
    }

    pub fn scale(&self, s: f64) -> GridFunction {
        self.map(|_, v| s * v)
    }

    pub fn axpy(&self, a: f64, other: &GridFunction) -> Result<GridFunction> {
        self.check_conform(other)?;
        Ok(GridFunction {
            values: self
                .values
                .iter()
                .zip(&other.values)
                .map(|(x, y)| x + a * y)
                .collect(),
        })
    }

    pub fn check_conform(&self, other: &GridFunction) -> Result<()> {
        if self.n() != other.n() {
            return Err(Error::GridMismatch {
                expected: self.n(),
                got: other.n(),
            });
        }
        Ok(())
    }

    /// `max |x − y|` over nodes.
    pub fn sup_distance(&self, other: &GridFunction) -> Result<f64> {
        self.check_conform(other)?;
        Ok(self
            .values
            .iter()
            .zip(&other.values)
            .fold(0.0, |m, (x, y)| m.max((x - y).abs())))
    }

    /// Continuous piecewise-cubic interpolant: each interval uses the four
    /// nearest nodes (three when `n = 2`), so cubic data is reproduced exactly.
    pub fn interpolant(&self) -> BvFunction {
        let n = self.n();
        let pieces = (0..n)
            .map(|j| {
                let origin = self.node(j);
                let nodes: Vec<(f64, f64)> = interp_window(n, j)
                    .map(|i| (self.node(i) - origin, self.values[i]))
                    .collect();
                newton_poly(&nodes)
            })
            .collect();
        let breakpoints = self.nodes().collect();
        BvFunction::from_parts(breakpoints, pieces, vec![])
    }

    /// Evaluation through [`GridFunction::interpolant`] restricted to the
    /// relevant interval.
    pub fn eval(&self, t: f64) -> f64 {
        let n = self.n();
        let t = t.clamp(0.0, 1.0);
        let j = ((t * n as f64).floor() as usize).min(n - 1);
        let nodes: Vec<(f64, f64)> = interp_window(n, j)
            .map(|i| (self.node(i), self.values[i]))
            .collect();
        lagrange_eval(&nodes, t)
    }
}

/// Node indices used by the interpolant on interval `cell` of an `n`-interval
/// grid: the four nearest nodes, or all three when `n = 2`.
pub(crate) fn interp_window(n: usize, cell: usize) -> std::ops::Range<usize> {
    let width = n.min(3) + 1;
    let start = cell.saturating_sub(1).min(n + 1 - width);
    start..start + width
}

fn lagrange_eval(nodes: &[(f64, f64)], t: f64) -> f64 {
    nodes
        .iter()
        .enumerate()
        .map(|(k, &(tk, yk))| {
            let basis: f64 = nodes
                .iter()
                .enumerate()
                .filter(|(m, _)| *m != k)
                .map(|(_, &(tm, _))| (t - tm) / (tk - tm))
                .product();
            yk * basis
        })
        .sum()
}

/// Interpolating polynomial through `nodes` (at most four), expanded from
/// the Newton form so that local coordinates stay well conditioned.
fn newton_poly(nodes: &[(f64, f64)]) -> Poly {
    let m = nodes.len();
    let mut dd: Vec<f64> = nodes.iter().map(|p| p.1).collect();
    for level in 1..m {
        for i in (level..m).rev() {
            dd[i] = (dd[i] - dd[i - 1]) / (nodes[i].0 - nodes[i - level].0);
        }
    }
    // Horner on the Newton form: p = dd0 + (s - s0)(dd1 + (s - s1)(dd2 + ...)).
    let mut acc = [0.0; 4];
    acc[0] = dd[m - 1];
    for k in (0..m - 1).rev() {
        let root = nodes[k].0;
        let mut next = [0.0; 4];
        for d in 0..3 {
            next[d + 1] += acc[d];
            next[d] -= root * acc[d];
        }
        next[0] += dd[k];
        acc = next;
    }
    Poly(acc)
}

/// The set `Ω₀ ⊆ [0, 1]` as a finite union of disjoint closed intervals.
#[derive(Debug, Clone, PartialEq)]
pub struct Domain {
    intervals: Vec<(f64, f64)>,
}

impl Domain {
    pub fn new(mut intervals: Vec<(f64, f64)>) -> Result<Self> {
        if intervals.is_empty() {
            return Err(Error::MalformedDomain("no intervals".into()));
        }
        intervals.sort_by(|a, b| a.0.total_cmp(&b.0));
        for &(lo, hi) in &intervals {
            if !(lo >= 0.0 && hi <= 1.0 && hi > lo) {
                return Err(Error::MalformedDomain(format!("bad interval [{lo}, {hi}]")));
            }
        }
        if intervals.windows(2).any(|w| w[1].0 <= w[0].1) {
            return Err(Error::MalformedDomain("intervals overlap or touch".into()));
        }
        Ok(Self { intervals })
    }

    /// `Ω₀ = [0, 1]`.
    pub fn full() -> Self {
        Self {
            intervals: vec![(0.0, 1.0)],
        }
    }

    pub fn intervals(&self) -> &[(f64, f64)] {
        &self.intervals
    }

    /// `μ(Ω₀)`.
    pub fn measure(&self) -> f64 {
        self.intervals.iter().map(|(lo, hi)| hi - lo).sum()
    }

    pub fn contains(&self, t: f64) -> bool {
        self.intervals.iter().any(|&(lo, hi)| t >= lo && t <= hi)
    }

    /// Integral over `Ω₀` of `g(x̃(t))`, where `x̃` is the grid interpolant,
    /// by 5-point Gauss-Legendre on every grid cell.
    pub(crate) fn integrate_grid(&self, x: &GridFunction, g: impl Fn(f64) -> f64) -> f64 {
        let interp = x.interpolant();
        let n = x.n() as f64;
        let mut total = 0.0;
        for &(lo, hi) in &self.intervals {
            let first = (lo * n).floor() as usize + 1;
            let mut a = lo;
            let mut i = first;
            loop {
                let b = (i as f64 / n).min(hi);
                if b > a {
                    total += quadrature::gauss_legendre(|t| g(interp.eval(t)), a, b);
                }
                if b >= hi {
                    break;
                }
                a = b;
                i += 1;
            }
        }
        total
    }
}

/// `(∫_{Ω₀} |x|^p dt)^{1/p}` for `p ∈ [1, ∞)`.
pub fn lp_seminorm(x: &GridFunction, domain: &Domain, p: f64) -> Result<f64> {
    if !(p >= 1.0 && p.is_finite()) {
        return Err(Error::InvalidParameter(format!("p must lie in [1, ∞), got {p}")));
    }
    let integral = domain.integrate_grid(x, |v| v.abs().powf(p));
    Ok(integral.powf(1.0 / p))
}

/// Outcome of testing membership in the cone `{x : ∫_{Ω₀} x ≥ c‖x‖_∞}`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConeCheck {
    /// `∫_{Ω₀} x − c‖x‖_∞`.
    pub margin: f64,
    pub inside: bool,
}

pub fn cone_check(x: &GridFunction, domain: &Domain, c: f64) -> Result<ConeCheck> {
    if !(c > 0.0) {
        return Err(Error::InvalidParameter(format!("cone constant must be positive, got {c}")));
    }
    let sup = x.sup_norm();
    let margin = domain.integrate_grid(x, |v| v) - c * sup;
    Ok(ConeCheck {
        margin,
        inside: margin >= -1e-12 * sup.max(1.0),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol
    }

    #[test]
    fn indicator_is_right_closed() {
        let chi = BvFunction::indicator(0.3).unwrap();
        assert_eq!(chi.eval(0.3), 1.0);
        assert_eq!(chi.eval(0.2999), 0.0);
        assert_eq!(chi.left_limit(0.3), 0.0);
        assert_eq!(chi.total_variation(), 1.0);
    }

    #[test]
    fn square_has_unit_variation() {
        let f = BvFunction::polynomial(&[0.0, 0.0, 1.0]).unwrap();
        assert!(close(f.total_variation(), 1.0, 1e-15));
        assert!(close(f.bv_norm(), 1.0, 1e-15));
    }

    #[test]
    fn example_one_constant() {
        let (a, b, c) = (0.2, 0.6, 0.8);
        let big_a = BvFunction::steps(&[(a, 0.2), (c, 0.2)]).unwrap();
        let big_b = BvFunction::steps(&[(b, 0.2), (c, 0.2)]).unwrap();
        let diff = &big_a - &big_b;
        let v = big_a.total_variation() + diff.total_variation();
        assert!(close(v, 0.8, 4.0 * f64::EPSILON));
    }

    #[test]
    fn jump_norms() {
        let f = BvFunction::steps(&[(0.7, 2.0), (0.2, -2.0)]).unwrap();
        assert_eq!(f.bv_norm(), 4.0);
        assert_eq!(f.sup_norm(), 2.0);
        assert_eq!(f.eval(0.5), -2.0);
    }

    #[test]
    fn quadratic_sup_norm() {
        let f = BvFunction::polynomial(&[-24.0 / 25.0, 9.0 / 5.0, -1.0]).unwrap();
        assert!(close(f.sup_norm(), 24.0 / 25.0, 1e-15));
    }

    #[test]
    fn polyline_witness() {
        let x = BvFunction::polyline(&[(0.0, 0.0), (0.2, 0.0), (0.8, 1.0), (1.0, 1.0)]).unwrap();
        assert!(close(x.bv_norm(), 1.0, 1e-14));
        assert!(x.is_continuous());
        let id = BvFunction::polyline(&[(0.0, 0.0), (1.0, 1.0)]).unwrap();
        assert!(close(id.eval(0.37), 0.37, 1e-16));
        let e = BvFunction::polyline(&[(0.0, 1.0), (1.0, 1.0)]).unwrap();
        assert_eq!(e, BvFunction::one());
    }

    #[test]
    fn polyline_rejects_bad_abscissae() {
        assert!(BvFunction::polyline(&[(0.0, 0.0), (0.5, 1.0), (0.5, 2.0), (1.0, 0.0)]).is_err());
        assert!(BvFunction::polyline(&[(0.0, 0.0), (0.6, 1.0), (0.4, 2.0), (1.0, 0.0)]).is_err());
        assert!(BvFunction::polyline(&[(0.1, 0.0), (1.0, 1.0)]).is_err());
    }

    #[test]
    fn reversed_interval_is_rejected() {
        let f = BvFunction::one();
        assert!(matches!(f.variation(0.6, 0.4), Err(Error::InvalidInterval { .. })));
    }

    #[test]
    fn oscillation_of_harmonic_steps() {
        // A(t) = 1/n on (1/(n+1), 1/n), zero at the points 1/n; truncated.
        let a = harmonic_steps(100);
        assert!(close(a.oscillation(0.5, 1.0).unwrap(), 1.0, 1e-15));
        assert!(a.oscillation(0.5, 1.0).unwrap() <= a.variation(0.5, 1.0).unwrap());
    }

    /// Truncation of `A(t) = 1/n` on `(1/(n+1), 1/n)`; the right-closed
    /// convention puts the level on `[1/(n+1), 1/n)`, which changes values
    /// only at the points `1/(n+1)`.
    fn harmonic_steps(terms: usize) -> BvFunction {
        let mut jumps = Vec::new();
        for n in 1..=terms {
            let h = 1.0 / n as f64;
            jumps.push((1.0 / (n as f64 + 1.0), h));
            jumps.push((h, -h));
        }
        BvFunction::steps(&jumps).unwrap()
    }

    #[test]
    fn linear_combination_merges_breakpoints() {
        let f = BvFunction::polyline(&[(0.0, 0.0), (0.5, 1.0), (1.0, 0.0)]).unwrap();
        let g = BvFunction::polyline(&[(0.0, 1.0), (0.25, 0.0), (1.0, 0.0)]).unwrap();
        let h = &f + &g;
        for t in [0.0, 0.1, 0.25, 0.4, 0.5, 0.77, 1.0] {
            assert!(close(h.eval(t), f.eval(t) + g.eval(t), 1e-15));
        }
    }

    #[test]
    fn interpolant_reproduces_cubics() {
        let p = |t: f64| 1.0 - 2.0 * t + 0.5 * t * t + 3.0 * t * t * t;
        let x = GridFunction::from_fn(16, p).unwrap();
        let interp = x.interpolant();
        for k in 0..=100 {
            let t = k as f64 / 100.0;
            assert!(close(interp.eval(t), p(t), 1e-13));
            assert!(close(x.eval(t), p(t), 1e-13));
        }
        assert!(interp.is_continuous());
    }

    #[test]
    fn lp_seminorm_values() {
        let d = Domain::full();
        let x = GridFunction::from_fn(32, |t| t).unwrap();
        assert!(close(lp_seminorm(&x, &d, 2.0).unwrap(), 1.0 / 3f64.sqrt(), 1e-14));
        let zero = GridFunction::zeros(8).unwrap();
        assert_eq!(lp_seminorm(&zero, &d, 1.0).unwrap(), 0.0);
        assert!(lp_seminorm(&x, &d, 0.5).is_err());

        let d = Domain::new(vec![(0.1, 0.35), (0.6, 0.9)]).unwrap();
        let (m, p) = (0.7, 3.0);
        let x = GridFunction::constant(64, m * d.measure().powf(-1.0 / p)).unwrap();
        assert!(close(lp_seminorm(&x, &d, p).unwrap(), m, 1e-13));
    }

    #[test]
    fn cone_membership() {
        let d = Domain::full();
        let one = GridFunction::constant(16, 1.0).unwrap();
        let r = cone_check(&one, &d, 0.5).unwrap();
        assert!(r.inside && close(r.margin, 0.5, 1e-14));
        let centered = GridFunction::from_fn(16, |t| t - 0.5).unwrap();
        assert!(!cone_check(&centered, &d, 1e-3).unwrap().inside);

        let d = Domain::new(vec![(0.0, 0.3), (0.5, 0.9)]).unwrap();
        let (m, p) = (0.4, 2.0);
        let x = GridFunction::constant(40, m * d.measure().powf(-1.0 / p)).unwrap();
        assert!(cone_check(&x, &d, d.measure()).unwrap().inside);
    }

    #[test]
    fn domain_validation() {
        assert!(Domain::new(vec![(0.0, 0.5), (0.5, 1.0)]).is_err());
        assert!(Domain::new(vec![(0.2, 0.2)]).is_err());
        assert!(Domain::new(vec![]).is_err());
        let d = Domain::new(vec![(0.6, 0.9), (0.0, 0.25)]).unwrap();
        assert!(close(d.measure(), 0.55, 1e-15));
        assert_eq!(d.intervals()[0], (0.0, 0.25));
    }
}
