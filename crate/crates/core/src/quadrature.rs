//! Fixed quadrature rules shared by the kernel and operator modules.
//!
//! Two families are used: composite Simpson for integrands given as closures
//! on an interval, and node-run weights for Nyström discretizations where the
//! integrand is only known at uniform grid nodes.

/// Default number of Simpson intervals per smooth sub-interval.
pub const DEFAULT_INTERVALS: usize = 256;

const GL5_NODES: [f64; 5] = [
    -0.906_179_845_938_664,
    -0.538_469_310_105_683,
    0.0,
    0.538_469_310_105_683,
    0.906_179_845_938_664,
];
const GL5_WEIGHTS: [f64; 5] = [
    0.236_926_885_056_189_1,
    0.478_628_670_499_366_5,
    0.568_888_888_888_888_9,
    0.478_628_670_499_366_5,
    0.236_926_885_056_189_1,
];

/// Five-point Gauss-Legendre rule on `[a, b]`, exact for degree ≤ 9.
pub fn gauss_legendre<F: Fn(f64) -> f64>(f: F, a: f64, b: f64) -> f64 {
    if b <= a {
        return 0.0;
    }
    let mid = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    GL5_NODES
        .iter()
        .zip(GL5_WEIGHTS.iter())
        .map(|(&x, &w)| w * f(mid + half * x))
        .sum::<f64>()
        * half
}

/// Composite Simpson rule on `[a, b]` with `n` intervals (rounded up to even).
pub fn simpson<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, n: usize) -> f64 {
    if b <= a {
        return 0.0;
    }
    let n = (n.max(2) + 1) & !1;
    let h = (b - a) / n as f64;
    let mut acc = f(a) + f(b);
    for i in 1..n {
        let w = if i % 2 == 1 { 4.0 } else { 2.0 };
        acc += w * f(a + i as f64 * h);
    }
    acc * h / 3.0
}

/// Composite Simpson on `[a, b]` split at every point of `splits` lying
/// strictly inside; each piece gets `n` intervals.
pub fn simpson_split<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, splits: &[f64], n: usize) -> f64 {
    let mut cuts: Vec<f64> = splits.iter().copied().filter(|&s| s > a && s < b).collect();
    cuts.sort_by(f64::total_cmp);
    cuts.dedup();
    let mut lo = a;
    let mut total = 0.0;
    for hi in cuts.into_iter().chain(std::iter::once(b)) {
        total += simpson(&f, lo, hi, n);
        lo = hi;
    }
    total
}

/// Weights for integrating over a run of `m` uniform intervals of width `h`
/// using only the `m + 1` nodes of the run.
///
/// Composite Simpson when `m` is even; Simpson plus a closing 3/8 panel when
/// `m` is odd and at least 3; trapezoid for a single interval. The Simpson
/// and 3/8 panels are exact for cubics.
pub fn run_weights(m: usize, h: f64) -> Vec<f64> {
    let mut w = vec![0.0; m + 1];
    match m {
        0 => {}
        1 => {
            w[0] = 0.5 * h;
            w[1] = 0.5 * h;
        }
        _ => {
            let simpson_end = if m.is_multiple_of(2) { m } else { m - 3 };
            let mut i = 0;
            while i < simpson_end {
                w[i] += h / 3.0;
                w[i + 1] += 4.0 * h / 3.0;
                w[i + 2] += h / 3.0;
                i += 2;
            }
            if simpson_end < m {
                let c = 3.0 * h / 8.0;
                w[simpson_end] += c;
                w[simpson_end + 1] += 3.0 * c;
                w[simpson_end + 2] += 3.0 * c;
                w[simpson_end + 3] += c;
            }
        }
    }
    w
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gauss_legendre_is_exact_for_degree_nine() {
        let v = gauss_legendre(|x| x.powi(9) + x.powi(4), 0.0, 1.0);
        assert!((v - (0.1 + 0.2)).abs() < 1e-14);
    }

    #[test]
    fn simpson_exact_for_cubic() {
        let v = simpson(|x| 4.0 * x * x * x - x, 0.0, 2.0, 6);
        assert!((v - (16.0 - 2.0)).abs() < 1e-12);
    }

    #[test]
    fn run_weights_integrate_cubics_for_every_length() {
        for m in 2..12 {
            let h = 0.1;
            let w = run_weights(m, h);
            let exact = (m as f64 * h).powi(4) / 4.0;
            let approx: f64 = w
                .iter()
                .enumerate()
                .map(|(i, wi)| wi * (i as f64 * h).powi(3))
                .sum();
            assert!((approx - exact).abs() < 1e-13, "m = {m}");
        }
        let w = run_weights(1, 0.5);
        assert_eq!(w, vec![0.25, 0.25]);
        assert!(run_weights(0, 0.5) == vec![0.0]);
    }

    #[test]
    fn split_handles_kinks() {
        let v = simpson_split(|x: f64| (x - 0.3).abs(), 0.0, 1.0, &[0.3], 2);
        assert!((v - (0.045 + 0.245)).abs() < 1e-14);
    }
}
