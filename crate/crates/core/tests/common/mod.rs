//! Randomized property suites shared by the `properties` test target and the
//! acceptance binary.

#![allow(dead_code)]

use hammer_core::bvfun::BvFunction;
use hammer_core::bvp;
use hammer_core::operators::{LinearPerturbation, Nonlinearity};
use hammer_core::quadrature::{gauss_legendre, simpson};
use hammer_core::stieltjes::{dyadic_partition, rs_da, rs_dx, rs_sum};
use proptest::prelude::*;
use proptest::test_runner::{Config, TestCaseError, TestRunner};

/// Piecewise cubic with up to four interior breakpoints and up to three jumps.
pub fn bv_function() -> impl Strategy<Value = BvFunction> {
    (
        prop::collection::vec(0.02f64..0.98, 0..4),
        prop::collection::vec(prop::collection::vec(-2.0f64..2.0, 4), 5),
        prop::collection::vec((0.01f64..0.99, -1.0f64..1.0), 0..3),
        any::<bool>(),
    )
        .prop_map(|(mut cuts, coeffs, mut jumps, jump_at_cut)| {
            cuts.sort_by(f64::total_cmp);
            cuts.dedup_by(|a, b| (*a - *b).abs() < 1e-3);
            let mut bps = vec![0.0];
            bps.extend(cuts);
            bps.push(1.0);
            if jump_at_cut && bps.len() > 2 {
                jumps.push((bps[1], 0.5));
            }
            let pieces = coeffs.into_iter().take(bps.len() - 1).collect();
            BvFunction::new(bps, pieces, jumps).expect("valid random function")
        })
}

/// Continuous integrands: random cubics or random polylines.
pub fn continuous_function() -> impl Strategy<Value = BvFunction> {
    prop_oneof![
        prop::collection::vec(-2.0f64..2.0, 4)
            .prop_map(|c| BvFunction::polynomial(&c).expect("cubic")),
        (prop::collection::vec(0.02f64..0.98, 0..6), prop::collection::vec(-1.0f64..1.0, 8)).prop_map(
            |(mut xs, ys)| {
                xs.sort_by(f64::total_cmp);
                xs.dedup_by(|a, b| (*a - *b).abs() < 1e-3);
                let mut ts = vec![0.0];
                ts.extend(xs);
                ts.push(1.0);
                let pts: Vec<(f64, f64)> = ts.into_iter().zip(ys).collect();
                BvFunction::polyline(&pts).expect("polyline")
            }
        ),
    ]
}

fn run<S: Strategy>(
    cases: u32,
    strategy: S,
    test: impl Fn(S::Value) -> Result<(), TestCaseError>,
) -> Result<(), String> {
    let mut runner = TestRunner::new(Config {
        cases,
        failure_persistence: None,
        ..Config::default()
    });
    runner.run(&strategy, test).map_err(|e| e.to_string())
}

fn close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol
}

pub fn variation_additivity(cases: u32) -> Result<(), String> {
    run(cases, (bv_function(), 0.0f64..=1.0), |(f, c)| {
        let whole = f.total_variation();
        let split = f.variation(0.0, c).unwrap() + f.variation(c, 1.0).unwrap();
        prop_assert!(close(whole, split, 1e-10 * (1.0 + whole)), "{whole} vs {split} at {c}");
        Ok(())
    })
}

pub fn sup_below_bv(cases: u32) -> Result<(), String> {
    run(cases, bv_function(), |f| {
        prop_assert!(f.sup_norm() <= f.bv_norm() * (1.0 + 1e-12) + 1e-15);
        Ok(())
    })
}

pub fn oscillation_below_variation(cases: u32) -> Result<(), String> {
    run(cases, (bv_function(), 0.0f64..=1.0, 0.0f64..=1.0), |(f, a, b)| {
        let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
        let osc = f.oscillation(lo, hi).unwrap();
        let var = f.variation(lo, hi).unwrap();
        prop_assert!(osc <= var * (1.0 + 1e-12) + 1e-14, "osc {osc} > var {var}");
        Ok(())
    })
}

/// `∫x dA + ∫A dx = A(1)x(1) − A(0)x(0)` for continuous `x`.
pub fn integration_by_parts(cases: u32) -> Result<(), String> {
    run(cases, (bv_function(), continuous_function()), |(a, x)| {
        let lhs = rs_da(&x, &a).unwrap() + rs_dx(&a, &x).unwrap();
        let rhs = a.eval(1.0) * x.eval(1.0) - a.eval(0.0) * x.eval(0.0);
        let scale = 1.0 + a.bv_norm() * x.bv_norm();
        prop_assert!(close(lhs, rhs, 1e-11 * scale), "{lhs} vs {rhs}");
        Ok(())
    })
}

/// Midpoint-tagged sums on dyadic partitions approach `∫A dx` within the
/// a-priori bound `2 var(A) sup|x′| h`.
pub fn rs_sum_convergence(cases: u32) -> Result<(), String> {
    let cubic = prop::collection::vec(-2.0f64..2.0, 4);
    run(cases, (bv_function(), cubic), |(a, c)| {
        let x = BvFunction::polynomial(&c).unwrap();
        let slope = c[1].abs() + 2.0 * c[2].abs() + 3.0 * c[3].abs();
        let exact = rs_dx(&a, &x).unwrap();
        for depth in [4u32, 8, 12] {
            let (part, tags) = dyadic_partition(depth);
            let sum = rs_sum(&a, &x, &part, &tags).unwrap();
            let h = part[1];
            let bound = 2.0 * a.total_variation() * slope * h + 1e-12 * (1.0 + a.sup_norm());
            prop_assert!((sum - exact).abs() <= bound, "depth {depth}: {} > {bound}", (sum - exact).abs());
        }
        Ok(())
    })
}

fn example_perturbations() -> Vec<LinearPerturbation> {
    ["example1-multipoint", "example1-da", "example3-multipoint", "example3-dx"]
        .iter()
        .map(|name| bvp::reduce(&bvp::catalog_entry(name).unwrap()).unwrap().perturbation)
        .collect()
}

pub fn f1_linearity(cases: u32) -> Result<(), String> {
    let pert = example_perturbations();
    run(
        cases,
        (continuous_function(), continuous_function(), -3.0f64..3.0, -3.0f64..3.0),
        |(x, y, s, t)| {
            for p in &pert {
                let lhs = p.apply(&BvFunction::linear_combination(&[(s, &x), (t, &y)])).unwrap();
                let fx = p.apply(&x).unwrap();
                let fy = p.apply(&y).unwrap();
                let rhs = BvFunction::linear_combination(&[(s, &fx), (t, &fy)]);
                let gap = (&lhs - &rhs).sup_norm();
                prop_assert!(gap <= 1e-12 * (1.0 + rhs.sup_norm()), "gap {gap}");
            }
            Ok(())
        },
    )
}

/// Simpson errors on `e^{ct}` shrink by about 16 per halving, and the
/// five-point Gauss rule integrates degree-9 polynomials exactly.
pub fn quadrature_richardson(cases: u32) -> Result<(), String> {
    run(
        cases,
        (0.5f64..3.0, prop::collection::vec(-1.0f64..1.0, 10)),
        |(c, poly)| {
            let exact = (c.exp() - 1.0) / c;
            let e1 = (simpson(|t| (c * t).exp(), 0.0, 1.0, 8) - exact).abs();
            let e2 = (simpson(|t| (c * t).exp(), 0.0, 1.0, 16) - exact).abs();
            let ratio = e1 / e2;
            prop_assert!((14.5..17.5).contains(&ratio), "ratio {ratio}");

            let p = |t: f64| poly.iter().rev().fold(0.0, |acc, k| acc * t + k);
            let antideriv: f64 = poly.iter().enumerate().map(|(k, ck)| ck / (k as f64 + 1.0)).sum();
            let gl = gauss_legendre(p, 0.0, 0.5) + gauss_legendre(p, 0.5, 1.0);
            prop_assert!(close(gl, antideriv, 1e-13), "{gl} vs {antideriv}");
            Ok(())
        },
    )
}

pub const SUITES: &[(&str, fn(u32) -> Result<(), String>)] = &[
    ("variation additivity", variation_additivity),
    ("sup <= BV norm", sup_below_bv),
    ("osc <= var", oscillation_below_variation),
    ("integration by parts", integration_by_parts),
    ("rs_sum refinement convergence", rs_sum_convergence),
    ("F1 linearity", f1_linearity),
    ("quadrature Richardson", quadrature_richardson),
];

pub fn positive_catalog_f() -> Nonlinearity {
    Nonlinearity::catalog("one_plus_t_u2").unwrap()
}
