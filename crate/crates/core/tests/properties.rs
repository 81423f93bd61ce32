mod common;

const CASES: u32 = 256;

#[test]
fn variation_is_additive() {
    common::variation_additivity(CASES).unwrap();
}

#[test]
fn sup_norm_below_bv_norm() {
    common::sup_below_bv(CASES).unwrap();
}

#[test]
fn oscillation_below_variation() {
    common::oscillation_below_variation(CASES).unwrap();
}

#[test]
fn integration_by_parts() {
    common::integration_by_parts(CASES).unwrap();
}

#[test]
fn riemann_stieltjes_sums_converge() {
    common::rs_sum_convergence(CASES).unwrap();
}

#[test]
fn f1_is_linear() {
    common::f1_linearity(CASES).unwrap();
}

#[test]
fn quadrature_richardson() {
    common::quadrature_richardson(CASES).unwrap();
}
