mod common;

use relbgk::special::*;

#[test]
fn oracle_matches_reference_table() {
    // Tabulated K₁(1), K₂(1).
    assert!((common::k1_scaled(1.0) * (-1f64).exp() - 0.601_907_230_197_234_6).abs() < 1e-14);
    assert!((common::k2_scaled(1.0) * (-1f64).exp() - 1.624_838_898_635_177_4).abs() < 1e-14);
}

#[test]
fn bessel_against_quadrature() {
    for beta in [0.1, 0.5, 1.0, 3.0, 10.0, 49.0, 120.0, 299.0, 301.0, 500.0] {
        let k1 = bessel_k1_scaled(beta).unwrap();
        let k2 = bessel_k2_scaled(beta).unwrap();
        let o1 = common::k1_scaled(beta);
        let o2 = common::k2_scaled(beta);
        assert!((k1 / o1 - 1.0).abs() < 1e-10, "K1({beta}): {k1} vs {o1}");
        assert!((k2 / o2 - 1.0).abs() < 1e-10, "K2({beta}): {k2} vs {o2}");
    }
}

#[test]
fn asymptotic_three_terms_at_fifty() {
    let b: f64 = 50.0;
    let pref = (std::f64::consts::PI / (2.0 * b)).sqrt() * (-b).exp();
    let x = 8.0 * b;
    let s1 = pref * (1.0 + 3.0 / x - 15.0 / (2.0 * x * x));
    let s2 = pref * (1.0 + 15.0 / x + 105.0 / (2.0 * x * x));
    assert!((bessel_k1(b).unwrap() / s1 - 1.0).abs() < 1e-6);
    // The first omitted K₂ term is −945/(6(8β)³) ≈ −2.5e-6 relative, so
    // the three-term form can only be matched to that size.
    let omitted = 945.0 / (6.0 * x.powi(3));
    let err = (bessel_k2(b).unwrap() / s2 - 1.0).abs();
    assert!(err > 1e-6 && err <= omitted, "{err} vs {omitted}");
    let s2_four = s2 - pref * omitted;
    assert!((bessel_k2(b).unwrap() / s2_four - 1.0).abs() < 1e-7);
}

#[test]
fn equilibrium_integrals_against_radial_quadrature() {
    let l = equilibrium_integrals_log(1.0, 1.0, 1.0).unwrap();
    let (om, omt) = common::ln_m_pair(1.0, 1.0, 1.0);
    assert!((l.ln_m - om).abs() < 1e-9);
    assert!((l.ln_m_tilde - omt).abs() < 1e-9);
}

#[test]
fn ratio_limits() {
    // β_m = 10⁴ and β_m = 0.01 with m = c = 1.
    let hi = integral_ratio(1.0, 1e4, 1.0).unwrap();
    assert!((hi - 1.0).abs() <= 2.0 / 1e4 + 1e-9);
    let lo = integral_ratio(1.0, 0.01, 1.0).unwrap();
    assert!(lo >= 1.0 / 0.01);
}

#[test]
fn derivative_matches_finite_difference() {
    for k in 0..20 {
        let b = 10f64.powf(-1.5 + 4.5 * k as f64 / 19.0);
        let a = ratio_derivative(1.3, b, 1.0).unwrap();
        let f = ratio_derivative_fd(1.3, b, 1.0).unwrap();
        assert!(a < 0.0);
        assert!((a / f - 1.0).abs() < 1e-6, "β̃ = {b}: {a} vs {f}");
    }
}
