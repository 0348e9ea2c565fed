//! Modified Bessel functions `K₁`, `K₂` and the equilibrium integrals
//!
//! ```text
//! M(β̃) = ∫ e^{-cβ̃p⁰} dp = 4π(cm)³ K₂(β_m)/β_m
//! M̃(β̃) = ∫ e^{-cβ̃p⁰} dp/p⁰ = 4π(cm)² K₁(β_m)/β_m,   β_m = mc²β̃.
//! ```
//!
//! `K_ν` is evaluated from `∫₀^∞ cosh(νt) e^{-β cosh t} dt`, which is the
//! integral `∫₀^∞ … e^{-β√(1+r²)} dr` under `r = sinh t`. The trapezoid rule in
//! `t` converges geometrically for this analytic, doubly-exponentially decaying
//! integrand. Above [`ASYMPTOTIC_THRESHOLD`] the Hankel asymptotic series is
//! used instead. Everything is computed in the scaled form `e^β K_ν(β)`, so
//! ratios never underflow.

use std::f64::consts::PI;

use crate::roots::{bracketed_newton, RootOptions};
use crate::{Error, Result};

/// Switchover from quadrature to the asymptotic series.
pub const ASYMPTOTIC_THRESHOLD: f64 = 300.0;

/// Above this `β_m`, `M` and `M̃` underflow in linear form.
pub const LINEAR_UNDERFLOW: f64 = 700.0;

fn check_positive(name: &str, v: f64) -> Result<()> {
    if v.is_finite() && v > 0.0 {
        Ok(())
    } else {
        Err(Error::Domain(format!("{name} must be positive and finite, got {v}")))
    }
}

/// `(e^x K₁(x), e^x K₂(x), e^x (K₂(x) − K₁(x)))`.
#[derive(Debug, Clone, Copy)]
struct ScaledPair {
    k1e: f64,
    k2e: f64,
    diff: f64,
}

fn scaled_pair(x: f64) -> ScaledPair {
    if x > ASYMPTOTIC_THRESHOLD {
        scaled_pair_asymptotic(x)
    } else {
        scaled_pair_trapezoid(x)
    }
}

fn scaled_pair_trapezoid(x: f64) -> ScaledPair {
    // Step chosen so the aliasing error exp(-2π²/(h²x)) and the strip error
    // exp(-π²/h) both sit below 1e-17.
    let h = (0.6 / x.sqrt()).min(0.075);
    let t_peak = (2.0 / x).asinh();
    let weight = |t: f64| {
        let s = (0.5 * t).sinh();
        (-2.0 * x * s * s).exp()
    };
    let (mut k1, mut k2, mut d) = (0.5, 0.5, 0.0);
    let mut i = 1usize;
    loop {
        let t = i as f64 * h;
        let w = weight(t);
        let c1 = t.cosh();
        let c2 = (2.0 * t).cosh();
        // cosh 2t − cosh t = 2 sinh(3t/2) sinh(t/2)
        let cd = 2.0 * (1.5 * t).sinh() * (0.5 * t).sinh();
        k1 += c1 * w;
        k2 += c2 * w;
        d += cd * w;
        if t > t_peak && c2 * w < 1e-18 * k2 {
            break;
        }
        i += 1;
    }
    ScaledPair { k1e: h * k1, k2e: h * k2, diff: h * d }
}

fn scaled_pair_asymptotic(x: f64) -> ScaledPair {
    let pref = (PI / (2.0 * x)).sqrt();
    let (mut a1, mut a2) = (1.0_f64, 1.0_f64);
    let (mut s1, mut s2, mut sd) = (1.0, 1.0, 0.0);
    let mut prev = f64::INFINITY;
    for k in 1..40 {
        let odd = ((2 * k - 1) * (2 * k - 1)) as f64;
        a1 *= (4.0 - odd) / (8.0 * k as f64 * x);
        a2 *= (16.0 - odd) / (8.0 * k as f64 * x);
        let size = a1.abs().max(a2.abs());
        if size > prev {
            break;
        }
        s1 += a1;
        s2 += a2;
        sd += a2 - a1;
        prev = size;
        if size < 1e-18 {
            break;
        }
    }
    ScaledPair { k1e: pref * s1, k2e: pref * s2, diff: pref * sd }
}

/// `e^β K₁(β)`.
pub fn bessel_k1_scaled(beta: f64) -> Result<f64> {
    check_positive("beta", beta)?;
    Ok(scaled_pair(beta).k1e)
}

/// `e^β K₂(β)`.
pub fn bessel_k2_scaled(beta: f64) -> Result<f64> {
    check_positive("beta", beta)?;
    Ok(scaled_pair(beta).k2e)
}

/// `K₁(β) = ∫₀^∞ e^{-β√(1+r²)} dr`.
pub fn bessel_k1(beta: f64) -> Result<f64> {
    Ok(bessel_k1_scaled(beta)? * (-beta).exp())
}

/// `K₂(β) = ∫₀^∞ (2r²+1)/√(1+r²) e^{-β√(1+r²)} dr`.
pub fn bessel_k2(beta: f64) -> Result<f64> {
    Ok(bessel_k2_scaled(beta)? * (-beta).exp())
}

/// `K₂(β)/K₁(β) − 1`, accurate even where the ratio is close to one.
pub fn bessel_ratio_excess(beta: f64) -> Result<f64> {
    check_positive("beta", beta)?;
    let p = scaled_pair(beta);
    Ok(p.diff / p.k1e)
}

pub fn bessel_ratio_k2_k1(beta: f64) -> Result<f64> {
    Ok(1.0 + bessel_ratio_excess(beta)?)
}

/// `K₁` and `K₂` at one argument.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BesselEval {
    pub beta: f64,
    pub k1: f64,
    pub k2: f64,
}

impl BesselEval {
    pub fn new(beta: f64) -> Result<Self> {
        check_positive("beta", beta)?;
        let p = scaled_pair(beta);
        let e = (-beta).exp();
        Ok(Self { beta, k1: p.k1e * e, k2: p.k2e * e })
    }
}

/// `(ln M, ln M̃)`; finite for any `β_m`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LogIntegrals {
    pub ln_m: f64,
    pub ln_m_tilde: f64,
}

impl LogIntegrals {
    pub fn ratio(&self) -> f64 {
        (self.ln_m - self.ln_m_tilde).exp()
    }
}

fn check_integral_args(m: f64, beta_tilde: f64, c: f64) -> Result<f64> {
    check_positive("mass", m)?;
    check_positive("beta_tilde", beta_tilde)?;
    check_positive("c", c)?;
    Ok(m * c * c * beta_tilde)
}

pub fn equilibrium_integrals_log(m: f64, beta_tilde: f64, c: f64) -> Result<LogIntegrals> {
    let bm = check_integral_args(m, beta_tilde, c)?;
    let p = scaled_pair(bm);
    let ln_pref = (4.0 * PI).ln() - bm.ln();
    Ok(LogIntegrals {
        ln_m: ln_pref + 3.0 * (c * m).ln() + p.k2e.ln() - bm,
        ln_m_tilde: ln_pref + 2.0 * (c * m).ln() + p.k1e.ln() - bm,
    })
}

/// `(M, M̃)` in linear form. Underflows to zero once `β_m ≳ 700`; use
/// [`equilibrium_integrals_log`] or [`integral_ratio`] there.
pub fn equilibrium_integrals(m: f64, beta_tilde: f64, c: f64) -> Result<(f64, f64)> {
    let l = equilibrium_integrals_log(m, beta_tilde, c)?;
    Ok((l.ln_m.exp(), l.ln_m_tilde.exp()))
}

/// `M/M̃ = cm K₂(β_m)/K₁(β_m)`.
pub fn integral_ratio(m: f64, beta_tilde: f64, c: f64) -> Result<f64> {
    let bm = check_integral_args(m, beta_tilde, c)?;
    Ok(c * m * bessel_ratio_k2_k1(bm)?)
}

/// `M/M̃ − cm`, without cancellation.
pub fn integral_ratio_excess(m: f64, beta_tilde: f64, c: f64) -> Result<f64> {
    let bm = check_integral_args(m, beta_tilde, c)?;
    Ok(c * m * bessel_ratio_excess(bm)?)
}

/// `d(M/M̃)/dβ̃ = c(M² − M̃∫p⁰e^{-cβ̃p⁰}dp)/M̃²`, evaluated as
/// `c³m²(R² − 1 − 3R/β_m)` with `R = K₂/K₁`. Strictly negative.
pub fn ratio_derivative(m: f64, beta_tilde: f64, c: f64) -> Result<f64> {
    let bm = check_integral_args(m, beta_tilde, c)?;
    let d = bessel_ratio_excess(bm)?;
    Ok(c.powi(3) * m * m * (d * (2.0 + d) - 3.0 * (1.0 + d) / bm))
}

/// Central-difference derivative of `M/M̃` with step `1e-5·β̃`.
pub fn ratio_derivative_fd(m: f64, beta_tilde: f64, c: f64) -> Result<f64> {
    check_integral_args(m, beta_tilde, c)?;
    let h = 1e-5 * beta_tilde;
    let up = integral_ratio_excess(m, beta_tilde + h, c)?;
    let down = integral_ratio_excess(m, beta_tilde - h, c)?;
    Ok((up - down) / (2.0 * h))
}

/// Solves `K₁(β)/K₂(β) = q` for `β`, `0 < q < 1`.
///
/// `K₁/K₂` is strictly increasing, from 0 at `β → 0` to 1 at `β → ∞`.
pub fn inverse_k1_over_k2(q: f64) -> Result<f64> {
    if !(q > 0.0 && q < 1.0) {
        return Err(Error::Domain(format!("K1/K2 ratio must lie in (0, 1), got {q}")));
    }
    let target = (1.0 - q) / q;
    // K₁/K₂ ≈ β/2 near 0 and 1 − 3/(2β) at infinity.
    let lo = (q * 0.5).max(1e-8).ln();
    let hi = (3.0 / target).max(1.0).ln() + 2.0;
    let g = |s: f64| -> Result<(f64, f64)> {
        let beta = s.exp();
        let d = bessel_ratio_excess(beta)?;
        let r = 1.0 + d;
        let dr = d * (2.0 + d) - 3.0 * r / beta;
        Ok((d - target, dr * beta))
    };
    let sol = bracketed_newton(
        g,
        lo,
        hi,
        RootOptions { residual_tol: 1e-14 * target, step_tol: 1e-15, max_iter: 200 },
    )?;
    Ok(sol.x.exp())
}
