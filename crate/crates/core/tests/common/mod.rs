//! Independent reference integrals for the special functions: adaptive
//! Gauss–Kronrod (7/15) on the defining one-dimensional integrals.

#![allow(dead_code, clippy::excessive_precision)]

const XGK: [f64; 8] = [
    0.991455371120812639206854697526329,
    0.949107912342758524526189684047851,
    0.864864423359769072789712788640926,
    0.741531185599394439863864773280788,
    0.586087235467691130294144845693013,
    0.405845151377397166906606412076961,
    0.207784955007898467600689403773245,
    0.000000000000000000000000000000000,
];
const WGK: [f64; 8] = [
    0.022935322010529224963732008058970,
    0.063092092629978553290700663189204,
    0.104790010322250183839876322541518,
    0.140653259715525918745189590510238,
    0.169004726639267902826583426598550,
    0.190350578064785409913256402421014,
    0.204432940075298892414161999234649,
    0.209482141084727828012999174891714,
];
const WG: [f64; 4] = [
    0.129484966168869693270611432679082,
    0.279705391489276667901467771423780,
    0.381830050505118944950369775488975,
    0.417959183673469387755102040816327,
];

fn kronrod<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> (f64, f64) {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    let mut k = fc * WGK[7];
    let mut g = fc * WG[3];
    for j in 0..7 {
        let x = h * XGK[j];
        let s = f(c - x) + f(c + x);
        k += WGK[j] * s;
        if j % 2 == 1 {
            g += WG[j / 2] * s;
        }
    }
    (k * h, ((k - g) * h).abs())
}

/// `∫_a^b f` to relative accuracy `tol` by bisection of the worst interval.
pub fn integrate<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, tol: f64) -> f64 {
    let mut parts = vec![(a, b, kronrod(&f, a, b))];
    for _ in 0..20_000 {
        let total: f64 = parts.iter().map(|p| p.2 .0).sum();
        let err: f64 = parts.iter().map(|p| p.2 .1).sum();
        if err <= tol * total.abs() {
            break;
        }
        let (i, _) = parts
            .iter()
            .enumerate()
            .max_by(|x, y| x.1 .2 .1.partial_cmp(&y.1 .2 .1).unwrap())
            .unwrap();
        let (lo, hi, _) = parts.swap_remove(i);
        let mid = 0.5 * (lo + hi);
        parts.push((lo, mid, kronrod(&f, lo, mid)));
        parts.push((mid, hi, kronrod(&f, mid, hi)));
    }
    let mut v: Vec<f64> = parts.iter().map(|p| p.2 .0).collect();
    v.sort_by(|a, b| a.abs().partial_cmp(&b.abs()).unwrap());
    v.iter().sum()
}

/// Upper limit where `e^{-β(√(1+r²)−1)}` drops below `1e-18`, times a margin.
fn r_cutoff(beta: f64) -> f64 {
    let e = 18.0 * 10f64.ln() / beta;
    let r = ((1.0 + e).powi(2) - 1.0).sqrt();
    r * 1.05
}

/// `e^β K₁(β)` from `∫₀^∞ e^{-β(√(1+r²)−1)} dr`.
pub fn k1_scaled(beta: f64) -> f64 {
    let f = |r: f64| {
        let s = (1.0 + r * r).sqrt();
        (-beta * r * r / (s + 1.0)).exp()
    };
    integrate(f, 0.0, r_cutoff(beta), 1e-14)
}

/// `e^β K₂(β)` from `∫₀^∞ (2r²+1)/√(1+r²) e^{-β(√(1+r²)−1)} dr`.
pub fn k2_scaled(beta: f64) -> f64 {
    let f = |r: f64| {
        let s = (1.0 + r * r).sqrt();
        (2.0 * r * r + 1.0) / s * (-beta * r * r / (s + 1.0)).exp()
    };
    integrate(f, 0.0, r_cutoff(beta) * 1.2, 1e-14)
}

/// `(ln M, ln M̃)` from radial quadrature of `4π∫ p² e^{-cβ̃p⁰} dp` and
/// `4π∫ p² e^{-cβ̃p⁰}/p⁰ dp`.
pub fn ln_m_pair(m: f64, beta_tilde: f64, c: f64) -> (f64, f64) {
    let cm = c * m;
    let bm = m * c * c * beta_tilde;
    let p_cut = cm * r_cutoff(bm) * 1.3;
    let w = |p: f64| {
        let p0 = (cm * cm + p * p).sqrt();
        (-c * beta_tilde * p * p / (p0 + cm)).exp()
    };
    let m_int = integrate(|p| p * p * w(p), 0.0, p_cut, 1e-14);
    let mt_int = integrate(|p| p * p * w(p) / (cm * cm + p * p).sqrt(), 0.0, p_cut, 1e-14);
    let four_pi = 4.0 * std::f64::consts::PI;
    ((four_pi * m_int).ln() - bm, (four_pi * mt_int).ln() - bm)
}
