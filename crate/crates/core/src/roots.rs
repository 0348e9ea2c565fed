//! Safeguarded Newton iteration for strictly monotone scalar functions.

use crate::{Error, Result};

/// One iteration of a bracketed solve, kept for diagnostic dumps.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IterationRecord {
    pub lo: f64,
    pub hi: f64,
    pub x: f64,
    pub residual: f64,
    pub newton: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RootSolution {
    pub x: f64,
    pub residual: f64,
    pub iterations: usize,
    pub history: Vec<IterationRecord>,
}

#[derive(Debug, Clone, Copy)]
pub struct RootOptions {
    /// Absolute residual target.
    pub residual_tol: f64,
    /// Stop once a Newton step moves `x` by less than this (relative).
    pub step_tol: f64,
    pub max_iter: usize,
}

impl Default for RootOptions {
    fn default() -> Self {
        Self { residual_tol: 0.0, step_tol: 1e-15, max_iter: 200 }
    }
}

/// Root of `g` on `[lo, hi]` where `g(lo)` and `g(hi)` have opposite signs.
///
/// `g` returns `(value, derivative)`. Newton steps are taken only while they
/// stay strictly inside the current bracket, otherwise the bracket is bisected.
pub fn bracketed_newton<F>(mut g: F, mut lo: f64, mut hi: f64, opts: RootOptions) -> Result<RootSolution>
where
    F: FnMut(f64) -> Result<(f64, f64)>,
{
    if !(lo < hi) {
        return Err(Error::Bracket(format!("empty bracket [{lo}, {hi}]")));
    }
    let (g_lo, _) = g(lo)?;
    let (g_hi, _) = g(hi)?;
    if g_lo == 0.0 {
        return Ok(RootSolution { x: lo, residual: 0.0, iterations: 0, history: vec![] });
    }
    if g_hi == 0.0 {
        return Ok(RootSolution { x: hi, residual: 0.0, iterations: 0, history: vec![] });
    }
    if g_lo.signum() == g_hi.signum() {
        return Err(Error::Bracket(format!(
            "no sign change on [{lo}, {hi}]: g = ({g_lo:e}, {g_hi:e})"
        )));
    }
    let lo_sign = g_lo.signum();

    let mut history = Vec::new();
    let mut x = 0.5 * (lo + hi);
    let mut best = (x, f64::INFINITY);
    for it in 1..=opts.max_iter {
        let (gx, dgx) = g(x)?;
        if !gx.is_finite() {
            return Err(Error::Bracket(format!("non-finite residual at x = {x}")));
        }
        if gx.abs() < best.1 {
            best = (x, gx.abs());
        }
        if gx == 0.0 {
            history.push(IterationRecord { lo, hi, x, residual: gx, newton: false });
            return Ok(RootSolution { x, residual: 0.0, iterations: it, history });
        }
        if gx.signum() == lo_sign {
            lo = x;
        } else {
            hi = x;
        }
        let newton = x - gx / dgx;
        let use_newton = dgx.is_finite() && dgx != 0.0 && newton > lo && newton < hi;
        let next = if use_newton { newton } else { 0.5 * (lo + hi) };
        history.push(IterationRecord { lo, hi, x, residual: gx, newton: use_newton });

        let step = (next - x).abs();
        let converged_residual = gx.abs() <= opts.residual_tol;
        if converged_residual && use_newton && step <= opts.step_tol * x.abs().max(f64::MIN_POSITIVE)
        {
            return Ok(RootSolution { x, residual: gx, iterations: it, history });
        }
        if hi - lo <= 4.0 * f64::EPSILON * lo.abs().max(hi.abs()) {
            let (x, r) = best;
            if r <= opts.residual_tol {
                return Ok(RootSolution { x, residual: r, iterations: it, history });
            }
            return Err(Error::Bracket(format!(
                "bracket collapsed at {x} with residual {r:e} above tolerance {:e}",
                opts.residual_tol
            )));
        }
        x = next;
    }
    let (x, r) = best;
    if r <= opts.residual_tol {
        return Ok(RootSolution { x, residual: r, iterations: opts.max_iter, history });
    }
    Err(Error::Bracket(format!(
        "no convergence after {} iterations (best residual {r:e})",
        opts.max_iter
    )))
}
