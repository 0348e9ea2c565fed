//! Equilibrium parameters of the mixture attractors.
//!
//! Given per-species moments, the common inverse temperature `β̃` solves
//!
//! ```text
//! Σ_i (m_i/τ_i) (M_i/M̃_i)(β̃) ρ_i = |G|/c,    G^μ = Σ_i (m_i/τ_i) n_i U_i^μ,
//! ```
//!
//! the common four-velocity is `Ũ = cG/|G|`, and each attractor is
//! `J_i = head_i · exp(-β̃ Ũ^μ p_μ)` with `head_i` chosen so that the discrete
//! `∫ J_i dp/p⁰` equals the discrete `ρ_i`.
//!
//! The left-hand side is written as `A + E(β̃)` with `A = Σ c m_i² ρ_i/τ_i`
//! and `E(β̃) = Σ (m_i/τ_i) ρ_i (M_i/M̃_i − cm_i)`. `E` decreases strictly
//! from `+∞` to `0` and satisfies `B/(cβ̃) ≤ E(β̃) ≤ 2B/(cβ̃)` with
//! `B = Σ (m_i/τ_i) ρ_i`, which gives an explicit bracket.

use serde::{Deserialize, Serialize};

use crate::phase_space::{
    compute_moments, weighted_flow_sum, FlowMoments, MomentSet, MomentumGrid, SpeciesParams,
};
use crate::roots::{bracketed_newton, IterationRecord, RootOptions};
use crate::special::bessel_ratio_excess;
use crate::sum::Accumulator;
use crate::tensor::{FourVector, PhysicalConstants};
use crate::{Error, Result};

/// Default relative residual target of the `β̃` solve.
pub const DEFAULT_TOL: f64 = 1e-12;

/// Relative margin below which `|G|/c` is treated as touching its infimum.
pub const COLD_MARGIN: f64 = 1e-13;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverOptions {
    /// Relative residual `|LHS − RHS|/RHS` to reach.
    pub tol: f64,
    /// Starting bracket; the analytic bracket is used when `None`.
    pub bracket: Option<(f64, f64)>,
    /// Log every iteration at debug level.
    pub verbose: bool,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self { tol: DEFAULT_TOL, bracket: None, verbose: false }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BetaSolution {
    pub beta_tilde: f64,
    /// `|LHS − RHS|/RHS` at the returned point.
    pub relative_residual: f64,
    pub rhs: f64,
    pub bracket: (f64, f64),
    pub iterations: usize,
    pub history: Vec<IterationRecord>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EquilibriumState {
    pub beta_tilde: f64,
    pub u_tilde: FourVector,
    /// `ρ_i / M̃_i(β̃)` with the discrete denominator. Overflows to `inf`
    /// in the very cold limit; `ln_head` stays finite.
    pub head: Vec<f64>,
    pub ln_head: Vec<f64>,
    /// `ln(ρ_i/D_i)` where `D_i = ∫ e^{-β̃(Ũ·p − m_ic²)} dp/p⁰` on the grid.
    pub ln_shifted_head: Vec<f64>,
    pub mu_tilde: Vec<f64>,
    /// `kT̃ = 1/β̃`.
    pub t_tilde: f64,
    pub relative_residual: f64,
    pub iterations: usize,
}

fn check_species(rho: &[f64], params: &[SpeciesParams]) -> Result<()> {
    if rho.is_empty() || rho.len() != params.len() {
        return Err(Error::Domain(format!(
            "need one density per species: {} densities, {} species",
            rho.len(),
            params.len()
        )));
    }
    if let Some(i) = rho.iter().position(|r| !(*r > 0.0 && r.is_finite())) {
        return Err(Error::Vacuum { species: i, cell: 0, mass: rho[i] });
    }
    Ok(())
}

/// `Σ_i (m_i/τ_i)(M_i/M̃_i)(β̃) ρ_i`.
pub fn beta_relation_lhs(
    beta_tilde: f64,
    rho: &[f64],
    params: &[SpeciesParams],
    consts: &PhysicalConstants,
) -> Result<f64> {
    check_species(rho, params)?;
    let (a, _) = lhs_floor(rho, params, consts.c);
    let (e, _) = excess(beta_tilde, rho, params, consts.c)?;
    Ok(a + e)
}

/// `(A, B) = (Σ c m_i² ρ_i/τ_i, Σ (m_i/τ_i) ρ_i)`.
fn lhs_floor(rho: &[f64], params: &[SpeciesParams], c: f64) -> (f64, f64) {
    let mut a = Accumulator::default();
    let mut b = Accumulator::default();
    for (r, sp) in rho.iter().zip(params) {
        let wr = sp.weight() * r;
        a.add(c * sp.mass * wr);
        b.add(wr);
    }
    (a.value(), b.value())
}

/// `E(β̃)` and `dE/dβ̃`.
fn excess(beta: f64, rho: &[f64], params: &[SpeciesParams], c: f64) -> Result<(f64, f64)> {
    if !(beta > 0.0 && beta.is_finite()) {
        return Err(Error::Domain(format!("beta_tilde must be positive, got {beta}")));
    }
    let mut e = Accumulator::default();
    let mut de = Accumulator::default();
    for (r, sp) in rho.iter().zip(params) {
        let bm = sp.mass * c * c * beta;
        let d = bessel_ratio_excess(bm)?;
        let wr = sp.weight() * r;
        e.add(wr * c * sp.mass * d);
        de.add(wr * c.powi(3) * sp.mass * sp.mass * (d * (2.0 + d) - 3.0 * (1.0 + d) / bm));
    }
    Ok((e.value(), de.value()))
}

/// Unique `β̃` for the given per-species moments.
pub fn solve_beta_tilde(
    flows: &[FlowMoments],
    params: &[SpeciesParams],
    consts: &PhysicalConstants,
    opts: &SolverOptions,
) -> Result<BetaSolution> {
    let rho: Vec<f64> = flows.iter().map(|f| f.rho).collect();
    check_species(&rho, params)?;
    if !(opts.tol > 0.0) {
        return Err(Error::Domain(format!("solver tolerance must be positive, got {}", opts.tol)));
    }
    let c = consts.c;
    let wf = weighted_flow_sum(flows, params)?;
    let rhs = wf.norm / c;
    let (a, b) = lhs_floor(&rho, params, c);
    let target = rhs - a;
    if !(target > COLD_MARGIN * rhs) {
        return Err(Error::ColdOrConcentrated { rhs, infimum: a });
    }

    let g = |beta: f64| -> Result<(f64, f64)> {
        let (e, de) = excess(beta, &rho, params, c)?;
        Ok((e - target, de))
    };
    let (mut lo, mut hi) = opts.bracket.unwrap_or((b / (c * target), 2.0 * b / (c * target)));
    if !(lo > 0.0 && hi > lo && hi.is_finite()) {
        return Err(Error::Bracket(format!("invalid starting bracket [{lo}, {hi}]")));
    }
    let mut expansions = 0;
    while g(lo)?.0 < 0.0 {
        lo *= 0.5;
        expansions += 1;
        if expansions > 200 {
            return Err(Error::Bracket(format!("could not expand lower end below {lo}")));
        }
    }
    while g(hi)?.0 > 0.0 {
        hi *= 2.0;
        expansions += 1;
        if expansions > 200 || !hi.is_finite() {
            return Err(Error::Bracket(format!("could not expand upper end above {hi}")));
        }
    }
    let sol = bracketed_newton(
        g,
        lo,
        hi,
        RootOptions { residual_tol: opts.tol * rhs, step_tol: 1e-14, max_iter: 300 },
    )?;
    if opts.verbose {
        log::debug!("beta solve: bracket [{lo:e}, {hi:e}], {expansions} expansions");
        for (i, h) in sol.history.iter().enumerate() {
            log::debug!(
                "  it {i:3}: x = {:.17e}, residual = {:.3e}, [{:e}, {:e}], newton = {}",
                h.x,
                h.residual,
                h.lo,
                h.hi,
                h.newton
            );
        }
    }
    Ok(BetaSolution {
        beta_tilde: sol.x,
        relative_residual: sol.residual.abs() / rhs,
        rhs,
        bracket: (lo, hi),
        iterations: sol.iterations,
        history: sol.history,
    })
}

/// `Ũ^μ = c G^μ / √(G·G)`.
pub fn compute_u_tilde(
    flows: &[FlowMoments],
    params: &[SpeciesParams],
    consts: &PhysicalConstants,
) -> Result<FourVector> {
    let wf = weighted_flow_sum(flows, params)?;
    Ok(wf.g * (consts.c / wf.norm))
}

/// `ln ∫ e^{-β(U·p − mc²)} dp/p⁰` on the grid, returned together with the
/// nodal weights `e^{-β(U·p − mc²)}`.
pub fn shifted_denominator(
    grid: &MomentumGrid,
    beta: f64,
    u: &FourVector,
) -> Result<(f64, Vec<f64>)> {
    let w = grid.juttner_weights(beta, u)?;
    let dv = grid.cell_volume();
    let mut acc = Accumulator::default();
    for (wk, p0) in w.iter().zip(grid.p0()) {
        acc.add(wk / p0 * dv);
    }
    Ok((acc.value().ln(), w))
}

/// Discrete `ln ∫ e^{-β U·p} dp/p⁰`; compare with `ln M̃(β)`.
pub fn discrete_m_tilde_log(grid: &MomentumGrid, beta: f64, u: &FourVector) -> Result<f64> {
    let c = grid.c();
    Ok(shifted_denominator(grid, beta, u)?.0 - beta * grid.mass() * c * c)
}

/// Full equilibrium of one spatial cell from its per-species distributions.
pub fn solve_equilibrium(
    fields: &[&[f64]],
    grids: &[&MomentumGrid],
    params: &[SpeciesParams],
    consts: &PhysicalConstants,
    opts: &SolverOptions,
) -> Result<(EquilibriumState, Vec<MomentSet>)> {
    if fields.len() != params.len() || grids.len() != params.len() {
        return Err(Error::Domain("species count mismatch".into()));
    }
    let moments = fields
        .iter()
        .zip(grids)
        .zip(params)
        .enumerate()
        .map(|(i, ((f, g), sp))| compute_moments(f, sp, g, consts).map_err(|e| e.at(i, 0)))
        .collect::<Result<Vec<_>>>()?;
    let flows: Vec<FlowMoments> = moments.iter().map(MomentSet::flow).collect();
    let eq = solve_from_flows(&flows, grids, params, consts, opts)?;
    Ok((eq, moments))
}

/// Equilibrium from precomputed moments; the grids supply the discrete
/// head-factor denominators.
pub fn solve_from_flows(
    flows: &[FlowMoments],
    grids: &[&MomentumGrid],
    params: &[SpeciesParams],
    consts: &PhysicalConstants,
    opts: &SolverOptions,
) -> Result<EquilibriumState> {
    let beta = solve_beta_tilde(flows, params, consts, opts)?;
    let u_tilde = compute_u_tilde(flows, params, consts)?;
    let b = beta.beta_tilde;
    let c = consts.c;
    let mut ln_shifted_head = Vec::with_capacity(params.len());
    let mut ln_head = Vec::with_capacity(params.len());
    for ((fl, grid), sp) in flows.iter().zip(grids).zip(params) {
        let (ln_d, _) = shifted_denominator(grid, b, &u_tilde)?;
        let shifted = fl.rho.ln() - ln_d;
        ln_shifted_head.push(shifted);
        ln_head.push(shifted + b * sp.mass * c * c);
    }
    let mut eq = EquilibriumState {
        beta_tilde: b,
        u_tilde,
        head: ln_head.iter().map(|l| l.exp()).collect(),
        ln_head,
        ln_shifted_head,
        mu_tilde: Vec::new(),
        t_tilde: 1.0 / b,
        relative_residual: beta.relative_residual,
        iterations: beta.iterations,
    };
    eq.mu_tilde = recover_chemical_potentials(&eq, params, consts);
    Ok(eq)
}

/// `J_i` at every node of species `i`'s grid.
pub fn build_attractor(eq: &EquilibriumState, species: usize, grid: &MomentumGrid) -> Result<Vec<f64>> {
    let shifted = *eq.ln_shifted_head.get(species).ok_or_else(|| {
        Error::Domain(format!("species index {species} out of range"))
    })?;
    let scale = shifted.exp();
    let w = grid.juttner_weights(eq.beta_tilde, &eq.u_tilde)?;
    Ok(w.into_iter().map(|x| scale * x).collect())
}

/// `μ̃_i = (1/β̃) ln(h³ head_i / g_i)`.
pub fn recover_chemical_potentials(
    eq: &EquilibriumState,
    params: &[SpeciesParams],
    consts: &PhysicalConstants,
) -> Vec<f64> {
    let ln_h3 = 3.0 * consts.h.ln();
    eq.ln_head
        .iter()
        .zip(params)
        .map(|(lh, sp)| (ln_h3 + lh - sp.degeneracy.ln()) / eq.beta_tilde)
        .collect()
}

/// `(g/h³) exp(β̃μ̃ − β̃ U·p)` at every node.
pub fn juttner_from_chemical_potential(
    mu: f64,
    beta: f64,
    u: &FourVector,
    species: &SpeciesParams,
    grid: &MomentumGrid,
    consts: &PhysicalConstants,
) -> Result<Vec<f64>> {
    let c = consts.c;
    let ln_pref = species.degeneracy.ln() - 3.0 * consts.h.ln() + beta * mu
        - beta * species.mass * c * c;
    let scale = ln_pref.exp();
    let w = grid.juttner_weights(beta, u)?;
    Ok(w.into_iter().map(|x| scale * x).collect())
}
