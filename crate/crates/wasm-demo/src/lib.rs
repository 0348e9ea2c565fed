//! Browser bindings: two-species relaxation curves, the Newtonian-limit
//! attractor slice and the `β̃` relation explorer.

use relbgk::diagnostics::{classical_moments, scaled_attractors, ClassicalSpecies, NewtonianProbeConfig};
use relbgk::dynamics::*;
use relbgk::equilibrium::{beta_relation_lhs, solve_beta_tilde, SolverOptions};
use relbgk::phase_space::FlowMoments;
use relbgk::{FourVector, PhysicalConstants, Result, SpeciesParams};
use wasm_bindgen::prelude::*;

fn js(r: Result<Vec<f64>>) -> std::result::Result<Vec<f64>, JsError> {
    r.map_err(|e| JsError::new(&e.to_string()))
}

fn species(mass: f64, tau: f64, kt: f64, vx: f64) -> SpeciesConfig {
    SpeciesConfig {
        mass,
        tau,
        spin: 0.0,
        initial: InitialCondition {
            density: 1.0,
            temperature: kt,
            velocity: [vx, 0.0, 0.0],
            density_modulation: 0.0,
            noise: 0.0,
            discretization: Discretization::Point,
        },
    }
}

/// Rows `[t, T₁, T₂, T̃, |U₁ − U₂|/c]` of a homogeneous two-species run with
/// drifts `±drift` (units of `c`); species 1 has unit mass and `τ = 1`.
#[allow(clippy::too_many_arguments)]
pub fn relaxation_curves(
    kt1: f64,
    kt2: f64,
    drift: f64,
    mass2: f64,
    tau2: f64,
    n_cells: usize,
    dt: f64,
    steps: usize,
) -> Result<Vec<f64>> {
    let cfg = ScenarioConfig {
        constants: PhysicalConstants::default(),
        species: vec![species(1.0, 1.0, kt1, drift), species(mass2, tau2, kt2, -drift)],
        momentum: MomentumGridConfig { n_cells, p_max: None, tail_tol: 1e-10 },
        space: SpaceConfig::default(),
        dt,
        steps,
        cfl: 0.9,
        output_every: 1,
        scheme: RelaxationScheme::MassConserving,
        solver_tol: 1e-12,
        seed: 0,
    };
    let out = run_scenario(&cfg)?;
    if let Some(e) = out.failure {
        return Err(e);
    }
    let mut v = Vec::with_capacity(5 * out.series.len());
    for r in &out.series {
        let du: f64 = (0..3).map(|a| (r.species[0].u[a] - r.species[1].u[a]).abs()).fold(0.0, f64::max);
        v.extend([r.time, r.species[0].temperature, r.species[1].temperature, 1.0 / r.beta_tilde, du]);
    }
    Ok(v)
}

fn demo_probe(cells: usize) -> NewtonianProbeConfig {
    NewtonianProbeConfig {
        epsilons: vec![1.0, 0.5, 0.25],
        c: 1.0,
        s: 1.0,
        n_bar: 1.0,
        species: vec![
            ClassicalSpecies { mass: 1.0, nu: 1.0, density: 1.0, velocity: [0.5, 0.0, 0.0], temperature: 1.0, anisotropy: 0.2 },
            ClassicalSpecies { mass: 3.0, nu: 2.0, density: 0.5, velocity: [-0.5, 0.2, 0.0], temperature: 2.0, anisotropy: 0.0 },
        ],
        velocity_cells: cells,
        v_max: 8.0,
        solver_tol: 1e-13,
    }
}

/// For the built-in classical fixture at `epsilon`: blocks of length
/// `cells` holding `v_x`, the summed scaled attractor and the summed
/// Maxwellian along the `v_x` axis, then `1/(ε²c²β̃)` and `T^nr`.
pub fn attractor_slice(epsilon: f64, cells: usize) -> Result<Vec<f64>> {
    let probe = demo_probe(cells);
    probe.validate()?;
    if !(epsilon > 0.0 && epsilon <= 1.0) {
        return Err(relbgk::Error::Domain(format!("epsilon must lie in (0, 1], got {epsilon}")));
    }
    let vgrid = probe.velocity_grid()?;
    let f_bar = probe.classical_data(&vgrid);
    let refs: Vec<&[f64]> = f_bar.iter().map(Vec::as_slice).collect();
    let masses: Vec<f64> = probe.species.iter().map(|s| s.mass).collect();
    let nus: Vec<f64> = probe.species.iter().map(|s| s.nu).collect();
    let cm = classical_moments(&refs, &vgrid, &masses, &nus)?;
    let sa = scaled_attractors(&probe, &vgrid, &f_bar, &cm, epsilon)?;
    let mid = cells / 2;
    let mut v = Vec::with_capacity(3 * cells + 2);
    let nodes: Vec<usize> = (0..cells).map(|ix| vgrid.node_index(ix, mid, mid)).collect();
    v.extend(nodes.iter().map(|&k| vgrid.momentum(k)[0]));
    v.extend(nodes.iter().map(|&k| sa.attractors.iter().map(|a| a[k]).sum::<f64>()));
    v.extend(nodes.iter().map(|&k| sa.maxwellians.iter().map(|m| m[k]).sum::<f64>()));
    v.push(1.0 / (epsilon * epsilon * sa.equilibrium.beta_tilde));
    v.push(cm.t_nr);
    Ok(v)
}

/// `[β̃, RHS, floor, β₀, LHS(β₀), β₁, LHS(β₁), …]` for two Jüttner species of
/// unit density and `τ`, drifting at `±drift`, with `samples` log-spaced `β`
/// spanning two decades around the root.
pub fn beta_relation(m1: f64, m2: f64, kt1: f64, kt2: f64, drift: f64, samples: usize) -> Result<Vec<f64>> {
    let consts = PhysicalConstants::default();
    let u1 = FourVector::from_three_velocity([drift, 0.0, 0.0], 1.0)?;
    let u2 = FourVector::from_three_velocity([-drift, 0.0, 0.0], 1.0)?;
    let flows = [FlowMoments::juttner(m1, 1.0, kt1, u1, 1.0)?, FlowMoments::juttner(m2, 1.0, kt2, u2, 1.0)?];
    let params = [SpeciesParams::new(m1, 1.0, 0.0)?, SpeciesParams::new(m2, 1.0, 0.0)?];
    let sol = solve_beta_tilde(&flows, &params, &consts, &SolverOptions::default())?;
    let rho = [flows[0].rho, flows[1].rho];
    let floor = m1 * m1 * rho[0] + m2 * m2 * rho[1];
    let mut v = vec![sol.beta_tilde, sol.rhs, floor];
    let n = samples.max(2);
    for k in 0..n {
        let b = sol.beta_tilde * 10f64.powf(-1.0 + 2.0 * k as f64 / (n - 1) as f64);
        v.extend([b, beta_relation_lhs(b, &rho, &params, &consts)?]);
    }
    Ok(v)
}

#[wasm_bindgen(js_name = relaxationCurves)]
#[allow(clippy::too_many_arguments)]
pub fn relaxation_curves_js(
    kt1: f64,
    kt2: f64,
    drift: f64,
    mass2: f64,
    tau2: f64,
    n_cells: usize,
    dt: f64,
    steps: usize,
) -> std::result::Result<Vec<f64>, JsError> {
    js(relaxation_curves(kt1, kt2, drift, mass2, tau2, n_cells, dt, steps))
}

#[wasm_bindgen(js_name = attractorSlice)]
pub fn attractor_slice_js(epsilon: f64, cells: usize) -> std::result::Result<Vec<f64>, JsError> {
    js(attractor_slice(epsilon, cells))
}

#[wasm_bindgen(js_name = betaRelation)]
pub fn beta_relation_js(
    m1: f64,
    m2: f64,
    kt1: f64,
    kt2: f64,
    drift: f64,
    samples: usize,
) -> std::result::Result<Vec<f64>, JsError> {
    js(beta_relation(m1, m2, kt1, kt2, drift, samples))
}
