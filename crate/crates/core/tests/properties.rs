mod common;

use proptest::prelude::*;

use relbgk::diagnostics::*;
use relbgk::dynamics::*;
use relbgk::equilibrium::*;
use relbgk::phase_space::*;
use relbgk::special::*;
use relbgk::{FourVector, MomentumGrid, PhysicalConstants, SpeciesParams};

fn unit() -> PhysicalConstants {
    PhysicalConstants::default()
}

fn rest() -> FourVector {
    FourVector::new(1.0, 0.0, 0.0, 0.0)
}

#[test]
fn entropy_matches_direct_sum() {
    let consts = PhysicalConstants::new(1.0, 1.3, 0.7).unwrap();
    let sp = SpeciesParams::new(1.0, 1.0, 0.5).unwrap();
    let g = MomentumGrid::new(1.0, 1.0, 4.0, 12).unwrap();
    let u = FourVector::from_three_velocity([0.2, 0.0, -0.1], 1.0).unwrap();
    let f = discretize_juttner(&g, &sp, 0.8, 0.3, &u, &consts).unwrap();
    let s = entropy_four_flow(&[&f], &[&g], &[sp.clone()], &consts).unwrap();
    let mut direct = [0.0; 4];
    for (k, fk) in f.iter().enumerate() {
        let p = g.four_momentum(k);
        let l = fk * (fk * consts.h.powi(3) / sp.degeneracy).ln() / p[0] * g.cell_volume();
        for mu in 0..4 {
            direct[mu] -= consts.k * consts.c * p[mu] * l;
        }
    }
    for mu in 0..4 {
        assert!((s[mu] - direct[mu]).abs() < 1e-12 * direct[0].abs(), "{mu}: {} vs {}", s[mu], direct[mu]);
    }
}

#[test]
fn doubled_species_differs_by_mixing_term() {
    let consts = unit();
    let sp = SpeciesParams::new(1.0, 1.0, 0.0).unwrap();
    let g = MomentumGrid::new(1.0, 1.0, 3.0, 10).unwrap();
    let f = discretize_juttner(&g, &sp, 1.0, 0.2, &rest(), &consts).unwrap();
    let f2: Vec<f64> = f.iter().map(|x| 2.0 * x).collect();
    let two = entropy_four_flow(&[&f, &f], &[&g, &g], &[sp.clone(), sp.clone()], &consts).unwrap();
    let one = entropy_four_flow(&[&f2], &[&g], &[sp.clone()], &consts).unwrap();
    let lab: f64 = f.iter().sum::<f64>() * g.cell_volume();
    let mixing = 2.0 * consts.k * std::f64::consts::LN_2 * lab;
    assert!((two[0] - one[0] - mixing).abs() < 1e-12 * mixing);
}

#[test]
fn weighted_norm_expands_pairwise() {
    let params = [SpeciesParams::new(1.0, 0.5, 0.0).unwrap(), SpeciesParams::new(3.0, 2.0, 0.0).unwrap()];
    let flows = [
        FlowMoments::juttner(1.0, 1.2, 0.3, FourVector::from_three_velocity([0.4, 0.1, 0.0], 1.0).unwrap(), 1.0).unwrap(),
        FlowMoments::juttner(3.0, 0.4, 0.5, FourVector::from_three_velocity([-0.3, 0.0, 0.2], 1.0).unwrap(), 1.0).unwrap(),
    ];
    let w = weighted_flow_sum(&flows, &params).unwrap();
    let mut brute = 0.0;
    for i in 0..2 {
        for j in i..2 {
            let factor = if i == j { 1.0 } else { 2.0 };
            brute += factor * params[i].weight() * params[j].weight() * flows[i].n * flows[j].n * flows[i].u.dot(&flows[j].u);
        }
    }
    assert!((w.norm * w.norm / brute - 1.0).abs() < 1e-14);
}

#[test]
fn velocity_recovery_improves_with_resolution() {
    let consts = unit();
    let sp = SpeciesParams::new(1.0, 1.0, 0.0).unwrap();
    let u0 = FourVector::from_three_velocity([0.3, -0.2, 0.1], 1.0).unwrap();
    let err = |n| {
        let g = MomentumGrid::for_equilibrium(1.0, &consts, 0.05, [0.3, -0.2, 0.1], 1e-12, n).unwrap();
        let f = discretize_juttner(&g, &sp, 1.0, 0.05, &u0, &consts).unwrap();
        compute_moments(&f, &sp, &g, &consts).unwrap().u.max_abs_diff(&u0)
    };
    let (coarse, fine) = (err(16), err(32));
    assert!(fine < 1e-3 * coarse && fine < 1e-7, "{coarse} {fine}");
}

#[test]
fn bessel_and_lhs_anchors() {
    let r = bessel_ratio_k2_k1(100.0).unwrap();
    assert!((r - (1.0 + 3.0 / 200.0)).abs() < 1e-4);
    let lhs = beta_relation_lhs(1.0, &[1.0], &[SpeciesParams::new(1.0, 1.0, 0.0).unwrap()], &unit()).unwrap();
    assert!((lhs / (common::k2_scaled(1.0) / common::k1_scaled(1.0)) - 1.0).abs() < 1e-12);
}

#[test]
fn two_equal_species_at_common_temperature() {
    let consts = unit();
    let sp = SpeciesParams::new(1.0, 1.0, 0.0).unwrap();
    let g = MomentumGrid::for_equilibrium(1.0, &consts, 0.05, [0.0; 3], 1e-14, 32).unwrap();
    let f1 = discretize_juttner(&g, &sp, 1.0, 0.05, &rest(), &consts).unwrap();
    let f2 = discretize_juttner(&g, &sp, 0.3, 0.05, &rest(), &consts).unwrap();
    let (eq, _) =
        solve_equilibrium(&[&f1, &f2], &[&g, &g], &[sp.clone(), sp.clone()], &consts, &SolverOptions::default()).unwrap();
    assert!((eq.beta_tilde * 0.05 - 1.0).abs() < 1e-9, "{}", eq.beta_tilde);
}

#[test]
fn equal_species_attractors_sum_to_single_attractor() {
    let consts = unit();
    let sp = SpeciesParams::new(1.0, 0.8, 0.0).unwrap();
    let g = MomentumGrid::new(1.0, 1.0, 4.0, 14).unwrap();
    let fs: Vec<Vec<f64>> = [(1.0, 0.2, [0.2, 0.0, 0.0]), (0.5, 0.4, [-0.1, 0.1, 0.0]), (0.7, 0.3, [0.0, 0.0, 0.3])]
        .iter()
        .map(|(n, t, v)| {
            let u = FourVector::from_three_velocity(*v, 1.0).unwrap();
            discretize_juttner(&g, &sp, *n, *t, &u, &consts).unwrap()
        })
        .collect();
    let total: Vec<f64> = (0..g.len()).map(|k| fs.iter().map(|f| f[k]).sum()).collect();
    let refs: Vec<&[f64]> = fs.iter().map(Vec::as_slice).collect();
    let opts = SolverOptions::default();
    let (mix, _) = solve_equilibrium(&refs, &[&g, &g, &g], &vec![sp.clone(); 3], &consts, &opts).unwrap();
    let (single, moments) = solve_equilibrium(&[&total], &[&g], &[sp.clone()], &consts, &opts).unwrap();
    assert!(mix.u_tilde.max_abs_diff(&moments[0].u) < 1e-13);
    let j_single = build_attractor(&single, 0, &g).unwrap();
    let parts: Vec<Vec<f64>> = (0..3).map(|i| build_attractor(&mix, i, &g).unwrap()).collect();
    let peak = j_single.iter().cloned().fold(0.0, f64::max);
    for k in 0..g.len() {
        let s: f64 = parts.iter().map(|p| p[k]).sum();
        assert!((s - j_single[k]).abs() < 1e-12 * peak);
    }
}

#[test]
fn identical_halves_are_indistinguishable() {
    let sp = SpeciesConfig {
        mass: 1.0,
        tau: 1.0,
        spin: 0.0,
        initial: InitialCondition {
            density: 0.5,
            temperature: 0.2,
            velocity: [0.1, 0.0, 0.0],
            density_modulation: 0.2,
            noise: 0.0,
            discretization: Discretization::Point,
        },
    };
    let cfg = ScenarioConfig {
        constants: unit(),
        species: vec![sp.clone(), sp],
        momentum: MomentumGridConfig { n_cells: 8, p_max: None, tail_tol: 1e-8 },
        space: SpaceConfig { n_cells: 4, length: 4.0 },
        dt: 0.1,
        steps: 10,
        cfl: 0.9,
        output_every: 1,
        scheme: RelaxationScheme::MassConserving,
        solver_tol: 1e-12,
        seed: 0,
    };
    let r = indifferentiability_check(&cfg).unwrap();
    assert!(r.max_l1_rel < 1e-14, "{}", r.max_l1_rel);
}

#[test]
fn equal_mass_probe_anchor_at_unit_epsilon() {
    // At ε = 1 the scaled problem is an ordinary equal-mass mixture.
    let probe = NewtonianProbeConfig {
        epsilons: vec![1.0, 0.5, 0.25],
        c: 1.0,
        s: 1.0,
        n_bar: 1.0,
        species: vec![
            ClassicalSpecies { mass: 1.0, nu: 1.0, density: 1.0, velocity: [0.1, 0.0, 0.0], temperature: 0.05, anisotropy: 0.0 },
            ClassicalSpecies { mass: 1.0, nu: 1.0, density: 0.5, velocity: [-0.1, 0.0, 0.0], temperature: 0.1, anisotropy: 0.0 },
        ],
        velocity_cells: 12,
        v_max: 1.5,
        solver_tol: 1e-13,
    };
    let vgrid = probe.velocity_grid().unwrap();
    let f = probe.classical_data(&vgrid);
    let sp = SpeciesParams::new(1.0, 1.0, 0.0).unwrap();
    let consts = unit();
    let opts = SolverOptions::default();
    let (mix, _) = solve_equilibrium(&[&f[0], &f[1]], &[&vgrid, &vgrid], &[sp.clone(), sp.clone()], &consts, &opts).unwrap();
    let total: Vec<f64> = f[0].iter().zip(&f[1]).map(|(a, b)| a + b).collect();
    let (single, _) = solve_equilibrium(&[&total], &[&vgrid], &[sp.clone()], &consts, &opts).unwrap();
    let report = newtonian_limit_probe(&probe).unwrap();
    assert!((report.rows[0].beta_tilde / single.beta_tilde - 1.0).abs() < 1e-12);
    assert!((mix.beta_tilde / single.beta_tilde - 1.0).abs() < 1e-12);
}

proptest! {
    #[test]
    fn time_component_of_velocity_at_least_c(vals in prop::collection::vec(0.0f64..1.0, 64)) {
        let consts = unit();
        let sp = SpeciesParams::new(1.0, 1.0, 0.0).unwrap();
        let g = MomentumGrid::new(1.0, 1.0, 2.0, 4).unwrap();
        prop_assume!(vals.iter().any(|v| *v > 0.1));
        let m = compute_moments(&vals, &sp, &g, &consts).unwrap();
        prop_assert!(m.u[0] >= 1.0 - 1e-14);
        let lab: f64 = vals.iter().sum::<f64>() * g.cell_volume();
        prop_assert!((m.n * m.u[0] - lab).abs() <= 1e-12 * lab);
    }

    #[test]
    fn relaxation_preserves_positivity(vals in prop::collection::vec(0.0f64..1.0, 64), dt in 0.0f64..50.0, t in 0.1f64..1.0) {
        let consts = unit();
        let sp = SpeciesParams::new(1.0, 0.3, 0.0).unwrap();
        let g = MomentumGrid::new(1.0, 1.0, 2.0, 4).unwrap();
        prop_assume!(vals.iter().any(|v| *v > 0.1));
        let j = discretize_juttner(&g, &sp, 1.0, t, &rest(), &consts).unwrap();
        for scheme in [RelaxationScheme::Exponential, RelaxationScheme::MassConserving] {
            let out = relax_values(&vals, &j, &g, &sp, &consts, dt, scheme).unwrap();
            prop_assert!(out.iter().all(|x| *x >= 0.0));
        }
    }

    #[test]
    fn integral_ratio_is_decreasing(m in 0.1f64..10.0, b in 1e-3f64..1e3, r in 1.001f64..10.0) {
        prop_assert!(integral_ratio(m, b, 1.0).unwrap() > integral_ratio(m, b * r, 1.0).unwrap());
    }
}
