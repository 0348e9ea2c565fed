//! Subcommand implementations. Each writes its files into `out` and returns
//! a short report for standard output.

use std::fs;
use std::path::Path;

use relbgk::diagnostics::{
    cell_attractors, conservation_ledger, indifferentiability_check, newtonian_limit_probe, LedgerBudget,
    LedgerSummary, ProbeReport,
};
use relbgk::dynamics::{run_from_state, temperature_proxy, SeriesRow};
use relbgk::snapshot;
use serde::Serialize;

use crate::config::{RunConfig, ScenarioId};
use crate::error::{CliError, CliResult};
use crate::output::{indifferentiability_csv, num, probe_csv, series_csv, table, write_atomic, write_json};

pub const SERIES_FILE: &str = "series.csv";
pub const SUMMARY_FILE: &str = "summary.json";
pub const SNAPSHOT_FILE: &str = "snapshot.json";
pub const PROBE_FILE: &str = "probe.csv";
pub const PROBE_SUMMARY_FILE: &str = "probe_summary.json";
pub const INDIFF_FILE: &str = "indifferentiability.csv";
pub const INDIFF_SUMMARY_FILE: &str = "indifferentiability_summary.json";
pub const MOMENTS_FILE: &str = "moments.csv";
pub const SLICES_FILE: &str = "slices.csv";

#[derive(Debug, Serialize)]
struct ErrorInfo {
    category: &'static str,
    message: String,
}

#[derive(Debug, Serialize)]
struct RunSummary<'a> {
    scenario: &'static str,
    steps_requested: usize,
    steps_completed: usize,
    time: f64,
    failure: Option<ErrorInfo>,
    budget: LedgerBudget,
    ledger: &'a LedgerSummary,
    max_h_monitor: f64,
    min_entropy_production: f64,
    max_solver_residual: f64,
    solver_iterations: usize,
    final_row: Option<&'a SeriesRow>,
}

fn prepare(out: &Path) -> CliResult<()> {
    fs::create_dir_all(out).map_err(|e| CliError::io(out, e))
}

/// Dispatches on the configured scenario.
pub fn run(cfg: &RunConfig, out: &Path, verbose: bool) -> CliResult<String> {
    match cfg.scenario {
        ScenarioId::Relax0d | ScenarioId::Mix1d => run_simulation(cfg, out, verbose),
        ScenarioId::Indifferentiability => check_indifferentiability(cfg, out),
        ScenarioId::NewtonianSweep => probe_newtonian(cfg, out),
    }
}

fn run_simulation(cfg: &RunConfig, out: &Path, verbose: bool) -> CliResult<String> {
    let sim = cfg.simulation()?;
    let mut state = sim.initial_state()?;
    state.solver.verbose = verbose;
    let n_species = state.n_species();
    let outcome = run_from_state(state, sim.dt, sim.steps, sim.cfl, sim.output_every)?;
    prepare(out)?;
    write_atomic(&out.join(SERIES_FILE), &series_csv(&outcome.series, n_species)?)?;
    snapshot::save(&out.join(SNAPSHOT_FILE), &outcome.state)?;
    let budget = LedgerBudget { mass_rel: cfg.tolerances.mass_rel, energy_momentum_rel: cfg.tolerances.energy_momentum_rel };
    let ledger = conservation_ledger(&outcome.initial_totals, &outcome.reports, &budget);
    let r = &outcome.reports;
    let summary = RunSummary {
        scenario: cfg.scenario.name(),
        steps_requested: sim.steps,
        steps_completed: r.len(),
        time: outcome.state.time,
        failure: outcome.failure.as_ref().map(|e| ErrorInfo { category: e.category(), message: e.to_string() }),
        budget,
        ledger: &ledger,
        max_h_monitor: r.iter().map(|x| x.h_monitor).fold(f64::NEG_INFINITY, f64::max),
        min_entropy_production: r.iter().map(|x| x.entropy_production).fold(f64::INFINITY, f64::min),
        max_solver_residual: r.iter().map(|x| x.max_residual).fold(0.0, f64::max),
        solver_iterations: r.iter().map(|x| x.solver_iterations).sum(),
        final_row: outcome.series.last(),
    };
    write_json(&out.join(SUMMARY_FILE), &summary)?;
    if let Some(e) = outcome.failure {
        return Err(e.into());
    }
    let mass = ledger.mass_drift_rel.iter().copied().fold(0.0, f64::max);
    Ok(format!(
        "{}: {} steps to t = {}; mass drift {:.2e} ({}), energy-momentum drift {:.2e} ({}); outputs in {}",
        cfg.scenario.name(),
        r.len(),
        num(outcome.state.time),
        mass,
        if ledger.mass_ok { "within budget" } else { "over budget" },
        ledger.energy_momentum_drift_rel,
        if ledger.energy_momentum_ok { "within budget" } else { "over budget" },
        out.display()
    ))
}

#[derive(Debug, Serialize)]
struct ProbeSummary<'a> {
    report: &'a ProbeReport,
    slope_band: [f64; 2],
    slope_inv_beta_in_band: bool,
    slope_temperature_defect_in_band: bool,
}

pub fn probe_newtonian(cfg: &RunConfig, out: &Path) -> CliResult<String> {
    let report = newtonian_limit_probe(cfg.probe()?)?;
    prepare(out)?;
    let csv = probe_csv(&report)?;
    write_atomic(&out.join(PROBE_FILE), &csv)?;
    let band = [1.7, 2.3];
    let in_band = |s: f64| s >= band[0] && s <= band[1];
    write_json(
        &out.join(PROBE_SUMMARY_FILE),
        &ProbeSummary {
            report: &report,
            slope_band: band,
            slope_inv_beta_in_band: in_band(report.slope_inv_beta),
            slope_temperature_defect_in_band: in_band(report.slope_temperature_defect),
        },
    )?;
    Ok(format!(
        "{}slope of 1/beta: {:.4}\nslope of temperature defect: {:.4}\nfitted C: {:.4e}\nL1 strictly decreasing: {}",
        String::from_utf8_lossy(&csv),
        report.slope_inv_beta,
        report.slope_temperature_defect,
        report.fitted_c,
        report.l1_strictly_decreasing
    ))
}

#[derive(Debug, Serialize)]
struct IndiffSummary<'a> {
    report: &'a relbgk::diagnostics::IndifferentiabilityReport,
    tolerance: f64,
    pass: bool,
}

pub fn check_indifferentiability(cfg: &RunConfig, out: &Path) -> CliResult<String> {
    let sim = cfg.simulation()?;
    let report = indifferentiability_check(sim)?;
    prepare(out)?;
    write_atomic(&out.join(INDIFF_FILE), &indifferentiability_csv(&report)?)?;
    let tol = cfg.tolerances.indifferentiability_l1;
    let pass = report.max_l1 <= tol;
    write_json(&out.join(INDIFF_SUMMARY_FILE), &IndiffSummary { report: &report, tolerance: tol, pass })?;
    let msg = format!("{} steps, max L1 {:.3e} (tolerance {:.1e})", report.steps, report.max_l1, tol);
    if pass {
        Ok(msg)
    } else {
        Err(CliError::CheckFailed(msg))
    }
}

/// Per-cell moments and `p_x` slices of `f` and `J` from a snapshot.
pub fn emit_plot_data(snapshot_path: &Path, out: &Path, cell: usize) -> CliResult<String> {
    let state = snapshot::load(snapshot_path)?;
    let nx = state.spatial.n_cells;
    if cell >= nx {
        return Err(relbgk::Error::Domain(format!("cell {cell} out of range (snapshot has {nx})")).into());
    }
    let c = state.consts.c;
    let mut rows = Vec::new();
    for x in 0..nx {
        for (i, m) in state.cell_moments(x)?.iter().enumerate() {
            let t = temperature_proxy(m, state.params[i].mass, &state.consts)? / state.consts.k;
            rows.push(vec![
                x.to_string(),
                num((x as f64 + 0.5) * state.spatial.dx),
                i.to_string(),
                num(m.n),
                num(m.u[1] / c),
                num(m.u[2] / c),
                num(m.u[3] / c),
                num(t),
                num(m.entropy_density()),
                num(m.lab_density),
            ]);
        }
    }
    let header = ["cell", "x", "species", "n", "ux", "uy", "uz", "T", "entropy_density", "lab_density"];
    prepare(out)?;
    write_atomic(&out.join(MOMENTS_FILE), &table(&header, &rows)?)?;

    let attractors = cell_attractors(&state, cell)?;
    let mut slices = Vec::new();
    for (i, g) in state.grids.iter().enumerate() {
        let n = g.n_cells();
        let f = state.fields[i].cell(cell);
        for ix in 0..n {
            let k = g.node_index(ix, n / 2, n / 2);
            slices.push(vec![i.to_string(), cell.to_string(), num(g.momentum(k)[0]), num(f[k]), num(attractors[i][k])]);
        }
    }
    write_atomic(&out.join(SLICES_FILE), &table(&["species", "cell", "px", "f", "attractor"], &slices)?)?;
    Ok(format!("{} cells, {} species; wrote {MOMENTS_FILE} and {SLICES_FILE} to {}", nx, state.n_species(), out.display()))
}
