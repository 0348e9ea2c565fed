//! Time integration of the relaxation model
//!
//! ```text
//! ∂_t f_i + (c p/p⁰)·∇_x f_i = (c m_i)/(τ_i p⁰) (J_i − f_i)
//! ```
//!
//! in a homogeneous cell (0D) or on a periodic 1D row of cells. Relaxation
//! uses the exponential update with the attractor frozen over the step;
//! transport is first-order upwind; the two are combined by Strang splitting.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::diagnostics::h_theorem_monitor_scaled;
use crate::equilibrium::{build_attractor, solve_equilibrium, EquilibriumState, SolverOptions};
use crate::phase_space::{
    compute_moments, discretize_juttner, discretize_juttner_cell_average, entropy_four_flow,
    suggest_p_max, DistributionField, MomentSet, MomentumGrid, SpeciesParams, DEFAULT_TAIL_TOL,
};
use crate::special::inverse_k1_over_k2;
use crate::sum::Accumulator;
use crate::tensor::{FourVector, PhysicalConstants};
use crate::{Error, Result};

/// How a relaxation step maps `(f, J)` to the new distribution.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RelaxationScheme {
    /// Exponential update followed by removal of the discrete `∫ f dp`
    /// defect along `J`; keeps every species' particle number exact.
    #[default]
    MassConserving,
    /// Plain exponential update `f + (1 − e^{-νΔt})(J − f)`.
    Exponential,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpatialGrid {
    pub n_cells: usize,
    pub dx: f64,
    pub periodic: bool,
}

impl SpatialGrid {
    /// A single homogeneous cell.
    pub fn homogeneous() -> Self {
        Self { n_cells: 1, dx: 1.0, periodic: true }
    }

    pub fn periodic(n_cells: usize, length: f64) -> Result<Self> {
        let g = Self { n_cells, dx: length / n_cells.max(1) as f64, periodic: true };
        g.validate()?;
        Ok(g)
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_cells == 0 || !(self.dx > 0.0 && self.dx.is_finite()) {
            return Err(Error::Domain(format!(
                "spatial grid needs n_cells ≥ 1 and dx > 0, got {} and {}",
                self.n_cells, self.dx
            )));
        }
        if !self.periodic {
            return Err(Error::Precondition("only periodic boundaries are supported".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct SimState {
    pub time: f64,
    pub consts: PhysicalConstants,
    pub params: Vec<SpeciesParams>,
    pub grids: Vec<MomentumGrid>,
    /// One field per species, `spatial.n_cells` cells each.
    pub fields: Vec<DistributionField>,
    pub spatial: SpatialGrid,
    /// Last solved equilibrium in each cell.
    pub equilibria: Vec<Option<EquilibriumState>>,
    pub scheme: RelaxationScheme,
    pub solver: SolverOptions,
}

/// Conserved totals over the whole domain.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Totals {
    /// `Σ_x ∫ f_i dp Δx` per species.
    pub mass: Vec<f64>,
    /// `Σ_x Σ_i ∫ p^μ f_i dp Δx`.
    pub energy_momentum: FourVector,
    /// `Σ_x S⁰ Δx`.
    pub entropy: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StepReport {
    pub time: f64,
    pub dt: f64,
    pub mass_change: Vec<f64>,
    pub energy_momentum_change: FourVector,
    /// Change of the total entropy; boundary fluxes cancel on a periodic row.
    pub entropy_production: f64,
    /// Largest scaled H-monitor value over cells (≤ 0 up to rounding).
    pub h_monitor: f64,
    pub solver_iterations: usize,
    pub max_residual: f64,
    pub totals: Totals,
}

impl SimState {
    pub fn new(
        consts: PhysicalConstants,
        params: Vec<SpeciesParams>,
        grids: Vec<MomentumGrid>,
        fields: Vec<DistributionField>,
        spatial: SpatialGrid,
    ) -> Result<Self> {
        consts.validate()?;
        spatial.validate()?;
        if params.is_empty() || params.len() != grids.len() || params.len() != fields.len() {
            return Err(Error::Domain("species, grids and fields must have equal, non-zero length".into()));
        }
        for (i, ((sp, g), f)) in params.iter().zip(&grids).zip(&fields).enumerate() {
            sp.validate()?;
            if (g.mass() - sp.mass).abs() > 1e-15 * sp.mass || (g.c() - consts.c).abs() > 0.0 {
                return Err(Error::Domain(format!("grid {i} does not match species mass or c")));
            }
            if f.n_nodes() != g.len() || f.n_cells_x() != spatial.n_cells {
                return Err(Error::Domain(format!("field {i} shape does not match its grids")));
            }
            f.check_nonnegative()?;
        }
        Ok(Self {
            time: 0.0,
            consts,
            params,
            grids,
            fields,
            spatial,
            equilibria: vec![None; spatial.n_cells],
            scheme: RelaxationScheme::default(),
            solver: SolverOptions::default(),
        })
    }

    pub fn n_species(&self) -> usize {
        self.params.len()
    }

    pub fn cell_fields(&self, x: usize) -> Vec<&[f64]> {
        self.fields.iter().map(|f| f.cell(x)).collect()
    }

    pub fn grid_refs(&self) -> Vec<&MomentumGrid> {
        self.grids.iter().collect()
    }

    /// Moments of every species in cell `x`.
    pub fn cell_moments(&self, x: usize) -> Result<Vec<MomentSet>> {
        (0..self.n_species())
            .map(|i| {
                compute_moments(self.fields[i].cell(x), &self.params[i], &self.grids[i], &self.consts)
                    .map_err(|e| e.at(i, x))
            })
            .collect()
    }

    pub fn totals(&self) -> Result<Totals> {
        let dx = self.spatial.dx;
        let mut mass: Vec<Accumulator> = vec![Accumulator::default(); self.n_species()];
        let mut em = [Accumulator::default(); 4];
        let mut entropy = Accumulator::default();
        for x in 0..self.spatial.n_cells {
            for (i, m) in self.cell_moments(x)?.iter().enumerate() {
                mass[i].add(m.lab_density * dx);
                let pm = m.momentum_density(self.consts.c);
                for mu in 0..4 {
                    em[mu].add(pm[mu] * dx);
                }
                entropy.add(m.entropy_density() * dx);
            }
        }
        Ok(Totals {
            mass: mass.iter().map(Accumulator::value).collect(),
            energy_momentum: FourVector(em.map(|a| a.value())),
            entropy: entropy.value(),
        })
    }

    /// One Strang step: transport `dt/2`, relax `dt`, transport `dt/2`.
    /// Transport is skipped for a single cell.
    pub fn step(&mut self, dt: f64, cfl_bound: f64) -> Result<StepReport> {
        check_dt(dt)?;
        let before = self.totals()?;
        let transport = self.spatial.n_cells > 1;
        if transport {
            // Checked up front so that a violation leaves the state untouched.
            self.check_cfl(0.5 * dt, cfl_bound)?;
            self.transport_in_place(0.5 * dt, cfl_bound)?;
        }
        let relax = self.relax_in_place(dt)?;
        if transport {
            self.transport_in_place(0.5 * dt, cfl_bound)?;
        }
        self.time += dt;
        let after = self.totals()?;
        Ok(report(self.time, dt, &before, after, relax))
    }

    /// Largest `|c p_x/p⁰| Δt/Δx` over all species and nodes.
    pub fn cfl_number(&self, dt: f64) -> f64 {
        let c = self.consts.c;
        self.grids
            .iter()
            .flat_map(|g| g.px().iter().zip(g.p0()).map(move |(px, p0)| (c * px / p0).abs()))
            .fold(0.0, f64::max)
            * dt
            / self.spatial.dx
    }

    fn check_cfl(&self, dt: f64, bound: f64) -> Result<()> {
        if !(bound > 0.0 && bound <= 1.0) {
            return Err(Error::Domain(format!("CFL bound must lie in (0, 1], got {bound}")));
        }
        let cfl = self.cfl_number(dt);
        if cfl > bound {
            return Err(Error::Cfl { cfl, bound });
        }
        Ok(())
    }

    /// First-order upwind advection of every momentum node along x.
    pub fn transport_in_place(&mut self, dt: f64, cfl_bound: f64) -> Result<()> {
        check_dt(dt)?;
        self.check_cfl(dt, cfl_bound)?;
        let nx = self.spatial.n_cells;
        let lambda = dt / self.spatial.dx;
        let c = self.consts.c;
        for (field, grid) in self.fields.iter_mut().zip(&self.grids) {
            let old = field.clone();
            let speeds: Vec<f64> = grid.px().iter().zip(grid.p0()).map(|(px, p0)| c * px / p0).collect();
            let update = |x: usize, out: &mut [f64]| {
                let left = old.cell((x + nx - 1) % nx);
                let here = old.cell(x);
                let right = old.cell((x + 1) % nx);
                for (k, o) in out.iter_mut().enumerate() {
                    let a = speeds[k] * lambda;
                    // Flux difference F_{x+½} − F_{x−½} with upwind states.
                    let diff = if a >= 0.0 {
                        a * (here[k] - left[k])
                    } else {
                        a * (right[k] - here[k])
                    };
                    *o = here[k] - diff;
                }
            };
            for_each_cell(field, update);
        }
        Ok(())
    }

    /// Relaxation over `dt` in every cell with the attractor frozen at the
    /// start of the step.
    pub fn relax_in_place(&mut self, dt: f64) -> Result<RelaxSummary> {
        check_dt(dt)?;
        let nx = self.spatial.n_cells;
        let results = map_cells(nx, |x| self.relax_cell(x, dt))
            .into_iter()
            .collect::<Result<Vec<_>>>()?;
        let mut summary = RelaxSummary { h_monitor: f64::NEG_INFINITY, iterations: 0, max_residual: 0.0 };
        for (x, cell) in results.into_iter().enumerate() {
            for (i, values) in cell.values.into_iter().enumerate() {
                self.fields[i].cell_mut(x).copy_from_slice(&values);
            }
            summary.h_monitor = summary.h_monitor.max(cell.h_monitor);
            summary.iterations += cell.eq.iterations;
            summary.max_residual = summary.max_residual.max(cell.eq.relative_residual);
            self.equilibria[x] = Some(cell.eq);
        }
        Ok(summary)
    }

    fn relax_cell(&self, x: usize, dt: f64) -> Result<CellRelaxation> {
        let fields = self.cell_fields(x);
        let grids = self.grid_refs();
        let (eq, _) = solve_equilibrium(&fields, &grids, &self.params, &self.consts, &self.solver)
            .map_err(|e| e.at(0, x))?;
        let attractors = (0..self.n_species())
            .map(|i| build_attractor(&eq, i, &self.grids[i]))
            .collect::<Result<Vec<_>>>()?;
        let h = h_theorem_monitor_scaled(&fields, &attractors, &grids, &self.params, &self.consts)?;
        let values = (0..self.n_species())
            .map(|i| {
                relax_values(fields[i], &attractors[i], &self.grids[i], &self.params[i], &self.consts, dt, self.scheme)
                    .map_err(|e| e.at(i, x))
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(CellRelaxation { values, eq, h_monitor: h })
    }
}

struct CellRelaxation {
    values: Vec<Vec<f64>>,
    eq: EquilibriumState,
    h_monitor: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RelaxSummary {
    pub h_monitor: f64,
    pub iterations: usize,
    pub max_residual: f64,
}

fn check_dt(dt: f64) -> Result<()> {
    if dt > 0.0 && dt.is_finite() {
        Ok(())
    } else {
        Err(Error::Domain(format!("time step must be positive and finite, got {dt}")))
    }
}

fn report(time: f64, dt: f64, before: &Totals, after: Totals, relax: RelaxSummary) -> StepReport {
    StepReport {
        time,
        dt,
        mass_change: after.mass.iter().zip(&before.mass).map(|(a, b)| a - b).collect(),
        energy_momentum_change: after.energy_momentum - before.energy_momentum,
        entropy_production: after.entropy - before.entropy,
        h_monitor: relax.h_monitor,
        solver_iterations: relax.iterations,
        max_residual: relax.max_residual,
        totals: after,
    }
}

#[cfg(feature = "parallel")]
fn map_cells<T: Send, F: Fn(usize) -> T + Sync + Send>(n: usize, f: F) -> Vec<T> {
    use rayon::prelude::*;
    (0..n).into_par_iter().map(f).collect()
}

#[cfg(not(feature = "parallel"))]
fn map_cells<T, F: Fn(usize) -> T>(n: usize, f: F) -> Vec<T> {
    (0..n).map(f).collect()
}

#[cfg(feature = "parallel")]
fn for_each_cell<F: Fn(usize, &mut [f64]) + Sync + Send>(field: &mut DistributionField, f: F) {
    use rayon::prelude::*;
    let n = field.n_nodes();
    field.values_mut().par_chunks_exact_mut(n).enumerate().for_each(|(x, out)| f(x, out));
}

#[cfg(not(feature = "parallel"))]
fn for_each_cell<F: Fn(usize, &mut [f64])>(field: &mut DistributionField, f: F) {
    for (x, out) in field.cells_mut().enumerate() {
        f(x, out);
    }
}

/// New nodal values of one species after relaxing towards `j` for `dt`.
pub fn relax_values(
    f: &[f64],
    j: &[f64],
    grid: &MomentumGrid,
    species: &SpeciesParams,
    consts: &PhysicalConstants,
    dt: f64,
    scheme: RelaxationScheme,
) -> Result<Vec<f64>> {
    check_dt(dt)?;
    let rate = consts.c * species.mass / species.tau;
    let mut out: Vec<f64> = f
        .iter()
        .zip(j)
        .zip(grid.p0())
        .map(|((fk, jk), p0)| {
            let phi = -(-rate / p0 * dt).exp_m1();
            fk + phi * (jk - fk)
        })
        .collect();
    if scheme == RelaxationScheme::MassConserving {
        let dv = grid.cell_volume();
        let mut defect = Accumulator::default();
        let mut mass_j = Accumulator::default();
        for ((o, fk), jk) in out.iter().zip(f).zip(j) {
            defect.add((o - fk) * dv);
            mass_j.add(jk * dv);
        }
        let s = defect.value() / mass_j.value();
        out.iter_mut().zip(j).for_each(|(o, jk)| *o -= s * jk);
    }
    let min = out.iter().cloned().fold(f64::INFINITY, f64::min);
    if !(min >= 0.0) {
        return Err(Error::Positivity { species: 0, min });
    }
    Ok(out)
}

/// Relaxation of a homogeneous state over `dt`, returning the new state.
pub fn relax_step_0d(state: &SimState, dt: f64) -> Result<(SimState, StepReport)> {
    if state.spatial.n_cells != 1 {
        return Err(Error::Precondition("relax_step_0d needs a single spatial cell".into()));
    }
    let mut next = state.clone();
    let rep = next.step(dt, 1.0)?;
    Ok((next, rep))
}

/// Upwind transport over `dt`, returning the new state.
pub fn transport_step_1d(state: &SimState, dt: f64, cfl_bound: f64) -> Result<SimState> {
    let mut next = state.clone();
    next.transport_in_place(dt, cfl_bound)?;
    next.time += dt;
    Ok(next)
}

/// Temperature proxy `kT_i = m_ic²/β_i` with `K₁/K₂(β_i) = m_i c ρ_i/n_i`.
pub fn temperature_proxy(m: &MomentSet, mass: f64, consts: &PhysicalConstants) -> Result<f64> {
    let c = consts.c;
    let beta = inverse_k1_over_k2(mass * c * m.rho / m.n)?;
    Ok(mass * c * c / beta)
}

// ---------------------------------------------------------------------------
// Scenario configuration

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Discretization {
    #[default]
    Point,
    CellAverage,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InitialCondition {
    /// Eckart density `n`.
    pub density: f64,
    /// Temperature `T`; the Jüttner parameter is `1/(kT)`.
    pub temperature: f64,
    /// Three-velocity in units of `c`.
    #[serde(default)]
    pub velocity: [f64; 3],
    /// Relative amplitude `a` of `n(x) = n(1 + a cos(2πx/L))`.
    #[serde(default)]
    pub density_modulation: f64,
    /// Relative amplitude of seeded multiplicative noise on every node.
    #[serde(default)]
    pub noise: f64,
    #[serde(default)]
    pub discretization: Discretization,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpeciesConfig {
    pub mass: f64,
    pub tau: f64,
    #[serde(default)]
    pub spin: f64,
    pub initial: InitialCondition,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MomentumGridConfig {
    pub n_cells: usize,
    /// Half-width of every species' grid; sized from the initial data when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub p_max: Option<f64>,
    #[serde(default = "default_tail_tol")]
    pub tail_tol: f64,
}

fn default_tail_tol() -> f64 {
    DEFAULT_TAIL_TOL
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpaceConfig {
    #[serde(default = "one")]
    pub n_cells: usize,
    #[serde(default = "one_f")]
    pub length: f64,
}

impl Default for SpaceConfig {
    fn default() -> Self {
        Self { n_cells: 1, length: 1.0 }
    }
}

fn one() -> usize {
    1
}

fn one_f() -> f64 {
    1.0
}

fn default_cfl() -> f64 {
    0.9
}

fn default_solver_tol() -> f64 {
    crate::equilibrium::DEFAULT_TOL
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    #[serde(default)]
    pub constants: PhysicalConstants,
    pub species: Vec<SpeciesConfig>,
    pub momentum: MomentumGridConfig,
    #[serde(default)]
    pub space: SpaceConfig,
    pub dt: f64,
    pub steps: usize,
    #[serde(default = "default_cfl")]
    pub cfl: f64,
    /// Emit a series row every this many steps (and at the final step).
    #[serde(default = "one")]
    pub output_every: usize,
    #[serde(default)]
    pub scheme: RelaxationScheme,
    #[serde(default = "default_solver_tol")]
    pub solver_tol: f64,
    #[serde(default)]
    pub seed: u64,
}

impl ScenarioConfig {
    /// Every violated constraint, one message each.
    pub fn violations(&self) -> Vec<String> {
        let mut v = Vec::new();
        let mut need = |ok: bool, msg: String| {
            if !ok {
                v.push(msg);
            }
        };
        let k = &self.constants;
        for (name, x) in [("constants.c", k.c), ("constants.k", k.k), ("constants.h", k.h)] {
            need(x.is_finite() && x > 0.0, format!("{name} must be > 0 (got {x})"));
        }
        need(!self.species.is_empty(), "species: at least one species is required".into());
        for (i, s) in self.species.iter().enumerate() {
            let p = format!("species[{i}]");
            need(s.mass.is_finite() && s.mass > 0.0, format!("{p}.mass must be > 0 (got {})", s.mass));
            need(s.tau.is_finite() && s.tau > 0.0, format!("{p}.tau must be > 0 (got {})", s.tau));
            need(s.spin.is_finite() && s.spin >= 0.0, format!("{p}.spin must be ≥ 0 (got {})", s.spin));
            let ic = &s.initial;
            need(
                ic.density.is_finite() && ic.density > 0.0,
                format!("{p}.initial.density must be > 0 (got {})", ic.density),
            );
            need(
                ic.temperature.is_finite() && ic.temperature > 0.0,
                format!("{p}.initial.temperature must be > 0 (got {})", ic.temperature),
            );
            let speed = ic.velocity.iter().map(|x| x * x).sum::<f64>().sqrt();
            need(speed < 1.0, format!("{p}.initial.velocity must have |v| < 1 (got {speed})"));
            need(
                ic.density_modulation.abs() < 1.0,
                format!("{p}.initial.density_modulation must satisfy |a| < 1 (got {})", ic.density_modulation),
            );
            need(
                (0.0..1.0).contains(&ic.noise),
                format!("{p}.initial.noise must lie in [0, 1) (got {})", ic.noise),
            );
        }
        let m = &self.momentum;
        need(m.n_cells >= 2, format!("momentum.n_cells must be ≥ 2 (got {})", m.n_cells));
        if let Some(p) = m.p_max {
            need(p.is_finite() && p > 0.0, format!("momentum.p_max must be > 0 (got {p})"));
        }
        need(
            m.tail_tol > 0.0 && m.tail_tol < 1.0,
            format!("momentum.tail_tol must lie in (0, 1) (got {})", m.tail_tol),
        );
        need(self.space.n_cells >= 1, "space.n_cells must be ≥ 1".into());
        need(
            self.space.length.is_finite() && self.space.length > 0.0,
            format!("space.length must be > 0 (got {})", self.space.length),
        );
        need(self.dt.is_finite() && self.dt > 0.0, format!("dt must be > 0 (got {})", self.dt));
        need(self.cfl > 0.0 && self.cfl <= 1.0, format!("cfl must lie in (0, 1] (got {})", self.cfl));
        need(self.output_every >= 1, "output_every must be ≥ 1".into());
        need(
            self.solver_tol.is_finite() && self.solver_tol > 0.0,
            format!("solver_tol must be > 0 (got {})", self.solver_tol),
        );
        v
    }

    pub fn validate(&self) -> Result<()> {
        let v = self.violations();
        if v.is_empty() {
            Ok(())
        } else {
            Err(Error::Domain(v.join("; ")))
        }
    }

    pub fn species_params(&self) -> Result<Vec<SpeciesParams>> {
        self.species.iter().map(|s| SpeciesParams::new(s.mass, s.tau, s.spin)).collect()
    }

    /// Momentum grids; when `p_max` is not given each species' grid covers
    /// the hottest, fastest initial state of the run.
    pub fn grids(&self) -> Result<Vec<MomentumGrid>> {
        let c = self.constants.c;
        self.species
            .iter()
            .map(|s| {
                let p_max = match self.momentum.p_max {
                    Some(p) => p,
                    None => self
                        .species
                        .iter()
                        .map(|other| {
                            let u = FourVector::from_three_velocity(other.initial.velocity, c)?;
                            let kt = self.constants.k * other.initial.temperature;
                            suggest_p_max(s.mass, c, kt, u.spatial(), self.momentum.tail_tol)
                        })
                        .collect::<Result<Vec<_>>>()?
                        .into_iter()
                        .fold(0.0, f64::max),
                };
                MomentumGrid::new(s.mass, c, p_max, self.momentum.n_cells)
            })
            .collect()
    }

    /// Initial state with seeded perturbations.
    pub fn initial_state(&self) -> Result<SimState> {
        self.validate()?;
        let params = self.species_params()?;
        let grids = self.grids()?;
        let c = self.constants.c;
        let nx = self.space.n_cells;
        let spatial = SpatialGrid::periodic(nx, self.space.length)?;
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        let mut fields = Vec::with_capacity(params.len());
        for ((s, sp), grid) in self.species.iter().zip(&params).zip(&grids) {
            let ic = &s.initial;
            let u = FourVector::from_three_velocity(ic.velocity, c)?;
            let kt = self.constants.k * ic.temperature;
            let base = match ic.discretization {
                Discretization::Point => discretize_juttner(grid, sp, 1.0, kt, &u, &self.constants)?,
                Discretization::CellAverage => {
                    discretize_juttner_cell_average(grid, sp, 1.0, kt, &u, &self.constants)?
                }
            };
            let mut field = DistributionField::zeros(nx, grid.len());
            for x in 0..nx {
                let phase = 2.0 * std::f64::consts::PI * (x as f64 + 0.5) / nx as f64;
                let scale = ic.density * (1.0 + ic.density_modulation * phase.cos());
                for (o, b) in field.cell_mut(x).iter_mut().zip(&base) {
                    let noise = if ic.noise > 0.0 { 1.0 + ic.noise * rng.gen_range(-1.0..1.0) } else { 1.0 };
                    *o = scale * b * noise;
                }
            }
            fields.push(field);
        }
        let mut state = SimState::new(self.constants, params, grids, fields, spatial)?;
        state.scheme = self.scheme;
        state.solver.tol = self.solver_tol;
        Ok(state)
    }
}

/// Per-species row entry of a time series.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpeciesRow {
    pub n: f64,
    /// Spatial part of `U/c`.
    pub u: [f64; 3],
    pub temperature: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeriesRow {
    pub step: usize,
    pub time: f64,
    /// Moments of the spatially averaged distribution of each species.
    pub species: Vec<SpeciesRow>,
    pub entropy: f64,
    pub h_monitor: f64,
    pub max_residual: f64,
    pub beta_tilde: f64,
}

/// Series row of the current state.
pub fn series_row(state: &SimState, step: usize, last: Option<&StepReport>) -> Result<SeriesRow> {
    let nx = state.spatial.n_cells;
    let mut species = Vec::with_capacity(state.n_species());
    let mut mean_fields = Vec::with_capacity(state.n_species());
    for i in 0..state.n_species() {
        let n_nodes = state.grids[i].len();
        let mean: Vec<f64> = (0..n_nodes)
            .map(|k| crate::sum::sum((0..nx).map(|x| state.fields[i].cell(x)[k])) / nx as f64)
            .collect();
        let m = compute_moments(&mean, &state.params[i], &state.grids[i], &state.consts)
            .map_err(|e| e.at(i, 0))?;
        let c = state.consts.c;
        species.push(SpeciesRow {
            n: m.n,
            u: [m.u[1] / c, m.u[2] / c, m.u[3] / c],
            temperature: temperature_proxy(&m, state.params[i].mass, &state.consts)? / state.consts.k,
        });
        mean_fields.push(mean);
    }
    let entropy = match last {
        Some(r) => r.totals.entropy,
        None => state.totals()?.entropy,
    };
    let beta_tilde = match state.equilibria.first().and_then(|e| e.as_ref()) {
        Some(eq) => eq.beta_tilde,
        None => {
            let refs: Vec<&[f64]> = mean_fields.iter().map(Vec::as_slice).collect();
            let (eq, _) = solve_equilibrium(&refs, &state.grid_refs(), &state.params, &state.consts, &state.solver)?;
            eq.beta_tilde
        }
    };
    Ok(SeriesRow {
        step,
        time: state.time,
        species,
        entropy,
        h_monitor: last.map_or(0.0, |r| r.h_monitor),
        max_residual: last.map_or(0.0, |r| r.max_residual),
        beta_tilde,
    })
}

/// Result of a scenario run. A failing step ends the run; everything
/// produced before it is kept.
#[derive(Debug, Clone)]
pub struct ScenarioOutcome {
    pub reports: Vec<StepReport>,
    pub series: Vec<SeriesRow>,
    pub initial_totals: Totals,
    pub state: SimState,
    pub failure: Option<Error>,
}

pub fn run_scenario(config: &ScenarioConfig) -> Result<ScenarioOutcome> {
    let state = config.initial_state()?;
    run_from_state(state, config.dt, config.steps, config.cfl, config.output_every)
}

pub fn run_from_state(
    mut state: SimState,
    dt: f64,
    steps: usize,
    cfl: f64,
    output_every: usize,
) -> Result<ScenarioOutcome> {
    let initial_totals = state.totals()?;
    let mut series = vec![series_row(&state, 0, None)?];
    let mut reports = Vec::with_capacity(steps);
    let mut failure = None;
    for step in 1..=steps {
        match state.step(dt, cfl) {
            Ok(r) => {
                if step % output_every.max(1) == 0 || step == steps {
                    match series_row(&state, step, Some(&r)) {
                        Ok(row) => series.push(row),
                        Err(e) => failure = Some(e),
                    }
                }
                reports.push(r);
            }
            Err(e) => failure = Some(e),
        }
        if let Some(e) = &failure {
            log::warn!("scenario stopped at step {step}: {e}");
            break;
        }
    }
    Ok(ScenarioOutcome { reports, series, initial_totals, state, failure })
}

/// Total entropy four-flow of cell `x`.
pub fn cell_entropy_flow(state: &SimState, x: usize) -> Result<FourVector> {
    entropy_four_flow(&state.cell_fields(x), &state.grid_refs(), &state.params, &state.consts)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn two_species(n_cells: usize, t2: f64, v: f64) -> ScenarioConfig {
        ScenarioConfig {
            constants: PhysicalConstants::default(),
            species: vec![
                SpeciesConfig {
                    mass: 1.0,
                    tau: 1.0,
                    spin: 0.0,
                    initial: InitialCondition {
                        density: 1.0,
                        temperature: 0.1,
                        velocity: [v, 0.0, 0.0],
                        density_modulation: 0.0,
                        noise: 0.0,
                        discretization: Discretization::Point,
                    },
                },
                SpeciesConfig {
                    mass: 2.0,
                    tau: 0.5,
                    spin: 0.5,
                    initial: InitialCondition {
                        density: 0.5,
                        temperature: t2,
                        velocity: [-v, 0.0, 0.0],
                        density_modulation: 0.0,
                        noise: 0.0,
                        discretization: Discretization::Point,
                    },
                },
            ],
            momentum: MomentumGridConfig { n_cells: 16, p_max: None, tail_tol: 1e-10 },
            space: SpaceConfig { n_cells, length: 1.0 },
            dt: 0.05,
            steps: 4,
            cfl: 0.9,
            output_every: 1,
            scheme: RelaxationScheme::MassConserving,
            solver_tol: 1e-12,
            seed: 7,
        }
    }

    #[test]
    fn equilibrium_is_fixed_point() {
        let c = PhysicalConstants::default();
        let s = SpeciesParams::new(1.0, 1.0, 0.0).unwrap();
        let g = MomentumGrid::new(1.0, 1.0, 3.0, 8).unwrap();
        let j = g.juttner_weights(5.0, &FourVector::new(1.0, 0.0, 0.0, 0.0)).unwrap();
        for scheme in [RelaxationScheme::MassConserving, RelaxationScheme::Exponential] {
            let out = relax_values(&j, &j, &g, &s, &c, 0.3, scheme).unwrap();
            assert_eq!(out, j);
        }
    }

    #[test]
    fn long_step_reaches_attractor() {
        let c = PhysicalConstants::default();
        let s = SpeciesParams::new(1.0, 1.0, 0.0).unwrap();
        let g = MomentumGrid::new(1.0, 1.0, 3.0, 8).unwrap();
        let j = g.juttner_weights(5.0, &FourVector::new(1.0, 0.0, 0.0, 0.0)).unwrap();
        let f: Vec<f64> = j.iter().enumerate().map(|(k, x)| x * (1.0 + 0.1 * (k % 3) as f64)).collect();
        let out = relax_values(&f, &j, &g, &s, &c, 1e6, RelaxationScheme::Exponential).unwrap();
        assert_eq!(out, j);
    }

    #[test]
    fn mass_conserving_step_keeps_number() {
        let c = PhysicalConstants::default();
        let s = SpeciesParams::new(1.0, 0.7, 0.0).unwrap();
        let g = MomentumGrid::new(1.0, 1.0, 3.0, 8).unwrap();
        let j = g.juttner_weights(4.0, &FourVector::new(1.0, 0.0, 0.0, 0.0)).unwrap();
        let f: Vec<f64> = j.iter().enumerate().map(|(k, x)| x * (1.0 + 0.5 * (k % 5) as f64)).collect();
        let before = crate::sum::sum(f.iter().copied());
        let out = relax_values(&f, &j, &g, &s, &c, 0.2, RelaxationScheme::MassConserving).unwrap();
        let after = crate::sum::sum(out.iter().copied());
        assert!((after / before - 1.0).abs() < 1e-15);
    }

    #[test]
    fn uniform_field_unchanged_by_transport() {
        let cfg = two_species(6, 0.3, 0.2);
        let st = cfg.initial_state().unwrap();
        let next = transport_step_1d(&st, 0.05, 0.9).unwrap();
        for i in 0..2 {
            let diff = st.fields[i]
                .values()
                .iter()
                .zip(next.fields[i].values())
                .map(|(a, b)| (a - b).abs())
                .fold(0.0, f64::max);
            assert_eq!(diff, 0.0);
        }
    }

    #[test]
    fn square_pulse_advects_and_conserves() {
        let consts = PhysicalConstants::default();
        let sp = SpeciesParams::new(1.0, 1.0, 0.0).unwrap();
        // Two nodes per axis so every node has |p_x| = p_max/2.
        let g = MomentumGrid::new(1.0, 1.0, 2.0, 2).unwrap();
        let nx = 80;
        let mut field = DistributionField::zeros(nx, g.len());
        for x in 35..45 {
            field.cell_mut(x).iter_mut().for_each(|v| *v = 1.0);
        }
        let spatial = SpatialGrid::periodic(nx, 80.0).unwrap();
        let mut st = SimState::new(consts, vec![sp], vec![g.clone()], vec![field], spatial).unwrap();
        let total = |s: &SimState| crate::sum::sum(s.fields[0].values().iter().copied());
        let t0 = total(&st);
        for _ in 0..50 {
            st.transport_in_place(0.5, 1.0).unwrap();
        }
        assert!((total(&st) / t0 - 1.0).abs() < 1e-14);
        // Node 0 has p_x < 0, the last node p_x > 0: centres of mass move apart.
        let centre = |k: usize| {
            let w: Vec<f64> = (0..nx).map(|x| st.fields[0].cell(x)[k]).collect();
            (0..nx).map(|x| x as f64 * w[x]).sum::<f64>() / w.iter().sum::<f64>()
        };
        // |p_x|/p⁰ = 1/2 on every node.
        assert!((centre(g.len() - 1) - (39.5 + 12.5)).abs() < 1e-9);
        assert!((centre(0) - (39.5 - 12.5)).abs() < 1e-9);
    }

    #[test]
    fn speed_bound_example() {
        let p = FourVector::on_mass_shell(1.0, 1.0, [10.0, 0.0, 0.0]);
        let speed = p[1] / p[0];
        assert!((speed - 10.0 / 101f64.sqrt()).abs() < 1e-15);
        assert!(speed < 1.0);
    }

    #[test]
    fn cfl_violation_leaves_state_untouched() {
        let cfg = two_species(4, 0.3, 0.2);
        let mut st = cfg.initial_state().unwrap();
        let copy = st.fields.clone();
        let err = st.step(10.0, 0.9);
        assert!(matches!(err, Err(Error::Cfl { .. })));
        assert_eq!(st.fields, copy);
    }

    #[test]
    fn non_periodic_rejected() {
        let g = SpatialGrid { n_cells: 3, dx: 1.0, periodic: false };
        assert!(matches!(g.validate(), Err(Error::Precondition(_))));
    }

    #[test]
    fn zero_d_run_conserves_mass() {
        let cfg = two_species(1, 0.3, 0.2);
        let out = run_scenario(&cfg).unwrap();
        assert!(out.failure.is_none());
        assert_eq!(out.series.len(), 5);
        let last = out.reports.last().unwrap();
        for (a, b) in last.totals.mass.iter().zip(&out.initial_totals.mass) {
            assert!((a / b - 1.0).abs() < 1e-14);
        }
        for r in &out.reports {
            assert!(r.h_monitor <= 1e-13);
            assert!(r.entropy_production >= -1e-12);
        }
    }

    #[test]
    fn config_violations_are_all_listed() {
        let mut cfg = two_species(1, 0.3, 0.2);
        cfg.species[0].mass = -1.0;
        cfg.species[1].tau = 0.0;
        cfg.dt = 0.0;
        let v = cfg.violations();
        assert_eq!(v.len(), 3, "{v:?}");
        assert!(v[0].contains("species[0].mass"));
    }

    #[test]
    fn temperature_proxy_inverts_juttner() {
        let consts = PhysicalConstants::default();
        let s = SpeciesParams::new(1.0, 1.0, 0.0).unwrap();
        let u = FourVector::from_three_velocity([0.2, 0.0, 0.0], 1.0).unwrap();
        let m = crate::phase_space::FlowMoments::juttner(1.0, 1.0, 0.4, u, 1.0).unwrap();
        let ms = MomentSet {
            n: m.n,
            u,
            flux: m.flux(),
            stress: crate::tensor::SymmetricTensor([[0.0; 4]; 4]),
            rho: m.rho,
            lab_density: 0.0,
            entropy: FourVector::ZERO,
        };
        assert!((temperature_proxy(&ms, s.mass, &consts).unwrap() - 0.4).abs() < 1e-12);
    }
}
