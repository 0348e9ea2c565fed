//! Momentum grids, distribution storage and moment quadrature.
//!
//! Each species lives on its own uniform Cartesian grid `[-p_max, p_max]³`
//! with `n` cells per axis; values are stored at cell centres and every
//! integral is the midpoint rule `Σ g(p_k) Δp³`. All reductions use
//! compensated summation in node order, so results are reproducible.

use serde::{Deserialize, Serialize};

use crate::sum::Accumulator;
use crate::tensor::{FourVector, LorentzBoost, PhysicalConstants, SymmetricTensor};
use crate::{Error, Result};

/// Total discrete mass below which a cell counts as vacuum.
pub const VACUUM_THRESHOLD: f64 = 1e-300;

/// Default tail weight `e^{-cβ(P⁰ - cm)}` at the grid boundary.
pub const DEFAULT_TAIL_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpeciesParams {
    pub mass: f64,
    pub tau: f64,
    pub spin: f64,
    pub degeneracy: f64,
}

impl SpeciesParams {
    /// Massive species with degeneracy `2s + 1`.
    pub fn new(mass: f64, tau: f64, spin: f64) -> Result<Self> {
        let p = Self { mass, tau, spin, degeneracy: 2.0 * spin + 1.0 };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.mass.is_finite() && self.mass > 0.0) {
            return Err(Error::Domain(format!("mass must be positive, got {}", self.mass)));
        }
        if !(self.tau.is_finite() && self.tau > 0.0) {
            return Err(Error::Domain(format!("tau must be positive, got {}", self.tau)));
        }
        if !(self.spin.is_finite() && self.spin >= 0.0) {
            return Err(Error::Domain(format!("spin must be non-negative, got {}", self.spin)));
        }
        if (self.degeneracy - (2.0 * self.spin + 1.0)).abs() > 1e-12 {
            return Err(Error::Domain(format!(
                "degeneracy {} does not equal 2s+1 = {}",
                self.degeneracy,
                2.0 * self.spin + 1.0
            )));
        }
        Ok(())
    }

    /// Relaxation weight `m/τ` used by the mixture constraints.
    pub fn weight(&self) -> f64 {
        self.mass / self.tau
    }
}

/// Serializable description of a [`MomentumGrid`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridDescriptor {
    pub mass: f64,
    pub c: f64,
    pub p_max: f64,
    pub n_cells: usize,
}

/// Uniform cell-centred 3D momentum grid for one species.
///
/// Node `k = (ix·n + iy)·n + iz` sits at `-p_max + (i + ½)Δp` on each axis.
#[derive(Debug, Clone)]
pub struct MomentumGrid {
    desc: GridDescriptor,
    dp: f64,
    px: Vec<f64>,
    py: Vec<f64>,
    pz: Vec<f64>,
    p0: Vec<f64>,
}

impl MomentumGrid {
    pub fn new(mass: f64, c: f64, p_max: f64, n_cells: usize) -> Result<Self> {
        Self::from_descriptor(GridDescriptor { mass, c, p_max, n_cells })
    }

    pub fn from_descriptor(desc: GridDescriptor) -> Result<Self> {
        let GridDescriptor { mass, c, p_max, n_cells } = desc;
        if !(mass.is_finite() && mass > 0.0) {
            return Err(Error::Domain(format!("grid mass must be positive, got {mass}")));
        }
        if !(c.is_finite() && c > 0.0) || !(p_max.is_finite() && p_max > 0.0) {
            return Err(Error::Domain(format!("grid needs c > 0 and p_max > 0, got {c}, {p_max}")));
        }
        if n_cells == 0 {
            return Err(Error::Domain("grid needs at least one cell per axis".into()));
        }
        let n = n_cells;
        let dp = 2.0 * p_max / n as f64;
        let axis: Vec<f64> = (0..n).map(|i| -p_max + (i as f64 + 0.5) * dp).collect();
        let len = n * n * n;
        let (mut px, mut py, mut pz, mut p0) = (
            Vec::with_capacity(len),
            Vec::with_capacity(len),
            Vec::with_capacity(len),
            Vec::with_capacity(len),
        );
        let mc2 = (c * mass).powi(2);
        for &x in &axis {
            for &y in &axis {
                for &z in &axis {
                    px.push(x);
                    py.push(y);
                    pz.push(z);
                    p0.push((mc2 + x * x + y * y + z * z).sqrt());
                }
            }
        }
        Ok(Self { desc, dp, px, py, pz, p0 })
    }

    /// Grid whose boundary carries equilibrium weight below `tail_tol` for a
    /// Jüttner gas at temperature `kt` drifting with spatial four-velocity `u`.
    pub fn for_equilibrium(
        mass: f64,
        consts: &PhysicalConstants,
        kt: f64,
        u: [f64; 3],
        tail_tol: f64,
        n_cells: usize,
    ) -> Result<Self> {
        let p_max = suggest_p_max(mass, consts.c, kt, u, tail_tol)?;
        Self::new(mass, consts.c, p_max, n_cells)
    }

    pub fn descriptor(&self) -> GridDescriptor {
        self.desc
    }

    pub fn mass(&self) -> f64 {
        self.desc.mass
    }

    pub fn c(&self) -> f64 {
        self.desc.c
    }

    pub fn n_cells(&self) -> usize {
        self.desc.n_cells
    }

    pub fn p_max(&self) -> f64 {
        self.desc.p_max
    }

    pub fn dp(&self) -> f64 {
        self.dp
    }

    pub fn cell_volume(&self) -> f64 {
        self.dp.powi(3)
    }

    pub fn len(&self) -> usize {
        self.p0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.p0.is_empty()
    }

    pub fn p0(&self) -> &[f64] {
        &self.p0
    }

    pub fn px(&self) -> &[f64] {
        &self.px
    }

    pub fn momentum(&self, k: usize) -> [f64; 3] {
        [self.px[k], self.py[k], self.pz[k]]
    }

    pub fn four_momentum(&self, k: usize) -> FourVector {
        FourVector([self.p0[k], self.px[k], self.py[k], self.pz[k]])
    }

    /// Index of the node nearest to `p = 0` along each axis offset (`n` odd or even).
    pub fn node_index(&self, ix: usize, iy: usize, iz: usize) -> usize {
        let n = self.desc.n_cells;
        (ix * n + iy) * n + iz
    }

    /// Rest-frame kinetic weight `exp(-cβ(P⁰ − cm))` with `P = Λp`, `Λ` the
    /// boost to the rest frame of `u`. Always in `(0, 1]`.
    pub fn juttner_weights(&self, beta: f64, u: &FourVector) -> Result<Vec<f64>> {
        let c = self.c();
        let boost = LorentzBoost::to_rest_frame(u, c)?;
        let cm = c * self.mass();
        Ok((0..self.len())
            .map(|k| {
                let q = boost.apply(&self.four_momentum(k));
                let s = q.spatial();
                let q2 = s[0] * s[0] + s[1] * s[1] + s[2] * s[2];
                let kinetic = q2 / ((cm * cm + q2).sqrt() + cm);
                (-beta * c * kinetic).exp()
            })
            .collect())
    }
}

/// `p_max` such that `e^{-(P⁰ − cm)c/kT} = tail_tol` at the boundary after
/// boosting by `u`.
pub fn suggest_p_max(mass: f64, c: f64, kt: f64, u: [f64; 3], tail_tol: f64) -> Result<f64> {
    if !(kt > 0.0 && tail_tol > 0.0 && tail_tol < 1.0 && mass > 0.0 && c > 0.0) {
        return Err(Error::Domain(format!(
            "grid sizing needs positive mass, c, kT and tail_tol in (0,1): {mass}, {c}, {kt}, {tail_tol}"
        )));
    }
    let cm = c * mass;
    let p0_rest = cm + kt * (1.0 / tail_tol).ln() / c;
    let p_rest = (p0_rest * p0_rest - cm * cm).sqrt();
    let unorm = (u[0] * u[0] + u[1] * u[1] + u[2] * u[2]).sqrt();
    let gamma = (1.0 + (unorm / c).powi(2)).sqrt();
    Ok(gamma * p_rest + unorm / c * p0_rest)
}

/// Per-species distribution values over spatial cells × momentum nodes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DistributionField {
    n_cells_x: usize,
    n_nodes: usize,
    values: Vec<f64>,
}

impl DistributionField {
    pub fn zeros(n_cells_x: usize, n_nodes: usize) -> Self {
        Self { n_cells_x, n_nodes, values: vec![0.0; n_cells_x * n_nodes] }
    }

    pub fn from_cells(cells: Vec<Vec<f64>>) -> Result<Self> {
        let n_cells_x = cells.len();
        let n_nodes = cells.first().map_or(0, Vec::len);
        if n_cells_x == 0 || cells.iter().any(|c| c.len() != n_nodes) {
            return Err(Error::Domain("cells must be non-empty and equally sized".into()));
        }
        let values = cells.into_iter().flatten().collect();
        let field = Self { n_cells_x, n_nodes, values };
        field.check_nonnegative()?;
        Ok(field)
    }

    pub fn single_cell(values: Vec<f64>) -> Result<Self> {
        Self::from_cells(vec![values])
    }

    pub fn n_cells_x(&self) -> usize {
        self.n_cells_x
    }

    pub fn n_nodes(&self) -> usize {
        self.n_nodes
    }

    pub fn cell(&self, x: usize) -> &[f64] {
        &self.values[x * self.n_nodes..(x + 1) * self.n_nodes]
    }

    pub fn cell_mut(&mut self, x: usize) -> &mut [f64] {
        &mut self.values[x * self.n_nodes..(x + 1) * self.n_nodes]
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn cells_mut(&mut self) -> std::slice::ChunksExactMut<'_, f64> {
        self.values.chunks_exact_mut(self.n_nodes)
    }

    pub fn check_nonnegative(&self) -> Result<()> {
        match self.values.iter().position(|v| !(*v >= 0.0) || !v.is_finite()) {
            Some(i) => Err(Error::Domain(format!(
                "distribution value {} at index {i} is negative or non-finite",
                self.values[i]
            ))),
            None => Ok(()),
        }
    }
}

/// The per-species moments entering the equilibrium constraints.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FlowMoments {
    /// Eckart number density `n_i`.
    pub n: f64,
    /// Eckart four-velocity `U_i^μ`.
    pub u: FourVector,
    /// `ρ_i = ∫ f_i dp/p⁰`.
    pub rho: f64,
}

impl FlowMoments {
    /// Moments of a Jüttner gas with density `n`, temperature `kt` and
    /// four-velocity `u`, using `ρ = n K₁(β_m)/(cm K₂(β_m))`.
    pub fn juttner(mass: f64, n: f64, kt: f64, u: FourVector, c: f64) -> Result<Self> {
        let bm = mass * c * c / kt;
        let ratio = crate::special::bessel_ratio_k2_k1(bm)?;
        Ok(Self { n, u, rho: n / (c * mass * ratio) })
    }

    pub fn flux(&self) -> FourVector {
        self.u * self.n
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MomentSet {
    pub n: f64,
    pub u: FourVector,
    /// `N^μ = c∫p^μ f dp/p⁰`.
    pub flux: FourVector,
    /// `T^{μν} = c∫p^μp^ν f dp/p⁰`.
    pub stress: SymmetricTensor,
    pub rho: f64,
    /// `∫ f dp`, the lab-frame number density `N⁰/c`.
    pub lab_density: f64,
    /// Entropy four-flow contribution `S^μ` of this species.
    pub entropy: FourVector,
}

impl MomentSet {
    pub fn flow(&self) -> FlowMoments {
        FlowMoments { n: self.n, u: self.u, rho: self.rho }
    }

    pub fn entropy_density(&self) -> f64 {
        self.entropy[0]
    }

    /// Lab-frame energy-momentum density `∫ p^μ f dp = T^{0μ}/c`.
    pub fn momentum_density(&self, c: f64) -> FourVector {
        FourVector(std::array::from_fn(|mu| self.stress.get(0, mu) / c))
    }
}

/// `-kc ∫ p^μ f ln(f h³/g) dp/p⁰` integrand factor `ln(f h³/g)`, with the
/// `f = 0` node contributing nothing.
#[inline]
fn entropy_log(f: f64, h3_over_g: f64) -> f64 {
    if f > 0.0 {
        (f * h3_over_g).ln()
    } else {
        0.0
    }
}

/// Quadrature of every moment of one species in one spatial cell.
pub fn compute_moments(
    f: &[f64],
    species: &SpeciesParams,
    grid: &MomentumGrid,
    consts: &PhysicalConstants,
) -> Result<MomentSet> {
    if f.len() != grid.len() {
        return Err(Error::Domain(format!(
            "distribution has {} nodes, grid has {}",
            f.len(),
            grid.len()
        )));
    }
    let c = consts.c;
    let dv = grid.cell_volume();
    let h3_over_g = consts.h.powi(3) / species.degeneracy;

    let mut lab = Accumulator::default();
    let mut rho = Accumulator::default();
    let mut j = [Accumulator::default(); 3];
    // T^{00}, T^{0i}, T^{ij} (i ≤ j), without the factor c.
    let mut t00 = Accumulator::default();
    let mut t0 = [Accumulator::default(); 3];
    let mut tij = [Accumulator::default(); 6];
    let mut s = [Accumulator::default(); 4];

    for k in 0..grid.len() {
        let fk = f[k];
        if fk == 0.0 {
            continue;
        }
        let w = fk * dv;
        let p0 = grid.p0[k];
        let p = [grid.px[k], grid.py[k], grid.pz[k]];
        let w_over_p0 = w / p0;
        lab.add(w);
        rho.add(w_over_p0);
        t00.add(w * p0);
        for a in 0..3 {
            j[a].add(w_over_p0 * p[a]);
            t0[a].add(w * p[a]);
        }
        let mut idx = 0;
        for a in 0..3 {
            for b in a..3 {
                tij[idx].add(w_over_p0 * p[a] * p[b]);
                idx += 1;
            }
        }
        let l = entropy_log(fk, h3_over_g);
        s[0].add(w * l);
        for a in 0..3 {
            s[a + 1].add(w_over_p0 * p[a] * l);
        }
    }

    let lab = lab.value();
    if !(lab >= VACUUM_THRESHOLD) {
        return Err(Error::Vacuum { species: 0, cell: 0, mass: lab });
    }
    let jv = j.map(|a| a.value());
    let n2 = lab * lab - (jv[0] * jv[0] + jv[1] * jv[1] + jv[2] * jv[2]);
    if !(n2 > 0.0) {
        return Err(Error::SuperluminalFlux { n_squared: n2 });
    }
    let n = n2.sqrt();
    let flux = FourVector([c * lab, c * jv[0], c * jv[1], c * jv[2]]);
    let u = flux * (1.0 / n);

    let mut t = [[0.0; 4]; 4];
    t[0][0] = c * t00.value();
    for a in 0..3 {
        t[0][a + 1] = c * t0[a].value();
        t[a + 1][0] = t[0][a + 1];
    }
    let mut idx = 0;
    for a in 0..3 {
        for b in a..3 {
            t[a + 1][b + 1] = c * tij[idx].value();
            t[b + 1][a + 1] = t[a + 1][b + 1];
            idx += 1;
        }
    }
    let kc = consts.k * c;
    let entropy = FourVector(std::array::from_fn(|mu| -kc * s[mu].value()));

    Ok(MomentSet {
        n,
        u,
        flux,
        stress: SymmetricTensor(t),
        rho: rho.value(),
        lab_density: lab,
        entropy,
    })
}

/// `(1/c)∫ p^μ U_μ f dp/p⁰`: the Eckart density computed directly from `U`.
pub fn eckart_density_direct(f: &[f64], u: &FourVector, grid: &MomentumGrid, c: f64) -> f64 {
    let dv = grid.cell_volume();
    let mut acc = Accumulator::default();
    for (k, &fk) in f.iter().enumerate() {
        let p = grid.four_momentum(k);
        acc.add(fk * dv * p.dot(u) / p[0]);
    }
    acc.value() / c
}

/// Entropy four-flow `S^μ = -kc Σ_i ∫ p^μ f_i ln(f_i h³/g_i) dp/p⁰`.
pub fn entropy_four_flow(
    fields: &[&[f64]],
    grids: &[&MomentumGrid],
    params: &[SpeciesParams],
    consts: &PhysicalConstants,
) -> Result<FourVector> {
    if fields.len() != grids.len() || fields.len() != params.len() {
        return Err(Error::Domain("species count mismatch".into()));
    }
    let mut acc = [Accumulator::default(); 4];
    for ((f, grid), sp) in fields.iter().zip(grids).zip(params) {
        let dv = grid.cell_volume();
        let h3_over_g = consts.h.powi(3) / sp.degeneracy;
        for (k, &fk) in f.iter().enumerate() {
            if fk == 0.0 {
                continue;
            }
            let l = fk * dv * entropy_log(fk, h3_over_g);
            let p = grid.four_momentum(k);
            acc[0].add(l);
            for a in 1..4 {
                acc[a].add(l * p[a] / p[0]);
            }
        }
    }
    let kc = consts.k * consts.c;
    Ok(FourVector(std::array::from_fn(|mu| -kc * acc[mu].value())))
}

/// `G^μ = Σ_i (m_i/τ_i) n_i U_i^μ` and its Minkowski norm.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WeightedFlow {
    pub g: FourVector,
    pub norm: f64,
}

pub fn weighted_flow_sum(flows: &[FlowMoments], params: &[SpeciesParams]) -> Result<WeightedFlow> {
    if flows.is_empty() || flows.len() != params.len() {
        return Err(Error::Domain("weighted flow needs matching, non-empty species lists".into()));
    }
    let mut acc = [Accumulator::default(); 4];
    for (fl, sp) in flows.iter().zip(params) {
        let w = sp.weight() * fl.n;
        for mu in 0..4 {
            acc[mu].add(w * fl.u[mu]);
        }
    }
    let g = FourVector(acc.map(|a| a.value()));
    let norm_squared = g.square();
    if !(norm_squared > 0.0) || g[0] <= 0.0 {
        return Err(Error::DegenerateFlow { norm_squared });
    }
    Ok(WeightedFlow { g, norm: norm_squared.sqrt() })
}

/// Point values of a Jüttner distribution with Eckart density `n`,
/// temperature `kt` and four-velocity `u`, normalized so that the discrete
/// density equals `n`.
pub fn discretize_juttner(
    grid: &MomentumGrid,
    species: &SpeciesParams,
    n: f64,
    kt: f64,
    u: &FourVector,
    consts: &PhysicalConstants,
) -> Result<Vec<f64>> {
    let w = grid.juttner_weights(1.0 / kt, u)?;
    normalize_to_density(w, grid, species, n, consts)
}

/// Cell averages of a Jüttner distribution (3-point Gauss–Legendre per
/// axis), normalized so that the discrete density equals `n`.
pub fn discretize_juttner_cell_average(
    grid: &MomentumGrid,
    species: &SpeciesParams,
    n: f64,
    kt: f64,
    u: &FourVector,
    consts: &PhysicalConstants,
) -> Result<Vec<f64>> {
    let c = consts.c;
    let beta = 1.0 / kt;
    let boost = LorentzBoost::to_rest_frame(u, c)?;
    let cm = c * grid.mass();
    let r = (0.6_f64).sqrt() * 0.5 * grid.dp();
    let offsets = [-r, 0.0, r];
    let weights = [5.0 / 18.0, 8.0 / 18.0, 5.0 / 18.0];
    let w: Vec<f64> = (0..grid.len())
        .map(|k| {
            let base = grid.momentum(k);
            let mut acc = Accumulator::default();
            for (a, wa) in offsets.iter().zip(weights) {
                for (b, wb) in offsets.iter().zip(weights) {
                    for (d, wd) in offsets.iter().zip(weights) {
                        let p = FourVector::on_mass_shell(
                            grid.mass(),
                            c,
                            [base[0] + a, base[1] + b, base[2] + d],
                        );
                        let q = boost.apply(&p).spatial();
                        let q2 = q[0] * q[0] + q[1] * q[1] + q[2] * q[2];
                        let kinetic = q2 / ((cm * cm + q2).sqrt() + cm);
                        acc.add(wa * wb * wd * (-beta * c * kinetic).exp());
                    }
                }
            }
            acc.value()
        })
        .collect();
    normalize_to_density(w, grid, species, n, consts)
}

fn normalize_to_density(
    mut w: Vec<f64>,
    grid: &MomentumGrid,
    species: &SpeciesParams,
    n: f64,
    consts: &PhysicalConstants,
) -> Result<Vec<f64>> {
    if !(n > 0.0) {
        return Err(Error::Domain(format!("density must be positive, got {n}")));
    }
    let m = compute_moments(&w, species, grid, consts)?;
    let scale = n / m.n;
    w.iter_mut().for_each(|x| *x *= scale);
    Ok(w)
}
