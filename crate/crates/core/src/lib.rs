//! Relativistic BGK relaxation model for gas mixtures.
//!
//! Each species relaxes towards its own Jüttner attractor
//!
//! ```text
//! J_i = ρ_i / ∫ e^{-cβ̃p⁰} dp/p⁰ · exp(-β̃ Ũ^μ p_μ)
//! ```
//!
//! where the common inverse temperature `β̃` and four-velocity `Ũ^μ` are fixed
//! by per-species number conservation and conservation of the mixture
//! energy-momentum. The crate provides:
//!
//! * [`tensor`]: Minkowski four-vectors and the pure boost to a rest frame.
//! * [`special`]: modified Bessel functions `K₁`, `K₂` and the equilibrium
//!   integrals `M`, `M̃` built from them.
//! * [`phase_space`]: uniform Cartesian momentum grids and moment quadrature.
//! * [`equilibrium`]: the `β̃` root solve and attractor assembly.
//! * [`dynamics`]: exponential relaxation, upwind transport and Strang splitting.
//! * [`diagnostics`]: H-theorem monitor, conservation ledger, indifferentiability
//!   comparator and the Newtonian-limit probe.
//! * [`snapshot`]: checksummed snapshot files.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod diagnostics;
pub mod dynamics;
pub mod equilibrium;
mod error;
pub mod phase_space;
pub mod roots;
pub mod snapshot;
pub mod special;
mod sum;
pub mod tensor;

pub use error::{Error, Result};
pub use equilibrium::EquilibriumState;
pub use phase_space::{DistributionField, MomentSet, MomentumGrid, SpeciesParams};
pub use tensor::{FourVector, LorentzBoost, PhysicalConstants};
