use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("invalid four-velocity: U·U/c² = {ratio} (expected 1)")]
    InvalidFourVelocity { ratio: f64 },

    #[error("vacuum cell: species {species}, cell {cell}: discrete mass {mass:e}")]
    Vacuum { species: usize, cell: usize, mass: f64 },

    #[error("superluminal particle flux: n² = {n_squared:e}")]
    SuperluminalFlux { n_squared: f64 },

    #[error("degenerate weighted flow: G·G = {norm_squared:e}")]
    DegenerateFlow { norm_squared: f64 },

    #[error(
        "cold/concentrated input: flow norm {rhs:e} does not exceed the lower limit {infimum:e}"
    )]
    ColdOrConcentrated { rhs: f64, infimum: f64 },

    #[error("root bracket failure: {0}")]
    Bracket(String),

    #[error("CFL violation: {cfl} > {bound}")]
    Cfl { cfl: f64, bound: f64 },

    #[error("positivity lost in species {species} (min value {min:e}); reduce dt")]
    Positivity { species: usize, min: f64 },

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("snapshot error: {0}")]
    Snapshot(String),
}

impl Error {
    /// Attaches species and cell indices to a vacuum error.
    pub fn at(self, species: usize, cell: usize) -> Self {
        match self {
            Error::Vacuum { mass, .. } => Error::Vacuum { species, cell, mass },
            Error::Positivity { min, .. } => Error::Positivity { species, min },
            other => other,
        }
    }

    /// Short machine-readable category.
    pub fn category(&self) -> &'static str {
        match self {
            Error::Domain(_) | Error::InvalidFourVelocity { .. } | Error::Precondition(_) => {
                "input"
            }
            Error::Vacuum { .. }
            | Error::SuperluminalFlux { .. }
            | Error::DegenerateFlow { .. }
            | Error::ColdOrConcentrated { .. }
            | Error::Bracket(_) => "solver",
            Error::Cfl { .. } | Error::Positivity { .. } => "stepping",
            Error::Snapshot(_) => "snapshot",
        }
    }
}
