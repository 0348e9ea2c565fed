//! Checksummed JSON snapshots of a simulation state.
//!
//! A snapshot file is one JSON object:
//!
//! ```text
//! {
//!   "format": "relbgk-snapshot", "version": 1,
//!   "payload": { time, constants, species, grids, spatial, fields, moments },
//!   "sha256": "<hex digest of the compact JSON encoding of payload>"
//! }
//! ```
//!
//! `fields[i]` holds the raw values of species `i`, cell-major then node
//! order `(ix·n + iy)·n + iz`. `moments[x][i]` are the moments of species `i`
//! in cell `x`, stored for reference and recomputed on load.

use std::fs;
use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::dynamics::{SimState, SpatialGrid};
use crate::phase_space::{DistributionField, GridDescriptor, MomentSet, MomentumGrid, SpeciesParams};
use crate::tensor::PhysicalConstants;
use crate::{Error, Result};

pub const FORMAT: &str = "relbgk-snapshot";
pub const VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Payload {
    pub time: f64,
    pub constants: PhysicalConstants,
    pub species: Vec<SpeciesParams>,
    pub grids: Vec<GridDescriptor>,
    pub spatial: SpatialGrid,
    pub fields: Vec<DistributionField>,
    pub moments: Vec<Vec<MomentSet>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Snapshot {
    pub format: String,
    pub version: u32,
    pub payload: Payload,
    pub sha256: String,
}

fn digest(payload: &Payload) -> Result<String> {
    let bytes = serde_json::to_vec(payload).map_err(|e| Error::Snapshot(e.to_string()))?;
    Ok(hex::encode(Sha256::digest(&bytes)))
}

impl Snapshot {
    pub fn from_state(state: &SimState) -> Result<Self> {
        let moments = (0..state.spatial.n_cells)
            .map(|x| state.cell_moments(x))
            .collect::<Result<Vec<_>>>()?;
        let payload = Payload {
            time: state.time,
            constants: state.consts,
            species: state.params.clone(),
            grids: state.grids.iter().map(MomentumGrid::descriptor).collect(),
            spatial: state.spatial,
            fields: state.fields.clone(),
            moments,
        };
        let sha256 = digest(&payload)?;
        Ok(Self { format: FORMAT.into(), version: VERSION, payload, sha256 })
    }

    pub fn verify(&self) -> Result<()> {
        if self.format != FORMAT || self.version != VERSION {
            return Err(Error::Snapshot(format!(
                "unsupported snapshot {} v{}",
                self.format, self.version
            )));
        }
        let actual = digest(&self.payload)?;
        if actual != self.sha256 {
            return Err(Error::Snapshot(format!(
                "checksum mismatch: stored {}, computed {actual}",
                self.sha256
            )));
        }
        Ok(())
    }

    /// Rebuilds the state; the stored moments must match recomputed ones.
    pub fn to_state(&self) -> Result<SimState> {
        self.verify()?;
        let p = &self.payload;
        let grids = p
            .grids
            .iter()
            .map(|d| MomentumGrid::from_descriptor(*d))
            .collect::<Result<Vec<_>>>()?;
        let mut state = SimState::new(p.constants, p.species.clone(), grids, p.fields.clone(), p.spatial)?;
        state.time = p.time;
        for (x, stored) in p.moments.iter().enumerate() {
            if state.cell_moments(x)? != *stored {
                return Err(Error::Snapshot(format!("stored moments of cell {x} do not match values")));
            }
        }
        Ok(state)
    }

    pub fn to_json(&self) -> Result<String> {
        serde_json::to_string(self).map_err(|e| Error::Snapshot(e.to_string()))
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let snap: Self = serde_json::from_str(s).map_err(|e| Error::Snapshot(e.to_string()))?;
        snap.verify()?;
        Ok(snap)
    }
}

/// Writes `state` to `path` through a temporary file in the same directory.
pub fn save(path: &Path, state: &SimState) -> Result<()> {
    let json = Snapshot::from_state(state)?.to_json()?;
    let io = |e: std::io::Error| Error::Snapshot(format!("{}: {e}", path.display()));
    let tmp = path.with_extension("json.partial");
    {
        let mut f = fs::File::create(&tmp).map_err(io)?;
        f.write_all(json.as_bytes()).map_err(io)?;
        f.sync_all().map_err(io)?;
    }
    fs::rename(&tmp, path).map_err(io)
}

pub fn load(path: &Path) -> Result<SimState> {
    let s = fs::read_to_string(path).map_err(|e| Error::Snapshot(format!("{}: {e}", path.display())))?;
    Snapshot::from_json(&s)?.to_state()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::*;

    fn state() -> SimState {
        let cfg = ScenarioConfig {
            constants: PhysicalConstants::default(),
            species: vec![SpeciesConfig {
                mass: 1.0,
                tau: 1.0,
                spin: 0.5,
                initial: InitialCondition {
                    density: 1.0,
                    temperature: 0.3,
                    velocity: [0.1, 0.0, 0.0],
                    density_modulation: 0.2,
                    noise: 0.01,
                    discretization: Discretization::Point,
                },
            }],
            momentum: MomentumGridConfig { n_cells: 6, p_max: None, tail_tol: 1e-8 },
            space: SpaceConfig { n_cells: 3, length: 1.0 },
            dt: 0.01,
            steps: 1,
            cfl: 0.9,
            output_every: 1,
            scheme: RelaxationScheme::MassConserving,
            solver_tol: 1e-12,
            seed: 3,
        };
        cfg.initial_state().unwrap()
    }

    #[test]
    fn json_round_trip() {
        let s = state();
        let snap = Snapshot::from_state(&s).unwrap();
        let back = Snapshot::from_json(&snap.to_json().unwrap()).unwrap();
        assert_eq!(back, snap);
        let restored = back.to_state().unwrap();
        assert_eq!(restored.fields, s.fields);
    }

    #[test]
    fn tampering_detected() {
        let mut snap = Snapshot::from_state(&state()).unwrap();
        snap.payload.fields[0].values_mut()[5] *= 1.0 + 1e-15;
        assert!(matches!(snap.verify(), Err(Error::Snapshot(_))));
    }

    #[test]
    fn file_round_trip() {
        let dir = std::env::temp_dir().join(format!("relbgk-snap-{}", std::process::id()));
        fs::create_dir_all(&dir).unwrap();
        let path = dir.join("s.json");
        let s = state();
        save(&path, &s).unwrap();
        let back = load(&path).unwrap();
        assert_eq!(back.fields, s.fields);
        fs::remove_dir_all(&dir).unwrap();
    }
}
