//! Pulsed, dissipative central spin model.
//!
//! A central spin-1/2 couples to `N` nuclear spins and is periodically
//! excited into a decaying trion. The crate builds the exact pulse-to-pulse
//! superoperator, finds its stationary state and spectrum, and evaluates the
//! entropy and polarization of the resulting states.

pub mod basis;
pub mod couplings;
pub mod density;
pub mod error;
pub mod linalg;
pub mod model;
pub mod observables;
pub mod operators;
pub mod oracle;
pub mod presets;
pub mod pulse_map;
pub mod resonance;
pub mod spectral;
pub mod sweep;
pub mod validate;

pub use basis::{joint_eigenbasis, EigenBasis};
pub use couplings::{generate_couplings, overhauser_max, CouplingKind, CouplingSet};
pub use density::{BasisTag, DensityMatrix};
pub use error::{Error, Result};
pub use model::{Budget, ModelParams};
pub use operators::{build_spin_operators, SpinOperators};
pub use pulse_map::{build_pulse_map, g_factor, PulseSuperoperator, PulsedSystem};
