//! Extraction of multipartite entangled spin states by post-selected
//! scattering of mobile spin-1/2 particles off static spin centers.
//!
//! Module map:
//! - [`spin`]: spin operators, Clebsch-Gordan coupling, Dicke states
//! - [`entangled`]: target singlets and the sector oracle that checks them
//! - [`scattering`]: transmission through contact spin-spin barriers
//! - [`protocol`]: repeated post-selected launches, exact and sampled
//! - [`applications`]: telecloning and GHZ/W production
//! - [`export`]: CSV and JSON output

pub mod applications;
pub mod entangled;
pub mod error;
pub mod export;
pub mod linalg;
pub mod protocol;
pub mod scattering;
pub mod spin;
pub mod state;

pub use applications::{BellOutcome, BellState, CloneReport, TelecloningSetup};
pub use entangled::{TargetLabel, TargetState};
pub use error::{Error, Result};
pub use protocol::{LaunchRecord, ProtocolConfig, ProtocolTrace, Solver};
pub use scattering::{
    ChannelDecomposition, Conventions, CouplingModel, ScatteringConfig, SigmaNormalization, TransmissionOperator,
};
pub use spin::{CouplingScheme, Spin, SpinOperators, SpinRegister};
pub use state::{DensityOperator, StateVector};
