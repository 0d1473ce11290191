//! Simulation and analysis of a linear-optical CNOT gate built from three
//! partially polarizing beam splitters (PPBS), driven by photon pairs whose
//! temporal wavepackets only partially overlap.
//!
//! The crate is organized bottom-up:
//!
//! - [`waveform`]: sampled temporal wavepackets, windowing, delays and the
//!   indistinguishability `eta = |<u_m|u_s>|^2`.
//! - [`gate`]: exact propagation of the two-photon state through the gate in
//!   the two-dimensional temporal exchange space `{f(t,t'), f(t',t)}`.
//! - [`oracle`]: a brute-force Fock-space simulation used to cross-check the
//!   analytic gate.
//! - [`states`]: two-qubit density matrices, closed-form gate outputs,
//!   fidelities and the Werner-state comparison.
//! - [`measurement`]: Born-rule measurement, coincidence sampling,
//!   maximum-likelihood tomography, truth tables, CHSH and HOM scans.

pub mod error;
pub mod gate;
pub mod measurement;
pub mod oracle;
pub mod states;
pub mod waveform;

pub use error::{Error, Result};
pub use gate::{GateConfig, JonesVector, PolTemporalTwoPhotonState};
pub use measurement::{
    CoincidenceDataset, LocalBasis, MeasurementSetting, NoiseConfig, PolState, TruthTable,
};
pub use states::{BellState, DensityMatrix4};
pub use waveform::{TemporalWaveform, TimeGrid, WindowConfig};

/// Complex scalar used throughout the crate.
pub type C64 = num_complex::Complex64;
