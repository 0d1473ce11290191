//! The measurement side of the experiment, in simulation.

mod basis;
mod chsh;
mod counts;
mod hom;
mod mle;
mod truth;

pub use crate::gate::PolState;
pub use basis::{born_probabilities, tomography_schedule, LocalBasis, MeasurementSetting};
pub use chsh::{
    bell_fidelity_threshold, chsh_correlation, chsh_optimize, chsh_score, eta_at_bell_threshold,
    ChshResult, TSIRELSON_BOUND,
};
pub use counts::{
    expected_counts, simulate_counts, CoincidenceDataset, CountModel, NoiseConfig, SettingCounts,
};
pub use hom::{hom_scan, HomPoint, HomScan};
pub use mle::{mle_reconstruct, mle_reconstruct_traced, MleOptions, MleResult};
pub use truth::{process_bounds, truth_table, TruthTable, TruthTableBasis};
