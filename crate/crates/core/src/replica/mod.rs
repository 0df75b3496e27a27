//! Replica-symmetric analysis of sparse superposition codes.

mod large_b;
mod output;
mod potential;
mod prior;
mod spectrum;

pub use large_b::{large_b_rit, spectral_excess, LargeBLimit};
pub use output::{output_entropy, qz_update};
pub use potential::{
    analyze_rate, error_floor, fixed_point, thresholds, Init, Overlaps, Phase, Problem, RatePoint,
    ReplicaConfig, Thresholds, THRESHOLD_WIDTH,
};
pub use prior::{mse_of_qhx, prior_table, prior_terms, Estimate, PriorTable};
pub use spectrum::{SpectrumKind, SpectrumModel, SphericalIntegral};
