//! Dataset-level statistics: correlation coefficients between metric series
//! and stability analysis for scores computed under interchangeable
//! distance functions.

mod corr;
mod rational;
mod stability;

pub use corr::{
    average_ranks, diversity_accuracy_correlation, kendall, pearson, spearman, CorrelationRow,
    CorrelationTable, PairedSeries,
};
pub use rational::rat_to_f64;
pub use stability::{
    ambiguity_band, inject_adjacent_swaps, kappa0, pearson_transfer_bound,
    pure_scaling_distortion, rank_stability, squeeze_check, squeeze_constants,
    weighted_window_distortion, InBandPair, RankStabilityReport, SqueezeReport, SqueezeVerdict,
    StabilityInput,
};

/// Failures in correlation or stability computations.
#[derive(Debug, thiserror::Error)]
pub enum StatsError {
    #[error("series lengths differ: {0} vs {1}")]
    LengthMismatch(usize, usize),
    #[error("need at least {need} data points, have {have}")]
    TooShort { have: usize, need: usize },
    #[error("non-finite value at index {0}")]
    NonFinite(usize),
    #[error("{which} series has zero variance, correlation undefined")]
    ZeroVariance { which: &'static str },
    #[error("dataset labels do not align: {0}")]
    LabelMismatch(String),
    #[error("duplicate values: {0}")]
    DuplicateValues(String),
    #[error("invalid constants: {0}")]
    BadConstants(String),
}
