//! The augmentation pipeline: seeded sampling, double shuffling (cross-user
//! segment splicing), stochastic Markovian perturbation of spliced summary
//! nodes, and mixed-bag dataset assembly.

mod ds;
mod pipeline;
mod smp;

pub use ds::{double_shuffle, double_shuffle_with_report, sample_without_replacement, DsConfig, DsReport};
pub use pipeline::{
    build_mix, mix10, mix10_scaled, run_pipeline, run_pipeline_with_report, MixConfig, MixEntry,
    PipelineReport, PRESET_SCALE_FLOOR_GAP, PRESET_SCALE_FLOOR_LEN,
};
pub use smp::{smp_perturb, SmpConfig, SmpOutcome, SmpScope};

use crate::embed::EmbedError;

#[derive(Debug, thiserror::Error)]
pub enum AugmentError {
    #[error("pool has {have} trajectories, need at least {need}")]
    PoolTooSmall { have: usize, need: usize },
    #[error("trajectory of user {user} has {len} events, double shuffling needs at least 2")]
    ShortTrajectory { user: String, len: usize },
    #[error("target_len {0} leaves no room after the preserved offset (need at least 2)")]
    TargetLenTooSmall(usize),
    #[error("invalid config: {0}")]
    BadConfig(String),
    #[error("event references unknown doc {0}")]
    MissingDoc(String),
    #[error("event references unknown summary {0}")]
    MissingSummary(String),
    #[error("config {0} produced an empty sample")]
    EmptyMixOutput(String),
    #[error(transparent)]
    Embed(#[from] EmbedError),
}
