//! Preference-data augmentation over user-interaction graphs, plus the
//! evaluation stack around it: trajectory diversity, personalized-summary
//! scoring, ranking metrics, and metric-stability analysis.
//!
//! The crate is organized around a pool of per-user trajectories (the UIG).
//! `ingest` builds pools from raw logs, `augment` grows them by double
//! shuffling and Markovian perturbation, and the remaining modules measure
//! what came out.

pub mod augment;
pub mod commands;
pub mod diversity;
pub mod embed;
pub mod ingest;
pub mod rank_eval;
pub mod rng;
pub mod stats;
pub mod summ_eval;
pub mod uig;
