//! Summary-level personalization metrics: skip-bigram overlap, per-user
//! responsiveness, and the accuracy-penalized headline score.

mod degress;
mod perseval;
pub mod rouge;

pub use degress::{degress_summary, EvalInstance, WeightPolicy};
pub use perseval::{
    default_divergence, perseval, PairScore, PersevalParams, PersevalReport, TextDist,
};
pub use rouge::{rouge_su4, tokenize, RougeScores};

#[derive(Debug, thiserror::Error)]
pub enum SummEvalError {
    #[error("no instances to score")]
    EmptyInstanceSet,
    #[error("every instance was skipped; nothing scorable")]
    NothingScored,
    #[error("doc {doc}: {have} users, responsiveness needs at least 2")]
    TooFewUsers { doc: String, have: usize },
    #[error("doc {doc}: user {user} not among the instance's users")]
    UnknownUser { doc: String, user: String },
    #[error("doc {doc}: {detail}")]
    BadInstance { doc: String, detail: String },
    #[error("invalid params: {0}")]
    BadParams(String),
}
