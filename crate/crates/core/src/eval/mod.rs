//! Scoring of generated model sets against a reference: consistency
//! tallies, correctness similarity, degree of error, hierarchical roll-up
//! and entropy weighting.

mod consistency;
mod evaluate;
mod metrics;
mod report;

use thiserror::Error;

use crate::model::UnitKind;

pub use consistency::{consistency_check, consistency_tallies, UnitTally};
pub use evaluate::{
    evaluate_batch, evaluate_model_set, Annotation, Annotations, Components, EvalConfig, EvalReport, GeneratedSet,
    Reference, ScoreTree, SourceFile, WeightsSource,
};
pub use metrics::{
    atomic_similarity, attenuation, behavior_similarity, couple_similarity, element_similarity, entropy_weights,
    match_f1, score_couple, simulation_correctness, AtomicParts, AtomicWeights, ConsistencyTally, CoupleWeights,
    ErrorCounts, PenaltyConfig,
};
pub use report::{flat_rows, to_csv, FlatRow};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum EvalError {
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("invalid weights: {0}")]
    InvalidWeights(String),
    #[error("{weights} weights for {children} children")]
    WeightMismatch { weights: usize, children: usize },
    #[error("similarity parts do not fit a {} unit", .0.keyword())]
    KindMismatch(UnitKind),
    #[error("degenerate score matrix: {0}")]
    DegenerateMatrix(String),
    #[error("no models to evaluate")]
    NoModels,
    #[error("reference model set is unusable: {0}")]
    BadReference(String),
}

impl EvalError {
    pub fn code(&self) -> &'static str {
        match self {
            EvalError::InvalidConfig(_) => "InvalidConfig",
            EvalError::InvalidWeights(_) => "InvalidWeights",
            EvalError::WeightMismatch { .. } => "WeightMismatch",
            EvalError::KindMismatch(_) => "KindMismatch",
            EvalError::DegenerateMatrix(_) => "DegenerateMatrix",
            EvalError::NoModels => "NoModels",
            EvalError::BadReference(_) => "BadReference",
        }
    }
}
