//! Distillation losses as plain numerics.
//!
//! An attention loss pulls language-model attention over object tokens
//! towards an object model's attention, an embedding loss pulls language
//! embeddings towards linearly projected object embeddings, and a margin
//! ranking loss orders simulation-labeled good responses above bad ones.

mod losses;
mod preference;
mod tensors;

use thiserror::Error;

pub use losses::{
    attention_loss, attention_loss_grad, combined_loss, contrastive_loss, embedding_loss, embedding_loss_grad,
    fit_projection, fit_projection_gd, margin_ranking, mean_embedding_loss, normal_equations_residual, AttentionStack,
    EmbeddingGrad, GdParams, Lambda, LossTerms, ObjectRepresentation, ProjectionMatrix, Space, StackSource,
    DEFAULT_MARGIN,
};
pub use preference::{label_preference, score_response, tune_lambda, PreferencePair, ScoredResponse};
pub use tensors::{evaluate, LossBreakdown, TensorFile, TENSOR_HEADER};

#[derive(Debug, Error)]
pub enum DistillError {
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),
    #[error("attention head {head} is not row-stochastic: {detail}")]
    NotStochastic { head: usize, detail: String },
    #[error("rank-deficient projection fit: rank {rank} of {needed}")]
    Degenerate {
        rank: usize,
        needed: usize,
        /// Minimum-norm least-squares solution.
        solution: Box<ProjectionMatrix>,
    },
    #[error("lambda weights must be non-negative and finite")]
    InvalidLambda,
    #[error("empty lambda grid")]
    EmptyGrid,
    #[error("empty validation set")]
    EmptyValidation,
    #[error("tensor file line {line}: {detail}")]
    Format { line: usize, detail: String },
    #[error("tensor `{0}` missing")]
    MissingTensor(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}
