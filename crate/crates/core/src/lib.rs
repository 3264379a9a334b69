//! Certainty and doubt scores for multi-class classifier outputs.
//!
//! The score functions are generic over [`Scalar`] (`f32` or `f64`); the
//! aliases at the bottom of this module fix the scalar to `f64`, which is what
//! the batch ingestion, training demo and CLI use.

pub mod cli;
pub mod cost;
pub mod error;
pub mod extended;
pub mod ingest_report;
pub mod matrix_scores;
pub mod projective;
pub mod scalar;
pub mod score_core;
pub mod train_demo;

pub use cost::{
    certainty_product, composite_loss, cross_entropy, doubt_cost, doubt_cost_gradient, raw_certainty_product,
    raw_doubt_cost, raw_doubt_cost_gradient, CompositeLoss, CostValue, Gradient,
};
pub use error::{Error, Result};
pub use extended::ExtendedReal;
pub use matrix_scores::{
    certainty_matrix, certainty_offset_matrix, doubt_matrix, is_invertible, max_doubt_score, row_l1_max,
    CertaintyMatrix, DoubtMatrix, Invertibility, SquareMatrix,
};
pub use projective::{
    angle_to_rp1, certainty_projection, rp1_new, rp1_to_angle, CertaintyProjection, Rp1Point,
};
pub use scalar::Scalar;
pub use score_core::{
    argmax_index, neg_log_certainty, pairwise_certainty, pairwise_doubt, raw_certainty, raw_doubt,
    sort_descending, CertaintyVector, DoubtVector, LogitVector, ProbabilityVector,
};

pub type Ext = ExtendedReal<f64>;
pub type Probabilities = ProbabilityVector<f64>;
pub type Logits = LogitVector<f64>;
pub type Certainty = CertaintyVector<f64>;
pub type Doubt = DoubtVector<f64>;
pub type Rp1 = Rp1Point<f64>;

pub type Ext32 = ExtendedReal<f32>;
pub type Probabilities32 = ProbabilityVector<f32>;
pub type Logits32 = LogitVector<f32>;
