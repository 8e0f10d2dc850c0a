//! Evaluation and selection of linear prediction models under Gaussian
//! random design, with exact prediction-error laws, prediction intervals and
//! finite-sample probability bounds.
//!
//! Everything numeric is generic over [`Scalar`] (`f64` and `f32`); the
//! aliases below fix `f64`, with a few `f32` counterparts.

pub mod bounds;
pub mod dgp;
pub mod error;
pub mod linalg;
pub mod lsq;
pub mod modelsel;
pub mod oracle;
pub mod predict;
pub mod rng;
pub mod scalar;
pub mod special;
pub mod stats;

pub use error::{Error, Result};
pub use lsq::{Criterion, ModelMask};
pub use modelsel::{BlockPartition, EliminationStrategy, ModelCollection};
pub use scalar::Scalar;

pub type Matrix64 = linalg::Matrix<f64>;
pub type DgpSpec64 = dgp::DgpSpec<f64>;
pub type Dgp64 = dgp::Dgp<f64>;
pub type TrainingSample64 = dgp::TrainingSample<f64>;
pub type FitResult64 = lsq::FitResult<f64>;
pub type ConditionalRegression64 = oracle::ConditionalRegression<f64>;
pub type OracleQuantities64 = oracle::OracleQuantities<f64>;
pub type GaussianLaw64 = oracle::GaussianLaw<f64>;
pub type GreedyPath64 = modelsel::GreedyPath<f64>;
pub type PredictionInterval64 = predict::PredictionInterval<f64>;
pub type BoundArgs64 = bounds::BoundArgs<f64>;

pub type Dgp32 = dgp::Dgp<f32>;
pub type TrainingSample32 = dgp::TrainingSample<f32>;
pub type FitResult32 = lsq::FitResult<f32>;
pub type GaussianLaw32 = oracle::GaussianLaw<f32>;
