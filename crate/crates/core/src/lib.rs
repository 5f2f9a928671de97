//! Random elections under the Impartial Culture model.
//!
//! Margin graphs live in the edge space of the complete graph on the
//! candidates ([`edge_space`]). The covariance of one voter's comparisons
//! and its cycle/cut eigenstructure are in [`ic_model`]; [`sampling`] draws
//! exact and large-electorate margin graphs; [`tournaments`] classifies
//! them; [`probability`] estimates and computes outcome probabilities; and
//! [`voting`] evaluates Minimax and Split Cycle.
//!
//! The linear algebra is generic over [`Scalar`]: `f64` on the sampling
//! path, [`num_rational::Rational64`] for exact identities.

pub mod edge_space;
pub mod error;
pub mod ic_model;
pub mod matrix;
pub mod probability;
pub mod sampling;
pub mod scalar;
pub mod tournaments;
pub mod voting;

pub use edge_space::{edge_index, CandidateCount, EdgeIndex, EdgeVector, Sign};
pub use error::{Error, Result};
pub use ic_model::{CovarianceModel, Eigenstructure};
pub use matrix::DenseMatrix;
pub use sampling::{Ballot, MarginGraph, MonteCarloConfig, Profile, RngStream};
pub use scalar::Scalar;
pub use probability::{ProbEstimate, TypeProbTable};
pub use tournaments::{QualitativeMarginGraph, Tournament, TournamentType};
pub use voting::{Method, WinningSet};
pub use num_rational::Rational64;

/// Edge labelings on the sampling path.
pub type EdgeVector64 = EdgeVector<f64>;
/// Single-precision edge labelings.
pub type EdgeVector32 = EdgeVector<f32>;
/// Exact rational edge labelings.
pub type ExactEdgeVector = EdgeVector<Rational64>;
/// Integer margins of a finite election.
pub type Margins = EdgeVector<i64>;
pub type CovarianceModel64 = CovarianceModel<f64>;
pub type ExactCovarianceModel = CovarianceModel<Rational64>;
pub type Matrix64 = DenseMatrix<f64>;
pub type ExactMatrix = DenseMatrix<Rational64>;
