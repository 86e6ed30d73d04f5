//! Estimation of shock-propagation paths on statistically filtered networks.
//!
//! The pipeline turns a multivariate time-series panel into an impulse-response
//! map: the panel's correlation structure is filtered down to a planar graph
//! (PMFG, PCPG or MST), the graph supplies zero restrictions for a B-type
//! structural VAR, and the estimated model traces a shock from any epicenter
//! node across the network and over time.
//!
//! Modules follow the pipeline order:
//!
//! * [`panel`] — ingestion and preprocessing (log-returns, HP cycles, GARCH
//!   volatilities)
//! * [`assoc`] — Pearson correlations, partial correlations, influence matrix
//! * [`planar`] — planarity testing and PMFG/PCPG/MST construction
//! * [`var`] — reduced-form VAR estimation, lag selection, Wold coefficients
//! * [`svar`] — restriction masks, structural likelihood, multistart
//!   estimation, impulse responses
//! * [`pipeline`] / [`synth`] — config-driven orchestration and synthetic
//!   validation data
//!
//! All numeric code is generic over [`Scalar`] (`f32` or `f64`); the aliases
//! below fix `f64` for everyday use.

pub mod assoc;
pub mod error;
pub mod linalg;
pub mod optim;
pub mod panel;
pub mod pipeline;
pub mod planar;
pub mod scalar;
pub mod svar;
pub mod synth;
pub mod var;

pub use error::{Error, Result};
pub use scalar::Scalar;

/// `f64` matrix, the default precision for the pipeline.
pub type Matrix64 = linalg::Matrix<f64>;
/// `f32` matrix for memory-constrained panels.
pub type Matrix32 = linalg::Matrix<f32>;
/// `f64` time-series panel.
pub type Panel64 = panel::TimeSeriesPanel<f64>;
/// `f64` correlation matrix.
pub type Correlation64 = assoc::CorrelationMatrix<f64>;
/// `f64` influence matrix.
pub type Influence64 = assoc::InfluenceMatrix<f64>;
/// `f64` filtered graph.
pub type Graph64 = planar::FilteredGraph<f64>;
/// `f64` reduced-form VAR model.
pub type VarModel64 = var::VarModel<f64>;
/// `f64` structural VAR model.
pub type SvarModel64 = svar::SvarModel<f64>;
/// `f64` impulse-response tensor.
pub type Irf64 = svar::IrfResult<f64>;
