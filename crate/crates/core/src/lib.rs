//! Community recovery in the censored two-community block model.
//!
//! - [`model`]: parameters, sampling and file formats
//! - [`thresholds`]: exact-recovery thresholds and divergences
//! - [`spectral`]: signed adjacency matrix, Lanczos eigensolver and spectral estimators
//! - [`estimators`]: degree-profile, genie, two-step, MAP and parameter estimators
//! - [`metrics`]: error up to a global flip
//! - [`harness`]: seeded parameter sweeps

pub mod error;
pub mod estimators;
pub mod harness;
pub mod metrics;
pub mod model;
pub mod spectral;
pub mod thresholds;

pub use error::{Error, Result};
pub use estimators::DegreeProfile;
pub use harness::{Method, SweepConfig, TrialRecord};
pub use metrics::RecoveryReport;
pub use model::{Labeling, ModelParams, ObservedGraph, RevealedPair, Status};
pub use spectral::{Eigenpairs, SignedMatrix, SolverOptions};
pub use thresholds::ChannelPair;
