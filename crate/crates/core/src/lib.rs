//! Empirical lower bounds on the privacy loss of differentially private
//! learners.
//!
//! An audit poisons a dataset D into a neighbor D′, trains the mechanism many
//! times on each, learns a classifier that tells the two output distributions
//! apart, and turns the classifier's error rates on fresh samples into a
//! confidence lower bound ε̂_lb on the true ε.

pub mod attacks;
pub mod data_io;
pub mod dataset;
pub mod error;
pub mod estimator;
pub mod float_repr;
pub mod mechanisms;
pub mod optim;
pub mod rng;
pub mod stats;
pub mod types;

pub use error::{AuditError, Result};
