//! Hierarchical ensemble-based feature selection for time series forecasting.
//!
//! A first learner is fit on target-history features. A per-timestep cost
//! optimizer then finds the multiplicative weight that best corrects each
//! training prediction under any loss, and a second learner predicts those
//! weights from side-information features. The crate also carries the
//! comparison baselines, a synthetic data generator and the evaluation
//! protocol used to compare them.

pub mod baselines;
pub mod dataset;
pub mod error;
pub mod eval;
pub mod experiment;
pub mod featgen;
pub mod hierarchy;
pub mod learners;
pub mod synthetic;

pub use error::{Error, Result};
