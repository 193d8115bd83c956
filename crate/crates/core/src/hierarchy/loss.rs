use std::collections::BTreeMap;
use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A pointwise loss, queried only for its value.
///
/// Nothing in the crate needs a gradient or hessian, so losses with zero or
/// undefined second derivative (L1, pinball, step losses) plug in unchanged.
pub trait Loss: Send + Sync + fmt::Debug {
    fn value(&self, y: f64, y_hat: f64) -> f64;
}

#[derive(Debug, Clone, Copy, Default)]
pub struct L1;

impl Loss for L1 {
    fn value(&self, y: f64, y_hat: f64) -> f64 {
        (y - y_hat).abs()
    }
}

#[derive(Debug, Clone, Copy, Default)]
pub struct L2;

impl Loss for L2 {
    fn value(&self, y: f64, y_hat: f64) -> f64 {
        (y - y_hat) * (y - y_hat)
    }
}

/// Quantile loss: `q * r` for under-prediction, `(q - 1) * r` otherwise.
#[derive(Debug, Clone, Copy)]
pub struct Pinball {
    pub q: f64,
}

impl Loss for Pinball {
    fn value(&self, y: f64, y_hat: f64) -> f64 {
        let r = y - y_hat;
        (self.q * r).max((self.q - 1.0) * r)
    }
}

/// Loss selection as it appears in configuration files.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum LossSpec {
    L1,
    L2,
    Pinball { q: f64 },
    /// A loss registered by name in a [`LossRegistry`].
    Named { name: String },
}

impl Default for LossSpec {
    fn default() -> Self {
        LossSpec::L1
    }
}

/// Name -> loss lookup for user-supplied value functions.
#[derive(Debug, Clone, Default)]
pub struct LossRegistry {
    named: BTreeMap<String, Arc<dyn Loss>>,
}

impl LossRegistry {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn register(&mut self, name: impl Into<String>, loss: Arc<dyn Loss>) {
        self.named.insert(name.into(), loss);
    }

    pub fn resolve(&self, spec: &LossSpec) -> Result<Arc<dyn Loss>> {
        Ok(match spec {
            LossSpec::L1 => Arc::new(L1),
            LossSpec::L2 => Arc::new(L2),
            LossSpec::Pinball { q } => {
                if !(0.0..=1.0).contains(q) {
                    return Err(Error::Config(format!("pinball quantile {q} outside [0, 1]")));
                }
                Arc::new(Pinball { q: *q })
            }
            LossSpec::Named { name } => self
                .named
                .get(name)
                .cloned()
                .ok_or_else(|| Error::UnknownLoss(name.clone()))?,
        })
    }
}
