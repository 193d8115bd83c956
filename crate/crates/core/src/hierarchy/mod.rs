//! Hierarchical stacking with per-timestep weight optimisation.
//!
//! Each stage takes the current predictions, finds for every training row the
//! weight on a fixed grid around 1 that minimises an arbitrary pointwise
//! loss, and learns to predict those weights from the next feature group.
//! Only loss values are ever evaluated.

mod cost;
mod loss;
mod model;

pub use cost::{optimize_alphas, CostOptConfig};
pub(crate) use cost::grid_argmin;
pub use loss::{LossRegistry, LossSpec, Loss, Pinball, L1, L2};
pub use model::{
    fit_hierarchical, predict_hierarchical, FirstLayerPredictions, HierarchicalModel, HierarchyOptions, WeightLayer,
};
