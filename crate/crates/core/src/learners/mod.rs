//! Regression trees and L2 gradient boosting used as the base learner for
//! every method in the crate.

mod boost;
mod tree;

pub use boost::{feature_importance, fit_boosted, predict_boosted, BoostConfig, BoostedModel};
pub use tree::{fit_tree, predict_tree, Node, RegressionTree, TreeConfig};
