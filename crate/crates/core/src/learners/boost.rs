use ndarray::{Array1, ArrayView1, ArrayView2};
use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::tree::{grow, RegressionTree, SortedColumns, TreeConfig};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct BoostConfig {
    pub n_rounds: usize,
    pub learning_rate: f64,
    pub tree: TreeConfig,
    /// Fraction of columns offered to each tree.
    pub subsample_features: f64,
}

impl Default for BoostConfig {
    fn default() -> Self {
        Self {
            n_rounds: 100,
            learning_rate: 0.1,
            tree: TreeConfig::default(),
            subsample_features: 1.0,
        }
    }
}

impl BoostConfig {
    pub fn validate(&self) -> Result<()> {
        self.tree.validate()?;
        let lr_ok = self.learning_rate > 0.0 && self.learning_rate <= 1.0;
        let sub_ok = self.subsample_features > 0.0 && self.subsample_features <= 1.0;
        if self.n_rounds < 1 || !lr_ok || !sub_ok {
            return Err(Error::Config(format!("invalid boosting config {self:?}")));
        }
        Ok(())
    }
}

/// Additive ensemble of regression trees fit by L2 gradient boosting.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoostedModel {
    base_score: f64,
    learning_rate: f64,
    trees: Vec<RegressionTree>,
    importances: Vec<f64>,
    /// Training MSE before the first round and after every round.
    train_loss: Vec<f64>,
}

impl BoostedModel {
    /// Assembles a model from parts. Importances are recomputed from the trees.
    pub fn from_parts(base_score: f64, learning_rate: f64, trees: Vec<RegressionTree>, n_features: usize) -> Result<Self> {
        let mut importances = vec![0.0; n_features];
        for tree in &trees {
            if let Some(index) = tree.max_feature_index() {
                if index >= n_features {
                    return Err(Error::FeatureIndexOutOfRange {
                        index,
                        n_cols: n_features,
                    });
                }
            }
            tree.add_gains(&mut importances);
        }
        Ok(Self {
            base_score,
            learning_rate,
            trees,
            importances,
            train_loss: Vec::new(),
        })
    }

    /// A model that predicts `value` for every row.
    pub fn constant(value: f64, n_features: usize) -> Self {
        Self {
            base_score: value,
            learning_rate: 1.0,
            trees: Vec::new(),
            importances: vec![0.0; n_features],
            train_loss: Vec::new(),
        }
    }

    pub fn base_score(&self) -> f64 {
        self.base_score
    }

    pub fn trees(&self) -> &[RegressionTree] {
        &self.trees
    }

    pub fn importances(&self) -> &[f64] {
        &self.importances
    }

    pub fn n_features(&self) -> usize {
        self.importances.len()
    }

    pub fn train_loss(&self) -> &[f64] {
        &self.train_loss
    }
}

pub fn fit_boosted(x: ArrayView2<'_, f64>, y: ArrayView1<'_, f64>, config: &BoostConfig, seed: u64) -> Result<BoostedModel> {
    config.validate()?;
    let n = x.nrows();
    if n == 0 {
        return Err(Error::EmptyInput);
    }
    if y.len() != n {
        return Err(Error::LengthMismatch {
            expected: n,
            actual: y.len(),
        });
    }
    let m = x.ncols();
    let cols = SortedColumns::new(x);
    let targets = y.to_vec();
    let base_score = exact_mean(&targets);
    let lr = config.learning_rate;

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let all_features: Vec<usize> = (0..m).collect();
    let n_sub = ((m as f64 * config.subsample_features).round() as usize).clamp(1, m.max(1));

    let mut pred = vec![base_score; n];
    let mut residual = vec![0.0; n];
    let mut trees = Vec::with_capacity(config.n_rounds);
    let mut importances = vec![0.0; m];
    let mut train_loss = Vec::with_capacity(config.n_rounds + 1);
    train_loss.push(mse(&targets, &pred));

    for _ in 0..config.n_rounds {
        for ((r, t), p) in residual.iter_mut().zip(&targets).zip(&pred) {
            *r = t - p;
        }
        let features = if n_sub < m {
            let mut f = sample(&mut rng, m, n_sub).into_vec();
            f.sort_unstable();
            f
        } else {
            all_features.clone()
        };
        let grown = grow(&cols, &residual, &features, &config.tree);
        for (p, &leaf) in pred.iter_mut().zip(&grown.leaf_of_row) {
            if let super::tree::Node::Leaf { value } = grown.tree.nodes()[leaf] {
                *p += lr * value;
            }
        }
        grown.tree.add_gains(&mut importances);
        train_loss.push(mse(&targets, &pred));
        trees.push(grown.tree);
    }

    Ok(BoostedModel {
        base_score,
        learning_rate: lr,
        trees,
        importances,
        train_loss,
    })
}

pub fn predict_boosted(model: &BoostedModel, x: ArrayView2<'_, f64>) -> Result<Array1<f64>> {
    if let Some(index) = model.trees.iter().filter_map(RegressionTree::max_feature_index).max() {
        if index >= x.ncols() {
            return Err(Error::FeatureIndexOutOfRange {
                index,
                n_cols: x.ncols(),
            });
        }
    }
    Ok(x.rows()
        .into_iter()
        .map(|row| {
            let mut p = model.base_score;
            for tree in &model.trees {
                p += model.learning_rate * tree.predict_row(row);
            }
            p
        })
        .collect())
}

/// Features ranked by total split gain, descending; ties by ascending index.
pub fn feature_importance(model: &BoostedModel) -> Vec<(usize, f64)> {
    let mut ranked: Vec<(usize, f64)> = model.importances.iter().copied().enumerate().collect();
    ranked.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));
    ranked
}

fn exact_mean(v: &[f64]) -> f64 {
    let first = v[0];
    if v.iter().all(|&x| x == first) {
        return first;
    }
    v.iter().sum::<f64>() / v.len() as f64
}

fn mse(y: &[f64], p: &[f64]) -> f64 {
    y.iter().zip(p).map(|(a, b)| (a - b) * (a - b)).sum::<f64>() / y.len() as f64
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::{array, Array2};
    use rand::Rng;
    use rand_distr::StandardNormal;

    fn step() -> (Array2<f64>, Array1<f64>) {
        (array![[0.0], [1.0], [2.0], [3.0]], array![0.0, 0.0, 10.0, 10.0])
    }

    fn stump_boost(rounds: usize, lr: f64) -> BoostConfig {
        BoostConfig {
            n_rounds: rounds,
            learning_rate: lr,
            tree: TreeConfig {
                max_depth: 1,
                min_samples_leaf: 1,
                max_leaves: 2,
            },
            subsample_features: 1.0,
        }
    }

    #[test]
    fn constant_target_is_reproduced_exactly() {
        let x = Array2::from_shape_fn((25, 3), |(i, j)| ((i + j) % 4) as f64);
        let y = Array1::from_elem(25, 0.3);
        let model = fit_boosted(x.view(), y.view(), &BoostConfig::default(), 1).unwrap();
        let pred = predict_boosted(&model, x.view()).unwrap();
        assert!(pred.iter().all(|&p| p == 0.3));
        assert!(model.importances().iter().all(|&g| g == 0.0));
    }

    #[test]
    fn step_data_is_fit_to_tiny_error() {
        let (x, y) = step();
        let model = fit_boosted(x.view(), y.view(), &stump_boost(50, 0.5), 0).unwrap();
        // residual halves each round: 5 * 0.5^50
        assert!(*model.train_loss().last().unwrap() < 1e-6);
        let pred = predict_boosted(&model, array![[0.0], [3.0]].view()).unwrap();
        assert!((pred[0] - 0.0).abs() < 1e-3);
        assert!((pred[1] - 10.0).abs() < 1e-3);
    }

    #[test]
    fn only_informative_feature_gets_importance() {
        let x = array![[0.0, 1.0], [1.0, 1.0], [2.0, 1.0], [3.0, 1.0]];
        let y = array![0.0, 0.0, 10.0, 10.0];
        let model = fit_boosted(x.view(), y.view(), &stump_boost(50, 0.5), 0).unwrap();
        assert!(model.importances()[0] > 0.0);
        assert_eq!(model.importances()[1], 0.0);
    }

    #[test]
    fn empty_model_predicts_base_score() {
        let model = BoostedModel::constant(2.5, 3);
        let x = Array2::zeros((4, 3));
        assert_eq!(predict_boosted(&model, x.view()).unwrap().to_vec(), vec![2.5; 4]);
    }

    #[test]
    fn single_tree_with_unit_rate_is_additive() {
        let (x, y) = step();
        let tree = super::super::tree::fit_tree(x.view(), y.view(), &stump_boost(1, 1.0).tree).unwrap();
        let model = BoostedModel::from_parts(1.0, 1.0, vec![tree.clone()], 1).unwrap();
        let pred = predict_boosted(&model, x.view()).unwrap();
        let tree_pred = super::super::tree::predict_tree(&tree, x.view()).unwrap();
        for (p, t) in pred.iter().zip(tree_pred.iter()) {
            assert_eq!(*p, 1.0 + t);
        }
    }

    #[test]
    fn copy_feature_outranks_noise() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let n = 200;
        let x0: Vec<f64> = (0..n).map(|_| rng.sample(StandardNormal)).collect();
        let x1: Vec<f64> = (0..n).map(|_| rng.sample(StandardNormal)).collect();
        let y: Array1<f64> = x0.iter().map(|v| v + 0.05 * rng.sample::<f64, _>(StandardNormal)).collect();
        let x = Array2::from_shape_fn((n, 2), |(i, j)| if j == 0 { x0[i] } else { x1[i] });
        let model = fit_boosted(x.view(), y.view(), &BoostConfig::default(), 3).unwrap();
        assert_eq!(feature_importance(&model)[0].0, 0);
    }

    #[test]
    fn importance_ties_break_by_index() {
        let x = array![[0.0, 0.0], [1.0, 1.0], [2.0, 2.0], [3.0, 3.0]];
        let y = array![0.0, 0.0, 10.0, 10.0];
        let mut model = fit_boosted(x.view(), y.view(), &stump_boost(5, 0.5), 0).unwrap();
        // identical columns: the scan keeps the first feature, so force an exact tie
        model.importances = vec![4.0, 4.0];
        assert_eq!(feature_importance(&model), vec![(0, 4.0), (1, 4.0)]);
        let zero = BoostedModel::constant(0.0, 3);
        assert_eq!(feature_importance(&zero), vec![(0, 0.0), (1, 0.0), (2, 0.0)]);
    }

    #[test]
    fn subsampling_is_seeded() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let x = Array2::from_shape_fn((80, 6), |_| rng.random::<f64>());
        let y = Array1::from_shape_fn(80, |i| x[[i, 0]] + x[[i, 3]]);
        let cfg = BoostConfig {
            subsample_features: 0.5,
            n_rounds: 20,
            ..BoostConfig::default()
        };
        let a = fit_boosted(x.view(), y.view(), &cfg, 9).unwrap();
        let b = fit_boosted(x.view(), y.view(), &cfg, 9).unwrap();
        let c = fit_boosted(x.view(), y.view(), &cfg, 10).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, c);
    }

    #[test]
    fn rejects_bad_config_and_empty_input() {
        let x = Array2::<f64>::zeros((0, 1));
        let y = Array1::<f64>::zeros(0);
        assert!(matches!(fit_boosted(x.view(), y.view(), &BoostConfig::default(), 0), Err(Error::EmptyInput)));
        let cfg = BoostConfig {
            learning_rate: 0.0,
            ..BoostConfig::default()
        };
        let (x, y) = step();
        assert!(matches!(fit_boosted(x.view(), y.view(), &cfg, 0), Err(Error::Config(_))));
    }
}
