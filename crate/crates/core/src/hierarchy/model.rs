use std::ops::Range;

use ndarray::{Array1, ArrayView2, Axis};
use serde::{Deserialize, Serialize};

use super::cost::{optimize_alphas, CostOptConfig};
use crate::dataset::{Dataset, FeatureGroups};
use crate::error::{Error, Result};
use crate::learners::{fit_boosted, predict_boosted, BoostConfig, BoostedModel};

/// How the first learner's training predictions are produced before the
/// weights are optimised against them.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum FirstLayerPredictions {
    /// Fit on the training window and predict that same window.
    InSample,
    /// Predict each of `folds` contiguous blocks with a model fit on the
    /// remaining blocks.
    OutOfFold { folds: usize },
}

impl Default for FirstLayerPredictions {
    fn default() -> Self {
        FirstLayerPredictions::InSample
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct HierarchyOptions {
    /// Clamp predicted weights to the optimiser's range at prediction time.
    pub clamp: bool,
    pub first_layer: FirstLayerPredictions,
    /// Boosting settings for the weight learners; the shared settings when unset.
    pub weight_boost: Option<BoostConfig>,
}

impl Default for HierarchyOptions {
    fn default() -> Self {
        Self {
            clamp: true,
            first_layer: FirstLayerPredictions::InSample,
            weight_boost: None,
        }
    }
}

/// One weighting stage: a learner that maps a side-information group to a
/// multiplicative correction of the previous stage's predictions.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WeightLayer {
    pub group: usize,
    pub columns: Vec<usize>,
    pub weight_learner: BoostedModel,
    /// Optimised training weights the learner was fit to.
    pub train_alphas: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HierarchicalModel {
    first: BoostedModel,
    first_columns: Vec<usize>,
    layers: Vec<WeightLayer>,
    alpha_range: (f64, f64),
    clamp: bool,
}

impl HierarchicalModel {
    pub fn new(first: BoostedModel, first_columns: Vec<usize>, alpha_range: (f64, f64), clamp: bool) -> Self {
        Self {
            first,
            first_columns,
            layers: Vec::new(),
            alpha_range,
            clamp,
        }
    }

    pub fn push_layer(&mut self, layer: WeightLayer) {
        self.layers.push(layer);
    }

    pub fn first(&self) -> &BoostedModel {
        &self.first
    }

    pub fn first_columns(&self) -> &[usize] {
        &self.first_columns
    }

    pub fn layers(&self) -> &[WeightLayer] {
        &self.layers
    }

    pub fn alpha_range(&self) -> (f64, f64) {
        self.alpha_range
    }

    fn effective_weights(&self, raw: Array1<f64>) -> Array1<f64> {
        if self.clamp {
            let (lo, hi) = self.alpha_range;
            raw.mapv_into(|a| a.clamp(lo, hi))
        } else {
            raw
        }
    }

    /// First-layer predictions followed by every weighting stage.
    pub fn predict_layers(&self, x: ArrayView2<'_, f64>) -> Result<Vec<Array1<f64>>> {
        let max_col = self
            .first_columns
            .iter()
            .chain(self.layers.iter().flat_map(|l| l.columns.iter()))
            .copied()
            .max();
        if let Some(index) = max_col {
            if index >= x.ncols() {
                return Err(Error::FeatureIndexOutOfRange {
                    index,
                    n_cols: x.ncols(),
                });
            }
        }
        let mut out = Vec::with_capacity(self.layers.len() + 1);
        let mut pred = predict_boosted(&self.first, x.select(Axis(1), &self.first_columns).view())?;
        out.push(pred.clone());
        for layer in &self.layers {
            let raw = predict_boosted(&layer.weight_learner, x.select(Axis(1), &layer.columns).view())?;
            pred = pred * self.effective_weights(raw);
            out.push(pred.clone());
        }
        Ok(out)
    }
}

/// Fits the hierarchy on `train` rows: a first learner on the target-history
/// group, then for each further group the optimal per-row weights against the
/// current predictions, a weight learner on that group, and the rescaled
/// predictions handed to the next group.
pub fn fit_hierarchical(
    dataset: &Dataset,
    groups: &FeatureGroups,
    train: Range<usize>,
    boost: &BoostConfig,
    cost: &CostOptConfig,
    options: &HierarchyOptions,
    seed: u64,
) -> Result<HierarchicalModel> {
    if groups.len() < 2 {
        return Err(Error::GroupCountTooSmall {
            required: 2,
            actual: groups.len(),
        });
    }
    let y = dataset.y_rows(train.clone()).to_vec();
    let first_columns = groups.target_history().to_vec();
    let x_first = dataset.x_rows_cols(train.clone(), &first_columns);
    let first = fit_boosted(x_first.view(), dataset.y_rows(train.clone()), boost, seed)?;

    let mut current = match options.first_layer {
        FirstLayerPredictions::InSample => predict_boosted(&first, x_first.view())?.to_vec(),
        FirstLayerPredictions::OutOfFold { folds } => out_of_fold(&x_first, &y, folds, boost, seed)?,
    };

    let mut model = HierarchicalModel::new(first, first_columns, cost.range(), options.clamp);
    for (i, group) in groups.groups().iter().enumerate().skip(1) {
        let alphas = optimize_alphas(&y, &current, cost)?;
        let x_side = dataset.x_rows_cols(train.clone(), group);
        let weight_boost = options.weight_boost.as_ref().unwrap_or(boost);
        let learner = fit_boosted(x_side.view(), Array1::from(alphas.clone()).view(), weight_boost, seed.wrapping_add(i as u64))?;
        let weights = model.effective_weights(predict_boosted(&learner, x_side.view())?);
        for (c, w) in current.iter_mut().zip(weights.iter()) {
            *c *= w;
        }
        model.push_layer(WeightLayer {
            group: i,
            columns: group.clone(),
            weight_learner: learner,
            train_alphas: alphas,
        });
    }
    Ok(model)
}

pub fn predict_hierarchical(model: &HierarchicalModel, x: ArrayView2<'_, f64>) -> Result<Array1<f64>> {
    Ok(model.predict_layers(x)?.pop().expect("at least the first layer"))
}

fn out_of_fold(x: &ndarray::Array2<f64>, y: &[f64], folds: usize, boost: &BoostConfig, seed: u64) -> Result<Vec<f64>> {
    let n = y.len();
    if folds < 2 || folds > n {
        return Err(Error::Config(format!("out-of-fold needs 2..={n} folds, got {folds}")));
    }
    let mut pred = vec![0.0; n];
    for k in 0..folds {
        let (lo, hi) = (k * n / folds, (k + 1) * n / folds);
        let rest: Vec<usize> = (0..lo).chain(hi..n).collect();
        let x_fit = x.select(Axis(0), &rest);
        let y_fit: Array1<f64> = rest.iter().map(|&r| y[r]).collect();
        let m = fit_boosted(x_fit.view(), y_fit.view(), boost, seed)?;
        let block = predict_boosted(&m, x.slice(ndarray::s![lo..hi, ..]))?;
        pred[lo..hi].copy_from_slice(block.as_slice().expect("contiguous"));
    }
    Ok(pred)
}
