//! Comparison methods: backward-elimination wrapper, history-only model,
//! two-model convex ensemble, correlation filter and the all-features model.

use std::ops::Range;
use std::sync::Arc;

use ndarray::{Array1, ArrayView1, ArrayView2, Axis};
use serde::{Deserialize, Serialize};

use crate::dataset::{ChronoSplit, Dataset, FeatureGroups};
use crate::error::{Error, Result};
use crate::hierarchy::{grid_argmin, Loss};
use crate::learners::{fit_boosted, predict_boosted, BoostConfig, BoostedModel};

/// A model together with the dataset columns it reads.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SubsetModel {
    pub columns: Vec<usize>,
    pub model: BoostedModel,
}

impl SubsetModel {
    pub fn predict(&self, x: ArrayView2<'_, f64>) -> Result<Array1<f64>> {
        if let Some(&index) = self.columns.iter().max() {
            if index >= x.ncols() {
                return Err(Error::FeatureIndexOutOfRange { index, n_cols: x.ncols() });
            }
        }
        predict_boosted(&self.model, x.select(Axis(1), &self.columns).view())
    }
}

fn fit_subset(dataset: &Dataset, rows: Range<usize>, columns: &[usize], boost: &BoostConfig, seed: u64) -> Result<SubsetModel> {
    let x = dataset.x_rows_cols(rows.clone(), columns);
    let model = fit_boosted(x.view(), dataset.y_rows(rows), boost, seed)?;
    Ok(SubsetModel {
        columns: columns.to_vec(),
        model,
    })
}

fn mean_sq_err(y: ArrayView1<'_, f64>, pred: &Array1<f64>) -> f64 {
    y.iter().zip(pred).map(|(a, b)| (a - b) * (a - b)).sum::<f64>() / y.len() as f64
}

/// One candidate fit of the backward search.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CandidateFit {
    pub stage: usize,
    pub removed: usize,
    pub val_loss: f64,
}

/// The subset kept after a stage and its validation loss.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WrapperStage {
    pub dropped: usize,
    pub subset: Vec<usize>,
    pub val_loss: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WrapperTrace {
    pub fits: Vec<CandidateFit>,
    pub stages: Vec<WrapperStage>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WrapperResult {
    pub selected: Vec<usize>,
    pub model: SubsetModel,
    pub trace: WrapperTrace,
}

/// Backward elimination over `columns` driven by L2 loss on the validation
/// window. Every stage is run down to one feature; the stage subset with the
/// lowest validation loss is refit on the training window.
pub fn fit_wrapper_backward(
    dataset: &Dataset,
    columns: &[usize],
    split: &ChronoSplit,
    boost: &BoostConfig,
    seed: u64,
) -> Result<WrapperResult> {
    if columns.is_empty() {
        return Err(Error::EmptyInput);
    }
    let mut trace = WrapperTrace {
        fits: Vec::new(),
        stages: Vec::new(),
    };
    if columns.len() == 1 {
        let model = fit_subset(dataset, split.train(), columns, boost, seed)?;
        return Ok(WrapperResult {
            selected: columns.to_vec(),
            model,
            trace,
        });
    }
    if !split.has_validation() {
        return Err(Error::DegenerateSplit("wrapper selection needs a validation window".into()));
    }
    let x_val = dataset.x_rows_cols(split.val(), &(0..dataset.n_features()).collect::<Vec<_>>());
    let y_val = dataset.y_rows(split.val());

    let mut remaining = columns.to_vec();
    let mut stage = 0;
    while remaining.len() > 1 {
        let mut best: Option<(f64, usize)> = None;
        for &col in &remaining {
            let candidate: Vec<usize> = remaining.iter().copied().filter(|&c| c != col).collect();
            let fitted = fit_subset(dataset, split.train(), &candidate, boost, seed)?;
            let loss = mean_sq_err(y_val, &fitted.predict(x_val.view())?);
            trace.fits.push(CandidateFit {
                stage,
                removed: col,
                val_loss: loss,
            });
            let better = match best {
                None => true,
                Some((l, c)) => loss < l || (loss == l && col < c),
            };
            if better {
                best = Some((loss, col));
            }
        }
        let (loss, dropped) = best.expect("at least two candidates");
        remaining.retain(|&c| c != dropped);
        trace.stages.push(WrapperStage {
            dropped,
            subset: remaining.clone(),
            val_loss: loss,
        });
        stage += 1;
    }

    let chosen = trace
        .stages
        .iter()
        .fold(None::<&WrapperStage>, |acc, s| match acc {
            Some(a) if a.val_loss <= s.val_loss => Some(a),
            _ => Some(s),
        })
        .expect("non-empty trace");
    let selected = chosen.subset.clone();
    let model = fit_subset(dataset, split.train(), &selected, boost, seed)?;
    Ok(WrapperResult { selected, model, trace })
}

/// Model on the target-history group only.
pub fn fit_embedded(dataset: &Dataset, groups: &FeatureGroups, train: Range<usize>, boost: &BoostConfig, seed: u64) -> Result<SubsetModel> {
    if groups.is_empty() || groups.target_history().is_empty() {
        return Err(Error::EmptyGroup(0));
    }
    fit_subset(dataset, train, groups.target_history(), boost, seed)
}

/// Model on every column assigned to a group.
pub fn fit_full_baseline(dataset: &Dataset, groups: &FeatureGroups, train: Range<usize>, boost: &BoostConfig, seed: u64) -> Result<SubsetModel> {
    let cols = groups.assigned_columns();
    if cols.is_empty() {
        return Err(Error::EmptyInput);
    }
    fit_subset(dataset, train, &cols, boost, seed)
}

/// `n` evenly spaced mixing weights over `[0, 1]`.
pub fn mixing_grid(n: usize) -> Vec<f64> {
    let denom = (n - 1) as f64;
    (0..n).map(|k| k as f64 / denom).collect()
}

/// `alpha * first + (1 - alpha) * second`, written so equal inputs give
/// bit-identical outputs for every alpha.
pub fn mix(alpha: f64, first: f64, second: f64) -> f64 {
    second + alpha * (first - second)
}

/// Per-row grid weights minimising the loss of the convex mixture.
pub fn mixing_weights(y: &[f64], first: &[f64], second: &[f64], grid: &[f64], loss: &dyn Loss) -> Result<Vec<f64>> {
    check_lengths(y, first, second)?;
    Ok((0..y.len())
        .map(|t| grid_argmin(grid, |a| loss.value(y[t], mix(a, first[t], second[t]))))
        .collect())
}

/// Single grid weight minimising the summed loss of the mixture.
pub fn best_constant_weight(y: &[f64], first: &[f64], second: &[f64], grid: &[f64], loss: &dyn Loss) -> Result<f64> {
    check_lengths(y, first, second)?;
    Ok(grid_argmin(grid, |a| {
        (0..y.len()).map(|t| loss.value(y[t], mix(a, first[t], second[t]))).sum()
    }))
}

fn check_lengths(y: &[f64], first: &[f64], second: &[f64]) -> Result<()> {
    if y.is_empty() {
        return Err(Error::EmptyInput);
    }
    for other in [first, second] {
        if other.len() != y.len() {
            return Err(Error::LengthMismatch {
                expected: y.len(),
                actual: other.len(),
            });
        }
    }
    Ok(())
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FlatEnsemble {
    pub first: SubsetModel,
    pub second: SubsetModel,
    /// Per-row weights on the training window (these need the target).
    pub train_alphas: Vec<f64>,
    /// Constant weight used for prediction, chosen on the validation window.
    pub alpha_star: f64,
}

impl FlatEnsemble {
    pub fn predict(&self, x: ArrayView2<'_, f64>) -> Result<Array1<f64>> {
        let p1 = self.first.predict(x)?;
        let p2 = self.second.predict(x)?;
        Ok(p1.iter().zip(p2.iter()).map(|(&a, &b)| mix(self.alpha_star, a, b)).collect())
    }
}

/// Two learners, one per group, mixed convexly. Falls back to the training
/// window for choosing the constant weight when there is no validation window.
pub fn fit_flat_ensemble(
    dataset: &Dataset,
    groups: &FeatureGroups,
    split: &ChronoSplit,
    boost: &BoostConfig,
    n_alpha_steps: usize,
    loss: Arc<dyn Loss>,
    seed: u64,
) -> Result<FlatEnsemble> {
    if groups.len() != 2 {
        return Err(Error::GroupCountMismatch {
            expected: 2,
            actual: groups.len(),
        });
    }
    if n_alpha_steps < 2 {
        return Err(Error::Config(format!("ensemble grid needs at least 2 steps, got {n_alpha_steps}")));
    }
    let first = fit_subset(dataset, split.train(), groups.group(0), boost, seed)?;
    let second = fit_subset(dataset, split.train(), groups.group(1), boost, seed.wrapping_add(1))?;
    let grid = mixing_grid(n_alpha_steps);

    let x_train = dataset.x_rows_cols(split.train(), &(0..dataset.n_features()).collect::<Vec<_>>());
    let y_train = dataset.y_rows(split.train()).to_vec();
    let train_alphas = mixing_weights(
        &y_train,
        first.predict(x_train.view())?.as_slice().expect("contiguous"),
        second.predict(x_train.view())?.as_slice().expect("contiguous"),
        &grid,
        loss.as_ref(),
    )?;

    let sel = if split.has_validation() { split.val() } else { split.train() };
    let x_sel = dataset.x_rows_cols(sel.clone(), &(0..dataset.n_features()).collect::<Vec<_>>());
    let alpha_star = best_constant_weight(
        &dataset.y_rows(sel).to_vec(),
        first.predict(x_sel.view())?.as_slice().expect("contiguous"),
        second.predict(x_sel.view())?.as_slice().expect("contiguous"),
        &grid,
        loss.as_ref(),
    )?;
    Ok(FlatEnsemble {
        first,
        second,
        train_alphas,
        alpha_star,
    })
}

/// Pearson correlation; `None` when either input has zero variance.
pub fn pearson(x: ArrayView1<'_, f64>, y: ArrayView1<'_, f64>) -> Option<f64> {
    let n = x.len() as f64;
    let mx = x.sum() / n;
    let my = y.sum() / n;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (&a, &b) in x.iter().zip(y.iter()) {
        let (da, db) = (a - mx, b - my);
        sxy += da * db;
        sxx += da * da;
        syy += db * db;
    }
    if sxx == 0.0 || syy == 0.0 {
        return None;
    }
    Some((sxy / (sxx.sqrt() * syy.sqrt())).clamp(-1.0, 1.0))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FilterResult {
    /// `(column, score)` for every candidate, best first.
    pub ranking: Vec<(usize, f64)>,
    pub model: SubsetModel,
}

/// Keeps the `m` columns with the largest absolute correlation to the target
/// on the training window. Ties keep the lower column index first.
pub fn fit_filter(
    dataset: &Dataset,
    columns: &[usize],
    train: Range<usize>,
    m: usize,
    boost: &BoostConfig,
    seed: u64,
) -> Result<FilterResult> {
    if m == 0 || m > columns.len() {
        return Err(Error::Config(format!("filter keeps 1..={} features, got {m}", columns.len())));
    }
    let y = dataset.y_rows(train.clone());
    let x = dataset.x_rows_cols(train.clone(), columns);
    let mut ranking: Vec<(usize, f64)> = columns
        .iter()
        .enumerate()
        .map(|(j, &col)| {
            let score = pearson(x.column(j), y).unwrap_or_else(|| {
                log::warn!("column {col} has zero variance on the training window; scored 0");
                0.0
            });
            (col, score)
        })
        .collect();
    ranking.sort_by(|a, b| b.1.abs().total_cmp(&a.1.abs()).then(a.0.cmp(&b.0)));
    let mut keep: Vec<usize> = ranking[..m].iter().map(|&(c, _)| c).collect();
    keep.sort_unstable();
    let model = fit_subset(dataset, train, &keep, boost, seed)?;
    Ok(FilterResult { ranking, model })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hierarchy::{L1, L2};
    use ndarray::{array, Array2};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn small_boost() -> BoostConfig {
        BoostConfig {
            n_rounds: 20,
            ..BoostConfig::default()
        }
    }

    fn dataset(n: usize, m: usize, seed: u64, f: impl Fn(&[f64]) -> f64) -> Dataset {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let x = Array2::from_shape_fn((n, m), |_| rng.random::<f64>());
        let y: Array1<f64> = x.rows().into_iter().map(|r| f(r.as_slice().unwrap())).collect();
        Dataset::new(y, x, None, (0..m).map(|j| format!("f{j}")).collect()).unwrap()
    }

    #[test]
    fn wrapper_drops_noise_first() {
        let ds = dataset(200, 2, 1, |r| r[1]);
        let split = chronological_split(200);
        let res = fit_wrapper_backward(&ds, &[0, 1], &split, &small_boost(), 0).unwrap();
        assert_eq!(res.trace.stages[0].dropped, 0);
        assert_eq!(res.selected, vec![1]);
    }

    #[test]
    fn wrapper_single_feature_is_untouched() {
        let ds = dataset(50, 3, 2, |r| r[0]);
        let res = fit_wrapper_backward(&ds, &[2], &chronological_split(50), &small_boost(), 0).unwrap();
        assert_eq!(res.selected, vec![2]);
        assert!(res.trace.fits.is_empty() && res.trace.stages.is_empty());
    }

    #[test]
    fn wrapper_fit_count_and_trace_shape() {
        let m = 5;
        let ds = dataset(120, m, 3, |r| r[0] + 0.5 * r[3]);
        let res = fit_wrapper_backward(&ds, &(0..m).collect::<Vec<_>>(), &chronological_split(120), &small_boost(), 0).unwrap();
        assert_eq!(res.trace.fits.len(), m * (m + 1) / 2 - 1);
        let sizes: Vec<usize> = res.trace.stages.iter().map(|s| s.subset.len()).collect();
        assert!(sizes.windows(2).all(|w| w[0] > w[1]));
        let min = res.trace.stages.iter().map(|s| s.val_loss).fold(f64::INFINITY, f64::min);
        let chosen = res.trace.stages.iter().find(|s| s.subset == res.selected).unwrap();
        assert_eq!(chosen.val_loss, min);
    }

    fn chronological_split(n: usize) -> ChronoSplit {
        crate::dataset::chronological_split(n, 0.6, 0.2).unwrap()
    }

    #[test]
    fn embedded_ignores_side_columns() {
        let ds = dataset(100, 3, 4, |r| r[0] + r[2]);
        let groups = FeatureGroups::new(vec![vec![0], vec![1, 2]]);
        let m = fit_embedded(&ds, &groups, 0..80, &small_boost(), 0).unwrap();
        let mut x = ds.x().to_owned();
        let before = m.predict(x.view()).unwrap();
        x.column_mut(1).fill(9.0);
        x.column_mut(2).fill(-3.0);
        assert_eq!(m.predict(x.view()).unwrap(), before);
    }

    #[test]
    fn embedded_equals_full_when_one_group() {
        let ds = dataset(100, 3, 5, |r| r[0] * r[1]);
        let groups = FeatureGroups::new(vec![vec![0, 1, 2]]);
        let a = fit_embedded(&ds, &groups, 0..80, &small_boost(), 7).unwrap();
        let b = fit_full_baseline(&ds, &groups, 0..80, &small_boost(), 7).unwrap();
        assert_eq!(a, b);
        assert!(matches!(
            fit_embedded(&ds, &FeatureGroups::new(vec![vec![]]), 0..80, &small_boost(), 0),
            Err(Error::EmptyGroup(0))
        ));
    }

    #[test]
    fn mixing_weight_rules() {
        let grid = mixing_grid(11);
        let y = [0.3, 0.8, 0.1];
        let other = [0.9, 0.0, 0.5];
        assert_eq!(mixing_weights(&y, &y, &other, &grid, &L1).unwrap(), vec![1.0; 3]);
        assert_eq!(mixing_weights(&y, &other, &other, &grid, &L1).unwrap(), vec![0.0; 3]);
    }

    #[test]
    fn constant_weight_matches_brute_force() {
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let grid = mixing_grid(31);
        for _ in 0..20 {
            let n = 40;
            let y: Vec<f64> = (0..n).map(|_| rng.random()).collect();
            let p1: Vec<f64> = (0..n).map(|_| rng.random()).collect();
            let p2: Vec<f64> = (0..n).map(|_| rng.random()).collect();
            let got = best_constant_weight(&y, &p1, &p2, &grid, &L2).unwrap();
            let losses: Vec<f64> = grid
                .iter()
                .map(|&a| (0..n).map(|t| (y[t] - (a * p1[t] + (1.0 - a) * p2[t])).powi(2)).sum())
                .collect();
            let best = losses.iter().cloned().fold(f64::INFINITY, f64::min);
            let idx = losses.iter().position(|&l| (l - best).abs() <= 1e-12 * best.max(1.0)).unwrap();
            assert_eq!(got, grid[idx]);
            let at = |a: f64| (0..n).map(|t| (y[t] - mix(a, p1[t], p2[t])).powi(2)).sum::<f64>();
            assert!(at(got) <= at(0.0) && at(got) <= at(1.0));
        }
    }

    #[test]
    fn flat_ensemble_needs_two_groups() {
        let ds = dataset(60, 3, 7, |r| r[0]);
        let groups = FeatureGroups::new(vec![vec![0], vec![1], vec![2]]);
        assert!(matches!(
            fit_flat_ensemble(&ds, &groups, &chronological_split(60), &small_boost(), 11, Arc::new(L1), 0),
            Err(Error::GroupCountMismatch { expected: 2, actual: 3 })
        ));
        let groups = FeatureGroups::new(vec![vec![0], vec![1, 2]]);
        let e = fit_flat_ensemble(&ds, &groups, &chronological_split(60), &small_boost(), 11, Arc::new(L1), 0).unwrap();
        assert!((0.0..=1.0).contains(&e.alpha_star));
        assert_eq!(e.train_alphas.len(), 36);
    }

    #[test]
    fn pearson_hand_values() {
        // sxy = 8, sxx = syy = 10 for x2
        let y = array![1.0, 2.0, 3.0, 4.0, 5.0];
        let x0 = y.clone();
        let x1 = y.mapv(|v| -2.0 * v + 1.0);
        let x2 = array![2.0, 1.0, 4.0, 3.0, 5.0];
        assert!((pearson(x0.view(), y.view()).unwrap() - 1.0).abs() < 1e-12);
        assert!((pearson(x1.view(), y.view()).unwrap() + 1.0).abs() < 1e-12);
        assert!((pearson(x2.view(), y.view()).unwrap() - 0.8).abs() < 1e-12);
        assert_eq!(pearson(array![1.0, 1.0, 1.0].view(), array![1.0, 2.0, 3.0].view()), None);
    }

    #[test]
    fn filter_ranks_by_absolute_correlation() {
        let y = array![1.0, 2.0, 3.0, 4.0, 5.0];
        let x = Array2::from_shape_vec(
            (5, 4),
            vec![
                2.0, 7.0, -1.0, 0.0, //
                1.0, 7.0, -2.0, 1.0, //
                4.0, 7.0, -3.0, 0.0, //
                3.0, 7.0, -4.0, 0.0, //
                5.0, 7.0, -5.0, 1.0,
            ],
        )
        .unwrap();
        let ds = Dataset::new(y, x, None, (0..4).map(|j| format!("f{j}")).collect()).unwrap();
        let boost = BoostConfig {
            n_rounds: 2,
            tree: crate::learners::TreeConfig {
                min_samples_leaf: 1,
                ..Default::default()
            },
            ..BoostConfig::default()
        };
        let res = fit_filter(&ds, &[0, 1, 2, 3], 0..5, 2, &boost, 0).unwrap();
        let order: Vec<usize> = res.ranking.iter().map(|r| r.0).collect();
        assert_eq!(order, vec![2, 0, 3, 1]);
        assert!((res.ranking[0].1 + 1.0).abs() < 1e-12);
        assert!((res.ranking[1].1 - 0.8).abs() < 1e-12);
        assert!((res.ranking[2].1 - 1.0 / 12f64.sqrt()).abs() < 1e-12);
        assert_eq!(res.ranking[3].1, 0.0);
        assert_eq!(res.model.columns, vec![0, 2]);
    }
}
