use std::ops::Range;
use std::sync::Arc;

use ndarray::{s, ArrayView2};
use rayon::prelude::*;

use super::config::{CsvLayout, DatasetConfig, ExperimentConfig, Method, SplitConfig};
use super::ingest::{engineer, ingest_csv, ingest_wide, sample_rows, RawSeries};
use crate::baselines::{fit_embedded, fit_filter, fit_flat_ensemble, fit_full_baseline, fit_wrapper_backward};
use crate::dataset::{chronological_split, ChronoSplit, Dataset, FeatureGroups};
use crate::error::{Error, Result};
use crate::eval::{mse_per_step, time_method, TrialResult};
use crate::hierarchy::{fit_hierarchical, predict_hierarchical, CostOptConfig, LossRegistry};
use crate::synthetic::assemble_synthetic;

/// Everything one trial fits and scores on.
#[derive(Debug, Clone)]
pub struct TrialData {
    pub dataset: Dataset,
    pub groups: FeatureGroups,
    pub split: ChronoSplit,
}

/// Loaded input shared by all trials.
#[derive(Debug, Clone)]
pub enum DataSource {
    Synthetic,
    Series(Vec<RawSeries>),
}

pub fn make_split(n: usize, cfg: &SplitConfig) -> Result<ChronoSplit> {
    match cfg.test_len {
        Some(test_len) => ChronoSplit::with_test_len(n, test_len, cfg.val_len),
        None => chronological_split(n, cfg.train_frac, cfg.val_frac),
    }
}

/// Reads any files the configuration refers to.
pub fn load_source(cfg: &ExperimentConfig) -> Result<DataSource> {
    match &cfg.dataset {
        DatasetConfig::Synthetic(_) => Ok(DataSource::Synthetic),
        DatasetConfig::Csv(c) => {
            let series = match &c.layout {
                CsvLayout::Long {
                    target_column,
                    timestamp_column,
                } => vec![ingest_csv(&c.path, target_column, timestamp_column.as_deref())?],
                CsvLayout::Wide => {
                    let all = ingest_wide(&c.path)?;
                    match c.sample {
                        Some(k) => sample_rows(all.len(), k, cfg.seed)?.into_iter().map(|i| all[i].clone()).collect(),
                        None => all,
                    }
                }
            };
            if cfg.trials > series.len() && series.len() > 1 {
                log::warn!("{} trials over {} series; series are reused", cfg.trials, series.len());
            }
            Ok(DataSource::Series(series))
        }
    }
}

pub fn trial_seed(cfg: &ExperimentConfig, trial: usize) -> u64 {
    cfg.seed.wrapping_add(trial as u64)
}

/// Builds the data for trial `trial`: a freshly generated synthetic dataset,
/// or series `trial mod count` of the loaded CSV input.
pub fn prepare_trial(cfg: &ExperimentConfig, source: &DataSource, trial: usize) -> Result<TrialData> {
    match (&cfg.dataset, source) {
        (DatasetConfig::Synthetic(syn), _) => {
            let generated = assemble_synthetic(&syn.reseeded(trial_seed(cfg, trial)))?;
            let split = make_split(generated.dataset.n_rows(), &cfg.split)?;
            Ok(TrialData {
                dataset: generated.dataset,
                groups: generated.groups,
                split,
            })
        }
        (DatasetConfig::Csv(c), DataSource::Series(series)) => {
            let raw = &series[trial % series.len()];
            let n = raw.values.len();
            let fit_len = match cfg.split.test_len {
                Some(t) => n.saturating_sub(t + cfg.split.val_len),
                None => (n as f64 * cfg.split.train_frac).round() as usize,
            };
            let (dataset, groups) = engineer(raw, &c.recipe, c.groups.as_deref(), fit_len)?;
            let split = make_split(dataset.n_rows(), &cfg.split)?;
            Ok(TrialData { dataset, groups, split })
        }
        (DatasetConfig::Csv(_), DataSource::Synthetic) => Err(Error::Config("CSV dataset was not loaded".into())),
    }
}

fn rows(x: ArrayView2<'_, f64>, r: Range<usize>) -> ArrayView2<'_, f64> {
    x.slice_move(s![r, ..])
}

/// Fits one method on the training (and validation) windows and returns its
/// test-window predictions.
pub fn fit_and_predict(
    method: Method,
    cfg: &ExperimentConfig,
    registry: &LossRegistry,
    data: &TrialData,
    seed: u64,
) -> Result<Vec<f64>> {
    let TrialData { dataset, groups, split } = data;
    let x_test = rows(dataset.x(), split.test());
    let boost = &cfg.boost;
    let pred = match method {
        Method::Hierarchical => {
            let cost = CostOptConfig::new(cfg.cost.beta, cfg.cost.n_steps, registry.resolve(&cfg.cost.loss)?)?;
            let model = fit_hierarchical(dataset, groups, split.train(), boost, &cost, &cfg.hierarchy, seed)?;
            predict_hierarchical(&model, x_test)?
        }
        Method::Ensemble => {
            let loss: Arc<_> = registry.resolve(&cfg.ensemble.loss)?;
            fit_flat_ensemble(dataset, groups, split, boost, cfg.ensemble.n_alpha_steps, loss, seed)?.predict(x_test)?
        }
        Method::Embedded => fit_embedded(dataset, groups, split.train(), boost, seed)?.predict(x_test)?,
        Method::Full => fit_full_baseline(dataset, groups, split.train(), boost, seed)?.predict(x_test)?,
        Method::Wrapper => {
            fit_wrapper_backward(dataset, &groups.assigned_columns(), split, boost, seed)?
                .model
                .predict(x_test)?
        }
        Method::Filter => {
            let cols = groups.assigned_columns();
            let keep = cfg.filter.keep.min(cols.len());
            fit_filter(dataset, &cols, split.train(), keep, boost, seed)?.model.predict(x_test)?
        }
    };
    Ok(pred.to_vec())
}

/// Runs every configured method on one trial, timing fit plus prediction.
pub fn run_trial(cfg: &ExperimentConfig, registry: &LossRegistry, source: &DataSource, trial: usize) -> Result<Vec<TrialResult>> {
    let seed = trial_seed(cfg, trial);
    let wrap = |source: Error| Error::Trial {
        trial,
        seed,
        source: Box::new(source),
    };
    let data = prepare_trial(cfg, source, trial).map_err(wrap)?;
    let y_test = data.dataset.y_rows(data.split.test()).to_vec();
    cfg.methods
        .iter()
        .map(|&method| {
            let (pred, wall_time_s) = time_method(|| fit_and_predict(method, cfg, registry, &data, seed));
            let per_step_sq_err = mse_per_step(&y_test, &pred.map_err(wrap)?, y_test.len()).map_err(wrap)?;
            Ok(TrialResult {
                trial_id: trial,
                seed,
                method: method.as_str().to_string(),
                per_step_sq_err,
                wall_time_s,
            })
        })
        .collect()
}

/// All trials, in trial order, run on a pool of `cfg.jobs` threads.
pub fn run_trials(cfg: &ExperimentConfig, registry: &LossRegistry) -> Result<Vec<TrialResult>> {
    cfg.validate()?;
    let source = load_source(cfg)?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cfg.jobs)
        .build()
        .map_err(|e| Error::Config(e.to_string()))?;
    let per_trial: Vec<Vec<TrialResult>> = pool.install(|| {
        (0..cfg.trials)
            .into_par_iter()
            .map(|j| {
                let r = run_trial(cfg, registry, &source, j);
                if let Err(e) = &r {
                    log::error!("{e}");
                } else {
                    log::info!("trial {j} done");
                }
                r
            })
            .collect::<Result<Vec<_>>>()
    })?;
    Ok(per_trial.into_iter().flatten().collect())
}
