//! Error curves, paired significance testing, stationarity testing and
//! wall-clock timing.

mod adf;
mod dist;

use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use adf::{adf_test, mackinnon_p, AdfResult, DEFAULT_ADF_LAGS};
pub use dist::{inc_beta, normal_cdf, student_t_cdf, student_t_sf};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialResult {
    pub trial_id: usize,
    pub seed: u64,
    pub method: String,
    pub per_step_sq_err: Vec<f64>,
    pub wall_time_s: f64,
}

impl TrialResult {
    pub fn mse(&self) -> f64 {
        self.per_step_sq_err.iter().sum()
    }
}

/// `(y - y_hat)^2 / n` per step; summing the output gives the MSE when `n`
/// is the window length.
pub fn mse_per_step(y: &[f64], y_hat: &[f64], n: usize) -> Result<Vec<f64>> {
    if y.len() != y_hat.len() {
        return Err(Error::LengthMismatch {
            expected: y.len(),
            actual: y_hat.len(),
        });
    }
    let n = n as f64;
    Ok(y.iter().zip(y_hat).map(|(a, b)| (a - b) * (a - b) / n).collect())
}

pub fn average_over_trials(results: &[Vec<f64>]) -> Result<Vec<f64>> {
    let first = results.first().ok_or(Error::EmptyInput)?;
    let mut sum = vec![0.0; first.len()];
    for r in results {
        if r.len() != first.len() {
            return Err(Error::LengthMismatch {
                expected: first.len(),
                actual: r.len(),
            });
        }
        for (s, v) in sum.iter_mut().zip(r) {
            *s += v;
        }
    }
    let k = results.len() as f64;
    Ok(sum.into_iter().map(|s| s / k).collect())
}

/// Running mean: `out[t] = mean(series[..=t])`.
pub fn cumulative_average(series: &[f64]) -> Vec<f64> {
    let mut acc = 0.0;
    series
        .iter()
        .enumerate()
        .map(|(t, v)| {
            acc += v;
            acc / (t + 1) as f64
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TTestReport {
    pub t_stat: f64,
    pub p_value: f64,
    pub dof: usize,
    /// Every paired difference was identical.
    pub zero_variance: bool,
}

/// One-sided paired t-test of `mean(compared) > mean(proposed)`. A small
/// p-value means the proposed errors are significantly lower.
pub fn paired_t_test_one_sided(compared: &[f64], proposed: &[f64]) -> Result<TTestReport> {
    if compared.len() != proposed.len() {
        return Err(Error::LengthMismatch {
            expected: compared.len(),
            actual: proposed.len(),
        });
    }
    let n = compared.len();
    if n < 2 {
        return Err(Error::LengthMismatch { expected: 2, actual: n });
    }
    let d: Vec<f64> = compared.iter().zip(proposed).map(|(a, b)| a - b).collect();
    let dof = n - 1;
    if d.iter().all(|&v| v == d[0]) {
        let (t_stat, p_value) = if d[0] > 0.0 {
            (f64::INFINITY, 0.0)
        } else if d[0] < 0.0 {
            (f64::NEG_INFINITY, 1.0)
        } else {
            (0.0, 0.5)
        };
        log::warn!("paired differences are all equal to {}; t-test is degenerate", d[0]);
        return Ok(TTestReport {
            t_stat,
            p_value,
            dof,
            zero_variance: true,
        });
    }
    let mean = d.iter().sum::<f64>() / n as f64;
    let var = d.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / dof as f64;
    let t_stat = mean / (var.sqrt() / (n as f64).sqrt());
    Ok(TTestReport {
        t_stat,
        p_value: student_t_sf(t_stat, dof as f64),
        dof,
        zero_variance: false,
    })
}

/// Runs `task` and returns its output with the elapsed wall time in seconds.
pub fn time_method<T>(task: impl FnOnce() -> T) -> (T, f64) {
    let start = Instant::now();
    let out = task();
    (out, start.elapsed().as_secs_f64())
}
