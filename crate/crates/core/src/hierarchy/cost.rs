use std::sync::Arc;

use super::loss::Loss;
use crate::error::{Error, Result};

/// Grid search settings for the per-timestep weights.
#[derive(Debug, Clone)]
pub struct CostOptConfig {
    beta: f64,
    n_steps: usize,
    loss: Arc<dyn Loss>,
}

impl CostOptConfig {
    pub fn new(beta: f64, n_steps: usize, loss: Arc<dyn Loss>) -> Result<Self> {
        if !(0.0..=1.0).contains(&beta) || n_steps < 2 {
            return Err(Error::Config(format!(
                "cost optimisation needs beta in [0, 1] and n_steps >= 2 (got {beta}, {n_steps})"
            )));
        }
        Ok(Self { beta, n_steps, loss })
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    pub fn n_steps(&self) -> usize {
        self.n_steps
    }

    pub fn loss(&self) -> &Arc<dyn Loss> {
        &self.loss
    }

    /// `n_steps` evenly spaced weights from `1 - beta` to `1 + beta`.
    ///
    /// Point `k` is `1 + beta * (2k / (n_steps - 1) - 1)`, so both endpoints
    /// are exact and an odd `n_steps` puts exactly `1.0` in the middle.
    pub fn grid(&self) -> Vec<f64> {
        let denom = (self.n_steps - 1) as f64;
        (0..self.n_steps)
            .map(|k| 1.0 + self.beta * (2.0 * k as f64 / denom - 1.0))
            .collect()
    }

    pub fn range(&self) -> (f64, f64) {
        (1.0 - self.beta, 1.0 + self.beta)
    }
}

/// For every `t`, the grid weight minimising `loss(y[t], alpha * y_tilde[t])`.
/// Ties go to the smallest weight.
pub fn optimize_alphas(y: &[f64], y_tilde: &[f64], cfg: &CostOptConfig) -> Result<Vec<f64>> {
    if y.is_empty() {
        return Err(Error::EmptyInput);
    }
    if y.len() != y_tilde.len() {
        return Err(Error::LengthMismatch {
            expected: y.len(),
            actual: y_tilde.len(),
        });
    }
    let grid = cfg.grid();
    let loss = cfg.loss.as_ref();
    Ok(y.iter()
        .zip(y_tilde)
        .map(|(&target, &pred)| grid_argmin(&grid, |alpha| loss.value(target, alpha * pred)))
        .collect())
}

/// First grid value with the strictly smallest objective.
pub(crate) fn grid_argmin(grid: &[f64], mut objective: impl FnMut(f64) -> f64) -> f64 {
    let mut best = grid[0];
    let mut best_loss = f64::INFINITY;
    for &alpha in grid {
        let l = objective(alpha);
        if l < best_loss {
            best_loss = l;
            best = alpha;
        }
    }
    best
}

#[cfg(test)]
mod tests {
    use super::super::loss::{L1, L2};
    use super::*;

    fn cfg(beta: f64, n: usize) -> CostOptConfig {
        CostOptConfig::new(beta, n, Arc::new(L1)).unwrap()
    }

    #[test]
    fn grid_endpoints_and_centre() {
        let g = cfg(0.33, 31).grid();
        assert_eq!(g.len(), 31);
        assert_eq!(g[0], 1.0 - 0.33);
        assert_eq!(g[30], 1.0 + 0.33);
        assert_eq!(g[15], 1.0);
        let g = cfg(0.33, 30).grid();
        assert_eq!(g.len(), 30);
        assert_eq!(*g.last().unwrap(), 1.0 + 0.33);
    }

    #[test]
    fn perfect_prediction_keeps_unit_weight() {
        let y = [0.2, 0.5, 0.9];
        let a = optimize_alphas(&y, &y, &cfg(0.33, 31)).unwrap();
        assert_eq!(a, vec![1.0; 3]);
    }

    #[test]
    fn large_ratio_hits_upper_bound() {
        let a = optimize_alphas(&[2.0], &[1.0], &cfg(0.33, 30)).unwrap();
        assert_eq!(a, vec![1.0 + 0.33]);
    }

    #[test]
    fn picks_nearest_grid_point_under_l1() {
        let c = cfg(0.33, 30);
        let grid = c.grid();
        let nearest = grid
            .iter()
            .copied()
            .min_by(|a, b| (a - 0.9).abs().total_cmp(&(b - 0.9).abs()))
            .unwrap();
        let a = optimize_alphas(&[0.9], &[1.0], &c).unwrap();
        assert_eq!(a[0], nearest);
    }

    #[test]
    fn zero_prediction_ties_to_smallest_weight() {
        let a = optimize_alphas(&[0.7], &[0.0], &cfg(0.5, 11)).unwrap();
        assert_eq!(a[0], 0.5);
    }

    #[test]
    fn errors() {
        assert!(matches!(optimize_alphas(&[], &[], &cfg(0.3, 5)), Err(Error::EmptyInput)));
        assert!(matches!(
            optimize_alphas(&[1.0], &[1.0, 2.0], &cfg(0.3, 5)),
            Err(Error::LengthMismatch { .. })
        ));
        assert!(CostOptConfig::new(1.2, 5, Arc::new(L2)).is_err());
        assert!(CostOptConfig::new(0.2, 1, Arc::new(L2)).is_err());
    }
}
