//! Synthetic benchmark: a near-unit-root ARMA(4,5) target whose level is
//! scaled up or down by a hidden binary label, observed only through noisy
//! class-conditional side-information features.

use ndarray::{Array1, Array2};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Normal, StandardNormal, Uniform};
use serde::{Deserialize, Serialize};

use crate::dataset::{Dataset, FeatureGroups};
use crate::error::{Error, Result};
use crate::featgen::{make_lags, minmax_apply, minmax_fit, rolling_stats};

/// Samples discarded from the start of every ARMA path.
pub const BURN_IN: usize = 50;

/// Lags of the target placed in the history group.
pub const HISTORY_LAGS: [usize; 4] = [1, 2, 3, 4];
/// Trailing windows for rolling mean / std in the history group.
pub const HISTORY_WINDOWS: [usize; 3] = [2, 4, 8];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ArmaSpec {
    pub phi: [f64; 4],
    pub theta: [f64; 5],
    pub noise_std: f64,
    pub n: usize,
    pub seed: u64,
}

impl Default for ArmaSpec {
    fn default() -> Self {
        Self {
            phi: [0.4, 0.3, 0.2, 0.1],
            theta: [0.65, 0.35, 0.3, -0.15, -0.3],
            noise_std: 1.0,
            n: 500,
            seed: 0,
        }
    }
}

impl ArmaSpec {
    pub fn validate(&self) -> Result<()> {
        if !(self.noise_std > 0.0) || self.n < 20 {
            return Err(Error::Config(format!(
                "ARMA spec needs noise_std > 0 and n >= 20 (got {}, {})",
                self.noise_std, self.n
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SideInfoSpec {
    pub n: usize,
    pub n_features: usize,
    /// Probability of label 1.
    pub imbalance: f64,
    /// Per-element probability that a feature value is drawn from the wrong class.
    pub flip_noise: f64,
    pub seed: u64,
}

impl Default for SideInfoSpec {
    fn default() -> Self {
        Self {
            n: 500,
            n_features: 26,
            imbalance: 0.65,
            flip_noise: 0.0,
            seed: 1,
        }
    }
}

impl SideInfoSpec {
    pub fn validate(&self) -> Result<()> {
        let ok = self.n_features >= 1
            && self.imbalance > 0.0
            && self.imbalance <= 1.0
            && (0.0..0.5).contains(&self.flip_noise);
        if !ok {
            return Err(Error::Config(format!("invalid side-information spec {self:?}")));
        }
        Ok(())
    }
}

/// `y_t = sum phi_i y_{t-i} + sum theta_j e_{t-j} + e_t` from zero initial
/// conditions, with the first [`BURN_IN`] samples dropped.
pub fn gen_arma(spec: &ArmaSpec) -> Result<Vec<f64>> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let noise = Normal::new(0.0, spec.noise_std).map_err(|e| Error::Config(e.to_string()))?;
    let total = spec.n + BURN_IN;
    let mut y = vec![0.0; total];
    let mut eps = vec![0.0; total];
    for t in 0..total {
        eps[t] = rng.sample(noise);
        let mut v = eps[t];
        for (i, phi) in spec.phi.iter().enumerate() {
            if t > i {
                v += phi * y[t - i - 1];
            }
        }
        for (j, theta) in spec.theta.iter().enumerate() {
            if t > j {
                v += theta * eps[t - j - 1];
            }
        }
        y[t] = v;
    }
    Ok(y.split_off(BURN_IN))
}

/// Bernoulli labels plus `n_features` class-conditional Gaussian columns.
/// Column `j` has mean `+delta_j` for label 1 and `-delta_j` for label 0,
/// `delta_j ~ U(0.5, 1.5)`, unit variance.
pub fn gen_side_info(spec: &SideInfoSpec) -> Result<(Vec<bool>, Array2<f64>)> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let labels: Vec<bool> = (0..spec.n).map(|_| rng.random::<f64>() < spec.imbalance).collect();
    let gap = Uniform::new(0.5, 1.5).map_err(|e| Error::Config(e.to_string()))?;
    let deltas: Vec<f64> = (0..spec.n_features).map(|_| rng.sample(gap)).collect();
    let mut x = Array2::zeros((spec.n, spec.n_features));
    for t in 0..spec.n {
        for (j, delta) in deltas.iter().enumerate() {
            let mut label = labels[t];
            if spec.flip_noise > 0.0 && rng.random::<f64>() < spec.flip_noise {
                label = !label;
            }
            let z: f64 = rng.sample(StandardNormal);
            x[[t, j]] = if label { delta + z } else { -delta + z };
        }
    }
    Ok((labels, x))
}

/// Generation settings for one synthetic dataset.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SyntheticConfig {
    pub arma: ArmaSpec,
    pub side: SideInfoSpec,
    /// Multipliers for label 1 and label 0.
    pub beta_scale: (f64, f64),
    /// Standard deviation of the Gaussian noise added after scaling.
    pub target_noise_std: f64,
}

impl Default for SyntheticConfig {
    fn default() -> Self {
        Self {
            arma: ArmaSpec::default(),
            side: SideInfoSpec::default(),
            beta_scale: (1.33, 0.66),
            target_noise_std: 0.5,
        }
    }
}

impl SyntheticConfig {
    /// Same settings with both generators reseeded from one trial seed.
    pub fn reseeded(&self, seed: u64) -> Self {
        let mut c = self.clone();
        c.arma.seed = seed;
        c.side.seed = seed.wrapping_mul(0x9E37_79B9_7F4A_7C15).wrapping_add(1);
        c
    }
}

/// A generated dataset together with the intermediate series it was built from.
#[derive(Debug, Clone)]
pub struct SyntheticDataset {
    pub dataset: Dataset,
    pub groups: FeatureGroups,
    /// Rows dropped from the front while trimming undefined features.
    pub trimmed: usize,
    /// Untrimmed intermediate series, length `n`.
    pub labels: Vec<bool>,
    pub arma_minmax: Vec<f64>,
    /// `arma_minmax` times the label multiplier, before noise.
    pub scaled: Vec<f64>,
    /// Final target before trimming.
    pub target: Vec<f64>,
}

pub fn assemble_synthetic(config: &SyntheticConfig) -> Result<SyntheticDataset> {
    let arma = gen_arma(&config.arma)?;
    let (labels, side) = gen_side_info(&config.side)?;
    if arma.len() != labels.len() {
        return Err(Error::LengthMismatch {
            expected: arma.len(),
            actual: labels.len(),
        });
    }
    let n = arma.len();
    let arma_minmax = minmax_apply(&minmax_fit(&arma)?, &arma);
    let (up, down) = config.beta_scale;
    let scaled: Vec<f64> = arma_minmax
        .iter()
        .zip(&labels)
        .map(|(v, &l)| v * if l { up } else { down })
        .collect();

    let noisy: Vec<f64> = if config.target_noise_std > 0.0 {
        let mut rng = ChaCha8Rng::seed_from_u64(config.arma.seed);
        rng.set_stream(1);
        let noise = Normal::new(0.0, config.target_noise_std).map_err(|e| Error::Config(e.to_string()))?;
        scaled.iter().map(|v| v + rng.sample(noise)).collect()
    } else {
        scaled.clone()
    };
    let target = minmax_apply(&minmax_fit(&noisy)?, &noisy);
    let y = Array1::from(target.clone());

    let lags = make_lags(y.view(), &HISTORY_LAGS)?;
    let mut history: Vec<(String, Vec<f64>)> = HISTORY_LAGS
        .iter()
        .enumerate()
        .map(|(j, k)| (format!("lag_{k}"), lags.column(j).to_vec()))
        .collect();
    for w in HISTORY_WINDOWS {
        let (mean, std) = rolling_stats(y.view(), w)?;
        history.push((format!("roll_mean_w{w}"), mean));
        history.push((format!("roll_std_w{w}"), std));
    }
    let n_hist = history.len();
    let m = n_hist + side.ncols();
    let x = Array2::from_shape_fn((n, m), |(t, j)| {
        if j < n_hist {
            history[j].1[t]
        } else {
            side[[t, j - n_hist]]
        }
    });
    let mut names: Vec<String> = history.into_iter().map(|(name, _)| name).collect();
    names.extend((0..side.ncols()).map(|j| format!("side_{j}")));

    let trimmed = HISTORY_LAGS.iter().chain(&HISTORY_WINDOWS).copied().max().unwrap_or(0);
    let dataset = Dataset::from_engineered(y, x, None, names)?;
    debug_assert_eq!(dataset.n_rows(), n - trimmed);
    let groups = FeatureGroups::new(vec![(0..n_hist).collect(), (n_hist..m).collect()]);
    Ok(SyntheticDataset {
        dataset,
        groups,
        trimmed,
        labels,
        arma_minmax,
        scaled,
        target,
    })
}
