use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::dist::normal_cdf;
use crate::error::{Error, Result};

pub const DEFAULT_ADF_LAGS: usize = 4;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AdfResult {
    pub statistic: f64,
    pub p_value: f64,
    pub n_obs: usize,
}

/// Augmented Dickey-Fuller test with a constant and `max_lag` lagged
/// differences. The p-value uses MacKinnon's approximate response surface
/// and is clipped to `[0.001, 0.999]`.
pub fn adf_test(y: &[f64], max_lag: usize) -> Result<AdfResult> {
    if y.len() <= max_lag + 10 {
        return Err(Error::LengthMismatch {
            expected: max_lag + 11,
            actual: y.len(),
        });
    }
    if let Some(row) = y.iter().position(|v| !v.is_finite()) {
        return Err(Error::NonFinite { row, col: 0 });
    }
    let dy: Vec<f64> = y.windows(2).map(|w| w[1] - w[0]).collect();
    // response dy[i] = y[i+1] - y[i], regressed on y[i] and dy[i-1..=i-max_lag]
    let rows: Vec<usize> = (max_lag..dy.len()).collect();
    let p = 2 + max_lag;
    let x = DMatrix::from_fn(rows.len(), p, |r, c| {
        let i = rows[r];
        match c {
            0 => 1.0,
            1 => y[i],
            k => dy[i - (k - 1)],
        }
    });
    let target = DVector::from_iterator(rows.len(), rows.iter().map(|&i| dy[i]));
    let fit = ols(&x, &target)?;
    let statistic = fit.coef[1] / fit.std_err[1];
    Ok(AdfResult {
        statistic,
        p_value: mackinnon_p(statistic).clamp(0.001, 0.999),
        n_obs: rows.len(),
    })
}

pub(crate) struct Ols {
    pub coef: DVector<f64>,
    pub std_err: DVector<f64>,
    #[cfg_attr(not(test), allow(dead_code))]
    pub resid: DVector<f64>,
}

pub(crate) fn ols(x: &DMatrix<f64>, y: &DVector<f64>) -> Result<Ols> {
    let (n, p) = x.shape();
    if n <= p {
        return Err(Error::SingularRegression);
    }
    let qr = x.clone().qr();
    let r = qr.r();
    let scale = r.diagonal().iter().fold(0.0f64, |m, v| m.max(v.abs()));
    if scale == 0.0 || r.diagonal().iter().any(|v| v.abs() <= 1e-10 * scale) {
        return Err(Error::SingularRegression);
    }
    let qty = qr.q().transpose() * y;
    let coef = r.solve_upper_triangular(&qty).ok_or(Error::SingularRegression)?;
    let resid = y - x * &coef;
    let sigma2 = resid.norm_squared() / (n - p) as f64;
    let r_inv = r
        .solve_upper_triangular(&DMatrix::identity(p, p))
        .ok_or(Error::SingularRegression)?;
    let std_err = DVector::from_iterator(p, (0..p).map(|j| (sigma2 * r_inv.row(j).norm_squared()).sqrt()));
    Ok(Ols { coef, std_err, resid })
}

const TAU_MAX: f64 = 2.74;
const TAU_MIN: f64 = -18.83;
const TAU_STAR: f64 = -1.61;
const SMALL_P: [f64; 3] = [2.1659, 1.4412, 0.038269];
const LARGE_P: [f64; 4] = [1.7339, 0.93202, -0.12745, -0.010368];

/// MacKinnon (1994) p-value for the constant-only, single-series case.
pub fn mackinnon_p(stat: f64) -> f64 {
    if stat > TAU_MAX {
        return 1.0;
    }
    if stat < TAU_MIN {
        return 0.0;
    }
    let coefs: &[f64] = if stat <= TAU_STAR { &SMALL_P } else { &LARGE_P };
    let z = coefs.iter().rev().fold(0.0, |acc, c| acc * stat + c);
    normal_cdf(z)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sawtooth(n: usize) -> Vec<f64> {
        (0..n).map(|t| ((t * 7919) % 101) as f64 / 101.0).collect()
    }

    #[test]
    fn matches_reference_regressions() {
        // statsmodels adfuller(maxlag=4, autolag=None, regression="c")
        let y: Vec<f64> = sawtooth(120).iter().enumerate().map(|(t, v)| v + 0.002 * t as f64).collect();
        let r = adf_test(&y, 4).unwrap();
        assert!((r.statistic - -2.44604703378803).abs() < 1e-9);
        assert!((r.p_value - 0.1291593393760106).abs() < 1e-9);

        let mut acc = 0.0;
        let walk: Vec<f64> = sawtooth(120).iter().map(|v| { acc += v - 0.5; acc }).collect();
        let r = adf_test(&walk, 4).unwrap();
        assert!((r.statistic - -0.5720987212475568).abs() < 1e-9);
        assert!((r.p_value - 0.8771627668749136).abs() < 1e-9);
    }

    #[test]
    fn mackinnon_surface() {
        for (s, p) in [
            (-3.5, 0.007987094061496709),
            (-2.0, 0.28657309916843154),
            (-1.0, 0.7532643012005655),
            (0.5, 0.9848730963065522),
        ] {
            assert!((mackinnon_p(s) - p).abs() < 1e-12, "{s}");
        }
        assert_eq!(mackinnon_p(3.0), 1.0);
        assert_eq!(mackinnon_p(-20.0), 0.0);
    }

    #[test]
    fn residuals_orthogonal_to_design() {
        let y: Vec<f64> = sawtooth(200).iter().enumerate().map(|(t, v)| v * (1.0 + 0.01 * t as f64)).collect();
        let x = DMatrix::from_fn(150, 3, |r, c| match c {
            0 => 1.0,
            1 => y[r],
            _ => y[r + 1] - y[r],
        });
        let target = DVector::from_iterator(150, (0..150).map(|r| y[r + 2]));
        let fit = ols(&x, &target).unwrap();
        let dots = x.transpose() * &fit.resid;
        assert!(dots.iter().all(|d| d.abs() < 1e-8), "{dots}");
    }

    #[test]
    fn degenerate_inputs() {
        assert!(matches!(adf_test(&[1.0; 12], 4), Err(Error::LengthMismatch { .. })));
        assert!(matches!(adf_test(&[1.0; 50], 2), Err(Error::SingularRegression)));
    }
}
