//! Target-history lags, trailing rolling statistics, cyclic calendar
//! encodings and min-max scaling.
//!
//! Row `t` of every generated feature only depends on data strictly before
//! `t`. Rows whose window reaches before the start of the series are NaN and
//! get trimmed by [`Dataset::from_engineered`](crate::dataset::Dataset::from_engineered).

use std::f64::consts::PI;

use chrono::{Datelike, NaiveDate, NaiveDateTime, Timelike, Weekday};
use ndarray::{Array2, ArrayView1};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CalendarPart {
    Hour,
    DayOfMonth,
    DayOfWeek,
    Month,
    Quarter,
    WeekOfYear,
}

impl CalendarPart {
    pub const ALL: [CalendarPart; 6] = [
        CalendarPart::Hour,
        CalendarPart::DayOfMonth,
        CalendarPart::DayOfWeek,
        CalendarPart::Month,
        CalendarPart::Quarter,
        CalendarPart::WeekOfYear,
    ];

    pub fn name(self) -> &'static str {
        match self {
            CalendarPart::Hour => "hour",
            CalendarPart::DayOfMonth => "day_of_month",
            CalendarPart::DayOfWeek => "day_of_week",
            CalendarPart::Month => "month",
            CalendarPart::Quarter => "quarter",
            CalendarPart::WeekOfYear => "week_of_year",
        }
    }

    /// Zero-based ordinal and period of this part for a timestamp.
    pub fn ordinal_and_period(self, ts: &NaiveDateTime) -> (u32, u32) {
        let date = ts.date();
        match self {
            CalendarPart::Hour => (ts.hour(), 24),
            CalendarPart::DayOfMonth => (date.day0(), days_in_month(date)),
            CalendarPart::DayOfWeek => (date.weekday().num_days_from_monday(), 7),
            CalendarPart::Month => (date.month0(), 12),
            CalendarPart::Quarter => (date.month0() / 3, 4),
            CalendarPart::WeekOfYear => {
                let iso = date.iso_week();
                (iso.week0(), iso_weeks_in_year(iso.year()))
            }
        }
    }
}

fn days_in_month(date: NaiveDate) -> u32 {
    let (y, m) = (date.year(), date.month());
    let next = if m == 12 {
        NaiveDate::from_ymd_opt(y + 1, 1, 1)
    } else {
        NaiveDate::from_ymd_opt(y, m + 1, 1)
    };
    let first = NaiveDate::from_ymd_opt(y, m, 1).expect("valid month start");
    next.map_or(31, |n| (n - first).num_days() as u32)
}

fn iso_weeks_in_year(iso_year: i32) -> u32 {
    if NaiveDate::from_isoywd_opt(iso_year, 53, Weekday::Mon).is_some() {
        53
    } else {
        52
    }
}

/// Which target-history and calendar features to build.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct FeatureRecipe {
    pub lag_orders: Vec<usize>,
    pub rolling_windows: Vec<usize>,
    /// Lag orders of the series the rolling windows end on (1 = the
    /// window ends at `t - 1`).
    pub rolling_lags: Vec<usize>,
    pub calendar_parts: Vec<CalendarPart>,
}

impl Default for FeatureRecipe {
    /// Hourly recipe: lags {1,2,4,6,8}, mean/std over windows {4,8} ending
    /// on lags {2,4,6,8}, and all six calendar parts (33 columns).
    fn default() -> Self {
        Self {
            lag_orders: vec![1, 2, 4, 6, 8],
            rolling_windows: vec![4, 8],
            rolling_lags: vec![2, 4, 6, 8],
            calendar_parts: CalendarPart::ALL.to_vec(),
        }
    }
}

impl FeatureRecipe {
    pub fn validate(&self) -> Result<()> {
        if self.lag_orders.iter().chain(&self.rolling_lags).any(|&o| o < 1) {
            return Err(Error::Config("lag orders must be >= 1".into()));
        }
        if self.rolling_windows.iter().any(|&w| w < 2) {
            return Err(Error::Config("rolling windows must be >= 2".into()));
        }
        Ok(())
    }
}

/// Output of [`build_features`]: a NaN-padded matrix plus column bookkeeping.
#[derive(Debug, Clone)]
pub struct EngineeredFeatures {
    pub x: Array2<f64>,
    pub names: Vec<String>,
    /// Columns derived from the target's past.
    pub history_cols: Vec<usize>,
    pub calendar_cols: Vec<usize>,
}

/// Column `j` holds `y` shifted down by `orders[j]`; the first `orders[j]`
/// rows are NaN.
pub fn make_lags(y: ArrayView1<'_, f64>, orders: &[usize]) -> Result<Array2<f64>> {
    let n = y.len();
    for &order in orders {
        if order >= n {
            return Err(Error::LagTooLarge { order, len: n });
        }
        if order == 0 {
            return Err(Error::Config("lag order must be >= 1".into()));
        }
    }
    Ok(Array2::from_shape_fn((n, orders.len()), |(t, j)| {
        let k = orders[j];
        if t >= k {
            y[t - k]
        } else {
            f64::NAN
        }
    }))
}

/// Trailing mean and population standard deviation over `y[t-window..t]`,
/// excluding `y[t]`. The first `window` entries are NaN.
pub fn rolling_stats(y: ArrayView1<'_, f64>, window: usize) -> Result<(Vec<f64>, Vec<f64>)> {
    rolling_stats_at_lag(y, window, 1)
}

/// Mean and population standard deviation over the `window` values ending at
/// `y[t - lag]`. The first `lag + window - 1` entries are NaN.
pub fn rolling_stats_at_lag(y: ArrayView1<'_, f64>, window: usize, lag: usize) -> Result<(Vec<f64>, Vec<f64>)> {
    let n = y.len();
    if window < 2 || window > n || lag < 1 || lag + window > n + 1 {
        return Err(Error::WindowTooLarge { window, len: n });
    }
    let mut means = vec![f64::NAN; n];
    let mut stds = vec![f64::NAN; n];
    for t in (lag + window - 1)..n {
        let end = t + 1 - lag;
        let w = y.slice(ndarray::s![end - window..end]);
        let mean = w.sum() / window as f64;
        let var = w.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / window as f64;
        means[t] = mean;
        stds[t] = var.sqrt();
    }
    Ok((means, stds))
}

/// Two columns (sin, cos) of `2*pi*v/P` per requested part.
pub fn calendar_features(timestamps: &[NaiveDateTime], parts: &[CalendarPart]) -> Array2<f64> {
    let mut out = Array2::zeros((timestamps.len(), 2 * parts.len()));
    for (t, ts) in timestamps.iter().enumerate() {
        for (j, part) in parts.iter().enumerate() {
            let (v, period) = part.ordinal_and_period(ts);
            let angle = 2.0 * PI * v as f64 / period as f64;
            out[[t, 2 * j]] = angle.sin();
            out[[t, 2 * j + 1]] = angle.cos();
        }
    }
    out
}

pub fn calendar_names(parts: &[CalendarPart]) -> Vec<String> {
    parts
        .iter()
        .flat_map(|p| [format!("{}_sin", p.name()), format!("{}_cos", p.name())])
        .collect()
}

/// Hourly timestamps starting at the Unix epoch.
pub fn hourly_timestamps(n: usize) -> Vec<NaiveDateTime> {
    let start = NaiveDate::from_ymd_opt(1970, 1, 1)
        .and_then(|d| d.and_hms_opt(0, 0, 0))
        .expect("epoch");
    (0..n)
        .map(|i| start + chrono::Duration::hours(i as i64))
        .collect()
}

/// Applies a recipe to a (scaled) target series.
pub fn build_features(
    y: ArrayView1<'_, f64>,
    timestamps: Option<&[NaiveDateTime]>,
    recipe: &FeatureRecipe,
) -> Result<EngineeredFeatures> {
    recipe.validate()?;
    let n = y.len();
    let mut columns: Vec<Vec<f64>> = Vec::new();
    let mut names = Vec::new();

    let lags = make_lags(y, &recipe.lag_orders)?;
    for (j, &k) in recipe.lag_orders.iter().enumerate() {
        columns.push(lags.column(j).to_vec());
        names.push(format!("lag_{k}"));
    }
    for &k in &recipe.rolling_lags {
        for &w in &recipe.rolling_windows {
            let (mean, std) = rolling_stats_at_lag(y, w, k)?;
            columns.push(mean);
            names.push(format!("roll_mean_w{w}_lag{k}"));
            columns.push(std);
            names.push(format!("roll_std_w{w}_lag{k}"));
        }
    }
    let history_cols: Vec<usize> = (0..columns.len()).collect();

    let mut calendar_cols = Vec::new();
    if !recipe.calendar_parts.is_empty() {
        let ts = timestamps.ok_or_else(|| Error::Config("calendar features need timestamps".into()))?;
        if ts.len() != n {
            return Err(Error::LengthMismatch {
                expected: n,
                actual: ts.len(),
            });
        }
        let cal = calendar_features(ts, &recipe.calendar_parts);
        for (j, name) in calendar_names(&recipe.calendar_parts).into_iter().enumerate() {
            calendar_cols.push(columns.len());
            columns.push(cal.column(j).to_vec());
            names.push(name);
        }
    }

    let x = Array2::from_shape_fn((n, columns.len()), |(t, j)| columns[j][t]);
    Ok(EngineeredFeatures {
        x,
        names,
        history_cols,
        calendar_cols,
    })
}

/// Min-max scaler parameters fit on a training window.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScalerParams {
    pub min: f64,
    pub max: f64,
}

impl ScalerParams {
    pub fn is_degenerate(&self) -> bool {
        self.max == self.min
    }
}

pub fn minmax_fit(train: &[f64]) -> Result<ScalerParams> {
    if train.is_empty() {
        return Err(Error::EmptyInput);
    }
    let mut min = f64::INFINITY;
    let mut max = f64::NEG_INFINITY;
    for (row, &v) in train.iter().enumerate() {
        if !v.is_finite() {
            return Err(Error::NonFinite { row, col: 0 });
        }
        min = min.min(v);
        max = max.max(v);
    }
    Ok(ScalerParams { min, max })
}

/// Maps `min -> 0` and `max -> 1` without clipping. A degenerate range maps
/// everything to 0.5 and logs a warning.
pub fn minmax_apply(params: &ScalerParams, x: &[f64]) -> Vec<f64> {
    if params.is_degenerate() {
        log::warn!("{}", Error::DegenerateRange(params.min));
        return vec![0.5; x.len()];
    }
    let span = params.max - params.min;
    x.iter().map(|v| (v - params.min) / span).collect()
}

pub fn minmax_invert(params: &ScalerParams, x: &[f64]) -> Vec<f64> {
    let span = params.max - params.min;
    x.iter().map(|v| v * span + params.min).collect()
}
