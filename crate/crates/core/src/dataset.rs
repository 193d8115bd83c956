//! Datasets, feature partitions and chronological splits.
//!
//! Everything here is immutable once built; the modelling code only ever
//! borrows these types.

use std::collections::BTreeSet;
use std::ops::Range;

use chrono::NaiveDateTime;
use ndarray::{Array1, Array2, ArrayView1, ArrayView2, Axis};

use crate::error::{Error, Result};

/// Aligned target sequence and feature matrix.
///
/// Row `t` of `x` holds the features available for forecasting `y[t]`; any
/// target history has already been lagged into the columns.
#[derive(Debug, Clone)]
pub struct Dataset {
    y: Array1<f64>,
    x: Array2<f64>,
    timestamps: Option<Vec<NaiveDateTime>>,
    feature_names: Vec<String>,
}

impl Dataset {
    pub fn new(
        y: Array1<f64>,
        x: Array2<f64>,
        timestamps: Option<Vec<NaiveDateTime>>,
        feature_names: Vec<String>,
    ) -> Result<Self> {
        if y.is_empty() {
            return Err(Error::EmptyInput);
        }
        if x.nrows() != y.len() {
            return Err(Error::LengthMismatch {
                expected: y.len(),
                actual: x.nrows(),
            });
        }
        if feature_names.len() != x.ncols() {
            return Err(Error::InvalidDataset(format!(
                "{} feature names for {} columns",
                feature_names.len(),
                x.ncols()
            )));
        }
        if let Some(ts) = &timestamps {
            if ts.len() != y.len() {
                return Err(Error::LengthMismatch {
                    expected: y.len(),
                    actual: ts.len(),
                });
            }
        }
        if let Some(row) = y.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite { row, col: 0 });
        }
        for ((row, col), v) in x.indexed_iter() {
            if !v.is_finite() {
                return Err(Error::NonFinite { row, col });
            }
        }
        Ok(Self {
            y,
            x,
            timestamps,
            feature_names,
        })
    }

    /// Builds a dataset from engineered features whose first rows may be
    /// undefined (NaN) because of lagging or rolling windows. Those leading
    /// rows are dropped; a NaN anywhere after them is an error.
    pub fn from_engineered(
        y: Array1<f64>,
        x: Array2<f64>,
        timestamps: Option<Vec<NaiveDateTime>>,
        feature_names: Vec<String>,
    ) -> Result<Self> {
        if x.nrows() != y.len() {
            return Err(Error::LengthMismatch {
                expected: y.len(),
                actual: x.nrows(),
            });
        }
        let first_valid = x
            .axis_iter(Axis(0))
            .position(|row| row.iter().all(|v| v.is_finite()))
            .ok_or(Error::EmptyInput)?;
        let y = y.slice(ndarray::s![first_valid..]).to_owned();
        let x = x.slice(ndarray::s![first_valid.., ..]).to_owned();
        let timestamps = timestamps.map(|ts| ts[first_valid..].to_vec());
        Self::new(y, x, timestamps, feature_names)
    }

    pub fn n_rows(&self) -> usize {
        self.y.len()
    }

    pub fn n_features(&self) -> usize {
        self.x.ncols()
    }

    pub fn y(&self) -> ArrayView1<'_, f64> {
        self.y.view()
    }

    pub fn x(&self) -> ArrayView2<'_, f64> {
        self.x.view()
    }

    pub fn timestamps(&self) -> Option<&[NaiveDateTime]> {
        self.timestamps.as_deref()
    }

    pub fn feature_names(&self) -> &[String] {
        &self.feature_names
    }

    pub fn column_index(&self, name: &str) -> Option<usize> {
        self.feature_names.iter().position(|n| n == name)
    }

    /// Target values for a row range.
    pub fn y_rows(&self, rows: Range<usize>) -> ArrayView1<'_, f64> {
        self.y.slice(ndarray::s![rows])
    }

    /// Feature sub-matrix for a row range and an ordered column list.
    pub fn x_rows_cols(&self, rows: Range<usize>, cols: &[usize]) -> Array2<f64> {
        select_columns(self.x.slice(ndarray::s![rows, ..]), cols)
    }
}

/// Copies the given columns (in the given order) into a new matrix.
pub fn select_columns(x: ArrayView2<'_, f64>, cols: &[usize]) -> Array2<f64> {
    x.select(Axis(1), cols)
}

/// Ordered partition of feature columns. Group 0 is the target-history group.
#[derive(Debug, Clone, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub struct FeatureGroups {
    groups: Vec<Vec<usize>>,
}

impl FeatureGroups {
    /// Wraps raw index sets. Use [`validate_groups`] before modelling.
    pub fn new(groups: Vec<Vec<usize>>) -> Self {
        Self { groups }
    }

    pub fn len(&self) -> usize {
        self.groups.len()
    }

    pub fn is_empty(&self) -> bool {
        self.groups.is_empty()
    }

    pub fn group(&self, k: usize) -> &[usize] {
        &self.groups[k]
    }

    pub fn groups(&self) -> &[Vec<usize>] {
        &self.groups
    }

    pub fn target_history(&self) -> &[usize] {
        &self.groups[0]
    }

    /// All columns assigned to some group, ascending.
    pub fn assigned_columns(&self) -> Vec<usize> {
        self.groups
            .iter()
            .flatten()
            .copied()
            .collect::<BTreeSet<_>>()
            .into_iter()
            .collect()
    }

    /// Columns in `0..n_features` not assigned to any group.
    pub fn unassigned_columns(&self, n_features: usize) -> Vec<usize> {
        let assigned: BTreeSet<usize> = self.groups.iter().flatten().copied().collect();
        (0..n_features).filter(|c| !assigned.contains(c)).collect()
    }
}

/// Checks that `groups` is a disjoint, non-empty partition of a subset of
/// the dataset's columns and returns it unchanged.
///
/// Columns left unassigned are excluded from modelling; a warning names them.
pub fn validate_groups(dataset: &Dataset, groups: FeatureGroups) -> Result<FeatureGroups> {
    let m = dataset.n_features();
    if groups.is_empty() {
        return Err(Error::GroupCountTooSmall {
            required: 1,
            actual: 0,
        });
    }
    let mut owner: Vec<Option<usize>> = vec![None; m];
    for (k, group) in groups.groups().iter().enumerate() {
        if group.is_empty() {
            return Err(Error::EmptyGroup(k));
        }
        for &col in group {
            if col >= m {
                return Err(Error::OutOfRange {
                    index: col,
                    n_features: m,
                });
            }
            match owner[col] {
                // a column repeated inside one group is still an overlap of that group with itself
                Some(first) => {
                    return Err(Error::OverlappingGroups {
                        first,
                        second: k,
                        column: col,
                    })
                }
                None => owner[col] = Some(k),
            }
        }
    }
    let unassigned = groups.unassigned_columns(m);
    if !unassigned.is_empty() {
        let names: Vec<&str> = unassigned
            .iter()
            .map(|&c| dataset.feature_names()[c].as_str())
            .collect();
        log::warn!("features not assigned to any group are ignored: {names:?}");
    }
    Ok(groups)
}

/// Contiguous train / validation / test windows over `0..n`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub struct ChronoSplit {
    pub n: usize,
    pub train_end: usize,
    pub val_start: usize,
    pub val_end: usize,
    pub test_start: usize,
}

impl ChronoSplit {
    pub fn train(&self) -> Range<usize> {
        0..self.train_end
    }

    pub fn val(&self) -> Range<usize> {
        self.val_start..self.val_end
    }

    pub fn test(&self) -> Range<usize> {
        self.test_start..self.n
    }

    pub fn has_validation(&self) -> bool {
        self.val_end > self.val_start
    }

    /// Split with a fixed-length test tail and an optional validation window
    /// directly before it.
    pub fn with_test_len(n: usize, test_len: usize, val_len: usize) -> Result<Self> {
        if test_len == 0 || test_len + val_len >= n {
            return Err(Error::DegenerateSplit(format!(
                "n={n}, test_len={test_len}, val_len={val_len}"
            )));
        }
        let test_start = n - test_len;
        let train_end = test_start - val_len;
        Ok(Self {
            n,
            train_end,
            val_start: train_end,
            val_end: test_start,
            test_start,
        })
    }
}

/// Splits `0..n` into train `[0, a)`, validation `[a, b)` and test `[b, n)`
/// with `a = round(n * train_frac)` and `b = round(n * (train_frac + val_frac))`.
pub fn chronological_split(n: usize, train_frac: f64, val_frac: f64) -> Result<ChronoSplit> {
    if !(train_frac > 0.0 && val_frac >= 0.0 && train_frac + val_frac < 1.0) {
        return Err(Error::DegenerateSplit(format!(
            "fractions train={train_frac}, val={val_frac}"
        )));
    }
    let train_end = (n as f64 * train_frac).round() as usize;
    let val_end = ((n as f64 * (train_frac + val_frac)).round() as usize).min(n);
    if train_end == 0 || val_end >= n || (val_frac > 0.0 && val_end == train_end) {
        return Err(Error::DegenerateSplit(format!(
            "n={n}, train={train_frac}, val={val_frac} leaves an empty window"
        )));
    }
    Ok(ChronoSplit {
        n,
        train_end,
        val_start: train_end,
        val_end,
        test_start: val_end,
    })
}

/// Predictions aligned to `start..start + values.len()` of a dataset.
#[derive(Debug, Clone, PartialEq)]
pub struct PredictionSeries {
    start: usize,
    values: Vec<f64>,
}

impl PredictionSeries {
    pub fn new(start: usize, values: Vec<f64>) -> Result<Self> {
        if let Some(row) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite {
                row: start + row,
                col: 0,
            });
        }
        Ok(Self { start, values })
    }

    pub fn range(&self) -> Range<usize> {
        self.start..self.start + self.values.len()
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    fn dataset(m: usize) -> Dataset {
        let n = 6;
        let x = Array2::from_shape_fn((n, m), |(i, j)| (i * m + j) as f64);
        let names = (0..m).map(|j| format!("f{j}")).collect();
        Dataset::new(Array1::linspace(0.0, 1.0, n), x, None, names).unwrap()
    }

    #[test]
    fn groups_disjoint_partition_ok() {
        let ds = dataset(4);
        let g = FeatureGroups::new(vec![vec![0, 1], vec![2, 3]]);
        assert_eq!(validate_groups(&ds, g.clone()).unwrap(), g);
    }

    #[test]
    fn groups_overlap_rejected() {
        let ds = dataset(4);
        let g = FeatureGroups::new(vec![vec![0, 1], vec![1, 2]]);
        assert!(matches!(
            validate_groups(&ds, g),
            Err(Error::OverlappingGroups { column: 1, .. })
        ));
    }

    #[test]
    fn groups_out_of_range_rejected() {
        let ds = dataset(4);
        let g = FeatureGroups::new(vec![vec![0], vec![5]]);
        assert!(matches!(
            validate_groups(&ds, g),
            Err(Error::OutOfRange { index: 5, .. })
        ));
    }

    #[test]
    fn groups_empty_rejected() {
        let ds = dataset(4);
        let g = FeatureGroups::new(vec![vec![0], vec![]]);
        assert!(matches!(validate_groups(&ds, g), Err(Error::EmptyGroup(1))));
    }

    #[test]
    fn unassigned_columns_are_reported() {
        let g = FeatureGroups::new(vec![vec![3], vec![0]]);
        assert_eq!(g.unassigned_columns(5), vec![1, 2, 4]);
        assert_eq!(g.assigned_columns(), vec![0, 3]);
    }

    #[test]
    fn split_exact_fractions() {
        let s = chronological_split(10, 0.6, 0.2).unwrap();
        assert_eq!(s.train(), 0..6);
        assert_eq!(s.val(), 6..8);
        assert_eq!(s.test(), 8..10);
    }

    #[test]
    fn split_with_48_step_test() {
        let s = chronological_split(1001, 900.0 / 1001.0, 53.0 / 1001.0).unwrap();
        assert_eq!(s.test(), 953..1001);
        let s = ChronoSplit::with_test_len(1001, 48, 53).unwrap();
        assert_eq!(s.test(), 953..1001);
        assert_eq!(s.train(), 0..900);
    }

    #[test]
    fn split_empty_test_is_degenerate() {
        assert!(matches!(
            chronological_split(5, 0.9, 0.09),
            Err(Error::DegenerateSplit(_))
        ));
    }

    #[test]
    fn engineered_rows_with_nan_are_trimmed() {
        let y = array![1.0, 2.0, 3.0, 4.0];
        let x = array![[f64::NAN], [f64::NAN], [1.0], [2.0]];
        let ds = Dataset::from_engineered(y, x, None, vec!["lag".into()]).unwrap();
        assert_eq!(ds.n_rows(), 2);
        assert_eq!(ds.y().to_vec(), vec![3.0, 4.0]);
    }

    #[test]
    fn nan_after_warmup_is_rejected() {
        let y = array![1.0, 2.0, 3.0];
        let x = array![[f64::NAN], [1.0], [f64::NAN]];
        assert!(matches!(
            Dataset::from_engineered(y, x, None, vec!["a".into()]),
            Err(Error::NonFinite { row: 1, .. })
        ));
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #[test]
            fn split_windows_cover_range_in_order(
                n in 10usize..2000,
                train in 0.05f64..0.8,
                val in 0.0f64..0.15,
            ) {
                if let Ok(s) = chronological_split(n, train, val) {
                    prop_assert!(s.train_end > 0);
                    prop_assert!(s.train_end <= s.val_start);
                    prop_assert!(s.val_start <= s.val_end);
                    prop_assert!(s.val_end <= s.test_start);
                    prop_assert!(s.test_start < s.n);
                    let covered = s.train().len() + s.val().len() + s.test().len();
                    prop_assert_eq!(covered, n);
                }
            }

            #[test]
            fn validated_groups_are_disjoint(
                raw in proptest::collection::vec(proptest::collection::vec(0usize..12, 1..5), 1..4)
            ) {
                let ds = dataset(12);
                let g = FeatureGroups::new(raw);
                if let Ok(g) = validate_groups(&ds, g) {
                    let total: usize = g.groups().iter().map(Vec::len).sum();
                    prop_assert!(total <= 12);
                    for i in 0..g.len() {
                        for j in 0..g.len() {
                            if i != j {
                                prop_assert!(g.group(i).iter().all(|c| !g.group(j).contains(c)));
                            }
                        }
                    }
                }
            }
        }
    }
}
