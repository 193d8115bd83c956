use std::path::Path;

use chrono::NaiveDateTime;
use ndarray::{Array1, Array2};
use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::dataset::{Dataset, FeatureGroups};
use crate::error::{Error, Result};
use crate::featgen::{build_features, hourly_timestamps, minmax_apply, minmax_fit, FeatureRecipe};

/// A raw univariate series before feature engineering.
#[derive(Debug, Clone, PartialEq)]
pub struct RawSeries {
    pub id: String,
    pub values: Vec<f64>,
    pub timestamps: Option<Vec<NaiveDateTime>>,
}

fn reader(path: &Path) -> Result<csv::Reader<std::fs::File>> {
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    Ok(csv::ReaderBuilder::new().flexible(true).from_reader(file))
}

const TIMESTAMP_FORMATS: [&str; 4] = ["%Y-%m-%d %H:%M:%S", "%Y-%m-%dT%H:%M:%S", "%Y-%m-%d %H:%M", "%Y-%m-%d"];

fn parse_timestamp(cell: &str) -> Option<NaiveDateTime> {
    let cell = cell.trim();
    TIMESTAMP_FORMATS.iter().find_map(|f| {
        NaiveDateTime::parse_from_str(cell, f)
            .ok()
            .or_else(|| chrono::NaiveDate::parse_from_str(cell, f).ok().and_then(|d| d.and_hms_opt(0, 0, 0)))
    })
}

/// Reads one series stored one observation per row. Rows are numbered from 1
/// after the header in error messages.
pub fn ingest_csv(path: &Path, target_col: &str, timestamp_col: Option<&str>) -> Result<RawSeries> {
    let mut rdr = reader(path)?;
    let headers = rdr.headers()?.clone();
    let find = |name: &str| {
        headers
            .iter()
            .position(|h| h.trim() == name)
            .ok_or_else(|| Error::Config(format!("column {name:?} not found in {}", path.display())))
    };
    let target_idx = find(target_col)?;
    let ts_idx = timestamp_col.map(find).transpose()?;

    let records: Vec<csv::StringRecord> = rdr.records().collect::<std::result::Result<_, _>>()?;
    let numeric = |r: &csv::StringRecord| r.get(target_idx).is_some_and(|c| c.trim().parse::<f64>().is_ok());
    if !records.is_empty() && !records.iter().any(numeric) {
        return Err(Error::NonNumericTarget(target_col.to_string()));
    }

    let mut values = Vec::new();
    let mut stamps = Vec::new();
    for (i, record) in records.iter().enumerate() {
        let row = i + 1;
        let cell = record.get(target_idx).unwrap_or("");
        let v: f64 = cell.trim().parse().map_err(|_| Error::Parse {
            row,
            column: target_col.to_string(),
            message: format!("cannot parse {cell:?} as a number"),
        })?;
        if !v.is_finite() {
            return Err(Error::Parse {
                row,
                column: target_col.to_string(),
                message: format!("non-finite value {cell:?}"),
            });
        }
        values.push(v);
        if let Some(j) = ts_idx {
            let cell = record.get(j).unwrap_or("");
            stamps.push(parse_timestamp(cell).ok_or_else(|| Error::Parse {
                row,
                column: timestamp_col.unwrap_or_default().to_string(),
                message: format!("cannot parse {cell:?} as a timestamp"),
            })?);
        }
    }
    if values.is_empty() {
        return Err(Error::EmptyInput);
    }
    Ok(RawSeries {
        id: target_col.to_string(),
        values,
        timestamps: ts_idx.map(|_| stamps),
    })
}

/// Reads a file holding one series per row (first cell the id, remaining
/// cells the values, empty trailing cells ignored).
pub fn ingest_wide(path: &Path) -> Result<Vec<RawSeries>> {
    let mut rdr = reader(path)?;
    let headers = rdr.headers()?.clone();
    let mut out = Vec::new();
    for (i, record) in rdr.records().enumerate() {
        let record = record?;
        let row = i + 1;
        let id = record.get(0).unwrap_or("").trim().to_string();
        let mut values = Vec::new();
        let mut ended = false;
        for (j, cell) in record.iter().enumerate().skip(1) {
            let cell = cell.trim();
            if cell.is_empty() {
                ended = true;
                continue;
            }
            let column = headers.get(j).map_or_else(|| format!("#{}", j + 1), str::to_string);
            if ended {
                return Err(Error::Parse {
                    row,
                    column,
                    message: "value after an empty cell".into(),
                });
            }
            let v: f64 = cell.parse().ok().filter(|v: &f64| v.is_finite()).ok_or_else(|| Error::Parse {
                row,
                column,
                message: format!("cannot parse {cell:?} as a number"),
            })?;
            values.push(v);
        }
        if values.is_empty() {
            return Err(Error::Parse {
                row,
                column: headers.get(1).unwrap_or("").to_string(),
                message: format!("series {id:?} has no values"),
            });
        }
        out.push(RawSeries {
            id,
            values,
            timestamps: None,
        });
    }
    if out.is_empty() {
        return Err(Error::EmptyInput);
    }
    Ok(out)
}

/// Indices of `k` of `n` rows drawn without replacement, in ascending order.
pub fn sample_rows(n: usize, k: usize, seed: u64) -> Result<Vec<usize>> {
    if k == 0 || k > n {
        return Err(Error::Config(format!("cannot sample {k} of {n} series")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut idx = sample(&mut rng, n, k).into_vec();
    idx.sort_unstable();
    Ok(idx)
}

/// Engineered dataset for one raw series. The target is min-max scaled with
/// parameters from the first `fit_len` values; missing timestamps are
/// replaced by an hourly index starting at the epoch.
pub fn engineer(
    series: &RawSeries,
    recipe: &FeatureRecipe,
    group_names: Option<&[Vec<String>]>,
    fit_len: usize,
) -> Result<(Dataset, FeatureGroups)> {
    let n = series.values.len();
    let fit_len = fit_len.clamp(1, n);
    let scaled = minmax_apply(&minmax_fit(&series.values[..fit_len])?, &series.values);
    let ts = series.timestamps.clone().unwrap_or_else(|| hourly_timestamps(n));
    let y = Array1::from(scaled);
    let feats = build_features(y.view(), Some(&ts), recipe)?;
    let dataset = Dataset::from_engineered(y, feats.x, Some(ts), feats.names)?;
    let groups = match group_names {
        Some(names) => FeatureGroups::new(
            names
                .iter()
                .map(|g| {
                    g.iter()
                        .map(|name| {
                            dataset
                                .column_index(name)
                                .ok_or_else(|| Error::Config(format!("group column {name:?} is not an engineered feature")))
                        })
                        .collect::<Result<Vec<_>>>()
                })
                .collect::<Result<Vec<_>>>()?,
        ),
        None => {
            let mut g = vec![feats.history_cols];
            if !feats.calendar_cols.is_empty() {
                g.push(feats.calendar_cols);
            }
            FeatureGroups::new(g)
        }
    };
    let groups = crate::dataset::validate_groups(&dataset, groups)?;
    Ok((dataset, groups))
}

/// Writes a dataset as CSV: `y` followed by every feature column.
pub fn write_dataset_csv(dataset: &Dataset, path: &Path) -> Result<()> {
    let file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = csv::Writer::from_writer(file);
    let mut header = vec!["y".to_string()];
    header.extend(dataset.feature_names().iter().cloned());
    w.write_record(&header)?;
    for t in 0..dataset.n_rows() {
        let mut rec = vec![dataset.y()[t].to_string()];
        rec.extend(dataset.x().row(t).iter().map(|v| v.to_string()));
        w.write_record(&rec)?;
    }
    w.flush().map_err(|e| Error::io(path, e))?;
    Ok(())
}

/// Reads back a file produced by [`write_dataset_csv`].
pub fn read_dataset_csv(path: &Path) -> Result<Dataset> {
    let mut rdr = reader(path)?;
    let headers = rdr.headers()?.clone();
    if headers.get(0) != Some("y") {
        return Err(Error::InvalidDataset("first column must be y".into()));
    }
    let m = headers.len() - 1;
    let mut y = Vec::new();
    let mut flat = Vec::new();
    for (i, record) in rdr.records().enumerate() {
        let record = record?;
        for (j, cell) in record.iter().enumerate() {
            let v: f64 = cell.trim().parse().map_err(|_| Error::Parse {
                row: i + 1,
                column: headers.get(j).unwrap_or("").to_string(),
                message: format!("cannot parse {cell:?} as a number"),
            })?;
            if j == 0 {
                y.push(v);
            } else {
                flat.push(v);
            }
        }
    }
    let n = y.len();
    let x = Array2::from_shape_vec((n, m), flat).map_err(|e| Error::InvalidDataset(e.to_string()))?;
    Dataset::new(Array1::from(y), x, None, headers.iter().skip(1).map(str::to_string).collect())
}
