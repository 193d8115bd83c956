use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::config::{ExperimentConfig, Method};
use super::run::run_trials;
use crate::error::{Error, Result};
use crate::eval::{average_over_trials, cumulative_average, paired_t_test_one_sided, TTestReport, TrialResult};
use crate::hierarchy::LossRegistry;

pub const PER_TRIAL_FILE: &str = "per_trial.csv";
pub const CURVES_FILE: &str = "curves.csv";
pub const TTESTS_FILE: &str = "ttests.json";
pub const TIMING_FILE: &str = "timing.json";
pub const CONFIG_ECHO_FILE: &str = "config_echo.json";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MethodTTest {
    pub method: String,
    pub against: String,
    #[serde(flatten)]
    pub report: TTestReport,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MethodTiming {
    pub method: String,
    pub mean_wall_time_s: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentSummary {
    pub results: Vec<TrialResult>,
    /// Cumulative average of the trial-averaged per-step error, per method.
    pub curves: Vec<(String, Vec<f64>)>,
    pub mean_mse: Vec<(String, f64)>,
    pub ttests: Vec<MethodTTest>,
    pub timing: Vec<MethodTiming>,
}

impl ExperimentSummary {
    pub fn mean_mse_of(&self, method: Method) -> Option<f64> {
        self.mean_mse.iter().find(|(m, _)| m == method.as_str()).map(|&(_, v)| v)
    }

    pub fn ttest_of(&self, method: Method) -> Option<&TTestReport> {
        self.ttests.iter().find(|t| t.method == method.as_str()).map(|t| &t.report)
    }

    pub fn mean_time_of(&self, method: Method) -> Option<f64> {
        self.timing.iter().find(|t| t.method == method.as_str()).map(|t| t.mean_wall_time_s)
    }
}

fn of_method<'a>(results: &'a [TrialResult], method: &'a str) -> impl Iterator<Item = &'a TrialResult> + 'a {
    results.iter().filter(move |r| r.method == method)
}

/// Aggregates per-trial results for the methods in `methods`, in that order.
pub fn summarise(results: Vec<TrialResult>, methods: &[Method]) -> Result<ExperimentSummary> {
    let mut curves = Vec::new();
    let mut mean_mse = Vec::new();
    let mut timing = Vec::new();
    for m in methods {
        let name = m.as_str();
        let errs: Vec<Vec<f64>> = of_method(&results, name).map(|r| r.per_step_sq_err.clone()).collect();
        curves.push((name.to_string(), cumulative_average(&average_over_trials(&errs)?)));
        let mses: Vec<f64> = of_method(&results, name).map(TrialResult::mse).collect();
        mean_mse.push((name.to_string(), mses.iter().sum::<f64>() / mses.len() as f64));
        let times: Vec<f64> = of_method(&results, name).map(|r| r.wall_time_s).collect();
        timing.push(MethodTiming {
            method: name.to_string(),
            mean_wall_time_s: times.iter().sum::<f64>() / times.len() as f64,
        });
    }

    let mut ttests = Vec::new();
    let reference = Method::Hierarchical.as_str();
    let proposed: Vec<f64> = of_method(&results, reference).map(TrialResult::mse).collect();
    if methods.contains(&Method::Hierarchical) && proposed.len() >= 2 {
        for m in methods.iter().filter(|&&m| m != Method::Hierarchical) {
            let compared: Vec<f64> = of_method(&results, m.as_str()).map(TrialResult::mse).collect();
            ttests.push(MethodTTest {
                method: m.as_str().to_string(),
                against: reference.to_string(),
                report: paired_t_test_one_sided(&compared, &proposed)?,
            });
        }
    } else if methods.len() > 1 {
        log::warn!("t-tests need the hierarchical method and at least two trials; skipped");
    }
    Ok(ExperimentSummary {
        results,
        curves,
        mean_mse,
        ttests,
        timing,
    })
}

/// Formats `v` with 12 significant digits, fixed notation for moderate
/// exponents and scientific otherwise, without trailing zeros.
pub fn format_sig12(v: f64) -> String {
    if v == 0.0 || !v.is_finite() {
        return if v == 0.0 { "0".into() } else { v.to_string() };
    }
    let sci = format!("{v:.11e}");
    let (mantissa, exp) = sci.split_once('e').expect("exponent");
    let exp: i32 = exp.parse().expect("integer exponent");
    if (-5..12).contains(&exp) {
        let decimals = (11 - exp).max(0) as usize;
        trim_zeros(format!("{v:.decimals$}"))
    } else {
        format!("{}e{exp}", trim_zeros(mantissa.to_string()))
    }
}

fn trim_zeros(s: String) -> String {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.').to_string()
    } else {
        s
    }
}

/// Long-format `t,method,value` CSV, methods in the given order.
pub fn emit_plot_data(curves: &[(String, Vec<f64>)], path: &Path) -> Result<()> {
    let mut out = String::from("t,method,value\n");
    for (method, values) in curves {
        for (t, v) in values.iter().enumerate() {
            out.push_str(&format!("{t},{method},{}\n", format_sig12(*v)));
        }
    }
    fs::write(path, out).map_err(|e| Error::io(path, e))
}

fn write_per_trial(results: &[TrialResult], path: &Path) -> Result<()> {
    let mut out = String::from("trial,method,wall_time,mse\n");
    for r in results {
        out.push_str(&format!("{},{},{},{}\n", r.trial_id, r.method, r.wall_time_s, r.mse()));
    }
    fs::write(path, out).map_err(|e| Error::io(path, e))
}

fn write_json(value: &impl Serialize, path: &Path) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    fs::write(path, text).map_err(|e| Error::io(path, e))
}

/// One row of a `per_trial.csv` file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PerTrialRow {
    pub trial: usize,
    pub method: String,
    pub wall_time: f64,
    pub mse: f64,
}

pub fn read_per_trial(path: &Path) -> Result<Vec<PerTrialRow>> {
    let file = fs::File::open(path).map_err(|e| Error::io(path, e))?;
    let mut rdr = csv::Reader::from_reader(file);
    rdr.deserialize().enumerate().map(|(i, r)| {
        r.map_err(|e| Error::Parse {
            row: i + 1,
            column: e.position().map_or_else(String::new, |p| format!("line {}", p.line())),
            message: e.to_string(),
        })
    }).collect()
}

/// Paired one-sided t-test of `compared` against `proposed` per-trial MSEs,
/// matched by trial id. When a method is not named the file must hold one.
pub fn compare_per_trial(
    compared: &[PerTrialRow],
    compared_method: Option<&str>,
    proposed: &[PerTrialRow],
    proposed_method: Option<&str>,
) -> Result<TTestReport> {
    fn pick<'a>(rows: &'a [PerTrialRow], method: Option<&str>) -> Result<Vec<&'a PerTrialRow>> {
        let method = match method {
            Some(m) => m.to_string(),
            None => {
                let mut names: Vec<&str> = rows.iter().map(|r| r.method.as_str()).collect();
                names.sort_unstable();
                names.dedup();
                match names.as_slice() {
                    [one] => one.to_string(),
                    _ => return Err(Error::Config(format!("file holds methods {names:?}; name one"))),
                }
            }
        };
        let mut picked: Vec<&PerTrialRow> = rows.iter().filter(|r| r.method == method).collect();
        if picked.is_empty() {
            return Err(Error::Config(format!("no rows for method {method:?}")));
        }
        picked.sort_by_key(|r| r.trial);
        Ok(picked)
    }
    let a = pick(compared, compared_method)?;
    let b = pick(proposed, proposed_method)?;
    let trials_a: Vec<usize> = a.iter().map(|r| r.trial).collect();
    let trials_b: Vec<usize> = b.iter().map(|r| r.trial).collect();
    if trials_a != trials_b {
        return Err(Error::InvalidDataset("the two files cover different trials".into()));
    }
    let xa: Vec<f64> = a.iter().map(|r| r.mse).collect();
    let xb: Vec<f64> = b.iter().map(|r| r.mse).collect();
    paired_t_test_one_sided(&xa, &xb)
}

/// Writes the five result files into `dir`.
pub fn write_outputs(cfg: &ExperimentConfig, summary: &ExperimentSummary, dir: &Path) -> Result<Vec<PathBuf>> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let paths: Vec<PathBuf> = [PER_TRIAL_FILE, CURVES_FILE, TTESTS_FILE, TIMING_FILE, CONFIG_ECHO_FILE]
        .iter()
        .map(|f| dir.join(f))
        .collect();
    write_per_trial(&summary.results, &paths[0])?;
    emit_plot_data(&summary.curves, &paths[1])?;
    write_json(&summary.ttests, &paths[2])?;
    write_json(&summary.timing, &paths[3])?;
    write_json(&cfg.echo()?, &paths[4])?;
    Ok(paths)
}

/// Runs all trials and writes the result files into `cfg.output_dir`.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<ExperimentSummary> {
    run_experiment_with(cfg, &LossRegistry::new())
}

/// As [`run_experiment`], resolving named losses through `registry`.
pub fn run_experiment_with(cfg: &ExperimentConfig, registry: &LossRegistry) -> Result<ExperimentSummary> {
    let results = run_trials(cfg, registry)?;
    let summary = summarise(results, &cfg.methods)?;
    write_outputs(cfg, &summary, &cfg.output_dir)?;
    Ok(summary)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn twelve_significant_digits() {
        assert_eq!(format_sig12(0.0), "0");
        assert_eq!(format_sig12(1.0), "1");
        assert_eq!(format_sig12(0.1), "0.1");
        assert_eq!(format_sig12(1.0 / 3.0), "0.333333333333");
        assert_eq!(format_sig12(2.0 / 3.0 * 1e-7), "6.66666666667e-8");
        assert_eq!(format_sig12(123456.789012345), "123456.789012");
        assert_eq!(format_sig12(-0.00123456789012345), "-0.00123456789012");
        assert_eq!(format_sig12(1e15), "1e15");
    }

    #[test]
    fn plot_data_layout_and_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("c.csv");
        let curves = vec![
            ("wrapper".to_string(), vec![0.5, 0.25, 0.125]),
            ("embedded".to_string(), vec![0.1, 0.2, 0.3]),
        ];
        emit_plot_data(&curves[..1], &path).unwrap();
        assert_eq!(fs::read_to_string(&path).unwrap().lines().count(), 4);

        emit_plot_data(&curves, &path).unwrap();
        let mut rdr = csv::Reader::from_path(&path).unwrap();
        let rows: Vec<(usize, String, f64)> = rdr.deserialize().map(|r| r.unwrap()).collect();
        assert_eq!(rows[0].1, "wrapper");
        assert_eq!(rows[3].1, "embedded");
        for (k, (t, m, v)) in rows.iter().enumerate() {
            let (name, vals) = &curves[k / 3];
            assert_eq!((m, *t, *v), (name, k % 3, vals[k % 3]));
        }
    }

    fn result(trial: usize, method: Method, mse: f64) -> TrialResult {
        TrialResult {
            trial_id: trial,
            seed: trial as u64,
            method: method.as_str().into(),
            per_step_sq_err: vec![mse / 2.0, mse / 2.0],
            wall_time_s: 0.5,
        }
    }

    #[test]
    fn summary_orders_by_config_and_tests_against_hierarchical() {
        let results = vec![
            result(0, Method::Full, 0.4),
            result(0, Method::Hierarchical, 0.2),
            result(1, Method::Full, 0.5),
            result(1, Method::Hierarchical, 0.2),
            result(2, Method::Full, 0.35),
            result(2, Method::Hierarchical, 0.25),
        ];
        let s = summarise(results, &[Method::Full, Method::Hierarchical]).unwrap();
        assert_eq!(s.curves[0].0, "full");
        assert!((s.mean_mse_of(Method::Full).unwrap() - 0.4166666666666667).abs() < 1e-15);
        let t = s.ttest_of(Method::Full).unwrap();
        assert!(t.t_stat > 0.0 && t.p_value < 0.05);
        assert_eq!(s.ttests.len(), 1);
        let h = (0.1 + 0.1 + 0.125) / 3.0;
        assert!(s.curves[1].1.iter().all(|v| (v - h).abs() < 1e-15));
    }

    #[test]
    fn per_trial_comparison() {
        let rows = |m: &str, v: &[f64]| -> Vec<PerTrialRow> {
            v.iter()
                .enumerate()
                .map(|(i, &mse)| PerTrialRow {
                    trial: i,
                    method: m.into(),
                    wall_time: 0.0,
                    mse,
                })
                .collect()
        };
        let a = rows("full", &[1.0, 2.0, 0.5, 1.5]);
        let b = rows("hierarchical", &[0.0; 4]);
        let r = compare_per_trial(&a, None, &b, None).unwrap();
        assert!((r.t_stat - 3.872983346207417).abs() < 1e-9);
        let mut both = a.clone();
        both.extend(b.clone());
        assert!(compare_per_trial(&both, None, &b, None).is_err());
        assert!(compare_per_trial(&both, Some("full"), &both, Some("hierarchical")).is_ok());
    }
}
