use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::featgen::FeatureRecipe;
use crate::hierarchy::{HierarchyOptions, LossSpec};
use crate::learners::BoostConfig;
use crate::synthetic::SyntheticConfig;

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    Hierarchical,
    Ensemble,
    Embedded,
    Wrapper,
    Filter,
    Full,
}

impl Method {
    pub const ALL: [Method; 6] = [
        Method::Hierarchical,
        Method::Ensemble,
        Method::Embedded,
        Method::Wrapper,
        Method::Filter,
        Method::Full,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Method::Hierarchical => "hierarchical",
            Method::Ensemble => "ensemble",
            Method::Embedded => "embedded",
            Method::Wrapper => "wrapper",
            Method::Filter => "filter",
            Method::Full => "full",
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Method::ALL
            .into_iter()
            .find(|m| m.as_str() == s)
            .ok_or_else(|| Error::Config(format!("unknown method {s:?}")))
    }
}

/// Window sizes. Fractions apply unless `test_len` is set, in which case the
/// last `test_len` rows are the test window and the `val_len` rows before
/// them the validation window.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SplitConfig {
    pub train_frac: f64,
    pub val_frac: f64,
    pub test_len: Option<usize>,
    pub val_len: usize,
}

impl Default for SplitConfig {
    fn default() -> Self {
        Self {
            train_frac: 0.6,
            val_frac: 0.2,
            test_len: None,
            val_len: 48,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CostConfig {
    pub beta: f64,
    pub n_steps: usize,
    pub loss: LossSpec,
}

impl Default for CostConfig {
    fn default() -> Self {
        Self {
            beta: 0.33,
            n_steps: 30,
            loss: LossSpec::L1,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EnsembleConfig {
    pub n_alpha_steps: usize,
    /// Loss for the per-row and constant mixing weights.
    pub loss: LossSpec,
}

impl Default for EnsembleConfig {
    fn default() -> Self {
        Self {
            n_alpha_steps: 31,
            loss: LossSpec::L1,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FilterConfig {
    pub keep: usize,
}

impl Default for FilterConfig {
    fn default() -> Self {
        Self { keep: 10 }
    }
}

/// How series are laid out in a CSV file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "layout", rename_all = "snake_case")]
pub enum CsvLayout {
    /// One observation per row.
    Long {
        target_column: String,
        #[serde(default)]
        timestamp_column: Option<String>,
    },
    /// One series per row: an id cell followed by the values, trailing
    /// cells may be empty.
    Wide,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CsvDatasetConfig {
    pub path: PathBuf,
    #[serde(flatten)]
    pub layout: CsvLayout,
    #[serde(default)]
    pub recipe: FeatureRecipe,
    /// Feature groups by column name; defaults to history columns then
    /// calendar columns.
    #[serde(default)]
    pub groups: Option<Vec<Vec<String>>>,
    /// Wide layout only: number of series rows drawn without replacement.
    #[serde(default)]
    pub sample: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum DatasetConfig {
    Synthetic(SyntheticConfig),
    Csv(CsvDatasetConfig),
}

impl Default for DatasetConfig {
    fn default() -> Self {
        DatasetConfig::Synthetic(SyntheticConfig::default())
    }
}

fn default_methods() -> Vec<Method> {
    vec![
        Method::Hierarchical,
        Method::Ensemble,
        Method::Embedded,
        Method::Wrapper,
        Method::Full,
    ]
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub schema_version: u32,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_trials")]
    pub trials: usize,
    #[serde(default = "default_methods")]
    pub methods: Vec<Method>,
    #[serde(default = "default_output_dir")]
    pub output_dir: PathBuf,
    #[serde(default = "default_jobs")]
    pub jobs: usize,
    #[serde(default)]
    pub dataset: DatasetConfig,
    #[serde(default)]
    pub split: SplitConfig,
    #[serde(default)]
    pub boost: BoostConfig,
    #[serde(default)]
    pub cost: CostConfig,
    #[serde(default)]
    pub hierarchy: HierarchyOptions,
    #[serde(default)]
    pub ensemble: EnsembleConfig,
    #[serde(default)]
    pub filter: FilterConfig,
}

fn default_trials() -> usize {
    200
}

fn default_output_dir() -> PathBuf {
    PathBuf::from("results")
}

fn default_jobs() -> usize {
    1
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            schema_version: SCHEMA_VERSION,
            seed: 0,
            trials: default_trials(),
            methods: default_methods(),
            output_dir: default_output_dir(),
            jobs: default_jobs(),
            dataset: DatasetConfig::default(),
            split: SplitConfig::default(),
            boost: BoostConfig::default(),
            cost: CostConfig::default(),
            hierarchy: HierarchyOptions::default(),
            ensemble: EnsembleConfig::default(),
            filter: FilterConfig::default(),
        }
    }
}

impl ExperimentConfig {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let cfg: Self = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_toml_str(&text)
    }

    pub fn to_toml_string(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn validate(&self) -> Result<()> {
        if self.schema_version != SCHEMA_VERSION {
            return Err(Error::Config(format!(
                "schema_version {} is not supported (expected {SCHEMA_VERSION})",
                self.schema_version
            )));
        }
        if self.trials < 1 {
            return Err(Error::Config("trials must be >= 1".into()));
        }
        if self.methods.is_empty() {
            return Err(Error::Config("at least one method is required".into()));
        }
        for (i, m) in self.methods.iter().enumerate() {
            if self.methods[..i].contains(m) {
                return Err(Error::Config(format!("method {m} listed twice")));
            }
        }
        if self.jobs < 1 {
            return Err(Error::Config("jobs must be >= 1".into()));
        }
        self.boost.validate()?;
        if !(0.0..=1.0).contains(&self.cost.beta) || self.cost.n_steps < 2 {
            return Err(Error::Config(format!(
                "cost needs beta in [0, 1] and n_steps >= 2 (got {}, {})",
                self.cost.beta, self.cost.n_steps
            )));
        }
        if self.ensemble.n_alpha_steps < 2 {
            return Err(Error::Config("ensemble.n_alpha_steps must be >= 2".into()));
        }
        if self.filter.keep < 1 {
            return Err(Error::Config("filter.keep must be >= 1".into()));
        }
        match &self.dataset {
            DatasetConfig::Synthetic(s) => {
                s.arma.validate()?;
                s.side.validate()?;
            }
            DatasetConfig::Csv(c) => {
                c.recipe.validate()?;
                if c.sample.is_some() && c.layout != CsvLayout::Wide {
                    return Err(Error::Config("sample applies to the wide layout only".into()));
                }
            }
        }
        Ok(())
    }

    /// The configuration as JSON without the fields that do not affect
    /// results (output location and thread count).
    pub fn echo(&self) -> Result<serde_json::Value> {
        let mut v = serde_json::to_value(self)?;
        if let Some(obj) = v.as_object_mut() {
            obj.remove("output_dir");
            obj.remove("jobs");
        }
        Ok(v)
    }
}
