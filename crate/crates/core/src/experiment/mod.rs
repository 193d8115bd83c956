//! Seeded multi-trial experiments: configuration, data loading, method
//! runs and result files.

mod config;
mod ingest;
mod output;
mod run;

pub use config::{
    CostConfig, CsvDatasetConfig, CsvLayout, DatasetConfig, EnsembleConfig, ExperimentConfig, FilterConfig, Method,
    SplitConfig, SCHEMA_VERSION,
};
pub use ingest::{engineer, ingest_csv, ingest_wide, read_dataset_csv, sample_rows, write_dataset_csv, RawSeries};
pub use output::{
    compare_per_trial, emit_plot_data, format_sig12, read_per_trial, run_experiment, run_experiment_with, summarise,
    write_outputs, ExperimentSummary, MethodTTest, MethodTiming, PerTrialRow, CONFIG_ECHO_FILE, CURVES_FILE,
    PER_TRIAL_FILE, TIMING_FILE, TTESTS_FILE,
};
pub use run::{fit_and_predict, load_source, make_split, prepare_trial, run_trial, run_trials, trial_seed, DataSource, TrialData};
