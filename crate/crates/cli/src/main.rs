use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use hierfs::experiment::{
    compare_per_trial, engineer, ingest_csv, ingest_wide, read_per_trial, run_experiment, sample_rows,
    write_dataset_csv, CsvLayout, DatasetConfig, ExperimentConfig, RawSeries,
};
use hierfs::featgen::FeatureRecipe;
use hierfs::synthetic::{assemble_synthetic, SyntheticConfig};
use hierfs::{Error, Result};

#[derive(Parser)]
#[command(name = "hierfs", version, about = "Hierarchical feature-group stacking experiments")]
struct Cli {
    /// Increase log verbosity (-v info, -vv debug).
    #[arg(short, long, action = clap::ArgAction::Count, global = true)]
    verbose: u8,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Write one synthetic dataset as CSV plus its feature groups.
    Synth(SynthArgs),
    /// Run a full experiment from a config file.
    Run(RunArgs),
    /// Validate a CSV input and report the engineered dataset shape.
    Ingest(IngestArgs),
    /// One-sided paired t-test between two per_trial.csv files.
    Ttest(TtestArgs),
}

#[derive(Args)]
struct SynthArgs {
    /// Config whose synthetic dataset section is used; defaults otherwise.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value = ".")]
    out: PathBuf,
}

#[derive(Args)]
struct RunArgs {
    #[arg(long)]
    config: PathBuf,
    /// Worker threads for trials.
    #[arg(long)]
    jobs: Option<usize>,
    /// Overrides the config's base seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Overrides the config's output directory.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct IngestArgs {
    /// CSV file; may be omitted when --config names one.
    path: Option<PathBuf>,
    #[arg(long)]
    config: Option<PathBuf>,
    /// Target column of a long-layout file.
    #[arg(long, default_value = "value")]
    target: String,
    /// Timestamp column of a long-layout file.
    #[arg(long)]
    timestamp: Option<String>,
    /// File holds one series per row.
    #[arg(long)]
    wide: bool,
    /// Draw this many series (wide layout).
    #[arg(long)]
    sample: Option<usize>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Write each engineered series as CSV into this directory.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct TtestArgs {
    /// per_trial.csv of the compared method.
    compared: PathBuf,
    /// per_trial.csv of the proposed method.
    proposed: PathBuf,
    #[arg(long)]
    compared_method: Option<String>,
    #[arg(long)]
    proposed_method: Option<String>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();

    let result = match cli.command {
        Command::Synth(a) => synth(a),
        Command::Run(a) => run(a),
        Command::Ingest(a) => ingest(a),
        Command::Ttest(a) => ttest(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

fn synth(args: SynthArgs) -> Result<()> {
    let base = match &args.config {
        Some(path) => match ExperimentConfig::load(path)?.dataset {
            DatasetConfig::Synthetic(s) => s,
            DatasetConfig::Csv(_) => return Err(Error::Config("config does not describe a synthetic dataset".into())),
        },
        None => SyntheticConfig::default(),
    };
    let generated = assemble_synthetic(&base.reseeded(args.seed))?;
    std::fs::create_dir_all(&args.out).map_err(|e| Error::io(&args.out, e))?;
    let data_path = args.out.join("synthetic.csv");
    write_dataset_csv(&generated.dataset, &data_path)?;
    let groups_path = args.out.join("groups.json");
    let text = serde_json::to_string_pretty(&generated.groups)?;
    std::fs::write(&groups_path, text + "\n").map_err(|e| Error::io(&groups_path, e))?;
    println!(
        "wrote {} ({} rows, {} features) and {}",
        data_path.display(),
        generated.dataset.n_rows(),
        generated.dataset.n_features(),
        groups_path.display()
    );
    Ok(())
}

fn run(args: RunArgs) -> Result<()> {
    let mut cfg = ExperimentConfig::load(&args.config)?;
    if let Some(jobs) = args.jobs {
        cfg.jobs = jobs;
    }
    if let Some(seed) = args.seed {
        cfg.seed = seed;
    }
    if let Some(out) = args.out {
        cfg.output_dir = out;
    }
    cfg.validate()?;
    let summary = run_experiment(&cfg)?;
    println!("{:<14} {:>14} {:>12}", "method", "mean_mse", "mean_time_s");
    for ((method, mse), timing) in summary.mean_mse.iter().zip(&summary.timing) {
        println!("{method:<14} {mse:>14.6e} {:>12.4}", timing.mean_wall_time_s);
    }
    for t in &summary.ttests {
        println!(
            "{} vs {}: t = {:.4}, p = {:.4e}, dof = {}",
            t.method, t.against, t.report.t_stat, t.report.p_value, t.report.dof
        );
    }
    println!("results in {}", cfg.output_dir.display());
    Ok(())
}

fn ingest(args: IngestArgs) -> Result<()> {
    let (path, layout, recipe, groups, sample) = match &args.config {
        Some(cfg_path) => match ExperimentConfig::load(cfg_path)?.dataset {
            DatasetConfig::Csv(c) => (c.path, c.layout, c.recipe, c.groups, args.sample.or(c.sample)),
            DatasetConfig::Synthetic(_) => return Err(Error::Config("config does not describe a CSV dataset".into())),
        },
        None => {
            let path = args
                .path
                .clone()
                .ok_or_else(|| Error::Config("give a CSV path or --config".into()))?;
            let layout = if args.wide {
                CsvLayout::Wide
            } else {
                CsvLayout::Long {
                    target_column: args.target.clone(),
                    timestamp_column: args.timestamp.clone(),
                }
            };
            (path, layout, FeatureRecipe::default(), None, args.sample)
        }
    };
    let series: Vec<RawSeries> = match &layout {
        CsvLayout::Long {
            target_column,
            timestamp_column,
        } => vec![ingest_csv(&path, target_column, timestamp_column.as_deref())?],
        CsvLayout::Wide => {
            let all = ingest_wide(&path)?;
            match sample {
                Some(k) => sample_rows(all.len(), k, args.seed)?.into_iter().map(|i| all[i].clone()).collect(),
                None => all,
            }
        }
    };
    if let Some(dir) = &args.out {
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    for s in &series {
        let (dataset, g) = engineer(s, &recipe, groups.as_deref(), s.values.len())?;
        let sizes: Vec<usize> = g.groups().iter().map(Vec::len).collect();
        println!(
            "{}: {} values -> {} rows x {} features, groups {:?}",
            s.id,
            s.values.len(),
            dataset.n_rows(),
            dataset.n_features(),
            sizes
        );
        if let Some(dir) = &args.out {
            write_dataset_csv(&dataset, &dir.join(format!("{}.csv", file_stem(&s.id))))?;
        }
    }
    Ok(())
}

fn file_stem(id: &str) -> String {
    id.chars()
        .map(|c| if c.is_ascii_alphanumeric() || c == '-' || c == '_' { c } else { '_' })
        .collect()
}

fn ttest(args: TtestArgs) -> Result<()> {
    let a = read_per_trial(&args.compared)?;
    let b = read_per_trial(&args.proposed)?;
    let r = compare_per_trial(&a, args.compared_method.as_deref(), &b, args.proposed_method.as_deref())?;
    println!("{}", serde_json::to_string_pretty(&r)?);
    Ok(())
}
