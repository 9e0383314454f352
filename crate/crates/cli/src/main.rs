use std::path::{Path, PathBuf};
use std::process::ExitCode;

use bbfnn_cli::config::{ModelEntry, NetworkSettings, SplitMode};
use bbfnn_cli::report::{
    improvement_csv, improvements, read_raw, summarize, summary_csv, write_file, IMPROVEMENT_FILE,
    SUMMARY_FILE,
};
use bbfnn_cli::{run_experiment, ExperimentConfig, NoiseLevel, Result};
use bbfnn_core::ModelKind;
use clap::{Args, Parser, Subcommand};

#[derive(Parser)]
#[command(name = "bbfnn", version, about = "Train and compare beta basis function networks")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run an experiment and write raw, summary and improvement CSVs.
    Run {
        config: PathBuf,
        #[command(flatten)]
        overrides: Overrides,
    },
    /// Check a config file and print it in canonical form. Never trains.
    Validate {
        config: PathBuf,
        #[command(flatten)]
        overrides: Overrides,
    },
    /// Recompute summary and improvement tables from a raw results file.
    Report {
        raw: PathBuf,
        /// Write summary.csv and improvement.csv here instead of printing.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Args, Default)]
struct Overrides {
    /// Dataset file, replacing `[dataset] path`.
    #[arg(long)]
    dataset: Option<PathBuf>,
    /// Models to run (comma separated), replacing the config's selection.
    #[arg(long, value_delimiter = ',')]
    model: Vec<ModelKind>,
    /// Hidden layer size for every model.
    #[arg(long)]
    hidden: Option<usize>,
    #[arg(long)]
    runs: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    /// Noise levels, e.g. `clean,50,10,1`.
    #[arg(long, value_delimiter = ',')]
    snr: Vec<NoiseLevel>,
    /// Switch to k-fold cross-validation with this many folds.
    #[arg(long)]
    folds: Option<usize>,
    /// Output directory.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Worker threads (0 = all cores).
    #[arg(long)]
    workers: Option<usize>,
}

fn load(path: &Path, o: Overrides) -> Result<ExperimentConfig> {
    let mut cfg = ExperimentConfig::from_file(path)?;
    let cwd_relative = |p: PathBuf| {
        if p.is_absolute() {
            p
        } else {
            std::env::current_dir().map(|d| d.join(&p)).unwrap_or(p)
        }
    };
    if let Some(d) = o.dataset {
        cfg.dataset.path = cwd_relative(d);
    }
    if !o.model.is_empty() {
        let previous = std::mem::take(&mut cfg.models);
        cfg.models = ModelKind::ALL
            .into_iter()
            .filter(|k| o.model.contains(k))
            .map(|kind| {
                previous.iter().find(|m| m.kind == kind).cloned().unwrap_or(ModelEntry {
                    kind,
                    overrides: NetworkSettings::default(),
                })
            })
            .collect();
    }
    if let Some(n) = o.hidden {
        cfg.network.hidden = Some(n);
        for m in &mut cfg.models {
            m.overrides.hidden = None;
        }
    }
    if let Some(r) = o.runs {
        cfg.protocol.runs = r;
    }
    if let Some(s) = o.seed {
        cfg.protocol.seed = s;
    }
    if !o.snr.is_empty() {
        cfg.protocol.noise = o.snr;
    }
    if let Some(folds) = o.folds {
        cfg.protocol.split = SplitMode::KFold { folds };
    }
    if let Some(out) = o.out {
        cfg.protocol.output = cwd_relative(out);
    }
    if let Some(w) = o.workers {
        cfg.protocol.workers = w;
    }
    cfg.revalidate()?;
    Ok(cfg)
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Run { config, overrides } => {
            let cfg = load(&config, overrides)?;
            let output = run_experiment(&cfg)?;
            let dir = cfg.output_dir();
            output.write(&dir)?;
            print!("{}", summary_csv(&output.summary)?);
            eprintln!("results written to {}", dir.display());
        }
        Command::Validate { config, overrides } => {
            let cfg = load(&config, overrides)?;
            print!("{cfg}");
            let data = cfg.data_path();
            if !data.is_file() {
                eprintln!("note: data file {} is not present", data.display());
            }
        }
        Command::Report { raw, out } => {
            let records = read_raw(&raw)?;
            let summary = summarize(&records)?;
            let summary_text = summary_csv(&summary)?;
            let improvement_text = improvement_csv(&improvements(&summary))?;
            match out {
                Some(dir) => {
                    std::fs::create_dir_all(&dir).map_err(|source| bbfnn_cli::CliError::Io {
                        path: dir.clone(),
                        source,
                    })?;
                    write_file(&dir, SUMMARY_FILE, &summary_text)?;
                    write_file(&dir, IMPROVEMENT_FILE, &improvement_text)?;
                }
                None => {
                    print!("{summary_text}");
                    println!();
                    print!("{improvement_text}");
                }
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
