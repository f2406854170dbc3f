//! Command-line front end. Every subcommand reads JSON or CSV inputs, applies
//! flag overrides and writes its outputs to the given paths.
//!
//! Failures print one line `error kind=<tag> message="<text>"` to stderr and
//! exit with status 1. Usage errors exit with status 2.

use std::ffi::OsString;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

use crate::dataspace::{generate_synthetic, load_csv, resample_to_ratios, save_csv, RatioSpec, SyntheticSpec};
use crate::error::{Error, Result};
use crate::experiment::{
    debias, emit_frontier, emit_table, fit, prepare_data, read_rows_csv, run_sweep, write_rows_csv,
    EvalSplit, ExperimentConfig, Setting, SweepGrid,
};
use crate::json::{read_json, to_json_string, write_json};
use crate::metrics::{EvalReport, SelectionPolicy};
use crate::model::Checkpoint;
use crate::Dataset;

#[derive(Debug, Parser)]
#[command(name = "fairmargin", version, about = "Fairness-aware imbalanced classification experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Generate a synthetic dataset CSV from a JSON spec.
    Generate {
        #[arg(long)]
        spec: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Overrides `ratios.target_size` of the generator file.
        #[arg(long)]
        size: Option<usize>,
    },
    /// Subsample a dataset CSV to a class-balance / stereotyping setting.
    Resample {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Preset name such as `90-90` or `table1(0.8)`.
        #[arg(long, conflicts_with = "ratios")]
        setting: Option<Setting>,
        /// JSON ratio spec.
        #[arg(long)]
        ratios: Option<PathBuf>,
        #[arg(long)]
        size: Option<usize>,
        #[arg(long, default_value_t = 2)]
        num_groups: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Train a model from an experiment config and write a checkpoint.
    Train {
        #[command(flatten)]
        config: ConfigArgs,
        #[arg(long)]
        out: PathBuf,
        /// Also write the per-epoch training history as JSON.
        #[arg(long)]
        history: Option<PathBuf>,
        /// Also write the train/dev/test CSVs into this directory.
        #[arg(long)]
        data_dir: Option<PathBuf>,
    },
    /// Evaluate a checkpoint on a dataset CSV and print the report as JSON.
    Evaluate {
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        data: PathBuf,
        #[arg(long, default_value_t = 2)]
        num_groups: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Fit a nullspace projection on a checkpoint's hidden layer and retrain
    /// its task head.
    Inlp {
        #[arg(long)]
        model: PathBuf,
        /// Training data CSV for the projection and the head.
        #[arg(long)]
        data: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Experiment config whose `inlp` block supplies defaults.
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        max_iters: Option<usize>,
        #[arg(long)]
        stop_accuracy: Option<f64>,
        #[arg(long, default_value_t = 2)]
        num_groups: usize,
    },
    /// Run every configuration of a grid and write the result rows.
    Sweep {
        #[command(flatten)]
        config: ConfigArgs,
        /// JSON grid; the default ranges are used when absent.
        #[arg(long)]
        grid: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
        /// Worker threads (defaults to all cores). Results do not depend on it.
        #[arg(long)]
        threads: Option<usize>,
    },
    /// Extract the Pareto frontier (and optionally a summary table) from rows.
    Frontier {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, value_enum, default_value_t = EvalSplit::Test)]
        on: EvalSplit,
        /// Also write one selected row per setting and method.
        #[arg(long)]
        table: Option<PathBuf>,
        /// Selection policy for the table: best-dev-f, fairest-dev,
        /// harmonic-mean or f-floor:<x>.
        #[arg(long, default_value = "harmonic-mean")]
        policy: SelectionPolicy,
    },
}

#[derive(Debug, Args)]
struct ConfigArgs {
    #[arg(long)]
    config: PathBuf,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    setting: Option<Setting>,
    #[arg(long)]
    epochs: Option<usize>,
    #[arg(long)]
    hidden_dim: Option<usize>,
    #[arg(long)]
    learning_rate: Option<f64>,
}

impl ConfigArgs {
    fn load(&self) -> Result<ExperimentConfig> {
        let mut cfg: ExperimentConfig = read_json(&self.config)?;
        if let Some(seed) = self.seed {
            cfg.seed = seed;
        }
        if let Some(setting) = &self.setting {
            cfg.setting = setting.clone();
        }
        if let Some(epochs) = self.epochs {
            cfg.train.epochs = epochs;
        }
        if let Some(h) = self.hidden_dim {
            cfg.train.hidden_dim = h;
        }
        if let Some(lr) = self.learning_rate {
            cfg.train.learning_rate = lr;
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

/// Parses `args` (program name first) and runs the command, returning the
/// process exit status.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return e.exit_code();
        }
    };
    match execute(cli.command) {
        Ok(()) => 0,
        Err(e) => {
            report_error(&e);
            1
        }
    }
}

fn report_error(e: &Error) {
    eprintln!("error kind={} message={:?}", e.kind(), e.to_string());
}

fn execute(command: Command) -> Result<()> {
    match command {
        Command::Generate {
            spec,
            out,
            seed,
            size,
        } => {
            let mut spec: SyntheticSpec = read_json(&spec)?;
            if let Some(n) = size {
                spec.ratios.target_size = n;
            }
            let data: Dataset = generate_synthetic(&spec, seed)?;
            save_csv(&data, out)
        }
        Command::Resample {
            input,
            out,
            setting,
            ratios,
            size,
            num_groups,
            seed,
        } => {
            let ratios = match (setting, ratios) {
                (Some(s), None) => {
                    let n = size.ok_or_else(|| {
                        Error::InvalidArgument("--size is required with --setting".into())
                    })?;
                    s.ratios(n)?
                }
                (None, Some(path)) => {
                    let r: RatioSpec = read_json(path)?;
                    size.map_or(r.clone(), |n| r.with_size(n))
                }
                _ => {
                    return Err(Error::InvalidArgument(
                        "exactly one of --setting or --ratios is required".into(),
                    ))
                }
            };
            let data: Dataset = load_csv(input, 2, num_groups)?;
            save_csv(&resample_to_ratios(&data, &ratios, seed)?, out)
        }
        Command::Train {
            config,
            out,
            history,
            data_dir,
        } => {
            let cfg = config.load()?;
            let splits = prepare_data(&cfg)?;
            if let Some(dir) = data_dir {
                std::fs::create_dir_all(&dir).map_err(|e| Error::io(&dir, e))?;
                save_csv(&splits.train, dir.join("train.csv"))?;
                save_csv(&splits.dev, dir.join("dev.csv"))?;
                save_csv(&splits.test, dir.join("test.csv"))?;
            }
            let model = fit(&cfg, 0, &splits)?;
            if let Some(path) = history {
                write_json(&model.history, path)?;
            }
            model.checkpoint().save(out)
        }
        Command::Evaluate {
            model,
            data,
            num_groups,
            out,
        } => {
            let ckpt = Checkpoint::load(model)?;
            let data: Dataset = load_csv(data, ckpt.num_classes, num_groups)?;
            let preds = predict_checkpoint(&ckpt, &data)?;
            let report = EvalReport::compute(&preds, data.labels(), data.groups())?;
            match out {
                Some(path) => write_json(&report, path),
                None => {
                    print!("{}", to_json_string(&report)?);
                    Ok(())
                }
            }
        }
        Command::Inlp {
            model,
            data,
            out,
            config,
            max_iters,
            stop_accuracy,
            num_groups,
        } => {
            let defaults = match config {
                Some(path) => read_json::<ExperimentConfig>(path)?.inlp,
                None => Default::default(),
            };
            let ckpt = Checkpoint::load(model)?;
            let params = ckpt.to_params::<f64>()?;
            let data: Dataset = load_csv(data, ckpt.num_classes, num_groups)?;
            let d = debias(
                &params,
                &data,
                max_iters.unwrap_or(defaults.max_iters),
                stop_accuracy.or(defaults.stop_accuracy),
            )?;
            Checkpoint::from_params(&params)
                .with_debias(d.state.to_record(), &d.head)
                .save(out)
        }
        Command::Sweep {
            config,
            grid,
            out,
            threads,
        } => {
            let base = config.load()?;
            let grid = match grid {
                Some(path) => read_json(path)?,
                None => SweepGrid::default_ranges(),
            };
            let rows = match threads {
                Some(n) => rayon::ThreadPoolBuilder::new()
                    .num_threads(n)
                    .build()
                    .map_err(|e| Error::InvalidArgument(format!("thread pool: {e}")))?
                    .install(|| run_sweep(&grid, &base))?,
                None => run_sweep(&grid, &base)?,
            };
            write_rows_csv(&rows, &out)?;
            let failures: Vec<_> = rows.iter().filter_map(|r| r.error.as_deref()).collect();
            for message in &failures {
                eprintln!("error kind=row_failed message={message:?}");
            }
            if failures.is_empty() {
                Ok(())
            } else {
                Err(Error::InvalidArgument(format!(
                    "{} of {} sweep rows failed",
                    failures.len(),
                    rows.len()
                )))
            }
        }
        Command::Frontier {
            input,
            out,
            on,
            table,
            policy,
        } => {
            let rows = read_rows_csv(&input)?;
            emit_frontier(&rows, &out, on)?;
            if let Some(path) = table {
                emit_table(&rows, path, policy)?;
            }
            Ok(())
        }
    }
}

fn predict_checkpoint(ckpt: &Checkpoint, data: &Dataset) -> Result<Vec<usize>> {
    let params = ckpt.to_params::<f64>()?;
    match ckpt.debias_head::<f64>()? {
        None => params.predict(data.features().view()),
        Some((projection, head)) => {
            let hidden = params.hidden(data.features().view())?;
            let projected = hidden.dot(&projection.t());
            Ok(head.predict(projected.view()))
        }
    }
}
