use anyhow::Result;
use clap::{Args, Parser, Subcommand};
use std::path::PathBuf;
use std::process::ExitCode;
use tnm_core::dynamics::FlowKind;
use tnm_core::experiment::{self, ExperimentConfig, Split, SweepConfig};
use tnm_core::io::to_json_string;
use tnm_core::model::ParamMode;
use tnm_core::tensor::Activation;
use tnm_core::TnmError;

#[derive(Parser)]
#[command(
    name = "tnm",
    version,
    about = "Tree tensor network forecasting of chaotic flows"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Integrate the flow and write trajectory.csv and pairs.csv.
    Generate(Common),
    /// Train a model and write model.json and losses.csv.
    Train(Common),
    /// One-step evaluation: parity rows, error histogram, CDF and summary.
    Evaluate {
        #[command(flatten)]
        common: Common,
        /// Model file written by `train`.
        #[arg(long)]
        model: PathBuf,
        /// Which block to score.
        #[arg(long)]
        split: Option<Split>,
    },
    /// Autoregressive rollout over the test block.
    Forecast {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        model: PathBuf,
        /// Running-RMSE threshold that ends the horizon.
        #[arg(long)]
        threshold: Option<f64>,
        #[arg(long)]
        forecast_steps: Option<usize>,
        #[arg(long)]
        lambda1: Option<f64>,
    },
    /// Bond-dimension sweep; `--config` takes a sweep config.
    Sweep {
        #[command(flatten)]
        common: Common,
        /// Comma-separated bond dimensions.
        #[arg(long, value_delimiter = ',')]
        bond_dims: Option<Vec<usize>>,
        /// Comma-separated seeds.
        #[arg(long, value_delimiter = ',')]
        seeds: Option<Vec<u64>>,
        /// Comma-separated parametrizations.
        #[arg(long, value_delimiter = ',')]
        modes: Option<Vec<ParamMode>>,
    },
}

#[derive(Args)]
struct Common {
    /// JSON config file; defaults are used when omitted.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    flow: Option<FlowKind>,
    #[arg(long)]
    bond_dim: Option<usize>,
    #[arg(long)]
    mode: Option<ParamMode>,
    #[arg(long)]
    activation: Option<Activation>,
    #[arg(long)]
    epochs: Option<usize>,
    /// Model and training seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Number of trajectory samples.
    #[arg(long)]
    n_samples: Option<usize>,
    /// Read the trajectory from a CSV instead of integrating.
    #[arg(long)]
    trajectory: Option<PathBuf>,
    #[arg(long)]
    out: Option<PathBuf>,
}

impl Common {
    fn apply(&self, cfg: &mut ExperimentConfig) {
        if let Some(kind) = self.flow {
            cfg.flow.kind = kind;
        }
        if let Some(d) = self.bond_dim {
            cfg.model.bond_dim = d;
        }
        if let Some(m) = self.mode {
            cfg.model.mode = m;
        }
        if let Some(a) = self.activation {
            cfg.model.activation = a;
        }
        if let Some(e) = self.epochs {
            cfg.train.epochs = Some(e);
        }
        if let Some(s) = self.seed {
            cfg.model.seed = s;
            cfg.train.seed = s;
        }
        if let Some(n) = self.n_samples {
            cfg.flow.n_samples = n;
        }
        if let Some(t) = &self.trajectory {
            cfg.trajectory = Some(t.clone());
        }
        if let Some(o) = &self.out {
            cfg.output_dir = o.clone();
        }
    }

    fn experiment(&self) -> tnm_core::Result<ExperimentConfig> {
        let mut cfg = match &self.config {
            Some(path) => ExperimentConfig::load(path)?,
            None => ExperimentConfig::default(),
        };
        self.apply(&mut cfg);
        cfg.validate()?;
        Ok(cfg)
    }
}

fn print_json<T: serde::Serialize>(value: &T) -> Result<()> {
    print!("{}", to_json_string(value)?);
    Ok(())
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Generate(common) => {
            let cfg = common.experiment()?;
            print_json(&experiment::cmd_generate(&cfg)?)
        }
        Command::Train(common) => {
            let cfg = common.experiment()?;
            print_json(&experiment::cmd_train(&cfg)?)
        }
        Command::Evaluate {
            common,
            model,
            split,
        } => {
            let mut cfg = common.experiment()?;
            if let Some(s) = split {
                cfg.eval.split = s;
            }
            print_json(&experiment::cmd_evaluate(&model, &cfg)?)
        }
        Command::Forecast {
            common,
            model,
            threshold,
            forecast_steps,
            lambda1,
        } => {
            let mut cfg = common.experiment()?;
            if threshold.is_some() {
                cfg.eval.horizon_threshold = threshold;
            }
            if let Some(n) = forecast_steps {
                cfg.eval.forecast_steps = n;
            }
            if let Some(l) = lambda1 {
                cfg.eval.lambda1 = l;
            }
            cfg.validate()?;
            print_json(&experiment::cmd_forecast(&model, &cfg)?)
        }
        Command::Sweep {
            common,
            bond_dims,
            seeds,
            modes,
        } => {
            let mut sweep = match &common.config {
                Some(path) => SweepConfig::load(path)?,
                None => SweepConfig::default(),
            };
            common.apply(&mut sweep.base);
            if let Some(e) = common.epochs {
                sweep.epochs = e;
            }
            if let Some(d) = bond_dims {
                sweep.bond_dimensions = d;
            }
            if let Some(s) = seeds {
                sweep.seeds = s;
            }
            if let Some(m) = modes {
                sweep.modes = m;
            }
            sweep.validate()?;
            let (rows, path) = experiment::cmd_sweep(&sweep)?;
            let failed = rows.iter().filter(|r| r.outcome.is_err()).count();
            print_json(&serde_json::json!({
                "rows": rows.len(),
                "failed": failed,
                "sweep_csv": path,
            }))
        }
    }
}

fn error_kind(err: &anyhow::Error) -> &'static str {
    match err.downcast_ref::<TnmError>() {
        Some(TnmError::Shape { .. }) => "shape",
        Some(TnmError::NonFinite(_)) => "non_finite",
        Some(TnmError::Integration { .. }) => "integration",
        Some(TnmError::InsufficientData { .. }) => "insufficient_data",
        Some(TnmError::Config(_)) => "config",
        Some(TnmError::Divergence { .. }) => "divergence",
        Some(TnmError::Version { .. }) => "version",
        Some(TnmError::Deserialize(_)) | Some(TnmError::Json(_)) => "deserialize",
        Some(TnmError::Invariant(_)) => "invariant",
        Some(TnmError::Io(_)) => "io",
        None => "other",
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            let body = serde_json::json!({ "error": err.to_string(), "kind": error_kind(&err) });
            eprintln!("{body}");
            ExitCode::FAILURE
        }
    }
}
