//! JSON experiment configs and the orchestration behind each CLI verb:
//! generate, train, evaluate, forecast and the bond-dimension sweep.

use crate::dataset::{
    build_windows, prepare, write_pairs_csv, SplitDataset, WindowPair, DEFAULT_FRACTIONS, WINDOW,
};
use crate::dynamics::{generate_trajectory, FlowSpec, State3, Trajectory};
use crate::error::{Result, TnmError};
use crate::io::{fmt_f64, to_json_string};
use crate::metrics::{
    predict_one_step, recursive_forecast, EvalReport, ForecastReport, HorizonSettings,
    LORENZ_LAMBDA1,
};
use crate::model::{ParamMode, TnmModel};
use crate::tensor::Activation;
use crate::training::{fit, BatchMode, TrainConfig, TrainReport};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::fs::{self, File};
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

pub const CONFIG_VERSION: u32 = 1;

pub const HOMOGENEOUS_EPOCHS: usize = 80;
pub const INHOMOGENEOUS_EPOCHS: usize = 60;
pub const SWEEP_EPOCHS: usize = 200;
pub const HOMOGENEOUS_THRESHOLD: f64 = 1.9;
pub const INHOMOGENEOUS_THRESHOLD: f64 = 2.1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ModelConfig {
    pub d: usize,
    #[serde(rename = "D")]
    pub bond_dim: usize,
    pub mode: ParamMode,
    pub activation: Activation,
    pub seed: u64,
}

impl Default for ModelConfig {
    fn default() -> Self {
        Self {
            d: 3,
            bond_dim: 8,
            mode: ParamMode::Inhomogeneous,
            activation: Activation::default(),
            seed: 0,
        }
    }
}

/// Training hyperparameters. `epochs = None` picks 80 (homogeneous) or 60
/// (inhomogeneous).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TrainSection {
    pub learning_rate: f64,
    pub epochs: Option<usize>,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
    pub seed: u64,
    pub batch: BatchMode,
}

impl Default for TrainSection {
    fn default() -> Self {
        let t = TrainConfig::default();
        Self {
            learning_rate: t.learning_rate,
            epochs: None,
            beta1: t.beta1,
            beta2: t.beta2,
            epsilon: t.epsilon,
            seed: t.seed,
            batch: t.batch,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Split {
    Train,
    Val,
    Test,
}

impl Split {
    pub fn as_str(self) -> &'static str {
        match self {
            Split::Train => "train",
            Split::Val => "val",
            Split::Test => "test",
        }
    }
}

impl std::str::FromStr for Split {
    type Err = TnmError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "train" => Ok(Split::Train),
            "val" | "validation" => Ok(Split::Val),
            "test" => Ok(Split::Test),
            other => Err(TnmError::Config(format!("unknown split `{other}`"))),
        }
    }
}

/// `horizon_threshold = None` picks 1.9 (homogeneous) or 2.1 (inhomogeneous).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct EvalConfig {
    pub horizon_threshold: Option<f64>,
    pub lambda1: f64,
    pub forecast_steps: usize,
    pub split: Split,
    pub histogram_bins: usize,
}

impl Default for EvalConfig {
    fn default() -> Self {
        Self {
            horizon_threshold: None,
            lambda1: LORENZ_LAMBDA1,
            forecast_steps: 100,
            split: Split::Val,
            histogram_bins: 40,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ExperimentConfig {
    pub format_version: u32,
    pub flow: FlowSpec,
    pub model: ModelConfig,
    pub train: TrainSection,
    pub eval: EvalConfig,
    pub output_dir: PathBuf,
    /// Read the trajectory from this CSV instead of integrating the flow.
    pub trajectory: Option<PathBuf>,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            format_version: CONFIG_VERSION,
            flow: FlowSpec::default(),
            model: ModelConfig::default(),
            train: TrainSection::default(),
            eval: EvalConfig::default(),
            output_dir: PathBuf::from("out"),
            trajectory: None,
        }
    }
}

fn check_version(found: u32) -> Result<()> {
    if found != CONFIG_VERSION {
        return Err(TnmError::Version {
            found,
            expected: CONFIG_VERSION,
        });
    }
    Ok(())
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: Self = serde_json::from_str(text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_json(&fs::read_to_string(path)?)
    }

    pub fn to_json(&self) -> Result<String> {
        to_json_string(self)
    }

    pub fn validate(&self) -> Result<()> {
        check_version(self.format_version)?;
        if self.trajectory.is_none() {
            self.flow.validate()?;
        }
        if self.model.d != 3 {
            return Err(TnmError::Config(format!(
                "flows are three-dimensional; model.d must be 3, got {}",
                self.model.d
            )));
        }
        if self.model.bond_dim == 0 {
            return Err(TnmError::Config(
                "bond dimension D must be at least 1".into(),
            ));
        }
        self.train_config().validate()?;
        if let Some(t) = self.eval.horizon_threshold {
            if !(t > 0.0) {
                return Err(TnmError::Config(
                    "horizon_threshold must be positive".into(),
                ));
            }
        }
        if !(self.eval.lambda1 > 0.0) {
            return Err(TnmError::Config("lambda1 must be positive".into()));
        }
        Ok(())
    }

    pub fn epochs(&self) -> usize {
        self.train.epochs.unwrap_or(match self.model.mode {
            ParamMode::Homogeneous => HOMOGENEOUS_EPOCHS,
            ParamMode::Inhomogeneous => INHOMOGENEOUS_EPOCHS,
        })
    }

    pub fn horizon_threshold(&self) -> f64 {
        self.eval
            .horizon_threshold
            .unwrap_or(match self.model.mode {
                ParamMode::Homogeneous => HOMOGENEOUS_THRESHOLD,
                ParamMode::Inhomogeneous => INHOMOGENEOUS_THRESHOLD,
            })
    }

    pub fn train_config(&self) -> TrainConfig {
        let t = &self.train;
        TrainConfig {
            learning_rate: t.learning_rate,
            epochs: self.epochs(),
            beta1: t.beta1,
            beta2: t.beta2,
            epsilon: t.epsilon,
            seed: t.seed,
            batch: t.batch,
        }
    }

    pub fn build_model(&self) -> Result<TnmModel> {
        Ok(TnmModel::build(
            self.model.d,
            self.model.bond_dim,
            self.model.mode,
            self.model.seed,
        )?
        .with_activation(self.model.activation))
    }

    pub fn load_trajectory(&self) -> Result<Trajectory> {
        match &self.trajectory {
            Some(path) => Trajectory::read_csv(BufReader::new(File::open(path)?)),
            None => generate_trajectory(&self.flow),
        }
    }

    /// Sets both the model and the training seed.
    pub fn with_seed(mut self, seed: u64) -> Self {
        self.model.seed = seed;
        self.train.seed = seed;
        self
    }

    fn dt(&self, traj: &Trajectory) -> f64 {
        if traj.dt_sample > 0.0 {
            traj.dt_sample
        } else {
            self.flow.dt_sample()
        }
    }
}

/// Raw (unscaled) pairs, cut into the same chronological blocks used for
/// training.
pub struct RawSplits {
    pub pairs: Vec<WindowPair>,
    pub n_train: usize,
    pub n_val: usize,
}

impl RawSplits {
    pub fn new(traj: &Trajectory) -> Result<Self> {
        let pairs = build_windows(traj)?;
        let (train, val, _) = crate::dataset::split_chronological(&pairs, DEFAULT_FRACTIONS)?;
        Ok(Self {
            n_train: train.len(),
            n_val: val.len(),
            pairs,
        })
    }

    pub fn block(&self, split: Split) -> &[WindowPair] {
        let (a, b) = (self.n_train, self.n_train + self.n_val);
        match split {
            Split::Train => &self.pairs[..a],
            Split::Val => &self.pairs[a..b],
            Split::Test => &self.pairs[b..],
        }
    }
}

pub struct TrainOutcome {
    pub report: TrainReport,
    pub data: SplitDataset,
    pub trajectory: Trajectory,
}

pub fn train(cfg: &ExperimentConfig) -> Result<TrainOutcome> {
    cfg.validate()?;
    let trajectory = cfg.load_trajectory()?;
    let data = prepare(&trajectory, DEFAULT_FRACTIONS)?;
    let report = fit(cfg.build_model()?, &data, &cfg.train_config())?;
    Ok(TrainOutcome {
        report,
        data,
        trajectory,
    })
}

/// One-step evaluation on `cfg.eval.split`, standardized with the model's
/// own scaler.
pub fn evaluate(
    model: &TnmModel,
    scaler: &crate::dataset::Scaler,
    traj: &Trajectory,
    split: Split,
) -> Result<EvalReport> {
    let raw = RawSplits::new(traj)?;
    let pairs: Vec<WindowPair> = raw
        .block(split)
        .iter()
        .map(|p| scaler.transform(p))
        .collect();
    predict_one_step(model, scaler, &pairs)
}

/// Autoregressive rollout over the test block, seeded with the seven states
/// preceding its first target.
pub fn forecast(
    model: &TnmModel,
    scaler: &crate::dataset::Scaler,
    traj: &Trajectory,
    cfg: &ExperimentConfig,
) -> Result<ForecastReport> {
    let raw = RawSplits::new(traj)?;
    let test = raw.block(Split::Test);
    let seed: [State3; WINDOW] = test[0].window;
    let truth: Vec<State3> = test.iter().map(|p| p.target).collect();
    let settings = HorizonSettings {
        threshold: cfg.horizon_threshold(),
        lambda1: cfg.eval.lambda1,
        dt: cfg.dt(traj),
    };
    recursive_forecast(
        model,
        scaler,
        &seed,
        cfg.eval.forecast_steps,
        &truth,
        settings,
    )
}

/// Train, then evaluate one-step on the configured split and roll out over
/// the test block.
pub struct PipelineResult {
    pub train: TrainOutcome,
    pub eval: EvalReport,
    pub forecast: ForecastReport,
}

pub fn run_pipeline(cfg: &ExperimentConfig) -> Result<PipelineResult> {
    let outcome = train(cfg)?;
    let model = &outcome.report.model;
    let scaler = outcome.data.scaler;
    let eval = evaluate(model, &scaler, &outcome.trajectory, cfg.eval.split)?;
    let fc = forecast(model, &scaler, &outcome.trajectory, cfg)?;
    Ok(PipelineResult {
        train: outcome,
        eval,
        forecast: fc,
    })
}

fn create(dir: &Path, name: &str) -> Result<BufWriter<File>> {
    fs::create_dir_all(dir)?;
    Ok(BufWriter::new(File::create(dir.join(name))?))
}

fn write_text(dir: &Path, name: &str, text: &str) -> Result<PathBuf> {
    let mut f = create(dir, name)?;
    f.write_all(text.as_bytes())?;
    f.flush()?;
    Ok(dir.join(name))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GenerateSummary {
    pub samples: usize,
    pub dt_sample: f64,
    pub trajectory_csv: PathBuf,
    pub pairs_csv: PathBuf,
}

/// Writes `trajectory.csv` and the raw windowed pairs `pairs.csv`.
pub fn cmd_generate(cfg: &ExperimentConfig) -> Result<GenerateSummary> {
    cfg.flow.validate()?;
    let traj = generate_trajectory(&cfg.flow)?;
    let dir = &cfg.output_dir;
    let mut f = create(dir, "trajectory.csv")?;
    traj.write_csv(&mut f)?;
    f.flush()?;
    let pairs_csv = dir.join("pairs.csv");
    let mut f = create(dir, "pairs.csv")?;
    match build_windows(&traj) {
        Ok(pairs) => write_pairs_csv(&pairs, &mut f)?,
        Err(_) => write_pairs_csv(&[], &mut f)?,
    }
    f.flush()?;
    Ok(GenerateSummary {
        samples: traj.len(),
        dt_sample: traj.dt_sample,
        trajectory_csv: dir.join("trajectory.csv"),
        pairs_csv,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TrainSummary {
    pub epochs: usize,
    pub final_train_loss: Option<f64>,
    pub final_val_loss: Option<f64>,
    pub param_count: usize,
    pub model_file: PathBuf,
    pub loss_csv: PathBuf,
}

/// Writes `model.json` (with the scaler) and `losses.csv`.
pub fn cmd_train(cfg: &ExperimentConfig) -> Result<TrainSummary> {
    let outcome = train(cfg)?;
    let report = &outcome.report;
    let dir = &cfg.output_dir;
    let model_file = write_text(
        dir,
        "model.json",
        &report.model.serialize(&outcome.data.scaler)?,
    )?;
    let mut f = create(dir, "losses.csv")?;
    report.write_csv(&mut f)?;
    f.flush()?;
    Ok(TrainSummary {
        epochs: report.train_loss.len(),
        final_train_loss: report.train_loss.last().copied(),
        final_val_loss: report.val_loss.last().copied(),
        param_count: report.model.param_count(),
        model_file,
        loss_csv: dir.join("losses.csv"),
    })
}

pub fn load_model(path: &Path) -> Result<(TnmModel, crate::dataset::Scaler)> {
    TnmModel::deserialize(&fs::read_to_string(path)?)
}

/// Writes `eval_<split>.csv` (parity rows), `cdf_<split>.csv`,
/// `histogram_<split>.csv` and `summary_<split>.json`.
pub fn cmd_evaluate(model_file: &Path, cfg: &ExperimentConfig) -> Result<crate::metrics::Summary> {
    let (model, scaler) = load_model(model_file)?;
    check_model_matches(&model, cfg)?;
    let traj = cfg.load_trajectory()?;
    let report = evaluate(&model, &scaler, &traj, cfg.eval.split)?;
    let dir = &cfg.output_dir;
    let tag = cfg.eval.split.as_str();
    let mut f = create(dir, &format!("eval_{tag}.csv"))?;
    report.write_csv(&mut f)?;
    f.flush()?;
    let mut f = create(dir, &format!("cdf_{tag}.csv"))?;
    report.write_cdf_csv(&mut f)?;
    f.flush()?;
    let mut f = create(dir, &format!("histogram_{tag}.csv"))?;
    report.write_histogram_csv(cfg.eval.histogram_bins, &mut f)?;
    f.flush()?;
    let summary = report.summary();
    write_text(
        dir,
        &format!("summary_{tag}.json"),
        &to_json_string(&summary)?,
    )?;
    Ok(summary)
}

/// Writes `forecast.csv` and `forecast_summary.json`.
pub fn cmd_forecast(model_file: &Path, cfg: &ExperimentConfig) -> Result<crate::metrics::Summary> {
    let (model, scaler) = load_model(model_file)?;
    check_model_matches(&model, cfg)?;
    let traj = cfg.load_trajectory()?;
    let report = forecast(&model, &scaler, &traj, cfg)?;
    let dir = &cfg.output_dir;
    let mut f = create(dir, "forecast.csv")?;
    report.write_csv(&mut f)?;
    f.flush()?;
    let summary = report.summary();
    write_text(dir, "forecast_summary.json", &to_json_string(&summary)?)?;
    Ok(summary)
}

fn check_model_matches(model: &TnmModel, cfg: &ExperimentConfig) -> Result<()> {
    if model.topology().d() != cfg.model.d {
        return Err(TnmError::Shape {
            axis: "feature",
            expected: cfg.model.d,
            got: model.topology().d(),
        });
    }
    Ok(())
}

fn default_bond_dimensions() -> Vec<usize> {
    (2..=8).collect()
}

fn default_modes() -> Vec<ParamMode> {
    vec![ParamMode::Homogeneous, ParamMode::Inhomogeneous]
}

fn default_sweep_epochs() -> usize {
    SWEEP_EPOCHS
}

fn default_seeds() -> Vec<u64> {
    vec![0]
}

fn default_version() -> u32 {
    CONFIG_VERSION
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepConfig {
    #[serde(default = "default_version")]
    pub format_version: u32,
    #[serde(default)]
    pub base: ExperimentConfig,
    #[serde(default = "default_bond_dimensions")]
    pub bond_dimensions: Vec<usize>,
    #[serde(default = "default_modes")]
    pub modes: Vec<ParamMode>,
    #[serde(default = "default_sweep_epochs")]
    pub epochs: usize,
    #[serde(default = "default_seeds")]
    pub seeds: Vec<u64>,
}

impl Default for SweepConfig {
    fn default() -> Self {
        Self {
            format_version: CONFIG_VERSION,
            base: ExperimentConfig::default(),
            bond_dimensions: default_bond_dimensions(),
            modes: default_modes(),
            epochs: SWEEP_EPOCHS,
            seeds: default_seeds(),
        }
    }
}

impl SweepConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: Self = serde_json::from_str(text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_json(&fs::read_to_string(path)?)
    }

    pub fn to_json(&self) -> Result<String> {
        to_json_string(self)
    }

    pub fn validate(&self) -> Result<()> {
        check_version(self.format_version)?;
        self.base.validate()?;
        if self.bond_dimensions.is_empty() || self.bond_dimensions.contains(&0) {
            return Err(TnmError::Config(
                "bond_dimensions must be nonempty and positive".into(),
            ));
        }
        if self.modes.is_empty() || self.seeds.is_empty() {
            return Err(TnmError::Config(
                "sweep needs at least one mode and one seed".into(),
            ));
        }
        Ok(())
    }

    /// Every `(D, mode, seed)` cell in output order.
    pub fn cells(&self) -> Vec<(usize, ParamMode, u64)> {
        let mut cells = Vec::new();
        for &d in &self.bond_dimensions {
            for &m in &self.modes {
                for &s in &self.seeds {
                    cells.push((d, m, s));
                }
            }
        }
        cells
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub bond_dim: usize,
    pub mode: ParamMode,
    pub seed: u64,
    /// Final-epoch losses, or the failure message.
    pub outcome: std::result::Result<(f64, f64), String>,
}

/// Trains every cell for `sweep.epochs` epochs on one shared dataset. Cells
/// run in parallel; a failed cell is reported in its row.
pub fn run_sweep(sweep: &SweepConfig) -> Result<Vec<SweepRow>> {
    sweep.validate()?;
    let traj = sweep.base.load_trajectory()?;
    let data = prepare(&traj, DEFAULT_FRACTIONS)?;
    let rows = sweep
        .cells()
        .into_par_iter()
        .map(|(bond_dim, mode, seed)| {
            let mut cfg = sweep.base.clone().with_seed(seed);
            cfg.model.bond_dim = bond_dim;
            cfg.model.mode = mode;
            cfg.train.epochs = Some(sweep.epochs);
            let outcome = cfg
                .build_model()
                .and_then(|m| fit(m, &data, &cfg.train_config()))
                .map(|r| {
                    (
                        r.train_loss.last().copied().unwrap_or(f64::NAN),
                        r.val_loss.last().copied().unwrap_or(f64::NAN),
                    )
                })
                .map_err(|e| e.to_string());
            SweepRow {
                bond_dim,
                mode,
                seed,
                outcome,
            }
        })
        .collect();
    Ok(rows)
}

/// CSV `D,mode,seed,train_loss,val_loss,status`.
pub fn write_sweep_csv<W: Write>(rows: &[SweepRow], mut out: W) -> Result<()> {
    writeln!(out, "D,mode,seed,train_loss,val_loss,status")?;
    for r in rows {
        let (t, v, status) = match &r.outcome {
            Ok((t, v)) => (fmt_f64(*t), fmt_f64(*v), "ok".to_string()),
            Err(msg) => (
                "NaN".into(),
                "NaN".into(),
                format!("failed: {}", msg.replace([',', '\n'], ";")),
            ),
        };
        writeln!(
            out,
            "{},{},{},{},{},{}",
            r.bond_dim, r.mode, r.seed, t, v, status
        )?;
    }
    Ok(())
}

pub fn cmd_sweep(sweep: &SweepConfig) -> Result<(Vec<SweepRow>, PathBuf)> {
    let rows = run_sweep(sweep)?;
    let dir = &sweep.base.output_dir;
    let mut f = create(dir, "sweep.csv")?;
    write_sweep_csv(&rows, &mut f)?;
    f.flush()?;
    Ok((rows, dir.join("sweep.csv")))
}

/// Median of a nonempty list (mean of the middle two for even lengths).
pub fn median(values: &[f64]) -> f64 {
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n == 0 {
        return f64::NAN;
    }
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn config_round_trip_is_idempotent() {
        let cfg = ExperimentConfig::default();
        let text = cfg.to_json().unwrap();
        let back = ExperimentConfig::from_json(&text).unwrap();
        assert_eq!(back, cfg);
        assert_eq!(back.to_json().unwrap(), text);

        let sweep = SweepConfig::default();
        let text = sweep.to_json().unwrap();
        assert_eq!(
            SweepConfig::from_json(&text).unwrap().to_json().unwrap(),
            text
        );
    }

    #[test]
    fn partial_configs_take_defaults() {
        let cfg = ExperimentConfig::from_json(r#"{"model": {"mode": "homogeneous"}}"#).unwrap();
        assert_eq!(cfg.epochs(), 80);
        assert_eq!(cfg.horizon_threshold(), 1.9);
        assert_eq!(cfg.model.bond_dim, 8);
        let cfg = ExperimentConfig::from_json(r#"{"flow": {"kind": "rossler"}}"#).unwrap();
        assert_eq!(cfg.flow.rossler.c, 5.7);
        assert_eq!(cfg.epochs(), 60);
        assert_eq!(cfg.horizon_threshold(), 2.1);
    }

    #[test]
    fn unknown_keys_are_rejected() {
        assert!(ExperimentConfig::from_json(r#"{"modle": {}}"#).is_err());
        assert!(ExperimentConfig::from_json(r#"{"train": {"learning_rat": 0.1}}"#).is_err());
        assert!(
            ExperimentConfig::from_json(r#"{"flow": {"lorenz": {"sigma": 1, "r": 2}}}"#).is_err()
        );
        assert!(matches!(
            ExperimentConfig::from_json(r#"{"format_version": 2}"#),
            Err(TnmError::Version { found: 2, .. })
        ));
        assert!(ExperimentConfig::from_json(r#"{"model": {"d": 2}}"#).is_err());
    }

    #[test]
    fn sweep_cells_are_cartesian() {
        let sweep = SweepConfig::default();
        assert_eq!(sweep.cells().len(), 14);
        let sweep = SweepConfig {
            seeds: vec![1, 2, 3],
            ..Default::default()
        };
        let cells = sweep.cells();
        assert_eq!(cells.len(), 42);
        assert_eq!(cells[0], (2, ParamMode::Homogeneous, 1));
        assert_eq!(cells[41], (8, ParamMode::Inhomogeneous, 3));
        assert!(SweepConfig {
            bond_dimensions: vec![],
            ..Default::default()
        }
        .validate()
        .is_err());
    }

    #[test]
    fn sweep_csv_marks_failures() {
        let rows = vec![
            SweepRow {
                bond_dim: 2,
                mode: ParamMode::Homogeneous,
                seed: 0,
                outcome: Ok((0.5, 0.25)),
            },
            SweepRow {
                bond_dim: 3,
                mode: ParamMode::Inhomogeneous,
                seed: 1,
                outcome: Err("diverged, badly".into()),
            },
        ];
        let mut buf = Vec::new();
        write_sweep_csv(&rows, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], "D,mode,seed,train_loss,val_loss,status");
        assert_eq!(
            lines[1],
            "2,homogeneous,0,5.0000000000000000e-1,2.5000000000000000e-1,ok"
        );
        assert_eq!(
            lines[2],
            "3,inhomogeneous,1,NaN,NaN,failed: diverged; badly"
        );
    }

    #[test]
    fn median_values() {
        assert_eq!(median(&[3.0, 1.0, 2.0]), 2.0);
        assert_eq!(median(&[4.0, 1.0, 2.0, 3.0]), 2.5);
        assert!(median(&[]).is_nan());
    }
}
