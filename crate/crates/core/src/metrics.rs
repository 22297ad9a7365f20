//! One-step evaluation, autoregressive forecasting, and the error statistics
//! reported for both: RMSE, pointwise Euclidean errors, empirical CDF,
//! running RMSE and the forecast horizon in Lyapunov times.

use crate::dataset::{Scaler, WindowPair, WINDOW};
use crate::dynamics::State3;
use crate::error::{Result, TnmError};
use crate::io::fmt_f64;
use crate::model::TnmModel;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::io::Write;

/// Largest Lyapunov exponent of the Lorenz flow at the standard parameters.
pub const LORENZ_LAMBDA1: f64 = 0.9056;

/// Threshold used for the fraction of "small" pointwise errors.
pub const SMALL_ERROR: f64 = 1.0;

/// Anything that maps a standardized window to the standardized next state.
pub trait Predictor: Sync {
    fn predict_next(&self, window: &[State3; WINDOW]) -> Result<State3>;
}

impl Predictor for TnmModel {
    fn predict_next(&self, window: &[State3; WINDOW]) -> Result<State3> {
        if self.topology().d() != 3 {
            return Err(TnmError::Shape {
                axis: "feature",
                expected: 3,
                got: self.topology().d(),
            });
        }
        let out = self.predict(&window.map(|s| s.to_array()))?;
        Ok(State3::new(out[0], out[1], out[2]))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EvalReport {
    pub truth: Vec<State3>,
    pub predicted: Vec<State3>,
    pub rmse: f64,
    pub errors: Vec<f64>,
    pub cdf_points: Vec<(f64, f64)>,
    pub fraction_below_1: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ForecastReport {
    pub truth: Vec<State3>,
    pub predicted: Vec<State3>,
    pub errors: Vec<f64>,
    pub crmse: Vec<f64>,
    pub threshold: f64,
    pub horizon_steps: usize,
    pub horizon_lyapunov: f64,
    pub lambda1: f64,
    pub dt: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub rmse: f64,
    pub fraction_below_1: f64,
    pub horizon_steps: Option<usize>,
    pub horizon_lyapunov: Option<f64>,
}

pub fn euclidean_errors(predicted: &[State3], truth: &[State3]) -> Vec<f64> {
    predicted
        .iter()
        .zip(truth)
        .map(|(p, t)| p.distance(t))
        .collect()
}

/// `sqrt(mean(delta^2))`; zero for an empty list.
pub fn rmse(errors: &[f64]) -> f64 {
    if errors.is_empty() {
        return 0.0;
    }
    (errors.iter().map(|e| e * e).sum::<f64>() / errors.len() as f64).sqrt()
}

/// `crmse[k-1] = sqrt(k^{-1} sum_{i<=k} delta_i^2)`.
pub fn running_rmse(errors: &[f64]) -> Vec<f64> {
    let mut acc = 0.0;
    errors
        .iter()
        .enumerate()
        .map(|(i, e)| {
            acc += e * e;
            (acc / (i + 1) as f64).sqrt()
        })
        .collect()
}

pub fn fraction_at_most(errors: &[f64], bound: f64) -> f64 {
    if errors.is_empty() {
        return 0.0;
    }
    errors.iter().filter(|&&e| e <= bound).count() as f64 / errors.len() as f64
}

/// Empirical CDF sampled at each distinct error value.
pub fn cdf(errors: &[f64]) -> Vec<(f64, f64)> {
    let mut sorted = errors.to_vec();
    sorted.sort_by(f64::total_cmp);
    let n = sorted.len() as f64;
    let mut out: Vec<(f64, f64)> = Vec::new();
    for (i, &v) in sorted.iter().enumerate() {
        let frac = (i + 1) as f64 / n;
        match out.last_mut() {
            Some(last) if last.0 == v => last.1 = frac,
            _ => out.push((v, frac)),
        }
    }
    out
}

/// `bins` equal-width bins over `[0, max(errors)]`, as `(lo, hi, count)`.
pub fn histogram(errors: &[f64], bins: usize) -> Vec<(f64, f64, usize)> {
    if errors.is_empty() || bins == 0 {
        return Vec::new();
    }
    let max = errors.iter().copied().fold(0.0, f64::max);
    let width = if max > 0.0 { max / bins as f64 } else { 1.0 };
    let mut counts = vec![0usize; bins];
    for &e in errors {
        let k = ((e / width) as usize).min(bins - 1);
        counts[k] += 1;
    }
    counts
        .into_iter()
        .enumerate()
        .map(|(k, c)| (k as f64 * width, (k + 1) as f64 * width, c))
        .collect()
}

/// Number of leading steps whose running RMSE stays strictly below
/// `threshold`.
pub fn horizon(crmse: &[f64], threshold: f64) -> usize {
    crmse.iter().take_while(|&&c| c < threshold).count()
}

/// Horizon expressed in Lyapunov times, `steps * dt * lambda1`.
pub fn lyapunov_times(steps: usize, dt: f64, lambda1: f64) -> f64 {
    steps as f64 * dt * lambda1
}

/// Predicts every pair and reports errors in original units. `pairs` must be
/// standardized with `scaler`.
pub fn predict_one_step<P: Predictor + ?Sized>(
    model: &P,
    scaler: &Scaler,
    pairs: &[WindowPair],
) -> Result<EvalReport> {
    scaler.validate()?;
    let predicted = pairs
        .par_iter()
        .map(|p| {
            model
                .predict_next(&p.window)
                .map(|s| scaler.inverse_transform(&s))
        })
        .collect::<Result<Vec<_>>>()?;
    let truth: Vec<State3> = pairs
        .iter()
        .map(|p| scaler.inverse_transform(&p.target))
        .collect();
    let errors = euclidean_errors(&predicted, &truth);
    Ok(EvalReport {
        rmse: rmse(&errors),
        cdf_points: cdf(&errors),
        fraction_below_1: fraction_at_most(&errors, SMALL_ERROR),
        errors,
        truth,
        predicted,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HorizonSettings {
    pub threshold: f64,
    pub lambda1: f64,
    pub dt: f64,
}

/// Autoregressive rollout from `seed_window` (original units). Each
/// prediction is appended to the window and the oldest state dropped.
pub fn recursive_forecast<P: Predictor + ?Sized>(
    model: &P,
    scaler: &Scaler,
    seed_window: &[State3; WINDOW],
    n_steps: usize,
    truth: &[State3],
    settings: HorizonSettings,
) -> Result<ForecastReport> {
    scaler.validate()?;
    if !(settings.threshold > 0.0) || !(settings.dt > 0.0) {
        return Err(TnmError::Config(
            "horizon threshold and dt must be positive".into(),
        ));
    }
    if n_steps > truth.len() {
        return Err(TnmError::InsufficientData {
            needed: n_steps,
            got: truth.len(),
        });
    }
    let mut window = seed_window.map(|s| scaler.transform_state(&s));
    let mut predicted = Vec::with_capacity(n_steps);
    for _ in 0..n_steps {
        let next = model.predict_next(&window)?;
        window.rotate_left(1);
        window[WINDOW - 1] = next;
        predicted.push(scaler.inverse_transform(&next));
    }
    let truth = truth[..n_steps].to_vec();
    let errors = euclidean_errors(&predicted, &truth);
    let crmse = running_rmse(&errors);
    let steps = horizon(&crmse, settings.threshold);
    Ok(ForecastReport {
        horizon_lyapunov: lyapunov_times(steps, settings.dt, settings.lambda1),
        horizon_steps: steps,
        threshold: settings.threshold,
        lambda1: settings.lambda1,
        dt: settings.dt,
        truth,
        predicted,
        errors,
        crmse,
    })
}

fn write_rows<W: Write>(
    out: &mut W,
    truth: &[State3],
    predicted: &[State3],
    errors: &[f64],
    crmse: &[f64],
) -> Result<()> {
    writeln!(
        out,
        "step,true_x,true_y,true_z,pred_x,pred_y,pred_z,delta,crmse"
    )?;
    for (i, (((t, p), e), c)) in truth
        .iter()
        .zip(predicted)
        .zip(errors)
        .zip(crmse)
        .enumerate()
    {
        writeln!(
            out,
            "{},{},{},{},{},{},{},{},{}",
            i + 1,
            fmt_f64(t.x),
            fmt_f64(t.y),
            fmt_f64(t.z),
            fmt_f64(p.x),
            fmt_f64(p.y),
            fmt_f64(p.z),
            fmt_f64(*e),
            fmt_f64(*c)
        )?;
    }
    Ok(())
}

impl EvalReport {
    pub fn summary(&self) -> Summary {
        Summary {
            rmse: self.rmse,
            fraction_below_1: self.fraction_below_1,
            horizon_steps: None,
            horizon_lyapunov: None,
        }
    }

    /// Per-pair rows; `crmse` is the running RMSE in pair order.
    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<()> {
        write_rows(
            &mut out,
            &self.truth,
            &self.predicted,
            &self.errors,
            &running_rmse(&self.errors),
        )
    }

    pub fn write_cdf_csv<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "delta,fraction")?;
        for (v, f) in &self.cdf_points {
            writeln!(out, "{},{}", fmt_f64(*v), fmt_f64(*f))?;
        }
        Ok(())
    }

    pub fn write_histogram_csv<W: Write>(&self, bins: usize, mut out: W) -> Result<()> {
        writeln!(out, "bin_lo,bin_hi,count")?;
        for (lo, hi, c) in histogram(&self.errors, bins) {
            writeln!(out, "{},{},{}", fmt_f64(lo), fmt_f64(hi), c)?;
        }
        Ok(())
    }
}

impl ForecastReport {
    pub fn summary(&self) -> Summary {
        Summary {
            rmse: rmse(&self.errors),
            fraction_below_1: fraction_at_most(&self.errors, SMALL_ERROR),
            horizon_steps: Some(self.horizon_steps),
            horizon_lyapunov: Some(self.horizon_lyapunov),
        }
    }

    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<()> {
        write_rows(
            &mut out,
            &self.truth,
            &self.predicted,
            &self.errors,
            &self.crmse,
        )
    }
}
