//! Windowed supervised pairs (seven past states to the next one), chronological
//! splits and per-feature standardization fitted on the training block only.

use crate::dynamics::{State3, Trajectory};
use crate::error::{Result, TnmError};
use crate::io::{fmt_f64, parse_f64};
use serde::{Deserialize, Serialize};
use std::io::{BufRead, Write};

/// Number of past states fed to the model.
pub const WINDOW: usize = 7;

/// Lower bound applied to every fitted standard deviation.
pub const STD_FLOOR: f64 = 1e-8;

pub const DEFAULT_FRACTIONS: (f64, f64, f64) = (0.4, 0.5, 0.1);

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WindowPair {
    pub window: [State3; WINDOW],
    pub target: State3,
}

/// Pair `k` has window `states[k..k + 7]` and target `states[k + 7]`.
pub fn build_windows(traj: &Trajectory) -> Result<Vec<WindowPair>> {
    let states = &traj.states;
    if states.len() < WINDOW + 1 {
        return Err(TnmError::InsufficientData {
            needed: WINDOW + 1,
            got: states.len(),
        });
    }
    Ok(states
        .windows(WINDOW + 1)
        .map(|w| {
            let mut window = [State3::default(); WINDOW];
            window.copy_from_slice(&w[..WINDOW]);
            WindowPair {
                window,
                target: w[WINDOW],
            }
        })
        .collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scaler {
    pub mean: [f64; 3],
    pub std: [f64; 3],
}

impl Scaler {
    pub const IDENTITY: Scaler = Scaler {
        mean: [0.0; 3],
        std: [1.0; 3],
    };

    pub fn validate(&self) -> Result<()> {
        let finite = self.mean.iter().chain(&self.std).all(|v| v.is_finite());
        if !finite {
            return Err(TnmError::NonFinite("scaler"));
        }
        if self.std.iter().any(|&s| s <= 0.0) {
            return Err(TnmError::Invariant("scaler std must be positive".into()));
        }
        Ok(())
    }

    pub fn transform_state(&self, s: &State3) -> State3 {
        let v = s.to_array();
        State3::from(std::array::from_fn(|i| (v[i] - self.mean[i]) / self.std[i]))
    }

    pub fn inverse_transform(&self, s: &State3) -> State3 {
        let v = s.to_array();
        State3::from(std::array::from_fn(|i| v[i] * self.std[i] + self.mean[i]))
    }

    pub fn transform(&self, pair: &WindowPair) -> WindowPair {
        WindowPair {
            window: pair.window.map(|s| self.transform_state(&s)),
            target: self.transform_state(&pair.target),
        }
    }
}

/// Per-feature mean and population standard deviation over every state that
/// appears in a training window or target. Overlapping windows share states,
/// so each distinct trajectory index is counted once.
pub fn fit_scaler(train: &[WindowPair]) -> Result<Scaler> {
    if train.is_empty() {
        return Err(TnmError::InsufficientData { needed: 1, got: 0 });
    }
    let states = distinct_states(train);
    let n = states.len() as f64;
    let mut mean = [0.0; 3];
    for s in &states {
        for (m, v) in mean.iter_mut().zip(s.to_array()) {
            *m += v;
        }
    }
    mean.iter_mut().for_each(|m| *m /= n);
    let mut var = [0.0; 3];
    for s in &states {
        for ((acc, v), m) in var.iter_mut().zip(s.to_array()).zip(mean) {
            *acc += (v - m) * (v - m);
        }
    }
    let std = var.map(|v| (v / n).sqrt().max(STD_FLOOR));
    Ok(Scaler { mean, std })
}

/// States covered by a stride-1 run of windows. When consecutive pairs do not
/// overlap as expected (hand-built fixtures), every window state and target is
/// used as-is.
fn distinct_states(pairs: &[WindowPair]) -> Vec<State3> {
    let chained = pairs.windows(2).all(|w| {
        w[0].window[1..] == w[1].window[..WINDOW - 1] && w[0].target == w[1].window[WINDOW - 1]
    });
    if chained {
        let mut out: Vec<State3> = pairs[0].window.to_vec();
        out.extend(pairs.iter().map(|p| p.target));
        out
    } else {
        pairs
            .iter()
            .flat_map(|p| p.window.iter().copied().chain(std::iter::once(p.target)))
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SplitDataset {
    pub train: Vec<WindowPair>,
    pub val: Vec<WindowPair>,
    pub test: Vec<WindowPair>,
    pub scaler: Scaler,
}

impl SplitDataset {
    pub fn counts(&self) -> (usize, usize, usize) {
        (self.train.len(), self.val.len(), self.test.len())
    }
}

/// Contiguous blocks in chronological order with sizes
/// `floor(f_train * P)`, `floor(f_val * P)` and the remainder.
pub fn split_chronological(
    pairs: &[WindowPair],
    fractions: (f64, f64, f64),
) -> Result<(Vec<WindowPair>, Vec<WindowPair>, Vec<WindowPair>)> {
    let (ft, fv, fs) = fractions;
    if !(ft > 0.0 && fv > 0.0 && fs > 0.0) || ((ft + fv + fs) - 1.0).abs() > 1e-9 {
        return Err(TnmError::Config(format!(
            "split fractions must be positive and sum to 1, got ({ft}, {fv}, {fs})"
        )));
    }
    let p = pairs.len();
    let n_train = (ft * p as f64).floor() as usize;
    let n_val = (fv * p as f64).floor() as usize;
    let n_test = p.saturating_sub(n_train + n_val);
    if n_train == 0 || n_val == 0 || n_test == 0 {
        return Err(TnmError::Config(format!(
            "{p} pairs give an empty split ({n_train}/{n_val}/{n_test})"
        )));
    }
    Ok((
        pairs[..n_train].to_vec(),
        pairs[n_train..n_train + n_val].to_vec(),
        pairs[n_train + n_val..].to_vec(),
    ))
}

/// Windows, splits, fits the scaler on the training block and standardizes
/// all three blocks with it.
pub fn prepare(traj: &Trajectory, fractions: (f64, f64, f64)) -> Result<SplitDataset> {
    let pairs = build_windows(traj)?;
    let (train, val, test) = split_chronological(&pairs, fractions)?;
    let scaler = fit_scaler(&train)?;
    let apply = |v: Vec<WindowPair>| v.iter().map(|p| scaler.transform(p)).collect::<Vec<_>>();
    Ok(SplitDataset {
        train: apply(train),
        val: apply(val),
        test: apply(test),
        scaler,
    })
}

const PAIR_COLUMNS: usize = 3 * WINDOW + 3;

/// One row per pair: 21 window values (`w0_x, w0_y, w0_z, ...`) then the
/// target.
pub fn write_pairs_csv<W: Write>(pairs: &[WindowPair], mut out: W) -> Result<()> {
    let mut header: Vec<String> = (0..WINDOW)
        .flat_map(|k| ["x", "y", "z"].map(|c| format!("w{k}_{c}")))
        .collect();
    header.extend(["target_x", "target_y", "target_z"].map(String::from));
    writeln!(out, "{}", header.join(","))?;
    for p in pairs {
        let row: Vec<String> = p
            .window
            .iter()
            .chain(std::iter::once(&p.target))
            .flat_map(|s| s.to_array())
            .map(fmt_f64)
            .collect();
        writeln!(out, "{}", row.join(","))?;
    }
    Ok(())
}

pub fn read_pairs_csv<R: BufRead>(input: R) -> Result<Vec<WindowPair>> {
    let mut lines = input.lines();
    let header = lines
        .next()
        .transpose()?
        .ok_or_else(|| TnmError::Deserialize("empty dataset file".into()))?;
    if header.split(',').count() != PAIR_COLUMNS {
        return Err(TnmError::Deserialize(format!(
            "dataset header must have {PAIR_COLUMNS} columns"
        )));
    }
    let mut pairs = Vec::new();
    for (row, line) in lines.enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let vals = line.split(',').map(parse_f64).collect::<Result<Vec<_>>>()?;
        if vals.len() != PAIR_COLUMNS {
            return Err(TnmError::Deserialize(format!(
                "row {}: expected {PAIR_COLUMNS} values, got {}",
                row + 1,
                vals.len()
            )));
        }
        let state = |k: usize| State3::new(vals[3 * k], vals[3 * k + 1], vals[3 * k + 2]);
        pairs.push(WindowPair {
            window: std::array::from_fn(state),
            target: state(WINDOW),
        });
    }
    Ok(pairs)
}
