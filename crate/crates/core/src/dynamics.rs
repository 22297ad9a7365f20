//! Lorenz and Rössler vector fields, a fixed-step RK4 integrator, and
//! trajectory sampling.

use crate::error::{Result, TnmError};
use crate::io::{fmt_f64, parse_f64};
use serde::{Deserialize, Serialize};
use std::io::{BufRead, Write};

/// Any coordinate beyond this magnitude aborts integration.
pub const BLOW_UP_LIMIT: f64 = 1e6;

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(from = "[f64; 3]", into = "[f64; 3]")]
pub struct State3 {
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl State3 {
    pub const fn new(x: f64, y: f64, z: f64) -> Self {
        Self { x, y, z }
    }

    pub fn to_array(self) -> [f64; 3] {
        [self.x, self.y, self.z]
    }

    pub fn is_finite(&self) -> bool {
        self.x.is_finite() && self.y.is_finite() && self.z.is_finite()
    }

    pub fn max_abs(&self) -> f64 {
        self.x.abs().max(self.y.abs()).max(self.z.abs())
    }

    pub fn distance(&self, other: &State3) -> f64 {
        let (dx, dy, dz) = (self.x - other.x, self.y - other.y, self.z - other.z);
        (dx * dx + dy * dy + dz * dz).sqrt()
    }

    fn axpy(self, k: f64, d: State3) -> State3 {
        State3::new(self.x + k * d.x, self.y + k * d.y, self.z + k * d.z)
    }
}

impl From<[f64; 3]> for State3 {
    fn from(v: [f64; 3]) -> Self {
        Self::new(v[0], v[1], v[2])
    }
}

impl From<State3> for [f64; 3] {
    fn from(s: State3) -> Self {
        s.to_array()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FlowKind {
    Lorenz,
    Rossler,
}

impl std::str::FromStr for FlowKind {
    type Err = TnmError;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "lorenz" => Ok(FlowKind::Lorenz),
            "rossler" | "rössler" => Ok(FlowKind::Rossler),
            other => Err(TnmError::Config(format!("unknown flow `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LorenzParams {
    pub sigma: f64,
    pub rho: f64,
    pub beta: f64,
}

impl Default for LorenzParams {
    fn default() -> Self {
        Self {
            sigma: 10.0,
            rho: 28.0,
            beta: 8.0 / 3.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RosslerParams {
    pub a: f64,
    pub b: f64,
    pub c: f64,
}

impl Default for RosslerParams {
    fn default() -> Self {
        Self {
            a: 0.2,
            b: 0.2,
            c: 5.7,
        }
    }
}

/// Which flow to integrate and how to sample it. Parameters of the inactive
/// flow are carried along but ignored.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct FlowSpec {
    pub kind: FlowKind,
    pub lorenz: LorenzParams,
    pub rossler: RosslerParams,
    pub h: f64,
    pub sample_every: usize,
    pub n_samples: usize,
    pub x0: State3,
    pub transient_steps: usize,
}

impl Default for FlowSpec {
    fn default() -> Self {
        Self::lorenz()
    }
}

impl FlowSpec {
    pub fn lorenz() -> Self {
        Self {
            kind: FlowKind::Lorenz,
            lorenz: LorenzParams::default(),
            rossler: RosslerParams::default(),
            h: 0.01,
            sample_every: 10,
            n_samples: 3000,
            x0: State3::new(1.0, 1.0, 1.0),
            transient_steps: 1000,
        }
    }

    pub fn rossler() -> Self {
        Self {
            kind: FlowKind::Rossler,
            ..Self::lorenz()
        }
    }

    pub fn with_kind(kind: FlowKind) -> Self {
        match kind {
            FlowKind::Lorenz => Self::lorenz(),
            FlowKind::Rossler => Self::rossler(),
        }
    }

    pub fn dt_sample(&self) -> f64 {
        self.h * self.sample_every as f64
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.h > 0.0 && self.h.is_finite()) {
            return Err(TnmError::Config(format!(
                "integrator step h must be positive, got {}",
                self.h
            )));
        }
        if self.sample_every == 0 {
            return Err(TnmError::Config("sample_every must be at least 1".into()));
        }
        if self.n_samples == 0 {
            return Err(TnmError::Config("n_samples must be at least 1".into()));
        }
        if !self.x0.is_finite() {
            return Err(TnmError::NonFinite("initial condition"));
        }
        Ok(())
    }

    pub fn rhs(&self, s: State3) -> State3 {
        match self.kind {
            FlowKind::Lorenz => {
                let p = self.lorenz;
                lorenz_rhs(s, p.sigma, p.rho, p.beta)
            }
            FlowKind::Rossler => {
                let p = self.rossler;
                rossler_rhs(s, p.a, p.b, p.c)
            }
        }
    }
}

pub fn lorenz_rhs(s: State3, sigma: f64, rho: f64, beta: f64) -> State3 {
    State3::new(
        sigma * (s.y - s.x),
        s.x * (rho - s.z) - s.y,
        s.x * s.y - beta * s.z,
    )
}

pub fn rossler_rhs(s: State3, a: f64, b: f64, c: f64) -> State3 {
    State3::new(-s.y - s.z, s.x + a * s.y, b + s.z * (s.x - c))
}

/// One classical RK4 step of `ds/dt = f(s)`.
pub fn rk4_step_with<F: Fn(State3) -> State3>(f: F, s: State3, h: f64) -> State3 {
    let k1 = f(s);
    let k2 = f(s.axpy(0.5 * h, k1));
    let k3 = f(s.axpy(0.5 * h, k2));
    let k4 = f(s.axpy(h, k3));
    let sixth = h / 6.0;
    State3::new(
        s.x + sixth * (k1.x + 2.0 * k2.x + 2.0 * k3.x + k4.x),
        s.y + sixth * (k1.y + 2.0 * k2.y + 2.0 * k3.y + k4.y),
        s.z + sixth * (k1.z + 2.0 * k2.z + 2.0 * k3.z + k4.z),
    )
}

/// One RK4 step of the selected flow. A blow-up is reported as step 0; use
/// [`generate_trajectory`] for absolute step indices.
pub fn rk4_step(flow: &FlowSpec, s: State3) -> Result<State3> {
    advance(flow, s, 0)
}

fn advance(flow: &FlowSpec, s: State3, step: usize) -> Result<State3> {
    let next = rk4_step_with(|v| flow.rhs(v), s, flow.h);
    if !next.is_finite() || next.max_abs() > BLOW_UP_LIMIT {
        return Err(TnmError::Integration { step });
    }
    Ok(next)
}

#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub dt_sample: f64,
    pub states: Vec<State3>,
}

impl Trajectory {
    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    /// CSV with header `t,x,y,z`, `t = index * dt_sample`.
    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "t,x,y,z")?;
        for (i, s) in self.states.iter().enumerate() {
            writeln!(
                out,
                "{},{},{},{}",
                fmt_f64(i as f64 * self.dt_sample),
                fmt_f64(s.x),
                fmt_f64(s.y),
                fmt_f64(s.z)
            )?;
        }
        Ok(())
    }

    pub fn read_csv<R: BufRead>(input: R) -> Result<Self> {
        let mut lines = input.lines();
        let header = lines
            .next()
            .transpose()?
            .ok_or_else(|| TnmError::Deserialize("empty trajectory file".into()))?;
        if header.trim() != "t,x,y,z" {
            return Err(TnmError::Deserialize(format!(
                "unexpected trajectory header `{header}`"
            )));
        }
        let mut times = Vec::new();
        let mut states = Vec::new();
        for (row, line) in lines.enumerate() {
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            let cols: Vec<&str> = line.split(',').collect();
            if cols.len() != 4 {
                return Err(TnmError::Deserialize(format!(
                    "row {}: expected 4 columns",
                    row + 1
                )));
            }
            times.push(parse_f64(cols[0])?);
            states.push(State3::new(
                parse_f64(cols[1])?,
                parse_f64(cols[2])?,
                parse_f64(cols[3])?,
            ));
        }
        let dt_sample = if times.len() >= 2 {
            times[1] - times[0]
        } else {
            0.0
        };
        Ok(Self { dt_sample, states })
    }
}

/// Discards `transient_steps` RK4 steps, then records every
/// `sample_every`-th state until `n_samples` are collected. The first record
/// is the post-transient state itself.
pub fn generate_trajectory(flow: &FlowSpec) -> Result<Trajectory> {
    flow.validate()?;
    let mut s = flow.x0;
    let mut step = 0usize;
    for _ in 0..flow.transient_steps {
        step += 1;
        s = advance(flow, s, step)?;
    }
    let mut states = Vec::with_capacity(flow.n_samples);
    states.push(s);
    while states.len() < flow.n_samples {
        for _ in 0..flow.sample_every {
            step += 1;
            s = advance(flow, s, step)?;
        }
        states.push(s);
    }
    Ok(Trajectory {
        dt_sample: flow.dt_sample(),
        states,
    })
}
