//! Tree tensor network forecasting of chaotic flows.
//!
//! The pipeline is: integrate a flow ([`dynamics`]), cut the trajectory into
//! seven-state windows and standardize them ([`dataset`]), train the tree of
//! rank-4 contractions ([`model`], [`training`]), then score one-step and
//! autoregressive predictions ([`metrics`]). [`experiment`] ties the stages
//! to JSON configs and the files the CLI writes.

pub mod dataset;
pub mod dynamics;
pub mod error;
pub mod experiment;
pub mod io;
pub mod metrics;
pub mod model;
pub mod tensor;
pub mod training;

pub use error::{Result, TnmError};
