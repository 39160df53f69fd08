//! Experiment runner for the `qillum` toolkit: parameter sweeps, the
//! measurement, squeezing, perturbation and concavity studies, a row cache,
//! and CSV/SVG/JSON artifacts.

pub mod cache;
pub mod config;
pub mod error;
pub mod output;
pub mod perturb;
pub mod studies;
pub mod sweep;

pub use error::{ExpError, Result};
