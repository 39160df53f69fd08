//! Numerical workbench for continuous-variable illumination viewed as a
//! binary communication channel: truncated Fock-space states, Gaussian
//! covariance-matrix tools, Holevo and accessible-information bounds, and
//! Gaussian discord.

pub mod discord;
pub mod error;
pub mod fock;
pub mod gaussian;
pub mod info;
pub mod linalg;
pub mod quadrature;
pub mod scenarios;
pub mod truncation;

pub use error::{Error, Result};
