//! Step laws of the peeling random walk on critical O(2) loop-decorated
//! planar maps: synthesis from ring weights, validation, asymptotic regimes,
//! ladder-height Monte Carlo and independent oracles.

pub mod asymptotics;
pub mod error;
pub mod oracle;
pub mod report;
pub mod series;
pub mod special;
pub mod walk;
pub mod weights;

pub use error::{Error, Result};
