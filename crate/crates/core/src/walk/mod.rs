//! The peeling random walk driven by `nu`: ladder variables by Monte Carlo,
//! the characteristic function, the ascending ladder series and the
//! Wiener-Hopf factorisation.

mod analytic;
mod ladder;
mod sampler;

pub use analytic::{
    abel_tail, asc_ladder_series, char_fn, char_fn_estimate, pre_renewal_check,
    wiener_hopf_residual, CharEstimate, PreRenewalReport, WienerHopfPoint, WienerHopfReport,
    ABEL_ORDER,
};
pub use ladder::{
    band_checks, histogram_csv, simulate_ladders, BandCheck, LadderHistogram, LadderStatistics,
};
pub use sampler::{build_sampler, Sampler, MAX_TRUNCATED_MASS};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct WalkConfig {
    pub master_seed: u64,
    pub n_walks: u64,
    /// Steps after which a ladder time still unseen is censored.
    pub horizon: u64,
    /// `nu` is sampled on `[-support_cut, support_cut]`.
    pub support_cut: i64,
    /// Number of independent streams; results depend on it.
    pub workers: usize,
}

impl Default for WalkConfig {
    fn default() -> Self {
        WalkConfig {
            master_seed: 0,
            n_walks: 100_000,
            horizon: 100_000,
            support_cut: 10_000,
            workers: std::thread::available_parallelism().map_or(1, |n| n.get()),
        }
    }
}

impl WalkConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n_walks < 1 || self.horizon < 1 || self.support_cut < 1 || self.workers < 1 {
            return Err(Error::InvalidInput(format!(
                "walk config needs n_walks, horizon, support_cut and workers >= 1, got {self:?}"
            )));
        }
        Ok(())
    }
}
