use std::collections::BTreeMap;
use std::fmt::Write;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{Sampler, WalkConfig};
use crate::error::Result;
use crate::report::fmt_f64;
use crate::series::sqrt_ladder_coeffs;

/// Counts of first ladder heights and epochs; heights of the descending
/// ladder are stored as magnitudes.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct LadderHistogram {
    pub heights: BTreeMap<i64, u64>,
    pub epochs: BTreeMap<u64, u64>,
    pub censored: u64,
}

impl LadderHistogram {
    fn record(&mut self, hit: Option<(u64, i64)>) {
        match hit {
            Some((n, h)) => {
                *self.heights.entry(h).or_insert(0) += 1;
                *self.epochs.entry(n).or_insert(0) += 1;
            }
            None => self.censored += 1,
        }
    }

    fn merge(&mut self, other: &LadderHistogram) {
        for (&h, &c) in &other.heights {
            *self.heights.entry(h).or_insert(0) += c;
        }
        for (&n, &c) in &other.epochs {
            *self.epochs.entry(n).or_insert(0) += c;
        }
        self.censored += other.censored;
    }

    pub fn count(&self, height: i64) -> u64 {
        self.heights.get(&height).copied().unwrap_or(0)
    }

    pub fn total(&self) -> u64 {
        self.heights.values().sum::<u64>() + self.censored
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LadderStatistics {
    pub n_walks: u64,
    pub horizon: u64,
    pub truncated_mass: f64,
    /// `H^>=_1`, `T^>=_1`: first `n >= 1` with `S_n >= 0`.
    pub first_weak_ascending: LadderHistogram,
    /// `|H^<_1|`, `T^<_1`: first `n >= 1` with `S_n < 0`.
    pub first_strict_descending: LadderHistogram,
}

fn run_chunk(sampler: &Sampler, seed: u64, stream: u64, walks: u64, horizon: u64) -> [LadderHistogram; 2] {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    let mut asc = LadderHistogram::default();
    let mut desc = LadderHistogram::default();
    for _ in 0..walks {
        let mut s = 0i64;
        let mut up = None;
        let mut down = None;
        for n in 1..=horizon {
            s += sampler.sample(&mut rng);
            if s >= 0 {
                up.get_or_insert((n, s));
            } else {
                down.get_or_insert((n, -s));
            }
            if up.is_some() && down.is_some() {
                break;
            }
        }
        asc.record(up);
        desc.record(down);
    }
    [asc, desc]
}

/// Runs `n_walks` walks from 0, split into `workers` contiguous blocks. Block
/// `w` draws from the ChaCha8 stream `w` of `master_seed`, so the output is
/// fixed by `(master_seed, n_walks, horizon, workers)`.
pub fn simulate_ladders(sampler: &Sampler, cfg: &WalkConfig) -> Result<LadderStatistics> {
    cfg.validate()?;
    let w = cfg.workers as u64;
    let parts: Vec<[LadderHistogram; 2]> = (0..w)
        .into_par_iter()
        .map(|i| {
            let lo = cfg.n_walks * i / w;
            let hi = cfg.n_walks * (i + 1) / w;
            run_chunk(sampler, cfg.master_seed, i, hi - lo, cfg.horizon)
        })
        .collect();
    let mut asc = LadderHistogram::default();
    let mut desc = LadderHistogram::default();
    for [a, d] in &parts {
        asc.merge(a);
        desc.merge(d);
    }
    Ok(LadderStatistics {
        n_walks: cfg.n_walks,
        horizon: cfg.horizon,
        truncated_mass: sampler.truncated_mass(),
        first_weak_ascending: asc,
        first_strict_descending: desc,
    })
}

/// Empirical frequency of one value against its predicted probability.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BandCheck {
    pub value: i64,
    pub count: u64,
    pub empirical: f64,
    pub expected: f64,
    /// Binomial standard deviation of the frequency.
    pub sigma: f64,
    pub z_score: f64,
}

impl BandCheck {
    /// `count` hits of `value` in `n` trials against probability `p`.
    pub fn new(value: i64, count: u64, n: u64, p: f64) -> Self {
        band(value, count, n, p)
    }
}

fn band(value: i64, count: u64, n: u64, p: f64) -> BandCheck {
    let nf = n as f64;
    let sigma = (p * (1.0 - p) / nf).sqrt();
    let empirical = count as f64 / nf;
    BandCheck {
        value,
        count,
        empirical,
        expected: p,
        sigma,
        z_score: if sigma > 0.0 {
            (empirical - p) / sigma
        } else {
            f64::NAN
        },
    }
}

/// `|H^<_1| = k` for `k = 1..=k_max` against the coefficients of `1 - sqrt(1 - z)`.
pub fn band_checks(stats: &LadderStatistics, k_max: i64) -> Vec<BandCheck> {
    let mu = sqrt_ladder_coeffs(k_max as usize + 1);
    (1..=k_max)
        .map(|k| {
            band(
                k,
                stats.first_strict_descending.count(k),
                stats.n_walks,
                mu[k as usize],
            )
        })
        .collect()
}

/// Rows `ladder_type,value,count,expected_probability,z_score`. Descending
/// heights are compared with the universal law; ascending heights with
/// `ascending_law` when given. Missing predictions leave the last two
/// columns empty.
pub fn histogram_csv(stats: &LadderStatistics, ascending_law: Option<&[f64]>) -> String {
    let mut out = String::from("ladder_type,value,count,expected_probability,z_score\n");
    let n = stats.n_walks;
    let mut row = |kind: &str, value: String, count: u64, p: Option<f64>| {
        let (e, z) = match p {
            Some(p) => {
                let b = band(0, count, n, p);
                (fmt_f64(p), fmt_f64(b.z_score))
            }
            None => (String::new(), String::new()),
        };
        let _ = writeln!(out, "{kind},{value},{count},{e},{z}");
    };

    let asc = &stats.first_weak_ascending;
    let mut asc_values: Vec<i64> = asc.heights.keys().copied().collect();
    if let Some(law) = ascending_law {
        asc_values.extend(0..law.len().min(16) as i64);
        asc_values.sort_unstable();
        asc_values.dedup();
    }
    for h in asc_values {
        let p = ascending_law.and_then(|l| l.get(h as usize).copied());
        row("ascending_height", h.to_string(), asc.count(h), p);
    }
    for (&t, &c) in &asc.epochs {
        row("ascending_epoch", t.to_string(), c, None);
    }
    row("ascending_censored", String::new(), asc.censored, None);

    let desc = &stats.first_strict_descending;
    let top = desc.heights.keys().next_back().copied().unwrap_or(0).max(8);
    let mu = sqrt_ladder_coeffs(top as usize + 1);
    let mut desc_values: Vec<i64> = desc.heights.keys().copied().chain(1..=8).collect();
    desc_values.sort_unstable();
    desc_values.dedup();
    for h in desc_values {
        row("descending_height", h.to_string(), desc.count(h), Some(mu[h as usize]));
    }
    for (&t, &c) in &desc.epochs {
        row("descending_epoch", t.to_string(), c, None);
    }
    row("descending_censored", String::new(), desc.censored, None);
    out
}
