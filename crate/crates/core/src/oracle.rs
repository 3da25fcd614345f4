//! Brute-force counterparts of the closed forms: direct truncated sums for
//! `nu`, exact rational convolution powers, and a loop-equation residual for
//! weight families.

use std::f64::consts::LN_2;

use num_rational::BigRational;
use num_traits::{One, Signed, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::series::{direct_nu_sum, series_tail_bound, FCoefficients, GSequence};
use crate::weights::{builtin_example, BuiltinName, WeightFamily};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DirectNu {
    pub k: i64,
    pub value: f64,
    pub tail_bound: f64,
}

/// `nu(k)` from the first `m` terms of its defining series, with a rigorous
/// bound on the rest.
pub fn direct_nu(g: &GSequence, k: i64, m: usize) -> Result<DirectNu> {
    Ok(direct_nu_many(g, &[k], m)?[0])
}

/// [`direct_nu`] for several `k` sharing one table of `f`.
pub fn direct_nu_many(g: &GSequence, ks: &[i64], m: usize) -> Result<Vec<DirectNu>> {
    // checks m > 2 * support before the table is built
    series_tail_bound(g, m, 0)?;
    let f = FCoefficients::new(g).f_table(m);
    ks.iter()
        .map(|&k| {
            Ok(DirectNu {
                k,
                value: direct_nu_sum(&f, k),
                tail_bound: series_tail_bound(g, m, k)?,
            })
        })
        .collect()
}

/// `table[p][l] = mu^{*p}(l)` for `p <= d` and `l <= ell_max`, exactly.
pub fn exact_convolution_powers(
    mu: &[BigRational],
    d: usize,
    ell_max: usize,
) -> Result<Vec<Vec<BigRational>>> {
    let mut mass = BigRational::zero();
    for (k, m) in mu.iter().enumerate() {
        if m.is_negative() {
            return Err(Error::InvalidInput(format!("mu({k}) is negative")));
        }
        mass += m;
    }
    if mass > BigRational::one() {
        return Err(Error::InvalidInput("mu has total mass above one".into()));
    }
    let width = ell_max + 1;
    let mut delta = vec![BigRational::zero(); width];
    delta[0] = BigRational::one();
    let mut table = vec![delta];
    for p in 1..=d {
        let prev = &table[p - 1];
        let mut row = vec![BigRational::zero(); width];
        for (l, out) in row.iter_mut().enumerate() {
            for (m, mu_m) in mu.iter().enumerate().take(l + 1) {
                if !mu_m.is_zero() && !prev[l - m].is_zero() {
                    *out += mu_m * &prev[l - m];
                }
            }
        }
        table.push(row);
    }
    Ok(table)
}

/// Index convention of the loop equation
/// `W(l) = sum_k q_{k + q_offset} W(l+k-1) + sum_{l1+l2 = l - pair_offset} W(l1) W(l2)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct TutteConvention {
    pub q_offset: i64,
    pub pair_offset: i64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TutteCalibration {
    pub convention: TutteConvention,
    /// Largest normalized residual on the reference family.
    pub reference_residual: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TutteResidual {
    pub ell: i64,
    pub truncation: usize,
    /// `|W(l) - rhs| / W(l)`.
    pub residual: f64,
    /// `log W(l)`, to recover the absolute residual.
    pub log_w: f64,
}

const CANDIDATES: [TutteConvention; 4] = [
    TutteConvention { q_offset: 0, pair_offset: 1 },
    TutteConvention { q_offset: 0, pair_offset: 0 },
    TutteConvention { q_offset: 1, pair_offset: 1 },
    TutteConvention { q_offset: 1, pair_offset: 0 },
];
const CALIBRATION_TRUNCATION: usize = 100_000;
const CALIBRATION_TOL: f64 = 1e-9;

fn residual_with(
    wf: &WeightFamily,
    ell: i64,
    truncation: usize,
    conv: TutteConvention,
) -> Result<TutteResidual> {
    if ell < 1 || truncation < 1 {
        return Err(Error::Precondition(format!(
            "loop equation needs l >= 1 and truncation >= 1, got l={ell}, truncation={truncation}"
        )));
    }
    let nu = wf.nu();
    let ln_c = wf.c_q().ln();
    let t = truncation as i64;
    // q_k = nu(k-1) c^{1-k} and W(m) = nu(-m-1) c^{m+1} / 2, W(0) = 1
    let pos = nu.window(conv.q_offset, t - 1 + conv.q_offset);
    let neg = nu.window(-ell - t, -1);
    let w_of = |m: i64| neg[(neg.len() as i64 - 1 - m) as usize];
    let ln_w = |m: i64| w_of(m).ln() + (m + 1) as f64 * ln_c - LN_2;
    let ln_w_ell = ln_w(ell);
    let mut sum = 0.0;
    for k in (1..=t).rev() {
        let q = pos[(k - 1) as usize];
        let kq = k + conv.q_offset;
        let w = w_of(ell + k - 1);
        if q != 0.0 && w != 0.0 {
            let ln_term = q.abs().ln() - (kq - 1) as f64 * ln_c + ln_w(ell + k - 1);
            sum += q.signum() * (ln_term - ln_w_ell).exp();
        }
    }
    let top = ell - conv.pair_offset;
    for a in 0..=top.max(-1) {
        sum += (ln_w(a) + ln_w(top - a) - ln_w_ell).exp();
    }
    Ok(TutteResidual {
        ell,
        truncation,
        residual: (1.0 - sum).abs(),
        log_w: ln_w_ell,
    })
}

/// Fix the loop-equation convention on the closed-form Budd family.
///
/// Each candidate index convention is tried at `l = 1..=4`; the first whose
/// normalized residual vanishes is returned. If none does, the check is
/// unusable and a calibration error is returned.
pub fn calibrate_tutte() -> Result<TutteCalibration> {
    let (_, _, budd) = builtin_example(BuiltinName::BuddSymmetric);
    let mut best = f64::INFINITY;
    for conv in CANDIDATES {
        let mut worst: f64 = 0.0;
        for ell in 1..=4 {
            worst = worst.max(residual_with(&budd, ell, CALIBRATION_TRUNCATION, conv)?.residual);
        }
        if worst <= CALIBRATION_TOL {
            return Ok(TutteCalibration {
                convention: conv,
                reference_residual: worst,
            });
        }
        best = best.min(worst);
    }
    Err(Error::Calibration(format!(
        "no loop-equation convention fits the Budd family (best residual {best:e})"
    )))
}

/// Normalized loop-equation residual of `wf` at perimeter `l`, with the
/// `q`-sum cut after `truncation` terms.
pub fn tutte_residual(
    wf: &WeightFamily,
    ell: i64,
    truncation: usize,
    calibration: &TutteCalibration,
) -> Result<TutteResidual> {
    residual_with(wf, ell, truncation, calibration.convention)
}
