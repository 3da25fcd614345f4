use std::f64::consts::PI;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{
    direct_nu_sum, fft, half_harmonic_prefix, half_harmonic_window, series_tail_bound, GSequence,
    SeriesMode, TruncationConfig,
};
use crate::error::{Error, Result};
use crate::special::{psi, psi_divided_difference, psi_half, trigamma, trigamma_half};

const PI2: f64 = PI * PI;

/// A value together with an absolute error estimate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NuEstimate {
    pub value: f64,
    pub error: f64,
}

/// `f_l` written as a sum of simple poles,
/// `f_l = (1/pi) sum_{i=-J}^{J-1} c_i / (l + i + 1/2)`,
/// where `c_i = [i in {-1, 0}] - G_{max(-i, i+1)}` and `G_n = sum_{j>=n} g_j`.
///
/// Every series over `l` then reduces to pole-pair sums with half-integer
/// shifts, which close in digamma values.
#[derive(Debug)]
pub struct FCoefficients {
    g: GSequence,
    half: i64,
    c: Vec<f64>,
    psi_a: Vec<f64>,
}

impl FCoefficients {
    pub fn new(g: &GSequence) -> Self {
        let half = g.support().max(1) as i64;
        let j_max = g.support();
        // tail[n] = G_n for n = 1..=J+1
        let mut tail = vec![0.0; j_max + 2];
        for n in (1..=j_max).rev() {
            tail[n] = tail[n + 1] + g.get(n as i64);
        }
        let mut c = Vec::with_capacity(2 * half as usize);
        let mut psi_a = Vec::with_capacity(2 * half as usize);
        for i in -half..half {
            let n = (-i).max(i + 1) as usize;
            let mut ci = -tail.get(n).copied().unwrap_or(0.0);
            if i == -1 || i == 0 {
                ci += 1.0;
            }
            c.push(ci);
            psi_a.push(psi_half(i + 1));
        }
        FCoefficients {
            g: g.clone(),
            half,
            c,
            psi_a,
        }
    }

    pub fn g(&self) -> &GSequence {
        &self.g
    }

    /// `(i, c_i)` over the pole range.
    pub fn poles(&self) -> impl Iterator<Item = (i64, f64)> + '_ {
        self.c
            .iter()
            .enumerate()
            .map(move |(idx, &c)| (idx as i64 - self.half, c))
    }

    pub(crate) fn half(&self) -> i64 {
        self.half
    }

    pub(crate) fn c(&self) -> &[f64] {
        &self.c
    }

    pub(crate) fn psi_a(&self) -> &[f64] {
        &self.psi_a
    }

    /// `f_l` from the pole form.
    pub fn f(&self, ell: i64) -> Result<f64> {
        if ell < 1 {
            return Err(Error::InvalidInput(format!("f_l needs l >= 1, got {ell}")));
        }
        let s: f64 = self
            .poles()
            .map(|(i, c)| c / ((ell + i) as f64 + 0.5))
            .sum();
        Ok(s / PI)
    }

    /// `f_l` from its defining window sums, term by term.
    pub fn f_windows(&self, ell: i64) -> Result<f64> {
        let mut s = half_harmonic_window(ell, 1)?;
        for (j, gj) in self.g.nonzero() {
            s -= gj * half_harmonic_window(ell, j)?;
        }
        Ok(s / PI)
    }

    /// `f_1, ..., f_n` from a shared prefix table of `1/(m+1/2)`.
    pub fn f_table(&self, n: usize) -> Vec<f64> {
        let need = n + self.g.support() + 2;
        let hh = half_harmonic_prefix(need);
        let nz: Vec<(i64, f64)> = self.g.nonzero().collect();
        (1..=n as i64)
            .into_par_iter()
            .map(|ell| {
                let w = |j: i64| hh[(ell + j) as usize] - hh[(ell - j).unsigned_abs() as usize];
                let mut s = w(1);
                for &(j, gj) in &nz {
                    s -= gj * w(j);
                }
                s / PI
            })
            .collect()
    }

    /// `T(i, k) = sum_{l>=1} 1/((l+a)(l+b)(l+b+1))` with `a = i + 1/2` and `b = -k - 3/2`.
    #[inline]
    pub(crate) fn t_half(&self, idx: usize, k: i64, psi_b: f64) -> (f64, f64) {
        let i = idx as i64 - self.half;
        let d = -k - i - 2;
        match d {
            0 => {
                let v = trigamma_half(i + 1) - 1.0 / (i as f64 + 1.5);
                (v, v.abs() + 1.0 / (i as f64 + 1.5).abs())
            }
            -1 => {
                let v = 1.0 / (i as f64 + 0.5) - trigamma_half(i + 1);
                (v, v.abs() + 1.0 / (i as f64 + 0.5).abs())
            }
            _ => {
                let d = d as f64;
                let one_b = -(k as f64) - 0.5;
                let a = 1.0 / (d * (d + 1.0));
                let dpsi = psi_b - self.psi_a[idx];
                let cterm = 1.0 / ((d + 1.0) * one_b);
                let v = a * dpsi - cterm;
                let mag = a.abs() * (psi_b.abs() + self.psi_a[idx].abs()) + cterm.abs();
                (v, mag)
            }
        }
    }

    /// `nu(k)` in closed form, with a rounding error estimate.
    pub fn nu(&self, k: i64) -> NuEstimate {
        let psi_b = psi_half(-k - 1);
        let mut s = 0.0;
        let mut mag = 0.0;
        for (idx, &c) in self.c.iter().enumerate() {
            if c == 0.0 {
                continue;
            }
            let (t, m) = self.t_half(idx, k, psi_b);
            s += c * t;
            mag += c.abs() * m;
        }
        let value = if k == 0 { 1.0 } else { 0.0 } + s / PI2;
        let error = 16.0 * f64::EPSILON * (mag / PI2 + value.abs());
        NuEstimate { value, error }
    }

    /// `nu(k)` under the given configuration.
    pub fn nu_value(&self, k: i64, cfg: &TruncationConfig) -> Result<NuEstimate> {
        cfg.validate()?;
        match cfg.mode {
            SeriesMode::ClosedFormDigamma => Ok(self.nu(k)),
            SeriesMode::DirectTruncated => Ok(self.nu_direct_many(&[k], cfg)?[0]),
        }
    }

    /// Direct partial sums for several `k` sharing one table of `f_l`. The
    /// number of terms doubles until the tail bound is below half the target.
    pub fn nu_direct_many(&self, ks: &[i64], cfg: &TruncationConfig) -> Result<Vec<NuEstimate>> {
        cfg.validate()?;
        let floor = 2 * self.g.support() + 1;
        if cfg.max_terms < floor {
            return Err(Error::TruncationFailure {
                achieved: f64::INFINITY,
                target: cfg.target_abs_tol,
                terms: cfg.max_terms,
            });
        }
        let worst = |m: usize| -> Result<f64> {
            let mut w: f64 = 0.0;
            for &k in ks {
                w = w.max(series_tail_bound(&self.g, m, k)?);
            }
            Ok(w)
        };
        let mut m = floor.max(1024).min(cfg.max_terms);
        let mut bound = worst(m)?;
        while bound > 0.5 * cfg.target_abs_tol {
            if m >= cfg.max_terms {
                return Err(Error::TruncationFailure {
                    achieved: bound,
                    target: cfg.target_abs_tol,
                    terms: m,
                });
            }
            m = (2 * m).min(cfg.max_terms);
            bound = worst(m)?;
        }
        let f = self.f_table(m);
        let g_mass: f64 = self.g.entries().iter().sum();
        let f_err = 4.0 * f64::EPSILON * ((m + self.g.support() + 2) as f64).ln() * (1.0 + g_mass) / PI;
        Ok(ks
            .iter()
            .map(|&k| {
                let value = direct_nu_sum(&f, k);
                let rounding = (8.0 * f_err + 64.0 * f64::EPSILON * value.abs().max(1e-300)) / PI;
                NuEstimate {
                    value,
                    error: series_tail_bound(&self.g, m, k).unwrap_or(bound) + rounding,
                }
            })
            .collect())
    }

    /// `nu(k)` for `k` in `lo..=hi`.
    pub fn nu_window(&self, lo: i64, hi: i64) -> Vec<f64> {
        if hi < lo {
            return Vec::new();
        }
        let nk = (hi - lo + 1) as usize;
        if nk > 64 && self.c.len() > 64 {
            fft::nu_window_fft(self, lo, hi)
        } else {
            (lo..=hi)
                .into_par_iter()
                .map(|k| self.nu(k).value)
                .collect()
        }
    }

    fn pp_half(&self, idx: usize, b: i64) -> f64 {
        // sum_l 1/((l + i + 1/2)(l + b + 1/2))
        let i = idx as i64 - self.half;
        if b == i {
            trigamma_half(i + 1)
        } else {
            (psi_half(b + 1) - self.psi_a[idx]) / (b - i) as f64
        }
    }

    /// `sum_{k > big_k} nu(k)` in closed form.
    pub fn tail_above(&self, big_k: i64) -> f64 {
        let s: f64 = self
            .c
            .iter()
            .enumerate()
            .filter(|(_, &c)| c != 0.0)
            .map(|(idx, &c)| c * self.pp_half(idx, -big_k - 2))
            .sum();
        -s / PI2
    }

    /// `sum_{k < -big_k} nu(k)` in closed form.
    pub fn tail_below(&self, big_k: i64) -> f64 {
        let s: f64 = self
            .c
            .iter()
            .enumerate()
            .filter(|(_, &c)| c != 0.0)
            .map(|(idx, &c)| c * self.pp_half(idx, big_k - 1))
            .sum();
        s / PI2
    }

    /// `sum_l f_l`, finite when the first moment is one.
    pub fn f_total(&self) -> f64 {
        // sum_l f_l = (1/pi) sum_j g_j S_j with S_j = sum_{m<j} (2 Hh(m) + 1/(m+1/2) - 2)
        let j_max = self.g.support();
        let mut hh = 0.0;
        let mut s_j = 0.0;
        let mut total = 0.0;
        for m in 0..j_max {
            s_j += 2.0 * hh + 1.0 / (m as f64 + 0.5) - 2.0;
            hh += 1.0 / (m as f64 + 0.5);
            total += self.g.get(m as i64 + 1) * s_j;
        }
        total / PI
    }

    /// `sum_i c_i T(i + 1/2, beta)` for real `beta >= -1/2`.
    pub(crate) fn t_sum_real(&self, beta: f64) -> f64 {
        let psi_b = psi(1.0 + beta);
        let one_b = 1.0 + beta;
        let mut s = 0.0;
        for (idx, &c) in self.c.iter().enumerate() {
            if c == 0.0 {
                continue;
            }
            let i = idx as i64 - self.half;
            let alpha = i as f64 + 0.5;
            let d = beta - alpha;
            let t = if d.abs() < 1e-3 || (d + 1.0).abs() < 1e-3 {
                pole_pair_sum(alpha, beta).unwrap_or(f64::NAN)
                    - pole_pair_sum(alpha, beta + 1.0).unwrap_or(f64::NAN)
            } else {
                (psi_b - self.psi_a[idx] - d / one_b) / (d * (d + 1.0))
            };
            s += c * t;
        }
        s
    }
}

/// `sum_{l>=1} 1 / ((l + alpha)(l + beta))` for real shifts that are not
/// negative integers.
pub fn pole_pair_sum(alpha: f64, beta: f64) -> Result<f64> {
    for &x in &[alpha, beta] {
        if !x.is_finite() || (x <= -1.0 && x == x.round()) {
            return Err(Error::Domain {
                function: "pole_pair_sum",
                argument: x,
            });
        }
    }
    // sum the first terms directly until both shifts exceed -1
    let mut head = 0.0;
    let mut a = alpha;
    let mut b = beta;
    while a.min(b) <= -1.0 {
        head += 1.0 / ((1.0 + a) * (1.0 + b));
        a += 1.0;
        b += 1.0;
    }
    let tail = if a == b {
        trigamma(1.0 + a)
    } else {
        psi_divided_difference(1.0 + a, 1.0 + b)
    };
    Ok(head + tail)
}
