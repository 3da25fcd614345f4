//! Series machinery behind the step law: the coefficients `f_l`, the values
//! `nu(k)`, and the elementary sequences they are assembled from.

mod bound;
mod fft;
mod gseq;
mod poles;

pub use bound::{direct_nu_sum, series_tail_bound};
pub use gseq::{GSequence, TailClass, BUDD_HEAD, budd_g};
pub use poles::{pole_pair_sum, FCoefficients, NuEstimate};

use std::f64::consts::PI;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::special::psi_half;

/// How `nu(k)` is evaluated.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SeriesMode {
    /// Closed form through digamma differences, O(support) per value.
    ClosedFormDigamma,
    /// Partial sums of the defining series with a rigorous tail bound.
    DirectTruncated,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TruncationConfig {
    pub target_abs_tol: f64,
    pub max_terms: usize,
    pub mode: SeriesMode,
}

impl Default for TruncationConfig {
    fn default() -> Self {
        TruncationConfig {
            target_abs_tol: 1e-10,
            max_terms: 10_000_000,
            mode: SeriesMode::ClosedFormDigamma,
        }
    }
}

impl TruncationConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.target_abs_tol > 0.0) || !self.target_abs_tol.is_finite() {
            return Err(Error::InvalidInput(format!(
                "target_abs_tol must be positive, got {}",
                self.target_abs_tol
            )));
        }
        if self.max_terms == 0 {
            return Err(Error::InvalidInput("max_terms must be at least 1".into()));
        }
        Ok(())
    }
}

/// `4 / (4 n^2 - 1)`.
#[inline]
pub fn kernel(n: i64) -> f64 {
    let n = n as f64;
    4.0 / (4.0 * n * n - 1.0)
}

/// `sum_{n = lo}^{hi} |4/(4n^2-1)|` in closed form; zero for an empty range.
pub(crate) fn abs_kernel_sum(lo: i64, hi: i64) -> f64 {
    if lo > hi {
        return 0.0;
    }
    // for n >= 1 the kernel telescopes as 1/(n-1/2) - 1/(n+1/2)
    let positive = |a: i64, b: i64| -> f64 {
        if a > b {
            0.0
        } else {
            1.0 / (a as f64 - 0.5) - 1.0 / (b as f64 + 0.5)
        }
    };
    let mut s = 0.0;
    if lo <= 0 && hi >= 0 {
        s += 4.0;
    }
    if hi >= 1 {
        s += positive(lo.max(1), hi);
    }
    if lo <= -1 {
        s += positive((-hi).max(1), -lo);
    }
    s
}

/// `sum_{n >= lo} |4/(4n^2-1)|`.
pub(crate) fn abs_kernel_sum_from(lo: i64) -> f64 {
    if lo >= 1 {
        1.0 / (lo as f64 - 0.5)
    } else {
        // full mass is 8, minus sum_{n <= lo-1} = 1/(1/2 - lo)
        8.0 - 1.0 / (0.5 - lo as f64)
    }
}

/// `h(l) = 2^{-2l} C(2l, l)` for `l >= 0` and zero for negative `l`.
pub fn h_down(ell: i64) -> f64 {
    if ell < 0 {
        return 0.0;
    }
    if ell < 1000 {
        let mut h = 1.0;
        for m in 0..ell {
            h *= (2 * m + 1) as f64 / (2 * m + 2) as f64;
        }
        return h;
    }
    let x = ell as f64;
    let inv = 1.0 / x;
    let corr = 1.0 - inv / 8.0 + inv * inv / 128.0 + 5.0 * inv.powi(3) / 1024.0
        - 21.0 * inv.powi(4) / 32768.0;
    corr / (PI * x).sqrt()
}

/// `h(0..n)` by the product recurrence.
pub fn h_down_table(n: usize) -> Vec<f64> {
    let mut out = Vec::with_capacity(n);
    let mut h = 1.0;
    for m in 0..n {
        out.push(h);
        h *= (2 * m + 1) as f64 / (2 * m + 2) as f64;
    }
    out
}

/// Exact `h(l)` as a rational.
pub fn h_down_exact(ell: i64) -> BigRational {
    if ell < 0 {
        return BigRational::zero();
    }
    let mut h = BigRational::one();
    for m in 0..ell {
        h *= BigRational::new(BigInt::from(2 * m + 1), BigInt::from(2 * m + 2));
    }
    h
}

/// Coefficient of `z^k` in `1 - sqrt(1 - z)`: zero at `k = 0`, otherwise
/// `C(2k, k) / ((2k - 1) 4^k)`.
pub fn sqrt_ladder_coeff(k: i64) -> Result<BigRational> {
    if k < 0 {
        return Err(Error::InvalidInput(format!(
            "sqrt_ladder_coeff needs k >= 0, got {k}"
        )));
    }
    if k == 0 {
        return Ok(BigRational::zero());
    }
    let mut mu = BigRational::new(BigInt::from(1), BigInt::from(2));
    for m in 1..k {
        mu *= BigRational::new(BigInt::from(2 * m - 1), BigInt::from(2 * m + 2));
    }
    Ok(mu)
}

/// `mu(0..n)` in floating point.
pub fn sqrt_ladder_coeffs(n: usize) -> Vec<f64> {
    let mut out = vec![0.0; n];
    if n > 1 {
        out[1] = 0.5;
    }
    for k in 1..n.saturating_sub(1) {
        out[k + 1] = out[k] * (2 * k - 1) as f64 / (2 * k + 2) as f64;
    }
    out
}

/// `sum_{m = k-j}^{k+j-1} 1/(m + 1/2)` with the negative part cancelled.
/// Odd in `k`, zero at `k = 0`.
pub fn half_harmonic_window(k: i64, j: i64) -> Result<f64> {
    if j < 1 {
        return Err(Error::InvalidInput(format!("window width j must be >= 1, got {j}")));
    }
    if k == 0 {
        return Ok(0.0);
    }
    let kk = k.abs();
    let lo = (kk - j).abs();
    let hi = kk + j - 1;
    let w = if hi - lo < 64 {
        (lo..=hi).map(|m| 1.0 / (m as f64 + 0.5)).sum()
    } else {
        psi_half(hi + 1) - psi_half(lo)
    };
    Ok(if k < 0 { -w } else { w })
}

/// Largest argument accepted by [`half_harmonic_window_exact`].
pub const EXACT_WINDOW_LIMIT: i64 = 64;

/// Exact rational window for `|k|, j <= 64`.
pub fn half_harmonic_window_exact(k: i64, j: i64) -> Result<BigRational> {
    if j < 1 || j > EXACT_WINDOW_LIMIT || k.abs() > EXACT_WINDOW_LIMIT {
        return Err(Error::InvalidInput(format!(
            "exact window needs 1 <= j <= {EXACT_WINDOW_LIMIT} and |k| <= {EXACT_WINDOW_LIMIT}, got k={k}, j={j}"
        )));
    }
    if k == 0 {
        return Ok(BigRational::zero());
    }
    let kk = k.abs();
    let mut w = BigRational::zero();
    for m in (kk - j).abs()..=kk + j - 1 {
        w += BigRational::new(BigInt::from(2), BigInt::from(2 * m + 1));
    }
    Ok(if k < 0 { -w } else { w })
}

/// Prefix sums `Hh(m) = sum_{l < m} 1/(l + 1/2)` for `m = 0..=n`.
pub(crate) fn half_harmonic_prefix(n: usize) -> Vec<f64> {
    let mut out = Vec::with_capacity(n + 1);
    let mut acc = 0.0;
    let mut comp = 0.0;
    out.push(0.0);
    for l in 0..n {
        // Kahan summation keeps the prefix accurate to a few ulps at 1e7 terms
        let y = 1.0 / (l as f64 + 0.5) - comp;
        let t = acc + y;
        comp = (t - acc) - y;
        acc = t;
        out.push(acc);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_traits::ToPrimitive;
    use proptest::prelude::*;

    fn binomial_exact(n: u64, k: u64) -> BigInt {
        let mut b = BigInt::one();
        for i in 0..k {
            b = b * BigInt::from(n - i) / BigInt::from(i + 1);
        }
        b
    }

    #[test]
    fn h_down_matches_binomial() {
        for ell in 0..40i64 {
            let exact = BigRational::new(
                binomial_exact(2 * ell as u64, ell as u64),
                BigInt::from(2).pow(2 * ell as u32),
            );
            assert_eq!(h_down_exact(ell), exact);
            let f = exact.to_f64().unwrap();
            assert!((h_down(ell) - f).abs() <= 1e-15 * f);
        }
        assert_eq!(h_down(-3), 0.0);
    }

    #[test]
    fn h_down_asymptotic_branch_is_continuous() {
        let table = h_down_table(1500);
        for ell in [999usize, 1000, 1001, 1499] {
            let rel = (h_down(ell as i64) - table[ell]).abs() / table[ell];
            assert!(rel < 1e-13, "ell={ell}: {rel}");
        }
    }

    #[test]
    fn sqrt_ladder_known_values() {
        let expect = [(1, 1, 2), (2, 1, 8), (3, 1, 16), (4, 5, 128), (5, 7, 256)];
        for (k, n, d) in expect {
            assert_eq!(
                sqrt_ladder_coeff(k).unwrap(),
                BigRational::new(BigInt::from(n), BigInt::from(d))
            );
        }
        assert!(sqrt_ladder_coeff(0).unwrap().is_zero());
        assert!(sqrt_ladder_coeff(-1).is_err());
    }

    #[test]
    fn sqrt_ladder_closed_form() {
        for k in 1..30i64 {
            let closed = BigRational::new(
                binomial_exact(2 * k as u64, k as u64),
                BigInt::from(2 * k - 1) * BigInt::from(4).pow(k as u32),
            );
            assert_eq!(sqrt_ladder_coeff(k).unwrap(), closed);
        }
        let f = sqrt_ladder_coeffs(30);
        for k in 0..30 {
            let e = sqrt_ladder_coeff(k as i64).unwrap().to_f64().unwrap();
            assert!((f[k] - e).abs() <= 1e-16 * e.max(1e-300));
        }
    }

    #[test]
    fn window_examples() {
        let w = half_harmonic_window_exact(1, 1).unwrap();
        assert_eq!(w, BigRational::new(BigInt::from(8), BigInt::from(3)));
        assert!((half_harmonic_window(1, 1).unwrap() - 8.0 / 3.0).abs() < 1e-15);
        assert_eq!(half_harmonic_window(0, 5).unwrap(), 0.0);
        assert!(half_harmonic_window(3, 0).is_err());
        assert!(half_harmonic_window_exact(65, 1).is_err());
    }

    #[test]
    fn kernel_sums() {
        let brute: f64 = (-2000i64..=2000).map(|n| kernel(n).abs()).sum();
        assert!((abs_kernel_sum(-2000, 2000) - brute).abs() < 1e-12);
        let brute2: f64 = (-7i64..=30).map(|n| kernel(n).abs()).sum();
        assert!((abs_kernel_sum(-7, 30) - brute2).abs() < 1e-13);
        let brute3: f64 = (-5i64..=-2).map(|n| kernel(n).abs()).sum();
        assert!((abs_kernel_sum(-5, -2) - brute3).abs() < 1e-14);
        let brute4: f64 = (-3i64..=1_000_000).map(|n| kernel(n).abs()).sum::<f64>() + 1.0 / 1_000_000.5;
        assert!((abs_kernel_sum_from(-3) - brute4).abs() < 1e-12);
        assert!((abs_kernel_sum_from(5) - 1.0 / 4.5).abs() < 1e-15);
    }

    proptest! {
        #[test]
        fn window_is_odd_and_exact(k in -64i64..=64, j in 1i64..=64) {
            let w = half_harmonic_window(k, j).unwrap();
            let wm = half_harmonic_window(-k, j).unwrap();
            prop_assert!((w + wm).abs() < 1e-14);
            let e = half_harmonic_window_exact(k, j).unwrap().to_f64().unwrap();
            prop_assert!((w - e).abs() < 1e-13 * e.abs().max(1.0));
        }

        #[test]
        fn window_digamma_branch_matches_sum(k in 1i64..5000, j in 1i64..5000) {
            let w = half_harmonic_window(k, j).unwrap();
            let lo = (k - j).abs();
            let hi = k + j - 1;
            let s: f64 = (lo..=hi).map(|m| 1.0 / (m as f64 + 0.5)).sum();
            prop_assert!((w - s).abs() < 1e-12 * s.max(1.0));
        }

        #[test]
        fn h_down_ratio(ell in 0i64..5000) {
            let r = h_down(ell + 1) / h_down(ell);
            let e = (2 * ell + 1) as f64 / (2 * ell + 2) as f64;
            prop_assert!((r - e).abs() < 1e-12);
        }
    }
}
