//! Digamma and low-order polygamma functions on the positive reals, plus
//! exact-reflection helpers for half-integer arguments.
//!
//! Every pole-pair series in this crate has half-integer shifts, so the
//! digamma values it needs live on `Z + 1/2`. There `cot(pi x) = 0` and the
//! reflection formula collapses to `psi(x) = psi(1 - x)`, which lets negative
//! half-integers be evaluated without any loss of accuracy.

use std::f64::consts::PI;

use crate::error::{Error, Result};

/// Below this the argument is shifted upward before the asymptotic series.
const ASYMPTOTIC_THRESHOLD: f64 = 16.0;

/// `B_{2k}` for k = 1..8.
const BERNOULLI: [f64; 8] = [
    1.0 / 6.0,
    -1.0 / 30.0,
    1.0 / 42.0,
    -1.0 / 30.0,
    5.0 / 66.0,
    -691.0 / 2730.0,
    7.0 / 6.0,
    -3617.0 / 510.0,
];

/// Euler–Mascheroni constant.
pub const EULER_GAMMA: f64 = 0.577_215_664_901_532_9;

/// Digamma `psi(x)` for `x > 0`.
pub fn digamma(x: f64) -> Result<f64> {
    if !(x > 0.0) || !x.is_finite() {
        return Err(Error::Domain {
            function: "digamma",
            argument: x,
        });
    }
    Ok(psi(x))
}

/// Unchecked digamma; caller guarantees `x > 0`.
pub(crate) fn psi(mut x: f64) -> f64 {
    let mut acc = 0.0;
    while x < ASYMPTOTIC_THRESHOLD {
        acc -= 1.0 / x;
        x += 1.0;
    }
    let inv2 = 1.0 / (x * x);
    // sum_{k=1}^{8} B_{2k} / (2k x^{2k}), Horner in 1/x^2
    let mut series = 0.0;
    for (k, b) in BERNOULLI.iter().enumerate().rev() {
        series = series * inv2 + b / (2.0 * (k as f64 + 1.0));
    }
    series *= inv2;
    acc + x.ln() - 0.5 / x - series
}

/// Polygamma `psi^{(n)}(x)` for `n` in 1..=5 and `x > 0`.
pub fn polygamma(n: u32, x: f64) -> Result<f64> {
    if !(1..=5).contains(&n) {
        return Err(Error::InvalidInput(format!(
            "polygamma order {n} is not supported (1..=5)"
        )));
    }
    if !(x > 0.0) || !x.is_finite() {
        return Err(Error::Domain {
            function: "polygamma",
            argument: x,
        });
    }
    Ok(polygamma_unchecked(n, x))
}

pub(crate) fn trigamma(x: f64) -> f64 {
    polygamma_unchecked(1, x)
}

fn factorial(n: u32) -> f64 {
    (1..=n).fold(1.0, |acc, k| acc * k as f64)
}

fn polygamma_unchecked(n: u32, mut x: f64) -> f64 {
    // psi^{(n)}(x) = psi^{(n)}(x+1) - (-1)^n n! / x^{n+1}
    let sign = if n % 2 == 0 { -1.0 } else { 1.0 };
    let nfact = factorial(n);
    let mut acc = 0.0;
    while x < ASYMPTOTIC_THRESHOLD {
        acc += nfact / x.powi(n as i32 + 1);
        x += 1.0;
    }
    // (-1)^{n+1} [ (n-1)!/x^n + n!/(2 x^{n+1}) + sum_k B_{2k} (2k+n-1)! / ((2k)! x^{2k+n}) ]
    let mut series = factorial(n - 1) / x.powi(n as i32) + nfact / (2.0 * x.powi(n as i32 + 1));
    for (k, b) in BERNOULLI.iter().enumerate() {
        let two_k = 2 * (k as u32 + 1);
        series += b * factorial(two_k + n - 1) / (factorial(two_k) * x.powi((two_k + n) as i32));
    }
    sign * acc + sign * series
}

/// `psi(n + 1/2)` for any integer `n`.
pub(crate) fn psi_half(n: i64) -> f64 {
    if n >= 0 {
        psi(n as f64 + 0.5)
    } else {
        psi(0.5 - n as f64)
    }
}

/// `psi'(n + 1/2)` for any integer `n`; uses `psi'(x) + psi'(1-x) = pi^2` on half-integers.
pub(crate) fn trigamma_half(n: i64) -> f64 {
    if n >= 0 {
        trigamma(n as f64 + 0.5)
    } else {
        PI * PI - trigamma(0.5 - n as f64)
    }
}

/// Divided difference `(psi(b) - psi(a)) / (b - a)` for positive `a`, `b`,
/// stable when the two points nearly coincide.
pub(crate) fn psi_divided_difference(a: f64, b: f64) -> f64 {
    let h = b - a;
    if h.abs() < 1e-3 {
        let m = 0.5 * (a + b);
        trigamma(m) + h * h / 24.0 * polygamma_unchecked(3, m)
            + h.powi(4) / 1920.0 * polygamma_unchecked(5, m)
    } else {
        (psi(b) - psi(a)) / h
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    /// psi(x) = -gamma + sum_{n>=0} (1/(n+1) - 1/(n+x)), summed pairwise with an
    /// integral tail correction.
    fn psi_series_oracle(x: f64) -> f64 {
        let n_terms = 2_000_000usize;
        let mut s = 0.0;
        for n in 0..n_terms {
            let n = n as f64;
            s += 1.0 / (n + 1.0) - 1.0 / (n + x);
        }
        // tail sum_{n>=N} (x-1)/((n+1)(n+x)) ~ (x-1)/N
        let nn = n_terms as f64;
        s += (x - 1.0) / (nn + 0.5 * x);
        -EULER_GAMMA + s
    }

    #[test]
    fn digamma_reference_points() {
        assert!((digamma(1.0).unwrap() + EULER_GAMMA).abs() < 1e-15);
        let half = -EULER_GAMMA - 2.0 * 2f64.ln();
        assert!((digamma(0.5).unwrap() - half).abs() < 1e-14);
        assert!((digamma(2.0).unwrap() - (1.0 - EULER_GAMMA)).abs() < 1e-15);
    }

    #[test]
    fn digamma_matches_series_oracle() {
        for &x in &[0.1, 0.75, 3.3, 15.9, 16.1, 40.0] {
            let d = digamma(x).unwrap() - psi_series_oracle(x);
            assert!(d.abs() < 1e-11, "x = {x}: diff {d}");
        }
    }

    #[test]
    fn digamma_rejects_non_positive() {
        assert!(digamma(0.0).is_err());
        assert!(digamma(-2.5).is_err());
        assert!(digamma(f64::NAN).is_err());
    }

    #[test]
    fn trigamma_known_values() {
        assert!((trigamma(1.0) - PI * PI / 6.0).abs() < 1e-14);
        assert!((trigamma(0.5) - PI * PI / 2.0).abs() < 1e-13);
        // psi'(x) - psi'(x+1) = 1/x^2
        for &x in &[0.3, 2.0, 17.5] {
            assert!((trigamma(x) - trigamma(x + 1.0) - 1.0 / (x * x)).abs() < 1e-13);
        }
    }

    #[test]
    fn higher_polygamma_recurrence() {
        for n in 2..=5 {
            for &x in &[0.6, 5.0, 20.0] {
                let lhs = polygamma(n, x).unwrap() - polygamma(n, x + 1.0).unwrap();
                let sign = if n % 2 == 0 { -1.0 } else { 1.0 };
                let rhs = sign * factorial(n) / x.powi(n as i32 + 1);
                assert!((lhs - rhs).abs() < 1e-10 * rhs.abs().max(1.0), "n={n} x={x}");
            }
        }
    }

    #[test]
    fn half_integer_reflection() {
        // psi(x+1) = psi(x) + 1/x through zero on half-integers
        for n in -30i64..30 {
            let x = n as f64 + 0.5;
            let d = psi_half(n + 1) - psi_half(n) - 1.0 / x;
            assert!(d.abs() < 1e-13, "n={n}");
            let d2 = trigamma_half(n) - trigamma_half(n + 1) - 1.0 / (x * x);
            assert!(d2.abs() < 1e-12, "n={n}");
        }
    }

    #[test]
    fn divided_difference_is_continuous() {
        let a = 2.25;
        for &h in &[1e-2, 2e-3, 9e-4, 1e-6, 0.0] {
            let dd = psi_divided_difference(a, a + h);
            let reference = if h == 0.0 {
                trigamma(a)
            } else {
                (psi(a + h) - psi(a)) / h
            };
            let tol = if h < 1e-3 && h > 0.0 { 1e-9 } else { 1e-12 };
            assert!((dd - reference).abs() < tol, "h={h}");
        }
    }
}
