use std::f64::consts::TAU;

use num_complex::Complex64;
use num_rational::BigRational;
use num_traits::{Signed, ToPrimitive, Zero};
use rayon::prelude::*;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::oracle::exact_convolution_powers;
use crate::series::{
    h_down_exact, sqrt_ladder_coeff, sqrt_ladder_coeffs, FCoefficients, GSequence,
    TruncationConfig,
};
use crate::weights::{NuDistribution, NuSource};

/// Number of summation-by-parts terms used for series tails on the circle.
pub const ABEL_ORDER: usize = 4;

/// `sum_{k >= start} a_k e^{ik theta}` from the first values of a smooth
/// sequence, with `a = [a_start, a_start+1, ...]`.
///
/// Summation by parts gives
/// `z^N/(1-z) sum_{j<p} (z/(1-z))^j D^j a_N` plus a remainder bounded by
/// `|D^{p-1} a_N| / |1-z|^p` once `D^p a` keeps a constant sign.
/// Returns the estimate and that bound.
pub fn abel_tail(a: &[f64], start: u64, theta: f64) -> (Complex64, f64) {
    let p = a.len();
    if p == 0 {
        return (Complex64::zero(), 0.0);
    }
    let z = Complex64::from_polar(1.0, theta);
    let one_minus = Complex64::new(1.0, 0.0) - z;
    let ratio = z / one_minus;
    let phase = (start as f64 * theta).rem_euclid(TAU);
    let lead = Complex64::from_polar(1.0, phase) / one_minus;
    let mut diffs = a.to_vec();
    let mut sum = Complex64::zero();
    let mut pow = Complex64::new(1.0, 0.0);
    for j in 0..p {
        sum += pow * diffs[0];
        if j + 1 < p {
            for i in 0..p - 1 - j {
                diffs[i] = diffs[i + 1] - diffs[i];
            }
            pow *= ratio;
        }
    }
    let bound = diffs[0].abs() / one_minus.norm().powi(p as i32);
    (lead * sum, bound)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CharEstimate {
    pub re: f64,
    pub im: f64,
    pub error: f64,
    /// Window `[-K, K]` summed explicitly.
    pub window: i64,
}

impl CharEstimate {
    pub fn value(&self) -> Complex64 {
        Complex64::new(self.re, self.im)
    }
}

/// `phi(theta) = sum_k nu(k) e^{ik theta}` with an error estimate.
///
/// The closed form `1 - |sin(theta/2)|` is used for the built-in symmetric
/// law. Otherwise `[-K, K]` is summed and both tails are closed by
/// [`abel_tail`], doubling `K` until the tail estimate meets the target.
pub fn char_fn_estimate(nu: &NuDistribution, theta: f64, cfg: &TruncationConfig) -> Result<CharEstimate> {
    cfg.validate()?;
    if !theta.is_finite() {
        return Err(Error::InvalidInput(format!("theta must be finite, got {theta}")));
    }
    let th = theta.rem_euclid(TAU);
    if nu.source() == NuSource::BuiltinSymmetric {
        let v = 1.0 - (0.5 * th).sin().abs();
        return Ok(CharEstimate {
            re: v,
            im: 0.0,
            error: 2.0 * f64::EPSILON,
            window: 0,
        });
    }
    let p = ABEL_ORDER as i64;
    let gap = (Complex64::new(1.0, 0.0) - Complex64::from_polar(1.0, th)).norm();
    let mut k = (2 * nu.scale()).max(1024);
    loop {
        let vals = nu.window(-k - p, k + p);
        let at = |j: i64| vals[(j + k + p) as usize];
        let mut main = Complex64::zero();
        let mut abs_sum = 0.0;
        for j in -k..=k {
            let v = at(j);
            main += v * Complex64::from_polar(1.0, (j as f64 * th).rem_euclid(TAU));
            abs_sum += v.abs();
        }
        let rounding = 8.0 * f64::EPSILON * abs_sum;
        let (tail, bound) = if gap < 1e-9 {
            (
                Complex64::new(nu.tail_above(k) + nu.tail_below(k), 0.0),
                1e-15,
            )
        } else {
            let up: Vec<f64> = (1..=p).map(|i| at(k + i)).collect();
            let down: Vec<f64> = (1..=p).map(|i| at(-k - i)).collect();
            let (su, bu) = abel_tail(&up, (k + 1) as u64, th);
            let (sd, bd) = abel_tail(&down, (k + 1) as u64, -th);
            (su + sd, bu + bd)
        };
        let error = bound + rounding;
        if error <= 0.5 * cfg.target_abs_tol {
            let v = main + tail;
            return Ok(CharEstimate {
                re: v.re,
                im: v.im,
                error,
                window: k,
            });
        }
        if (2 * k) as usize > cfg.max_terms {
            return Err(Error::TruncationFailure {
                achieved: error,
                target: cfg.target_abs_tol,
                terms: (2 * k + 1) as usize,
            });
        }
        k *= 2;
    }
}

pub fn char_fn(nu: &NuDistribution, theta: f64, cfg: &TruncationConfig) -> Result<Complex64> {
    Ok(char_fn_estimate(nu, theta, cfg)?.value())
}

const LADDER_TOL: f64 = 1e-9;
const FFT_THRESHOLD: usize = 16_384;

fn convolve(a: &[f64], b: &[f64], n: usize) -> Vec<f64> {
    if n <= FFT_THRESHOLD {
        return (0..n)
            .into_par_iter()
            .map(|m| {
                let mut s = 0.0;
                for i in (0..=m).rev() {
                    s += a[i] * b[m - i];
                }
                s
            })
            .collect();
    }
    let size = (2 * n).next_power_of_two();
    let mut planner = FftPlanner::new();
    let fwd = planner.plan_fft_forward(size);
    let inv = planner.plan_fft_inverse(size);
    let mut x: Vec<Complex64> = (0..size)
        .map(|i| Complex64::new(a.get(i).copied().unwrap_or(0.0), b.get(i).copied().unwrap_or(0.0)))
        .collect();
    fwd.process(&mut x);
    // split the packed transform into A and B and multiply
    let mut y = vec![Complex64::zero(); size];
    for i in 0..size {
        let xi = x[i];
        let xj = x[(size - i) % size].conj();
        let fa = (xi + xj) * 0.5;
        let fb = (xi - xj) * Complex64::new(0.0, -0.5);
        y[i] = fa * fb;
    }
    inv.process(&mut y);
    y.iter().take(n).map(|c| c.re / size as f64).collect()
}

/// First `n` coefficients of `G^>=(z) = 1 - sqrt(1-z) f(z)/z`, the law of the
/// first weak ascending ladder height.
///
/// A coefficient below `-1e-9` or a partial sum above `1 + 1e-9` means `g`
/// does not give a probability law and is reported as an error.
pub fn asc_ladder_series(g: &GSequence, n: usize) -> Result<Vec<f64>> {
    if n < 1 {
        return Err(Error::InvalidInput("ladder series needs n >= 1".into()));
    }
    let f = FCoefficients::new(g).f_table(n);
    let mut s = sqrt_ladder_coeffs(n);
    s[0] = -1.0;
    // sqrt(1-z) = -(s_0 + s_1 z + ...) with s_0 = -1, s_k = mu_k
    let c = convolve(&s, &f, n);
    let mut out = Vec::with_capacity(n);
    let mut partial = 0.0;
    for (m, cm) in c.into_iter().enumerate() {
        let a = if m == 0 { 1.0 + cm } else { cm };
        if a < -LADDER_TOL {
            return Err(Error::NegativeCoefficient { index: m, value: a });
        }
        partial += a;
        if partial > 1.0 + LADDER_TOL {
            return Err(Error::InvalidInput(format!(
                "ladder series partial sum {partial} exceeds one at z^{m}"
            )));
        }
        out.push(a);
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WienerHopfPoint {
    pub theta: f64,
    /// `|1 - phi - (1 - G^>=(e^{i theta}))(1 - G^<(e^{-i theta}))|`.
    pub residual: f64,
    /// Combined error estimate of the two sides.
    pub error: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WienerHopfReport {
    pub truncation: usize,
    pub sup_residual: f64,
    pub theta_at_sup: f64,
    pub points: Vec<WienerHopfPoint>,
}

/// Sup over `thetas` of the Wiener-Hopf residual. `phi` comes from `nu` via
/// [`char_fn_estimate`]; `G^>=` from the first `n` coefficients of
/// [`asc_ladder_series`] of `g` with an [`abel_tail`] estimate of the rest;
/// `G^<(w) = 1 - sqrt(1-w)` on the principal branch.
pub fn wiener_hopf_residual(
    nu: &NuDistribution,
    g: &GSequence,
    thetas: &[f64],
    n: usize,
    cfg: &TruncationConfig,
) -> Result<WienerHopfReport> {
    for &t in thetas {
        let gap = (Complex64::new(1.0, 0.0) - Complex64::from_polar(1.0, t)).norm();
        if !(gap >= 1e-6) {
            return Err(Error::Precondition(format!(
                "theta = {t} is too close to a multiple of 2 pi"
            )));
        }
    }
    let a = asc_ladder_series(g, n + ABEL_ORDER)?;
    let one = Complex64::new(1.0, 0.0);
    let points = thetas
        .par_iter()
        .map(|&theta| {
            let phi = char_fn_estimate(nu, theta, cfg)?;
            let mut head = Complex64::zero();
            let mut abs_sum = 0.0;
            for (m, &am) in a[..n].iter().enumerate() {
                head += am * Complex64::from_polar(1.0, (m as f64 * theta).rem_euclid(TAU));
                abs_sum += am.abs();
            }
            let (tail, bound) = abel_tail(&a[n..], n as u64, theta);
            let g_asc = head + tail;
            let g_desc_factor = (one - Complex64::from_polar(1.0, -theta)).sqrt();
            let rhs = (one - g_asc) * g_desc_factor;
            let lhs = one - phi.value();
            Ok(WienerHopfPoint {
                theta,
                residual: (lhs - rhs).norm(),
                error: phi.error + 2.0 * (bound + 8.0 * f64::EPSILON * abs_sum),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let (sup_residual, theta_at_sup) = points
        .iter()
        .fold((0.0, f64::NAN), |acc, p| if p.residual > acc.0 { (p.residual, p.theta) } else { acc });
    Ok(WienerHopfReport {
        truncation: n,
        sup_residual,
        theta_at_sup,
        points,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PreRenewalReport {
    pub depth: usize,
    pub ell_max: usize,
    /// `|sum_{p <= D} mu^{*p}(l) - h(l)|` for `l = 0..=ell_max`, computed exactly.
    pub residuals: Vec<f64>,
    pub max_residual: f64,
    /// Bound on `sum_{p > D} mu^{*p}(l)` over the range.
    pub omitted_bound: f64,
}

/// Checks `h(l) = sum_p mu^{*p}(l)` with `mu` the strict descending ladder
/// law, by exact convolution up to depth `D`.
///
/// The omitted terms vanish once `D >= l` since `mu(0) = 0`; otherwise they
/// are bounded by `2^l M^{D+1} / (1 - M)` with `M = 1 - sqrt(1/2)`.
pub fn pre_renewal_check(depth: usize, ell_max: usize) -> Result<PreRenewalReport> {
    if depth < 1 {
        return Err(Error::Precondition("pre-renewal check needs depth >= 1".into()));
    }
    let mu = (0..=ell_max as i64)
        .map(sqrt_ladder_coeff)
        .collect::<Result<Vec<_>>>()?;
    let table = exact_convolution_powers(&mu, depth, ell_max)?;
    let m = 1.0 - 0.5f64.sqrt();
    let mut residuals = Vec::with_capacity(ell_max + 1);
    let mut omitted_bound: f64 = 0.0;
    for ell in 0..=ell_max {
        let s: BigRational = table.iter().map(|row| row[ell].clone()).sum();
        let diff = (s - h_down_exact(ell as i64)).abs();
        residuals.push(diff.to_f64().unwrap_or(f64::INFINITY));
        if depth < ell {
            omitted_bound = omitted_bound
                .max(2f64.powi(ell as i32) * m.powi(depth as i32 + 1) / (1.0 - m));
        }
    }
    let max_residual = residuals.iter().copied().fold(0.0, f64::max);
    Ok(PreRenewalReport {
        depth,
        ell_max,
        residuals,
        max_residual,
        omitted_bound,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use std::f64::consts::PI;

    fn cfg() -> TruncationConfig {
        TruncationConfig::default()
    }

    fn sym_closed(theta: f64) -> f64 {
        1.0 - (0.5 * theta).sin().abs()
    }

    #[test]
    fn abel_tail_on_geometric_and_power_sequences() {
        // a_k = 1/k^2 from k = 200, against a long direct sum
        let theta = 0.7;
        let start = 200u64;
        let a: Vec<f64> = (0..ABEL_ORDER as u64).map(|i| 1.0 / ((start + i) as f64).powi(2)).collect();
        let (est, bound) = abel_tail(&a, start, theta);
        let mut direct = Complex64::zero();
        for k in (start..20_000_000).rev() {
            direct += Complex64::from_polar(1.0 / (k as f64).powi(2), (k as f64 * theta).rem_euclid(TAU));
        }
        // the direct sum itself is cut at 2e7 with an error of about 1e-14
        assert!((est - direct).norm() < bound + 1e-13, "{} > {bound}", (est - direct).norm());
        assert!(bound < 1e-9);
    }

    #[test]
    fn char_fn_examples() {
        let sym = NuDistribution::builtin_symmetric();
        assert!(char_fn(&sym, PI, &cfg()).unwrap().norm() < 1e-15);
        assert!((char_fn(&sym, PI / 3.0, &cfg()).unwrap().re - 0.5).abs() < 1e-15);
        let fp = NuDistribution::builtin_fully_packed();
        let one = char_fn(&fp, 0.0, &cfg()).unwrap();
        assert!((one.re - 1.0).abs() < 1e-10 && one.im.abs() < 1e-15);
        // the generic path on the symmetric law, through a perturbation by zero
        let generic = sym.perturbed([(0, 0.0)]);
        for th in [0.3, 1.0, PI, 5.0] {
            let v = char_fn(&generic, th, &cfg()).unwrap();
            assert!((v.re - sym_closed(th)).abs() < 1e-10 && v.im.abs() < 1e-10, "{th}");
        }
        let table = NuDistribution::tabulated(-1, vec![0.25, 0.5, 0.25]).unwrap();
        let v = char_fn(&table, 1.0, &cfg()).unwrap();
        assert!((v.re - (0.5 + 0.5 * 1f64.cos())).abs() < 1e-15);
    }

    #[test]
    fn fully_packed_phi_matches_f_series() {
        // 1 - phi(theta) = 2|sin(theta/2)| f(e^{i theta}) e^{-i theta}
        let fp = NuDistribution::builtin_fully_packed();
        let f = FCoefficients::new(&GSequence::zero()).f_table(4_000_000);
        for th in [0.5, 2.0, 4.0] {
            let mut s = Complex64::zero();
            for (i, &fl) in f.iter().enumerate().rev() {
                s += fl * Complex64::from_polar(1.0, (i as f64 * th).rem_euclid(TAU));
            }
            let rhs = 2.0 * (0.5 * th).sin().abs() * s;
            let lhs = Complex64::new(1.0, 0.0) - char_fn(&fp, th, &cfg()).unwrap();
            // the f series is cut at 4e6 terms of size 1/l
            assert!((lhs - rhs).norm() < 1e-6, "{th}: {}", (lhs - rhs).norm());
        }
    }

    #[test]
    fn ladder_series_examples() {
        let budd = asc_ladder_series(&GSequence::budd_symmetric(), 4).unwrap();
        for (a, e) in budd.iter().zip([0.5, 0.25, 1.0 / 16.0, 1.0 / 32.0]) {
            assert!((a - e).abs() < 1e-8, "{budd:?}");
        }
        let fp = asc_ladder_series(&GSequence::zero(), 1).unwrap();
        assert!((fp[0] - (1.0 - 8.0 / (3.0 * PI))).abs() < 1e-14);
        let long = asc_ladder_series(&GSequence::zero(), 100_000).unwrap();
        let total: f64 = long.iter().sum();
        assert!(total < 1.0 && total > 0.98, "{total}");
    }

    #[test]
    fn fft_and_direct_convolution_agree() {
        let a: Vec<f64> = (0..20_000).map(|i| 1.0 / (i as f64 + 1.0)).collect();
        let b: Vec<f64> = (0..20_000).map(|i| ((i % 7) as f64 - 3.0) / 5.0).collect();
        let fast = convolve(&a, &b, 20_000);
        for m in [0usize, 1, 17, 9999, 19_999] {
            let direct: f64 = (0..=m).map(|i| a[i] * b[m - i]).sum();
            assert!((fast[m] - direct).abs() < 1e-10, "{m}");
        }
    }

    #[test]
    fn wiener_hopf_examples() {
        let budd_nu = NuDistribution::builtin_symmetric();
        let budd_g = GSequence::budd_symmetric();
        let r = wiener_hopf_residual(&budd_nu, &budd_g, &[PI], 1000, &cfg()).unwrap();
        assert!(r.sup_residual < 1e-8, "{r:?}");
        assert!(wiener_hopf_residual(&budd_nu, &budd_g, &[0.0], 100, &cfg()).is_err());
        // shrinking theta: both sides go to zero
        let r = wiener_hopf_residual(&budd_nu, &budd_g, &[1e-3], 10_000, &cfg()).unwrap();
        assert!(r.sup_residual < 1e-3);
    }

    #[test]
    fn pre_renewal_small_cases() {
        let r = pre_renewal_check(200, 20).unwrap();
        assert_eq!(r.max_residual, 0.0);
        assert_eq!(r.omitted_bound, 0.0);
        let shallow = pre_renewal_check(2, 6).unwrap();
        assert_eq!(shallow.residuals[0], 0.0);
        assert_eq!(shallow.residuals[2], 0.0);
        assert!(shallow.residuals[5] > 0.0 && shallow.residuals[5] <= shallow.omitted_bound);
        assert!(pre_renewal_check(0, 3).is_err());
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(16))]
        #[test]
        fn residual_small_for_random_g(g1 in 0.0f64..0.5, g2 in 0.0f64..0.25, th in 0.2f64..6.0) {
            let g = GSequence::new(vec![g1, g2]).unwrap();
            let fam = crate::weights::synthesize(&g, &cfg()).unwrap();
            let r = wiener_hopf_residual(fam.nu(), &g, &[th], 5000, &cfg()).unwrap();
            prop_assert!(r.sup_residual < 1e-6, "{:?}", r);
        }
    }
}
