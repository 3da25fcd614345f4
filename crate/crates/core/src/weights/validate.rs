use serde::{Deserialize, Serialize};

use super::NuDistribution;
use crate::error::{Error, Result};
use crate::series::{h_down, h_down_table};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ValidationTolerances {
    pub mass: f64,
    pub harmonicity: f64,
    pub gasket: f64,
    pub nonneg: f64,
}

impl Default for ValidationTolerances {
    fn default() -> Self {
        ValidationTolerances {
            mass: 1e-8,
            harmonicity: 1e-8,
            gasket: 1e-10,
            nonneg: 1e-10,
        }
    }
}

impl ValidationTolerances {
    pub fn uniform(tol: f64) -> Self {
        ValidationTolerances {
            mass: tol,
            harmonicity: tol,
            gasket: tol,
            nonneg: tol,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HarmonicityResidual {
    pub p: i64,
    pub residual: f64,
    /// Half-width of the bracket on the part of the sum beyond the window.
    pub remainder_uncertainty: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PointValue {
    pub k: i64,
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Verdict {
    pub pass: bool,
    pub failed: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ValidationReport {
    pub depth: i64,
    pub window: i64,
    pub mass_residual: f64,
    pub harmonicity_residuals: Vec<HarmonicityResidual>,
    /// Recorded for information only; the hypotheses concern `p >= 1`.
    pub harmonicity_p0: HarmonicityResidual,
    /// `(k, min(0, nu(k-1) - nu(-k-1)))` for the `k` where it is negative.
    pub gasket_residuals: Vec<PointValue>,
    pub nonneg_violations: Vec<PointValue>,
    pub min_value: PointValue,
    pub nu_zero: f64,
    pub nu_minus_one: f64,
    pub tolerances: ValidationTolerances,
    pub verdict: Verdict,
}

impl ValidationReport {
    pub fn passed(&self) -> bool {
        self.verdict.pass
    }

    pub fn max_harmonicity_residual(&self) -> f64 {
        self.harmonicity_residuals
            .iter()
            .map(|h| h.residual)
            .fold(0.0, f64::max)
    }
}

const MAX_LISTED: usize = 64;
const TAIL_RATIO: f64 = 1.02;
const TAIL_END: f64 = 1e13;

/// Masses of `nu` on geometric blocks beyond `window`, as `(start, end, mass)`
/// with `end = None` for the final unbounded block.
fn tail_blocks(nu: &NuDistribution, window: i64) -> Vec<(i64, Option<i64>, f64)> {
    let mut out = Vec::new();
    let mut lo = window + 1;
    let mut above = nu.tail_above(window);
    while (lo as f64) < TAIL_END {
        let hi = (lo + 1).max((lo as f64 * TAIL_RATIO).ceil() as i64) - 1;
        let next = nu.tail_above(hi);
        out.push((lo, Some(hi), above - next));
        above = next;
        lo = hi + 1;
    }
    out.push((lo, None, above));
    out
}

/// Checks the hypotheses on the peeling step law `nu`: total mass,
/// harmonicity of `h` at `p = 1..=depth`, `nu(k-1) >= nu(-k-1)`,
/// non-negativity on the window, and `nu` differing from the Dirac mass.
pub fn validate_nu(
    nu: &NuDistribution,
    depth: i64,
    window: i64,
    tol: &ValidationTolerances,
) -> Result<ValidationReport> {
    if depth < 1 || window < depth {
        return Err(Error::Precondition(format!(
            "validation needs depth >= 1 and window >= depth, got depth={depth}, window={window}"
        )));
    }
    let lo = -window - 1;
    let vals = nu.window(lo, window);
    let at = |k: i64| vals[(k - lo) as usize];

    let window_sum: f64 = vals[1..].iter().sum();
    let mass = window_sum + nu.tail_above(window) + nu.tail_below(window);
    let mass_residual = (mass - 1.0).abs();

    let blocks = tail_blocks(nu, window);
    let h = h_down_table((depth + window + 2) as usize);
    let harmonic = |p: i64| -> HarmonicityResidual {
        let mut s = 0.0;
        for k in (-p..=window).rev() {
            s += at(k) * h[(p + k) as usize];
        }
        let (mut r_lo, mut r_hi) = (0.0, 0.0);
        for &(b_lo, b_hi, m) in &blocks {
            r_hi += m * h_down(p + b_lo);
            if let Some(b_hi) = b_hi {
                r_lo += m * h_down(p + b_hi);
            }
        }
        let total = s + 0.5 * (r_lo + r_hi);
        HarmonicityResidual {
            p,
            residual: (h[p as usize] - total).abs(),
            remainder_uncertainty: 0.5 * (r_hi - r_lo).abs(),
        }
    };
    let harmonicity_residuals: Vec<_> = (1..=depth).map(harmonic).collect();
    let harmonicity_p0 = harmonic(0);

    let mut gasket_residuals = Vec::new();
    let mut gasket_ok = true;
    for k in 1..=window {
        let d = at(k - 1) - at(-k - 1);
        if d < 0.0 {
            if d < -tol.gasket {
                gasket_ok = false;
            }
            if gasket_residuals.len() < MAX_LISTED {
                gasket_residuals.push(PointValue { k, value: d });
            }
        }
    }

    let mut nonneg_violations = Vec::new();
    let mut min_value = PointValue {
        k: 0,
        value: f64::INFINITY,
    };
    for k in -window..=window {
        let v = at(k);
        if v < min_value.value {
            min_value = PointValue { k, value: v };
        }
        if v < -tol.nonneg && nonneg_violations.len() < MAX_LISTED {
            nonneg_violations.push(PointValue { k, value: v });
        }
    }

    let nu_zero = at(0);
    let nu_minus_one = at(-1);
    let mut failed = Vec::new();
    if !(mass_residual <= tol.mass) {
        failed.push("mass".to_string());
    }
    if !harmonicity_residuals
        .iter()
        .all(|r| r.residual <= tol.harmonicity)
    {
        failed.push("harmonicity".to_string());
    }
    if !gasket_ok {
        failed.push("gasket".to_string());
    }
    if !nonneg_violations.is_empty() {
        failed.push("nonnegativity".to_string());
    }
    if !(nu_zero < 1.0 - tol.gasket && nu_minus_one > tol.gasket) {
        failed.push("nondegeneracy".to_string());
    }
    Ok(ValidationReport {
        depth,
        window,
        mass_residual,
        harmonicity_residuals,
        harmonicity_p0,
        gasket_residuals,
        nonneg_violations,
        min_value,
        nu_zero,
        nu_minus_one,
        tolerances: *tol,
        verdict: Verdict {
            pass: failed.is_empty(),
            failed,
        },
    })
}
