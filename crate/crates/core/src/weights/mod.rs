//! Weight sequences of critical O(2) loop-decorated maps built from ring
//! weights `g`, with their step law `nu`, partition functions and checks.

mod nu;
mod validate;

pub use nu::{MassCheck, NuDistribution, NuSource};
pub use validate::{
    validate_nu, HarmonicityResidual, PointValue, ValidationReport, ValidationTolerances, Verdict,
};

use std::collections::BTreeMap;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::series::{FCoefficients, GSequence, NuEstimate, TruncationConfig};

/// Whether positivity beyond the scanned window is backed by the sign of
/// the leading tail term.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TailStatus {
    Verified,
    UnverifiedTail,
}

/// Depth and window used for the validation attached to a family.
pub const DEFAULT_DEPTH: i64 = 50;

#[derive(Debug, Clone)]
pub struct WeightFamily {
    nu: NuDistribution,
    c_q: f64,
    nu_minus_one: NuEstimate,
    tail_status: TailStatus,
    validation: Option<ValidationReport>,
}

/// `log |x|` and the sign of `x`, for quantities that leave the float range.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LogValue {
    pub log_abs: f64,
    pub sign: i8,
}

impl LogValue {
    pub fn from_f64(x: f64) -> Self {
        LogValue {
            log_abs: x.abs().ln(),
            sign: if x > 0.0 {
                1
            } else if x < 0.0 {
                -1
            } else {
                0
            },
        }
    }

    /// The plain value; infinite or zero when out of range.
    pub fn value(&self) -> f64 {
        self.sign as f64 * self.log_abs.exp()
    }
}

impl WeightFamily {
    fn from_nu(nu: NuDistribution, tail_status: TailStatus, nu_minus_one: NuEstimate) -> Self {
        WeightFamily {
            c_q: 2.0 / nu_minus_one.value,
            nu,
            nu_minus_one,
            tail_status,
            validation: None,
        }
    }

    pub fn nu(&self) -> &NuDistribution {
        &self.nu
    }

    pub fn c_q(&self) -> f64 {
        self.c_q
    }

    pub fn h(&self) -> f64 {
        1.0 / self.c_q
    }

    pub fn n(&self) -> f64 {
        2.0
    }

    pub fn tail_status(&self) -> TailStatus {
        self.tail_status
    }

    pub fn validation(&self) -> Option<&ValidationReport> {
        self.validation.as_ref()
    }

    /// Attach a validation report computed with the given depth and window.
    pub fn validated(mut self, depth: i64, window: i64, tol: &ValidationTolerances) -> Result<Self> {
        self.validation = Some(validate_nu(&self.nu, depth, window, tol)?);
        Ok(self)
    }

    fn ratio_log(&self) -> f64 {
        (self.nu_minus_one.value / 2.0).ln()
    }

    /// `log q_k = log nu(k-1) + (k-1) log(nu(-1)/2)`.
    pub fn q_log(&self, k: i64) -> LogValue {
        let v = LogValue::from_f64(self.nu.value(k - 1));
        LogValue {
            log_abs: v.log_abs + (k - 1) as f64 * self.ratio_log(),
            sign: v.sign,
        }
    }

    pub fn q(&self, k: i64) -> f64 {
        self.q_log(k).value()
    }

    /// `log q~_k = log g_k + (k-1) log(nu(-1)/2)`.
    pub fn q_tilde_log(&self, k: i64) -> LogValue {
        let v = LogValue::from_f64(self.nu.g_value(k));
        LogValue {
            log_abs: v.log_abs + (k - 1) as f64 * self.ratio_log(),
            sign: v.sign,
        }
    }

    pub fn q_tilde(&self, k: i64) -> f64 {
        self.q_tilde_log(k).value()
    }

    /// `W^(l) = c_q^{l+1} nu(-l-1) / 2`, with `W^(0) = 1`.
    pub fn partition_function(&self, ell: i64) -> Result<LogValue> {
        if ell < 0 {
            return Err(Error::InvalidInput(format!(
                "perimeter must be non-negative, got {ell}"
            )));
        }
        if ell == 0 {
            return Ok(LogValue {
                log_abs: 0.0,
                sign: 1,
            });
        }
        let v = LogValue::from_f64(self.nu.value(-ell - 1) / 2.0);
        Ok(LogValue {
            log_abs: v.log_abs + (ell + 1) as f64 * self.c_q.ln(),
            sign: v.sign,
        })
    }

    /// `L_q(l) = 2 l^2 W^(l) / c_q^{l+1} = l^2 nu(-l-1)`.
    pub fn l_q(&self, ell: i64) -> f64 {
        let l = ell as f64;
        l * l * self.nu.value(-ell - 1)
    }

    /// `q_k - q~_k - 2 h^{2k} W^(k)`, each term formed from the accessors.
    pub fn consistency_q_qtilde(&self, k: i64) -> Result<f64> {
        if k < 1 {
            return Err(Error::InvalidInput(format!("k must be >= 1, got {k}")));
        }
        let w = self.partition_function(k)?;
        let loop_term = LogValue {
            log_abs: w.log_abs + 2.0_f64.ln() - 2.0 * k as f64 * self.c_q.ln(),
            sign: w.sign,
        };
        Ok(self.q(k) - self.q_tilde(k) - loop_term.value())
    }

    pub fn to_report(&self, window: i64) -> FamilyReport {
        let window = window.max(1);
        let nu: BTreeMap<i64, f64> = (-window..=window).map(|k| (k, self.nu.value(k))).collect();
        FamilyReport {
            source: self.nu.source(),
            g: (1..=window).map(|k| self.nu.g_value(k)).collect(),
            c_q: self.c_q,
            nu,
            q_log: (1..=window).map(|k| self.q_log(k).log_abs).collect(),
            q_tilde_log: (1..=window).map(|k| self.q_tilde_log(k).log_abs).collect(),
            validation: self.validation.clone(),
        }
    }
}

/// Serialized form of a family.
#[derive(Debug, Clone, Serialize)]
pub struct FamilyReport {
    pub source: NuSource,
    pub g: Vec<f64>,
    pub c_q: f64,
    pub nu: BTreeMap<i64, f64>,
    pub q_log: Vec<f64>,
    pub q_tilde_log: Vec<f64>,
    pub validation: Option<ValidationReport>,
}

/// Window scanned for negative weights during synthesis.
pub fn scan_window(g: &GSequence) -> i64 {
    (4 * g.support() as i64).max(200)
}

/// Window used for the validation attached by [`synthesize`].
pub fn validation_window(g: &GSequence) -> i64 {
    (4 * g.support() as i64).max(20_000)
}

/// Build the weight family of ring weights `g`.
pub fn synthesize(g: &GSequence, cfg: &TruncationConfig) -> Result<WeightFamily> {
    cfg.validate()?;
    let tol = cfg.target_abs_tol;
    let m1 = g.first_moment();
    if m1 > 1.0 + g.moment_tolerance() {
        return Err(Error::MomentExcess { first_moment: m1 });
    }
    let fc = Arc::new(FCoefficients::new(g));
    let nu_zero = fc.nu_value(0, cfg)?;
    let nu_minus_one = fc.nu_value(-1, cfg)?;
    if nu_zero.value >= 1.0 - tol {
        return Err(Error::Degenerate {
            nu_zero: nu_zero.value,
            nu_minus_one: nu_minus_one.value,
        });
    }
    let r = scan_window(g);
    let values = fc.nu_window(-r, r);
    let (mut k_min, mut v_min) = (0, f64::INFINITY);
    for (i, &v) in values.iter().enumerate() {
        if v < v_min {
            v_min = v;
            k_min = i as i64 - r;
        }
    }
    if v_min < -tol {
        // confirm the witness with the configured evaluator
        let confirm = fc.nu_value(k_min, cfg)?;
        if confirm.value < -tol {
            return Err(Error::Negativity {
                k: k_min,
                value: confirm.value,
            });
        }
    }
    let leading = if (1.0 - m1) > g.moment_tolerance() {
        1.0 - m1
    } else {
        fc.f_total()
    };
    let tail_status = if leading > 0.0 {
        TailStatus::Verified
    } else {
        TailStatus::UnverifiedTail
    };
    let nu = NuDistribution::from_poles(fc, NuSource::Synthesized);
    WeightFamily::from_nu(nu, tail_status, nu_minus_one).validated(
        DEFAULT_DEPTH,
        validation_window(g),
        &ValidationTolerances::default(),
    )
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BuiltinName {
    BuddSymmetric,
    FullyPacked,
}

impl std::str::FromStr for BuiltinName {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().replace('-', "_").as_str() {
            "budd_symmetric" | "budd" | "symmetric" => Ok(BuiltinName::BuddSymmetric),
            "fully_packed" => Ok(BuiltinName::FullyPacked),
            other => Err(Error::InvalidInput(format!("unknown builtin '{other}'"))),
        }
    }
}

/// Window used for validating the built-in families.
pub const BUILTIN_WINDOW: i64 = 100_000;

/// The two closed-form families: their ring weights, step law and family.
pub fn builtin_example(name: BuiltinName) -> (GSequence, NuDistribution, WeightFamily) {
    let (g, nu) = match name {
        BuiltinName::BuddSymmetric => (
            GSequence::budd_symmetric(),
            NuDistribution::builtin_symmetric(),
        ),
        BuiltinName::FullyPacked => (GSequence::zero(), NuDistribution::builtin_fully_packed()),
    };
    let family = WeightFamily::from_nu(nu.clone(), TailStatus::Verified, nu.estimate(-1))
        .validated(DEFAULT_DEPTH, BUILTIN_WINDOW, &ValidationTolerances::default())
        .expect("built-in window is valid");
    (g, nu, family)
}
