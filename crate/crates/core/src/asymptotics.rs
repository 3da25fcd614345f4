//! The slowly varying corrections `L` and `L~` to the `k^{-2}` tail of the
//! step law, and the classification of that tail into its three regimes.

use std::f64::consts::PI;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::series::{
    pole_pair_sum, series_tail_bound, FCoefficients, GSequence, SeriesMode, TailClass,
    TruncationConfig,
};
use crate::special::{psi, EULER_GAMMA};

const PI2: f64 = PI * PI;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Regime {
    /// `sum j g_j < 1`: `nu(-k) ~ c log k / k^2`.
    DriftDeficit,
    /// `sum j g_j = 1` and `f` summable: `k^2 nu(-k) -> c`.
    BoundarySummable,
    /// `sum j g_j = 1` and `f` not summable: `k^2 nu(-k) = L(k)` slowly varying.
    BoundaryDivergent,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LSample {
    pub x: f64,
    pub l: f64,
    pub l_tilde: f64,
    /// `L(2x) / L(x)`.
    pub ratio: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegimeReport {
    pub first_moment: f64,
    pub regime: Regime,
    pub limit_constant: Option<f64>,
    pub diagnostics: Vec<LSample>,
}

/// `sum_{l>=1} 1/(l (l+b)(l+b+1))` for `b >= -1/2`.
fn harmonic_triple(b: f64) -> f64 {
    if b.abs() < 1e-3 {
        pole_pair_sum(0.0, b).unwrap_or(f64::NAN) - pole_pair_sum(0.0, b + 1.0).unwrap_or(f64::NAN)
    } else {
        (psi(1.0 + b) + EULER_GAMMA - b / (1.0 + b)) / (b * (b + 1.0))
    }
}

fn check_x(x: f64) -> Result<()> {
    if !(x >= 1.0) || !x.is_finite() {
        return Err(Error::InvalidInput(format!("L needs x >= 1, got {x}")));
    }
    Ok(())
}

fn l_direct(fc: &FCoefficients, x: f64, cfg: &TruncationConfig) -> Result<f64> {
    let g = fc.g();
    let k = -(x.floor() as i64);
    let scale = PI * x * x;
    let mut m = (2 * g.support() + 1).max(1024).min(cfg.max_terms);
    loop {
        let bound = scale * series_tail_bound(g, m, k)?;
        if bound <= 0.5 * cfg.target_abs_tol {
            break;
        }
        if m >= cfg.max_terms {
            return Err(Error::TruncationFailure {
                achieved: bound,
                target: cfg.target_abs_tol,
                terms: m,
            });
        }
        m = (2 * m).min(cfg.max_terms);
    }
    let f = fc.f_table(m);
    let mut s = 0.0;
    for (idx, &fl) in f.iter().enumerate().rev() {
        let y = idx as f64 + x;
        s += fl / (4.0 * y * y - 1.0);
    }
    Ok(4.0 * x * x * s)
}

/// `L(x) = sum_l f_l 4x^2 / (4(l+x-1)^2 - 1)` for a prepared `f`.
pub fn l_eval_with(fc: &FCoefficients, x: f64, cfg: &TruncationConfig) -> Result<f64> {
    cfg.validate()?;
    check_x(x)?;
    match cfg.mode {
        SeriesMode::ClosedFormDigamma => Ok(x * x * fc.t_sum_real(x - 1.5) / PI),
        SeriesMode::DirectTruncated => l_direct(fc, x, cfg),
    }
}

/// `L(x)`; at integers `L(k) = pi k^2 nu(-k)`.
pub fn l_eval(g: &GSequence, x: f64, cfg: &TruncationConfig) -> Result<f64> {
    l_eval_with(&FCoefficients::new(g), x, cfg)
}

/// `L~(x) = sum_l ((1 - sum_{j <= l/2} j g_j)/l) 4x^2/(4(l+x-1)^2-1)`, with
/// the cutoff `floor(l/2)`.
///
/// Past `l = 2J` the coefficient is the constant `(1 - s)/l`, whose sum
/// closes in digamma values; only the first `2J` terms are summed directly.
pub fn l_tilde_eval(g: &GSequence, x: f64, cfg: &TruncationConfig) -> Result<f64> {
    cfg.validate()?;
    check_x(x)?;
    let j_max = g.support();
    let sigma = g.first_moment();
    // rest[n] = sum_{j > n} j g_j
    let mut rest = vec![0.0; j_max + 1];
    for n in (0..j_max).rev() {
        rest[n] = rest[n + 1] + (n + 1) as f64 * g.get(n as i64 + 1);
    }
    let b = x - 1.5;
    let mut head = 0.0;
    for ell in (1..2 * j_max).rev() {
        let r = rest[ell / 2];
        if r != 0.0 {
            let y = ell as f64 + b;
            head += r / (ell as f64 * y * (y + 1.0));
        }
    }
    Ok(x * x * (head + (1.0 - sigma) * harmonic_triple(b)))
}

/// `L(lambda x) / L(x)` along `x_grid`.
pub fn slow_variation_ratios(
    g: &GSequence,
    lambda: f64,
    x_grid: &[f64],
    cfg: &TruncationConfig,
) -> Result<Vec<f64>> {
    if !(lambda > 0.0) {
        return Err(Error::InvalidInput(format!("lambda must be positive, got {lambda}")));
    }
    if let Some(&x) = x_grid.iter().find(|&&x| !(x >= 1.0) || !(lambda * x >= 1.0)) {
        return Err(Error::InvalidInput(format!(
            "grid points x and lambda*x must be >= 1, got x={x}"
        )));
    }
    let fc = FCoefficients::new(g);
    x_grid
        .par_iter()
        .map(|&x| Ok(l_eval_with(&fc, lambda * x, cfg)? / l_eval_with(&fc, x, cfg)?))
        .collect()
}

/// Grid of `x` values reported in [`RegimeReport::diagnostics`].
pub const DIAGNOSTIC_GRID: [f64; 6] = [1e1, 1e2, 1e3, 1e4, 1e5, 1e6];

/// Which regime of the left tail `g` falls into, with the limiting constant.
///
/// The exact boundary `sum j g_j = 1` is decided up to
/// [`GSequence::moment_tolerance`]. A finitely supported `g` on the boundary
/// always has summable `f`; the divergent case is reached only through a
/// declared infinite tail.
pub fn classify_regime(g: &GSequence, cfg: &TruncationConfig) -> Result<RegimeReport> {
    cfg.validate()?;
    let m1 = g.first_moment();
    let tol = g.moment_tolerance();
    if m1 > 1.0 + tol {
        return Err(Error::MomentExcess { first_moment: m1 });
    }
    let fc = FCoefficients::new(g);
    let (regime, limit_constant) = if m1 < 1.0 - tol {
        (Regime::DriftDeficit, Some(2.0 * (1.0 - m1) / PI2))
    } else if g.declared_tail() == Some(TailClass::Divergent) {
        (Regime::BoundaryDivergent, None)
    } else {
        let c = fc.f_total() / PI;
        if !(c > 0.0) {
            return Err(Error::InvalidInput(format!(
                "sum of f is {} on the boundary; g is not admissible",
                c * PI
            )));
        }
        (Regime::BoundarySummable, Some(c))
    };
    let closed = TruncationConfig {
        mode: SeriesMode::ClosedFormDigamma,
        ..*cfg
    };
    let diagnostics = DIAGNOSTIC_GRID
        .par_iter()
        .map(|&x| {
            let l = l_eval_with(&fc, x, &closed)?;
            Ok(LSample {
                x,
                l,
                l_tilde: l_tilde_eval(g, x, &closed)?,
                ratio: l_eval_with(&fc, 2.0 * x, &closed)? / l,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(RegimeReport {
        first_moment: m1,
        regime,
        limit_constant,
        diagnostics,
    })
}
