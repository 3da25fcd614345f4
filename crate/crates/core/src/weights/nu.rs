use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::series::{budd_g, FCoefficients, GSequence, NuEstimate};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NuSource {
    Synthesized,
    BuiltinSymmetric,
    BuiltinFullyPacked,
    /// Explicit values, including perturbations of another law.
    Tabulated,
}

/// A step law on the integers, queried pointwise or over windows, with
/// closed-form tail masses.
#[derive(Debug, Clone)]
pub struct NuDistribution {
    source: NuSource,
    repr: Repr,
}

#[derive(Debug, Clone)]
enum Repr {
    Poles(Arc<FCoefficients>),
    Symmetric,
    Table { lo: i64, values: Arc<Vec<f64>> },
    Perturbed {
        base: Arc<NuDistribution>,
        deltas: Arc<BTreeMap<i64, f64>>,
    },
}

/// `sum_{|k| <= window} nu(k)` plus the two tail masses beyond it.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MassCheck {
    pub window: i64,
    pub window_sum: f64,
    pub tail_above: f64,
    pub tail_below: f64,
    pub residual: f64,
}

fn symmetric_value(k: i64) -> f64 {
    let kf = k as f64;
    (if k == 0 { 1.0 } else { 0.0 }) + 2.0 / (PI * (4.0 * kf * kf - 1.0))
}

impl NuDistribution {
    pub(crate) fn from_poles(fc: Arc<FCoefficients>, source: NuSource) -> Self {
        NuDistribution {
            source,
            repr: Repr::Poles(fc),
        }
    }

    /// `nu(k) = 1_{k=0} + (2/pi) / (4k^2 - 1)`.
    pub fn builtin_symmetric() -> Self {
        NuDistribution {
            source: NuSource::BuiltinSymmetric,
            repr: Repr::Symmetric,
        }
    }

    /// The law obtained from `g = 0`.
    pub fn builtin_fully_packed() -> Self {
        Self::from_poles(
            Arc::new(FCoefficients::new(&GSequence::zero())),
            NuSource::BuiltinFullyPacked,
        )
    }

    /// Finitely supported law with `values[i] = nu(lo + i)`.
    pub fn tabulated(lo: i64, values: Vec<f64>) -> Result<Self> {
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidInput("tabulated weights must be finite".into()));
        }
        Ok(NuDistribution {
            source: NuSource::Tabulated,
            repr: Repr::Table {
                lo,
                values: Arc::new(values),
            },
        })
    }

    /// This law with `delta` added at each listed `k`.
    pub fn perturbed(&self, deltas: impl IntoIterator<Item = (i64, f64)>) -> Self {
        let mut map = BTreeMap::new();
        for (k, d) in deltas {
            *map.entry(k).or_insert(0.0) += d;
        }
        NuDistribution {
            source: NuSource::Tabulated,
            repr: Repr::Perturbed {
                base: Arc::new(self.clone()),
                deltas: Arc::new(map),
            },
        }
    }

    pub fn source(&self) -> NuSource {
        self.source
    }

    pub fn coefficients(&self) -> Option<&FCoefficients> {
        match &self.repr {
            Repr::Poles(fc) => Some(fc),
            _ => None,
        }
    }

    /// The ring weights this law was built from, if any.
    pub fn design_g(&self) -> Option<&GSequence> {
        self.coefficients().map(|fc| fc.g())
    }

    pub fn value(&self, k: i64) -> f64 {
        self.estimate(k).value
    }

    pub fn estimate(&self, k: i64) -> NuEstimate {
        match &self.repr {
            Repr::Poles(fc) => fc.nu(k),
            Repr::Symmetric => NuEstimate {
                value: symmetric_value(k),
                error: 2.0 * f64::EPSILON * symmetric_value(k).abs(),
            },
            Repr::Table { lo, values } => NuEstimate {
                value: usize::try_from(k - lo)
                    .ok()
                    .and_then(|i| values.get(i).copied())
                    .unwrap_or(0.0),
                error: 0.0,
            },
            Repr::Perturbed { base, deltas } => {
                let mut e = base.estimate(k);
                e.value += deltas.get(&k).copied().unwrap_or(0.0);
                e
            }
        }
    }

    /// `nu(lo..=hi)`.
    pub fn window(&self, lo: i64, hi: i64) -> Vec<f64> {
        if hi < lo {
            return Vec::new();
        }
        match &self.repr {
            Repr::Poles(fc) => fc.nu_window(lo, hi),
            Repr::Perturbed { base, deltas } => {
                let mut w = base.window(lo, hi);
                for (&k, &d) in deltas.range(lo..=hi) {
                    w[(k - lo) as usize] += d;
                }
                w
            }
            _ => (lo..=hi).map(|k| self.value(k)).collect(),
        }
    }

    /// `sum_{k > big_k} nu(k)`.
    pub fn tail_above(&self, big_k: i64) -> f64 {
        match &self.repr {
            Repr::Poles(fc) => fc.tail_above(big_k),
            Repr::Symmetric => 1.0 / (PI * (2.0 * big_k as f64 + 1.0)),
            Repr::Table { lo, values } => values
                .iter()
                .enumerate()
                .filter(|(i, _)| lo + *i as i64 > big_k)
                .map(|(_, v)| v)
                .sum(),
            Repr::Perturbed { base, deltas } => {
                base.tail_above(big_k) + deltas.range(big_k + 1..).map(|(_, d)| d).sum::<f64>()
            }
        }
    }

    /// `sum_{k < -big_k} nu(k)`.
    pub fn tail_below(&self, big_k: i64) -> f64 {
        match &self.repr {
            Repr::Poles(fc) => fc.tail_below(big_k),
            Repr::Symmetric => 1.0 / (PI * (2.0 * big_k as f64 + 1.0)),
            Repr::Table { lo, values } => values
                .iter()
                .enumerate()
                .filter(|(i, _)| lo + (*i as i64) < -big_k)
                .map(|(_, v)| v)
                .sum(),
            Repr::Perturbed { base, deltas } => {
                base.tail_below(big_k) + deltas.range(..-big_k).map(|(_, d)| d).sum::<f64>()
            }
        }
    }

    /// `g_k`: the design weights when known, otherwise `nu(k-1) - nu(-k-1)`.
    pub fn g_value(&self, k: i64) -> f64 {
        if k < 1 {
            return 0.0;
        }
        match &self.repr {
            Repr::Poles(fc) => fc.g().get(k),
            Repr::Symmetric => budd_g(k),
            _ => self.value(k - 1) - self.value(-k - 1),
        }
    }

    /// Support size relevant for choosing scan windows.
    pub fn scale(&self) -> i64 {
        match &self.repr {
            Repr::Poles(fc) => fc.g().support() as i64,
            Repr::Symmetric => 0,
            Repr::Table { lo, values } => lo.abs().max((lo + values.len() as i64).abs()),
            Repr::Perturbed { base, deltas } => {
                let d = deltas
                    .keys()
                    .map(|k| k.abs())
                    .max()
                    .unwrap_or(0);
                base.scale().max(d)
            }
        }
    }

    pub fn mass_check(&self, window: i64) -> MassCheck {
        let window = window.max(0);
        let vals = self.window(-window, window);
        let window_sum: f64 = vals.iter().sum();
        let tail_above = self.tail_above(window);
        let tail_below = self.tail_below(window);
        MassCheck {
            window,
            window_sum,
            tail_above,
            tail_below,
            residual: window_sum + tail_above + tail_below - 1.0,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn symmetric_values_and_tails() {
        let nu = NuDistribution::builtin_symmetric();
        assert!((nu.value(1) - 2.0 / (3.0 * PI)).abs() < 1e-16);
        assert_eq!(nu.value(1), nu.value(-1));
        assert!((nu.value(0) - (1.0 - 2.0 / PI)).abs() < 1e-16);
        let brute: f64 = (11..2_000_000i64).map(|k| nu.value(k)).sum();
        assert!((brute + nu.tail_above(1_999_999) - nu.tail_above(10)).abs() < 1e-12);
        assert!(nu.mass_check(1000).residual.abs() < 1e-14);
    }

    #[test]
    fn fully_packed_nu_minus_one() {
        let nu = NuDistribution::builtin_fully_packed();
        assert!((nu.value(-1) - 4.0 / (PI * PI)).abs() < 1e-15);
        assert!(nu.mass_check(5000).residual.abs() < 1e-12);
    }

    #[test]
    fn perturbation_shifts_mass() {
        let nu = NuDistribution::builtin_symmetric().perturbed([(0, 0.01)]);
        assert_eq!(nu.source(), NuSource::Tabulated);
        assert!((nu.mass_check(100).residual - 0.01).abs() < 1e-12);
        let w = nu.window(-1, 1);
        assert!((w[1] - (1.0 - 2.0 / PI + 0.01)).abs() < 1e-15);
    }

    #[test]
    fn table_tails() {
        let nu = NuDistribution::tabulated(-2, vec![0.1, 0.2, 0.3, 0.4]).unwrap();
        assert_eq!(nu.value(-3), 0.0);
        assert!((nu.value(1) - 0.4).abs() < 1e-16);
        assert!((nu.tail_above(0) - 0.4).abs() < 1e-16);
        assert!((nu.tail_below(1) - 0.1).abs() < 1e-16);
        assert!(nu.mass_check(0).residual.abs() < 1e-15);
    }
}
