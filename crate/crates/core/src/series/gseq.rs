use std::f64::consts::PI;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Declared behaviour of `sum_l f_l` for a sequence whose retained entries
/// stand in for an infinite one. Only consulted when the first moment is 1.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TailClass {
    Summable,
    Divergent,
}

/// Finitely supported non-negative weights `g_1, ..., g_J`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GSequence {
    entries: Vec<f64>,
    first_moment: f64,
    second_moment: f64,
    exact: bool,
    declared_tail: Option<TailClass>,
}

/// Number of leading entries kept exactly in the built-in symmetric sequence.
pub const BUDD_HEAD: usize = 16_000;

/// `g_k` of the symmetric family in closed form.
pub fn budd_g(k: i64) -> f64 {
    if k < 1 {
        return 0.0;
    }
    let x = k as f64;
    let v = 2.0 * x / (PI * (x - 1.5) * (x - 0.5) * (x + 0.5) * (x + 1.5));
    if k == 1 {
        v + 1.0
    } else {
        v
    }
}

impl GSequence {
    pub fn new(entries: Vec<f64>) -> Result<Self> {
        Self::build(entries, false, None)
    }

    /// Entries given as exact rationals; the moments are then computed exactly.
    pub fn from_rationals(entries: &[BigRational]) -> Result<Self> {
        let mut m1 = BigRational::zero();
        for (i, e) in entries.iter().enumerate() {
            if e < &BigRational::zero() {
                return Err(Error::NegativeCoefficient {
                    index: i + 1,
                    value: e.to_f64().unwrap_or(f64::NAN),
                });
            }
            m1 += e * BigRational::from_integer(BigInt::from(i + 1));
        }
        let floats = entries
            .iter()
            .map(|e| e.to_f64().unwrap_or(f64::NAN))
            .collect();
        let mut g = Self::build(floats, true, None)?;
        g.first_moment = m1.to_f64().unwrap_or(f64::NAN);
        Ok(g)
    }

    /// Comma separated entries; each token is a decimal or `p/q` literal.
    pub fn parse(text: &str) -> Result<Self> {
        let mut out = Vec::new();
        for tok in text.split(',').map(str::trim) {
            if tok.is_empty() {
                continue;
            }
            out.push(parse_rational(tok)?);
        }
        Self::from_rationals(&out)
    }

    pub fn zero() -> Self {
        GSequence {
            entries: Vec::new(),
            first_moment: 0.0,
            second_moment: 0.0,
            exact: true,
            declared_tail: None,
        }
    }

    /// The symmetric family truncated after [`BUDD_HEAD`] entries, with the
    /// remaining mass moved to one lump chosen so that both `sum j g_j` and
    /// `sum g_j / j` of the discarded tail are preserved. The first moment is
    /// then exactly one.
    pub fn budd_symmetric() -> Self {
        Self::budd_symmetric_with_head(BUDD_HEAD)
    }

    /// As [`GSequence::budd_symmetric`] with a chosen number of exact entries.
    /// Values of `nu(-k)` are accurate to roughly `4e-6 (k/head)^2` in
    /// relative terms for `k` below `head`.
    pub fn budd_symmetric_with_head(head: usize) -> Self {
        let head = head.max(2);
        let mut entries: Vec<f64> = (1..=head as i64).map(budd_g).collect();
        let n = head as f64 + 1.0;
        // g_j = (a_j - a_{j+1})/pi with a_j = 1/((j-3/2)(j+1/2)), so
        // sum_{j>=n} j g_j = (n a_n + sum_{j>n} a_j)/pi and the sum telescopes
        let a_n = 1.0 / ((n - 1.5) * (n + 0.5));
        let tail_a = 0.5 * (1.0 / (n - 0.5) + 1.0 / (n + 0.5));
        let m1 = (n * a_n + tail_a) / PI;
        let cutoff = (50 * head as i64).max(1_000_000);
        let mut m_inv = 0.0;
        for j in (head as i64 + 1..=cutoff).rev() {
            m_inv += budd_g(j) / j as f64;
        }
        let c = cutoff as f64;
        m_inv += 2.0 / (3.0 * PI * c.powi(3));
        let p = (m1 / m_inv).sqrt().round() as usize;
        entries.resize(p, 0.0);
        entries[p - 1] = m1 / p as f64;
        let mut g = Self::build(entries, false, Some(TailClass::Summable))
            .expect("built-in sequence is valid");
        g.first_moment = 1.0;
        g
    }

    fn build(mut entries: Vec<f64>, exact: bool, declared_tail: Option<TailClass>) -> Result<Self> {
        for (i, &e) in entries.iter().enumerate() {
            if !e.is_finite() {
                return Err(Error::InvalidInput(format!("g_{} is not finite", i + 1)));
            }
            if e < 0.0 {
                return Err(Error::NegativeCoefficient {
                    index: i + 1,
                    value: e,
                });
            }
        }
        while entries.last() == Some(&0.0) {
            entries.pop();
        }
        let mut m1 = 0.0;
        let mut m2 = 0.0;
        for (i, &e) in entries.iter().enumerate() {
            let j = (i + 1) as f64;
            m1 += j * e;
            m2 += j * j * e;
        }
        Ok(GSequence {
            entries,
            first_moment: m1,
            second_moment: m2,
            exact,
            declared_tail,
        })
    }

    pub fn with_declared_tail(mut self, tail: TailClass) -> Self {
        self.declared_tail = Some(tail);
        self
    }

    /// `g_j`, zero outside the support.
    pub fn get(&self, j: i64) -> f64 {
        if j < 1 {
            return 0.0;
        }
        self.entries.get(j as usize - 1).copied().unwrap_or(0.0)
    }

    pub fn entries(&self) -> &[f64] {
        &self.entries
    }

    /// Largest `j` with `g_j > 0`.
    pub fn support(&self) -> usize {
        self.entries.len()
    }

    pub fn first_moment(&self) -> f64 {
        self.first_moment
    }

    pub fn second_moment(&self) -> f64 {
        self.second_moment
    }

    pub fn is_exact(&self) -> bool {
        self.exact
    }

    pub fn declared_tail(&self) -> Option<TailClass> {
        self.declared_tail
    }

    /// Tolerance used when comparing the first moment with 1.
    pub fn moment_tolerance(&self) -> f64 {
        if self.exact {
            1e-12
        } else {
            1e-9
        }
    }

    /// Indices with non-zero weight, with their values.
    pub fn nonzero(&self) -> impl Iterator<Item = (i64, f64)> + '_ {
        self.entries
            .iter()
            .enumerate()
            .filter(|(_, &v)| v != 0.0)
            .map(|(i, &v)| (i as i64 + 1, v))
    }
}

fn parse_rational(tok: &str) -> Result<BigRational> {
    let bad = || Error::InvalidInput(format!("cannot parse weight '{tok}'"));
    if let Some((n, d)) = tok.split_once('/') {
        let n: BigInt = n.trim().parse().map_err(|_| bad())?;
        let d: BigInt = d.trim().parse().map_err(|_| bad())?;
        if d.is_zero() {
            return Err(bad());
        }
        return Ok(BigRational::new(n, d));
    }
    let (mantissa, exp) = match tok.find(['e', 'E']) {
        Some(pos) => {
            let e: i32 = tok[pos + 1..].parse().map_err(|_| bad())?;
            (&tok[..pos], e)
        }
        None => (tok, 0),
    };
    let (int_part, frac_part) = mantissa.split_once('.').unwrap_or((mantissa, ""));
    let digits = format!("{int_part}{frac_part}");
    if digits.is_empty() || digits == "-" || digits == "+" {
        return Err(bad());
    }
    let n: BigInt = digits.parse().map_err(|_| bad())?;
    let scale = exp - frac_part.len() as i32;
    let ten = BigInt::from(10);
    Ok(if scale >= 0 {
        BigRational::from_integer(n * ten.pow(scale as u32))
    } else {
        BigRational::new(n, ten.pow((-scale) as u32))
    })
}
