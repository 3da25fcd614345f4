use std::f64::consts::PI;

use super::{abs_kernel_sum, abs_kernel_sum_from, kernel, GSequence};
use crate::error::{Error, Result};

/// Upper bound on `|f_l|` valid for `l > J - 1/2`:
/// `(1/pi) [2|1-s|/l + m2/(l(l-J+1/2)) + 1/(2l(l^2-1/4))]`
/// with `s = sum j g_j` and `m2 = sum j^2 g_j`.
fn f_envelope(g: &GSequence, ell: f64) -> f64 {
    let j = g.support() as f64;
    let a = 2.0 * (1.0 - g.first_moment()).abs();
    let b = g.second_moment();
    (a / ell + b / (ell * (ell - j + 0.5)) + 0.5 / (ell * (ell * ell - 0.25))) / PI
}

fn next_boundary(b: u64) -> u64 {
    (b + 1).max((b as f64 * 1.25).ceil() as u64)
}

const GRID_END: u64 = 1 << 50;

/// Rigorous bound on `|(1/pi) sum_{l > m} f_l 4/(4(l-k-1)^2-1)|`.
///
/// The envelope of `|f_l|` is decreasing, so on each block of a fixed
/// geometric grid it is bounded by its value at the block start, while the
/// kernel sums exactly by telescoping. The grid does not depend on `m`, which
/// makes the bound non-increasing in `m`.
pub fn series_tail_bound(g: &GSequence, m: usize, k: i64) -> Result<f64> {
    if m <= 2 * g.support() || m == 0 {
        return Err(Error::Precondition(format!(
            "tail bound needs m > 2 * support ({} > {})",
            m,
            2 * g.support()
        )));
    }
    let start = m as u64 + 1;
    let mut b = 1u64;
    while next_boundary(b) <= start {
        b = next_boundary(b);
    }
    let shift = k + 1;
    let mut total = 0.0;
    let mut lo = start;
    let mut hi = next_boundary(b) - 1;
    while lo < GRID_END {
        let ks = abs_kernel_sum(lo as i64 - shift, hi as i64 - shift);
        total += f_envelope(g, lo as f64) * ks;
        lo = hi + 1;
        hi = next_boundary(lo) - 1;
    }
    total += f_envelope(g, lo as f64) * abs_kernel_sum_from(lo as i64 - shift);
    Ok(total / PI)
}

/// `1_{k=0} + (1/pi) sum_{l=1}^{m} f_l 4/(4(l-k-1)^2-1)` from a table of
/// `f_1..f_m`, summed from the small end.
pub fn direct_nu_sum(f: &[f64], k: i64) -> f64 {
    let mut s = 0.0;
    for (idx, &fl) in f.iter().enumerate().rev() {
        let ell = idx as i64 + 1;
        s += fl * kernel(ell - k - 1);
    }
    (if k == 0 { 1.0 } else { 0.0 }) + s / PI
}
