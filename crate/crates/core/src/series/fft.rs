//! `nu` over a long window of `k` at once. With `d = -k - i - 2` the closed
//! form splits into `psi_b(k) X(k) - Y(k) - Z(k)/(1+b_k)`, where `X`, `Y`, `Z`
//! are correlations of the pole weights against `1/(d(d+1))` and `1/(d+1)`.
//! The two coincident-pole diagonals are left out of the transforms and added
//! back exactly.

use std::f64::consts::PI;

use num_complex::Complex64;
use rustfft::FftPlanner;

use super::FCoefficients;
use crate::special::psi_half;

pub(crate) fn nu_window_fft(fc: &FCoefficients, lo: i64, hi: i64) -> Vec<f64> {
    let c = fc.c();
    let psi_a = fc.psi_a();
    let nc = c.len();
    let nk = (hi - lo + 1) as usize;
    let i_min = -fc.half();
    let nv = nc + nk - 1;
    let len = (nc + nv - 1).next_power_of_two();

    let mut crev = vec![Complex64::default(); len];
    let mut cpsirev = vec![Complex64::default(); len];
    for m in 0..nc {
        crev[m] = Complex64::new(c[nc - 1 - m], 0.0);
        cpsirev[m] = Complex64::new(c[nc - 1 - m] * psi_a[nc - 1 - m], 0.0);
    }
    let mut va = vec![Complex64::default(); len];
    let mut vc = vec![Complex64::default(); len];
    let s_min = i_min + lo;
    for t in 0..nv {
        let d = -(s_min + t as i64) - 2;
        if d == 0 || d == -1 {
            continue;
        }
        let d = d as f64;
        va[t] = Complex64::new(1.0 / (d * (d + 1.0)), 0.0);
        vc[t] = Complex64::new(1.0 / (d + 1.0), 0.0);
    }

    let mut planner = FftPlanner::new();
    let fwd = planner.plan_fft_forward(len);
    let inv = planner.plan_fft_inverse(len);
    for v in [&mut crev, &mut cpsirev, &mut va, &mut vc] {
        fwd.process(v);
    }
    // X + iY in one inverse transform, Z in another
    let mut xy: Vec<Complex64> = (0..len)
        .map(|n| crev[n] * va[n] + Complex64::i() * cpsirev[n] * va[n])
        .collect();
    let mut z: Vec<Complex64> = (0..len).map(|n| crev[n] * vc[n]).collect();
    inv.process(&mut xy);
    inv.process(&mut z);
    let scale = 1.0 / len as f64;

    let pi2 = PI * PI;
    (0..nk)
        .map(|r| {
            let k = lo + r as i64;
            let n = r + nc - 1;
            let x = xy[n].re * scale;
            let y = xy[n].im * scale;
            let zz = z[n].re * scale;
            let psi_b = psi_half(-k - 1);
            let one_b = -(k as f64) - 0.5;
            let mut s = psi_b * x - y - zz / one_b;
            for i in [-k - 2, -k - 1] {
                let idx = i - i_min;
                if idx >= 0 && (idx as usize) < nc {
                    s += c[idx as usize] * fc.t_half(idx as usize, k, psi_b).0;
                }
            }
            (if k == 0 { 1.0 } else { 0.0 }) + s / pi2
        })
        .collect()
}
