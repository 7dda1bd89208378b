//! Adaptive Dormand–Prince 5(4) integration.

use alloc::vec;
use alloc::vec::Vec;

use crate::{Error, Result};

#[derive(Debug, Clone, Copy)]
pub struct OdeOptions {
    pub rtol: f64,
    pub atol: f64,
    pub max_steps: usize,
}

impl Default for OdeOptions {
    fn default() -> Self {
        OdeOptions { rtol: 1e-9, atol: 1e-12, max_steps: 10_000_000 }
    }
}

const C: [f64; 7] = [0.0, 0.2, 0.3, 0.8, 8.0 / 9.0, 1.0, 1.0];
const A: [[f64; 6]; 7] = [
    [0.0; 6],
    [0.2, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0, 0.0, 0.0],
    [9017.0 / 3168.0, -355.0 / 33.0, 46732.0 / 5247.0, 49.0 / 176.0, -5103.0 / 18656.0, 0.0],
    [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0],
];
// 5th-order weights are the last row of A; E = b5 − b4.
const E: [f64; 7] = [
    71.0 / 57600.0,
    0.0,
    -71.0 / 16695.0,
    71.0 / 1920.0,
    -17253.0 / 339200.0,
    22.0 / 525.0,
    -1.0 / 40.0,
];

/// Integrates y' = f(t, y) from t0 and returns y at each of `times` (ascending, ≥ t0).
pub fn integrate<F>(mut f: F, t0: f64, y0: &[f64], times: &[f64], opts: OdeOptions) -> Result<Vec<Vec<f64>>>
where
    F: FnMut(f64, &[f64], &mut [f64]),
{
    let n = y0.len();
    let mut y = y0.to_vec();
    let mut t = t0;
    let mut k: Vec<Vec<f64>> = (0..7).map(|_| vec![0.0; n]).collect();
    let mut tmp = vec![0.0; n];
    let mut out = Vec::with_capacity(times.len());
    f(t, &y, &mut k[0]);
    let mut h = initial_step(&y, &k[0], opts);
    let mut steps = 0usize;
    for &target in times {
        if target < t {
            return Err(Error::InvalidParams("output times must be ascending".into()));
        }
        while t < target {
            if steps >= opts.max_steps {
                return Err(Error::Numerical("maximum number of ODE steps exceeded".into()));
            }
            steps += 1;
            let last = target - t <= h;
            let hs = if last { target - t } else { h };
            for s in 1..7 {
                tmp.copy_from_slice(&y);
                for (j, kj) in k.iter().enumerate().take(s) {
                    let a = A[s][j];
                    if a != 0.0 {
                        for i in 0..n {
                            tmp[i] += hs * a * kj[i];
                        }
                    }
                }
                let (_, tail) = k.split_at_mut(s);
                f(t + C[s] * hs, &tmp, &mut tail[0]);
            }
            // tmp holds the 5th-order solution (FSAL stage 6).
            let mut err = 0.0;
            for i in 0..n {
                let e: f64 = (0..7).map(|s| E[s] * k[s][i]).sum::<f64>() * hs;
                let sc = opts.atol + opts.rtol * y[i].abs().max(tmp[i].abs());
                err += (e / sc) * (e / sc);
            }
            let err = if n > 0 { libm::sqrt(err / n as f64) } else { 0.0 };
            if !err.is_finite() {
                return Err(Error::Stiffness { t, h: hs });
            }
            if err <= 1.0 {
                t = if last { target } else { t + hs };
                y.copy_from_slice(&tmp);
                let (first, rest) = k.split_at_mut(1);
                first[0].copy_from_slice(&rest[5]);
            }
            let fac = if err == 0.0 { 5.0 } else { (0.9 * libm::pow(err, -0.2)).clamp(0.2, 5.0) };
            if err <= 1.0 && last {
                h = h.max(hs * fac.min(1.0));
            } else {
                h = hs * fac;
            }
            if h < 1e-14 * t.abs().max(1e-300) || h < 1e-300 {
                return Err(Error::Stiffness { t, h });
            }
        }
        out.push(y.clone());
    }
    Ok(out)
}

fn initial_step(y: &[f64], dy: &[f64], opts: OdeOptions) -> f64 {
    let mut d0: f64 = 0.0;
    let mut d1: f64 = 0.0;
    for i in 0..y.len() {
        let sc = opts.atol + opts.rtol * y[i].abs();
        d0 = d0.max((y[i] / sc).abs());
        d1 = d1.max((dy[i] / sc).abs());
    }
    if d0 < 1e-5 || d1 < 1e-5 {
        1e-6
    } else {
        0.01 * d0 / d1
    }
}
