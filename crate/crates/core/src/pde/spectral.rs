//! Eigenfunction expansions for the heat equation on [0,1] with Dirichlet,
//! Robin and Neumann boundary conditions.

use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::PI;

use libm::{cos, exp, sin, sqrt};

use crate::model::Profile;
use crate::quad::CompositeRule;
use crate::stationary::{stat_sol_dir, stat_sol_rob};
use crate::{Error, Result};

/// Mode cap used when t = 0 (the tail cannot be controlled there).
pub const MAX_MODES: usize = 2048;

#[derive(Debug, Clone, PartialEq)]
pub struct SpectralSolution {
    /// √λ_n for the modes used.
    pub frequencies: Vec<f64>,
    pub coefficients: Vec<f64>,
    pub values: Vec<f64>,
    /// Bound on the truncated tail; `None` at t = 0, where it is not controlled.
    pub tail_bound: Option<f64>,
}

impl SpectralSolution {
    pub fn modes(&self) -> usize {
        self.coefficients.len()
    }
}

/// Σ_{k≥m} e^{−c k²} ≤ e^{−c m²}/(1 − e^{−2cm}).
fn gaussian_tail(c: f64, m: usize) -> f64 {
    let m = m.max(1) as f64;
    exp(-c * m * m) / (1.0 - exp(-2.0 * c * m))
}

fn quadrature_for(g: &Profile, modes: usize) -> CompositeRule {
    let mut breaks = vec![0.0];
    breaks.extend(g.breakpoints().into_iter().filter(|b| *b > 0.0 && *b < 1.0));
    breaks.push(1.0);
    breaks.sort_by(|a, b| a.partial_cmp(b).unwrap());
    breaks.dedup();
    CompositeRule::with_breaks(&breaks, 2 * modes + 64, 10)
}

fn mode_count(bound: f64, decay: f64, tol: f64) -> (usize, Option<f64>) {
    if decay <= 0.0 {
        return (MAX_MODES, None);
    }
    let mut m = 1;
    while m < MAX_MODES && bound * gaussian_tail(decay, m) > tol {
        m += 1;
    }
    (m, Some(bound * gaussian_tail(decay, m)))
}

/// ρ̄ + Σ C_n e^{−D(nπ)²t} sin(nπq) with ρ̄ the linear interpolation of the
/// boundary values and C_n = 2∫(g − ρ̄) sin(nπq).
pub fn heat_dirichlet_spectral(
    g: &Profile,
    alpha: f64,
    beta: f64,
    diffusion: f64,
    t: f64,
    grid: &[f64],
    tol: f64,
) -> Result<SpectralSolution> {
    if !(t >= 0.0) || !(diffusion > 0.0) || !(tol > 0.0) {
        return Err(Error::InvalidParams("need t ≥ 0, D > 0 and tol > 0".into()));
    }
    let dev = |q: f64| g.eval(q) - stat_sol_dir(q, alpha, beta);
    let coarse = quadrature_for(g, 64);
    let l1 = coarse.integrate(|q| dev(q).abs());
    // |C_n| ≤ 2‖g − ρ̄‖₁ and |sin| ≤ 1; tail starts at n = m + 1
    let (m, _) = mode_count(2.0 * l1, diffusion * PI * PI * t, tol);
    let tail_bound = (t > 0.0).then(|| 2.0 * l1 * gaussian_tail(diffusion * PI * PI * t, m + 1));
    let rule = quadrature_for(g, m);
    let mut coefficients = vec![0.0; m];
    for (&q, &w) in rule.nodes.iter().zip(&rule.weights) {
        let d = 2.0 * w * dev(q);
        // sin(nπq) by the three-term recurrence
        let (s1, c1) = (sin(PI * q), cos(PI * q));
        let (mut prev, mut cur) = (0.0, s1);
        for c in coefficients.iter_mut() {
            *c += d * cur;
            let next = 2.0 * c1 * cur - prev;
            prev = cur;
            cur = next;
        }
    }
    let frequencies: Vec<f64> = (1..=m).map(|n| n as f64 * PI).collect();
    let values = grid
        .iter()
        .map(|&q| {
            let mut v = stat_sol_dir(q, alpha, beta);
            for (k, c) in coefficients.iter().enumerate() {
                let s = frequencies[k];
                v += c * exp(-diffusion * s * s * t) * sin(s * q);
            }
            v
        })
        .collect();
    Ok(SpectralSolution { frequencies, coefficients, values, tail_bound })
}

/// F(s) = (h² − s²) sin s + 2hs cos s; its positive roots are the √λ_n of
/// X'' = −λX with X'(0) = hX(0), X'(1) = −hX(1).
pub fn robin_characteristic(s: f64, h: f64) -> f64 {
    (h * h - s * s) * sin(s) + 2.0 * h * s * cos(s)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RobinMode {
    pub sqrt_lambda: f64,
    pub lambda: f64,
    /// |F(s)|/(s + h)².
    pub residual: f64,
}

/// The first `n_max` Robin eigenvalues; the n-th lies in ((n−1)π, nπ).
/// For h = 0 these are the nonzero Neumann values nπ.
pub fn robin_eigenvalues(h: f64, n_max: usize, tol: f64) -> Result<Vec<RobinMode>> {
    if !(h >= 0.0) || !h.is_finite() {
        return Err(Error::InvalidParams("Robin coefficient must be finite and ≥ 0".into()));
    }
    let mut out = Vec::with_capacity(n_max);
    for n in 1..=n_max {
        let s = if h == 0.0 {
            n as f64 * PI
        } else {
            let mut lo = (n - 1) as f64 * PI;
            let mut hi = n as f64 * PI;
            if n == 1 {
                lo = 1e-300_f64.max(hi * 1e-12);
            }
            let mut flo = robin_characteristic(lo, h);
            let fhi = robin_characteristic(hi, h);
            if flo == 0.0 {
                lo
            } else {
                if flo.signum() == fhi.signum() {
                    return Err(Error::NoSignChange { lo, hi });
                }
                for _ in 0..200 {
                    let mid = 0.5 * (lo + hi);
                    if hi - lo <= tol.max(f64::EPSILON * hi) || mid <= lo || mid >= hi {
                        break;
                    }
                    let fm = robin_characteristic(mid, h);
                    if fm == 0.0 {
                        lo = mid;
                        hi = mid;
                        break;
                    }
                    if fm.signum() == flo.signum() {
                        lo = mid;
                        flo = fm;
                    } else {
                        hi = mid;
                    }
                }
                0.5 * (lo + hi)
            }
        };
        // the Neumann roots are closed-form; |sin(fl(nπ))| is only rounding
        let residual = if h == 0.0 { 0.0 } else { robin_characteristic(s, h).abs() / ((s + h) * (s + h)) };
        out.push(RobinMode { sqrt_lambda: s, lambda: s * s, residual });
    }
    Ok(out)
}

/// L²-normalized eigenfunction (s cos(sq) + h sin(sq))/‖·‖.
pub fn robin_eigenfunction(s: f64, h: f64, q: f64) -> f64 {
    (s * cos(s * q) + h * sin(s * q)) / robin_norm(s, h)
}

fn robin_norm(s: f64, h: f64) -> f64 {
    let sn = sin(s);
    let n2 = 0.5 * (s * s + h * h) + (s * s - h * h) * sin(2.0 * s) / (4.0 * s) + h * sn * sn;
    sqrt(n2)
}

/// Heat flow ∂ρ = D∂²ρ with ∂ρ(0) = h(ρ(0) − α), ∂ρ(1) = h(β − ρ(1)).
/// h = 0 is the Neumann problem, expanded in cosines around the mean of g.
pub fn robin_spectral_solution(
    g: &Profile,
    h: f64,
    alpha: f64,
    beta: f64,
    diffusion: f64,
    t: f64,
    grid: &[f64],
    tol: f64,
) -> Result<SpectralSolution> {
    if !(t >= 0.0) || !(diffusion > 0.0) || !(tol > 0.0) {
        return Err(Error::InvalidParams("need t ≥ 0, D > 0 and tol > 0".into()));
    }
    let coarse = quadrature_for(g, 64);
    let base: alloc::boxed::Box<dyn Fn(f64) -> f64> = if h == 0.0 {
        let mass = coarse.integrate(|q| g.eval(q));
        alloc::boxed::Box::new(move |_| mass)
    } else {
        alloc::boxed::Box::new(move |q| stat_sol_rob(q, h, alpha, beta))
    };
    let l1 = coarse.integrate(|q| (g.eval(q) - base(q)).abs());
    // √λ_n ≥ (n−1)π and sup|X_n| ≤ √2·(1 + o(1)); use 2 as the constant
    let decay = diffusion * PI * PI * t;
    let bound = 4.0 * l1;
    let mut m = MAX_MODES;
    let mut tail_bound = None;
    if t > 0.0 {
        m = 1;
        while m < MAX_MODES && bound * gaussian_tail(decay, m) > tol {
            m += 1;
        }
        tail_bound = Some(bound * gaussian_tail(decay, m));
    }
    let modes = robin_eigenvalues(h, m, 1e-15)?;
    let rule = quadrature_for(g, m);
    let frequencies: Vec<f64> = modes.iter().map(|m| m.sqrt_lambda).collect();
    let norms: Vec<f64> = frequencies.iter().map(|&s| robin_norm(s, h)).collect();
    let x = |k: usize, q: f64| {
        let s = frequencies[k];
        (s * cos(s * q) + h * sin(s * q)) / norms[k]
    };
    let mut coefficients = vec![0.0; m];
    for (&q, &w) in rule.nodes.iter().zip(&rule.weights) {
        let d = w * (g.eval(q) - base(q));
        for (k, c) in coefficients.iter_mut().enumerate() {
            *c += d * x(k, q);
        }
    }
    let values = grid
        .iter()
        .map(|&q| {
            let mut v = base(q);
            for (k, c) in coefficients.iter().enumerate() {
                let s = frequencies[k];
                v += c * exp(-diffusion * s * s * t) * x(k, q);
            }
            v
        })
        .collect();
    Ok(SpectralSolution { frequencies, coefficients, values, tail_bound })
}
