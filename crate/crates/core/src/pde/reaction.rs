//! Reaction and reaction-diffusion equations with the singular boundary
//! potentials W(q) = q^{−γ−1} + (1 − q)^{−γ−1}.

use alloc::vec;
use alloc::vec::Vec;

use libm::{ceil, exp, pow};

use crate::linalg::solve_tridiagonal;
use crate::model::Profile;
use crate::{Error, Result};

fn potentials(q: f64, gamma: f64) -> (f64, f64) {
    (pow(q, -gamma - 1.0), pow(1.0 - q, -gamma - 1.0))
}

/// W(q) and the relaxation target ρ∞(q) = (αq^{−γ−1} + β(1 − q)^{−γ−1})/W(q).
pub fn reaction_target(q: f64, gamma: f64, alpha: f64, beta: f64) -> (f64, f64) {
    let (l, r) = potentials(q, gamma);
    // divide through by the larger term to avoid inf/inf near the ends
    let target = if l >= r { (alpha + beta * (r / l)) / (1.0 + r / l) } else { (alpha * (l / r) + beta) / (1.0 + l / r) };
    (l + r, target)
}

/// Exact solution of ∂ρ = κ̂[(α − ρ)q^{−γ−1} + (β − ρ)(1 − q)^{−γ−1}] from g.
pub fn reaction_exact(g: &Profile, kappa_hat: f64, gamma: f64, alpha: f64, beta: f64, t: f64, grid: &[f64]) -> Result<Vec<f64>> {
    if !(t >= 0.0) || !(kappa_hat >= 0.0) {
        return Err(Error::InvalidParams("need t ≥ 0 and κ̂ ≥ 0".into()));
    }
    grid.iter()
        .map(|&q| {
            if !(q > 0.0 && q < 1.0) {
                return Err(Error::InvalidParams("the reaction potential is singular at q = 0 and q = 1".into()));
            }
            Ok(reaction_step(g.eval(q), q, gamma, alpha, beta, kappa_hat * t))
        })
        .collect()
}

fn reaction_step(u: f64, q: f64, gamma: f64, alpha: f64, beta: f64, kt: f64) -> f64 {
    let (w, target) = reaction_target(q, gamma, alpha, beta);
    target + (u - target) * exp(-kt * w)
}

#[derive(Debug, Clone, PartialEq)]
pub struct FdSolution {
    /// Cell centres (i + ½)/M.
    pub grid: Vec<f64>,
    pub values: Vec<f64>,
    pub steps: usize,
    pub dt: f64,
}

/// Settings for [`reaction_diffusion_fd`]. The time step is the smaller of
/// `max_dt` and half the explicit diffusion limit h²/D.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FdOptions {
    pub cells: usize,
    pub max_dt: f64,
}

impl Default for FdOptions {
    fn default() -> Self {
        FdOptions { cells: 512, max_dt: 1e-3 }
    }
}

struct Stepper {
    m: usize,
    h: f64,
    d: f64,
    dt: f64,
    lower: Vec<f64>,
    diag: Vec<f64>,
    upper: Vec<f64>,
    bc: Vec<f64>,
    w: Vec<f64>,
    target: Vec<f64>,
    kappa_hat: f64,
}

impl Stepper {
    fn new(sigma_hat: f64, kappa_hat: f64, gamma: f64, alpha: f64, beta: f64, opts: FdOptions) -> Self {
        let m = opts.cells;
        let h = 1.0 / m as f64;
        let d = 0.5 * sigma_hat * sigma_hat;
        let dt = if d > 0.0 { opts.max_dt.min(0.5 * h * h / d) } else { opts.max_dt };
        let r = d / (h * h);
        let mut lower = vec![-0.5 * dt * r; m];
        let mut upper = vec![-0.5 * dt * r; m];
        let mut diag = vec![1.0 + dt * r; m];
        // ghost cells u₀ = 2α − u₁ and u_{M+1} = 2β − u_M
        diag[0] += 0.5 * dt * r;
        diag[m - 1] += 0.5 * dt * r;
        lower[0] = 0.0;
        upper[m - 1] = 0.0;
        let mut bc = vec![0.0; m];
        bc[0] += 2.0 * r * alpha;
        bc[m - 1] += 2.0 * r * beta;
        let (w, target) = (0..m).map(|i| reaction_target((i as f64 + 0.5) * h, gamma, alpha, beta)).unzip();
        Stepper { m, h, d, dt, lower, diag, upper, bc, w, target, kappa_hat }
    }

    fn half_step_factors(&self, dt: f64) -> Vec<f64> {
        self.w.iter().map(|w| exp(-self.kappa_hat * 0.5 * dt * w)).collect()
    }

    fn react(&self, u: &mut [f64], factors: &[f64]) {
        for i in 0..self.m {
            u[i] = self.target[i] + (u[i] - self.target[i]) * factors[i];
        }
    }

    /// Thomas factors (c′, 1/denominator) of the implicit matrix.
    fn factor(&self) -> (Vec<f64>, Vec<f64>) {
        let m = self.m;
        let mut c = vec![0.0; m];
        let mut inv = vec![0.0; m];
        inv[0] = 1.0 / self.diag[0];
        c[0] = self.upper[0] * inv[0];
        for i in 1..m {
            inv[i] = 1.0 / (self.diag[i] - self.lower[i] * c[i - 1]);
            c[i] = self.upper[i] * inv[i];
        }
        (c, inv)
    }

    fn diffuse(&self, u: &mut [f64], c: &[f64], inv: &[f64], rhs: &mut [f64]) {
        if self.d == 0.0 {
            return;
        }
        let m = self.m;
        let r = 0.5 * self.dt * self.d / (self.h * self.h);
        for i in 0..m {
            let left = if i == 0 { -u[0] } else { u[i - 1] };
            let right = if i + 1 == m { -u[m - 1] } else { u[i + 1] };
            rhs[i] = u[i] + r * (left + right - 2.0 * u[i]) + self.dt * self.bc[i];
        }
        rhs[0] *= inv[0];
        for i in 1..m {
            rhs[i] = (rhs[i] - self.lower[i] * rhs[i - 1]) * inv[i];
        }
        u[m - 1] = rhs[m - 1];
        for i in (0..m - 1).rev() {
            u[i] = rhs[i] - c[i] * u[i + 1];
        }
    }

    fn run(&self, u: &mut [f64], steps: usize) {
        let f = self.half_step_factors(self.dt);
        let (c, inv) = self.factor();
        let mut scratch = vec![0.0; self.m];
        for _ in 0..steps {
            self.react(u, &f);
            self.diffuse(u, &c, &inv, &mut scratch);
            self.react(u, &f);
        }
    }

    /// Steady state of the semi-discrete system.
    fn steady_state(&self) -> Result<Vec<f64>> {
        let r = self.d / (self.h * self.h);
        let m = self.m;
        let mut diag = vec![0.0; m];
        let lower = vec![-r; m];
        let upper = vec![-r; m];
        let mut rhs = vec![0.0; m];
        for i in 0..m {
            diag[i] = 2.0 * r + self.kappa_hat * self.w[i];
            rhs[i] = self.kappa_hat * self.w[i] * self.target[i] + self.bc[i];
        }
        diag[0] += r;
        diag[m - 1] += r;
        solve_tridiagonal(&lower, &diag, &upper, &rhs)
    }
}

/// Strang splitting for ∂ρ = (σ̂²/2)∂²ρ + κ̂[(α − ρ)q^{−γ−1} + (β − ρ)(1 − q)^{−γ−1}]
/// with ρ(0) = α, ρ(1) = β: exact reaction half steps around a Crank–Nicolson
/// diffusion step on a cell-centred grid.
pub fn reaction_diffusion_fd(
    g: &Profile,
    sigma_hat: f64,
    kappa_hat: f64,
    gamma: f64,
    alpha: f64,
    beta: f64,
    t: f64,
    opts: FdOptions,
) -> Result<FdSolution> {
    if opts.cells < 2 || !(opts.max_dt > 0.0) || !(t >= 0.0) {
        return Err(Error::InvalidParams("need at least two cells, max_dt > 0 and t ≥ 0".into()));
    }
    let st = Stepper::new(sigma_hat, kappa_hat, gamma, alpha, beta, opts);
    let grid: Vec<f64> = (0..st.m).map(|i| (i as f64 + 0.5) * st.h).collect();
    let mut u: Vec<f64> = grid.iter().map(|&q| g.eval(q)).collect();
    let steps = ceil(t / st.dt) as usize;
    let dt = if steps > 0 { t / steps as f64 } else { st.dt };
    let st = if dt != st.dt { Stepper::new(sigma_hat, kappa_hat, gamma, alpha, beta, FdOptions { max_dt: dt, ..opts }) } else { st };
    st.run(&mut u, steps);
    Ok(FdSolution { grid, values: u, steps, dt })
}

/// Stationary solution of the semi-discrete reaction-diffusion system.
pub fn reaction_diffusion_steady_state(
    sigma_hat: f64,
    kappa_hat: f64,
    gamma: f64,
    alpha: f64,
    beta: f64,
    cells: usize,
) -> Result<FdSolution> {
    let st = Stepper::new(sigma_hat, kappa_hat, gamma, alpha, beta, FdOptions { cells, max_dt: 1.0 });
    let grid = (0..cells).map(|i| (i as f64 + 0.5) * st.h).collect();
    Ok(FdSolution { grid, values: st.steady_state()?, steps: 0, dt: 0.0 })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exact_reaction_relaxes_to_target() {
        let g = Profile::Constant(0.5);
        let grid = [0.1, 0.5, 0.9];
        let v = reaction_exact(&g, 2.0, 3.0, 0.2, 0.8, 50.0, &grid).unwrap();
        for (q, v) in grid.iter().zip(v) {
            assert!((v - reaction_target(*q, 3.0, 0.2, 0.8).1).abs() < 1e-12);
        }
        assert!(reaction_exact(&g, 1.0, 3.0, 0.2, 0.8, 1.0, &[0.0]).is_err());
    }

    #[test]
    fn exact_reaction_solves_the_ode() {
        // centred difference in t against the right-hand side
        let g = Profile::Linear { left: 0.9, right: 0.1 };
        let (k, gm, a, b, q, t, dt) = (0.7, 1.5, 0.3, 0.6, 0.37, 0.2, 1e-5);
        let f = |t| reaction_exact(&g, k, gm, a, b, t, &[q]).unwrap()[0];
        let lhs = (f(t + dt) - f(t - dt)) / (2.0 * dt);
        let u = f(t);
        let rhs = k * ((a - u) * pow(q, -gm - 1.0) + (b - u) * pow(1.0 - q, -gm - 1.0));
        assert!((lhs - rhs).abs() < 1e-7);
    }

    #[test]
    fn fd_keeps_values_in_range() {
        let g = Profile::Step { left: 1.0, right: 0.0, at: 0.4 };
        let sol = reaction_diffusion_fd(&g, 1.0, 1.0, 3.0, 0.2, 0.7, 0.05, FdOptions { cells: 256, max_dt: 1e-3 }).unwrap();
        assert!(sol.values.iter().all(|v| *v >= -1e-9 && *v <= 1.0 + 1e-9));
    }

    #[test]
    fn fd_without_diffusion_is_the_reaction_flow() {
        let g = Profile::Bump { base: 0.1, height: 0.8, center: 0.4, width: 0.3 };
        let sol = reaction_diffusion_fd(&g, 0.0, 1.3, 2.5, 0.2, 0.7, 0.3, FdOptions { cells: 64, max_dt: 0.01 }).unwrap();
        let exact = reaction_exact(&g, 1.3, 2.5, 0.2, 0.7, 0.3, &sol.grid).unwrap();
        for (a, b) in sol.values.iter().zip(exact) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn fd_heat_mode_without_reaction() {
        // κ̂ = 0, α = β = 0: sin(πq) decays like e^{−π²t/2} (up to O(h²))
        let g = Profile::custom(|q| libm::sin(core::f64::consts::PI * q));
        let t = 0.1;
        let mut errs = vec![];
        for m in [64, 128, 256] {
            let sol = reaction_diffusion_fd(&g, 1.0, 0.0, 3.0, 0.0, 0.0, t, FdOptions { cells: m, max_dt: 1e-3 }).unwrap();
            let e = sol
                .grid
                .iter()
                .zip(&sol.values)
                .map(|(q, v)| (v - exp(-0.5 * core::f64::consts::PI.powi(2) * t) * libm::sin(core::f64::consts::PI * q)).abs())
                .fold(0.0, f64::max);
            errs.push(e);
        }
        assert!(errs[0] / errs[1] > 3.5 && errs[1] / errs[2] > 3.5, "{errs:?}");
    }

    #[test]
    fn stationary_profile_drift_is_small() {
        let (sigma, k, gm, a, b) = (1.0, 1.0, 3.0, 0.2, 0.8);
        let ss = reaction_diffusion_steady_state(sigma, k, gm, a, b, 512).unwrap();
        let v = ss.values.clone();
        let g = Profile::custom(move |q| v[((q * 512.0) as usize).min(511)]);
        let sol = reaction_diffusion_fd(&g, sigma, k, gm, a, b, 1.0, FdOptions { cells: 512, max_dt: 1e-3 }).unwrap();
        let drift = sol.values.iter().zip(&ss.values).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max);
        assert!(drift <= 1e-6, "drift {drift}");
    }
}
