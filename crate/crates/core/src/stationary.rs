//! Closed-form stationary objects and the brute-force stationary oracle.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;
use libm::pow;

use crate::kernel::KernelChoice;
use crate::linalg::{DenseMatrix, Lu};
use crate::model::{generator_matrix, InitialMeasure, Model, ModelParams};
use crate::pairs::PairIndex;
use crate::{Error, Result};

/// Largest lattice accepted by [`brute_force_stationary`].
pub const MAX_BRUTE_FORCE_N: usize = 10;

fn require_nn(p: &ModelParams, what: &str) -> Result<()> {
    match p.kernel {
        KernelChoice::NearestNeighbor => Ok(()),
        KernelChoice::LongJump { .. } => {
            Err(Error::Unsupported(format!("{what} has no closed form for the long-jump model")))
        }
    }
}

/// Coefficients (a_N, b_N) of the affine stationary profile a_N x + b_N.
pub fn affine_coefficients(p: &ModelParams) -> Result<(f64, f64)> {
    require_nn(p, "the stationary profile")?;
    if p.kappa == 0.0 {
        return Err(Error::InvalidParams("stationary profile needs kappa > 0".into()));
    }
    let nt = pow(p.n as f64, p.theta);
    let a = p.kappa * (p.beta - p.alpha) / (2.0 * nt + p.kappa * (p.n as f64 - 2.0));
    let b = a * (nt / p.kappa - 1.0) + p.alpha;
    Ok((a, b))
}

/// ρ_ss(x) for x ∈ {0, …, N}.
pub fn rho_ss(x: usize, p: &ModelParams) -> Result<f64> {
    if x > p.n {
        return Err(Error::InvalidParams(format!("site {x} outside 0..={}", p.n)));
    }
    let (a, b) = affine_coefficients(p)?;
    Ok(a * x as f64 + b)
}

/// ρ_ss on Λ_N.
pub fn rho_ss_profile(p: &ModelParams) -> Result<Vec<f64>> {
    let (a, b) = affine_coefficients(p)?;
    Ok((1..p.n).map(|x| a * x as f64 + b).collect())
}

/// φ_ss(x, y) for (x, y) ∈ V_N; only for κ = 1.
pub fn phi_ss(x: usize, y: usize, p: &ModelParams) -> Result<f64> {
    require_nn(p, "the stationary correlation")?;
    if p.kappa != 1.0 {
        return Err(Error::Unsupported(format!(
            "closed-form correlation is known only for kappa = 1 (got {}); use the correlation steady state",
            p.kappa
        )));
    }
    if !PairIndex::new(p.n).contains(x, y) {
        return Err(Error::InvalidParams(format!("({x}, {y}) is not in V_N for N = {}", p.n)));
    }
    let nt = pow(p.n as f64, p.theta);
    let n = p.n as f64;
    let d = p.alpha - p.beta;
    let den = (2.0 * nt + n - 2.0) * (2.0 * nt + n - 2.0) * (2.0 * nt + n - 3.0);
    Ok(-d * d * (x as f64 + nt - 1.0) * (n - y as f64 + nt - 1.0) / den)
}

/// φ_ss over V_N in [`PairIndex`] order.
pub fn phi_ss_field(p: &ModelParams) -> Result<Vec<f64>> {
    PairIndex::new(p.n).pairs().map(|(x, y)| phi_ss(x, y, p)).collect()
}

/// Macroscopic stationary profile ρ̄(q) for the three boundary regimes.
pub fn macro_profile(q: f64, theta: f64, kappa: f64, alpha: f64, beta: f64) -> f64 {
    if theta < 1.0 {
        stat_sol_dir(q, alpha, beta)
    } else if theta == 1.0 {
        stat_sol_rob(q, kappa, alpha, beta)
    } else {
        0.5 * (alpha + beta)
    }
}

/// Stationary Dirichlet profile (β − α)q + α.
pub fn stat_sol_dir(q: f64, alpha: f64, beta: f64) -> f64 {
    (beta - alpha) * q + alpha
}

/// Stationary solution of the heat equation with ∂ρ(0) = h(ρ(0) − α), ∂ρ(1) = h(β − ρ(1)).
pub fn stat_sol_rob(q: f64, h: f64, alpha: f64, beta: f64) -> f64 {
    h * (beta - alpha) * q / (2.0 + h) + alpha + (beta - alpha) / (2.0 + h)
}

/// (log |Z_{N−1}|, sign Z_{N−1}) with Z_{N−1} = (α−β)^{−(N−1)} Γ(2N^θ+N−1)/Γ(2N^θ).
pub fn log_partition(p: &ModelParams) -> Result<(f64, f64)> {
    if p.alpha == p.beta {
        return Err(Error::InvalidParams("partition function is undefined for alpha = beta".into()));
    }
    let nt = pow(p.n as f64, p.theta);
    let m = (p.n - 1) as f64;
    let d = p.alpha - p.beta;
    let log = -m * libm::log(d.abs()) + libm::lgamma(2.0 * nt + m) - libm::lgamma(2.0 * nt);
    let sign = if d < 0.0 && (p.n - 1) % 2 == 1 { -1.0 } else { 1.0 };
    Ok((log, sign))
}

#[derive(Debug, Clone)]
pub struct StationaryOracle {
    /// π over configuration indices (bit x−1 holds η(x)).
    pub distribution: Vec<f64>,
    pub profile: Vec<f64>,
    /// Pair correlations in [`PairIndex`] order.
    pub correlations: Vec<f64>,
    /// ‖πQ‖_∞.
    pub residual: f64,
    pub pivot_ratio: f64,
}

/// Solves πQ = 0, Σπ = 1 on the full configuration space.
pub fn brute_force_stationary(model: &Model) -> Result<StationaryOracle> {
    let n = model.params.n;
    if n > MAX_BRUTE_FORCE_N {
        return Err(Error::StateSpaceTooLarge { n });
    }
    let q = generator_matrix(model)?;
    let size = q.rows();
    let mut m: DenseMatrix = q.transpose();
    for j in 0..size {
        m[(size - 1, j)] = 1.0;
    }
    let mut rhs = vec![0.0; size];
    rhs[size - 1] = 1.0;
    let lu = Lu::factor(&m)?;
    let pi = lu.solve(&rhs);
    let residual = q.vecmat(&pi).iter().fold(0.0f64, |a, v| a.max(v.abs()));
    if !(residual <= 1e-10) {
        return Err(Error::Numerical(format!(
            "stationary solve residual {residual:e} (pivot ratio {:e})",
            lu.pivot_ratio
        )));
    }
    let mut profile = vec![0.0; n - 1];
    let pairs = PairIndex::new(n);
    let mut second = vec![0.0; pairs.len()];
    for (i, &w) in pi.iter().enumerate() {
        for x in 1..n {
            if (i >> (x - 1)) & 1 == 1 {
                profile[x - 1] += w;
                for y in x + 1..n {
                    if (i >> (y - 1)) & 1 == 1 {
                        second[pairs.index(x, y)] += w;
                    }
                }
            }
        }
    }
    let correlations = pairs.pairs().map(|(x, y)| second[pairs.index(x, y)] - profile[x - 1] * profile[y - 1]).collect();
    Ok(StationaryOracle { distribution: pi, profile, correlations, residual, pivot_ratio: lu.pivot_ratio })
}

impl InitialMeasure {
    /// Exact stationary measure of a small system.
    pub fn stationary(model: &Model) -> Result<Self> {
        Ok(InitialMeasure::StationarySample(brute_force_stationary(model)?.distribution))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn nn(n: usize, a: f64, b: f64, k: f64, th: f64) -> ModelParams {
        ModelParams::nearest_neighbor(n, a, b, k, th).unwrap()
    }

    #[test]
    fn equal_reservoirs_give_flat_profile() {
        let p = nn(7, 0.3, 0.3, 2.0, 0.5);
        for x in 0..=7 {
            assert!((rho_ss(x, &p).unwrap() - 0.3).abs() < 1e-15);
        }
        assert_eq!(phi_ss(2, 5, &nn(7, 0.3, 0.3, 1.0, 0.5)).unwrap(), 0.0);
    }

    #[test]
    fn four_site_examples() {
        let p = nn(4, 0.0, 1.0, 1.0, 0.0);
        let prof = rho_ss_profile(&p).unwrap();
        for (v, e) in prof.iter().zip([0.25, 0.5, 0.75]) {
            assert!((v - e).abs() < 1e-15);
        }
        assert!((phi_ss(1, 2, &p).unwrap() + 1.0 / 24.0).abs() < 1e-15);
        let oracle = brute_force_stationary(&Model::new(p).unwrap()).unwrap();
        assert!((oracle.correlations[0] + 1.0 / 24.0).abs() < 1e-12);
        assert!(oracle.residual <= 1e-12);
    }

    #[test]
    fn kappa_one_reduces_to_kappa_free_form() {
        // κ-free form: α + (β−α)(x + N^θ − 1)/(2N^θ + N − 2).
        let (a, b) = (0.1, 0.7);
        let p = nn(9, a, b, 1.0, 0.7);
        let nt = 9f64.powf(0.7);
        for x in 1..9 {
            let s = (x as f64 + nt - 1.0) / (2.0 * nt + 9.0 - 2.0);
            assert!((rho_ss(x, &p).unwrap() - (a + (b - a) * s)).abs() < 1e-14);
        }
    }

    #[test]
    fn large_theta_limit_is_average() {
        let p = nn(10, 0.2, 0.8, 1.0, 40.0);
        for x in 1..10 {
            assert!((rho_ss(x, &p).unwrap() - 0.5).abs() < 1e-12);
        }
    }

    #[test]
    fn macro_profile_branches() {
        assert!((macro_profile(0.5, 0.0, 1.0, 0.2, 0.8) - 0.5).abs() < 1e-15);
        assert!((macro_profile(0.0, 1.0, 1.0, 0.2, 0.8) - 0.4).abs() < 1e-15);
        assert!((macro_profile(1.0, 1.0, 1.0, 0.2, 0.8) - 0.6).abs() < 1e-15);
        assert_eq!(macro_profile(0.3, 2.0, 1.0, 0.2, 0.8), 0.5);
    }

    #[test]
    fn robin_profile_satisfies_boundary_conditions() {
        let (h, a, b) = (2.7, 0.1, 0.9);
        let slope = stat_sol_rob(1.0, h, a, b) - stat_sol_rob(0.0, h, a, b);
        assert!((slope - h * (stat_sol_rob(0.0, h, a, b) - a)).abs() < 1e-15);
        assert!((slope - h * (b - stat_sol_rob(1.0, h, a, b))).abs() < 1e-15);
    }

    #[test]
    fn two_site_oracle() {
        let p = nn(2, 0.3, 0.8, 1.0, 0.0);
        let o = brute_force_stationary(&Model::new(p).unwrap()).unwrap();
        assert!((o.profile[0] - 0.55).abs() < 1e-14);
    }

    #[test]
    fn oracle_matches_closed_form_with_kappa() {
        let p = nn(4, 0.1, 0.9, 2.0, 1.0);
        let o = brute_force_stationary(&Model::new(p).unwrap()).unwrap();
        let cf = rho_ss_profile(&p).unwrap();
        for (u, v) in o.profile.iter().zip(&cf) {
            assert!((u - v).abs() < 1e-10);
        }
    }

    #[test]
    fn oracle_recovers_bernoulli_product() {
        let p = nn(5, 0.35, 0.35, 1.5, 0.0);
        let o = brute_force_stationary(&Model::new(p).unwrap()).unwrap();
        for (i, &w) in o.distribution.iter().enumerate() {
            let k = i.count_ones() as i32;
            assert!((w - 0.35f64.powi(k) * 0.65f64.powi(4 - k)).abs() < 1e-12);
        }
    }

    #[test]
    fn log_partition_small_cases() {
        let (a, b) = (0.9, 0.2);
        let (l, s) = log_partition(&nn(2, a, b, 1.0, 0.0)).unwrap();
        assert!((s * l.exp() - 2.0 / (a - b)).abs() < 1e-13);
        // Γ(2+2)/Γ(2) = 6; the closed form gives 6/(α−β)² at N = 3.
        let (l, s) = log_partition(&nn(3, a, b, 1.0, 0.0)).unwrap();
        assert!((s * l.exp() - 6.0 / ((a - b) * (a - b))).abs() < 1e-12);
        let (_, s) = log_partition(&nn(2, b, a, 1.0, 0.0)).unwrap();
        assert_eq!(s, -1.0);
        assert!(log_partition(&nn(3, a, a, 1.0, 0.0)).is_err());
    }

    #[test]
    fn unsupported_cases() {
        let lj = ModelParams::new(5, 0.1, 0.9, 1.0, 0.0, KernelChoice::LongJump { gamma: 3.0 }).unwrap();
        assert!(matches!(rho_ss(1, &lj), Err(Error::Unsupported(_))));
        assert!(matches!(phi_ss(1, 2, &nn(5, 0.1, 0.9, 2.0, 0.0)), Err(Error::Unsupported(_))));
        assert!(matches!(phi_ss(2, 2, &nn(5, 0.1, 0.9, 1.0, 0.0)), Err(Error::InvalidParams(_))));
    }

    proptest! {
        #[test]
        fn correlation_nonpositive(n in 3usize..40, th in -1.0f64..3.0, a in 0.0f64..1.0, b in 0.0f64..1.0) {
            let p = nn(n, a, b, 1.0, th);
            for v in phi_ss_field(&p).unwrap() {
                prop_assert!(v <= 0.0);
            }
        }

        #[test]
        fn log_partition_grows_with_n(n in 2usize..200, th in 0.0f64..2.0) {
            let a = log_partition(&nn(n, 0.9, 0.2, 1.0, th)).unwrap().0;
            let b = log_partition(&nn(n + 1, 0.9, 0.2, 1.0, th)).unwrap().0;
            prop_assert!(b > a);
        }
    }
}
