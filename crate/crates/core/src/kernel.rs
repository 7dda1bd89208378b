//! Jump kernels p(·) and their derived constants.

use alloc::format;
use alloc::vec::Vec;
use libm::pow;

use crate::series::{self, PowerSum};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum KernelChoice {
    NearestNeighbor,
    /// p(z) = c_γ |z|^{-(γ+1)}.
    LongJump { gamma: f64 },
}

impl KernelChoice {
    pub fn gamma(&self) -> Option<f64> {
        match *self {
            KernelChoice::NearestNeighbor => None,
            KernelChoice::LongJump { gamma } => Some(gamma),
        }
    }

    pub fn label(&self) -> &'static str {
        match self {
            KernelChoice::NearestNeighbor => "nn",
            KernelChoice::LongJump { .. } => "lj",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Variance {
    Finite(f64),
    Infinite,
}

impl Variance {
    pub fn finite(&self) -> Option<f64> {
        match *self {
            Variance::Finite(v) => Some(v),
            Variance::Infinite => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct JumpKernel {
    pub choice: KernelChoice,
    pub c_gamma: f64,
    pub sigma2: Variance,
    /// One-sided mean Σ_{z≥1} z p(z).
    pub m: f64,
    /// Σ_z p(z) as evaluated; 1 up to the series tolerance.
    pub total_mass: f64,
}

impl JumpKernel {
    pub fn nearest_neighbor() -> Self {
        JumpKernel {
            choice: KernelChoice::NearestNeighbor,
            c_gamma: 0.5,
            sigma2: Variance::Finite(1.0),
            m: 0.5,
            total_mass: 1.0,
        }
    }

    pub fn long_jump(gamma: f64) -> Result<Self> {
        Self::build(KernelChoice::LongJump { gamma }, 1e-12)
    }

    pub fn build(choice: KernelChoice, series_tol: f64) -> Result<Self> {
        if !(series_tol > 0.0) {
            return Err(Error::InvalidParams(format!("series_tol must be positive, got {series_tol}")));
        }
        let gamma = match choice {
            KernelChoice::NearestNeighbor => return Ok(Self::nearest_neighbor()),
            KernelChoice::LongJump { gamma } => gamma,
        };
        if !(gamma > 1.0) || !gamma.is_finite() {
            return Err(Error::InvalidKernel(format!("long-jump exponent must exceed 1, got {gamma}")));
        }
        let z0 = sum_checked(gamma + 1.0, series_tol)?;
        let c = 1.0 / (2.0 * z0.value);
        let m = c * sum_checked(gamma, series_tol)?.value;
        let sigma2 = if gamma > 2.0 {
            Variance::Finite(2.0 * c * sum_checked(gamma - 1.0, series_tol)?.value)
        } else {
            Variance::Infinite
        };
        Ok(JumpKernel { choice, c_gamma: c, sigma2, m, total_mass: 2.0 * c * z0.value })
    }

    pub fn gamma(&self) -> Option<f64> {
        self.choice.gamma()
    }

    pub fn prob(&self, z: i64) -> f64 {
        if z == 0 {
            return 0.0;
        }
        match self.choice {
            KernelChoice::NearestNeighbor => {
                if z.abs() == 1 {
                    0.5
                } else {
                    0.0
                }
            }
            KernelChoice::LongJump { gamma } => self.c_gamma * pow(z.unsigned_abs() as f64, -(gamma + 1.0)),
        }
    }

    /// Largest jump with positive probability, if finite.
    pub fn range(&self) -> Option<usize> {
        match self.choice {
            KernelChoice::NearestNeighbor => Some(1),
            KernelChoice::LongJump { .. } => None,
        }
    }

    /// Σ_{z≥x} p(z) for x = 1..=n (index x-1).
    pub fn tails(&self, n: usize) -> Vec<f64> {
        match self.choice {
            KernelChoice::NearestNeighbor => (1..=n).map(|x| if x == 1 { 0.5 } else { 0.0 }).collect(),
            KernelChoice::LongJump { gamma } => {
                series::power_tails(gamma + 1.0, n).into_iter().map(|t| self.c_gamma * t).collect()
            }
        }
    }

    /// Σ_{z≥x} z p(z) for x = 1..=n (index x-1).
    pub fn moment_tails(&self, n: usize) -> Vec<f64> {
        match self.choice {
            KernelChoice::NearestNeighbor => (1..=n).map(|x| if x == 1 { 0.5 } else { 0.0 }).collect(),
            KernelChoice::LongJump { gamma } => {
                series::power_tails(gamma, n).into_iter().map(|t| self.c_gamma * t).collect()
            }
        }
    }

    /// r_N^-(x) = Σ_{y≥x} p(y) for x ∈ Λ_N.
    pub fn tail_left(&self, n: usize) -> Vec<f64> {
        self.tails(n.saturating_sub(1))
    }

    /// r_N^+(x) = Σ_{y≤x−N} p(y) for x ∈ Λ_N.
    pub fn tail_right(&self, n: usize) -> Vec<f64> {
        let mut t = self.tail_left(n);
        t.reverse();
        t
    }

    /// Θ_x^- = Σ_{y≤0} (x−y) p(x−y) for x ∈ Λ_N.
    pub fn theta_minus(&self, n: usize) -> Vec<f64> {
        self.moment_tails(n.saturating_sub(1))
    }

    /// Θ_x^+ = Σ_{y≥N} (y−x) p(x−y) for x ∈ Λ_N.
    pub fn theta_plus(&self, n: usize) -> Vec<f64> {
        let mut t = self.theta_minus(n);
        t.reverse();
        t
    }

    fn lj_gamma(&self) -> Result<f64> {
        self.gamma()
            .ok_or_else(|| Error::Unsupported("continuum potentials need a long-jump kernel".into()))
    }

    /// r^-(u) = c_γ γ^{-1} u^{-γ}.
    pub fn r_minus(&self, u: f64) -> Result<f64> {
        let g = self.lj_gamma()?;
        Ok(self.c_gamma / g * pow(u, -g))
    }

    pub fn r_plus(&self, u: f64) -> Result<f64> {
        self.r_minus(1.0 - u)
    }

    /// V₁ = r^- + r^+.
    pub fn v1(&self, q: f64) -> Result<f64> {
        Ok(self.r_minus(q)? + self.r_plus(q)?)
    }

    /// Continuum density p(q) = c_γ q^{-(γ+1)}.
    pub fn p_cont(&self, q: f64) -> Result<f64> {
        let g = self.lj_gamma()?;
        Ok(self.c_gamma * pow(q, -(g + 1.0)))
    }

    /// p̃(q) = p(1 − q).
    pub fn p_tilde(&self, q: f64) -> Result<f64> {
        self.p_cont(1.0 - q)
    }

    /// Ṽ₁ = p + p̃.
    pub fn v1_tilde(&self, q: f64) -> Result<f64> {
        Ok(self.p_cont(q)? + self.p_tilde(q)?)
    }

    /// Ṽ₀ = α p + β p̃.
    pub fn v0_tilde(&self, q: f64, alpha: f64, beta: f64) -> Result<f64> {
        Ok(alpha * self.p_cont(q)? + beta * self.p_tilde(q)?)
    }
}

fn sum_checked(s: f64, tol: f64) -> Result<PowerSum> {
    let mut terms = series::DEFAULT_TERMS;
    loop {
        let ps = series::power_tail(s, 1, terms);
        if ps.error_bound <= tol {
            return Ok(ps);
        }
        if terms >= 64 * series::DEFAULT_TERMS {
            return Err(Error::Numerical(format!("power sum with s = {s} did not reach tolerance {tol}")));
        }
        terms *= 4;
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn nearest_neighbor_constants() {
        let k = JumpKernel::nearest_neighbor();
        assert_eq!(k.prob(1), 0.5);
        assert_eq!(k.prob(-1), 0.5);
        assert_eq!(k.prob(2), 0.0);
        assert_eq!(k.sigma2, Variance::Finite(1.0));
        assert_eq!(k.m, 0.5);
    }

    #[test]
    fn long_jump_gamma_three() {
        let k = JumpKernel::long_jump(3.0).unwrap();
        let zeta4 = core::f64::consts::PI.powi(4) / 90.0;
        assert!((k.c_gamma - 1.0 / (2.0 * zeta4)).abs() < 1e-14);
        assert!((k.c_gamma - 0.46197).abs() < 1e-5);
        let zeta2 = core::f64::consts::PI.powi(2) / 6.0;
        let s2 = k.sigma2.finite().unwrap();
        assert!((s2 - zeta2 / zeta4).abs() < 1e-12);
        assert!((k.total_mass - 1.0).abs() < 1e-12);
    }

    #[test]
    fn long_jump_gamma_one_and_half() {
        let k = JumpKernel::long_jump(1.5).unwrap();
        // ζ(5/2) = 1.341487257250917...
        assert!((k.c_gamma - 1.0 / (2.0 * 1.341_487_257_250_917)).abs() < 1e-13);
        assert!((k.c_gamma - 0.37267).abs() < 1e-4);
        assert_eq!(k.sigma2, Variance::Infinite);
    }

    #[test]
    fn rejects_gamma_at_most_one() {
        assert!(matches!(JumpKernel::long_jump(1.0), Err(Error::InvalidKernel(_))));
        assert!(matches!(JumpKernel::long_jump(0.5), Err(Error::InvalidKernel(_))));
    }

    #[test]
    fn theta_sums_approach_half_variance() {
        // Σ_x Θ_x^- = Σ_z z p(z) min(z, N-1) → σ²/2 and the normalized sum vanishes.
        let k = JumpKernel::long_jump(3.0).unwrap();
        let half = k.sigma2.finite().unwrap() / 2.0;
        let mut prev = 0.0;
        for e in [8u32, 10, 12, 14] {
            let n = 1usize << e;
            let s: f64 = k.theta_minus(n).iter().sum();
            let sp: f64 = k.theta_plus(n).iter().sum();
            assert!((s - sp).abs() < 1e-12);
            assert!(s > prev && s < half);
            prev = s;
        }
        assert!((half - prev) / half < 0.05);
    }

    #[test]
    fn tails_match_direct_sums() {
        let k = JumpKernel::long_jump(2.5).unwrap();
        let n = 40;
        let left = k.tail_left(n);
        for x in 1..n {
            // Σ_{y ≥ x} p(y) = 1/2 − Σ_{1≤y<x} p(y)
            let head: f64 = (1..x as i64).map(|y| k.prob(y)).sum();
            assert!((left[x - 1] - (0.5 - head)).abs() < 1e-12);
        }
        let right = k.tail_right(n);
        assert!((right[0] - left[n - 2]).abs() < 1e-15);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(12))]
        #[test]
        fn symmetric_and_normalized(gamma in 1.05f64..6.0, z in 1i64..10_000) {
            let k = JumpKernel::build(KernelChoice::LongJump { gamma }, 1e-12).unwrap();
            prop_assert_eq!(k.prob(z), k.prob(-z));
            prop_assert!((k.total_mass - 1.0).abs() < 1e-12);
        }
    }
}
