//! Model parameterization, lattice state and the generator as rate maps.

mod oracle;
mod rates;

use alloc::format;
use alloc::sync::Arc;
use alloc::vec::Vec;
use core::fmt;
use libm::pow;

use crate::kernel::{JumpKernel, KernelChoice};
use crate::{Error, Result};

pub use oracle::{detailed_balance_check, generator_matrix, MAX_ORACLE_STATES};
pub use rates::{apply, event_rates, flip_rate};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModelParams {
    pub n: usize,
    pub alpha: f64,
    pub beta: f64,
    pub kappa: f64,
    pub theta: f64,
    pub kernel: KernelChoice,
    time_scale: f64,
}

impl ModelParams {
    pub fn new(n: usize, alpha: f64, beta: f64, kappa: f64, theta: f64, kernel: KernelChoice) -> Result<Self> {
        if n < 2 {
            return Err(Error::InvalidParams(format!("N must be at least 2, got {n}")));
        }
        for (name, v) in [("alpha", alpha), ("beta", beta)] {
            if !(0.0..=1.0).contains(&v) {
                return Err(Error::InvalidParams(format!("{name} must lie in [0,1], got {v}")));
            }
        }
        // κ = 0 is accepted for closed (bulk-only) runs.
        if !(kappa >= 0.0) || !kappa.is_finite() {
            return Err(Error::InvalidParams(format!("kappa must be non-negative, got {kappa}")));
        }
        if !theta.is_finite() {
            return Err(Error::InvalidParams(format!("theta must be finite, got {theta}")));
        }
        if let KernelChoice::LongJump { gamma } = kernel {
            if !(gamma > 1.0) {
                return Err(Error::InvalidKernel(format!("long-jump exponent must exceed 1, got {gamma}")));
            }
        }
        let time_scale = time_scale_for(n, theta, kernel)?;
        Ok(ModelParams { n, alpha, beta, kappa, theta, kernel, time_scale })
    }

    pub fn nearest_neighbor(n: usize, alpha: f64, beta: f64, kappa: f64, theta: f64) -> Result<Self> {
        Self::new(n, alpha, beta, kappa, theta, KernelChoice::NearestNeighbor)
    }

    /// Same parameters with an explicit Θ(N); used for exploratory regimes
    /// that have no known scaling.
    pub fn with_time_scale(mut self, time_scale: f64) -> Result<Self> {
        if !(time_scale > 0.0) || !time_scale.is_finite() {
            return Err(Error::InvalidParams(format!("time scale must be positive, got {time_scale}")));
        }
        self.time_scale = time_scale;
        Ok(self)
    }

    /// Like [`ModelParams::new`] but falls back to Θ(N) = N^γ when the
    /// regime has no known scaling.
    pub fn exploratory(n: usize, alpha: f64, beta: f64, kappa: f64, theta: f64, kernel: KernelChoice) -> Result<Self> {
        match Self::new(n, alpha, beta, kappa, theta, kernel) {
            Err(Error::Unsupported(_)) => {
                let g = kernel.gamma().unwrap_or(2.0);
                let base = ModelParams { n, alpha, beta, kappa, theta, kernel, time_scale: 1.0 };
                base.with_time_scale(pow(n as f64, g))
            }
            other => other,
        }
    }

    pub fn time_scale(&self) -> f64 {
        self.time_scale
    }

    /// Number of bulk sites N − 1.
    pub fn sites(&self) -> usize {
        self.n - 1
    }

    /// κ N^{-θ}.
    pub fn boundary_strength(&self) -> f64 {
        self.kappa * pow(self.n as f64, -self.theta)
    }
}

/// Θ(N) for a kernel and boundary exponent.
pub fn time_scale_for(n: usize, theta: f64, kernel: KernelChoice) -> Result<f64> {
    let nf = n as f64;
    match kernel {
        KernelChoice::NearestNeighbor => Ok(nf * nf),
        KernelChoice::LongJump { gamma } if gamma > 2.0 => {
            if theta >= 1.0 - gamma {
                Ok(nf * nf)
            } else {
                Ok(pow(nf, gamma + theta + 1.0))
            }
        }
        KernelChoice::LongJump { gamma } if gamma > 1.0 && gamma < 2.0 => {
            if theta <= -1.0 {
                Ok(pow(nf, gamma + theta + 1.0))
            } else {
                Err(Error::Unsupported(format!("no known time scale for gamma = {gamma}, theta = {theta}")))
            }
        }
        KernelChoice::LongJump { gamma } => {
            Err(Error::Unsupported(format!("no known time scale for gamma = {gamma}")))
        }
    }
}

/// Parameters together with the built kernel and per-site reservoir weights.
#[derive(Debug, Clone, PartialEq)]
pub struct Model {
    pub params: ModelParams,
    pub kernel: JumpKernel,
    /// p(x − 0) for x ∈ Λ_N (index x − 1).
    pub left_weight: Vec<f64>,
    /// p(N − x) for x ∈ Λ_N.
    pub right_weight: Vec<f64>,
}

impl Model {
    pub fn new(params: ModelParams) -> Result<Self> {
        let kernel = JumpKernel::build(params.kernel, 1e-12)?;
        Ok(Self::with_kernel(params, kernel))
    }

    /// Reuses an already built kernel (its choice must match the params).
    pub fn with_kernel(params: ModelParams, kernel: JumpKernel) -> Self {
        assert_eq!(params.kernel, kernel.choice, "kernel does not match parameters");
        let n = params.n;
        let left_weight = (1..n).map(|x| kernel.prob(x as i64)).collect();
        let right_weight = (1..n).map(|x| kernel.prob((n - x) as i64)).collect();
        Model { params, kernel, left_weight, right_weight }
    }

    pub fn sites(&self) -> usize {
        self.params.sites()
    }

    /// Micro creation and annihilation rates at site x (1-based).
    pub fn flip_rates_at(&self, x: usize) -> (f64, f64) {
        let s = self.params.boundary_strength();
        let (l, r) = (self.left_weight[x - 1], self.right_weight[x - 1]);
        let (a, b) = (self.params.alpha, self.params.beta);
        (s * (l * a + r * b), s * (l * (1.0 - a) + r * (1.0 - b)))
    }
}

/// A deterministic density profile g: [0,1] → [0,1].
#[derive(Clone)]
pub enum Profile {
    Constant(f64),
    Linear { left: f64, right: f64 },
    /// `left` on [0, at), `right` on [at, 1].
    Step { left: f64, right: f64, at: f64 },
    /// base + height·exp(1 − 1/(1 − u²)), u = (q − center)/width, on |u| < 1.
    Bump { base: f64, height: f64, center: f64, width: f64 },
    Custom(Arc<dyn Fn(f64) -> f64 + Send + Sync>),
}

impl fmt::Debug for Profile {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Profile::Constant(c) => write!(f, "Constant({c})"),
            Profile::Linear { left, right } => write!(f, "Linear({left}, {right})"),
            Profile::Step { left, right, at } => write!(f, "Step({left}, {right}, {at})"),
            Profile::Bump { base, height, center, width } => write!(f, "Bump({base}, {height}, {center}, {width})"),
            Profile::Custom(_) => f.write_str("Custom(..)"),
        }
    }
}

impl Profile {
    pub fn custom<F: Fn(f64) -> f64 + Send + Sync + 'static>(f: F) -> Self {
        Profile::Custom(Arc::new(f))
    }

    pub fn eval(&self, q: f64) -> f64 {
        match self {
            Profile::Constant(c) => *c,
            Profile::Linear { left, right } => left + (right - left) * q,
            Profile::Step { left, right, at } => {
                if q < *at {
                    *left
                } else {
                    *right
                }
            }
            Profile::Bump { base, height, center, width } => base + height * bump((q - center) / width),
            Profile::Custom(f) => f(q),
        }
    }

    /// Points where the profile may be non-smooth.
    pub fn breakpoints(&self) -> Vec<f64> {
        match self {
            Profile::Step { at, .. } => alloc::vec![*at],
            Profile::Bump { center, width, .. } => alloc::vec![center - width, center + width],
            _ => Vec::new(),
        }
        .into_iter()
        .filter(|q| *q > 0.0 && *q < 1.0)
        .collect()
    }

    /// Values g(x/N) at the bulk sites, checked to lie in [0,1].
    pub fn on_lattice(&self, n: usize) -> Result<Vec<f64>> {
        let mut out = Vec::with_capacity(n - 1);
        for x in 1..n {
            let v = self.eval(x as f64 / n as f64);
            if !(0.0..=1.0).contains(&v) {
                return Err(Error::InvalidParams(format!("profile value {v} at x = {x} is outside [0,1]")));
            }
            out.push(v);
        }
        Ok(out)
    }
}

/// Standard smooth bump exp(1 − 1/(1 − u²)) on |u| < 1, peak 1 at u = 0.
pub fn bump(u: f64) -> f64 {
    if u.abs() >= 1.0 {
        0.0
    } else {
        libm::exp(1.0 - 1.0 / (1.0 - u * u))
    }
}

#[derive(Debug, Clone)]
pub enum InitialMeasure {
    BernoulliProduct(Profile),
    ExactConfiguration(Vec<u8>),
    /// Distribution over configuration indices (bit x−1 holds η(x)).
    StationarySample(Vec<f64>),
}

/// Occupation configuration on Λ_N plus the microscopic clock.
#[derive(Debug, Clone, PartialEq)]
pub struct LatticeState {
    occ: Vec<u8>,
    pub micro_time: f64,
}

impl LatticeState {
    pub fn empty(n: usize) -> Self {
        LatticeState { occ: alloc::vec![0; n - 1], micro_time: 0.0 }
    }

    pub fn from_occupancy(occ: Vec<u8>) -> Result<Self> {
        if occ.is_empty() {
            return Err(Error::InvalidParams("configuration must have at least one site".into()));
        }
        if let Some(x) = occ.iter().position(|&b| b > 1) {
            return Err(Error::InvalidParams(format!("occupation at x = {} is not 0/1", x + 1)));
        }
        Ok(LatticeState { occ, micro_time: 0.0 })
    }

    /// Configuration with bit x−1 of `index` giving η(x).
    pub fn from_index(n: usize, index: usize) -> Self {
        LatticeState { occ: (0..n - 1).map(|i| ((index >> i) & 1) as u8).collect(), micro_time: 0.0 }
    }

    pub fn index(&self) -> usize {
        self.occ.iter().enumerate().fold(0, |acc, (i, &b)| acc | ((b as usize) << i))
    }

    /// Lattice size N.
    pub fn n(&self) -> usize {
        self.occ.len() + 1
    }

    /// η(x) for x ∈ Λ_N (1-based).
    #[inline]
    pub fn get(&self, x: usize) -> u8 {
        self.occ[x - 1]
    }

    #[inline]
    pub fn set(&mut self, x: usize, v: bool) {
        self.occ[x - 1] = v as u8;
    }

    #[inline]
    pub fn flip(&mut self, x: usize) {
        self.occ[x - 1] ^= 1;
    }

    #[inline]
    pub fn swap(&mut self, x: usize, y: usize) {
        self.occ.swap(x - 1, y - 1);
    }

    pub fn occupancy(&self) -> &[u8] {
        &self.occ
    }

    pub fn particles(&self) -> usize {
        self.occ.iter().map(|&b| b as usize).sum()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Event {
    /// Exchange of the occupations at x < y.
    Exchange { x: usize, y: usize },
    Flip { x: usize },
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn time_scales() {
        let nn = ModelParams::nearest_neighbor(64, 0.2, 0.8, 1.0, 0.5).unwrap();
        assert_eq!(nn.time_scale(), 4096.0);
        let lj = ModelParams::new(256, 0.2, 0.8, 1.0, -3.0, KernelChoice::LongJump { gamma: 3.0 }).unwrap();
        assert!((lj.time_scale() - 256.0).abs() < 1e-9);
        let lj = ModelParams::new(256, 0.2, 0.8, 1.0, -2.0, KernelChoice::LongJump { gamma: 3.0 }).unwrap();
        assert_eq!(lj.time_scale(), 65536.0);
        let fr = ModelParams::new(256, 0.2, 0.8, 1.0, -1.0, KernelChoice::LongJump { gamma: 1.5 }).unwrap();
        assert!((fr.time_scale() - 4096.0).abs() < 1e-9);
        assert!(matches!(
            ModelParams::new(256, 0.2, 0.8, 1.0, 0.0, KernelChoice::LongJump { gamma: 1.5 }),
            Err(Error::Unsupported(_))
        ));
        assert!(matches!(
            ModelParams::new(256, 0.2, 0.8, 1.0, 0.0, KernelChoice::LongJump { gamma: 2.0 }),
            Err(Error::Unsupported(_))
        ));
        let ex = ModelParams::exploratory(256, 0.2, 0.8, 1.0, 0.0, KernelChoice::LongJump { gamma: 1.5 }).unwrap();
        assert!((ex.time_scale() - 4096.0).abs() < 1e-9);
    }

    #[test]
    fn rejects_bad_params() {
        assert!(ModelParams::nearest_neighbor(1, 0.2, 0.8, 1.0, 0.0).is_err());
        assert!(ModelParams::nearest_neighbor(4, 1.2, 0.8, 1.0, 0.0).is_err());
        assert!(ModelParams::nearest_neighbor(4, 0.2, 0.8, -1.0, 0.0).is_err());
        assert!(ModelParams::new(4, 0.2, 0.8, 1.0, 0.0, KernelChoice::LongJump { gamma: 0.9 }).is_err());
    }

    #[test]
    fn state_index_round_trip() {
        for i in 0..32 {
            assert_eq!(LatticeState::from_index(6, i).index(), i);
        }
        assert!(LatticeState::from_occupancy(alloc::vec![0, 2]).is_err());
    }

    #[test]
    fn profile_lattice_values() {
        let g = Profile::Linear { left: 0.0, right: 1.0 };
        assert_eq!(g.on_lattice(4).unwrap(), alloc::vec![0.25, 0.5, 0.75]);
        assert!(Profile::Constant(1.5).on_lattice(4).is_err());
        let s = Profile::Step { left: 0.2, right: 0.8, at: 0.5 };
        assert_eq!(s.eval(0.25), 0.2);
        assert_eq!(s.eval(0.5), 0.8);
    }
}
