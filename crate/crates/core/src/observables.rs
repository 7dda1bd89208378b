//! Estimators built from configurations and trajectories.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use crate::kernel::KernelChoice;
use crate::kmc::PathObserver;
use crate::model::{Event, LatticeState, Model};
use crate::pairs::PairIndex;
use crate::{Error, Result};

/// ⟨π^N, G⟩ = (N−1)^{-1} Σ_x G(x/N) η(x).
pub fn pair<G: Fn(f64) -> f64>(state: &LatticeState, g: G) -> f64 {
    let n = state.n();
    let s: f64 = (1..n).filter(|&x| state.get(x) == 1).map(|x| g(x as f64 / n as f64)).sum();
    s / (n - 1) as f64
}

/// Mean over the box {1, …, 1+⌊εN⌋} (clipped to Λ_N).
pub fn box_left(state: &LatticeState, eps: f64) -> f64 {
    let n = state.n();
    let k = ((eps * n as f64) as usize + 1).min(n - 1);
    (1..=k).map(|x| state.get(x) as f64).sum::<f64>() / k as f64
}

/// Mean over the box {N−1−⌊εN⌋, …, N−1} (clipped to Λ_N).
pub fn box_right(state: &LatticeState, eps: f64) -> f64 {
    let n = state.n();
    let k = ((eps * n as f64) as usize + 1).min(n - 1);
    (n - k..n).map(|x| state.get(x) as f64).sum::<f64>() / k as f64
}

/// ι_ε^0 = ε^{-1} 1_{(0,ε]}.
pub fn iota_left(eps: f64) -> impl Fn(f64) -> f64 {
    move |q| if q > 0.0 && q <= eps { 1.0 / eps } else { 0.0 }
}

/// ι_ε^1 = ε^{-1} 1_{[1−ε,1)}.
pub fn iota_right(eps: f64) -> impl Fn(f64) -> f64 {
    move |q| if q >= 1.0 - eps && q < 1.0 { 1.0 / eps } else { 0.0 }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DensityEstimate {
    pub mean: Vec<f64>,
    pub stderr: Vec<f64>,
    pub replicas: u64,
}

impl DensityEstimate {
    /// Profile on {0, …, N} with ρ(0) = α and ρ(N) = β.
    pub fn extended(&self, alpha: f64, beta: f64) -> Vec<f64> {
        let mut v = Vec::with_capacity(self.mean.len() + 2);
        v.push(alpha);
        v.extend_from_slice(&self.mean);
        v.push(beta);
        v
    }
}

/// Per-site sums over replicas; merging is associative and commutative.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityAccumulator {
    count: u64,
    sum: Vec<f64>,
    sumsq: Vec<f64>,
}

impl DensityAccumulator {
    pub fn new(n: usize) -> Self {
        DensityAccumulator { count: 0, sum: vec![0.0; n - 1], sumsq: vec![0.0; n - 1] }
    }

    pub fn count(&self) -> u64 {
        self.count
    }

    pub fn add(&mut self, state: &LatticeState) -> Result<()> {
        let occ = state.occupancy();
        if occ.len() != self.sum.len() {
            return Err(Error::ShapeMismatch { expected: self.sum.len(), got: occ.len() });
        }
        for (i, &b) in occ.iter().enumerate() {
            self.sum[i] += b as f64;
            self.sumsq[i] += b as f64;
        }
        self.count += 1;
        Ok(())
    }

    pub fn merge(&mut self, other: &DensityAccumulator) -> Result<()> {
        if other.sum.len() != self.sum.len() {
            return Err(Error::ShapeMismatch { expected: self.sum.len(), got: other.sum.len() });
        }
        for i in 0..self.sum.len() {
            self.sum[i] += other.sum[i];
            self.sumsq[i] += other.sumsq[i];
        }
        self.count += other.count;
        Ok(())
    }

    pub fn estimate(&self) -> Result<DensityEstimate> {
        if self.count < 2 {
            return Err(Error::InvalidParams(format!("need at least 2 replicas, have {}", self.count)));
        }
        let r = self.count as f64;
        let mean: Vec<f64> = self.sum.iter().map(|s| s / r).collect();
        let stderr = mean
            .iter()
            .zip(&self.sumsq)
            .map(|(m, q)| libm::sqrt(((q - r * m * m) / (r - 1.0)).max(0.0) / r))
            .collect();
        Ok(DensityEstimate { mean, stderr, replicas: self.count })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CorrelationEstimate {
    pub index: PairIndex,
    pub phi: Vec<f64>,
    pub stderr: Vec<f64>,
    pub replicas: u64,
}

impl CorrelationEstimate {
    /// φ̂(x, y) for any order of the arguments; zero off V_N.
    pub fn get(&self, x: usize, y: usize) -> f64 {
        let (a, b) = if x < y { (x, y) } else { (y, x) };
        if self.index.contains(a, b) {
            self.phi[self.index.index(a, b)]
        } else {
            0.0
        }
    }

    pub fn max_abs(&self) -> f64 {
        self.phi.iter().fold(0.0, |m, v| m.max(v.abs()))
    }
}

/// Site and pair sums over replicas.
#[derive(Debug, Clone, PartialEq)]
pub struct CorrelationAccumulator {
    index: PairIndex,
    count: u64,
    sum: Vec<f64>,
    pair_sum: Vec<f64>,
}

impl CorrelationAccumulator {
    pub fn new(n: usize) -> Self {
        let index = PairIndex::new(n);
        CorrelationAccumulator { index, count: 0, sum: vec![0.0; n - 1], pair_sum: vec![0.0; index.len()] }
    }

    pub fn count(&self) -> u64 {
        self.count
    }

    pub fn add(&mut self, state: &LatticeState) -> Result<()> {
        if state.n() != self.index.n {
            return Err(Error::ShapeMismatch { expected: self.index.n - 1, got: state.n() - 1 });
        }
        let occupied: Vec<usize> = (1..state.n()).filter(|&x| state.get(x) == 1).collect();
        for (k, &x) in occupied.iter().enumerate() {
            self.sum[x - 1] += 1.0;
            for &y in &occupied[k + 1..] {
                self.pair_sum[self.index.index(x, y)] += 1.0;
            }
        }
        self.count += 1;
        Ok(())
    }

    pub fn merge(&mut self, other: &CorrelationAccumulator) -> Result<()> {
        if other.index != self.index {
            return Err(Error::ShapeMismatch { expected: self.index.n - 1, got: other.index.n - 1 });
        }
        for (a, b) in self.sum.iter_mut().zip(&other.sum) {
            *a += b;
        }
        for (a, b) in self.pair_sum.iter_mut().zip(&other.pair_sum) {
            *a += b;
        }
        self.count += other.count;
        Ok(())
    }

    /// Plug-in covariance with (R−1) normalization; the standard error uses
    /// the pair's joint law, which the first two moments determine for 0/1 variables.
    pub fn estimate(&self) -> Result<CorrelationEstimate> {
        if self.count < 2 {
            return Err(Error::InvalidParams(format!("need at least 2 replicas, have {}", self.count)));
        }
        let r = self.count as f64;
        let mut phi = Vec::with_capacity(self.index.len());
        let mut stderr = Vec::with_capacity(self.index.len());
        for (x, y) in self.index.pairs() {
            let (px, py) = (self.sum[x - 1] / r, self.sum[y - 1] / r);
            let m = self.pair_sum[self.index.index(x, y)] / r;
            phi.push((m - px * py) * r / (r - 1.0));
            let joint = [(1.0, 1.0, m), (1.0, 0.0, px - m), (0.0, 1.0, py - m), (0.0, 0.0, 1.0 - px - py + m)];
            let fourth: f64 = joint
                .iter()
                .map(|&(a, b, p)| p * (a - px) * (a - px) * (b - py) * (b - py))
                .sum();
            let cov = m - px * py;
            stderr.push(libm::sqrt((fourth - cov * cov).max(0.0) / r));
        }
        Ok(CorrelationEstimate { index: self.index, phi, stderr, replicas: self.count })
    }
}

/// Running mean and variance of a scalar over replicas (mergeable).
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct ScalarAccumulator {
    pub count: u64,
    pub sum: f64,
    pub sumsq: f64,
}

impl ScalarAccumulator {
    pub fn add(&mut self, v: f64) {
        self.count += 1;
        self.sum += v;
        self.sumsq += v * v;
    }

    pub fn merge(&mut self, o: &ScalarAccumulator) {
        self.count += o.count;
        self.sum += o.sum;
        self.sumsq += o.sumsq;
    }

    pub fn mean(&self) -> f64 {
        self.sum / self.count as f64
    }

    /// Unbiased sample variance.
    pub fn variance(&self) -> f64 {
        let r = self.count as f64;
        ((self.sumsq - self.sum * self.sum / r) / (r - 1.0)).max(0.0)
    }

    pub fn stderr(&self) -> f64 {
        libm::sqrt(self.variance() / self.count as f64)
    }
}

/// ∫₀ᵗ (η_s(site) − target) ds along the path.
#[derive(Debug, Clone, PartialEq)]
pub struct BoundaryTimeAverage {
    pub site: usize,
    pub target: f64,
    integral: f64,
    elapsed: f64,
}

impl BoundaryTimeAverage {
    pub fn new(site: usize, target: f64) -> Self {
        BoundaryTimeAverage { site, target, integral: 0.0, elapsed: 0.0 }
    }

    /// (1/t)|∫₀ᵗ (η_s(site) − target) ds|.
    pub fn value(&self) -> Result<f64> {
        if self.elapsed == 0.0 {
            return Err(Error::InvalidParams("time average over an empty interval".into()));
        }
        Ok(self.integral.abs() / self.elapsed)
    }
}

impl PathObserver for BoundaryTimeAverage {
    fn hold(&mut self, state: &LatticeState, dt: f64) {
        self.integral += (state.get(self.site) as f64 - self.target) * dt;
        self.elapsed += dt;
    }
}

/// ∫₀ᵗ (η_s(1) − →η_s^{εN}(1)) ds along the path.
#[derive(Debug, Clone, PartialEq)]
pub struct BoxReplacement {
    pub eps: f64,
    integral: f64,
    elapsed: f64,
}

impl BoxReplacement {
    pub fn new(eps: f64) -> Self {
        BoxReplacement { eps, integral: 0.0, elapsed: 0.0 }
    }

    pub fn value(&self) -> Result<f64> {
        if self.elapsed == 0.0 {
            return Err(Error::InvalidParams("time average over an empty interval".into()));
        }
        Ok(self.integral.abs() / self.elapsed)
    }
}

impl PathObserver for BoxReplacement {
    fn hold(&mut self, state: &LatticeState, dt: f64) {
        self.integral += (state.get(1) as f64 - box_left(state, self.eps)) * dt;
        self.elapsed += dt;
    }
}

/// Dynkin martingale M_t(G) = ⟨π_t,G⟩ − ⟨π_0,G⟩ − ∫₀ᵗ Θ L⟨π_s,G⟩ ds and the
/// integral of its carré du champ, for the nearest-neighbor model.
#[derive(Debug, Clone)]
pub struct DynkinProbe {
    g: Vec<f64>,
    drift_coef: Vec<f64>,
    drift_const: f64,
    scale: f64,
    create: Vec<f64>,
    annihilate: Vec<f64>,
    bond_gamma: Vec<f64>,
    site_gamma: Vec<f64>,
    f0: f64,
    f: f64,
    drift: f64,
    gamma: f64,
    drift_integral: f64,
    qv: f64,
}

impl DynkinProbe {
    pub fn new<G: Fn(f64) -> f64>(model: &Model, g: G, state: &LatticeState) -> Result<Self> {
        if model.params.kernel != KernelChoice::NearestNeighbor {
            return Err(Error::Unsupported("the Dynkin probe is implemented for the nearest-neighbor model".into()));
        }
        let n = model.params.n;
        let m = (n - 1) as f64;
        let gv: Vec<f64> = (0..=n).map(|x| g(x as f64 / n as f64)).collect();
        let s = model.params.boundary_strength();
        let (a, b) = (model.params.alpha, model.params.beta);
        let mut drift_coef = vec![0.0; n + 1];
        let mut drift_const = 0.0;
        let mut create = vec![0.0; n + 1];
        let mut annihilate = vec![0.0; n + 1];
        for x in 1..n {
            let mut c = 0.0;
            if x >= 2 {
                c += 0.5 * (gv[x - 1] - gv[x]);
            }
            if x + 2 <= n {
                c += 0.5 * (gv[x + 1] - gv[x]);
            }
            let (l, r) = (model.left_weight[x - 1], model.right_weight[x - 1]);
            c -= s * (l + r) * gv[x];
            drift_coef[x] = c / m;
            drift_const += s * gv[x] * (a * l + b * r) / m;
            let (cr, an) = model.flip_rates_at(x);
            create[x] = cr;
            annihilate[x] = an;
        }
        let mut p = DynkinProbe {
            g: gv,
            drift_coef,
            drift_const,
            scale: model.params.time_scale(),
            create,
            annihilate,
            bond_gamma: vec![0.0; n + 1],
            site_gamma: vec![0.0; n + 1],
            f0: 0.0,
            f: 0.0,
            drift: 0.0,
            gamma: 0.0,
            drift_integral: 0.0,
            qv: 0.0,
        };
        p.f = (1..n).map(|x| p.g[x] * state.get(x) as f64).sum::<f64>() / m;
        p.f0 = p.f;
        p.drift = p.scale * (p.drift_const + (1..n).map(|x| p.drift_coef[x] * state.get(x) as f64).sum::<f64>());
        for x in 1..n {
            p.refresh_site(state, x);
            p.refresh_bond(state, x);
        }
        Ok(p)
    }

    fn refresh_bond(&mut self, state: &LatticeState, b: usize) {
        let n = state.n();
        if b == 0 || b + 1 >= n {
            return;
        }
        let m = (n - 1) as f64;
        let dg = (self.g[b + 1] - self.g[b]) / m;
        let v = if state.get(b) != state.get(b + 1) { self.scale * 0.5 * dg * dg } else { 0.0 };
        self.gamma += v - self.bond_gamma[b];
        self.bond_gamma[b] = v;
    }

    fn refresh_site(&mut self, state: &LatticeState, x: usize) {
        let m = (state.n() - 1) as f64;
        let rate = if state.get(x) == 0 { self.create[x] } else { self.annihilate[x] };
        let v = self.scale * rate * (self.g[x] / m) * (self.g[x] / m);
        self.gamma += v - self.site_gamma[x];
        self.site_gamma[x] = v;
    }

    /// Realized M_t.
    pub fn martingale(&self) -> f64 {
        self.f - self.f0 - self.drift_integral
    }

    /// Realized ∫₀ᵗ Γ_s ds.
    pub fn quadratic_variation(&self) -> f64 {
        self.qv
    }

    /// Current Θ·L⟨π,G⟩.
    pub fn drift(&self) -> f64 {
        self.drift
    }
}

impl PathObserver for DynkinProbe {
    fn hold(&mut self, _state: &LatticeState, dt: f64) {
        self.drift_integral += self.drift * dt;
        self.qv += self.gamma * dt;
    }

    fn on_event(&mut self, state: &LatticeState, event: Event) {
        let m = (state.n() - 1) as f64;
        match event {
            Event::Exchange { x, y } => {
                let d = state.get(x) as f64 - state.get(y) as f64;
                self.f += (self.g[x] - self.g[y]) * d / m;
                self.drift += self.scale * (self.drift_coef[x] - self.drift_coef[y]) * d;
                for s in [x, y] {
                    self.refresh_site(state, s);
                    self.refresh_bond(state, s - 1);
                    self.refresh_bond(state, s);
                }
            }
            Event::Flip { x } => {
                let d = 2.0 * state.get(x) as f64 - 1.0;
                self.f += self.g[x] * d / m;
                self.drift += self.scale * self.drift_coef[x] * d;
                self.refresh_site(state, x);
                self.refresh_bond(state, x - 1);
                self.refresh_bond(state, x);
            }
        }
    }
}
