//! Discrete operators and the Kolmogorov equations for the mean profile and
//! the two-point correlations.

use alloc::vec;
use alloc::vec::Vec;

use crate::kernel::KernelChoice;
use crate::linalg::{self, conjugate_gradient, CsrMatrix, DenseMatrix};
use crate::model::{Model, Profile};
use crate::ode::{self, OdeOptions};
use crate::pairs::PairIndex;
use crate::{Error, Result};

/// Largest N for which the profile evolution uses the matrix exponential.
pub const EXPM_MAX_N: usize = 256;

/// Δ_N f(x) = N²(f(x+1) + f(x−1) − 2f(x)) for x ∈ Λ_N; `f` is indexed 0..=N.
pub fn laplacian(f: &[f64]) -> Vec<f64> {
    let n = f.len() - 1;
    let n2 = (n * n) as f64;
    (1..n).map(|x| n2 * (f[x + 1] + f[x - 1] - 2.0 * f[x])).collect()
}

/// ∇_N^+ f(x) = N(f(x+1) − f(x)) for x = 0..N−1.
pub fn grad_plus(f: &[f64]) -> Vec<f64> {
    let n = (f.len() - 1) as f64;
    f.windows(2).map(|w| n * (w[1] - w[0])).collect()
}

/// ∇_N^- f(x) = N(f(x) − f(x−1)) for x = 1..N.
pub fn grad_minus(f: &[f64]) -> Vec<f64> {
    grad_plus(f)
}

#[derive(Debug, Clone)]
enum Storage {
    Tridiagonal { lower: Vec<f64>, diag: Vec<f64>, upper: Vec<f64> },
    Dense(DenseMatrix),
}

/// dρ/dt = Aρ + b for the mean occupations, already multiplied by Θ(N).
#[derive(Debug, Clone)]
pub struct MeanGenerator {
    storage: Storage,
    pub source: Vec<f64>,
}

impl MeanGenerator {
    pub fn new(model: &Model) -> Self {
        let n = model.params.n;
        let m = n - 1;
        let th = model.params.time_scale();
        let s = model.params.boundary_strength();
        let (a, b) = (model.params.alpha, model.params.beta);
        let source: Vec<f64> = (0..m)
            .map(|i| th * s * (a * model.left_weight[i] + b * model.right_weight[i]))
            .collect();
        let kill = |i: usize| s * (model.left_weight[i] + model.right_weight[i]);
        let storage = match model.params.kernel {
            KernelChoice::NearestNeighbor => {
                let mut lower = vec![0.0; m];
                let mut upper = vec![0.0; m];
                let mut diag = vec![0.0; m];
                for i in 0..m {
                    if i > 0 {
                        lower[i] = 0.5 * th;
                        diag[i] -= 0.5 * th;
                    }
                    if i + 1 < m {
                        upper[i] = 0.5 * th;
                        diag[i] -= 0.5 * th;
                    }
                    diag[i] -= th * kill(i);
                }
                Storage::Tridiagonal { lower, diag, upper }
            }
            KernelChoice::LongJump { .. } => {
                let p: Vec<f64> = (0..m).map(|z| model.kernel.prob(z as i64)).collect();
                let mut d = DenseMatrix::zeros(m, m);
                for i in 0..m {
                    let mut out = 0.0;
                    for j in 0..m {
                        if i != j {
                            let r = th * p[i.abs_diff(j)];
                            d[(i, j)] = r;
                            out += r;
                        }
                    }
                    d[(i, i)] = -out - th * kill(i);
                }
                Storage::Dense(d)
            }
        };
        MeanGenerator { storage, source }
    }

    pub fn dim(&self) -> usize {
        self.source.len()
    }

    /// Aρ (without the source).
    pub fn apply_linear(&self, rho: &[f64], out: &mut [f64]) {
        match &self.storage {
            Storage::Tridiagonal { lower, diag, upper } => {
                let m = diag.len();
                for i in 0..m {
                    let mut v = diag[i] * rho[i];
                    if i > 0 {
                        v += lower[i] * rho[i - 1];
                    }
                    if i + 1 < m {
                        v += upper[i] * rho[i + 1];
                    }
                    out[i] = v;
                }
            }
            Storage::Dense(d) => {
                for (i, o) in out.iter_mut().enumerate() {
                    *o = linalg::dot(d.row(i), rho);
                }
            }
        }
    }

    /// Aρ + b.
    pub fn apply(&self, rho: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; rho.len()];
        self.apply_linear(rho, &mut out);
        for (o, s) in out.iter_mut().zip(&self.source) {
            *o += s;
        }
        out
    }

    pub fn to_dense(&self) -> DenseMatrix {
        match &self.storage {
            Storage::Dense(d) => d.clone(),
            Storage::Tridiagonal { lower, diag, upper } => {
                let m = diag.len();
                let mut d = DenseMatrix::zeros(m, m);
                for i in 0..m {
                    d[(i, i)] = diag[i];
                    if i > 0 {
                        d[(i, i - 1)] = lower[i];
                    }
                    if i + 1 < m {
                        d[(i, i + 1)] = upper[i];
                    }
                }
                d
            }
        }
    }

    /// Solves Aρ = −b.
    pub fn steady_state(&self) -> Result<Vec<f64>> {
        let rhs: Vec<f64> = self.source.iter().map(|v| -v).collect();
        match &self.storage {
            Storage::Tridiagonal { lower, diag, upper } => linalg::solve_tridiagonal(lower, diag, upper, &rhs),
            Storage::Dense(d) => linalg::solve(d, &rhs),
        }
    }

    /// ρ at each of `times` starting from ρ₀ at time 0.
    pub fn evolve(&self, rho0: &[f64], times: &[f64]) -> Result<Vec<Vec<f64>>> {
        let m = self.dim();
        if rho0.len() != m {
            return Err(Error::ShapeMismatch { expected: m, got: rho0.len() });
        }
        if m + 1 <= EXPM_MAX_N {
            // augmented system d/dt (ρ, 1) = [[A, b], [0, 0]] (ρ, 1)
            let a = self.to_dense();
            let mut aug = DenseMatrix::zeros(m + 1, m + 1);
            for i in 0..m {
                for j in 0..m {
                    aug[(i, j)] = a[(i, j)];
                }
                aug[(i, m)] = self.source[i];
            }
            let mut x0 = rho0.to_vec();
            x0.push(1.0);
            times
                .iter()
                .map(|&t| {
                    let e = linalg::expm(&aug.scaled(t))?;
                    let mut v = e.matvec(&x0);
                    v.pop();
                    Ok(v)
                })
                .collect()
        } else {
            let opts = OdeOptions { rtol: 1e-9, atol: 1e-12, ..OdeOptions::default() };
            ode::integrate(
                |_, y, dy| {
                    self.apply_linear(y, dy);
                    for (d, s) in dy.iter_mut().zip(&self.source) {
                        *d += s;
                    }
                },
                0.0,
                rho0,
                times,
                opts,
            )
        }
    }
}

/// Mean profile of the nearest-neighbor model at `times`, started from g(x/N).
pub fn discrete_profile_ode(model: &Model, g: &Profile, times: &[f64]) -> Result<Vec<Vec<f64>>> {
    if model.params.kernel != KernelChoice::NearestNeighbor {
        return Err(Error::Unsupported("discrete_profile_ode is for the nearest-neighbor model".into()));
    }
    MeanGenerator::new(model).evolve(&g.on_lattice(model.params.n)?, times)
}

/// Θ·(generator of the correlations) on V_N for the nearest-neighbor model,
/// with absorption at ∂V_N.
#[derive(Debug, Clone)]
pub struct CorrelationOperator {
    pub index: PairIndex,
    pub matrix: CsrMatrix,
    scale: f64,
}

impl CorrelationOperator {
    pub fn new(model: &Model) -> Result<Self> {
        if model.params.kernel != KernelChoice::NearestNeighbor {
            return Err(Error::Unsupported("the correlation equation is implemented for the nearest-neighbor model".into()));
        }
        let n = model.params.n;
        let th = model.params.time_scale();
        let s = model.params.boundary_strength();
        let index = PairIndex::new(n);
        let mut rows = Vec::with_capacity(index.len());
        for (x, y) in index.pairs() {
            let mut row = Vec::with_capacity(5);
            let mut out = 0.0;
            let mut hop = |tx: usize, ty: usize, row: &mut Vec<(usize, f64)>| {
                row.push((index.index(tx, ty), 0.5 * th));
                out += 0.5 * th;
            };
            if x >= 2 {
                hop(x - 1, y, &mut row);
            }
            if x + 1 < y {
                hop(x + 1, y, &mut row);
            }
            if y - 1 > x {
                hop(x, y - 1, &mut row);
            }
            if y + 1 < n {
                hop(x, y + 1, &mut row);
            }
            if x == 1 {
                out += th * s * model.left_weight[0];
            }
            if y == n - 1 {
                out += th * s * model.right_weight[n - 2];
            }
            row.push((index.index(x, y), -out));
            rows.push(row);
        }
        Ok(CorrelationOperator { index, matrix: CsrMatrix::from_rows(rows), scale: th })
    }

    /// Source −½Θ(ρ(x+1) − ρ(x))² on the pairs y = x + 1.
    pub fn source(&self, rho: &[f64]) -> Vec<f64> {
        let mut g = vec![0.0; self.index.len()];
        for x in 1..self.index.n.saturating_sub(1) {
            if x + 1 < self.index.n {
                let d = rho[x] - rho[x - 1];
                g[self.index.index(x, x + 1)] = -0.5 * self.scale * d * d;
            }
        }
        g
    }

    /// Stationary correlations for a stationary mean profile ρ.
    pub fn steady_state(&self, rho: &[f64]) -> Result<Vec<f64>> {
        // Aφ + g = 0 with −A positive definite
        let rhs = self.source(rho);
        conjugate_gradient(
            |v, out| {
                self.matrix.matvec_into(v, out);
                for o in out.iter_mut() {
                    *o = -*o;
                }
            },
            &rhs,
            1e-14,
            20 * self.index.len() + 100,
        )
    }
}

/// Stationary correlations of the nearest-neighbor model, any κ > 0.
pub fn correlation_steady_state(model: &Model) -> Result<Vec<f64>> {
    let op = CorrelationOperator::new(model)?;
    let rho = MeanGenerator::new(model).steady_state()?;
    op.steady_state(&rho)
}

#[derive(Debug, Clone, PartialEq)]
pub struct CorrelationPath {
    pub times: Vec<f64>,
    pub rho: Vec<Vec<f64>>,
    pub phi: Vec<Vec<f64>>,
}

/// Joint evolution of (ρ, φ) from (ρ₀, φ₀).
pub fn correlation_ode(model: &Model, rho0: &[f64], phi0: &[f64], times: &[f64]) -> Result<CorrelationPath> {
    let op = CorrelationOperator::new(model)?;
    let gen = MeanGenerator::new(model);
    let m = gen.dim();
    if rho0.len() != m {
        return Err(Error::ShapeMismatch { expected: m, got: rho0.len() });
    }
    if phi0.len() != op.index.len() {
        return Err(Error::ShapeMismatch { expected: op.index.len(), got: phi0.len() });
    }
    let mut y0 = rho0.to_vec();
    y0.extend_from_slice(phi0);
    let opts = OdeOptions { rtol: 1e-10, atol: 1e-14, ..OdeOptions::default() };
    let out = ode::integrate(
        |_, y, dy| {
            let (rho, phi) = y.split_at(m);
            let (drho, dphi) = dy.split_at_mut(m);
            gen.apply_linear(rho, drho);
            for (d, s) in drho.iter_mut().zip(&gen.source) {
                *d += s;
            }
            op.matrix.matvec_into(phi, dphi);
            for x in 1..op.index.n.saturating_sub(1) {
                if x + 1 < op.index.n {
                    let d = rho[x] - rho[x - 1];
                    dphi[op.index.index(x, x + 1)] -= 0.5 * op.scale * d * d;
                }
            }
        },
        0.0,
        &y0,
        times,
        opts,
    )?;
    let (rho, phi) = out.into_iter().map(|mut v| {
        let phi = v.split_off(m);
        (v, phi)
    }).unzip();
    Ok(CorrelationPath { times: times.to_vec(), rho, phi })
}
