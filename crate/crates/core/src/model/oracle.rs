//! Exact generator over the full configuration space (desk-scale only).

use alloc::format;
use libm::pow;

use super::{apply, event_rates, LatticeState, Model};
use crate::linalg::DenseMatrix;
use crate::{Error, Result};

pub const MAX_ORACLE_STATES: usize = 4096;

fn state_count(n: usize) -> Result<usize> {
    if n - 1 >= usize::BITS as usize - 1 || (1usize << (n - 1)) > MAX_ORACLE_STATES {
        return Err(Error::StateSpaceTooLarge { n });
    }
    Ok(1usize << (n - 1))
}

/// Dense rate matrix Q; configuration index has bit x−1 equal to η(x).
pub fn generator_matrix(model: &Model) -> Result<DenseMatrix> {
    let n = model.params.n;
    let size = state_count(n)?;
    let mut q = DenseMatrix::zeros(size, size);
    for i in 0..size {
        let s = LatticeState::from_index(n, i);
        let mut out = 0.0;
        for (e, r) in event_rates(&s, model) {
            let mut t = s.clone();
            apply(&mut t, e);
            q[(i, t.index())] += r;
            out += r;
        }
        q[(i, i)] = -out;
    }
    Ok(q)
}

/// max |ν(η) q(η,η′) − ν(η′) q(η′,η)| for the Bernoulli product measure at ρ = α = β.
pub fn detailed_balance_check(model: &Model) -> Result<f64> {
    let p = &model.params;
    if p.alpha != p.beta {
        return Err(Error::InvalidParams(format!(
            "detailed balance needs alpha = beta, got {} and {}",
            p.alpha, p.beta
        )));
    }
    let q = generator_matrix(model)?;
    let rho = p.alpha;
    let size = q.rows();
    let nu = |i: usize| {
        let k = i.count_ones() as f64;
        pow(rho, k) * pow(1.0 - rho, (p.n - 1) as f64 - k)
    };
    let mut worst: f64 = 0.0;
    for i in 0..size {
        for j in 0..size {
            if i != j {
                worst = worst.max((nu(i) * q[(i, j)] - nu(j) * q[(j, i)]).abs());
            }
        }
    }
    Ok(worst)
}
