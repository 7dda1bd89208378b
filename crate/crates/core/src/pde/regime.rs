//! Which macroscopic equation governs a given (kernel, θ).

use alloc::format;
use alloc::string::String;

use crate::kernel::{JumpKernel, KernelChoice};

#[derive(Debug, Clone, PartialEq)]
pub enum PdeFamily {
    /// Heat equation with ρ(0) = α, ρ(1) = β.
    HeatDirichlet,
    /// Heat equation with ∂ρ(0) = h(ρ(0) − α), ∂ρ(1) = h(β − ρ(1)), h = 2m̂/σ̂².
    HeatRobin { h: f64 },
    HeatNeumann,
    /// ∂ρ = κ̂[(α − ρ)q^{−γ−1} + (β − ρ)(1 − q)^{−γ−1}].
    Reaction,
    /// Heat equation plus the reaction term, Dirichlet data.
    ReactionDiffusion,
    /// ∂ρ = Lρ − κ V₁ρ + κ V₀ for γ ∈ (1, 2).
    FractionalReactionDiffusion,
    Unsupported { reason: String },
}

#[derive(Debug, Clone, PartialEq)]
pub struct Regime {
    pub family: PdeFamily,
    /// Diffusion coefficient D = σ̂²/2 of the heat part (0 when absent).
    pub diffusion: f64,
    pub sigma_hat: f64,
    pub kappa_hat: f64,
    pub m_hat: f64,
    /// Θ(N) = N^exponent, when known.
    pub time_exponent: Option<f64>,
}

impl Regime {
    fn unsupported(reason: String) -> Self {
        Regime {
            family: PdeFamily::Unsupported { reason },
            diffusion: 0.0,
            sigma_hat: 0.0,
            kappa_hat: 0.0,
            m_hat: 0.0,
            time_exponent: None,
        }
    }

    fn heat(theta: f64, kappa: f64, sigma2: f64) -> Self {
        let m_hat = 0.5 * kappa;
        let family = if theta < 1.0 {
            PdeFamily::HeatDirichlet
        } else if theta == 1.0 {
            PdeFamily::HeatRobin { h: 2.0 * m_hat / sigma2 }
        } else {
            PdeFamily::HeatNeumann
        };
        Regime {
            family,
            diffusion: 0.5 * sigma2,
            sigma_hat: libm::sqrt(sigma2),
            kappa_hat: 0.0,
            m_hat: if theta == 1.0 { m_hat } else { 0.0 },
            time_exponent: Some(2.0),
        }
    }
}

pub fn regime_dispatch(kernel: &JumpKernel, theta: f64, kappa: f64) -> Regime {
    match kernel.choice {
        KernelChoice::NearestNeighbor => Regime::heat(theta, kappa, 1.0),
        KernelChoice::LongJump { gamma } => {
            if gamma <= 1.0 {
                return Regime::unsupported(format!("γ = {gamma} is not a valid long-jump exponent"));
            }
            let kappa_hat = kappa * kernel.c_gamma;
            if gamma > 2.0 {
                let sigma2 = kernel.sigma2.finite().unwrap_or(f64::NAN);
                if theta < 1.0 - gamma {
                    Regime {
                        family: PdeFamily::Reaction,
                        diffusion: 0.0,
                        sigma_hat: 0.0,
                        kappa_hat,
                        m_hat: 0.0,
                        time_exponent: Some(gamma + theta + 1.0),
                    }
                } else if theta == 1.0 - gamma {
                    Regime {
                        family: PdeFamily::ReactionDiffusion,
                        diffusion: 0.5 * sigma2,
                        sigma_hat: libm::sqrt(sigma2),
                        kappa_hat,
                        m_hat: 0.0,
                        time_exponent: Some(2.0),
                    }
                } else {
                    Regime::heat(theta, kappa, sigma2)
                }
            } else if gamma == 2.0 {
                Regime::unsupported("γ = 2 needs a logarithmic time correction".into())
            } else if theta < -1.0 {
                Regime {
                    family: PdeFamily::Reaction,
                    diffusion: 0.0,
                    sigma_hat: 0.0,
                    kappa_hat,
                    m_hat: 0.0,
                    time_exponent: Some(gamma + theta + 1.0),
                }
            } else if theta == -1.0 {
                Regime {
                    family: PdeFamily::FractionalReactionDiffusion,
                    diffusion: 0.0,
                    sigma_hat: 0.0,
                    kappa_hat: kappa,
                    m_hat: 0.0,
                    time_exponent: Some(gamma),
                }
            } else {
                Regime::unsupported(format!("γ = {gamma} ∈ (1, 2) with θ = {theta} > −1 has no identified limit"))
            }
        }
    }
}
