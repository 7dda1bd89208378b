//! Discrete Kolmogorov equations and the limiting PDEs.

pub mod discrete;
pub mod fractional;
pub mod reaction;
pub mod regime;
pub mod spectral;

pub use discrete::{
    correlation_ode, correlation_steady_state, discrete_profile_ode, CorrelationOperator, CorrelationPath,
    MeanGenerator,
};
pub use fractional::{
    fractional_generator_ode, fractional_identity_residual, fractional_laplacian_check, kernel_laplacian_check, regional_frac_laplacian,
    TestFunction,
};
pub use reaction::{reaction_diffusion_fd, reaction_diffusion_steady_state, reaction_exact, FdOptions, FdSolution};
pub use regime::{regime_dispatch, PdeFamily, Regime};
pub use spectral::{heat_dirichlet_spectral, robin_eigenvalues, robin_spectral_solution, RobinMode, SpectralSolution};
