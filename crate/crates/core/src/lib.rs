//! Symmetric exclusion process in contact with stochastic reservoirs.
//!
//! The crate holds everything that is pure computation: the model and its
//! generator, an exact kinetic Monte Carlo engine, estimators, the closed-form
//! stationary objects and the deterministic solvers for the discrete
//! Kolmogorov equations and their continuum limits. It builds without `std`.

#![cfg_attr(not(feature = "std"), no_std)]

extern crate alloc;
#[cfg(any(test, feature = "std"))]
extern crate std;

mod error;
pub mod kernel;
pub mod kmc;
pub mod linalg;
pub mod model;
pub mod observables;
pub mod ode;
pub mod pairs;
pub mod pde;
pub mod quad;
pub mod series;
pub mod stationary;

pub use error::{Error, Result};
pub use kernel::{JumpKernel, KernelChoice, Variance};
pub use model::{Event, InitialMeasure, LatticeState, Model, ModelParams, Profile};
