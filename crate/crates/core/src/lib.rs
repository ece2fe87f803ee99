//! Statistical solutions of scalar conservation laws, realized on finite
//! ensembles.
//!
//! A probability measure on `L^p` is represented by an equal-weight
//! [`Ensemble`] of piecewise-constant [`GridFunction`]s. The entropy
//! semigroup is approximated by a monotone Godunov scheme, and the
//! remaining modules estimate correlation marginals and moments, compute
//! exact Wasserstein distances between ensembles, and evaluate the
//! weak-form residuals of the moment hierarchy and of the Kruzkov entropy
//! conditions.

pub mod correlation;
pub mod ensemble;
pub mod error;
pub mod grid;
pub mod harness;
pub mod io;
pub mod residuals;
pub mod rng;
pub mod solver;
pub mod transport;

pub use correlation::{
    flux_moment, marginal_samples, moment, project_ensemble, structure_function, MarginalSample,
    StructureValue,
};
pub use ensemble::{
    canonical_solution, canonical_solutions, mixture, sample_gaussian, CovarianceKernel, Ensemble,
    Trajectory,
};
pub use error::{Error, Result};
pub use grid::{Grid, GridFunction, Partition};
pub use residuals::{
    kruzkov_residual, mixture_entropy_residual, moment_residual, EntropyResidual, TestFunction,
};
pub use solver::{evolve, exact_riemann_burgers, godunov_flux, step, FluxModel};
pub use transport::{
    assignment_bruteforce, hungarian, kr_lower_bound, w1_ensembles, w1_real, Assignment, CostMatrix,
};
