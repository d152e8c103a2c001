//! Least energy solutions of two-component quasilinear elliptic systems
//!
//! ```text
//! −div(𝒜_i(u_i)∇u_i) + ½𝒜′_i(u_i)|∇u_i|² = λ_i u_i + |u_i|^{p−2}u_i + β|u_j|^{p/2}|u_i|^{p/2−2}u_i
//! ```
//!
//! on a rectangle with Dirichlet data, discretized on a uniform grid and
//! solved by reduction to the Nehari set.

pub mod cli;
pub mod coeffs;
pub mod energy;
pub mod error;
pub mod fiber;
pub mod grid;
pub mod linalg;
pub mod solvers;
pub mod spectrum;

pub use coeffs::{certify, CertReport, CoefficientFamily, Condition, Verdict};
pub use energy::{NehariResidual, Problem, ProblemParams};
pub use error::{Error, Result};
pub use fiber::{project_to_nehari, sphere_normalize, FiberMap, FiberPoint, ProjectionOptions, ProjectionResult, ProjectionStatus};
pub use grid::{build_grid, Grid, GridSpec, ScalarField, StatePair};
pub use solvers::{
    beta_sweep, competitive_least_energy, cooperative_least_energy, refine_solution, scalar_ground_state, solve_system,
    SolveReport, SolverOptions,
};
pub use spectrum::{admissible, principal_eigenpair, Admissibility, EigenPair};
