//! Backward finite-difference solvers: the linear pricing equation, the
//! constrained variational inequality, and the Barenblatt equation.

mod bsb;
mod constrained;
mod convergence;
mod grid;
mod linear;
mod solution;

pub use bsb::{solve_bsb, POLICY_MAX_SWEEPS, POLICY_TOLERANCE};
pub use constrained::{solve_constrained, ConstraintKind, PdeOutcome};
pub use convergence::{estimate_convergence_order, ConvergenceReport, Level, Order};
pub use grid::{clustered_times, Grid1D, TRUNCATION_SDS};
pub use linear::{solve_diffusion, solve_linear, Scheme, Terminal};
pub use solution::{slice_delta, slice_gamma, PdeSolution, SchemeInfo, SolverKind};
