//! Discrete p-Laplacian systems `Δₚuᵢ = aᵢ(x)·F_{uᵢ}(x, u)`: energy, operator,
//! Dirichlet solves, and comparison / sub-solution checks.

mod operator;
mod solve;
mod system;
mod verify;

pub use operator::{apply_p_laplacian, discrete_energy, energy_density, flux, flux_derivative};
pub use solve::{
    harmonic_extension, solve_dirichlet_scalar, solve_dirichlet_system, solve_dirichlet_system_from, system_residual,
    Merit, SandwichReport, SolveOptions, SolveReport, LINE_SEARCH_SLACK, SANDWICH_TOL,
};
pub use system::{
    Coupling, ExprCoupling, HypothesisReport, SampledCheck, ScalarCoupling, SeparableCoupling, SystemSpec, Weight,
};
pub use verify::{
    verify_comparison, verify_comparison_with, verify_subsolution, ComparisonReport, NodeCheck, Side,
    SubsolutionReport,
};
