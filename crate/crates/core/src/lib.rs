//! Numerical laboratory for rescaled shape optimization on uniform grids:
//! torsion and eigenvalue solvers, the costs `|Ω|^α / C(Ω)` and
//! `|Ω|^α λ₁(Ω)`, relaxed and combinatorial minimizers, and executable checks
//! of the structural properties of minimizers.

pub mod error;
pub mod field;
pub mod functional;
pub mod grid;
mod linalg;
pub mod optimize;
pub mod pde;
pub mod verify;

pub use error::{Error, Result};
pub use field::{fmt_real, ScalarField};
pub use functional::{
    evaluate_set, evaluate_set_compliance, evaluate_set_eigen, evaluate_v, gradient_v, rc_quotient,
    EvalMode, FunctionalParams, FunctionalValue, MeasureKind, ProblemKind,
};
pub use grid::{build_grid, full_set, BoundaryClassification, CellSet, DomainSpec, Grid, Shape};
pub use pde::{
    solve_eigen, solve_harmonic_replacement, solve_torsion, EigenResult, TorsionSolution,
};

#[cfg(test)]
mod tests;
