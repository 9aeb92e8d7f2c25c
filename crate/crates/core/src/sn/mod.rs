//! Discrete-ordinates transport on a uniform rectangular mesh: Diamond
//! Difference sweeps, source iteration and mesh-convergence studies.

mod grid;
mod iteration;
mod study;
mod sweep;

pub use grid::{Grid2D, ScalarField};
pub use iteration::{
    source_iteration, BalanceReport, CaseConfig, IterationStats, SnSolution, SolverConfig,
    SourceTerm,
};
pub use study::{
    aggregate, convergence_study, convergence_study_with_reference, error_field, l1_error,
    manufactured_study, observed_rate, ConvergenceRow, ConvergenceTable, ManufacturedSolution,
    StudyCase, StudyOutcome,
};
pub use sweep::{dd_sweep, is_stable_direction, sweep_with, SweepResult, SweepTally};
