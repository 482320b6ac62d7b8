//! Simulation of the benchmark scenarios: random processes, regression
//! kernels, deviations from linearity, and Monte Carlo studies.

mod processes;
mod scenario;
mod study;

pub use processes::{cm_basis, covariance_matrix, ik_basis, simulate, GaussianSampler, Process, SERIES_TERMS};
pub use scenario::{
    apply_deviation, apply_linear, concurrent_coefficient, kernel_surface, s3_coefficient, DeviationFamily, DeviationSpec,
    Scenario, ScenarioSpec, GRID_NODES,
};
pub use study::{
    run_estimation_study, run_study, surface_norm, EstimationConfig, EstimationRow, HypothesisSpec, RejectionRow, StudyConfig,
    TestKind,
};
