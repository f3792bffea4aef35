//! Least-squares estimation of the vergence offset and per-participant IPDs,
//! and BIC-based comparison against the zero-offset model.

pub mod compare;
pub mod dataset;
pub mod lm;
pub mod model;

pub use compare::{compare_models, write_comparison_csv, Comparison, ComparisonRow};
pub use dataset::{observations_from_outcomes, FitDataset, Observation, Split};
pub use lm::{
    finite_difference_jacobian, levenberg_marquardt, LeastSquaresProblem, LmOptions, LmReport,
    Termination,
};
pub use model::{
    fit, fit_with_options, goodness_of_fit, model_distance_error, model_gradient, FitResult,
    GoodnessOfFit, ModelSpec, VacProblem, Variant, IPD_INIT, IPD_MAX, IPD_MIN,
};
