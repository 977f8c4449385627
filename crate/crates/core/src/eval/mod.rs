//! Ranking quality measures and the simulated-user experiment.

pub mod corpus;
pub mod experiment;
pub mod metrics;
pub mod report;
pub mod simulate;

pub use corpus::{CorpusSpec, SyntheticCorpus};
pub use experiment::{
    run_experiment, BaselineProfile, EvalReport, ExperimentError, ExperimentPlan, Metric, ModeRun, UserRun,
};
pub use metrics::{
    c_d_rate, difference_series, linear_fit, r_precision, trend_slope, DifferencePoint, EvalError,
    SessionMetrics,
};
pub use report::CSV_FILES;
pub use simulate::{simulate_choices, SimulatedUser, UserModel};
