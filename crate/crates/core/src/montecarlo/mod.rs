//! Simulation laboratory: reproducible panels from parametric models and
//! replicated experiments against the analytic limit laws.

pub mod arbitration;
pub mod config;
pub mod experiments;
pub mod sampler;
pub mod stats;

pub use arbitration::{arbitration_report, Ambiguity, ArbitrationModel, Candidate, CandidateOutcome};
pub use config::{parse_dependence, parse_marginal, ExperimentConfig, EXPERIMENTS};
pub use experiments::{
    beta_quantile_form, representation_terms, Check, ExperimentResult, Lab, Provenance, Series,
    Tolerances,
};
pub use sampler::{individual_rng, simulate_panel, ProcessModel};
pub use stats::Summary;

use crate::error::Result;
use crate::index::IndexSpec;
use crate::panel::ThresholdSchedule;

/// Variance and normality of `√n(J_n(t) − J(t))` over `reps` replications.
pub fn clt_experiment(
    model: &ProcessModel,
    n: usize,
    reps: usize,
    thresholds: &ThresholdSchedule,
    spec: &IndexSpec,
    t: f64,
) -> Result<ExperimentResult> {
    Lab::new(model, thresholds, spec).clt(n, reps, t)
}

/// Residual RMS of the two-term representation for each `n` in `n_list`.
pub fn representation_check(
    model: &ProcessModel,
    n_list: &[usize],
    reps: usize,
    thresholds: &ThresholdSchedule,
    spec: &IndexSpec,
    t: f64,
) -> Result<ExperimentResult> {
    Lab::new(model, thresholds, spec).representation(n_list, reps, t)
}

/// Coverage of the plug-in interval for the relative change between `t` and `s`.
#[allow(clippy::too_many_arguments)]
pub fn coverage_experiment(
    model: &ProcessModel,
    n: usize,
    reps: usize,
    thresholds: &ThresholdSchedule,
    spec: &IndexSpec,
    t: f64,
    s: f64,
    alpha: f64,
) -> Result<ExperimentResult> {
    Lab::new(model, thresholds, spec).coverage(n, reps, t, s, alpha, None)
}
