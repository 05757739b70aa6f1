//! Monte Carlo verification: scenarios with analytic true risks, exact
//! suprema of deviation statistics, and dominance checks against the
//! closed-form right-hand sides.

mod experiment;
mod interval;
mod scenario;

pub use experiment::{
    exact_exceedance, report_from_counts, run_experiment, run_partition, sup_deviation, symmetrization_ratio_check,
    trial_rng, trial_statistic, verdict, Deviation, EpsilonRow, Estimate, ExperimentConfig, Statistic,
    SymmetrizationOutcome, SymmetrizationReport, SymmetrizationRow, TrialCounts, TrialReport, Verdict,
};
pub use interval::{frequency_lower, frequency_upper, z_for_confidence};
pub use scenario::{estimate_moment, Empirical, MomentEstimate, Scenario, ScenarioKind, ScenarioSpec};
