use std::ops::Range;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::interval::{frequency_lower, frequency_upper};
use super::scenario::{Empirical, Scenario, ScenarioKind};
use crate::bounds::{
    fast_rate_rhs, gamma, gamma_warnings, interpolated_rhs, lambda_const, lambda_warnings, relative_deviation_rhs,
    BoundParams, CapacityDescriptor, ProbabilityBound, Warning, WarningCode,
};
use crate::error::{Error, Result};
use crate::numeric::clip_probability;

/// The per-trial scalar compared against each threshold.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Statistic {
    /// `sup (R - R̂) / (R + τ)^{1/α}`; for unbounded losses
    /// `sup (L - L̂) / (L_α + τ)^{1/α}`.
    OneSidedTrueMinusEmp,
    /// `sup (R̂ - R) / (R̂ + τ)^{1/α}`; for unbounded losses
    /// `sup (L̂ - L) / (L̂_α + τ)^{1/α}`.
    OneSidedEmpMinusTrue,
    /// `sup (R̂' - R̂) / (½(R̂ + R̂' + 1/m))^{1/α}` over two samples.
    SymmetrizedTwoSample,
    /// Largest true risk among hypotheses with zero empirical risk.
    FastRateRealizable,
    /// `sup R - (1 + v) R̂`.
    FastRateSlack,
    /// `sup (R - R̂) / (R + R̂ + ν)`.
    Interpolated,
}

/// Parameters of the deviation ratio.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Deviation {
    pub statistic: Statistic,
    pub alpha: f64,
    pub tau: f64,
    pub nu: f64,
    pub v: f64,
    pub m: usize,
}

fn ratio(num: f64, den: f64, h: usize) -> Result<f64> {
    // den is 0 only when tau = 0 and the normalizing rate is 0
    if den > 0.0 {
        Ok(num / den)
    } else {
        Err(Error::DenominatorZero { hypothesis: h })
    }
}

/// Exact supremum over the scenario's hypotheses of the chosen deviation.
/// `second` is the ghost sample, required by the symmetrized statistic.
#[allow(clippy::needless_range_loop)]
pub fn sup_deviation(dev: &Deviation, scenario: &Scenario, s: &Empirical, second: Option<&Empirical>) -> Result<f64> {
    let truth = scenario.true_risks();
    let inv = 1.0 / dev.alpha;
    let mut best = f64::NEG_INFINITY;
    match dev.statistic {
        Statistic::OneSidedTrueMinusEmp => {
            let norm = match scenario.kind() {
                ScenarioKind::BinaryClassification => truth.to_vec(),
                ScenarioKind::UnboundedLoss => scenario.true_moments(dev.alpha)?,
            };
            for h in 0..truth.len() {
                best = best.max(ratio(truth[h] - s.risks[h], (norm[h] + dev.tau).powf(inv), h)?);
            }
        }
        Statistic::OneSidedEmpMinusTrue => {
            for h in 0..truth.len() {
                best = best.max(ratio(s.risks[h] - truth[h], (s.moments[h] + dev.tau).powf(inv), h)?);
            }
        }
        Statistic::SymmetrizedTwoSample => {
            let t = second.ok_or_else(|| Error::validation("sample", "symmetrized statistic needs two samples"))?;
            let shift = 1.0 / dev.m as f64;
            for h in 0..truth.len() {
                let den = (0.5 * (s.risks[h] + t.risks[h] + shift)).powf(inv);
                best = best.max((t.risks[h] - s.risks[h]) / den);
            }
        }
        Statistic::FastRateRealizable => {
            best = 0.0;
            for h in 0..truth.len() {
                if s.risks[h] == 0.0 {
                    best = best.max(truth[h]);
                }
            }
        }
        Statistic::FastRateSlack => {
            for h in 0..truth.len() {
                best = best.max(truth[h] - (1.0 + dev.v) * s.risks[h]);
            }
        }
        Statistic::Interpolated => {
            for h in 0..truth.len() {
                best = best.max((truth[h] - s.risks[h]) / (truth[h] + s.risks[h] + dev.nu));
            }
        }
    }
    Ok(best)
}

fn default_one() -> f64 {
    1.0
}

fn default_confidence() -> f64 {
    0.99
}

/// A Monte Carlo experiment. `trials` independent samples of size `m` are
/// drawn; trial `i` uses ChaCha8 seeded with `master_seed` on stream `i`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub scenario: Scenario,
    pub statistic: Statistic,
    pub alpha: f64,
    #[serde(default)]
    pub tau: f64,
    pub epsilon_grid: Vec<f64>,
    pub m: usize,
    pub trials: u64,
    pub master_seed: u64,
    #[serde(default = "default_confidence")]
    pub confidence: f64,
    #[serde(default = "default_one")]
    pub nu: f64,
    #[serde(default = "default_one")]
    pub v: f64,
}

/// Stream reserved for the capacity draw of unbounded scenarios.
const CAPACITY_STREAM: u64 = u64::MAX;

/// The generator for trial `index`: ChaCha8 keyed by `master_seed` (via
/// `seed_from_u64`) with its stream set to `index`.
pub fn trial_rng(master_seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(master_seed);
    rng.set_stream(index);
    rng
}

impl ExperimentConfig {
    /// Checks every field; returns the first violation.
    pub fn validate(&self) -> Result<()> {
        if self.trials < 100 {
            return Err(Error::validation("trials", format!("trials >= 100 required, got {}", self.trials)));
        }
        if self.m == 0 {
            return Err(Error::validation("m", "m >= 1 required"));
        }
        if self.epsilon_grid.is_empty() {
            return Err(Error::validation("epsilon_grid", "must be nonempty"));
        }
        if self.epsilon_grid.windows(2).any(|w| !(w[0] <= w[1])) {
            return Err(Error::validation("epsilon_grid", "must be sorted ascending"));
        }
        if let Some(e) = self.epsilon_grid.iter().find(|e| !(**e > 0.0 && **e <= 1.0)) {
            return Err(Error::validation("epsilon_grid", format!("values must lie in (0, 1], got {e}")));
        }
        if !(self.confidence > 0.0 && self.confidence < 1.0) {
            return Err(Error::validation("confidence", "must lie in (0, 1)"));
        }
        if !(self.tau >= 0.0) || !self.tau.is_finite() {
            return Err(Error::validation("tau", "must be finite and nonnegative"));
        }
        if !(self.nu > 0.0) || !(self.v > 0.0) {
            return Err(Error::validation("nu", "nu and v must be positive"));
        }
        if !(self.alpha > 1.0) || !self.alpha.is_finite() {
            return Err(Error::domain("alpha", "alpha must exceed 1"));
        }
        match self.scenario.kind() {
            ScenarioKind::BinaryClassification => {
                if self.alpha > 2.0 {
                    return Err(Error::domain("alpha", "alpha must lie in (1, 2] for binary scenarios"));
                }
            }
            ScenarioKind::UnboundedLoss => {
                self.scenario.true_moments(self.alpha)?;
                if !matches!(
                    self.statistic,
                    Statistic::OneSidedTrueMinusEmp | Statistic::OneSidedEmpMinusTrue
                ) {
                    return Err(Error::validation(
                        "statistic",
                        "unbounded scenarios support only the one-sided statistics",
                    ));
                }
            }
        }
        if self.statistic == Statistic::Interpolated && self.epsilon_grid.iter().any(|&e| e >= 1.0) {
            return Err(Error::validation("epsilon_grid", "interpolated statistic needs epsilon < 1"));
        }
        Ok(())
    }

    pub fn deviation(&self) -> Deviation {
        Deviation {
            statistic: self.statistic,
            alpha: self.alpha,
            tau: self.tau,
            nu: self.nu,
            v: self.v,
            m: self.m,
        }
    }

    /// The same experiment with another statistic.
    pub fn with_statistic(&self, statistic: Statistic) -> Self {
        Self {
            statistic,
            ..self.clone()
        }
    }
}

/// Statistic value of a single trial.
pub fn trial_statistic(config: &ExperimentConfig, index: u64) -> Result<f64> {
    let mut rng = trial_rng(config.master_seed, index);
    let s = config.scenario.draw(config.m, config.alpha, &mut rng);
    let second = if config.statistic == Statistic::SymmetrizedTwoSample {
        Some(config.scenario.draw(config.m, config.alpha, &mut rng))
    } else {
        None
    };
    sup_deviation(&config.deviation(), &config.scenario, &s, second.as_ref())
}

/// Exceedance counts per ε for a block of trials. Blocks over disjoint trial
/// ranges merge by summation.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TrialCounts {
    pub trials: u64,
    pub exceedances: Vec<u64>,
}

impl TrialCounts {
    pub fn merge(mut self, other: &TrialCounts) -> Result<Self> {
        if self.exceedances.len() != other.exceedances.len() {
            return Err(Error::validation("counts", "cannot merge counts over different grids"));
        }
        self.trials += other.trials;
        for (a, b) in self.exceedances.iter_mut().zip(&other.exceedances) {
            *a += b;
        }
        Ok(self)
    }
}

/// Deviation level compared against the statistic at each ε.
#[derive(Debug, Clone, PartialEq)]
struct Plan {
    thresholds: Vec<f64>,
    bounds: Vec<ProbabilityBound>,
    capacity: f64,
    warnings: Vec<Warning>,
}

fn plan(config: &ExperimentConfig) -> Result<Plan> {
    config.validate()?;
    let mut cap_rng = trial_rng(config.master_seed, CAPACITY_STREAM);
    let capacity = config.scenario.capacity(config.m, &mut cap_rng)?;
    let cap = CapacityDescriptor::expected_shatter(capacity)?;
    let mut thresholds = Vec::new();
    let mut bounds = Vec::new();
    let mut warnings = Vec::new();
    let unbounded = config.scenario.kind() == ScenarioKind::UnboundedLoss;
    for &eps in &config.epsilon_grid {
        let params = BoundParams {
            alpha: config.alpha,
            epsilon: eps,
            tau: config.tau,
            nu: config.nu,
            v: config.v,
            delta: 0.05,
            m: config.m as u64,
        };
        let (threshold, mut bound) = match config.statistic {
            Statistic::OneSidedTrueMinusEmp | Statistic::OneSidedEmpMinusTrue if unbounded => {
                if config.alpha <= 2.0 {
                    warnings.extend(gamma_warnings(config.alpha, eps, config.tau));
                    let g = gamma(config.alpha, eps, config.tau)?;
                    (g * eps, relative_deviation_rhs(&params, &cap)?)
                } else {
                    warnings.extend(lambda_warnings(eps, config.tau));
                    let l = lambda_const(config.alpha, config.tau)?;
                    let two = BoundParams { alpha: 2.0, ..params };
                    (l * eps, relative_deviation_rhs(&two, &cap)?)
                }
            }
            Statistic::OneSidedTrueMinusEmp | Statistic::OneSidedEmpMinusTrue => {
                (eps, relative_deviation_rhs(&params, &cap)?)
            }
            Statistic::SymmetrizedTwoSample => {
                let full = relative_deviation_rhs(&params, &cap)?;
                let ln = full.ln_unclipped - 4f64.ln();
                let (rhs, vacuous) = clip_probability(ln);
                (
                    eps,
                    ProbabilityBound {
                        rhs,
                        ln_unclipped: ln,
                        vacuous,
                        warnings: full.warnings,
                    },
                )
            }
            Statistic::FastRateRealizable => (eps, fast_rate_rhs(&params, &cap, true)?),
            Statistic::FastRateSlack => (eps, fast_rate_rhs(&params, &cap, false)?),
            Statistic::Interpolated => (eps, interpolated_rhs(&params, &cap)?),
        };
        warnings.append(&mut bound.warnings);
        thresholds.push(threshold);
        bounds.push(bound);
    }
    warnings.dedup_by(|a, b| a.code == b.code);
    Ok(Plan {
        thresholds,
        bounds,
        capacity,
        warnings,
    })
}

fn count_range(config: &ExperimentConfig, thresholds: &[f64], range: Range<u64>) -> Result<TrialCounts> {
    let trials = range.end.saturating_sub(range.start);
    let per_trial: Vec<f64> = range
        .into_par_iter()
        .map(|i| trial_statistic(config, i))
        .collect::<Result<_>>()?;
    let exceedances = thresholds
        .iter()
        .map(|&t| per_trial.iter().filter(|&&s| s > t).count() as u64)
        .collect();
    Ok(TrialCounts { trials, exceedances })
}

/// Counts for trials `range` of the experiment (a partition of
/// `0..config.trials` merges to the full run).
pub fn run_partition(config: &ExperimentConfig, range: Range<u64>) -> Result<TrialCounts> {
    let plan = plan(config)?;
    count_range(config, &plan.thresholds, range)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    /// The frequency's upper confidence bound is at most the bound.
    Pass,
    /// The bound lies inside the confidence band of the frequency.
    Inconclusive,
    /// The bound is clipped to 1 and cannot be falsified.
    Vacuous,
    /// The frequency's lower confidence bound exceeds the bound.
    Fail,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpsilonRow {
    pub epsilon: f64,
    /// Level the statistic is compared against (`ε`, `Γ ε` or `Λ ε`).
    pub threshold: f64,
    pub exceedance_count: u64,
    pub trials: u64,
    pub empirical_frequency: f64,
    pub frequency_lower_ci: f64,
    pub frequency_upper_ci: f64,
    pub theorem_rhs: f64,
    pub verdict: Verdict,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialReport {
    pub statistic: Statistic,
    pub alpha: f64,
    pub tau: f64,
    pub m: usize,
    pub master_seed: u64,
    pub confidence: f64,
    /// Shatter value used in every right-hand side.
    pub capacity: f64,
    pub rows: Vec<EpsilonRow>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub warnings: Vec<Warning>,
}

impl TrialReport {
    pub fn has_failure(&self) -> bool {
        self.rows.iter().any(|r| r.verdict == Verdict::Fail)
    }
}

pub fn verdict(lower: f64, upper: f64, bound: &ProbabilityBound) -> Verdict {
    if bound.vacuous {
        Verdict::Vacuous
    } else if upper <= bound.rhs {
        Verdict::Pass
    } else if lower > bound.rhs {
        Verdict::Fail
    } else {
        Verdict::Inconclusive
    }
}

/// Builds a report from (possibly merged) counts.
pub fn report_from_counts(config: &ExperimentConfig, counts: &TrialCounts) -> Result<TrialReport> {
    let plan = plan(config)?;
    if counts.exceedances.len() != plan.thresholds.len() || counts.trials == 0 {
        return Err(Error::validation("counts", "counts do not match the experiment grid"));
    }
    let mut rows = Vec::with_capacity(plan.thresholds.len());
    for (i, &eps) in config.epsilon_grid.iter().enumerate() {
        let k = counts.exceedances[i];
        let n = counts.trials;
        let lower = frequency_lower(k, n, config.confidence)?;
        let upper = frequency_upper(k, n, config.confidence)?;
        let bound = &plan.bounds[i];
        rows.push(EpsilonRow {
            epsilon: eps,
            threshold: plan.thresholds[i],
            exceedance_count: k,
            trials: n,
            empirical_frequency: k as f64 / n as f64,
            frequency_lower_ci: lower,
            frequency_upper_ci: upper,
            theorem_rhs: bound.rhs,
            verdict: verdict(lower, upper, bound),
        });
    }
    Ok(TrialReport {
        statistic: config.statistic,
        alpha: config.alpha,
        tau: config.tau,
        m: config.m,
        master_seed: config.master_seed,
        confidence: config.confidence,
        capacity: plan.capacity,
        rows,
        warnings: plan.warnings,
    })
}

pub fn run_experiment(config: &ExperimentConfig) -> Result<TrialReport> {
    let plan = plan(config)?;
    let counts = count_range(config, &plan.thresholds, 0..config.trials)?;
    report_from_counts(config, &counts)
}

/// Exact `Pr[statistic > threshold]` by enumerating all `n^m` samples of a
/// finite-domain scenario. One-sample statistics only.
pub fn exact_exceedance(config: &ExperimentConfig, threshold: f64, max_samples: u64) -> Result<f64> {
    let probs = config
        .scenario
        .finite_domain()
        .ok_or_else(|| Error::validation("scenario", "exact enumeration needs a finite domain"))?;
    if config.statistic == Statistic::SymmetrizedTwoSample {
        return Err(Error::validation("statistic", "exact enumeration covers one-sample statistics"));
    }
    let n = probs.len() as u64;
    let total = n
        .checked_pow(config.m as u32)
        .filter(|t| *t <= max_samples)
        .ok_or_else(|| Error::Budget(format!("{n}^{} samples", config.m)))?;
    let dev = config.deviation();
    let mut mass = Vec::new();
    let mut points = vec![0usize; config.m];
    for code in 0..total {
        let mut c = code;
        let mut p = 1.0;
        for slot in points.iter_mut() {
            *slot = (c % n) as usize;
            p *= probs[*slot];
            c /= n;
        }
        let e = config.scenario.empirical_from_points(&points)?;
        if sup_deviation(&dev, &config.scenario, &e, None)? > threshold {
            mass.push(p);
        }
    }
    Ok(crate::numeric::sum_ascending(mass))
}

/// Estimated probability with its confidence band.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    pub count: u64,
    pub trials: u64,
    pub frequency: f64,
    pub lower: f64,
    pub upper: f64,
}

impl Estimate {
    fn new(count: u64, trials: u64, confidence: f64) -> Result<Self> {
        Ok(Self {
            count,
            trials,
            frequency: count as f64 / trials as f64,
            lower: frequency_lower(count, trials, confidence)?,
            upper: frequency_upper(count, trials, confidence)?,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SymmetrizationOutcome {
    /// Point estimates satisfy `p̂₁ <= 4 p̂₂`.
    Pass,
    /// Point estimates disagree but the bands overlap the boundary.
    Inconclusive,
    /// `lower(p₁) > 4 upper(p₂)`.
    Violation,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SymmetrizationRow {
    pub epsilon: f64,
    pub lhs_one_sample: Estimate,
    pub lhs_symmetrized: Estimate,
    /// Whether `m ε^{α/(α-1)} > 1`, the regime the factor 4 is claimed for.
    pub regime_ok: bool,
    pub outcome: SymmetrizationOutcome,
    pub factor_ok: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SymmetrizationReport {
    pub statistic: Statistic,
    pub rows: Vec<SymmetrizationRow>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub warnings: Vec<Warning>,
}

/// Estimates the one-sample probability named by `config.statistic` (either
/// one-sided form) and the symmetrized two-sample probability on the same
/// trials, and checks `p₁ <= 4 p₂` per ε.
pub fn symmetrization_ratio_check(config: &ExperimentConfig) -> Result<SymmetrizationReport> {
    config.validate()?;
    if config.scenario.kind() != ScenarioKind::BinaryClassification {
        return Err(Error::validation("scenario", "symmetrization check needs a binary scenario"));
    }
    if !matches!(
        config.statistic,
        Statistic::OneSidedTrueMinusEmp | Statistic::OneSidedEmpMinusTrue
    ) {
        return Err(Error::validation("statistic", "choose a one-sided statistic"));
    }
    let one = config.deviation();
    let sym = Deviation {
        statistic: Statistic::SymmetrizedTwoSample,
        ..one
    };
    let pairs: Vec<(f64, f64)> = (0..config.trials)
        .into_par_iter()
        .map(|i| {
            let mut rng = trial_rng(config.master_seed, i);
            let s = config.scenario.draw(config.m, config.alpha, &mut rng);
            let t = config.scenario.draw(config.m, config.alpha, &mut rng);
            Ok((
                sup_deviation(&one, &config.scenario, &s, None)?,
                sup_deviation(&sym, &config.scenario, &s, Some(&t))?,
            ))
        })
        .collect::<Result<_>>()?;
    let mut rows = Vec::new();
    let mut warnings = Vec::new();
    let a = config.alpha;
    for &eps in &config.epsilon_grid {
        let k1 = pairs.iter().filter(|p| p.0 > eps).count() as u64;
        let k2 = pairs.iter().filter(|p| p.1 > eps).count() as u64;
        let p1 = Estimate::new(k1, config.trials, config.confidence)?;
        let p2 = Estimate::new(k2, config.trials, config.confidence)?;
        let regime_ok = config.m as f64 * eps.powf(a / (a - 1.0)) > 1.0;
        if !regime_ok {
            warnings.push(Warning {
                code: WarningCode::SymmetrizationRegime,
                message: format!("m * epsilon^(alpha/(alpha-1)) <= 1 at epsilon = {eps}"),
            });
        }
        let outcome = if p1.lower > 4.0 * p2.upper {
            SymmetrizationOutcome::Violation
        } else if p1.frequency <= 4.0 * p2.frequency {
            SymmetrizationOutcome::Pass
        } else {
            SymmetrizationOutcome::Inconclusive
        };
        rows.push(SymmetrizationRow {
            epsilon: eps,
            lhs_one_sample: p1,
            lhs_symmetrized: p2,
            regime_ok,
            outcome,
            factor_ok: outcome != SymmetrizationOutcome::Violation,
        });
    }
    Ok(SymmetrizationReport {
        statistic: config.statistic,
        rows,
        warnings,
    })
}
