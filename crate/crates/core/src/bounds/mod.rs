//! Closed-form right-hand sides of the relative deviation bounds and the
//! unbounded-loss bounds, plus their constants (Γ, κ, Ψ, Λ, Sauer).
//!
//! Every exponential and power is formed in log-space; probability bounds
//! are clipped to `[0, 1]` as the final step and flagged vacuous when the
//! unclipped value is at least one.

mod registry;

use std::f64::consts::LN_2;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numeric::clip_probability;

pub use registry::{evaluate, BoundId, BoundOutput, BoundRequest, BoundValue};

const LN_4: f64 = 2.0 * LN_2;

/// Which capacity measure a [`CapacityDescriptor`] carries.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CapacityKind {
    /// `E[S_H(x_1^{2m})]`.
    ExpectedShatter,
    /// `Π_{2m}(H)`.
    GrowthFunction,
    VcDimension,
    PseudoDimension,
}

/// The complexity term inside every bound. Dimension kinds are converted to
/// a shatter value through Sauer's lemma at `n = 2m`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawCapacity")]
pub struct CapacityDescriptor {
    kind: CapacityKind,
    value: f64,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawCapacity {
    kind: CapacityKind,
    value: f64,
}

impl TryFrom<RawCapacity> for CapacityDescriptor {
    type Error = Error;

    fn try_from(raw: RawCapacity) -> Result<Self> {
        Self::new(raw.kind, raw.value)
    }
}

impl CapacityDescriptor {
    pub fn new(kind: CapacityKind, value: f64) -> Result<Self> {
        if !(value >= 1.0) || !value.is_finite() {
            return Err(Error::domain("capacity", format!("capacity value must be finite and >= 1, got {value}")));
        }
        if matches!(kind, CapacityKind::VcDimension | CapacityKind::PseudoDimension) && value.fract() != 0.0 {
            return Err(Error::domain("capacity", "dimension must be a positive integer"));
        }
        Ok(Self { kind, value })
    }

    pub fn expected_shatter(value: f64) -> Result<Self> {
        Self::new(CapacityKind::ExpectedShatter, value)
    }

    pub fn growth(value: f64) -> Result<Self> {
        Self::new(CapacityKind::GrowthFunction, value)
    }

    pub fn vc_dimension(d: u64) -> Result<Self> {
        Self::new(CapacityKind::VcDimension, d as f64)
    }

    pub fn pseudo_dimension(d: u64) -> Result<Self> {
        Self::new(CapacityKind::PseudoDimension, d as f64)
    }

    pub fn kind(&self) -> CapacityKind {
        self.kind
    }

    pub fn value(&self) -> f64 {
        self.value
    }

    /// Natural log of the shatter value used at sample size `m`.
    pub fn ln_shatter(&self, m: u64) -> Result<f64> {
        match self.kind {
            CapacityKind::ExpectedShatter | CapacityKind::GrowthFunction => Ok(self.value.ln()),
            CapacityKind::VcDimension | CapacityKind::PseudoDimension => {
                ln_sauer_growth_upper(self.value as u64, 2 * m)
            }
        }
    }
}

/// Parameter bundle for the closed-form evaluators. Each evaluator checks
/// only the fields it reads.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BoundParams {
    pub alpha: f64,
    pub epsilon: f64,
    pub tau: f64,
    /// Offset in the interpolated bound's denominator.
    pub nu: f64,
    /// Slack factor of the fast-rate bound, `R <= (1 + v) R̂ + ε`.
    pub v: f64,
    pub delta: f64,
    pub m: u64,
}

impl Default for BoundParams {
    fn default() -> Self {
        Self {
            alpha: 2.0,
            epsilon: 0.1,
            tau: 0.0,
            nu: 1.0,
            v: 1.0,
            delta: 0.05,
            m: 1000,
        }
    }
}

impl BoundParams {
    fn check_m(&self) -> Result<f64> {
        if self.m == 0 {
            return Err(Error::domain("m", "sample size must be at least 1"));
        }
        Ok(self.m as f64)
    }

    fn check_epsilon_positive(&self) -> Result<()> {
        if !(self.epsilon > 0.0) || !self.epsilon.is_finite() {
            return Err(Error::domain("epsilon", "epsilon must be positive"));
        }
        Ok(())
    }

    fn check_delta(&self) -> Result<()> {
        check_delta(self.delta)
    }
}

fn check_delta(delta: f64) -> Result<()> {
    if !(delta > 0.0 && delta < 1.0) {
        return Err(Error::domain("delta", "delta must lie in (0, 1)"));
    }
    Ok(())
}

fn check_alpha_small(alpha: f64) -> Result<()> {
    if !(alpha > 1.0 && alpha <= 2.0) {
        return Err(Error::domain("alpha", "alpha must lie in (1, 2]"));
    }
    Ok(())
}

fn check_alpha_large(alpha: f64) -> Result<()> {
    if !(alpha > 2.0) || !alpha.is_finite() {
        return Err(Error::domain("alpha", "alpha must exceed 2"));
    }
    Ok(())
}

fn check_tau(tau: f64) -> Result<()> {
    if !(tau >= 0.0) || !tau.is_finite() {
        return Err(Error::domain("tau", "tau must be nonnegative"));
    }
    Ok(())
}

fn check_moment(moment: f64) -> Result<()> {
    if !(moment >= 0.0) || !moment.is_finite() {
        return Err(Error::domain("moment", "moment must be finite and nonnegative"));
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WarningCode {
    /// `0 < τ^{(α-1)/α} < ε^{α/(α-1)}` does not hold.
    MomentReductionSmallAlpha,
    /// `τ <= ε²` does not hold.
    MomentReductionLargeAlpha,
    /// `m ε^{α/(α-1)} > 1` does not hold; the bound is then trivially true.
    SymmetrizationRegime,
}

/// A violated side condition. The formula is still evaluated.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Warning {
    pub code: WarningCode,
    pub message: String,
}

impl fmt::Display for Warning {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.message)
    }
}

/// A probability bound clipped into `[0, 1]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProbabilityBound {
    pub rhs: f64,
    /// Natural log of the unclipped right-hand side.
    pub ln_unclipped: f64,
    pub vacuous: bool,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub warnings: Vec<Warning>,
}

impl ProbabilityBound {
    fn from_log(ln_unclipped: f64) -> Self {
        let (rhs, vacuous) = clip_probability(ln_unclipped);
        Self {
            rhs,
            ln_unclipped,
            vacuous,
            warnings: Vec::new(),
        }
    }
}

/// Which side of a one-sided relative deviation is bounded.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DeviationSide {
    /// `(R - R̂) / R^{1/α}`, normalized by the true error.
    TrueMinusEmp,
    /// `(R̂ - R) / R̂^{1/α}`, normalized by the empirical error.
    EmpMinusTrue,
}

/// For the solved and additive forms: whether the rate (or moment) passed in
/// is the empirical one, bounding the true quantity, or the reverse. Both
/// directions share one closed form.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Direction {
    #[default]
    UpperOnTrue,
    UpperOnEmp,
}

fn relative_exponent_scale(alpha: f64, m: f64) -> f64 {
    // m^{2(α-1)/α} / 2^{(α+2)/α}
    (2.0 * (alpha - 1.0) / alpha * m.ln() - (alpha + 2.0) / alpha * LN_2).exp()
}

/// `4 E[S_H] exp(-m^{2(α-1)/α} ε² / 2^{(α+2)/α})`, clipped to `[0, 1]`.
///
/// At `α = 2` the exponent is `-m ε² / 4`. Adds a warning when
/// `m ε^{α/(α-1)} <= 1`, where the bound holds only trivially.
pub fn relative_deviation_rhs(params: &BoundParams, cap: &CapacityDescriptor) -> Result<ProbabilityBound> {
    check_alpha_small(params.alpha)?;
    params.check_epsilon_positive()?;
    let m = params.check_m()?;
    let ln_s = cap.ln_shatter(params.m)?;
    let alpha = params.alpha;
    let exponent = relative_exponent_scale(alpha, m) * params.epsilon * params.epsilon;
    let mut bound = ProbabilityBound::from_log(LN_4 + ln_s - exponent);
    if m * params.epsilon.powf(alpha / (alpha - 1.0)) <= 1.0 {
        bound.warnings.push(Warning {
            code: WarningCode::SymmetrizationRegime,
            message: "m * epsilon^(alpha/(alpha-1)) <= 1: the bound holds only trivially".into(),
        });
    }
    Ok(bound)
}

/// Coefficient `2^{(α+2)/(2α)} sqrt((ln E[S_H] + ln(4/δ)) / m^{2(α-1)/α})`.
///
/// With probability at least `1 - δ` the one-sided deviation is at most this
/// coefficient times `R(h)^{1/α}` (or `R̂(h)^{1/α}` for
/// [`DeviationSide::EmpMinusTrue`]); both sides share the coefficient.
pub fn relative_deviation_radius(params: &BoundParams, cap: &CapacityDescriptor, _side: DeviationSide) -> Result<f64> {
    check_alpha_small(params.alpha)?;
    params.check_delta()?;
    let m = params.check_m()?;
    let ln_s = cap.ln_shatter(params.m)?;
    let complexity = ln_s + LN_4 - params.delta.ln();
    Ok((complexity / relative_exponent_scale(params.alpha, m)).sqrt())
}

/// The `α = 2` complexity term `u = (ln E[S_H] + ln(4/δ)) / m`.
pub fn complexity_term(params: &BoundParams, cap: &CapacityDescriptor) -> Result<f64> {
    params.check_delta()?;
    let m = params.check_m()?;
    let ln_s = cap.ln_shatter(params.m)?;
    Ok((ln_s + LN_4 - params.delta.ln()) / m)
}

/// `rate + 2 sqrt(rate u) + 4u`: an upper bound on the true error from the
/// empirical one, or on the empirical error from the true one.
pub fn solved_bound(rate: f64, params: &BoundParams, cap: &CapacityDescriptor, _direction: Direction) -> Result<f64> {
    if !(0.0..=1.0).contains(&rate) {
        return Err(Error::domain("rate", "rate must lie in [0, 1]"));
    }
    let u = complexity_term(params, cap)?;
    Ok(solved_bound_from_u(rate, u))
}

pub(crate) fn solved_bound_from_u(rate: f64, u: f64) -> f64 {
    rate + 2.0 * (rate * u).sqrt() + 4.0 * u
}

/// `4 E[S_H] exp(-m ν ε² / (2(1 - ε²)))` for the interpolated ratio
/// `(R - R̂) / (R + R̂ + ν)`.
pub fn interpolated_rhs(params: &BoundParams, cap: &CapacityDescriptor) -> Result<ProbabilityBound> {
    params.check_epsilon_positive()?;
    if params.epsilon >= 1.0 {
        return Err(Error::domain("epsilon", "epsilon must be below 1"));
    }
    if !(params.nu > 0.0) {
        return Err(Error::domain("nu", "nu must be positive"));
    }
    let m = params.check_m()?;
    let ln_s = cap.ln_shatter(params.m)?;
    let e2 = params.epsilon * params.epsilon;
    let exponent = m * params.nu * e2 / (2.0 * (1.0 - e2));
    Ok(ProbabilityBound::from_log(LN_4 + ln_s - exponent))
}

/// `4 E[S_H] exp(-m v ε / (4(1 + v)))`, or its `v -> ∞` limit
/// `4 E[S_H] exp(-m ε / 4)` when `realizable`.
pub fn fast_rate_rhs(params: &BoundParams, cap: &CapacityDescriptor, realizable: bool) -> Result<ProbabilityBound> {
    params.check_epsilon_positive()?;
    let m = params.check_m()?;
    let ln_s = cap.ln_shatter(params.m)?;
    let rate = if realizable {
        1.0
    } else {
        if !(params.v > 0.0) {
            return Err(Error::domain("v", "v must be positive"));
        }
        params.v / (1.0 + params.v)
    };
    let exponent = m * rate * params.epsilon / 4.0;
    Ok(ProbabilityBound::from_log(LN_4 + ln_s - exponent))
}

/// `Γ(α, ε)` multiplying `ε` in the threshold of the `1 < α <= 2`
/// unbounded-loss reduction.
pub fn gamma(alpha: f64, epsilon: f64, tau: f64) -> Result<f64> {
    check_alpha_small(alpha)?;
    if !(epsilon > 0.0 && epsilon <= 1.0) {
        return Err(Error::domain("epsilon", "epsilon must lie in (0, 1]"));
    }
    check_tau(tau)?;
    let a = alpha;
    let conj = a / (a - 1.0);
    let ratio = (a - 1.0) / a;
    let first = ratio * (1.0 + tau).powf(1.0 / a);
    let conj_pow = conj.powf(a - 1.0);
    let second = conj_pow / a
        * (1.0 + ratio.powf(a) * tau.powf(1.0 / a)).powf(1.0 / a)
        * (1.0 + (1.0 / epsilon).ln() / conj_pow).powf(ratio);
    Ok(first + second)
}

/// The explicit `α = 2` form
/// `sqrt(1+τ)/2 + sqrt(1 + sqrt(τ)/4) sqrt(1 + ln(1/ε)/2)`.
pub fn gamma_alpha2(epsilon: f64, tau: f64) -> Result<f64> {
    if !(epsilon > 0.0 && epsilon <= 1.0) {
        return Err(Error::domain("epsilon", "epsilon must lie in (0, 1]"));
    }
    check_tau(tau)?;
    Ok((1.0 + tau).sqrt() / 2.0 + (1.0 + tau.sqrt() / 4.0).sqrt() * (1.0 + 0.5 * (1.0 / epsilon).ln()).sqrt())
}

/// Warnings for the `Γ` reduction's side condition `0 < τ^{(α-1)/α} < ε^{α/(α-1)}`.
pub fn gamma_warnings(alpha: f64, epsilon: f64, tau: f64) -> Vec<Warning> {
    let lhs = tau.powf((alpha - 1.0) / alpha);
    let rhs = epsilon.powf(alpha / (alpha - 1.0));
    if tau > 0.0 && lhs < rhs {
        Vec::new()
    } else {
        vec![Warning {
            code: WarningCode::MomentReductionSmallAlpha,
            message: format!(
                "requires 0 < tau^((alpha-1)/alpha) < epsilon^(alpha/(alpha-1)); got {lhs:.6e} vs {rhs:.6e}"
            ),
        }]
    }
}

/// `κ_τ = sqrt(1+τ)/2 + sqrt(1 + sqrt(τ)/4)`, so that `Γ(2, ε) ε <= κ_τ ε^{3/4}`.
pub fn kappa(tau: f64) -> Result<f64> {
    check_tau(tau)?;
    Ok((1.0 + tau).sqrt() / 2.0 + (1.0 + tau.sqrt() / 4.0).sqrt())
}

/// Additive `α = 2` unbounded-loss deviation, as printed:
/// `(3 sqrt(L₂) / 4) (4 (ln E[S_Q] + ln(1/δ)) / m)^{3/8}`.
///
/// `moment2` is `L₂(h)` when bounding the true loss and `L̂₂(h)` for the
/// reverse direction.
pub fn unbounded_bound_alpha2(
    moment2: f64,
    cap: &CapacityDescriptor,
    delta: f64,
    m: u64,
    _direction: Direction,
) -> Result<f64> {
    check_moment(moment2)?;
    check_delta(delta)?;
    if m == 0 {
        return Err(Error::domain("m", "sample size must be at least 1"));
    }
    let ln_s = cap.ln_shatter(m)?;
    let inner = 4.0 * (ln_s - delta.ln()) / m as f64;
    Ok(0.75 * moment2.sqrt() * inner.powf(0.375))
}

/// Variant of [`unbounded_bound_alpha2`] derived directly from
/// `Γ(2, ε) ε <= κ_0 ε^{3/4}` and `4 E[S_Q] e^{-mε²/4} = δ`:
/// `κ_0 sqrt(L₂) (4 (ln E[S_Q] + ln(4/δ)) / m)^{3/8}` with `κ_0 = 3/2`.
pub fn unbounded_bound_alpha2_kappa(
    moment2: f64,
    cap: &CapacityDescriptor,
    delta: f64,
    m: u64,
    _direction: Direction,
) -> Result<f64> {
    check_moment(moment2)?;
    check_delta(delta)?;
    if m == 0 {
        return Err(Error::domain("m", "sample size must be at least 1"));
    }
    let ln_s = cap.ln_shatter(m)?;
    let inner = 4.0 * (ln_s + LN_4 - delta.ln()) / m as f64;
    Ok(kappa(0.0)? * moment2.sqrt() * inner.powf(0.375))
}

/// `Ψ(α) = (1/2)^{2/α} (α/(α-2))^{(α-1)/α}` for `α > 2`.
pub fn psi(alpha: f64) -> Result<f64> {
    check_alpha_large(alpha)?;
    let a = alpha;
    Ok((-(2.0 / a) * LN_2 + (a - 1.0) / a * (a / (a - 2.0)).ln()).exp())
}

/// `Λ(α, τ) = Ψ(α) + (α/(α-1)) τ^{(α-2)/(2α)}`; `Λ(α, 0) = Ψ(α)`.
pub fn lambda_const(alpha: f64, tau: f64) -> Result<f64> {
    let base = psi(alpha)?;
    check_tau(tau)?;
    if tau == 0.0 {
        return Ok(base);
    }
    Ok(base + alpha / (alpha - 1.0) * tau.powf((alpha - 2.0) / (2.0 * alpha)))
}

/// Warnings for the `α > 2` reduction's side condition `0 < τ <= ε²`.
pub fn lambda_warnings(epsilon: f64, tau: f64) -> Vec<Warning> {
    if tau > 0.0 && tau <= epsilon * epsilon {
        Vec::new()
    } else {
        vec![Warning {
            code: WarningCode::MomentReductionLargeAlpha,
            message: format!("requires 0 < tau <= epsilon^2; got tau = {tau:e}, epsilon^2 = {:e}", epsilon * epsilon),
        }]
    }
}

/// Additive `α > 2` deviation with pseudo-dimension `d`:
/// `2 Ψ(α) L_α^{1/α} sqrt((d ln(2em/d) + ln(4/δ)) / m)`.
///
/// `d = 0` uses the limit `d ln(2em/d) -> 0`.
pub fn unbounded_bound_large_alpha(
    moment_alpha: f64,
    alpha: f64,
    d: u64,
    m: u64,
    delta: f64,
    _direction: Direction,
) -> Result<f64> {
    let lambda = psi(alpha)?;
    check_moment(moment_alpha)?;
    check_delta(delta)?;
    if m == 0 {
        return Err(Error::domain("m", "sample size must be at least 1"));
    }
    let ln_growth = ln_sauer_growth_upper(d, 2 * m)?;
    let inner = (ln_growth + LN_4 - delta.ln()) / m as f64;
    Ok(2.0 * lambda * moment_alpha.powf(1.0 / alpha) * inner.sqrt())
}

/// `ln((e n / d)^d)`, the log of Sauer's bound on `Π_n` for VC-dimension
/// `d <= n`. `d = 0` gives `0` (a single dichotomy).
pub fn ln_sauer_growth_upper(d: u64, n: u64) -> Result<f64> {
    if d > n {
        return Err(Error::domain("d", format!("Sauer bound needs d <= n, got d = {d}, n = {n}")));
    }
    if d == 0 {
        return Ok(0.0);
    }
    let d = d as f64;
    Ok(d * (1.0 + (n as f64 / d).ln()))
}

/// `(e n / d)^d`; may be `+inf` when the value exceeds `f64` range.
pub fn sauer_growth_upper(d: u64, n: u64) -> Result<f64> {
    ln_sauer_growth_upper(d, n).map(f64::exp)
}


#[cfg(test)]
mod props {
    use proptest::prelude::*;

    use super::*;

    fn probability_rhs(which: u8, p: &BoundParams, cap: &CapacityDescriptor) -> f64 {
        match which {
            0 => relative_deviation_rhs(p, cap),
            1 => interpolated_rhs(p, cap),
            2 => fast_rate_rhs(p, cap, false),
            _ => fast_rate_rhs(p, cap, true),
        }
        .unwrap()
        .ln_unclipped
    }

    proptest! {
        #[test]
        fn rhs_monotone(
            which in 0u8..4,
            alpha in 1.05f64..=2.0,
            eps in 0.01f64..0.95,
            m in 1u64..100_000,
            s in 1.0f64..1e6,
            nu in 0.01f64..10.0,
            v in 0.01f64..100.0,
            bump in 1.0f64..2.0,
        ) {
            let p = BoundParams { alpha, epsilon: eps, nu, v, m, ..BoundParams::default() };
            let cap = CapacityDescriptor::expected_shatter(s).unwrap();
            let base = probability_rhs(which, &p, &cap);

            let more_m = BoundParams { m: m + 1 + m / 3, ..p };
            prop_assert!(probability_rhs(which, &more_m, &cap) <= base);

            let more_eps = BoundParams { epsilon: (eps * bump).min(0.99), ..p };
            prop_assert!(probability_rhs(which, &more_eps, &cap) <= base);

            let bigger = CapacityDescriptor::expected_shatter(s * bump).unwrap();
            prop_assert!(probability_rhs(which, &p, &bigger) >= base);

            let b = relative_deviation_rhs(&p, &cap).unwrap();
            prop_assert!((0.0..=1.0).contains(&b.rhs));
            prop_assert_eq!(b.vacuous, b.ln_unclipped >= 0.0);
        }

        #[test]
        fn radius_round_trip(alpha in 1.1f64..=2.0, eps in 0.05f64..1.0, s in 1.0f64..100.0) {
            let m = 1_000_000u64;
            let p = BoundParams { alpha, epsilon: eps, m, ..BoundParams::default() };
            let cap = CapacityDescriptor::expected_shatter(s).unwrap();
            let rhs = relative_deviation_rhs(&p, &cap).unwrap();
            prop_assume!(!rhs.vacuous && rhs.ln_unclipped > -700.0);
            let q = BoundParams { delta: rhs.ln_unclipped.exp(), ..p };
            let r = relative_deviation_radius(&q, &cap, DeviationSide::TrueMinusEmp).unwrap();
            prop_assert!((r - eps).abs() < 1e-10);
        }

        #[test]
        fn psi_decreasing(alpha in 2.001f64..1e4, step in 1e-3f64..10.0) {
            prop_assert!(psi(alpha + step).unwrap() < psi(alpha).unwrap());
            prop_assert!(psi(alpha).unwrap() > 1.0);
        }

        #[test]
        fn sauer_dominates_binomial_sum(d in 1u64..20, extra in 0u64..40) {
            let n = d + extra;
            let mut sum = 0.0;
            let mut c = 1.0;
            for i in 0..=d {
                if i > 0 {
                    c *= (n - i + 1) as f64 / i as f64;
                }
                sum += c;
            }
            prop_assert!(sum <= sauer_growth_upper(d, n).unwrap() * (1.0 + 1e-12));
        }
    }
}
