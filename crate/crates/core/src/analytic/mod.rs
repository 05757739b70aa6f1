//! Numeric checks of the analytic facts behind the bounds: monotonicity of
//! the normalized deviation `F`, the `ε^{3/4}` approximation, and moment
//! identities for loss tails.

pub mod quadrature;
pub mod tail;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::bounds::psi;
use crate::error::{Error, Result};

pub use quadrature::QuadratureBudget;
pub use tail::{sqrt_tail_integral, tail_integral_moment, Asymptote, Bernoulli, Pareto, Scaled, Tail};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FParams {
    alpha: f64,
    eta: f64,
}

impl FParams {
    pub fn new(alpha: f64, eta: f64) -> Result<Self> {
        if !(alpha > 1.0 && alpha <= 2.0) {
            return Err(Error::domain("alpha", "alpha must lie in (1, 2]"));
        }
        if !(eta > 0.0) || !eta.is_finite() {
            return Err(Error::domain("eta", "eta must be positive"));
        }
        Ok(Self { alpha, eta })
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn eta(&self) -> f64 {
        self.eta
    }
}

/// Which normalization `F` uses.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FVariant {
    /// `(x - y) / (½(x + y + η))^{1/α}`
    #[default]
    HalfMean,
    /// `(x - y) / (x + y + η)^{1/α}`
    Plain,
}

fn f_raw(p: &FParams, variant: FVariant, x: f64, y: f64) -> f64 {
    let s = x + y + p.eta;
    let s = match variant {
        FVariant::HalfMean => 0.5 * s,
        FVariant::Plain => s,
    };
    (x - y) / s.powf(1.0 / p.alpha)
}

pub fn f_value(params: &FParams, variant: FVariant, x: f64, y: f64) -> Result<f64> {
    if !(x > 0.0) || !x.is_finite() {
        return Err(Error::domain("x", "x must be positive"));
    }
    if !(y > 0.0) || !y.is_finite() {
        return Err(Error::domain("y", "y must be positive"));
    }
    Ok(f_raw(params, variant, x, y))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProbeReport {
    pub samples: u64,
    pub violations: u64,
    /// Smallest of `F(x+Δ, y) - F(x, y)` and `F(x, y) - F(x, y+Δ)` seen.
    pub min_margin: f64,
}

/// Margin of a single probe at `(x, y)` with step `delta`: positive iff `F`
/// increased in `x` and decreased in `y`.
pub fn probe_point(params: &FParams, variant: FVariant, x: f64, y: f64, delta: f64) -> Result<f64> {
    if !(delta > 0.0) {
        return Err(Error::domain("delta", "step must be positive"));
    }
    let base = f_value(params, variant, x, y)?;
    let up_x = f_raw(params, variant, x + delta, y) - base;
    let up_y = base - f_raw(params, variant, x, y + delta);
    Ok(up_x.min(up_y))
}

/// Draws `samples` random `(x, y, Δ)` with `x, y` log-uniform on
/// `[1e-4, 1e2]` and `Δ / x` log-uniform on `[1e-6, 1]`.
pub fn monotonicity_probe(params: &FParams, variant: FVariant, samples: u64, seed: u64) -> Result<ProbeReport> {
    if samples == 0 {
        return Err(Error::domain("samples", "need at least one sample"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut log_uniform = |lo: f64, hi: f64| (rng.random_range(lo.ln()..hi.ln())).exp();
    let mut report = ProbeReport {
        samples,
        violations: 0,
        min_margin: f64::INFINITY,
    };
    for _ in 0..samples {
        let x = log_uniform(1e-4, 1e2);
        let y = log_uniform(1e-4, 1e2);
        let delta = x * log_uniform(1e-6, 1.0);
        let margin = probe_point(params, variant, x, y, delta)?;
        if !(margin > 0.0) {
            report.violations += 1;
        }
        report.min_margin = report.min_margin.min(margin);
    }
    Ok(report)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ApproxCheck {
    pub epsilon: f64,
    pub beta: f64,
    /// `ε sqrt(1 + ½ ln(1/ε))`
    pub lhs: f64,
    /// `ε^β`
    pub rhs: f64,
    pub holds: bool,
}

pub fn approx_check(epsilon: f64, beta: f64) -> Result<ApproxCheck> {
    if !(epsilon > 0.0 && epsilon <= 1.0) {
        return Err(Error::domain("epsilon", "epsilon must lie in (0, 1]"));
    }
    if !beta.is_finite() {
        return Err(Error::domain("beta", "beta must be finite"));
    }
    let lhs = epsilon * (1.0 - 0.5 * epsilon.ln()).sqrt();
    let rhs = epsilon.powf(beta);
    Ok(ApproxCheck {
        epsilon,
        beta,
        lhs,
        rhs,
        holds: lhs <= rhs,
    })
}

/// `points` log-spaced values from `10^lo_exp` to `1` inclusive.
pub fn log_grid(lo_exp: f64, points: usize) -> Vec<f64> {
    match points {
        0 => Vec::new(),
        1 => vec![1.0],
        _ => (0..points)
            .map(|i| {
                if i + 1 == points {
                    1.0
                } else {
                    10f64.powf(lo_exp * (1.0 - i as f64 / (points - 1) as f64))
                }
            })
            .collect(),
    }
}

/// [`approx_check`] over [`log_grid`]`(-6, points)`.
pub fn approx_grid(beta: f64, points: usize) -> Result<Vec<ApproxCheck>> {
    log_grid(-6.0, points).into_iter().map(|e| approx_check(e, beta)).collect()
}

/// Both sides of `∫ sqrt(Pr[L > t]) dt <= Ψ(α) L_α^{1/α}` for a Pareto loss.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SqrtTailCheck {
    pub shape: f64,
    pub alpha: f64,
    /// Quadrature of the square-root tail.
    pub lhs: f64,
    /// `Ψ(α)` times the closed-form α-moment to the `1/α`.
    pub rhs: f64,
    pub slack: f64,
}

pub fn sqrt_tail_check(pareto: &Pareto, alpha: f64, budget: &QuadratureBudget) -> Result<SqrtTailCheck> {
    let lhs = sqrt_tail_integral(pareto, budget)?;
    let rhs = psi(alpha)? * pareto.moment(alpha)?.powf(1.0 / alpha);
    Ok(SqrtTailCheck {
        shape: pareto.shape(),
        alpha,
        lhs,
        rhs,
        slack: rhs - lhs,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn f_examples() {
        let p = FParams::new(2.0, 1.0).unwrap();
        assert_eq!(f_value(&p, FVariant::HalfMean, 0.7, 0.7).unwrap(), 0.0);
        let a = f_value(&p, FVariant::HalfMean, 1.5, 0.5).unwrap();
        assert!((a - 0.816_496_580_927_726).abs() < 1e-15);
        let b = f_value(&p, FVariant::HalfMean, 2.0, 0.5).unwrap();
        assert!((b - 1.133_893_419_027_681_7).abs() < 1e-15);
        assert!(b > a);
        let plain = f_value(&p, FVariant::Plain, 1.5, 0.5).unwrap();
        assert!((plain - 1.0 / 3f64.sqrt()).abs() < 1e-15);
        assert!(f_value(&p, FVariant::Plain, 0.0, 0.5).is_err());
        assert!(FParams::new(2.5, 1.0).is_err());
        assert!(FParams::new(2.0, 0.0).is_err());
    }

    #[test]
    fn probes_find_no_violations() {
        for (alpha, eta) in [(2.0, 0.1), (1.5, 1.0), (1.01, 1e-3)] {
            let p = FParams::new(alpha, eta).unwrap();
            for v in [FVariant::HalfMean, FVariant::Plain] {
                let r = monotonicity_probe(&p, v, 20_000, 7).unwrap();
                assert_eq!(r.violations, 0, "alpha={alpha} eta={eta} {v:?}");
                assert!(r.min_margin > 0.0);
            }
        }
        let p = FParams::new(1.5, 1.0).unwrap();
        assert!(probe_point(&p, FVariant::HalfMean, 0.4, 0.4, 0.01).unwrap() > 0.0);
        assert_eq!(
            monotonicity_probe(&p, FVariant::Plain, 100, 3).unwrap(),
            monotonicity_probe(&p, FVariant::Plain, 100, 3).unwrap()
        );
    }

    #[test]
    fn approx_examples() {
        let one = approx_check(1.0, 0.75).unwrap();
        assert_eq!((one.lhs, one.rhs, one.holds), (1.0, 1.0, true));
        let q = approx_check(0.25, 0.75).unwrap();
        assert!((q.lhs - 0.325_302_472_761_884_46).abs() < 1e-15);
        assert!((q.rhs - 0.353_553_390_593_273_76).abs() < 1e-15);
        assert!(q.holds);
        let t = approx_check(0.99, 0.76).unwrap();
        assert!((t.lhs - 0.992_484_340_977_230_9).abs() < 1e-14);
        assert!((t.rhs - 0.992_390_842_091_524_7).abs() < 1e-14);
        assert!(!t.holds);
        assert!(approx_check(0.0, 0.75).is_err());
    }

    #[test]
    fn approx_strict_below_one() {
        let grid = approx_grid(0.75, 601).unwrap();
        assert_eq!(grid.len(), 601);
        assert_eq!(grid[0].epsilon, 1e-6);
        for c in &grid[..600] {
            assert!(c.lhs < c.rhs, "{c:?}");
        }
        assert_eq!(grid[600].lhs, grid[600].rhs);
    }

    #[test]
    fn sqrt_tail_dominance() {
        for (a, alpha) in [(5.0, 4.0), (4.0, 3.0), (3.0, 2.5)] {
            let c = sqrt_tail_check(&Pareto::new(a, 1.0).unwrap(), alpha, &QuadratureBudget::default()).unwrap();
            assert!(((c.lhs - (1.0 + 2.0 / (a - 2.0))) / c.lhs).abs() < 1e-8);
            assert!(c.slack > 0.0, "{c:?}");
        }
    }
}
