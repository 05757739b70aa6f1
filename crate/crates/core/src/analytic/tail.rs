//! Loss tails `t -> Pr[L > t]` and moment integrals over them.

use serde::{Deserialize, Serialize};

use super::quadrature::{integrate, integrate_log, QuadratureBudget};
use crate::error::{Error, Result};

/// Behaviour of a tail beyond its last breakpoint.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Asymptote {
    /// `Pr[L > t] = 0` for `t >= support_max`.
    Bounded { support_max: f64 },
    /// `Pr[L > t] = coef * t^(-index)` exactly, past the last breakpoint.
    Power { coef: f64, index: f64 },
}

/// A nonincreasing survival function of a nonnegative loss.
pub trait Tail: Sync {
    fn survival(&self, t: f64) -> f64;

    /// Points where the survival function is not smooth, ascending.
    fn breakpoints(&self) -> Vec<f64>;

    fn asymptote(&self) -> Asymptote;
}

/// A `{0, 1}` loss equal to one with probability `p`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Bernoulli {
    p: f64,
}

impl Bernoulli {
    pub fn new(p: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&p) {
            return Err(Error::domain("p", "probability must lie in [0, 1]"));
        }
        Ok(Self { p })
    }
}

impl Tail for Bernoulli {
    fn survival(&self, t: f64) -> f64 {
        if t < 1.0 {
            self.p
        } else {
            0.0
        }
    }

    fn breakpoints(&self) -> Vec<f64> {
        vec![1.0]
    }

    fn asymptote(&self) -> Asymptote {
        Asymptote::Bounded { support_max: 1.0 }
    }
}

/// Pareto loss with `Pr[L > t] = (scale / t)^shape` for `t >= scale`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Pareto {
    shape: f64,
    scale: f64,
}

impl Pareto {
    pub fn new(shape: f64, scale: f64) -> Result<Self> {
        if !(shape > 0.0) || !shape.is_finite() {
            return Err(Error::domain("shape", "Pareto shape must be positive"));
        }
        if !(scale > 0.0) || !scale.is_finite() {
            return Err(Error::domain("scale", "Pareto scale must be positive"));
        }
        Ok(Self { shape, scale })
    }

    pub fn shape(&self) -> f64 {
        self.shape
    }

    pub fn scale(&self) -> f64 {
        self.scale
    }

    /// `E[L^alpha] = a s^alpha / (a - alpha)`, finite only for `alpha < a`.
    pub fn moment(&self, alpha: f64) -> Result<f64> {
        if !(alpha > 0.0) {
            return Err(Error::domain("alpha", "moment order must be positive"));
        }
        if alpha >= self.shape {
            return Err(Error::domain(
                "alpha",
                format!(
                    "moment of order alpha is infinite (alpha = {alpha} >= shape = {})",
                    self.shape
                ),
            ));
        }
        Ok(self.shape * self.scale.powf(alpha) / (self.shape - alpha))
    }

    pub fn mean(&self) -> Result<f64> {
        self.moment(1.0)
    }
}

impl Tail for Pareto {
    fn survival(&self, t: f64) -> f64 {
        if t < self.scale {
            1.0
        } else {
            (self.scale / t).powf(self.shape)
        }
    }

    fn breakpoints(&self) -> Vec<f64> {
        vec![self.scale]
    }

    fn asymptote(&self) -> Asymptote {
        Asymptote::Power {
            coef: self.scale.powf(self.shape),
            index: self.shape,
        }
    }
}

/// The loss `factor * L` for an inner loss `L`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Scaled<T> {
    inner: T,
    factor: f64,
}

impl<T: Tail> Scaled<T> {
    pub fn new(inner: T, factor: f64) -> Result<Self> {
        if !(factor > 0.0) || !factor.is_finite() {
            return Err(Error::domain("factor", "scale factor must be positive"));
        }
        Ok(Self { inner, factor })
    }
}

impl<T: Tail> Tail for Scaled<T> {
    fn survival(&self, t: f64) -> f64 {
        self.inner.survival(t / self.factor)
    }

    fn breakpoints(&self) -> Vec<f64> {
        self.inner.breakpoints().into_iter().map(|b| b * self.factor).collect()
    }

    fn asymptote(&self) -> Asymptote {
        match self.inner.asymptote() {
            Asymptote::Bounded { support_max } => Asymptote::Bounded {
                support_max: support_max * self.factor,
            },
            Asymptote::Power { coef, index } => Asymptote::Power {
                coef: coef * self.factor.powf(index),
                index,
            },
        }
    }
}

/// Largest analytic remainder left to the closed form.
const REMAINDER: f64 = 1e-10;
/// Segments with `b / a` above this ratio are integrated in `ln t`.
const WIDE: f64 = 16.0;

/// `∫_0^∞ g(t) dt` where, beyond the tail's last breakpoint and for a
/// power asymptote, `g(t) = k t^(-p)` with `p > 1`.
fn integrate_tail<T: Tail + ?Sized>(
    tail: &T,
    g: &dyn Fn(f64) -> f64,
    power: impl Fn(f64, f64) -> (f64, f64),
    what: &str,
    budget: &QuadratureBudget,
) -> Result<f64> {
    let mut breaks = tail.breakpoints();
    breaks.retain(|b| *b > 0.0);
    breaks.sort_by(f64::total_cmp);
    match tail.asymptote() {
        Asymptote::Bounded { support_max } => integrate(g, 0.0, support_max, &breaks, budget),
        Asymptote::Power { coef, index } => {
            let (k, p) = power(coef, index);
            if !(p > 1.0) {
                return Err(Error::Divergent(format!(
                    "{what} diverges: tail decays like t^-{index}"
                )));
            }
            let start = breaks.last().copied().unwrap_or(1.0);
            // k T^(1-p) / (p - 1) <= REMAINDER
            let t_end = start.max((REMAINDER * (p - 1.0) / k).powf(1.0 / (1.0 - p)));
            let head = integrate(g, 0.0, start, &breaks, budget)?;
            let body = if t_end / start > WIDE {
                integrate_log(g, start, t_end, budget)?
            } else {
                integrate(g, start, t_end, &[], budget)?
            };
            let remainder = k * t_end.powf(1.0 - p) / (p - 1.0);
            Ok(head + body + remainder)
        }
    }
}

/// `E[L^alpha] = ∫_0^∞ alpha t^(alpha-1) Pr[L > t] dt` by adaptive
/// quadrature, with the closed-form power-tail remainder added back.
pub fn tail_integral_moment<T: Tail + ?Sized>(tail: &T, alpha: f64, budget: &QuadratureBudget) -> Result<f64> {
    if !(alpha >= 1.0) || !alpha.is_finite() {
        return Err(Error::domain("alpha", "moment order must be at least 1"));
    }
    let g = |t: f64| alpha * t.powf(alpha - 1.0) * tail.survival(t);
    integrate_tail(
        tail,
        &g,
        |coef, index| (alpha * coef, index - alpha + 1.0),
        "moment integral",
        budget,
    )
}

/// `∫_0^∞ sqrt(Pr[L > t]) dt`.
pub fn sqrt_tail_integral<T: Tail + ?Sized>(tail: &T, budget: &QuadratureBudget) -> Result<f64> {
    let g = |t: f64| tail.survival(t).sqrt();
    integrate_tail(tail, &g, |coef, index| (coef.sqrt(), index / 2.0), "square-root tail integral", budget)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn q() -> QuadratureBudget {
        QuadratureBudget::default()
    }

    fn rel(a: f64, b: f64) -> f64 {
        ((a - b) / b).abs()
    }

    #[test]
    fn bernoulli_mean() {
        let v = tail_integral_moment(&Bernoulli::new(0.3).unwrap(), 1.0, &q()).unwrap();
        assert!(rel(v, 0.3) < 1e-12);
        let v = tail_integral_moment(&Bernoulli::new(0.3).unwrap(), 1.7, &q()).unwrap();
        assert!(rel(v, 0.3) < 1e-8);
    }

    #[test]
    fn pareto_moments_match_closed_form() {
        let p = Pareto::new(3.0, 1.0).unwrap();
        assert!(rel(tail_integral_moment(&p, 1.0, &q()).unwrap(), 1.5) < 1e-8);
        assert!(rel(tail_integral_moment(&p, 2.0, &q()).unwrap(), 3.0) < 1e-8);
        for &(a, s, alpha) in &[(2.5, 1.0, 2.0), (2.5, 0.3, 2.25), (5.0, 2.0, 4.0), (1.2, 1.0, 1.0)] {
            let p = Pareto::new(a, s).unwrap();
            let exact = p.moment(alpha).unwrap();
            let got = tail_integral_moment(&p, alpha, &q()).unwrap();
            assert!(rel(got, exact) < 1e-8, "a={a} s={s} alpha={alpha}: {got} vs {exact}");
        }
    }

    #[test]
    fn scaled_tail_scales_moments() {
        let s = Scaled::new(Pareto::new(4.0, 1.0).unwrap(), 3.0).unwrap();
        let got = tail_integral_moment(&s, 2.0, &q()).unwrap();
        assert!(rel(got, 9.0 * 2.0) < 1e-8);
        let b = Scaled::new(Bernoulli::new(0.25).unwrap(), 2.0).unwrap();
        assert!(rel(tail_integral_moment(&b, 1.0, &q()).unwrap(), 0.5) < 1e-10);
    }

    #[test]
    fn divergence_is_detected() {
        let p = Pareto::new(2.0, 1.0).unwrap();
        assert!(matches!(tail_integral_moment(&p, 2.0, &q()), Err(Error::Divergent(_))));
        assert!(matches!(sqrt_tail_integral(&p, &q()), Err(Error::Divergent(_))));
        assert!(p.moment(2.0).unwrap_err().to_string().contains("moment of order alpha is infinite"));
    }

    #[test]
    fn sqrt_tail_of_pareto() {
        for a in [3.0, 4.0, 5.0] {
            let got = sqrt_tail_integral(&Pareto::new(a, 1.0).unwrap(), &q()).unwrap();
            assert!(rel(got, 1.0 + 2.0 / (a - 2.0)) < 1e-8);
        }
    }
}
