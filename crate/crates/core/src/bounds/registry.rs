use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::*;

/// Stable identifiers for every evaluator.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum BoundId {
    #[serde(rename = "thm3")]
    Thm3,
    #[serde(rename = "cor4")]
    Cor4,
    #[serde(rename = "cor5")]
    Cor5,
    #[serde(rename = "thm5")]
    Thm5,
    #[serde(rename = "cor6")]
    Cor6,
    #[serde(rename = "cor7")]
    Cor7,
    #[serde(rename = "gamma")]
    Gamma,
    #[serde(rename = "cor9")]
    Cor9,
    #[serde(rename = "cor10")]
    Cor10,
    #[serde(rename = "kappa")]
    Kappa,
    #[serde(rename = "cor11")]
    Cor11,
    #[serde(rename = "cor11-kappa")]
    Cor11Kappa,
    #[serde(rename = "psi")]
    Psi,
    #[serde(rename = "lambda")]
    Lambda,
    #[serde(rename = "cor15")]
    Cor15,
    #[serde(rename = "cor16")]
    Cor16,
    #[serde(rename = "sauer")]
    Sauer,
}

impl BoundId {
    pub const ALL: [BoundId; 17] = [
        BoundId::Thm3,
        BoundId::Cor4,
        BoundId::Cor5,
        BoundId::Thm5,
        BoundId::Cor6,
        BoundId::Cor7,
        BoundId::Gamma,
        BoundId::Cor9,
        BoundId::Cor10,
        BoundId::Kappa,
        BoundId::Cor11,
        BoundId::Cor11Kappa,
        BoundId::Psi,
        BoundId::Lambda,
        BoundId::Cor15,
        BoundId::Cor16,
        BoundId::Sauer,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            BoundId::Thm3 => "thm3",
            BoundId::Cor4 => "cor4",
            BoundId::Cor5 => "cor5",
            BoundId::Thm5 => "thm5",
            BoundId::Cor6 => "cor6",
            BoundId::Cor7 => "cor7",
            BoundId::Gamma => "gamma",
            BoundId::Cor9 => "cor9",
            BoundId::Cor10 => "cor10",
            BoundId::Kappa => "kappa",
            BoundId::Cor11 => "cor11",
            BoundId::Cor11Kappa => "cor11-kappa",
            BoundId::Psi => "psi",
            BoundId::Lambda => "lambda",
            BoundId::Cor15 => "cor15",
            BoundId::Cor16 => "cor16",
            BoundId::Sauer => "sauer",
        }
    }

    /// One-line description for `--help` listings.
    pub fn describe(self) -> &'static str {
        match self {
            BoundId::Thm3 => "relative deviation probability, 1 < alpha <= 2",
            BoundId::Cor4 => "relative deviation radius coefficient",
            BoundId::Cor5 => "solved alpha = 2 bound: rate + 2 sqrt(rate u) + 4u",
            BoundId::Thm5 => "interpolated (R - R^) / (R + R^ + nu) probability",
            BoundId::Cor6 => "fast-rate probability with slack factor v",
            BoundId::Cor7 => "realizable fast-rate probability",
            BoundId::Gamma => "Gamma(alpha, epsilon, tau) threshold constant",
            BoundId::Cor9 => "unbounded-loss probability at threshold Gamma * epsilon",
            BoundId::Cor10 => "alpha = 2 unbounded-loss probability at threshold Gamma(2, epsilon) * epsilon",
            BoundId::Kappa => "kappa_tau constant",
            BoundId::Cor11 => "alpha = 2 unbounded-loss additive deviation (coefficient 3/4)",
            BoundId::Cor11Kappa => "alpha = 2 unbounded-loss additive deviation (coefficient 3/2, ln(4/delta))",
            BoundId::Psi => "Psi(alpha) constant, alpha > 2",
            BoundId::Lambda => "Lambda(alpha, tau) constant, alpha > 2",
            BoundId::Cor15 => "alpha > 2 unbounded-loss probability at threshold Lambda * epsilon",
            BoundId::Cor16 => "alpha > 2 additive deviation with pseudo-dimension",
            BoundId::Sauer => "Sauer growth bound (e n / d)^d",
        }
    }
}

impl fmt::Display for BoundId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for BoundId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        BoundId::ALL
            .iter()
            .copied()
            .find(|id| id.as_str() == s)
            .ok_or_else(|| Error::validation("id", format!("unknown bound identifier '{s}'")))
    }
}

/// Inputs for [`evaluate`]. Fields an evaluator does not read are ignored;
/// missing fields it needs are validation errors.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BoundRequest {
    #[serde(default)]
    pub params: BoundParams,
    #[serde(default)]
    pub capacity: Option<CapacityDescriptor>,
    /// Observed error rate for the solved bound.
    #[serde(default)]
    pub rate: Option<f64>,
    /// `L₂(h)` or `L_α(h)` for the additive unbounded-loss deviations.
    #[serde(default)]
    pub moment: Option<f64>,
    /// VC- or pseudo-dimension for `cor16` and `sauer`.
    #[serde(default)]
    pub dimension: Option<u64>,
    /// Sample count for `sauer`; defaults to `2m`.
    #[serde(default)]
    pub n: Option<u64>,
    #[serde(default = "default_side")]
    pub side: DeviationSide,
    #[serde(default)]
    pub direction: Direction,
}

fn default_side() -> DeviationSide {
    DeviationSide::TrueMinusEmp
}

impl Default for BoundRequest {
    fn default() -> Self {
        Self {
            params: BoundParams::default(),
            capacity: None,
            rate: None,
            moment: None,
            dimension: None,
            n: None,
            side: default_side(),
            direction: Direction::default(),
        }
    }
}

impl BoundRequest {
    fn capacity(&self, id: BoundId) -> Result<CapacityDescriptor> {
        self.capacity
            .ok_or_else(|| Error::validation("capacity", format!("required by {id}")))
    }

    fn moment(&self, id: BoundId) -> Result<f64> {
        self.moment
            .ok_or_else(|| Error::validation("moment", format!("required by {id}")))
    }

    fn dimension(&self, id: BoundId) -> Result<u64> {
        self.dimension
            .ok_or_else(|| Error::validation("dimension", format!("required by {id}")))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum BoundValue {
    /// A tail probability, clipped to `[0, 1]`.
    Probability {
        rhs: f64,
        vacuous: bool,
        /// Deviation level the probability refers to, when it differs from `ε`.
        #[serde(default, skip_serializing_if = "Option::is_none")]
        threshold: Option<f64>,
    },
    /// An additive or multiplicative deviation term.
    Deviation { value: f64 },
    Constant { value: f64 },
}

impl BoundValue {
    /// The headline number: `rhs` for probabilities, `value` otherwise.
    pub fn primary(&self) -> f64 {
        match *self {
            BoundValue::Probability { rhs, .. } => rhs,
            BoundValue::Deviation { value } | BoundValue::Constant { value } => value,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundOutput {
    pub id: BoundId,
    #[serde(flatten)]
    pub value: BoundValue,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub warnings: Vec<Warning>,
}

fn probability(id: BoundId, bound: ProbabilityBound, threshold: Option<f64>) -> BoundOutput {
    BoundOutput {
        id,
        value: BoundValue::Probability {
            rhs: bound.rhs,
            vacuous: bound.vacuous,
            threshold,
        },
        warnings: bound.warnings,
    }
}

fn scalar(id: BoundId, value: BoundValue) -> BoundOutput {
    BoundOutput {
        id,
        value,
        warnings: Vec::new(),
    }
}

/// Evaluates the bound named by `id`.
pub fn evaluate(id: BoundId, req: &BoundRequest) -> Result<BoundOutput> {
    let p = &req.params;
    match id {
        BoundId::Thm3 => Ok(probability(id, relative_deviation_rhs(p, &req.capacity(id)?)?, None)),
        BoundId::Cor4 => {
            let value = relative_deviation_radius(p, &req.capacity(id)?, req.side)?;
            Ok(scalar(id, BoundValue::Deviation { value }))
        }
        BoundId::Cor5 => {
            let rate = req
                .rate
                .ok_or_else(|| Error::validation("rate", "required by cor5"))?;
            let value = solved_bound(rate, p, &req.capacity(id)?, req.direction)?;
            Ok(scalar(id, BoundValue::Deviation { value }))
        }
        BoundId::Thm5 => Ok(probability(id, interpolated_rhs(p, &req.capacity(id)?)?, None)),
        BoundId::Cor6 => Ok(probability(id, fast_rate_rhs(p, &req.capacity(id)?, false)?, None)),
        BoundId::Cor7 => Ok(probability(id, fast_rate_rhs(p, &req.capacity(id)?, true)?, None)),
        BoundId::Gamma => {
            let value = gamma(p.alpha, p.epsilon, p.tau)?;
            Ok(BoundOutput {
                id,
                value: BoundValue::Constant { value },
                warnings: gamma_warnings(p.alpha, p.epsilon, p.tau),
            })
        }
        BoundId::Cor9 | BoundId::Cor10 => {
            let p = if id == BoundId::Cor10 {
                BoundParams { alpha: 2.0, ..*p }
            } else {
                *p
            };
            let g = gamma(p.alpha, p.epsilon, p.tau)?;
            let mut out = probability(id, relative_deviation_rhs(&p, &req.capacity(id)?)?, Some(g * p.epsilon));
            out.warnings.extend(gamma_warnings(p.alpha, p.epsilon, p.tau));
            Ok(out)
        }
        BoundId::Kappa => Ok(scalar(id, BoundValue::Constant { value: kappa(p.tau)? })),
        BoundId::Cor11 | BoundId::Cor11Kappa => {
            let f = if id == BoundId::Cor11 {
                unbounded_bound_alpha2
            } else {
                unbounded_bound_alpha2_kappa
            };
            let value = f(req.moment(id)?, &req.capacity(id)?, p.delta, p.m, req.direction)?;
            Ok(scalar(id, BoundValue::Deviation { value }))
        }
        BoundId::Psi => Ok(scalar(id, BoundValue::Constant { value: psi(p.alpha)? })),
        BoundId::Lambda => Ok(BoundOutput {
            id,
            value: BoundValue::Constant {
                value: lambda_const(p.alpha, p.tau)?,
            },
            warnings: lambda_warnings(p.epsilon, p.tau),
        }),
        BoundId::Cor15 => {
            let lambda = lambda_const(p.alpha, p.tau)?;
            let two = BoundParams { alpha: 2.0, ..*p };
            let mut out = probability(id, relative_deviation_rhs(&two, &req.capacity(id)?)?, Some(lambda * p.epsilon));
            out.warnings.extend(lambda_warnings(p.epsilon, p.tau));
            Ok(out)
        }
        BoundId::Cor16 => {
            let value =
                unbounded_bound_large_alpha(req.moment(id)?, p.alpha, req.dimension(id)?, p.m, p.delta, req.direction)?;
            Ok(scalar(id, BoundValue::Deviation { value }))
        }
        BoundId::Sauer => {
            let d = req.dimension(id)?;
            let n = req.n.unwrap_or(2 * p.m);
            Ok(scalar(id, BoundValue::Constant { value: sauer_growth_upper(d, n)? }))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn req() -> BoundRequest {
        BoundRequest {
            capacity: Some(CapacityDescriptor::expected_shatter(8.0).unwrap()),
            moment: Some(1.0),
            dimension: Some(3),
            rate: Some(0.1),
            params: BoundParams {
                alpha: 1.5,
                tau: 1e-4,
                ..BoundParams::default()
            },
            ..BoundRequest::default()
        }
    }

    #[test]
    fn ids_round_trip_through_strings() {
        for id in BoundId::ALL {
            assert_eq!(id.as_str().parse::<BoundId>().unwrap(), id);
            let json = serde_json::to_string(&id).unwrap();
            assert_eq!(json, format!("\"{}\"", id.as_str()));
        }
        assert!(matches!("thm99".parse::<BoundId>(), Err(Error::Validation { .. })));
    }

    #[test]
    fn every_id_evaluates_with_a_full_request() {
        for id in BoundId::ALL {
            let mut r = req();
            if matches!(id, BoundId::Psi | BoundId::Lambda | BoundId::Cor15 | BoundId::Cor16) {
                r.params.alpha = 4.0;
            }
            let out = evaluate(id, &r).unwrap_or_else(|e| panic!("{id}: {e}"));
            assert!(out.value.primary().is_finite(), "{id}");
        }
    }

    #[test]
    fn cor7_matches_direct_call() {
        let r = BoundRequest {
            params: BoundParams {
                epsilon: 0.1,
                m: 1000,
                ..BoundParams::default()
            },
            capacity: Some(CapacityDescriptor::expected_shatter(8.0).unwrap()),
            ..BoundRequest::default()
        };
        let out = evaluate(BoundId::Cor7, &r).unwrap();
        match out.value {
            BoundValue::Probability { rhs, vacuous, .. } => {
                assert!((rhs - 4.444_142_036_788_486_6e-10).abs() < 1e-20);
                assert!(!vacuous);
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn missing_inputs_are_validation_errors() {
        let r = BoundRequest::default();
        for id in [BoundId::Thm3, BoundId::Cor5, BoundId::Cor11, BoundId::Cor16, BoundId::Sauer] {
            assert!(matches!(evaluate(id, &r), Err(Error::Validation { .. })), "{id}");
        }
    }

    #[test]
    fn psi_below_two_is_domain_error() {
        let r = BoundRequest::default();
        let err = evaluate(BoundId::Psi, &r).unwrap_err();
        assert_eq!(err.kind(), "domain");
        assert!(err.to_string().contains("alpha must exceed 2"));
    }

    #[test]
    fn cor10_forces_alpha_two() {
        let out = evaluate(BoundId::Cor10, &req()).unwrap();
        match out.value {
            BoundValue::Probability { threshold, .. } => {
                let g = gamma_alpha2(0.1, 1e-4).unwrap();
                assert!((threshold.unwrap() - 0.1 * g).abs() < 1e-15);
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn request_json_round_trip() {
        let r = req();
        let text = serde_json::to_string(&r).unwrap();
        let back: BoundRequest = serde_json::from_str(&text).unwrap();
        assert_eq!(back, r);
        let bad = text.replacen('{', "{\"bogus\":1,", 1);
        assert!(serde_json::from_str::<BoundRequest>(&bad).is_err());
    }
}
