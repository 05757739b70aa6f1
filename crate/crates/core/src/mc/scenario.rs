//! Sampling models whose true risks and moments are known in closed form.

use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::analytic::Pareto;
use crate::capacity::{growth_function, shatter_count, threshold_class, EnumerationBudget, HypothesisTable, LossTable};
use crate::error::{Error, Result};
use crate::numeric::compensated_sum;

/// Serialized form of a [`Scenario`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ScenarioSpec {
    /// Finite domain with point probabilities and a 0/1 loss per
    /// (hypothesis, point).
    BinaryClassification {
        probabilities: Vec<f64>,
        losses: Vec<Vec<u8>>,
        /// When present, checked against the risks recomputed from the table.
        #[serde(default, skip_serializing_if = "Option::is_none")]
        true_risks: Option<Vec<f64>>,
    },
    /// `points` equally likely points, labels `y(x) = 1[x >= points/2]` and
    /// hypotheses `h_t(x) = 1[x >= t]` for `t = 0..points`.
    ThresholdLine { points: usize },
    /// `L(h, z) = factors[h] * Z` with `Z ~ Pareto(shape, scale)`.
    UnboundedLoss { shape: f64, scale: f64, factors: Vec<f64> },
    /// `L(h, z) = weights[h] * Z`: a loss reweighted by fixed importance
    /// weights, with `Z ~ Pareto(shape, scale)`.
    ImportanceWeighted { shape: f64, scale: f64, weights: Vec<f64> },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScenarioKind {
    BinaryClassification,
    UnboundedLoss,
}

#[derive(Debug, Clone)]
struct BinaryModel {
    index: WeightedIndex<f64>,
    n: usize,
    /// Distinct loss rows.
    table: HypothesisTable,
    errs: Vec<Vec<bool>>,
    risks: Vec<f64>,
}

#[derive(Debug, Clone)]
struct ParetoModel {
    pareto: Pareto,
    dist: rand_distr::Pareto<f64>,
    factors: Vec<f64>,
    means: Vec<f64>,
}

#[derive(Debug, Clone)]
enum Model {
    Binary(BinaryModel),
    Pareto(ParetoModel),
}

/// Per-hypothesis empirical averages for one sample.
#[derive(Debug, Clone, PartialEq)]
pub struct Empirical {
    /// `R̂(h)` or `L̂(h)`.
    pub risks: Vec<f64>,
    /// `L̂_α(h)`; for 0/1 losses equal to `risks`.
    pub moments: Vec<f64>,
}

/// An immutable sampling scenario, validated on construction.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(try_from = "ScenarioSpec", into = "ScenarioSpec")]
pub struct Scenario {
    spec: ScenarioSpec,
    model: Model,
}

impl PartialEq for Scenario {
    fn eq(&self, other: &Self) -> bool {
        self.spec == other.spec
    }
}

impl From<Scenario> for ScenarioSpec {
    fn from(s: Scenario) -> Self {
        s.spec
    }
}

impl TryFrom<ScenarioSpec> for Scenario {
    type Error = Error;

    fn try_from(spec: ScenarioSpec) -> Result<Self> {
        let model = match &spec {
            ScenarioSpec::BinaryClassification {
                probabilities,
                losses,
                true_risks,
            } => Model::Binary(binary_model(probabilities, losses, true_risks.as_deref())?),
            ScenarioSpec::ThresholdLine { points } => {
                let (probs, losses) = threshold_line(*points)?;
                Model::Binary(binary_model(&probs, &losses, None)?)
            }
            ScenarioSpec::UnboundedLoss { shape, scale, factors } => Model::Pareto(pareto_model(*shape, *scale, factors)?),
            ScenarioSpec::ImportanceWeighted { shape, scale, weights } => {
                Model::Pareto(pareto_model(*shape, *scale, weights)?)
            }
        };
        Ok(Self { spec, model })
    }
}

fn threshold_line(points: usize) -> Result<(Vec<f64>, Vec<Vec<u8>>)> {
    if points < 2 {
        return Err(Error::validation("points", "need at least 2 points"));
    }
    let half = points / 2;
    let probs = vec![1.0 / points as f64; points];
    let losses = (0..points)
        .map(|t| (0..points).map(|x| u8::from((x >= t) != (x >= half))).collect())
        .collect();
    Ok((probs, losses))
}

fn binary_model(probs: &[f64], losses: &[Vec<u8>], claimed: Option<&[f64]>) -> Result<BinaryModel> {
    let n = probs.len();
    if n == 0 {
        return Err(Error::validation("probabilities", "need at least one point"));
    }
    if let Some(p) = probs.iter().find(|p| !(p.is_finite() && **p >= 0.0)) {
        return Err(Error::validation("probabilities", format!("invalid probability {p}")));
    }
    let total = compensated_sum(probs.iter().copied());
    if (total - 1.0).abs() > 1e-12 {
        return Err(Error::validation("probabilities", format!("sum to {total}, not 1")));
    }
    if losses.is_empty() {
        return Err(Error::validation("losses", "need at least one hypothesis"));
    }
    let mut rows = Vec::with_capacity(losses.len());
    let mut risks = Vec::with_capacity(losses.len());
    for (h, row) in losses.iter().enumerate() {
        if row.len() != n {
            return Err(Error::validation(
                format!("losses[{h}]"),
                format!("expected {n} entries, got {}", row.len()),
            ));
        }
        if row.iter().any(|&v| v > 1) {
            return Err(Error::validation(format!("losses[{h}]"), "entries must be 0 or 1"));
        }
        let bits: Vec<bool> = row.iter().map(|&v| v == 1).collect();
        risks.push(compensated_sum(bits.iter().zip(probs).filter(|(b, _)| **b).map(|(_, p)| *p)));
        rows.push(bits);
    }
    if let Some(claimed) = claimed {
        if claimed.len() != risks.len() {
            return Err(Error::validation("true_risks", "one risk per hypothesis required"));
        }
        for (h, (c, r)) in claimed.iter().zip(&risks).enumerate() {
            if (c - r).abs() > 1e-12 {
                return Err(Error::validation(
                    format!("true_risks[{h}]"),
                    format!("given {c}, recomputed {r}"),
                ));
            }
        }
    }
    let table = HypothesisTable::new(n, &rows)?;
    let errs: Vec<Vec<bool>> = (0..table.len()).map(|h| table.row(h)).collect();
    let risks = errs
        .iter()
        .map(|row| compensated_sum(row.iter().zip(probs).filter(|(b, _)| **b).map(|(_, p)| *p)))
        .collect();
    let index = WeightedIndex::new(probs).map_err(|e| Error::validation("probabilities", e.to_string()))?;
    Ok(BinaryModel {
        index,
        n,
        table,
        errs,
        risks,
    })
}

fn pareto_model(shape: f64, scale: f64, factors: &[f64]) -> Result<ParetoModel> {
    let pareto = Pareto::new(shape, scale)?;
    if shape <= 1.0 {
        return Err(Error::domain("shape", "Pareto shape must exceed 1 for a finite mean"));
    }
    if factors.is_empty() {
        return Err(Error::validation("factors", "need at least one hypothesis"));
    }
    if let Some(c) = factors.iter().find(|c| !(c.is_finite() && **c > 0.0)) {
        return Err(Error::validation("factors", format!("factors must be positive, got {c}")));
    }
    let mean = pareto.mean()?;
    let dist = rand_distr::Pareto::new(scale, shape).map_err(|e| Error::domain("shape", e.to_string()))?;
    Ok(ParetoModel {
        pareto,
        dist,
        factors: factors.to_vec(),
        means: factors.iter().map(|c| c * mean).collect(),
    })
}

impl Scenario {
    pub fn new(spec: ScenarioSpec) -> Result<Self> {
        Self::try_from(spec)
    }

    /// The standard binary scenario on `points` uniform points.
    pub fn threshold_line(points: usize) -> Result<Self> {
        Self::new(ScenarioSpec::ThresholdLine { points })
    }

    pub fn pareto(shape: f64, scale: f64, factors: Vec<f64>) -> Result<Self> {
        Self::new(ScenarioSpec::UnboundedLoss { shape, scale, factors })
    }

    /// A Pareto loss reweighted per hypothesis by importance `weights`.
    pub fn importance_weighted(shape: f64, scale: f64, weights: Vec<f64>) -> Result<Self> {
        Self::new(ScenarioSpec::ImportanceWeighted { shape, scale, weights })
    }

    pub fn spec(&self) -> &ScenarioSpec {
        &self.spec
    }

    pub fn kind(&self) -> ScenarioKind {
        match self.model {
            Model::Binary(_) => ScenarioKind::BinaryClassification,
            Model::Pareto(_) => ScenarioKind::UnboundedLoss,
        }
    }

    /// Number of hypotheses (distinct loss rows for binary scenarios).
    pub fn hypotheses(&self) -> usize {
        match &self.model {
            Model::Binary(b) => b.errs.len(),
            Model::Pareto(p) => p.factors.len(),
        }
    }

    /// `R(h)` or `L(h)`.
    pub fn true_risks(&self) -> &[f64] {
        match &self.model {
            Model::Binary(b) => &b.risks,
            Model::Pareto(p) => &p.means,
        }
    }

    /// `L_α(h)`; errors when the Pareto moment of order `alpha` is infinite.
    pub fn true_moments(&self, alpha: f64) -> Result<Vec<f64>> {
        match &self.model {
            Model::Binary(b) => Ok(b.risks.clone()),
            Model::Pareto(p) => {
                let base = p.pareto.moment(alpha)?;
                Ok(p.factors.iter().map(|c| c.powf(alpha) * base).collect())
            }
        }
    }

    /// The Pareto variable behind an unbounded scenario.
    pub fn pareto_variable(&self) -> Option<Pareto> {
        match &self.model {
            Model::Pareto(p) => Some(p.pareto),
            Model::Binary(_) => None,
        }
    }

    /// Draws a sample of size `m` and returns its empirical averages;
    /// `alpha` is the order of the empirical moment.
    pub fn draw<R: Rng + ?Sized>(&self, m: usize, alpha: f64, rng: &mut R) -> Empirical {
        match &self.model {
            Model::Binary(b) => {
                let mut counts = vec![0u32; b.n];
                for _ in 0..m {
                    counts[b.index.sample(rng)] += 1;
                }
                binary_empirical(b, &counts, m)
            }
            Model::Pareto(p) => {
                let (mut sum, mut sum_alpha) = (0.0, 0.0);
                for _ in 0..m {
                    let z: f64 = p.dist.sample(rng);
                    sum += z;
                    sum_alpha += z.powf(alpha);
                }
                let (mean, mean_alpha) = (sum / m as f64, sum_alpha / m as f64);
                Empirical {
                    risks: p.factors.iter().map(|c| c * mean).collect(),
                    moments: p.factors.iter().map(|c| c.powf(alpha) * mean_alpha).collect(),
                }
            }
        }
    }

    /// Empirical averages of a binary scenario on the given domain points.
    pub fn empirical_from_points(&self, points: &[usize]) -> Result<Empirical> {
        let Model::Binary(b) = &self.model else {
            return Err(Error::validation("scenario", "explicit samples need a finite domain"));
        };
        if points.is_empty() {
            return Err(Error::domain("sample", "sample must be nonempty"));
        }
        let mut counts = vec![0u32; b.n];
        for &x in points {
            *counts
                .get_mut(x)
                .ok_or_else(|| Error::domain("sample", format!("point {x} outside the domain")))? += 1;
        }
        Ok(binary_empirical(b, &counts, points.len()))
    }

    /// Domain size and point probabilities of a binary scenario.
    pub(crate) fn finite_domain(&self) -> Option<Vec<f64>> {
        match &self.spec {
            ScenarioSpec::BinaryClassification { probabilities, .. } => Some(probabilities.clone()),
            ScenarioSpec::ThresholdLine { points } => Some(vec![1.0 / *points as f64; *points]),
            _ => None,
        }
    }

    /// Shatter value used in the right-hand sides for samples of size `m`.
    ///
    /// Binary: `Π_{2m}` of the loss class (an upper bound on the expected
    /// shatter count), or the number of distinct loss rows when the domain
    /// is too large to enumerate. Unbounded: the shatter count of the
    /// threshold class on one draw of `2m` points, capped by `2m + 1`, the
    /// growth of a scale family of one variable.
    pub fn capacity<R: Rng + ?Sized>(&self, m: usize, rng: &mut R) -> Result<f64> {
        match &self.model {
            Model::Binary(b) => match growth_function(&b.table, 2 * m, &EnumerationBudget::default()) {
                Ok(g) => Ok(g as f64),
                Err(Error::Budget(_)) => Ok(b.table.len() as f64),
                Err(e) => Err(e),
            },
            Model::Pareto(p) => {
                let z: Vec<f64> = (0..2 * m).map(|_| p.dist.sample(rng)).collect();
                let rows: Vec<Vec<f64>> = p.factors.iter().map(|c| z.iter().map(|v| c * v).collect()).collect();
                let mut levels: Vec<f64> = rows.iter().flatten().copied().collect();
                levels.push(-1.0);
                levels.sort_by(f64::total_cmp);
                levels.dedup();
                let q = threshold_class(&LossTable::new(rows)?, &levels)?;
                let all: Vec<usize> = (0..2 * m).collect();
                let exact = shatter_count(&q, &all)?;
                Ok(exact.min(2 * m as u64 + 1) as f64)
            }
        }
    }
}

fn binary_empirical(b: &BinaryModel, counts: &[u32], m: usize) -> Empirical {
    let risks: Vec<f64> = b
        .errs
        .iter()
        .map(|row| {
            let k: u32 = row.iter().zip(counts).filter(|(e, _)| **e).map(|(_, c)| c).sum();
            k as f64 / m as f64
        })
        .collect();
    Empirical {
        moments: risks.clone(),
        risks,
    }
}

/// Sample mean of `Z^alpha` and its standard error over `draws` values.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MomentEstimate {
    pub mean: f64,
    pub std_error: f64,
    pub analytic: f64,
}

pub fn estimate_moment<R: Rng + ?Sized>(pareto: &Pareto, alpha: f64, draws: usize, rng: &mut R) -> Result<MomentEstimate> {
    let analytic = pareto.moment(alpha)?;
    if draws < 2 {
        return Err(Error::domain("draws", "need at least two draws"));
    }
    let dist = rand_distr::Pareto::new(pareto.scale(), pareto.shape()).map_err(|e| Error::domain("shape", e.to_string()))?;
    // Welford
    let (mut mean, mut m2) = (0.0, 0.0);
    for i in 0..draws {
        let x = dist.sample(rng).powf(alpha);
        let d = x - mean;
        mean += d / (i + 1) as f64;
        m2 += d * (x - mean);
    }
    let var = m2 / (draws - 1) as f64;
    Ok(MomentEstimate {
        mean,
        std_error: (var / draws as f64).sqrt(),
        analytic,
    })
}

#[cfg(test)]
mod tests {
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    use super::*;

    #[test]
    fn threshold_line_risks() {
        let s = Scenario::threshold_line(16).unwrap();
        assert_eq!(s.hypotheses(), 16);
        let mut risks = s.true_risks().to_vec();
        risks.sort_by(f64::total_cmp);
        let mut expected: Vec<f64> = (0..16).map(|t: i32| (t - 8).abs() as f64 / 16.0).collect();
        expected.sort_by(f64::total_cmp);
        assert_eq!(risks, expected);
        assert_eq!(s.kind(), ScenarioKind::BinaryClassification);
    }

    #[test]
    fn binary_validation() {
        let bad_sum = ScenarioSpec::BinaryClassification {
            probabilities: vec![0.5, 0.4],
            losses: vec![vec![1, 0]],
            true_risks: None,
        };
        assert!(matches!(Scenario::new(bad_sum), Err(Error::Validation { .. })));
        let wrong_risk = ScenarioSpec::BinaryClassification {
            probabilities: vec![0.5, 0.5],
            losses: vec![vec![1, 0]],
            true_risks: Some(vec![0.4]),
        };
        assert!(Scenario::new(wrong_risk).is_err());
        let ok = ScenarioSpec::BinaryClassification {
            probabilities: vec![0.5, 0.5],
            losses: vec![vec![1, 0]],
            true_risks: Some(vec![0.5]),
        };
        let s = Scenario::new(ok).unwrap();
        assert_eq!(s.empirical_from_points(&[1, 1]).unwrap().risks, vec![0.0]);
        assert_eq!(s.empirical_from_points(&[0, 1]).unwrap().risks, vec![0.5]);
    }

    #[test]
    fn pareto_moments() {
        let s = Scenario::pareto(2.5, 1.0, vec![1.0, 2.0]).unwrap();
        assert_eq!(s.true_risks(), &[5.0 / 3.0, 10.0 / 3.0]);
        let m = s.true_moments(2.0).unwrap();
        assert!((m[0] - 5.0).abs() < 1e-12 && (m[1] - 20.0).abs() < 1e-12);
        let err = s.true_moments(2.5).unwrap_err();
        assert_eq!(err.kind(), "domain");
        assert!(err.to_string().contains("moment of order alpha is infinite"));
        assert!(Scenario::pareto(1.0, 1.0, vec![1.0]).is_err());
        assert!(Scenario::pareto(3.0, 1.0, vec![]).is_err());
    }

    #[test]
    fn spec_round_trip() {
        for s in [
            Scenario::threshold_line(16).unwrap(),
            Scenario::pareto(2.5, 1.0, vec![0.5, 1.0]).unwrap(),
            Scenario::importance_weighted(3.0, 0.5, vec![1.0, 4.0]).unwrap(),
        ] {
            let text = serde_json::to_string(&s).unwrap();
            let back: Scenario = serde_json::from_str(&text).unwrap();
            assert_eq!(back, s);
        }
        assert!(serde_json::from_str::<Scenario>(r#"{"kind":"threshold_line","points":16,"extra":1}"#).is_err());
        assert!(serde_json::from_str::<Scenario>(r#"{"kind":"threshold_line","points":1}"#).is_err());
    }

    #[test]
    fn capacities() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let s = Scenario::threshold_line(16).unwrap();
        assert_eq!(s.capacity(100, &mut rng).unwrap(), 16.0);
        let p = Scenario::pareto(2.5, 1.0, vec![1.0, 2.0, 3.0]).unwrap();
        assert_eq!(p.capacity(50, &mut rng).unwrap(), 101.0);
    }

    #[test]
    fn draws_are_averages() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let s = Scenario::threshold_line(16).unwrap();
        let e = s.draw(64, 2.0, &mut rng);
        for r in &e.risks {
            assert_eq!((r * 64.0).fract(), 0.0);
        }
        let p = Scenario::pareto(3.0, 2.0, vec![1.0, 3.0]).unwrap();
        let e = p.draw(10, 2.0, &mut rng);
        assert!((e.risks[1] - 3.0 * e.risks[0]).abs() < 1e-12);
        assert!(e.risks[0] >= 2.0);
        assert!((e.moments[1] - 9.0 * e.moments[0]).abs() < 1e-9 * e.moments[1]);
    }
}
