//! Exact binomial probabilities and grid certificates for the two
//! "binomial exceeds / falls below its mean with probability > 1/4" lemmas.
//!
//! Point probabilities use Loader's saddle-point form of the log-pmf
//! (Stirling-series remainders plus a stable `bd0` deviance term), with one
//! exponentiation per term. Tail sums add terms smallest-first with
//! Neumaier compensation.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numeric::sum_ascending;

const LN_2PI: f64 = 1.837_877_066_409_345_5;

/// Relative tolerance under which `m * p` is treated as an integer mean.
const INTEGER_MEAN_TOL: f64 = 1e-9;

/// Binomial distribution `B(m, p)` with `m >= 1` and `0 < p < 1`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BinomialSpec {
    trials: u64,
    p: f64,
}

impl BinomialSpec {
    pub fn new(trials: u64, p: f64) -> Result<Self> {
        if trials == 0 {
            return Err(Error::domain("m", "number of trials must be at least 1"));
        }
        if !(p > 0.0 && p < 1.0) {
            return Err(Error::domain("p", format!("success probability must lie in (0, 1), got {p}")));
        }
        Ok(Self { trials, p })
    }

    pub fn trials(&self) -> u64 {
        self.trials
    }

    pub fn p(&self) -> f64 {
        self.p
    }

    pub fn mean(&self) -> f64 {
        self.trials as f64 * self.p
    }

    /// Natural log of `Pr[X = k]`.
    pub fn ln_pmf(&self, k: u64) -> Result<f64> {
        let m = self.trials;
        if k > m {
            return Err(Error::domain("k", format!("k = {k} outside [0, {m}]")));
        }
        let n = m as f64;
        let p = self.p;
        let q = 1.0 - p;
        if k == 0 {
            return Ok(n * (-p).ln_1p());
        }
        if k == m {
            return Ok(n * p.ln());
        }
        let x = k as f64;
        let lc = stirling_remainder(m) - stirling_remainder(k) - stirling_remainder(m - k)
            - deviance(x, n * p)
            - deviance(n - x, n * q);
        let lf = LN_2PI + x.ln() + (-x / n).ln_1p();
        Ok(lc - 0.5 * lf)
    }

    /// `Pr[X = k] = C(m, k) p^k (1 - p)^(m - k)`.
    pub fn pmf(&self, k: u64) -> Result<f64> {
        self.ln_pmf(k).map(f64::exp)
    }

    /// Smallest `k` with `k >= m p`; an integer mean is included.
    fn first_at_or_above_mean(&self) -> u64 {
        match integer_mean(self.mean()) {
            Some(k) => k,
            None => self.mean().ceil() as u64,
        }
    }

    /// Largest `k` with `k <= m p`; an integer mean is included.
    fn last_at_or_below_mean(&self) -> u64 {
        match integer_mean(self.mean()) {
            Some(k) => k,
            None => self.mean().floor() as u64,
        }
    }

    /// `Pr[X >= E[X]]`, inclusive when `m p` is an integer.
    pub fn tail_geq_mean(&self) -> f64 {
        let lo = self.first_at_or_above_mean();
        self.range_probability(lo, self.trials)
    }

    /// `Pr[X <= E[X]]`, inclusive when `m p` is an integer.
    pub fn tail_leq_mean(&self) -> f64 {
        let hi = self.last_at_or_below_mean();
        self.range_probability(0, hi)
    }

    fn range_probability(&self, lo: u64, hi: u64) -> f64 {
        if lo > hi {
            return 0.0;
        }
        // lo..=hi always lies inside [0, m] here.
        let terms = (lo..=hi)
            .map(|k| self.pmf(k).unwrap_or(0.0))
            .collect::<Vec<_>>();
        sum_ascending(terms)
    }
}

fn integer_mean(mean: f64) -> Option<u64> {
    let r = mean.round();
    if (mean - r).abs() <= INTEGER_MEAN_TOL * mean.max(1.0) {
        Some(r as u64)
    } else {
        None
    }
}

/// `ln(n!) - [(n + 1/2) ln n - n + ln(2 pi)/2]` for integer `n >= 1`.
fn stirling_remainder(n: u64) -> f64 {
    const TABLE: [f64; 16] = [
        0.0,
        0.081_061_466_795_327_258_219_670_2,
        0.041_340_695_955_409_294_093_822_1,
        0.027_677_925_684_998_339_148_789_29,
        0.020_790_672_103_765_093_111_522_77,
        0.016_644_691_189_821_192_163_194_87,
        0.013_876_128_823_070_747_998_745_73,
        0.011_896_709_945_891_770_095_055_72,
        0.010_411_265_261_972_096_497_478_567,
        0.009_255_462_182_712_732_917_728_637,
        0.008_330_563_433_362_871_256_469_318,
        0.007_573_675_487_951_840_794_972_024,
        0.006_942_840_107_209_529_865_664_152,
        0.006_408_994_188_004_207_068_439_631,
        0.005_951_370_112_758_847_735_624_416,
        0.005_554_733_551_962_801_371_038_690,
    ];
    const S0: f64 = 1.0 / 12.0;
    const S1: f64 = 1.0 / 360.0;
    const S2: f64 = 1.0 / 1260.0;
    const S3: f64 = 1.0 / 1680.0;
    const S4: f64 = 1.0 / 1188.0;

    if (n as usize) < TABLE.len() {
        return TABLE[n as usize];
    }
    let x = n as f64;
    let xx = x * x;
    if n > 500 {
        (S0 - S1 / xx) / x
    } else if n > 80 {
        (S0 - (S1 - S2 / xx) / xx) / x
    } else if n > 35 {
        (S0 - (S1 - (S2 - S3 / xx) / xx) / xx) / x
    } else {
        (S0 - (S1 - (S2 - (S3 - S4 / xx) / xx) / xx) / xx) / x
    }
}

/// Deviance term `x ln(x / np) + np - x`, stable when `x` is close to `np`.
fn deviance(x: f64, np: f64) -> f64 {
    if (x - np).abs() < 0.1 * (x + np) {
        let mut v = (x - np) / (x + np);
        let mut s = (x - np) * v;
        let mut ej = 2.0 * x * v;
        v *= v;
        for j in 1..1000 {
            ej *= v;
            let s1 = s + ej / f64::from(2 * j + 1);
            if s1 == s {
                return s1;
            }
            s = s1;
        }
        return s;
    }
    x * (x / np).ln() + np - x
}

/// Which binomial-tail lemma a scan certifies.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Lemma {
    /// `Pr[X >= mp] > 1/4` for `p > 1/m`.
    GeqMean,
    /// `Pr[X <= mp] > 1/4` for `p < 1 - 1/m`.
    LeqMean,
}

impl Lemma {
    /// Whether `(m, p)` satisfies the lemma's precondition.
    pub fn admits(self, m: u64, p: f64) -> bool {
        let n = m as f64;
        match self {
            Lemma::GeqMean => n * p > 1.0 + 1e-12,
            Lemma::LeqMean => n * (1.0 - p) > 1.0 + 1e-12,
        }
    }

    pub fn tail(self, spec: &BinomialSpec) -> f64 {
        match self {
            Lemma::GeqMean => spec.tail_geq_mean(),
            Lemma::LeqMean => spec.tail_leq_mean(),
        }
    }
}

/// Scan grid: `m` in `[2, m_max]`, `p` in `{r, 2r, ...} ∩ (0, 1)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScanGrid {
    pub m_max: u64,
    pub p_resolution: f64,
}

impl Default for ScanGrid {
    fn default() -> Self {
        Self {
            m_max: 200,
            p_resolution: 1e-3,
        }
    }
}

impl ScanGrid {
    pub fn validate(&self) -> Result<()> {
        if self.m_max < 2 {
            return Err(Error::domain("m_max", "scan needs m_max >= 2"));
        }
        if !(self.p_resolution > 0.0 && self.p_resolution <= 0.01) {
            return Err(Error::domain("p_resolution", "resolution must lie in (0, 0.01]"));
        }
        Ok(())
    }

    /// Grid values of `p`, strictly inside `(0, 1)`.
    pub fn p_values(&self) -> Vec<f64> {
        (1..)
            .map(|i| i as f64 * self.p_resolution)
            .take_while(|p| *p < 1.0 - 1e-12)
            .collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridPoint {
    pub m: u64,
    pub p: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScanRow {
    pub m: u64,
    pub p: f64,
    pub tail_probability: f64,
}

/// Outcome of a lemma scan. `rows` holds every evaluated grid point in
/// `(m, p)` order for figure reproduction.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScanResult {
    pub lemma: Lemma,
    pub grid: ScanGrid,
    pub min_value: f64,
    pub argmin: GridPoint,
    pub all_above_quarter: bool,
    /// Values of `m` for which the precondition excluded every grid `p`.
    pub skipped_m: Vec<u64>,
    #[serde(skip)]
    pub rows: Vec<ScanRow>,
}

/// JSON summary of a scan.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScanSummary {
    pub lemma: Lemma,
    pub m_max: u64,
    pub p_resolution: f64,
    pub min_value: f64,
    pub argmin: GridPoint,
    pub all_above_quarter: bool,
    pub skipped_m: Vec<u64>,
    pub points: usize,
}

impl ScanResult {
    pub fn summary(&self) -> ScanSummary {
        ScanSummary {
            lemma: self.lemma,
            m_max: self.grid.m_max,
            p_resolution: self.grid.p_resolution,
            min_value: self.min_value,
            argmin: self.argmin,
            all_above_quarter: self.all_above_quarter,
            skipped_m: self.skipped_m.clone(),
            points: self.rows.len(),
        }
    }
}

/// Exhaustively evaluates the lemma's tail probability over the grid,
/// restricted to the lemma's precondition.
pub fn certify_lemma(lemma: Lemma, grid: ScanGrid) -> Result<ScanResult> {
    grid.validate()?;
    let ps = grid.p_values();

    let per_m: Vec<(u64, Vec<ScanRow>)> = (2..=grid.m_max)
        .into_par_iter()
        .map(|m| {
            let rows = ps
                .iter()
                .filter(|&&p| lemma.admits(m, p))
                .map(|&p| {
                    let spec = BinomialSpec { trials: m, p };
                    ScanRow {
                        m,
                        p,
                        tail_probability: lemma.tail(&spec),
                    }
                })
                .collect();
            (m, rows)
        })
        .collect();

    let mut skipped_m = Vec::new();
    let mut rows = Vec::new();
    for (m, mut r) in per_m {
        if r.is_empty() {
            skipped_m.push(m);
        }
        rows.append(&mut r);
    }
    // Rows are in (m, p) order, so the first strict minimum is the
    // lexicographically smallest argmin.
    let best = rows
        .iter()
        .fold(None::<&ScanRow>, |best, row| match best {
            Some(b) if b.tail_probability <= row.tail_probability => Some(b),
            _ => Some(row),
        })
        .ok_or_else(|| Error::domain("grid", "precondition excludes every grid point"))?;

    Ok(ScanResult {
        lemma,
        grid,
        min_value: best.tail_probability,
        argmin: GridPoint { m: best.m, p: best.p },
        all_above_quarter: rows.iter().all(|r| r.tail_probability > 0.25),
        skipped_m,
        rows,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    // Independent oracle: multiplicative binomial coefficient in f64.
    fn direct_pmf(m: u64, p: f64, k: u64) -> f64 {
        let mut c = 1.0_f64;
        for i in 0..k {
            c = c * (m - i) as f64 / (i + 1) as f64;
        }
        c * p.powi(k as i32) * (1.0 - p).powi((m - k) as i32)
    }

    #[test]
    fn pmf_small_cases() {
        let s = BinomialSpec::new(2, 0.5).unwrap();
        assert!((s.pmf(1).unwrap() - 0.5).abs() < 1e-15);
        let s = BinomialSpec::new(3, 0.5).unwrap();
        assert!((s.pmf(3).unwrap() - 0.125).abs() < 1e-15);
        // C(10,3) 0.3^3 0.7^7, mpmath: 0.266827932
        let s = BinomialSpec::new(10, 0.3).unwrap();
        assert!((s.pmf(3).unwrap() - 0.266_827_932).abs() < 1e-12);
    }

    #[test]
    fn pmf_matches_direct_product() {
        for &(m, p) in &[(7u64, 0.13), (30, 0.5), (100, 0.91), (60, 0.02)] {
            let s = BinomialSpec::new(m, p).unwrap();
            for k in 0..=m {
                let a = s.pmf(k).unwrap();
                let b = direct_pmf(m, p, k);
                assert!((a - b).abs() <= 1e-13 * b.max(1e-300) + 1e-300, "m={m} p={p} k={k}: {a} vs {b}");
            }
        }
    }

    #[test]
    fn pmf_rejects_out_of_range_k() {
        let s = BinomialSpec::new(4, 0.3).unwrap();
        assert!(matches!(s.pmf(5), Err(Error::Domain { .. })));
    }

    #[test]
    fn spec_rejects_bad_parameters() {
        assert!(BinomialSpec::new(0, 0.5).is_err());
        assert!(BinomialSpec::new(3, 0.0).is_err());
        assert!(BinomialSpec::new(3, 1.0).is_err());
        assert!(BinomialSpec::new(3, f64::NAN).is_err());
    }

    #[test]
    fn tails_at_examples() {
        let t = |m, p| BinomialSpec::new(m, p).unwrap();
        assert!((t(5, 0.5).tail_geq_mean() - 0.5).abs() < 1e-15);
        assert!((t(2, 0.6).tail_geq_mean() - 0.36).abs() < 1e-15);
        assert!((t(2, 0.5001).tail_geq_mean() - 0.250_100_01).abs() < 1e-15);
        assert!((t(5, 0.5).tail_leq_mean() - 0.5).abs() < 1e-15);
        assert!((t(2, 0.4).tail_leq_mean() - 0.36).abs() < 1e-15);
        assert!((t(3, 0.9).tail_leq_mean() - 0.271).abs() < 1e-14);
    }

    #[test]
    fn integer_mean_is_inclusive() {
        // m p = 3 exactly in real arithmetic; 10 * 0.3 rounds above 3 in f64.
        let s = BinomialSpec::new(10, 0.3).unwrap();
        let geq: f64 = (3..=10).map(|k| direct_pmf(10, 0.3, k)).sum();
        let leq: f64 = (0..=3).map(|k| direct_pmf(10, 0.3, k)).sum();
        assert!((s.tail_geq_mean() - geq).abs() < 1e-14);
        assert!((s.tail_leq_mean() - leq).abs() < 1e-14);
    }

    #[test]
    fn pmf_sums_to_one_at_large_m() {
        for &(m, p) in &[(10_000u64, 0.5), (10_000, 0.001), (4321, 0.777)] {
            let s = BinomialSpec::new(m, p).unwrap();
            let total = sum_ascending((0..=m).map(|k| s.pmf(k).unwrap()).collect());
            assert!((total - 1.0).abs() < 1e-12, "m={m} p={p}: {total}");
        }
    }

    #[test]
    fn scan_small_grid_is_above_quarter() {
        let r = certify_lemma(
            Lemma::GeqMean,
            ScanGrid {
                m_max: 14,
                p_resolution: 1e-3,
            },
        )
        .unwrap();
        assert!(r.all_above_quarter);
        assert_eq!(r.argmin.m, 2);
        assert!(r.skipped_m.is_empty());
        assert!(r.rows.iter().all(|row| row.m >= 2 && row.m <= 14));
    }

    #[test]
    fn coarse_grid_covers_every_m() {
        // Even the coarsest allowed grid has p < 0.5 points for m = 2.
        let r = certify_lemma(
            Lemma::LeqMean,
            ScanGrid {
                m_max: 5,
                p_resolution: 0.01,
            },
        )
        .unwrap();
        assert!(r.skipped_m.is_empty());
        assert!(r.all_above_quarter);
    }

    #[test]
    fn scan_rejects_bad_grid() {
        assert!(certify_lemma(Lemma::GeqMean, ScanGrid { m_max: 1, p_resolution: 1e-3 }).is_err());
        assert!(certify_lemma(Lemma::GeqMean, ScanGrid { m_max: 10, p_resolution: 0.1 }).is_err());
        assert!(certify_lemma(Lemma::GeqMean, ScanGrid { m_max: 10, p_resolution: 0.0 }).is_err());
    }
}
