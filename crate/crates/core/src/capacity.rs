//! Brute-force combinatorics over finite hypothesis classes: shatter counts,
//! growth functions, VC- and pseudo-dimension, and the loss-threshold class.
//!
//! Label rows are stored bit-packed and deduplicated. The restriction of a
//! row to a subset of domain points is the row masked by that subset, so a
//! shatter count on a subset is the number of distinct masked rows.

use std::collections::{BTreeSet, HashSet};
use std::io::Read;
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

const WORD: usize = 64;

/// Limits on brute-force enumeration. Exceeding either one is a
/// [`Error::Budget`], never a silent truncation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct EnumerationBudget {
    pub max_domain: usize,
    pub max_subset: usize,
}

impl Default for EnumerationBudget {
    fn default() -> Self {
        Self {
            max_domain: 24,
            max_subset: 20,
        }
    }
}

impl EnumerationBudget {
    fn check_domain(&self, n: usize) -> Result<()> {
        if n > self.max_domain || n >= WORD {
            return Err(Error::Budget(format!(
                "domain of {n} points exceeds the limit of {}",
                self.max_domain.min(WORD - 1)
            )));
        }
        Ok(())
    }

    fn check_subset(&self, k: usize, n: usize) -> Result<()> {
        // Taking the whole domain is a single subset, not an enumeration.
        if k > self.max_subset && k < n {
            return Err(Error::Budget(format!(
                "subsets of size {k} exceed the limit of {}",
                self.max_subset
            )));
        }
        Ok(())
    }
}

/// A finite class of binary classifiers on domain points `0..n`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct HypothesisTable {
    n: usize,
    rows: Vec<Vec<u64>>,
}

fn words_for(n: usize) -> usize {
    n.div_ceil(WORD).max(1)
}

impl HypothesisTable {
    /// Builds a table from label rows, each of length `domain_size`.
    /// Duplicate rows are merged.
    pub fn new<R: AsRef<[bool]>>(domain_size: usize, rows: &[R]) -> Result<Self> {
        if domain_size == 0 {
            return Err(Error::domain("domain_size", "domain must have at least one point"));
        }
        let words = words_for(domain_size);
        let mut set = BTreeSet::new();
        for (i, row) in rows.iter().enumerate() {
            let row = row.as_ref();
            if row.len() != domain_size {
                return Err(Error::validation(
                    format!("hypothesis {i}"),
                    format!("expected {domain_size} labels, got {}", row.len()),
                ));
            }
            let mut packed = vec![0u64; words];
            for (x, &bit) in row.iter().enumerate() {
                if bit {
                    packed[x / WORD] |= 1 << (x % WORD);
                }
            }
            set.insert(packed);
        }
        Self::from_packed(domain_size, set)
    }

    fn from_packed(n: usize, set: BTreeSet<Vec<u64>>) -> Result<Self> {
        if set.is_empty() {
            return Err(Error::domain("hypotheses", "table needs at least one hypothesis"));
        }
        Ok(Self {
            n,
            rows: set.into_iter().collect(),
        })
    }

    /// All `2^n` labelings of `n` points.
    pub fn full_class(n: usize) -> Result<Self> {
        if n == 0 || n > 20 {
            return Err(Error::Budget(format!("full class on {n} points")));
        }
        let set = (0..1u64 << n).map(|bits| vec![bits]).collect();
        Self::from_packed(n, set)
    }

    /// Thresholds on a line: `h_t(x) = 1[x >= t]` for `t = 0..=n`.
    pub fn thresholds(n: usize) -> Result<Self> {
        let rows: Vec<Vec<bool>> = (0..=n).map(|t| (0..n).map(|x| x >= t).collect()).collect();
        Self::new(n, &rows)
    }

    pub fn domain_size(&self) -> usize {
        self.n
    }

    /// Number of distinct hypotheses.
    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    /// `h(x)` for the `h`-th distinct hypothesis (in sorted packed order).
    pub fn label(&self, h: usize, x: usize) -> bool {
        self.rows[h][x / WORD] >> (x % WORD) & 1 == 1
    }

    pub fn row(&self, h: usize) -> Vec<bool> {
        (0..self.n).map(|x| self.label(h, x)).collect()
    }

    /// The table with domain point `x` renamed to `perm[x]`.
    pub fn permuted(&self, perm: &[usize]) -> Result<Self> {
        let mut seen = vec![false; self.n];
        if perm.len() != self.n || perm.iter().any(|&p| p >= self.n || std::mem::replace(&mut seen[p], true)) {
            return Err(Error::domain("perm", "not a permutation of the domain"));
        }
        let rows: Vec<Vec<bool>> = (0..self.len())
            .map(|h| {
                let mut out = vec![false; self.n];
                for x in 0..self.n {
                    out[perm[x]] = self.label(h, x);
                }
                out
            })
            .collect();
        Self::new(self.n, &rows)
    }

    fn single_words(&self) -> Vec<u64> {
        debug_assert!(self.n < WORD);
        self.rows.iter().map(|r| r[0]).collect()
    }

    /// Reads a table: one row per hypothesis, one comma-separated 0/1
    /// column per domain point, no header, `#` comments.
    pub fn from_reader<R: Read>(reader: R) -> Result<Self> {
        let rows = read_rows(reader, |s| match s {
            "0" => Ok(false),
            "1" => Ok(true),
            other => Err(format!("label must be 0 or 1, got '{other}'")),
        })?;
        let n = rows.first().map_or(0, Vec::len);
        Self::new(n, &rows)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_reader(std::fs::File::open(path)?)
    }

    pub fn write_csv<W: std::io::Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(writer);
        for h in 0..self.len() {
            w.write_record(self.row(h).iter().map(|&b| if b { "1" } else { "0" }))?;
        }
        w.flush()?;
        Ok(())
    }
}

fn read_rows<R: Read, T>(reader: R, parse: impl Fn(&str) -> std::result::Result<T, String>) -> Result<Vec<Vec<T>>> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(false)
        .comment(Some(b'#'))
        .trim(csv::Trim::All)
        .flexible(true)
        .from_reader(reader);
    let mut rows = Vec::new();
    for (i, record) in rdr.records().enumerate() {
        let record = record?;
        if record.iter().all(str::is_empty) {
            continue;
        }
        let row = record
            .iter()
            .map(&parse)
            .collect::<std::result::Result<Vec<T>, String>>()
            .map_err(|reason| Error::validation(format!("row {}", i + 1), reason))?;
        rows.push(row);
    }
    Ok(rows)
}

/// Real-valued losses `L(h, z_i)`, one row per hypothesis.
#[derive(Debug, Clone, PartialEq)]
pub struct LossTable {
    n: usize,
    rows: Vec<Vec<f64>>,
}

impl LossTable {
    pub fn new(rows: Vec<Vec<f64>>) -> Result<Self> {
        let n = rows.first().map_or(0, Vec::len);
        if n == 0 {
            return Err(Error::domain("losses", "need at least one hypothesis and one point"));
        }
        for (i, row) in rows.iter().enumerate() {
            if row.len() != n {
                return Err(Error::validation(
                    format!("hypothesis {i}"),
                    format!("expected {n} losses, got {}", row.len()),
                ));
            }
            if let Some(v) = row.iter().find(|v| !(v.is_finite() && **v >= 0.0)) {
                return Err(Error::validation(
                    format!("hypothesis {i}"),
                    format!("losses must be finite and nonnegative, got {v}"),
                ));
            }
        }
        Ok(Self { n, rows })
    }

    pub fn domain_size(&self) -> usize {
        self.n
    }

    pub fn rows(&self) -> &[Vec<f64>] {
        &self.rows
    }

    /// Same text format as [`HypothesisTable::from_reader`] with real entries.
    pub fn from_reader<R: Read>(reader: R) -> Result<Self> {
        let rows = read_rows(reader, |s| s.parse::<f64>().map_err(|e| format!("'{s}': {e}")))?;
        Self::new(rows)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_reader(std::fs::File::open(path)?)
    }
}

/// Thresholds for [`pseudo_dimension`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ThresholdGrid {
    /// Per point, midpoints between consecutive distinct loss values.
    Auto,
    Explicit(Vec<f64>),
}

/// `S_H(x_1^m)`: the number of distinct restrictions of `H` to `sample`.
/// Repeated indices are allowed.
pub fn shatter_count(table: &HypothesisTable, sample: &[usize]) -> Result<u64> {
    if sample.is_empty() {
        return Err(Error::domain("sample", "sample must be nonempty"));
    }
    if let Some(&x) = sample.iter().find(|&&x| x >= table.n) {
        return Err(Error::domain("sample", format!("index {x} outside domain of {} points", table.n)));
    }
    let mut mask = vec![0u64; words_for(table.n)];
    for &x in sample {
        mask[x / WORD] |= 1 << (x % WORD);
    }
    let patterns: HashSet<Vec<u64>> = table
        .rows
        .iter()
        .map(|r| r.iter().zip(&mask).map(|(a, b)| a & b).collect())
        .collect();
    Ok(patterns.len() as u64)
}

fn distinct_masked(rows: &[u64], mask: u64, cap: usize, buf: &mut Vec<u64>) -> usize {
    buf.clear();
    buf.extend(rows.iter().map(|r| r & mask));
    buf.sort_unstable();
    buf.dedup();
    buf.len().min(cap)
}

/// All `k`-subsets of `0..n` as bit masks, in increasing numeric order.
fn subsets(n: usize, k: usize) -> Vec<u64> {
    if k == 0 {
        return vec![0];
    }
    let limit = 1u64 << n;
    let mut out = Vec::new();
    let mut s = (1u64 << k) - 1;
    while s < limit {
        out.push(s);
        // Gosper's hack: next integer with the same popcount
        let c = s & s.wrapping_neg();
        let r = s + c;
        s = (((r ^ s) >> 2) / c) | r;
    }
    out
}

/// `Π_m(H)`: the largest shatter count over samples of `m` points.
///
/// Repeated points never add distinct restrictions, so the maximum over
/// `m`-tuples equals the maximum over subsets of size `min(m, n)`.
pub fn growth_function(table: &HypothesisTable, m: usize, budget: &EnumerationBudget) -> Result<u64> {
    if m == 0 {
        return Err(Error::domain("m", "m must be at least 1"));
    }
    budget.check_domain(table.n)?;
    let k = m.min(table.n);
    budget.check_subset(k, table.n)?;
    let rows = table.single_words();
    let cap = table.len().min(1usize << k);
    let best = subsets(table.n, k)
        .into_par_iter()
        .map_init(Vec::new, |buf, mask| distinct_masked(&rows, mask, cap, buf))
        .max()
        .unwrap_or(1);
    Ok(best as u64)
}

fn shattered_size(rows: &[u64], n: usize, limit: usize) -> usize {
    let mut d = 0;
    // Subsets of a shattered set are shattered, so sizes can be tried upward.
    for k in 1..=limit.min(n) {
        if rows.len() < 1 << k {
            break;
        }
        let full = 1usize << k;
        let found = subsets(n, k)
            .into_par_iter()
            .any(|mask| distinct_masked(rows, mask, full, &mut Vec::with_capacity(rows.len())) == full);
        if !found {
            break;
        }
        d = k;
    }
    d
}

/// The size of the largest shattered subset of the domain.
pub fn vc_dimension(table: &HypothesisTable, budget: &EnumerationBudget) -> Result<usize> {
    budget.check_domain(table.n)?;
    let rows = table.single_words();
    let d = shattered_size(&rows, table.n, budget.max_subset);
    if d == budget.max_subset && d < table.n && rows.len() >= 1 << (d + 1) {
        return Err(Error::Budget(format!(
            "VC-dimension is at least {d}; larger subsets exceed the limit"
        )));
    }
    Ok(d)
}

/// `Q = {z -> 1[L(h, z) > t]}`: one row per `(h, t)` pair over the loss
/// table's points, duplicates merged.
pub fn threshold_class(losses: &LossTable, thresholds: &[f64]) -> Result<HypothesisTable> {
    if thresholds.is_empty() {
        return Err(Error::domain("thresholds", "need at least one threshold"));
    }
    let rows: Vec<Vec<bool>> = losses
        .rows
        .iter()
        .flat_map(|row| thresholds.iter().map(move |&t| row.iter().map(|&l| l > t).collect()))
        .collect();
    HypothesisTable::new(losses.n, &rows)
}

/// The thresholded class over the product domain `(point, threshold)`,
/// with entries `1[L(h, z_i) > t]`.
pub fn pseudo_table(losses: &LossTable, grid: &ThresholdGrid) -> Result<Option<HypothesisTable>> {
    let mut product = Vec::new();
    for i in 0..losses.n {
        let levels: Vec<f64> = match grid {
            ThresholdGrid::Explicit(ts) => ts.clone(),
            ThresholdGrid::Auto => {
                let mut vals: Vec<f64> = losses.rows.iter().map(|r| r[i]).collect();
                vals.sort_by(f64::total_cmp);
                vals.dedup();
                vals.windows(2).map(|w| 0.5 * (w[0] + w[1])).collect()
            }
        };
        product.extend(levels.into_iter().map(|t| (i, t)));
    }
    if product.is_empty() {
        return Ok(None);
    }
    let rows: Vec<Vec<bool>> = losses
        .rows
        .iter()
        .map(|row| product.iter().map(|&(i, t)| row[i] > t).collect())
        .collect();
    HypothesisTable::new(product.len(), &rows).map(Some)
}

/// `Pdim`: the VC-dimension of the thresholded class over the product
/// domain. With [`ThresholdGrid::Auto`] every achievable dichotomy is
/// realized.
pub fn pseudo_dimension(losses: &LossTable, grid: &ThresholdGrid, budget: &EnumerationBudget) -> Result<usize> {
    match pseudo_table(losses, grid)? {
        None => Ok(0),
        Some(table) => vc_dimension(&table, budget),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bounds::sauer_growth_upper;

    fn b() -> EnumerationBudget {
        EnumerationBudget::default()
    }

    #[test]
    fn shatter_examples() {
        let t = HypothesisTable::thresholds(3).unwrap();
        assert_eq!(t.len(), 4);
        assert_eq!(shatter_count(&t, &[0, 1, 2]).unwrap(), 4);
        let full = HypothesisTable::full_class(5).unwrap();
        assert_eq!(shatter_count(&full, &[0, 2, 4]).unwrap(), 8);
        let zero = HypothesisTable::new(4, &[vec![false; 4]]).unwrap();
        assert_eq!(shatter_count(&zero, &[0, 1, 1, 3]).unwrap(), 1);
        assert!(shatter_count(&zero, &[]).is_err());
        assert!(shatter_count(&zero, &[4]).is_err());
    }

    #[test]
    fn repeated_points_do_not_add_patterns() {
        let full = HypothesisTable::full_class(4).unwrap();
        assert_eq!(shatter_count(&full, &[1, 1, 1]).unwrap(), 2);
    }

    #[test]
    fn growth_examples() {
        let t = HypothesisTable::thresholds(10).unwrap();
        assert_eq!(growth_function(&t, 5, &b()).unwrap(), 6);
        let full = HypothesisTable::full_class(4).unwrap();
        assert_eq!(growth_function(&full, 3, &b()).unwrap(), 8);
        let one = HypothesisTable::new(5, &[vec![true, false, true, false, true]]).unwrap();
        assert_eq!(growth_function(&one, 7, &b()).unwrap(), 1);
    }

    #[test]
    fn vc_examples() {
        assert_eq!(vc_dimension(&HypothesisTable::thresholds(10).unwrap(), &b()).unwrap(), 1);
        assert_eq!(vc_dimension(&HypothesisTable::full_class(6).unwrap(), &b()).unwrap(), 6);
        let one = HypothesisTable::new(3, &[vec![true, false, true]]).unwrap();
        assert_eq!(vc_dimension(&one, &b()).unwrap(), 0);
    }

    #[test]
    fn budgets_are_enforced() {
        let big = HypothesisTable::thresholds(30).unwrap();
        assert!(matches!(growth_function(&big, 3, &b()), Err(Error::Budget(_))));
        assert!(matches!(vc_dimension(&big, &b()), Err(Error::Budget(_))));
        let small = EnumerationBudget { max_domain: 24, max_subset: 2 };
        let t = HypothesisTable::thresholds(10).unwrap();
        assert!(matches!(growth_function(&t, 3, &small), Err(Error::Budget(_))));
        assert_eq!(growth_function(&t, 30, &small).unwrap(), 11);
        let full = HypothesisTable::full_class(4).unwrap();
        assert!(matches!(vc_dimension(&full, &small), Err(Error::Budget(_))));
    }

    #[test]
    fn duplicates_are_merged() {
        let rows = vec![vec![true, false], vec![true, false], vec![false, false]];
        let t = HypothesisTable::new(2, &rows).unwrap();
        assert_eq!(t.len(), 2);
        assert!(HypothesisTable::new(2, &[vec![true]]).is_err());
        assert!(HypothesisTable::new(2, &Vec::<Vec<bool>>::new()).is_err());
    }

    #[test]
    fn threshold_class_examples() {
        let zeros = LossTable::new(vec![vec![0.0; 3]; 2]).unwrap();
        let q = threshold_class(&zeros, &[0.5]).unwrap();
        assert_eq!(q.len(), 1);
        assert_eq!(q.row(0), vec![false; 3]);

        let one = LossTable::new(vec![vec![1.0, 2.0, 3.0]]).unwrap();
        let q = threshold_class(&one, &[1.5, 2.5]).unwrap();
        let mut rows: Vec<Vec<bool>> = (0..q.len()).map(|h| q.row(h)).collect();
        rows.sort();
        assert_eq!(rows, vec![vec![false, false, true], vec![false, true, true]]);

        let twin = LossTable::new(vec![vec![1.0, 2.0, 3.0]; 2]).unwrap();
        assert_eq!(threshold_class(&twin, &[1.5, 2.5]).unwrap().len(), 2);
        assert!(threshold_class(&twin, &[]).is_err());
    }

    #[test]
    fn pseudo_dimension_examples() {
        let single = LossTable::new(vec![vec![0.3, 1.2, 4.0]]).unwrap();
        assert_eq!(pseudo_dimension(&single, &ThresholdGrid::Auto, &b()).unwrap(), 0);

        let constants = LossTable::new((0..5).map(|c| vec![c as f64; 4]).collect()).unwrap();
        assert_eq!(pseudo_dimension(&constants, &ThresholdGrid::Auto, &b()).unwrap(), 1);

        // all four sign patterns at points (0, t=0.5) and (1, t=0.5)
        let four = LossTable::new(vec![vec![0.0, 0.0], vec![1.0, 0.0], vec![0.0, 1.0], vec![1.0, 1.0]]).unwrap();
        assert_eq!(pseudo_dimension(&four, &ThresholdGrid::Auto, &b()).unwrap(), 2);
        assert_eq!(
            pseudo_dimension(&four, &ThresholdGrid::Explicit(vec![0.25, 0.5, 0.75]), &b()).unwrap(),
            2
        );
    }

    #[test]
    fn csv_round_trip() {
        let text = "# thresholds on 3 points\n1,1,1\n0,1,1\n\n0, 0, 1\n0,0,0\n";
        let t = HypothesisTable::from_reader(text.as_bytes()).unwrap();
        assert_eq!(t, HypothesisTable::thresholds(3).unwrap());
        let mut out = Vec::new();
        t.write_csv(&mut out).unwrap();
        assert_eq!(HypothesisTable::from_reader(out.as_slice()).unwrap(), t);

        assert!(matches!(HypothesisTable::from_reader("0,2\n".as_bytes()), Err(Error::Validation { .. })));
        assert!(HypothesisTable::from_reader("0,1\n1\n".as_bytes()).is_err());
        let l = LossTable::from_reader("0.5,1e3\n2,0\n".as_bytes()).unwrap();
        assert_eq!(l.rows()[0], vec![0.5, 1000.0]);
        assert!(LossTable::from_reader("-1,0\n".as_bytes()).is_err());
    }

    #[test]
    fn growth_below_sauer() {
        for t in [
            HypothesisTable::thresholds(10).unwrap(),
            HypothesisTable::full_class(4).unwrap(),
            HypothesisTable::new(6, &[vec![true; 6], vec![false; 6]]).unwrap(),
        ] {
            let d = vc_dimension(&t, &b()).unwrap() as u64;
            for m in 1..=t.domain_size() {
                if d <= m as u64 {
                    let g = growth_function(&t, m, &b()).unwrap() as f64;
                    assert!(g <= sauer_growth_upper(d, m as u64).unwrap() * (1.0 + 1e-12));
                }
            }
        }
    }
}
