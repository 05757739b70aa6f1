//! Configuration loading and deterministic JSON / CSV emission.
//!
//! JSON floats are written with 17 significant digits (`{:.16e}`) so every
//! double round-trips exactly. CSV floats use the shortest round-trip form.
//!
//! Column orders:
//! - experiment report: `epsilon,frequency,ci_upper,rhs,verdict,threshold,exceedance_count,trials,ci_lower,vacuous`
//! - binomial scan: `m,p,tail_probability`
//! - approximation grid: `epsilon,lhs,rhs`

use std::io::{self, Write};
use std::path::{Path, PathBuf};

use serde::Serialize;
use serde_json::ser::{Formatter, Serializer};

use crate::analytic::ApproxCheck;
use crate::binomial::ScanRow;
use crate::error::{Error, Result};
use crate::mc::{ExperimentConfig, TrialReport, Verdict};

/// Environment variable naming the default output directory.
pub const OUT_DIR_ENV: &str = "RELDEV_OUT_DIR";

pub const REPORT_COLUMNS: [&str; 10] = [
    "epsilon",
    "frequency",
    "ci_upper",
    "rhs",
    "verdict",
    "threshold",
    "exceedance_count",
    "trials",
    "ci_lower",
    "vacuous",
];

/// Parses and validates an experiment config. Unknown keys are rejected.
pub fn parse_config(text: &str) -> Result<ExperimentConfig> {
    let config: ExperimentConfig = serde_json::from_str(text)?;
    config.validate()?;
    Ok(config)
}

pub fn load_config(path: &Path) -> Result<ExperimentConfig> {
    parse_config(&std::fs::read_to_string(path)?)
}

struct Digits17;

impl Formatter for Digits17 {
    fn write_f64<W: ?Sized + Write>(&mut self, writer: &mut W, value: f64) -> io::Result<()> {
        write!(writer, "{value:.16e}")
    }

    fn write_f32<W: ?Sized + Write>(&mut self, writer: &mut W, value: f32) -> io::Result<()> {
        self.write_f64(writer, value as f64)
    }
}

/// Compact JSON with 17-significant-digit floats.
pub fn write_json<T: Serialize + ?Sized, W: Write>(value: &T, writer: W) -> Result<()> {
    let mut ser = Serializer::with_formatter(writer, Digits17);
    value.serialize(&mut ser)?;
    Ok(())
}

pub fn to_json<T: Serialize + ?Sized>(value: &T) -> Result<String> {
    let mut buf = Vec::new();
    write_json(value, &mut buf)?;
    String::from_utf8(buf).map_err(|e| Error::Parse(e.to_string()))
}

fn verdict_str(v: Verdict) -> &'static str {
    match v {
        Verdict::Pass => "pass",
        Verdict::Inconclusive => "inconclusive",
        Verdict::Vacuous => "vacuous",
        Verdict::Fail => "fail",
    }
}

pub fn write_report_csv<W: Write>(report: &TrialReport, writer: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(REPORT_COLUMNS)?;
    for r in &report.rows {
        w.write_record([
            r.epsilon.to_string(),
            r.empirical_frequency.to_string(),
            r.frequency_upper_ci.to_string(),
            r.theorem_rhs.to_string(),
            verdict_str(r.verdict).to_string(),
            r.threshold.to_string(),
            r.exceedance_count.to_string(),
            r.trials.to_string(),
            r.frequency_lower_ci.to_string(),
            (r.verdict == Verdict::Vacuous).to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_scan_csv<W: Write>(rows: &[ScanRow], writer: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(["m", "p", "tail_probability"])?;
    for r in rows {
        w.write_record([r.m.to_string(), r.p.to_string(), r.tail_probability.to_string()])?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_approx_csv<W: Write>(rows: &[ApproxCheck], writer: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(["epsilon", "lhs", "rhs"])?;
    for r in rows {
        w.write_record([r.epsilon.to_string(), r.lhs.to_string(), r.rhs.to_string()])?;
    }
    w.flush()?;
    Ok(())
}

/// `explicit` if given, else `$RELDEV_OUT_DIR/default_name` if the variable
/// is set, else `None` (write to stdout).
pub fn output_path(explicit: Option<&Path>, default_name: &str) -> Option<PathBuf> {
    explicit.map(Path::to_path_buf).or_else(|| {
        std::env::var_os(OUT_DIR_ENV)
            .filter(|d| !d.is_empty())
            .map(|d| PathBuf::from(d).join(default_name))
    })
}

/// Directory for multi-file outputs: `explicit`, else `$RELDEV_OUT_DIR`,
/// else the working directory.
pub fn output_dir(explicit: Option<&Path>) -> PathBuf {
    explicit
        .map(Path::to_path_buf)
        .or_else(|| std::env::var_os(OUT_DIR_ENV).filter(|d| !d.is_empty()).map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("."))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mc::{run_experiment, Scenario, Statistic};

    fn config() -> ExperimentConfig {
        ExperimentConfig {
            scenario: Scenario::threshold_line(8).unwrap(),
            statistic: Statistic::OneSidedTrueMinusEmp,
            alpha: 2.0,
            tau: 0.01,
            epsilon_grid: vec![0.4],
            m: 50,
            trials: 100,
            master_seed: 3,
            confidence: 0.99,
            nu: 1.0,
            v: 1.0,
        }
    }

    #[test]
    fn floats_carry_17_digits() {
        let s = to_json(&[0.1f64, 1.0, 4.443e-10]).unwrap();
        assert_eq!(s, "[1.0000000000000001e-1,1.0000000000000000e0,4.4430000000000001e-10]");
        let back: Vec<f64> = serde_json::from_str(&s).unwrap();
        assert_eq!(back, vec![0.1, 1.0, 4.443e-10]);
        assert_eq!(to_json(&f64::NAN).unwrap(), "null");
    }

    #[test]
    fn config_round_trip() {
        let c = config();
        let text = to_json(&c).unwrap();
        let back = parse_config(&text).unwrap();
        assert_eq!(back, c);
        let a: serde_json::Value = serde_json::from_str(&text).unwrap();
        let b: serde_json::Value = serde_json::from_str(&to_json(&back).unwrap()).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn config_rejections() {
        let mut v: serde_json::Value = serde_json::from_str(&to_json(&config()).unwrap()).unwrap();
        v["trials"] = 10.into();
        let err = parse_config(&v.to_string()).unwrap_err();
        assert!(err.to_string().contains("trials >= 100"), "{err}");
        v["trials"] = 100.into();
        v["extra"] = 1.into();
        assert_eq!(parse_config(&v.to_string()).unwrap_err().kind(), "parse");
        let pareto = r#"{"scenario":{"kind":"unbounded_loss","shape":2.0,"scale":1.0,"factors":[1.0]},
            "statistic":"one_sided_true_minus_emp","alpha":2.0,"tau":0.1,"epsilon_grid":[0.5],
            "m":10,"trials":100,"master_seed":1}"#;
        let err = parse_config(pareto).unwrap_err();
        assert_eq!(err.kind(), "domain");
        assert!(err.to_string().contains("moment of order alpha is infinite"));
    }

    #[test]
    fn report_csv_one_row() {
        let r = run_experiment(&config()).unwrap();
        let mut buf = Vec::new();
        write_report_csv(&r, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines.len(), 2);
        assert_eq!(lines[0], REPORT_COLUMNS.join(","));
        assert!(lines[1].starts_with("0.4,"));
    }

    #[test]
    fn explicit_output_wins() {
        assert_eq!(output_path(Some(Path::new("x.json")), "d.json"), Some(PathBuf::from("x.json")));
        assert_eq!(output_dir(Some(Path::new("d"))), PathBuf::from("d"));
    }
}
