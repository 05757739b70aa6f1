use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use reldev::analytic::{
    approx_grid, log_grid, monotonicity_probe, sqrt_tail_check, FParams, FVariant, Pareto, QuadratureBudget,
};
use reldev::binomial::{certify_lemma, Lemma, ScanGrid};
use reldev::bounds::{evaluate, BoundId, BoundRequest, CapacityDescriptor, DeviationSide, Direction};
use reldev::capacity::{
    growth_function, pseudo_dimension, shatter_count, vc_dimension, EnumerationBudget, HypothesisTable, LossTable,
    ThresholdGrid,
};
use reldev::mc::{run_experiment, symmetrization_ratio_check, trial_statistic, SymmetrizationOutcome};
use reldev::report::{self, load_config, output_dir, output_path, to_json};
use reldev::{Error, Result};

#[derive(Parser, Debug)]
#[command(name = "reldev", version, about = "Relative deviation bounds, exact oracles and Monte Carlo checks")]
pub struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Evaluate a closed-form bound by identifier.
    Bound(BoundArgs),
    /// Exhaustive binomial tail scan over (m, p).
    BinomialScan(ScanArgs),
    /// Shatter counts, growth function, VC- and pseudo-dimension.
    Capacity(CapacityArgs),
    /// Numeric checks of the analytic lemmas.
    Analytic {
        #[command(subcommand)]
        check: AnalyticCheck,
    },
    /// Run a Monte Carlo experiment from a JSON config.
    Experiment(ExperimentArgs),
    /// Write the figure data files.
    Figures(FigureArgs),
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum Format {
    Json,
    Csv,
}

#[derive(Args, Debug)]
struct BoundArgs {
    /// Bound identifier.
    #[arg(long, required_unless_present = "list")]
    id: Option<String>,
    /// Print every identifier with a one-line description.
    #[arg(long)]
    list: bool,
    /// JSON request file; flags below override its fields.
    #[arg(long)]
    request: Option<PathBuf>,
    #[arg(long)]
    m: Option<u64>,
    #[arg(long)]
    epsilon: Option<f64>,
    #[arg(long)]
    alpha: Option<f64>,
    #[arg(long)]
    tau: Option<f64>,
    #[arg(long)]
    nu: Option<f64>,
    #[arg(long)]
    v: Option<f64>,
    #[arg(long)]
    delta: Option<f64>,
    /// Expected shatter coefficient at 2m.
    #[arg(long, group = "cap")]
    shatter: Option<f64>,
    /// Growth function value at 2m.
    #[arg(long, group = "cap")]
    growth: Option<f64>,
    #[arg(long, group = "cap")]
    vc_dim: Option<u64>,
    #[arg(long, group = "cap")]
    pdim: Option<u64>,
    /// Observed error rate (solved bounds).
    #[arg(long)]
    rate: Option<f64>,
    /// Loss moment (additive unbounded bounds).
    #[arg(long)]
    moment: Option<f64>,
    /// VC- or pseudo-dimension for dimension-based bounds.
    #[arg(long)]
    dimension: Option<u64>,
    /// Sample count for the Sauer bound.
    #[arg(long)]
    n: Option<u64>,
    #[arg(long, value_enum)]
    side: Option<SideArg>,
    #[arg(long, value_enum)]
    direction: Option<DirectionArg>,
    #[arg(long, short)]
    output: Option<PathBuf>,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum SideArg {
    TrueMinusEmp,
    EmpMinusTrue,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum DirectionArg {
    UpperOnTrue,
    UpperOnEmp,
}

#[derive(Args, Debug)]
struct ScanArgs {
    #[arg(long, default_value_t = 200)]
    m_max: u64,
    #[arg(long, default_value_t = 1e-3)]
    resolution: f64,
    #[arg(long, value_enum, default_value = "geq-mean")]
    lemma: LemmaArg,
    /// csv: every grid point; json: the summary.
    #[arg(long, value_enum, default_value = "csv")]
    format: Format,
    #[arg(long, short)]
    output: Option<PathBuf>,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum LemmaArg {
    GeqMean,
    LeqMean,
}

impl From<LemmaArg> for Lemma {
    fn from(l: LemmaArg) -> Self {
        match l {
            LemmaArg::GeqMean => Lemma::GeqMean,
            LemmaArg::LeqMean => Lemma::LeqMean,
        }
    }
}

#[derive(Args, Debug)]
struct CapacityArgs {
    /// Hypothesis table CSV (one row of 0/1 labels per hypothesis).
    #[arg(long, group = "class")]
    table: Option<PathBuf>,
    /// Built-in threshold class on N points.
    #[arg(long, group = "class")]
    thresholds: Option<usize>,
    /// Built-in class of all labelings of N points.
    #[arg(long, group = "class")]
    full: Option<usize>,
    /// Loss table CSV (one row of real losses per hypothesis); reports the
    /// pseudo-dimension.
    #[arg(long, group = "class")]
    losses: Option<PathBuf>,
    /// Explicit threshold levels for the pseudo-dimension (default: all
    /// midpoints of the observed losses).
    #[arg(long, value_delimiter = ',', requires = "losses")]
    levels: Option<Vec<f64>>,
    /// Evaluate the growth function at these sample sizes.
    #[arg(long, value_delimiter = ',')]
    m: Vec<usize>,
    /// Shatter count on these domain points.
    #[arg(long, value_delimiter = ',')]
    sample: Option<Vec<usize>>,
    #[arg(long, default_value_t = EnumerationBudget::default().max_domain)]
    max_domain: usize,
    #[arg(long, default_value_t = EnumerationBudget::default().max_subset)]
    max_subset: usize,
    #[arg(long, short)]
    output: Option<PathBuf>,
}

#[derive(Subcommand, Debug)]
enum AnalyticCheck {
    /// Random probes of the monotonicity of the normalized deviation.
    Monotonicity {
        #[arg(long, default_value_t = 2.0)]
        alpha: f64,
        #[arg(long, default_value_t = 1.0)]
        eta: f64,
        #[arg(long, default_value_t = 100_000)]
        samples: u64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, value_enum, default_value = "half-mean")]
        variant: VariantArg,
        #[arg(long, short)]
        output: Option<PathBuf>,
    },
    /// `ε sqrt(1 + ½ ln(1/ε))` against `ε^β` on a log grid down to 1e-6.
    Approximation {
        #[arg(long, default_value_t = 0.75)]
        beta: f64,
        #[arg(long, default_value_t = 601)]
        points: usize,
        #[arg(long, value_enum, default_value = "csv")]
        format: Format,
        #[arg(long, short)]
        output: Option<PathBuf>,
    },
    /// Square-root tail integral of a Pareto loss against its moment bound.
    SqrtTail {
        #[arg(long)]
        shape: f64,
        #[arg(long, default_value_t = 1.0)]
        scale: f64,
        #[arg(long)]
        alpha: f64,
        #[arg(long, short)]
        output: Option<PathBuf>,
    },
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum VariantArg {
    HalfMean,
    Plain,
}

#[derive(Args, Debug)]
struct ExperimentArgs {
    /// Experiment config (JSON).
    #[arg(long)]
    config: PathBuf,
    #[arg(long, value_enum, default_value = "json")]
    format: Format,
    /// Compare the one-sample and symmetrized probabilities instead.
    #[arg(long)]
    symmetrization: bool,
    /// Also write each trial's statistic as JSON lines.
    #[arg(long)]
    records: Option<PathBuf>,
    #[arg(long, short)]
    output: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct FigureArgs {
    /// Target directory (default: $RELDEV_OUT_DIR or the working directory).
    #[arg(long)]
    out_dir: Option<PathBuf>,
    #[arg(long, default_value_t = 14)]
    m_max: u64,
    #[arg(long, default_value_t = 1e-3)]
    resolution: f64,
    #[arg(long, default_value_t = 601)]
    points: usize,
}

/// Successful outcome of a command: `failed` marks a verification failure
/// that should still produce output but exit nonzero.
pub struct Outcome {
    pub failed: bool,
}

fn write_out(path: Option<PathBuf>, bytes: &[u8]) -> Result<()> {
    match path {
        Some(p) => {
            if let Some(dir) = p.parent().filter(|d| !d.as_os_str().is_empty()) {
                fs::create_dir_all(dir)?;
            }
            fs::write(p, bytes)?;
        }
        // a closed downstream pipe (`| head`) is not an error
        None => match std::io::stdout().lock().write_all(bytes) {
            Err(e) if e.kind() == std::io::ErrorKind::BrokenPipe => {}
            r => r?,
        },
    }
    Ok(())
}

fn json_out<T: Serialize>(value: &T, explicit: Option<&Path>, default_name: &str) -> Result<()> {
    let mut text = to_json(value)?;
    text.push('\n');
    write_out(output_path(explicit, default_name), text.as_bytes())
}

pub fn run(cli: Cli) -> Result<Outcome> {
    match cli.command {
        Command::Bound(a) => bound(a),
        Command::BinomialScan(a) => scan(a),
        Command::Capacity(a) => capacity(a),
        Command::Analytic { check } => analytic(check),
        Command::Experiment(a) => experiment(a),
        Command::Figures(a) => figures(a),
    }
    .map(|failed| Outcome { failed })
}

#[derive(Serialize)]
struct IdEntry {
    id: BoundId,
    description: &'static str,
}

fn bound(a: BoundArgs) -> Result<bool> {
    if a.list {
        let ids: Vec<IdEntry> = BoundId::ALL
            .iter()
            .map(|&id| IdEntry {
                id,
                description: id.describe(),
            })
            .collect();
        json_out(&ids, a.output.as_deref(), "bound_ids.json")?;
        return Ok(false);
    }
    let id: BoundId = a.id.as_deref().unwrap_or_default().parse()?;
    let mut req = match &a.request {
        Some(p) => serde_json::from_str::<BoundRequest>(&fs::read_to_string(p)?)?,
        None => BoundRequest::default(),
    };
    let p = &mut req.params;
    macro_rules! set {
        ($($f:ident),*) => { $(if let Some(x) = a.$f { p.$f = x; })* };
    }
    set!(m, epsilon, alpha, tau, nu, v, delta);
    if let Some(s) = a.shatter {
        req.capacity = Some(CapacityDescriptor::expected_shatter(s)?);
    } else if let Some(g) = a.growth {
        req.capacity = Some(CapacityDescriptor::growth(g)?);
    } else if let Some(d) = a.vc_dim {
        req.capacity = Some(CapacityDescriptor::vc_dimension(d)?);
    } else if let Some(d) = a.pdim {
        req.capacity = Some(CapacityDescriptor::pseudo_dimension(d)?);
    }
    req.rate = a.rate.or(req.rate);
    req.moment = a.moment.or(req.moment);
    req.dimension = a.dimension.or(req.dimension);
    req.n = a.n.or(req.n);
    match a.side {
        Some(SideArg::TrueMinusEmp) => req.side = DeviationSide::TrueMinusEmp,
        Some(SideArg::EmpMinusTrue) => req.side = DeviationSide::EmpMinusTrue,
        None => {}
    }
    match a.direction {
        Some(DirectionArg::UpperOnTrue) => req.direction = Direction::UpperOnTrue,
        Some(DirectionArg::UpperOnEmp) => req.direction = Direction::UpperOnEmp,
        None => {}
    }
    let out = evaluate(id, &req)?;
    json_out(&out, a.output.as_deref(), &format!("bound_{id}.json"))?;
    Ok(false)
}

fn scan(a: ScanArgs) -> Result<bool> {
    let lemma: Lemma = a.lemma.into();
    let result = certify_lemma(
        lemma,
        ScanGrid {
            m_max: a.m_max,
            p_resolution: a.resolution,
        },
    )?;
    match a.format {
        Format::Json => json_out(&result.summary(), a.output.as_deref(), "binomial_scan.json")?,
        Format::Csv => {
            let mut buf = Vec::new();
            report::write_scan_csv(&result.rows, &mut buf)?;
            write_out(output_path(a.output.as_deref(), "binomial_scan.csv"), &buf)?;
        }
    }
    Ok(false)
}

#[derive(Serialize)]
struct GrowthValue {
    m: usize,
    value: u64,
}

#[derive(Serialize, Default)]
struct CapacityReport {
    domain_size: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    hypotheses: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    vc_dimension: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pseudo_dimension: Option<usize>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    growth: Vec<GrowthValue>,
    #[serde(skip_serializing_if = "Option::is_none")]
    shatter: Option<u64>,
}

fn capacity(a: CapacityArgs) -> Result<bool> {
    let budget = EnumerationBudget {
        max_domain: a.max_domain,
        max_subset: a.max_subset,
    };
    let report = if let Some(path) = &a.losses {
        let losses = LossTable::load(path)?;
        let grid = match a.levels.clone() {
            Some(levels) => ThresholdGrid::Explicit(levels),
            None => ThresholdGrid::Auto,
        };
        CapacityReport {
            domain_size: losses.domain_size(),
            hypotheses: Some(losses.rows().len()),
            pseudo_dimension: Some(pseudo_dimension(&losses, &grid, &budget)?),
            ..Default::default()
        }
    } else {
        let table = if let Some(path) = &a.table {
            HypothesisTable::load(path)?
        } else if let Some(n) = a.thresholds {
            HypothesisTable::thresholds(n)?
        } else if let Some(n) = a.full {
            HypothesisTable::full_class(n)?
        } else {
            return Err(Error::Validation {
                field: "class".into(),
                reason: "one of --table, --thresholds, --full or --losses is required".into(),
            });
        };
        let growth = a
            .m
            .iter()
            .map(|&m| {
                Ok(GrowthValue {
                    m,
                    value: growth_function(&table, m, &budget)?,
                })
            })
            .collect::<Result<_>>()?;
        CapacityReport {
            domain_size: table.domain_size(),
            hypotheses: Some(table.len()),
            vc_dimension: Some(vc_dimension(&table, &budget)?),
            growth,
            shatter: a.sample.as_deref().map(|s| shatter_count(&table, s)).transpose()?,
            ..Default::default()
        }
    };
    json_out(&report, a.output.as_deref(), "capacity.json")?;
    Ok(false)
}

fn analytic(check: AnalyticCheck) -> Result<bool> {
    match check {
        AnalyticCheck::Monotonicity {
            alpha,
            eta,
            samples,
            seed,
            variant,
            output,
        } => {
            let variant = match variant {
                VariantArg::HalfMean => FVariant::HalfMean,
                VariantArg::Plain => FVariant::Plain,
            };
            let r = monotonicity_probe(&FParams::new(alpha, eta)?, variant, samples, seed)?;
            json_out(&r, output.as_deref(), "monotonicity.json")?;
            Ok(r.violations > 0)
        }
        AnalyticCheck::Approximation {
            beta,
            points,
            format,
            output,
        } => {
            let rows = approx_grid(beta, points)?;
            match format {
                Format::Json => json_out(&rows, output.as_deref(), "approximation.json")?,
                Format::Csv => {
                    let mut buf = Vec::new();
                    report::write_approx_csv(&rows, &mut buf)?;
                    write_out(output_path(output.as_deref(), "approximation.csv"), &buf)?;
                }
            }
            Ok(false)
        }
        AnalyticCheck::SqrtTail {
            shape,
            scale,
            alpha,
            output,
        } => {
            let c = sqrt_tail_check(&Pareto::new(shape, scale)?, alpha, &QuadratureBudget::default())?;
            json_out(&c, output.as_deref(), "sqrt_tail.json")?;
            Ok(c.slack < 0.0)
        }
    }
}

#[derive(Serialize)]
struct TrialRecord {
    trial: u64,
    statistic: f64,
}

fn experiment(a: ExperimentArgs) -> Result<bool> {
    let config = load_config(&a.config)?;
    if let Some(path) = &a.records {
        let mut buf = Vec::new();
        for trial in 0..config.trials {
            let rec = TrialRecord {
                trial,
                statistic: trial_statistic(&config, trial)?,
            };
            report::write_json(&rec, &mut buf)?;
            buf.push(b'\n');
        }
        write_out(Some(path.clone()), &buf)?;
    }
    if a.symmetrization {
        let r = symmetrization_ratio_check(&config)?;
        json_out(&r, a.output.as_deref(), "symmetrization.json")?;
        return Ok(r
            .rows
            .iter()
            .any(|row| row.outcome == SymmetrizationOutcome::Violation));
    }
    let r = run_experiment(&config)?;
    match a.format {
        Format::Json => json_out(&r, a.output.as_deref(), "report.json")?,
        Format::Csv => {
            let mut buf = Vec::new();
            report::write_report_csv(&r, &mut buf)?;
            write_out(output_path(a.output.as_deref(), "report.csv"), &buf)?;
        }
    }
    Ok(r.has_failure())
}

#[derive(Serialize)]
struct FigureSummary {
    figure1: PathBuf,
    figure1_rows: usize,
    figure1_min: f64,
    figure2: PathBuf,
    figure2_rows: usize,
}

fn figures(a: FigureArgs) -> Result<bool> {
    let dir = output_dir(a.out_dir.as_deref());
    fs::create_dir_all(&dir)?;
    let scan = certify_lemma(
        Lemma::GeqMean,
        ScanGrid {
            m_max: a.m_max,
            p_resolution: a.resolution,
        },
    )?;
    let mut buf = Vec::new();
    report::write_scan_csv(&scan.rows, &mut buf)?;
    let figure1 = dir.join("figure1.csv");
    fs::write(&figure1, &buf)?;

    let approx = approx_grid(0.75, a.points)?;
    debug_assert_eq!(approx.len(), log_grid(-6.0, a.points).len());
    let mut buf = Vec::new();
    report::write_approx_csv(&approx, &mut buf)?;
    let figure2 = dir.join("figure2.csv");
    fs::write(&figure2, &buf)?;

    let summary = FigureSummary {
        figure1,
        figure1_rows: scan.rows.len(),
        figure1_min: scan.min_value,
        figure2,
        figure2_rows: approx.len(),
    };
    let mut text = to_json(&summary)?;
    text.push('\n');
    write_out(None, text.as_bytes())?;
    Ok(false)
}
