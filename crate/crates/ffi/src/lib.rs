//! C ABI over the `reldev` engine.
//!
//! Every fallible function returns a [`ReldevStatus`]; on failure the message
//! is available from [`reldev_last_error`] on the same thread. Handles are
//! opaque and must be released with their `_free` function. Strings returned
//! through `out_json` parameters are owned by the caller and released with
//! [`reldev_string_free`].

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::ptr;

use reldev::binomial::BinomialSpec;
use reldev::bounds::{evaluate, BoundId, BoundRequest, BoundValue};
use reldev::capacity::{growth_function, shatter_count, vc_dimension, EnumerationBudget, HypothesisTable};
use reldev::mc::{run_experiment, TrialReport, Verdict};
use reldev::report::{parse_config, to_json};
use reldev::Error;

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReldevStatus {
    Ok = 0,
    Domain = 1,
    Budget = 2,
    Divergent = 3,
    DenominatorZero = 4,
    Validation = 5,
    Parse = 6,
    Io = 7,
    NullPointer = 8,
    InvalidUtf8 = 9,
    OutOfRange = 10,
    Panic = 11,
}

impl From<&Error> for ReldevStatus {
    fn from(e: &Error) -> Self {
        match e {
            Error::Domain { .. } => ReldevStatus::Domain,
            Error::Budget(_) => ReldevStatus::Budget,
            Error::Divergent(_) => ReldevStatus::Divergent,
            Error::DenominatorZero { .. } => ReldevStatus::DenominatorZero,
            Error::Validation { .. } => ReldevStatus::Validation,
            Error::Parse(_) => ReldevStatus::Parse,
            Error::Io(_) => ReldevStatus::Io,
        }
    }
}

/// Verdict codes in [`ReldevRow::verdict`].
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReldevVerdict {
    Pass = 0,
    Inconclusive = 1,
    Vacuous = 2,
    Fail = 3,
}

/// One ε row of an experiment report.
#[repr(C)]
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct ReldevRow {
    pub epsilon: f64,
    pub threshold: f64,
    pub exceedance_count: u64,
    pub trials: u64,
    pub frequency: f64,
    pub ci_lower: f64,
    pub ci_upper: f64,
    pub rhs: f64,
    pub verdict: i32,
}

/// Opaque hypothesis class over a finite domain.
pub struct ReldevTable {
    inner: HypothesisTable,
}

/// Opaque Monte Carlo report.
pub struct ReldevReport {
    inner: TrialReport,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

struct Fail(ReldevStatus, String);

impl From<Error> for Fail {
    fn from(e: Error) -> Self {
        Fail((&e).into(), e.to_string())
    }
}

type FfiResult = Result<(), Fail>;

fn guard(f: impl FnOnce() -> FfiResult) -> ReldevStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => ReldevStatus::Ok,
        Ok(Err(Fail(status, msg))) => {
            set_error(msg);
            status
        }
        Err(_) => {
            set_error("internal panic".into());
            ReldevStatus::Panic
        }
    }
}

fn null(name: &str) -> Fail {
    Fail(ReldevStatus::NullPointer, format!("{name} is null"))
}

unsafe fn text<'a>(p: *const c_char, name: &str) -> Result<&'a str, Fail> {
    if p.is_null() {
        return Err(null(name));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|_| Fail(ReldevStatus::InvalidUtf8, format!("{name} is not valid UTF-8")))
}

unsafe fn put<T>(out: *mut T, value: T, name: &str) -> FfiResult {
    if out.is_null() {
        return Err(null(name));
    }
    out.write(value);
    Ok(())
}

fn owned_string(s: String) -> Result<*mut c_char, Fail> {
    CString::new(s)
        .map(CString::into_raw)
        .map_err(|_| Fail(ReldevStatus::InvalidUtf8, "output contains a NUL byte".into()))
}

unsafe fn table_ref<'a>(t: *const ReldevTable) -> Result<&'a HypothesisTable, Fail> {
    t.as_ref().map(|t| &t.inner).ok_or_else(|| null("table"))
}

unsafe fn report_ref<'a>(r: *const ReldevReport) -> Result<&'a TrialReport, Fail> {
    r.as_ref().map(|r| &r.inner).ok_or_else(|| null("report"))
}

/// Message of the last failed call on this thread, or NULL. Valid until the
/// next failing call on the same thread.
#[no_mangle]
pub extern "C" fn reldev_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn reldev_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Releases a string returned by this library. NULL is a no-op.
///
/// # Safety
/// `s` must come from this library and not have been freed.
#[no_mangle]
pub unsafe extern "C" fn reldev_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// Evaluates bound `id` on a JSON request (NULL or "" means all defaults) and
/// writes the headline value: the clipped probability for probability
/// bounds, the value otherwise. `out_vacuous` may be NULL.
///
/// # Safety
/// String arguments must be NUL-terminated; `out_value` must be writable.
#[no_mangle]
pub unsafe extern "C" fn reldev_bound_evaluate(
    id: *const c_char,
    request_json: *const c_char,
    out_value: *mut f64,
    out_vacuous: *mut bool,
) -> ReldevStatus {
    guard(|| {
        let out = eval(id, request_json)?;
        put(out_value, out.value.primary(), "out_value")?;
        if !out_vacuous.is_null() {
            let vacuous = matches!(out.value, BoundValue::Probability { vacuous: true, .. });
            out_vacuous.write(vacuous);
        }
        Ok(())
    })
}

/// Like [`reldev_bound_evaluate`] but returns the full JSON output.
///
/// # Safety
/// String arguments must be NUL-terminated; `out_json` must be writable.
#[no_mangle]
pub unsafe extern "C" fn reldev_bound_evaluate_json(
    id: *const c_char,
    request_json: *const c_char,
    out_json: *mut *mut c_char,
) -> ReldevStatus {
    guard(|| {
        let out = eval(id, request_json)?;
        put(out_json, owned_string(to_json(&out)?)?, "out_json")
    })
}

unsafe fn eval(id: *const c_char, request_json: *const c_char) -> Result<reldev::bounds::BoundOutput, Fail> {
    let id: BoundId = text(id, "id")?.parse()?;
    let req = if request_json.is_null() {
        BoundRequest::default()
    } else {
        match text(request_json, "request_json")?.trim() {
            "" => BoundRequest::default(),
            s => serde_json::from_str(s).map_err(Error::from)?,
        }
    };
    Ok(evaluate(id, &req)?)
}

/// `Pr[X >= mp]` for `X ~ Binomial(m, p)`.
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn reldev_binomial_tail_geq_mean(m: u64, p: f64, out: *mut f64) -> ReldevStatus {
    guard(|| put(out, BinomialSpec::new(m, p)?.tail_geq_mean(), "out"))
}

/// `Pr[X <= mp]` for `X ~ Binomial(m, p)`.
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn reldev_binomial_tail_leq_mean(m: u64, p: f64, out: *mut f64) -> ReldevStatus {
    guard(|| put(out, BinomialSpec::new(m, p)?.tail_leq_mean(), "out"))
}

/// `Pr[X = k]` for `X ~ Binomial(m, p)`.
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn reldev_binomial_pmf(m: u64, p: f64, k: u64, out: *mut f64) -> ReldevStatus {
    guard(|| put(out, BinomialSpec::new(m, p)?.pmf(k)?, "out"))
}

/// Builds a class from a row-major `rows x domain_size` label matrix
/// (nonzero byte = label 1). Duplicate rows are merged.
///
/// # Safety
/// `labels` must point to `rows * domain_size` readable bytes.
#[no_mangle]
pub unsafe extern "C" fn reldev_table_new(
    labels: *const u8,
    rows: usize,
    domain_size: usize,
    out: *mut *mut ReldevTable,
) -> ReldevStatus {
    guard(|| {
        let len = rows
            .checked_mul(domain_size)
            .ok_or_else(|| Fail(ReldevStatus::OutOfRange, "label matrix too large".into()))?;
        if labels.is_null() && len > 0 {
            return Err(null("labels"));
        }
        let flat = if len == 0 { &[][..] } else { std::slice::from_raw_parts(labels, len) };
        let matrix: Vec<Vec<bool>> = flat
            .chunks(domain_size.max(1))
            .take(rows)
            .map(|r| r.iter().map(|&b| b != 0).collect())
            .collect();
        let table = HypothesisTable::new(domain_size, &matrix)?;
        put(out, Box::into_raw(Box::new(ReldevTable { inner: table })), "out")
    })
}

/// The threshold class `x >= t`, `t = 0..=n`, on `n` points.
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn reldev_table_thresholds(n: usize, out: *mut *mut ReldevTable) -> ReldevStatus {
    guard(|| {
        let table = HypothesisTable::thresholds(n)?;
        put(out, Box::into_raw(Box::new(ReldevTable { inner: table })), "out")
    })
}

/// Loads a hypothesis table CSV.
///
/// # Safety
/// `path` must be NUL-terminated; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn reldev_table_load_csv(path: *const c_char, out: *mut *mut ReldevTable) -> ReldevStatus {
    guard(|| {
        let table = HypothesisTable::load(Path::new(text(path, "path")?))?;
        put(out, Box::into_raw(Box::new(ReldevTable { inner: table })), "out")
    })
}

/// # Safety
/// `table` must come from this library and not have been freed. NULL is a no-op.
#[no_mangle]
pub unsafe extern "C" fn reldev_table_free(table: *mut ReldevTable) {
    if !table.is_null() {
        drop(Box::from_raw(table));
    }
}

/// Number of distinct hypotheses.
///
/// # Safety
/// `table` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn reldev_table_len(table: *const ReldevTable, out: *mut usize) -> ReldevStatus {
    guard(|| put(out, table_ref(table)?.len(), "out"))
}

/// Growth function at `m` under the default enumeration budget.
///
/// # Safety
/// `table` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn reldev_table_growth(table: *const ReldevTable, m: usize, out: *mut u64) -> ReldevStatus {
    guard(|| put(out, growth_function(table_ref(table)?, m, &EnumerationBudget::default())?, "out"))
}

/// VC-dimension under the default enumeration budget.
///
/// # Safety
/// `table` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn reldev_table_vc_dimension(table: *const ReldevTable, out: *mut usize) -> ReldevStatus {
    guard(|| put(out, vc_dimension(table_ref(table)?, &EnumerationBudget::default())?, "out"))
}

/// Distinct labelings induced on the `len` domain points in `sample`.
///
/// # Safety
/// `table` must be a live handle; `sample` must hold `len` readable entries.
#[no_mangle]
pub unsafe extern "C" fn reldev_table_shatter(
    table: *const ReldevTable,
    sample: *const usize,
    len: usize,
    out: *mut u64,
) -> ReldevStatus {
    guard(|| {
        if sample.is_null() && len > 0 {
            return Err(null("sample"));
        }
        let s = if len == 0 { &[][..] } else { std::slice::from_raw_parts(sample, len) };
        put(out, shatter_count(table_ref(table)?, s)?, "out")
    })
}

/// Validates and runs an experiment given as JSON.
///
/// # Safety
/// `config_json` must be NUL-terminated; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn reldev_experiment_run(config_json: *const c_char, out: *mut *mut ReldevReport) -> ReldevStatus {
    guard(|| {
        let config = parse_config(text(config_json, "config_json")?)?;
        let report = run_experiment(&config)?;
        put(out, Box::into_raw(Box::new(ReldevReport { inner: report })), "out")
    })
}

/// # Safety
/// `report` must come from this library and not have been freed. NULL is a no-op.
#[no_mangle]
pub unsafe extern "C" fn reldev_report_free(report: *mut ReldevReport) {
    if !report.is_null() {
        drop(Box::from_raw(report));
    }
}

/// Number of ε rows.
///
/// # Safety
/// `report` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn reldev_report_row_count(report: *const ReldevReport, out: *mut usize) -> ReldevStatus {
    guard(|| put(out, report_ref(report)?.rows.len(), "out"))
}

/// Copies row `index` into `out`.
///
/// # Safety
/// `report` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn reldev_report_row(report: *const ReldevReport, index: usize, out: *mut ReldevRow) -> ReldevStatus {
    guard(|| {
        let r = report_ref(report)?;
        let row = r
            .rows
            .get(index)
            .ok_or_else(|| Fail(ReldevStatus::OutOfRange, format!("row {index} of {}", r.rows.len())))?;
        let verdict = match row.verdict {
            Verdict::Pass => ReldevVerdict::Pass,
            Verdict::Inconclusive => ReldevVerdict::Inconclusive,
            Verdict::Vacuous => ReldevVerdict::Vacuous,
            Verdict::Fail => ReldevVerdict::Fail,
        };
        let c = ReldevRow {
            epsilon: row.epsilon,
            threshold: row.threshold,
            exceedance_count: row.exceedance_count,
            trials: row.trials,
            frequency: row.empirical_frequency,
            ci_lower: row.frequency_lower_ci,
            ci_upper: row.frequency_upper_ci,
            rhs: row.theorem_rhs,
            verdict: verdict as i32,
        };
        put(out, c, "out")
    })
}

/// Whether any row has a fail verdict.
///
/// # Safety
/// `report` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn reldev_report_has_failure(report: *const ReldevReport, out: *mut bool) -> ReldevStatus {
    guard(|| put(out, report_ref(report)?.has_failure(), "out"))
}

/// The report as JSON (17-digit floats).
///
/// # Safety
/// `report` must be a live handle; `out_json` must be writable.
#[no_mangle]
pub unsafe extern "C" fn reldev_report_to_json(report: *const ReldevReport, out_json: *mut *mut c_char) -> ReldevStatus {
    guard(|| put(out_json, owned_string(to_json(report_ref(report)?)?)?, "out_json"))
}
