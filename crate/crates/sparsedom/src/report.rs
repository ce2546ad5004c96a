//! Result rows, per-suite summaries and their CSV/JSON/text renderings.
//!
//! A row is one inequality instance `lhs ≤ rhs` (or an equality within a
//! stated tolerance, or a recorded value with no bound). CSV reals carry 17
//! significant digits; JSON uses the shortest round-trip decimal. Wall-clock
//! quantities appear only in the text summary and in rows flagged volatile,
//! whose values are blanked in JSON so that equal configurations give
//! byte-identical JSON.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::time::Duration;

use serde::Serialize;

#[derive(Clone, Debug, PartialEq)]
pub struct Row {
    pub suite: String,
    pub check: String,
    pub trial: u64,
    pub lhs: f64,
    pub rhs: f64,
    pub margin: f64,
    pub pass: bool,
    /// Recorded value without an asserted bound.
    pub record: bool,
    /// Depends on wall-clock time.
    pub volatile: bool,
}

impl Row {
    /// `lhs ≤ rhs`.
    pub fn bound(suite: &str, check: &str, trial: u64, lhs: f64, rhs: f64) -> Row {
        Row::new(suite, check, trial, lhs, rhs, rhs - lhs, lhs <= rhs)
    }

    /// `lhs ≤ rhs·(1 + tol)`, for sides that agree up to rounding.
    pub fn bound_rel(suite: &str, check: &str, trial: u64, lhs: f64, rhs: f64, tol: f64) -> Row {
        let slack = rhs + tol * rhs.abs();
        Row::new(suite, check, trial, lhs, rhs, slack - lhs, lhs <= slack)
    }

    /// Outcome decided elsewhere, e.g. in exact arithmetic.
    pub fn decided(suite: &str, check: &str, trial: u64, lhs: f64, rhs: f64, margin: f64, pass: bool) -> Row {
        Row::new(suite, check, trial, lhs, rhs, margin, pass)
    }

    /// `lhs < rhs`.
    pub fn strict(suite: &str, check: &str, trial: u64, lhs: f64, rhs: f64) -> Row {
        Row::new(suite, check, trial, lhs, rhs, rhs - lhs, lhs < rhs)
    }

    /// `|lhs − rhs| ≤ tol·max(|rhs|, 1)`; the margin is the unused tolerance.
    pub fn equal(suite: &str, check: &str, trial: u64, lhs: f64, rhs: f64, tol: f64) -> Row {
        let margin = tol * rhs.abs().max(1.0) - (lhs - rhs).abs();
        Row::new(suite, check, trial, lhs, rhs, margin, margin >= 0.0)
    }

    /// A measured value; always passes.
    pub fn record(suite: &str, check: &str, trial: u64, value: f64) -> Row {
        let mut r = Row::new(suite, check, trial, value, f64::INFINITY, f64::INFINITY, true);
        r.record = true;
        r
    }

    /// A boolean outcome as `lhs = [failed] ≤ 0`.
    pub fn holds(suite: &str, check: &str, trial: u64, ok: bool) -> Row {
        Row::bound(suite, check, trial, if ok { 0.0 } else { 1.0 }, 0.0)
    }

    pub fn volatile(mut self) -> Row {
        self.volatile = true;
        self
    }

    fn new(suite: &str, check: &str, trial: u64, lhs: f64, rhs: f64, margin: f64, pass: bool) -> Row {
        Row {
            suite: suite.to_owned(),
            check: check.to_owned(),
            trial,
            lhs,
            rhs,
            margin,
            pass,
            record: false,
            volatile: false,
        }
    }

    /// `lhs / rhs` for bound rows with a positive right side.
    fn ratio(&self) -> Option<f64> {
        (!self.record && self.rhs > 0.0 && self.rhs.is_finite()).then(|| self.lhs / self.rhs)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CheckSummary {
    pub check: String,
    pub trials: usize,
    pub violations: usize,
    pub worst_margin: f64,
    /// Largest `lhs / rhs`, or the largest recorded value; NaN if there is none.
    pub empirical_constant: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SuiteReport {
    pub name: String,
    pub tag: String,
    pub trials: usize,
    pub violations: usize,
    pub worst_margin: f64,
    /// Largest `lhs / rhs` over the asserted rows; NaN if there is none.
    pub empirical_constant: f64,
    pub runtime: Duration,
    pub checks: Vec<CheckSummary>,
    pub rows: Vec<Row>,
}

impl SuiteReport {
    pub fn from_rows(name: &str, tag: &str, rows: Vec<Row>, runtime: Duration) -> SuiteReport {
        let mut by_check: BTreeMap<&str, CheckSummary> = BTreeMap::new();
        let mut trials = std::collections::BTreeSet::new();
        for r in &rows {
            trials.insert(r.trial);
            let s = by_check.entry(&r.check).or_insert_with(|| CheckSummary {
                check: r.check.clone(),
                trials: 0,
                violations: 0,
                worst_margin: f64::INFINITY,
                empirical_constant: f64::NAN,
            });
            s.trials += 1;
            s.violations += usize::from(!r.pass);
            s.worst_margin = s.worst_margin.min(r.margin);
            let value = if r.record { Some(r.lhs) } else { r.ratio() };
            if let Some(v) = value {
                s.empirical_constant = if s.empirical_constant.is_nan() { v } else { s.empirical_constant.max(v) };
            }
        }
        let asserted = rows.iter().filter(|r| !r.record);
        SuiteReport {
            name: name.to_owned(),
            tag: tag.to_owned(),
            trials: trials.len(),
            violations: rows.iter().filter(|r| !r.pass).count(),
            worst_margin: asserted.clone().map(|r| r.margin).fold(f64::INFINITY, f64::min),
            empirical_constant: asserted.filter_map(Row::ratio).reduce(f64::max).unwrap_or(f64::NAN),
            runtime,
            checks: by_check.into_values().collect(),
            rows,
        }
    }

    pub fn check(&self, name: &str) -> Option<&CheckSummary> {
        self.checks.iter().find(|c| c.check == name)
    }

    pub fn rows_of<'a>(&'a self, check: &'a str) -> impl Iterator<Item = &'a Row> + 'a {
        self.rows.iter().filter(move |r| r.check == check)
    }

    pub fn passed(&self) -> bool {
        self.violations == 0
    }
}

pub const CSV_HEADER: [&str; 7] = ["suite", "check", "trial", "lhs", "rhs", "margin", "pass"];

fn real(v: f64) -> String {
    format!("{v:.16e}")
}

pub fn to_csv(reports: &[SuiteReport]) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(CSV_HEADER).expect("in-memory write");
    for r in reports.iter().flat_map(|s| &s.rows) {
        w.write_record([
            r.suite.clone(),
            r.check.clone(),
            r.trial.to_string(),
            real(r.lhs),
            real(r.rhs),
            real(r.margin),
            r.pass.to_string(),
        ])
        .expect("in-memory write");
    }
    String::from_utf8(w.into_inner().expect("in-memory flush")).expect("ascii output")
}

/// Parses [`to_csv`] output. Record and volatile flags are not stored in CSV.
pub fn parse_csv(text: &str) -> Result<Vec<Row>, String> {
    let mut reader = csv::Reader::from_reader(text.as_bytes());
    let header = reader.headers().map_err(|e| e.to_string())?;
    if header.iter().ne(CSV_HEADER) {
        return Err(format!("unexpected header {header:?}"));
    }
    let mut rows = Vec::new();
    for rec in reader.records() {
        let rec = rec.map_err(|e| e.to_string())?;
        let num = |i: usize| rec[i].parse::<f64>().map_err(|e| format!("column {}: {e}", CSV_HEADER[i]));
        rows.push(Row {
            suite: rec[0].to_owned(),
            check: rec[1].to_owned(),
            trial: rec[2].parse().map_err(|e| format!("trial: {e}"))?,
            lhs: num(3)?,
            rhs: num(4)?,
            margin: num(5)?,
            pass: rec[6].parse().map_err(|e| format!("pass: {e}"))?,
            record: false,
            volatile: false,
        });
    }
    Ok(rows)
}

#[derive(Serialize)]
struct JsonRow<'a> {
    suite: &'a str,
    check: &'a str,
    trial: u64,
    lhs: Option<f64>,
    rhs: Option<f64>,
    margin: Option<f64>,
    pass: bool,
}

#[derive(Serialize)]
struct JsonSuite<'a> {
    name: &'a str,
    tag: &'a str,
    trials: usize,
    violations: usize,
    worst_margin: f64,
    empirical_constant: f64,
    checks: &'a [CheckSummary],
    rows: Vec<JsonRow<'a>>,
}

/// Non-finite reals become `null`.
pub fn to_json(reports: &[SuiteReport]) -> String {
    let suites: Vec<JsonSuite> = reports
        .iter()
        .map(|s| JsonSuite {
            name: &s.name,
            tag: &s.tag,
            trials: s.trials,
            violations: s.violations,
            worst_margin: s.worst_margin,
            empirical_constant: s.empirical_constant,
            checks: &s.checks,
            rows: s
                .rows
                .iter()
                .map(|r| {
                    let keep = |v: f64| (!r.volatile).then_some(v);
                    JsonRow {
                        suite: &r.suite,
                        check: &r.check,
                        trial: r.trial,
                        lhs: keep(r.lhs),
                        rhs: keep(r.rhs),
                        margin: keep(r.margin),
                        pass: r.pass,
                    }
                })
                .collect(),
        })
        .collect();
    let mut out = serde_json::to_string_pretty(&serde_json::json!({ "suites": suites })).expect("serialisable");
    out.push('\n');
    out
}

/// Human-readable table, one line per suite and per check.
pub fn to_text(reports: &[SuiteReport]) -> String {
    let mut out = String::new();
    for s in reports {
        let status = if s.passed() { "ok" } else { "FAILED" };
        let _ = writeln!(
            out,
            "{:<14} {:<6} trials {:>6}  violations {:>4}  worst margin {:>11.3e}  constant {:>10.4}  {:>8.2?}  [{}]",
            s.name, status, s.trials, s.violations, s.worst_margin, s.empirical_constant, s.runtime, s.tag
        );
        for c in &s.checks {
            let _ = writeln!(
                out,
                "    {:<32} rows {:>6}  violations {:>4}  worst margin {:>11.3e}  constant {:>10.4}",
                c.check, c.trials, c.violations, c.worst_margin, c.empirical_constant
            );
        }
    }
    out
}
