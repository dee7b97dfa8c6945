//! Domain types shared across the attribution pipeline, plus structural
//! validation and weight normalization.
//!
//! All weights are fractions (0.6, never 60); file parsers convert at the
//! boundary. Every type here is immutable after construction and safe to
//! share across threads.

use chrono::{Datelike, NaiveDate};
use std::collections::HashSet;
use std::fmt;
use std::str::FromStr;
use thiserror::Error;

/// Tolerance for sleeve-weight sums (stock + bond + other <= 1 + eps).
pub const SLEEVE_SUM_TOL: f64 = 1e-9;
/// Tolerance for benchmark constituent sums after normalization.
pub const CONSTITUENT_SUM_TOL: f64 = 1e-6;

/// A calendar month, stored as a serial index so month arithmetic is exact.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Month(i32);

impl Month {
    pub fn new(year: i32, month: u32) -> Month {
        assert!((1..=12).contains(&month), "month out of range: {month}");
        Month(year * 12 + month as i32 - 1)
    }

    pub fn from_date(date: NaiveDate) -> Month {
        Month::new(date.year(), date.month())
    }

    pub fn year(self) -> i32 {
        self.0.div_euclid(12)
    }

    pub fn month(self) -> u32 {
        self.0.rem_euclid(12) as u32 + 1
    }

    /// Month shifted by `k` calendar months (negative moves back).
    pub fn offset(self, k: i32) -> Month {
        Month(self.0 + k)
    }

    /// Serial index; consecutive months differ by exactly 1.
    pub fn serial(self) -> i32 {
        self.0
    }

    /// Last calendar day of the month (the usual report date).
    pub fn end_date(self) -> NaiveDate {
        let next = self.offset(1);
        NaiveDate::from_ymd_opt(next.year(), next.month(), 1)
            .unwrap()
            .pred_opt()
            .unwrap()
    }
}

impl fmt::Display for Month {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:04}-{:02}", self.year(), self.month())
    }
}

#[derive(Debug, Error, PartialEq, Eq)]
#[error("invalid month string `{0}`, expected YYYY-MM")]
pub struct ParseMonthError(String);

impl FromStr for Month {
    type Err = ParseMonthError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let bad = || ParseMonthError(s.to_string());
        let (y, m) = s.split_once('-').ok_or_else(bad)?;
        let year: i32 = y.parse().map_err(|_| bad())?;
        let month: u32 = m.parse().map_err(|_| bad())?;
        if !(1..=12).contains(&month) {
            return Err(bad());
        }
        Ok(Month::new(year, month))
    }
}

/// Which side of a report date a return window covers.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Direction {
    Before,
    After,
}

impl fmt::Display for Direction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Direction::Before => write!(f, "before"),
            Direction::After => write!(f, "after"),
        }
    }
}

impl FromStr for Direction {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "before" => Ok(Direction::Before),
            "after" => Ok(Direction::After),
            other => Err(format!("unknown direction `{other}`")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReportKind {
    Semiannual,
    Quarterly,
}

impl fmt::Display for ReportKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ReportKind::Semiannual => write!(f, "semiannual"),
            ReportKind::Quarterly => write!(f, "quarterly"),
        }
    }
}

/// One reported position: a stock and its weight as a fraction of net assets.
/// `value` is the optional invested capital used only by holdings summaries.
#[derive(Debug, Clone, PartialEq)]
pub struct Position {
    pub stock_id: String,
    pub weight: f64,
    pub value: Option<f64>,
}

impl Position {
    pub fn new(stock_id: impl Into<String>, weight: f64) -> Position {
        Position {
            stock_id: stock_id.into(),
            weight,
            value: None,
        }
    }
}

/// Asset-class split of a portfolio. `other` is the residual sleeve
/// (1 - stock - bond) and never enters the asset-allocation measure.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SleeveWeights {
    pub stock: f64,
    pub bond: f64,
    pub other: f64,
}

impl SleeveWeights {
    pub fn from_stock_bond(stock: f64, bond: f64) -> SleeveWeights {
        SleeveWeights {
            stock,
            bond,
            other: (1.0 - stock - bond).max(0.0),
        }
    }

    pub fn sum(&self) -> f64 {
        self.stock + self.bond + self.other
    }
}

/// One fund's reported positions and asset split at a report date.
#[derive(Debug, Clone, PartialEq)]
pub struct HoldingsSnapshot {
    pub fund_id: String,
    pub report_date: NaiveDate,
    pub report_kind: ReportKind,
    pub positions: Vec<Position>,
    /// Missing when the source row carried no sleeve columns.
    pub asset_weights: Option<SleeveWeights>,
}

/// Benchmark constituents and asset split at an as-of date.
#[derive(Debug, Clone, PartialEq)]
pub struct BenchmarkDefinition {
    pub benchmark_id: String,
    pub as_of: NaiveDate,
    pub constituents: Vec<Position>,
    pub asset_weights: Option<SleeveWeights>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Severity {
    Error,
    Warning,
}

impl fmt::Display for Severity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Severity::Error => write!(f, "error"),
            Severity::Warning => write!(f, "warning"),
        }
    }
}

/// Short machine-readable issue codes used throughout validation output.
pub mod codes {
    pub const DUP_STOCK: &str = "DUP_STOCK";
    pub const WEIGHT_RANGE: &str = "WEIGHT_RANGE";
    pub const SLEEVE_SUM: &str = "SLEEVE_SUM";
    pub const EMPTY_POSITIONS: &str = "EMPTY_POSITIONS";
    pub const RENORM: &str = "RENORM";
    pub const CSV_SYNTAX: &str = "CSV_SYNTAX";
    pub const STALE_PRICE: &str = "STALE_PRICE";
    pub const MISSING_PRICE: &str = "MISSING_PRICE";
    pub const MISSING_NAV: &str = "MISSING_NAV";
    pub const NO_BENCHMARK: &str = "NO_BENCHMARK";
    pub const SHORT_SERIES: &str = "SHORT_SERIES";
    pub const ZERO_DENOMINATOR: &str = "ZERO_DENOMINATOR";
    pub const EMPTY_SLEEVE: &str = "EMPTY_SLEEVE";
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Issue {
    pub severity: Severity,
    pub code: String,
    pub message: String,
}

impl Issue {
    pub fn error(code: &str, message: impl Into<String>) -> Issue {
        Issue {
            severity: Severity::Error,
            code: code.to_string(),
            message: message.into(),
        }
    }

    pub fn warning(code: &str, message: impl Into<String>) -> Issue {
        Issue {
            severity: Severity::Warning,
            code: code.to_string(),
            message: message.into(),
        }
    }
}

/// Collected diagnostics for one subject (a snapshot, a file, a fund).
/// A subject with at least one error issue must be excluded downstream.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ValidationReport {
    pub subject_id: String,
    pub issues: Vec<Issue>,
}

impl ValidationReport {
    pub fn new(subject_id: impl Into<String>) -> ValidationReport {
        ValidationReport {
            subject_id: subject_id.into(),
            issues: Vec::new(),
        }
    }

    pub fn push(&mut self, issue: Issue) {
        self.issues.push(issue);
    }

    pub fn has_errors(&self) -> bool {
        self.issues.iter().any(|i| i.severity == Severity::Error)
    }

    pub fn error_count(&self) -> usize {
        self.issues
            .iter()
            .filter(|i| i.severity == Severity::Error)
            .count()
    }

    pub fn merge(&mut self, other: ValidationReport) {
        self.issues.extend(other.issues);
    }
}

#[derive(Debug, Error, PartialEq)]
pub enum ModelError {
    #[error("EMPTY_SLEEVE: snapshot for {0} has zero total position weight")]
    EmptySleeve(String),
}

/// Checks every structural invariant of a snapshot and returns the violations.
///
/// Codes: `DUP_STOCK`, `WEIGHT_RANGE`, `SLEEVE_SUM`, and `EMPTY_POSITIONS`
/// (the latter an error only for semiannual snapshots, which must carry
/// positions).
pub fn validate_snapshot(snapshot: &HoldingsSnapshot) -> ValidationReport {
    let mut report = ValidationReport::new(format!(
        "{}@{}",
        snapshot.fund_id, snapshot.report_date
    ));

    let mut seen = HashSet::new();
    for pos in &snapshot.positions {
        if !seen.insert(pos.stock_id.as_str()) {
            report.push(Issue::error(
                codes::DUP_STOCK,
                format!("stock {} listed more than once", pos.stock_id),
            ));
        }
        if !(0.0..=1.0).contains(&pos.weight) || !pos.weight.is_finite() {
            report.push(Issue::error(
                codes::WEIGHT_RANGE,
                format!("stock {} weight {} outside [0, 1]", pos.stock_id, pos.weight),
            ));
        }
    }

    if let Some(sleeves) = &snapshot.asset_weights {
        let components = [
            ("stock", sleeves.stock),
            ("bond", sleeves.bond),
            ("other", sleeves.other),
        ];
        for (name, w) in components {
            if !(0.0..=1.0).contains(&w) || !w.is_finite() {
                report.push(Issue::error(
                    codes::SLEEVE_SUM,
                    format!("{name} sleeve weight {w} outside [0, 1]"),
                ));
            }
        }
        if sleeves.sum() > 1.0 + SLEEVE_SUM_TOL {
            report.push(Issue::error(
                codes::SLEEVE_SUM,
                format!("sleeve weights sum to {} > 1", sleeves.sum()),
            ));
        }
    }

    if snapshot.report_kind == ReportKind::Semiannual && snapshot.positions.is_empty() {
        report.push(Issue::error(
            codes::EMPTY_POSITIONS,
            "semiannual snapshot carries no positions",
        ));
    }

    report
}

/// Rescales position weights to sum to 1, turning net-asset fractions into
/// within-sleeve fractions. Asset weights are untouched. Idempotent: a
/// sleeve already normalized to rounding precision is returned unchanged.
pub fn normalize_stock_sleeve(snapshot: &HoldingsSnapshot) -> Result<HoldingsSnapshot, ModelError> {
    let total: f64 = snapshot.positions.iter().map(|p| p.weight).sum();
    if total <= 0.0 {
        return Err(ModelError::EmptySleeve(snapshot.fund_id.clone()));
    }
    if (total - 1.0).abs() < 1e-12 {
        return Ok(snapshot.clone());
    }
    let positions = snapshot
        .positions
        .iter()
        .map(|p| Position {
            weight: p.weight / total,
            ..p.clone()
        })
        .collect();
    Ok(HoldingsSnapshot {
        positions,
        ..snapshot.clone()
    })
}
