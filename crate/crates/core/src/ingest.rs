//! CSV ingestion for the input file kinds.
//!
//! All files are UTF-8 CSV with a header row, `.` decimals, ISO-8601 dates
//! (`YYYY-MM-DD`) and months (`YYYY-MM`). Parsing is total: malformed rows
//! become error issues keyed by line number and the affected subject is
//! excluded; parsing never aborts mid-file. Only stream-level failures
//! (unreadable input, unordered series, broken month grid) are hard errors.
//!
//! Grammars:
//!
//! ```text
//! holdings.csv   fund_id,report_date,report_kind,stock_id,weight,stock_sleeve,bond_sleeve[,value]
//! benchmark.csv  benchmark_id,as_of,stock_id,weight,stock_sleeve,bond_sleeve
//! prices.csv     stock_id,month,close
//! industries.csv stock_id,industry_id
//! factors.csv    month,market_excess,smb,hml,risk_free
//! nav.csv        fund_id,month,nav_return
//! index.csv      benchmark_id,month,index_return
//! funds.csv      fund_id,benchmark_id
//! ```
//!
//! A holdings row with an empty `stock_id` carries sleeve weights only
//! (how quarterly asset-allocation reports are written).

use crate::model::{
    codes, BenchmarkDefinition, HoldingsSnapshot, Issue, Month, Position, ReportKind,
    SleeveWeights, ValidationReport,
};
use crate::panel::{FactorRow, MarketPanel, PanelError};
use chrono::NaiveDate;
use std::collections::{BTreeMap, BTreeSet};
use std::io::Read;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum IngestError {
    #[error("IO_READ: {0}")]
    Io(#[from] std::io::Error),
    #[error("IO_READ: {0}")]
    Stream(#[from] csv::Error),
    #[error("{file}: missing required column `{column}`")]
    MissingColumn { file: &'static str, column: &'static str },
    #[error("NONMONOTONIC_DATES: {0}")]
    NonMonotonicDates(String),
    #[error("market series `{id}` is missing {month}; a complete series is required")]
    IncompleteMarketSeries { id: String, month: Month },
    #[error(transparent)]
    Panel(#[from] PanelError),
}

/// Knobs for panel construction.
#[derive(Debug, Clone)]
pub struct PanelOptions {
    /// Maximum consecutive months a suspended stock's last price is carried
    /// forward (return 0); beyond it, cells are marked missing.
    pub gap_limit: usize,
    /// Index id (in index.csv) supplying the stock-market return series.
    /// When absent, the series is `market_excess + risk_free` from factors.
    pub stock_index: Option<String>,
    /// Index id supplying the bond-market return series. When absent the
    /// panel has no bond series and asset allocation cannot be computed.
    pub bond_index: Option<String>,
}

impl Default for PanelOptions {
    fn default() -> Self {
        PanelOptions {
            gap_limit: 2,
            stock_index: None,
            bond_index: None,
        }
    }
}

fn reader<R: Read>(input: R) -> csv::Reader<R> {
    csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(input)
}

struct Columns {
    index: BTreeMap<String, usize>,
}

impl Columns {
    fn resolve<R: Read>(
        rd: &mut csv::Reader<R>,
        file: &'static str,
        required: &[&'static str],
    ) -> Result<Columns, IngestError> {
        let headers = rd.headers()?.clone();
        let index: BTreeMap<String, usize> = headers
            .iter()
            .enumerate()
            .map(|(i, h)| (h.to_string(), i))
            .collect();
        for column in required {
            if !index.contains_key(*column) {
                return Err(IngestError::MissingColumn { file, column });
            }
        }
        Ok(Columns { index })
    }

    fn get<'r>(&self, record: &'r csv::StringRecord, name: &str) -> &'r str {
        self.index
            .get(name)
            .and_then(|i| record.get(*i))
            .unwrap_or("")
    }
}

fn line_of(record: &csv::StringRecord) -> u64 {
    record.position().map(|p| p.line()).unwrap_or(0)
}

fn parse_f64(s: &str) -> Option<f64> {
    let v: f64 = s.parse().ok()?;
    v.is_finite().then_some(v)
}

fn parse_date(s: &str) -> Option<NaiveDate> {
    NaiveDate::parse_from_str(s, "%Y-%m-%d").ok()
}

fn syntax_issue(file: &str, line: u64, what: impl std::fmt::Display) -> Issue {
    Issue::error(codes::CSV_SYNTAX, format!("{file}:{line}: {what}"))
}

// ---------------------------------------------------------------------------
// holdings.csv
// ---------------------------------------------------------------------------

struct SnapshotAccumulator {
    kind: ReportKind,
    sleeves: Option<SleeveWeights>,
    positions: Vec<Position>,
    poisoned: bool,
}

/// Parses fund holdings into one snapshot per (fund, report date).
///
/// Snapshots violating any structural invariant are excluded and their
/// issues reported; the rest are returned sorted by fund and date.
pub fn parse_holdings_csv<R: Read>(
    input: R,
) -> Result<(Vec<HoldingsSnapshot>, ValidationReport), IngestError> {
    const FILE: &str = "holdings.csv";
    let mut rd = reader(input);
    let cols = Columns::resolve(
        &mut rd,
        FILE,
        &[
            "fund_id",
            "report_date",
            "report_kind",
            "stock_id",
            "weight",
            "stock_sleeve",
            "bond_sleeve",
        ],
    )?;
    let has_value = cols.index.contains_key("value");

    let mut report = ValidationReport::new(FILE);
    let mut groups: BTreeMap<(String, NaiveDate), SnapshotAccumulator> = BTreeMap::new();

    for row in rd.records() {
        let record = match row {
            Ok(r) => r,
            Err(e) => {
                report.push(syntax_issue(FILE, 0, e));
                continue;
            }
        };
        let line = line_of(&record);
        let fund_id = cols.get(&record, "fund_id").to_string();
        let date = parse_date(cols.get(&record, "report_date"));
        if fund_id.is_empty() || date.is_none() {
            report.push(syntax_issue(FILE, line, "unreadable fund_id or report_date"));
            continue;
        }
        let key = (fund_id, date.unwrap());

        let kind = match cols.get(&record, "report_kind") {
            "semiannual" => ReportKind::Semiannual,
            "quarterly" => ReportKind::Quarterly,
            other => {
                report.push(syntax_issue(FILE, line, format!("unknown report_kind `{other}`")));
                poison(&mut groups, key);
                continue;
            }
        };

        let sleeves = match read_sleeves(&cols, &record) {
            Ok(s) => s,
            Err(msg) => {
                report.push(syntax_issue(FILE, line, msg));
                poison(&mut groups, key);
                continue;
            }
        };

        let entry = groups.entry(key.clone()).or_insert(SnapshotAccumulator {
            kind,
            sleeves,
            positions: Vec::new(),
            poisoned: false,
        });
        if entry.kind != kind {
            report.push(syntax_issue(
                FILE,
                line,
                format!("report_kind conflicts with earlier rows of {}@{}", key.0, key.1),
            ));
            entry.poisoned = true;
        }
        match (&entry.sleeves, &sleeves) {
            (Some(a), Some(b)) if !sleeves_match(a, b) => {
                report.push(syntax_issue(
                    FILE,
                    line,
                    format!("sleeve weights conflict with earlier rows of {}@{}", key.0, key.1),
                ));
                entry.poisoned = true;
            }
            (None, Some(_)) => entry.sleeves = sleeves,
            _ => {}
        }

        let stock_id = cols.get(&record, "stock_id");
        if stock_id.is_empty() {
            continue; // sleeve-only row
        }
        let weight = match parse_f64(cols.get(&record, "weight")) {
            Some(w) => w,
            None => {
                report.push(syntax_issue(FILE, line, "unreadable position weight"));
                entry.poisoned = true;
                continue;
            }
        };
        let value = if has_value {
            let raw = cols.get(&record, "value");
            if raw.is_empty() { None } else { parse_f64(raw) }
        } else {
            None
        };
        entry.positions.push(Position {
            stock_id: stock_id.to_string(),
            weight,
            value,
        });
    }

    let mut snapshots = Vec::new();
    for ((fund_id, report_date), acc) in groups {
        let snapshot = HoldingsSnapshot {
            fund_id,
            report_date,
            report_kind: acc.kind,
            positions: acc.positions,
            asset_weights: acc.sleeves,
        };
        let validation = crate::model::validate_snapshot(&snapshot);
        let keep = !acc.poisoned && !validation.has_errors();
        report.merge(validation);
        if acc.poisoned {
            report.push(Issue::error(
                codes::CSV_SYNTAX,
                format!(
                    "snapshot {}@{} excluded due to malformed rows",
                    snapshot.fund_id, snapshot.report_date
                ),
            ));
        }
        if keep {
            snapshots.push(snapshot);
        }
    }
    snapshots.sort_by(|a, b| (a.fund_id.as_str(), a.report_date).cmp(&(b.fund_id.as_str(), b.report_date)));
    Ok((snapshots, report))
}

fn poison(groups: &mut BTreeMap<(String, NaiveDate), SnapshotAccumulator>, key: (String, NaiveDate)) {
    if let Some(entry) = groups.get_mut(&key) {
        entry.poisoned = true;
    } else {
        groups.insert(
            key,
            SnapshotAccumulator {
                kind: ReportKind::Semiannual,
                sleeves: None,
                positions: Vec::new(),
                poisoned: true,
            },
        );
    }
}

fn sleeves_match(a: &SleeveWeights, b: &SleeveWeights) -> bool {
    (a.stock - b.stock).abs() < 1e-12 && (a.bond - b.bond).abs() < 1e-12
}

fn read_sleeves(cols: &Columns, record: &csv::StringRecord) -> Result<Option<SleeveWeights>, String> {
    let stock = cols.get(record, "stock_sleeve");
    let bond = cols.get(record, "bond_sleeve");
    match (stock.is_empty(), bond.is_empty()) {
        (true, true) => Ok(None),
        (false, false) => {
            let s = parse_f64(stock).ok_or("unreadable stock_sleeve")?;
            let b = parse_f64(bond).ok_or("unreadable bond_sleeve")?;
            Ok(Some(SleeveWeights::from_stock_bond(s, b)))
        }
        _ => Err("stock_sleeve and bond_sleeve must both be present or both empty".into()),
    }
}

// ---------------------------------------------------------------------------
// benchmark.csv
// ---------------------------------------------------------------------------

/// Parses benchmark constituent files. Constituent weights are renormalized
/// to sum to 1; a raw sum off by more than 1e-4 earns a RENORM warning.
pub fn parse_benchmark_csv<R: Read>(
    input: R,
) -> Result<(Vec<BenchmarkDefinition>, ValidationReport), IngestError> {
    const FILE: &str = "benchmark.csv";
    let mut rd = reader(input);
    let cols = Columns::resolve(
        &mut rd,
        FILE,
        &["benchmark_id", "as_of", "stock_id", "weight", "stock_sleeve", "bond_sleeve"],
    )?;

    struct Acc {
        sleeves: Option<SleeveWeights>,
        constituents: Vec<Position>,
        poisoned: bool,
    }
    let mut report = ValidationReport::new(FILE);
    let mut groups: BTreeMap<(String, NaiveDate), Acc> = BTreeMap::new();

    for row in rd.records() {
        let record = match row {
            Ok(r) => r,
            Err(e) => {
                report.push(syntax_issue(FILE, 0, e));
                continue;
            }
        };
        let line = line_of(&record);
        let benchmark_id = cols.get(&record, "benchmark_id").to_string();
        let as_of = parse_date(cols.get(&record, "as_of"));
        if benchmark_id.is_empty() || as_of.is_none() {
            report.push(syntax_issue(FILE, line, "unreadable benchmark_id or as_of"));
            continue;
        }
        let key = (benchmark_id, as_of.unwrap());
        let sleeves = match read_sleeves(&cols, &record) {
            Ok(s) => s,
            Err(msg) => {
                report.push(syntax_issue(FILE, line, msg));
                groups.entry(key).or_insert(Acc { sleeves: None, constituents: Vec::new(), poisoned: true }).poisoned = true;
                continue;
            }
        };
        let entry = groups.entry(key.clone()).or_insert(Acc {
            sleeves,
            constituents: Vec::new(),
            poisoned: false,
        });
        if entry.sleeves.is_none() {
            entry.sleeves = sleeves;
        }

        let stock_id = cols.get(&record, "stock_id");
        if stock_id.is_empty() {
            continue;
        }
        match parse_f64(cols.get(&record, "weight")) {
            Some(w) if (0.0..=1.0).contains(&w) => {
                if entry.constituents.iter().any(|p| p.stock_id == stock_id) {
                    report.push(Issue::error(
                        codes::DUP_STOCK,
                        format!("{FILE}:{line}: duplicate constituent {stock_id} in {}@{}", key.0, key.1),
                    ));
                    entry.poisoned = true;
                } else {
                    entry.constituents.push(Position::new(stock_id, w));
                }
            }
            Some(w) => {
                report.push(Issue::error(
                    codes::WEIGHT_RANGE,
                    format!("{FILE}:{line}: constituent weight {w} outside [0, 1]"),
                ));
                entry.poisoned = true;
            }
            None => {
                report.push(syntax_issue(FILE, line, "unreadable constituent weight"));
                entry.poisoned = true;
            }
        }
    }

    let mut definitions = Vec::new();
    for ((benchmark_id, as_of), mut acc) in groups {
        if acc.poisoned {
            report.push(Issue::error(
                codes::CSV_SYNTAX,
                format!("benchmark {benchmark_id}@{as_of} excluded due to malformed rows"),
            ));
            continue;
        }
        if !acc.constituents.is_empty() {
            let raw_sum: f64 = acc.constituents.iter().map(|p| p.weight).sum();
            if raw_sum <= 0.0 {
                report.push(Issue::error(
                    codes::EMPTY_SLEEVE,
                    format!("benchmark {benchmark_id}@{as_of} has zero total constituent weight"),
                ));
                continue;
            }
            if (raw_sum - 1.0).abs() > 1e-4 {
                report.push(Issue::warning(
                    codes::RENORM,
                    format!(
                        "benchmark {benchmark_id}@{as_of} weights sum to {raw_sum}; renormalized to 1"
                    ),
                ));
            }
            // leave already-normalized weights untouched so a write/parse
            // round trip is the identity
            if (raw_sum - 1.0).abs() >= 1e-12 {
                for p in &mut acc.constituents {
                    p.weight /= raw_sum;
                }
            }
        }
        definitions.push(BenchmarkDefinition {
            benchmark_id,
            as_of,
            constituents: acc.constituents,
            asset_weights: acc.sleeves,
        });
    }
    definitions
        .sort_by(|a, b| (a.benchmark_id.as_str(), a.as_of).cmp(&(b.benchmark_id.as_str(), b.as_of)));
    Ok((definitions, report))
}

// ---------------------------------------------------------------------------
// funds.csv
// ---------------------------------------------------------------------------

/// Parses the fund-to-benchmark mapping.
pub fn parse_fund_map<R: Read>(
    input: R,
) -> Result<(BTreeMap<String, String>, ValidationReport), IngestError> {
    const FILE: &str = "funds.csv";
    let mut rd = reader(input);
    let cols = Columns::resolve(&mut rd, FILE, &["fund_id", "benchmark_id"])?;
    let mut report = ValidationReport::new(FILE);
    let mut map = BTreeMap::new();
    for row in rd.records() {
        let record = match row {
            Ok(r) => r,
            Err(e) => {
                report.push(syntax_issue(FILE, 0, e));
                continue;
            }
        };
        let line = line_of(&record);
        let fund = cols.get(&record, "fund_id").to_string();
        let bench = cols.get(&record, "benchmark_id").to_string();
        if fund.is_empty() || bench.is_empty() {
            report.push(syntax_issue(FILE, line, "empty fund_id or benchmark_id"));
            continue;
        }
        if let Some(existing) = map.get(&fund) {
            if *existing != bench {
                report.push(Issue::error(
                    codes::CSV_SYNTAX,
                    format!("{FILE}:{line}: fund {fund} mapped to multiple benchmarks"),
                ));
            }
        } else {
            map.insert(fund, bench);
        }
    }
    Ok((map, report))
}

// ---------------------------------------------------------------------------
// market panel (prices + industries + factors + nav + index)
// ---------------------------------------------------------------------------

type DatedSeries = BTreeMap<String, Vec<(Month, f64)>>;

fn parse_keyed_series<R: Read>(
    input: R,
    file: &'static str,
    key_col: &'static str,
    value_col: &'static str,
    report: &mut ValidationReport,
) -> Result<DatedSeries, IngestError> {
    let mut rd = reader(input);
    let cols = Columns::resolve(&mut rd, file, &[key_col, "month", value_col])?;
    let mut out: DatedSeries = BTreeMap::new();
    for row in rd.records() {
        let record = match row {
            Ok(r) => r,
            Err(e) => {
                report.push(syntax_issue(file, 0, e));
                continue;
            }
        };
        let line = line_of(&record);
        let key = cols.get(&record, key_col).to_string();
        let month: Result<Month, _> = cols.get(&record, "month").parse();
        let value = parse_f64(cols.get(&record, value_col));
        match (key.is_empty(), month, value) {
            (false, Ok(m), Some(v)) => out.entry(key).or_default().push((m, v)),
            _ => report.push(syntax_issue(file, line, "unreadable row")),
        }
    }
    for (key, series) in &out {
        for pair in series.windows(2) {
            if pair[1].0 <= pair[0].0 {
                return Err(IngestError::NonMonotonicDates(format!(
                    "{file}: series {key} not strictly increasing at {}",
                    pair[1].0
                )));
            }
        }
    }
    Ok(out)
}

/// Builds the market panel from its five source files.
///
/// The month grid comes from factors.csv and must be contiguous. Monthly
/// stock returns are close-to-close; a stock suspended for at most
/// `gap_limit` months has its last price carried forward (return 0), and
/// longer outages leave cells missing with a STALE_PRICE warning.
pub fn parse_market_panel<R1, R2, R3, R4, R5>(
    prices: R1,
    industries: R2,
    factors: R3,
    nav: R4,
    index: R5,
    options: &PanelOptions,
) -> Result<(MarketPanel, ValidationReport), IngestError>
where
    R1: Read,
    R2: Read,
    R3: Read,
    R4: Read,
    R5: Read,
{
    let mut report = ValidationReport::new("market-panel");

    // factors define the grid
    let (months, factor_rows) = {
        const FILE: &str = "factors.csv";
        let mut rd = reader(factors);
        let cols = Columns::resolve(
            &mut rd,
            FILE,
            &["month", "market_excess", "smb", "hml", "risk_free"],
        )?;
        let mut rows: Vec<(Month, FactorRow)> = Vec::new();
        for row in rd.records() {
            let record = match row {
                Ok(r) => r,
                Err(e) => {
                    report.push(syntax_issue(FILE, 0, e));
                    continue;
                }
            };
            let line = line_of(&record);
            let month: Result<Month, _> = cols.get(&record, "month").parse();
            let fields = [
                parse_f64(cols.get(&record, "market_excess")),
                parse_f64(cols.get(&record, "smb")),
                parse_f64(cols.get(&record, "hml")),
                parse_f64(cols.get(&record, "risk_free")),
            ];
            match (month, fields) {
                (Ok(m), [Some(mx), Some(smb), Some(hml), Some(rf)]) => rows.push((
                    m,
                    FactorRow {
                        market_excess: mx,
                        smb,
                        hml,
                        risk_free: rf,
                    },
                )),
                _ => report.push(syntax_issue(FILE, line, "unreadable factor row")),
            }
        }
        for pair in rows.windows(2) {
            if pair[1].0 <= pair[0].0 {
                return Err(IngestError::NonMonotonicDates(format!(
                    "{FILE}: months not strictly increasing at {}",
                    pair[1].0
                )));
            }
        }
        let months: Vec<Month> = rows.iter().map(|(m, _)| *m).collect();
        let factor_rows: Vec<FactorRow> = rows.into_iter().map(|(_, f)| f).collect();
        (months, factor_rows)
    };
    if months.is_empty() {
        return Err(PanelError::Empty.into());
    }
    let grid_start = months[0];
    let grid_end = *months.last().unwrap();
    let grid_len = months.len();
    let index_of = |m: Month| -> Option<usize> {
        let off = m.serial() - grid_start.serial();
        (off >= 0 && (off as usize) < grid_len).then_some(off as usize)
    };

    // industries
    let industry_of = {
        const FILE: &str = "industries.csv";
        let mut rd = reader(industries);
        let cols = Columns::resolve(&mut rd, FILE, &["stock_id", "industry_id"])?;
        let mut map: BTreeMap<String, String> = BTreeMap::new();
        for row in rd.records() {
            let record = match row {
                Ok(r) => r,
                Err(e) => {
                    report.push(syntax_issue(FILE, 0, e));
                    continue;
                }
            };
            let line = line_of(&record);
            let stock = cols.get(&record, "stock_id").to_string();
            let industry = cols.get(&record, "industry_id").to_string();
            if stock.is_empty() || industry.is_empty() {
                report.push(syntax_issue(FILE, line, "empty stock_id or industry_id"));
                continue;
            }
            if let Some(existing) = map.get(&stock) {
                if *existing != industry {
                    report.push(Issue::error(
                        codes::DUP_STOCK,
                        format!("{FILE}:{line}: stock {stock} assigned to multiple industries"),
                    ));
                }
            } else {
                map.insert(stock, industry);
            }
        }
        map
    };

    // prices -> monthly returns with carry-forward
    let stock_returns = {
        let price_series = parse_keyed_series(prices, "prices.csv", "stock_id", "close", &mut report)?;
        let mut out: BTreeMap<String, Vec<Option<f64>>> = BTreeMap::new();
        for (stock_id, observed) in price_series {
            let mut cells = vec![None; grid_len];
            let mut bad = false;
            for (m, p) in &observed {
                if *p <= 0.0 {
                    report.push(Issue::error(
                        codes::CSV_SYNTAX,
                        format!("prices.csv: stock {stock_id} has non-positive close {p} at {m}"),
                    ));
                    bad = true;
                }
            }
            if bad {
                continue;
            }
            let by_month: BTreeMap<Month, f64> = observed.into_iter().collect();
            let first = *by_month.keys().next().unwrap();
            let mut prev: Option<f64> = Some(by_month[&first]);
            let mut run = 0usize;
            let mut m = first.offset(1);
            while m <= grid_end {
                let ret = match by_month.get(&m) {
                    Some(p) => {
                        let r = prev.map(|q| p / q - 1.0);
                        prev = Some(*p);
                        run = 0;
                        r
                    }
                    None => {
                        run += 1;
                        if run <= options.gap_limit && prev.is_some() {
                            Some(0.0)
                        } else {
                            if run == options.gap_limit + 1 && prev.is_some() {
                                report.push(Issue::warning(
                                    codes::STALE_PRICE,
                                    format!(
                                        "stock {stock_id} price stale beyond {} months from {m}; cells marked missing",
                                        options.gap_limit
                                    ),
                                ));
                            }
                            prev = None;
                            None
                        }
                    }
                };
                if let Some(idx) = index_of(m) {
                    cells[idx] = ret;
                }
                m = m.offset(1);
            }
            out.insert(stock_id, cells);
        }
        out
    };

    // nav + index return series
    let lay_on_grid = |series: DatedSeries, file: &str, report: &mut ValidationReport| {
        let mut out: BTreeMap<String, Vec<Option<f64>>> = BTreeMap::new();
        let mut dropped = 0usize;
        for (key, rows) in series {
            let cells = out.entry(key).or_insert_with(|| vec![None; grid_len]);
            for (m, v) in rows {
                match index_of(m) {
                    Some(idx) => cells[idx] = Some(v),
                    None => dropped += 1,
                }
            }
        }
        if dropped > 0 {
            report.push(Issue::warning(
                codes::CSV_SYNTAX,
                format!("{file}: {dropped} rows outside the factor month grid were ignored"),
            ));
        }
        out
    };
    let nav_series = parse_keyed_series(nav, "nav.csv", "fund_id", "nav_return", &mut report)?;
    let nav_returns = lay_on_grid(nav_series, "nav.csv", &mut report);
    let index_series =
        parse_keyed_series(index, "index.csv", "benchmark_id", "index_return", &mut report)?;
    let index_returns = lay_on_grid(index_series, "index.csv", &mut report);

    let complete_series = |id: &str| -> Result<Vec<f64>, IngestError> {
        let cells = index_returns
            .get(id)
            .ok_or_else(|| IngestError::IncompleteMarketSeries {
                id: id.to_string(),
                month: grid_start,
            })?;
        let mut out = Vec::with_capacity(grid_len);
        for (i, cell) in cells.iter().enumerate() {
            match cell {
                Some(v) => out.push(*v),
                None => {
                    return Err(IngestError::IncompleteMarketSeries {
                        id: id.to_string(),
                        month: months[i],
                    })
                }
            }
        }
        Ok(out)
    };
    let stock_market = match &options.stock_index {
        Some(id) => complete_series(id)?,
        None => factor_rows
            .iter()
            .map(|f| f.market_excess + f.risk_free)
            .collect(),
    };
    let bond_market = match &options.bond_index {
        Some(id) => Some(complete_series(id)?),
        None => None,
    };

    let panel = MarketPanel::new(
        months,
        stock_returns,
        industry_of,
        stock_market,
        bond_market,
        factor_rows,
        nav_returns,
        index_returns,
    )?;
    Ok((panel, report))
}

// ---------------------------------------------------------------------------
// panel serialization (round-trip support)
// ---------------------------------------------------------------------------

/// The market-panel file set rendered back to CSV text.
#[derive(Debug, Clone, PartialEq)]
pub struct PanelCsvs {
    pub prices: String,
    pub industries: String,
    pub factors: String,
    pub nav: String,
    pub index: String,
}

/// Renders a panel back to its source grammars. Stock prices are rebuilt as
/// normalized chains (base 1 one month before each run of known returns), so
/// reparsed returns agree with the panel to floating-point rounding.
pub fn panel_to_csvs(panel: &MarketPanel) -> PanelCsvs {
    let months = panel.months();
    let mut prices = String::from("stock_id,month,close\n");
    let stock_ids: BTreeSet<String> = panel.stock_ids().map(|s| s.to_string()).collect();
    for stock in &stock_ids {
        let mut chain: Option<f64> = None;
        for month in months {
            match panel.stock_return(stock, *month) {
                Some(r) => {
                    let price = match chain {
                        Some(p) => p * (1.0 + r),
                        None => {
                            prices.push_str(&format!("{stock},{},{}\n", month.offset(-1), 1.0));
                            1.0 + r
                        }
                    };
                    prices.push_str(&format!("{stock},{month},{price}\n"));
                    chain = Some(price);
                }
                None => chain = None,
            }
        }
    }

    let mut industries = String::from("stock_id,industry_id\n");
    for stock in &stock_ids {
        if let Some(ind) = panel.industry_of(stock) {
            industries.push_str(&format!("{stock},{ind}\n"));
        }
    }

    let mut factors = String::from("month,market_excess,smb,hml,risk_free\n");
    for (month, row) in months.iter().zip(panel.factors()) {
        factors.push_str(&format!(
            "{month},{},{},{},{}\n",
            row.market_excess, row.smb, row.hml, row.risk_free
        ));
    }

    let mut nav = String::from("fund_id,month,nav_return\n");
    let fund_ids: BTreeSet<String> = panel.fund_ids().map(|s| s.to_string()).collect();
    for fund in &fund_ids {
        if let Some(series) = panel.nav_series(fund) {
            for (m, v) in series.months.iter().zip(&series.values) {
                nav.push_str(&format!("{fund},{m},{v}\n"));
            }
        }
    }

    let mut index = String::from("benchmark_id,month,index_return\n");
    for id in panel.index_ids() {
        if let Some(series) = panel.index_series(id) {
            for (m, v) in series.months.iter().zip(&series.values) {
                index.push_str(&format!("{id},{m},{v}\n"));
            }
        }
    }

    PanelCsvs {
        prices,
        industries,
        factors,
        nav,
        index,
    }
}
