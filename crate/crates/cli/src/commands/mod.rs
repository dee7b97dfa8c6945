//! Command implementations. Per-fund work fans out over a worker pool
//! bounded by `ATTRIB_THREADS`; results are re-sorted by (fund, date) before
//! writing so output bytes never depend on the pool size.

pub mod associate;
pub mod attribute;
pub mod diagnose;
pub mod persistence;
pub mod summarize;
pub mod validate_benchmark;

use crate::output::SkipNote;
use crate::workspace::Workspace;
use attrib_core::brinson::{self, AssetAllocationRecord, AttributionRecord, BrinsonError};
use attrib_core::model::{Direction, ReportKind};
use attrib_core::panel::{resolve_window, WindowSpec};
use chrono::NaiveDate;
use rayon::prelude::*;
use std::collections::BTreeMap;

/// Runs `work` inside a pool sized by `ATTRIB_THREADS` (default: rayon's).
pub fn with_pool<T: Send>(work: impl FnOnce() -> T + Send) -> T {
    let threads = std::env::var("ATTRIB_THREADS")
        .ok()
        .and_then(|s| s.parse::<usize>().ok())
        .filter(|n| *n > 0);
    match threads {
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .expect("worker pool")
            .install(work),
        None => work(),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Measure {
    Selection,
    Allocation,
    Interaction,
    Excess,
    AssetAllocation,
}

impl Measure {
    pub fn code(self) -> &'static str {
        match self {
            Measure::Selection => "ss",
            Measure::Allocation => "ia",
            Measure::Interaction => "it",
            Measure::Excess => "excess",
            Measure::AssetAllocation => "aa",
        }
    }

    pub fn of_record(self, record: &AttributionRecord) -> f64 {
        match self {
            Measure::Selection => record.selection,
            Measure::Allocation => record.allocation,
            Measure::Interaction => record.interaction,
            Measure::Excess => record.excess,
            Measure::AssetAllocation => unreachable!("asset allocation has its own records"),
        }
    }
}

/// Semiannual attribution records for every fund, plus skip notes for
/// reports that could not be computed.
pub fn semiannual_records(
    ws: &Workspace,
    direction: Direction,
) -> (Vec<AttributionRecord>, Vec<SkipNote>) {
    let funds = ws.fund_ids();
    let per_fund: Vec<(Vec<AttributionRecord>, Vec<SkipNote>)> = funds
        .par_iter()
        .map(|fund_id| {
            let mut records = Vec::new();
            let mut notes = Vec::new();
            let Some(bench_id) = ws.benchmark_id_of(fund_id) else {
                notes.push(SkipNote::fund(fund_id, "no benchmark mapping"));
                return (records, notes);
            };
            for snapshot in ws.snapshots_of(fund_id) {
                if snapshot.report_kind != ReportKind::Semiannual {
                    continue;
                }
                let Some(benchmark) = ws.benchmarks.at(bench_id, snapshot.report_date) else {
                    notes.push(SkipNote::report(
                        fund_id,
                        snapshot.report_date,
                        "no benchmark definition at or before the report",
                    ));
                    continue;
                };
                match brinson::attribute(snapshot, benchmark, &ws.panel, direction) {
                    Ok((record, _)) => records.push(record),
                    Err(BrinsonError::Window(_)) => notes.push(SkipNote::report(
                        fund_id,
                        snapshot.report_date,
                        "window outside the panel",
                    )),
                    Err(e) => notes.push(SkipNote::report(fund_id, snapshot.report_date, e.to_string())),
                }
            }
            (records, notes)
        })
        .collect();

    let mut records = Vec::new();
    let mut notes = Vec::new();
    for (r, n) in per_fund {
        records.extend(r);
        notes.extend(n);
    }
    records.sort_by(|a, b| (a.fund_id.as_str(), a.report_date).cmp(&(b.fund_id.as_str(), b.report_date)));
    notes.sort();
    (records, notes)
}

/// Quarterly asset-allocation records over every snapshot carrying sleeves.
pub fn asset_allocation_records(ws: &Workspace) -> (Vec<AssetAllocationRecord>, Vec<SkipNote>) {
    let funds = ws.fund_ids();
    let per_fund: Vec<(Vec<AssetAllocationRecord>, Vec<SkipNote>)> = funds
        .par_iter()
        .map(|fund_id| {
            let mut records = Vec::new();
            let mut notes = Vec::new();
            let Some(bench_id) = ws.benchmark_id_of(fund_id) else {
                notes.push(SkipNote::fund(fund_id, "no benchmark mapping"));
                return (records, notes);
            };
            for snapshot in ws.snapshots_of(fund_id) {
                if snapshot.asset_weights.is_none() {
                    continue;
                }
                let Some(benchmark) = ws.benchmarks.at(bench_id, snapshot.report_date) else {
                    notes.push(SkipNote::report(
                        fund_id,
                        snapshot.report_date,
                        "no benchmark definition at or before the report",
                    ));
                    continue;
                };
                let spec = WindowSpec::quarterly_after(snapshot.report_date);
                let window = match resolve_window(&ws.panel, &spec) {
                    Ok(w) => w,
                    Err(_) => {
                        notes.push(SkipNote::report(
                            fund_id,
                            snapshot.report_date,
                            "window outside the panel",
                        ));
                        continue;
                    }
                };
                match brinson::asset_allocation(snapshot, benchmark, &window) {
                    Ok(record) => records.push(record),
                    Err(e) => notes.push(SkipNote::report(fund_id, snapshot.report_date, e.to_string())),
                }
            }
            (records, notes)
        })
        .collect();

    let mut records = Vec::new();
    let mut notes = Vec::new();
    for (r, n) in per_fund {
        records.extend(r);
        notes.extend(n);
    }
    records.sort_by(|a, b| (a.fund_id.as_str(), a.quarter_date).cmp(&(b.fund_id.as_str(), b.quarter_date)));
    notes.sort();
    (records, notes)
}

/// Dated per-fund values of one measure.
pub type FundSeries = BTreeMap<String, Vec<(NaiveDate, f64)>>;

pub fn measure_series(records: &[AttributionRecord], measure: Measure) -> FundSeries {
    let mut out: FundSeries = BTreeMap::new();
    for record in records {
        out.entry(record.fund_id.clone())
            .or_default()
            .push((record.report_date, measure.of_record(record)));
    }
    out
}

pub fn aa_measure_series(records: &[AssetAllocationRecord]) -> FundSeries {
    let mut out: FundSeries = BTreeMap::new();
    for record in records {
        out.entry(record.fund_id.clone())
            .or_default()
            .push((record.quarter_date, record.value));
    }
    out
}

/// All distinct report dates across funds, sorted.
pub fn report_dates(series: &FundSeries) -> Vec<NaiveDate> {
    let mut dates: Vec<NaiveDate> = series
        .values()
        .flat_map(|v| v.iter().map(|(d, _)| *d))
        .collect();
    dates.sort();
    dates.dedup();
    dates
}

/// Restricts to funds with a value at every report date (the continuous
/// performance sample); everyone else is listed with a reason.
pub fn continuous_sample(
    series: &FundSeries,
    dates: &[NaiveDate],
) -> (BTreeMap<String, Vec<f64>>, Vec<SkipNote>) {
    let mut kept = BTreeMap::new();
    let mut notes = Vec::new();
    for (fund_id, values) in series {
        if values.len() == dates.len() && values.iter().map(|(d, _)| d).eq(dates.iter()) {
            kept.insert(fund_id.clone(), values.iter().map(|(_, v)| *v).collect());
        } else {
            notes.push(SkipNote::fund(
                fund_id,
                format!(
                    "not continuous: {} of {} report periods present",
                    values.len(),
                    dates.len()
                ),
            ));
        }
    }
    (kept, notes)
}

pub fn stars(p_value: f64) -> &'static str {
    if p_value < 0.01 {
        "***"
    } else if p_value < 0.05 {
        "**"
    } else if p_value < 0.1 {
        "*"
    } else {
        ""
    }
}
