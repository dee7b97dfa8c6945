//! Holding-validity diagnostic: assumed (buy-and-hold of reported
//! positions) versus actual (compounded NAV) returns per fund and report,
//! with per-report box-plot bands across funds.

use crate::output::{CsvTable, Fingerprint, OutputDir, RunInfo, SkipNote};
use crate::workspace::Workspace;
use anyhow::Result;
use attrib_core::brinson::{holding_validity_diff, BrinsonError, ValidityDiff};
use attrib_core::inference::box_stats;
use attrib_core::model::{Direction, ReportKind};
use chrono::NaiveDate;
use rayon::prelude::*;
use serde::Serialize;
use std::collections::BTreeMap;

pub struct Args {
    pub direction: Direction,
}

#[derive(Serialize)]
struct DiagnoseJson {
    run: RunInfo,
    direction: String,
    n_diffs: usize,
    n_reports: usize,
    n_reports_covering_zero: usize,
    skipped: Vec<SkipNote>,
}

pub fn run(
    ws: &Workspace,
    args: &Args,
    fingerprint: Fingerprint,
    run_info: RunInfo,
    out: &mut OutputDir,
) -> Result<()> {
    let funds = ws.fund_ids();
    let results: Vec<(Vec<ValidityDiff>, Vec<SkipNote>)> = funds
        .par_iter()
        .map(|fund_id| {
            let mut diffs = Vec::new();
            let mut notes = Vec::new();
            for snapshot in ws.snapshots_of(fund_id) {
                if snapshot.report_kind != ReportKind::Semiannual || snapshot.positions.is_empty() {
                    continue;
                }
                match holding_validity_diff(snapshot, &ws.panel, args.direction) {
                    Ok((diff, _)) => diffs.push(diff),
                    Err(BrinsonError::Window(_)) => notes.push(SkipNote::report(
                        fund_id,
                        snapshot.report_date,
                        "window outside the panel",
                    )),
                    Err(e) => {
                        notes.push(SkipNote::report(fund_id, snapshot.report_date, e.to_string()))
                    }
                }
            }
            (diffs, notes)
        })
        .collect();

    let mut diffs = Vec::new();
    let mut skipped = Vec::new();
    for (d, n) in results {
        diffs.extend(d);
        skipped.extend(n);
    }
    diffs.sort_by(|a, b| (a.fund_id.as_str(), a.report_date).cmp(&(b.fund_id.as_str(), b.report_date)));
    skipped.sort();

    let mut diff_table = CsvTable::new(
        "validity_diffs.csv",
        "fund_id,report_date,direction,assumed_return,actual_return,diff,fingerprint",
    );
    let mut by_report: BTreeMap<NaiveDate, Vec<f64>> = BTreeMap::new();
    for diff in &diffs {
        diff_table.row(&[
            diff.fund_id.clone(),
            diff.report_date.to_string(),
            diff.direction.to_string(),
            diff.assumed_return.to_string(),
            diff.actual_return.to_string(),
            diff.diff.to_string(),
            fingerprint.to_string(),
        ]);
        by_report.entry(diff.report_date).or_default().push(diff.diff);
    }
    out.write_table(diff_table)?;

    let mut bands = CsvTable::new(
        "validity_bands.csv",
        "report_date,direction,n_funds,p2_5,p25,p50,p75,p97_5,covers_zero,fingerprint",
    );
    let mut covering = 0usize;
    for (date, sample) in &by_report {
        let stats = box_stats(sample).expect("non-empty per-report sample");
        if stats.covers_zero() {
            covering += 1;
        }
        bands.row(&[
            date.to_string(),
            args.direction.to_string(),
            sample.len().to_string(),
            stats.p2_5.to_string(),
            stats.p25.to_string(),
            stats.p50.to_string(),
            stats.p75.to_string(),
            stats.p97_5.to_string(),
            stats.covers_zero().to_string(),
            fingerprint.to_string(),
        ]);
    }
    out.write_table(bands)?;

    out.write_json(
        "diagnose_summary.json",
        &DiagnoseJson {
            run: run_info,
            direction: args.direction.to_string(),
            n_diffs: diffs.len(),
            n_reports: by_report.len(),
            n_reports_covering_zero: covering,
            skipped,
        },
    )?;
    Ok(())
}
