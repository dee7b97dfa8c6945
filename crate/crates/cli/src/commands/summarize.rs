//! Holdings coverage per report period: fund count, average invested
//! capital when a value column is present, average stock count.

use crate::output::{CsvTable, Fingerprint, OutputDir, RunInfo};
use crate::workspace::Workspace;
use anyhow::Result;
use attrib_core::model::ReportKind;
use chrono::NaiveDate;
use serde::Serialize;
use std::collections::BTreeMap;

#[derive(Serialize)]
struct SummaryJson {
    run: RunInfo,
    rows: Vec<RowJson>,
    #[serde(skip_serializing_if = "Option::is_none")]
    note: Option<String>,
}

#[derive(Serialize)]
struct RowJson {
    report_date: String,
    report_kind: String,
    n_funds: usize,
    avg_stock_count: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    avg_size: Option<f64>,
}

pub fn run(ws: &Workspace, fingerprint: Fingerprint, run_info: RunInfo, out: &mut OutputDir) -> Result<()> {
    struct Acc {
        kind: ReportKind,
        n_funds: usize,
        stock_counts: Vec<usize>,
        sizes: Vec<f64>,
    }
    let mut periods: BTreeMap<NaiveDate, Acc> = BTreeMap::new();
    for snapshot in &ws.snapshots {
        let acc = periods.entry(snapshot.report_date).or_insert(Acc {
            kind: snapshot.report_kind,
            n_funds: 0,
            stock_counts: Vec::new(),
            sizes: Vec::new(),
        });
        acc.n_funds += 1;
        if !snapshot.positions.is_empty() {
            acc.stock_counts.push(snapshot.positions.len());
            let values: Vec<f64> = snapshot.positions.iter().filter_map(|p| p.value).collect();
            if values.len() == snapshot.positions.len() {
                acc.sizes.push(values.iter().sum());
            }
        }
    }

    let mut table = CsvTable::new(
        "holdings_summary.csv",
        "report_date,report_kind,n_funds,avg_stock_count,avg_size,fingerprint",
    );
    let mut rows = Vec::new();
    let mut any_sizes = false;
    for (date, acc) in &periods {
        let avg_stock_count = if acc.stock_counts.is_empty() {
            0.0
        } else {
            acc.stock_counts.iter().sum::<usize>() as f64 / acc.stock_counts.len() as f64
        };
        let avg_size = if acc.sizes.is_empty() {
            None
        } else {
            any_sizes = true;
            Some(acc.sizes.iter().sum::<f64>() / acc.sizes.len() as f64)
        };
        table.row(&[
            date.to_string(),
            acc.kind.to_string(),
            acc.n_funds.to_string(),
            avg_stock_count.to_string(),
            crate::output::fmt_opt(avg_size),
            fingerprint.to_string(),
        ]);
        rows.push(RowJson {
            report_date: date.to_string(),
            report_kind: acc.kind.to_string(),
            n_funds: acc.n_funds,
            avg_stock_count,
            avg_size,
        });
    }
    out.write_table(table)?;
    out.write_json(
        "holdings_summary.json",
        &SummaryJson {
            run: run_info,
            rows,
            note: (!any_sizes)
                .then(|| "no per-position value column supplied; average size omitted".to_string()),
        },
    )?;
    Ok(())
}
