//! Per-fund, per-report attribution measures plus cross-sectional
//! positivity summaries and per-report positive-share series.

use super::{
    aa_measure_series, asset_allocation_records, continuous_sample, measure_series, report_dates,
    semiannual_records, FundSeries, Measure,
};
use crate::output::{CsvTable, Fingerprint, OutputDir, RunInfo, SkipNote};
use crate::workspace::Workspace;
use anyhow::Result;
use attrib_core::inference::{cross_section_summary, DfConvention, SummaryRow};
use attrib_core::model::Direction;
use serde::Serialize;
use std::collections::BTreeMap;

#[derive(Serialize)]
struct AttributeJson {
    run: RunInfo,
    summaries: Vec<SummaryJson>,
    n_records: usize,
    n_asset_allocation_records: usize,
    skipped: Vec<SkipNote>,
}

#[derive(Serialize)]
struct SummaryJson {
    measure: String,
    n_funds: usize,
    positive_proportion: f64,
    significantly_positive_proportion: f64,
    significance_level: f64,
}

fn summary_json(row: &SummaryRow, alpha: f64) -> SummaryJson {
    SummaryJson {
        measure: row.measure_tag.clone(),
        n_funds: row.n_funds,
        positive_proportion: row.positive_proportion,
        significantly_positive_proportion: row.significantly_positive_proportion,
        significance_level: alpha,
    }
}

pub struct Args {
    pub direction: Direction,
    pub measures: Vec<Measure>,
    pub df: DfConvention,
    pub alpha: f64,
}

pub fn run(
    ws: &Workspace,
    args: &Args,
    fingerprint: Fingerprint,
    run_info: RunInfo,
    out: &mut OutputDir,
) -> Result<()> {
    let (records, mut skipped) = semiannual_records(ws, args.direction);
    let want_aa = args.measures.contains(&Measure::AssetAllocation);
    let (aa_records, aa_skipped) = if want_aa {
        asset_allocation_records(ws)
    } else {
        (Vec::new(), Vec::new())
    };
    skipped.extend(aa_skipped);
    skipped.sort();
    skipped.dedup();

    // tidy rows: one (fund, report, measure) per line
    let mut table = CsvTable::new(
        "attribution.csv",
        "fund_id,report_date,direction,measure,value,fingerprint",
    );
    let semi_measures: Vec<Measure> = args
        .measures
        .iter()
        .copied()
        .filter(|m| *m != Measure::AssetAllocation)
        .collect();
    for record in &records {
        for measure in &semi_measures {
            table.row(&[
                record.fund_id.clone(),
                record.report_date.to_string(),
                record.direction.to_string(),
                measure.code().to_string(),
                measure.of_record(record).to_string(),
                fingerprint.to_string(),
            ]);
        }
    }
    for record in &aa_records {
        table.row(&[
            record.fund_id.clone(),
            record.quarter_date.to_string(),
            Direction::After.to_string(),
            Measure::AssetAllocation.code().to_string(),
            record.value.to_string(),
            fingerprint.to_string(),
        ]);
    }
    out.write_table(table)?;

    // per-report means and positive shares (plot-ready time series)
    let mut shares = CsvTable::new(
        "positive_share.csv",
        "report_date,measure,n_funds,mean_value,positive_share,fingerprint",
    );
    let mut series_by_measure: Vec<(Measure, FundSeries)> = semi_measures
        .iter()
        .filter(|m| **m != Measure::Excess)
        .map(|m| (*m, measure_series(&records, *m)))
        .collect();
    if want_aa {
        series_by_measure.push((Measure::AssetAllocation, aa_measure_series(&aa_records)));
    }
    for (measure, series) in &series_by_measure {
        let mut by_date: BTreeMap<chrono::NaiveDate, (usize, usize, f64)> = BTreeMap::new();
        for values in series.values() {
            for (date, value) in values {
                let entry = by_date.entry(*date).or_insert((0, 0, 0.0));
                entry.0 += 1;
                if *value > 0.0 {
                    entry.1 += 1;
                }
                entry.2 += value;
            }
        }
        for (date, (n, positive, sum)) in by_date {
            shares.row(&[
                date.to_string(),
                measure.code().to_string(),
                n.to_string(),
                (sum / n as f64).to_string(),
                (positive as f64 / n as f64).to_string(),
                fingerprint.to_string(),
            ]);
        }
    }
    out.write_table(shares)?;

    // cross-sectional positivity over the continuous sample; the four
    // holdings measures only (excess stays in the tidy rows as the
    // additivity check column)
    let mut summaries = Vec::new();
    for (measure, series) in &series_by_measure {
        let dates = report_dates(series);
        if dates.is_empty() {
            continue;
        }
        let (continuous, notes) = continuous_sample(series, &dates);
        skipped.extend(notes);
        match cross_section_summary(&continuous, measure.code(), args.alpha, args.df) {
            Ok(row) => summaries.push(summary_json(&row, args.alpha)),
            Err(e) => skipped.push(SkipNote::fund("-", format!("{}: {e}", measure.code()))),
        }
    }
    skipped.sort();
    skipped.dedup();

    out.write_json(
        "attribution_summary.json",
        &AttributeJson {
            run: run_info,
            summaries,
            n_records: records.len(),
            n_asset_allocation_records: aa_records.len(),
            skipped,
        },
    )?;
    Ok(())
}
