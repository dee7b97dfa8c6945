//! Association between holdings-based and regression-based abilities over a
//! rolling multi-year sample: industry allocation vs. timing, or
//! within-industry selection vs. three-factor selection.

use super::{measure_series, semiannual_records, stars, Measure};
use crate::output::{CsvTable, Fingerprint, OutputDir, RunInfo, SkipNote};
use crate::workspace::Workspace;
use anyhow::{bail, Result};
use attrib_core::brinson::accumulate_geometric;
use attrib_core::inference::pearson_test;
use attrib_core::model::{Direction, Month};
use attrib_core::regression::{coef, fit_fama_french, fit_treynor_mazuy};
use chrono::NaiveDate;
use rayon::prelude::*;
use serde::Serialize;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Pair {
    /// Accumulated industry allocation (past windows) against timing.
    IaTiming,
    /// Accumulated within-industry selection (future windows) against
    /// three-factor selection.
    SsAlpha,
}

impl Pair {
    fn code(self) -> &'static str {
        match self {
            Pair::IaTiming => "ia_timing",
            Pair::SsAlpha => "ss_alpha",
        }
    }
}

pub struct Args {
    pub pair: Pair,
    pub end_year: i32,
    pub span_years: u32,
    pub allow_gaps: bool,
}

#[derive(Serialize)]
struct AssociateJson {
    run: RunInfo,
    pair: String,
    end_year: i32,
    span_years: u32,
    n_funds: usize,
    correlation: f64,
    t_stat: f64,
    p_value: f64,
    stars: String,
    skipped: Vec<SkipNote>,
}

pub fn run(
    ws: &Workspace,
    args: &Args,
    fingerprint: Fingerprint,
    run_info: RunInfo,
    out: &mut OutputDir,
) -> Result<()> {
    let span_start = Month::new(args.end_year - args.span_years as i32 + 1, 1);
    let span_end = Month::new(args.end_year, 12);
    let panel_start = ws.panel.first_month();
    let panel_end = ws.panel.last_month();
    if span_start < panel_start || span_end > panel_end {
        bail!(
            "sample {span_start}..{span_end} is not covered by the panel {panel_start}..{panel_end}"
        );
    }

    let (measure, direction) = match args.pair {
        Pair::IaTiming => (Measure::Allocation, Direction::Before),
        Pair::SsAlpha => (Measure::Selection, Direction::After),
    };

    // report dates inside the sample whose window the panel can resolve
    let in_sample = |date: NaiveDate| -> bool {
        let month = Month::from_date(date);
        if month < span_start || month > span_end {
            return false;
        }
        match direction {
            Direction::Before => true,
            Direction::After => month.offset(6) <= panel_end,
        }
    };

    let (records, mut skipped) = semiannual_records(ws, direction);
    let mut sample_dates: Vec<NaiveDate> = records
        .iter()
        .map(|r| r.report_date)
        .filter(|d| in_sample(*d))
        .collect();
    sample_dates.sort();
    sample_dates.dedup();
    if sample_dates.is_empty() {
        bail!("no report dates with resolvable windows inside the sample");
    }

    let series = measure_series(&records, measure);
    let factors = ws.panel.factor_table();

    struct FundPoint {
        fund_id: String,
        accumulated: f64,
        ability: f64,
        n_obs: usize,
    }
    let fund_ids: Vec<&String> = series.keys().collect();
    let results: Vec<Result<FundPoint, SkipNote>> = fund_ids
        .par_iter()
        .map(|fund_id| {
            let values = &series[*fund_id];
            let in_span: Vec<f64> = values
                .iter()
                .filter(|(d, _)| in_sample(*d))
                .map(|(_, v)| *v)
                .collect();
            if in_span.len() != sample_dates.len() {
                return Err(SkipNote::fund(
                    fund_id,
                    format!(
                        "not continuous: {} of {} sample reports present",
                        in_span.len(),
                        sample_dates.len()
                    ),
                ));
            }
            let accumulated = accumulate_geometric(&in_span)
                .map_err(|e| SkipNote::fund(fund_id, e.to_string()))?;
            let nav = ws
                .panel
                .nav_series(fund_id)
                .ok_or_else(|| SkipNote::fund(fund_id, "no NAV data"))?
                .restrict(span_start, span_end);
            if nav.len() != (span_end.serial() - span_start.serial() + 1) as usize {
                return Err(SkipNote::fund(fund_id, "NAV not continuous over the sample"));
            }
            let (fit, name) = match args.pair {
                Pair::IaTiming => (
                    fit_treynor_mazuy(&nav, &factors, args.allow_gaps),
                    coef::GAMMA,
                ),
                Pair::SsAlpha => (
                    fit_fama_french(&nav, &factors, args.allow_gaps),
                    coef::ALPHA,
                ),
            };
            let fit = fit.map_err(|e| SkipNote::fund(fund_id, e.to_string()))?;
            Ok(FundPoint {
                fund_id: (*fund_id).clone(),
                accumulated,
                ability: fit.coef(name).unwrap(),
                n_obs: fit.n_obs,
            })
        })
        .collect();

    let mut points = Vec::new();
    for result in results {
        match result {
            Ok(p) => points.push(p),
            Err(note) => skipped.push(note),
        }
    }
    points.sort_by(|a, b| a.fund_id.cmp(&b.fund_id));
    skipped.sort();
    skipped.dedup();

    if points.len() < 3 {
        bail!(
            "EMPTY_UNIVERSE: only {} funds have continuous performance over {}..{}",
            points.len(),
            span_start,
            span_end
        );
    }

    let accumulated: Vec<f64> = points.iter().map(|p| p.accumulated).collect();
    let ability: Vec<f64> = points.iter().map(|p| p.ability).collect();
    let correlation = pearson_test(&accumulated, &ability)?;

    let mut pairs = CsvTable::new(
        "associate_pairs.csv",
        "fund_id,pair,accumulated_measure,ability,n_obs,fingerprint",
    );
    for p in &points {
        pairs.row(&[
            p.fund_id.clone(),
            args.pair.code().to_string(),
            p.accumulated.to_string(),
            p.ability.to_string(),
            p.n_obs.to_string(),
            fingerprint.to_string(),
        ]);
    }
    out.write_table(pairs)?;

    let mut table = CsvTable::new(
        "associate.csv",
        "pair,end_year,span_years,n_funds,correlation,t_stat,p_value,stars,fingerprint",
    );
    table.row(&[
        args.pair.code().to_string(),
        args.end_year.to_string(),
        args.span_years.to_string(),
        points.len().to_string(),
        correlation.r.to_string(),
        correlation.t_stat.to_string(),
        correlation.p_value.to_string(),
        stars(correlation.p_value).to_string(),
        fingerprint.to_string(),
    ]);
    out.write_table(table)?;

    out.write_json(
        "associate_summary.json",
        &AssociateJson {
            run: run_info,
            pair: args.pair.code().to_string(),
            end_year: args.end_year,
            span_years: args.span_years,
            n_funds: points.len(),
            correlation: correlation.r,
            t_stat: correlation.t_stat,
            p_value: correlation.p_value,
            stars: stars(correlation.p_value).to_string(),
            skipped,
        },
    )?;
    Ok(())
}
