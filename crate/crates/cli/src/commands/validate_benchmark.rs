//! Benchmark-appropriateness checks: per-fund regression of fund returns on
//! benchmark returns (optionally with size/value controls), the slope = 1
//! test at both significance levels, and tracking statistics.

use super::stars;
use crate::output::{CsvTable, Fingerprint, OutputDir, RunInfo, SkipNote};
use crate::workspace::Workspace;
use anyhow::Result;
use attrib_core::inference::{coef_test, Alternative};
use attrib_core::regression::{
    self, coef, tracking_stats, RegressionFit, MIN_FACTOR_OBS,
};
use rayon::prelude::*;
use serde::Serialize;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BenchModel {
    Simple,
    WithFactors,
}

impl BenchModel {
    fn code(self) -> &'static str {
        match self {
            BenchModel::Simple => "simple",
            BenchModel::WithFactors => "ff",
        }
    }
}

pub struct Args {
    pub model: BenchModel,
    pub allow_gaps: bool,
    pub levels: (f64, f64),
}

#[derive(Serialize)]
struct ValidateJson {
    run: RunInfo,
    model: String,
    n_funds: usize,
    share_beta_greater_than_1: f64,
    share_reject_at_10: f64,
    share_reject_at_5: f64,
    skipped: Vec<SkipNote>,
}

struct FundRow {
    fund_id: String,
    fit: RegressionFit,
    tracking: Option<regression::TrackingStats>,
}

pub fn run(
    ws: &Workspace,
    args: &Args,
    fingerprint: Fingerprint,
    run_info: RunInfo,
    out: &mut OutputDir,
) -> Result<()> {
    let factors = ws.panel.factor_table();
    let funds = ws.fund_ids();
    let results: Vec<Result<FundRow, SkipNote>> = funds
        .par_iter()
        .map(|fund_id| {
            let bench_id = ws
                .benchmark_id_of(fund_id)
                .ok_or_else(|| SkipNote::fund(fund_id, "no benchmark mapping"))?;
            let nav = ws
                .panel
                .nav_series(fund_id)
                .ok_or_else(|| SkipNote::fund(fund_id, "no NAV data"))?;
            let bench = ws
                .panel
                .index_series(bench_id)
                .ok_or_else(|| SkipNote::fund(fund_id, format!("no index series for {bench_id}")))?;
            let fit = match args.model {
                BenchModel::Simple => {
                    regression::fit_benchmark_simple(&nav, &bench, args.allow_gaps)
                }
                BenchModel::WithFactors => {
                    regression::fit_benchmark_ff(&nav, &bench, &factors, args.allow_gaps)
                }
            }
            .map_err(|e| SkipNote::fund(fund_id, e.to_string()))?;
            let tracking = tracking_stats(&nav, &bench, args.allow_gaps).ok();
            Ok(FundRow {
                fund_id: fund_id.clone(),
                fit,
                tracking,
            })
        })
        .collect();

    let mut rows = Vec::new();
    let mut skipped = Vec::new();
    for result in results {
        match result {
            Ok(row) => rows.push(row),
            Err(note) => skipped.push(note),
        }
    }
    rows.sort_by(|a, b| a.fund_id.cmp(&b.fund_id));
    skipped.sort();

    let (level_a, level_b) = args.levels;
    let mut fits = CsvTable::new(
        "benchmark_fits.csv",
        "fund_id,model,n_obs,alpha,beta_d,beta_d_stderr,t_stat,p_value,stars,greater_than_1,reject_10,reject_5,short_sample,fingerprint",
    );
    let mut tracking_table = CsvTable::new(
        "tracking.csv",
        "fund_id,n_obs,mean_diff,sd_diff,median_rel_diff,n_rel_excluded,fingerprint",
    );
    let mut greater = 0usize;
    let mut reject_a = 0usize;
    let mut reject_b = 0usize;
    for row in &rows {
        let beta = row.fit.coef(coef::BETA_D).unwrap();
        let test = coef_test(&row.fit, coef::BETA_D, 1.0, Alternative::TwoSided)
            .expect("beta_d present in fit");
        if beta > 1.0 {
            greater += 1;
        }
        if test.reject_at(level_a) {
            reject_a += 1;
        }
        if test.reject_at(level_b) {
            reject_b += 1;
        }
        fits.row(&[
            row.fund_id.clone(),
            args.model.code().to_string(),
            row.fit.n_obs.to_string(),
            row.fit.coef(coef::ALPHA).unwrap().to_string(),
            beta.to_string(),
            row.fit.stderr(coef::BETA_D).unwrap().to_string(),
            test.statistic.to_string(),
            test.p_value.to_string(),
            stars(test.p_value).to_string(),
            (beta > 1.0).to_string(),
            test.reject_at(level_a).to_string(),
            test.reject_at(level_b).to_string(),
            (row.fit.n_obs < 60 && row.fit.n_obs >= MIN_FACTOR_OBS).to_string(),
            fingerprint.to_string(),
        ]);
        if let Some(tracking) = &row.tracking {
            tracking_table.row(&[
                row.fund_id.clone(),
                tracking.n_obs.to_string(),
                tracking.mean_diff.to_string(),
                tracking.sd_diff.to_string(),
                tracking.median_rel_diff.to_string(),
                tracking.n_rel_excluded.to_string(),
                fingerprint.to_string(),
            ]);
        }
    }
    out.write_table(fits)?;
    out.write_table(tracking_table)?;

    let n = rows.len();
    let share = |k: usize| if n == 0 { 0.0 } else { k as f64 / n as f64 };
    out.write_json(
        "benchmark_summary.json",
        &ValidateJson {
            run: run_info,
            model: args.model.code().to_string(),
            n_funds: n,
            share_beta_greater_than_1: share(greater),
            share_reject_at_10: share(reject_a),
            share_reject_at_5: share(reject_b),
            skipped,
        },
    )?;
    Ok(())
}
