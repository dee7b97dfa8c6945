//! Measure persistence: per-fund regression of a measure on its lagged
//! value over the continuous sample, one-sided test for a positive slope,
//! aggregated to positive / significantly-positive proportions.

use super::{
    aa_measure_series, asset_allocation_records, continuous_sample, measure_series, report_dates,
    semiannual_records, stars, Measure,
};
use crate::output::{CsvTable, Fingerprint, OutputDir, RunInfo, SkipNote};
use crate::workspace::Workspace;
use anyhow::Result;
use attrib_core::inference::{coef_test, Alternative};
use attrib_core::model::Direction;
use attrib_core::regression::{coef, fit_persistence};
use serde::Serialize;

pub struct Args {
    pub measure: Measure,
    pub direction: Direction,
    pub alpha: f64,
}

#[derive(Serialize)]
struct PersistenceJson {
    run: RunInfo,
    measure: String,
    n_funds: usize,
    positive_proportion: f64,
    significantly_positive_proportion: f64,
    significance_level: f64,
    skipped: Vec<SkipNote>,
}

pub fn run(
    ws: &Workspace,
    args: &Args,
    fingerprint: Fingerprint,
    run_info: RunInfo,
    out: &mut OutputDir,
) -> Result<()> {
    let (series, mut skipped) = match args.measure {
        Measure::AssetAllocation => {
            let (records, skipped) = asset_allocation_records(ws);
            (aa_measure_series(&records), skipped)
        }
        measure => {
            let (records, skipped) = semiannual_records(ws, args.direction);
            (measure_series(&records, measure), skipped)
        }
    };
    let dates = report_dates(&series);
    let (continuous, notes) = continuous_sample(&series, &dates);
    skipped.extend(notes);

    let mut table = CsvTable::new(
        "persistence.csv",
        "fund_id,measure,n_obs,beta_1,stderr,t_stat,p_value,stars,positive,reject_10,fingerprint",
    );
    let mut fitted = 0usize;
    let mut positive = 0usize;
    let mut significant = 0usize;
    for (fund_id, values) in &continuous {
        let fit = match fit_persistence(values) {
            Ok(fit) => fit,
            Err(e) => {
                skipped.push(SkipNote::fund(fund_id, e.to_string()));
                continue;
            }
        };
        let beta = fit.coef(coef::BETA_1).unwrap();
        let test = coef_test(&fit, coef::BETA_1, 0.0, Alternative::Greater)
            .expect("beta_1 present in fit");
        fitted += 1;
        if beta > 0.0 {
            positive += 1;
        }
        if test.reject_at(args.alpha) {
            significant += 1;
        }
        table.row(&[
            fund_id.clone(),
            args.measure.code().to_string(),
            values.len().to_string(),
            beta.to_string(),
            fit.stderr(coef::BETA_1).unwrap().to_string(),
            test.statistic.to_string(),
            test.p_value.to_string(),
            stars(test.p_value).to_string(),
            (beta > 0.0).to_string(),
            test.reject_at(args.alpha).to_string(),
            fingerprint.to_string(),
        ]);
    }
    out.write_table(table)?;

    skipped.sort();
    skipped.dedup();
    let share = |k: usize| if fitted == 0 { 0.0 } else { k as f64 / fitted as f64 };
    out.write_json(
        "persistence_summary.json",
        &PersistenceJson {
            run: run_info,
            measure: args.measure.code().to_string(),
            n_funds: fitted,
            positive_proportion: share(positive),
            significantly_positive_proportion: share(significant),
            significance_level: args.alpha,
            skipped,
        },
    )?;
    Ok(())
}
