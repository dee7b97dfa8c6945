//! Ordinary least squares and the price-based performance models built on
//! it: the three-factor selection regression, the quadratic market-timing
//! regression, two benchmark-validation regressions, the benchmark-excess
//! regression, and the measure-persistence regression.
//!
//! Estimation goes through a singular value decomposition so near-collinear
//! designs are rejected instead of silently amplified; standard errors are
//! homoskedastic OLS.

use crate::model::Month;
use crate::panel::{FactorTable, MonthlySeries};
use nalgebra::{DMatrix, DVector};
use thiserror::Error;

/// Admission floor for monthly-return regressions. Five years of monthly
/// data is the usual sample; shorter funds are admitted down to 24 months
/// and flagged in reporting output.
pub const MIN_FACTOR_OBS: usize = 24;
/// A persistence fit needs at least 3 lagged pairs (one residual df).
pub const MIN_PERSISTENCE_OBS: usize = 4;
/// Relative singular-value cutoff below which a design is rank deficient.
pub const RANK_TOL: f64 = 1e-10;

#[derive(Debug, Error, PartialEq)]
pub enum RegressionError {
    #[error("RANK_DEFICIENT: design matrix is numerically rank deficient")]
    RankDeficient,
    #[error("TOO_FEW_OBS: need at least {needed} observations, got {got}")]
    TooFewObs { needed: usize, got: usize },
    #[error("ALIGNMENT_GAP: aligned series have an interior gap at {0}")]
    AlignmentGap(Month),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ModelTag {
    Ff3,
    TreynorMazuy,
    BenchSimple,
    BenchFf,
    ExcessFf,
    Persistence,
    Custom,
}

impl std::fmt::Display for ModelTag {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            ModelTag::Ff3 => "ff3",
            ModelTag::TreynorMazuy => "tm",
            ModelTag::BenchSimple => "bench_simple",
            ModelTag::BenchFf => "bench_ff",
            ModelTag::ExcessFf => "excess_ff",
            ModelTag::Persistence => "persistence",
            ModelTag::Custom => "custom",
        };
        write!(f, "{s}")
    }
}

/// Coefficient names used across the model suite.
pub mod coef {
    pub const ALPHA: &str = "alpha";
    pub const BETA_M: &str = "beta_m";
    pub const BETA_SMB: &str = "beta_smb";
    pub const BETA_HML: &str = "beta_hml";
    pub const GAMMA: &str = "gamma";
    pub const BETA_D: &str = "beta_d";
    pub const BETA_1: &str = "beta_1";
}

/// A fitted linear model: named coefficient estimates with standard errors.
#[derive(Debug, Clone)]
pub struct RegressionFit {
    pub model_tag: ModelTag,
    names: Vec<&'static str>,
    estimates: Vec<f64>,
    std_errors: Vec<f64>,
    pub residual_variance: f64,
    pub n_obs: usize,
}

impl RegressionFit {
    pub fn coef(&self, name: &str) -> Option<f64> {
        self.names
            .iter()
            .position(|n| *n == name)
            .map(|i| self.estimates[i])
    }

    pub fn stderr(&self, name: &str) -> Option<f64> {
        self.names
            .iter()
            .position(|n| *n == name)
            .map(|i| self.std_errors[i])
    }

    pub fn df_resid(&self) -> usize {
        self.n_obs - self.names.len()
    }

    pub fn coefficients(&self) -> impl Iterator<Item = (&'static str, f64, f64)> + '_ {
        self.names
            .iter()
            .zip(&self.estimates)
            .zip(&self.std_errors)
            .map(|((n, e), s)| (*n, *e, *s))
    }
}

/// Least-squares fit of `response` on the given design columns (the first
/// column is conventionally the intercept). Deterministic; rejects designs
/// whose smallest-to-largest singular value ratio falls below `RANK_TOL`.
pub fn ols_fit(
    tag: ModelTag,
    names: &[&'static str],
    columns: &[Vec<f64>],
    response: &[f64],
) -> Result<RegressionFit, RegressionError> {
    let k = columns.len();
    let n = response.len();
    assert_eq!(k, names.len(), "one name per design column");
    for column in columns {
        assert_eq!(column.len(), n, "design columns must match response length");
    }
    if n <= k {
        return Err(RegressionError::TooFewObs { needed: k + 1, got: n });
    }

    let design = DMatrix::from_fn(n, k, |r, c| columns[c][r]);
    let y = DVector::from_column_slice(response);

    let svd = design.clone().svd(true, true);
    let singular = &svd.singular_values;
    let s_max = singular.iter().cloned().fold(0.0_f64, f64::max);
    let s_min = singular.iter().cloned().fold(f64::INFINITY, f64::min);
    if s_max <= 0.0 || s_min / s_max <= RANK_TOL {
        return Err(RegressionError::RankDeficient);
    }

    let u = svd.u.as_ref().expect("svd computed with u");
    let v_t = svd.v_t.as_ref().expect("svd computed with v_t");

    // beta = V S^-1 U^T y
    let uty = u.transpose() * &y;
    let mut scaled = uty;
    for i in 0..k {
        scaled[i] /= singular[i];
    }
    let beta = v_t.transpose() * scaled;

    let residuals = &y - &design * &beta;
    let rss: f64 = residuals.iter().map(|e| e * e).sum();
    let df = n - k;
    let sigma2 = rss / df as f64;

    // diag of (X^T X)^-1 via V S^-2 V^T
    let std_errors: Vec<f64> = (0..k)
        .map(|j| {
            let diag: f64 = (0..k)
                .map(|m| {
                    let v_jm = v_t[(m, j)];
                    (v_jm / singular[m]).powi(2)
                })
                .sum();
            (sigma2 * diag).sqrt()
        })
        .collect();

    Ok(RegressionFit {
        model_tag: tag,
        names: names.to_vec(),
        estimates: beta.iter().copied().collect(),
        std_errors,
        residual_variance: sigma2,
        n_obs: n,
    })
}

/// Months shared by every series, in order. With `allow_gaps` false, an
/// interior hole in the intersection is an alignment error.
fn aligned_months(
    series: &[&[Month]],
    allow_gaps: bool,
) -> Result<Vec<Month>, RegressionError> {
    let mut shared: Vec<Month> = series[0].to_vec();
    for other in &series[1..] {
        let set: std::collections::BTreeSet<Month> = other.iter().copied().collect();
        shared.retain(|m| set.contains(m));
    }
    if !allow_gaps {
        for pair in shared.windows(2) {
            if pair[1].serial() != pair[0].serial() + 1 {
                return Err(RegressionError::AlignmentGap(pair[0].offset(1)));
            }
        }
    }
    Ok(shared)
}

fn values_at(series: &MonthlySeries, months: &[Month]) -> Vec<f64> {
    months
        .iter()
        .map(|m| {
            let i = series.months.binary_search(m).expect("aligned month present");
            series.values[i]
        })
        .collect()
}

fn factor_rows_at<'t>(table: &'t FactorTable, months: &[Month]) -> Vec<&'t crate::panel::FactorRow> {
    months
        .iter()
        .map(|m| table.row_at(*m).expect("aligned month present"))
        .collect()
}

/// Three-factor selection regression: fund excess return on market excess,
/// size and value factors. The intercept is the fund's selection ability.
pub fn fit_fama_french(
    fund_nav: &MonthlySeries,
    factors: &FactorTable,
    allow_gaps: bool,
) -> Result<RegressionFit, RegressionError> {
    let months = aligned_months(&[&fund_nav.months, &factors.months], allow_gaps)?;
    if months.len() < MIN_FACTOR_OBS {
        return Err(RegressionError::TooFewObs {
            needed: MIN_FACTOR_OBS,
            got: months.len(),
        });
    }
    let nav = values_at(fund_nav, &months);
    let rows = factor_rows_at(factors, &months);
    let response: Vec<f64> = nav
        .iter()
        .zip(&rows)
        .map(|(r, f)| r - f.risk_free)
        .collect();
    let columns = vec![
        vec![1.0; months.len()],
        rows.iter().map(|f| f.market_excess).collect(),
        rows.iter().map(|f| f.smb).collect(),
        rows.iter().map(|f| f.hml).collect(),
    ];
    ols_fit(
        ModelTag::Ff3,
        &[coef::ALPHA, coef::BETA_M, coef::BETA_SMB, coef::BETA_HML],
        &columns,
        &response,
    )
}

/// Quadratic market-timing regression: fund excess return on market excess
/// and its square. The squared-term coefficient is the timing ability.
pub fn fit_treynor_mazuy(
    fund_nav: &MonthlySeries,
    factors: &FactorTable,
    allow_gaps: bool,
) -> Result<RegressionFit, RegressionError> {
    let months = aligned_months(&[&fund_nav.months, &factors.months], allow_gaps)?;
    if months.len() < MIN_FACTOR_OBS {
        return Err(RegressionError::TooFewObs {
            needed: MIN_FACTOR_OBS,
            got: months.len(),
        });
    }
    let nav = values_at(fund_nav, &months);
    let rows = factor_rows_at(factors, &months);
    let response: Vec<f64> = nav
        .iter()
        .zip(&rows)
        .map(|(r, f)| r - f.risk_free)
        .collect();
    let market: Vec<f64> = rows.iter().map(|f| f.market_excess).collect();
    let squared: Vec<f64> = market.iter().map(|m| m * m).collect();
    let columns = vec![vec![1.0; months.len()], market, squared];
    ols_fit(
        ModelTag::TreynorMazuy,
        &[coef::ALPHA, coef::BETA_M, coef::GAMMA],
        &columns,
        &response,
    )
}

/// Benchmark validation: fund return on benchmark return alone. The slope
/// feeds the benchmark-appropriateness test against 1.
pub fn fit_benchmark_simple(
    fund_nav: &MonthlySeries,
    benchmark: &MonthlySeries,
    allow_gaps: bool,
) -> Result<RegressionFit, RegressionError> {
    let months = aligned_months(&[&fund_nav.months, &benchmark.months], allow_gaps)?;
    if months.len() < MIN_FACTOR_OBS {
        return Err(RegressionError::TooFewObs {
            needed: MIN_FACTOR_OBS,
            got: months.len(),
        });
    }
    let response = values_at(fund_nav, &months);
    let bench = values_at(benchmark, &months);
    let columns = vec![vec![1.0; months.len()], bench];
    ols_fit(
        ModelTag::BenchSimple,
        &[coef::ALPHA, coef::BETA_D],
        &columns,
        &response,
    )
}

/// Benchmark validation with size and value controls: fund return on
/// benchmark return, SMB and HML.
pub fn fit_benchmark_ff(
    fund_nav: &MonthlySeries,
    benchmark: &MonthlySeries,
    factors: &FactorTable,
    allow_gaps: bool,
) -> Result<RegressionFit, RegressionError> {
    let months = aligned_months(
        &[&fund_nav.months, &benchmark.months, &factors.months],
        allow_gaps,
    )?;
    if months.len() < MIN_FACTOR_OBS {
        return Err(RegressionError::TooFewObs {
            needed: MIN_FACTOR_OBS,
            got: months.len(),
        });
    }
    let response = values_at(fund_nav, &months);
    let bench = values_at(benchmark, &months);
    let rows = factor_rows_at(factors, &months);
    let columns = vec![
        vec![1.0; months.len()],
        bench,
        rows.iter().map(|f| f.smb).collect(),
        rows.iter().map(|f| f.hml).collect(),
    ];
    ols_fit(
        ModelTag::BenchFf,
        &[coef::ALPHA, coef::BETA_D, coef::BETA_SMB, coef::BETA_HML],
        &columns,
        &response,
    )
}

/// Benchmark-relative excess regression: (fund - benchmark) return on the
/// overall market return, SMB and HML.
pub fn fit_excess_ff(
    fund_nav: &MonthlySeries,
    benchmark: &MonthlySeries,
    factors: &FactorTable,
    allow_gaps: bool,
) -> Result<RegressionFit, RegressionError> {
    let months = aligned_months(
        &[&fund_nav.months, &benchmark.months, &factors.months],
        allow_gaps,
    )?;
    if months.len() < MIN_FACTOR_OBS {
        return Err(RegressionError::TooFewObs {
            needed: MIN_FACTOR_OBS,
            got: months.len(),
        });
    }
    let fund = values_at(fund_nav, &months);
    let bench = values_at(benchmark, &months);
    let response: Vec<f64> = fund.iter().zip(&bench).map(|(f, b)| f - b).collect();
    let rows = factor_rows_at(factors, &months);
    let columns = vec![
        vec![1.0; months.len()],
        rows.iter().map(|f| f.market_excess + f.risk_free).collect(),
        rows.iter().map(|f| f.smb).collect(),
        rows.iter().map(|f| f.hml).collect(),
    ];
    ols_fit(
        ModelTag::ExcessFf,
        &[coef::ALPHA, coef::BETA_M, coef::BETA_SMB, coef::BETA_HML],
        &columns,
        &response,
    )
}

/// Persistence regression of a measure on its previous-report value over
/// consecutive pairs. The slope feeds the one-sided persistence test.
pub fn fit_persistence(measure_series: &[f64]) -> Result<RegressionFit, RegressionError> {
    if measure_series.len() < MIN_PERSISTENCE_OBS {
        return Err(RegressionError::TooFewObs {
            needed: MIN_PERSISTENCE_OBS,
            got: measure_series.len(),
        });
    }
    let lagged = measure_series[..measure_series.len() - 1].to_vec();
    let current = measure_series[1..].to_vec();
    let columns = vec![vec![1.0; lagged.len()], lagged];
    ols_fit(
        ModelTag::Persistence,
        &[coef::ALPHA, coef::BETA_1],
        &columns,
        &current,
    )
}

/// Tracking quality of a fund against its benchmark: mean and standard
/// deviation of the return differences, plus the median relative difference.
#[derive(Debug, Clone, PartialEq)]
pub struct TrackingStats {
    pub mean_diff: f64,
    pub sd_diff: f64,
    pub median_rel_diff: f64,
    pub n_obs: usize,
    /// Periods with zero benchmark return, excluded from the relative median.
    pub n_rel_excluded: usize,
}

pub fn tracking_stats(
    fund_nav: &MonthlySeries,
    benchmark: &MonthlySeries,
    allow_gaps: bool,
) -> Result<TrackingStats, RegressionError> {
    let months = aligned_months(&[&fund_nav.months, &benchmark.months], allow_gaps)?;
    if months.len() < 2 {
        return Err(RegressionError::TooFewObs {
            needed: 2,
            got: months.len(),
        });
    }
    let fund = values_at(fund_nav, &months);
    let bench = values_at(benchmark, &months);
    let diffs: Vec<f64> = fund.iter().zip(&bench).map(|(f, b)| f - b).collect();
    let n = diffs.len();
    let mean = diffs.iter().sum::<f64>() / n as f64;
    let var = diffs.iter().map(|d| (d - mean).powi(2)).sum::<f64>() / (n - 1) as f64;

    let mut rel: Vec<f64> = Vec::with_capacity(n);
    let mut excluded = 0usize;
    for (d, b) in diffs.iter().zip(&bench) {
        if *b == 0.0 {
            excluded += 1;
        } else {
            rel.push(d / b);
        }
    }
    let median_rel = median(&mut rel);

    Ok(TrackingStats {
        mean_diff: mean,
        sd_diff: var.sqrt(),
        median_rel_diff: median_rel,
        n_obs: n,
        n_rel_excluded: excluded,
    })
}

fn median(values: &mut [f64]) -> f64 {
    if values.is_empty() {
        return f64::NAN;
    }
    values.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let n = values.len();
    if n % 2 == 1 {
        values[n / 2]
    } else {
        0.5 * (values[n / 2 - 1] + values[n / 2])
    }
}
