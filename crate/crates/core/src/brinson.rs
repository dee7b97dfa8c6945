//! Holdings-based performance decomposition.
//!
//! Excess return over the benchmark constituent portfolio splits exactly into
//! within-industry stock selection, industry allocation and an interaction
//! term; the stock/bond tilt is measured separately as asset allocation.
//! All functions here are pure; evaluation order across funds never affects
//! results.

use crate::model::{
    codes, normalize_stock_sleeve, BenchmarkDefinition, Direction, HoldingsSnapshot, Issue,
    ModelError,
};
use crate::panel::{resolve_window, MarketPanel, PanelError, WindowReturns, WindowSpec};
use chrono::NaiveDate;
use std::collections::BTreeMap;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum BrinsonError {
    #[error("NO_OVERLAP: fund and benchmark share no priced industries")]
    NoOverlap,
    #[error("EMPTY_SLEEVE: no priced positions left for {0}")]
    EmptySleeve(String),
    #[error("MISSING_SLEEVE: {0} carries no asset weights")]
    MissingSleeve(String),
    #[error("MISSING_NAV: fund {0} lacks NAV data inside the window")]
    MissingNav(String),
    #[error("DEGENERATE: series element {0} <= -1 cannot be compounded")]
    Degenerate(f64),
    #[error("bond market series required for asset allocation is not configured")]
    MissingBondSeries,
    #[error(transparent)]
    Window(#[from] PanelError),
    #[error(transparent)]
    Model(#[from] ModelError),
}

/// Per-industry weights and returns for one fund/benchmark pair over one
/// window. Industries missing on one side carry weight 0 there, with the
/// other side's total window return as the return fallback.
#[derive(Debug, Clone)]
pub struct IndustryBreakdown {
    pub report_date: NaiveDate,
    pub direction: Direction,
    pub rows: Vec<IndustryRow>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct IndustryRow {
    pub industry_id: String,
    pub fund_weight: f64,
    pub fund_return: f64,
    pub bench_weight: f64,
    pub bench_return: f64,
}

impl IndustryBreakdown {
    pub fn n_industries(&self) -> usize {
        self.rows.len()
    }

    /// Fund sleeve return implied by the breakdown.
    pub fn fund_total(&self) -> f64 {
        self.rows.iter().map(|r| r.fund_weight * r.fund_return).sum()
    }

    /// Benchmark constituent-portfolio return implied by the breakdown.
    pub fn bench_total(&self) -> f64 {
        self.rows.iter().map(|r| r.bench_weight * r.bench_return).sum()
    }
}

/// One fund's decomposition at one report date and window direction.
#[derive(Debug, Clone, PartialEq)]
pub struct AttributionRecord {
    pub fund_id: String,
    pub report_date: NaiveDate,
    pub direction: Direction,
    pub selection: f64,
    pub allocation: f64,
    pub interaction: f64,
    pub excess: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AssetAllocationRecord {
    pub fund_id: String,
    pub quarter_date: NaiveDate,
    pub value: f64,
}

/// Assumed (buy-and-hold of reported positions) versus actual (compounded
/// NAV) return over one window; `diff = assumed - actual`.
#[derive(Debug, Clone, PartialEq)]
pub struct ValidityDiff {
    pub fund_id: String,
    pub report_date: NaiveDate,
    pub direction: Direction,
    pub assumed_return: f64,
    pub actual_return: f64,
    pub diff: f64,
}

/// Within-industry stock selection: sum of (fund return - benchmark return)
/// weighted by benchmark industry weights.
pub fn within_industry_selection(breakdown: &IndustryBreakdown) -> f64 {
    breakdown
        .rows
        .iter()
        .map(|r| (r.fund_return - r.bench_return) * r.bench_weight)
        .sum()
}

/// Industry allocation: benchmark industry returns weighted by the fund's
/// over/under-weights.
pub fn industry_allocation(breakdown: &IndustryBreakdown) -> f64 {
    breakdown
        .rows
        .iter()
        .map(|r| r.bench_return * (r.fund_weight - r.bench_weight))
        .sum()
}

/// Interaction term: joint over-weighting of outperforming industries.
pub fn interaction_term(breakdown: &IndustryBreakdown) -> f64 {
    breakdown
        .rows
        .iter()
        .map(|r| (r.fund_return - r.bench_return) * (r.fund_weight - r.bench_weight))
        .sum()
}

struct Side {
    weights: BTreeMap<String, f64>, // industry -> weight
    returns: BTreeMap<String, f64>, // industry -> weighted return
    total: f64,
}

/// Groups one side (fund or benchmark) into industries, dropping unpriced or
/// unclassified stocks and renormalizing the rest.
fn group_side(
    label: &str,
    positions: &[(String, f64)],
    industry_of: &BTreeMap<String, String>,
    window: &WindowReturns,
    issues: &mut Vec<Issue>,
) -> Result<Side, BrinsonError> {
    let mut kept: Vec<(&str, f64, f64)> = Vec::with_capacity(positions.len());
    let mut kept_weight = 0.0;
    for (stock_id, weight) in positions {
        if *weight <= 0.0 {
            continue;
        }
        let industry = industry_of.get(stock_id);
        let ret = window.per_stock.get(stock_id);
        match (industry, ret) {
            (Some(ind), Some(r)) => {
                kept.push((ind.as_str(), *weight, *r));
                kept_weight += weight;
            }
            (None, _) => issues.push(Issue::warning(
                codes::MISSING_PRICE,
                format!("{label}: stock {stock_id} has no industry classification; dropped"),
            )),
            (_, None) => issues.push(Issue::warning(
                codes::MISSING_PRICE,
                format!("{label}: stock {stock_id} not priced across the window; dropped"),
            )),
        }
    }
    if kept_weight <= 0.0 {
        return Err(BrinsonError::EmptySleeve(label.to_string()));
    }

    let mut weights: BTreeMap<String, f64> = BTreeMap::new();
    let mut weighted_returns: BTreeMap<String, f64> = BTreeMap::new();
    for (industry, weight, ret) in kept {
        let w = weight / kept_weight;
        *weights.entry(industry.to_string()).or_insert(0.0) += w;
        *weighted_returns.entry(industry.to_string()).or_insert(0.0) += w * ret;
    }
    let total = weighted_returns.values().sum();
    let returns = weights
        .iter()
        .map(|(ind, w)| (ind.clone(), weighted_returns[ind] / w))
        .collect();
    Ok(Side {
        weights,
        returns,
        total,
    })
}

/// Builds the per-industry breakdown of a normalized snapshot against its
/// benchmark over a resolved window.
pub fn build_breakdown(
    snapshot: &HoldingsSnapshot,
    benchmark: &BenchmarkDefinition,
    industry_of: &BTreeMap<String, String>,
    window: &WindowReturns,
    direction: Direction,
) -> Result<(IndustryBreakdown, Vec<Issue>), BrinsonError> {
    let mut issues = Vec::new();
    let fund_positions: Vec<(String, f64)> = snapshot
        .positions
        .iter()
        .map(|p| (p.stock_id.clone(), p.weight))
        .collect();
    let bench_positions: Vec<(String, f64)> = benchmark
        .constituents
        .iter()
        .map(|p| (p.stock_id.clone(), p.weight))
        .collect();
    let fund = group_side(
        &format!("fund {}", snapshot.fund_id),
        &fund_positions,
        industry_of,
        window,
        &mut issues,
    )?;
    let bench = group_side(
        &format!("benchmark {}", benchmark.benchmark_id),
        &bench_positions,
        industry_of,
        window,
        &mut issues,
    )?;

    let mut industries: Vec<&String> = fund.weights.keys().chain(bench.weights.keys()).collect();
    industries.sort();
    industries.dedup();

    if !industries
        .iter()
        .any(|ind| fund.weights.contains_key(*ind) && bench.weights.contains_key(*ind))
    {
        return Err(BrinsonError::NoOverlap);
    }

    let rows = industries
        .into_iter()
        .map(|ind| IndustryRow {
            industry_id: ind.clone(),
            fund_weight: fund.weights.get(ind).copied().unwrap_or(0.0),
            fund_return: fund.returns.get(ind).copied().unwrap_or(fund.total),
            bench_weight: bench.weights.get(ind).copied().unwrap_or(0.0),
            bench_return: bench.returns.get(ind).copied().unwrap_or(bench.total),
        })
        .collect();

    Ok((
        IndustryBreakdown {
            report_date: snapshot.report_date,
            direction,
            rows,
        },
        issues,
    ))
}

/// Full decomposition of one snapshot against its benchmark: resolves the
/// semiannual window, normalizes the stock sleeve, and splits the excess
/// return into selection, allocation and interaction.
pub fn attribute(
    snapshot: &HoldingsSnapshot,
    benchmark: &BenchmarkDefinition,
    panel: &MarketPanel,
    direction: Direction,
) -> Result<(AttributionRecord, Vec<Issue>), BrinsonError> {
    let window = resolve_window(panel, &WindowSpec::semiannual(snapshot.report_date, direction))?;
    let normalized = normalize_stock_sleeve(snapshot)?;
    let (breakdown, issues) =
        build_breakdown(&normalized, benchmark, panel.industry_map(), &window, direction)?;
    let record = decompose(&breakdown, &snapshot.fund_id);
    Ok((record, issues))
}

/// Splits a breakdown into its three components plus the excess they sum to.
pub fn decompose(breakdown: &IndustryBreakdown, fund_id: &str) -> AttributionRecord {
    let selection = within_industry_selection(breakdown);
    let allocation = industry_allocation(breakdown);
    let interaction = interaction_term(breakdown);
    let excess = breakdown.fund_total() - breakdown.bench_total();
    debug_assert!(
        (selection + allocation + interaction - excess).abs() < 1e-9,
        "decomposition identity violated"
    );
    AttributionRecord {
        fund_id: fund_id.to_string(),
        report_date: breakdown.report_date,
        direction: breakdown.direction,
        selection,
        allocation,
        interaction,
        excess,
    }
}

/// Asset allocation over a window: stock and bond market returns weighted by
/// the fund's sleeve tilts against the benchmark.
pub fn asset_allocation(
    snapshot: &HoldingsSnapshot,
    benchmark: &BenchmarkDefinition,
    window: &WindowReturns,
) -> Result<AssetAllocationRecord, BrinsonError> {
    let fund_sleeves = snapshot
        .asset_weights
        .ok_or_else(|| BrinsonError::MissingSleeve(format!("fund {}", snapshot.fund_id)))?;
    let bench_sleeves = benchmark
        .asset_weights
        .ok_or_else(|| BrinsonError::MissingSleeve(format!("benchmark {}", benchmark.benchmark_id)))?;
    let bond_market = window.bond_market.ok_or(BrinsonError::MissingBondSeries)?;
    let value = window.stock_market * (fund_sleeves.stock - bench_sleeves.stock)
        + bond_market * (fund_sleeves.bond - bench_sleeves.bond);
    Ok(AssetAllocationRecord {
        fund_id: snapshot.fund_id.clone(),
        quarter_date: snapshot.report_date,
        value,
    })
}

/// Geometric accumulation of a measure series: `prod(1 + x) - 1`.
pub fn accumulate_geometric(series: &[f64]) -> Result<f64, BrinsonError> {
    if let Some(x) = series.iter().find(|x| **x <= -1.0) {
        return Err(BrinsonError::Degenerate(*x));
    }
    // single element passes through untouched; (1 + x) - 1 would round
    if let [x] = series {
        return Ok(*x);
    }
    Ok(series.iter().fold(1.0, |acc, x| acc * (1.0 + x)) - 1.0)
}

/// Difference between the buy-and-hold return of the reported positions and
/// the fund's actual compounded NAV return over the same window.
pub fn holding_validity_diff(
    snapshot: &HoldingsSnapshot,
    panel: &MarketPanel,
    direction: Direction,
) -> Result<(ValidityDiff, Vec<Issue>), BrinsonError> {
    let window = resolve_window(panel, &WindowSpec::semiannual(snapshot.report_date, direction))?;
    let normalized = normalize_stock_sleeve(snapshot)?;

    let mut issues = Vec::new();
    let mut kept_weight = 0.0;
    let mut weighted = 0.0;
    for pos in &normalized.positions {
        match window.per_stock.get(&pos.stock_id) {
            Some(r) => {
                kept_weight += pos.weight;
                weighted += pos.weight * r;
            }
            None => issues.push(Issue::warning(
                codes::MISSING_PRICE,
                format!(
                    "fund {}: stock {} not priced across the window; dropped",
                    snapshot.fund_id, pos.stock_id
                ),
            )),
        }
    }
    if kept_weight <= 0.0 {
        return Err(BrinsonError::EmptySleeve(snapshot.fund_id.clone()));
    }
    let assumed_return = weighted / kept_weight;
    let actual_return = panel
        .compound_nav(&snapshot.fund_id, &window.months)
        .ok_or_else(|| BrinsonError::MissingNav(snapshot.fund_id.clone()))?;

    Ok((
        ValidityDiff {
            fund_id: snapshot.fund_id.clone(),
            report_date: snapshot.report_date,
            direction,
            assumed_return,
            actual_return,
            diff: assumed_return - actual_return,
        },
        issues,
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use chrono::NaiveDate;
    use proptest::prelude::*;

    fn date(y: i32, m: u32, d: u32) -> NaiveDate {
        NaiveDate::from_ymd_opt(y, m, d).unwrap()
    }

    fn breakdown(rows: &[(&str, f64, f64, f64, f64)]) -> IndustryBreakdown {
        IndustryBreakdown {
            report_date: date(2017, 6, 30),
            direction: Direction::Before,
            rows: rows
                .iter()
                .map(|(id, wf, rf, wb, rb)| IndustryRow {
                    industry_id: (*id).to_string(),
                    fund_weight: *wf,
                    fund_return: *rf,
                    bench_weight: *wb,
                    bench_return: *rb,
                })
                .collect(),
        }
    }

    #[test]
    fn selection_vanishes_when_returns_match() {
        let b = breakdown(&[("X", 0.6, 0.05, 0.5, 0.05), ("Y", 0.4, -0.02, 0.5, -0.02)]);
        assert_eq!(within_industry_selection(&b), 0.0);
    }

    #[test]
    fn selection_single_industry() {
        let b = breakdown(&[("X", 1.0, 0.07, 1.0, 0.05)]);
        assert!((within_industry_selection(&b) - 0.02).abs() < 1e-15);
    }

    #[test]
    fn selection_two_industries_hand_computed() {
        // 0.6 * 0.01 + 0.4 * (-0.05) = -0.014
        let b = breakdown(&[("X", 0.6, 0.11, 0.6, 0.10), ("Y", 0.4, 0.00, 0.4, 0.05)]);
        assert!((within_industry_selection(&b) + 0.014).abs() < 1e-15);
    }

    #[test]
    fn allocation_vanishes_when_weights_match() {
        let b = breakdown(&[("X", 0.6, 0.05, 0.6, 0.02), ("Y", 0.4, -0.02, 0.4, 0.03)]);
        assert_eq!(industry_allocation(&b), 0.0);
    }

    #[test]
    fn allocation_two_industries_hand_computed() {
        // 0.10 * 0.1 + (-0.10) * (-0.1) = 0.02
        let b = breakdown(&[("X", 0.6, 0.0, 0.5, 0.10), ("Y", 0.4, 0.0, 0.5, -0.10)]);
        assert!((industry_allocation(&b) - 0.02).abs() < 1e-15);
    }

    #[test]
    fn allocation_is_zero_for_constant_benchmark_returns() {
        // weights sum to 1 on both sides, so sum of tilts is 0
        let b = breakdown(&[("X", 0.7, 0.0, 0.5, 0.04), ("Y", 0.3, 0.0, 0.5, 0.04)]);
        assert!(industry_allocation(&b).abs() < 1e-15);
    }

    #[test]
    fn interaction_vanishes_without_tilt_or_spread() {
        let same_weights = breakdown(&[("X", 0.6, 0.08, 0.6, 0.02), ("Y", 0.4, 0.0, 0.4, 0.01)]);
        assert_eq!(interaction_term(&same_weights), 0.0);
        let same_returns = breakdown(&[("X", 0.7, 0.08, 0.5, 0.08), ("Y", 0.3, 0.01, 0.5, 0.01)]);
        assert_eq!(interaction_term(&same_returns), 0.0);
    }

    #[test]
    fn interaction_two_industries_hand_computed() {
        // (0.05)(0.1) + (-0.05)(-0.1) = 0.01
        let b = breakdown(&[("X", 0.6, 0.15, 0.5, 0.10), ("Y", 0.4, 0.00, 0.5, 0.05)]);
        assert!((interaction_term(&b) - 0.01).abs() < 1e-15);
    }

    #[test]
    fn decomposition_sums_to_excess() {
        let b = breakdown(&[
            ("X", 0.5, 0.12, 0.4, 0.08),
            ("Y", 0.3, -0.02, 0.35, 0.01),
            ("Z", 0.2, 0.05, 0.25, 0.06),
        ]);
        let record = decompose(&b, "F1");
        let sum = record.selection + record.allocation + record.interaction;
        assert!((sum - record.excess).abs() < 1e-15);
    }

    #[test]
    fn identical_portfolios_give_all_zero_record() {
        let b = breakdown(&[("X", 0.6, 0.05, 0.6, 0.05), ("Y", 0.4, -0.01, 0.4, -0.01)]);
        let record = decompose(&b, "F1");
        assert_eq!(record.selection, 0.0);
        assert_eq!(record.allocation, 0.0);
        assert_eq!(record.interaction, 0.0);
        assert_eq!(record.excess, 0.0);
    }

    #[test]
    fn asset_allocation_hand_computed() {
        use crate::model::{Position, ReportKind, SleeveWeights};
        let snapshot = HoldingsSnapshot {
            fund_id: "F1".into(),
            report_date: date(2017, 3, 31),
            report_kind: ReportKind::Quarterly,
            positions: vec![],
            asset_weights: Some(SleeveWeights::from_stock_bond(0.8, 0.1)),
        };
        let benchmark = BenchmarkDefinition {
            benchmark_id: "B1".into(),
            as_of: date(2017, 3, 31),
            constituents: vec![Position::new("A", 1.0)],
            asset_weights: Some(SleeveWeights::from_stock_bond(0.6, 0.3)),
        };
        let window = WindowReturns {
            months: vec![],
            per_stock: Default::default(),
            skipped_stocks: vec![],
            stock_market: 0.10,
            bond_market: Some(0.01),
            factor_rows: vec![],
        };
        let record = asset_allocation(&snapshot, &benchmark, &window).unwrap();
        // 0.10 * 0.2 + 0.01 * (-0.2) = 0.018
        assert!((record.value - 0.018).abs() < 1e-15);

        // equal sleeves -> zero
        let same = BenchmarkDefinition {
            asset_weights: snapshot.asset_weights,
            ..benchmark.clone()
        };
        assert_eq!(asset_allocation(&snapshot, &same, &window).unwrap().value, 0.0);

        // zero market returns -> zero for any tilt
        let flat = WindowReturns {
            stock_market: 0.0,
            bond_market: Some(0.0),
            ..window.clone()
        };
        assert_eq!(asset_allocation(&snapshot, &benchmark, &flat).unwrap().value, 0.0);

        // missing sleeves
        let bare = HoldingsSnapshot {
            asset_weights: None,
            ..snapshot.clone()
        };
        assert!(matches!(
            asset_allocation(&bare, &benchmark, &window),
            Err(BrinsonError::MissingSleeve(_))
        ));
    }

    #[test]
    fn accumulate_geometric_basics() {
        assert_eq!(accumulate_geometric(&[]).unwrap(), 0.0);
        assert!((accumulate_geometric(&[0.10, -0.10]).unwrap() + 0.01).abs() < 1e-15);
        assert_eq!(accumulate_geometric(&[0.042]).unwrap(), 0.042);
        assert!(matches!(
            accumulate_geometric(&[0.1, -1.0]),
            Err(BrinsonError::Degenerate(_))
        ));
    }

    #[test]
    fn accumulate_geometric_concatenation() {
        let left = [0.02, -0.01, 0.005];
        let right = [0.03, 0.0, -0.02];
        let both: Vec<f64> = left.iter().chain(right.iter()).copied().collect();
        let l = accumulate_geometric(&left).unwrap();
        let r = accumulate_geometric(&right).unwrap();
        let lr = accumulate_geometric(&both).unwrap();
        assert!((lr - ((1.0 + l) * (1.0 + r) - 1.0)).abs() < 1e-15);
    }

    mod with_panel {
        use super::*;
        use crate::model::{Position, ReportKind, SleeveWeights};
        use crate::panel::{FactorRow, MarketPanel};
        use std::collections::BTreeMap;

        fn snapshot(fund_id: &str, positions: &[(&str, f64)]) -> HoldingsSnapshot {
            HoldingsSnapshot {
                fund_id: fund_id.into(),
                report_date: date(2017, 6, 30),
                report_kind: ReportKind::Semiannual,
                positions: positions.iter().map(|(id, w)| Position::new(*id, *w)).collect(),
                asset_weights: Some(SleeveWeights::from_stock_bond(1.0, 0.0)),
            }
        }

        fn benchmark(constituents: &[(&str, f64)]) -> BenchmarkDefinition {
            BenchmarkDefinition {
                benchmark_id: "B".into(),
                as_of: date(2017, 6, 30),
                constituents: constituents
                    .iter()
                    .map(|(id, w)| Position::new(*id, *w))
                    .collect(),
                asset_weights: None,
            }
        }

        /// Six-month grid where each stock moves only in January, so its
        /// cumulative window return equals that single month.
        fn panel(
            monthly: &[(&str, &str, f64)], // (stock, industry, cumulative H1 return)
            nav: &[(&str, [f64; 6])],
        ) -> MarketPanel {
            let months: Vec<crate::model::Month> =
                (0..6).map(|k| crate::model::Month::new(2017, 1).offset(k)).collect();
            let mut stock_returns = BTreeMap::new();
            let mut industries = BTreeMap::new();
            for (stock, industry, cum) in monthly {
                let mut cells = vec![Some(0.0); 6];
                cells[0] = Some(*cum);
                stock_returns.insert(stock.to_string(), cells);
                industries.insert(stock.to_string(), industry.to_string());
            }
            let nav_returns: BTreeMap<String, Vec<Option<f64>>> = nav
                .iter()
                .map(|(fund, months)| {
                    (fund.to_string(), months.iter().map(|v| Some(*v)).collect())
                })
                .collect();
            MarketPanel::new(
                months,
                stock_returns,
                industries,
                vec![0.01; 6],
                Some(vec![0.001; 6]),
                vec![
                    FactorRow {
                        market_excess: 0.005,
                        smb: 0.0,
                        hml: 0.0,
                        risk_free: 0.002
                    };
                    6
                ],
                nav_returns,
                BTreeMap::new(),
            )
            .unwrap()
        }

        #[test]
        fn identical_single_stock_portfolios_collapse_to_one_row() {
            let panel = panel(&[("A", "X", 0.05)], &[]);
            let window = crate::panel::resolve_window(
                &panel,
                &WindowSpec::semiannual(date(2017, 6, 30), Direction::Before),
            )
            .unwrap();
            let (breakdown, issues) = build_breakdown(
                &snapshot("F", &[("A", 1.0)]),
                &benchmark(&[("A", 1.0)]),
                panel.industry_map(),
                &window,
                Direction::Before,
            )
            .unwrap();
            assert!(issues.is_empty());
            assert_eq!(breakdown.rows.len(), 1);
            let row = &breakdown.rows[0];
            assert_eq!(row.fund_weight, 1.0);
            assert_eq!(row.bench_weight, 1.0);
            assert!((row.fund_return - 0.05).abs() < 1e-15);
            assert!((row.bench_return - 0.05).abs() < 1e-15);
        }

        #[test]
        fn within_industry_returns_are_weight_proportional() {
            // fund holds A and B equally in industry X, benchmark holds A only
            let panel = panel(&[("A", "X", 0.10), ("B", "X", 0.0)], &[]);
            let window = crate::panel::resolve_window(
                &panel,
                &WindowSpec::semiannual(date(2017, 6, 30), Direction::Before),
            )
            .unwrap();
            let (breakdown, _) = build_breakdown(
                &snapshot("F", &[("A", 0.5), ("B", 0.5)]),
                &benchmark(&[("A", 1.0)]),
                panel.industry_map(),
                &window,
                Direction::Before,
            )
            .unwrap();
            assert_eq!(breakdown.rows.len(), 1);
            let row = &breakdown.rows[0];
            assert_eq!(row.fund_weight, 1.0);
            assert!((row.fund_return - 0.05).abs() < 1e-15);
            assert_eq!(row.bench_weight, 1.0);
            assert!((row.bench_return - 0.10).abs() < 1e-15);
        }

        #[test]
        fn one_sided_industries_fall_back_to_the_other_sides_total() {
            // fund holds industry Y which the benchmark lacks
            let panel = panel(&[("A", "X", 0.04), ("B", "Y", 0.12)], &[]);
            let window = crate::panel::resolve_window(
                &panel,
                &WindowSpec::semiannual(date(2017, 6, 30), Direction::Before),
            )
            .unwrap();
            let (breakdown, _) = build_breakdown(
                &snapshot("F", &[("A", 0.5), ("B", 0.5)]),
                &benchmark(&[("A", 1.0)]),
                panel.industry_map(),
                &window,
                Direction::Before,
            )
            .unwrap();
            let y = breakdown.rows.iter().find(|r| r.industry_id == "Y").unwrap();
            assert_eq!(y.bench_weight, 0.0);
            // benchmark total return is its only stock's 4%
            assert!((y.bench_return - 0.04).abs() < 1e-15);
            let record = decompose(&breakdown, "F");
            let sum = record.selection + record.allocation + record.interaction;
            assert!((sum - record.excess).abs() < 1e-12);
        }

        #[test]
        fn unpriced_stocks_are_dropped_and_the_sleeve_renormalized() {
            // C is neither priced nor classified; the fund's remaining
            // sleeve rescales to sum 1
            let panel = panel(&[("A", "X", 0.10), ("B", "X", 0.02)], &[]);
            let window = crate::panel::resolve_window(
                &panel,
                &WindowSpec::semiannual(date(2017, 6, 30), Direction::Before),
            )
            .unwrap();
            let (breakdown, issues) = build_breakdown(
                &snapshot("F", &[("A", 0.4), ("B", 0.4), ("C", 0.2)]),
                &benchmark(&[("A", 0.5), ("B", 0.5)]),
                panel.industry_map(),
                &window,
                Direction::Before,
            )
            .unwrap();
            assert_eq!(issues.len(), 1);
            assert_eq!(issues[0].code, codes::MISSING_PRICE);
            let row = &breakdown.rows[0];
            assert_eq!(row.fund_weight, 1.0);
            // A and B held equally after renormalization: mean return 6%
            assert!((row.fund_return - 0.06).abs() < 1e-15);
        }

        #[test]
        fn disjoint_industries_are_no_overlap() {
            let panel = panel(&[("A", "X", 0.04), ("B", "Y", 0.12)], &[]);
            let window = crate::panel::resolve_window(
                &panel,
                &WindowSpec::semiannual(date(2017, 6, 30), Direction::Before),
            )
            .unwrap();
            let err = build_breakdown(
                &snapshot("F", &[("B", 1.0)]),
                &benchmark(&[("A", 1.0)]),
                panel.industry_map(),
                &window,
                Direction::Before,
            )
            .unwrap_err();
            assert!(matches!(err, BrinsonError::NoOverlap));
        }

        #[test]
        fn attribute_against_the_fund_itself_is_all_zero() {
            let panel = panel(&[("A", "X", 0.07), ("B", "Y", -0.02)], &[]);
            let holdings = snapshot("F", &[("A", 0.6), ("B", 0.4)]);
            let same = benchmark(&[("A", 0.6), ("B", 0.4)]);
            let (record, _) = attribute(&holdings, &same, &panel, Direction::Before).unwrap();
            assert_eq!(record.selection, 0.0);
            assert_eq!(record.allocation, 0.0);
            assert_eq!(record.interaction, 0.0);
            assert_eq!(record.excess, 0.0);
        }

        #[test]
        fn validity_diff_is_subtraction_and_flags_missing_nav() {
            // fund NAV replicates its single holding exactly: diff 0
            let panel = panel(
                &[("A", "X", 0.06)],
                &[("F", [0.06, 0.0, 0.0, 0.0, 0.0, 0.0])],
            );
            let holdings = snapshot("F", &[("A", 1.0)]);
            let (diff, _) = holding_validity_diff(&holdings, &panel, Direction::Before).unwrap();
            assert!(diff.diff.abs() < 1e-12);
            assert_eq!(diff.diff, diff.assumed_return - diff.actual_return);

            let ghost = snapshot("G", &[("A", 1.0)]);
            assert!(matches!(
                holding_validity_diff(&ghost, &panel, Direction::Before),
                Err(BrinsonError::MissingNav(_))
            ));
        }
    }

    fn arb_breakdown() -> impl Strategy<Value = IndustryBreakdown> {
        let row = (
            0.01f64..1.0,
            -0.5f64..0.5,
            0.01f64..1.0,
            -0.5f64..0.5,
        );
        proptest::collection::vec(row, 1..30).prop_map(|raw| {
            let fund_sum: f64 = raw.iter().map(|r| r.0).sum();
            let bench_sum: f64 = raw.iter().map(|r| r.2).sum();
            IndustryBreakdown {
                report_date: date(2016, 12, 31),
                direction: Direction::Before,
                rows: raw
                    .iter()
                    .enumerate()
                    .map(|(i, (wf, rf, wb, rb))| IndustryRow {
                        industry_id: format!("I{i:02}"),
                        fund_weight: wf / fund_sum,
                        fund_return: *rf,
                        bench_weight: wb / bench_sum,
                        bench_return: *rb,
                    })
                    .collect(),
            }
        })
    }

    proptest! {
        #[test]
        fn additivity_holds_on_random_breakdowns(b in arb_breakdown()) {
            let record = decompose(&b, "F");
            let sum = record.selection + record.allocation + record.interaction;
            prop_assert!((sum - record.excess).abs() < 1e-12);
        }

        #[test]
        fn components_scale_linearly_with_returns(b in arb_breakdown(), lambda in 0.1f64..4.0) {
            let scaled = IndustryBreakdown {
                rows: b.rows.iter().map(|r| IndustryRow {
                    fund_return: r.fund_return * lambda,
                    bench_return: r.bench_return * lambda,
                    ..r.clone()
                }).collect(),
                ..b.clone()
            };
            let base = decompose(&b, "F");
            let big = decompose(&scaled, "F");
            prop_assert!((big.selection - lambda * base.selection).abs() < 1e-12);
            prop_assert!((big.allocation - lambda * base.allocation).abs() < 1e-12);
            prop_assert!((big.interaction - lambda * base.interaction).abs() < 1e-12);
        }

        #[test]
        fn translation_leaves_components_unchanged(b in arb_breakdown(), shift in -0.5f64..0.5) {
            let shifted = IndustryBreakdown {
                rows: b.rows.iter().map(|r| IndustryRow {
                    fund_return: r.fund_return + shift,
                    bench_return: r.bench_return + shift,
                    ..r.clone()
                }).collect(),
                ..b.clone()
            };
            let base = decompose(&b, "F");
            let moved = decompose(&shifted, "F");
            prop_assert!((moved.selection - base.selection).abs() < 1e-12);
            prop_assert!((moved.interaction - base.interaction).abs() < 1e-12);
            // weights sum to 1 on both sides, so allocation picks up nothing
            prop_assert!((moved.allocation - base.allocation).abs() < 1e-10);
        }
    }
}
