//! Monthly market panel: stock returns on a contiguous month grid, factor
//! series, fund NAV returns, benchmark index returns, and the window
//! resolution used by every holdings-based measure.

use crate::model::Month;
use std::collections::BTreeMap;
use thiserror::Error;

/// One month of factor data. `market_excess` is the market return net of the
/// risk-free rate; `risk_free` is the monthly risk-free rate itself.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FactorRow {
    pub market_excess: f64,
    pub smb: f64,
    pub hml: f64,
    pub risk_free: f64,
}

/// A dated monthly series with no missing cells; months strictly ascending.
#[derive(Debug, Clone, PartialEq)]
pub struct MonthlySeries {
    pub months: Vec<Month>,
    pub values: Vec<f64>,
}

impl MonthlySeries {
    pub fn len(&self) -> usize {
        self.months.len()
    }

    pub fn is_empty(&self) -> bool {
        self.months.is_empty()
    }

    /// The sub-series with months in `[from, to]`.
    pub fn restrict(&self, from: Month, to: Month) -> MonthlySeries {
        let mut months = Vec::new();
        let mut values = Vec::new();
        for (m, v) in self.months.iter().zip(&self.values) {
            if *m >= from && *m <= to {
                months.push(*m);
                values.push(*v);
            }
        }
        MonthlySeries { months, values }
    }
}

#[derive(Debug, Error)]
pub enum PanelError {
    #[error("panel has no months")]
    Empty,
    #[error("month grid has a gap between {0} and {1}")]
    GridGap(Month, Month),
    #[error("series length {got} does not match grid length {want}")]
    LengthMismatch { got: usize, want: usize },
    #[error("WINDOW_OUT_OF_RANGE: window {0}..{1} not covered by panel {2}..{3}")]
    WindowOutOfRange(Month, Month, Month, Month),
}

/// Per-period market data aligned to one contiguous monthly grid.
///
/// Missing cells are explicit (`None`), never silently zero. All series are
/// immutable once the panel is built.
#[derive(Debug, Clone)]
pub struct MarketPanel {
    months: Vec<Month>,
    stock_returns: BTreeMap<String, Vec<Option<f64>>>,
    industry_of: BTreeMap<String, String>,
    stock_market: Vec<f64>,
    bond_market: Option<Vec<f64>>,
    factors: Vec<FactorRow>,
    nav_returns: BTreeMap<String, Vec<Option<f64>>>,
    index_returns: BTreeMap<String, Vec<Option<f64>>>,
}

impl MarketPanel {
    /// Assembles a panel, checking that the grid is contiguous and every
    /// full series matches its length.
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        months: Vec<Month>,
        stock_returns: BTreeMap<String, Vec<Option<f64>>>,
        industry_of: BTreeMap<String, String>,
        stock_market: Vec<f64>,
        bond_market: Option<Vec<f64>>,
        factors: Vec<FactorRow>,
        nav_returns: BTreeMap<String, Vec<Option<f64>>>,
        index_returns: BTreeMap<String, Vec<Option<f64>>>,
    ) -> Result<MarketPanel, PanelError> {
        if months.is_empty() {
            return Err(PanelError::Empty);
        }
        for pair in months.windows(2) {
            if pair[1].serial() != pair[0].serial() + 1 {
                return Err(PanelError::GridGap(pair[0], pair[1]));
            }
        }
        let want = months.len();
        let check = |got: usize| {
            if got == want {
                Ok(())
            } else {
                Err(PanelError::LengthMismatch { got, want })
            }
        };
        check(stock_market.len())?;
        check(factors.len())?;
        if let Some(b) = &bond_market {
            check(b.len())?;
        }
        for series in stock_returns
            .values()
            .chain(nav_returns.values())
            .chain(index_returns.values())
        {
            check(series.len())?;
        }
        Ok(MarketPanel {
            months,
            stock_returns,
            industry_of,
            stock_market,
            bond_market,
            factors,
            nav_returns,
            index_returns,
        })
    }

    pub fn months(&self) -> &[Month] {
        &self.months
    }

    pub fn first_month(&self) -> Month {
        self.months[0]
    }

    pub fn last_month(&self) -> Month {
        *self.months.last().unwrap()
    }

    pub fn month_index(&self, month: Month) -> Option<usize> {
        let offset = month.serial() - self.months[0].serial();
        if offset < 0 || offset as usize >= self.months.len() {
            None
        } else {
            Some(offset as usize)
        }
    }

    pub fn stock_ids(&self) -> impl Iterator<Item = &str> {
        self.stock_returns.keys().map(|s| s.as_str())
    }

    pub fn fund_ids(&self) -> impl Iterator<Item = &str> {
        self.nav_returns.keys().map(|s| s.as_str())
    }

    pub fn index_ids(&self) -> impl Iterator<Item = &str> {
        self.index_returns.keys().map(|s| s.as_str())
    }

    pub fn industry_of(&self, stock_id: &str) -> Option<&str> {
        self.industry_of.get(stock_id).map(|s| s.as_str())
    }

    pub fn industry_map(&self) -> &BTreeMap<String, String> {
        &self.industry_of
    }

    pub fn factors(&self) -> &[FactorRow] {
        &self.factors
    }

    pub fn stock_return(&self, stock_id: &str, month: Month) -> Option<f64> {
        let idx = self.month_index(month)?;
        self.stock_returns.get(stock_id)?.get(idx).copied().flatten()
    }

    pub fn has_bond_market(&self) -> bool {
        self.bond_market.is_some()
    }

    /// Factor series restricted to months where a fund has NAV data.
    pub fn nav_series(&self, fund_id: &str) -> Option<MonthlySeries> {
        self.series_of(self.nav_returns.get(fund_id)?)
    }

    pub fn index_series(&self, benchmark_id: &str) -> Option<MonthlySeries> {
        self.series_of(self.index_returns.get(benchmark_id)?)
    }

    fn series_of(&self, cells: &[Option<f64>]) -> Option<MonthlySeries> {
        let mut months = Vec::new();
        let mut values = Vec::new();
        for (i, cell) in cells.iter().enumerate() {
            if let Some(v) = cell {
                months.push(self.months[i]);
                values.push(*v);
            }
        }
        if months.is_empty() {
            None
        } else {
            Some(MonthlySeries { months, values })
        }
    }

    /// Geometrically compounded NAV return over a month range, or `None`
    /// if any month in the range is missing.
    pub fn compound_nav(&self, fund_id: &str, window: &[Month]) -> Option<f64> {
        let series = self.nav_returns.get(fund_id)?;
        let mut acc = 1.0;
        for month in window {
            let idx = self.month_index(*month)?;
            acc *= 1.0 + series[idx]?;
        }
        Some(acc - 1.0)
    }

    pub fn factor_table(&self) -> FactorTable {
        FactorTable {
            months: self.months.clone(),
            rows: self.factors.clone(),
        }
    }
}

/// Dated factor rows, months strictly ascending.
#[derive(Debug, Clone)]
pub struct FactorTable {
    pub months: Vec<Month>,
    pub rows: Vec<FactorRow>,
}

impl FactorTable {
    pub fn row_at(&self, month: Month) -> Option<&FactorRow> {
        self.months
            .binary_search(&month)
            .ok()
            .map(|i| &self.rows[i])
    }
}

/// Cumulative simple return: `prod(1 + r) - 1`.
pub fn compound(returns: impl IntoIterator<Item = f64>) -> f64 {
    returns.into_iter().fold(1.0, |acc, r| acc * (1.0 + r)) - 1.0
}

/// A return window anchored to a report date.
///
/// `Before` covers the `horizon_months` calendar months ending with the
/// report month; `After` covers the months starting right after it.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WindowSpec {
    pub report_date: chrono::NaiveDate,
    pub direction: crate::model::Direction,
    pub horizon_months: u32,
}

impl WindowSpec {
    pub fn semiannual(report_date: chrono::NaiveDate, direction: crate::model::Direction) -> Self {
        WindowSpec {
            report_date,
            direction,
            horizon_months: 6,
        }
    }

    pub fn quarterly_after(report_date: chrono::NaiveDate) -> Self {
        WindowSpec {
            report_date,
            direction: crate::model::Direction::After,
            horizon_months: 3,
        }
    }

    pub fn month_range(&self) -> (Month, Month) {
        let report_month = Month::from_date(self.report_date);
        let h = self.horizon_months as i32;
        match self.direction {
            crate::model::Direction::Before => (report_month.offset(1 - h), report_month),
            crate::model::Direction::After => (report_month.offset(1), report_month.offset(h)),
        }
    }
}

/// Window-level returns: cumulative per-stock returns plus market and factor
/// data restricted to the window. Stocks missing any month in the window are
/// omitted and listed in `skipped_stocks`.
#[derive(Debug, Clone)]
pub struct WindowReturns {
    pub months: Vec<Month>,
    pub per_stock: BTreeMap<String, f64>,
    pub skipped_stocks: Vec<String>,
    pub stock_market: f64,
    pub bond_market: Option<f64>,
    pub factor_rows: Vec<FactorRow>,
}

pub fn resolve_window(panel: &MarketPanel, spec: &WindowSpec) -> Result<WindowReturns, PanelError> {
    debug_assert!(
        spec.horizon_months == 3 || spec.horizon_months == 6,
        "report windows are quarterly or semiannual"
    );
    let (start, end) = spec.month_range();
    let (lo, hi) = match (panel.month_index(start), panel.month_index(end)) {
        (Some(lo), Some(hi)) => (lo, hi),
        _ => {
            return Err(PanelError::WindowOutOfRange(
                start,
                end,
                panel.first_month(),
                panel.last_month(),
            ))
        }
    };

    let months: Vec<Month> = panel.months[lo..=hi].to_vec();
    let mut per_stock = BTreeMap::new();
    let mut skipped = Vec::new();
    for (stock_id, series) in &panel.stock_returns {
        let cells = &series[lo..=hi];
        if cells.iter().all(|c| c.is_some()) {
            per_stock.insert(
                stock_id.clone(),
                compound(cells.iter().map(|c| c.unwrap())),
            );
        } else {
            skipped.push(stock_id.clone());
        }
    }

    Ok(WindowReturns {
        months,
        per_stock,
        skipped_stocks: skipped,
        stock_market: compound(panel.stock_market[lo..=hi].iter().copied()),
        bond_market: panel
            .bond_market
            .as_ref()
            .map(|b| compound(b[lo..=hi].iter().copied())),
        factor_rows: panel.factors[lo..=hi].to_vec(),
    })
}
