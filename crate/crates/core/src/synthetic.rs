//! Seeded synthetic fund universe with injectable skills.
//!
//! Stands in for proprietary holdings data: stock returns carry a market
//! factor, per-industry factors, style loadings and idiosyncratic noise;
//! funds hold rebalanced-at-report portfolios whose NAV paths are consistent
//! with their holdings plus whatever skill the config injects. Identical
//! configs produce byte-identical files.
//!
//! Randomness is drawn from ChaCha12 with one independent stream per
//! (purpose, entity) pair, so adding funds or stocks never perturbs the
//! draws of existing ones.

use crate::model::{HoldingsSnapshot, Month, Position, ReportKind, SleeveWeights};
use crate::panel::{FactorRow, MarketPanel};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;
use rand_distr::StandardNormal;
use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;
use thiserror::Error;

pub const BENCHMARK_ID: &str = "BENCH";
pub const BOND_INDEX_ID: &str = "BOND";

#[derive(Debug, Error, PartialEq)]
pub enum SyntheticError {
    #[error("UNKNOWN_FUND: no fund named {0}")]
    UnknownFund(String),
    #[error("trade month {0} is not strictly inside a semiannual window")]
    OutsideWindow(Month),
}

/// Skill injected into one fund.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FundSkill {
    /// Expected monthly return edge from within-industry stock picking.
    /// Requires `alpha_spread > 0` to be expressible in holdings.
    pub selection_drift: f64,
    /// Loading on squared market excess return in the fund's NAV, mirrored
    /// by industry tilts toward recently strong industries.
    pub timing_gamma: f64,
    /// AR(1) coefficient of the per-report skill state around its mean.
    pub persistence_rho: f64,
}

impl FundSkill {
    pub const NONE: FundSkill = FundSkill {
        selection_drift: 0.0,
        timing_gamma: 0.0,
        persistence_rho: 0.0,
    };
}

/// Market- and microstructure-level generator parameters. All returns are
/// monthly fractions.
#[derive(Debug, Clone, PartialEq)]
pub struct MarketParams {
    pub risk_free: f64,
    pub market_mean_excess: f64,
    pub market_vol: f64,
    pub factor_vol: f64,
    pub industry_vol: f64,
    pub idio_vol: f64,
    /// Dispersion of per-stock market/size/value loadings around (1, 0, 0).
    pub loading_spread: f64,
    /// Half-spread of persistent per-stock drifts; within each industry one
    /// half of the stocks gets `+alpha_spread`, the other `-alpha_spread`.
    pub alpha_spread: f64,
    /// Lognormal sigma of constituent capitalizations (0 = equal weights).
    pub cap_spread: f64,
    pub bond_spread: f64,
    pub bond_vol: f64,
    /// Stocks picked from each of the two per-industry pools at a rebalance.
    pub picks_per_pool: usize,
    pub fund_stock_sleeve: f64,
    pub sleeve_vol: f64,
    pub bench_stock_sleeve: f64,
    /// Random log-tilt applied to fund industry weights at each rebalance.
    pub industry_tilt_noise: f64,
    /// Industry log-tilt per unit of timing skill and trailing factor move.
    pub timing_tilt: f64,
    /// Innovation standard deviation of the AR(1) skill state.
    pub skill_noise: f64,
    pub nav_noise: f64,
}

impl Default for MarketParams {
    fn default() -> Self {
        MarketParams {
            risk_free: 0.0025,
            market_mean_excess: 0.004,
            market_vol: 0.05,
            factor_vol: 0.01,
            industry_vol: 0.02,
            idio_vol: 0.04,
            loading_spread: 0.2,
            alpha_spread: 0.0,
            cap_spread: 0.5,
            bond_spread: 0.0005,
            bond_vol: 0.005,
            picks_per_pool: 1,
            fund_stock_sleeve: 0.9,
            sleeve_vol: 0.0,
            bench_stock_sleeve: 0.9,
            industry_tilt_noise: 0.1,
            timing_tilt: 8.0,
            skill_noise: 0.0,
            nav_noise: 0.002,
        }
    }
}

impl MarketParams {
    /// No cross-stock dispersion at all: every stock earns the market
    /// return, portfolios never drift, NAV equals buy-and-hold exactly.
    pub fn zero_noise() -> MarketParams {
        MarketParams {
            market_vol: 0.05,
            factor_vol: 0.0,
            industry_vol: 0.0,
            idio_vol: 0.0,
            loading_spread: 0.0,
            alpha_spread: 0.0,
            cap_spread: 0.0,
            bond_vol: 0.0,
            fund_stock_sleeve: 1.0,
            sleeve_vol: 0.0,
            bench_stock_sleeve: 1.0,
            industry_tilt_noise: 0.0,
            nav_noise: 0.0,
            ..MarketParams::default()
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct UniverseConfig {
    pub n_funds: usize,
    pub n_stocks: usize,
    pub n_industries: usize,
    pub n_months: usize,
    pub seed: u64,
    /// First month of the panel; must be a January so quarters align.
    pub start: Month,
    pub skills: Vec<FundSkill>,
    pub params: MarketParams,
}

impl UniverseConfig {
    pub fn new(
        n_funds: usize,
        n_stocks: usize,
        n_industries: usize,
        n_months: usize,
        seed: u64,
    ) -> UniverseConfig {
        UniverseConfig {
            n_funds,
            n_stocks,
            n_industries,
            n_months,
            seed,
            start: Month::new(2008, 1),
            skills: vec![FundSkill::NONE; n_funds],
            params: MarketParams::default(),
        }
    }

    pub fn with_skills(mut self, skills: Vec<FundSkill>) -> UniverseConfig {
        self.skills = skills;
        self
    }

    pub fn with_params(mut self, params: MarketParams) -> UniverseConfig {
        self.params = params;
        self
    }

    fn validate(&self) {
        assert!(self.n_funds > 0 && self.n_stocks > 0 && self.n_industries > 0);
        assert!(self.n_months > 0);
        assert!(self.n_stocks >= 2 * self.n_industries, "each industry needs both pools");
        assert_eq!(self.skills.len(), self.n_funds, "one skill entry per fund");
        assert_eq!(self.start.month(), 1, "universe must start in January");
        for skill in &self.skills {
            assert!(
                skill.persistence_rho.abs() < 1.0,
                "persistence_rho must lie in (-1, 1)"
            );
        }
    }
}

// Stream purposes; the (purpose, entity) pair selects an independent
// ChaCha12 stream under the configured seed.
const STREAM_FACTORS: u64 = 0;
const STREAM_BOND: u64 = 1;
const STREAM_LOADINGS: u64 = 2;
const STREAM_IDIO: u64 = 3;
const STREAM_CAPS: u64 = 4;
const STREAM_INDUSTRY: u64 = 5;
const STREAM_SKILL: u64 = 6;
const STREAM_PICKS: u64 = 7;
const STREAM_SLEEVES: u64 = 8;
const STREAM_NAV_NOISE: u64 = 9;
const STREAM_TILT: u64 = 10;

fn stream_rng(seed: u64, purpose: u64, entity: u64) -> ChaCha12Rng {
    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    rng.set_stream((purpose << 40) | entity);
    rng
}

fn normal(rng: &mut ChaCha12Rng) -> f64 {
    rng.sample(StandardNormal)
}

struct FundData {
    id: String,
    sigma_by_month: Vec<f64>,
    nav: Vec<f64>,
    /// NAV minus the stock-sleeve contribution, kept so trade injection can
    /// rewrite the sleeve part without re-drawing noise.
    extras: Vec<f64>,
    snapshots: Vec<HoldingsSnapshot>,
}

/// A fully generated universe, queryable in memory and writable as the
/// ingestion file set.
pub struct SyntheticUniverse {
    pub config: UniverseConfig,
    months: Vec<Month>,
    stock_ids: Vec<String>,
    industry_ids: Vec<String>,
    industry_of_stock: Vec<usize>,
    /// Per stock: n_months + 1 prices; index 0 sits one month before the grid.
    prices: Vec<Vec<f64>>,
    /// Canonical returns recomputed from the stored prices, so file
    /// round-trips reproduce them bit for bit.
    returns: Vec<Vec<f64>>,
    bench_weights: Vec<f64>,
    bench_returns: Vec<f64>,
    bond_returns: Vec<f64>,
    factors: Vec<FactorRow>,
    funds: Vec<FundData>,
}

/// Generates the complete universe for a config. Deterministic: the same
/// config yields identical in-memory data and identical files.
pub fn generate_universe(config: &UniverseConfig) -> SyntheticUniverse {
    config.validate();
    let p = &config.params;
    let n_months = config.n_months;
    let months: Vec<Month> = (0..n_months as i32).map(|k| config.start.offset(k)).collect();

    let stock_ids: Vec<String> = (0..config.n_stocks).map(|j| format!("S{j:04}")).collect();
    let industry_ids: Vec<String> = (0..config.n_industries).map(|i| format!("IND{i:02}")).collect();
    let industry_of_stock: Vec<usize> = (0..config.n_stocks).map(|j| j % config.n_industries).collect();

    // factor series
    let mut rng = stream_rng(config.seed, STREAM_FACTORS, 0);
    let factors: Vec<FactorRow> = (0..n_months)
        .map(|_| FactorRow {
            market_excess: p.market_mean_excess + p.market_vol * normal(&mut rng),
            smb: p.factor_vol * normal(&mut rng),
            hml: p.factor_vol * normal(&mut rng),
            risk_free: p.risk_free,
        })
        .collect();

    let mut rng = stream_rng(config.seed, STREAM_BOND, 0);
    let bond_returns: Vec<f64> = (0..n_months)
        .map(|_| p.risk_free + p.bond_spread + p.bond_vol * normal(&mut rng))
        .collect();

    // per-industry factor paths
    let industry_paths: Vec<Vec<f64>> = (0..config.n_industries)
        .map(|i| {
            let mut rng = stream_rng(config.seed, STREAM_INDUSTRY, i as u64);
            (0..n_months).map(|_| p.industry_vol * normal(&mut rng)).collect()
        })
        .collect();

    // per-stock loadings, caps, persistent drifts
    struct StockParams {
        beta: f64,
        smb: f64,
        hml: f64,
        alpha: f64,
        cap: f64,
    }
    let mut rank_within_industry = vec![0usize; config.n_stocks];
    {
        let mut counts = vec![0usize; config.n_industries];
        for j in 0..config.n_stocks {
            let ind = industry_of_stock[j];
            rank_within_industry[j] = counts[ind];
            counts[ind] += 1;
        }
    }
    let stock_params: Vec<StockParams> = (0..config.n_stocks)
        .map(|j| {
            let mut rng = stream_rng(config.seed, STREAM_LOADINGS, j as u64);
            let beta = 1.0 + p.loading_spread * normal(&mut rng);
            let smb = p.loading_spread * normal(&mut rng);
            let hml = p.loading_spread * normal(&mut rng);
            let mut cap_rng = stream_rng(config.seed, STREAM_CAPS, j as u64);
            let cap = (p.cap_spread * normal(&mut cap_rng)).exp();
            let alpha = if rank_within_industry[j].is_multiple_of(2) {
                p.alpha_spread
            } else {
                -p.alpha_spread
            };
            StockParams {
                beta,
                smb,
                hml,
                alpha,
                cap,
            }
        })
        .collect();

    // price paths, then canonical returns from the stored prices
    let mut prices: Vec<Vec<f64>> = Vec::with_capacity(config.n_stocks);
    let mut returns: Vec<Vec<f64>> = Vec::with_capacity(config.n_stocks);
    for j in 0..config.n_stocks {
        let sp = &stock_params[j];
        let ind = industry_of_stock[j];
        let mut rng = stream_rng(config.seed, STREAM_IDIO, j as u64);
        let mut path = Vec::with_capacity(n_months + 1);
        path.push(100.0);
        for t in 0..n_months {
            let f = &factors[t];
            let raw = f.risk_free
                + sp.beta * f.market_excess
                + sp.smb * f.smb
                + sp.hml * f.hml
                + industry_paths[ind][t]
                + sp.alpha
                + p.idio_vol * normal(&mut rng);
            let r = raw.max(-0.95);
            let last = *path.last().unwrap();
            path.push(last * (1.0 + r));
        }
        let rets: Vec<f64> = (0..n_months).map(|t| path[t + 1] / path[t] - 1.0).collect();
        prices.push(path);
        returns.push(rets);
    }

    // static value-weighted benchmark (monthly rebalanced index)
    let cap_total: f64 = stock_params.iter().map(|s| s.cap).sum();
    let bench_weights: Vec<f64> = stock_params.iter().map(|s| s.cap / cap_total).collect();
    let bench_returns: Vec<f64> = (0..n_months)
        .map(|t| {
            bench_weights
                .iter()
                .zip(&returns)
                .map(|(w, r)| w * r[t])
                .sum()
        })
        .collect();
    let industry_bench_weight: Vec<f64> = {
        let mut acc = vec![0.0; config.n_industries];
        for j in 0..config.n_stocks {
            acc[industry_of_stock[j]] += bench_weights[j];
        }
        acc
    };

    // per-industry pools: even rank carries +alpha, odd rank -alpha
    let mut plus_pool: Vec<Vec<usize>> = vec![Vec::new(); config.n_industries];
    let mut minus_pool: Vec<Vec<usize>> = vec![Vec::new(); config.n_industries];
    for j in 0..config.n_stocks {
        let ind = industry_of_stock[j];
        if rank_within_industry[j].is_multiple_of(2) {
            plus_pool[ind].push(j);
        } else {
            minus_pool[ind].push(j);
        }
    }

    let n_quarters = n_months.div_ceil(3);
    let semiannual_indices: Vec<usize> = (0..n_months)
        .filter(|t| matches!(months[*t].month(), 6 | 12))
        .collect();

    let funds: Vec<FundData> = (0..config.n_funds)
        .map(|f| {
            let skill = config.skills[f];
            let id = format!("F{f:04}");

            // AR(1) skill state around the mean drift, one value per rebalance
            let mut skill_rng = stream_rng(config.seed, STREAM_SKILL, f as u64);
            let n_rebalances = semiannual_indices.len() + 1;
            let mut drift_states = Vec::with_capacity(n_rebalances);
            let mut state = if skill.persistence_rho != 0.0 && p.skill_noise > 0.0 {
                p.skill_noise / (1.0 - skill.persistence_rho * skill.persistence_rho).sqrt()
                    * normal(&mut skill_rng)
            } else {
                p.skill_noise * normal(&mut skill_rng)
            };
            for _ in 0..n_rebalances {
                drift_states.push(skill.selection_drift + state);
                state = skill.persistence_rho * state + p.skill_noise * normal(&mut skill_rng);
            }

            // sleeve targets per quarter (plus the trailing boundary)
            let mut sleeve_rng = stream_rng(config.seed, STREAM_SLEEVES, f as u64);
            let sleeve_by_quarter: Vec<f64> = (0..n_quarters + 2)
                .map(|_| (p.fund_stock_sleeve + p.sleeve_vol * normal(&mut sleeve_rng)).clamp(0.0, 1.0))
                .collect();
            let sigma_by_month: Vec<f64> = (0..n_months).map(|t| sleeve_by_quarter[t / 3]).collect();

            let mut picks_rng = stream_rng(config.seed, STREAM_PICKS, f as u64);
            let mut tilt_rng = stream_rng(config.seed, STREAM_TILT, f as u64);

            // target weights within the stock sleeve at one rebalance
            let mut rebalance = |rebalance_index: usize, effective_from: usize| -> Vec<(usize, f64)> {
                let drift = drift_states[rebalance_index];
                let q_plus = if p.alpha_spread > 0.0 {
                    (0.5 + drift / (2.0 * p.alpha_spread)).clamp(0.0, 1.0)
                } else {
                    0.5
                };
                // trailing industry moves seen at the rebalance
                let trail_end = effective_from as i64 - 1;
                let trail_start = (trail_end - 5).max(0);
                let mut weights = Vec::with_capacity(config.n_industries);
                for i in 0..config.n_industries {
                    let trail: f64 = if trail_end >= 0 {
                        (trail_start..=trail_end)
                            .map(|s| industry_paths[i][s as usize])
                            .sum()
                    } else {
                        0.0
                    };
                    let tilt = p.timing_tilt * skill.timing_gamma * trail
                        + p.industry_tilt_noise * normal(&mut tilt_rng);
                    weights.push(industry_bench_weight[i] * tilt.exp());
                }
                let total: f64 = weights.iter().sum();
                for w in &mut weights {
                    *w /= total;
                }

                let mut positions: Vec<(usize, f64)> = Vec::new();
                for i in 0..config.n_industries {
                    let k = p.picks_per_pool.min(plus_pool[i].len()).max(1);
                    let chosen_plus = sample_without_replacement(&plus_pool[i], k, &mut picks_rng);
                    let k_minus = p.picks_per_pool.min(minus_pool[i].len()).max(1);
                    let chosen_minus =
                        sample_without_replacement(&minus_pool[i], k_minus, &mut picks_rng);
                    for j in &chosen_plus {
                        positions.push((*j, weights[i] * q_plus / chosen_plus.len() as f64));
                    }
                    for j in &chosen_minus {
                        positions.push((*j, weights[i] * (1.0 - q_plus) / chosen_minus.len() as f64));
                    }
                }
                positions.retain(|(_, w)| *w > 0.0);
                positions.sort_by_key(|(j, _)| *j);
                positions
            };

            let mut nav_rng = stream_rng(config.seed, STREAM_NAV_NOISE, f as u64);
            let mut nav = Vec::with_capacity(n_months);
            let mut extras = Vec::with_capacity(n_months);
            let mut snapshots = Vec::new();

            let mut current: Vec<(usize, f64)> = rebalance(0, 0);
            let mut next_rebalance = 1usize;
            for t in 0..n_months {
                let sleeve_ret: f64 = current.iter().map(|(j, w)| w * returns[*j][t]).sum();
                // buy-and-hold drift of the sleeve weights
                for (j, w) in &mut current {
                    *w = *w * (1.0 + returns[*j][t]) / (1.0 + sleeve_ret);
                }
                let sigma = sigma_by_month[t];
                let f_row = &factors[t];
                let extra = (1.0 - sigma) * bond_returns[t]
                    + skill.timing_gamma * f_row.market_excess * f_row.market_excess
                    + p.nav_noise * normal(&mut nav_rng);
                nav.push(sigma * sleeve_ret + extra);
                extras.push(extra);

                // month-end reporting and rebalancing
                let month = months[t];
                let quarter_end = matches!(month.month(), 3 | 6 | 9 | 12);
                let semiannual = matches!(month.month(), 6 | 12);
                if semiannual {
                    current = rebalance(next_rebalance, t + 1);
                    next_rebalance += 1;
                }
                if quarter_end {
                    let sigma_next = sleeve_by_quarter[t / 3 + 1];
                    let (kind, positions) = if semiannual {
                        let positions = current
                            .iter()
                            .map(|(j, w)| Position::new(stock_ids[*j].clone(), w * sigma_next))
                            .collect();
                        (ReportKind::Semiannual, positions)
                    } else {
                        (ReportKind::Quarterly, Vec::new())
                    };
                    snapshots.push(HoldingsSnapshot {
                        fund_id: id.clone(),
                        report_date: month.end_date(),
                        report_kind: kind,
                        positions,
                        asset_weights: Some(SleeveWeights::from_stock_bond(
                            sigma_next,
                            1.0 - sigma_next,
                        )),
                    });
                }
            }

            FundData {
                id,
                sigma_by_month,
                nav,
                extras,
                snapshots,
            }
        })
        .collect();

    SyntheticUniverse {
        config: config.clone(),
        months,
        stock_ids,
        industry_ids,
        industry_of_stock,
        prices,
        returns,
        bench_weights,
        bench_returns,
        bond_returns,
        factors,
        funds,
    }
}

fn sample_without_replacement(pool: &[usize], k: usize, rng: &mut ChaCha12Rng) -> Vec<usize> {
    let mut indices: Vec<usize> = pool.to_vec();
    let mut chosen = Vec::with_capacity(k);
    for _ in 0..k.min(indices.len()) {
        let pick = rng.random_range(0..indices.len());
        chosen.push(indices.swap_remove(pick));
    }
    chosen.sort_unstable();
    chosen
}

impl SyntheticUniverse {
    pub fn months(&self) -> &[Month] {
        &self.months
    }

    pub fn fund_ids(&self) -> impl Iterator<Item = &str> {
        self.funds.iter().map(|f| f.id.as_str())
    }

    pub fn snapshots_of(&self, fund_id: &str) -> Option<&[HoldingsSnapshot]> {
        self.funds
            .iter()
            .find(|f| f.id == fund_id)
            .map(|f| f.snapshots.as_slice())
    }

    /// Report dates carrying positions (the semiannual grid).
    pub fn semiannual_dates(&self) -> Vec<chrono::NaiveDate> {
        self.months
            .iter()
            .filter(|m| matches!(m.month(), 6 | 12))
            .map(|m| m.end_date())
            .collect()
    }

    /// The shared benchmark definition as of a report date.
    pub fn benchmark_at(&self, as_of: chrono::NaiveDate) -> crate::model::BenchmarkDefinition {
        crate::model::BenchmarkDefinition {
            benchmark_id: BENCHMARK_ID.to_string(),
            as_of,
            constituents: self
                .stock_ids
                .iter()
                .zip(&self.bench_weights)
                .map(|(id, w)| Position::new(id.clone(), *w))
                .collect(),
            asset_weights: Some(SleeveWeights::from_stock_bond(
                self.config.params.bench_stock_sleeve,
                1.0 - self.config.params.bench_stock_sleeve,
            )),
        }
    }

    /// Builds the market panel directly, bypassing the CSV round trip.
    pub fn to_panel(&self) -> MarketPanel {
        let stock_returns: BTreeMap<String, Vec<Option<f64>>> = self
            .stock_ids
            .iter()
            .zip(&self.returns)
            .map(|(id, r)| (id.clone(), r.iter().map(|v| Some(*v)).collect()))
            .collect();
        let industry_of: BTreeMap<String, String> = self
            .stock_ids
            .iter()
            .enumerate()
            .map(|(j, id)| (id.clone(), self.industry_ids[self.industry_of_stock[j]].clone()))
            .collect();
        let nav_returns: BTreeMap<String, Vec<Option<f64>>> = self
            .funds
            .iter()
            .map(|f| (f.id.clone(), f.nav.iter().map(|v| Some(*v)).collect()))
            .collect();
        let mut index_returns: BTreeMap<String, Vec<Option<f64>>> = BTreeMap::new();
        index_returns.insert(
            BENCHMARK_ID.to_string(),
            self.bench_returns.iter().map(|v| Some(*v)).collect(),
        );
        index_returns.insert(
            BOND_INDEX_ID.to_string(),
            self.bond_returns.iter().map(|v| Some(*v)).collect(),
        );
        MarketPanel::new(
            self.months.clone(),
            stock_returns,
            industry_of,
            self.bench_returns.clone(),
            Some(self.bond_returns.clone()),
            self.factors.clone(),
            nav_returns,
            index_returns,
        )
        .expect("generated panel is structurally valid")
    }

    /// Rewrites one fund's NAV inside the semiannual window containing
    /// `trade_month`: from that month to the window's end the stock sleeve
    /// sits entirely in the window's best-performing stock, while the
    /// reported snapshots stay untouched. The original path resumes at the
    /// next report.
    pub fn inject_trading_gap(
        &mut self,
        fund_id: &str,
        trade_month: Month,
    ) -> Result<(), SyntheticError> {
        let fund_pos = self
            .funds
            .iter()
            .position(|f| f.id == fund_id)
            .ok_or_else(|| SyntheticError::UnknownFund(fund_id.to_string()))?;
        let t0 = self
            .months
            .iter()
            .position(|m| *m == trade_month)
            .ok_or(SyntheticError::OutsideWindow(trade_month))?;

        // locate the enclosing window: (last semiannual end before t0, +6]
        let report_t = (0..t0)
            .rev()
            .find(|t| matches!(self.months[*t].month(), 6 | 12))
            .ok_or(SyntheticError::OutsideWindow(trade_month))?;
        let window_end = (report_t + 6).min(self.months.len() - 1);
        if t0 > window_end {
            return Err(SyntheticError::OutsideWindow(trade_month));
        }

        // the best cumulative performer over the remaining window months
        let best = (0..self.stock_ids.len())
            .max_by(|a, b| {
                let cum = |j: usize| {
                    (t0..=window_end).fold(1.0, |acc, t| acc * (1.0 + self.returns[j][t]))
                };
                cum(*a)
                    .partial_cmp(&cum(*b))
                    .unwrap()
                    .then(self.stock_ids[*b].cmp(&self.stock_ids[*a]))
            })
            .unwrap();

        let fund = &mut self.funds[fund_pos];
        for t in t0..=window_end {
            let sigma = fund.sigma_by_month[t];
            fund.nav[t] = sigma * self.returns[best][t] + fund.extras[t];
        }
        Ok(())
    }

    /// Renders the full ingestion file set, keyed by file name.
    pub fn render_files(&self) -> Vec<(&'static str, String)> {
        let mut holdings = String::from(
            "fund_id,report_date,report_kind,stock_id,weight,stock_sleeve,bond_sleeve\n",
        );
        for fund in &self.funds {
            for snapshot in &fund.snapshots {
                let sleeves = snapshot.asset_weights.unwrap();
                if snapshot.positions.is_empty() {
                    let _ = writeln!(
                        holdings,
                        "{},{},{},,,{},{}",
                        fund.id, snapshot.report_date, snapshot.report_kind, sleeves.stock, sleeves.bond
                    );
                } else {
                    for p in &snapshot.positions {
                        let _ = writeln!(
                            holdings,
                            "{},{},{},{},{},{},{}",
                            fund.id,
                            snapshot.report_date,
                            snapshot.report_kind,
                            p.stock_id,
                            p.weight,
                            sleeves.stock,
                            sleeves.bond
                        );
                    }
                }
            }
        }

        let mut benchmark =
            String::from("benchmark_id,as_of,stock_id,weight,stock_sleeve,bond_sleeve\n");
        let bench_sleeve = self.config.params.bench_stock_sleeve;
        for t in 0..self.months.len() {
            let month = self.months[t];
            if !matches!(month.month(), 3 | 6 | 9 | 12) {
                continue;
            }
            let date = month.end_date();
            for (id, w) in self.stock_ids.iter().zip(&self.bench_weights) {
                let _ = writeln!(
                    benchmark,
                    "{BENCHMARK_ID},{date},{id},{w},{bench_sleeve},{}",
                    1.0 - bench_sleeve
                );
            }
        }

        let mut prices = String::from("stock_id,month,close\n");
        for (id, path) in self.stock_ids.iter().zip(&self.prices) {
            for (t, price) in path.iter().enumerate() {
                let month = self.config.start.offset(t as i32 - 1);
                let _ = writeln!(prices, "{id},{month},{price}");
            }
        }

        let mut industries = String::from("stock_id,industry_id\n");
        for (j, id) in self.stock_ids.iter().enumerate() {
            let _ = writeln!(industries, "{id},{}", self.industry_ids[self.industry_of_stock[j]]);
        }

        let mut factors = String::from("month,market_excess,smb,hml,risk_free\n");
        for (month, row) in self.months.iter().zip(&self.factors) {
            let _ = writeln!(
                factors,
                "{month},{},{},{},{}",
                row.market_excess, row.smb, row.hml, row.risk_free
            );
        }

        let mut nav = String::from("fund_id,month,nav_return\n");
        for fund in &self.funds {
            for (month, v) in self.months.iter().zip(&fund.nav) {
                let _ = writeln!(nav, "{},{month},{v}", fund.id);
            }
        }

        let mut index = String::from("benchmark_id,month,index_return\n");
        for (month, v) in self.months.iter().zip(&self.bench_returns) {
            let _ = writeln!(index, "{BENCHMARK_ID},{month},{v}");
        }
        for (month, v) in self.months.iter().zip(&self.bond_returns) {
            let _ = writeln!(index, "{BOND_INDEX_ID},{month},{v}");
        }

        let mut funds = String::from("fund_id,benchmark_id\n");
        for fund in &self.funds {
            let _ = writeln!(funds, "{},{BENCHMARK_ID}", fund.id);
        }

        let workspace = format!(
            "gap_limit = 2\n\
             df_convention = \"n-2\"\n\
             significance_levels = [0.10, 0.05]\n\
             stock_index = \"{BENCHMARK_ID}\"\n\
             bond_index = \"{BOND_INDEX_ID}\"\n"
        );

        vec![
            ("holdings.csv", holdings),
            ("benchmark.csv", benchmark),
            ("prices.csv", prices),
            ("industries.csv", industries),
            ("factors.csv", factors),
            ("nav.csv", nav),
            ("index.csv", index),
            ("funds.csv", funds),
            ("workspace.toml", workspace),
        ]
    }

    /// Writes the file set into a workspace directory.
    pub fn write_dir(&self, dir: &Path) -> std::io::Result<()> {
        std::fs::create_dir_all(dir)?;
        for (name, content) in self.render_files() {
            std::fs::write(dir.join(name), content)?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::brinson;
    use crate::model::Direction;

    fn tiny_config() -> UniverseConfig {
        UniverseConfig::new(3, 20, 4, 30, 42)
    }

    #[test]
    fn same_seed_is_byte_identical() {
        let a = generate_universe(&tiny_config());
        let b = generate_universe(&tiny_config());
        assert_eq!(a.render_files(), b.render_files());
    }

    #[test]
    fn different_seed_changes_output() {
        let a = generate_universe(&tiny_config());
        let mut other = tiny_config();
        other.seed = 43;
        let b = generate_universe(&other);
        assert_ne!(a.render_files(), b.render_files());
    }

    #[test]
    fn adding_funds_does_not_perturb_existing_ones() {
        let small = generate_universe(&tiny_config());
        let mut cfg = tiny_config();
        cfg.n_funds = 5;
        cfg.skills = vec![FundSkill::NONE; 5];
        let big = generate_universe(&cfg);
        assert_eq!(small.funds[0].nav, big.funds[0].nav);
        assert_eq!(small.funds[2].nav, big.funds[2].nav);
        assert_eq!(small.returns, big.returns);
    }

    #[test]
    fn zero_noise_universe_tracks_buy_and_hold_exactly() {
        let cfg = tiny_config().with_params(MarketParams::zero_noise());
        let universe = generate_universe(&cfg);
        let panel = universe.to_panel();
        for fund_id in ["F0000", "F0001", "F0002"] {
            for snapshot in universe.snapshots_of(fund_id).unwrap() {
                if snapshot.positions.is_empty() {
                    continue;
                }
                for direction in [Direction::Before, Direction::After] {
                    match brinson::holding_validity_diff(snapshot, &panel, direction) {
                        Ok((diff, _)) => assert!(
                            diff.diff.abs() < 1e-12,
                            "{fund_id}@{} {direction}: {}",
                            snapshot.report_date,
                            diff.diff
                        ),
                        Err(brinson::BrinsonError::Window(_)) => {}
                        Err(e) => panic!("unexpected error: {e}"),
                    }
                }
            }
        }
    }

    #[test]
    fn injected_trade_moves_only_the_affected_window() {
        let mut cfg = tiny_config();
        cfg.params.nav_noise = 0.0;
        cfg.params.sleeve_vol = 0.0;
        cfg.params.fund_stock_sleeve = 1.0;
        let baseline = generate_universe(&cfg);
        let mut injected = generate_universe(&cfg);
        // 30 months from 2008-01: first semiannual report at 2008-06 (t=5),
        // after-window covers 2008-07..2008-12
        injected
            .inject_trading_gap("F0001", Month::new(2008, 9))
            .unwrap();

        let base_nav = &baseline.funds[1].nav;
        let new_nav = &injected.funds[1].nav;
        for t in 0..cfg.n_months {
            let inside = (8..=11).contains(&t);
            if inside {
                continue;
            }
            assert_eq!(base_nav[t], new_nav[t], "month index {t} should be untouched");
        }
        assert_ne!(&base_nav[8..=11], &new_nav[8..=11]);
        // switching into the window's best stock cannot hurt the fund
        let cum_base: f64 = (8..=11).map(|t| 1.0 + base_nav[t]).product();
        let cum_new: f64 = (8..=11).map(|t| 1.0 + new_nav[t]).product();
        assert!(cum_new >= cum_base);
        // other funds untouched
        assert_eq!(baseline.funds[0].nav, injected.funds[0].nav);
    }

    #[test]
    fn unknown_fund_is_rejected() {
        let mut universe = generate_universe(&tiny_config());
        assert_eq!(
            universe.inject_trading_gap("F9999", Month::new(2008, 9)),
            Err(SyntheticError::UnknownFund("F9999".into()))
        );
    }

    #[test]
    fn panel_round_trip_through_files_matches_memory() {
        let universe = generate_universe(&tiny_config());
        let files: BTreeMap<&str, String> = universe.render_files().into_iter().collect();
        let options = crate::ingest::PanelOptions {
            gap_limit: 2,
            stock_index: Some(BENCHMARK_ID.to_string()),
            bond_index: Some(BOND_INDEX_ID.to_string()),
        };
        let (panel, report) = crate::ingest::parse_market_panel(
            files["prices.csv"].as_bytes(),
            files["industries.csv"].as_bytes(),
            files["factors.csv"].as_bytes(),
            files["nav.csv"].as_bytes(),
            files["index.csv"].as_bytes(),
            &options,
        )
        .unwrap();
        assert!(!report.has_errors(), "{:?}", report.issues);
        let memory = universe.to_panel();
        assert_eq!(panel.months(), memory.months());
        for (j, stock) in universe.stock_ids.iter().enumerate() {
            for (t, month) in universe.months.iter().enumerate() {
                let parsed = panel.stock_return(stock, *month).unwrap();
                assert_eq!(
                    parsed, universe.returns[j][t],
                    "stock {stock} at {month}: file round trip must be exact"
                );
            }
        }
        for fund in &universe.funds {
            let series = panel.nav_series(&fund.id).unwrap();
            assert_eq!(series.values, fund.nav);
        }
    }
}
