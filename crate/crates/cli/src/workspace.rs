//! Workspace loading: the input directory with its eight CSVs and the
//! plain-text `workspace.toml` config. Every file is parsed up front;
//! subjects with error-severity issues are excluded from computation and
//! surfaced so the process can exit nonzero.

use anyhow::{Context, Result};
use attrib_core::ingest::{self, PanelOptions};
use attrib_core::model::{BenchmarkDefinition, HoldingsSnapshot, ValidationReport};
use attrib_core::panel::MarketPanel;
use attrib_core::DfConvention;
use chrono::NaiveDate;
use serde::Deserialize;
use std::collections::BTreeMap;
use std::fs::File;
use std::path::Path;

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WorkspaceConfig {
    #[serde(default = "default_gap_limit")]
    pub gap_limit: usize,
    /// "n-2" tests positivity against t with n-2 df; "n-1" (alias
    /// "classical") uses the one-sample default.
    #[serde(default = "default_df_convention")]
    pub df_convention: String,
    #[serde(default = "default_significance")]
    pub significance_levels: Vec<f64>,
    /// Index id supplying the stock-market return series (defaults to the
    /// factor file's market return).
    #[serde(default)]
    pub stock_index: Option<String>,
    /// Index id supplying the bond-market return series (required for
    /// asset-allocation measures).
    #[serde(default)]
    pub bond_index: Option<String>,
    /// Default window direction for commands that accept one.
    #[serde(default = "default_direction")]
    pub direction: String,
}

fn default_gap_limit() -> usize {
    2
}
fn default_df_convention() -> String {
    "n-2".to_string()
}
fn default_significance() -> Vec<f64> {
    vec![0.10, 0.05]
}
fn default_direction() -> String {
    "before".to_string()
}

impl Default for WorkspaceConfig {
    fn default() -> Self {
        WorkspaceConfig {
            gap_limit: default_gap_limit(),
            df_convention: default_df_convention(),
            significance_levels: default_significance(),
            stock_index: None,
            bond_index: None,
            direction: default_direction(),
        }
    }
}

impl WorkspaceConfig {
    pub fn df_convention(&self, classical_override: bool) -> DfConvention {
        let wants_classical =
            matches!(self.df_convention.as_str(), "classical" | "n-1");
        if classical_override || wants_classical {
            DfConvention::NMinus1
        } else {
            DfConvention::NMinus2
        }
    }
}

/// Benchmark definitions grouped by id, ordered by as-of date.
pub struct BenchmarkBook {
    defs: BTreeMap<String, Vec<BenchmarkDefinition>>,
}

impl BenchmarkBook {
    fn new(mut defs: Vec<BenchmarkDefinition>) -> BenchmarkBook {
        defs.sort_by(|a, b| (a.benchmark_id.as_str(), a.as_of).cmp(&(b.benchmark_id.as_str(), b.as_of)));
        let mut map: BTreeMap<String, Vec<BenchmarkDefinition>> = BTreeMap::new();
        for def in defs {
            map.entry(def.benchmark_id.clone()).or_default().push(def);
        }
        BenchmarkBook { defs: map }
    }

    /// Most recent definition at or before `date`.
    pub fn at(&self, benchmark_id: &str, date: NaiveDate) -> Option<&BenchmarkDefinition> {
        let series = self.defs.get(benchmark_id)?;
        series.iter().rev().find(|d| d.as_of <= date)
    }
}

pub struct Workspace {
    pub config: WorkspaceConfig,
    pub snapshots: Vec<HoldingsSnapshot>,
    pub snapshots_by_fund: BTreeMap<String, Vec<usize>>,
    pub benchmarks: BenchmarkBook,
    pub fund_benchmark: BTreeMap<String, String>,
    pub panel: MarketPanel,
    pub reports: Vec<ValidationReport>,
}

impl Workspace {
    pub fn load(root: &Path) -> Result<Workspace> {
        let config: WorkspaceConfig = {
            let path = root.join("workspace.toml");
            if path.exists() {
                let text = std::fs::read_to_string(&path)
                    .with_context(|| format!("reading {}", path.display()))?;
                toml::from_str(&text).with_context(|| format!("parsing {}", path.display()))?
            } else {
                WorkspaceConfig::default()
            }
        };

        let open = |name: &str| -> Result<File> {
            File::open(root.join(name)).with_context(|| format!("opening {}", root.join(name).display()))
        };

        let mut reports = Vec::new();

        let (snapshots, holdings_report) =
            ingest::parse_holdings_csv(open("holdings.csv")?).context("holdings.csv")?;
        reports.push(holdings_report);

        let (bench_defs, bench_report) =
            ingest::parse_benchmark_csv(open("benchmark.csv")?).context("benchmark.csv")?;
        reports.push(bench_report);

        let (fund_benchmark, funds_report) =
            ingest::parse_fund_map(open("funds.csv")?).context("funds.csv")?;
        reports.push(funds_report);

        let options = PanelOptions {
            gap_limit: config.gap_limit,
            stock_index: config.stock_index.clone(),
            bond_index: config.bond_index.clone(),
        };
        let (panel, panel_report) = ingest::parse_market_panel(
            open("prices.csv")?,
            open("industries.csv")?,
            open("factors.csv")?,
            open("nav.csv")?,
            open("index.csv")?,
            &options,
        )
        .context("market panel")?;
        reports.push(panel_report);

        let mut snapshots_by_fund: BTreeMap<String, Vec<usize>> = BTreeMap::new();
        for (i, snapshot) in snapshots.iter().enumerate() {
            snapshots_by_fund
                .entry(snapshot.fund_id.clone())
                .or_default()
                .push(i);
        }

        Ok(Workspace {
            config,
            snapshots,
            snapshots_by_fund,
            benchmarks: BenchmarkBook::new(bench_defs),
            fund_benchmark,
            panel,
            reports,
        })
    }

    pub fn has_validation_errors(&self) -> bool {
        self.reports.iter().any(|r| r.has_errors())
    }

    pub fn error_count(&self) -> usize {
        self.reports.iter().map(|r| r.error_count()).sum()
    }

    pub fn warning_count(&self) -> usize {
        self.reports
            .iter()
            .flat_map(|r| &r.issues)
            .filter(|i| i.severity == attrib_core::model::Severity::Warning)
            .count()
    }

    /// Fund ids that have both holdings and a benchmark mapping, sorted.
    pub fn fund_ids(&self) -> Vec<String> {
        self.snapshots_by_fund.keys().cloned().collect()
    }

    pub fn benchmark_id_of(&self, fund_id: &str) -> Option<&str> {
        self.fund_benchmark.get(fund_id).map(|s| s.as_str())
    }

    pub fn snapshots_of(&self, fund_id: &str) -> Vec<&HoldingsSnapshot> {
        self.snapshots_by_fund
            .get(fund_id)
            .map(|idx| idx.iter().map(|i| &self.snapshots[*i]).collect())
            .unwrap_or_default()
    }
}
