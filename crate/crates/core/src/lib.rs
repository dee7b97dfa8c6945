//! Holdings-based fund performance attribution.
//!
//! The crate decomposes a fund's excess return over its self-reported
//! benchmark into within-industry stock selection, industry allocation and
//! an interaction term, measures stock/bond asset allocation, fits the
//! price-based regression suite (three-factor selection, quadratic market
//! timing, benchmark validation, persistence), and runs the accompanying
//! statistical tests. A seeded synthetic-universe lab provides ground-truth
//! data for end-to-end verification.

pub mod brinson;
pub mod inference;
pub mod ingest;
pub mod model;
pub mod panel;
pub mod regression;
pub mod synthetic;

pub use brinson::{AssetAllocationRecord, AttributionRecord, IndustryBreakdown, ValidityDiff};
pub use inference::{BoxStats, CorrelationResult, DfConvention, SummaryRow, TestResult};
pub use model::{
    BenchmarkDefinition, Direction, HoldingsSnapshot, Month, Position, ReportKind, SleeveWeights,
    ValidationReport,
};
pub use panel::{FactorRow, FactorTable, MarketPanel, MonthlySeries, WindowReturns, WindowSpec};
pub use regression::{ModelTag, RegressionFit, TrackingStats};
pub use synthetic::{FundSkill, MarketParams, SyntheticUniverse, UniverseConfig};
