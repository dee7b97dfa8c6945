//! `attrib` — batch driver for the holdings-based attribution pipeline.
//!
//! Exit codes: 0 success, 1 validation errors present (or a command could
//! not complete), 2 usage error.

mod commands;
mod output;
mod workspace;

use anyhow::Result;
use attrib_core::model::Direction;
use attrib_core::synthetic::{generate_universe, MarketParams, UniverseConfig};
use attrib_core::Month;
use clap::{Args, Parser, Subcommand, ValueEnum};
use commands::{with_pool, Measure};
use output::{Fingerprint, OutputDir, RunInfo};
use std::path::PathBuf;
use std::process::ExitCode;
use workspace::Workspace;

#[derive(Parser)]
#[command(name = "attrib", version, about = "Holdings-based fund performance attribution")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct CommonArgs {
    /// Workspace directory holding the input CSVs and workspace.toml
    #[arg(long)]
    workspace: PathBuf,
    /// Output directory (default: <workspace>/out)
    #[arg(long)]
    out: Option<PathBuf>,
    /// Test positivity against t with n-1 degrees of freedom instead of n-2
    #[arg(long)]
    classical_df: bool,
    /// Tolerate interior gaps in aligned regression samples
    #[arg(long)]
    allow_gaps: bool,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum DirectionArg {
    Before,
    After,
}

impl From<DirectionArg> for Direction {
    fn from(d: DirectionArg) -> Direction {
        match d {
            DirectionArg::Before => Direction::Before,
            DirectionArg::After => Direction::After,
        }
    }
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum ModelArg {
    Simple,
    Ff,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum MeasureArg {
    Ss,
    Ia,
    It,
    Aa,
}

impl From<MeasureArg> for Measure {
    fn from(m: MeasureArg) -> Measure {
        match m {
            MeasureArg::Ss => Measure::Selection,
            MeasureArg::Ia => Measure::Allocation,
            MeasureArg::It => Measure::Interaction,
            MeasureArg::Aa => Measure::AssetAllocation,
        }
    }
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum PairArg {
    IaTiming,
    SsAlpha,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum PresetArg {
    /// Zero-skill funds in a noisy market
    Default,
    /// No cross-stock dispersion; NAV equals buy-and-hold exactly
    ZeroNoise,
    /// Half the funds carry a persistent stock-picking edge
    Selection,
    /// Half the funds carry market-timing ability
    Timing,
    /// Half the funds have an AR(1) skill state
    Persistence,
}

#[derive(Subcommand)]
enum Command {
    /// Holdings coverage per report period
    Summarize {
        #[command(flatten)]
        common: CommonArgs,
    },
    /// Attribution measures with cross-sectional summaries
    Attribute {
        #[command(flatten)]
        common: CommonArgs,
        /// Window side for the semiannual measures
        #[arg(long)]
        direction: Option<DirectionArg>,
        /// Measures to emit (default: all)
        #[arg(long, value_delimiter = ',')]
        measure: Vec<MeasureArg>,
    },
    /// Benchmark-appropriateness regressions and the slope = 1 test
    ValidateBenchmark {
        #[command(flatten)]
        common: CommonArgs,
        #[arg(long, value_enum, default_value = "simple")]
        model: ModelArg,
    },
    /// Persistence regression for one measure
    Persistence {
        #[command(flatten)]
        common: CommonArgs,
        #[arg(long, value_enum)]
        measure: MeasureArg,
        /// Window side for the semiannual measures
        #[arg(long)]
        direction: Option<DirectionArg>,
    },
    /// Correlation between holdings measures and regression abilities
    Associate {
        #[command(flatten)]
        common: CommonArgs,
        #[arg(long, value_enum)]
        pair: PairArg,
        /// Final year of the rolling sample
        #[arg(long)]
        end_year: i32,
        /// Sample length in years
        #[arg(long, default_value_t = 5)]
        span: u32,
    },
    /// Assumed-vs-actual return bands per report
    DiagnoseHoldings {
        #[command(flatten)]
        common: CommonArgs,
        #[arg(long)]
        direction: Option<DirectionArg>,
    },
    /// Generate a synthetic workspace
    Synth {
        /// Directory to write the workspace into
        #[arg(long)]
        workspace: PathBuf,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        #[arg(long, default_value_t = 40)]
        funds: usize,
        #[arg(long, default_value_t = 120)]
        stocks: usize,
        #[arg(long, default_value_t = 8)]
        industries: usize,
        #[arg(long, default_value_t = 72)]
        months: usize,
        #[arg(long, value_enum, default_value = "default")]
        preset: PresetArg,
        #[arg(long, default_value_t = 2008)]
        start_year: i32,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli.command) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}

fn run(command: Command) -> Result<ExitCode> {
    if let Command::Synth {
        workspace,
        seed,
        funds,
        stocks,
        industries,
        months,
        preset,
        start_year,
    } = command
    {
        return synth(workspace, seed, funds, stocks, industries, months, preset, start_year);
    }

    let common = match &command {
        Command::Summarize { common }
        | Command::Attribute { common, .. }
        | Command::ValidateBenchmark { common, .. }
        | Command::Persistence { common, .. }
        | Command::Associate { common, .. }
        | Command::DiagnoseHoldings { common, .. } => common,
        Command::Synth { .. } => unreachable!(),
    };

    let ws = Workspace::load(&common.workspace)?;
    report_validation(&ws);

    let df = ws.config.df_convention(common.classical_df);
    let allow_gaps = common.allow_gaps;
    let levels = significance_levels(&ws);
    let default_direction: Direction = ws
        .config
        .direction
        .parse()
        .map_err(|e: String| anyhow::anyhow!(e))?;
    let mut out = OutputDir::new(
        common
            .out
            .clone()
            .unwrap_or_else(|| common.workspace.join("out")),
    )?;

    let fingerprint = |direction: Option<Direction>| Fingerprint {
        df,
        direction,
        allow_gaps,
    };
    let run_info = |name: &str, fp: &Fingerprint| RunInfo {
        command: name.to_string(),
        workspace: common.workspace.display().to_string(),
        fingerprint: fp.to_string(),
        significance_levels: vec![levels.0, levels.1],
    };

    match &command {
        Command::Summarize { .. } => {
            let fp = fingerprint(None);
            commands::summarize::run(&ws, fp, run_info("summarize", &fp), &mut out)?;
        }
        Command::Attribute { direction, measure, .. } => {
            let direction = direction.map(Direction::from).unwrap_or(default_direction);
            let measures: Vec<Measure> = if measure.is_empty() {
                vec![
                    Measure::Selection,
                    Measure::Allocation,
                    Measure::Interaction,
                    Measure::Excess,
                    Measure::AssetAllocation,
                ]
            } else {
                measure.iter().map(|m| Measure::from(*m)).collect()
            };
            let fp = fingerprint(Some(direction));
            let args = commands::attribute::Args {
                direction,
                measures,
                df,
                alpha: levels.0,
            };
            with_pool(|| commands::attribute::run(&ws, &args, fp, run_info("attribute", &fp), &mut out))?;
        }
        Command::ValidateBenchmark { model, .. } => {
            let fp = fingerprint(None);
            let args = commands::validate_benchmark::Args {
                model: match model {
                    ModelArg::Simple => commands::validate_benchmark::BenchModel::Simple,
                    ModelArg::Ff => commands::validate_benchmark::BenchModel::WithFactors,
                },
                allow_gaps,
                levels,
            };
            with_pool(|| {
                commands::validate_benchmark::run(&ws, &args, fp, run_info("validate-benchmark", &fp), &mut out)
            })?;
        }
        Command::Persistence { measure, direction, .. } => {
            let measure = Measure::from(*measure);
            let direction = direction.map(Direction::from).unwrap_or(default_direction);
            let fp = fingerprint(Some(direction));
            let args = commands::persistence::Args {
                measure,
                direction,
                alpha: levels.0,
            };
            with_pool(|| commands::persistence::run(&ws, &args, fp, run_info("persistence", &fp), &mut out))?;
        }
        Command::Associate { pair, end_year, span, .. } => {
            let pair = match pair {
                PairArg::IaTiming => commands::associate::Pair::IaTiming,
                PairArg::SsAlpha => commands::associate::Pair::SsAlpha,
            };
            let direction = match pair {
                commands::associate::Pair::IaTiming => Direction::Before,
                commands::associate::Pair::SsAlpha => Direction::After,
            };
            let fp = fingerprint(Some(direction));
            let args = commands::associate::Args {
                pair,
                end_year: *end_year,
                span_years: *span,
                allow_gaps,
            };
            with_pool(|| commands::associate::run(&ws, &args, fp, run_info("associate", &fp), &mut out))?;
        }
        Command::DiagnoseHoldings { direction, .. } => {
            let direction = direction.map(Direction::from).unwrap_or(default_direction);
            let fp = fingerprint(Some(direction));
            let args = commands::diagnose::Args { direction };
            with_pool(|| {
                commands::diagnose::run(&ws, &args, fp, run_info("diagnose-holdings", &fp), &mut out)
            })?;
        }
        Command::Synth { .. } => unreachable!(),
    }

    for path in out.written() {
        println!("wrote {}", path.display());
    }
    if ws.has_validation_errors() {
        Ok(ExitCode::from(1))
    } else {
        Ok(ExitCode::SUCCESS)
    }
}

fn significance_levels(ws: &Workspace) -> (f64, f64) {
    let levels = &ws.config.significance_levels;
    let a = levels.first().copied().unwrap_or(0.10);
    let b = levels.get(1).copied().unwrap_or(0.05);
    (a, b)
}

fn report_validation(ws: &Workspace) {
    let errors = ws.error_count();
    let warnings = ws.warning_count();
    if errors == 0 && warnings == 0 {
        return;
    }
    eprintln!("validation: {errors} error(s), {warnings} warning(s)");
    let mut shown = 0;
    for report in &ws.reports {
        for issue in &report.issues {
            if issue.severity == attrib_core::model::Severity::Error {
                eprintln!("  [{}] {}: {}", issue.code, report.subject_id, issue.message);
                shown += 1;
                if shown >= 50 {
                    eprintln!("  ... further errors suppressed");
                    return;
                }
            }
        }
    }
}

#[allow(clippy::too_many_arguments)]
fn synth(
    workspace: PathBuf,
    seed: u64,
    funds: usize,
    stocks: usize,
    industries: usize,
    months: usize,
    preset: PresetArg,
    start_year: i32,
) -> Result<ExitCode> {
    if funds == 0 || months == 0 || industries == 0 {
        anyhow::bail!("funds, industries and months must all be positive");
    }
    if stocks < 2 * industries {
        anyhow::bail!("need at least two stocks per industry ({industries} industries, {stocks} stocks)");
    }
    let mut config = UniverseConfig::new(funds, stocks, industries, months, seed);
    config.start = Month::new(start_year, 1);
    match preset {
        PresetArg::Default => {}
        PresetArg::ZeroNoise => config.params = MarketParams::zero_noise(),
        PresetArg::Selection => {
            config.params.alpha_spread = 0.01;
            for (i, skill) in config.skills.iter_mut().enumerate() {
                if i < funds / 2 {
                    skill.selection_drift = 0.005;
                }
            }
        }
        PresetArg::Timing => {
            for (i, skill) in config.skills.iter_mut().enumerate() {
                if i < funds / 2 {
                    skill.timing_gamma = 1.0;
                }
            }
        }
        PresetArg::Persistence => {
            config.params.alpha_spread = 0.01;
            config.params.skill_noise = 0.004;
            for (i, skill) in config.skills.iter_mut().enumerate() {
                if i < funds / 2 {
                    skill.persistence_rho = 0.6;
                }
            }
        }
    }
    let universe = generate_universe(&config);
    universe.write_dir(&workspace)?;
    println!(
        "wrote synthetic workspace to {} ({} funds, {} stocks, {} industries, {} months, seed {})",
        workspace.display(),
        funds,
        stocks,
        industries,
        months,
        seed
    );
    Ok(ExitCode::SUCCESS)
}
