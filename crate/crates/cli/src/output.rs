//! Deterministic output writers. Every CSV row carries the run fingerprint
//! (df convention, window direction, gap policy) so emitted tables are
//! self-describing; reruns overwrite byte-identical files.

use anyhow::{Context, Result};
use attrib_core::model::Direction;
use attrib_core::DfConvention;
use serde::Serialize;
use std::fmt::Write as _;
use std::path::PathBuf;

#[derive(Debug, Clone, Copy)]
pub struct Fingerprint {
    pub df: DfConvention,
    pub direction: Option<Direction>,
    pub allow_gaps: bool,
}

impl std::fmt::Display for Fingerprint {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let dir = match self.direction {
            Some(d) => d.to_string(),
            None => "-".to_string(),
        };
        write!(
            f,
            "df={};dir={};gaps={}",
            self.df,
            dir,
            if self.allow_gaps { "allow" } else { "strict" }
        )
    }
}

/// Shortest round-trip float formatting; empty for missing values.
pub fn fmt_opt(x: Option<f64>) -> String {
    match x {
        Some(v) => v.to_string(),
        None => String::new(),
    }
}

pub struct CsvTable {
    name: &'static str,
    text: String,
}

impl CsvTable {
    pub fn new(name: &'static str, header: &str) -> CsvTable {
        CsvTable {
            name,
            text: format!("{header}\n"),
        }
    }

    pub fn row(&mut self, fields: &[String]) {
        let _ = writeln!(self.text, "{}", fields.join(","));
    }
}

pub struct OutputDir {
    dir: PathBuf,
    written: Vec<PathBuf>,
}

impl OutputDir {
    pub fn new(dir: PathBuf) -> Result<OutputDir> {
        std::fs::create_dir_all(&dir)
            .with_context(|| format!("creating output directory {}", dir.display()))?;
        Ok(OutputDir {
            dir,
            written: Vec::new(),
        })
    }

    pub fn write_table(&mut self, table: CsvTable) -> Result<()> {
        let path = self.dir.join(table.name);
        std::fs::write(&path, table.text.as_bytes())
            .with_context(|| format!("writing {}", path.display()))?;
        self.written.push(path);
        Ok(())
    }

    pub fn write_json<T: Serialize>(&mut self, name: &str, value: &T) -> Result<()> {
        let path = self.dir.join(name);
        let mut text = serde_json::to_string_pretty(value)?;
        text.push('\n');
        std::fs::write(&path, text.as_bytes())
            .with_context(|| format!("writing {}", path.display()))?;
        self.written.push(path);
        Ok(())
    }

    pub fn written(&self) -> &[PathBuf] {
        &self.written
    }
}

/// A skipped unit of work and why, listed in JSON summaries.
#[derive(Debug, Clone, Serialize, PartialEq, Eq, PartialOrd, Ord)]
pub struct SkipNote {
    pub fund_id: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub report_date: Option<String>,
    pub reason: String,
}

impl SkipNote {
    pub fn fund(fund_id: &str, reason: impl Into<String>) -> SkipNote {
        SkipNote {
            fund_id: fund_id.to_string(),
            report_date: None,
            reason: reason.into(),
        }
    }

    pub fn report(fund_id: &str, date: chrono::NaiveDate, reason: impl Into<String>) -> SkipNote {
        SkipNote {
            fund_id: fund_id.to_string(),
            report_date: Some(date.to_string()),
            reason: reason.into(),
        }
    }
}

/// Config echo embedded in every JSON summary.
#[derive(Debug, Clone, Serialize)]
pub struct RunInfo {
    pub command: String,
    pub workspace: String,
    pub fingerprint: String,
    pub significance_levels: Vec<f64>,
}
