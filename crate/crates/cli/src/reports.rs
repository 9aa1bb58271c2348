//! Tabular output shared by every subcommand: one row schema for
//! welfare/ratio measurements, one for axiom verdicts, and writers
//! for CSV and JSON.

use anyhow::{Context, Result};
use serde::{Deserialize, Serialize};
use std::io::Write;
use std::path::Path;

/// One measurement row. Optional cells serialize as empty CSV fields.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ReportRow {
    pub mechanism: String,
    pub objective: String,
    pub regime: String,
    pub family: String,
    pub n: usize,
    pub m: usize,
    /// Number of advised items, when advice is in play.
    pub k: Option<usize>,
    /// Number of distinct advised agents, when advice is in play.
    pub l: Option<usize>,
    pub engine: String,
    /// Measured value as a float (exact values are converted).
    pub value: f64,
    /// Exact value as `p/q`, when an exact engine produced it.
    #[serde(rename = "value_exact(p/q)")]
    pub value_exact: Option<String>,
    /// The benchmark the value is compared against, as `p/q` or float.
    pub optimum: Option<String>,
    pub ratio: Option<f64>,
    /// `reciprocal` puts ratios in [0,1] (achieved/optimum);
    /// `competitive` uses optimum/achieved >= 1.
    pub convention: String,
    pub seed: Option<u64>,
    pub samples: Option<usize>,
    pub stderr: Option<f64>,
}

impl ReportRow {
    /// A mostly-empty row to be filled in field by field.
    pub fn blank(mechanism: &str, objective: &str, family: &str, n: usize, m: usize) -> Self {
        ReportRow {
            mechanism: mechanism.to_string(),
            objective: objective.to_string(),
            regime: String::new(),
            family: family.to_string(),
            n,
            m,
            k: None,
            l: None,
            engine: String::new(),
            value: 0.0,
            value_exact: None,
            optimum: None,
            ratio: None,
            convention: String::new(),
            seed: None,
            samples: None,
            stderr: None,
        }
    }
}

/// One axiom verdict row.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct AxiomRow {
    pub axiom: String,
    pub mechanism: String,
    /// What was scanned, e.g. `binary-3x3 (265 instances)`.
    pub scope: String,
    pub verdict: String,
    /// Counterexample or bound details; empty when satisfied.
    pub detail: String,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum OutputFormat {
    Csv,
    Json,
}

impl std::str::FromStr for OutputFormat {
    type Err = anyhow::Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "csv" => Ok(OutputFormat::Csv),
            "json" => Ok(OutputFormat::Json),
            other => anyhow::bail!("unknown format `{other}` (expected csv or json)"),
        }
    }
}

fn open_sink(out: Option<&Path>) -> Result<Box<dyn Write>> {
    match out {
        Some(path) => {
            let file = std::fs::File::create(path)
                .with_context(|| format!("creating {}", path.display()))?;
            Ok(Box::new(file))
        }
        None => Ok(Box::new(std::io::stdout().lock())),
    }
}

/// Writes any serializable row type as CSV or JSON.
pub fn write_rows<T: Serialize>(rows: &[T], format: OutputFormat, out: Option<&Path>) -> Result<()> {
    let sink = open_sink(out)?;
    match format {
        OutputFormat::Csv => {
            let mut writer = csv::Writer::from_writer(sink);
            for row in rows {
                writer.serialize(row)?;
            }
            writer.flush()?;
        }
        OutputFormat::Json => {
            serde_json::to_writer_pretty(sink, rows)?;
        }
    }
    Ok(())
}

pub fn write_report_rows(
    rows: &[ReportRow],
    format: OutputFormat,
    out: Option<&Path>,
) -> Result<()> {
    write_rows(rows, format, out)
}

pub fn write_axiom_rows(rows: &[AxiomRow], format: OutputFormat, out: Option<&Path>) -> Result<()> {
    write_rows(rows, format, out)
}

/// Reads measurement rows back from a CSV file (used by round-trip
/// verification).
pub fn read_report_rows(path: &Path) -> Result<Vec<ReportRow>> {
    let mut reader = csv::Reader::from_path(path)
        .with_context(|| format!("opening {}", path.display()))?;
    let mut rows = Vec::new();
    for record in reader.deserialize() {
        rows.push(record?);
    }
    Ok(rows)
}
