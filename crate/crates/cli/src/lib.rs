//! Batch driver for the fraclab verification suites.
//!
//! Exit codes: 0 when every asserted contract passes, 1 on a contract
//! violation (the report is still written), 2 on a configuration error.

pub mod commands;
pub mod config;

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use fraclab::FracError;

pub use config::{Command, Format, OnedimTask, Overrides, RunConfig};

#[derive(Debug, Clone, PartialEq)]
pub struct CliError {
    pub code: u8,
    pub message: String,
}

impl CliError {
    pub fn config(message: impl Into<String>) -> Self {
        Self {
            code: 2,
            message: message.into(),
        }
    }

    pub fn failure(message: impl Into<String>) -> Self {
        Self {
            code: 1,
            message: message.into(),
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.message)
    }
}

impl std::error::Error for CliError {}

/// Invalid inputs are configuration errors; numerical failures are contract failures.
impl From<FracError> for CliError {
    fn from(e: FracError) -> Self {
        match e {
            FracError::Domain(_) | FracError::Precondition(_) | FracError::Unsupported(_) => Self::config(e.to_string()),
            _ => Self::failure(e.to_string()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Provenance {
    pub version: String,
    pub git_describe: String,
    /// SHA-256 of the effective configuration as compact JSON.
    pub config_hash: String,
}

impl Provenance {
    pub fn for_config(cfg: &RunConfig) -> Self {
        let canonical = serde_json::to_string(cfg).expect("config serializes");
        let digest = Sha256::digest(canonical.as_bytes());
        Self {
            version: env!("CARGO_PKG_VERSION").into(),
            git_describe: env!("FRACLAB_GIT_DESCRIBE").into(),
            config_hash: digest.iter().fold(String::with_capacity(64), |mut s, b| {
                let _ = write!(s, "{b:02x}");
                s
            }),
        }
    }
}

/// JSON report of one run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Envelope<T> {
    pub command: Command,
    pub provenance: Provenance,
    pub passed: bool,
    pub violations: Vec<String>,
    pub result: T,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    Int(u64),
    Num(f64),
    Text(String),
    Bool(bool),
}

impl From<f64> for Cell {
    fn from(v: f64) -> Self {
        Cell::Num(v)
    }
}

impl From<u64> for Cell {
    fn from(v: u64) -> Self {
        Cell::Int(v)
    }
}

impl From<bool> for Cell {
    fn from(v: bool) -> Self {
        Cell::Bool(v)
    }
}

impl From<Option<f64>> for Cell {
    fn from(v: Option<f64>) -> Self {
        v.map_or(Cell::Text(String::new()), Cell::Num)
    }
}

/// Plot-ready table; the header names each column and its unit.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Table {
    pub header: Vec<String>,
    pub rows: Vec<Vec<Cell>>,
}

impl Table {
    pub fn new(header: &[&str]) -> Self {
        Self {
            header: header.iter().map(|s| s.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }

    /// 17 significant digits in exponent form: exact round trip, no locale.
    pub fn to_csv(&self) -> String {
        let mut out = self.header.join(",");
        out.push('\n');
        for row in &self.rows {
            let cells: Vec<String> = row
                .iter()
                .map(|c| match c {
                    Cell::Int(v) => v.to_string(),
                    Cell::Num(v) => format!("{v:.16e}"),
                    Cell::Text(t) => t.clone(),
                    Cell::Bool(b) => b.to_string(),
                })
                .collect();
            out.push_str(&cells.join(","));
            out.push('\n');
        }
        out
    }
}

/// Finished run: verdict plus both renderings.
#[derive(Debug, Clone)]
pub struct Rendered {
    pub passed: bool,
    pub json: String,
    pub table: Table,
}

impl Rendered {
    pub fn new<T: Serialize>(cfg: &RunConfig, violations: Vec<String>, result: &T, table: Table) -> Self {
        let env = Envelope {
            command: cfg.command.expect("command set before running"),
            provenance: Provenance::for_config(cfg),
            passed: violations.is_empty(),
            violations,
            result,
        };
        let mut json = serde_json::to_string_pretty(&env).expect("reports serialize");
        json.push('\n');
        Self {
            passed: env.passed,
            json,
            table,
        }
    }

    pub fn text(&self, format: Format) -> String {
        match format {
            Format::Json => self.json.clone(),
            Format::Csv => self.table.to_csv(),
        }
    }
}

/// Validates, executes and writes the report; returns the exit code.
pub fn run(cfg: &RunConfig) -> Result<u8, CliError> {
    cfg.validate()?;
    let rendered = commands::execute(cfg)?;
    let text = rendered.text(cfg.output.format);
    match &cfg.output.path {
        Some(path) => std::fs::write(path, text)
            .map_err(|e| CliError::config(format!("cannot write {}: {e}", path.display())))?,
        None => print!("{text}"),
    }
    Ok(if rendered.passed { 0 } else { 1 })
}
