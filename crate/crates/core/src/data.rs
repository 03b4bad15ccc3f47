//! Subject-level trial data: CSV ingestion, aggregation to sufficient
//! counts, and the per-cell summary table.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;
use std::io::{Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// One randomized subject. `s` and `y` are `None` when unobserved.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct SubjectRecord {
    pub z: u8,
    pub s: Option<u8>,
    pub y: Option<u8>,
    pub cell: String,
}

impl SubjectRecord {
    pub fn complete(z: u8, s: u8, y: u8, cell: impl Into<String>) -> Self {
        SubjectRecord {
            z,
            s: Some(s),
            y: Some(y),
            cell: cell.into(),
        }
    }

    pub fn missing(z: u8, cell: impl Into<String>) -> Self {
        SubjectRecord {
            z,
            s: None,
            y: None,
            cell: cell.into(),
        }
    }

    /// Missingness indicator: true when either `s` or `y` is absent.
    pub fn is_missing(&self) -> bool {
        self.s.is_none() || self.y.is_none()
    }
}

/// Sufficient statistics of one covariate cell.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct CellCounts {
    /// Complete cases indexed `[z][s][y]`.
    pub n: [[[u64; 2]; 2]; 2],
    pub n_missing: [u64; 2],
    pub n_randomized: [u64; 2],
}

impl CellCounts {
    pub fn complete(&self, z: u8, s: u8, y: u8) -> u64 {
        self.n[z as usize][s as usize][y as usize]
    }

    /// Adds complete cases, also counting them as randomized.
    pub fn add_complete(&mut self, z: u8, s: u8, y: u8, count: u64) {
        self.n[z as usize][s as usize][y as usize] += count;
        self.n_randomized[z as usize] += count;
    }

    pub fn add_missing(&mut self, z: u8, count: u64) {
        self.n_missing[z as usize] += count;
        self.n_randomized[z as usize] += count;
    }

    pub fn add_record(&mut self, r: &SubjectRecord) {
        match (r.s, r.y) {
            (Some(s), Some(y)) => self.add_complete(r.z, s, y, 1),
            _ => self.add_missing(r.z, 1),
        }
    }

    pub fn available(&self, z: u8) -> u64 {
        self.n[z as usize].iter().flatten().sum()
    }

    /// Complete cases on arm `z` with intercurrent event `s`.
    pub fn with_event(&self, z: u8, s: u8) -> u64 {
        self.n[z as usize][s as usize].iter().sum()
    }

    pub fn events(&self, z: u8) -> u64 {
        self.with_event(z, 1)
    }

    pub fn outcomes(&self, z: u8) -> u64 {
        self.n[z as usize].iter().map(|ys| ys[1]).sum()
    }

    pub fn total_complete(&self) -> u64 {
        self.available(0) + self.available(1)
    }

    pub fn merge(&mut self, other: &CellCounts) {
        for z in 0..2 {
            for s in 0..2 {
                for y in 0..2 {
                    self.n[z][s][y] += other.n[z][s][y];
                }
            }
            self.n_missing[z] += other.n_missing[z];
            self.n_randomized[z] += other.n_randomized[z];
        }
    }
}

/// Counts for every covariate cell, keyed by cell label.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct TrialCounts {
    pub cells: BTreeMap<String, CellCounts>,
}

impl TrialCounts {
    pub fn pooled(&self) -> CellCounts {
        let mut out = CellCounts::default();
        for c in self.cells.values() {
            out.merge(c);
        }
        out
    }

    pub fn is_empty(&self) -> bool {
        self.cells.is_empty()
    }

    pub fn n_randomized(&self) -> u64 {
        self.cells
            .values()
            .map(|c| c.n_randomized[0] + c.n_randomized[1])
            .sum()
    }
}

pub fn aggregate<'a>(records: impl IntoIterator<Item = &'a SubjectRecord>) -> TrialCounts {
    let mut out = TrialCounts::default();
    for r in records {
        out.cells.entry(r.cell.clone()).or_default().add_record(r);
    }
    out
}

/// Parsing options for the subject-level CSV.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SchemaConfig {
    /// Tokens read as a missing `s` or `y`.
    pub missing_tokens: Vec<String>,
    /// When set, any other cell label is rejected.
    pub allowed_cells: Option<Vec<String>>,
}

impl Default for SchemaConfig {
    fn default() -> Self {
        SchemaConfig {
            missing_tokens: vec!["NA".to_string(), String::new()],
            allowed_cells: None,
        }
    }
}

const COLUMNS: [&str; 4] = ["z", "s", "y", "cell"];

pub fn parse_dataset(path: impl AsRef<Path>, schema: &SchemaConfig) -> Result<Vec<SubjectRecord>> {
    let path = path.as_ref();
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    parse_reader(file, &path.display().to_string(), schema)
}

/// Parses subject records from any reader; `source` names it in errors.
pub fn parse_reader<R: Read>(
    reader: R,
    source: &str,
    schema: &SchemaConfig,
) -> Result<Vec<SubjectRecord>> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .flexible(false)
        .from_reader(reader);

    let schema_err = |row: usize, column: &str, message: String| Error::Schema {
        path: source.to_string(),
        row,
        column: column.to_string(),
        message,
    };

    let headers = rdr.headers()?.clone();
    let mut idx = [usize::MAX; 4];
    for (i, h) in headers.iter().enumerate() {
        match COLUMNS.iter().position(|c| *c == h) {
            Some(k) if idx[k] == usize::MAX => idx[k] = i,
            Some(_) => return Err(schema_err(1, h, "duplicate column".into())),
            None => {
                return Err(schema_err(
                    1,
                    h,
                    "unknown column (expected z,s,y,cell)".into(),
                ))
            }
        }
    }
    if let Some(k) = idx.iter().position(|&i| i == usize::MAX) {
        return Err(schema_err(1, COLUMNS[k], "missing column".into()));
    }

    let allowed: Option<BTreeSet<&str>> = schema
        .allowed_cells
        .as_ref()
        .map(|v| v.iter().map(String::as_str).collect());
    let is_missing = |tok: &str| schema.missing_tokens.iter().any(|m| m == tok);

    let mut out = Vec::new();
    for (i, rec) in rdr.records().enumerate() {
        let row = i + 2;
        let rec = rec?;
        let field = |k: usize| rec.get(idx[k]).unwrap_or("");

        let z = match field(0) {
            "0" => 0,
            "1" => 1,
            "" => return Err(schema_err(row, "z", "arm is required".into())),
            other => return Err(schema_err(row, "z", format!("`{other}` is not 0 or 1"))),
        };
        let binary = |k: usize| -> Result<Option<u8>> {
            match field(k) {
                "0" => Ok(Some(0)),
                "1" => Ok(Some(1)),
                tok if is_missing(tok) => Ok(None),
                other => Err(schema_err(
                    row,
                    COLUMNS[k],
                    format!("`{other}` is not 0, 1 or a missing token"),
                )),
            }
        };
        let s = binary(1)?;
        let y = binary(2)?;
        let cell = field(3);
        if cell.is_empty() {
            return Err(schema_err(
                row,
                "cell",
                "covariate cell label is required".into(),
            ));
        }
        if let Some(allowed) = &allowed {
            if !allowed.contains(cell) {
                return Err(schema_err(
                    row,
                    "cell",
                    format!("unknown covariate cell `{cell}`"),
                ));
            }
        }
        out.push(SubjectRecord {
            z,
            s,
            y,
            cell: cell.to_string(),
        });
    }
    Ok(out)
}

/// Writes records as `z,s,y,cell` with `NA` for missing values.
pub fn write_dataset<W: Write>(records: &[SubjectRecord], writer: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(COLUMNS)?;
    let tok = |v: Option<u8>| match v {
        Some(0) => "0",
        Some(_) => "1",
        None => "NA",
    };
    for r in records {
        w.write_record([
            if r.z == 0 { "0" } else { "1" },
            tok(r.s),
            tok(r.y),
            r.cell.as_str(),
        ])?;
    }
    w.flush().map_err(|e| Error::io("<csv output>", e))?;
    Ok(())
}

/// One line of the per-cell, per-arm summary table.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SummaryRow {
    pub cell: String,
    pub arm: u8,
    pub randomized: u64,
    pub available: u64,
    pub events: u64,
    pub outcomes: u64,
}

/// Active arm first within each cell.
pub fn summarize(counts: &TrialCounts) -> Vec<SummaryRow> {
    let mut rows = Vec::with_capacity(counts.cells.len() * 2);
    for (cell, c) in &counts.cells {
        for z in [1u8, 0] {
            rows.push(SummaryRow {
                cell: cell.clone(),
                arm: z,
                randomized: c.n_randomized[z as usize],
                available: c.available(z),
                events: c.events(z),
                outcomes: c.outcomes(z),
            });
        }
    }
    rows
}

pub fn render_summary_table(rows: &[SummaryRow]) -> String {
    let cell_w = rows.iter().map(|r| r.cell.len()).max().unwrap_or(0).max(4);
    let mut out = String::new();
    let _ = writeln!(
        out,
        "{:<cell_w$}  {:<7}  {:>10}  {:>9}  {:>6}  {:>8}",
        "cell", "arm", "randomized", "available", "events", "outcomes"
    );
    for r in rows {
        let _ = writeln!(
            out,
            "{:<cell_w$}  {:<7}  {:>10}  {:>9}  {:>6}  {:>8}",
            r.cell,
            if r.arm == 1 { "active" } else { "control" },
            r.randomized,
            r.available,
            r.events,
            r.outcomes
        );
    }
    out
}
