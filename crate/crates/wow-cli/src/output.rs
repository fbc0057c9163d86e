//! Output rendering: CSV (17-significant-digit floats, LF, header row),
//! JSON (round-trips to the in-memory records), aligned pretty tables, and
//! the per-run manifest sidecar.

use std::fmt::Write as _;
use std::path::Path;

use serde::Serialize;

use crate::args::FormatArg;
use crate::{io_error, CliResult};

/// One table cell; floats render with full precision in csv mode.
#[derive(Debug, Clone)]
pub enum Cell {
    Str(String),
    Bool(bool),
    U64(u64),
    F64(f64),
}

impl Cell {
    fn csv(&self) -> String {
        match self {
            Cell::Str(s) => s.clone(),
            Cell::Bool(b) => b.to_string(),
            Cell::U64(v) => v.to_string(),
            Cell::F64(v) => format!("{v:.16e}"),
        }
    }

    fn pretty(&self) -> String {
        match self {
            Cell::Str(s) => s.clone(),
            Cell::Bool(b) => b.to_string(),
            Cell::U64(v) => v.to_string(),
            Cell::F64(v) => format!("{v:.6}"),
        }
    }

    fn json(&self) -> serde_json::Value {
        match self {
            Cell::Str(s) => serde_json::Value::String(s.clone()),
            Cell::Bool(b) => serde_json::Value::Bool(*b),
            Cell::U64(v) => serde_json::Value::from(*v),
            Cell::F64(v) => serde_json::Value::from(*v),
        }
    }
}

/// Column-major schema with row-major data; every renderer derives from it.
#[derive(Debug, Clone)]
pub struct Table {
    pub columns: Vec<&'static str>,
    pub rows: Vec<Vec<Cell>>,
}

impl Table {
    pub fn new(columns: Vec<&'static str>) -> Self {
        Self {
            columns,
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }

    pub fn render_csv(&self) -> String {
        let mut out = String::new();
        out.push_str(&self.columns.join(","));
        out.push('\n');
        for row in &self.rows {
            let cells: Vec<String> = row.iter().map(Cell::csv).collect();
            out.push_str(&cells.join(","));
            out.push('\n');
        }
        out
    }

    pub fn render_json(&self) -> String {
        let records: Vec<serde_json::Map<String, serde_json::Value>> = self
            .rows
            .iter()
            .map(|row| {
                self.columns
                    .iter()
                    .zip(row)
                    .map(|(c, cell)| (c.to_string(), cell.json()))
                    .collect()
            })
            .collect();
        let mut s = serde_json::to_string_pretty(&records).expect("table rows are serializable");
        s.push('\n');
        s
    }

    pub fn render_pretty(&self) -> String {
        let rendered: Vec<Vec<String>> = self
            .rows
            .iter()
            .map(|row| row.iter().map(Cell::pretty).collect())
            .collect();
        let mut widths: Vec<usize> = self.columns.iter().map(|c| c.len()).collect();
        for row in &rendered {
            for (w, cell) in widths.iter_mut().zip(row) {
                *w = (*w).max(cell.len());
            }
        }
        let mut out = String::new();
        for (i, c) in self.columns.iter().enumerate() {
            if i > 0 {
                out.push_str("  ");
            }
            let _ = write!(out, "{c:<width$}", width = widths[i]);
        }
        out.push('\n');
        for (i, w) in widths.iter().enumerate() {
            if i > 0 {
                out.push_str("  ");
            }
            out.push_str(&"-".repeat(*w));
        }
        out.push('\n');
        for row in &rendered {
            for (i, cell) in row.iter().enumerate() {
                if i > 0 {
                    out.push_str("  ");
                }
                let _ = write!(out, "{cell:<width$}", width = widths[i]);
            }
            out.push('\n');
        }
        out
    }

    pub fn render(&self, format: FormatArg) -> String {
        match format {
            FormatArg::Csv => self.render_csv(),
            FormatArg::Json => self.render_json(),
            FormatArg::PrettyTable => self.render_pretty(),
        }
    }
}

/// FNV-1a 64-bit hash of the rendered output; recorded in the manifest so
/// a rerun can be checked for byte identity without keeping the bytes.
pub fn fnv1a64(bytes: &[u8]) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for &b in bytes {
        h ^= u64::from(b);
        h = h.wrapping_mul(0x0000_0100_0000_01b3);
    }
    h
}

/// Reproducibility record written next to every simulate output file.
#[derive(Debug, Clone, Serialize)]
pub struct RunManifest {
    pub tool: &'static str,
    pub version: &'static str,
    pub command: String,
    pub seed: u64,
    pub timestamp: String,
    /// Fully resolved configuration (defaults applied), not the raw file.
    pub config: serde_json::Value,
    pub output_path: String,
    pub output_checksum_fnv1a64: String,
}

impl RunManifest {
    pub fn new(command: &str, seed: u64, config: serde_json::Value, out: &Path, rendered: &[u8]) -> Self {
        Self {
            tool: "wow",
            version: env!("CARGO_PKG_VERSION"),
            command: command.to_string(),
            seed,
            timestamp: chrono::Utc::now().to_rfc3339(),
            config,
            output_path: out.display().to_string(),
            output_checksum_fnv1a64: format!("{:016x}", fnv1a64(rendered)),
        }
    }

    /// Write `<out>.manifest.json` beside the output file.
    pub fn write_sidecar(&self, out: &Path) -> CliResult<()> {
        let mut path = out.as_os_str().to_owned();
        path.push(".manifest.json");
        let body = serde_json::to_string_pretty(self).expect("manifest is serializable");
        std::fs::write(&path, body + "\n")
            .map_err(|e| io_error(format!("cannot write manifest {}: {e}", Path::new(&path).display())))
    }
}

/// Send rendered output to the file named by --out, or stdout without it.
pub fn emit(out: Option<&Path>, content: &str) -> CliResult<()> {
    match out {
        Some(path) => std::fs::write(path, content)
            .map_err(|e| io_error(format!("cannot write {}: {e}", path.display()))),
        None => {
            print!("{content}");
            Ok(())
        }
    }
}
