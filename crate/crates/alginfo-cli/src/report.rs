//! CSV reports with JSON sidecars.
//!
//! Reports are regression artifacts: fixed column order, every row
//! prefixed with the full provenance (version, machine, bounds, depth,
//! seed), floats printed shortest-round-trip. Timing lives only in the
//! sidecar so a rerun from the sidecar reproduces the CSV byte for byte.

use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use serde::Serialize;

pub const ARTIFACT_VERSION: &str = env!("CARGO_PKG_VERSION");

/// Provenance stamped onto every row.
#[derive(Debug, Clone, Serialize)]
pub struct Provenance {
    pub machine: String,
    pub max_len: u32,
    pub budget: u64,
    pub depth: u32,
    pub seed: u64,
}

pub struct Report {
    pub name: String,
    pub columns: Vec<&'static str>,
    pub rows: Vec<Vec<String>>,
}

impl Report {
    pub fn new(name: &str, columns: Vec<&'static str>) -> Self {
        Report {
            name: name.to_string(),
            columns,
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<String>) {
        assert_eq!(row.len(), self.columns.len(), "row arity mismatch");
        self.rows.push(row);
    }

    fn render(&self, prov: &Provenance) -> String {
        let mut out = String::new();
        out.push_str("version,machine,max_len,budget,depth,seed");
        for c in &self.columns {
            out.push(',');
            out.push_str(c);
        }
        out.push('\n');
        let prefix = format!(
            "{},{},{},{},{},{}",
            ARTIFACT_VERSION, prov.machine, prov.max_len, prov.budget, prov.depth, prov.seed
        );
        for row in &self.rows {
            out.push_str(&prefix);
            for cell in row {
                out.push(',');
                out.push_str(&csv_escape(cell));
            }
            out.push('\n');
        }
        out
    }
}

fn csv_escape(cell: &str) -> String {
    if cell.contains(',') || cell.contains('"') || cell.contains('\n') {
        format!("\"{}\"", cell.replace('"', "\"\""))
    } else {
        cell.to_string()
    }
}

pub fn fmt_f64(v: f64) -> String {
    if v.is_nan() {
        "nan".to_string()
    } else if v == f64::INFINITY {
        "inf".to_string()
    } else if v == f64::NEG_INFINITY {
        "-inf".to_string()
    } else {
        format!("{v}")
    }
}

#[derive(Serialize)]
struct Sidecar<'a, C: Serialize> {
    artifact_version: &'static str,
    config: &'a C,
    machine_name: &'a str,
    report_file: String,
    rows: usize,
    elapsed_ms: u128,
}

/// Writes `<out>/<name>.csv` and `<out>/<name>.meta.json`, returning the
/// CSV path.
pub fn write_report<C: Serialize>(
    out_dir: &Path,
    report: &Report,
    prov: &Provenance,
    config: &C,
    elapsed_ms: u128,
) -> Result<PathBuf> {
    fs::create_dir_all(out_dir)
        .with_context(|| format!("creating output directory {}", out_dir.display()))?;
    let csv_path = out_dir.join(format!("{}.csv", report.name));
    fs::write(&csv_path, report.render(prov))
        .with_context(|| format!("writing {}", csv_path.display()))?;
    let sidecar = Sidecar {
        artifact_version: ARTIFACT_VERSION,
        config,
        machine_name: &prov.machine,
        report_file: format!("{}.csv", report.name),
        rows: report.rows.len(),
        elapsed_ms,
    };
    let meta_path = out_dir.join(format!("{}.meta.json", report.name));
    fs::write(&meta_path, serde_json::to_string_pretty(&sidecar)?)
        .with_context(|| format!("writing {}", meta_path.display()))?;
    Ok(csv_path)
}
