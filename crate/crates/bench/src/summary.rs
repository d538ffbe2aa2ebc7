use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{BenchError, Result};

/// Suffix of the per-experiment summary files that `summarize` collects.
pub const SUMMARY_SUFFIX: &str = "_summary.json";

/// Outcome of one repeat, mirroring the last row of its trace.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SummaryRow {
    pub task: String,
    pub algorithm: String,
    pub fraction: f64,
    pub seed: u64,
    /// Absent when the solver aborted before logging anything.
    #[serde(rename = "final_J_S")]
    pub final_j_s: Option<f64>,
    pub iters: usize,
    pub wall_clock_s: f64,
    pub span_ok: bool,
    pub status: String,
    pub n_abstract: usize,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct SummaryTable {
    pub rows: Vec<SummaryRow>,
}

impl SummaryTable {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("summary rows always serialize")
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
            std::fs::create_dir_all(parent).map_err(|e| BenchError::io(parent, e))?;
        }
        std::fs::write(path, self.to_json() + "\n").map_err(|e| BenchError::io(path, e))
    }

    pub fn read(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| BenchError::io(path, e))?;
        serde_json::from_str(&text).map_err(|e| BenchError::Config(format!("{}: {e}", path.display())))
    }

    fn sort(&mut self) {
        self.rows.sort_by(|a, b| {
            (&a.task, &a.algorithm, a.seed)
                .cmp(&(&b.task, &b.algorithm, b.seed))
                .then(a.fraction.total_cmp(&b.fraction))
        });
    }
}

/// Merges every `*_summary.json` directly inside `dir`, sorted by task,
/// algorithm, seed and fraction. `skip` excludes a file (typically the
/// merged output itself).
pub fn summarize(dir: &Path, skip: Option<&Path>) -> Result<SummaryTable> {
    let entries = std::fs::read_dir(dir).map_err(|e| BenchError::io(dir, e))?;
    let skip = skip.and_then(|p| p.canonicalize().ok());
    let mut paths = Vec::new();
    for entry in entries {
        let path = entry.map_err(|e| BenchError::io(dir, e))?.path();
        let is_summary = path.file_name().and_then(|n| n.to_str()).is_some_and(|n| n.ends_with(SUMMARY_SUFFIX));
        if is_summary && path.canonicalize().ok() != skip {
            paths.push(path);
        }
    }
    paths.sort();
    let mut table = SummaryTable::default();
    for path in paths {
        table.rows.extend(SummaryTable::read(&path)?.rows);
    }
    table.sort();
    Ok(table)
}
