//! Per-iteration solver traces and their CSV form.

use std::fmt::Write as _;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Column order of the trace CSV. Downstream plotting depends on it verbatim.
pub const CSV_HEADER: &str = "iter,wall_clock_s,J_S,J_U,lower_bound,grad_norm_theta,grad_norm_omega,span_residual";

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RunRow {
    pub iter: usize,
    pub wall_clock_s: f64,
    pub j_s: f64,
    pub j_u: f64,
    pub lower_bound: f64,
    pub grad_norm_theta: f64,
    pub grad_norm_omega: f64,
    pub span_residual: f64,
}

/// How a solver loop ended.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RunStatus {
    Converged,
    MaxIters,
    Diverged(String),
}

impl RunStatus {
    pub fn label(&self) -> &str {
        match self {
            RunStatus::Converged => "converged",
            RunStatus::MaxIters => "max_iters",
            RunStatus::Diverged(_) => "diverged",
        }
    }
}

/// Trace of one solver run. Iterations are strictly increasing and the
/// wall clock is non-decreasing.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct RunRecord {
    rows: Vec<RunRow>,
}

impl RunRecord {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn push(&mut self, row: RunRow) {
        if let Some(last) = self.rows.last() {
            debug_assert!(row.iter > last.iter, "iterations must increase");
            if row.iter <= last.iter {
                return;
            }
        }
        let mut row = row;
        if let Some(last) = self.rows.last() {
            row.wall_clock_s = row.wall_clock_s.max(last.wall_clock_s);
        }
        self.rows.push(row);
    }

    pub fn rows(&self) -> &[RunRow] {
        &self.rows
    }

    pub fn last(&self) -> Option<&RunRow> {
        self.rows.last()
    }

    pub fn first(&self) -> Option<&RunRow> {
        self.rows.first()
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::with_capacity(64 * (self.rows.len() + 1));
        out.push_str(CSV_HEADER);
        out.push('\n');
        for r in &self.rows {
            let _ = writeln!(
                out,
                "{},{},{},{},{},{},{},{}",
                r.iter,
                r.wall_clock_s,
                r.j_s,
                r.j_u,
                r.lower_bound,
                r.grad_norm_theta,
                r.grad_norm_omega,
                r.span_residual
            );
        }
        out
    }

    pub fn from_csv(text: &str) -> Result<Self> {
        let mut lines = text.lines();
        match lines.next() {
            Some(h) if h.trim() == CSV_HEADER => {}
            other => return Err(Error::Serde(format!("unexpected header {other:?}"))),
        }
        let mut record = RunRecord::new();
        for (n, line) in lines.enumerate().filter(|(_, l)| !l.trim().is_empty()) {
            let f: Vec<&str> = line.split(',').collect();
            if f.len() != 8 {
                return Err(Error::Serde(format!("line {}: expected 8 fields", n + 2)));
            }
            let num = |i: usize| -> Result<f64> {
                f[i].trim().parse::<f64>().map_err(|e| Error::Serde(format!("line {}: {e}", n + 2)))
            };
            record.rows.push(RunRow {
                iter: f[0].trim().parse().map_err(|e| Error::Serde(format!("line {}: {e}", n + 2)))?,
                wall_clock_s: num(1)?,
                j_s: num(2)?,
                j_u: num(3)?,
                lower_bound: num(4)?,
                grad_norm_theta: num(5)?,
                grad_norm_omega: num(6)?,
                span_residual: num(7)?,
            });
        }
        Ok(record)
    }
}

/// Monotonic stopwatch used to stamp trace rows.
#[derive(Debug, Clone, Copy)]
pub struct Stopwatch(Instant);

impl Stopwatch {
    pub fn start() -> Self {
        Self(Instant::now())
    }

    pub fn elapsed_s(&self) -> f64 {
        self.0.elapsed().as_secs_f64()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn row(iter: usize, t: f64) -> RunRow {
        RunRow {
            iter,
            wall_clock_s: t,
            j_s: 1.5,
            j_u: 1.25,
            lower_bound: -0.5,
            grad_norm_theta: 0.0,
            grad_norm_omega: 1e-9,
            span_residual: 0.0,
        }
    }

    #[test]
    fn csv_has_contract_header_and_parses_back() {
        let mut rec = RunRecord::new();
        rec.push(row(0, 0.0));
        rec.push(row(10, 0.25));
        let csv = rec.to_csv();
        assert!(
            csv.starts_with("iter,wall_clock_s,J_S,J_U,lower_bound,grad_norm_theta,grad_norm_omega,span_residual\n")
        );
        assert_eq!(RunRecord::from_csv(&csv).unwrap(), rec);
    }

    #[test]
    fn wall_clock_is_clamped_non_decreasing() {
        let mut rec = RunRecord::new();
        rec.push(row(0, 1.0));
        rec.push(row(1, 0.5));
        assert_eq!(rec.rows()[1].wall_clock_s, 1.0);
    }
}
