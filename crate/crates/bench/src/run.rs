use std::path::{Path, PathBuf};

use homomorphic_mdp::homomorphism::{
    build_encoding_from_basis, span_condition_holds, transition_basis, TransitionBasis, DEFAULT_RANK_TOL,
};
use homomorphic_mdp::solvers::{ebhpg_run, hpg_run};
use homomorphic_mdp::{policy_iteration, GroundMdp, InitialDistribution, RunRecord, RunStatus};
use rayon::prelude::*;
use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::config::{Algorithm, ExperimentConfig};
use crate::error::{BenchError, Result};
use crate::summary::{SummaryRow, SummaryTable, SUMMARY_SUFFIX};

/// Improvement threshold for the reference policy iteration.
const POLICY_ITER_TOL: f64 = 1e-12;

/// Everything one repeat produced.
#[derive(Debug, Clone)]
pub struct RepeatResult {
    pub summary: SummaryRow,
    pub record: RunRecord,
    pub csv_path: PathBuf,
}

#[derive(Debug, Clone)]
pub struct ExperimentResult {
    pub repeats: Vec<RepeatResult>,
    pub summary_path: PathBuf,
    pub manifest_path: PathBuf,
}

impl ExperimentResult {
    pub fn table(&self) -> SummaryTable {
        SummaryTable { rows: self.repeats.iter().map(|r| r.summary.clone()).collect() }
    }
}

#[derive(Serialize)]
struct Manifest<'a> {
    config_sha256: String,
    seeds: Vec<u64>,
    version: &'static str,
    files: Vec<String>,
    config: &'a ExperimentConfig,
}

/// `max(1, floor(fraction * rank))`.
pub fn abstract_size(fraction: f64, rank: usize) -> usize {
    ((fraction * rank as f64) as usize).max(1)
}

/// Runs every repeat of `config`, writing one trace CSV per repeat plus a
/// summary and a manifest into `config.output_dir`. Solver failures end up
/// in the status column; only IO and configuration problems are errors.
pub fn run_experiment(config: &ExperimentConfig) -> Result<ExperimentResult> {
    config.validate()?;
    let dir = &config.output_dir;
    std::fs::create_dir_all(dir).map_err(|e| BenchError::io(dir, e))?;
    let stem = config.stem();

    let mut repeats = Vec::with_capacity(config.repeats);
    for seed in config.seeds() {
        let (summary, record) = run_repeat(config, seed)?;
        let csv_path = dir.join(format!("{stem}_s{seed}.csv"));
        write_file(&csv_path, &record.to_csv())?;
        repeats.push(RepeatResult { summary, record, csv_path });
    }

    let summary_path = dir.join(format!("{stem}{SUMMARY_SUFFIX}"));
    let table = SummaryTable { rows: repeats.iter().map(|r| r.summary.clone()).collect() };
    table.write(&summary_path)?;

    let canonical = serde_json::to_string(config).expect("configs always serialize");
    let manifest = Manifest {
        config_sha256: format!("{:x}", Sha256::digest(canonical.as_bytes())),
        seeds: config.seeds(),
        version: env!("CARGO_PKG_VERSION"),
        files: repeats.iter().map(|r| file_name(&r.csv_path)).chain([file_name(&summary_path)]).collect(),
        config,
    };
    let manifest_path = dir.join(format!("{stem}_manifest.json"));
    write_file(&manifest_path, &(serde_json::to_string_pretty(&manifest).expect("manifest serializes") + "\n"))?;

    Ok(ExperimentResult { repeats, summary_path, manifest_path })
}

/// Runs a batch on a pool of `workers` threads. Each run stays single
/// threaded; results come back in input order.
pub fn run_suite(configs: &[ExperimentConfig], workers: usize) -> Result<Vec<ExperimentResult>> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers.max(1))
        .build()
        .map_err(|e| BenchError::Config(format!("thread pool: {e}")))?;
    pool.install(|| configs.par_iter().map(run_experiment).collect())
}

fn run_repeat(config: &ExperimentConfig, seed: u64) -> Result<(SummaryRow, RunRecord)> {
    let config = config.with_seed(seed);
    let mdp = config.env.build().map_err(|e| BenchError::Config(format!("env: {e}")))?;
    let xi = initial_distribution(&config, &mdp)?;
    let mut row = SummaryRow {
        task: config.task(),
        algorithm: config.algorithm.to_string(),
        fraction: config.abstract_fraction,
        seed,
        final_j_s: None,
        iters: 0,
        wall_clock_s: 0.0,
        span_ok: false,
        status: String::new(),
        n_abstract: mdp.n_states(),
    };

    let outcome = match config.algorithm {
        Algorithm::PolicyIter => policy_iteration(&mdp, &xi, config.solver.max_iters, POLICY_ITER_TOL)
            .map(|out| (out.record, out.status, out.iterations, true)),
        Algorithm::Hpg => {
            let (basis, n_u) = abstraction(&config, &mdp)?;
            row.n_abstract = n_u;
            build_encoding_from_basis(&basis, n_u, seed)
                .and_then(|enc| hpg_run(&mdp, &enc, &xi, &config.solver))
                .map(|out| (out.record, out.status, out.iterations, out.span.span_ok))
        }
        Algorithm::Ebhpg => {
            let (basis, n_u) = abstraction(&config, &mdp)?;
            row.n_abstract = n_u;
            ebhpg_run(&mdp, n_u, &xi, &config.solver).and_then(|out| {
                let span = span_condition_holds(&out.encoding_params.encoding()?, &basis, basis.tolerance)?;
                Ok((out.record, out.status, out.iterations, span.span_ok))
            })
        }
    };

    let record = match outcome {
        Ok((record, status, iters, span_ok)) => {
            row.status = status_text(&status);
            row.iters = iters;
            row.span_ok = span_ok;
            record
        }
        Err(e) => {
            row.status = format!("error: {e}");
            RunRecord::new()
        }
    };
    if let Some(last) = record.last() {
        row.final_j_s = Some(last.j_s);
        row.wall_clock_s = last.wall_clock_s;
    }
    Ok((row, record))
}

fn abstraction(config: &ExperimentConfig, mdp: &GroundMdp) -> Result<(TransitionBasis, usize)> {
    let basis = transition_basis(mdp, DEFAULT_RANK_TOL)?;
    let n_u = abstract_size(config.abstract_fraction, basis.rank());
    Ok((basis, n_u))
}

fn initial_distribution(config: &ExperimentConfig, mdp: &GroundMdp) -> Result<InitialDistribution> {
    match config.initial_state {
        None => Ok(InitialDistribution::uniform(mdp.n_states())),
        Some(s) if s < mdp.n_states() => Ok(InitialDistribution::point(mdp.n_states(), s)),
        Some(s) => Err(BenchError::Config(format!("initial_state {s} but the model has {} states", mdp.n_states()))),
    }
}

fn status_text(status: &RunStatus) -> String {
    match status {
        RunStatus::Diverged(reason) => format!("diverged: {reason}"),
        other => other.label().to_string(),
    }
}

fn file_name(path: &Path) -> String {
    path.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_default()
}

pub(crate) fn write_file(path: &Path, contents: &str) -> Result<()> {
    std::fs::write(path, contents).map_err(|e| BenchError::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn abstract_size_truncates() {
        assert_eq!(abstract_size(0.2, 10), 2);
        assert_eq!(abstract_size(0.29, 100), 28);
        assert_eq!(abstract_size(0.1, 5), 1);
        assert_eq!(abstract_size(1.0, 37), 37);
    }
}
