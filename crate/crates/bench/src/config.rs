use std::fmt;
use std::path::{Path, PathBuf};

use homomorphic_mdp::environments::EnvSpec;
use homomorphic_mdp::solvers::SolverConfig;
use serde::{Deserialize, Serialize};

use crate::error::{BenchError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Algorithm {
    PolicyIter,
    Hpg,
    Ebhpg,
}

impl fmt::Display for Algorithm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Algorithm::PolicyIter => "policy_iter",
            Algorithm::Hpg => "hpg",
            Algorithm::Ebhpg => "ebhpg",
        })
    }
}

fn default_fraction() -> f64 {
    1.0
}

fn default_repeats() -> usize {
    1
}

fn default_output_dir() -> PathBuf {
    PathBuf::from("runs")
}

/// One experiment: a model family, a solver and how many seeded repeats.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    /// Prefix of every output file. Defaults to the task name of `env`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
    pub env: EnvSpec,
    pub algorithm: Algorithm,
    /// `|U| = max(1, floor(fraction * r))` with `r` the transition rank.
    #[serde(default = "default_fraction")]
    pub abstract_fraction: f64,
    #[serde(default)]
    pub solver: SolverConfig,
    #[serde(default = "default_repeats")]
    pub repeats: usize,
    #[serde(default = "default_output_dir")]
    pub output_dir: PathBuf,
    /// Start every episode from this state; uniform over states when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub initial_state: Option<usize>,
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.abstract_fraction > 0.0 && self.abstract_fraction <= 1.0) {
            return Err(BenchError::Config(format!("abstract_fraction {} outside (0, 1]", self.abstract_fraction)));
        }
        if self.repeats == 0 {
            return Err(BenchError::Config("repeats must be at least 1".into()));
        }
        if let Some(name) = &self.name {
            if name.is_empty() || name.contains(['/', '\\']) {
                return Err(BenchError::Config(format!("name {name:?} is not a valid file prefix")));
            }
        }
        self.solver.validate().map_err(|e| BenchError::Config(e.to_string()))
    }

    pub fn task(&self) -> String {
        self.name.clone().unwrap_or_else(|| self.env.task_name())
    }

    /// Seed of the first repeat: the generator seed for randomized models,
    /// the solver seed otherwise.
    pub fn base_seed(&self) -> u64 {
        self.env.seed().unwrap_or(self.solver.seed)
    }

    /// Seeds used by the repeats, consecutive from `base_seed`.
    pub fn seeds(&self) -> Vec<u64> {
        let base = self.base_seed();
        (0..self.repeats as u64).map(|k| base.wrapping_add(k)).collect()
    }

    /// Same experiment with `seed` as the base seed.
    pub fn with_seed(&self, seed: u64) -> Self {
        let mut out = self.clone();
        out.env = self.env.with_seed(seed);
        out.solver.seed = seed;
        out
    }

    /// File stem shared by every output of this experiment.
    pub fn stem(&self) -> String {
        format!("{}_{}_f{}", self.task(), self.algorithm, self.abstract_fraction)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let config: Self = serde_json::from_str(text).map_err(|e| BenchError::Config(e.to_string()))?;
        config.validate()?;
        Ok(config)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_json(&read_config(path)?)
    }
}

/// A batch file is either a bare array of experiments or `{"experiments": [...]}`.
#[derive(Deserialize)]
#[serde(untagged)]
enum SuiteFile {
    List(Vec<ExperimentConfig>),
    Wrapped { experiments: Vec<ExperimentConfig> },
}

pub fn load_suite(path: &Path) -> Result<Vec<ExperimentConfig>> {
    let text = read_config(path)?;
    let configs = match serde_json::from_str(&text) {
        Ok(SuiteFile::List(c) | SuiteFile::Wrapped { experiments: c }) => c,
        // untagged errors are uninformative, retry as a single experiment for a better message
        Err(_) => vec![ExperimentConfig::from_json(&text)?],
    };
    for c in &configs {
        c.validate()?;
    }
    Ok(configs)
}

pub(crate) fn read_config(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).map_err(|e| BenchError::Config(format!("{}: {e}", path.display())))
}
