use std::path::PathBuf;

use serde::{Deserialize, Serialize};

use crate::environments::{
    gen_four_room, gen_mixture_mdp, gen_random_mdp, gen_tandem_queue, gen_weakly_coupled, two_basis_mdp,
    TandemQueueParams,
};
use crate::error::{Error, Result};
use crate::mdp::GroundMdp;

/// A benchmark model, as read from experiment configs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum EnvSpec {
    Random {
        n_states: usize,
        n_actions: usize,
        density: f64,
        gamma: f64,
        seed: u64,
    },
    WeaklyCoupled {
        n_clusters: usize,
        cluster_size: usize,
        n_actions: usize,
        inter_prob: f64,
        gamma: f64,
        seed: u64,
    },
    FourRoom {
        side: usize,
        gamma: f64,
    },
    TandemQueue(TandemQueueParams),
    Mixture {
        n_states: usize,
        n_actions: usize,
        n_prototypes: usize,
        gamma: f64,
        seed: u64,
    },
    TwoBasis {
        gamma: f64,
    },
    /// An MDP stored in the JSON model format.
    File {
        path: PathBuf,
    },
}

impl EnvSpec {
    pub fn build(&self) -> Result<GroundMdp> {
        match self {
            EnvSpec::Random { n_states, n_actions, density, gamma, seed } => {
                gen_random_mdp(*n_states, *n_actions, *density, *gamma, *seed)
            }
            EnvSpec::WeaklyCoupled { n_clusters, cluster_size, n_actions, inter_prob, gamma, seed } => {
                gen_weakly_coupled(*n_clusters, *cluster_size, *n_actions, *inter_prob, *gamma, *seed)
            }
            EnvSpec::FourRoom { side, gamma } => gen_four_room(*side, *gamma),
            EnvSpec::TandemQueue(params) => gen_tandem_queue(params),
            EnvSpec::Mixture { n_states, n_actions, n_prototypes, gamma, seed } => {
                gen_mixture_mdp(*n_states, *n_actions, *n_prototypes, *gamma, *seed)
            }
            EnvSpec::TwoBasis { gamma } => two_basis_mdp(*gamma),
            EnvSpec::File { path } => {
                let text = std::fs::read_to_string(path)
                    .map_err(|e| Error::Serde(format!("reading {}: {e}", path.display())))?;
                GroundMdp::from_json(&text)
            }
        }
    }

    /// Generator seed, for the randomized families.
    pub fn seed(&self) -> Option<u64> {
        match self {
            EnvSpec::Random { seed, .. } | EnvSpec::WeaklyCoupled { seed, .. } | EnvSpec::Mixture { seed, .. } => {
                Some(*seed)
            }
            _ => None,
        }
    }

    /// Copy with the generator seed replaced; deterministic families are unchanged.
    pub fn with_seed(&self, new_seed: u64) -> Self {
        let mut out = self.clone();
        match &mut out {
            EnvSpec::Random { seed, .. } | EnvSpec::WeaklyCoupled { seed, .. } | EnvSpec::Mixture { seed, .. } => {
                *seed = new_seed
            }
            _ => {}
        }
        out
    }

    /// Short task name used in file names.
    pub fn task_name(&self) -> String {
        match self {
            EnvSpec::Random { density, .. } => {
                format!("random_d{}", (density * 100.0).round() as u64)
            }
            EnvSpec::WeaklyCoupled { .. } => "weakly_coupled".into(),
            EnvSpec::FourRoom { .. } => "four_room".into(),
            EnvSpec::TandemQueue(_) => "tandem_queue".into(),
            EnvSpec::Mixture { .. } => "mixture".into(),
            EnvSpec::TwoBasis { .. } => "two_basis".into(),
            EnvSpec::File { path } => path.file_stem().map_or("file".into(), |s| s.to_string_lossy().into_owned()),
        }
    }
}
