use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::environments::random::dirichlet_uniform;
use crate::error::{Error, Result};
use crate::mdp::GroundMdp;

/// Most states outside the cluster that one row leaks into.
const MAX_INTER_TARGETS: usize = 2;

/// Clustered MDP. Within a cluster transitions are dense random with total
/// mass `1 - inter_prob`; the remaining `inter_prob` goes to at most two
/// random states in other clusters. State `s` belongs to cluster
/// `s / cluster_size`.
pub fn gen_weakly_coupled(
    n_clusters: usize,
    cluster_size: usize,
    n_actions: usize,
    inter_prob: f64,
    gamma: f64,
    seed: u64,
) -> Result<GroundMdp> {
    if n_clusters == 0 || cluster_size == 0 || n_actions == 0 {
        return Err(Error::InvalidParameter("weakly coupled MDP needs positive sizes".into()));
    }
    if !(0.0..0.5).contains(&inter_prob) {
        return Err(Error::InvalidParameter(format!("inter_prob {inter_prob} outside [0, 0.5)")));
    }
    if n_clusters == 1 && inter_prob > 0.0 {
        return Err(Error::InvalidParameter("a single cluster has nowhere to leak to".into()));
    }
    let n = n_clusters * cluster_size;
    let outside = n - cluster_size;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut transitions = vec![0.0; n * n_actions * n];
    for (i, row) in transitions.chunks_exact_mut(n).enumerate() {
        let base = (i / n_actions) / cluster_size * cluster_size;
        for (j, w) in dirichlet_uniform(&mut rng, cluster_size).into_iter().enumerate() {
            row[base + j] = (1.0 - inter_prob) * w;
        }
        if inter_prob > 0.0 {
            let k = MAX_INTER_TARGETS.min(outside);
            let targets = sample(&mut rng, outside, k);
            for (t, w) in targets.iter().zip(dirichlet_uniform(&mut rng, k)) {
                // skip over the row's own cluster
                let j = if t < base { t } else { t + cluster_size };
                row[j] += inter_prob * w;
            }
        }
    }
    let rewards = (0..n * n_actions).map(|_| rng.random::<f64>()).collect();
    GroundMdp::new(n, n_actions, transitions, rewards, gamma)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn no_coupling_is_block_diagonal() {
        let mdp = gen_weakly_coupled(3, 4, 2, 0.0, 0.9, 1).unwrap();
        for s in 0..12 {
            for a in 0..2 {
                for (j, &p) in mdp.row(s, a).iter().enumerate() {
                    if j / 4 != s / 4 {
                        assert_eq!(p, 0.0);
                    }
                }
            }
        }
    }

    #[test]
    fn single_cluster_with_leak_rejected() {
        assert!(gen_weakly_coupled(1, 4, 2, 0.1, 0.9, 0).is_err());
        assert!(gen_weakly_coupled(2, 4, 2, 0.5, 0.9, 0).is_err());
    }
}
