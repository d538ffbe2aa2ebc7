use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::environments::random::dirichlet_uniform;
use crate::error::{Error, Result};
use crate::mdp::GroundMdp;

/// Low-rank MDP: every transition row is a random convex combination of
/// `n_prototypes` dense random distributions, so the transition rank is at
/// most `n_prototypes`. Rewards are uniform on `[0, 1]`.
pub fn gen_mixture_mdp(
    n_states: usize,
    n_actions: usize,
    n_prototypes: usize,
    gamma: f64,
    seed: u64,
) -> Result<GroundMdp> {
    if n_states == 0 || n_actions == 0 || n_prototypes == 0 {
        return Err(Error::InvalidParameter("mixture MDP needs positive sizes".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let prototypes: Vec<Vec<f64>> = (0..n_prototypes).map(|_| dirichlet_uniform(&mut rng, n_states)).collect();
    let mut transitions = Vec::with_capacity(n_states * n_actions * n_states);
    for _ in 0..n_states * n_actions {
        let weights = dirichlet_uniform(&mut rng, n_prototypes);
        let row: Vec<f64> =
            (0..n_states).map(|j| prototypes.iter().zip(&weights).map(|(k, w)| w * k[j]).sum()).collect();
        let sum: f64 = row.iter().sum();
        transitions.extend(row.into_iter().map(|x| x / sum));
    }
    let rewards = (0..n_states * n_actions).map(|_| rng.random::<f64>()).collect();
    GroundMdp::new(n_states, n_actions, transitions, rewards, gamma)
}
