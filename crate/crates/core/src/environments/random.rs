use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::Exp1;

use crate::error::{Error, Result};
use crate::mdp::GroundMdp;

/// Nonzeros per transition row for a given density.
pub fn support_size(n_states: usize, density: f64) -> usize {
    ((density * n_states as f64).round() as usize).clamp(1, n_states)
}

/// Uniform point on the probability simplex of dimension `k`
/// (normalized unit exponentials).
pub(crate) fn dirichlet_uniform(rng: &mut ChaCha8Rng, k: usize) -> Vec<f64> {
    let draws: Vec<f64> = (0..k).map(|_| rng.sample::<f64, _>(Exp1)).collect();
    let sum: f64 = draws.iter().sum();
    draws.into_iter().map(|x| x / sum).collect()
}

/// Random MDP whose every transition row has `max(1, round(density |S|))`
/// nonzero entries at uniformly chosen states, with flat-Dirichlet weights.
/// Rewards are uniform on `[0, 1]`.
pub fn gen_random_mdp(n_states: usize, n_actions: usize, density: f64, gamma: f64, seed: u64) -> Result<GroundMdp> {
    if n_states == 0 || n_actions == 0 {
        return Err(Error::InvalidParameter("random MDP needs at least one state and action".into()));
    }
    if !(density > 0.0 && density <= 1.0) {
        return Err(Error::InvalidParameter(format!("density {density} outside (0, 1]")));
    }
    if density * (n_states as f64) < 1.0 {
        return Err(Error::InvalidParameter(format!("density {density} leaves no support over {n_states} states")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let k = support_size(n_states, density);
    let mut transitions = vec![0.0; n_states * n_actions * n_states];
    for row in transitions.chunks_exact_mut(n_states) {
        let support = sample(&mut rng, n_states, k);
        for (j, w) in support.iter().zip(dirichlet_uniform(&mut rng, k)) {
            row[j] = w;
        }
    }
    let rewards = (0..n_states * n_actions).map(|_| rng.random::<f64>()).collect();
    GroundMdp::new(n_states, n_actions, transitions, rewards, gamma)
}
