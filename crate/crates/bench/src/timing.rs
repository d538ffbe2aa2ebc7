use std::time::Instant;

use homomorphic_mdp::homomorphism::{EncodingMatrix, HomomorphicChain};
use homomorphic_mdp::{exact_value, induce_chain, GroundMdp, PolicyMatrix};
use serde::Serialize;

use crate::error::Result;

/// Mean wall-clock cost of one policy evaluation, abstract versus ground.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct EvaluationTiming {
    /// Building `C`, `P_U`, `R_U` and solving the `|U|` system.
    pub abstract_mean_s: f64,
    /// Inducing `P^pi` and solving the `|S|` system by LU.
    pub ground_mean_s: f64,
    pub samples: usize,
}

impl EvaluationTiming {
    pub fn speedup(&self) -> f64 {
        self.ground_mean_s / self.abstract_mean_s
    }
}

/// Times `samples` evaluations of each kind, interleaved so that both see
/// the same machine state, after one untimed warm-up of each. Both sides
/// start from the MDP and the policy, so forming `P^pi` is counted twice.
pub fn time_policy_evaluation(
    mdp: &GroundMdp,
    policy: &PolicyMatrix,
    enc: &EncodingMatrix,
    samples: usize,
) -> Result<EvaluationTiming> {
    let samples = samples.max(1);
    HomomorphicChain::build(mdp, policy, enc)?;
    exact_value(&induce_chain(mdp, policy)?)?;
    let (mut abstract_s, mut ground_s) = (0.0, 0.0);
    for _ in 0..samples {
        let t = Instant::now();
        let chain = HomomorphicChain::build(mdp, policy, enc)?;
        abstract_s += t.elapsed().as_secs_f64();
        std::hint::black_box(chain.abstract_values());

        let t = Instant::now();
        let v = exact_value(&induce_chain(mdp, policy)?)?;
        ground_s += t.elapsed().as_secs_f64();
        std::hint::black_box(&v);
    }
    Ok(EvaluationTiming {
        abstract_mean_s: abstract_s / samples as f64,
        ground_mean_s: ground_s / samples as f64,
        samples,
    })
}
