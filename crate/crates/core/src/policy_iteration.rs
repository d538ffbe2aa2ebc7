//! Exact policy iteration on the ground MDP, the reference solver.

use crate::error::Result;
use crate::mdp::{
    argmax_first, exact_value, induce_chain, performance, q_values, GroundMdp, InitialDistribution, PolicyMatrix,
    ValueVector,
};
use crate::record::{RunRecord, RunRow, RunStatus, Stopwatch};

#[derive(Debug, Clone)]
pub struct PolicyIterationOutcome {
    pub policy: PolicyMatrix,
    pub values: ValueVector,
    pub record: RunRecord,
    pub status: RunStatus,
    /// Number of evaluation/improvement rounds performed.
    pub iterations: usize,
}

/// Howard policy iteration from the all-zeros action choice.
///
/// The greedy action (lowest index among exact maxima) only replaces the
/// incumbent when its Q-value is larger by more than `tol`. The run is
/// converged once no state changes.
pub fn policy_iteration(
    mdp: &GroundMdp,
    xi: &InitialDistribution,
    max_iters: usize,
    tol: f64,
) -> Result<PolicyIterationOutcome> {
    let clock = Stopwatch::start();
    let n_actions = mdp.n_actions();
    let mut actions = vec![0usize; mdp.n_states()];
    let mut record = RunRecord::new();
    let mut status = RunStatus::MaxIters;
    let mut iterations = 0;

    let (policy, values) = loop {
        let policy = PolicyMatrix::deterministic(&actions, n_actions)?;
        let values = exact_value(&induce_chain(mdp, &policy)?)?;
        let j = performance(xi, &values)?;
        record.push(RunRow {
            iter: iterations,
            wall_clock_s: clock.elapsed_s(),
            j_s: j,
            j_u: j,
            lower_bound: j,
            grad_norm_theta: 0.0,
            grad_norm_omega: 0.0,
            span_residual: 0.0,
        });
        if iterations >= max_iters {
            break (policy, values);
        }
        iterations += 1;

        let q = q_values(mdp, &values)?;
        let mut changed = false;
        for (s, current) in actions.iter_mut().enumerate() {
            let row = q.row(s);
            let best = argmax_first(row.iter().copied(), 0.0);
            if row[best] > row[*current] + tol {
                *current = best;
                changed = true;
            }
        }
        if !changed {
            status = RunStatus::Converged;
            break (policy, values);
        }
    };

    Ok(PolicyIterationOutcome { policy, values, record, status, iterations })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn one_state_converges_in_one_iteration() {
        let mdp = GroundMdp::new(1, 1, vec![1.0], vec![2.0], 0.5).unwrap();
        let out = policy_iteration(&mdp, &InitialDistribution::uniform(1), 100, 1e-12).unwrap();
        assert_eq!(out.status, RunStatus::Converged);
        assert_eq!(out.iterations, 1);
        assert!((out.values[0] - 4.0).abs() < 1e-12);
    }

    #[test]
    fn dominating_action_is_selected() {
        // action 1 pays more everywhere with identical dynamics
        let t = vec![vec![vec![0.5, 0.5], vec![0.5, 0.5]], vec![vec![0.2, 0.8], vec![0.2, 0.8]]];
        let r = vec![vec![0.0, 1.0], vec![0.0, 1.0]];
        let mdp = GroundMdp::from_nested(&t, &r, 0.9).unwrap();
        let out = policy_iteration(&mdp, &InitialDistribution::uniform(2), 100, 1e-12).unwrap();
        assert_eq!(out.policy.greedy_actions(), vec![1, 1]);
        // reward 1 every step: V = 1 / (1 - 0.9)
        assert!((out.values[0] - 10.0).abs() < 1e-10);
        assert!((out.values[1] - 10.0).abs() < 1e-10);
    }

    #[test]
    fn iteration_cap_reports_max_iters() {
        let t = vec![vec![vec![1.0, 0.0], vec![0.0, 1.0]], vec![vec![1.0, 0.0], vec![0.0, 1.0]]];
        let r = vec![vec![0.0, 0.0], vec![0.0, 1.0]];
        let mdp = GroundMdp::from_nested(&t, &r, 0.9).unwrap();
        let out = policy_iteration(&mdp, &InitialDistribution::uniform(2), 0, 1e-12).unwrap();
        assert_eq!(out.status, RunStatus::MaxIters);
        assert_eq!(out.record.len(), 1);
    }
}
