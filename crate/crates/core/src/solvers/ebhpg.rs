use nalgebra::DVector;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};
use crate::homomorphism::{
    build_encoding_from_basis, lift_initial_distribution, transition_basis, EncodingMatrix, DEFAULT_RANK_TOL,
};
use crate::mdp::{exact_value, induce_chain, GroundMdp, InitialDistribution, PolicyMatrix};
use crate::record::{RunRecord, RunRow, RunStatus, Stopwatch};
use crate::solvers::config::SolverConfig;
use crate::solvers::gradient::objective_gradients;
use crate::solvers::params::{EncodingParams, PolicyParams};

/// Consecutive rank repairs tolerated within one iteration.
const MAX_REPAIRS: usize = 8;

#[derive(Debug, Clone)]
pub struct EbhpgOutcome {
    pub policy_params: PolicyParams,
    pub encoding_params: EncodingParams,
    pub record: RunRecord,
    pub status: RunStatus,
    pub iterations: usize,
    /// `(iteration, row)` of every encoding row redrawn after rank loss.
    pub reinitialized: Vec<(usize, usize)>,
}

impl EbhpgOutcome {
    pub fn policy(&self) -> Result<PolicyMatrix> {
        self.policy_params.policy()
    }
}

/// Joint ascent of policy and encoding logits on `J_U - ||g|| / (1 - gamma)`,
/// starting from the uniform policy and the basis-selected encoding with
/// `n_abstract` rows.
pub fn ebhpg_run(
    mdp: &GroundMdp,
    n_abstract: usize,
    xi_s: &InitialDistribution,
    config: &SolverConfig,
) -> Result<EbhpgOutcome> {
    let basis = transition_basis(mdp, DEFAULT_RANK_TOL)?;
    let enc = build_encoding_from_basis(&basis, n_abstract, config.seed)?;
    ebhpg_run_with_init(
        mdp,
        PolicyParams::zeros(mdp.n_states(), mdp.n_actions()),
        EncodingParams::from_encoding(&enc),
        xi_s,
        config,
    )
}

/// As [`ebhpg_run`] from explicit starting logits.
///
/// `xi_U` is re-fitted to the current encoding every iteration. The ground
/// value is computed every `ground_eval_every` iterations; the run stops when
/// two consecutive such values are within `epsilon` in Euclidean norm.
pub fn ebhpg_run_with_init(
    mdp: &GroundMdp,
    theta: PolicyParams,
    omega: EncodingParams,
    xi_s: &InitialDistribution,
    config: &SolverConfig,
) -> Result<EbhpgOutcome> {
    config.validate()?;
    if xi_s.len() != mdp.n_states() || omega.omega.ncols() != mdp.n_states() {
        return Err(Error::Dimension("initial distribution or encoding does not match the MDP".into()));
    }
    let clock = Stopwatch::start();
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut theta = theta;
    let mut omega = omega;
    let mut record = RunRecord::new();
    let mut status = RunStatus::MaxIters;
    let mut reinitialized = Vec::new();
    let mut xi_u: Option<DVector<f64>> = None;
    let mut previous_values: Option<DVector<f64>> = None;
    let mut iterations = 0;

    for it in 0..=config.max_iters {
        iterations = it;
        let enc = match repaired_encoding(&mut omega, &mut rng, it, &mut reinitialized) {
            Ok(e) => e,
            Err(e) => {
                status = RunStatus::Diverged(e.to_string());
                break;
            }
        };
        let lift = lift_initial_distribution(xi_s, &enc, xi_u.as_ref())?;
        let current_xi = lift.xi_u.as_vector().clone();
        let policy = theta.policy()?;
        let grads = match objective_gradients(mdp, &policy, &enc, &current_xi, true, true) {
            Ok(g) if g.value.is_finite() => g,
            Ok(g) => {
                status = RunStatus::Diverged(format!("objective is {}", g.value));
                break;
            }
            Err(e) => {
                status = RunStatus::Diverged(e.to_string());
                break;
            }
        };
        xi_u = Some(current_xi);
        let (Some(g_theta), Some(g_omega)) = (grads.theta, grads.omega) else {
            unreachable!("both gradients were requested")
        };

        let at_max = it == config.max_iters;
        if it % config.ground_eval_every == 0 || at_max {
            let values = exact_value(&induce_chain(mdp, &policy)?)?.0;
            let j_s = xi_s.as_vector().dot(&values);
            record.push(RunRow {
                iter: it,
                wall_clock_s: clock.elapsed_s(),
                j_s,
                j_u: grads.j_u,
                lower_bound: grads.value,
                grad_norm_theta: g_theta.norm(),
                grad_norm_omega: g_omega.norm(),
                span_residual: grads.error.norm,
            });
            let settled = previous_values.as_ref().is_some_and(|prev| (&values - prev).norm() <= config.epsilon);
            previous_values = Some(values);
            if settled {
                status = RunStatus::Converged;
                break;
            }
        }
        if at_max {
            break;
        }
        theta.theta += g_theta * config.learning_rate;
        omega.omega += g_omega * config.learning_rate;
    }

    Ok(EbhpgOutcome { policy_params: theta, encoding_params: omega, record, status, iterations, reinitialized })
}

/// Softmax encoding of `omega`, redrawing rows the rank check names until
/// the Gram matrix is well conditioned.
fn repaired_encoding(
    omega: &mut EncodingParams,
    rng: &mut ChaCha8Rng,
    iter: usize,
    log: &mut Vec<(usize, usize)>,
) -> Result<EncodingMatrix> {
    for _ in 0..MAX_REPAIRS {
        match omega.encoding() {
            Err(Error::RankDeficient { rows, .. }) => {
                for &u in &rows {
                    for x in omega.omega.row_mut(u).iter_mut() {
                        *x = StandardNormal.sample(rng);
                    }
                    log.push((iter, u));
                }
            }
            other => return other,
        }
    }
    omega.encoding()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn three_state() -> GroundMdp {
        let t = vec![
            vec![vec![0.8, 0.1, 0.1], vec![0.1, 0.8, 0.1]],
            vec![vec![0.1, 0.1, 0.8], vec![0.6, 0.2, 0.2]],
            vec![vec![0.3, 0.3, 0.4], vec![0.0, 0.5, 0.5]],
        ];
        let r = vec![vec![0.1, 0.9], vec![0.4, 0.2], vec![1.0, 0.0]];
        GroundMdp::from_nested(&t, &r, 0.9).unwrap()
    }

    #[test]
    fn large_epsilon_stops_after_first_interval() {
        let config = SolverConfig { epsilon: 10.0, max_iters: 100, ..SolverConfig::default() };
        let out = ebhpg_run(&three_state(), 3, &InitialDistribution::uniform(3), &config).unwrap();
        assert_eq!(out.status, RunStatus::Converged);
        assert_eq!(out.iterations, config.ground_eval_every);
        assert_eq!(out.record.len(), 2);
    }

    #[test]
    fn duplicate_rows_are_redrawn() {
        let mut omega = EncodingParams { omega: nalgebra::DMatrix::zeros(2, 3) };
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let mut log = Vec::new();
        let enc = repaired_encoding(&mut omega, &mut rng, 4, &mut log).unwrap();
        assert_eq!(enc.n_abstract(), 2);
        assert_eq!(log, vec![(4, 1)]);
    }
}
