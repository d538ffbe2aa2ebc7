use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::homomorphism::{
    lift_initial_distribution, span_condition_holds, transition_basis, EncodingMatrix, HomomorphicChain, Lift,
    SpanReport, DEFAULT_RANK_TOL,
};
use crate::mdp::{argmax_first, exact_value, GroundMdp, InitialDistribution, PolicyMatrix};
use crate::record::{RunRecord, RunRow, RunStatus, Stopwatch};
use crate::solvers::config::{Improvement, SolverConfig};
use crate::solvers::gradient::{abstract_q, value_gradient_from_chain};
use crate::solvers::params::PolicyParams;

/// Gradient-mode runs stop once `||dJ_U/dtheta||` falls to this.
pub const GRAD_NORM_STOP: f64 = 1e-8;

#[derive(Debug, Clone)]
pub struct HpgOutcome {
    pub params: PolicyParams,
    pub policy: PolicyMatrix,
    pub record: RunRecord,
    pub status: RunStatus,
    pub span: SpanReport,
    pub lift: Lift,
    pub iterations: usize,
}

/// Policy optimization on the abstract chain of a fixed encoding.
///
/// Every iteration builds `C = P^pi N^+` and solves the `|U|`-sized system
/// for `V_U`; the ground value is only computed on logged iterations. The
/// span certificate is computed once up front and recorded, the run goes
/// ahead regardless.
pub fn hpg_run(
    mdp: &GroundMdp,
    enc: &EncodingMatrix,
    xi_s: &InitialDistribution,
    config: &SolverConfig,
) -> Result<HpgOutcome> {
    config.validate()?;
    if xi_s.len() != mdp.n_states() {
        return Err(Error::Dimension("initial distribution does not match the MDP".into()));
    }
    let clock = Stopwatch::start();
    let basis = transition_basis(mdp, DEFAULT_RANK_TOL)?;
    let span = span_condition_holds(enc, &basis, basis.tolerance)?;
    let lift = lift_initial_distribution(xi_s, enc, None)?;
    let xi_u = lift.xi_u.as_vector().clone();

    let mut params = PolicyParams::zeros(mdp.n_states(), mdp.n_actions());
    let mut record = RunRecord::new();
    let mut status = RunStatus::MaxIters;
    let mut actions: Option<Vec<usize>> = None;
    let mut iterations = 0;

    for it in 0..=config.max_iters {
        iterations = it;
        let policy = match &actions {
            Some(a) => PolicyMatrix::deterministic(a, mdp.n_actions())?,
            None => params.policy()?,
        };
        let chain = match HomomorphicChain::build(mdp, &policy, enc) {
            Ok(c) => c,
            Err(e) => {
                status = RunStatus::Diverged(e.to_string());
                break;
            }
        };
        let j_u = chain.performance(&xi_u)?;
        if !j_u.is_finite() {
            status = RunStatus::Diverged(format!("J_U = {j_u}"));
            break;
        }

        let (grad_norm, next) = match config.improvement {
            Improvement::Gradient => {
                let grad = value_gradient_from_chain(mdp, &policy, enc, &chain, &xi_u);
                let norm = grad.norm();
                (norm, Step::Gradient(grad))
            }
            Improvement::Greedy => {
                let q = abstract_q(mdp, enc, &chain);
                let tol = 1e-12 * q.amax().max(1.0);
                let current = actions.clone();
                let proposed: Vec<usize> = (0..mdp.n_states())
                    .map(|s| {
                        let row = q.row(s);
                        let best = argmax_first(row.iter().copied(), 0.0);
                        match &current {
                            Some(c) if row[best] <= row[c[s]] + tol => c[s],
                            _ => best,
                        }
                    })
                    .collect();
                let changed = current.as_ref() != Some(&proposed);
                (0.0, Step::Greedy(proposed, changed))
            }
        };

        let stop = match &next {
            Step::Gradient(_) => grad_norm <= GRAD_NORM_STOP,
            Step::Greedy(_, changed) => !changed,
        };
        if stop {
            status = RunStatus::Converged;
        }
        let last = stop || it == config.max_iters;
        if it % config.ground_eval_every == 0 || last {
            let j_s = xi_s.as_vector().dot(&exact_value(chain.ground())?.0);
            let bound = chain.error_term(enc).bound;
            record.push(RunRow {
                iter: it,
                wall_clock_s: clock.elapsed_s(),
                j_s,
                j_u,
                lower_bound: j_u - bound,
                grad_norm_theta: grad_norm,
                grad_norm_omega: 0.0,
                span_residual: span.max_residual,
            });
        }
        if last {
            break;
        }
        match next {
            Step::Gradient(grad) => params.theta += grad * config.learning_rate,
            Step::Greedy(a, _) => actions = Some(a),
        }
    }

    let policy = match &actions {
        Some(a) => PolicyMatrix::deterministic(a, mdp.n_actions())?,
        None => params.policy()?,
    };
    if actions.is_some() {
        params = PolicyParams::from_policy(&policy);
    }
    Ok(HpgOutcome { params, policy, record, status, span, lift, iterations })
}

enum Step {
    Gradient(DMatrix<f64>),
    Greedy(Vec<usize>, bool),
}
