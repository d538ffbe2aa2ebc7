//! Exact gradients of the abstract performance `J_U = xi_U^T V_U` and of the
//! lower-bound objective `F = J_U - ||g|| / (1 - gamma)`.
//!
//! Everything is written with `N = P_nu`, `N^+` its right pseudoinverse,
//! `Pi = N^+ N`, `C = P N^+`, `M = I - gamma N C` and the occupancy
//! `eta = M^{-1}`. The abstract distribution `xi_U` is treated as a constant.
//!
//! Two identities carry the derivation: `V_U = N V_hat` with
//! `V_hat = R + gamma C V_U`, and `(I - gamma P Pi)^{-1} = I + gamma C eta N`.
//! For a change `dX` in `R + gamma P Pi V_hat` the abstract value moves by
//! `eta N dX`, which gives the closed forms below.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::homomorphism::{EncodingMatrix, ErrorTerm, HomomorphicChain};
use crate::mdp::{GroundMdp, PolicyMatrix};
use crate::solvers::params::{softmax_backward, EncodingParams, PolicyParams};

/// Below this `||g||` the penalty gradient is taken to be zero.
pub const PENALTY_GRAD_CUTOFF: f64 = 1e-12;

/// Composite quantities shared by the gradient formulas.
#[derive(Debug, Clone)]
pub struct GradientWorkspace {
    /// `eta = (I - gamma P_U)^{-1}`, `|U| x |U|`.
    pub occupancy: DMatrix<f64>,
    /// `P_1(u'|s,a) = sum_s' P_SA(s'|s,a) N^+(s',u')`, rows indexed `s * |A| + a`.
    pub p1: DMatrix<f64>,
}

impl GradientWorkspace {
    pub fn new(mdp: &GroundMdp, enc: &EncodingMatrix, chain: &HomomorphicChain) -> Self {
        Self { occupancy: chain.occupancy().clone(), p1: mdp.stacked_transitions() * enc.pinv() }
    }

    /// The second composite kernel uses the same pseudoinverse weights as
    /// the first, so it is the same matrix.
    pub fn p2(&self) -> &DMatrix<f64> {
        &self.p1
    }
}

/// `[alpha_{s,a} . v]` for every pair, rows `s * |A| + a`.
fn stacked_dot(mdp: &GroundMdp, v: &DVector<f64>) -> DVector<f64> {
    let n_s = mdp.n_states();
    DVector::from_iterator(
        n_s * mdp.n_actions(),
        mdp.transitions().chunks_exact(n_s).map(|row| row.iter().zip(v.iter()).map(|(p, x)| p * x).sum()),
    )
}

fn check_xi(xi_u: &DVector<f64>, enc: &EncodingMatrix) -> Result<()> {
    if xi_u.len() != enc.n_abstract() {
        return Err(Error::Dimension(format!(
            "abstract distribution has length {}, encoding has {} rows",
            xi_u.len(),
            enc.n_abstract()
        )));
    }
    Ok(())
}

/// `dV_U / dtheta` for every abstract state, plus `dJ_U / dtheta`.
#[derive(Debug, Clone)]
pub struct ValueGradient {
    /// `per_state[u][(s, a)] = dV_U(u) / dtheta(s, a)`.
    pub per_state: Vec<DMatrix<f64>>,
    pub objective: DMatrix<f64>,
    pub j_u: f64,
}

/// Gradient of `V_U` through the policy logits.
///
/// `dV_U(u)/dpi(a|s) = (eta N)[u, s] * Q_U(s, a)` with
/// `Q_U(s, a) = r(s, a) + gamma alpha_{s,a} . N^+ V_U`.
pub fn grad_value_theta(
    mdp: &GroundMdp,
    theta: &PolicyParams,
    enc: &EncodingMatrix,
    xi_u: &DVector<f64>,
) -> Result<ValueGradient> {
    check_xi(xi_u, enc)?;
    let policy = theta.policy()?;
    let chain = HomomorphicChain::build(mdp, &policy, enc)?;
    let advantage = softmax_backward(policy.probs(), &abstract_q(mdp, enc, &chain));
    // kappa[s, u] = (eta N)[u, s]
    let kappa = enc.matrix().tr_mul(&chain.occupancy().transpose());
    let per_state = (0..enc.n_abstract()).map(|u| scale_rows(&advantage, kappa.column(u).iter())).collect();
    let objective = scale_rows(&advantage, (&kappa * xi_u).iter());
    Ok(ValueGradient { per_state, objective, j_u: chain.performance(xi_u)? })
}

/// `dJ_U / dtheta` from an already evaluated chain.
pub fn value_gradient_from_chain(
    mdp: &GroundMdp,
    policy: &PolicyMatrix,
    enc: &EncodingMatrix,
    chain: &HomomorphicChain,
    xi_u: &DVector<f64>,
) -> DMatrix<f64> {
    let advantage = softmax_backward(policy.probs(), &abstract_q(mdp, enc, chain));
    let weights = enc.matrix().tr_mul(&chain.occupancy().tr_mul(xi_u));
    scale_rows(&advantage, weights.iter())
}

fn scale_rows<'a>(m: &DMatrix<f64>, factors: impl Iterator<Item = &'a f64>) -> DMatrix<f64> {
    let mut out = m.clone();
    for (mut row, &f) in out.row_iter_mut().zip(factors) {
        row *= f;
    }
    out
}

/// `Q_U(s, a) = r(s, a) + gamma alpha_{s,a} . N^+ V_U`, an `|S| x |A|` matrix.
pub fn abstract_q(mdp: &GroundMdp, enc: &EncodingMatrix, chain: &HomomorphicChain) -> DMatrix<f64> {
    let lifted = enc.pinv() * &chain.abstract_values().0;
    let next = stacked_dot(mdp, &lifted);
    let gamma = mdp.discount();
    DMatrix::from_fn(mdp.n_states(), mdp.n_actions(), |s, a| mdp.reward(s, a) + gamma * next[s * mdp.n_actions() + a])
}

/// Value and gradients of `F = J_U - ||g|| / (1 - gamma)`.
#[derive(Debug, Clone)]
pub struct ObjectiveGradient {
    pub value: f64,
    pub j_u: f64,
    pub error: ErrorTerm,
    /// `dF / dtheta`, `|S| x |A|`, when requested.
    pub theta: Option<DMatrix<f64>>,
    /// `dF / domega`, `|U| x |S|`, when requested.
    pub omega: Option<DMatrix<f64>>,
}

/// Gradient of the lower-bound objective with respect to the policy logits.
pub fn grad_objective_theta(
    mdp: &GroundMdp,
    theta: &PolicyParams,
    enc: &EncodingMatrix,
    xi_u: &DVector<f64>,
) -> Result<ObjectiveGradient> {
    let policy = theta.policy()?;
    objective_gradients(mdp, &policy, enc, xi_u, true, false)
}

/// Gradient of the lower-bound objective with respect to the encoding logits.
pub fn grad_objective_omega(
    mdp: &GroundMdp,
    policy: &PolicyMatrix,
    omega: &EncodingParams,
    xi_u: &DVector<f64>,
) -> Result<ObjectiveGradient> {
    let enc = omega.encoding()?;
    objective_gradients(mdp, policy, &enc, xi_u, false, true)
}

/// Shared evaluation of `F` and, on request, its logit gradients. The
/// encoding gradient assumes `enc` is a row softmax of some logits.
pub fn objective_gradients(
    mdp: &GroundMdp,
    policy: &PolicyMatrix,
    enc: &EncodingMatrix,
    xi_u: &DVector<f64>,
    want_theta: bool,
    want_omega: bool,
) -> Result<ObjectiveGradient> {
    check_xi(xi_u, enc)?;
    let chain = HomomorphicChain::build(mdp, policy, enc)?;
    let error = chain.error_term(enc);
    let j_u = chain.performance(xi_u)?;
    let gamma = mdp.discount();
    let c = 1.0 / (1.0 - gamma);
    let value = j_u - error.bound;
    if !(want_theta || want_omega) {
        return Ok(ObjectiveGradient { value, j_u, error, theta: None, omega: None });
    }

    let n = enc.matrix();
    let pinv = enc.pinv();
    let p = chain.ground().transition();
    let eta = chain.occupancy();
    let v_hat = &chain.encoding_values().0;
    let v_u = &chain.abstract_values().0;

    let g_hat = if error.norm > PENALTY_GRAD_CUTOFF { &error.g / error.norm } else { DVector::zeros(error.g.len()) };
    let ntg = n.tr_mul(&g_hat);
    let projected_v = pinv * v_u;
    let e0 = v_hat - &projected_v;
    let complement = |x: &DVector<f64>| x - pinv * (n * x);

    // mu = N^T xi_U - c (I - Pi) P^T N^T g_hat
    let mu = n.tr_mul(xi_u) - complement(&p.tr_mul(&ntg)) * c;
    // kappa = (I + gamma C eta N)^T mu
    let kappa = &mu + n.tr_mul(&eta.tr_mul(&chain.c_pi().tr_mul(&mu))) * gamma;

    let theta = want_theta.then(|| {
        let along_projected = stacked_dot(mdp, &projected_v);
        let along_e0 = stacked_dot(mdp, &e0);
        let n_a = mdp.n_actions();
        let d_pi = DMatrix::from_fn(mdp.n_states(), n_a, |s, a| {
            let i = s * n_a + a;
            kappa[s] * (mdp.reward(s, a) + gamma * along_projected[i]) - c * ntg[s] * along_e0[i]
        });
        softmax_backward(policy.probs(), &d_pi)
    });

    let omega = want_omega.then(|| {
        let gram_inv = pinv.tr_mul(pinv);
        let rho = p.tr_mul(&kappa) * gamma + p.tr_mul(&ntg) * c;
        let p_e0 = p * &e0;
        let d_n = xi_u * v_hat.transpose() - (&g_hat * p_e0.transpose()) * c
            + (&gram_inv * v_u) * complement(&rho).transpose()
            + (&gram_inv * (n * &rho)) * e0.transpose();
        softmax_backward(n, &d_n)
    });

    Ok(ObjectiveGradient { value, j_u, error, theta, omega })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_action_has_zero_gradient() {
        let mdp = GroundMdp::new(1, 1, vec![1.0], vec![1.0], 0.9).unwrap();
        let g = grad_value_theta(
            &mdp,
            &PolicyParams::zeros(1, 1),
            &EncodingMatrix::identity(1),
            &DVector::from_element(1, 1.0),
        )
        .unwrap();
        assert_eq!(g.objective[(0, 0)], 0.0);
        assert_eq!(g.per_state[0][(0, 0)], 0.0);
    }

    #[test]
    fn zero_discount_keeps_only_reward_term() {
        let t = vec![vec![vec![0.5, 0.5], vec![1.0, 0.0]], vec![vec![0.0, 1.0], vec![0.3, 0.7]]];
        let r = vec![vec![1.0, 3.0], vec![-1.0, 2.0]];
        let mdp = GroundMdp::from_nested(&t, &r, 0.0).unwrap();
        let enc = EncodingMatrix::from_rows(&[vec![0.25, 0.75]]).unwrap();
        let g = grad_value_theta(&mdp, &PolicyParams::zeros(2, 2), &enc, &DVector::from_element(1, 1.0)).unwrap();
        // V_U = N R^pi, and dR^pi(s)/dtheta(s,a) = pi (r(s,a) - R^pi(s)) = 0.5 (r(s,a) - mean)
        let expected = DMatrix::from_row_slice(2, 2, &[0.25 * -0.5, 0.25 * 0.5, 0.75 * -0.75, 0.75 * 0.75]);
        assert!((&g.per_state[0] - expected).amax() < 1e-15);
    }
}
