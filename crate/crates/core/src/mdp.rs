//! Tabular MDPs, the Markov chains a policy induces on them, and exact
//! evaluation of values, Q-values and the performance functional.

use std::ops::Deref;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Row sums of stochastic objects must be within this of 1 (plus `n * eps`
/// for accumulated rounding on long rows).
pub const STOCHASTIC_TOL: f64 = 1e-12;

pub(crate) fn stochastic_tol(n: usize) -> f64 {
    STOCHASTIC_TOL + n as f64 * f64::EPSILON
}

fn check_distribution(row: &[f64], what: impl Fn() -> String) -> Result<()> {
    let mut sum = 0.0;
    for &p in row {
        if !p.is_finite() || p < 0.0 {
            return Err(Error::InvalidModel(format!("{}: entry {p} is not a probability", what())));
        }
        sum += p;
    }
    if (sum - 1.0).abs() > stochastic_tol(row.len()) {
        return Err(Error::InvalidModel(format!("{}: sums to {sum}", what())));
    }
    Ok(())
}

fn check_discount(discount: f64) -> Result<()> {
    if !(0.0..1.0).contains(&discount) {
        return Err(Error::InvalidModel(format!("discount {discount} outside [0, 1)")));
    }
    Ok(())
}

/// A finite MDP `(S, A, P_SA, gamma, r)` with dense storage.
///
/// Transitions are stored row-major as `[s][a][s']`, rewards as `[s][a]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "MdpFile", into = "MdpFile")]
pub struct GroundMdp {
    n_states: usize,
    n_actions: usize,
    transitions: Vec<f64>,
    rewards: Vec<f64>,
    discount: f64,
}

impl GroundMdp {
    pub fn new(
        n_states: usize,
        n_actions: usize,
        transitions: Vec<f64>,
        rewards: Vec<f64>,
        discount: f64,
    ) -> Result<Self> {
        if n_states == 0 || n_actions == 0 {
            return Err(Error::InvalidModel("need at least one state and one action".into()));
        }
        if transitions.len() != n_states * n_actions * n_states {
            return Err(Error::Dimension(format!(
                "transition tensor has {} entries, expected {}",
                transitions.len(),
                n_states * n_actions * n_states
            )));
        }
        if rewards.len() != n_states * n_actions {
            return Err(Error::Dimension(format!(
                "reward table has {} entries, expected {}",
                rewards.len(),
                n_states * n_actions
            )));
        }
        check_discount(discount)?;
        for (i, row) in transitions.chunks_exact(n_states).enumerate() {
            check_distribution(row, || format!("P(.|s={}, a={})", i / n_actions, i % n_actions))?;
        }
        if let Some(r) = rewards.iter().find(|r| !r.is_finite()) {
            return Err(Error::InvalidModel(format!("reward {r} is not finite")));
        }
        Ok(Self { n_states, n_actions, transitions, rewards, discount })
    }

    /// Builds an MDP from nested `[s][a][s']` transitions and `[s][a]` rewards.
    pub fn from_nested(transitions: &[Vec<Vec<f64>>], rewards: &[Vec<f64>], discount: f64) -> Result<Self> {
        let n_states = transitions.len();
        let n_actions = transitions.first().map_or(0, |t| t.len());
        let mut flat = Vec::with_capacity(n_states * n_actions * n_states);
        for (s, per_action) in transitions.iter().enumerate() {
            if per_action.len() != n_actions {
                return Err(Error::Dimension(format!("state {s} has {} actions", per_action.len())));
            }
            for (a, row) in per_action.iter().enumerate() {
                if row.len() != n_states {
                    return Err(Error::Dimension(format!("row ({s}, {a}) has length {}", row.len())));
                }
                flat.extend_from_slice(row);
            }
        }
        if rewards.len() != n_states || rewards.iter().any(|r| r.len() != n_actions) {
            return Err(Error::Dimension("reward table shape does not match transitions".into()));
        }
        let rewards = rewards.iter().flatten().copied().collect();
        Self::new(n_states, n_actions, flat, rewards, discount)
    }

    pub fn n_states(&self) -> usize {
        self.n_states
    }

    pub fn n_actions(&self) -> usize {
        self.n_actions
    }

    pub fn discount(&self) -> f64 {
        self.discount
    }

    /// The elementary transition vector `P_SA(. | s, a)`.
    pub fn row(&self, s: usize, a: usize) -> &[f64] {
        let start = (s * self.n_actions + a) * self.n_states;
        &self.transitions[start..start + self.n_states]
    }

    pub fn reward(&self, s: usize, a: usize) -> f64 {
        self.rewards[s * self.n_actions + a]
    }

    /// Flat `[s][a][s']` view of the transition tensor.
    pub fn transitions(&self) -> &[f64] {
        &self.transitions
    }

    /// Flat `[s][a]` view of the reward table.
    pub fn rewards(&self) -> &[f64] {
        &self.rewards
    }

    /// All elementary transition vectors stacked into an `|S||A| x |S|` matrix,
    /// row `s * |A| + a`.
    pub fn stacked_transitions(&self) -> DMatrix<f64> {
        DMatrix::from_row_slice(self.n_states * self.n_actions, self.n_states, &self.transitions)
    }

    pub fn reward_matrix(&self) -> DMatrix<f64> {
        DMatrix::from_row_slice(self.n_states, self.n_actions, &self.rewards)
    }

    /// Same dynamics and rewards under a different discount.
    pub fn with_discount(&self, discount: f64) -> Result<Self> {
        check_discount(discount)?;
        Ok(Self { discount, ..self.clone() })
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string(self)?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        Ok(serde_json::from_str(s)?)
    }
}

/// On-disk MDP layout. Field names are a stable contract.
#[derive(Serialize, Deserialize)]
struct MdpFile {
    n_states: usize,
    n_actions: usize,
    gamma: f64,
    transitions: Vec<Vec<Vec<f64>>>,
    rewards: Vec<Vec<f64>>,
}

impl TryFrom<MdpFile> for GroundMdp {
    type Error = Error;

    fn try_from(f: MdpFile) -> Result<Self> {
        let mdp = GroundMdp::from_nested(&f.transitions, &f.rewards, f.gamma)?;
        if mdp.n_states != f.n_states || mdp.n_actions != f.n_actions {
            return Err(Error::Dimension(format!(
                "declared {}x{} but tables are {}x{}",
                f.n_states, f.n_actions, mdp.n_states, mdp.n_actions
            )));
        }
        Ok(mdp)
    }
}

impl From<GroundMdp> for MdpFile {
    fn from(m: GroundMdp) -> Self {
        let transitions = m
            .transitions
            .chunks_exact(m.n_states * m.n_actions)
            .map(|per_state| per_state.chunks_exact(m.n_states).map(<[f64]>::to_vec).collect())
            .collect();
        let rewards = m.rewards.chunks_exact(m.n_actions).map(<[f64]>::to_vec).collect();
        MdpFile { n_states: m.n_states, n_actions: m.n_actions, gamma: m.discount, transitions, rewards }
    }
}

/// A stochastic policy `pi(a | s)` stored as an `|S| x |A|` matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct PolicyMatrix {
    probs: DMatrix<f64>,
}

impl PolicyMatrix {
    pub fn new(probs: DMatrix<f64>) -> Result<Self> {
        if probs.nrows() == 0 || probs.ncols() == 0 {
            return Err(Error::Dimension("empty policy".into()));
        }
        for s in 0..probs.nrows() {
            let row: Vec<f64> = probs.row(s).iter().copied().collect();
            check_distribution(&row, || format!("pi(.|s={s})"))?;
        }
        Ok(Self { probs })
    }

    pub fn uniform(n_states: usize, n_actions: usize) -> Self {
        Self { probs: DMatrix::from_element(n_states, n_actions, 1.0 / n_actions as f64) }
    }

    /// One-hot policy choosing `actions[s]` in state `s`.
    pub fn deterministic(actions: &[usize], n_actions: usize) -> Result<Self> {
        let mut probs = DMatrix::zeros(actions.len(), n_actions);
        for (s, &a) in actions.iter().enumerate() {
            if a >= n_actions {
                return Err(Error::Dimension(format!("action {a} out of range in state {s}")));
            }
            probs[(s, a)] = 1.0;
        }
        Self::new(probs)
    }

    pub fn n_states(&self) -> usize {
        self.probs.nrows()
    }

    pub fn n_actions(&self) -> usize {
        self.probs.ncols()
    }

    pub fn prob(&self, s: usize, a: usize) -> f64 {
        self.probs[(s, a)]
    }

    pub fn probs(&self) -> &DMatrix<f64> {
        &self.probs
    }

    /// Most probable action per state, lowest index on ties.
    pub fn greedy_actions(&self) -> Vec<usize> {
        (0..self.n_states()).map(|s| argmax_first(self.probs.row(s).iter().copied(), 0.0)).collect()
    }

    /// Convex combination `lambda * self + (1 - lambda) * other`.
    pub fn mix(&self, other: &Self, lambda: f64) -> Result<Self> {
        if self.probs.shape() != other.probs.shape() {
            return Err(Error::Dimension("policy shapes differ".into()));
        }
        Self::new(&self.probs * lambda + &other.probs * (1.0 - lambda))
    }
}

/// Index of the first element within `tol` of the maximum.
pub(crate) fn argmax_first(values: impl Iterator<Item = f64> + Clone, tol: f64) -> usize {
    let max = values.clone().fold(f64::NEG_INFINITY, f64::max);
    values.into_iter().position(|v| v >= max - tol).unwrap_or(0)
}

/// A discounted Markov reward process `(P, R, gamma)`.
///
/// Chains built with [`MarkovChain::new`] are validated to be row-stochastic.
/// Abstract chains produced by a coarse encoding are general linear operators
/// and are built with [`MarkovChain::from_operator`].
#[derive(Debug, Clone, PartialEq)]
pub struct MarkovChain {
    transition: DMatrix<f64>,
    reward: DVector<f64>,
    discount: f64,
}

impl MarkovChain {
    pub fn new(transition: DMatrix<f64>, reward: DVector<f64>, discount: f64) -> Result<Self> {
        let chain = Self::from_operator(transition, reward, discount)?;
        for s in 0..chain.transition.nrows() {
            let row: Vec<f64> = chain.transition.row(s).iter().copied().collect();
            check_distribution(&row, || format!("chain row {s}"))?;
        }
        Ok(chain)
    }

    /// Builds a chain without requiring `transition` to be stochastic.
    pub fn from_operator(transition: DMatrix<f64>, reward: DVector<f64>, discount: f64) -> Result<Self> {
        if !transition.is_square() || transition.nrows() != reward.len() {
            return Err(Error::Dimension(format!(
                "transition {:?} and reward length {}",
                transition.shape(),
                reward.len()
            )));
        }
        check_discount(discount)?;
        if transition.iter().chain(reward.iter()).any(|x| !x.is_finite()) {
            return Err(Error::Numeric("chain has non-finite entries".into()));
        }
        Ok(Self { transition, reward, discount })
    }

    pub fn n_states(&self) -> usize {
        self.reward.len()
    }

    pub fn transition(&self) -> &DMatrix<f64> {
        &self.transition
    }

    pub fn reward(&self) -> &DVector<f64> {
        &self.reward
    }

    pub fn discount(&self) -> f64 {
        self.discount
    }

    /// Largest `|row sum - 1|`.
    pub fn row_sum_drift(&self) -> f64 {
        self.transition.row_iter().map(|r| (r.sum() - 1.0).abs()).fold(0.0, f64::max)
    }

    pub fn min_entry(&self) -> f64 {
        self.transition.min()
    }

    /// `max_s |V(s) - (R + gamma P V)(s)|`.
    pub fn bellman_residual(&self, v: &ValueVector) -> f64 {
        let backed = &self.reward + &self.transition * &v.0 * self.discount;
        (backed - &v.0).amax()
    }
}

/// State values `V(s)` of some chain.
#[derive(Debug, Clone, PartialEq)]
pub struct ValueVector(pub DVector<f64>);

impl Deref for ValueVector {
    type Target = DVector<f64>;

    fn deref(&self) -> &DVector<f64> {
        &self.0
    }
}

impl From<DVector<f64>> for ValueVector {
    fn from(v: DVector<f64>) -> Self {
        Self(v)
    }
}

/// A probability vector over (ground or abstract) states.
#[derive(Debug, Clone, PartialEq)]
pub struct InitialDistribution(DVector<f64>);

impl InitialDistribution {
    pub fn new(xi: DVector<f64>) -> Result<Self> {
        if xi.is_empty() {
            return Err(Error::Dimension("empty distribution".into()));
        }
        check_distribution(xi.as_slice(), || "initial distribution".to_string())?;
        Ok(Self(xi))
    }

    pub fn uniform(n: usize) -> Self {
        Self(DVector::from_element(n, 1.0 / n as f64))
    }

    pub fn point(n: usize, i: usize) -> Self {
        let mut xi = DVector::zeros(n);
        xi[i] = 1.0;
        Self(xi)
    }

    pub(crate) fn from_vec_unchecked(xi: DVector<f64>) -> Self {
        Self(xi)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn as_vector(&self) -> &DVector<f64> {
        &self.0
    }
}

/// Dense `P^pi` and `R^pi` for a policy, without validation.
pub(crate) fn policy_kernel(mdp: &GroundMdp, policy: &DMatrix<f64>) -> (DMatrix<f64>, DVector<f64>) {
    let n = mdp.n_states();
    let mut transition = DMatrix::zeros(n, n);
    let mut reward = DVector::zeros(n);
    let mut row_buf = vec![0.0; n];
    for s in 0..n {
        row_buf.iter_mut().for_each(|x| *x = 0.0);
        let mut r = 0.0;
        for a in 0..mdp.n_actions() {
            let p = policy[(s, a)];
            if p == 0.0 {
                continue;
            }
            r += p * mdp.reward(s, a);
            for (acc, &q) in row_buf.iter_mut().zip(mdp.row(s, a)) {
                *acc += p * q;
            }
        }
        reward[s] = r;
        for (j, &x) in row_buf.iter().enumerate() {
            transition[(s, j)] = x;
        }
    }
    (transition, reward)
}

/// `P^pi(s'|s) = sum_a pi(a|s) P_SA(s'|s,a)` and `R^pi(s) = sum_a pi(a|s) r(s,a)`.
pub fn induce_chain(mdp: &GroundMdp, policy: &PolicyMatrix) -> Result<MarkovChain> {
    if policy.n_states() != mdp.n_states() || policy.n_actions() != mdp.n_actions() {
        return Err(Error::Dimension(format!(
            "policy is {}x{}, MDP is {}x{}",
            policy.n_states(),
            policy.n_actions(),
            mdp.n_states(),
            mdp.n_actions()
        )));
    }
    let (transition, reward) = policy_kernel(mdp, policy.probs());
    Ok(MarkovChain { transition, reward, discount: mdp.discount() })
}

/// Solves `(I - gamma P) V = R` by LU factorization.
pub fn exact_value(chain: &MarkovChain) -> Result<ValueVector> {
    let n = chain.n_states();
    let system = DMatrix::identity(n, n) - &chain.transition * chain.discount;
    let v = system.lu().solve(&chain.reward).ok_or_else(|| Error::Numeric("I - gamma P is singular".into()))?;
    if v.iter().any(|x| !x.is_finite()) {
        return Err(Error::Numeric("value solve produced non-finite entries".into()));
    }
    Ok(ValueVector(v))
}

/// `Q(s,a) = r(s,a) + gamma sum_s' P_SA(s'|s,a) V(s')`, as an `|S| x |A|` matrix.
pub fn q_values(mdp: &GroundMdp, v: &ValueVector) -> Result<DMatrix<f64>> {
    if v.len() != mdp.n_states() {
        return Err(Error::Dimension(format!("value has length {}, MDP has {} states", v.len(), mdp.n_states())));
    }
    let gamma = mdp.discount();
    Ok(DMatrix::from_fn(mdp.n_states(), mdp.n_actions(), |s, a| {
        let next: f64 = mdp.row(s, a).iter().zip(v.iter()).map(|(p, x)| p * x).sum();
        mdp.reward(s, a) + gamma * next
    }))
}

/// `J = xi^T V`.
pub fn performance(xi: &InitialDistribution, v: &ValueVector) -> Result<f64> {
    if xi.len() != v.len() {
        return Err(Error::Dimension(format!("distribution has length {}, value {}", xi.len(), v.len())));
    }
    Ok(xi.0.dot(&v.0))
}
