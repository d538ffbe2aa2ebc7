use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::homomorphism::encoding::EncodingMatrix;
use crate::homomorphism::lift::{lift_initial_distribution, Lift};
use crate::mdp::{policy_kernel, GroundMdp, InitialDistribution, MarkovChain, PolicyMatrix, ValueVector};

/// The abstract chain `(P_nu C, P_nu R, gamma)` with `C = P^pi P_nu^dagger`,
/// evaluated once at construction.
#[derive(Debug, Clone)]
pub struct HomomorphicChain {
    c_pi: DMatrix<f64>,
    ground: MarkovChain,
    abstract_chain: MarkovChain,
    occupancy: DMatrix<f64>,
    abstract_values: ValueVector,
    encoding_values: ValueVector,
}

impl HomomorphicChain {
    pub fn build(mdp: &GroundMdp, policy: &PolicyMatrix, enc: &EncodingMatrix) -> Result<Self> {
        if policy.n_states() != mdp.n_states() || policy.n_actions() != mdp.n_actions() {
            return Err(Error::Dimension("policy does not match the MDP".into()));
        }
        if enc.n_states() != mdp.n_states() {
            return Err(Error::Dimension(format!(
                "encoding covers {} states, MDP has {}",
                enc.n_states(),
                mdp.n_states()
            )));
        }
        let (p, r) = policy_kernel(mdp, policy.probs());
        Self::from_kernel(p, r, mdp.discount(), enc)
    }

    pub(crate) fn from_kernel(p: DMatrix<f64>, r: DVector<f64>, gamma: f64, enc: &EncodingMatrix) -> Result<Self> {
        let n_u = enc.n_abstract();
        let c_pi = &p * enc.pinv();
        let p_u = enc.matrix() * &c_pi;
        let r_u = enc.matrix() * &r;
        let system = DMatrix::identity(n_u, n_u) - &p_u * gamma;
        let occupancy = system
            .clone()
            .try_inverse()
            .ok_or_else(|| Error::Numeric(format!("I - gamma P_U is singular (min entry of P_U {:.3e})", p_u.min())))?;
        if occupancy.iter().any(|x| !x.is_finite()) {
            return Err(Error::Numeric("abstract resolvent is not finite".into()));
        }
        // one refinement step keeps V_U accurate when the resolvent is poorly conditioned
        let mut v_u = &occupancy * &r_u;
        let defect = &r_u - &system * &v_u;
        v_u += &occupancy * defect;
        let v_hat = &r + &c_pi * &v_u * gamma;
        Ok(Self {
            c_pi,
            ground: MarkovChain::from_operator(p, r, gamma)?,
            abstract_chain: MarkovChain::from_operator(p_u, r_u, gamma)?,
            occupancy,
            abstract_values: ValueVector(v_u),
            encoding_values: ValueVector(v_hat),
        })
    }

    /// `C^pi = P^pi P_nu^dagger`, `|S| x |U|`.
    pub fn c_pi(&self) -> &DMatrix<f64> {
        &self.c_pi
    }

    /// The ground chain `(P^pi, R^pi)` the abstraction was built from.
    pub fn ground(&self) -> &MarkovChain {
        &self.ground
    }

    /// `(P_U, R_U)`. When the span condition fails `P_U` need not be stochastic.
    pub fn abstract_chain(&self) -> &MarkovChain {
        &self.abstract_chain
    }

    /// Discounted visit measure `(I - gamma P_U)^{-1}`.
    pub fn occupancy(&self) -> &DMatrix<f64> {
        &self.occupancy
    }

    /// `V_U = (I - gamma P_U)^{-1} R_U`.
    pub fn abstract_values(&self) -> &ValueVector {
        &self.abstract_values
    }

    /// Value of the encoding chain, `V_hat = R + gamma C V_U`.
    pub fn encoding_values(&self) -> &ValueVector {
        &self.encoding_values
    }

    /// Ground-size chain `(C^pi P_nu, R^pi, gamma)`. Built on demand since it
    /// is `|S| x |S|`.
    pub fn encoding_chain(&self, enc: &EncodingMatrix) -> Result<MarkovChain> {
        MarkovChain::from_operator(&self.c_pi * enc.matrix(), self.ground.reward().clone(), self.ground.discount())
    }

    pub fn diagnostics(&self) -> ChainDiagnostics {
        ChainDiagnostics {
            min_entry: self.abstract_chain.min_entry(),
            row_sum_drift: self.abstract_chain.row_sum_drift(),
            resolvent_norm: self.occupancy.amax(),
        }
    }

    /// `g = P_nu P^pi V_hat - P_U V_U`.
    pub fn error_term(&self, enc: &EncodingMatrix) -> ErrorTerm {
        let pv = self.ground.transition() * &self.encoding_values.0;
        let g = enc.matrix() * pv - self.abstract_chain.transition() * &self.abstract_values.0;
        ErrorTerm::new(g, self.ground.discount())
    }

    pub fn performance(&self, xi_u: &DVector<f64>) -> Result<f64> {
        if xi_u.len() != self.abstract_values.len() {
            return Err(Error::Dimension(format!(
                "abstract distribution has length {}, chain has {} states",
                xi_u.len(),
                self.abstract_values.len()
            )));
        }
        Ok(xi_u.dot(&self.abstract_values.0))
    }
}

/// Conditioning report for an abstract chain.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChainDiagnostics {
    pub min_entry: f64,
    pub row_sum_drift: f64,
    /// Largest absolute entry of `(I - gamma P_U)^{-1}`.
    pub resolvent_norm: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ErrorTerm {
    pub g: DVector<f64>,
    pub norm: f64,
    /// `||g|| / (1 - gamma)`
    pub bound: f64,
}

impl ErrorTerm {
    fn new(g: DVector<f64>, gamma: f64) -> Self {
        let norm = g.norm();
        Self { g, norm, bound: norm / (1.0 - gamma) }
    }
}

pub fn build_homomorphic_chain(
    mdp: &GroundMdp,
    policy: &PolicyMatrix,
    enc: &EncodingMatrix,
) -> Result<HomomorphicChain> {
    HomomorphicChain::build(mdp, policy, enc)
}

pub fn error_term(mdp: &GroundMdp, policy: &PolicyMatrix, enc: &EncodingMatrix) -> Result<ErrorTerm> {
    Ok(HomomorphicChain::build(mdp, policy, enc)?.error_term(enc))
}

#[derive(Debug, Clone, PartialEq)]
pub struct LowerBound {
    /// `J_U - ||g|| / (1 - gamma)`
    pub value: f64,
    pub j_u: f64,
    pub lift: Lift,
    pub error: ErrorTerm,
}

/// Lower bound on `J_S(pi)`; exact only when the lift residual is zero.
pub fn performance_lower_bound(
    mdp: &GroundMdp,
    policy: &PolicyMatrix,
    enc: &EncodingMatrix,
    xi_s: &InitialDistribution,
) -> Result<LowerBound> {
    let chain = HomomorphicChain::build(mdp, policy, enc)?;
    let lift = lift_initial_distribution(xi_s, enc, None)?;
    let j_u = chain.performance(lift.xi_u.as_vector())?;
    let error = chain.error_term(enc);
    Ok(LowerBound { value: j_u - error.bound, j_u, lift, error })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mdp::{exact_value, induce_chain};

    fn small_mdp() -> GroundMdp {
        let t = vec![
            vec![vec![0.1, 0.6, 0.3], vec![0.5, 0.25, 0.25]],
            vec![vec![0.0, 0.2, 0.8], vec![0.3, 0.3, 0.4]],
            vec![vec![0.9, 0.05, 0.05], vec![0.2, 0.2, 0.6]],
        ];
        let r = vec![vec![1.0, 0.0], vec![0.5, 0.2], vec![0.0, 0.9]];
        GroundMdp::from_nested(&t, &r, 0.8).unwrap()
    }

    #[test]
    fn identity_encoding_reproduces_ground_chain() {
        let mdp = small_mdp();
        let policy = PolicyMatrix::uniform(3, 2);
        let chain = HomomorphicChain::build(&mdp, &policy, &EncodingMatrix::identity(3)).unwrap();
        let ground = induce_chain(&mdp, &policy).unwrap();
        assert!((chain.abstract_chain().transition() - ground.transition()).amax() < 1e-15);
        let v = exact_value(&ground).unwrap();
        assert!((&chain.abstract_values().0 - &v.0).amax() < 1e-12);
        assert!(chain.error_term(&EncodingMatrix::identity(3)).norm < 1e-12);
    }

    #[test]
    fn abstract_values_are_encoded_surrogate_values() {
        let mdp = small_mdp();
        let enc = EncodingMatrix::from_rows(&[vec![0.5, 0.5, 0.0], vec![0.0, 0.3, 0.7]]).unwrap();
        let chain = HomomorphicChain::build(&mdp, &PolicyMatrix::uniform(3, 2), &enc).unwrap();
        let surrogate = exact_value(&chain.encoding_chain(&enc).unwrap()).unwrap();
        assert!((&surrogate.0 - &chain.encoding_values().0).amax() < 1e-10);
        let projected = enc.matrix() * &surrogate.0;
        assert!((projected - &chain.abstract_values().0).amax() < 1e-10);
    }

    #[test]
    fn one_state_bound_is_tight() {
        let mdp = GroundMdp::new(1, 2, vec![1.0, 1.0], vec![0.3, 0.7], 0.5).unwrap();
        let policy = PolicyMatrix::uniform(1, 2);
        let lb = performance_lower_bound(&mdp, &policy, &EncodingMatrix::identity(1), &InitialDistribution::uniform(1))
            .unwrap();
        assert!((lb.value - 1.0).abs() < 1e-12);
        assert_eq!(lb.error.norm, 0.0);
    }
}
