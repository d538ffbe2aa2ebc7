use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::homomorphism::EncodingMatrix;
use crate::mdp::PolicyMatrix;

/// Floor applied before taking logs of probabilities.
pub const LOG_FLOOR: f64 = 1e-6;

/// Row-wise softmax. Rows are shifted by their maximum before exponentiating.
pub fn softmax_rows(logits: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    if let Some(bad) = logits.iter().find(|x| !x.is_finite()) {
        return Err(Error::InvalidParameter(format!("logit {bad} is not finite")));
    }
    let mut out = logits.clone();
    for mut row in out.row_iter_mut() {
        let max = row.max();
        row.apply(|x| *x = (*x - max).exp());
        let sum = row.sum();
        row /= sum;
    }
    Ok(out)
}

/// Pulls a gradient with respect to softmax probabilities back to the
/// logits: `p * (g - <p, g>)` row by row.
pub fn softmax_backward(probs: &DMatrix<f64>, grad: &DMatrix<f64>) -> DMatrix<f64> {
    let mut out = grad.clone();
    for (i, mut row) in out.row_iter_mut().enumerate() {
        let p = probs.row(i);
        let mean = p.dot(&row);
        for (j, x) in row.iter_mut().enumerate() {
            *x = p[j] * (*x - mean);
        }
    }
    out
}

fn log_floor(probs: &DMatrix<f64>) -> DMatrix<f64> {
    probs.map(|p| p.max(LOG_FLOOR).ln())
}

/// Policy logits `theta[s][a]`.
#[derive(Debug, Clone, PartialEq)]
pub struct PolicyParams {
    pub theta: DMatrix<f64>,
}

impl PolicyParams {
    /// Zero logits, i.e. the uniform policy.
    pub fn zeros(n_states: usize, n_actions: usize) -> Self {
        Self { theta: DMatrix::zeros(n_states, n_actions) }
    }

    pub fn from_policy(policy: &PolicyMatrix) -> Self {
        Self { theta: log_floor(policy.probs()) }
    }

    pub fn policy(&self) -> Result<PolicyMatrix> {
        policy_from_logits(&self.theta)
    }
}

/// Encoding logits `omega[u][s]`.
#[derive(Debug, Clone, PartialEq)]
pub struct EncodingParams {
    pub omega: DMatrix<f64>,
}

impl EncodingParams {
    /// Logits `ln(max(p, 1e-6))` of an existing encoding.
    pub fn from_encoding(enc: &EncodingMatrix) -> Self {
        Self { omega: log_floor(enc.matrix()) }
    }

    pub fn encoding(&self) -> Result<EncodingMatrix> {
        encoding_from_logits(&self.omega)
    }
}

pub fn policy_from_logits(theta: &DMatrix<f64>) -> Result<PolicyMatrix> {
    PolicyMatrix::new(softmax_rows(theta)?)
}

pub fn encoding_from_logits(omega: &DMatrix<f64>) -> Result<EncodingMatrix> {
    EncodingMatrix::new(softmax_rows(omega)?)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_logits_are_uniform() {
        let p = policy_from_logits(&DMatrix::zeros(2, 4)).unwrap();
        assert!(p.probs().iter().all(|&x| (x - 0.25).abs() < 1e-15));
    }

    #[test]
    fn large_logit_is_nearly_one_hot() {
        let mut theta = DMatrix::zeros(1, 3);
        theta[(0, 1)] = 20.0;
        let p = policy_from_logits(&theta).unwrap();
        assert!((p.prob(0, 1) - 1.0).abs() < 1e-8);
    }

    #[test]
    fn non_finite_logits_rejected() {
        let mut theta = DMatrix::zeros(1, 2);
        theta[(0, 0)] = f64::NAN;
        assert!(matches!(policy_from_logits(&theta), Err(Error::InvalidParameter(_))));
    }

    #[test]
    fn backward_conserves_row_mass() {
        let probs = softmax_rows(&DMatrix::from_row_slice(2, 3, &[0.1, -2.0, 1.0, 3.0, 0.0, 0.5])).unwrap();
        let g = softmax_backward(&probs, &DMatrix::from_row_slice(2, 3, &[1.0, 2.0, -1.0, 0.3, 0.3, 9.0]));
        for row in g.row_iter() {
            assert!(row.sum().abs() < 1e-12);
        }
    }
}
