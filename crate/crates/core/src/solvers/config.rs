use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// How HPG improves the policy between abstract evaluations.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Improvement {
    /// Fixed-step gradient ascent on the policy logits.
    #[default]
    Gradient,
    /// Greedy switch to `argmax_a r(s,a) + gamma alpha_{s,a} . N^+ V_U`.
    /// With an exact encoding this is policy iteration run on the abstract chain.
    Greedy,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolverConfig {
    pub learning_rate: f64,
    pub max_iters: usize,
    /// Stop once consecutive logged ground values differ by at most this.
    pub epsilon: f64,
    /// Ground evaluation (and logging) period, in iterations.
    pub ground_eval_every: usize,
    pub seed: u64,
    pub improvement: Improvement,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            learning_rate: 1e-3,
            max_iters: 1000,
            epsilon: 1e-6,
            ground_eval_every: 10,
            seed: 0,
            improvement: Improvement::Gradient,
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return Err(Error::InvalidParameter(format!("learning_rate {} must be positive", self.learning_rate)));
        }
        if !(self.epsilon > 0.0) {
            return Err(Error::InvalidParameter(format!("epsilon {} must be positive", self.epsilon)));
        }
        if self.ground_eval_every == 0 {
            return Err(Error::InvalidParameter("ground_eval_every must be at least 1".into()));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_and_partial_json() {
        let c: SolverConfig = serde_json::from_str(r#"{"max_iters": 5, "improvement": "greedy"}"#).unwrap();
        assert_eq!(c.learning_rate, 1e-3);
        assert_eq!(c.ground_eval_every, 10);
        assert_eq!(c.improvement, Improvement::Greedy);
        assert!(c.validate().is_ok());
        let bad = SolverConfig { learning_rate: 0.0, ..SolverConfig::default() };
        assert!(bad.validate().is_err());
        assert!(serde_json::from_str::<SolverConfig>(r#"{"lr": 1.0}"#).is_err());
    }
}
