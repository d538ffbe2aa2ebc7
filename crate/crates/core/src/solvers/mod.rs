//! Softmax parameterizations, exact gradients, and the two optimization
//! loops: HPG on a fixed encoding and EBHPG on policy and encoding jointly.

mod config;
mod ebhpg;
mod fd;
mod gradient;
mod hpg;
mod params;

pub use config::{Improvement, SolverConfig};
pub use ebhpg::{ebhpg_run, ebhpg_run_with_init, EbhpgOutcome};
pub use fd::{finite_difference_check, numeric_gradient, FdReport};
pub use gradient::{
    abstract_q, grad_objective_omega, grad_objective_theta, grad_value_theta, objective_gradients,
    value_gradient_from_chain, GradientWorkspace, ObjectiveGradient, ValueGradient, PENALTY_GRAD_CUTOFF,
};
pub use hpg::{hpg_run, HpgOutcome, GRAD_NORM_STOP};
pub use params::{
    encoding_from_logits, policy_from_logits, softmax_backward, softmax_rows, EncodingParams, PolicyParams, LOG_FLOOR,
};
