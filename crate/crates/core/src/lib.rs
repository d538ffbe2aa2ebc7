//! State aggregation for tabular MDPs through homomorphic Markov chains.
//!
//! An encoding `P_nu` (a row-stochastic `|U| x |S|` matrix) maps the chain a
//! policy induces on the ground MDP to a smaller abstract chain. When the
//! row space of `P_nu` contains every transition row of the MDP, abstract
//! values are exact projections of ground values and optimal policies carry
//! over. Otherwise the gap is bounded by an error term that the solvers can
//! optimize against.

pub mod environments;
pub mod error;
pub mod homomorphism;
pub mod linalg;
pub mod mdp;
pub mod policy_iteration;
pub mod record;
pub mod solvers;

pub use error::{Error, Result};
pub use homomorphism::{
    build_encoding_from_basis, build_homomorphic_chain, error_term, lift_initial_distribution, performance_lower_bound,
    right_pseudoinverse, span_condition_holds, transition_basis, EncodingMatrix, ErrorTerm, HomomorphicChain,
    SpanReport, TransitionBasis,
};
pub use mdp::{
    exact_value, induce_chain, performance, q_values, GroundMdp, InitialDistribution, MarkovChain, PolicyMatrix,
    ValueVector,
};
pub use policy_iteration::{policy_iteration, PolicyIterationOutcome};
pub use record::{RunRecord, RunRow, RunStatus, CSV_HEADER};
