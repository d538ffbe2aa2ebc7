//! Encodings `P_nu`, the abstract chains they induce, the span-condition
//! certificate and the performance lower bound.

mod basis;
mod chain;
mod encoding;
mod lift;

pub use basis::{
    build_encoding_from_basis, span_condition_holds, transition_basis, SpanReport, TransitionBasis, DEFAULT_RANK_TOL,
};
pub use chain::{
    build_homomorphic_chain, error_term, performance_lower_bound, ChainDiagnostics, ErrorTerm, HomomorphicChain,
    LowerBound,
};
pub use encoding::{pseudoinverse_derivative, right_pseudoinverse, EncodingMatrix, GRAM_CONDITION_LIMIT};
pub use lift::{lift_initial_distribution, Lift};
