use nalgebra::{DMatrix, DVector};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::homomorphism::encoding::EncodingMatrix;
use crate::linalg::spectral_norm;
use crate::mdp::GroundMdp;

pub const DEFAULT_RANK_TOL: f64 = 1e-8;

/// A maximal linearly independent set of transition rows `P_SA(.|s,a)`.
#[derive(Debug, Clone, PartialEq)]
pub struct TransitionBasis {
    /// Selected rows, in pivot order.
    pub vectors: Vec<DVector<f64>>,
    /// `(s, a)` of each selected row.
    pub selected_pairs: Vec<(usize, usize)>,
    /// Residual norm of each row at the moment it was selected.
    pub pivot_norms: Vec<f64>,
    /// Absolute tolerance: the relative tolerance times `scale`.
    pub tolerance: f64,
    /// Largest singular value of the stacked `|S||A| x |S|` matrix.
    pub scale: f64,
    /// Largest residual of any row against the span of the basis.
    pub max_reconstruction_residual: f64,
}

impl TransitionBasis {
    pub fn rank(&self) -> usize {
        self.vectors.len()
    }
}

/// Greedy column-pivoted Gram-Schmidt over the transition rows.
///
/// At each step the row with the largest residual (after projecting out the
/// rows already chosen) is added, until every residual is at most
/// `rel_tol * sigma_max`. Ties go to the lowest `(s, a)` index.
pub fn transition_basis(mdp: &GroundMdp, rel_tol: f64) -> Result<TransitionBasis> {
    if !(rel_tol > 0.0) {
        return Err(Error::InvalidParameter(format!("rank tolerance {rel_tol} must be positive")));
    }
    let stacked = mdp.stacked_transitions();
    let scale = spectral_norm(&stacked);
    let tolerance = rel_tol * scale;
    let n_a = mdp.n_actions();

    let mut residual = stacked.clone();
    let mut norms: Vec<f64> = residual.row_iter().map(|r| r.norm()).collect();
    let mut taken = vec![false; stacked.nrows()];
    let mut vectors = Vec::new();
    let mut selected_pairs = Vec::new();
    let mut pivot_norms = Vec::new();

    loop {
        let pick =
            norms.iter().enumerate().filter(|(i, _)| !taken[*i]).fold(None, |best: Option<(usize, f64)>, (i, &n)| {
                match best {
                    Some((_, bn)) if bn >= n => best,
                    _ => Some((i, n)),
                }
            });
        let Some((i, norm)) = pick else { break };
        if norm <= tolerance {
            break;
        }
        taken[i] = true;
        let q = residual.row(i) / norm;
        for j in 0..residual.nrows() {
            if taken[j] {
                continue;
            }
            let c = residual.row(j).dot(&q);
            let mut row = residual.row_mut(j);
            row -= &q * c;
            norms[j] = row.norm();
        }
        vectors.push(stacked.row(i).transpose());
        selected_pairs.push((i / n_a, i % n_a));
        pivot_norms.push(norm);
    }

    let max_reconstruction_residual = (0..stacked.nrows()).filter(|&i| !taken[i]).map(|i| norms[i]).fold(0.0, f64::max);
    // incremental norms lose accuracy, recompute against an orthonormal basis
    let max_reconstruction_residual = if vectors.is_empty() {
        max_reconstruction_residual
    } else {
        max_reconstruction_residual.max(exact_max_residual(&stacked, &vectors))
    };

    Ok(TransitionBasis { vectors, selected_pairs, pivot_norms, tolerance, scale, max_reconstruction_residual })
}

fn exact_max_residual(stacked: &DMatrix<f64>, vectors: &[DVector<f64>]) -> f64 {
    let basis = DMatrix::from_columns(vectors);
    let qr = basis.qr();
    let q = qr.q();
    let proj = stacked * &q;
    let back = &proj * q.transpose();
    (stacked - back).row_iter().map(|r| r.norm()).fold(0.0, f64::max)
}

/// Result of checking `Row(P_nu) ⊇ span(F)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpanReport {
    pub rank: usize,
    pub span_ok: bool,
    pub max_residual: f64,
    /// `(s, a)` of the basis vector with the largest residual.
    pub worst_pair: Option<(usize, usize)>,
}

/// Residual `||alpha - alpha P_nu^dagger P_nu||` of every basis vector; the
/// condition holds when all are at most `tol`.
pub fn span_condition_holds(enc: &EncodingMatrix, basis: &TransitionBasis, tol: f64) -> Result<SpanReport> {
    if basis.vectors.first().is_some_and(|v| v.len() != enc.n_states()) {
        return Err(Error::Dimension(format!(
            "basis vectors have length {}, encoding covers {} states",
            basis.vectors[0].len(),
            enc.n_states()
        )));
    }
    let mut max_residual = 0.0;
    let mut worst_pair = None;
    for (alpha, &pair) in basis.vectors.iter().zip(&basis.selected_pairs) {
        // alpha^T P^dagger P, computed as ((alpha^T P^dagger) P)
        let coeffs = enc.pinv().tr_mul(alpha);
        let projected = enc.matrix().tr_mul(&coeffs);
        let r = (alpha - projected).norm();
        if worst_pair.is_none() || r > max_residual {
            max_residual = r;
            worst_pair = Some(pair);
        }
    }
    Ok(SpanReport { rank: basis.rank(), span_ok: max_residual <= tol, max_residual, worst_pair })
}

/// Encoding whose rows are the first `n_abstract` basis vectors in pivot
/// order. Runs of equal pivot norms are shuffled with `seed` first.
pub fn build_encoding_from_basis(basis: &TransitionBasis, n_abstract: usize, seed: u64) -> Result<EncodingMatrix> {
    if n_abstract == 0 || n_abstract > basis.rank() {
        return Err(Error::InfeasibleEncoding { requested: n_abstract, available: basis.rank() });
    }
    let order = tie_shuffled_order(&basis.pivot_norms, basis.scale * 1e-12, seed);
    let rows: Vec<Vec<f64>> = order[..n_abstract].iter().map(|&i| basis.vectors[i].iter().copied().collect()).collect();
    EncodingMatrix::from_rows(&rows)
}

fn tie_shuffled_order(norms: &[f64], tie_tol: f64, seed: u64) -> Vec<usize> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut order: Vec<usize> = (0..norms.len()).collect();
    let mut start = 0;
    while start < norms.len() {
        let mut end = start + 1;
        while end < norms.len() && (norms[end] - norms[start]).abs() <= tie_tol {
            end += 1;
        }
        order[start..end].shuffle(&mut rng);
        start = end;
    }
    order
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn shared_row_has_rank_one() {
        let row = [0.2, 0.3, 0.5];
        let t = vec![vec![row.to_vec(); 2]; 3];
        let r = vec![vec![0.0; 2]; 3];
        let mdp = GroundMdp::from_nested(&t, &r, 0.9).unwrap();
        let basis = transition_basis(&mdp, DEFAULT_RANK_TOL).unwrap();
        assert_eq!(basis.rank(), 1);
        assert_eq!(basis.selected_pairs, vec![(0, 0)]);
        assert!(basis.max_reconstruction_residual <= basis.tolerance);
    }

    #[test]
    fn identity_encoding_spans_everything() {
        let t = vec![vec![vec![1.0, 0.0], vec![0.0, 1.0]], vec![vec![0.5, 0.5], vec![0.0, 1.0]]];
        let r = vec![vec![0.0, 1.0], vec![0.0, 1.0]];
        let mdp = GroundMdp::from_nested(&t, &r, 0.9).unwrap();
        let basis = transition_basis(&mdp, DEFAULT_RANK_TOL).unwrap();
        assert_eq!(basis.rank(), 2);
        let report = span_condition_holds(&EncodingMatrix::identity(2), &basis, 1e-10).unwrap();
        assert!(report.span_ok);
        assert!(report.max_residual < 1e-14);
    }

    #[test]
    fn too_many_rows_is_infeasible() {
        let t = vec![vec![vec![1.0, 0.0]], vec![vec![1.0, 0.0]]];
        let r = vec![vec![0.0], vec![0.0]];
        let mdp = GroundMdp::from_nested(&t, &r, 0.9).unwrap();
        let basis = transition_basis(&mdp, DEFAULT_RANK_TOL).unwrap();
        assert_eq!(
            build_encoding_from_basis(&basis, 2, 0),
            Err(Error::InfeasibleEncoding { requested: 2, available: 1 })
        );
    }

    #[test]
    fn seed_only_permutes_ties() {
        let norms = [3.0, 1.0, 1.0, 1.0, 0.5];
        let a = tie_shuffled_order(&norms, 1e-12, 1);
        assert_eq!(a[0], 0);
        assert_eq!(a[4], 4);
        let mut mid = a[1..4].to_vec();
        mid.sort();
        assert_eq!(mid, vec![1, 2, 3]);
    }
}
