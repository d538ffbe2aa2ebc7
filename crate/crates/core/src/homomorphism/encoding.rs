use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{dependent_rows, svd_pseudoinverse, symmetric_eigen_range};
use crate::mdp::stochastic_tol;

/// Gram matrices `P P^T` with a larger eigenvalue ratio than this are
/// treated as rank deficient.
pub const GRAM_CONDITION_LIMIT: f64 = 1e12;

/// Right pseudoinverse `P^T (P P^T)^{-1}` of a full-row-rank matrix.
///
/// Fails with [`Error::RankDeficient`] when the Gram matrix condition number
/// exceeds [`GRAM_CONDITION_LIMIT`]; the error names rows that depend on
/// earlier ones.
pub fn right_pseudoinverse(p_nu: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    right_pseudoinverse_with_condition(p_nu).map(|(pinv, _)| pinv)
}

pub(crate) fn right_pseudoinverse_with_condition(p_nu: &DMatrix<f64>) -> Result<(DMatrix<f64>, f64)> {
    if p_nu.nrows() == 0 || p_nu.nrows() > p_nu.ncols() {
        return Err(Error::Dimension(format!("cannot right-invert a {:?} matrix", p_nu.shape())));
    }
    let gram = p_nu * p_nu.transpose();
    let (lo, hi) = symmetric_eigen_range(&gram);
    let condition = if lo > 0.0 { hi / lo } else { f64::INFINITY };
    if !(condition <= GRAM_CONDITION_LIMIT) {
        let mut rows = dependent_rows(p_nu, 1e-6);
        if rows.is_empty() {
            rows = (0..p_nu.nrows()).collect();
        }
        return Err(Error::RankDeficient { condition, rows });
    }
    let chol = gram.cholesky().ok_or_else(|| Error::RankDeficient { condition, rows: dependent_rows(p_nu, 1e-6) })?;
    // (P P^T)^{-1} P, transposed
    Ok((chol.solve(p_nu).transpose(), condition))
}

/// Derivative of the pseudoinverse entry `P^dagger[s][u]` with respect to
/// every entry of `P`, returned as a `|U| x |S|` matrix.
///
/// With `G = P P^T` and `Pi = P^dagger P`:
/// `d P^dagger[s][u] / dP = G^{-1} e_u (e_s - Pi e_s)^T - G^{-1} P e_s e_u^T G^{-1} P`.
pub fn pseudoinverse_derivative(p_nu: &DMatrix<f64>, s: usize, u: usize) -> Result<DMatrix<f64>> {
    let (pinv, _) = right_pseudoinverse_with_condition(p_nu)?;
    let n_u = p_nu.nrows();
    let n_s = p_nu.ncols();
    if s >= n_s || u >= n_u {
        return Err(Error::Dimension(format!("entry ({s}, {u}) outside a {n_s}x{n_u} pseudoinverse")));
    }
    // G^{-1} = pinv^T pinv since pinv = P^T G^{-1}
    let gram_inv = pinv.tr_mul(&pinv);
    let projector = &pinv * p_nu;
    let gi_u = gram_inv.column(u).into_owned();
    let mut complement_s = -projector.column(s).into_owned();
    complement_s[s] += 1.0;
    let pinv_row_s = pinv.row(s).transpose(); // G^{-1} P e_s
    let pinv_col_u = pinv.column(u).transpose(); // e_u^T G^{-1} P
    Ok(&gi_u * complement_s.transpose() - pinv_row_s * pinv_col_u)
}

/// A row-stochastic `|U| x |S|` encoding `P_nu` with its cached right
/// pseudoinverse.
#[derive(Debug, Clone, PartialEq)]
pub struct EncodingMatrix {
    p_nu: DMatrix<f64>,
    pinv: DMatrix<f64>,
    gram_condition: f64,
    approximate: bool,
}

impl EncodingMatrix {
    pub fn new(p_nu: DMatrix<f64>) -> Result<Self> {
        validate_rows(&p_nu)?;
        let (pinv, gram_condition) = right_pseudoinverse_with_condition(&p_nu)?;
        Ok(Self { p_nu, pinv, gram_condition, approximate: false })
    }

    /// Like [`EncodingMatrix::new`], but falls back to an SVD pseudoinverse
    /// with singular-value cutoff `rcond` when `P_nu` is rank deficient. The
    /// result is flagged approximate.
    pub fn with_svd_fallback(p_nu: DMatrix<f64>, rcond: f64) -> Result<Self> {
        match Self::new(p_nu.clone()) {
            Err(Error::RankDeficient { condition, .. }) => {
                let (pinv, _) = svd_pseudoinverse(&p_nu, rcond);
                Ok(Self { p_nu, pinv, gram_condition: condition, approximate: true })
            }
            other => other,
        }
    }

    pub fn identity(n: usize) -> Self {
        let eye = DMatrix::identity(n, n);
        Self { p_nu: eye.clone(), pinv: eye, gram_condition: 1.0, approximate: false }
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let n_s = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != n_s) {
            return Err(Error::Dimension("encoding rows have different lengths".into()));
        }
        let flat: Vec<f64> = rows.iter().flatten().copied().collect();
        Self::new(DMatrix::from_row_slice(rows.len(), n_s, &flat))
    }

    pub fn n_abstract(&self) -> usize {
        self.p_nu.nrows()
    }

    pub fn n_states(&self) -> usize {
        self.p_nu.ncols()
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.p_nu
    }

    pub fn pinv(&self) -> &DMatrix<f64> {
        &self.pinv
    }

    pub fn gram_condition(&self) -> f64 {
        self.gram_condition
    }

    pub fn is_approximate(&self) -> bool {
        self.approximate
    }

    /// Orthogonal projector `P^dagger P` onto the row space of `P_nu`.
    pub fn row_space_projector(&self) -> DMatrix<f64> {
        &self.pinv * &self.p_nu
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string(&EncodingFile::from(self))?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let file: EncodingFile = serde_json::from_str(s)?;
        if file.rows.len() != file.n_abstract || file.rows.iter().any(|r| r.len() != file.n_states) {
            return Err(Error::Dimension(format!(
                "declared {}x{} encoding does not match its rows",
                file.n_abstract, file.n_states
            )));
        }
        Self::from_rows(&file.rows)
    }
}

fn validate_rows(p_nu: &DMatrix<f64>) -> Result<()> {
    let tol = stochastic_tol(p_nu.ncols());
    for (u, row) in p_nu.row_iter().enumerate() {
        if row.iter().any(|&x| !x.is_finite() || x < 0.0) {
            return Err(Error::InvalidModel(format!("encoding row {u} has a negative or non-finite entry")));
        }
        let sum = row.sum();
        if (sum - 1.0).abs() > tol {
            return Err(Error::InvalidModel(format!("encoding row {u} sums to {sum}")));
        }
    }
    Ok(())
}

/// JSON layout `{n_abstract, n_states, rows}`.
#[derive(Serialize, Deserialize)]
struct EncodingFile {
    n_abstract: usize,
    n_states: usize,
    rows: Vec<Vec<f64>>,
}

impl From<&EncodingMatrix> for EncodingFile {
    fn from(e: &EncodingMatrix) -> Self {
        EncodingFile {
            n_abstract: e.n_abstract(),
            n_states: e.n_states(),
            rows: e.p_nu.row_iter().map(|r| r.iter().copied().collect()).collect(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identity_is_its_own_pseudoinverse() {
        let pinv = right_pseudoinverse(&DMatrix::identity(3, 3)).unwrap();
        assert!((pinv - DMatrix::<f64>::identity(3, 3)).amax() < 1e-15);
    }

    #[test]
    fn single_uniform_row() {
        let p = DMatrix::from_row_slice(1, 2, &[0.5, 0.5]);
        let pinv = right_pseudoinverse(&p).unwrap();
        assert!((pinv[(0, 0)] - 1.0).abs() < 1e-14);
        assert!((pinv[(1, 0)] - 1.0).abs() < 1e-14);
    }

    #[test]
    fn duplicate_rows_are_rank_deficient() {
        let p = DMatrix::from_row_slice(3, 3, &[0.5, 0.5, 0.0, 0.0, 0.0, 1.0, 0.5, 0.5, 0.0]);
        match EncodingMatrix::new(p.clone()) {
            Err(Error::RankDeficient { rows, .. }) => assert_eq!(rows, vec![2]),
            other => panic!("expected rank deficiency, got {other:?}"),
        }
        let approx = EncodingMatrix::with_svd_fallback(p.clone(), 1e-10).unwrap();
        assert!(approx.is_approximate());
        // Moore-Penrose: P P+ P = P
        assert!((&p * approx.pinv() * &p - &p).amax() < 1e-10);
    }

    #[test]
    fn rejects_non_stochastic_rows() {
        let p = DMatrix::from_row_slice(1, 2, &[0.5, 0.6]);
        assert!(matches!(EncodingMatrix::new(p), Err(Error::InvalidModel(_))));
        let p = DMatrix::from_row_slice(1, 2, &[1.5, -0.5]);
        assert!(matches!(EncodingMatrix::new(p), Err(Error::InvalidModel(_))));
    }

    #[test]
    fn json_layout() {
        let enc = EncodingMatrix::from_rows(&[vec![0.25, 0.75, 0.0], vec![0.0, 0.0, 1.0]]).unwrap();
        let json = enc.to_json().unwrap();
        let v: serde_json::Value = serde_json::from_str(&json).unwrap();
        assert_eq!(v["n_abstract"], 2);
        assert_eq!(v["n_states"], 3);
        assert_eq!(v["rows"][0][1], 0.75);
        assert_eq!(EncodingMatrix::from_json(&json).unwrap(), enc);
        let bad = r#"{"n_abstract":3,"n_states":3,"rows":[[1.0,0.0,0.0]]}"#;
        assert!(EncodingMatrix::from_json(bad).is_err());
    }
}
