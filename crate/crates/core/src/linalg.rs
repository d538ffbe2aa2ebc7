//! Small dense helpers on top of nalgebra.

use nalgebra::{DMatrix, DVector};

/// Largest singular value of `m` by power iteration on `m^T m`.
pub fn spectral_norm(m: &DMatrix<f64>) -> f64 {
    if m.is_empty() {
        return 0.0;
    }
    let mut x = DVector::from_element(m.ncols(), 1.0 / (m.ncols() as f64).sqrt());
    let mut sigma = 0.0;
    for _ in 0..500 {
        let y = m * &x;
        let z = m.tr_mul(&y);
        let norm = z.norm();
        if norm == 0.0 {
            return 0.0;
        }
        let next = y.norm();
        x = z / norm;
        if (next - sigma).abs() <= 1e-12 * next {
            return next;
        }
        sigma = next;
    }
    sigma
}

/// Euclidean projection onto the probability simplex.
pub fn project_simplex(v: &DVector<f64>) -> DVector<f64> {
    let mut sorted: Vec<f64> = v.iter().copied().collect();
    sorted.sort_by(|a, b| b.total_cmp(a));
    let mut cumsum = 0.0;
    let mut shift = 0.0;
    for (k, &x) in sorted.iter().enumerate() {
        cumsum += x;
        let t = (cumsum - 1.0) / (k + 1) as f64;
        if x - t > 0.0 {
            shift = t;
        }
    }
    v.map(|x| (x - shift).max(0.0))
}

/// Moore-Penrose pseudoinverse through the SVD, discarding singular values
/// below `rcond * sigma_max`. Returns the pseudoinverse and the kept rank.
pub fn svd_pseudoinverse(m: &DMatrix<f64>, rcond: f64) -> (DMatrix<f64>, usize) {
    let svd = m.clone().svd(true, true);
    let sigma_max = svd.singular_values.max();
    let cutoff = rcond * sigma_max;
    let rank = svd.singular_values.iter().filter(|&&s| s > cutoff).count();
    let pinv =
        svd.pseudo_inverse(cutoff.max(f64::MIN_POSITIVE)).unwrap_or_else(|_| DMatrix::zeros(m.ncols(), m.nrows()));
    (pinv, rank)
}

/// Extreme eigenvalues of a symmetric matrix.
pub fn symmetric_eigen_range(m: &DMatrix<f64>) -> (f64, f64) {
    let eig = m.clone().symmetric_eigen();
    (eig.eigenvalues.min(), eig.eigenvalues.max())
}

/// Rows of `m` that are (numerically) in the span of earlier rows.
pub fn dependent_rows(m: &DMatrix<f64>, rel_tol: f64) -> Vec<usize> {
    let scale = m.row_iter().map(|r| r.norm()).fold(0.0, f64::max);
    let mut basis: Vec<DVector<f64>> = Vec::new();
    let mut dependent = Vec::new();
    for (i, row) in m.row_iter().enumerate() {
        let mut r: DVector<f64> = row.transpose();
        for _ in 0..2 {
            for q in &basis {
                let c = q.dot(&r);
                r.axpy(-c, q, 1.0);
            }
        }
        let n = r.norm();
        if n <= rel_tol * scale {
            dependent.push(i);
        } else {
            basis.push(r / n);
        }
    }
    dependent
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn simplex_projection_cases() {
        let p = project_simplex(&DVector::from_vec(vec![0.2, 0.3, 0.5]));
        assert!((p - DVector::from_vec(vec![0.2, 0.3, 0.5])).amax() < 1e-15);
        let p = project_simplex(&DVector::from_vec(vec![2.0, 0.0]));
        assert_eq!(p, DVector::from_vec(vec![1.0, 0.0]));
        let p = project_simplex(&DVector::from_vec(vec![0.0, 0.0]));
        assert!((p - DVector::from_vec(vec![0.5, 0.5])).amax() < 1e-15);
    }

    #[test]
    fn spectral_norm_of_diagonal() {
        let m = DMatrix::from_diagonal(&DVector::from_vec(vec![1.0, 3.0, 2.0]));
        assert!((spectral_norm(&m) - 3.0).abs() < 1e-9);
    }

    #[test]
    fn dependent_rows_found() {
        let m = DMatrix::from_row_slice(3, 2, &[1.0, 0.0, 0.0, 1.0, 0.5, 0.5]);
        assert_eq!(dependent_rows(&m, 1e-10), vec![2]);
    }
}
