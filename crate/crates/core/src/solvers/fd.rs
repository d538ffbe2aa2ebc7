use nalgebra::DMatrix;

use crate::error::{Error, Result};

/// Comparison of an analytic gradient with central differences.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FdReport {
    /// `max |analytic - numeric| / max(max |analytic|, max |numeric|)`.
    pub max_rel_error: f64,
    pub max_abs_error: f64,
    /// `(row, col)` of the largest absolute discrepancy.
    pub worst_index: (usize, usize),
}

/// Central differences `(f(x + h e_ij) - f(x - h e_ij)) / 2h` over every
/// entry of `params`, compared with `analytic`.
pub fn finite_difference_check<F>(mut f: F, params: &DMatrix<f64>, analytic: &DMatrix<f64>, h: f64) -> Result<FdReport>
where
    F: FnMut(&DMatrix<f64>) -> Result<f64>,
{
    if params.shape() != analytic.shape() {
        return Err(Error::Dimension(format!("parameters {:?} but gradient {:?}", params.shape(), analytic.shape())));
    }
    let numeric = numeric_gradient(&mut f, params, h)?;
    let diff = analytic - &numeric;
    let (mut worst_index, mut max_abs_error) = ((0, 0), 0.0);
    for j in 0..diff.ncols() {
        for i in 0..diff.nrows() {
            if diff[(i, j)].abs() > max_abs_error {
                max_abs_error = diff[(i, j)].abs();
                worst_index = (i, j);
            }
        }
    }
    let scale = analytic.amax().max(numeric.amax());
    let max_rel_error = if scale > 0.0 { max_abs_error / scale } else { 0.0 };
    Ok(FdReport { max_rel_error, max_abs_error, worst_index })
}

pub fn numeric_gradient<F>(f: &mut F, params: &DMatrix<f64>, h: f64) -> Result<DMatrix<f64>>
where
    F: FnMut(&DMatrix<f64>) -> Result<f64>,
{
    let mut x = params.clone();
    let mut out = DMatrix::zeros(params.nrows(), params.ncols());
    for j in 0..params.ncols() {
        for i in 0..params.nrows() {
            let orig = x[(i, j)];
            x[(i, j)] = orig + h;
            let up = f(&x)?;
            x[(i, j)] = orig - h;
            let down = f(&x)?;
            x[(i, j)] = orig;
            out[(i, j)] = (up - down) / (2.0 * h);
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn quadratic_is_exact() {
        let x = DMatrix::from_row_slice(2, 2, &[1.0, -2.0, 0.5, 3.0]);
        let f = |m: &DMatrix<f64>| Ok(m.iter().map(|v| v * v).sum::<f64>());
        let report = finite_difference_check(f, &x, &(&x * 2.0), 1e-5).unwrap();
        assert!(report.max_rel_error <= 1e-10);
    }

    #[test]
    fn wrong_gradient_is_flagged() {
        let x = DMatrix::from_row_slice(1, 2, &[1.0, 2.0]);
        let f = |m: &DMatrix<f64>| Ok(m[(0, 0)] * m[(0, 1)]);
        let report = finite_difference_check(f, &x, &DMatrix::from_row_slice(1, 2, &[2.0, 2.0]), 1e-5).unwrap();
        assert_eq!(report.worst_index, (0, 1));
        assert!((report.max_abs_error - 1.0).abs() < 1e-8);
    }
}
