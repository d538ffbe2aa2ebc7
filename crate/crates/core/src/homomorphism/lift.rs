use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::homomorphism::encoding::EncodingMatrix;
use crate::linalg::{project_simplex, symmetric_eigen_range};
use crate::mdp::InitialDistribution;

const STATIONARITY_TOL: f64 = 1e-10;
const MAX_ITERS: usize = 50_000;
const POLISH_EVERY: usize = 50;

/// Abstract initial distribution and how well it reproduces the ground one.
#[derive(Debug, Clone, PartialEq)]
pub struct Lift {
    pub xi_u: InitialDistribution,
    /// `||xi_U^T P_nu - xi_S^T||`
    pub residual: f64,
    pub iterations: usize,
}

/// Finds `xi_U` on the simplex minimizing `||xi_U^T P_nu - xi_S^T||`.
///
/// Accelerated projected gradient, with an equality-constrained least-squares
/// solve on the current support whenever that gives a KKT point. `warm` seeds
/// the iteration.
pub fn lift_initial_distribution(
    xi_s: &InitialDistribution,
    enc: &EncodingMatrix,
    warm: Option<&DVector<f64>>,
) -> Result<Lift> {
    if xi_s.len() != enc.n_states() {
        return Err(Error::Dimension(format!(
            "distribution over {} states, encoding covers {}",
            xi_s.len(),
            enc.n_states()
        )));
    }
    let n = enc.matrix();
    let xi = xi_s.as_vector();
    let gram = n * n.transpose();
    let target = n * xi;
    let n_u = enc.n_abstract();

    let grad = |x: &DVector<f64>| &gram * x - &target;
    let (_, lmax) = symmetric_eigen_range(&gram);
    let step = 1.0 / lmax.max(f64::MIN_POSITIVE);

    let mut x = match warm {
        Some(w) if w.len() == n_u => project_simplex(w),
        _ => DVector::from_element(n_u, 1.0 / n_u as f64),
    };
    let finish = |x: DVector<f64>, iterations: usize| {
        let residual = (n.tr_mul(&x) - xi).norm();
        Lift { xi_u: InitialDistribution::from_vec_unchecked(x), residual, iterations }
    };

    let all: Vec<usize> = (0..n_u).collect();
    if let Some(y) = polish(&gram, &target, &all) {
        return Ok(finish(y, 0));
    }

    let mut y = x.clone();
    let mut t = 1.0_f64;
    for it in 1..=MAX_ITERS {
        let next = project_simplex(&(&y - grad(&y) * step));
        let t_next = 0.5 * (1.0 + (1.0 + 4.0 * t * t).sqrt());
        y = &next + (&next - &x) * ((t - 1.0) / t_next);
        x = next;
        t = t_next;

        let g = grad(&x);
        let moved = project_simplex(&(&x - &g * step));
        if (&moved - &x).amax() <= STATIONARITY_TOL * step {
            return Ok(finish(x, it));
        }
        if it % POLISH_EVERY == 0 {
            let support: Vec<usize> = (0..n_u).filter(|&i| x[i] > 1e-12).collect();
            if let Some(p) = polish(&gram, &target, &support) {
                return Ok(finish(p, it));
            }
        }
    }
    Ok(finish(x, MAX_ITERS))
}

/// Minimizes over `{x >= 0, sum x = 1, x_i = 0 off support}` through the KKT
/// system and accepts the point only if it is optimal for the full problem.
fn polish(gram: &DMatrix<f64>, target: &DVector<f64>, support: &[usize]) -> Option<DVector<f64>> {
    let k = support.len();
    if k == 0 {
        return None;
    }
    let mut kkt = DMatrix::zeros(k + 1, k + 1);
    let mut rhs = DVector::zeros(k + 1);
    for (a, &i) in support.iter().enumerate() {
        for (b, &j) in support.iter().enumerate() {
            kkt[(a, b)] = gram[(i, j)];
        }
        kkt[(a, k)] = 1.0;
        kkt[(k, a)] = 1.0;
        rhs[a] = target[i];
    }
    rhs[k] = 1.0;
    let sol = kkt.lu().solve(&rhs)?;
    if sol.iter().any(|v| !v.is_finite()) {
        return None;
    }
    let mut x = DVector::zeros(gram.nrows());
    for (a, &i) in support.iter().enumerate() {
        if sol[a] < -1e-13 {
            return None;
        }
        x[i] = sol[a].max(0.0);
    }
    let sum = x.sum();
    if sum <= 0.0 {
        return None;
    }
    x /= sum;
    // gradient must be smallest (and equal) on the support
    let g = gram * &x - target;
    let tau = support.iter().map(|&i| g[i]).fold(f64::INFINITY, f64::min);
    let scale = gram.amax().max(target.amax()).max(1e-300);
    let slack = 1e-9 * scale;
    let stationary =
        support.iter().all(|&i| (g[i] - tau).abs() <= slack) && (0..gram.nrows()).all(|i| g[i] >= tau - slack);
    stationary.then_some(x)
}
