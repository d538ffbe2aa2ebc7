use homomorphic_mdp::environments::gen_random_mdp;
use homomorphic_mdp::homomorphism::{pseudoinverse_derivative, right_pseudoinverse, HomomorphicChain};
use homomorphic_mdp::solvers::{
    finite_difference_check, grad_objective_omega, grad_objective_theta, grad_value_theta, numeric_gradient,
    objective_gradients, softmax_rows, EncodingParams, PolicyParams,
};
use homomorphic_mdp::{EncodingMatrix, PolicyMatrix};
use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const H: f64 = 1e-5;
const REL_TOL: f64 = 1e-4;

struct Instance {
    mdp: homomorphic_mdp::GroundMdp,
    theta: PolicyParams,
    omega: EncodingParams,
    xi_u: DVector<f64>,
}

fn instance(seed: u64) -> Instance {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n_s = rng.random_range(3..=12);
    let n_a = rng.random_range(2..=3);
    let n_u = rng.random_range(1..=n_s.min(6));
    let density = [0.5, 1.0][rng.random_range(0..2)];
    let mdp = gen_random_mdp(n_s, n_a, density, rng.random_range(0.5..0.95), seed).unwrap();
    let theta = PolicyParams { theta: DMatrix::from_fn(n_s, n_a, |_, _| rng.random_range(-1.0..1.0)) };
    let omega = EncodingParams { omega: DMatrix::from_fn(n_u, n_s, |_, _| rng.random_range(-2.0..2.0)) };
    let raw = DVector::from_fn(n_u, |_, _| rng.random_range(0.1..1.0));
    let xi_u = &raw / raw.sum();
    Instance { mdp, theta, omega, xi_u }
}

fn j_u(mdp: &homomorphic_mdp::GroundMdp, policy: &PolicyMatrix, enc: &EncodingMatrix, xi_u: &DVector<f64>) -> f64 {
    HomomorphicChain::build(mdp, policy, enc).unwrap().performance(xi_u).unwrap()
}

#[test]
fn value_gradient_matches_central_differences() {
    for seed in 0..60 {
        let inst = instance(seed);
        let enc = inst.omega.encoding().unwrap();
        let grad = grad_value_theta(&inst.mdp, &inst.theta, &enc, &inst.xi_u).unwrap();
        let f = |t: &DMatrix<f64>| Ok(j_u(&inst.mdp, &PolicyParams { theta: t.clone() }.policy()?, &enc, &inst.xi_u));
        let report = finite_difference_check(f, &inst.theta.theta, &grad.objective, H).unwrap();
        assert!(report.max_rel_error <= REL_TOL, "seed {seed}: {report:?}");
        for (u, per_state) in grad.per_state.iter().enumerate() {
            let f = |t: &DMatrix<f64>| {
                let chain = HomomorphicChain::build(&inst.mdp, &PolicyParams { theta: t.clone() }.policy()?, &enc)?;
                Ok(chain.abstract_values()[u])
            };
            let report = finite_difference_check(f, &inst.theta.theta, per_state, H).unwrap();
            assert!(report.max_rel_error <= REL_TOL, "seed {seed} u {u}: {report:?}");
        }
    }
}

#[test]
fn objective_theta_gradient_matches_central_differences() {
    for seed in 100..160 {
        let inst = instance(seed);
        let enc = inst.omega.encoding().unwrap();
        let grad = grad_objective_theta(&inst.mdp, &inst.theta, &enc, &inst.xi_u).unwrap();
        let f = |t: &DMatrix<f64>| {
            let policy = PolicyParams { theta: t.clone() }.policy()?;
            Ok(objective_gradients(&inst.mdp, &policy, &enc, &inst.xi_u, false, false)?.value)
        };
        let report = finite_difference_check(f, &inst.theta.theta, grad.theta.as_ref().unwrap(), H).unwrap();
        assert!(report.max_rel_error <= REL_TOL, "seed {seed}: {report:?}");
    }
}

#[test]
fn objective_omega_gradient_matches_central_differences() {
    for seed in 200..260 {
        let inst = instance(seed);
        let policy = inst.theta.policy().unwrap();
        let grad = grad_objective_omega(&inst.mdp, &policy, &inst.omega, &inst.xi_u).unwrap();
        let f = |w: &DMatrix<f64>| {
            let enc = EncodingParams { omega: w.clone() }.encoding()?;
            Ok(objective_gradients(&inst.mdp, &policy, &enc, &inst.xi_u, false, false)?.value)
        };
        let report = finite_difference_check(f, &inst.omega.omega, grad.omega.as_ref().unwrap(), H).unwrap();
        assert!(report.max_rel_error <= REL_TOL, "seed {seed}: {report:?}");
    }
}

#[test]
fn pseudoinverse_derivative_matches_entrywise_differences() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for _ in 0..20 {
        let p = softmax_rows(&DMatrix::from_fn(2, 4, |_, _| rng.random_range(-1.0..1.0))).unwrap();
        for s in 0..4 {
            for u in 0..2 {
                let analytic = pseudoinverse_derivative(&p, s, u).unwrap();
                let mut f = |m: &DMatrix<f64>| Ok(right_pseudoinverse(m)?[(s, u)]);
                let numeric = numeric_gradient(&mut f, &p, 1e-6).unwrap();
                assert!((analytic - numeric).amax() <= 1e-6);
            }
        }
    }
}

#[test]
fn softmax_gradients_conserve_probability() {
    let inst = instance(7);
    let enc = inst.omega.encoding().unwrap();
    let policy = inst.theta.policy().unwrap();
    let grads = objective_gradients(&inst.mdp, &policy, &enc, &inst.xi_u, true, true).unwrap();
    // a constant shift of a logit row leaves the softmax unchanged
    for row in grads.theta.unwrap().row_iter().chain(grads.omega.unwrap().row_iter()) {
        assert!(row.sum().abs() <= 1e-12 * (1.0 + row.amax()));
    }
}
