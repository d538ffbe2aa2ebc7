use crate::error::Result;
use crate::mdp::GroundMdp;

pub const K1: [f64; 4] = [0.7, 0.1, 0.1, 0.1];
pub const K2: [f64; 4] = [0.1, 0.2, 0.3, 0.4];

fn blend(w1: f64) -> Vec<f64> {
    K1.iter().zip(&K2).map(|(a, b)| w1 * a + (1.0 - w1) * b).collect()
}

/// Four states, two actions, every transition row a convex combination of
/// the two distributions `K1` and `K2`. Two pairs use the even blend
/// `k3 = 0.5 K1 + 0.5 K2`, which differs from both. Transition rank is 2.
pub fn two_basis_mdp(gamma: f64) -> Result<GroundMdp> {
    let t = vec![
        vec![blend(1.0), blend(0.0)],
        vec![blend(0.5), blend(0.8)],
        vec![blend(0.3), blend(0.5)],
        vec![blend(0.0), blend(1.0)],
    ];
    let r = vec![vec![0.0, 1.0], vec![0.5, 0.2], vec![0.3, 0.9], vec![1.0, 0.0]];
    GroundMdp::from_nested(&t, &r, gamma)
}

/// The even blend of the two basis distributions.
pub fn k3() -> Vec<f64> {
    blend(0.5)
}
