use std::collections::VecDeque;

use homomorphic_mdp::environments::{
    gen_four_room, gen_mixture_mdp, gen_random_mdp, gen_tandem_queue, gen_weakly_coupled, two_basis_mdp, EnvSpec,
    FourRoomLayout, QueueActions, TandemQueueParams,
};
use homomorphic_mdp::GroundMdp;

fn assert_stochastic(mdp: &GroundMdp) {
    let n = mdp.n_states();
    for s in 0..n {
        for a in 0..mdp.n_actions() {
            let row = mdp.row(s, a);
            assert!(row.iter().all(|&p| p >= 0.0));
            assert!((row.iter().sum::<f64>() - 1.0).abs() <= 1e-12, "row ({s},{a})");
        }
    }
}

fn queue(actions: QueueActions) -> TandemQueueParams {
    TandemQueueParams {
        q1_cap: 4,
        q2_cap: 4,
        max_servers: 2,
        arrival_rate: 0.6,
        service_rates: [0.4, 0.5],
        holding_costs: [1.0, 2.0],
        server_cost: 0.5,
        actions,
        gamma: 0.95,
    }
}

#[test]
fn random_support_sizes() {
    for (density, expected) in [(0.1, 10), (0.5, 50), (1.0, 100)] {
        let mdp = gen_random_mdp(100, 3, density, 0.9, 4).unwrap();
        assert_stochastic(&mdp);
        for s in 0..100 {
            for a in 0..3 {
                assert_eq!(mdp.row(s, a).iter().filter(|&&p| p > 0.0).count(), expected);
            }
        }
        assert!(mdp.rewards().iter().all(|r| (0.0..=1.0).contains(r)));
    }
    assert!(gen_random_mdp(10, 2, 0.0, 0.9, 0).is_err());
    assert!(gen_random_mdp(10, 2, 1.5, 0.9, 0).is_err());
    assert!(gen_random_mdp(10, 2, 0.05, 0.9, 0).is_err());
}

#[test]
fn generators_are_deterministic() {
    let a = gen_random_mdp(30, 4, 0.3, 0.9, 11).unwrap();
    assert_eq!(a, gen_random_mdp(30, 4, 0.3, 0.9, 11).unwrap());
    assert_ne!(a, gen_random_mdp(30, 4, 0.3, 0.9, 12).unwrap());
    let w = gen_weakly_coupled(3, 5, 2, 0.1, 0.9, 3).unwrap();
    assert_eq!(w, gen_weakly_coupled(3, 5, 2, 0.1, 0.9, 3).unwrap());
    let m = gen_mixture_mdp(20, 3, 4, 0.9, 8).unwrap();
    assert_eq!(m, gen_mixture_mdp(20, 3, 4, 0.9, 8).unwrap());
    assert_eq!(gen_four_room(9, 0.9).unwrap(), gen_four_room(9, 0.9).unwrap());
}

#[test]
fn weakly_coupled_mass_accounting() {
    let inter = 0.15;
    let mdp = gen_weakly_coupled(2, 3, 2, inter, 0.9, 21).unwrap();
    assert_stochastic(&mdp);
    for s in 0..6 {
        for a in 0..2 {
            let row = mdp.row(s, a);
            let outside: f64 = (0..6).filter(|&t| t / 3 != s / 3).map(|t| row[t]).sum();
            assert!((outside - inter).abs() <= 1e-12, "({s},{a}) leaks {outside}");
            assert!((0..6).filter(|&t| t / 3 != s / 3 && row[t] > 0.0).count() <= 2);
        }
    }
}

#[test]
fn weakly_coupled_without_leak_is_block_diagonal() {
    let mdp = gen_weakly_coupled(4, 5, 3, 0.0, 0.9, 2).unwrap();
    for s in 0..20 {
        for a in 0..3 {
            for (t, &p) in mdp.row(s, a).iter().enumerate() {
                if t / 5 != s / 5 {
                    assert_eq!(p, 0.0);
                }
            }
        }
    }
    assert!(gen_weakly_coupled(2, 3, 2, 0.5, 0.9, 0).is_err());
}

#[test]
fn four_room_rows_and_walls() {
    for side in [4, 5, 9, 10, 13] {
        let layout = FourRoomLayout::new(side).unwrap();
        let mdp = gen_four_room(side, 0.9).unwrap();
        assert_eq!(mdp.n_states(), side * side);
        assert_eq!(mdp.n_actions(), 4);
        assert_stochastic(&mdp);
        for row in 0..side {
            for col in 0..side {
                let s = layout.index(row, col);
                if s == layout.goal() {
                    continue;
                }
                for a in 0..4 {
                    let p = mdp.row(s, a);
                    match layout.step(row, col, a) {
                        None => assert_eq!(p[s], 1.0),
                        Some((r, c)) => {
                            assert_eq!(p[layout.index(r, c)], 0.8);
                            assert!((p[s] - 0.2).abs() < 1e-15);
                        }
                    }
                    assert_eq!(mdp.reward(s, a), 0.0);
                }
            }
        }
        for a in 0..4 {
            assert_eq!(mdp.row(layout.goal(), a)[layout.start()], 1.0);
            assert_eq!(mdp.reward(layout.goal(), a), 1.0);
        }
    }
    assert!(gen_four_room(3, 0.9).is_err());
}

#[test]
fn four_room_goal_reachable_from_every_cell() {
    for side in [4, 7, 10, 16] {
        let mdp = gen_four_room(side, 0.9).unwrap();
        let n = mdp.n_states();
        let goal = n - 1;
        // reverse BFS over positive-probability edges
        let mut seen = vec![false; n];
        seen[goal] = true;
        let mut queue = VecDeque::from([goal]);
        while let Some(t) = queue.pop_front() {
            for s in 0..n {
                if !seen[s] && (0..4).any(|a| mdp.row(s, a)[t] > 0.0) {
                    seen[s] = true;
                    queue.push_back(s);
                }
            }
        }
        assert!(seen.iter().all(|&x| x), "side {side}");
        // the walls actually cut something: four rooms, not an open grid
        let layout = FourRoomLayout::new(side).unwrap();
        let h = side / 2;
        let blocked = (0..side).filter(|&r| layout.step(r, h - 1, 2).is_none()).count();
        assert_eq!(blocked, side - 2);
    }
}

#[test]
fn tandem_queue_rows_sum_to_one() {
    for actions in [QueueActions::Joint, QueueActions::Synchronized] {
        let params = queue(actions);
        let mdp = gen_tandem_queue(&params).unwrap();
        assert_eq!(mdp.n_states(), params.n_states());
        assert_eq!(mdp.n_states(), 100);
        assert_eq!(mdp.n_actions(), if actions == QueueActions::Joint { 9 } else { 3 });
        assert_stochastic(&mdp);
        assert!(mdp.rewards().iter().all(|r| (0.0..=1.0).contains(r)));
    }
}

#[test]
fn tandem_queue_without_arrivals_absorbs_when_empty() {
    let params = TandemQueueParams { arrival_rate: 0.0, ..queue(QueueActions::Joint) };
    let mdp = gen_tandem_queue(&params).unwrap();
    for k1 in 1..=2 {
        for k2 in 1..=2 {
            let s = params.index(0, 0, k1, k2);
            // keep both server counts: action (keep, keep) = 3 * 1 + 1
            assert_eq!(mdp.row(s, 4)[s], 1.0);
        }
    }
    assert!(gen_tandem_queue(&TandemQueueParams { arrival_rate: 1.0, ..params.clone() }).is_err());
    assert!(gen_tandem_queue(&TandemQueueParams { q1_cap: 0, ..params }).is_err());
}

#[test]
fn env_spec_round_trip() {
    let specs = [
        EnvSpec::Random { n_states: 8, n_actions: 2, density: 0.5, gamma: 0.9, seed: 1 },
        EnvSpec::WeaklyCoupled { n_clusters: 2, cluster_size: 4, n_actions: 2, inter_prob: 0.1, gamma: 0.9, seed: 1 },
        EnvSpec::FourRoom { side: 6, gamma: 0.9 },
        EnvSpec::TandemQueue(queue(QueueActions::Synchronized)),
        EnvSpec::Mixture { n_states: 8, n_actions: 2, n_prototypes: 3, gamma: 0.9, seed: 1 },
        EnvSpec::TwoBasis { gamma: 0.9 },
    ];
    for spec in specs {
        let text = serde_json::to_string(&spec).unwrap();
        let back: EnvSpec = serde_json::from_str(&text).unwrap();
        assert_eq!(back, spec);
        let mdp = spec.build().unwrap();
        assert_stochastic(&mdp);
        assert_eq!(GroundMdp::from_json(&mdp.to_json().unwrap()).unwrap(), mdp);
    }
    assert_eq!(two_basis_mdp(0.9).unwrap().n_states(), 4);
}
