use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mdp::GroundMdp;

/// Server adjustments: remove one, keep, add one.
const DELTAS: [isize; 3] = [-1, 0, 1];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum QueueActions {
    /// Independent choice per queue, 9 actions (`a = 3 * a1 + a2`).
    #[default]
    Joint,
    /// The same adjustment applied to both queues, 3 actions.
    Synchronized,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TandemQueueParams {
    pub q1_cap: usize,
    pub q2_cap: usize,
    pub max_servers: usize,
    pub arrival_rate: f64,
    /// Per-server completion probability per slot.
    pub service_rates: [f64; 2],
    /// Holding cost per waiting job, per queue.
    pub holding_costs: [f64; 2],
    pub server_cost: f64,
    #[serde(default)]
    pub actions: QueueActions,
    pub gamma: f64,
}

impl TandemQueueParams {
    pub fn n_states(&self) -> usize {
        (self.q1_cap + 1) * (self.q2_cap + 1) * self.max_servers * self.max_servers
    }

    pub fn n_actions(&self) -> usize {
        match self.actions {
            QueueActions::Joint => 9,
            QueueActions::Synchronized => 3,
        }
    }

    /// State index of `(len1, len2, servers1, servers2)`, servers counted from 1.
    pub fn index(&self, l1: usize, l2: usize, k1: usize, k2: usize) -> usize {
        let m = self.max_servers;
        ((l1 * (self.q2_cap + 1) + l2) * m + (k1 - 1)) * m + (k2 - 1)
    }

    fn validate(&self) -> Result<()> {
        if self.q1_cap == 0 || self.q2_cap == 0 || self.max_servers == 0 {
            return Err(Error::InvalidParameter("queue capacities and server limit must be at least 1".into()));
        }
        if !(0.0..1.0).contains(&self.arrival_rate) {
            return Err(Error::InvalidParameter(format!("arrival rate {} outside [0, 1)", self.arrival_rate)));
        }
        if self.service_rates.iter().any(|&m| !(m > 0.0 && m <= 1.0)) {
            return Err(Error::InvalidParameter(format!("service rates {:?} outside (0, 1]", self.service_rates)));
        }
        if self.holding_costs.iter().chain([&self.server_cost]).any(|&c| !(c >= 0.0 && c.is_finite())) {
            return Err(Error::InvalidParameter("costs must be finite and non-negative".into()));
        }
        Ok(())
    }

    fn deltas(&self, a: usize) -> (isize, isize) {
        match self.actions {
            QueueActions::Joint => (DELTAS[a / 3], DELTAS[a % 3]),
            QueueActions::Synchronized => (DELTAS[a], DELTAS[a]),
        }
    }
}

/// Two queues in series, one slot per step.
///
/// The action first adjusts each queue's server count within
/// `1..=max_servers`. Then, independently: a job arrives at queue 1 with
/// probability `arrival_rate`; queue `i` completes one job with probability
/// `1 - (1 - mu_i)^busy_i`, `busy_i = min(servers_i, len_i)`. Completions at
/// queue 1 join queue 2; arrivals to a full queue are lost. The reward is
/// `1 - cost / max_cost` with `cost = h1 len1 + h2 len2 + c (servers1 + servers2)`
/// measured on the current lengths and the adjusted servers.
pub fn gen_tandem_queue(params: &TandemQueueParams) -> Result<GroundMdp> {
    params.validate()?;
    let p = params;
    let n = p.n_states();
    let n_a = p.n_actions();
    let m = p.max_servers;
    let max_cost =
        p.holding_costs[0] * p.q1_cap as f64 + p.holding_costs[1] * p.q2_cap as f64 + p.server_cost * (2 * m) as f64;
    let mut transitions = vec![0.0; n * n_a * n];
    let mut rewards = vec![0.0; n * n_a];

    for l1 in 0..=p.q1_cap {
        for l2 in 0..=p.q2_cap {
            for k1 in 1..=m {
                for k2 in 1..=m {
                    let s = p.index(l1, l2, k1, k2);
                    for a in 0..n_a {
                        let (d1, d2) = p.deltas(a);
                        let k1n = k1.saturating_add_signed(d1).clamp(1, m);
                        let k2n = k2.saturating_add_signed(d2).clamp(1, m);
                        let serve1 = 1.0 - (1.0 - p.service_rates[0]).powi(k1n.min(l1) as i32);
                        let serve2 = 1.0 - (1.0 - p.service_rates[1]).powi(k2n.min(l2) as i32);
                        let row = &mut transitions[(s * n_a + a) * n..(s * n_a + a + 1) * n];
                        for (arrive, pa) in [(1, p.arrival_rate), (0, 1.0 - p.arrival_rate)] {
                            for (done1, p1) in [(1, serve1), (0, 1.0 - serve1)] {
                                for (done2, p2) in [(1, serve2), (0, 1.0 - serve2)] {
                                    let prob = pa * p1 * p2;
                                    if prob == 0.0 {
                                        continue;
                                    }
                                    let n1 = (l1 - done1 + arrive).min(p.q1_cap);
                                    let n2 = (l2 - done2 + done1).min(p.q2_cap);
                                    row[p.index(n1, n2, k1n, k2n)] += prob;
                                }
                            }
                        }
                        let cost = p.holding_costs[0] * l1 as f64
                            + p.holding_costs[1] * l2 as f64
                            + p.server_cost * (k1n + k2n) as f64;
                        rewards[s * n_a + a] = if max_cost > 0.0 { 1.0 - cost / max_cost } else { 1.0 };
                    }
                }
            }
        }
    }
    GroundMdp::new(n, n_a, transitions, rewards, p.gamma)
}
