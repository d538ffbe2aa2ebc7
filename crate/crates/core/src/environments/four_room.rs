use crate::error::{Error, Result};
use crate::mdp::GroundMdp;

pub const SUCCESS_PROB: f64 = 0.8;

/// North, south, east, west as `(d_row, d_col)`.
pub const MOVES: [(isize, isize); 4] = [(-1, 0), (1, 0), (0, 1), (0, -1)];

/// A `side x side` grid split into four rooms by walls running between
/// cells.
///
/// With `h = side / 2`, a vertical wall separates columns `h - 1` and `h`
/// and a horizontal wall separates rows `h - 1` and `h`. Each of the four
/// half-walls has one doorway at its middle cell. The start is the top-left
/// corner and the goal the bottom-right corner. Every cell is a state, so
/// `|S| = side^2`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct FourRoomLayout {
    side: usize,
}

impl FourRoomLayout {
    pub fn new(side: usize) -> Result<Self> {
        if side < 4 {
            return Err(Error::InvalidParameter(format!("four-room side {side} is below 4")));
        }
        Ok(Self { side })
    }

    pub fn side(&self) -> usize {
        self.side
    }

    pub fn n_states(&self) -> usize {
        self.side * self.side
    }

    pub fn index(&self, row: usize, col: usize) -> usize {
        row * self.side + col
    }

    pub fn start(&self) -> usize {
        0
    }

    pub fn goal(&self) -> usize {
        self.n_states() - 1
    }

    fn half(&self) -> usize {
        self.side / 2
    }

    /// Doorway positions along a wall: one in each half.
    fn doorways(&self) -> [usize; 2] {
        let h = self.half();
        [(h - 1) / 2, h + (self.side - h - 1) / 2]
    }

    /// Target cell of a move, or `None` if it leaves the grid or hits a wall.
    pub fn step(&self, row: usize, col: usize, action: usize) -> Option<(usize, usize)> {
        let (dr, dc) = MOVES[action];
        let r = row.checked_add_signed(dr).filter(|&r| r < self.side)?;
        let c = col.checked_add_signed(dc).filter(|&c| c < self.side)?;
        let h = self.half();
        let doors = self.doorways();
        // crossing the vertical wall between columns h-1 and h
        if dc != 0 && col.min(c) == h - 1 && !doors.contains(&row) {
            return None;
        }
        if dr != 0 && row.min(r) == h - 1 && !doors.contains(&col) {
            return None;
        }
        Some((r, c))
    }

    /// Room index 0..4 of a cell (top-left, top-right, bottom-left, bottom-right).
    pub fn room(&self, row: usize, col: usize) -> usize {
        let h = self.half();
        2 * usize::from(row >= h) + usize::from(col >= h)
    }
}

/// Continuing four-room gridworld. Moves succeed with probability 0.8 and
/// otherwise leave the agent in place; moves into a wall or off the grid
/// always stay. From the goal every action returns to the start with reward
/// 1, all other rewards are 0.
pub fn gen_four_room(side: usize, gamma: f64) -> Result<GroundMdp> {
    let layout = FourRoomLayout::new(side)?;
    let n = layout.n_states();
    let mut transitions = vec![0.0; n * 4 * n];
    let mut rewards = vec![0.0; n * 4];
    for row in 0..side {
        for col in 0..side {
            let s = layout.index(row, col);
            for a in 0..4 {
                let out = &mut transitions[(s * 4 + a) * n..(s * 4 + a + 1) * n];
                if s == layout.goal() {
                    out[layout.start()] = 1.0;
                    rewards[s * 4 + a] = 1.0;
                    continue;
                }
                match layout.step(row, col, a) {
                    Some((r, c)) => {
                        out[layout.index(r, c)] = SUCCESS_PROB;
                        out[s] = 1.0 - SUCCESS_PROB;
                    }
                    None => out[s] = 1.0,
                }
            }
        }
    }
    GroundMdp::new(n, 4, transitions, rewards, gamma)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sizes() {
        assert_eq!(FourRoomLayout::new(10).unwrap().n_states(), 100);
        assert_eq!(FourRoomLayout::new(80).unwrap().n_states(), 6400);
        assert!(FourRoomLayout::new(3).is_err());
    }

    #[test]
    fn wall_and_open_moves() {
        let mdp = gen_four_room(10, 0.9).unwrap();
        let layout = FourRoomLayout::new(10).unwrap();
        // north from the top row stays put
        assert_eq!(mdp.row(layout.index(0, 3), 0)[layout.index(0, 3)], 1.0);
        // (0,4) -> (0,5) crosses the vertical wall away from its doorway
        assert_eq!(mdp.row(layout.index(0, 4), 2)[layout.index(0, 4)], 1.0);
        // (2,4) -> (2,5) is the doorway
        let row = mdp.row(layout.index(2, 4), 2);
        assert_eq!(row[layout.index(2, 5)], 0.8);
        assert!((row[layout.index(2, 4)] - 0.2).abs() < 1e-15);
        assert_eq!(mdp.row(layout.goal(), 1)[0], 1.0);
        assert_eq!(mdp.reward(layout.goal(), 3), 1.0);
    }
}
