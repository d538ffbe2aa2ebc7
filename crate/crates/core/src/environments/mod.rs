//! Seeded generators for the benchmark model families.

mod four_room;
mod mixture;
mod random;
mod spec;
mod tandem;
mod weakly_coupled;
mod worked_example;

pub use four_room::{gen_four_room, FourRoomLayout, MOVES, SUCCESS_PROB};
pub use mixture::gen_mixture_mdp;
pub use random::{gen_random_mdp, support_size};
pub use spec::EnvSpec;
pub use tandem::{gen_tandem_queue, QueueActions, TandemQueueParams};
pub use weakly_coupled::gen_weakly_coupled;
pub use worked_example::{k3, two_basis_mdp, K1, K2};
