//! Heterogeneous-impact batch Minority Game.
//!
//! Agents are split into groups with their own impact on the aggregate
//! outcome. The crate solves the stationary state of this game in closed
//! form ([`replica`]), simulates it directly ([`sim`]), scores it with
//! impact utilities ([`economics`]) and sweeps two-group phase diagrams
//! ([`phaselab`]).

pub mod economics;
pub mod model;
pub mod phaselab;
pub mod replica;
pub mod roots;
pub mod sim;

pub use economics::{profit, utility_eval, ProfitReport, UtilitySpec};
pub use model::{build_config, two_group_config, GameConfig, GroupSpec, GroupVector};
pub use replica::{critical_point, observables, solve_zeta, CriticalPoint, ReplicaSolution};
