//! Linear contextual bandits: the single-node learner, GOB.Lin, and the
//! IND/SIN/MACRO/BLOCK configurations built from them.

mod goblin;
mod runner;
mod state;

pub use goblin::{GobLin, Grouping};
pub use runner::{Algorithm, Runner, RunnerOptions};
pub use state::{BanditState, ConfidencePolicy};

/// One round's request: the served user and its candidate contexts.
#[derive(Debug, Clone, PartialEq)]
pub struct ContextEvent {
    pub t: u64,
    pub user: usize,
    pub candidates: Vec<Vec<f64>>,
}
