//! Planning core: workflow graphs, agent matching, scheduling scenarios,
//! the meta-planner, the temporal runtime and TSP solvers.

pub mod agents;
pub mod clock;
pub mod tsp;
pub mod planner;
pub mod runtime;
pub mod scenario;
pub mod workflow;
