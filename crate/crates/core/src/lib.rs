//! Deterministic simulator and library for privacy-aware task allocation
//! in social-sensing edge computing: a bottom-up allocation game with
//! bounded negotiation, adaptive reward control, uncertainty-aware load
//! balancing, per-user privacy cloaking, and a set of baseline schemes
//! measured over the same execution path.

pub mod balance;
pub mod engine;
pub mod game;
pub mod model;
pub mod negotiation;
pub mod privacy;
pub mod report;
pub mod reward;
pub mod rng;
pub mod scenario;
pub(crate) mod schemes;

pub use engine::{dhr_at_deadline, run_scheme, NetworkModel, RunResult, RunSummary, Scheme};
pub use model::{CycleMetrics, DeviceId, DeviceState, EdgeServer, Point, ServerId, Task, TaskId};
pub use scenario::{ScenarioConfig, ScenarioError};

#[cfg(test)]
pub(crate) mod test_support;
