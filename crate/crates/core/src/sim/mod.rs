//! Deterministic packet-level discrete-event simulation.

pub mod engine;
pub mod scenario;
pub mod time;

/// Node identifier, dense in `0..node_count`.
pub type NodeId = u32;

pub use engine::{SimResult, Simulator};
pub use scenario::{Blackout, CbrFlow, Placement, ProtocolParams, RadioModel, ScenarioConfig};
pub use time::SimTime;
