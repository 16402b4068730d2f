//! Lockstep simulation: communication rounds, synchronized motion, the
//! charging station and its travel legs, change injection, and traces.

mod config;
mod hints;
mod motion;
mod protocol;
mod scenario;
mod trace;
mod world;

pub use config::{ConfigError, Initial, SimConfig};
pub use hints::{ChangeHints, Led};
pub use scenario::{run_scenario, Command, Scenario, ScenarioError, ScriptEntry, SCENARIO_SCHEMA_VERSION};
pub use trace::{
    ChangeRecord, ChangeStatus, Event, Location, MessageRecord, RobotRecord, StepRecord, Trace,
    TraceError, TraceHeader, TraceLine, TRACE_SCHEMA_VERSION,
};
pub use world::{ChangeError, ChangeEvent, Robot, SimError, SimWorld};
