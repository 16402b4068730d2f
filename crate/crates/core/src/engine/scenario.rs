//! Scenario files: config, shape and a script of timed commands.
//!
//! ```toml
//! schema_version = 1
//! steps = 40
//!
//! [config]
//! robot_count = 30
//! initial = "settled"
//!
//! [shape]
//! boxes = [[0, 0], [0, 1], [1, 1]]
//! entry = [0, 3]
//! exit = [0, 2]
//!
//! [[script]]
//! step = 2
//! add = [1, 0]
//! ```

use std::collections::VecDeque;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::config::SimConfig;
use super::trace::Trace;
use super::world::{SimError, SimWorld};
use crate::agent::{ChangeType, Method};
use crate::lattice::{BoxId, Shape};

pub const SCENARIO_SCHEMA_VERSION: u32 = 1;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Command {
    Add(BoxId),
    Remove(BoxId),
    /// Secondary-change method for later changes.
    Method(Method),
}

/// A command issued once step `step` has completed.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ScriptEntry {
    pub step: u64,
    #[serde(flatten)]
    pub command: Command,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    pub schema_version: u32,
    /// Minimum number of steps to run.
    pub steps: u64,
    /// Hard cap when the run is extended to finish pending changes.
    #[serde(default)]
    pub max_steps: Option<u64>,
    #[serde(default)]
    pub config: SimConfig,
    pub shape: Shape,
    #[serde(default)]
    pub script: Vec<ScriptEntry>,
}

#[derive(Debug, Error)]
pub enum ScenarioError {
    #[error("scenario parse error: {0}")]
    Parse(#[from] toml::de::Error),
    #[error("scenario schema_version {0} is not supported")]
    Schema(u32),
    #[error("script steps must not decrease (entry {0})")]
    ScriptOrder(usize),
    #[error("{pending} command(s) still pending after {steps} steps")]
    Timeout { steps: u64, pending: usize },
    #[error(transparent)]
    Sim(#[from] SimError),
}

impl Scenario {
    pub fn from_toml(s: &str) -> Result<Scenario, ScenarioError> {
        let sc: Scenario = toml::from_str(s)?;
        sc.check()?;
        Ok(sc)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("scenarios serialize")
    }

    fn check(&self) -> Result<(), ScenarioError> {
        if self.schema_version != SCENARIO_SCHEMA_VERSION {
            return Err(ScenarioError::Schema(self.schema_version));
        }
        if let Some(i) = self.script.windows(2).position(|w| w[1].step < w[0].step) {
            return Err(ScenarioError::ScriptOrder(i + 1));
        }
        Ok(())
    }

    /// Runs the scenario and returns the final world.
    ///
    /// Changes that cannot start yet (another change is active, or the shape
    /// is not full) wait for the next step boundary, keeping script order.
    /// After `steps`, the run continues until the script is drained and the
    /// last change is resolved, up to `max_steps`.
    pub fn run_world(&self) -> Result<SimWorld, ScenarioError> {
        self.check()?;
        let mut w = SimWorld::new(self.config.clone(), self.shape.clone())?;
        let mut queue: VecDeque<ScriptEntry> = self.script.iter().copied().collect();
        let cap = self.max_steps.unwrap_or(self.steps.saturating_mul(10).max(self.steps + 1000));
        loop {
            while let Some(e) = queue.front().copied().filter(|e| e.step <= w.step_index()) {
                let res = match e.command {
                    Command::Add(b) => w.inject_change(ChangeType::Add, b).map(|_| ()),
                    Command::Remove(b) => w.inject_change(ChangeType::Subtract, b).map(|_| ()),
                    Command::Method(m) => {
                        w.set_method(m);
                        Ok(())
                    }
                };
                match res {
                    Ok(()) => {
                        queue.pop_front();
                    }
                    Err(err) if err.is_transient() => break,
                    Err(err) => return Err(SimError::from(err).into()),
                }
            }
            let busy = !queue.is_empty() || w.active_change().is_some();
            if w.step_index() >= self.steps && !busy {
                return Ok(w);
            }
            if w.step_index() >= cap {
                return Err(ScenarioError::Timeout { steps: cap, pending: queue.len() });
            }
            w.step()?;
        }
    }
}

/// Runs `scenario` to completion and returns its trace.
pub fn run_scenario(scenario: &Scenario) -> Result<Trace, ScenarioError> {
    Ok(scenario.run_world()?.into_trace())
}

impl Scenario {
    pub fn new(config: SimConfig, shape: Shape, steps: u64) -> Scenario {
        Scenario {
            schema_version: SCENARIO_SCHEMA_VERSION,
            steps,
            max_steps: None,
            config,
            shape,
            script: Vec::new(),
        }
    }
}
