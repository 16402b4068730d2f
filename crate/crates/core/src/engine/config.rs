//! Simulation parameters.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::agent::Method;
use crate::lattice::{GridSpec, Shape};

/// How robots are placed at step zero.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Initial {
    /// Shape empty; `queue_len` robots wait at the entry, the rest charge.
    Queue,
    /// Every node occupied as if the swarm had been cycling forever; then
    /// `queue_len` robots wait at the entry and the rest charge.
    Settled,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SimConfig {
    pub edge_length: f64,
    /// Seconds per motion step.
    pub tau: f64,
    pub comm_rounds_per_step: usize,
    /// Upper bound on shape size over the whole run.
    pub max_boxes: usize,
    pub station_slots: usize,
    /// Waypoints from the exit to the station.
    pub out_leg: usize,
    /// Waypoints from the station to the entry.
    pub in_leg: usize,
    pub robot_count: usize,
    pub charge_steps: u32,
    pub rng_seed: u64,
    pub method: Method,
    pub initial: Initial,
    pub queue_len: usize,
    pub record_messages: bool,
}

impl Default for SimConfig {
    fn default() -> Self {
        SimConfig {
            edge_length: 0.2,
            tau: 12.0,
            comm_rounds_per_step: 256,
            max_boxes: 64,
            station_slots: 22,
            out_leg: 3,
            in_leg: 3,
            robot_count: 38,
            charge_steps: 10,
            rng_seed: 0,
            method: Method::CommunicationBased,
            initial: Initial::Queue,
            queue_len: 16,
            record_messages: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ConfigError {
    #[error("comm_rounds_per_step = {got} is below {need} (4 x max_boxes)")]
    CommRoundsTooLow { got: usize, need: usize },
    #[error("shape has {boxes} boxes but max_boxes = {max}")]
    ShapeTooLarge { boxes: usize, max: usize },
    #[error("{needed} robots must start in the station but it has {slots} slots")]
    StationOverflow { needed: usize, slots: usize },
    #[error("{robots} robots cannot fill the initial placement of {needed}")]
    TooFewRobots { robots: usize, needed: usize },
    #[error("{0} must be positive")]
    NonPositive(&'static str),
}

impl SimConfig {
    pub fn grid(&self) -> GridSpec {
        GridSpec::new(self.edge_length)
    }

    /// Robots placed in the shape or queue at step zero.
    pub fn placed_outside_station(&self, shape: &Shape) -> usize {
        match self.initial {
            Initial::Queue => self.queue_len,
            Initial::Settled => shape.node_count() + self.queue_len,
        }
    }

    pub fn validate(&self, shape: &Shape) -> Result<(), ConfigError> {
        if self.edge_length.is_nan() || self.edge_length <= 0.0 {
            return Err(ConfigError::NonPositive("edge_length"));
        }
        if self.tau.is_nan() || self.tau <= 0.0 {
            return Err(ConfigError::NonPositive("tau"));
        }
        if self.out_leg == 0 {
            return Err(ConfigError::NonPositive("out_leg"));
        }
        if self.in_leg == 0 {
            return Err(ConfigError::NonPositive("in_leg"));
        }
        let need = 4 * self.max_boxes;
        if self.comm_rounds_per_step < need {
            return Err(ConfigError::CommRoundsTooLow { got: self.comm_rounds_per_step, need });
        }
        if shape.box_count() > self.max_boxes {
            return Err(ConfigError::ShapeTooLarge { boxes: shape.box_count(), max: self.max_boxes });
        }
        let placed = self.placed_outside_station(shape);
        let needed_placed = match self.initial {
            Initial::Queue => 0,
            Initial::Settled => shape.node_count(),
        };
        if self.robot_count < needed_placed {
            return Err(ConfigError::TooFewRobots { robots: self.robot_count, needed: needed_placed });
        }
        let in_station = self.robot_count.saturating_sub(placed);
        if in_station > self.station_slots {
            return Err(ConfigError::StationOverflow { needed: in_station, slots: self.station_slots });
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::shapes;

    #[test]
    fn defaults_fit_the_square() {
        SimConfig::default().validate(&shapes::square()).unwrap();
    }

    #[test]
    fn low_comm_rounds_rejected() {
        let c = SimConfig { comm_rounds_per_step: 10, ..SimConfig::default() };
        assert!(matches!(c.validate(&shapes::square()), Err(ConfigError::CommRoundsTooLow { .. })));
    }

    #[test]
    fn station_overflow() {
        let c = SimConfig { robot_count: 60, ..SimConfig::default() };
        assert_eq!(
            c.validate(&shapes::square()),
            Err(ConfigError::StationOverflow { needed: 44, slots: 22 })
        );
    }
}
