//! The simulated world and its step loop.

use std::collections::{BTreeMap, BTreeSet};
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::config::{ConfigError, Initial, SimConfig};
use super::trace::{
    ChangeRecord, ChangeStatus, Event, Location, MessageRecord, RobotRecord, StepRecord, Trace,
    TraceHeader, TRACE_SCHEMA_VERSION,
};
use crate::agent::{
    AddGeometry, ChangeNotice, ChangeType, MemoryMessage, MemoryState, Method,
    NextMove, Role, ShapeView, SubGeometry,
};
use crate::dfcp::dfcp_path;
use crate::lattice::{BoxId, Direction, Node, Shape, ShapeError};
use crate::path::{classify_path, DirectedEdge, Path, PathClass};

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Robot {
    pub id: u32,
    pub loc: Location,
    pub role: Role,
    pub memory: Option<MemoryState>,
    pub planned: Option<NextMove>,
    pub view: ShapeView,
    pub notice: Option<ChangeNotice>,
    /// Completed shape traversals.
    pub exits: u32,
    pub charge_left: u32,
    /// FIFO key while docked.
    pub docked_at: u64,
    pub(crate) dirty: bool,
}

impl Robot {
    pub fn node(&self) -> Option<Node> {
        self.loc.node()
    }

    /// Direction of the planned move, if it is a lattice move.
    pub fn heading(&self) -> Option<Direction> {
        let n = self.node()?;
        self.planned?.node().and_then(|t| n.direction_to(t))
    }

    pub(crate) fn mem(&self) -> &MemoryState {
        self.memory.as_ref().expect("in-shape robots carry memory")
    }
}

/// Why a change was refused. `code` is stable for wire protocols.
#[derive(Clone, Debug, PartialEq, Eq, Error, Serialize, Deserialize)]
#[serde(tag = "code", content = "detail")]
pub enum ChangeError {
    #[error("a change is already in progress")]
    ChangeInProgress,
    #[error("swarm is not settled: {0}")]
    NotSettled(String),
    #[error("resulting shape is invalid: {0}")]
    InvalidResultingShape(String),
    #[error("box {0} holds or borders the entry/exit side")]
    TouchesEntryExit(BoxId),
}

impl ChangeError {
    pub fn code(&self) -> &'static str {
        match self {
            ChangeError::ChangeInProgress => "ChangeInProgress",
            ChangeError::NotSettled(_) => "NotSettled",
            ChangeError::InvalidResultingShape(_) => "InvalidResultingShape",
            ChangeError::TouchesEntryExit(_) => "TouchesEntryExit",
        }
    }

    /// True for refusals that go away if the caller waits.
    pub fn is_transient(&self) -> bool {
        matches!(self, ChangeError::ChangeInProgress | ChangeError::NotSettled(_))
    }
}

#[derive(Debug, Error)]
pub enum SimError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Shape(#[from] ShapeError),
    #[error(transparent)]
    Change(#[from] ChangeError),
    #[error("invariant violated at step {step}: {detail}\n{dump}")]
    InvariantViolation { step: u64, detail: String, dump: String },
}

/// One injected change and everything learned about it.
#[derive(Clone, Debug)]
pub struct ChangeEvent {
    pub seq: u64,
    pub ct: ChangeType,
    pub target: BoxId,
    pub method: Method,
    pub injected_at: u64,
    pub status: ChangeStatus,
    pub old_shape: Arc<Shape>,
    pub new_shape: Arc<Shape>,
    pub n_cp: Option<Node>,
    pub scsn: Option<Node>,
    pub add_geo: Option<AddGeometry>,
    pub sub_geo: Option<SubGeometry>,
    pub post_primary: Option<PathClass>,
    pub final_class: Option<PathClass>,
    pub primary_done_at: Option<u64>,
    pub resolved_at: Option<u64>,
    pub change_robot: Option<u32>,
    pub(crate) chain: Option<MemoryMessage>,
    pub(crate) secondary_started: bool,
    pub(crate) inflection_detectors: Vec<u32>,
    pub(crate) scsn_detectors: Vec<u32>,
}

impl ChangeEvent {
    pub fn record(&self) -> ChangeRecord {
        ChangeRecord {
            seq: self.seq,
            ct: self.ct,
            target: self.target,
            status: self.status,
            method: self.method,
            injected_at: self.injected_at,
        }
    }
}

/// Lockstep simulation of the swarm, its station and its travel legs.
#[derive(Clone, Debug)]
pub struct SimWorld {
    pub config: SimConfig,
    pub(crate) shape: Arc<Shape>,
    pub(crate) version: u64,
    pub(crate) robots: Vec<Robot>,
    pub(crate) change: Option<ChangeEvent>,
    pub(crate) history: Vec<ChangeEvent>,
    pub(crate) step: u64,
    pub(crate) pending: Option<ChangeNotice>,
    pub(crate) trace: Trace,
    pub(crate) events: Vec<Event>,
    pub(crate) messages: Vec<MessageRecord>,
    pub(crate) method: Method,
}

impl SimWorld {
    /// Builds the world described by `config.initial`.
    pub fn new(config: SimConfig, shape: Shape) -> Result<Self, SimError> {
        config.validate(&shape)?;
        let view = ShapeView::new(0, shape.clone());
        let mut robots = Vec::with_capacity(config.robot_count);
        let mut next_id = 0u32;
        let mut spawn = |loc: Location, robots: &mut Vec<Robot>| {
            robots.push(Robot {
                id: next_id,
                loc,
                role: Role::Normal,
                memory: None,
                planned: None,
                view: view.clone(),
                notice: None,
                exits: 0,
                charge_left: 0,
                docked_at: 0,
                dirty: false,
            });
            next_id += 1;
        };
        if config.initial == Initial::Settled {
            // Ids count back from the exit.
            let walk = dfcp_path(&shape).walk();
            for i in (0..walk.len()).rev() {
                spawn(Location::Node(walk[i]), &mut robots);
                let r = robots.last_mut().unwrap();
                r.memory = Some(MemoryState::from_walk(&walk[..=i]));
            }
        }
        let in_shape = robots.len();
        let queued = config.queue_len.min(config.robot_count - in_shape);
        for k in 0..queued {
            spawn(Location::Queue(k), &mut robots);
        }
        for s in 0..config.robot_count - in_shape - queued {
            spawn(Location::Slot(s), &mut robots);
        }
        let method = config.method;
        let mut w = SimWorld {
            config,
            shape: Arc::new(shape),
            version: 0,
            robots,
            change: None,
            history: Vec::new(),
            step: 0,
            pending: None,
            trace: Trace::default(),
            events: Vec::new(),
            messages: Vec::new(),
            method,
        };
        for i in 0..w.robots.len() {
            w.replan(i).map_err(|e| w.violation(e))?;
        }
        w.trace.header = Some(TraceHeader {
            schema_version: TRACE_SCHEMA_VERSION,
            entry: w.shape.entry(),
            exit: w.shape.exit(),
            boxes: w.shape.boxes().iter().copied().collect(),
            robot_count: w.robots.len(),
            seed: w.config.rng_seed,
            config: w.config.clone(),
        });
        let rec = w.step_record();
        w.trace.steps.push(rec);
        Ok(w)
    }

    /// A world whose shape is already full, with `config.initial` forced to
    /// [`Initial::Settled`].
    pub fn settled(config: SimConfig, shape: Shape) -> Result<Self, SimError> {
        SimWorld::new(SimConfig { initial: Initial::Settled, ..config }, shape)
    }

    pub fn shape(&self) -> &Shape {
        &self.shape
    }

    pub fn shape_version(&self) -> u64 {
        self.version
    }

    pub fn step_index(&self) -> u64 {
        self.step
    }

    pub fn robots(&self) -> &[Robot] {
        &self.robots
    }

    pub fn active_change(&self) -> Option<&ChangeEvent> {
        self.change.as_ref()
    }

    /// Resolved changes, oldest first.
    pub fn change_history(&self) -> &[ChangeEvent] {
        &self.history
    }

    pub fn trace(&self) -> &Trace {
        &self.trace
    }

    pub fn into_trace(self) -> Trace {
        self.trace
    }

    pub fn method(&self) -> Method {
        self.method
    }

    /// Method used for the next injected change.
    pub fn set_method(&mut self, m: Method) {
        self.method = m;
    }

    pub(crate) fn robot_at(&self, n: Node) -> Option<usize> {
        self.robots.iter().position(|r| r.loc == Location::Node(n))
    }

    pub(crate) fn occupancy(&self) -> BTreeMap<Node, usize> {
        self.robots
            .iter()
            .enumerate()
            .filter_map(|(i, r)| r.node().map(|n| (n, i)))
            .collect()
    }

    /// The path formed by every in-shape robot's planned edge.
    pub fn planned_path(&self) -> Path {
        let edges = self.robots.iter().filter_map(|r| {
            let from = r.node()?;
            let to = r.planned?.node()?;
            Some(DirectedEdge::new(from, to))
        });
        Path::from_edges(self.shape.entry(), self.shape.exit(), edges)
    }

    pub fn classify_planned(&self) -> PathClass {
        classify_path(&self.shape, &self.planned_path())
    }

    /// Why a change could not start right now, if anything.
    pub fn unsettled_reason(&self) -> Option<String> {
        if self.change.is_some() || self.pending.is_some() {
            return Some("change in progress".into());
        }
        let occ = self.occupancy();
        if let Some(n) = self.shape.nodes().iter().find(|n| !occ.contains_key(n)) {
            return Some(format!("node {n} is empty"));
        }
        if let Some(r) = self.robots.iter().find(|r| r.node().is_some() && r.role != Role::Normal) {
            return Some(format!("robot {} still has role {:?}", r.id, r.role));
        }
        if let Some(r) = self.robots.iter().find(|r| r.node().is_some() && r.view.version != self.version) {
            return Some(format!("robot {} holds a stale shape view", r.id));
        }
        None
    }

    /// Whether a change would be accepted now, ignoring which box it names.
    pub fn changeable(&self) -> bool {
        self.unsettled_reason().is_none()
    }

    /// Checks a change without applying it; returns the resulting shape.
    pub fn check_change(&self, ct: ChangeType, b: BoxId) -> Result<Shape, ChangeError> {
        if self.change.is_some() || self.pending.is_some() {
            return Err(ChangeError::ChangeInProgress);
        }
        let root = self.shape.root();
        let blocked = match ct {
            ChangeType::Add => root.neighbor(self.shape.broken_side()),
            ChangeType::Subtract => root,
        };
        if b == blocked {
            return Err(ChangeError::TouchesEntryExit(b));
        }
        let next = match ct {
            ChangeType::Add => self.shape.with_box_added(b),
            ChangeType::Subtract => self.shape.with_box_removed(b),
        }
        .map_err(|e| ChangeError::InvalidResultingShape(e.to_string()))?;
        if next.box_count() > self.config.max_boxes {
            return Err(ChangeError::InvalidResultingShape(format!(
                "{} boxes exceeds max_boxes = {}",
                next.box_count(),
                self.config.max_boxes
            )));
        }
        if let Some(why) = self.unsettled_reason() {
            return Err(ChangeError::NotSettled(why));
        }
        Ok(next)
    }

    /// Queues a change. The notice reaches robots near the box during the
    /// next step's communication phase.
    pub fn inject_change(&mut self, ct: ChangeType, b: BoxId) -> Result<u64, ChangeError> {
        let next = match self.check_change(ct, b) {
            Ok(s) => s,
            Err(e) => {
                self.events.push(Event::Rejected { reason: e.code().into() });
                return Err(e);
            }
        };
        self.version += 1;
        let seq = self.version;
        let old = std::mem::replace(&mut self.shape, Arc::new(next));
        self.change = Some(ChangeEvent {
            seq,
            ct,
            target: b,
            method: self.method,
            injected_at: self.step,
            status: ChangeStatus::Propagating,
            old_shape: old,
            new_shape: self.shape.clone(),
            n_cp: None,
            scsn: None,
            add_geo: None,
            sub_geo: None,
            post_primary: None,
            final_class: None,
            primary_done_at: None,
            resolved_at: None,
            change_robot: None,
            chain: None,
            secondary_started: false,
            inflection_detectors: Vec::new(),
            scsn_detectors: Vec::new(),
        });
        self.pending = Some(ChangeNotice::new(seq, ct, b));
        self.events.push(Event::ChangeInjected { seq, ct, target: b });
        Ok(seq)
    }

    pub(crate) fn violation(&self, detail: impl std::fmt::Display) -> SimError {
        let dump = self
            .robots
            .iter()
            .map(|r| {
                format!(
                    "  robot {} at {:?} role {:?} planned {:?} view v{}",
                    r.id, r.loc, r.role, r.planned, r.view.version
                )
            })
            .collect::<Vec<_>>()
            .join("\n");
        SimError::InvariantViolation { step: self.step, detail: detail.to_string(), dump }
    }

    pub(crate) fn step_record(&self) -> StepRecord {
        StepRecord {
            step: self.step,
            shape_version: self.version,
            box_count: self.shape.box_count(),
            robots: self
                .robots
                .iter()
                .map(|r| RobotRecord {
                    id: r.id,
                    loc: r.loc,
                    phase: r.loc.phase(),
                    role: r.role,
                    heading: r.heading(),
                })
                .collect(),
            path_digest: self.planned_path().digest(),
            change: self.change.as_ref().map(ChangeEvent::record),
            events: self.events.clone(),
        }
    }

    /// Nodes occupied by in-shape robots.
    pub fn occupied_nodes(&self) -> BTreeSet<Node> {
        self.occupancy().into_keys().collect()
    }
}
