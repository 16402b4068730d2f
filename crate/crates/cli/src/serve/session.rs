//! One live session: a single engine, the commands it accepted, and the
//! view last sent to the client.

use std::collections::BTreeMap;

use swarmshape::agent::ChangeType;
use swarmshape::engine::{ChangeHints, Command, Scenario, ScriptEntry, SimError, SimWorld};
use swarmshape::{BoxId, Shape};

use super::protocol::{ClientMsg, Diff, MethodName, RobotView, ServerMsg, Snapshot};

pub const DEFAULT_STEPS_PER_SECOND: f64 = 4.0;

pub struct Session {
    world: SimWorld,
    base: Scenario,
    log: Vec<ScriptEntry>,
    paused: bool,
    steps_per_second: f64,
    sent: Option<Sent>,
}

/// What the client holds after the last frame.
struct Sent {
    robots: BTreeMap<u32, RobotView>,
    shape: Shape,
    hints: ChangeHints,
    events_seen: usize,
}

impl Session {
    /// Starts from the scenario's configuration and shape. Its script and
    /// step count are not used; the client drives the session.
    pub fn new(scenario: &Scenario) -> Result<Session, SimError> {
        let world = SimWorld::new(scenario.config.clone(), scenario.shape.clone())?;
        Ok(Session {
            world,
            base: scenario.clone(),
            log: Vec::new(),
            paused: false,
            steps_per_second: DEFAULT_STEPS_PER_SECOND,
            sent: None,
        })
    }

    pub fn world(&self) -> &SimWorld {
        &self.world
    }

    pub fn paused(&self) -> bool {
        self.paused
    }

    pub fn steps_per_second(&self) -> f64 {
        self.steps_per_second
    }

    /// Accepted commands, stamped with the step boundary they were applied at.
    pub fn log(&self) -> &[ScriptEntry] {
        &self.log
    }

    /// A scenario that replays this session up to the current step.
    pub fn replay_scenario(&self) -> Scenario {
        Scenario { steps: self.world.step_index(), max_steps: None, script: self.log.clone(), ..self.base.clone() }
    }

    /// Applies one client message between steps.
    pub fn handle(&mut self, msg: ClientMsg) -> Vec<ServerMsg> {
        match msg {
            ClientMsg::AddBox { i, j } => vec![self.change(ChangeType::Add, BoxId::new(i, j))],
            ClientMsg::RemoveBox { i, j } => vec![self.change(ChangeType::Subtract, BoxId::new(i, j))],
            ClientMsg::Pause => {
                self.paused = true;
                vec![self.snapshot()]
            }
            ClientMsg::Resume => {
                self.paused = false;
                vec![self.snapshot()]
            }
            ClientMsg::SetSpeed { steps_per_second } => {
                self.steps_per_second = steps_per_second;
                vec![self.snapshot()]
            }
            ClientMsg::SelectMethod { method } => {
                if self.world.method() != method.into() {
                    self.world.set_method(method.into());
                    self.log.push(ScriptEntry { step: self.world.step_index(), command: Command::Method(method.into()) });
                }
                vec![self.snapshot()]
            }
            ClientMsg::Snapshot => vec![self.snapshot()],
        }
    }

    // Rejections are checked up front so the engine, and hence the trace,
    // only ever sees commands that a replay will also accept.
    fn change(&mut self, ct: ChangeType, b: BoxId) -> ServerMsg {
        if let Err(e) = self.world.check_change(ct, b) {
            return ServerMsg::Rejected { code: e.code().into(), message: e.to_string() };
        }
        let step = self.world.step_index();
        match self.world.inject_change(ct, b) {
            Ok(_) => {
                let command = match ct {
                    ChangeType::Add => Command::Add(b),
                    ChangeType::Subtract => Command::Remove(b),
                };
                self.log.push(ScriptEntry { step, command });
                let change = self.world.active_change().expect("change just injected").record();
                ServerMsg::Accepted { step, change }
            }
            Err(e) => ServerMsg::Rejected { code: e.code().into(), message: e.to_string() },
        }
    }

    /// Advances one step and reports what changed.
    pub fn tick(&mut self) -> Result<ServerMsg, SimError> {
        self.world.step()?;
        Ok(ServerMsg::Diff(self.diff()))
    }

    pub fn snapshot(&mut self) -> ServerMsg {
        let (robots, hints) = self.views();
        let snap = Snapshot {
            step: self.world.step_index(),
            shape: self.world.shape().clone(),
            nodes: self.world.shape().nodes().iter().copied().collect(),
            robots: robots.values().cloned().collect(),
            change: self.world.active_change().map(|c| c.record()),
            hints: hints.clone(),
            paused: self.paused,
            steps_per_second: self.steps_per_second,
            method: MethodName::from(self.world.method()),
        };
        self.sent = Some(Sent { robots, shape: snap.shape.clone(), hints, events_seen: self.world.trace().steps.len() });
        ServerMsg::Snapshot(snap)
    }

    fn diff(&mut self) -> Diff {
        let (robots, hints) = self.views();
        let shape = self.world.shape().clone();
        let prev = self.sent.take();
        let changed = |id: &u32, v: &RobotView| prev.as_ref().and_then(|p| p.robots.get(id)) != Some(v);
        let shape_changed = prev.as_ref().is_none_or(|p| p.shape != shape);
        let steps = &self.world.trace().steps;
        let from = prev.as_ref().map_or(steps.len().saturating_sub(1), |p| p.events_seen);
        let diff = Diff {
            step: self.world.step_index(),
            robots: robots.iter().filter(|(id, v)| changed(id, v)).map(|(_, v)| v.clone()).collect(),
            shape: shape_changed.then(|| shape.clone()),
            nodes: shape_changed.then(|| shape.nodes().iter().copied().collect()),
            change: self.world.active_change().map(|c| c.record()),
            hints: (prev.as_ref().map(|p| &p.hints) != Some(&hints)).then(|| hints.clone()),
            events: steps[from.min(steps.len())..].iter().flat_map(|r| r.events.iter().cloned()).collect(),
        };
        self.sent = Some(Sent { robots, shape, hints, events_seen: steps.len() });
        diff
    }

    fn views(&self) -> (BTreeMap<u32, RobotView>, ChangeHints) {
        let hints = self.world.hints();
        let robots = self
            .world
            .robots()
            .iter()
            .map(|r| {
                let led = r.node().map(|n| hints.led(n));
                (r.id, RobotView { id: r.id, loc: r.loc, role: r.role, heading: r.heading(), led })
            })
            .collect();
        (robots, hints)
    }
}
