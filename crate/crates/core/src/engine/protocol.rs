//! Communication rounds and per-robot planning during changes.

use std::collections::HashMap;

use super::trace::{ChangeStatus, Event, Location, MessageRecord};
use super::world::{SimError, SimWorld};
use crate::agent::{
    apply_memory_message, default_next_edge, detect_inflection_add, detect_inflection_sub,
    detect_scsn_sub, stance, AddGeometry, AgentError, ChangeNotice, ChangeType, Method, NextMove,
    Role, ShapeView, Stance, SubGeometry, start_memory_message,
};
use crate::lattice::{cw_next, Node};

impl SimWorld {
    /// True while the robot should follow primary-change rules: it knows the
    /// active change and its inflection node, but not that primary changes
    /// are complete.
    pub(crate) fn in_primary(&self, i: usize) -> bool {
        let (Some(c), Some(n)) = (&self.change, &self.robots[i].notice) else {
            return false;
        };
        n.seq == c.seq && n.n_cp.is_some() && !n.primary_done && c.status < ChangeStatus::Resolved
    }

    /// Recomputes the planned edge of robot `i` from its role and knowledge.
    pub(crate) fn replan(&mut self, i: usize) -> Result<(), AgentError> {
        let r = &self.robots[i];
        let Some(_) = r.node() else {
            self.robots[i].planned = None;
            return Ok(());
        };
        let mem = r.mem();
        let view = r.view.shape.clone();
        let planned = if self.in_primary(i) {
            // A robot that entered after the notice has no earlier plan.
            let fallback = match r.planned {
                None => Some(default_next_edge(mem, &view)?),
                p => p,
            };
            let c = self.change.as_ref().unwrap();
            match (c.ct, c.add_geo, c.sub_geo) {
                (ChangeType::Add, Some(g), _) => match stance(mem, c.target, g.n_cp) {
                    Stance::InChangedBox if mem.current_node == g.b => Some(NextMove::To(g.h)),
                    Stance::InChangedBox => Some(NextMove::To(cw_next(mem.current_node))),
                    Stance::AtInflection => Some(NextMove::To(g.a)),
                    Stance::Downstream => fallback,
                    Stance::Upstream => Some(default_next_edge(mem, &view)?),
                },
                (ChangeType::Subtract, _, Some(g)) => match stance(mem, c.target, g.n_cp) {
                    Stance::InChangedBox if mem.current_node == g.r_exit => {
                        Some(NextMove::To(g.n_cp))
                    }
                    Stance::InChangedBox => Some(NextMove::To(cw_next(mem.current_node))),
                    Stance::AtInflection | Stance::Downstream => {
                        Some(default_next_edge(mem, &view)?)
                    }
                    Stance::Upstream => match fallback {
                        Some(NextMove::To(t)) if c.target.contains(t) => {
                            Some(NextMove::To(cw_next(mem.current_node)))
                        }
                        p => p,
                    },
                },
                _ => r.planned,
            }
        } else {
            match r.role {
                Role::PassBack => r.planned,
                Role::Normal | Role::ChangeRobot => Some(default_next_edge(mem, &view)?),
            }
        };
        self.robots[i].planned = planned;
        Ok(())
    }

    pub(crate) fn replan_all(&mut self) -> Result<(), SimError> {
        for i in 0..self.robots.len() {
            self.replan(i).map_err(|e| self.violation(e))?;
        }
        Ok(())
    }

    /// Integer position used for range checks, in units of the edge length.
    pub(crate) fn position(&self, loc: Location) -> (i32, i32) {
        let s = &self.shape;
        let (e, x) = (s.entry(), s.exit());
        let o = s.broken_side().offset();
        let lat = (e.x - x.x, e.y - x.y);
        let at = |base: Node, a: i32, b: i32| (base.x + a * o.0 + b * lat.0, base.y + a * o.1 + b * lat.1);
        let legs_in = self.config.in_leg as i32;
        match loc {
            Location::Node(n) => (n.x, n.y),
            Location::Queue(k) => at(e, k as i32 + 1, 0),
            Location::Inbound(k) => at(e, 1, legs_in - k as i32),
            Location::Outbound(k) => at(x, 1, -(k as i32)),
            Location::Slot(k) => at(
                e,
                self.config.queue_len as i32 + 3,
                k as i32 - self.config.station_slots as i32 / 2,
            ),
        }
    }

    fn spatial_index(&self) -> HashMap<(i32, i32), Vec<usize>> {
        let mut idx: HashMap<(i32, i32), Vec<usize>> = HashMap::new();
        for (i, r) in self.robots.iter().enumerate() {
            idx.entry(self.position(r.loc)).or_default().push(i);
        }
        idx
    }

    /// Robots within communication range of `p` (range is the box diagonal).
    fn in_range(idx: &HashMap<(i32, i32), Vec<usize>>, p: (i32, i32)) -> Vec<usize> {
        let mut out = Vec::new();
        for dx in -1..=1 {
            for dy in -1..=1 {
                if let Some(v) = idx.get(&(p.0 + dx, p.1 + dy)) {
                    out.extend(v.iter().copied());
                }
            }
        }
        out.sort_unstable();
        out
    }

    fn record_message(&mut self, round: usize, kind: &str, from: Option<usize>, to: usize) {
        if self.config.record_messages {
            self.messages.push(MessageRecord {
                step: self.step,
                round,
                kind: kind.into(),
                from: from.map(|f| self.robots[f].id),
                to: self.robots[to].id,
            });
        }
    }

    /// Robot `i` hears `notice` and `view`. A robot learning of a change for
    /// the first time checks whether it is the inflection robot or the SCSN
    /// robot, using the shape it knew before.
    pub(crate) fn learn(&mut self, i: usize, notice: Option<ChangeNotice>, view: &ShapeView) -> bool {
        let mut learned = false;
        if let Some(n) = notice {
            let fresh = self.robots[i].notice.is_none_or(|m| m.seq < n.seq);
            let mut cur = self.robots[i].notice.unwrap_or(n);
            learned |= fresh || cur.merge(&n);
            if fresh {
                cur = n;
                self.detect(i, &mut cur);
            }
            self.robots[i].notice = Some(cur);
        }
        learned |= self.robots[i].view.merge(view);
        if learned {
            self.robots[i].dirty = true;
        }
        learned
    }

    fn detect(&mut self, i: usize, notice: &mut ChangeNotice) {
        let Some(c) = self.change.as_mut() else { return };
        let r = &self.robots[i];
        if c.seq != notice.seq || r.node().is_none() || r.view.version + 1 != notice.seq {
            return;
        }
        let mem = r.mem();
        let planned = r.planned.and_then(NextMove::node);
        let old = &r.view.shape;
        let n = mem.current_node;
        match c.ct {
            ChangeType::Add => {
                if detect_inflection_add(mem, planned, old, c.target) {
                    c.inflection_detectors.push(r.id);
                    c.scsn_detectors.push(r.id);
                    c.n_cp = Some(n);
                    c.scsn = Some(n);
                    c.add_geo = Some(AddGeometry::new(n, c.target));
                    notice.n_cp = Some(n);
                    notice.scsn = Some(n);
                    self.events.push(Event::Inflection { robot: r.id, node: n });
                    self.events.push(Event::Scsn { robot: r.id, node: n });
                }
            }
            ChangeType::Subtract => {
                if detect_inflection_sub(mem, c.target) {
                    c.inflection_detectors.push(r.id);
                    c.n_cp = Some(n);
                    let r_exit = mem.previous_node().expect("inflection robot came from the box");
                    c.sub_geo = Some(SubGeometry { n_cp: n, r_exit });
                    notice.n_cp = Some(n);
                    self.events.push(Event::Inflection { robot: r.id, node: n });
                }
                if detect_scsn_sub(mem, planned, c.target) {
                    c.scsn_detectors.push(r.id);
                    c.scsn = Some(n);
                    notice.scsn = Some(n);
                    self.events.push(Event::Scsn { robot: r.id, node: n });
                }
            }
        }
    }

    /// Runs up to `comm_rounds_per_step` message rounds. Returns true if a
    /// memory message is still travelling when the rounds run out.
    pub(crate) fn comm_phase(&mut self) -> Result<bool, SimError> {
        let idx = self.spatial_index();
        // Handshake: robots hear whoever is in range now, so a robot that
        // moved next to better-informed neighbors catches up.
        for i in 0..self.robots.len() {
            for j in Self::in_range(&idx, self.position(self.robots[i].loc)) {
                let (notice, view) = (self.robots[j].notice, self.robots[j].view.clone());
                if j != i && self.learn(i, notice, &view) {
                    self.record_message(0, "handshake", Some(j), i);
                }
            }
        }
        if let Some(notice) = self.pending.take() {
            let c = self.change.as_ref().unwrap();
            let view = ShapeView { version: c.seq, shape: c.new_shape.clone() };
            let mut hearers: Vec<usize> = c
                .target
                .nodes()
                .iter()
                .flat_map(|&n| Self::in_range(&idx, (n.x, n.y)))
                .collect();
            hearers.sort_unstable();
            hearers.dedup();
            for i in hearers {
                self.record_message(0, "change_notice", None, i);
                self.learn(i, Some(notice), &view);
            }
        }
        let rounds = self.config.comm_rounds_per_step;
        let mut round = 0;
        loop {
            let mut busy = false;
            let senders: Vec<usize> = (0..self.robots.len()).filter(|&i| self.robots[i].dirty).collect();
            for &s in &senders {
                self.robots[s].dirty = false;
            }
            for s in senders {
                busy = true;
                let (notice, view) = (self.robots[s].notice, self.robots[s].view.clone());
                for r in Self::in_range(&idx, self.position(self.robots[s].loc)) {
                    if r != s && self.learn(r, notice, &view) {
                        self.record_message(round, "flood", Some(s), r);
                    }
                }
            }
            busy |= self.chain_hop(round)?;
            busy |= self.maybe_start_secondary()?;
            self.after_detection()?;
            round += 1;
            if !busy {
                return Ok(false);
            }
            if round >= rounds {
                let pending = self.robots.iter().any(|r| r.dirty)
                    || self.change.as_ref().is_some_and(|c| c.chain.is_some());
                if pending {
                    self.events.push(Event::CommOverrun { rounds });
                }
                return Ok(self.change.as_ref().is_some_and(|c| c.chain.is_some()));
            }
        }
    }

    /// Moves status to Primary once detection is complete, checking that
    /// exactly one robot matched each predicate.
    fn after_detection(&mut self) -> Result<(), SimError> {
        let Some(c) = &self.change else { return Ok(()) };
        if c.status != ChangeStatus::Propagating {
            return Ok(());
        }
        let everyone_knows = self
            .robots
            .iter()
            .filter(|r| r.node().is_some())
            .all(|r| r.notice.is_some_and(|n| n.seq == c.seq));
        if !everyone_knows {
            return Ok(());
        }
        if c.inflection_detectors.len() != 1 || c.scsn_detectors.len() != 1 {
            return Err(self.violation(format!(
                "change {} matched {} inflection and {} SCSN robots",
                c.seq,
                c.inflection_detectors.len(),
                c.scsn_detectors.len()
            )));
        }
        self.set_status(ChangeStatus::Primary);
        Ok(())
    }

    pub(crate) fn set_status(&mut self, s: ChangeStatus) {
        let c = self.change.as_mut().unwrap();
        if c.status != s {
            c.status = s;
            self.events.push(Event::StatusChanged { status: s });
        }
    }

    fn maybe_start_secondary(&mut self) -> Result<bool, SimError> {
        let Some(c) = &self.change else { return Ok(false) };
        if c.status != ChangeStatus::Secondary || c.secondary_started {
            return Ok(false);
        }
        let scsn = c.scsn.expect("SCSN known before secondary changes");
        let seq = c.seq;
        let Some(i) = self.robot_at(scsn) else {
            return Err(self.violation(format!("SCSN node {scsn} is empty")));
        };
        if !self.robots[i].notice.is_some_and(|n| n.seq == seq && n.primary_done) {
            return Ok(false);
        }
        let method = c.method;
        self.change.as_mut().unwrap().secondary_started = true;
        match method {
            Method::CommunicationBased => {
                let r = &self.robots[i];
                let before = r.heading();
                let (next, fwd) =
                    start_memory_message(r.mem(), &r.view.shape).map_err(|e| self.violation(e))?;
                self.robots[i].planned = Some(next);
                let changed = before != self.robots[i].heading();
                self.events.push(Event::MemoryMessage {
                    robot: self.robots[i].id,
                    node: scsn,
                    heading_changed: changed,
                });
                self.change.as_mut().unwrap().chain = fwd;
                if self.change.as_ref().unwrap().chain.is_none() {
                    self.resolve()?;
                }
            }
            Method::MovementBased => {
                self.robots[i].role = Role::ChangeRobot;
                self.change.as_mut().unwrap().change_robot = Some(self.robots[i].id);
                // Every robot past the SCSN keeps the interim path until the
                // change robot reaches its node.
                let ids: Vec<usize> = (0..self.robots.len())
                    .filter(|&j| j != i && self.robots[j].node().is_some() && self.robots[j].mem().has_visited(scsn))
                    .collect();
                for j in ids {
                    self.robots[j].role = Role::PassBack;
                }
            }
        }
        Ok(true)
    }

    /// Delivers the travelling memory message one hop.
    fn chain_hop(&mut self, round: usize) -> Result<bool, SimError> {
        let Some(msg) = self.change.as_mut().and_then(|c| c.chain.take()) else {
            return Ok(false);
        };
        let Some(i) = self.robot_at(msg.target) else {
            return Err(self.violation(format!("memory message target {} is empty", msg.target)));
        };
        let r = &self.robots[i];
        let (mem, next, fwd) =
            apply_memory_message(msg.target, &msg, &r.view.shape).map_err(|e| self.violation(e))?;
        let before = r.heading();
        let from = self.robot_at(msg.memory.previous_node().unwrap_or(msg.target));
        self.record_message(round, "memory", from, i);
        let r = &mut self.robots[i];
        r.memory = Some(mem);
        r.planned = Some(next);
        r.role = Role::Normal;
        let changed = before != r.heading();
        self.events.push(Event::MemoryMessage { robot: r.id, node: msg.target, heading_changed: changed });
        self.change.as_mut().unwrap().chain = fwd;
        if self.change.as_ref().unwrap().chain.is_none() {
            self.resolve()?;
        }
        Ok(true)
    }

    /// Marks the active change resolved and files it in the history.
    pub(crate) fn resolve(&mut self) -> Result<(), SimError> {
        self.set_status(ChangeStatus::Resolved);
        let class = self.classify_planned();
        let c = self.change.as_mut().unwrap();
        c.resolved_at = Some(self.step);
        c.final_class = Some(class.clone());
        let steps = self.step - c.injected_at;
        self.events.push(Event::Resolved { class: class.kind, steps });
        Ok(())
    }
}
