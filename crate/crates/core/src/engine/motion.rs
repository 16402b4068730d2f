//! Decisions, simultaneous motion, station flow and per-step bookkeeping.

use std::collections::{BTreeMap, HashMap};

use super::trace::{ChangeStatus, Event, Location};
use super::world::{SimError, SimWorld};
use crate::agent::{
    emit_passback, primary_add_action, primary_sub_action, resolve_destination_conflict, Action,
    ChangeType, MemoryState, NextMove, Role,
};

/// What moved this step: robot index, origin and destination.
type Moves = Vec<(usize, Location, Location)>;

impl SimWorld {
    /// Advances the world by one step: communication rounds, one motion
    /// phase, bookkeeping, invariant checks, and a trace record.
    pub fn step(&mut self) -> Result<(), SimError> {
        self.step += 1;
        let frozen = self.comm_phase()?;
        self.replan_all()?;
        let desires = self.decide(frozen)?;
        let moves = self.resolve_motion(&desires)?;
        let before = self.apply_motion(&moves)?;
        self.bookkeeping(&moves, before)?;
        self.check_invariants()?;
        let rec = self.step_record();
        self.trace.steps.push(rec);
        self.trace.messages.append(&mut self.messages);
        self.events.clear();
        Ok(())
    }

    pub fn run_steps(&mut self, n: u64) -> Result<(), SimError> {
        for _ in 0..n {
            self.step()?;
        }
        Ok(())
    }

    fn decide(&mut self, frozen: bool) -> Result<BTreeMap<usize, Location>, SimError> {
        let mut want = BTreeMap::new();
        for i in 0..self.robots.len() {
            let r = &self.robots[i];
            let Some(_) = r.node() else { continue };
            if frozen {
                continue;
            }
            let action = if self.in_primary(i) {
                let c = self.change.as_ref().unwrap();
                let planned = r.planned.and_then(NextMove::node);
                match c.ct {
                    ChangeType::Add => {
                        primary_add_action(r.mem(), planned, c.target, c.add_geo.as_ref().unwrap())
                    }
                    ChangeType::Subtract => {
                        primary_sub_action(r.mem(), planned, c.target, c.sub_geo.as_ref().unwrap()).0
                    }
                }
            } else {
                match r.planned {
                    Some(NextMove::To(t)) => Action::Move(t),
                    Some(NextMove::ExitShape) => Action::Exit,
                    None => Action::Hold,
                }
            };
            match action {
                Action::Move(t) => {
                    want.insert(i, Location::Node(t));
                }
                Action::Exit => {
                    want.insert(i, Location::Outbound(0));
                }
                Action::Hold => {}
            }
        }
        self.destination_swap(&mut want)?;
        self.station_desires(&mut want);
        Ok(want)
    }

    /// Movement-based repair: a robot heading for the change robot's target
    /// takes the node the change robot gave up instead.
    fn destination_swap(&mut self, want: &mut BTreeMap<usize, Location>) -> Result<(), SimError> {
        let Some(c) = &self.change else { return Ok(()) };
        let Some(cr) = c.change_robot.filter(|_| c.status == ChangeStatus::Secondary) else {
            return Ok(());
        };
        let ci = cr as usize;
        let Some(&Location::Node(x)) = want.get(&ci) else { return Ok(()) };
        let rivals: Vec<usize> = want
            .iter()
            .filter(|&(&j, &t)| j != ci && t == Location::Node(x))
            .map(|(&j, _)| j)
            .collect();
        match rivals.as_slice() {
            [] => Ok(()),
            &[j] => {
                let w = self.robots[ci].node().unwrap();
                let y = self.robots[j].node().unwrap();
                let z = resolve_destination_conflict(w, x, y).map_err(|e| self.violation(e))?;
                want.insert(j, Location::Node(z));
                self.robots[j].planned = Some(NextMove::To(z));
                self.robots[j].role = Role::PassBack;
                let class = self.classify_planned();
                self.events.push(Event::DestinationSwap {
                    change_robot: cr,
                    robot: self.robots[j].id,
                    w,
                    x,
                    y,
                    z,
                    class: class.kind,
                    sub_cycles: class.sub_cycle_count,
                });
                Ok(())
            }
            _ => Err(self.violation(format!("{} robots contest {x} with the change robot", rivals.len()))),
        }
    }

    fn fifo_head(&self) -> Option<usize> {
        (0..self.robots.len())
            .filter(|&i| matches!(self.robots[i].loc, Location::Slot(_)) && self.robots[i].charge_left == 0)
            .min_by_key(|&i| (self.robots[i].docked_at, self.robots[i].id))
    }

    fn station_desires(&mut self, want: &mut BTreeMap<usize, Location>) {
        let entry = Location::Node(self.shape.entry());
        let (out_last, in_last) = (self.config.out_leg - 1, self.config.in_leg - 1);
        let queue_head = self.robots.iter().any(|r| r.loc == Location::Queue(0));
        let departing = self.fifo_head();
        let depart_slot = departing.map(|i| match self.robots[i].loc {
            Location::Slot(s) => s,
            _ => unreachable!(),
        });
        let used: Vec<usize> = self
            .robots
            .iter()
            .filter_map(|r| match r.loc {
                Location::Slot(s) => Some(s),
                _ => None,
            })
            .collect();
        for i in 0..self.robots.len() {
            let target = match self.robots[i].loc {
                Location::Node(_) => continue,
                Location::Queue(0) => Some(entry),
                Location::Queue(k) => Some(Location::Queue(k - 1)),
                Location::Inbound(k) if k == in_last => (!queue_head).then_some(entry),
                Location::Inbound(k) => Some(Location::Inbound(k + 1)),
                Location::Outbound(k) if k == out_last => {
                    let free: Vec<usize> =
                        (0..self.config.station_slots).filter(|s| !used.contains(s)).collect();
                    let ok = free.iter().copied().find(|&s| depart_slot.is_none_or(|j| s.abs_diff(j) > 1));
                    if ok.is_none() {
                        if let Some(&s) = free.first() {
                            self.events.push(Event::Yielded { robot: self.robots[i].id, slot: s });
                        }
                    }
                    ok.map(Location::Slot)
                }
                Location::Outbound(k) => Some(Location::Outbound(k + 1)),
                Location::Slot(_) => (Some(i) == departing).then_some(Location::Inbound(0)),
            };
            if let Some(t) = target {
                want.insert(i, t);
            }
        }
    }

    /// Lets every robot whose destination is free, or is being vacated by a
    /// robot that itself moves, advance. Chains and cycles of three or more
    /// move together; head-on swaps and double bookings are violations.
    fn resolve_motion(&mut self, want: &BTreeMap<usize, Location>) -> Result<Moves, SimError> {
        let occ: HashMap<Location, usize> =
            self.robots.iter().enumerate().map(|(i, r)| (r.loc, i)).collect();
        let mut claimed: HashMap<Location, usize> = HashMap::new();
        for (&i, &t) in want {
            if let Some(j) = claimed.insert(t, i) {
                return Err(self.violation(format!(
                    "robots {} and {} both move to {t:?}",
                    self.robots[j].id, self.robots[i].id
                )));
            }
        }
        let mut go: HashMap<usize, bool> = HashMap::new();
        for &start in want.keys() {
            let mut stack: Vec<usize> = vec![];
            let mut cur = start;
            let verdict = loop {
                if let Some(&v) = go.get(&cur) {
                    break v;
                }
                if let Some(pos) = stack.iter().position(|&s| s == cur) {
                    if stack.len() - pos == 2 {
                        return Err(self.violation(format!(
                            "robots {} and {} swap places",
                            self.robots[stack[pos]].id, self.robots[stack[pos + 1]].id
                        )));
                    }
                    break true;
                }
                stack.push(cur);
                match occ.get(&want[&cur]) {
                    None => break true,
                    Some(&o) if !want.contains_key(&o) => break false,
                    Some(&o) => cur = o,
                }
            };
            for s in stack {
                go.insert(s, verdict);
            }
        }
        let mut moves = Vec::new();
        for (&i, &t) in want {
            if go[&i] {
                moves.push((i, self.robots[i].loc, t));
            } else if self.robots[i].node().is_some() {
                self.events.push(Event::Waited { robot: self.robots[i].id });
            }
        }
        Ok(moves)
    }

    /// Applies moves; returns each in-shape mover's memory before moving.
    fn apply_motion(&mut self, moves: &Moves) -> Result<HashMap<usize, MemoryState>, SimError> {
        let mut before = HashMap::new();
        for &(i, from, to) in moves {
            self.robots[i].loc = to;
            let id = self.robots[i].id;
            match (from, to) {
                (Location::Node(_), Location::Node(b)) => {
                    let r = &mut self.robots[i];
                    let m = r.memory.as_mut().unwrap();
                    before.insert(i, m.clone());
                    m.advance(b);
                }
                (Location::Node(_), _) => {
                    let r = &mut self.robots[i];
                    before.insert(i, r.memory.take().unwrap());
                    r.exits += 1;
                    r.planned = None;
                    self.events.push(Event::Exited { robot: id });
                }
                (_, Location::Node(n)) => {
                    if self.robots[i].view.version != self.version {
                        return Err(self.violation(format!("robot {id} entered with a stale view")));
                    }
                    let r = &mut self.robots[i];
                    r.memory = Some(MemoryState::at_entry(n));
                    r.role = Role::Normal;
                    self.events.push(Event::Entered { robot: id });
                }
                (_, Location::Slot(s)) => {
                    self.robots[i].charge_left = self.config.charge_steps;
                    self.robots[i].docked_at = self.step;
                    self.events.push(Event::Docked { robot: id, slot: s });
                    self.carry_view(i);
                }
                (Location::Slot(s), _) => self.events.push(Event::Departed { robot: id, slot: s }),
                _ => {}
            }
        }
        Ok(before)
    }

    /// A robot reaching the station hands its shape view and change notice
    /// to everyone outside the shape.
    fn carry_view(&mut self, i: usize) {
        let (notice, view) = (self.robots[i].notice, self.robots[i].view.clone());
        let mut updated = 0;
        for j in 0..self.robots.len() {
            if j != i && self.robots[j].node().is_none() && self.learn(j, notice, &view) {
                updated += 1;
            }
        }
        if updated > 0 {
            self.events.push(Event::CarriedDelta { robot: self.robots[i].id, updated });
        }
    }

    fn bookkeeping(&mut self, moves: &Moves, before: HashMap<usize, MemoryState>) -> Result<(), SimError> {
        self.pass_backs(moves, &before);
        self.clone_at_inflection(moves, &before);
        self.replan_all()?;
        self.check_primary_complete();
        let cr_exited = self.change.as_ref().and_then(|c| c.change_robot).is_some_and(|cr| {
            moves.iter().any(|&(i, f, t)| self.robots[i].id == cr && f.node().is_some() && t.node().is_none())
        });
        if cr_exited {
            if let Some(r) = self.robots.iter().find(|r| r.role == Role::PassBack) {
                return Err(self.violation(format!("robot {} is still passing back after resolution", r.id)));
            }
            self.resolve()?;
        }
        if let Some(c) = self.change.take() {
            if c.status == ChangeStatus::Resolved {
                for r in self.robots.iter_mut() {
                    r.role = Role::Normal;
                }
                self.history.push(c);
            } else {
                self.change = Some(c);
            }
        }
        for r in self.robots.iter_mut() {
            if matches!(r.loc, Location::Slot(_)) && r.charge_left > 0 && r.docked_at != self.step {
                r.charge_left -= 1;
            }
        }
        if self.robot_at(self.shape.entry()).is_none() {
            self.events.push(Event::EntryGap);
        }
        Ok(())
    }

    /// Pass-back robots hand their memory and the edge they took to the robot
    /// that now stands where they were.
    fn pass_backs(&mut self, moves: &Moves, before: &HashMap<usize, MemoryState>) {
        let mut msgs = Vec::new();
        for &(i, from, to) in moves {
            if from.node().is_none() || self.robots[i].role != Role::PassBack {
                continue;
            }
            let next = to.node().map_or(NextMove::ExitShape, NextMove::To);
            msgs.push((i, emit_passback(&before[&i], next)));
            self.robots[i].role = Role::Normal;
        }
        for (s, m) in msgs {
            let from = self.robots[s].id;
            match self.robot_at(m.target) {
                None => self.events.push(Event::PassBackDropped { from, node: m.target }),
                Some(j) if self.robots[j].role == Role::ChangeRobot => {}
                Some(j) => {
                    let r = &mut self.robots[j];
                    r.memory = Some(m.memory);
                    r.planned = Some(m.next);
                    r.role = Role::PassBack;
                    self.events.push(Event::PassBack { from, to: r.id, node: m.target });
                }
            }
        }
    }

    /// During a subtraction, the robot stepping out of the removed box onto
    /// the inflection node takes the memory its predecessor had there.
    fn clone_at_inflection(&mut self, moves: &Moves, before: &HashMap<usize, MemoryState>) {
        let Some(c) = &self.change else { return };
        let (Some(g), ChangeStatus::Primary) = (c.sub_geo, c.status) else { return };
        let target = c.target;
        let Some(&(s, _, _)) = moves.iter().find(|&&(_, f, _)| f == Location::Node(g.n_cp)) else {
            return;
        };
        let Some(&(j, _, _)) = moves.iter().find(|&&(_, f, t)| {
            t == Location::Node(g.n_cp) && f.node().is_some_and(|n| target.contains(n))
        }) else {
            return;
        };
        self.robots[j].memory = Some(before[&s].clone());
        self.events.push(Event::CloneMemory { from: self.robots[s].id, to: self.robots[j].id, node: g.n_cp });
    }

    fn check_primary_complete(&mut self) {
        let Some(c) = &self.change else { return };
        if c.status != ChangeStatus::Primary {
            return;
        }
        let occ = self.occupancy();
        let promoter = match c.ct {
            ChangeType::Add => {
                let g = c.add_geo.unwrap();
                c.target.nodes().iter().all(|n| occ.contains_key(n)).then(|| occ[&g.b])
            }
            ChangeType::Subtract => {
                let g = c.sub_geo.unwrap();
                c.target.nodes().iter().all(|n| !occ.contains_key(n)).then(|| occ.get(&g.n_cp).copied()).flatten()
            }
        };
        let Some(p) = promoter else { return };
        let class = self.classify_planned();
        self.set_status(ChangeStatus::Secondary);
        let c = self.change.as_mut().unwrap();
        c.primary_done_at = Some(self.step);
        c.post_primary = Some(class.clone());
        self.events.push(Event::PrimaryComplete { class: class.kind, sub_cycles: class.sub_cycle_count });
        let r = &mut self.robots[p];
        if let Some(n) = r.notice.as_mut() {
            n.primary_done = true;
        }
        r.dirty = true;
        self.events.push(Event::Promoted { robot: r.id });
    }

    fn check_invariants(&self) -> Result<(), SimError> {
        let mut seen: HashMap<Location, u32> = HashMap::new();
        for r in &self.robots {
            if let Some(other) = seen.insert(r.loc, r.id) {
                return Err(self.violation(format!("robots {other} and {} share {:?}", r.id, r.loc)));
            }
            if let Some(n) = r.node() {
                let allowed = self.shape.contains(n)
                    || self.change.as_ref().is_some_and(|c| c.old_shape.contains(n));
                if !allowed {
                    return Err(self.violation(format!("robot {} stands off-shape at {n}", r.id)));
                }
            }
        }
        Ok(())
    }
}
