use std::collections::{BTreeMap, HashMap};

use thiserror::Error;

use crate::engine::{ChangeStatus, Event, Location, StepRecord, Trace};
use crate::lattice::Node;
use crate::path::PathKind;

use super::{manhattan, CheckReport, Counterexample};

#[derive(Debug, Error, PartialEq, Eq)]
pub enum MalformedTrace {
    #[error("trace has no header")]
    NoHeader,
    #[error("trace has no step records")]
    Empty,
    #[error("record {index} is step {found}, expected {index}")]
    StepOrder { index: usize, found: u64 },
    #[error("step {step} lists {got} robots, the header says {want}")]
    RobotCount { step: u64, got: usize, want: usize },
}

/// Runs the occupancy, motion, liveness, cadence and change-resolution
/// checks over every step of `t`.
pub fn check_trace(t: &Trace) -> Result<Vec<CheckReport>, MalformedTrace> {
    let h = t.header.as_ref().ok_or(MalformedTrace::NoHeader)?;
    if t.steps.is_empty() {
        return Err(MalformedTrace::Empty);
    }
    for (index, s) in t.steps.iter().enumerate() {
        if s.step != index as u64 {
            return Err(MalformedTrace::StepOrder { index, found: s.step });
        }
        if s.robots.len() != h.robot_count {
            return Err(MalformedTrace::RobotCount { step: s.step, got: s.robots.len(), want: h.robot_count });
        }
    }
    let ctx = Ctx { t, entry: h.entry, exit: h.exit };
    Ok(vec![
        CheckReport::from_result("occupancy", ctx.occupancy()),
        CheckReport::from_result("collision", ctx.motion()),
        ctx.liveness(),
        ctx.cadence(),
        ctx.resolution(),
    ])
}

struct Ctx<'a> {
    t: &'a Trace,
    entry: Node,
    exit: Node,
}

fn locations(s: &StepRecord) -> HashMap<u32, Location> {
    s.robots.iter().map(|r| (r.id, r.loc)).collect()
}

impl Ctx<'_> {
    /// At most one robot per node, queue place, leg place or slot.
    fn occupancy(&self) -> Result<(), Counterexample> {
        for s in &self.t.steps {
            let mut at: HashMap<Location, u32> = HashMap::new();
            for r in &s.robots {
                if let Some(other) = at.insert(r.loc, r.id) {
                    let mut cx = Counterexample::new(format!("robots {other} and {} share {:?}", r.id, r.loc));
                    cx = cx.at_step(s.step).robot(r.id);
                    cx.node = r.loc.node();
                    return Err(cx);
                }
            }
        }
        Ok(())
    }

    /// In-shape moves follow lattice edges, the shape is entered only at the
    /// entry and left only from the exit, and no two robots trade places.
    fn motion(&self) -> Result<(), Counterexample> {
        for w in self.t.steps.windows(2) {
            let (before, after) = (locations(&w[0]), &w[1]);
            let mut moved: HashMap<Location, Location> = HashMap::new();
            for r in &after.robots {
                let from = before[&r.id];
                let to = r.loc;
                if from == to {
                    continue;
                }
                let fail = |d: String| Err(Counterexample::new(d).at_step(after.step).robot(r.id));
                match (from.node(), to.node()) {
                    (Some(a), Some(b)) if manhattan(a, b) != 1 => return fail(format!("jump {a}->{b}")),
                    (None, Some(b)) if b != self.entry => return fail(format!("entered at {b}")),
                    (Some(a), None) if a != self.exit => return fail(format!("left from {a}")),
                    _ => {}
                }
                if moved.get(&to) == Some(&from) {
                    return fail(format!("head-on swap across {from:?} and {to:?}"));
                }
                moved.insert(from, to);
            }
        }
        Ok(())
    }

    /// Every visit lasts at most the node count plus the steps a change was
    /// active; visits with no change active last exactly the node count.
    fn liveness(&self) -> CheckReport {
        const NAME: &str = "liveness";
        let steps = &self.t.steps;
        let active: Vec<u64> = steps
            .iter()
            .scan(0u64, |acc, s| {
                *acc += u64::from(s.change.is_some());
                Some(*acc)
            })
            .collect();
        let mut inside: BTreeMap<u32, (u64, bool)> = steps[0]
            .robots
            .iter()
            .filter(|r| r.loc.node().is_some())
            .map(|r| (r.id, (0, false)))
            .collect();
        let (mut visits, mut longest) = (0u64, 0u64);
        let bound = |from: u64, to: u64| {
            let nodes = steps[from as usize..=to as usize].iter().map(|s| 4 * s.box_count as u64).max().unwrap_or(0);
            nodes + active[to as usize] - active[from as usize]
        };
        for s in &steps[1..] {
            for e in &s.events {
                match *e {
                    Event::Entered { robot } => {
                        inside.insert(robot, (s.step, true));
                    }
                    Event::Exited { robot } => {
                        let Some((from, full)) = inside.remove(&robot) else { continue };
                        let took = s.step - from;
                        longest = longest.max(took);
                        visits += 1;
                        let calm = active[s.step as usize] == active[from as usize] && s.change.is_none();
                        let nodes = 4 * s.box_count as u64;
                        let bad = took > bound(from, s.step) || (full && calm && took != nodes);
                        if bad {
                            let cx = Counterexample::new(format!("visit took {took} steps"));
                            return CheckReport::fail(NAME, cx.at_step(s.step).robot(robot));
                        }
                    }
                    _ => {}
                }
            }
        }
        let last = steps.len() as u64 - 1;
        if let Some((&robot, _)) = inside.iter().find(|(_, &(from, _))| last - from > bound(from, last)) {
            return CheckReport::fail(NAME, Counterexample::new("robot stuck in the shape").at_step(last).robot(robot));
        }
        CheckReport::pass(NAME).metric("visits", visits as f64).metric("longest_visit", longest as f64)
    }

    /// Once the first robot has left, every step with no active change sees
    /// exactly one robot leave and one arrive.
    fn cadence(&self) -> CheckReport {
        const NAME: &str = "cadence";
        let steps = &self.t.steps;
        let count = |s: &StepRecord, f: fn(&Event) -> bool| s.events.iter().filter(|e| f(e)).count();
        let Some(first) = steps.iter().position(|s| count(s, |e| matches!(e, Event::Exited { .. })) > 0) else {
            return CheckReport::pass(NAME).metric("steady_steps", 0.0);
        };
        let mut steady = 0;
        for s in &steps[first..] {
            if s.change.is_some() || s.events.iter().any(|e| matches!(e, Event::Resolved { .. })) {
                continue;
            }
            let (out, inn) = (
                count(s, |e| matches!(e, Event::Exited { .. })),
                count(s, |e| matches!(e, Event::Entered { .. })),
            );
            if out != 1 || inn != 1 {
                let cx = Counterexample::new(format!("{out} left and {inn} arrived"));
                return CheckReport::fail(NAME, cx.at_step(s.step)).metric("steady_steps", steady as f64);
            }
            steady += 1;
        }
        CheckReport::pass(NAME).metric("steady_steps", steady as f64)
    }

    /// Every injected change advances its status monotonically and resolves
    /// on the preferred path.
    fn resolution(&self) -> CheckReport {
        const NAME: &str = "change_resolution";
        let mut status: BTreeMap<u64, ChangeStatus> = BTreeMap::new();
        let mut injected = Vec::new();
        let mut durations = Vec::new();
        for s in &self.t.steps {
            if let Some(c) = &s.change {
                let prev = status.insert(c.seq, c.status);
                if prev.is_some_and(|p| p > c.status) {
                    let cx = Counterexample::new(format!("change {} went back to {:?}", c.seq, c.status));
                    return CheckReport::fail(NAME, cx.at_step(s.step));
                }
            }
            for e in &s.events {
                match *e {
                    Event::ChangeInjected { seq, .. } => injected.push((seq, s.step)),
                    Event::Resolved { class, steps } => {
                        if class != PathKind::Preferred {
                            let cx = Counterexample::new(format!("change resolved as {class:?}"));
                            return CheckReport::fail(NAME, cx.at_step(s.step));
                        }
                        durations.push(steps);
                    }
                    _ => {}
                }
            }
        }
        if durations.len() != injected.len() {
            let (seq, at) = injected[durations.len()];
            let cx = Counterexample::new(format!("change {seq} never resolved"));
            return CheckReport::fail(NAME, cx.at_step(at));
        }
        let mean = if durations.is_empty() { 0.0 } else { durations.iter().sum::<u64>() as f64 / durations.len() as f64 };
        CheckReport::pass(NAME)
            .metric("changes", durations.len() as f64)
            .metric("mean_steps", mean)
            .metric("max_steps", durations.iter().copied().max().unwrap_or(0) as f64)
    }
}
