use crate::agent::{default_next_edge, default_walk, ChangeType, MemoryState, Method};
use crate::dfcp::{brute_force_cycle, build_dfcp_tree, dfcp_path, BRUTE_FORCE_NODE_CAP};
use crate::engine::{ChangeEvent, Event, SimConfig, SimWorld, Trace};
use crate::lattice::{BoxId, Node, Shape};
use crate::path::{classify_path, merge_paths, separate_path, DirectedEdge, Path, PathKind};

use super::{check_planar_hamiltonian, pair_of, spans, turns_clockwise, CheckReport, Counterexample};

/// Input to a theorem or lemma check.
#[derive(Clone, Debug)]
pub enum Instance {
    Shape(Shape),
    Path { shape: Shape, path: Path },
    /// A path and a pair of edges to merge or separate.
    Pair { shape: Shape, path: Path, a: DirectedEdge, b: DirectedEdge },
    /// One box added to or removed from `shape`.
    Change { shape: Shape, ct: ChangeType, target: BoxId, method: Method },
    Trace(Box<Trace>),
}

impl Instance {
    fn kind(&self) -> &'static str {
        match self {
            Instance::Shape(_) => "shape",
            Instance::Path { .. } => "path",
            Instance::Pair { .. } => "pair",
            Instance::Change { .. } => "change",
            Instance::Trace(_) => "trace",
        }
    }
}

fn wrong(name: &str, want: &str, got: &Instance) -> CheckReport {
    CheckReport::fail(name, Counterexample::new(format!("needs a {want} instance, got {}", got.kind())))
}

/// Runs one change on a fully settled world until it resolves.
pub fn run_change(shape: &Shape, ct: ChangeType, target: BoxId, method: Method) -> Result<SimWorld, String> {
    let max_boxes = shape.box_count().max(63) + 1;
    let cfg = SimConfig {
        robot_count: shape.node_count() + 30,
        queue_len: 12,
        station_slots: 40,
        charge_steps: 1,
        max_boxes,
        comm_rounds_per_step: 4 * max_boxes,
        method,
        ..SimConfig::default()
    };
    let mut w = SimWorld::settled(cfg, shape.clone()).map_err(|e| e.to_string())?;
    w.inject_change(ct, target).map_err(|e| e.to_string())?;
    let cap = 20 * shape.node_count() as u64 + 400;
    for _ in 0..cap {
        w.step().map_err(|e| e.to_string())?;
        if w.active_change().is_none() {
            return Ok(w);
        }
    }
    Err(format!("change unresolved after {cap} steps"))
}

fn ran(name: &str, shape: &Shape, ct: ChangeType, target: BoxId, method: Method) -> Result<SimWorld, CheckReport> {
    run_change(shape, ct, target, method)
        .map_err(|e| CheckReport::fail(name, Counterexample::new(e).with_shape(shape)))
}

fn last_change(w: &SimWorld) -> &ChangeEvent {
    w.change_history().last().expect("run_change resolves one change")
}

/// Checks theorem `id` (1 to 5) on `inst`.
///
/// 1. the DFCP path of a shape is a planar Hamiltonian path, and brute
///    force agrees that one exists;
/// 2. a lone robot's default walk equals the DFCP path;
/// 3. after an addition's primary changes the path is valid;
/// 4. after a subtraction's primary changes the path is preferred for a
///    leaf box and at least pseudo-valid for a branch box;
/// 5. no destination swap leaves an invalid path, and every change ends
///    on the preferred path.
pub fn check_theorem(id: u8, inst: &Instance) -> CheckReport {
    let name = format!("theorem_{id}");
    match (id, inst) {
        (1, Instance::Shape(s)) => theorem1(&name, s),
        (2, Instance::Shape(s)) => theorem2(&name, s),
        (3, Instance::Change { shape, ct: ChangeType::Add, target, method }) => {
            theorem3(&name, shape, *target, *method)
        }
        (4, Instance::Change { shape, ct: ChangeType::Subtract, target, method }) => {
            theorem4(&name, shape, *target, *method)
        }
        (5, Instance::Trace(t)) => theorem5(&name, t),
        (5, Instance::Change { shape, ct, target, .. }) => {
            match ran(&name, shape, *ct, *target, Method::MovementBased) {
                Ok(w) => theorem5(&name, w.trace()),
                Err(r) => r,
            }
        }
        (1 | 2, _) => wrong(&name, "shape", inst),
        (3, _) => wrong(&name, "addition", inst),
        (4, _) => wrong(&name, "subtraction", inst),
        (5, _) => wrong(&name, "trace or change", inst),
        _ => CheckReport::fail(&name, Counterexample::new("no such theorem")),
    }
}

fn theorem1(name: &str, s: &Shape) -> CheckReport {
    let p = dfcp_path(s);
    let mut r = check_planar_hamiltonian(s, &p);
    r.check_name = name.into();
    if r.passed && s.node_count() <= BRUTE_FORCE_NODE_CAP {
        match brute_force_cycle(s, BRUTE_FORCE_NODE_CAP) {
            Ok(b) if check_planar_hamiltonian(s, &b).passed => {}
            Ok(b) => {
                return CheckReport::fail(name, Counterexample::new("brute force output fails").with_shape(s).with_path(&b))
            }
            Err(e) => return CheckReport::fail(name, Counterexample::new(e.to_string()).with_shape(s)),
        }
    }
    r
}

fn theorem2(name: &str, s: &Shape) -> CheckReport {
    let walk = match default_walk(s) {
        Ok(w) => w,
        Err(e) => return CheckReport::fail(name, Counterexample::new(e.to_string()).with_shape(s)),
    };
    let want = dfcp_path(s).walk();
    match walk.iter().zip(&want).position(|(a, b)| a != b) {
        Some(k) => CheckReport::fail(
            name,
            Counterexample::new(format!("step {k} of the walk leaves the DFCP path")).at_node(walk[k]).with_shape(s),
        ),
        None if walk.len() != want.len() => {
            CheckReport::fail(name, Counterexample::new("walk length differs").with_shape(s))
        }
        None => CheckReport::pass(name).metric("nodes", walk.len() as f64),
    }
}

fn theorem3(name: &str, s: &Shape, y: BoxId, method: Method) -> CheckReport {
    let w = match ran(name, s, ChangeType::Add, y, method) {
        Ok(w) => w,
        Err(r) => return r,
    };
    let post = last_change(&w).post_primary.clone().expect("resolved changes passed the primary stage");
    let r = if post.is_valid() {
        CheckReport::pass(name)
    } else {
        CheckReport::fail(name, Counterexample::new(format!("post-primary path is {:?}", post.kind)).with_shape(s))
    };
    r.metric("sub_cycles", post.sub_cycle_count as f64)
}

fn theorem4(name: &str, s: &Shape, y: BoxId, method: Method) -> CheckReport {
    let leaf = build_dfcp_tree(s).is_leaf(y);
    let w = match ran(name, s, ChangeType::Subtract, y, method) {
        Ok(w) => w,
        Err(r) => return r,
    };
    let post = last_change(&w).post_primary.clone().expect("resolved changes passed the primary stage");
    let ok = matches!((leaf, post.kind), (true, PathKind::Preferred) | (false, PathKind::Valid | PathKind::PseudoValid));
    let r = if ok {
        CheckReport::pass(name)
    } else {
        let what = if leaf { "leaf" } else { "branch" };
        CheckReport::fail(name, Counterexample::new(format!("{what} removal left a {:?} path", post.kind)).with_shape(s))
    };
    r.metric("leaf", f64::from(u8::from(leaf))).metric("sub_cycles", post.sub_cycle_count as f64)
}

fn theorem5(name: &str, t: &Trace) -> CheckReport {
    let mut swaps = 0;
    let mut resolved = 0;
    for (step, e) in t.events() {
        match e {
            Event::DestinationSwap { class: PathKind::Invalid, robot, .. } => {
                return CheckReport::fail(name, Counterexample::new("swap left an invalid path").at_step(step).robot(*robot))
            }
            Event::DestinationSwap { .. } => swaps += 1,
            Event::Resolved { class: PathKind::Preferred, .. } => resolved += 1,
            Event::Resolved { class, .. } => {
                return CheckReport::fail(name, Counterexample::new(format!("change resolved as {class:?}")).at_step(step))
            }
            _ => {}
        }
    }
    let injected = t.events().filter(|(_, e)| matches!(e, Event::ChangeInjected { .. })).count();
    if resolved != injected {
        return CheckReport::fail(name, Counterexample::new(format!("{resolved} of {injected} changes resolved")));
    }
    CheckReport::pass(name).metric("swaps", swaps as f64).metric("changes", resolved as f64)
}

/// Checks lemma `id` (1 to 6) on `inst`.
///
/// 1. merging a legal pair joins two sub-cycles into one;
/// 2. separating a spanning pair splits one sub-cycle into two;
/// 3. a box does not affect a robot's decisions before it reaches the box;
/// 4. nor once the robot has visited every node of the box;
/// 5. every non-spanning edge turns clockwise about its box center;
/// 6. every spanning edge has its antiparallel partner.
pub fn check_lemma(id: u8, inst: &Instance) -> CheckReport {
    let name = format!("lemma_{id}");
    match (id, inst) {
        (1, Instance::Pair { shape, path, a, b }) => lemma_merge(&name, shape, path, *a, *b, true),
        (2, Instance::Pair { shape, path, a, b }) => lemma_merge(&name, shape, path, *a, *b, false),
        (3 | 4, Instance::Change { shape, ct, target, .. }) => lemma_locality(&name, shape, *ct, *target, id == 3),
        (5, Instance::Path { shape, path }) => lemma_clockwise(&name, shape, path),
        (6, Instance::Path { shape, path }) => lemma_pairs(&name, shape, path),
        (1 | 2, _) => wrong(&name, "pair", inst),
        (3 | 4, _) => wrong(&name, "change", inst),
        (5 | 6, _) => wrong(&name, "path", inst),
        _ => CheckReport::fail(&name, Counterexample::new("no such lemma")),
    }
}

fn lemma_merge(name: &str, s: &Shape, p: &Path, a: DirectedEdge, b: DirectedEdge, merge: bool) -> CheckReport {
    let before = classify_path(s, p);
    let out = if merge { merge_paths(p, a, b) } else { separate_path(p, a, b) };
    let q = match out {
        Ok(q) => q,
        Err(e) => return CheckReport::fail(name, Counterexample::new(e.to_string()).with_path(p)),
    };
    let after = classify_path(s, &q);
    let want = if merge { before.sub_cycle_count.checked_sub(1) } else { Some(before.sub_cycle_count + 1) };
    let ok = before.kind != PathKind::Invalid
        && after.kind != PathKind::Invalid
        && Some(after.sub_cycle_count) == want
        && (merge || after.kind == PathKind::PseudoValid);
    let r = if ok {
        CheckReport::pass(name)
    } else {
        let d = format!(
            "{:?} with {} sub-cycles became {:?} with {}",
            before.kind, before.sub_cycle_count, after.kind, after.sub_cycle_count
        );
        CheckReport::fail(name, Counterexample::new(d).with_shape(s).with_path(&q))
    };
    r.metric("sub_cycles", after.sub_cycle_count as f64)
}

/// Replays the walk through the shape that has box `y` and compares each
/// decision with the one made without `y`: before the robot first enters
/// `y` (`prefix`), or once it has left `y` for the last time.
fn lemma_locality(name: &str, s: &Shape, ct: ChangeType, y: BoxId, prefix: bool) -> CheckReport {
    let other = match ct {
        ChangeType::Add => s.with_box_added(y),
        ChangeType::Subtract => s.with_box_removed(y),
    };
    let other = match other {
        Ok(o) => o,
        Err(e) => return CheckReport::fail(name, Counterexample::new(e.to_string()).with_shape(s)),
    };
    let (with, without) = match ct {
        ChangeType::Add => (&other, s),
        ChangeType::Subtract => (s, &other),
    };
    let Ok(walk) = default_walk(with) else {
        return CheckReport::fail(name, Counterexample::new("default walk failed").with_shape(with));
    };
    let in_y = |n: &Node| y.contains(*n);
    let range = if prefix {
        0..walk.iter().position(in_y).expect("the walk covers every box").saturating_sub(1)
    } else {
        walk.iter().rposition(in_y).expect("the walk covers every box") + 1..walk.len()
    };
    let shared = range.len();
    for k in range {
        let mem = MemoryState::from_walk(&walk[..=k]);
        let (a, b) = (default_next_edge(&mem, with), default_next_edge(&mem, without));
        if a != b {
            let d = format!("at {} the robot picks {a:?} with the box and {b:?} without", walk[k]);
            return CheckReport::fail(name, Counterexample::new(d).at_node(walk[k]).with_shape(with));
        }
    }
    CheckReport::pass(name).metric("decisions", shared as f64)
}

fn lemma_clockwise(name: &str, s: &Shape, p: &Path) -> CheckReport {
    match p.edges().find(|&e| !spans(e) && !turns_clockwise(e)) {
        Some(e) => CheckReport::fail(
            name,
            Counterexample::new(format!("{}->{} runs counter-clockwise", e.from, e.to)).at_node(e.from).with_shape(s),
        ),
        None => CheckReport::pass(name),
    }
}

fn lemma_pairs(name: &str, s: &Shape, p: &Path) -> CheckReport {
    let mut pairs = 0;
    for e in p.edges().filter(|&e| spans(e)) {
        if !p.contains_edge(pair_of(e)) {
            return CheckReport::fail(
                name,
                Counterexample::new(format!("{}->{} has no partner", e.from, e.to)).at_node(e.from).with_shape(s),
            );
        }
        pairs += 1;
    }
    CheckReport::pass(name).metric("pairs", f64::from(pairs / 2))
}
