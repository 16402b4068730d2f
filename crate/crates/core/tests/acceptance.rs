//! Acceptance suite. Prints one line per criterion and fails the target if
//! any criterion fails. Tolerances and sizes are pinned below.

use std::collections::{BTreeMap, BTreeSet};
use std::path::PathBuf;
use std::process::ExitCode;
use std::time::{Duration, Instant};

use rand::seq::IteratorRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use swarmshape::agent::{default_walk, ChangeType, Method};
use swarmshape::dfcp::{brute_force_cycle, build_dfcp_tree, dfcp_construct, dfcp_path, BRUTE_FORCE_NODE_CAP};
use swarmshape::engine::{
    run_scenario, ChangeStatus, Command, Event, Initial, Scenario, ScriptEntry, SimConfig, SimWorld, Trace,
};
use swarmshape::lattice::validate_shape;
use swarmshape::path::{classify_path, PathKind};
use swarmshape::shapes::{self, fixed_polyominoes, legal_entry_exits, random_shape};
use swarmshape::verify::{check_planar_hamiltonian, check_trace, run_change};
use swarmshape::{BoxId, Node, Shape};

const A1_SHAPES: u64 = 500;
const A1_MAX_BOXES: usize = 40;
const A1_BUDGET: Duration = Duration::from_secs(60);
const A2_MAX_BOXES: usize = 5;
const A34_INSTANCES: u64 = 200;
const A34_MAX_BOXES: usize = 20;
const A5_STEPS: u64 = 180;
const A5_CYCLES: std::ops::RangeInclusive<u32> = 4..=5;
const A6_BUDGET: Duration = Duration::from_secs(300);
const A9_SIZES: std::ops::RangeInclusive<usize> = 10..=200;
const A9_MAX_RESIDUAL: f64 = 0.05;

type Outcome = Result<String, String>;

type Criterion = (&'static str, fn() -> Outcome);

fn main() -> ExitCode {
    let criteria: [Criterion; 9] = [
        ("A1 default walk equals DFCP path", a1),
        ("A2 exhaustive small shapes", a2),
        ("A3 additions", a3),
        ("A4 subtractions", a4),
        ("A5 persistence", a5),
        ("A6 N to U", a6),
        ("A7 walkthrough regressions", a7),
        ("A8 determinism", a8),
        ("A9 linear DFCP cost", a9),
    ];
    let filter = std::env::args().nth(1).filter(|a| !a.starts_with('-'));
    let mut failed = 0;
    for (name, run) in criteria {
        if filter.as_ref().is_some_and(|f| !name.contains(f.as_str())) {
            continue;
        }
        let t = Instant::now();
        let r = run();
        let secs = t.elapsed().as_secs_f64();
        match r {
            Ok(d) => println!("PASS {name}: {d} ({secs:.1}s)"),
            Err(d) => {
                failed += 1;
                println!("FAIL {name}: {d} ({secs:.1}s)");
            }
        }
    }
    if failed == 0 { ExitCode::SUCCESS } else { ExitCode::FAILURE }
}

fn ensure(ok: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if ok { Ok(()) } else { Err(msg()) }
}

fn a1() -> Outcome {
    let t = Instant::now();
    let mut shapes_checked = vec![shapes::dfcp_example(), shapes::ell()];
    for seed in 0..A1_SHAPES {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let n = rng.gen_range(1..=A1_MAX_BOXES);
        shapes_checked.push(random_shape(&mut rng, n));
    }
    for (k, s) in shapes_checked.iter().enumerate() {
        let walk = default_walk(s).map_err(|e| format!("shape {k}: {e}"))?;
        let want = dfcp_path(s);
        let edges: BTreeSet<_> = walk.windows(2).map(|w| (w[0], w[1])).collect();
        let dfcp: BTreeSet<_> = want.edges().map(|e| (e.from, e.to)).collect();
        ensure(edges == dfcp, || format!("shape {k}: edge sets differ"))?;
    }
    ensure(t.elapsed() < A1_BUDGET, || format!("took {:?}", t.elapsed()))?;
    Ok(format!("{} shapes, identical edge sets", shapes_checked.len()))
}

fn a2() -> Outcome {
    let (mut shapes_n, mut pairs) = (0, 0);
    for boxes in fixed_polyominoes(A2_MAX_BOXES) {
        shapes_n += 1;
        for (entry, exit) in legal_entry_exits(&boxes) {
            let s = validate_shape(boxes.iter().copied(), entry, exit).map_err(|e| e.to_string())?;
            let r = check_planar_hamiltonian(&s, &dfcp_path(&s));
            ensure(r.passed, || format!("{boxes:?} {entry}->{exit}: {:?}", r.counterexample))?;
            let b = brute_force_cycle(&s, BRUTE_FORCE_NODE_CAP).map_err(|e| format!("{boxes:?}: {e}"))?;
            ensure(check_planar_hamiltonian(&s, &b).passed, || format!("{boxes:?}: brute force path fails"))?;
            pairs += 1;
        }
    }
    Ok(format!("{shapes_n} shapes, {pairs} entry/exit pairs, zero failures"))
}

fn a8() -> Outcome {
    let mut scenarios = walkthroughs().into_iter().map(|w| w.scenario).collect::<Vec<_>>();
    scenarios.push(n_to_u(Method::CommunicationBased));
    scenarios.push(n_to_u(Method::MovementBased));
    for seed in 0..6 {
        scenarios.push(random_scenario(seed));
    }
    for (k, sc) in scenarios.iter().enumerate() {
        let a = run_scenario(sc).map_err(|e| format!("scenario {k}: {e}"))?;
        let b = run_scenario(sc).map_err(|e| format!("scenario {k}: {e}"))?;
        ensure(a.hash() == b.hash(), || format!("scenario {k}: hashes differ"))?;
    }
    Ok(format!("{} scenarios, identical hashes", scenarios.len()))
}

/// A random shape under a few random changes, with both methods in turn.
fn random_scenario(seed: u64) -> Scenario {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let s = random_shape(&mut rng, 12);
    let method = if seed.is_multiple_of(2) { Method::CommunicationBased } else { Method::MovementBased };
    let cfg = SimConfig {
        robot_count: 48 + 30,
        queue_len: 12,
        station_slots: 40,
        charge_steps: 1,
        method,
        initial: Initial::Settled,
        ..SimConfig::default()
    };
    let mut sc = Scenario::new(cfg, s.clone(), 150);
    if let Some(b) = s.addable_boxes().into_iter().choose(&mut rng) {
        sc.script.push(ScriptEntry { step: 3, command: Command::Add(b) });
    }
    sc
}

fn a9() -> Outcome {
    let mut pts = Vec::new();
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    for n in A9_SIZES.step_by(10) {
        let s = random_shape(&mut rng, n);
        pts.push((n as f64, dfcp_construct(&s).ops as f64));
    }
    // Least squares y = a + b x.
    let m = pts.len() as f64;
    let (sx, sy) = pts.iter().fold((0.0, 0.0), |(a, b), (x, y)| (a + x, b + y));
    let sxx: f64 = pts.iter().map(|(x, _)| x * x).sum();
    let sxy: f64 = pts.iter().map(|(x, y)| x * y).sum();
    let slope = (m * sxy - sx * sy) / (m * sxx - sx * sx);
    let icept = (sy - slope * sx) / m;
    let worst = pts.iter().map(|(x, y)| ((icept + slope * x) - y).abs() / y).fold(0.0, f64::max);
    ensure(worst < A9_MAX_RESIDUAL, || format!("relative residual {worst:.4}"))?;
    Ok(format!("ops = {icept:.2} + {slope:.3}*boxes, worst relative residual {worst:.4}"))
}

/// A random shape with a random legal box to add or remove.
fn change_case(seed: u64, ct: ChangeType) -> (Shape, BoxId) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    loop {
        let n = rng.gen_range(1..=A34_MAX_BOXES);
        let s = random_shape(&mut rng, n);
        let cands: Vec<BoxId> = match ct {
            ChangeType::Add => s.addable_boxes().into_iter().collect(),
            ChangeType::Subtract => s.removable_boxes().into_iter().filter(|&b| b != s.root()).collect(),
        };
        if let Some(b) = cands.into_iter().choose(&mut rng) {
            return (s, b);
        }
    }
}

/// Post-primary and final classes of one change.
fn classes(s: &Shape, ct: ChangeType, b: BoxId, m: Method) -> Result<(PathKind, PathKind), String> {
    let w = run_change(s, ct, b, m)?;
    let c = w.change_history().last().ok_or("no change recorded")?;
    let post = c.post_primary.as_ref().ok_or("no post-primary class")?.kind;
    let fin = c.final_class.as_ref().ok_or("no final class")?.kind;
    ensure(w.planned_path() == dfcp_path(w.shape()), || "swarm path is not the DFCP path".into())?;
    Ok((post, fin))
}

fn a3() -> Outcome {
    for seed in 0..A34_INSTANCES {
        let (s, b) = change_case(seed, ChangeType::Add);
        for m in [Method::CommunicationBased, Method::MovementBased] {
            let (post, fin) = classes(&s, ChangeType::Add, b, m).map_err(|e| format!("seed {seed} {m:?}: {e}"))?;
            ensure(matches!(post, PathKind::Valid | PathKind::Preferred), || {
                format!("seed {seed} {m:?}: post-primary {post:?}")
            })?;
            ensure(fin == PathKind::Preferred, || format!("seed {seed} {m:?}: final {fin:?}"))?;
        }
    }
    Ok(format!("{A34_INSTANCES} instances x 2 methods"))
}

fn a4() -> Outcome {
    let (mut leaves, mut branches) = (0, 0);
    for seed in 0..A34_INSTANCES {
        let (s, b) = change_case(seed, ChangeType::Subtract);
        let leaf = build_dfcp_tree(&s).is_leaf(b);
        if leaf { leaves += 1 } else { branches += 1 }
        for m in [Method::CommunicationBased, Method::MovementBased] {
            let (post, fin) =
                classes(&s, ChangeType::Subtract, b, m).map_err(|e| format!("seed {seed} {m:?}: {e}"))?;
            let ok = if leaf {
                post == PathKind::Preferred
            } else {
                matches!(post, PathKind::PseudoValid | PathKind::Valid)
            };
            ensure(ok, || format!("seed {seed} {m:?}: leaf={leaf} post-primary {post:?}"))?;
            ensure(fin == PathKind::Preferred, || format!("seed {seed} {m:?}: final {fin:?}"))?;
        }
    }
    Ok(format!("{leaves} leaf and {branches} branch removals x 2 methods"))
}

fn a5() -> Outcome {
    let cfg = SimConfig::default();
    ensure(cfg.robot_count == 38 && cfg.queue_len == 16 && cfg.station_slots == 22 && cfg.tau == 12.0, || {
        "default config drifted from the persistence setup".into()
    })?;
    let mut w = SimWorld::new(cfg.clone(), shapes::square()).map_err(|e| e.to_string())?;
    w.run_steps(A5_STEPS).map_err(|e| e.to_string())?;
    let t = w.trace();
    for r in check_trace(t).map_err(|e| e.to_string())? {
        ensure(r.passed, || format!("{}: {:?}", r.check_name, r.counterexample))?;
    }
    let mut docks: BTreeMap<u32, u32> = BTreeMap::new();
    for (_, e) in t.events() {
        if let Event::Docked { robot, .. } = e {
            *docks.entry(*robot).or_default() += 1;
        }
    }
    for r in w.robots() {
        ensure(A5_CYCLES.contains(&r.exits), || format!("robot {} left the shape {} times", r.id, r.exits))?;
        let d = docks.get(&r.id).copied().unwrap_or(0);
        ensure(d + 1 >= r.exits, || format!("robot {} docked {d} times after {} exits", r.id, r.exits))?;
    }
    // Fill takes one step per node; then one leaves and one enters each step.
    let nodes = w.shape().node_count() as u64;
    let count = |s: u64, f: fn(&Event) -> bool| t.steps[s as usize].events.iter().filter(|e| f(e)).count();
    for s in nodes + 1..=A5_STEPS {
        let (out, inn) = (count(s, |e| matches!(e, Event::Exited { .. })), count(s, |e| matches!(e, Event::Entered { .. })));
        ensure(out == 1 && inn == 1, || format!("step {s}: {out} out, {inn} in"))?;
    }
    let minutes = A5_STEPS as f64 * cfg.tau / 60.0;
    let (lo, hi) = w.robots().iter().fold((u32::MAX, 0), |(lo, hi), r| (lo.min(r.exits), hi.max(r.exits)));
    Ok(format!("{A5_STEPS} steps ({minutes:.0} simulated min), cycles per robot {lo}..{hi}, no collisions"))
}

fn n_to_u(method: Method) -> Scenario {
    let cfg = SimConfig {
        method,
        robot_count: 90,
        queue_len: 12,
        station_slots: 40,
        charge_steps: 1,
        initial: Initial::Settled,
        ..SimConfig::default()
    };
    let mut sc = Scenario::new(cfg, shapes::n_shape(), 10);
    let adds = shapes::N_TO_U_ADDS.map(|b| Command::Add(b.into()));
    let removes = shapes::N_TO_U_REMOVES.map(|b| Command::Remove(b.into()));
    sc.script = adds.into_iter().chain(removes).map(|command| ScriptEntry { step: 0, command }).collect();
    sc.max_steps = Some(2000);
    sc
}

fn a6() -> Outcome {
    let mut out = Vec::new();
    for m in [Method::CommunicationBased, Method::MovementBased] {
        out.push(format!("{m:?}: {}", n_to_u_run(m)?));
    }
    Ok(out.join("; "))
}

fn n_to_u_run(method: Method) -> Outcome {
    let t0 = Instant::now();
    let sc = n_to_u(method);
    let w = sc.run_world().map_err(|e| e.to_string())?;
    let wall = t0.elapsed();
    ensure(w.shape() == &shapes::u_shape(), || "final shape is not the U".into())?;
    let fin = classify_path(w.shape(), &w.planned_path());
    ensure(fin.kind == PathKind::Preferred, || format!("final path {:?}", fin.kind))?;
    ensure(w.planned_path() == dfcp_path(w.shape()), || "final path differs from DFCP".into())?;
    for r in check_trace(w.trace()).map_err(|e| e.to_string())? {
        ensure(r.passed, || format!("{}: {:?}", r.check_name, r.counterexample))?;
    }
    let hist = w.change_history();
    ensure(hist.len() == sc.script.len(), || format!("{} of {} changes resolved", hist.len(), sc.script.len()))?;
    ensure(hist.iter().all(|c| c.status == ChangeStatus::Resolved), || "a change is unresolved".into())?;
    ensure(wall < A6_BUDGET, || format!("wall clock {wall:?}"))?;
    let steps: Vec<u64> = w
        .trace()
        .events()
        .filter_map(|(_, e)| match e {
            Event::Resolved { steps, .. } => Some(*steps),
            _ => None,
        })
        .collect();
    let minutes: Vec<String> = steps.iter().map(|s| format!("{:.1}", *s as f64 * sc.config.tau / 60.0)).collect();
    Ok(format!(
        "{} changes by step {}, wall {:.2}s, resolution steps {steps:?} = [{}] simulated min",
        hist.len(),
        w.step_index(),
        wall.as_secs_f64(),
        minutes.join(", ")
    ))
}

struct Walkthrough {
    name: &'static str,
    scenario: Scenario,
    check: fn(&Trace) -> Result<(), String>,
}

fn walkthrough_scenario(shape: Shape, ct: ChangeType, b: BoxId, method: Method) -> Scenario {
    let cfg = SimConfig {
        robot_count: 40,
        queue_len: 8,
        station_slots: 32,
        charge_steps: 1,
        method,
        initial: Initial::Settled,
        ..SimConfig::default()
    };
    let mut sc = Scenario::new(cfg, shape, 24);
    let command = match ct {
        ChangeType::Add => Command::Add(b),
        ChangeType::Subtract => Command::Remove(b),
    };
    sc.script.push(ScriptEntry { step: 0, command });
    sc
}

/// Robots are numbered back from the exit, as in the walkthroughs.
fn walkthroughs() -> Vec<Walkthrough> {
    let corner = BoxId::new(1, 0);
    vec![
        Walkthrough {
            name: "add_primary",
            scenario: walkthrough_scenario(shapes::ell(), ChangeType::Add, corner, Method::CommunicationBased),
            check: check_add_primary,
        },
        Walkthrough {
            name: "sub_memory_message",
            scenario: walkthrough_scenario(shapes::square(), ChangeType::Subtract, corner, Method::CommunicationBased),
            check: check_sub_memory_message,
        },
        Walkthrough {
            name: "add_movement",
            scenario: walkthrough_scenario(shapes::ell(), ChangeType::Add, corner, Method::MovementBased),
            check: check_add_movement,
        },
    ]
}

fn at(t: &Trace, step: u64, robot: u32) -> Option<Node> {
    t.steps[step as usize].robots.iter().find(|r| r.id == robot)?.loc.node()
}

fn has(t: &Trace, step: u64, e: &Event) -> bool {
    t.steps[step as usize].events.contains(e)
}

fn first_step(t: &Trace, f: impl Fn(&Event) -> bool) -> Option<u64> {
    t.events().find(|(_, e)| f(e)).map(|(s, _)| s)
}

fn primary_done(t: &Trace) -> Result<u64, String> {
    first_step(t, |e| matches!(e, Event::PrimaryComplete { .. })).ok_or_else(|| "primary never completed".into())
}

fn occupants(t: &Trace, step: u64, b: BoxId) -> BTreeSet<u32> {
    t.steps[step as usize].robots.iter().filter(|r| r.loc.node().is_some_and(|n| b.contains(n))).map(|r| r.id).collect()
}

/// Robot 7 sits at the inflection point and leads 8, 9 and 10 into the new
/// box, one per step, then promotes the change robot.
fn check_add_primary(t: &Trace) -> Result<(), String> {
    let b = BoxId::new(1, 0);
    ensure(has(t, 1, &Event::Inflection { robot: 7, node: Node::new(3, 2) }), || "robot 7 is not the inflection".into())?;
    for (k, robot) in [7, 8, 9, 10].into_iter().enumerate() {
        let step = (1..t.steps.len() as u64).find(|&s| at(t, s, robot).is_some_and(|n| b.contains(n)));
        ensure(step == Some(k as u64 + 1), || format!("robot {robot} entered the box at {step:?}"))?;
    }
    let done = primary_done(t)?;
    ensure(done == 4, || format!("primary completed at step {done}"))?;
    ensure(occupants(t, done, b) == BTreeSet::from([7, 8, 9, 10]), || "box not filled by 7-10".into())?;
    ensure(has(t, done, &Event::Promoted { robot: 7 }), || "robot 7 did not promote".into())
}

/// Robot 2 is the inflection and 3, 8, 9, 10 follow it out; 4 and 11 turn
/// away from the removed box; robot 11 holds the SCSN; the memory message
/// visits 11,10,9,4,7,6,5,8 and only 9 and 5 turn.
fn check_sub_memory_message(t: &Trace) -> Result<(), String> {
    let b = BoxId::new(1, 0);
    let square = shapes::square();
    let old = dfcp_path(&square);
    ensure(has(t, 1, &Event::Inflection { robot: 2, node: Node::new(2, 2) }), || "robot 2 is not the inflection".into())?;
    ensure(has(t, 1, &Event::Scsn { robot: 11, node: Node::new(3, 2) }), || "robot 11 is not at the SCSN".into())?;
    ensure(occupants(t, 0, b) == BTreeSet::from([3, 8, 9, 10]), || "unexpected robots in the removed box".into())?;
    let done = primary_done(t)?;
    let mut left = Vec::new();
    for s in 1..=done {
        for r in occupants(t, s - 1, b).difference(&occupants(t, s, b)) {
            ensure(at(t, s, *r) == Some(Node::new(2, 2)), || format!("robot {r} left the box off robot 2's track"))?;
            left.push(*r);
        }
    }
    ensure(left == [3, 8, 9, 10], || format!("robots left the box in order {left:?}"))?;
    ensure(occupants(t, done, b).is_empty(), || "box not empty at primary completion".into())?;
    let pseudo = Event::PrimaryComplete { class: PathKind::PseudoValid, sub_cycles: 2 };
    ensure(has(t, done, &pseudo), || "primary did not leave a two-cycle pseudo-valid path".into())?;
    for robot in [4, 11] {
        let from = at(t, 0, robot).ok_or("robot off the shape")?;
        let planned = old.successor(from).ok_or("no old successor")?;
        let moved = (1..t.steps.len() as u64).map(|s| at(t, s, robot)).find(|n| *n != Some(from)).flatten();
        ensure(planned.box_id() != from.box_id(), || format!("robot {robot} had no spanning edge planned"))?;
        ensure(moved.is_some_and(|n| n.box_id() == from.box_id()), || format!("robot {robot} moved to {moved:?}"))?;
    }
    let msgs: Vec<(u32, bool)> = t
        .events()
        .filter_map(|(_, e)| match e {
            Event::MemoryMessage { robot, heading_changed, .. } => Some((*robot, *heading_changed)),
            _ => None,
        })
        .collect();
    let order: Vec<u32> = msgs.iter().map(|m| m.0).collect();
    ensure(order == [11, 10, 9, 4, 7, 6, 5, 8], || format!("message order {order:?}"))?;
    let turned: Vec<u32> = msgs.iter().filter(|m| m.1).map(|m| m.0).collect();
    ensure(turned == [9, 5], || format!("robots {turned:?} changed heading"))
}

/// Robot 11 is the change robot. It swaps twice with robot 7: first on
/// reaching the node between robot 10 (up) and robot 6 (left), which
/// splits off robots 7-10 as a sub-cycle, then once more to restore one
/// cycle.
fn check_add_movement(t: &Trace) -> Result<(), String> {
    let a = primary_done(t)?;
    ensure(has(t, a, &Event::Promoted { robot: 7 }), || "robot 7 did not promote".into())?;
    for (from, to) in [(3, 4), (5, 6), (4, 5)] {
        let found = t.steps[a as usize + 1]
            .events
            .iter()
            .any(|e| matches!(e, Event::PassBack { from: f, to: g, .. } if (*f, *g) == (from, to)));
        ensure(found, || format!("no pass-back {from}->{to} after pane a"))?;
    }
    let swaps: Vec<(u64, &Event)> = t.events().filter(|(_, e)| matches!(e, Event::DestinationSwap { .. })).collect();
    ensure(swaps.len() == 2, || format!("{} swaps", swaps.len()))?;
    let mut parts = Vec::new();
    for (s, e) in &swaps {
        let Event::DestinationSwap { change_robot, robot, w, x, y, z, class, sub_cycles } = e else { unreachable!() };
        ensure((*change_robot, *robot) == (11, 7), || format!("swap between {change_robot} and {robot}"))?;
        parts.push((*s, *w, *x, *y, *z, *class, *sub_cycles));
    }
    let (e1, w, x, y, z, class, cycles) = parts[0];
    ensure(e1 == a + 4, || format!("first swap at pane a+{}", e1 - a))?;
    let d = e1 - 1;
    let placed = [(11, w), (6, x), (7, y), (10, z)].iter().all(|&(r, n)| at(t, d, r) == Some(n));
    ensure(placed, || "first swap geometry differs".into())?;
    ensure((class, cycles) == (PathKind::PseudoValid, 2), || format!("first swap gave {class:?}/{cycles}"))?;
    let ring = |s: u64| -> BTreeSet<Node> { [7, 8, 9, 10].iter().filter_map(|&r| at(t, s, r)).collect() };
    let (e2, .., class2, cycles2) = parts[1];
    for s in e1..e2 {
        ensure(ring(s) == ring(e1) && ring(s).len() == 4, || format!("robots 7-10 left their sub-cycle at {s}"))?;
    }
    ensure((class2, cycles2) == (PathKind::Preferred, 1), || format!("second swap gave {class2:?}/{cycles2}"))?;
    let resolved = t.events().any(|(_, e)| matches!(e, Event::Resolved { class: PathKind::Preferred, .. }));
    ensure(resolved, || "change did not resolve as preferred".into())
}

fn golden_path(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/golden").join(format!("{name}.jsonl"))
}

/// Compares against the stored trace; `SWARMSHAPE_BLESS=1` rewrites it.
fn golden(name: &str, t: &Trace) -> Result<(), String> {
    let path = golden_path(name);
    let got = t.to_jsonl();
    if std::env::var_os("SWARMSHAPE_BLESS").is_some() {
        std::fs::create_dir_all(path.parent().unwrap()).map_err(|e| e.to_string())?;
        return std::fs::write(&path, got).map_err(|e| e.to_string());
    }
    let want = std::fs::read_to_string(&path).map_err(|e| format!("{}: {e}", path.display()))?;
    match want.lines().zip(got.lines()).position(|(a, b)| a != b) {
        Some(k) => Err(format!("{name}: golden differs at line {}", k + 1)),
        None if want.lines().count() != got.lines().count() => Err(format!("{name}: golden length differs")),
        None => Ok(()),
    }
}

fn a7() -> Outcome {
    let mut names = Vec::new();
    for w in walkthroughs() {
        let t = run_scenario(&w.scenario).map_err(|e| format!("{}: {e}", w.name))?;
        (w.check)(&t).map_err(|e| format!("{}: {e}", w.name))?;
        golden(w.name, &t)?;
        names.push(w.name);
    }
    Ok(format!("{} match their events and golden traces", names.join(", ")))
}
