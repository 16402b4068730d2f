//! Checkers that audit paths, protocol runs and traces.
//!
//! They share nothing with the generators they audit beyond lattice
//! primitives: the Hamiltonian check walks successors itself, and the
//! clockwise and pairing checks use their own geometry.

// Counterexamples are built only on failure.
#![allow(clippy::result_large_err)]

mod theorems;
mod trace;

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::lattice::{Node, Shape};
use crate::path::{DirectedEdge, Path};

pub use theorems::{check_lemma, check_theorem, run_change, Instance};
pub use trace::{check_trace, MalformedTrace};

/// Where a check failed.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Counterexample {
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub shape: Option<Shape>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub path: Option<Path>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub step: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub robot: Option<u32>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub node: Option<Node>,
    pub detail: String,
}

impl Counterexample {
    pub fn new(detail: impl Into<String>) -> Self {
        Counterexample { detail: detail.into(), ..Default::default() }
    }

    pub fn at_node(mut self, n: Node) -> Self {
        self.node = Some(n);
        self
    }

    pub fn at_step(mut self, s: u64) -> Self {
        self.step = Some(s);
        self
    }

    pub fn robot(mut self, r: u32) -> Self {
        self.robot = Some(r);
        self
    }

    pub fn with_shape(mut self, s: &Shape) -> Self {
        self.shape = Some(s.clone());
        self
    }

    pub fn with_path(mut self, p: &Path) -> Self {
        self.path = Some(p.clone());
        self
    }
}

/// Outcome of one check. A counterexample is present iff it failed.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CheckReport {
    pub check_name: String,
    pub passed: bool,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub counterexample: Option<Counterexample>,
    #[serde(default)]
    pub metrics: BTreeMap<String, f64>,
}

impl CheckReport {
    pub fn pass(name: impl Into<String>) -> Self {
        CheckReport { check_name: name.into(), passed: true, counterexample: None, metrics: BTreeMap::new() }
    }

    pub fn fail(name: impl Into<String>, cx: Counterexample) -> Self {
        CheckReport { check_name: name.into(), passed: false, counterexample: Some(cx), metrics: BTreeMap::new() }
    }

    pub fn metric(mut self, key: &str, v: f64) -> Self {
        self.metrics.insert(key.into(), v);
        self
    }

    fn from_result(name: &str, r: Result<(), Counterexample>) -> Self {
        match r {
            Ok(()) => CheckReport::pass(name),
            Err(cx) => CheckReport::fail(name, cx),
        }
    }
}

/// Passes iff `path` runs from entry to exit through every node of `shape`
/// exactly once over lattice edges, with entry and exit adjacent on the
/// periphery.
pub fn check_planar_hamiltonian(shape: &Shape, path: &Path) -> CheckReport {
    const NAME: &str = "planar_hamiltonian";
    let r = planar_hamiltonian(shape, path).map_err(|cx| cx.with_shape(shape).with_path(path));
    CheckReport::from_result(NAME, r).metric("nodes", shape.node_count() as f64)
}

fn planar_hamiltonian(shape: &Shape, path: &Path) -> Result<(), Counterexample> {
    let (entry, exit) = (path.entry, path.exit);
    for n in [entry, exit] {
        if !shape.contains(n) {
            return Err(Counterexample::new("entry or exit lies outside the shape").at_node(n));
        }
        let outside = n.neighbors4().into_iter().any(|m| !shape.contains(m));
        if !outside {
            return Err(Counterexample::new("entry or exit is not on the periphery").at_node(n));
        }
    }
    if manhattan(entry, exit) != 1 {
        return Err(Counterexample::new("entry and exit are not adjacent").at_node(exit));
    }
    let mut seen = BTreeSet::from([entry]);
    let mut at = entry;
    while let Some(next) = path.successor(at) {
        if !shape.contains(next) {
            return Err(Counterexample::new(format!("edge {at}->{next} leaves the shape")).at_node(next));
        }
        if manhattan(at, next) != 1 {
            return Err(Counterexample::new(format!("{at}->{next} is not a lattice edge")).at_node(at));
        }
        if !seen.insert(next) {
            return Err(Counterexample::new(format!("{next} is visited twice")).at_node(next));
        }
        at = next;
    }
    if at != exit {
        return Err(Counterexample::new(format!("the walk stops at {at}, not the exit")).at_node(at));
    }
    if let Some(&n) = shape.nodes().iter().find(|n| !seen.contains(n)) {
        return Err(Counterexample::new(format!("{n} is never visited")).at_node(n));
    }
    if path.edge_count() != seen.len() - 1 {
        return Err(Counterexample::new("the path has edges off the walk"));
    }
    Ok(())
}

fn manhattan(a: Node, b: Node) -> i32 {
    (a.x - b.x).abs() + (a.y - b.y).abs()
}

/// True iff a within-box edge turns clockwise about its box center.
fn turns_clockwise(e: DirectedEdge) -> bool {
    // Doubled coordinates put the center of box (i, j) at (4i+1, 4j+1).
    let (cx, cy) = (4 * e.from.x.div_euclid(2) + 1, 4 * e.from.y.div_euclid(2) + 1);
    let (ax, ay) = (2 * e.from.x - cx, 2 * e.from.y - cy);
    let (bx, by) = (2 * e.to.x - cx, 2 * e.to.y - cy);
    ax * by - ay * bx < 0
}

/// The antiparallel edge that completes a spanning pair with `e`.
fn pair_of(e: DirectedEdge) -> DirectedEdge {
    let (dx, dy) = (e.to.x - e.from.x, e.to.y - e.from.y);
    // The other node on the same box side sits one step across the edge.
    let (px, py) = (dy, dx);
    let same_box = |a: Node, b: Node| a.x.div_euclid(2) == b.x.div_euclid(2) && a.y.div_euclid(2) == b.y.div_euclid(2);
    let up = Node::new(e.from.x + px, e.from.y + py);
    let side = if same_box(up, e.from) { up } else { Node::new(e.from.x - px, e.from.y - py) };
    DirectedEdge::new(Node::new(side.x + dx, side.y + dy), side)
}

fn spans(e: DirectedEdge) -> bool {
    e.from.x.div_euclid(2) != e.to.x.div_euclid(2) || e.from.y.div_euclid(2) != e.to.y.div_euclid(2)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dfcp::dfcp_path;
    use crate::lattice::{unit_shape, validate_shape, BoxId, Direction};
    use crate::shapes;

    fn n(x: i32, y: i32) -> Node {
        Node::new(x, y)
    }

    #[test]
    fn unit_dfcp_passes() {
        let s = unit_shape();
        assert!(check_planar_hamiltonian(&s, &dfcp_path(&s)).passed);
    }

    #[test]
    fn skipping_a_node_fails_there() {
        let (entry, exit) = shapes::entry_exit_on(BoxId::new(0, 0), Direction::West);
        let s = validate_shape([BoxId::new(0, 0), BoxId::new(1, 0)], entry, exit).unwrap();
        let mut p = dfcp_path(&s);
        let walk = p.walk();
        p.remove_edge_from(walk[3]);
        p.remove_edge_from(walk[4]);
        p.insert_edge(DirectedEdge::new(walk[3], walk[5]));
        let r = check_planar_hamiltonian(&s, &p);
        assert!(!r.passed);
        let cx = r.counterexample.unwrap();
        assert_eq!(cx.node, Some(walk[3]));
        assert!(cx.detail.contains("not a lattice edge"));
    }

    #[test]
    fn truncated_walk_fails() {
        let s = shapes::ell();
        let mut p = dfcp_path(&s);
        let walk = p.walk();
        p.remove_edge_from(walk[5]);
        let r = check_planar_hamiltonian(&s, &p);
        assert_eq!(r.counterexample.unwrap().node, Some(walk[5]));
    }

    #[test]
    fn clockwise_geometry() {
        assert!(turns_clockwise(DirectedEdge::new(n(0, 0), n(0, 1))));
        assert!(turns_clockwise(DirectedEdge::new(n(3, 3), n(3, 2))));
        assert!(!turns_clockwise(DirectedEdge::new(n(0, 1), n(0, 0))));
        assert!(turns_clockwise(DirectedEdge::new(n(-2, -1), n(-1, -1))));
        assert!(!turns_clockwise(DirectedEdge::new(n(-1, -1), n(-2, -1))));
    }

    #[test]
    fn spanning_pairs() {
        let e = DirectedEdge::new(n(1, 1), n(2, 1));
        assert!(spans(e));
        assert_eq!(pair_of(e), DirectedEdge::new(n(2, 0), n(1, 0)));
        let e = DirectedEdge::new(n(0, 2), n(0, 1));
        assert_eq!(pair_of(e), DirectedEdge::new(n(1, 1), n(1, 2)));
        for e in dfcp_path(&shapes::n_shape()).edges().filter(|e| spans(*e)) {
            assert_eq!(Some(pair_of(e)), e.partner());
        }
    }

    #[test]
    fn report_json_shape() {
        let r = CheckReport::fail("x", Counterexample::new("bad").at_step(3)).metric("k", 1.0);
        let v: serde_json::Value = serde_json::to_value(&r).unwrap();
        assert_eq!(v["counterexample"]["step"], 3);
        assert_eq!(v["metrics"]["k"], 1.0);
    }
}
