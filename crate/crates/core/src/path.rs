//! Directed paths over shape nodes and their classification.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::lattice::{box_of, cw_next, BoxId, Node, Shape};

/// A directed lattice edge.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct DirectedEdge {
    pub from: Node,
    pub to: Node,
}

impl DirectedEdge {
    pub fn new(from: Node, to: Node) -> Self {
        DirectedEdge { from, to }
    }

    /// Spanning edges connect two different boxes.
    pub fn is_spanning(&self) -> bool {
        box_of(self.from) != box_of(self.to)
    }

    /// For a spanning edge, the antiparallel edge on the same pair of box
    /// sides. Together they form a pair that links two unit cycles.
    pub fn partner(&self) -> Option<DirectedEdge> {
        if !self.is_spanning() || !self.from.is_adjacent(self.to) {
            return None;
        }
        let a = self.from;
        let (dx, dy) = (self.to.x - a.x, self.to.y - a.y);
        let other = box_of(a)
            .nodes()
            .into_iter()
            .find(|&m| m != a && m.is_adjacent(a) && box_of(m.step_by(dx, dy)) != box_of(a))?;
        Some(DirectedEdge::new(other.step_by(dx, dy), other))
    }
}

impl Node {
    fn step_by(self, dx: i32, dy: i32) -> Node {
        Node::new(self.x + dx, self.y + dy)
    }
}

impl fmt::Display for DirectedEdge {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}->{}", self.from, self.to)
    }
}

/// Classification outcome.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum PathKind {
    /// Valid and equal to the canonical DFCP path.
    Preferred,
    /// A single Hamiltonian entry-to-exit path using legal edges.
    Valid,
    /// Legal edges, but split into a main path plus disjoint cycles.
    PseudoValid,
    Invalid,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PathClass {
    pub kind: PathKind,
    /// Number of sub-cycles once the exit is joined back to the entry.
    pub sub_cycle_count: usize,
    pub reason: Option<String>,
}

impl PathClass {
    fn invalid(reason: String) -> Self {
        PathClass {
            kind: PathKind::Invalid,
            sub_cycle_count: 0,
            reason: Some(reason),
        }
    }

    /// Valid or Preferred.
    pub fn is_valid(&self) -> bool {
        matches!(self.kind, PathKind::Valid | PathKind::Preferred)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum PathError {
    #[error("bad entry/exit for a unit path: entry {entry}, exit {exit}")]
    BadEntryExit { entry: Node, exit: Node },
    #[error("edges {0} and {1} are not a mergeable non-spanning pair")]
    NotAMergeablePair(DirectedEdge, DirectedEdge),
    #[error("edges {0} and {1} are not a separable spanning pair")]
    NotASeparablePair(DirectedEdge, DirectedEdge),
}

/// The clockwise unit path of `b`, from `entry` around to `exit`.
pub fn unit_path(b: BoxId, entry: Node, exit: Node) -> Result<Path, PathError> {
    if !b.contains(entry) || !b.contains(exit) || cw_next(exit) != entry {
        return Err(PathError::BadEntryExit { entry, exit });
    }
    Ok(Path::unit_path(entry, exit))
}

/// Replaces a parallel, opposite non-spanning pair straddling a box side by
/// the corresponding spanning pair.
pub fn merge_paths(path: &Path, a: DirectedEdge, b: DirectedEdge) -> Result<Path, PathError> {
    let err = || PathError::NotAMergeablePair(a, b);
    if !path.contains_edge(a) || !path.contains_edge(b) || a.is_spanning() || b.is_spanning() {
        return Err(err());
    }
    let joined = DirectedEdge::new(a.from, b.to);
    if !a.from.is_adjacent(b.to) || !joined.is_spanning() || joined.partner() != Some(DirectedEdge::new(b.from, a.to)) {
        return Err(err());
    }
    let mut out = path.clone();
    out.exchange(a.from, b.from);
    Ok(out)
}

/// Inverse of [`merge_paths`]: replaces a spanning pair by the non-spanning
/// pair on either side.
pub fn separate_path(path: &Path, a: DirectedEdge, b: DirectedEdge) -> Result<Path, PathError> {
    if !path.contains_edge(a) || !path.contains_edge(b) || a.partner() != Some(b) {
        return Err(PathError::NotASeparablePair(a, b));
    }
    let mut out = path.clone();
    out.exchange(a.from, b.from);
    Ok(out)
}

/// Non-spanning path edges whose endpoints are both periphery nodes.
pub fn periphery_edges(shape: &Shape, path: &Path) -> BTreeSet<DirectedEdge> {
    path.edges()
        .filter(|e| !e.is_spanning() && shape.is_periphery(e.from) && shape.is_periphery(e.to))
        .collect()
}

/// A set of directed edges stored as a successor map, with entry and exit.
///
/// Intermediate states may contain separate cycles; only the structural
/// rule "at most one successor per node" is enforced by construction.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(from = "PathRepr", into = "PathRepr")]
pub struct Path {
    succ: BTreeMap<Node, Node>,
    pub entry: Node,
    pub exit: Node,
}

#[derive(Serialize, Deserialize)]
struct PathRepr {
    entry: Node,
    exit: Node,
    edges: Vec<DirectedEdge>,
}

impl From<PathRepr> for Path {
    fn from(r: PathRepr) -> Path {
        Path::from_edges(r.entry, r.exit, r.edges)
    }
}

impl From<Path> for PathRepr {
    fn from(p: Path) -> PathRepr {
        PathRepr { entry: p.entry, exit: p.exit, edges: p.edges().collect() }
    }
}

impl Path {
    pub fn new(entry: Node, exit: Node) -> Self {
        Path {
            succ: BTreeMap::new(),
            entry,
            exit,
        }
    }

    pub fn from_edges(entry: Node, exit: Node, edges: impl IntoIterator<Item = DirectedEdge>) -> Self {
        let mut p = Path::new(entry, exit);
        for e in edges {
            p.succ.insert(e.from, e.to);
        }
        p
    }

    /// Builds a path from a node sequence, linking consecutive nodes.
    pub fn from_walk(walk: &[Node]) -> Self {
        assert!(!walk.is_empty(), "walk must be non-empty");
        let mut p = Path::new(walk[0], *walk.last().unwrap());
        for w in walk.windows(2) {
            p.succ.insert(w[0], w[1]);
        }
        p
    }

    /// The four clockwise edges of box `b`, as a closed cycle.
    pub fn unit_cycle(b: BoxId, entry: Node, exit: Node) -> Self {
        Path::from_edges(entry, exit, b.nodes().map(|n| DirectedEdge::new(n, cw_next(n))))
    }

    /// Unit path of the entry box: its cycle with the exit -> entry edge removed.
    pub fn unit_path(entry: Node, exit: Node) -> Self {
        let mut p = Path::unit_cycle(box_of(entry), entry, exit);
        p.succ.remove(&exit);
        p
    }

    pub fn successor(&self, n: Node) -> Option<Node> {
        self.succ.get(&n).copied()
    }

    pub fn predecessor(&self, n: Node) -> Option<Node> {
        self.succ.iter().find(|(_, &t)| t == n).map(|(&f, _)| f)
    }

    pub fn contains_edge(&self, e: DirectedEdge) -> bool {
        self.succ.get(&e.from) == Some(&e.to)
    }

    pub fn edges(&self) -> impl Iterator<Item = DirectedEdge> + '_ {
        self.succ.iter().map(|(&f, &t)| DirectedEdge::new(f, t))
    }

    pub fn edge_count(&self) -> usize {
        self.succ.len()
    }

    pub fn nodes(&self) -> BTreeSet<Node> {
        self.succ
            .iter()
            .flat_map(|(&f, &t)| [f, t])
            .chain([self.entry, self.exit])
            .collect()
    }

    pub fn insert_edge(&mut self, e: DirectedEdge) -> Option<Node> {
        self.succ.insert(e.from, e.to)
    }

    pub fn remove_edge_from(&mut self, from: Node) -> Option<Node> {
        self.succ.remove(&from)
    }

    /// Adds every edge of `other`. Entry and exit stay as they are.
    pub fn absorb(&mut self, other: &Path) {
        for e in other.edges() {
            self.succ.insert(e.from, e.to);
        }
    }

    /// Exchanges the successors of `p` and `r`: `(p->q), (r->s)` become
    /// `(p->s), (r->q)`. Applied to a spanning pair this merges two cycles or
    /// splits one; it is its own inverse.
    pub fn exchange(&mut self, p: Node, r: Node) {
        let q = self.succ[&p];
        let s = self.succ[&r];
        self.succ.insert(p, s);
        self.succ.insert(r, q);
    }

    /// Node sequence from the entry following successors, stopping at the
    /// exit or when a node repeats.
    pub fn walk(&self) -> Vec<Node> {
        let mut out = vec![self.entry];
        let mut seen = BTreeSet::from([self.entry]);
        let mut cur = self.entry;
        while let Some(next) = self.successor(cur) {
            if !seen.insert(next) {
                break;
            }
            out.push(next);
            cur = next;
        }
        out
    }

    /// Position of each node along the entry walk.
    pub fn positions(&self) -> BTreeMap<Node, usize> {
        self.walk().into_iter().enumerate().map(|(i, n)| (n, i)).collect()
    }

    /// Hex sha256 over the sorted edge list plus entry and exit.
    pub fn digest(&self) -> String {
        let mut h = Sha256::new();
        for n in [self.entry, self.exit] {
            h.update(n.x.to_le_bytes());
            h.update(n.y.to_le_bytes());
        }
        for e in self.edges() {
            for n in [e.from, e.to] {
                h.update(n.x.to_le_bytes());
                h.update(n.y.to_le_bytes());
            }
        }
        hex(&h.finalize())
    }
}

pub(crate) fn hex(bytes: &[u8]) -> String {
    bytes.iter().map(|b| format!("{b:02x}")).collect()
}

/// Classifies `path` against `shape`.
pub fn classify_path(shape: &Shape, path: &Path) -> PathClass {
    let class = classify_structure(shape, path);
    if class.kind == PathKind::Valid && *path == crate::dfcp::dfcp_path(shape) {
        return PathClass {
            kind: PathKind::Preferred,
            ..class
        };
    }
    class
}

fn classify_structure(shape: &Shape, path: &Path) -> PathClass {
    if path.entry != shape.entry() || path.exit != shape.exit() {
        return PathClass::invalid("entry/exit differ from the shape".into());
    }
    if path.successor(path.exit).is_some() {
        return PathClass::invalid(format!("exit {} has a successor", path.exit));
    }
    let mut indeg: BTreeMap<Node, usize> = BTreeMap::new();
    for e in path.edges() {
        if !shape.contains(e.from) || !shape.contains(e.to) {
            return PathClass::invalid(format!("edge {e} leaves the shape"));
        }
        if !e.from.is_adjacent(e.to) {
            return PathClass::invalid(format!("edge {e} is not a lattice edge"));
        }
        if e.is_spanning() {
            match e.partner() {
                Some(p) if path.contains_edge(p) => {}
                _ => return PathClass::invalid(format!("spanning edge {e} is unpaired")),
            }
        } else if cw_next(e.from) != e.to {
            return PathClass::invalid(format!("edge {e} runs counter-clockwise"));
        }
        *indeg.entry(e.to).or_default() += 1;
    }
    for &n in shape.nodes() {
        let out = usize::from(path.successor(n).is_some());
        let inn = indeg.get(&n).copied().unwrap_or(0);
        let (want_out, want_in) = (
            usize::from(n != shape.exit()),
            usize::from(n != shape.entry()),
        );
        if out != want_out || inn != want_in {
            return PathClass::invalid(format!("node {n} has in/out degree {inn}/{out}"));
        }
    }
    // With exit joined to entry every node has in = out = 1: a union of cycles.
    let mut seen = BTreeSet::new();
    let mut sub_cycle_count = 0;
    for &start in shape.nodes() {
        if seen.contains(&start) {
            continue;
        }
        sub_cycle_count += 1;
        let mut cur = start;
        while seen.insert(cur) {
            cur = path.successor(cur).unwrap_or(path.entry);
        }
    }
    PathClass {
        kind: if sub_cycle_count == 1 {
            PathKind::Valid
        } else {
            PathKind::PseudoValid
        },
        sub_cycle_count,
        reason: None,
    }
}
