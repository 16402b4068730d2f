//! Per-robot decision logic.
//!
//! Everything here is a pure function of one robot's state plus the messages
//! it receives. The engine decides when each function runs.

use std::collections::{BTreeMap, BTreeSet};
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::lattice::{box_of, cw_next, BoxId, Direction, Node, Shape};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum AgentError {
    #[error("robot at {0} has no legal edge")]
    NoLegalEdge(Node),
    #[error("message addressed to {target} delivered to robot at {at}")]
    TargetMismatch { target: Node, at: Node },
    #[error("no paired edge for a destination swap at {0}")]
    NoPairedEdge(Node),
}

/// What a robot remembers about its current traversal.
///
/// `visited_nodes` holds the nodes left behind, so the current node is not
/// in it. `visited_boxes` includes the current box.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct MemoryState {
    pub visited_nodes: Vec<Node>,
    pub visited_boxes: Vec<BoxId>,
    pub current_node: Node,
    pub box_parent: BTreeMap<BoxId, BoxId>,
    #[serde(skip)]
    node_set: BTreeSet<Node>,
    #[serde(skip)]
    box_set: BTreeSet<BoxId>,
}

impl MemoryState {
    /// Fresh memory of a robot standing on the entry node.
    pub fn at_entry(entry: Node) -> Self {
        let b = box_of(entry);
        MemoryState {
            visited_nodes: Vec::new(),
            visited_boxes: vec![b],
            current_node: entry,
            box_parent: BTreeMap::new(),
            node_set: BTreeSet::new(),
            box_set: BTreeSet::from([b]),
        }
    }

    /// Memory of a robot that walked `walk` from its first node to its last.
    pub fn from_walk(walk: &[Node]) -> Self {
        let mut m = MemoryState::at_entry(walk[0]);
        for &n in &walk[1..] {
            m.advance(n);
        }
        m
    }

    /// Rebuilds the lookup sets after deserialization.
    pub fn reindex(&mut self) {
        self.node_set = self.visited_nodes.iter().copied().collect();
        self.box_set = self.visited_boxes.iter().copied().collect();
    }

    pub fn current_box(&self) -> BoxId {
        box_of(self.current_node)
    }

    pub fn has_visited(&self, n: Node) -> bool {
        self.node_set.contains(&n)
    }

    pub fn has_visited_box(&self, b: BoxId) -> bool {
        self.box_set.contains(&b)
    }

    /// The node the robot stood on before the current one.
    pub fn previous_node(&self) -> Option<Node> {
        self.visited_nodes.last().copied()
    }

    /// Records a move to `to`. The parent of a newly seen box is the box the
    /// robot came from.
    pub fn advance(&mut self, to: Node) {
        let from = self.current_node;
        self.visited_nodes.push(from);
        self.node_set.insert(from);
        let (fb, tb) = (box_of(from), box_of(to));
        if fb != tb && self.box_set.insert(tb) {
            self.visited_boxes.push(tb);
            self.box_parent.insert(tb, fb);
        }
        self.current_node = to;
    }

    /// Heading of the last move; at the entry, the heading of a robot that
    /// just crossed the broken side into the shape.
    pub fn heading(&self, view: &Shape) -> Direction {
        match self.previous_node().and_then(|p| p.direction_to(self.current_node)) {
            Some(d) => d,
            None => view.broken_side().opposite(),
        }
    }
}

/// Outcome of the default behavior.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum NextMove {
    To(Node),
    ExitShape,
}

impl NextMove {
    pub fn node(self) -> Option<Node> {
        match self {
            NextMove::To(n) => Some(n),
            NextMove::ExitShape => None,
        }
    }
}

/// Which default-behavior rule produced a move.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Rule {
    Exit,
    UnvisitedBox,
    Clockwise,
    ParentBox,
}

/// The default behavior: drop visited and out-of-shape targets, then prefer
/// an unvisited box, then clockwise motion in the current box, then the
/// parent box.
pub fn default_next_edge(mem: &MemoryState, view: &Shape) -> Result<NextMove, AgentError> {
    default_next_edge_with_rule(mem, view).map(|(m, _)| m)
}

pub fn default_next_edge_with_rule(
    mem: &MemoryState,
    view: &Shape,
) -> Result<(NextMove, Rule), AgentError> {
    let n = mem.current_node;
    if n == view.exit() {
        return Ok((NextMove::ExitShape, Rule::Exit));
    }
    let candidates: Vec<Node> = n
        .neighbors4()
        .into_iter()
        .filter(|&c| c != n && !mem.has_visited(c) && view.contains(c))
        .collect();
    let fresh: Vec<Node> = candidates
        .iter()
        .copied()
        .filter(|&c| !mem.has_visited_box(box_of(c)))
        .collect();
    if let Some(pick) = right_turn_first(mem.heading(view), n, &fresh) {
        return Ok((NextMove::To(pick), Rule::UnvisitedBox));
    }
    let b = mem.current_box();
    if let Some(&c) = candidates.iter().find(|&&c| box_of(c) == b && cw_next(n) == c) {
        return Ok((NextMove::To(c), Rule::Clockwise));
    }
    if let Some(&parent) = mem.box_parent.get(&b) {
        if let Some(&c) = candidates.iter().find(|&&c| box_of(c) == parent) {
            return Ok((NextMove::To(c), Rule::ParentBox));
        }
    }
    Err(AgentError::NoLegalEdge(n))
}

/// Walks a lone robot from entry to exit by the default behavior.
pub fn default_walk(view: &Shape) -> Result<Vec<Node>, AgentError> {
    let mut m = MemoryState::at_entry(view.entry());
    let mut out = vec![view.entry()];
    while let NextMove::To(nx) = default_next_edge(&m, view)? {
        m.advance(nx);
        out.push(nx);
    }
    Ok(out)
}

/// Among `options`, the one needing the smallest turn to the right of
/// `heading`: right, then straight, then left.
fn right_turn_first(heading: Direction, from: Node, options: &[Node]) -> Option<Node> {
    options.iter().copied().min_by_key(|&o| {
        let d = from.direction_to(o).expect("candidates are neighbors");
        (heading.quarter_turns_to(d) + 3) % 4
    })
}

/// True iff `n` is outside `b` and lattice-adjacent to one of its nodes.
pub fn adjacent_to_box(n: Node, b: BoxId) -> bool {
    box_of(n) != b && n.neighbors4().into_iter().any(|m| box_of(m) == b)
}

/// Add-side inflection: among the nodes the robot has stood on (current
/// included) exactly one is adjacent to `added`, it is the current node, and
/// the robot was about to take a non-spanning periphery edge of `old`.
pub fn detect_inflection_add(
    mem: &MemoryState,
    planned: Option<Node>,
    old: &Shape,
    added: BoxId,
) -> bool {
    let n = mem.current_node;
    if !adjacent_to_box(n, added) {
        return false;
    }
    if mem.visited_nodes.iter().any(|&v| adjacent_to_box(v, added)) {
        return false;
    }
    match planned {
        Some(t) => box_of(t) == box_of(n) && old.is_periphery(n) && old.is_periphery(t),
        None => false,
    }
}

/// Subtract-side inflection: adjacent to the removed box, all four of its
/// nodes visited, and the previous node inside it.
pub fn detect_inflection_sub(mem: &MemoryState, removed: BoxId) -> bool {
    adjacent_to_box(mem.current_node, removed)
        && removed.nodes().iter().all(|&r| mem.has_visited(r))
        && mem.previous_node().is_some_and(|p| box_of(p) == removed)
}

/// Subtract-side SCSN: adjacent to the removed box, none of its nodes
/// visited, and the pre-removal plan led into it.
pub fn detect_scsn_sub(mem: &MemoryState, planned_before: Option<Node>, removed: BoxId) -> bool {
    adjacent_to_box(mem.current_node, removed)
        && removed.nodes().iter().all(|&r| !mem.has_visited(r))
        && planned_before.is_some_and(|t| box_of(t) == removed)
}

/// Geometry of an addition: the merge that splices the new box `y` into the
/// side of the box holding `n_cp`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct AddGeometry {
    pub n_cp: Node,
    /// Successor of `n_cp` on the existing path.
    pub h: Node,
    /// First node of `y` entered from `n_cp`.
    pub a: Node,
    /// Last node of `y`, which hands back to `h`.
    pub b: Node,
}

impl AddGeometry {
    pub fn new(n_cp: Node, y: BoxId) -> Self {
        let side = box_of(n_cp)
            .direction_to(y)
            .expect("the inflection node lies in a box beside the added box");
        let (tail, h) = box_of(n_cp).side(side);
        debug_assert_eq!(tail, n_cp);
        let (b, a) = y.side(side.opposite());
        AddGeometry { n_cp, h, a, b }
    }
}

/// Geometry of a subtraction.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SubGeometry {
    pub n_cp: Node,
    /// The removed-box node that leads out to `n_cp`.
    pub r_exit: Node,
}

/// Primary-phase decision for one robot.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Action {
    Move(Node),
    Hold,
    Exit,
}

/// Robot-relative position during a change.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Stance {
    InChangedBox,
    AtInflection,
    Downstream,
    Upstream,
}

/// Where `mem` stands relative to the changed box and the inflection node.
pub fn stance(mem: &MemoryState, changed: BoxId, n_cp: Node) -> Stance {
    if mem.current_box() == changed {
        Stance::InChangedBox
    } else if mem.current_node == n_cp {
        Stance::AtInflection
    } else if mem.has_visited(n_cp) {
        Stance::Downstream
    } else {
        Stance::Upstream
    }
}

/// Add primary changes. `planned` is the robot's current plan; for upstream
/// robots it must already be the default-behavior plan under the new shape.
pub fn primary_add_action(
    mem: &MemoryState,
    planned: Option<Node>,
    y: BoxId,
    geo: &AddGeometry,
) -> Action {
    match stance(mem, y, geo.n_cp) {
        Stance::InChangedBox if mem.current_node == geo.b => Action::Hold,
        Stance::InChangedBox => Action::Move(cw_next(mem.current_node)),
        Stance::AtInflection => Action::Move(geo.a),
        Stance::Downstream => Action::Hold,
        Stance::Upstream => planned.map_or(Action::Exit, Action::Move),
    }
}

/// Subtract primary changes. Returns the action and, for holding upstream
/// robots, a replacement plan when the old one led into the removed box.
pub fn primary_sub_action(
    mem: &MemoryState,
    planned: Option<Node>,
    r: BoxId,
    geo: &SubGeometry,
) -> (Action, Option<Node>) {
    let n = mem.current_node;
    match stance(mem, r, geo.n_cp) {
        Stance::InChangedBox if n == geo.r_exit => (Action::Move(geo.n_cp), None),
        Stance::InChangedBox => (Action::Move(cw_next(n)), None),
        Stance::AtInflection | Stance::Downstream => {
            (planned.map_or(Action::Exit, Action::Move), None)
        }
        Stance::Upstream => {
            let redirect = planned.filter(|&t| box_of(t) == r).map(|_| cw_next(n));
            (Action::Hold, redirect)
        }
    }
}

/// The communication-based repair message: a virtual robot's memory,
/// addressed to the robot on `target`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct MemoryMessage {
    pub memory: MemoryState,
    pub target: Node,
}

/// Rewrites the recipient's memory from `m`, then plans by default behavior.
/// Returns the recipient's new memory, its plan, and the forwarded message
/// (none once the exit has been reached).
pub fn apply_memory_message(
    at: Node,
    m: &MemoryMessage,
    view: &Shape,
) -> Result<(MemoryState, NextMove, Option<MemoryMessage>), AgentError> {
    if m.target != at {
        return Err(AgentError::TargetMismatch { target: m.target, at });
    }
    let mem = m.memory.clone();
    let next = default_next_edge(&mem, view)?;
    let forward = match next {
        NextMove::To(n2) => {
            let mut carried = mem.clone();
            carried.advance(n2);
            Some(MemoryMessage { memory: carried, target: n2 })
        }
        NextMove::ExitShape => None,
    };
    Ok((mem, next, forward))
}

/// Starts a memory message from the robot at the SCSN.
pub fn start_memory_message(
    mem: &MemoryState,
    view: &Shape,
) -> Result<(NextMove, Option<MemoryMessage>), AgentError> {
    let m = MemoryMessage { memory: mem.clone(), target: mem.current_node };
    let (_, next, fwd) = apply_memory_message(mem.current_node, &m, view)?;
    Ok((next, fwd))
}

/// A pass-back message: the sender's memory as it stood on `target`, and the
/// edge it took from there.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PassBackMessage {
    pub memory: MemoryState,
    pub next: NextMove,
    pub target: Node,
}

/// Builds the pass-back message of a robot that just moved from `before`
/// (its memory on the previous node) along `next`.
pub fn emit_passback(before: &MemoryState, next: NextMove) -> PassBackMessage {
    PassBackMessage {
        memory: before.clone(),
        next,
        target: before.current_node,
    }
}

/// Destination swap. The change robot at `w` heads for `x`; the neighbor at
/// `y` also planned `x`. The neighbor takes the node the change robot gave
/// up, which completes the 2x2 square `w, x, y, z`.
pub fn resolve_destination_conflict(w: Node, x: Node, y: Node) -> Result<Node, AgentError> {
    if !w.is_adjacent(x) || !y.is_adjacent(x) || w == y {
        return Err(AgentError::NoPairedEdge(y));
    }
    let z = Node::new(w.x + y.x - x.x, w.y + y.y - x.y);
    if z == x || !z.is_adjacent(w) || !z.is_adjacent(y) {
        return Err(AgentError::NoPairedEdge(y));
    }
    Ok(z)
}

/// Robot role during secondary changes.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Role {
    Normal,
    PassBack,
    ChangeRobot,
}

/// Where a robot is in its duty cycle.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Phase {
    InShape,
    ToStation,
    Charging,
    ToShape,
    Queued,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub enum ChangeType {
    Add,
    Subtract,
}

/// Secondary-change method.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Method {
    #[serde(rename = "comm")]
    CommunicationBased,
    #[serde(rename = "movement")]
    MovementBased,
}

/// What a robot knows about the current change. Knowledge only grows, so
/// flooding keeps whichever copy has the higher `(seq, level)`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ChangeNotice {
    pub seq: u64,
    pub ct: ChangeType,
    pub target: BoxId,
    pub n_cp: Option<Node>,
    pub scsn: Option<Node>,
    pub primary_done: bool,
}

impl ChangeNotice {
    pub fn new(seq: u64, ct: ChangeType, target: BoxId) -> Self {
        ChangeNotice { seq, ct, target, n_cp: None, scsn: None, primary_done: false }
    }

    fn level(&self) -> u8 {
        u8::from(self.n_cp.is_some()) + u8::from(self.scsn.is_some()) + u8::from(self.primary_done)
    }

    /// Merges `other` into `self`; true if anything was learned.
    pub fn merge(&mut self, other: &ChangeNotice) -> bool {
        if other.seq > self.seq {
            *self = *other;
            return true;
        }
        if other.seq < self.seq {
            return false;
        }
        let before = self.level();
        self.n_cp = self.n_cp.or(other.n_cp);
        self.scsn = self.scsn.or(other.scsn);
        self.primary_done |= other.primary_done;
        self.level() != before
    }
}

/// A robot's local copy of the shape, tagged with a version.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ShapeView {
    pub version: u64,
    pub shape: Arc<Shape>,
}

impl ShapeView {
    pub fn new(version: u64, shape: Shape) -> Self {
        ShapeView { version, shape: Arc::new(shape) }
    }

    /// Keeps the newer view; true if `self` changed.
    pub fn merge(&mut self, other: &ShapeView) -> bool {
        if other.version > self.version {
            *self = other.clone();
            true
        } else {
            false
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dfcp::dfcp_path;
    use crate::lattice::unit_shape;
    use crate::shapes;

    fn n(x: i32, y: i32) -> Node {
        Node::new(x, y)
    }

    fn solo_walk(s: &Shape) -> Vec<Node> {
        default_walk(s).unwrap()
    }

    #[test]
    fn unit_entry_uses_clockwise_rule() {
        let s = unit_shape();
        let m = MemoryState::at_entry(s.entry());
        assert_eq!(
            default_next_edge_with_rule(&m, &s).unwrap(),
            (NextMove::To(n(0, 1)), Rule::Clockwise)
        );
    }

    #[test]
    fn walk_matches_dfcp_on_named_shapes() {
        for s in [shapes::ell(), shapes::square(), shapes::n_shape(), shapes::u_shape()] {
            assert_eq!(solo_walk(&s), dfcp_path(&s).walk());
        }
    }

    #[test]
    fn exit_node_exits() {
        let s = unit_shape();
        let m = MemoryState::from_walk(&[n(0, 0), n(0, 1), n(1, 1), n(1, 0)]);
        assert_eq!(default_next_edge(&m, &s).unwrap(), NextMove::ExitShape);
    }

    #[test]
    fn box_parent_is_first_entry() {
        let s = shapes::ell();
        let walk = solo_walk(&s);
        let m = MemoryState::from_walk(&walk);
        assert_eq!(m.box_parent.get(&BoxId::new(1, 1)), Some(&BoxId::new(0, 1)));
        assert_eq!(m.box_parent.get(&BoxId::new(0, 0)), Some(&BoxId::new(0, 1)));
        assert_eq!(m.visited_boxes.len(), 3);
    }

    #[test]
    fn add_geometry_for_square() {
        let g = AddGeometry::new(n(3, 2), BoxId::new(1, 0));
        assert_eq!((g.h, g.a, g.b), (n(2, 2), n(3, 1), n(2, 1)));
    }

    #[test]
    fn inflection_add_on_ell() {
        let s = shapes::ell();
        let walk = solo_walk(&s);
        let y = BoxId::new(1, 0);
        let hits: Vec<Node> = (0..walk.len())
            .filter(|&i| {
                let m = MemoryState::from_walk(&walk[..=i]);
                detect_inflection_add(&m, walk.get(i + 1).copied(), &s, y)
            })
            .map(|i| walk[i])
            .collect();
        assert_eq!(hits, vec![n(3, 2)]);
        let m = MemoryState::from_walk(&walk[..=4]);
        // A spanning plan never qualifies.
        assert!(!detect_inflection_add(&m, Some(n(3, 1)), &s, y));
    }

    #[test]
    fn sub_predicates_on_square() {
        let s = shapes::square();
        let walk = solo_walk(&s);
        let r = BoxId::new(1, 0);
        let inflect: Vec<Node> = (0..walk.len())
            .filter(|&i| detect_inflection_sub(&MemoryState::from_walk(&walk[..=i]), r))
            .map(|i| walk[i])
            .collect();
        let scsn: Vec<Node> = (0..walk.len())
            .filter(|&i| {
                detect_scsn_sub(&MemoryState::from_walk(&walk[..=i]), walk.get(i + 1).copied(), r)
            })
            .map(|i| walk[i])
            .collect();
        assert_eq!(inflect.len(), 1);
        assert_eq!(scsn, vec![n(3, 2)]);
    }

    #[test]
    fn swap_completes_square() {
        assert_eq!(resolve_destination_conflict(n(2, 0), n(1, 0), n(1, 1)), Ok(n(2, 1)));
        assert!(resolve_destination_conflict(n(2, 0), n(1, 0), n(0, 0)).is_err());
    }

    #[test]
    fn memory_message_terminates_at_exit() {
        let s = unit_shape();
        let m = MemoryState::from_walk(&[n(0, 0), n(0, 1), n(1, 1), n(1, 0)]);
        let (next, fwd) = start_memory_message(&m, &s).unwrap();
        assert_eq!(next, NextMove::ExitShape);
        assert!(fwd.is_none());
        let bad = MemoryMessage { memory: m, target: n(0, 0) };
        assert!(matches!(
            apply_memory_message(n(1, 1), &bad, &s),
            Err(AgentError::TargetMismatch { .. })
        ));
    }

    #[test]
    fn notice_merge_is_monotone() {
        let mut a = ChangeNotice::new(1, ChangeType::Add, BoxId::new(0, 0));
        let mut b = a;
        b.n_cp = Some(n(1, 1));
        assert!(a.merge(&b));
        assert!(!a.merge(&b));
        let old = ChangeNotice::new(0, ChangeType::Subtract, BoxId::new(2, 2));
        assert!(!a.merge(&old));
        assert_eq!(a.n_cp, Some(n(1, 1)));
    }
}
