//! Integer lattice geometry: nodes, the fixed 2x2 box tiling, and shapes.
//!
//! The y axis points up. Box `(i, j)` covers nodes `(2i, 2j)` through
//! `(2i + 1, 2j + 1)`; clockwise motion around a box goes SW -> NW -> NE -> SE.

use std::collections::{BTreeSet, VecDeque};
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// A node of the grid graph.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(from = "(i32, i32)", into = "(i32, i32)")]
pub struct Node {
    pub x: i32,
    pub y: i32,
}

impl From<(i32, i32)> for Node {
    fn from((x, y): (i32, i32)) -> Self {
        Node { x, y }
    }
}

impl From<Node> for (i32, i32) {
    fn from(n: Node) -> Self {
        (n.x, n.y)
    }
}

impl fmt::Display for Node {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({},{})", self.x, self.y)
    }
}

impl Node {
    pub const fn new(x: i32, y: i32) -> Self {
        Node { x, y }
    }

    pub fn step(self, dir: Direction) -> Node {
        let (dx, dy) = dir.offset();
        Node::new(self.x + dx, self.y + dy)
    }

    /// The N, S, E, W neighbors, in that order.
    pub fn neighbors4(self) -> [Node; 4] {
        [
            self.step(Direction::North),
            self.step(Direction::South),
            self.step(Direction::East),
            self.step(Direction::West),
        ]
    }

    /// All eight surrounding nodes (orthogonal and diagonal).
    pub fn neighbors8(self) -> impl Iterator<Item = Node> {
        (-1..=1)
            .flat_map(move |dx| (-1..=1).map(move |dy| (dx, dy)))
            .filter(|&(dx, dy)| (dx, dy) != (0, 0))
            .map(move |(dx, dy)| Node::new(self.x + dx, self.y + dy))
    }

    pub fn is_adjacent(self, other: Node) -> bool {
        (self.x - other.x).abs() + (self.y - other.y).abs() == 1
    }

    /// Direction of the unit step from `self` to `other`, if they are adjacent.
    pub fn direction_to(self, other: Node) -> Option<Direction> {
        Direction::ALL
            .into_iter()
            .find(|&d| self.step(d) == other)
    }

    pub fn box_id(self) -> BoxId {
        box_of(self)
    }
}

/// Box containing `node`: floor division of both coordinates by two.
pub fn box_of(node: Node) -> BoxId {
    BoxId::new(node.x.div_euclid(2), node.y.div_euclid(2))
}

/// Compass direction on the lattice.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Direction {
    North,
    East,
    South,
    West,
}

impl Direction {
    /// Clockwise order starting at north.
    pub const ALL: [Direction; 4] = [
        Direction::North,
        Direction::East,
        Direction::South,
        Direction::West,
    ];

    pub fn offset(self) -> (i32, i32) {
        match self {
            Direction::North => (0, 1),
            Direction::East => (1, 0),
            Direction::South => (0, -1),
            Direction::West => (-1, 0),
        }
    }

    pub fn clockwise(self) -> Direction {
        Direction::ALL[(self as usize + 1) % 4]
    }

    pub fn opposite(self) -> Direction {
        Direction::ALL[(self as usize + 2) % 4]
    }

    /// Number of clockwise quarter turns needed to go from `self` to `to`.
    pub fn quarter_turns_to(self, to: Direction) -> usize {
        (to as usize + 4 - self as usize) % 4
    }
}

/// One box of the fixed tiling.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(from = "(i32, i32)", into = "(i32, i32)")]
pub struct BoxId {
    pub i: i32,
    pub j: i32,
}

impl From<(i32, i32)> for BoxId {
    fn from((i, j): (i32, i32)) -> Self {
        BoxId { i, j }
    }
}

impl From<BoxId> for (i32, i32) {
    fn from(b: BoxId) -> Self {
        (b.i, b.j)
    }
}

impl fmt::Display for BoxId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[{},{}]", self.i, self.j)
    }
}

impl BoxId {
    pub const fn new(i: i32, j: i32) -> Self {
        BoxId { i, j }
    }

    pub fn sw(self) -> Node {
        Node::new(2 * self.i, 2 * self.j)
    }
    pub fn nw(self) -> Node {
        Node::new(2 * self.i, 2 * self.j + 1)
    }
    pub fn ne(self) -> Node {
        Node::new(2 * self.i + 1, 2 * self.j + 1)
    }
    pub fn se(self) -> Node {
        Node::new(2 * self.i + 1, 2 * self.j)
    }

    /// The four nodes in clockwise order starting at SW.
    pub fn nodes(self) -> [Node; 4] {
        [self.sw(), self.nw(), self.ne(), self.se()]
    }

    pub fn contains(self, node: Node) -> bool {
        box_of(node) == self
    }

    /// Center in node coordinates.
    pub fn center(self) -> (f64, f64) {
        (2.0 * self.i as f64 + 0.5, 2.0 * self.j as f64 + 0.5)
    }

    pub fn neighbor(self, dir: Direction) -> BoxId {
        let (di, dj) = dir.offset();
        BoxId::new(self.i + di, self.j + dj)
    }

    pub fn direction_to(self, other: BoxId) -> Option<Direction> {
        Direction::ALL
            .into_iter()
            .find(|&d| self.neighbor(d) == other)
    }

    /// The two nodes of the side facing `dir`, as `(tail, head)` of the
    /// clockwise edge along that side.
    pub fn side(self, dir: Direction) -> (Node, Node) {
        match dir {
            Direction::North => (self.nw(), self.ne()),
            Direction::East => (self.ne(), self.se()),
            Direction::South => (self.se(), self.sw()),
            Direction::West => (self.sw(), self.nw()),
        }
    }

    /// Side whose clockwise edge starts at `node` (its "forward" side).
    pub fn forward_side(self, node: Node) -> Direction {
        debug_assert!(self.contains(node));
        Direction::ALL
            .into_iter()
            .find(|&d| self.side(d).0 == node)
            .expect("every box node starts exactly one side")
    }
}

/// Clockwise successor of `node` within its own box.
pub fn cw_next(node: Node) -> Node {
    let b = box_of(node);
    b.side(b.forward_side(node)).1
}

/// Clockwise predecessor of `node` within its own box.
pub fn cw_prev(node: Node) -> Node {
    let b = box_of(node);
    b.nodes()
        .into_iter()
        .find(|&n| cw_next(n) == node)
        .expect("cw_next is a bijection on box nodes")
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum LatticeError {
    #[error("edge {0} -> {1} crosses a box boundary")]
    CrossBoxEdge(Node, Node),
    #[error("{0} and {1} are not lattice-adjacent")]
    NotAnEdge(Node, Node),
}

/// True iff the directed within-box edge advances clockwise around the box
/// center.
pub fn is_clockwise(from: Node, to: Node) -> Result<bool, LatticeError> {
    if !from.is_adjacent(to) {
        return Err(LatticeError::NotAnEdge(from, to));
    }
    if box_of(from) != box_of(to) {
        return Err(LatticeError::CrossBoxEdge(from, to));
    }
    Ok(cw_next(from) == to)
}

/// Physical lattice parameters. Communication reaches exactly the eight
/// surrounding lattice nodes.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub edge_length: f64,
    pub comm_range: f64,
}

impl GridSpec {
    pub fn new(edge_length: f64) -> Self {
        GridSpec {
            edge_length,
            comm_range: std::f64::consts::SQRT_2 * edge_length,
        }
    }

    /// Whether two physical points (meters) can talk to each other.
    pub fn in_range(&self, a: (f64, f64), b: (f64, f64)) -> bool {
        let d = ((a.0 - b.0).powi(2) + (a.1 - b.1).powi(2)).sqrt();
        d <= self.comm_range * (1.0 + 1e-9)
    }

    pub fn position(&self, n: Node) -> (f64, f64) {
        (n.x as f64 * self.edge_length, n.y as f64 * self.edge_length)
    }
}

impl Default for GridSpec {
    fn default() -> Self {
        GridSpec::new(0.2)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ShapeError {
    #[error("shape has no boxes")]
    EmptyShape,
    #[error("boxes are not connected through full shared sides (first unreachable box {0})")]
    DisconnectedBoxes(BoxId),
    #[error("bad entry/exit: {0}")]
    BadEntryExit(String),
}

/// A valid shape: a side-connected set of boxes plus fixed entry and exit.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "ShapeSpec", into = "ShapeSpec")]
pub struct Shape {
    boxes: BTreeSet<BoxId>,
    nodes: BTreeSet<Node>,
    entry: Node,
    exit: Node,
}

/// Serialized form of a [`Shape`].
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ShapeSpec {
    pub boxes: Vec<BoxId>,
    pub entry: Node,
    pub exit: Node,
}

impl TryFrom<ShapeSpec> for Shape {
    type Error = ShapeError;
    fn try_from(s: ShapeSpec) -> Result<Self, ShapeError> {
        validate_shape(s.boxes, s.entry, s.exit)
    }
}

impl From<Shape> for ShapeSpec {
    fn from(s: Shape) -> Self {
        ShapeSpec {
            boxes: s.boxes.into_iter().collect(),
            entry: s.entry,
            exit: s.exit,
        }
    }
}

/// Validates a box set with entry/exit nodes.
///
/// Besides connectivity, the exit -> entry break must lie on a side of the
/// entry box that faces out of the shape, so robots can reach the entry and
/// leave the exit without crossing in-shape nodes.
pub fn validate_shape(
    boxes: impl IntoIterator<Item = BoxId>,
    entry: Node,
    exit: Node,
) -> Result<Shape, ShapeError> {
    let boxes: BTreeSet<BoxId> = boxes.into_iter().collect();
    let Some(&first) = boxes.iter().next() else {
        return Err(ShapeError::EmptyShape);
    };
    let reached = flood_boxes(&boxes, first);
    if let Some(&lost) = boxes.iter().find(|b| !reached.contains(b)) {
        return Err(ShapeError::DisconnectedBoxes(lost));
    }
    let nodes: BTreeSet<Node> = boxes.iter().flat_map(|b| b.nodes()).collect();
    let shape = Shape {
        boxes,
        nodes,
        entry,
        exit,
    };
    shape.check_entry_exit()?;
    Ok(shape)
}

fn flood_boxes(boxes: &BTreeSet<BoxId>, start: BoxId) -> BTreeSet<BoxId> {
    let mut seen = BTreeSet::from([start]);
    let mut queue = VecDeque::from([start]);
    while let Some(b) = queue.pop_front() {
        for d in Direction::ALL {
            let nb = b.neighbor(d);
            if boxes.contains(&nb) && seen.insert(nb) {
                queue.push_back(nb);
            }
        }
    }
    seen
}

impl Shape {
    fn check_entry_exit(&self) -> Result<(), ShapeError> {
        let (entry, exit) = (self.entry, self.exit);
        if !self.nodes.contains(&entry) || !self.nodes.contains(&exit) {
            return Err(ShapeError::BadEntryExit(format!(
                "entry {entry} and exit {exit} must both be in the shape"
            )));
        }
        if !entry.is_adjacent(exit) || box_of(entry) != box_of(exit) {
            return Err(ShapeError::BadEntryExit(format!(
                "entry {entry} and exit {exit} must be adjacent within one box"
            )));
        }
        if cw_next(exit) != entry {
            return Err(ShapeError::BadEntryExit(format!(
                "the clockwise edge from exit {exit} must lead to entry {entry}"
            )));
        }
        let outside = self.root().neighbor(self.broken_side());
        if self.boxes.contains(&outside) {
            return Err(ShapeError::BadEntryExit(format!(
                "the exit->entry side faces box {outside}, which is in the shape"
            )));
        }
        Ok(())
    }

    pub fn boxes(&self) -> &BTreeSet<BoxId> {
        &self.boxes
    }

    pub fn nodes(&self) -> &BTreeSet<Node> {
        &self.nodes
    }

    pub fn entry(&self) -> Node {
        self.entry
    }

    pub fn exit(&self) -> Node {
        self.exit
    }

    pub fn box_count(&self) -> usize {
        self.boxes.len()
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn contains(&self, node: Node) -> bool {
        self.nodes.contains(&node)
    }

    pub fn contains_box(&self, b: BoxId) -> bool {
        self.boxes.contains(&b)
    }

    /// The box holding entry and exit.
    pub fn root(&self) -> BoxId {
        box_of(self.entry)
    }

    /// Side of the root box carrying the (absent) exit -> entry edge.
    pub fn broken_side(&self) -> Direction {
        self.root().forward_side(self.exit)
    }

    /// A node is on the periphery iff any of its eight surrounding nodes is
    /// out of the shape. Hole boundaries count as periphery.
    pub fn is_periphery(&self, node: Node) -> bool {
        self.contains(node) && node.neighbors8().any(|n| !self.contains(n))
    }

    pub fn periphery_nodes(&self) -> BTreeSet<Node> {
        self.nodes
            .iter()
            .copied()
            .filter(|&n| self.is_periphery(n))
            .collect()
    }

    /// Boxes outside the shape that share a full side with it, excluding the
    /// box across the entry/exit side.
    pub fn addable_boxes(&self) -> BTreeSet<BoxId> {
        let blocked = self.root().neighbor(self.broken_side());
        self.boxes
            .iter()
            .flat_map(|b| Direction::ALL.map(|d| b.neighbor(d)))
            .filter(|b| !self.boxes.contains(b) && *b != blocked)
            .collect()
    }

    /// Boxes whose removal leaves a valid shape with the same entry and exit.
    pub fn removable_boxes(&self) -> BTreeSet<BoxId> {
        self.boxes
            .iter()
            .copied()
            .filter(|&b| self.with_box_removed(b).is_ok())
            .collect()
    }

    pub fn with_box_added(&self, b: BoxId) -> Result<Shape, ShapeError> {
        if self.boxes.contains(&b) {
            return Err(ShapeError::DisconnectedBoxes(b));
        }
        let mut boxes = self.boxes.clone();
        boxes.insert(b);
        validate_shape(boxes, self.entry, self.exit)
    }

    pub fn with_box_removed(&self, b: BoxId) -> Result<Shape, ShapeError> {
        if b == self.root() {
            return Err(ShapeError::BadEntryExit(format!(
                "box {b} holds the entry and exit"
            )));
        }
        let mut boxes = self.boxes.clone();
        if !boxes.remove(&b) {
            return Err(ShapeError::DisconnectedBoxes(b));
        }
        validate_shape(boxes, self.entry, self.exit)
    }

    /// Side-adjacent in-shape boxes of `b`.
    pub fn box_neighbors(&self, b: BoxId) -> impl Iterator<Item = (Direction, BoxId)> + '_ {
        Direction::ALL
            .into_iter()
            .map(move |d| (d, b.neighbor(d)))
            .filter(|(_, nb)| self.boxes.contains(nb))
    }
}

/// The single unit shape at box (0,0) with entry (0,0) and exit (1,0).
pub fn unit_shape() -> Shape {
    validate_shape([BoxId::new(0, 0)], Node::new(0, 0), Node::new(1, 0))
        .expect("unit shape is valid")
}
