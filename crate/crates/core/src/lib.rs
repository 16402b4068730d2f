//! Robot swarms that hold a lattice shape while it is edited.
//!
//! Robots form a shape by tracing a planar Hamiltonian cycle through it, one
//! lattice node per robot, entering at a fixed entry node and leaving at the
//! adjacent exit node to recharge. Shapes are unions of 2x2 *boxes*, which
//! keeps the cycle computable from purely local rules. Boxes can be added or
//! removed while the swarm is running; the swarm repairs its path in place.
//!
//! The crate is layered bottom-up:
//!
//! - [`lattice`]: nodes, boxes, shape validity and periphery.
//! - [`path`]: directed paths over a shape, merging/separation and
//!   classification (preferred / valid / pseudo-valid / invalid).
//! - [`dfcp`]: the centralized depth-first clockwise-priority construction and
//!   a brute-force cycle finder, both used as oracles.
//! - [`agent`]: per-robot decision logic.
//! - [`engine`]: the lockstep simulator, charging station, scenarios and traces.
//! - [`verify`]: executable checkers for the whole stack.

pub mod agent;
pub mod dfcp;
pub mod engine;
pub mod lattice;
pub mod path;
pub mod shapes;
pub mod verify;

pub use lattice::{BoxId, GridSpec, Node, Shape, ShapeError};
pub use path::{DirectedEdge, Path, PathClass, PathKind};
