//! Depth-first clockwise preferred (DFCP) tree and path.
//!
//! The tree is a depth-first search over boxes. At each box the sides are
//! swept clockwise, starting just after the side facing the parent; the root
//! treats its entry/exit side as the parent side. The path is built by
//! merging each box's unit cycle into its parent across the shared side.

use std::collections::{BTreeMap, BTreeSet};

use thiserror::Error;

use crate::lattice::{BoxId, Direction, Node, Shape};
use crate::path::Path;

/// Default node cap for [`brute_force_cycle`].
pub const BRUTE_FORCE_NODE_CAP: usize = 24;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum BruteForceError {
    #[error("no Hamiltonian entry-to-exit path exists")]
    NotFound,
    #[error("shape has {nodes} nodes, above the cap of {cap}")]
    CapExceeded { nodes: usize, cap: usize },
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BoxTree {
    pub root: BoxId,
    /// Parent of every non-root box.
    pub parent: BTreeMap<BoxId, BoxId>,
    /// Boxes in discovery order, root first.
    pub order: Vec<BoxId>,
}

impl BoxTree {
    pub fn children(&self, b: BoxId) -> Vec<BoxId> {
        self.order
            .iter()
            .copied()
            .filter(|c| self.parent.get(c) == Some(&b))
            .collect()
    }

    pub fn depth(&self, b: BoxId) -> usize {
        let mut d = 0;
        let mut cur = b;
        while let Some(&p) = self.parent.get(&cur) {
            d += 1;
            cur = p;
        }
        d
    }

    /// True if `b` has no children.
    pub fn is_leaf(&self, b: BoxId) -> bool {
        !self.parent.values().any(|&p| p == b)
    }
}

#[derive(Clone, Debug)]
pub struct DfcpResult {
    pub tree: BoxTree,
    pub path: Path,
    /// Unit-cycle insertions plus merges performed.
    pub ops: usize,
}

pub fn build_dfcp_tree(shape: &Shape) -> BoxTree {
    let root = shape.root();
    let mut parent = BTreeMap::new();
    let mut order = vec![root];
    // Each frame: box, side it came from, number of sides swept so far.
    let mut stack: Vec<(BoxId, Direction, usize)> = vec![(root, shape.broken_side(), 0)];
    while let Some(top) = stack.last_mut() {
        let (b, from, swept) = *top;
        if swept == 3 {
            stack.pop();
            continue;
        }
        top.2 += 1;
        let mut d = from;
        for _ in 0..=swept {
            d = d.clockwise();
        }
        let nb = b.neighbor(d);
        if shape.contains_box(nb) && nb != root && !parent.contains_key(&nb) {
            parent.insert(nb, b);
            order.push(nb);
            stack.push((nb, d.opposite(), 0));
        }
    }
    BoxTree {
        root,
        parent,
        order,
    }
}

/// The preferred path of `shape`.
pub fn dfcp_path(shape: &Shape) -> Path {
    dfcp_construct(shape).path
}

/// Builds the tree and path, counting unit-path insertions and merges.
pub fn dfcp_construct(shape: &Shape) -> DfcpResult {
    let tree = build_dfcp_tree(shape);
    let (entry, exit) = (shape.entry(), shape.exit());
    let mut path = Path::unit_path(entry, exit);
    let mut ops = 1;
    for &b in &tree.order[1..] {
        let p = tree.parent[&b];
        let d = p.direction_to(b).expect("tree edges join side-adjacent boxes");
        path.absorb(&Path::unit_cycle(b, entry, exit));
        merge_across(&mut path, p, d);
        ops += 2;
    }
    DfcpResult { tree, path, ops }
}

/// Backtracking search for any Hamiltonian entry-to-exit path over in-shape
/// lattice edges, in either rotational direction.
pub fn brute_force_cycle(shape: &Shape, cap: usize) -> Result<Path, BruteForceError> {
    let nodes = shape.node_count();
    if nodes > cap {
        return Err(BruteForceError::CapExceeded { nodes, cap });
    }
    let mut walk = vec![shape.entry()];
    let mut seen = BTreeSet::from([shape.entry()]);
    if extend(shape, &mut walk, &mut seen) {
        Ok(Path::from_walk(&walk))
    } else {
        Err(BruteForceError::NotFound)
    }
}

fn extend(shape: &Shape, walk: &mut Vec<Node>, seen: &mut BTreeSet<Node>) -> bool {
    let cur = *walk.last().unwrap();
    if seen.len() == shape.node_count() {
        return cur == shape.exit();
    }
    if cur == shape.exit() {
        return false;
    }
    for nb in cur.neighbors4() {
        if shape.contains(nb) && seen.insert(nb) {
            walk.push(nb);
            if extend(shape, walk, seen) {
                return true;
            }
            walk.pop();
            seen.remove(&nb);
        }
    }
    false
}

/// Merges the cycle of the box on side `d` of `p` into `p`'s component using
/// the clockwise edges on the shared side.
pub(crate) fn merge_across(path: &mut Path, p: BoxId, d: Direction) {
    let (tail, _) = p.side(d);
    let (child_tail, _) = p.neighbor(d).side(d.opposite());
    path.exchange(tail, child_tail);
}
