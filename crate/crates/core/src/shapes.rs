//! Named shapes, random shape growth, and polyomino enumeration.

use std::collections::BTreeSet;

use rand::seq::{IteratorRandom, SliceRandom};
use rand::Rng;

use crate::lattice::{validate_shape, BoxId, Direction, Node, Shape};

/// Entry/exit pair that breaks side `d` of box `b`.
pub fn entry_exit_on(b: BoxId, d: Direction) -> (Node, Node) {
    let (exit, entry) = b.side(d);
    (entry, exit)
}

/// Every legal `(entry, exit)` for a box set: one per outward-facing side.
pub fn legal_entry_exits(boxes: &BTreeSet<BoxId>) -> Vec<(Node, Node)> {
    boxes
        .iter()
        .flat_map(|&b| Direction::ALL.map(move |d| (b, d)))
        .filter(|(b, d)| !boxes.contains(&b.neighbor(*d)))
        .map(|(b, d)| entry_exit_on(b, d))
        .collect()
}

fn shape(boxes: &[(i32, i32)], root: (i32, i32), side: Direction) -> Shape {
    let (entry, exit) = entry_exit_on(root.into(), side);
    validate_shape(boxes.iter().map(|&b| BoxId::from(b)), entry, exit).expect("named shape is valid")
}

/// 2x2 square of boxes, entry (0,3), exit (0,2).
pub fn square() -> Shape {
    shape(&[(0, 0), (1, 0), (0, 1), (1, 1)], (0, 1), Direction::West)
}

/// L of three boxes with the same entry and exit as [`square`].
pub fn ell() -> Shape {
    shape(&[(0, 0), (0, 1), (1, 1)], (0, 1), Direction::West)
}

/// Six boxes indexed by their labels in the DFCP construction walkthrough.
/// Box 1's children are 2 then 4, and box 3 hangs off 4 though it also
/// touches the root.
pub const DFCP_EXAMPLE_BOXES: [(i32, i32); 6] = [(0, 0), (0, 1), (-1, 1), (1, 0), (1, 1), (-1, 2)];

/// The six-box walkthrough shape, rooted at box 0 with its west side open.
pub fn dfcp_example() -> Shape {
    shape(&DFCP_EXAMPLE_BOXES, (0, 0), Direction::West)
}

/// Boxes of the N shape: two 5-box columns joined by a diagonal staircase.
pub const N_BOXES: [(i32, i32); 17] = [
    (0, 0), (0, 1), (0, 2), (0, 3), (0, 4),
    (4, 0), (4, 1), (4, 2), (4, 3), (4, 4),
    (1, 4), (1, 3), (2, 3), (2, 2), (3, 2), (3, 1), (3, 0),
];

/// Boxes added, then removed, to turn the N into a U.
pub const N_TO_U_ADDS: [(i32, i32); 3] = [(1, 0), (2, 0), (1, 1)];
pub const N_TO_U_REMOVES: [(i32, i32); 5] = [(1, 4), (1, 3), (2, 3), (2, 2), (3, 2)];

pub fn n_shape() -> Shape {
    shape(&N_BOXES, (0, 0), Direction::West)
}

pub fn u_shape() -> Shape {
    let mut boxes: BTreeSet<(i32, i32)> = N_BOXES.into_iter().chain(N_TO_U_ADDS).collect();
    for r in N_TO_U_REMOVES {
        boxes.remove(&r);
    }
    let v: Vec<_> = boxes.into_iter().collect();
    shape(&v, (0, 0), Direction::West)
}

/// Grows a connected box set by repeatedly adding a uniformly chosen
/// side-adjacent box, then picks entry/exit uniformly among legal pairs.
pub fn random_shape<R: Rng + ?Sized>(rng: &mut R, n_boxes: usize) -> Shape {
    let boxes = random_boxes(rng, n_boxes);
    let ee = legal_entry_exits(&boxes);
    let &(entry, exit) = ee.choose(rng).expect("a finite box set has an outward side");
    validate_shape(boxes, entry, exit).expect("grown shape is valid")
}

pub fn random_boxes<R: Rng + ?Sized>(rng: &mut R, n_boxes: usize) -> BTreeSet<BoxId> {
    assert!(n_boxes >= 1);
    let mut boxes = BTreeSet::from([BoxId::new(0, 0)]);
    while boxes.len() < n_boxes {
        let frontier: BTreeSet<BoxId> = boxes
            .iter()
            .flat_map(|b| Direction::ALL.map(|d| b.neighbor(d)))
            .filter(|b| !boxes.contains(b))
            .collect();
        let pick = *frontier.iter().choose(rng).expect("frontier is never empty");
        boxes.insert(pick);
    }
    boxes
}

/// All fixed polyominoes with at most `max` boxes, translated so the
/// minimum coordinates are zero.
pub fn fixed_polyominoes(max: usize) -> Vec<BTreeSet<BoxId>> {
    let mut out = Vec::new();
    let mut level: BTreeSet<Vec<BoxId>> = BTreeSet::from([vec![BoxId::new(0, 0)]]);
    for size in 1..=max {
        out.extend(level.iter().map(|v| v.iter().copied().collect()));
        if size == max {
            break;
        }
        let mut next = BTreeSet::new();
        for poly in &level {
            let set: BTreeSet<BoxId> = poly.iter().copied().collect();
            for b in &set {
                for d in Direction::ALL {
                    let nb = b.neighbor(d);
                    if !set.contains(&nb) {
                        let mut grown = set.clone();
                        grown.insert(nb);
                        next.insert(normalize(&grown));
                    }
                }
            }
        }
        level = next;
    }
    out
}

fn normalize(set: &BTreeSet<BoxId>) -> Vec<BoxId> {
    let mi = set.iter().map(|b| b.i).min().unwrap();
    let mj = set.iter().map(|b| b.j).min().unwrap();
    set.iter().map(|b| BoxId::new(b.i - mi, b.j - mj)).collect()
}
