//! Which boxes a user may add or remove right now, and the matching robot
//! colors: green beside an addable box, blue inside a removable one, red
//! otherwise.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use super::world::SimWorld;
use crate::agent::ChangeType;
use crate::lattice::{BoxId, Direction, Node, Shape};

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ChangeHints {
    pub add: BTreeSet<BoxId>,
    pub remove: BTreeSet<BoxId>,
    /// Shape boxes and bordering boxes that accept neither change.
    pub blocked: BTreeSet<BoxId>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Led {
    Green,
    Blue,
    Red,
}

impl ChangeHints {
    /// Hints from geometry alone, for a swarm that is settled.
    pub fn for_shape(shape: &Shape, max_boxes: usize) -> ChangeHints {
        let mut h = ChangeHints::default();
        let blocked = shape.root().neighbor(shape.broken_side());
        for b in candidates(shape) {
            let ok = if shape.contains_box(b) {
                b != shape.root() && shape.with_box_removed(b).is_ok()
            } else {
                b != blocked && shape.box_count() < max_boxes && shape.with_box_added(b).is_ok()
            };
            match (ok, shape.contains_box(b)) {
                (true, true) => h.remove.insert(b),
                (true, false) => h.add.insert(b),
                (false, _) => h.blocked.insert(b),
            };
        }
        h
    }

    /// Every candidate blocked, as while a change is running.
    pub fn all_blocked(shape: &Shape) -> ChangeHints {
        ChangeHints { blocked: candidates(shape), ..ChangeHints::default() }
    }

    /// Color of a robot standing at `n`.
    pub fn led(&self, n: Node) -> Led {
        let beside_add = Direction::ALL.iter().any(|&d| {
            let m = n.step(d);
            m.box_id() != n.box_id() && self.add.contains(&m.box_id())
        });
        if beside_add {
            Led::Green
        } else if self.remove.contains(&n.box_id()) {
            Led::Blue
        } else {
            Led::Red
        }
    }
}

fn candidates(shape: &Shape) -> BTreeSet<BoxId> {
    shape.boxes().iter().flat_map(|&b| Direction::ALL.map(|d| b.neighbor(d)).into_iter().chain([b])).collect()
}

impl SimWorld {
    /// Hints that agree with [`SimWorld::check_change`] box by box.
    pub fn hints(&self) -> ChangeHints {
        let mut h = ChangeHints::default();
        for b in candidates(self.shape()) {
            let ct = if self.shape().contains_box(b) { ChangeType::Subtract } else { ChangeType::Add };
            match (self.check_change(ct, b), ct) {
                (Ok(_), ChangeType::Add) => h.add.insert(b),
                (Ok(_), ChangeType::Subtract) => h.remove.insert(b),
                (Err(_), _) => h.blocked.insert(b),
            };
        }
        h
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::engine::SimConfig;
    use crate::shapes;

    #[test]
    fn settled_world_matches_geometry() {
        let cfg = SimConfig { robot_count: 40, queue_len: 8, station_slots: 32, ..SimConfig::default() };
        let w = SimWorld::settled(cfg.clone(), shapes::ell()).unwrap();
        assert_eq!(w.hints(), ChangeHints::for_shape(w.shape(), cfg.max_boxes));
        let h = w.hints();
        assert!(h.add.contains(&BoxId::new(1, 0)));
        // The root holds the entry; the box across its open side is reserved.
        assert!(h.blocked.contains(&w.shape().root()));
        assert!(h.blocked.contains(&BoxId::new(-1, 1)));
    }

    #[test]
    fn filling_world_blocks_everything() {
        let w = SimWorld::new(SimConfig::default(), shapes::square()).unwrap();
        let h = w.hints();
        assert!(h.add.is_empty() && h.remove.is_empty());
        assert_eq!(h, ChangeHints::all_blocked(w.shape()));
    }

    #[test]
    fn leds_on_the_square() {
        let s = shapes::square();
        let h = ChangeHints::for_shape(&s, 64);
        // (3,3) sits on the east edge, beside addable box (2,1).
        assert_eq!(h.led(Node::new(3, 3)), Led::Green);
        // (1,1) is interior, inside removable box (0,0).
        assert_eq!(h.led(Node::new(1, 1)), Led::Blue);
        // The entry borders addable box (0,2) to the north.
        assert_eq!(h.led(Node::new(0, 3)), Led::Green);
        // The exit only faces the reserved box and the fixed root.
        assert_eq!(h.led(s.exit()), Led::Red);
    }
}
