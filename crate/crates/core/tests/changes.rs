use proptest::prelude::*;
use rand::seq::IteratorRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use swarmshape::agent::{ChangeType, Method};
use swarmshape::engine::{ChangeStatus, SimConfig, SimWorld};
use swarmshape::shapes::random_shape;
use swarmshape::dfcp::dfcp_path;
use swarmshape::{BoxId, PathKind, Shape};

fn world(s: &Shape, method: Method) -> SimWorld {
    let cfg = SimConfig {
        robot_count: s.node_count() + 30,
        queue_len: 12,
        station_slots: 40,
        charge_steps: 1,
        method,
        ..SimConfig::default()
    };
    SimWorld::settled(cfg, s.clone()).unwrap()
}

/// Steps until the active change resolves; returns the steps taken.
fn settle(w: &mut SimWorld, cap: u64) -> u64 {
    for k in 1..=cap {
        w.step().unwrap();
        if w.active_change().is_none() {
            return k;
        }
    }
    panic!("change still active after {cap} steps");
}

fn check_resolved(w: &SimWorld) {
    let c = w.change_history().last().unwrap();
    assert_eq!(c.status, ChangeStatus::Resolved);
    assert_eq!(c.final_class.as_ref().unwrap().kind, PathKind::Preferred);
    assert_eq!(w.planned_path(), dfcp_path(w.shape()));
}

/// One random change on a random shape.
fn case(seed: u64) -> (Shape, ChangeType, BoxId) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    loop {
        let n = rng.gen_range(1..=20);
        let s = random_shape(&mut rng, n);
        let ct = if rng.gen_bool(0.5) { ChangeType::Subtract } else { ChangeType::Add };
        let cands = match ct {
            ChangeType::Add => s.addable_boxes(),
            ChangeType::Subtract => s.removable_boxes().into_iter().filter(|&b| b != s.root()).collect(),
        };
        if let Some(b) = cands.into_iter().choose(&mut rng) {
            return (s, ct, b);
        }
    }
}

#[test]
fn random_changes_resolve_to_preferred_with_both_methods() {
    for seed in 0..150 {
        let (s, ct, b) = case(seed);
        for m in [Method::CommunicationBased, Method::MovementBased] {
            let mut w = world(&s, m);
            w.inject_change(ct, b).unwrap();
            settle(&mut w, 400);
            check_resolved(&w);
        }
    }
}

#[test]
fn successive_changes_on_one_world() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let s = random_shape(&mut rng, 8);
    for m in [Method::CommunicationBased, Method::MovementBased] {
        let mut w = world(&s, m);
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for round in 0..12 {
            let shape = w.shape().clone();
            let removable: Vec<_> = shape.removable_boxes().into_iter().filter(|&b| b != shape.root()).collect();
            let add = round % 2 == 0 || removable.is_empty();
            let (ct, b) = if add {
                (ChangeType::Add, shape.addable_boxes().into_iter().choose(&mut rng).unwrap())
            } else {
                (ChangeType::Subtract, removable.into_iter().choose(&mut rng).unwrap())
            };
            while !w.changeable() {
                w.step().unwrap();
            }
            w.inject_change(ct, b).unwrap();
            settle(&mut w, 400);
            check_resolved(&w);
        }
        assert_eq!(w.change_history().len(), 12);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn any_single_change_resolves(seed in any::<u64>(), movement in any::<bool>()) {
        let (s, ct, b) = case(seed);
        let m = if movement { Method::MovementBased } else { Method::CommunicationBased };
        let mut w = world(&s, m);
        w.inject_change(ct, b).unwrap();
        settle(&mut w, 400);
        check_resolved(&w);
    }
}
