//! Property tests for the superposition engine and QRAM metering.

use proptest::prelude::*;
use qbtree_core::btree::NodeId;
use qbtree_core::qram::{slot_addr, Qram, QramValue};
use qbtree_core::qstate::{descend, load_pairs, mark_in_range};
use qbtree_core::{IoCounters, Key, KeyRecordPair, QueryRange, Rng, WeightedState};

proptest! {
    /// A superposed load is exactly one IO and preserves the total weight,
    /// whatever the state size.
    #[test]
    fn load_is_one_io_and_conserves_weight(
        addrs in prop::collection::btree_map(0u64..500, 1u64..20, 1..60)
    ) {
        let mut io = IoCounters::new();
        let mut q = Qram::new();
        q.store(3, QramValue::NodeRef(NodeId::new(7)), &mut io);
        io.reset();

        let state = WeightedState::from_weights(addrs.clone()).unwrap();
        let loaded = q.load_superposed(&state, &mut io);
        prop_assert_eq!(io.qram_loads, 1);
        prop_assert_eq!(loaded.total(), state.total());
    }

    /// XOR loading is an involution for every address and register.
    #[test]
    fn xor_load_involution(addr in 0u64..100, reg in any::<u128>(), key in -1000i64..1000, rec in any::<u64>()) {
        let mut io = IoCounters::new();
        let mut q = Qram::new();
        q.store(addr, QramValue::PairVal(KeyRecordPair::new(key, rec)), &mut io);
        prop_assert_eq!(q.xor_load(addr, q.xor_load(addr, reg)), reg);
    }

    /// Expansion multiplies the total by exactly B and marking preserves it.
    #[test]
    fn expand_and_mark_conserve_weight(
        keys in prop::collection::btree_set(-500i64..500, 1..40),
        lo in -500i64..500,
        len in 0i64..300,
    ) {
        let pairs: Vec<KeyRecordPair> =
            keys.iter().map(|&k| KeyRecordPair::new(k, k as u64)).collect();
        let state = WeightedState::uniform(pairs).unwrap();
        let expanded = state.expand(8);
        prop_assert_eq!(expanded.total(), state.total() * 8);

        let range = QueryRange::new(Key::new(lo), Key::new(lo + len)).unwrap();
        let flagged = mark_in_range(&state, &range);
        prop_assert_eq!(flagged.in_weight() + flagged.out_weight(), state.total());

        // The marked set equals the brute-force filter.
        let want: Vec<i64> = keys.iter().copied().filter(|k| lo <= *k && *k <= lo + len).collect();
        let got: Vec<i64> = flagged.in_labels().map(|(p, _)| p.key.get()).collect();
        prop_assert_eq!(got, want);
    }

    /// Measuring never invents labels and respects seeding.
    #[test]
    fn measure_is_deterministic_under_seed(
        weights in prop::collection::btree_map(0u32..50, 1u64..9, 1..20),
        seed in any::<u64>(),
    ) {
        let state = WeightedState::from_weights(weights).unwrap();
        let mut a = Rng::from_seed(seed);
        let mut b = Rng::from_seed(seed);
        let la = state.measure_once(&mut a);
        let lb = state.measure_once(&mut b);
        prop_assert_eq!(la, lb);
        prop_assert!(state.weight_of(&la) > 0);
    }
}

/// Descending a uniform state over a full tree keeps every slot weight
/// equal, dummies included.
#[test]
fn descend_uniformity_on_full_fanout_tree() {
    let mut io = IoCounters::new();
    let mut q0 = Qram::new();
    let mut q1 = Qram::new();
    let b = 4u32;
    // Root 0 with children 1..=4, all leaves; every leaf full.
    for j in 0..b {
        q0.store(
            slot_addr(NodeId::new(0), j, b),
            QramValue::NodeRef(NodeId::new(1 + j as u64)),
            &mut io,
        );
    }
    for leaf in 1..=4u64 {
        for j in 0..b {
            q0.store(
                slot_addr(NodeId::new(leaf), j, b),
                QramValue::NodeRef(NodeId::new(leaf)),
                &mut io,
            );
            let key = (leaf * 10 + j as u64) as i64;
            q1.store(
                slot_addr(NodeId::new(leaf), j, b),
                QramValue::PairVal(KeyRecordPair::new(key, key as u64)),
                &mut io,
            );
        }
    }
    io.reset();

    let root = WeightedState::uniform([NodeId::new(0)]).unwrap();
    let children = descend(&root, &q0, b, &mut io);
    assert_eq!(children.total(), 4);
    assert_eq!(children.len(), 4);
    assert!(children.iter().all(|(_, w)| w == 1));

    let pairs = load_pairs(&children, &q1, b, &mut io);
    assert_eq!(pairs.total(), 16);
    assert_eq!(pairs.len(), 16);
    assert!(pairs.iter().all(|(_, w)| w == 1));
    assert_eq!(io.qram_loads, 2);
}

/// Leaves self-map: descending a leaf (or the dummy block) multiplies its
/// weight by B without changing the label.
#[test]
fn leaf_and_dummy_fixed_points() {
    let mut io = IoCounters::new();
    let mut q0 = Qram::new();
    let b = 4u32;
    for j in 0..b {
        q0.store(
            slot_addr(NodeId::new(9), j, b),
            QramValue::NodeRef(NodeId::new(9)),
            &mut io,
        );
    }
    let leaf = WeightedState::uniform([NodeId::new(9)]).unwrap();
    let stepped = descend(&leaf, &q0, b, &mut io);
    assert_eq!(stepped.weight_of(&NodeId::new(9)), 4);
    assert_eq!(stepped.total(), 4);

    let dummy = WeightedState::uniform([NodeId::DUMMY]).unwrap();
    let stepped = descend(&dummy, &q0, b, &mut io);
    assert_eq!(stepped.weight_of(&NodeId::DUMMY), 4);
}

/// Empirical post-selection success rate converges to the exact rational.
#[test]
fn post_selection_rate_matches_exact_probability() {
    let pairs: Vec<KeyRecordPair> = (0..32).map(|k| KeyRecordPair::new(k, k as u64)).collect();
    let state = WeightedState::uniform(pairs).unwrap();
    let range = QueryRange::new(Key::new(0), Key::new(2)).unwrap();
    let flagged = mark_in_range(&state, &range); // 3/32

    let mut rng = Rng::from_seed(2024);
    let mut io = IoCounters::new();
    let trials = 200_000u64;
    let mut successes = 0u64;
    for _ in 0..trials {
        if matches!(
            flagged.post_select(&mut rng, &mut io),
            qbtree_core::MeasureOutcome::Success(_)
        ) {
            successes += 1;
        }
    }
    assert_eq!(io.post_selection_attempts, trials);
    let expected = 3.0 / 32.0;
    let observed = successes as f64 / trials as f64;
    assert!(
        (observed - expected).abs() < 0.004,
        "observed {observed}, expected {expected}"
    );
}
