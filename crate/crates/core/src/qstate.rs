//! Exact integer-weighted superpositions.
//!
//! Every state the search algorithms construct has amplitudes of the form
//! `sqrt(w / total)` with non-negative integer weights `w`, so an exact map
//! from basis label to weight captures it completely. Probabilities are the
//! rationals `w / total`; no floating point enters the engine. Merging equal
//! labels by weight addition is valid because these amplitudes are
//! non-negative reals (no interference), a deliberate model restriction.
//!
//! Hadamard expansion is free in the IO model; only QRAM applications are
//! metered.

use alloc::collections::BTreeMap;
use alloc::vec::Vec;

use crate::btree::NodeId;
use crate::error::{Error, Result};
use crate::metrics::IoCounters;
use crate::qram::{slot_addr, Qram, QramValue};
use crate::ratio::Ratio;
use crate::rng::Rng;
use crate::types::{KeyRecordPair, QueryRange};

/// A superposition as a map from basis label to positive integer weight.
/// Non-empty by construction; `total` is the sum of all weights.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct WeightedState<L: Ord + Clone> {
    entries: BTreeMap<L, u64>,
    total: u64,
}

impl<L: Ord + Clone> WeightedState<L> {
    /// Uniform superposition: every label gets weight 1.
    pub fn uniform<I: IntoIterator<Item = L>>(labels: I) -> Result<WeightedState<L>> {
        let mut entries = BTreeMap::new();
        for l in labels {
            *entries.entry(l).or_insert(0) += 1;
        }
        if entries.is_empty() {
            return Err(Error::EmptySet);
        }
        let total = entries.values().sum();
        Ok(WeightedState { entries, total })
    }

    /// Superposition with the given weights. Weights for equal labels merge.
    pub fn from_weights<I: IntoIterator<Item = (L, u64)>>(items: I) -> Result<WeightedState<L>> {
        let mut entries = BTreeMap::new();
        let mut any = false;
        for (l, w) in items {
            any = true;
            if w == 0 {
                return Err(Error::ZeroWeight);
            }
            *entries.entry(l).or_insert(0) += w;
        }
        if !any {
            return Err(Error::EmptySet);
        }
        let total = entries.values().sum();
        Ok(WeightedState { entries, total })
    }

    pub fn total(&self) -> u64 {
        self.total
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn weight_of(&self, label: &L) -> u64 {
        self.entries.get(label).copied().unwrap_or(0)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&L, u64)> {
        self.entries.iter().map(|(l, w)| (l, *w))
    }

    pub fn labels(&self) -> impl Iterator<Item = &L> {
        self.entries.keys()
    }

    /// Appends `n_b` fresh Hadamard-expanded qubits: every `(label, w)`
    /// becomes the `B` entries `((label, j), w)` for `j` in `0..B`. The
    /// total multiplies by exactly `B`. No IO is charged.
    pub fn expand(&self, b: u32) -> WeightedState<(L, u32)> {
        let mut entries = BTreeMap::new();
        for (l, w) in self.entries.iter() {
            for j in 0..b {
                entries.insert((l.clone(), j), *w);
            }
        }
        let total = self.total * b as u64;
        WeightedState { entries, total }
    }

    /// Relabels every basis state, merging weights of colliding images.
    /// Total is preserved.
    pub fn map_labels<M: Ord + Clone>(&self, mut f: impl FnMut(&L) -> M) -> WeightedState<M> {
        let mut entries = BTreeMap::new();
        for (l, w) in self.entries.iter() {
            *entries.entry(f(l)).or_insert(0) += *w;
        }
        WeightedState {
            entries,
            total: self.total,
        }
    }

    /// Scales every weight by `factor`. Models carrying a state through
    /// extra expansion rounds that other branches of a combined search
    /// still need (a leaf passes through a round with its probability
    /// mass intact while the round multiplies bookkeeping totals by B).
    pub fn scale(&self, factor: u64) -> WeightedState<L> {
        assert!(factor > 0);
        let entries = self
            .entries
            .iter()
            .map(|(l, w)| (l.clone(), w * factor))
            .collect();
        WeightedState {
            entries,
            total: self.total * factor,
        }
    }

    /// Union of two states over the same label type; weights of equal
    /// labels add, totals add.
    pub fn union(mut self, other: WeightedState<L>) -> WeightedState<L> {
        for (l, w) in other.entries {
            *self.entries.entry(l).or_insert(0) += w;
        }
        self.total += other.total;
        self
    }

    /// Draws one label with probability `weight / total`, collapsing the
    /// superposition.
    pub fn measure_once(&self, rng: &mut Rng) -> L {
        let mut draw = rng.gen_range(self.total);
        for (l, w) in self.entries.iter() {
            if draw < *w {
                return l.clone();
            }
            draw -= *w;
        }
        unreachable!("total is the sum of all weights");
    }
}

/// A superposition split by an oracle flag: `in_state` holds the marked
/// basis states, `out_weight` the total weight of everything else.
/// `in_weight + out_weight == total`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FlaggedState<L: Ord + Clone> {
    in_entries: BTreeMap<L, u64>,
    in_weight: u64,
    out_weight: u64,
}

/// Outcome of measuring the flag qubit.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum MeasureOutcome<L: Ord + Clone> {
    /// The flag came up marked; the state collapses to the renormalized
    /// marked part (weights unchanged, total = in-weight).
    Success(WeightedState<L>),
    Failure,
}

impl<L: Ord + Clone> FlaggedState<L> {
    pub fn total(&self) -> u64 {
        self.in_weight + self.out_weight
    }

    pub fn in_weight(&self) -> u64 {
        self.in_weight
    }

    pub fn out_weight(&self) -> u64 {
        self.out_weight
    }

    pub fn in_labels(&self) -> impl Iterator<Item = (&L, u64)> {
        self.in_entries.iter().map(|(l, w)| (l, *w))
    }

    /// Probability that post-selection succeeds, as an exact rational.
    pub fn success_probability(&self) -> Ratio {
        Ratio::new(self.in_weight as u128, self.total() as u128)
    }

    /// Expected number of post-selection attempts, `total / in`.
    pub fn expected_attempts(&self) -> Result<Ratio> {
        if self.in_weight == 0 {
            return Err(Error::NoResults);
        }
        Ok(Ratio::new(self.total() as u128, self.in_weight as u128))
    }

    /// Measures the flag qubit: success with exact probability
    /// `in / total`, returning the renormalized marked state.
    /// Each call counts one post-selection attempt.
    pub fn post_select(&self, rng: &mut Rng, io: &mut IoCounters) -> MeasureOutcome<L> {
        io.post_selection_attempts += 1;
        let draw = rng.gen_range(self.total());
        if draw < self.in_weight {
            MeasureOutcome::Success(WeightedState {
                entries: self.in_entries.clone(),
                total: self.in_weight,
            })
        } else {
            MeasureOutcome::Failure
        }
    }
}

/// Oracle marking: splits a pair state into the entries whose key lies in
/// `range` and everything else (dummies always fall outside). Free in the
/// IO model.
pub fn mark_in_range(
    state: &WeightedState<KeyRecordPair>,
    range: &QueryRange,
) -> FlaggedState<KeyRecordPair> {
    mark_with(state, |p| !p.is_dummy() && range.contains(p.key))
}

/// Oracle marking with an arbitrary predicate on the basis label.
pub fn mark_with<L: Ord + Clone>(
    state: &WeightedState<L>,
    mut pred: impl FnMut(&L) -> bool,
) -> FlaggedState<L> {
    let mut in_entries = BTreeMap::new();
    let mut in_weight = 0;
    let mut out_weight = 0;
    for (l, w) in state.iter() {
        if pred(l) {
            in_entries.insert(l.clone(), w);
            in_weight += w;
        } else {
            out_weight += w;
        }
    }
    FlaggedState {
        in_entries,
        in_weight,
        out_weight,
    }
}

/// One hierarchy round: Hadamard-expand each node label over its `B` child
/// slots, apply the hierarchy QRAM (1 IO), and relabel each slot to the
/// child it references. Leaves self-map, the dummy block maps to dummy, and
/// weights of identical children merge.
pub fn descend(
    state: &WeightedState<NodeId>,
    q0: &Qram,
    b: u32,
    io: &mut IoCounters,
) -> WeightedState<NodeId> {
    io.qram_loads += 1;
    descend_uncharged(state, q0, b)
}

/// The relabeling part of [`descend`]. Combined multi-tree searches run one
/// logical load per round across several per-tree states, charging the
/// round once and stepping each state through this.
pub fn descend_uncharged(
    state: &WeightedState<NodeId>,
    q0: &Qram,
    b: u32,
) -> WeightedState<NodeId> {
    state.expand(b).map_labels(|(node, slot)| {
        match q0.peek(slot_addr(*node, *slot, b)) {
            QramValue::NodeRef(child) => child,
            QramValue::Dummy => NodeId::DUMMY,
            // The hierarchy QRAM never stores pair or routing cells.
            _ => NodeId::DUMMY,
        }
    })
}

/// Final round: expand each leaf label over its `B` pair slots and apply the
/// data QRAM (1 IO). Labels become key-record pairs; every dummy slot merges
/// into the dummy pair label.
pub fn load_pairs(
    state: &WeightedState<NodeId>,
    q1: &Qram,
    b: u32,
    io: &mut IoCounters,
) -> WeightedState<KeyRecordPair> {
    io.qram_loads += 1;
    load_pairs_uncharged(state, q1, b)
}

pub fn load_pairs_uncharged(
    state: &WeightedState<NodeId>,
    q1: &Qram,
    b: u32,
) -> WeightedState<KeyRecordPair> {
    state
        .expand(b)
        .map_labels(|(node, slot)| match q1.peek(slot_addr(*node, *slot, b)) {
            QramValue::PairVal(p) => p,
            _ => KeyRecordPair::DUMMY,
        })
}

/// Builds the amplitude-weighted initial state for a combined search and
/// charges the `m` classical accesses its preparation costs.
pub fn weighted_init<L: Ord + Clone>(
    items: Vec<(L, u64)>,
    io: &mut IoCounters,
) -> Result<WeightedState<L>> {
    io.classical_node_accesses += items.len() as u64;
    WeightedState::from_weights(items)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::types::Key;
    use alloc::vec;

    fn range(lo: i64, hi: i64) -> QueryRange {
        QueryRange::new(Key::new(lo), Key::new(hi)).unwrap()
    }

    #[test]
    fn uniform_init() {
        let s = WeightedState::uniform([1u32, 2]).unwrap();
        assert_eq!(s.total(), 2);
        assert_eq!(s.weight_of(&1), 1);
        let single = WeightedState::uniform([7u32]).unwrap();
        assert_eq!(single.total(), 1);
        assert_eq!(
            WeightedState::<u32>::uniform(core::iter::empty()),
            Err(Error::EmptySet)
        );
    }

    #[test]
    fn weighted_init_matches_uniform_probabilities_up_to_scale() {
        let a = WeightedState::from_weights([("a", 2u64), ("b", 2)]).unwrap();
        let b = WeightedState::uniform(["a", "b"]).unwrap();
        // Identical probabilities: weight/total agree as rationals.
        assert_eq!(
            Ratio::new(a.weight_of(&"a") as u128, a.total() as u128),
            Ratio::new(b.weight_of(&"a") as u128, b.total() as u128)
        );
        assert_eq!(
            WeightedState::from_weights([("a", 0u64)]),
            Err(Error::ZeroWeight)
        );
        assert_eq!(
            WeightedState::<&str>::from_weights(core::iter::empty()),
            Err(Error::EmptySet)
        );
    }

    #[test]
    fn expand_multiplies_total_by_b() {
        let s = WeightedState::uniform([NodeId::new(1)]).unwrap();
        let e = s.expand(4);
        assert_eq!(e.total(), 4);
        assert_eq!(e.len(), 4);
        for j in 0..4 {
            assert_eq!(e.weight_of(&(NodeId::new(1), j)), 1);
        }

        let two = WeightedState::uniform([NodeId::new(1), NodeId::new(2)]).unwrap();
        let e2 = two.expand(4);
        assert_eq!((e2.len(), e2.total()), (8, 8));

        // Composition multiplies by B^2.
        let ee = e2.expand(4);
        assert_eq!(ee.total(), 32);
    }

    #[test]
    fn mark_micro_fixture() {
        // Values {0,1,4,7}, range [2,5]: only 4 is in, probability 1/4.
        let pairs: Vec<KeyRecordPair> = [0, 1, 4, 7]
            .iter()
            .map(|&k| KeyRecordPair::new(k, k as u64))
            .collect();
        let s = WeightedState::uniform(pairs).unwrap();
        let f = mark_in_range(&s, &range(2, 5));
        assert_eq!(f.in_weight(), 1);
        assert_eq!(f.out_weight(), 3);
        assert_eq!(f.success_probability(), Ratio::new(1, 4));
    }

    #[test]
    fn mark_empty_overlap() {
        let s = WeightedState::uniform([KeyRecordPair::new(1, 1)]).unwrap();
        let f = mark_in_range(&s, &range(5, 9));
        assert_eq!(f.in_weight(), 0);
        assert_eq!(f.out_weight(), f.total());
        assert!(f.expected_attempts().is_err());
    }

    #[test]
    fn post_select_degenerate_cases() {
        let mut rng = Rng::from_seed(3);
        let mut io = IoCounters::new();
        let s = WeightedState::uniform([KeyRecordPair::new(1, 1)]).unwrap();

        let all_in = mark_in_range(&s, &range(0, 2));
        for _ in 0..10 {
            assert!(matches!(
                all_in.post_select(&mut rng, &mut io),
                MeasureOutcome::Success(_)
            ));
        }

        let none_in = mark_in_range(&s, &range(5, 6));
        for _ in 0..10 {
            assert_eq!(
                none_in.post_select(&mut rng, &mut io),
                MeasureOutcome::Failure
            );
        }
        assert_eq!(io.post_selection_attempts, 20);
    }

    #[test]
    fn post_select_success_returns_marked_entries_exactly() {
        let mut rng = Rng::from_seed(11);
        let mut io = IoCounters::new();
        let pairs: Vec<KeyRecordPair> = (0..8).map(|k| KeyRecordPair::new(k, k as u64)).collect();
        let s = WeightedState::uniform(pairs.clone()).unwrap();
        let f = mark_in_range(&s, &range(2, 5));
        loop {
            if let MeasureOutcome::Success(state) = f.post_select(&mut rng, &mut io) {
                let got: Vec<i64> = state.labels().map(|p| p.key.get()).collect();
                assert_eq!(got, vec![2, 3, 4, 5]);
                assert_eq!(state.total(), 4);
                break;
            }
        }
    }

    #[test]
    fn measure_once_singleton() {
        let mut rng = Rng::from_seed(5);
        let s = WeightedState::uniform(["x"]).unwrap();
        assert_eq!(s.measure_once(&mut rng), "x");
    }

    #[test]
    fn measure_once_respects_weights() {
        let mut rng = Rng::from_seed(17);
        let n = 40_000;
        for (weights, expected) in [(("a", 3u64), 0.75), (("a", 1u64), 0.5)] {
            let s = WeightedState::from_weights([weights, ("b", 1)]).unwrap();
            let mut hits = 0u32;
            for _ in 0..n {
                if s.measure_once(&mut rng) == "a" {
                    hits += 1;
                }
            }
            let freq = hits as f64 / n as f64;
            assert!((freq - expected).abs() < 0.01, "freq {freq} vs {expected}");
        }
    }

    #[test]
    fn weighted_init_charges_m_accesses() {
        let mut io = IoCounters::new();
        let s = weighted_init(alloc::vec![("u", 16u64), ("v", 4)], &mut io).unwrap();
        assert_eq!(io.classical_node_accesses, 2);
        assert_eq!(s.total(), 20);
    }
}
