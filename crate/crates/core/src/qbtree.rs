//! The static quantum B+ tree: a weight-balanced classical tree mirrored
//! into a hierarchy QRAM (node -> children) and a data QRAM (leaf -> pairs,
//! internal -> routing bounds), searched by the global-classical
//! local-quantum (GCLQ) algorithm.
//!
//! The global classical search walks the classical part level by level and
//! stops at the first *precise* candidate list: a partial node is precise if
//! it is a leaf or has a child entirely inside the query range. At most two
//! candidates survive per level, and at least 1/(8B) of the pair slots below
//! them are in range, so the local quantum search needs O(B) post-selection
//! attempts regardless of dataset size.

use alloc::vec::Vec;

use crate::btree::{DeleteReport, NodeId, NodeKind, RoutingKey, WeightBalancedTree};
use crate::error::{Error, Result};
use crate::metrics::IoCounters;
use crate::qram::{slot_addr, Qram, QramValue};
use crate::qstate::{
    descend_uncharged, load_pairs_uncharged, mark_with, weighted_init, FlaggedState,
    MeasureOutcome, WeightedState,
};
use crate::ratio::Ratio;
use crate::rng::Rng;
use crate::types::{Dataset, KeyRecordPair, QueryRange, TreeParams};

/// Position of a node's routing range relative to the query range.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NodeClass {
    Outside,
    Partial,
    Inside,
}

/// Outside iff disjoint, Inside iff contained, Partial otherwise.
pub fn classify(routing: RoutingKey, range: &QueryRange) -> NodeClass {
    if routing.hi < range.lo || routing.lo > range.hi {
        NodeClass::Outside
    } else if routing.lo >= range.lo && routing.hi <= range.hi {
        NodeClass::Inside
    } else {
        NodeClass::Partial
    }
}

/// Candidate nodes the local quantum search starts from: up to two nodes of
/// one level, at least one of them precise.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Candidates {
    pub level: u32,
    pub nodes: Vec<NodeId>,
}

/// Result of the global classical search.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum GlobalOutcome {
    /// Hand off to the local quantum search.
    Quantum(Candidates),
    /// No precise trigger (the search ran dry); any pairs found by the
    /// classical scan of the final candidate leaves.
    Fallback(Vec<KeyRecordPair>),
}

/// What a range query returns.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum QueryResult {
    /// Uniform superposition over exactly the in-range pairs.
    Superposition(WeightedState<KeyRecordPair>),
    /// Classically materialized result (fallback path).
    ClassicalList(Vec<KeyRecordPair>),
    Empty,
}

impl QueryResult {
    /// The set of pairs carried by this result, whatever its form.
    pub fn support(&self) -> Vec<KeyRecordPair> {
        match self {
            QueryResult::Superposition(s) => s.labels().copied().collect(),
            QueryResult::ClassicalList(v) => {
                let mut v = v.clone();
                v.sort_unstable();
                v
            }
            QueryResult::Empty => Vec::new(),
        }
    }
}

/// Post-selection attempt count: observed tally in stochastic mode, exact
/// expectation in analytic mode.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Attempts {
    Observed(u64),
    Expected(Ratio),
}

impl Attempts {
    pub fn to_ratio(self) -> Ratio {
        match self {
            Attempts::Observed(n) => Ratio::from_int(n),
            Attempts::Expected(r) => r,
        }
    }
}

/// How the probabilistic steps run: stochastic draws from a seeded
/// generator, or the exact-expectation mode used for deterministic runs.
pub enum EvalMode<'r> {
    Stochastic(&'r mut Rng),
    Analytic,
}

#[derive(Debug, Clone)]
pub struct QueryOutcome {
    pub result: QueryResult,
    pub attempts: Option<Attempts>,
    /// True when the classical fallback produced the result.
    pub used_fallback: bool,
}

/// One tree's contribution to a (possibly multi-tree) local quantum search.
pub struct SearchGroup<'a> {
    pub q0: &'a Qram,
    pub q1: &'a Qram,
    pub nodes: Vec<NodeId>,
    /// Height of the candidate nodes within their tree.
    pub height: u32,
    /// Initial weight per candidate; `B^(height+1)` equalizes pair-slot
    /// amplitudes across trees of different heights (1 in the single-tree
    /// uniform case).
    pub weight_per_node: u64,
}

/// Statistics of one executed local-search pipeline.
#[derive(Debug, Clone, Copy)]
pub struct PipelineStats {
    /// QRAM loads one attempt costs: descend rounds + the pair load.
    pub loads_per_attempt: u64,
}

pub struct LocalSearchOutcome {
    pub state: WeightedState<KeyRecordPair>,
    pub attempts: Attempts,
    pub stats: PipelineStats,
}

/// Runs the local quantum search over one or more candidate groups.
///
/// Every group descends in lockstep for `max(height)` rounds (leaves pass
/// through extra rounds via their QRAM self-map) followed by one data-QRAM
/// round; each round is one logical load on the combined superposition.
/// `pred` is the post-selection oracle. On failure the whole pipeline
/// restarts, re-charging its loads.
pub fn local_quantum_search(
    groups: &[SearchGroup<'_>],
    b: u32,
    charge_init: bool,
    pred: impl Fn(&KeyRecordPair) -> bool,
    mode: EvalMode<'_>,
    io: &mut IoCounters,
) -> Result<LocalSearchOutcome> {
    assert!(!groups.is_empty());
    let max_height = groups.iter().map(|g| g.height).max().unwrap();

    let mut states: Vec<WeightedState<NodeId>> = Vec::with_capacity(groups.len());
    for g in groups {
        let items: Vec<(NodeId, u64)> = g.nodes.iter().map(|n| (*n, g.weight_per_node)).collect();
        let state = if charge_init {
            weighted_init(items, io)?
        } else {
            WeightedState::from_weights(items)?
        };
        states.push(state);
    }

    // Hierarchy rounds: one load per round across all groups.
    for _ in 0..max_height {
        io.qram_loads += 1;
        for (state, g) in states.iter_mut().zip(groups) {
            *state = descend_uncharged(state, g.q0, b);
        }
    }
    // Data round.
    io.qram_loads += 1;
    let mut pair_state: Option<WeightedState<KeyRecordPair>> = None;
    for (state, g) in states.iter().zip(groups) {
        let loaded = load_pairs_uncharged(state, g.q1, b);
        pair_state = Some(match pair_state {
            None => loaded,
            Some(acc) => acc.union(loaded),
        });
    }
    let pair_state = pair_state.unwrap();
    let flagged: FlaggedState<KeyRecordPair> = mark_with(&pair_state, |p| pred(p));

    let loads_per_attempt = max_height as u64 + 1;
    let stats = PipelineStats { loads_per_attempt };

    match mode {
        EvalMode::Analytic => {
            let attempts = flagged.expected_attempts()?;
            let MeasureOutcome::Success(state) = analytic_collapse(&flagged) else {
                return Err(Error::NoResults);
            };
            Ok(LocalSearchOutcome {
                state,
                attempts: Attempts::Expected(attempts),
                stats,
            })
        }
        EvalMode::Stochastic(rng) => {
            if flagged.in_weight() == 0 {
                return Err(Error::NoResults);
            }
            let mut attempts = 1u64;
            loop {
                match flagged.post_select(rng, io) {
                    MeasureOutcome::Success(state) => {
                        return Ok(LocalSearchOutcome {
                            state,
                            attempts: Attempts::Observed(attempts),
                            stats,
                        });
                    }
                    MeasureOutcome::Failure => {
                        // Repeat the whole pipeline: same loads, fresh attempt.
                        attempts += 1;
                        io.qram_loads += loads_per_attempt;
                    }
                }
            }
        }
    }
}

fn analytic_collapse(flagged: &FlaggedState<KeyRecordPair>) -> MeasureOutcome<KeyRecordPair> {
    if flagged.in_weight() == 0 {
        return MeasureOutcome::Failure;
    }
    let entries: Vec<(KeyRecordPair, u64)> = flagged.in_labels().map(|(l, w)| (*l, w)).collect();
    MeasureOutcome::Success(WeightedState::from_weights(entries).unwrap())
}

#[derive(Debug, Clone)]
pub struct QuantumBPlusTree {
    tree: WeightBalancedTree,
    q0: Qram,
    q1: Qram,
}

impl QuantumBPlusTree {
    /// Bulk-loads the classical tree and mirrors every node into the two
    /// QRAMs: `2 * M * B` stores for `M` nodes.
    pub fn build(dataset: &Dataset, params: TreeParams, io: &mut IoCounters) -> Result<Self> {
        let tree = WeightBalancedTree::bulk_load(dataset, params, io)?;
        Ok(Self::from_tree(tree, io))
    }

    /// Like [`QuantumBPlusTree::build`] over a pre-sorted duplicate-free
    /// slice (buffer flushes and forest merges keep their pairs sorted).
    pub(crate) fn build_from_sorted(
        pairs: &[KeyRecordPair],
        params: TreeParams,
        io: &mut IoCounters,
    ) -> Result<Self> {
        debug_assert!(pairs.windows(2).all(|w| w[0] < w[1]));
        let tree = WeightBalancedTree::bulk_load_slice(pairs, params, io)?;
        Ok(Self::from_tree(tree, io))
    }

    /// Mirrors an already-built classical tree (bulk output or a hand
    /// assembled fixture) into fresh QRAMs.
    pub fn from_tree(tree: WeightBalancedTree, io: &mut IoCounters) -> Self {
        let mut qt = QuantumBPlusTree {
            tree,
            q0: Qram::new(),
            q1: Qram::new(),
        };
        let ids: Vec<NodeId> = qt.tree.nodes().map(|n| n.id).collect();
        for id in ids {
            qt.mirror_node(id, io);
        }
        qt
    }

    pub fn tree(&self) -> &WeightBalancedTree {
        &self.tree
    }

    pub fn q0(&self) -> &Qram {
        &self.q0
    }

    pub fn q1(&self) -> &Qram {
        &self.q1
    }

    pub fn params(&self) -> TreeParams {
        self.tree.params()
    }

    pub fn height(&self) -> u32 {
        self.tree.height()
    }

    pub fn live_pairs(&self) -> u64 {
        self.tree.live_pairs()
    }

    /// Writes node `id`'s `B` hierarchy cells and `B` data cells.
    fn mirror_node(&mut self, id: NodeId, io: &mut IoCounters) {
        let b = self.params().b();
        let node = self.tree.node(id);
        let (q0_vals, q1_vals): (Vec<QramValue>, Vec<QramValue>) = match &node.kind {
            NodeKind::Internal { children, routing } => {
                let mut c = Vec::with_capacity(b as usize);
                let mut r = Vec::with_capacity(b as usize);
                for j in 0..b as usize {
                    c.push(match children.get(j) {
                        Some(child) => QramValue::NodeRef(*child),
                        None => QramValue::Dummy,
                    });
                    r.push(match routing.get(j) {
                        Some(rt) => QramValue::Routing(*rt),
                        None => QramValue::Dummy,
                    });
                }
                (c, r)
            }
            NodeKind::Leaf { pairs } => {
                // A leaf's hierarchy cells all map back to the leaf itself.
                let c = alloc::vec![QramValue::NodeRef(id); b as usize];
                let mut p = Vec::with_capacity(b as usize);
                for j in 0..b as usize {
                    p.push(match pairs.get(j) {
                        Some(pair) => QramValue::PairVal(*pair),
                        None => QramValue::Dummy,
                    });
                }
                (c, p)
            }
        };
        for (j, (v0, v1)) in q0_vals.into_iter().zip(q1_vals).enumerate() {
            self.q0.store(slot_addr(id, j as u32, b), v0, io);
            self.q1.store(slot_addr(id, j as u32, b), v1, io);
        }
    }

    /// Overwrites a removed node's cells with dummies.
    fn clear_node_block(&mut self, id: NodeId, io: &mut IoCounters) {
        let b = self.params().b();
        for j in 0..b {
            self.q0.store(slot_addr(id, j, b), QramValue::Dummy, io);
            self.q1.store(slot_addr(id, j, b), QramValue::Dummy, io);
        }
    }

    /// Classical deletion plus QRAM re-mirroring of every changed node.
    pub fn delete_pair(
        &mut self,
        pair: KeyRecordPair,
        io: &mut IoCounters,
    ) -> Result<DeleteReport> {
        let report = self.tree.delete_pair(pair, io)?;
        for id in &report.dirty {
            self.mirror_node(*id, io);
        }
        for id in &report.removed {
            self.clear_node_block(*id, io);
        }
        Ok(report)
    }

    /// Re-mirrors specific nodes after an out-of-band classical mutation
    /// (root repairs driven by the dynamic structure).
    pub fn remirror(&mut self, dirty: &[NodeId], removed: &[NodeId], io: &mut IoCounters) {
        for id in dirty {
            if self.tree.get_node(*id).is_some() {
                self.mirror_node(*id, io);
            }
        }
        for id in removed {
            self.clear_node_block(*id, io);
        }
    }

    pub fn tree_mut(&mut self) -> &mut WeightBalancedTree {
        &mut self.tree
    }

    /// Global classical search: walk the candidate list level by level,
    /// replacing nodes by their non-outside children, until some candidate
    /// is precise. Candidate leaf lists are scanned classically so the
    /// quantum path always starts with at least one in-range pair; if no
    /// pair exists the empty fallback is returned instead.
    pub fn global_search(&self, range: &QueryRange, io: &mut IoCounters) -> GlobalOutcome {
        let root = self.tree.root();
        io.classical_node_accesses += 1;
        if self.tree.live_pairs() == 0 {
            return GlobalOutcome::Fallback(Vec::new());
        }
        let root_bounds = self.tree.node(root).bounds();
        match classify(root_bounds, range) {
            NodeClass::Outside => return GlobalOutcome::Fallback(Vec::new()),
            NodeClass::Inside => {
                // The whole dataset is in range: the root is the precise
                // trigger at level 0.
                return GlobalOutcome::Quantum(Candidates {
                    level: 0,
                    nodes: alloc::vec![root],
                });
            }
            NodeClass::Partial => {}
        }

        let mut level = 0u32;
        let mut list = alloc::vec![root];
        loop {
            // One read per candidate inspected; the root read at entry
            // already covered level 0.
            if level > 0 {
                io.classical_node_accesses += list.len() as u64;
            }

            // A partial leaf is precise by definition; verify it actually
            // holds an answer before entering the quantum path.
            if self.tree.node(list[0]).is_leaf() {
                let mut found: Vec<KeyRecordPair> = Vec::new();
                for leaf in &list {
                    if let NodeKind::Leaf { pairs } = &self.tree.node(*leaf).kind {
                        found.extend(pairs.iter().filter(|p| range.contains(p.key)));
                    }
                }
                if found.is_empty() {
                    return GlobalOutcome::Fallback(Vec::new());
                }
                return GlobalOutcome::Quantum(Candidates { level, nodes: list });
            }

            // Scan the candidates' children; an inside child makes its
            // parent precise and the pre-replacement list is returned.
            let mut next = Vec::new();
            for u in &list {
                let NodeKind::Internal { children, routing } = &self.tree.node(*u).kind else {
                    unreachable!()
                };
                for (c, r) in children.iter().zip(routing) {
                    match classify(*r, range) {
                        NodeClass::Inside => {
                            return GlobalOutcome::Quantum(Candidates {
                                level,
                                nodes: list.clone(),
                            });
                        }
                        NodeClass::Partial => next.push(*c),
                        NodeClass::Outside => {}
                    }
                }
            }
            if next.is_empty() {
                // The range falls in a gap between subtrees.
                return GlobalOutcome::Fallback(Vec::new());
            }
            // Distinct keys admit at most two partials per level; duplicated
            // boundary keys can briefly widen the list without harming
            // correctness.
            list = next;
            level += 1;
        }
    }

    /// Local quantum search from same-level candidates of this tree.
    pub fn local_search(
        &self,
        candidates: &Candidates,
        range: &QueryRange,
        mode: EvalMode<'_>,
        io: &mut IoCounters,
    ) -> Result<LocalSearchOutcome> {
        let group = SearchGroup {
            q0: &self.q0,
            q1: &self.q1,
            nodes: candidates.nodes.clone(),
            height: self.tree.height() - candidates.level,
            weight_per_node: 1,
        };
        local_quantum_search(
            &[group],
            self.params().b(),
            false,
            |p| !p.is_dummy() && range.contains(p.key),
            mode,
            io,
        )
    }

    /// Full range query: global classical search, then either the local
    /// quantum search or the classical fallback.
    pub fn query(
        &self,
        range: &QueryRange,
        mode: EvalMode<'_>,
        io: &mut IoCounters,
    ) -> Result<QueryOutcome> {
        match self.global_search(range, io) {
            GlobalOutcome::Quantum(c) => {
                let out = self.local_search(&c, range, mode, io)?;
                Ok(QueryOutcome {
                    result: QueryResult::Superposition(out.state),
                    attempts: Some(out.attempts),
                    used_fallback: false,
                })
            }
            GlobalOutcome::Fallback(pairs) => Ok(QueryOutcome {
                result: if pairs.is_empty() {
                    QueryResult::Empty
                } else {
                    QueryResult::ClassicalList(pairs)
                },
                attempts: None,
                used_fallback: true,
            }),
        }
    }

    /// Expected-cost profile of an analytic query without materializing the
    /// superposition: candidate totals come from the tree shape, the
    /// in-range count from the classical index. Global-search IOs are
    /// metered into `io`; the expected quantum loads are reported in the
    /// estimate so huge sweeps stay cheap.
    pub fn query_io_estimate(&self, range: &QueryRange, io: &mut IoCounters) -> QueryIoEstimate {
        let before = io.snapshot();
        match self.global_search(range, io) {
            GlobalOutcome::Quantum(c) => {
                let height = self.tree.height() - c.level;
                let slots = c.nodes.len() as u64 * self.params().b_pow(height + 1);
                let k = self.tree.count_in_range(range);
                debug_assert!(k > 0, "quantum path requires an in-range pair");
                let attempts = Ratio::new(slots as u128, k as u128);
                let loads_per_attempt = height as u64 + 1;
                let global = io.since(&before).total_io();
                QueryIoEstimate {
                    expected_io: attempts.mul_int(loads_per_attempt).add_int(global),
                    attempts: Some(attempts),
                    result_count: k,
                    quantum_path: true,
                }
            }
            GlobalOutcome::Fallback(pairs) => {
                let global = io.since(&before).total_io();
                QueryIoEstimate {
                    expected_io: Ratio::from_int(global),
                    attempts: None,
                    result_count: pairs.len() as u64,
                    quantum_path: false,
                }
            }
        }
    }
}

/// Expected cost of one analytic query.
#[derive(Debug, Clone)]
pub struct QueryIoEstimate {
    /// Global-search IOs plus expected attempts times loads per attempt.
    pub expected_io: Ratio,
    pub attempts: Option<Ratio>,
    pub result_count: u64,
    pub quantum_path: bool,
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::Rng;
    use crate::types::Key;
    use alloc::vec::Vec;

    fn dataset(keys: &[i64]) -> Dataset {
        Dataset::from_pairs(
            keys.iter()
                .map(|&k| KeyRecordPair::new(k, k as u64))
                .collect(),
        )
        .unwrap()
    }

    fn range(lo: i64, hi: i64) -> QueryRange {
        QueryRange::new(Key::new(lo), Key::new(hi)).unwrap()
    }

    #[test]
    fn single_leaf_tree_self_maps_every_hierarchy_slot() {
        let mut io = IoCounters::new();
        let params = TreeParams::new(4).unwrap();
        let qt = QuantumBPlusTree::build(&dataset(&[1, 5, 9]), params, &mut io).unwrap();
        let root = qt.tree().root();
        assert_eq!(qt.height(), 0);
        for j in 0..4 {
            assert_eq!(
                qt.q0().peek(crate::qram::slot_addr(root, j, 4)),
                QramValue::NodeRef(root)
            );
        }
    }

    #[test]
    fn fully_covered_full_leaf_succeeds_on_the_first_attempt() {
        // A full inside leaf as the candidate: k = B, success probability
        // k/B = 1, exactly one attempt in both evaluation modes.
        let mut io = IoCounters::new();
        let params = TreeParams::new(4).unwrap();
        let qt = QuantumBPlusTree::build(&dataset(&[2, 4, 6, 8]), params, &mut io).unwrap();

        let out = qt
            .query(&range(0, 10), EvalMode::Analytic, &mut io)
            .unwrap();
        assert_eq!(out.attempts, Some(Attempts::Expected(Ratio::ONE)));

        let mut rng = Rng::from_seed(5);
        io.reset();
        let out = qt
            .query(&range(0, 10), EvalMode::Stochastic(&mut rng), &mut io)
            .unwrap();
        assert_eq!(out.attempts, Some(Attempts::Observed(1)));
        assert_eq!(io.post_selection_attempts, 1);
        assert_eq!(out.result.support().len(), 4);
    }

    #[test]
    fn emptied_tree_answers_queries_with_the_empty_fallback() {
        let mut io = IoCounters::new();
        let params = TreeParams::new(4).unwrap();
        let mut qt = QuantumBPlusTree::build(&dataset(&[7]), params, &mut io).unwrap();
        let report = qt.delete_pair(KeyRecordPair::new(7, 7), &mut io).unwrap();
        assert!(report.now_empty);
        let out = qt
            .query(&range(0, 100), EvalMode::Analytic, &mut io)
            .unwrap();
        assert_eq!(out.result, QueryResult::Empty);
    }

    #[test]
    fn global_accesses_stay_within_two_per_level() {
        let mut io = IoCounters::new();
        let params = TreeParams::new(4).unwrap();
        let keys: Vec<i64> = (0..256).collect();
        let qt = QuantumBPlusTree::build(&dataset(&keys), params, &mut io).unwrap();
        for (lo, hi) in [(3, 9), (100, 140), (0, 255), (250, 400)] {
            io.reset();
            let outcome = qt.global_search(&range(lo, hi), &mut io);
            let level = match outcome {
                GlobalOutcome::Quantum(c) => c.level,
                GlobalOutcome::Fallback(_) => qt.height(),
            };
            assert!(
                io.classical_node_accesses <= 2 * (level as u64 + 1),
                "range [{lo},{hi}]: {} accesses at level {level}",
                io.classical_node_accesses
            );
        }
    }
}
