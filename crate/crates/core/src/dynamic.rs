//! Dynamic quantum B+ tree: the logarithmic method over static quantum B+
//! trees.
//!
//! Pairs enter a sorted buffer of capacity `B`; a full buffer flushes into
//! forest `F_0` as a fresh height-0 tree, and whenever a forest `F_i`
//! collects `B` trees they merge into one tree a level up. Two auxiliary
//! indexes locate pairs for deletion: `T_0` maps a pair to its insertion id
//! and `T_1`, an interval map with range assignment, maps ids to the forest
//! holding them. Deletions repair imbalance inside a tree (borrow, merge,
//! rebuild) and repair root underflow across trees (borrow a subtree from a
//! sibling tree, merge two trees, or downgrade a forest level).
//!
//! A dynamic range query runs the global classical search on every tree,
//! then one combined local quantum search over all candidates with initial
//! weights `B^(height+1)` so every pair slot ends at the same amplitude
//! across trees of different heights. Buffered pairs are invisible to the
//! quantum path and come back classically alongside the superposition.

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use crate::btree::NodeKind;
use crate::error::{Error, Result};
use crate::metrics::IoCounters;
use crate::qbtree::{
    local_quantum_search, Attempts, Candidates, EvalMode, GlobalOutcome, QuantumBPlusTree,
    QueryResult, SearchGroup,
};
use crate::ratio::Ratio;
use crate::types::{KeyRecordPair, QueryRange, TreeParams};

type PairId = u64;

/// Where a live pair currently resides.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Placement {
    Buffer,
    Forest(u32),
}

/// Sorted, disjoint id runs. A tree's runs may over-cover deleted ids; ids
/// are never reused so a dead id under any run is harmless.
#[derive(Debug, Clone, Default)]
struct IdRuns {
    runs: Vec<(PairId, PairId)>,
}

impl IdRuns {
    fn from_run(lo: PairId, hi: PairId) -> IdRuns {
        IdRuns {
            runs: alloc::vec![(lo, hi)],
        }
    }

    fn from_ids(mut ids: Vec<PairId>) -> IdRuns {
        ids.sort_unstable();
        ids.dedup();
        let mut runs: Vec<(PairId, PairId)> = Vec::new();
        for id in ids {
            match runs.last_mut() {
                Some((_, hi)) if *hi + 1 == id => *hi = id,
                _ => runs.push((id, id)),
            }
        }
        IdRuns { runs }
    }

    fn merge(mut sets: Vec<IdRuns>) -> IdRuns {
        let mut runs: Vec<(PairId, PairId)> = sets.drain(..).flat_map(|s| s.runs).collect();
        runs.sort_unstable();
        let mut out: Vec<(PairId, PairId)> = Vec::with_capacity(runs.len());
        for (lo, hi) in runs {
            match out.last_mut() {
                Some((_, phi)) if lo <= phi.saturating_add(1) => *phi = (*phi).max(hi),
                _ => out.push((lo, hi)),
            }
        }
        IdRuns { runs: out }
    }

    fn covers(&self, id: PairId) -> bool {
        self.runs
            .binary_search_by(|(lo, hi)| {
                if *hi < id {
                    core::cmp::Ordering::Less
                } else if *lo > id {
                    core::cmp::Ordering::Greater
                } else {
                    core::cmp::Ordering::Equal
                }
            })
            .is_ok()
    }

    /// Removes exactly the given runs, splitting covering runs as needed.
    fn subtract(&mut self, other: &IdRuns) {
        for &(lo, hi) in &other.runs {
            let mut next = Vec::with_capacity(self.runs.len() + 1);
            for &(a, b) in &self.runs {
                if b < lo || a > hi {
                    next.push((a, b));
                    continue;
                }
                if a < lo {
                    next.push((a, lo - 1));
                }
                if b > hi {
                    next.push((hi + 1, b));
                }
            }
            self.runs = next;
        }
    }

    fn extend(&mut self, other: IdRuns) {
        *self = IdRuns::merge(alloc::vec![core::mem::take(self), other]);
    }
}

/// Interval map from pair id to placement, with range assignment.
/// Each operation is charged `ceil(log2(interval count))` accesses, the
/// lazy-propagation cost of the index it stands in for.
#[derive(Debug, Clone, Default)]
struct IntervalMap {
    // start -> (inclusive end, placement)
    segs: BTreeMap<PairId, (PairId, Placement)>,
}

impl IntervalMap {
    fn charge(&self, io: &mut IoCounters) {
        let n = self.segs.len() as u64;
        if n > 1 {
            io.classical_node_accesses += (u64::BITS - (n - 1).leading_zeros()) as u64;
        }
    }

    fn assign(&mut self, lo: PairId, hi: PairId, val: Placement, io: &mut IoCounters) {
        self.charge(io);
        debug_assert!(lo <= hi);
        // Split a segment straddling `lo`.
        if let Some((&s, &(e, v))) = self.segs.range(..lo).next_back() {
            if e >= lo {
                self.segs.insert(s, (lo - 1, v));
                if e > hi {
                    self.segs.insert(hi + 1, (e, v));
                }
            }
        }
        // Remove or truncate segments starting inside [lo, hi].
        let inside: Vec<PairId> = self.segs.range(lo..=hi).map(|(s, _)| *s).collect();
        for s in inside {
            let (e, v) = self.segs.remove(&s).unwrap();
            if e > hi {
                self.segs.insert(hi + 1, (e, v));
            }
        }
        self.segs.insert(lo, (hi, val));
    }

    fn get(&self, id: PairId, io: &mut IoCounters) -> Option<Placement> {
        self.charge(io);
        self.segs
            .range(..=id)
            .next_back()
            .filter(|(_, (e, _))| *e >= id)
            .map(|(_, (_, v))| *v)
    }

    fn len(&self) -> usize {
        self.segs.len()
    }
}

struct TreeEntry {
    qt: QuantumBPlusTree,
    ids: IdRuns,
}

/// Result of a dynamic range query: the quantum result over the forest
/// contents plus the classical side list of in-range buffered pairs.
#[derive(Debug, Clone)]
pub struct DynamicQueryOutcome {
    pub result: QueryResult,
    /// In-range pairs that were still sitting in the insert buffer.
    pub buffer_side: Vec<KeyRecordPair>,
    pub attempts: Option<Attempts>,
    /// True when no tree produced a precise trigger and the classical
    /// fallback answered.
    pub used_fallback: bool,
}

impl DynamicQueryOutcome {
    /// Every pair the query reported, quantum and classical combined.
    pub fn support(&self) -> Vec<KeyRecordPair> {
        let mut v = self.result.support();
        v.extend_from_slice(&self.buffer_side);
        v.sort_unstable();
        v
    }
}

/// Expected-cost profile of one analytic dynamic query.
#[derive(Debug, Clone)]
pub struct DynamicQueryEstimate {
    pub expected_io: Ratio,
    pub attempts: Option<Ratio>,
    pub result_count: u64,
    pub quantum_path: bool,
}

pub struct DynamicQuantumBTree {
    params: TreeParams,
    forests: Vec<Vec<TreeEntry>>,
    buffer: Vec<(KeyRecordPair, PairId)>,
    t0: BTreeMap<KeyRecordPair, PairId>,
    t1: IntervalMap,
    next_id: PairId,
}

impl DynamicQuantumBTree {
    pub fn new(params: TreeParams) -> DynamicQuantumBTree {
        DynamicQuantumBTree {
            params,
            forests: Vec::new(),
            buffer: Vec::new(),
            t0: BTreeMap::new(),
            t1: IntervalMap::default(),
            next_id: 0,
        }
    }

    pub fn params(&self) -> TreeParams {
        self.params
    }

    /// Number of live pairs (buffer plus forests).
    pub fn live_pairs(&self) -> u64 {
        self.t0.len() as u64
    }

    /// Tree count per forest level.
    pub fn forest_sizes(&self) -> Vec<usize> {
        self.forests.iter().map(|f| f.len()).collect()
    }

    pub fn buffer_len(&self) -> usize {
        self.buffer.len()
    }

    /// Point-query cost of the pair index, a B-ary tree walk.
    fn charge_t0(&self, io: &mut IoCounters) {
        let n = (self.t0.len() as u64).max(2);
        io.classical_node_accesses += self.params.ceil_log(n).max(1) as u64;
    }

    pub fn insert(&mut self, pair: KeyRecordPair, io: &mut IoCounters) -> Result<()> {
        self.charge_t0(io);
        if self.t0.contains_key(&pair) {
            return Err(Error::DuplicatePair);
        }
        let id = self.next_id;
        self.next_id += 1;
        self.charge_t0(io);
        self.t0.insert(pair, id);
        self.t1.assign(id, id, Placement::Buffer, io);

        let pos = self.buffer.partition_point(|(p, _)| *p < pair);
        self.buffer.insert(pos, (pair, id));
        io.classical_node_accesses += 1; // buffer page write

        if self.buffer.len() == self.params.b() as usize {
            self.flush_buffer(io)?;
        }
        Ok(())
    }

    /// Flushes the buffer (any size) into `F_0` as a fresh static tree.
    /// Benchmarks call this before timed query sweeps.
    pub fn flush_buffer(&mut self, io: &mut IoCounters) -> Result<()> {
        if self.buffer.is_empty() {
            return Ok(());
        }
        io.classical_node_accesses += 1; // buffer page read
        let drained: Vec<(KeyRecordPair, PairId)> = core::mem::take(&mut self.buffer);
        let lo = drained.iter().map(|(_, id)| *id).min().unwrap();
        let hi = drained.iter().map(|(_, id)| *id).max().unwrap();
        let pairs: Vec<KeyRecordPair> = drained.into_iter().map(|(p, _)| p).collect();

        let qt = QuantumBPlusTree::build_from_sorted(&pairs, self.params, io)?;
        let height = qt.height();
        self.t1.assign(lo, hi, Placement::Forest(height), io);
        self.push_tree(
            TreeEntry {
                qt,
                ids: IdRuns::from_run(lo, hi),
            },
            io,
        )
    }

    fn forest_mut(&mut self, level: u32) -> &mut Vec<TreeEntry> {
        let idx = level as usize;
        while self.forests.len() <= idx {
            self.forests.push(Vec::new());
        }
        &mut self.forests[idx]
    }

    /// Adds a tree to the forest matching its height and cascades merges
    /// while any forest holds `B` trees.
    fn push_tree(&mut self, entry: TreeEntry, io: &mut IoCounters) -> Result<()> {
        let level = entry.qt.height();
        self.forest_mut(level).push(entry);
        self.cascade(io)
    }

    fn cascade(&mut self, io: &mut IoCounters) -> Result<()> {
        let b = self.params.b() as usize;
        let mut level = 0;
        while level < self.forests.len() {
            if self.forests[level].len() >= b {
                let trees: Vec<TreeEntry> = self.forests[level].drain(..).collect();
                let merged = self.merge_trees(trees, level as u32, io)?;
                let new_level = merged.qt.height();
                self.forest_mut(new_level).push(merged);
                // Restart from the bottom; a merge can land anywhere.
                level = 0;
                continue;
            }
            level += 1;
        }
        Ok(())
    }

    /// K-way merges the trees' leaf sequences (dummies dropped) and bulk
    /// loads the result. Reads, writes and QRAM stores are all metered.
    fn merge_trees(
        &mut self,
        trees: Vec<TreeEntry>,
        from_level: u32,
        io: &mut IoCounters,
    ) -> Result<TreeEntry> {
        let mut sequences = Vec::with_capacity(trees.len());
        let mut id_sets = Vec::with_capacity(trees.len());
        for entry in trees {
            sequences.push(entry.qt.tree().collect_pairs(io));
            id_sets.push(entry.ids);
        }
        let merged_pairs = kway_merge(sequences);
        let qt = QuantumBPlusTree::build_from_sorted(&merged_pairs, self.params, io)?;
        let ids = IdRuns::merge(id_sets);
        let new_level = qt.height();
        if new_level != from_level {
            for &(lo, hi) in &ids.runs {
                self.t1.assign(lo, hi, Placement::Forest(new_level), io);
            }
        }
        Ok(TreeEntry { qt, ids })
    }

    pub fn delete(&mut self, pair: KeyRecordPair, io: &mut IoCounters) -> Result<()> {
        // Two point queries locate the pair: T0 for its id, T1 for the
        // structure holding it.
        self.charge_t0(io);
        let Some(&id) = self.t0.get(&pair) else {
            return Err(Error::NotFound);
        };
        let placement = self.t1.get(id, io).expect("live id is always mapped");

        match placement {
            Placement::Buffer => {
                io.classical_node_accesses += 1;
                let pos = self
                    .buffer
                    .iter()
                    .position(|(p, _)| *p == pair)
                    .expect("buffer placement is authoritative");
                self.buffer.remove(pos);
            }
            Placement::Forest(level) => {
                self.delete_in_forest(pair, id, level, io)?;
            }
        }
        self.charge_t0(io);
        self.t0.remove(&pair);
        Ok(())
    }

    fn delete_in_forest(
        &mut self,
        pair: KeyRecordPair,
        id: PairId,
        level: u32,
        io: &mut IoCounters,
    ) -> Result<()> {
        let forest = level as usize;
        let mut hit = None;
        for idx in 0..self.forests[forest].len() {
            let entry = &mut self.forests[forest][idx];
            if !entry.ids.covers(id) {
                continue;
            }
            io.classical_node_accesses += 1; // root bounds probe
            let tree = entry.qt.tree();
            let bounds = tree.node(tree.root()).bounds();
            if bounds.lo > pair.key || bounds.hi < pair.key {
                continue;
            }
            match entry.qt.delete_pair(pair, io) {
                Ok(report) => {
                    hit = Some((idx, report));
                    break;
                }
                Err(Error::NotFound) => continue,
                Err(e) => return Err(e),
            }
        }
        let Some((idx, report)) = hit else {
            return Err(Error::NotFound);
        };

        if report.now_empty {
            self.forests[forest].remove(idx);
            return Ok(());
        }
        if report.root_underflow {
            self.repair_root_underflow(forest, idx, io)?;
        }
        Ok(())
    }

    /// The containing tree's internal root fell below two children. Try to
    /// borrow a child subtree from another tree in the forest, else merge
    /// with another tree, else downgrade the tree one forest level.
    fn repair_root_underflow(
        &mut self,
        forest: usize,
        idx: usize,
        io: &mut IoCounters,
    ) -> Result<()> {
        let (receiver_bounds, child_balanced) = {
            let entry = &self.forests[forest][idx];
            let tree = entry.qt.tree();
            let node = tree.node(tree.root());
            let NodeKind::Internal { children, routing } = &node.kind else {
                unreachable!("underflowed root is internal")
            };
            let child = tree.node(children[0]);
            let floor = self.params.b_pow(child.height + 1) / 4;
            (routing[0], child.weight >= floor)
        };

        // (a) Borrow: a sibling tree with three or more root children and a
        // boundary child whose key range clears the receiver's child. Key
        // ranges of trees in a forest can interleave arbitrarily, so the
        // disjointness check decides whether a borrow is sound; an
        // imbalanced receiver child needs a rebuild, which only the merge
        // and downgrade paths provide.
        let mut donor_pick = None;
        if child_balanced {
            for d in 0..self.forests[forest].len() {
                if d == idx {
                    continue;
                }
                io.classical_node_accesses += 1; // donor root probe
                let tree = self.forests[forest][d].qt.tree();
                let NodeKind::Internal { routing, .. } = &tree.node(tree.root()).kind else {
                    continue;
                };
                if routing.len() < 3 {
                    continue;
                }
                if routing[routing.len() - 1].hi < receiver_bounds.lo {
                    donor_pick = Some((d, routing.len() - 1));
                    break;
                }
                if routing[0].lo > receiver_bounds.hi {
                    donor_pick = Some((d, 0));
                    break;
                }
            }
        }

        if let Some((d, pos)) = donor_pick {
            let (pairs, removed) = self.forests[forest][d]
                .qt
                .tree_mut()
                .extract_root_child(pos, io);
            {
                let donor = &mut self.forests[forest][d];
                let root = donor.qt.tree().root();
                donor.qt.remirror(&[root], &removed, io);
            }
            let moved_ids = IdRuns::from_ids(pairs.iter().map(|p| self.t0[p]).collect());
            self.forests[forest][d].ids.subtract(&moved_ids);

            let height = forest as u32 - 1;
            {
                let receiver = &mut self.forests[forest][idx];
                let created = receiver.qt.tree_mut().graft_root_child(&pairs, height, io);
                let root = receiver.qt.tree().root();
                let mut dirty = created;
                dirty.push(root);
                receiver.qt.remirror(&dirty, &[], io);
            }
            self.forests[forest][idx].ids.extend(moved_ids);
            // Both trees stay in this forest: T1 needs no update.
            return Ok(());
        }

        // (b) Merge with another tree of the forest.
        if self.forests[forest].len() >= 2 {
            let other = if idx == 0 { 1 } else { 0 };
            let (a, b) = if other < idx {
                (other, idx)
            } else {
                (idx, other)
            };
            let second = self.forests[forest].remove(b);
            let first = self.forests[forest].remove(a);
            let merged = self.merge_trees(alloc::vec![first, second], forest as u32, io)?;
            return self.push_tree(merged, io);
        }

        // (c) Downgrade: remove the root and move the tree down, repeating
        // while the surfaced root is itself a single-child internal node so
        // no tree ever rests with an underflowed root.
        let mut entry = self.forests[forest].remove(idx);
        loop {
            let (old_root, _) = entry.qt.tree_mut().collapse_root(io);
            entry.qt.remirror(&[], &[old_root], io);
            let root = entry.qt.tree().root();
            let node = entry.qt.tree().node(root);
            if node.is_leaf() || node.fanout() >= 2 {
                break;
            }
        }
        let new_level = entry.qt.height();
        for &(lo, hi) in &entry.ids.runs {
            self.t1.assign(lo, hi, Placement::Forest(new_level), io);
        }
        self.push_tree(entry, io)
    }

    /// Dynamic range query: global classical search on every tree, then one
    /// combined local quantum search weighted by `B^(height+1)` per
    /// candidate. Buffered in-range pairs return classically.
    pub fn query(
        &self,
        range: &QueryRange,
        mode: EvalMode<'_>,
        io: &mut IoCounters,
    ) -> Result<DynamicQueryOutcome> {
        let buffer_side = self.scan_buffer(range, io);
        let triggered = self.gather_candidates(range, io);

        if triggered.is_empty() {
            return Ok(DynamicQueryOutcome {
                result: QueryResult::Empty,
                buffer_side,
                attempts: None,
                used_fallback: true,
            });
        }

        let groups: Vec<SearchGroup<'_>> = triggered
            .iter()
            .map(|(entry, cands)| {
                let height = entry.qt.height() - cands.level;
                SearchGroup {
                    q0: entry.qt.q0(),
                    q1: entry.qt.q1(),
                    nodes: cands.nodes.clone(),
                    height,
                    weight_per_node: self.params.b_pow(height + 1),
                }
            })
            .collect();

        let out = local_quantum_search(
            &groups,
            self.params.b(),
            true,
            |p| !p.is_dummy() && range.contains(p.key),
            mode,
            io,
        )?;
        Ok(DynamicQueryOutcome {
            result: QueryResult::Superposition(out.state),
            buffer_side,
            attempts: Some(out.attempts),
            used_fallback: false,
        })
    }

    fn scan_buffer(&self, range: &QueryRange, io: &mut IoCounters) -> Vec<KeyRecordPair> {
        if self.buffer.is_empty() {
            return Vec::new();
        }
        io.classical_node_accesses += 1; // at most B-1 pairs: one page
        self.buffer
            .iter()
            .filter(|(p, _)| range.contains(p.key))
            .map(|(p, _)| *p)
            .collect()
    }

    fn gather_candidates(
        &self,
        range: &QueryRange,
        io: &mut IoCounters,
    ) -> Vec<(&TreeEntry, Candidates)> {
        let mut triggered = Vec::new();
        for forest in self.forests.iter().rev() {
            for entry in forest {
                match entry.qt.global_search(range, io) {
                    GlobalOutcome::Quantum(c) => triggered.push((entry, c)),
                    GlobalOutcome::Fallback(_) => {}
                }
            }
        }
        triggered
    }

    /// Expected cost of one analytic query without materializing states.
    pub fn query_io_estimate(
        &self,
        range: &QueryRange,
        io: &mut IoCounters,
    ) -> DynamicQueryEstimate {
        let before = io.snapshot();
        let buffer_side = self.scan_buffer(range, io);
        let triggered = self.gather_candidates(range, io);
        if triggered.is_empty() {
            let global = io.since(&before).total_io();
            return DynamicQueryEstimate {
                expected_io: Ratio::from_int(global),
                attempts: None,
                result_count: buffer_side.len() as u64,
                quantum_path: false,
            };
        }
        let mut total_slots: u128 = 0;
        let mut in_range: u128 = 0;
        let mut max_height = 0;
        let mut m = 0u64;
        for (entry, cands) in &triggered {
            let height = entry.qt.height() - cands.level;
            max_height = max_height.max(height);
            total_slots += (cands.nodes.len() as u128) * self.params.b_pow(height + 1) as u128;
            in_range += entry.qt.tree().count_in_range(range) as u128;
            m += cands.nodes.len() as u64;
        }
        debug_assert!(in_range > 0);
        let attempts = Ratio::new(total_slots, in_range);
        let loads_per_attempt = max_height as u64 + 1;
        let global = io.since(&before).total_io() + m; // weighted init costs m
        DynamicQueryEstimate {
            expected_io: attempts.mul_int(loads_per_attempt).add_int(global),
            attempts: Some(attempts),
            result_count: in_range as u64 + buffer_side.len() as u64,
            quantum_path: true,
        }
    }

    /// Full structural audit: forest shape, per-tree balance, QRAM mirror
    /// consistency and the T0/T1 placement mapping.
    pub fn check_invariants(&self) -> ForestReport {
        let mut violations = Vec::new();
        let b = self.params.b();

        if self.buffer.len() >= b as usize {
            violations.push(format!("buffer holds {} >= B pairs", self.buffer.len()));
        }
        if self.buffer.windows(2).any(|w| w[0].0 >= w[1].0) {
            violations.push(String::from("buffer is not sorted"));
        }

        for (i, forest) in self.forests.iter().enumerate() {
            if forest.len() > b as usize - 1 {
                violations.push(format!("forest {i} holds {} > B-1 trees", forest.len()));
            }
            for (t, entry) in forest.iter().enumerate() {
                if entry.qt.height() as usize != i {
                    violations.push(format!(
                        "forest {i} tree {t} has height {}",
                        entry.qt.height()
                    ));
                }
                let report = entry.qt.tree().check_balance();
                if !report.is_clean() {
                    for v in report.violations {
                        violations.push(format!("forest {i} tree {t}: {v}"));
                    }
                }
                self.check_mirror(entry, &mut violations, i, t);
            }
        }

        // Every live pair: T1 places it, and the placement actually holds it.
        let mut scratch = IoCounters::new();
        let mut live_in_structures = self.buffer.len() as u64;
        for forest in &self.forests {
            for entry in forest {
                live_in_structures += entry.qt.live_pairs();
            }
        }
        if live_in_structures != self.t0.len() as u64 {
            violations.push(format!(
                "T0 holds {} pairs but structures hold {live_in_structures}",
                self.t0.len()
            ));
        }
        for (pair, id) in &self.t0 {
            match self.t1.get(*id, &mut scratch) {
                None => violations.push(format!("id {id} unmapped in T1")),
                Some(Placement::Buffer) => {
                    if !self.buffer.iter().any(|(p, _)| p == pair) {
                        violations.push(format!("id {id} mapped to buffer but absent"));
                    }
                }
                Some(Placement::Forest(f)) => {
                    let found = self
                        .forests
                        .get(f as usize)
                        .map(|forest| {
                            forest
                                .iter()
                                .any(|e| e.ids.covers(*id) && tree_contains(&e.qt, *pair))
                        })
                        .unwrap_or(false);
                    if !found {
                        violations.push(format!(
                            "id {id} mapped to forest {f} but no tree there holds it"
                        ));
                    }
                }
            }
        }

        ForestReport {
            live_pairs: self.t0.len() as u64,
            t1_intervals: self.t1.len(),
            violations,
        }
    }

    fn check_mirror(
        &self,
        entry: &TreeEntry,
        violations: &mut Vec<String>,
        forest: usize,
        tree_idx: usize,
    ) {
        use crate::qram::{slot_addr, QramValue};
        let b = self.params.b();
        for node in entry.qt.tree().nodes() {
            for j in 0..b {
                let addr = slot_addr(node.id, j, b);
                let (want0, want1) = match &node.kind {
                    NodeKind::Internal { children, routing } => (
                        children
                            .get(j as usize)
                            .map(|c| QramValue::NodeRef(*c))
                            .unwrap_or(QramValue::Dummy),
                        routing
                            .get(j as usize)
                            .map(|r| QramValue::Routing(*r))
                            .unwrap_or(QramValue::Dummy),
                    ),
                    NodeKind::Leaf { pairs } => (
                        QramValue::NodeRef(node.id),
                        pairs
                            .get(j as usize)
                            .map(|p| QramValue::PairVal(*p))
                            .unwrap_or(QramValue::Dummy),
                    ),
                };
                if entry.qt.q0().peek(addr) != want0 {
                    violations.push(format!(
                        "forest {forest} tree {tree_idx}: Q0 stale at node {} slot {j}",
                        node.id.get()
                    ));
                }
                if entry.qt.q1().peek(addr) != want1 {
                    violations.push(format!(
                        "forest {forest} tree {tree_idx}: Q1 stale at node {} slot {j}",
                        node.id.get()
                    ));
                }
            }
        }
    }
}

fn tree_contains(qt: &QuantumBPlusTree, pair: KeyRecordPair) -> bool {
    let mut io = IoCounters::new();
    let range = QueryRange::new(pair.key, pair.key).unwrap();
    qt.tree().range_query(&range, &mut io).contains(&pair)
}

fn kway_merge(mut sequences: Vec<Vec<KeyRecordPair>>) -> Vec<KeyRecordPair> {
    use alloc::collections::BinaryHeap;
    use core::cmp::Reverse;

    let total: usize = sequences.iter().map(|s| s.len()).sum();
    let mut out = Vec::with_capacity(total);
    let mut heap: BinaryHeap<Reverse<(KeyRecordPair, usize)>> = BinaryHeap::new();
    let mut cursors = alloc::vec![0usize; sequences.len()];
    for (i, seq) in sequences.iter().enumerate() {
        if !seq.is_empty() {
            heap.push(Reverse((seq[0], i)));
            cursors[i] = 1;
        }
    }
    while let Some(Reverse((pair, i))) = heap.pop() {
        out.push(pair);
        let c = cursors[i];
        if c < sequences[i].len() {
            heap.push(Reverse((sequences[i][c], i)));
            cursors[i] += 1;
        }
    }
    for seq in sequences.iter_mut() {
        seq.clear();
    }
    out
}

/// Structural audit result for the dynamic structure.
#[derive(Debug, Clone)]
pub struct ForestReport {
    pub live_pairs: u64,
    pub t1_intervals: usize,
    pub violations: Vec<String>,
}

impl ForestReport {
    pub fn is_clean(&self) -> bool {
        self.violations.is_empty()
    }
}
