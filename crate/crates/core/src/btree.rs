//! The classical weight-balanced B+ tree.
//!
//! Every structure in this crate is built on it: it is both the classical
//! half of the quantum trees and the page-metered classical baseline. The
//! three structural requirements the search algorithms rely on:
//!
//! 1. fanout limit: every node has at most `B` children,
//! 2. weight limit: every non-root node of height `h` holds between
//!    `B^(h+1)/4` and `B^(h+1)` non-dummy pairs,
//! 3. level limit: all leaves share one level.
//!
//! A non-root node is *perfectly balanced* when its weight is at least
//! `B^(h+1)/2`. Bulk loading produces perfectly balanced trees.

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::metrics::IoCounters;
use crate::types::{Dataset, Key, KeyRecordPair, QueryRange, TreeParams};

/// Node identifier; breadth-first allocation order under bulk loading.
/// `u64::MAX` is the dummy node.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct NodeId(u64);

impl NodeId {
    pub const DUMMY: NodeId = NodeId(u64::MAX);

    pub fn new(id: u64) -> NodeId {
        assert!(id < u64::MAX, "u64::MAX is reserved for the dummy node");
        NodeId(id)
    }

    pub fn get(self) -> u64 {
        self.0
    }

    pub fn is_dummy(self) -> bool {
        self.0 == u64::MAX
    }
}

/// Inclusive key bounds of one child's subtree, kept in the parent.
/// Siblings' ranges are disjoint and sorted by `lo` when keys are distinct.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub struct RoutingKey {
    pub lo: Key,
    pub hi: Key,
}

impl RoutingKey {
    pub fn new(lo: Key, hi: Key) -> RoutingKey {
        debug_assert!(lo <= hi);
        RoutingKey { lo, hi }
    }
}

/// Node payload: children plus their routing keys, or leaf pairs. Dummy
/// slots are the trailing positions beyond the stored prefix.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum NodeKind {
    Internal {
        children: Vec<NodeId>,
        routing: Vec<RoutingKey>,
    },
    Leaf {
        pairs: Vec<KeyRecordPair>,
    },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BPlusNode {
    pub id: NodeId,
    /// Distance to the leaves below this node.
    pub height: u32,
    /// Number of non-dummy pairs below this node.
    pub weight: u64,
    pub kind: NodeKind,
}

impl BPlusNode {
    pub fn is_leaf(&self) -> bool {
        matches!(self.kind, NodeKind::Leaf { .. })
    }

    /// Number of occupied (non-dummy) slots.
    pub fn fanout(&self) -> usize {
        match &self.kind {
            NodeKind::Internal { children, .. } => children.len(),
            NodeKind::Leaf { pairs } => pairs.len(),
        }
    }

    /// Inclusive key bounds of the subtree. Panics on an empty node.
    pub fn bounds(&self) -> RoutingKey {
        match &self.kind {
            NodeKind::Internal { routing, .. } => {
                RoutingKey::new(routing[0].lo, routing[routing.len() - 1].hi)
            }
            NodeKind::Leaf { pairs } => RoutingKey::new(pairs[0].key, pairs[pairs.len() - 1].key),
        }
    }
}

/// Repair performed while rebalancing after a deletion.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum RepairAction {
    /// `node` took `moved` (a child subtree) from its sibling `donor`.
    BorrowedChild {
        node: NodeId,
        donor: NodeId,
        moved: NodeId,
    },
    /// `node` took one boundary pair from the sibling leaf `donor`.
    BorrowedPair { node: NodeId, donor: NodeId },
    /// `absorbed` was merged into `into` (combined fanout fit in one node).
    Merged { into: NodeId, absorbed: NodeId },
    /// `node` and `sibling` could neither borrow nor merge directly; the
    /// subtrees below them were rebuilt from scratch.
    Rebuilt {
        node: NodeId,
        sibling: NodeId,
        replacements: Vec<NodeId>,
    },
}

/// What a deletion changed, so a QRAM mirror can be kept consistent.
#[derive(Debug, Clone, Default)]
pub struct DeleteReport {
    pub actions: Vec<RepairAction>,
    /// Nodes whose slots changed and must be re-mirrored.
    pub dirty: Vec<NodeId>,
    /// Nodes that no longer exist; their QRAM blocks should be cleared.
    pub removed: Vec<NodeId>,
    /// The root is internal and kept fewer than two children. The owner
    /// decides between borrowing across trees, merging trees or downgrading.
    pub root_underflow: bool,
    /// The tree holds no pairs at all.
    pub now_empty: bool,
}

#[derive(Debug, Clone)]
pub struct WeightBalancedTree {
    nodes: BTreeMap<NodeId, BPlusNode>,
    root: NodeId,
    height: u32,
    params: TreeParams,
    next_id: u64,
}

impl WeightBalancedTree {
    /// Builds a perfectly balanced tree from a sorted dataset in one pass.
    ///
    /// With `h = floor(log_B N)` the pairs are distributed evenly over
    /// `ceil(N / B^h) * B^(h-1)` leaves (remainders on the leftmost ones),
    /// and every level above the leaves has full fanout except the root.
    /// Node ids are assigned breadth-first from 0. One classical access is
    /// charged per node written.
    pub fn bulk_load(dataset: &Dataset, params: TreeParams, io: &mut IoCounters) -> Result<Self> {
        if dataset.is_empty() {
            return Err(Error::EmptyDataset);
        }
        Self::bulk_load_slice(dataset.pairs(), params, io)
    }

    pub(crate) fn bulk_load_slice(
        pairs: &[KeyRecordPair],
        params: TreeParams,
        io: &mut IoCounters,
    ) -> Result<Self> {
        let n = pairs.len() as u64;
        if n == 0 {
            return Err(Error::EmptyDataset);
        }
        let b = params.b() as u64;
        let h = params.floor_log(n);

        // Node counts per level, root first.
        let mut level_counts: Vec<u64> = Vec::new();
        if h == 0 {
            level_counts.push(1);
        } else {
            let m = n.div_ceil(params.b_pow(h));
            if m == 1 {
                // Full tree of height h-1: the top of the lattice is the root.
                for l in 0..h {
                    level_counts.push(params.b_pow(l));
                }
            } else {
                level_counts.push(1);
                for l in 0..h {
                    level_counts.push(m * params.b_pow(l));
                }
            }
        }
        let leaf_count = *level_counts.last().unwrap();

        // Breadth-first ids: level by level from the root.
        let mut level_start: Vec<u64> = Vec::with_capacity(level_counts.len());
        let mut acc = 0;
        for c in &level_counts {
            level_start.push(acc);
            acc += c;
        }
        let total_nodes = acc;

        let mut nodes = BTreeMap::new();
        let tree_height = (level_counts.len() - 1) as u32;

        // Leaves: even distribution, remainders leftmost.
        let base = n / leaf_count;
        let extra = n % leaf_count;
        let leaf_ids_start = level_start[level_counts.len() - 1];
        let mut offset = 0usize;
        for i in 0..leaf_count {
            let take = (base + if i < extra { 1 } else { 0 }) as usize;
            let id = NodeId::new(leaf_ids_start + i);
            nodes.insert(
                id,
                BPlusNode {
                    id,
                    height: 0,
                    weight: take as u64,
                    kind: NodeKind::Leaf {
                        pairs: pairs[offset..offset + take].to_vec(),
                    },
                },
            );
            offset += take;
        }
        debug_assert_eq!(offset, pairs.len());

        // Internal levels, bottom-up.
        for lvl in (0..level_counts.len() - 1).rev() {
            let child_start = level_start[lvl + 1];
            let child_count = level_counts[lvl + 1];
            let fanout = (child_count / level_counts[lvl]) as usize;
            debug_assert!(fanout <= b as usize);
            for i in 0..level_counts[lvl] {
                let id = NodeId::new(level_start[lvl] + i);
                let mut children = Vec::with_capacity(fanout);
                let mut routing = Vec::with_capacity(fanout);
                let mut weight = 0;
                for j in 0..fanout as u64 {
                    let child_id = NodeId::new(child_start + i * fanout as u64 + j);
                    let child = &nodes[&child_id];
                    weight += child.weight;
                    routing.push(child.bounds());
                    children.push(child_id);
                }
                nodes.insert(
                    id,
                    BPlusNode {
                        id,
                        height: tree_height - lvl as u32,
                        weight,
                        kind: NodeKind::Internal { children, routing },
                    },
                );
            }
        }

        io.classical_node_accesses += total_nodes;
        Ok(WeightBalancedTree {
            nodes,
            root: NodeId::new(0),
            height: tree_height,
            params,
            next_id: total_nodes,
        })
    }

    /// Assembles a tree from an explicit shape: sorted leaf pair groups and,
    /// per level above them, the fanouts grouping the level below. Used for
    /// worked-example fixtures and negative-control tests; the shape is not
    /// required to be balanced (`check_balance` is the judge of that).
    pub fn assemble(
        params: TreeParams,
        leaf_groups: Vec<Vec<KeyRecordPair>>,
        groupings: Vec<Vec<usize>>,
    ) -> Result<Self> {
        let all: Vec<KeyRecordPair> = leaf_groups.iter().flatten().copied().collect();
        if all.is_empty() {
            return Err(Error::EmptyDataset);
        }
        assert!(
            all.windows(2).all(|w| w[0] < w[1]),
            "leaf groups must be sorted and duplicate-free"
        );
        assert!(leaf_groups
            .iter()
            .all(|g| { !g.is_empty() && g.len() <= params.b() as usize }));

        let height = groupings.len() as u32;
        // Level sizes from root (1) down to the leaves.
        let mut level_sizes = Vec::new();
        let mut expect = leaf_groups.len();
        for g in &groupings {
            assert_eq!(g.iter().sum::<usize>(), expect, "grouping sums must chain");
            assert!(g.iter().all(|&f| f >= 1 && f <= params.b() as usize));
            level_sizes.push(expect);
            expect = g.len();
        }
        assert_eq!(expect, 1, "top grouping must produce a single root");
        level_sizes.push(1);
        level_sizes.reverse(); // root first

        let mut level_start = Vec::with_capacity(level_sizes.len());
        let mut acc = 0u64;
        for s in &level_sizes {
            level_start.push(acc);
            acc += *s as u64;
        }

        let mut nodes = BTreeMap::new();
        let leaf_start = level_start[level_sizes.len() - 1];
        for (i, pairs) in leaf_groups.iter().enumerate() {
            let id = NodeId::new(leaf_start + i as u64);
            nodes.insert(
                id,
                BPlusNode {
                    id,
                    height: 0,
                    weight: pairs.len() as u64,
                    kind: NodeKind::Leaf {
                        pairs: pairs.clone(),
                    },
                },
            );
        }
        // groupings[0] groups the leaves; walk levels bottom-up.
        for (depth, grouping) in groupings.iter().enumerate() {
            let lvl = level_sizes.len() - 2 - depth; // level being built
            let child_start = level_start[lvl + 1];
            let mut child_cursor = 0u64;
            for (i, &fanout) in grouping.iter().enumerate() {
                let id = NodeId::new(level_start[lvl] + i as u64);
                let mut children = Vec::with_capacity(fanout);
                let mut routing = Vec::with_capacity(fanout);
                let mut weight = 0;
                for _ in 0..fanout {
                    let child_id = NodeId::new(child_start + child_cursor);
                    child_cursor += 1;
                    let child = &nodes[&child_id];
                    weight += child.weight;
                    routing.push(child.bounds());
                    children.push(child_id);
                }
                nodes.insert(
                    id,
                    BPlusNode {
                        id,
                        height: (depth + 1) as u32,
                        kind: NodeKind::Internal { children, routing },
                        weight,
                    },
                );
            }
        }

        Ok(WeightBalancedTree {
            nodes,
            root: NodeId::new(0),
            height,
            params,
            next_id: acc,
        })
    }

    pub fn params(&self) -> TreeParams {
        self.params
    }

    pub fn root(&self) -> NodeId {
        self.root
    }

    pub fn height(&self) -> u32 {
        self.height
    }

    pub fn node(&self, id: NodeId) -> &BPlusNode {
        &self.nodes[&id]
    }

    pub fn get_node(&self, id: NodeId) -> Option<&BPlusNode> {
        self.nodes.get(&id)
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn nodes(&self) -> impl Iterator<Item = &BPlusNode> {
        self.nodes.values()
    }

    /// Number of live pairs in the tree.
    pub fn live_pairs(&self) -> u64 {
        self.nodes[&self.root].weight
    }

    fn balance_floor(&self, height: u32) -> u64 {
        self.params.b_pow(height + 1) / 4
    }

    /// Leaf ids in key order. Structural bookkeeping, not metered.
    pub fn leaves_in_order(&self) -> Vec<NodeId> {
        let mut out = Vec::new();
        let mut stack = alloc::vec![self.root];
        while let Some(id) = stack.pop() {
            match &self.nodes[&id].kind {
                NodeKind::Leaf { .. } => out.push(id),
                NodeKind::Internal { children, .. } => {
                    for c in children.iter().rev() {
                        stack.push(*c);
                    }
                }
            }
        }
        out
    }

    /// All live pairs in key order. Charges one access per node visited,
    /// the cost of reading the tree out for a merge or rebuild.
    pub fn collect_pairs(&self, io: &mut IoCounters) -> Vec<KeyRecordPair> {
        io.classical_node_accesses += self.nodes.len() as u64;
        let mut out = Vec::with_capacity(self.live_pairs() as usize);
        for leaf in self.leaves_in_order() {
            if let NodeKind::Leaf { pairs } = &self.nodes[&leaf].kind {
                out.extend_from_slice(pairs);
            }
        }
        out
    }

    /// Classical range query: root-to-leaf descent plus a leaf scan across
    /// the range. One IO per node on the descent path and per leaf visited.
    pub fn range_query(&self, range: &QueryRange, io: &mut IoCounters) -> Vec<KeyRecordPair> {
        let mut out = Vec::new();
        let leaves = self.leaves_in_order();

        // Descend to the first leaf that can contain a key >= lo.
        let mut id = self.root;
        io.classical_node_accesses += 1;
        loop {
            match &self.nodes[&id].kind {
                NodeKind::Leaf { .. } => break,
                NodeKind::Internal { children, routing } => {
                    let Some(pos) = routing.iter().position(|r| r.hi >= range.lo) else {
                        return out; // every key is below the range
                    };
                    id = children[pos];
                    io.classical_node_accesses += 1;
                }
            }
        }

        let start = leaves.iter().position(|l| *l == id).unwrap();
        for (i, leaf) in leaves[start..].iter().enumerate() {
            if i > 0 {
                io.classical_node_accesses += 1;
            }
            let NodeKind::Leaf { pairs } = &self.nodes[leaf].kind else {
                unreachable!()
            };
            if pairs.first().map(|p| p.key > range.hi).unwrap_or(false) {
                break;
            }
            out.extend(pairs.iter().filter(|p| range.contains(p.key)));
            if pairs.last().map(|p| p.key > range.hi).unwrap_or(false) {
                break;
            }
        }
        out
    }

    /// Exact number of live pairs with keys in `range`. Analytic helper for
    /// expected-attempt accounting; not metered.
    pub fn count_in_range(&self, range: &QueryRange) -> u64 {
        self.count_below(self.root, range)
    }

    fn count_below(&self, id: NodeId, range: &QueryRange) -> u64 {
        let node = &self.nodes[&id];
        match &node.kind {
            NodeKind::Leaf { pairs } => {
                pairs.iter().filter(|p| range.contains(p.key)).count() as u64
            }
            NodeKind::Internal { children, routing } => {
                let mut total = 0;
                for (c, r) in children.iter().zip(routing) {
                    if r.hi < range.lo || r.lo > range.hi {
                        continue;
                    }
                    if r.lo >= range.lo && r.hi <= range.hi {
                        total += self.nodes[c].weight;
                    } else {
                        total += self.count_below(*c, range);
                    }
                }
                total
            }
        }
    }

    // ------------------------------------------------------------------
    // Deletion and rebalancing
    // ------------------------------------------------------------------

    /// Deletes one (key, record) pair: the leaf slot becomes a dummy, then
    /// imbalanced ancestors are repaired bottom-up by sibling borrow, direct
    /// merge, or subtree rebuild, in that order. Node reads and writes are
    /// metered; QRAM mirroring is the caller's job, driven by the report.
    pub fn delete_pair(
        &mut self,
        pair: KeyRecordPair,
        io: &mut IoCounters,
    ) -> Result<DeleteReport> {
        let mut path = Vec::new();
        if !self.find_path(self.root, pair, io, &mut path) {
            return Err(Error::NotFound);
        }
        let mut report = DeleteReport::default();

        // Drop the pair from its leaf and propagate weights.
        let leaf_id = *path.last().unwrap();
        {
            let leaf = self.nodes.get_mut(&leaf_id).unwrap();
            let NodeKind::Leaf { pairs } = &mut leaf.kind else {
                unreachable!()
            };
            let pos = pairs.iter().position(|p| *p == pair).unwrap();
            pairs.remove(pos);
            leaf.weight -= 1;
        }
        for id in &path[..path.len() - 1] {
            self.nodes.get_mut(id).unwrap().weight -= 1;
        }
        io.classical_node_accesses += 1; // leaf write-back
        report.dirty.push(leaf_id);

        if self.nodes[&self.root].weight == 0 {
            report.now_empty = true;
            return Ok(report);
        }

        // Repair bottom-up along the path. Ancestor ids survive repairs
        // below them; a node replaced by a rebuild is simply gone.
        for i in (1..path.len()).rev() {
            let u = path[i];
            let parent = path[i - 1];
            if self.nodes.contains_key(&u) {
                let node = &self.nodes[&u];
                if node.weight < self.balance_floor(node.height) {
                    self.repair(u, parent, io, &mut report)?;
                }
            }
            self.refresh_routing(parent, io, &mut report);
        }

        let root = &self.nodes[&self.root];
        if !root.is_leaf() && root.fanout() < 2 {
            report.root_underflow = true;
        }
        dedup_ids(&mut report.dirty);
        dedup_ids(&mut report.removed);
        report.dirty.retain(|d| self.nodes.contains_key(d));
        Ok(report)
    }

    fn find_path(
        &self,
        id: NodeId,
        pair: KeyRecordPair,
        io: &mut IoCounters,
        path: &mut Vec<NodeId>,
    ) -> bool {
        io.classical_node_accesses += 1;
        path.push(id);
        match &self.nodes[&id].kind {
            NodeKind::Leaf { pairs } => {
                if pairs.contains(&pair) {
                    return true;
                }
            }
            NodeKind::Internal { children, routing } => {
                for (c, r) in children.iter().zip(routing) {
                    if r.lo <= pair.key && pair.key <= r.hi && self.find_path(*c, pair, io, path) {
                        return true;
                    }
                }
            }
        }
        path.pop();
        false
    }

    /// Recomputes `parent`'s routing entries from its children's bounds.
    fn refresh_routing(&mut self, parent: NodeId, io: &mut IoCounters, report: &mut DeleteReport) {
        let child_bounds: Vec<RoutingKey> = {
            let NodeKind::Internal { children, .. } = &self.nodes[&parent].kind else {
                return;
            };
            children.iter().map(|c| self.nodes[c].bounds()).collect()
        };
        let node = self.nodes.get_mut(&parent).unwrap();
        let NodeKind::Internal { routing, .. } = &mut node.kind else {
            unreachable!()
        };
        if *routing != child_bounds {
            *routing = child_bounds;
            io.classical_node_accesses += 1;
            report.dirty.push(parent);
        }
    }

    fn repair(
        &mut self,
        u: NodeId,
        parent: NodeId,
        io: &mut IoCounters,
        report: &mut DeleteReport,
    ) -> Result<()> {
        let pos = {
            let NodeKind::Internal { children, .. } = &self.nodes[&parent].kind else {
                unreachable!()
            };
            children.iter().position(|c| *c == u).unwrap()
        };
        let NodeKind::Internal { children, .. } = &self.nodes[&parent].kind else {
            unreachable!()
        };
        let left = if pos > 0 {
            Some(children[pos - 1])
        } else {
            None
        };
        let right = children.get(pos + 1).copied();

        for (sibling, sib_on_left) in [(left, true), (right, false)]
            .into_iter()
            .filter_map(|(s, side)| s.map(|s| (s, side)))
        {
            if self.try_borrow(u, sibling, sib_on_left, io, report) {
                return Ok(());
            }
        }

        // A node under a fanout-1 parent has no sibling to repair with; the
        // parent shares its weight and a larger floor, so it is imbalanced
        // too and its own repair (next in the ascent, or the owner's root
        // handling) restructures this subtree.
        let Some(sibling) = left.or(right) else {
            return Ok(());
        };
        // Prefer the left sibling for merging, matching the borrow order.
        let (l, r) = if Some(sibling) == left {
            (sibling, u)
        } else {
            (u, sibling)
        };

        let combined = self.nodes[&l].fanout() + self.nodes[&r].fanout();
        if combined <= self.params.b() as usize {
            self.merge_into_left(parent, l, r, io, report);
        } else {
            self.rebuild_pair(parent, l, r, io, report)?;
        }
        Ok(())
    }

    fn try_borrow(
        &mut self,
        u: NodeId,
        donor: NodeId,
        donor_on_left: bool,
        io: &mut IoCounters,
        report: &mut DeleteReport,
    ) -> bool {
        let height = self.nodes[&u].height;
        let floor = self.balance_floor(height);
        if self.nodes[&u].fanout() + 1 > self.params.b() as usize {
            return false;
        }
        if self.nodes[&donor].fanout() < 2 {
            return false;
        }

        io.classical_node_accesses += 1; // inspect the donor
        let donor_node = &self.nodes[&donor];
        let moved_weight = match &donor_node.kind {
            NodeKind::Internal { children, .. } => {
                let idx = if donor_on_left { children.len() - 1 } else { 0 };
                self.nodes[&children[idx]].weight
            }
            NodeKind::Leaf { .. } => 1,
        };
        if donor_node.weight - moved_weight < floor {
            return false;
        }
        if self.nodes[&u].weight + moved_weight < floor {
            return false;
        }

        // Execute the move; both nodes get written back.
        io.classical_node_accesses += 2;
        match self.nodes[&donor].kind.clone() {
            NodeKind::Internal {
                mut children,
                mut routing,
            } => {
                let idx = if donor_on_left { children.len() - 1 } else { 0 };
                let moved = children.remove(idx);
                let moved_routing = routing.remove(idx);
                {
                    let d = self.nodes.get_mut(&donor).unwrap();
                    d.weight -= moved_weight;
                    d.kind = NodeKind::Internal { children, routing };
                }
                let r = self.nodes.get_mut(&u).unwrap();
                let NodeKind::Internal { children, routing } = &mut r.kind else {
                    unreachable!()
                };
                if donor_on_left {
                    children.insert(0, moved);
                    routing.insert(0, moved_routing);
                } else {
                    children.push(moved);
                    routing.push(moved_routing);
                }
                r.weight += moved_weight;
                report.actions.push(RepairAction::BorrowedChild {
                    node: u,
                    donor,
                    moved,
                });
            }
            NodeKind::Leaf { mut pairs } => {
                let idx = if donor_on_left { pairs.len() - 1 } else { 0 };
                let moved = pairs.remove(idx);
                {
                    let d = self.nodes.get_mut(&donor).unwrap();
                    d.weight -= 1;
                    d.kind = NodeKind::Leaf { pairs };
                }
                let r = self.nodes.get_mut(&u).unwrap();
                let NodeKind::Leaf { pairs } = &mut r.kind else {
                    unreachable!()
                };
                if donor_on_left {
                    pairs.insert(0, moved);
                } else {
                    pairs.push(moved);
                }
                r.weight += 1;
                report
                    .actions
                    .push(RepairAction::BorrowedPair { node: u, donor });
            }
        }
        report.dirty.push(u);
        report.dirty.push(donor);
        true
    }

    fn merge_into_left(
        &mut self,
        parent: NodeId,
        l: NodeId,
        r: NodeId,
        io: &mut IoCounters,
        report: &mut DeleteReport,
    ) {
        io.classical_node_accesses += 2; // read right, write left
        let right = self.nodes.remove(&r).unwrap();
        let left = self.nodes.get_mut(&l).unwrap();
        match (&mut left.kind, right.kind) {
            (
                NodeKind::Internal { children, routing },
                NodeKind::Internal {
                    children: rc,
                    routing: rr,
                },
            ) => {
                children.extend(rc);
                routing.extend(rr);
            }
            (NodeKind::Leaf { pairs }, NodeKind::Leaf { pairs: rp }) => {
                pairs.extend(rp);
            }
            _ => unreachable!("siblings share a height"),
        }
        left.weight += right.weight;

        let p = self.nodes.get_mut(&parent).unwrap();
        let NodeKind::Internal { children, routing } = &mut p.kind else {
            unreachable!()
        };
        let rpos = children.iter().position(|c| *c == r).unwrap();
        children.remove(rpos);
        routing.remove(rpos);
        io.classical_node_accesses += 1; // parent write-back

        report.actions.push(RepairAction::Merged {
            into: l,
            absorbed: r,
        });
        report.dirty.push(l);
        report.dirty.push(parent);
        report.removed.push(r);
    }

    fn rebuild_pair(
        &mut self,
        parent: NodeId,
        l: NodeId,
        r: NodeId,
        io: &mut IoCounters,
        report: &mut DeleteReport,
    ) -> Result<()> {
        let height = self.nodes[&l].height;
        let mut pairs = Vec::new();
        for id in [l, r] {
            self.collect_subtree(id, io, &mut pairs, &mut report.removed);
        }
        let per_subtree = self.params.b_pow(height + 1);
        let count = (pairs.len() as u64).div_ceil(per_subtree).max(1) as usize;
        let mut replacements = Vec::with_capacity(count);
        let chunk = pairs.len().div_ceil(count);
        for part in pairs.chunks(chunk) {
            replacements.push(self.build_subtree(part, height, io, &mut report.dirty));
        }

        let p = self.nodes.get_mut(&parent).unwrap();
        let NodeKind::Internal { children, routing } = &mut p.kind else {
            unreachable!()
        };
        let lpos = children.iter().position(|c| *c == l).unwrap();
        children.remove(lpos + 1); // r is adjacent to l
        routing.remove(lpos + 1);
        children.remove(lpos);
        routing.remove(lpos);
        for (k, rep) in replacements.iter().enumerate() {
            children.insert(lpos + k, *rep);
            routing.insert(lpos + k, RoutingKey::new(Key::DUMMY, Key::DUMMY));
        }
        io.classical_node_accesses += 1; // parent write-back
        report.dirty.push(parent);
        // Routing placeholders are fixed by the caller's refresh pass.
        let bounds: Vec<RoutingKey> = replacements
            .iter()
            .map(|id| self.nodes[id].bounds())
            .collect();
        let p = self.nodes.get_mut(&parent).unwrap();
        let NodeKind::Internal { routing, .. } = &mut p.kind else {
            unreachable!()
        };
        for (k, bnd) in bounds.iter().enumerate() {
            routing[lpos + k] = *bnd;
        }

        report.actions.push(RepairAction::Rebuilt {
            node: r,
            sibling: l,
            replacements,
        });
        Ok(())
    }

    /// Reads out and removes an entire subtree. One access per node read.
    fn collect_subtree(
        &mut self,
        id: NodeId,
        io: &mut IoCounters,
        pairs: &mut Vec<KeyRecordPair>,
        removed: &mut Vec<NodeId>,
    ) {
        io.classical_node_accesses += 1;
        let node = self.nodes.remove(&id).unwrap();
        removed.push(id);
        match node.kind {
            NodeKind::Leaf { pairs: p } => pairs.extend(p),
            NodeKind::Internal { children, .. } => {
                for c in children {
                    self.collect_subtree(c, io, pairs, removed);
                }
            }
        }
    }

    /// Builds a fresh subtree of exactly `height` over sorted pairs, all
    /// internals perfectly balanced where the pair count allows. One access
    /// per node written; new ids come from this tree's allocator.
    fn build_subtree(
        &mut self,
        pairs: &[KeyRecordPair],
        height: u32,
        io: &mut IoCounters,
        created: &mut Vec<NodeId>,
    ) -> NodeId {
        io.classical_node_accesses += 1;
        let id = NodeId::new(self.next_id);
        self.next_id += 1;
        created.push(id);
        if height == 0 {
            debug_assert!(pairs.len() <= self.params.b() as usize);
            self.nodes.insert(
                id,
                BPlusNode {
                    id,
                    height: 0,
                    weight: pairs.len() as u64,
                    kind: NodeKind::Leaf {
                        pairs: pairs.to_vec(),
                    },
                },
            );
            return id;
        }
        let per_child = self.params.b_pow(height);
        let fanout = (pairs.len() as u64)
            .div_ceil(per_child)
            .clamp(1, self.params.b() as u64) as usize;
        let chunk = pairs.len().div_ceil(fanout);
        let mut children = Vec::with_capacity(fanout);
        let mut routing = Vec::with_capacity(fanout);
        for part in pairs.chunks(chunk) {
            let child = self.build_subtree(part, height - 1, io, created);
            routing.push(self.nodes[&child].bounds());
            children.push(child);
        }
        self.nodes.insert(
            id,
            BPlusNode {
                id,
                height,
                weight: pairs.len() as u64,
                kind: NodeKind::Internal { children, routing },
            },
        );
        id
    }

    /// Removes an underflowed internal root, promoting its only child.
    /// Returns (old root id, new root id).
    pub fn collapse_root(&mut self, io: &mut IoCounters) -> (NodeId, NodeId) {
        let NodeKind::Internal { children, .. } = &self.nodes[&self.root].kind else {
            panic!("collapse_root on a leaf root");
        };
        assert_eq!(children.len(), 1);
        let child = children[0];
        self.nodes.remove(&self.root);
        io.classical_node_accesses += 1;
        let old = self.root;
        self.root = child;
        self.height -= 1;
        (old, child)
    }

    /// Detaches the `pos`-th child subtree of the root, returning its pairs.
    /// Reads (and removes) every node of the subtree.
    pub fn extract_root_child(
        &mut self,
        pos: usize,
        io: &mut IoCounters,
    ) -> (Vec<KeyRecordPair>, Vec<NodeId>) {
        let child = {
            let node = self.nodes.get_mut(&self.root).unwrap();
            let NodeKind::Internal { children, routing } = &mut node.kind else {
                panic!("extract_root_child on a leaf root")
            };
            routing.remove(pos);
            children.remove(pos)
        };
        let mut pairs = Vec::new();
        let mut removed = Vec::new();
        let weight = self.nodes[&child].weight;
        self.collect_subtree(child, io, &mut pairs, &mut removed);
        self.nodes.get_mut(&self.root).unwrap().weight -= weight;
        io.classical_node_accesses += 1; // root write-back
        (pairs, removed)
    }

    /// Grafts sorted pairs as a fresh `height`-high child of the root, at
    /// the position keeping sibling routing sorted. The pairs' key range
    /// must not overlap any existing child's range.
    pub fn graft_root_child(
        &mut self,
        pairs: &[KeyRecordPair],
        height: u32,
        io: &mut IoCounters,
    ) -> Vec<NodeId> {
        assert_eq!(height + 1, self.nodes[&self.root].height);
        let mut created = Vec::new();
        let child = self.build_subtree(pairs, height, io, &mut created);
        let bounds = self.nodes[&child].bounds();
        let node = self.nodes.get_mut(&self.root).unwrap();
        let NodeKind::Internal { children, routing } = &mut node.kind else {
            panic!("graft_root_child on a leaf root")
        };
        let pos = routing
            .iter()
            .position(|r| r.lo > bounds.hi)
            .unwrap_or(routing.len());
        if pos > 0 {
            assert!(routing[pos - 1].hi < bounds.lo, "overlapping graft");
        }
        children.insert(pos, child);
        routing.insert(pos, bounds);
        node.weight += pairs.len() as u64;
        io.classical_node_accesses += 1; // root write-back
        created
    }
}

fn dedup_ids(ids: &mut Vec<NodeId>) {
    ids.sort_unstable();
    ids.dedup();
}

// ----------------------------------------------------------------------
// Balance checking
// ----------------------------------------------------------------------

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NodeBalance {
    pub id: NodeId,
    pub height: u32,
    pub weight: u64,
    pub balanced: bool,
    pub perfectly_balanced: bool,
}

/// Structural audit of one tree: per-node balance plus every invariant the
/// search algorithms assume.
#[derive(Debug, Clone)]
pub struct BalanceReport {
    pub per_node: Vec<NodeBalance>,
    pub all_balanced: bool,
    pub all_perfectly_balanced: bool,
    pub leaves_same_level: bool,
    pub violations: Vec<String>,
}

impl BalanceReport {
    pub fn is_clean(&self) -> bool {
        self.violations.is_empty() && self.all_balanced && self.leaves_same_level
    }
}

impl WeightBalancedTree {
    /// Verifies weights, routing keys, heights, fanout, leaf levels, and
    /// the balanced / perfectly-balanced predicates for every node.
    pub fn check_balance(&self) -> BalanceReport {
        let mut report = BalanceReport {
            per_node: Vec::new(),
            all_balanced: true,
            all_perfectly_balanced: true,
            leaves_same_level: true,
            violations: Vec::new(),
        };
        let mut leaf_levels = Vec::new();
        self.audit(self.root, 0, &mut report, &mut leaf_levels);
        if leaf_levels.windows(2).any(|w| w[0] != w[1]) {
            report.leaves_same_level = false;
            report
                .violations
                .push(String::from("leaves are not all on one level"));
        }

        let root = &self.nodes[&self.root];
        if !root.is_leaf() && root.fanout() < 2 {
            report
                .violations
                .push(String::from("internal root has fewer than two children"));
        }
        if root.height != self.height {
            report.violations.push(format!(
                "stored tree height {} != root height {}",
                self.height, root.height
            ));
        }
        report
    }

    fn audit(
        &self,
        id: NodeId,
        level: u32,
        report: &mut BalanceReport,
        leaf_levels: &mut Vec<u32>,
    ) -> u64 {
        let node = &self.nodes[&id];
        let b = self.params.b() as usize;
        if node.fanout() > b {
            report.violations.push(format!(
                "node {} fanout {} exceeds B",
                id.get(),
                node.fanout()
            ));
        }
        if node.fanout() == 0 {
            report
                .violations
                .push(format!("node {} is empty", id.get()));
        }

        let computed = match &node.kind {
            NodeKind::Leaf { pairs } => {
                if node.height != 0 {
                    report
                        .violations
                        .push(format!("leaf {} has height {}", id.get(), node.height));
                }
                if pairs.windows(2).any(|w| w[0] >= w[1]) {
                    report
                        .violations
                        .push(format!("leaf {} pairs out of order", id.get()));
                }
                leaf_levels.push(level);
                pairs.len() as u64
            }
            NodeKind::Internal { children, routing } => {
                let mut sum = 0;
                for (c, r) in children.iter().zip(routing) {
                    let child = &self.nodes[c];
                    if child.height + 1 != node.height {
                        report.violations.push(format!(
                            "child {} height {} under node {} height {}",
                            c.get(),
                            child.height,
                            id.get(),
                            node.height
                        ));
                    }
                    if *r != child.bounds() {
                        report.violations.push(format!(
                            "routing for child {} of node {} is stale",
                            c.get(),
                            id.get()
                        ));
                    }
                    sum += self.audit(*c, level + 1, report, leaf_levels);
                }
                // Duplicate key values may legitimately share a boundary
                // key across siblings; anything beyond that is corruption.
                if routing.windows(2).any(|w| w[0].hi > w[1].lo) {
                    report.violations.push(format!(
                        "node {} sibling routing ranges overlap or are unsorted",
                        id.get()
                    ));
                }
                sum
            }
        };
        if computed != node.weight {
            report.violations.push(format!(
                "node {} stored weight {} != computed {}",
                id.get(),
                node.weight,
                computed
            ));
        }

        let is_root = id == self.root;
        let cap = self.params.b_pow(node.height + 1);
        let balanced = is_root || (node.weight >= cap / 4 && node.weight <= cap);
        let perfect = is_root || (node.weight >= cap / 2 && node.weight <= cap);
        if !balanced {
            report.all_balanced = false;
            report.violations.push(format!(
                "node {} weight {} outside [{}, {}]",
                id.get(),
                node.weight,
                cap / 4,
                cap
            ));
        }
        if !perfect {
            report.all_perfectly_balanced = false;
        }
        report.per_node.push(NodeBalance {
            id,
            height: node.height,
            weight: node.weight,
            balanced,
            perfectly_balanced: perfect,
        });
        computed
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    fn pairs(keys: &[i64]) -> Vec<KeyRecordPair> {
        keys.iter()
            .map(|&k| KeyRecordPair::new(k, k as u64))
            .collect()
    }

    fn dataset(keys: &[i64]) -> Dataset {
        Dataset::from_pairs(pairs(keys)).unwrap()
    }

    fn params4() -> TreeParams {
        TreeParams::new(4).unwrap()
    }

    #[test]
    fn bulk_load_14_pairs_follows_leaf_count_formula() {
        // floor(log_4 14) = 1, so ceil(14/4) * 4^0 = 4 leaves on one level.
        let mut io = IoCounters::new();
        let d = dataset(&[1, 2, 4, 6, 8, 10, 13, 16, 19, 21, 25, 27, 33, 35]);
        let t = WeightBalancedTree::bulk_load(&d, params4(), &mut io).unwrap();
        assert_eq!(t.height(), 1);
        assert_eq!(t.leaves_in_order().len(), 4);
        let weights: Vec<u64> = t
            .leaves_in_order()
            .iter()
            .map(|l| t.node(*l).weight)
            .collect();
        assert_eq!(weights, vec![4, 4, 3, 3]);
        let report = t.check_balance();
        assert!(report.is_clean(), "{:?}", report.violations);
        assert!(report.all_perfectly_balanced);
        assert_eq!(io.classical_node_accesses, t.node_count() as u64);
    }

    #[test]
    fn bulk_load_exactly_b_pairs_is_a_single_leaf_root() {
        let mut io = IoCounters::new();
        let d = dataset(&[1, 2, 3, 4]);
        let t = WeightBalancedTree::bulk_load(&d, params4(), &mut io).unwrap();
        assert_eq!(t.height(), 0);
        assert_eq!(t.node_count(), 1);
        assert!(t.node(t.root()).is_leaf());
        assert!(t.check_balance().is_clean());
    }

    #[test]
    fn bulk_load_b_squared_is_a_full_two_level_tree() {
        let mut io = IoCounters::new();
        let keys: Vec<i64> = (0..16).collect();
        let t = WeightBalancedTree::bulk_load(&dataset(&keys), params4(), &mut io).unwrap();
        assert_eq!(t.height(), 1);
        let leaves = t.leaves_in_order();
        assert_eq!(leaves.len(), 4);
        assert!(leaves.iter().all(|l| t.node(*l).weight == 4));
        assert!(t.check_balance().all_perfectly_balanced);
    }

    #[test]
    fn bulk_load_empty_dataset_fails() {
        let mut io = IoCounters::new();
        let d = Dataset::from_pairs(Vec::new()).unwrap();
        assert!(matches!(
            WeightBalancedTree::bulk_load(&d, params4(), &mut io),
            Err(Error::EmptyDataset)
        ));
    }

    #[test]
    fn leaf_count_formula_holds_across_sizes() {
        let mut io = IoCounters::new();
        for b in [4u32, 8, 16] {
            let params = TreeParams::new(b).unwrap();
            for n in [1usize, 3, 7, 17, 64, 100, 257, 1000] {
                let keys: Vec<i64> = (0..n as i64).collect();
                let t = WeightBalancedTree::bulk_load(&dataset(&keys), params, &mut io).unwrap();
                let h = params.floor_log(n as u64);
                let expected = if h == 0 {
                    1
                } else {
                    (n as u64).div_ceil(params.b_pow(h)) * params.b_pow(h - 1)
                };
                assert_eq!(t.leaves_in_order().len() as u64, expected, "n={n} b={b}");
                let report = t.check_balance();
                assert!(
                    report.is_clean() && report.all_perfectly_balanced,
                    "n={n} b={b}"
                );
            }
        }
    }

    #[test]
    fn range_query_matches_brute_force() {
        let mut io = IoCounters::new();
        let keys: Vec<i64> = (0..100).map(|i| i * 3).collect();
        let t = WeightBalancedTree::bulk_load(&dataset(&keys), params4(), &mut io).unwrap();
        for (lo, hi) in [(5, 11), (0, 297), (100, 100), (400, 500), (-10, -1)] {
            let range = QueryRange::new(Key::new(lo), Key::new(hi)).unwrap();
            let got: Vec<i64> = t
                .range_query(&range, &mut io)
                .iter()
                .map(|p| p.key.get())
                .collect();
            let want: Vec<i64> = keys
                .iter()
                .copied()
                .filter(|k| lo <= *k && *k <= hi)
                .collect();
            assert_eq!(got, want, "range [{lo},{hi}]");
            assert_eq!(t.count_in_range(&range), want.len() as u64);
        }
    }

    #[test]
    fn full_domain_query_touches_every_leaf() {
        let mut io = IoCounters::new();
        let keys: Vec<i64> = (0..64).collect();
        let t = WeightBalancedTree::bulk_load(&dataset(&keys), params4(), &mut io).unwrap();
        io.reset();
        let range = QueryRange::new(Key::new(0), Key::new(63)).unwrap();
        let got = t.range_query(&range, &mut io);
        assert_eq!(got.len(), 64);
        let leaves = t.leaves_in_order().len() as u64;
        // Descent path + every further leaf.
        assert_eq!(
            io.classical_node_accesses,
            (t.height() as u64 + 1) + (leaves - 1)
        );
    }

    #[test]
    fn assembled_imbalanced_node_is_reported() {
        // A height-1 node of weight 3 < B^2/4 = 4 must be flagged.
        let t = WeightBalancedTree::assemble(
            params4(),
            vec![
                pairs(&[1, 2]),
                pairs(&[3]),
                pairs(&[5, 6, 7, 8]),
                pairs(&[9, 10, 11, 12]),
            ],
            vec![vec![2, 2], vec![2]],
        )
        .unwrap();
        let report = t.check_balance();
        assert!(!report.all_balanced);
        let bad = report
            .per_node
            .iter()
            .find(|n| n.height == 1 && n.weight == 3)
            .unwrap();
        assert!(!bad.balanced);
    }
}
