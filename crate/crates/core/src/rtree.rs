//! Static quantum range tree for multi-dimensional range queries.
//!
//! Built by induction on the dimension: a classical B+ tree indexes the
//! last coordinate, every internal node carries a (d-1)-dimensional tree
//! over its subtree's pairs, and the 1-dimensional base case is a static
//! quantum B+ tree. A query decomposes the last dimension into canonical
//! nodes, recurses through their secondaries down to the base trees, runs
//! the global classical search on each, and finishes with one combined
//! local quantum search whose post-selection oracle re-checks all `d`
//! coordinates. Canonical nodes that are leaves answer classically and
//! their pairs ride along as a side list.
//!
//! The same structure doubles as the metered classical range tree baseline.

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use crate::btree::{NodeId, NodeKind, WeightBalancedTree};
use crate::error::{Error, Result};
use crate::metrics::IoCounters;
use crate::qbtree::{
    classify, local_quantum_search, Attempts, Candidates, EvalMode, GlobalOutcome, NodeClass,
    QuantumBPlusTree, QueryResult, SearchGroup,
};
use crate::ratio::Ratio;
use crate::types::{Key, KeyRecordPair, QueryRange, RecordHandle, TreeParams};

/// A multi-dimensional key-record pair. Record handles are unique.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub struct MdPair {
    pub key: Vec<Key>,
    pub rec: RecordHandle,
}

impl MdPair {
    pub fn new(coords: &[i64], rec: u64) -> MdPair {
        MdPair {
            key: coords.iter().map(|&c| Key::new(c)).collect(),
            rec: RecordHandle(rec),
        }
    }
}

/// Per-dimension inclusive bounds.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MdRange {
    pub dims: Vec<QueryRange>,
}

impl MdRange {
    pub fn new(dims: Vec<QueryRange>) -> MdRange {
        MdRange { dims }
    }

    pub fn contains(&self, key: &[Key]) -> bool {
        key.iter().zip(&self.dims).all(|(k, r)| r.contains(*k))
    }
}

/// One level of the recursive structure.
enum Level {
    Base(QuantumBPlusTree),
    Nested {
        /// Classical tree over this level's coordinate.
        primary: WeightBalancedTree,
        /// This level's pairs, sorted by its coordinate; node ranges below
        /// index into this.
        pairs: Vec<MdPair>,
        /// Half-open pair range of each primary node's subtree.
        ranges: BTreeMap<NodeId, (usize, usize)>,
        /// Secondary (d-1)-dimensional tree per internal node.
        secondaries: BTreeMap<NodeId, Level>,
        dim: u32,
    },
}

/// Result of a multi-dimensional quantum range query.
#[derive(Debug, Clone)]
pub struct MdQueryOutcome {
    pub result: QueryResult,
    /// Pairs answered classically by canonical leaf nodes.
    pub classical_side: Vec<KeyRecordPair>,
    pub attempts: Option<Attempts>,
    pub used_fallback: bool,
}

impl MdQueryOutcome {
    pub fn support(&self) -> Vec<KeyRecordPair> {
        let mut v = self.result.support();
        v.extend_from_slice(&self.classical_side);
        v.sort_unstable();
        v.dedup();
        v
    }
}

/// Expected cost of one analytic multi-dimensional query.
#[derive(Debug, Clone)]
pub struct MdQueryEstimate {
    pub expected_io: Ratio,
    pub attempts: Option<Ratio>,
    pub result_count: u64,
    pub quantum_path: bool,
}

/// Canonical decomposition of a 1-dimensional range over a primary tree:
/// disjoint subtrees whose union covers exactly the in-range pairs of the
/// decomposed dimension. Internal nodes hand off to their secondaries;
/// leaves answer classically.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CanonicalSet {
    pub internal: Vec<NodeId>,
    pub leaves: Vec<NodeId>,
}

impl CanonicalSet {
    pub fn len(&self) -> usize {
        self.internal.len() + self.leaves.len()
    }

    pub fn is_empty(&self) -> bool {
        self.internal.is_empty() && self.leaves.is_empty()
    }
}

pub struct QuantumRangeTree {
    dim: u32,
    params: TreeParams,
    root: Level,
    /// Full key vector per record handle; the post-selection oracle reads
    /// the coordinates of a basis state through it.
    records: BTreeMap<u64, Vec<Key>>,
}

impl QuantumRangeTree {
    /// Recursively builds the structure over `d`-dimensional pairs.
    /// Classical node writes and base-tree QRAM stores are metered.
    pub fn build(pairs: &[MdPair], params: TreeParams, io: &mut IoCounters) -> Result<Self> {
        if pairs.is_empty() {
            return Err(Error::EmptyDataset);
        }
        let dim = pairs[0].key.len() as u32;
        assert!(dim >= 1);
        assert!(pairs.iter().all(|p| p.key.len() as u32 == dim));
        let mut records = BTreeMap::new();
        for p in pairs {
            let clash = records.insert(p.rec.0, p.key.clone());
            if clash.is_some() {
                return Err(Error::DuplicatePair);
            }
        }
        let root = build_level(pairs.to_vec(), dim, params, io)?;
        Ok(QuantumRangeTree {
            dim,
            params,
            root,
            records,
        })
    }

    pub fn dim(&self) -> u32 {
        self.dim
    }

    pub fn params(&self) -> TreeParams {
        self.params
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    fn full_key(&self, rec: RecordHandle) -> &[Key] {
        &self.records[&rec.0]
    }

    /// Multi-dimensional quantum range query.
    pub fn query(
        &self,
        range: &MdRange,
        mode: EvalMode<'_>,
        io: &mut IoCounters,
    ) -> Result<MdQueryOutcome> {
        assert_eq!(range.dims.len() as u32, self.dim);
        let mut groups: Vec<(&QuantumBPlusTree, Candidates)> = Vec::new();
        let mut side: Vec<KeyRecordPair> = Vec::new();
        collect_candidates(&self.root, range, io, &mut groups, &mut side);

        if groups.is_empty() {
            return Ok(MdQueryOutcome {
                result: if side.is_empty() {
                    QueryResult::Empty
                } else {
                    QueryResult::ClassicalList(side.clone())
                },
                classical_side: side,
                attempts: None,
                used_fallback: true,
            });
        }

        let search_groups: Vec<SearchGroup<'_>> = groups
            .iter()
            .map(|(qt, c)| {
                let height = qt.height() - c.level;
                SearchGroup {
                    q0: qt.q0(),
                    q1: qt.q1(),
                    nodes: c.nodes.clone(),
                    height,
                    weight_per_node: self.params.b_pow(height + 1),
                }
            })
            .collect();

        let out = local_quantum_search(
            &search_groups,
            self.params.b(),
            true,
            |p| !p.is_dummy() && range.contains(self.full_key(p.rec)),
            mode,
            io,
        )?;
        Ok(MdQueryOutcome {
            result: QueryResult::Superposition(out.state),
            classical_side: side,
            attempts: Some(out.attempts),
            used_fallback: false,
        })
    }

    /// Expected cost of one analytic query without materializing states.
    pub fn query_io_estimate(&self, range: &MdRange, io: &mut IoCounters) -> MdQueryEstimate {
        let before = io.snapshot();
        let mut groups: Vec<(&QuantumBPlusTree, Candidates)> = Vec::new();
        let mut side: Vec<KeyRecordPair> = Vec::new();
        collect_candidates(&self.root, range, io, &mut groups, &mut side);
        if groups.is_empty() {
            let global = io.since(&before).total_io();
            return MdQueryEstimate {
                expected_io: Ratio::from_int(global),
                attempts: None,
                result_count: side.len() as u64,
                quantum_path: false,
            };
        }
        let mut total_slots: u128 = 0;
        let mut in_range: u128 = 0;
        let mut max_height = 0;
        let mut m = 0u64;
        for (qt, c) in &groups {
            let height = qt.height() - c.level;
            max_height = max_height.max(height);
            total_slots += (c.nodes.len() as u128) * self.params.b_pow(height + 1) as u128;
            // A base tree's pairs satisfy every higher dimension already,
            // so its first-coordinate count is its full-predicate count.
            in_range += qt.tree().count_in_range(&range.dims[0]) as u128;
            m += c.nodes.len() as u64;
        }
        debug_assert!(in_range > 0);
        let attempts = Ratio::new(total_slots, in_range);
        let loads_per_attempt = max_height as u64 + 1;
        let global = io.since(&before).total_io() + m;
        MdQueryEstimate {
            expected_io: attempts.mul_int(loads_per_attempt).add_int(global),
            attempts: Some(attempts),
            result_count: in_range as u64 + side.len() as u64,
            quantum_path: true,
        }
    }

    /// The classical range tree baseline: same structure, canonical
    /// decomposition per level, pairs reported classically. IO grows with
    /// the output size.
    pub fn classical_query(&self, range: &MdRange, io: &mut IoCounters) -> Vec<KeyRecordPair> {
        assert_eq!(range.dims.len() as u32, self.dim);
        let mut out = Vec::new();
        classical_collect(&self.root, range, io, &mut out);
        out.sort_unstable();
        out
    }

    /// Structural audit: every internal node's secondary indexes exactly
    /// the pairs below it, per-level secondary sizes sum to N per level,
    /// and every base tree is weight-balanced.
    pub fn check_structure(&self) -> Vec<String> {
        let mut violations = Vec::new();
        audit_level(&self.root, &mut violations);
        violations
    }

    /// Canonical decomposition of this structure's last dimension. `None`
    /// for one-dimensional trees (the base case decomposes nothing). The
    /// subtrees are disjoint and cover exactly the pairs whose last
    /// coordinate lies in `r`.
    pub fn canonical_nodes(&self, r: &QueryRange, io: &mut IoCounters) -> Option<CanonicalSet> {
        let Level::Nested { primary, .. } = &self.root else {
            return None;
        };
        let mut canonical = Vec::new();
        let mut leaves = Vec::new();
        io.classical_node_accesses += 1;
        let root = primary.root();
        match classify(primary.node(root).bounds(), r) {
            NodeClass::Outside => {}
            NodeClass::Inside => {
                if primary.node(root).is_leaf() {
                    leaves.push(root);
                } else {
                    canonical.push(root);
                }
            }
            NodeClass::Partial => {
                if primary.node(root).is_leaf() {
                    leaves.push(root);
                } else {
                    canonical_walk(primary, root, r, io, &mut canonical, &mut leaves);
                }
            }
        }
        Some(CanonicalSet {
            internal: canonical,
            leaves,
        })
    }

    /// The half-open pair range of a top-level primary node, within this
    /// level's sort order. Test support for cover audits.
    pub fn primary_node_range(&self, id: NodeId) -> Option<(usize, usize)> {
        match &self.root {
            Level::Base(_) => None,
            Level::Nested { ranges, .. } => ranges.get(&id).copied(),
        }
    }

    /// This level's pairs in its own sort order (last coordinate).
    pub fn level_pairs(&self) -> Option<&[MdPair]> {
        match &self.root {
            Level::Base(_) => None,
            Level::Nested { pairs, .. } => Some(pairs),
        }
    }
}

fn build_level(
    mut pairs: Vec<MdPair>,
    dim: u32,
    params: TreeParams,
    io: &mut IoCounters,
) -> Result<Level> {
    if dim == 1 {
        pairs.sort_unstable_by(|a, b| (a.key[0], a.rec).cmp(&(b.key[0], b.rec)));
        let scalar: Vec<KeyRecordPair> = pairs
            .iter()
            .map(|p| KeyRecordPair {
                key: p.key[0],
                rec: p.rec,
            })
            .collect();
        let qt = QuantumBPlusTree::build_from_sorted(&scalar, params, io)?;
        return Ok(Level::Base(qt));
    }

    let coord = (dim - 1) as usize;
    pairs.sort_unstable_by(|a, b| (a.key[coord], a.rec).cmp(&(b.key[coord], b.rec)));
    let scalar: Vec<KeyRecordPair> = pairs
        .iter()
        .map(|p| KeyRecordPair {
            key: p.key[coord],
            rec: p.rec,
        })
        .collect();
    let primary = WeightBalancedTree::bulk_load_slice(&scalar, params, io)?;
    let ranges = node_pair_ranges(&primary);

    let mut secondaries = BTreeMap::new();
    for node in primary.nodes() {
        if node.is_leaf() {
            continue;
        }
        let (start, end) = ranges[&node.id];
        let sub = build_level(pairs[start..end].to_vec(), dim - 1, params, io)?;
        secondaries.insert(node.id, sub);
    }
    Ok(Level::Nested {
        primary,
        pairs,
        ranges,
        secondaries,
        dim,
    })
}

/// Half-open index range of each node's subtree within the level's sorted
/// pair order. Bulk loading distributes pairs left to right, so leaves
/// partition the order and internal ranges concatenate their children's.
fn node_pair_ranges(tree: &WeightBalancedTree) -> BTreeMap<NodeId, (usize, usize)> {
    let mut map = BTreeMap::new();
    let mut cursor = 0usize;
    for leaf in tree.leaves_in_order() {
        let w = tree.node(leaf).weight as usize;
        map.insert(leaf, (cursor, cursor + w));
        cursor += w;
    }
    fill_ranges(tree, tree.root(), &mut map);
    map
}

fn fill_ranges(
    tree: &WeightBalancedTree,
    id: NodeId,
    map: &mut BTreeMap<NodeId, (usize, usize)>,
) -> (usize, usize) {
    if let Some(r) = map.get(&id) {
        return *r;
    }
    let NodeKind::Internal { children, .. } = &tree.node(id).kind else {
        unreachable!()
    };
    let mut start = usize::MAX;
    let mut end = 0;
    for c in children.clone() {
        let (s, e) = fill_ranges(tree, c, map);
        start = start.min(s);
        end = end.max(e);
    }
    map.insert(id, (start, end));
    (start, end)
}

/// Canonical decomposition at one level, recursing into secondaries:
/// inside internal children hand the search to their secondary trees,
/// canonical leaves answer classically into `side`.
fn collect_candidates<'a>(
    level: &'a Level,
    range: &MdRange,
    io: &mut IoCounters,
    groups: &mut Vec<(&'a QuantumBPlusTree, Candidates)>,
    side: &mut Vec<KeyRecordPair>,
) {
    match level {
        Level::Base(qt) => match qt.global_search(&range.dims[0], io) {
            GlobalOutcome::Quantum(c) => groups.push((qt, c)),
            GlobalOutcome::Fallback(_) => {}
        },
        Level::Nested {
            primary,
            pairs,
            ranges,
            secondaries,
            dim,
        } => {
            let this = range.dims[(*dim - 1) as usize];
            let mut canonical: Vec<NodeId> = Vec::new();
            let mut leaves: Vec<NodeId> = Vec::new();

            io.classical_node_accesses += 1; // root read
            let root = primary.root();
            match classify(primary.node(root).bounds(), &this) {
                NodeClass::Outside => return,
                NodeClass::Inside => {
                    if primary.node(root).is_leaf() {
                        leaves.push(root);
                    } else {
                        canonical.push(root);
                    }
                }
                NodeClass::Partial => {
                    if primary.node(root).is_leaf() {
                        leaves.push(root);
                    } else {
                        canonical_walk(primary, root, &this, io, &mut canonical, &mut leaves);
                    }
                }
            }

            for leaf in leaves {
                io.classical_node_accesses += 1; // scan the leaf's pairs
                let (start, end) = ranges[&leaf];
                for p in &pairs[start..end] {
                    if range.contains(&p.key) {
                        side.push(KeyRecordPair {
                            key: p.key[0],
                            rec: p.rec,
                        });
                    }
                }
            }
            for node in canonical {
                collect_candidates(&secondaries[&node], range, io, groups, side);
            }
        }
    }
}

/// Standard two-boundary walk: inside children become canonical nodes,
/// partial children recurse (at most two per level), partial leaves are
/// reported for classical scanning.
fn canonical_walk(
    tree: &WeightBalancedTree,
    id: NodeId,
    range: &QueryRange,
    io: &mut IoCounters,
    canonical: &mut Vec<NodeId>,
    leaves: &mut Vec<NodeId>,
) {
    let NodeKind::Internal { children, routing } = &tree.node(id).kind else {
        unreachable!()
    };
    for (c, r) in children.iter().zip(routing) {
        match classify(*r, range) {
            NodeClass::Outside => {}
            NodeClass::Inside => {
                if tree.node(*c).is_leaf() {
                    leaves.push(*c);
                } else {
                    canonical.push(*c);
                }
            }
            NodeClass::Partial => {
                if tree.node(*c).is_leaf() {
                    leaves.push(*c);
                } else {
                    io.classical_node_accesses += 1; // read the child
                    canonical_walk(tree, *c, range, io, canonical, leaves);
                }
            }
        }
    }
}

fn classical_collect(
    level: &Level,
    range: &MdRange,
    io: &mut IoCounters,
    out: &mut Vec<KeyRecordPair>,
) {
    match level {
        Level::Base(qt) => {
            // Pairs here satisfy every higher dimension by construction.
            out.extend(qt.tree().range_query(&range.dims[0], io));
        }
        Level::Nested {
            primary,
            pairs,
            ranges,
            secondaries,
            dim,
        } => {
            let this = range.dims[(*dim - 1) as usize];
            let mut canonical = Vec::new();
            let mut leaves = Vec::new();
            io.classical_node_accesses += 1;
            let root = primary.root();
            match classify(primary.node(root).bounds(), &this) {
                NodeClass::Outside => return,
                NodeClass::Inside => {
                    if primary.node(root).is_leaf() {
                        leaves.push(root);
                    } else {
                        canonical.push(root);
                    }
                }
                NodeClass::Partial => {
                    if primary.node(root).is_leaf() {
                        leaves.push(root);
                    } else {
                        canonical_walk(primary, root, &this, io, &mut canonical, &mut leaves);
                    }
                }
            }
            for leaf in leaves {
                io.classical_node_accesses += 1;
                let (start, end) = ranges[&leaf];
                for p in &pairs[start..end] {
                    if range.contains(&p.key) {
                        out.push(KeyRecordPair {
                            key: p.key[0],
                            rec: p.rec,
                        });
                    }
                }
            }
            for node in canonical {
                classical_collect(&secondaries[&node], range, io, out);
            }
        }
    }
}

fn audit_level(level: &Level, violations: &mut Vec<String>) {
    match level {
        Level::Base(qt) => {
            let report = qt.tree().check_balance();
            if !report.is_clean() {
                for v in report.violations {
                    violations.push(format!("base tree: {v}"));
                }
            }
        }
        Level::Nested {
            primary,
            pairs,
            ranges,
            secondaries,
            dim,
        } => {
            let report = primary.check_balance();
            if !report.is_clean() {
                for v in report.violations {
                    violations.push(format!("dim-{dim} primary: {v}"));
                }
            }
            // Secondary sizes match node weights; per-level sums equal N.
            let mut per_level: BTreeMap<u32, u64> = BTreeMap::new();
            for node in primary.nodes() {
                if node.is_leaf() {
                    if secondaries.contains_key(&node.id) {
                        violations
                            .push(format!("dim-{dim}: leaf {} has a secondary", node.id.get()));
                    }
                    continue;
                }
                let Some((start, end)) = ranges.get(&node.id) else {
                    violations.push(format!("dim-{dim}: node {} unranged", node.id.get()));
                    continue;
                };
                if (end - start) as u64 != node.weight {
                    violations.push(format!(
                        "dim-{dim}: node {} range size {} != weight {}",
                        node.id.get(),
                        end - start,
                        node.weight
                    ));
                }
                *per_level.entry(node.height).or_insert(0) += node.weight;
                match secondaries.get(&node.id) {
                    None => violations.push(format!(
                        "dim-{dim}: internal {} lacks a secondary",
                        node.id.get()
                    )),
                    Some(sub) => {
                        if secondary_len(sub) != (end - start) as u64 {
                            violations.push(format!(
                                "dim-{dim}: secondary of {} holds {} pairs, want {}",
                                node.id.get(),
                                secondary_len(sub),
                                end - start
                            ));
                        }
                        audit_level(sub, violations);
                    }
                }
            }
            let n = pairs.len() as u64;
            for (h, sum) in per_level {
                // Leaf-level parents and above each cover all N pairs.
                if sum != n {
                    violations.push(format!(
                        "dim-{dim}: internal level h={h} covers {sum} of {n} pairs"
                    ));
                }
            }
        }
    }
}

fn secondary_len(level: &Level) -> u64 {
    match level {
        Level::Base(qt) => qt.live_pairs(),
        Level::Nested { pairs, .. } => pairs.len() as u64,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    fn params4() -> TreeParams {
        TreeParams::new(4).unwrap()
    }

    fn grid(nx: i64, ny: i64) -> Vec<MdPair> {
        let mut v = Vec::new();
        for x in 0..nx {
            for y in 0..ny {
                v.push(MdPair::new(&[x, y], (x * ny + y) as u64));
            }
        }
        v
    }

    fn md_range(b: &[(i64, i64)]) -> MdRange {
        MdRange::new(
            b.iter()
                .map(|&(lo, hi)| QueryRange::new(Key::new(lo), Key::new(hi)).unwrap())
                .collect(),
        )
    }

    #[test]
    fn one_dimensional_tree_matches_quantum_bptree() {
        let mut io = IoCounters::new();
        let pairs: Vec<MdPair> = (0..20).map(|k| MdPair::new(&[k * 2], k as u64)).collect();
        let rt = QuantumRangeTree::build(&pairs, params4(), &mut io).unwrap();
        let out = rt
            .query(&md_range(&[(6, 20)]), EvalMode::Analytic, &mut io)
            .unwrap();
        let keys: Vec<i64> = out.support().iter().map(|p| p.key.get()).collect();
        assert_eq!(keys, vec![6, 8, 10, 12, 14, 16, 18, 20]);
        assert!(rt.check_structure().is_empty());
    }

    #[test]
    fn grid_structure_audits_clean() {
        let mut io = IoCounters::new();
        let rt = QuantumRangeTree::build(&grid(4, 4), params4(), &mut io).unwrap();
        let violations = rt.check_structure();
        assert!(violations.is_empty(), "{violations:?}");
    }

    #[test]
    fn point_region_query_on_grid() {
        let mut io = IoCounters::new();
        let rt = QuantumRangeTree::build(&grid(8, 8), params4(), &mut io).unwrap();
        let out = rt
            .query(&md_range(&[(3, 3), (5, 5)]), EvalMode::Analytic, &mut io)
            .unwrap();
        let support = out.support();
        assert_eq!(support.len(), 1);
        assert_eq!(support[0].rec.0, 3 * 8 + 5);
    }

    #[test]
    fn two_dimensional_support_matches_brute_force() {
        let mut io = IoCounters::new();
        let pairs = grid(6, 5);
        let rt = QuantumRangeTree::build(&pairs, params4(), &mut io).unwrap();
        for (xb, yb) in [
            ((0, 5), (0, 4)),
            ((1, 3), (2, 4)),
            ((2, 2), (0, 0)),
            ((4, 9), (3, 9)),
            ((7, 9), (0, 4)),
        ] {
            let r = md_range(&[xb, yb]);
            let out = rt.query(&r, EvalMode::Analytic, &mut io).unwrap();
            let got: Vec<u64> = out.support().iter().map(|p| p.rec.0).collect();
            let mut want: Vec<u64> = pairs
                .iter()
                .filter(|p| r.contains(&p.key))
                .map(|p| p.rec.0)
                .collect();
            want.sort_unstable();
            assert_eq!(got, want, "range {xb:?} x {yb:?}");

            let classical: Vec<u64> = rt
                .classical_query(&r, &mut io)
                .iter()
                .map(|p| p.rec.0)
                .collect();
            assert_eq!(classical, want);
        }
    }

    #[test]
    fn full_domain_uses_root_canonical_node() {
        let mut io = IoCounters::new();
        let rt = QuantumRangeTree::build(&grid(8, 8), params4(), &mut io).unwrap();
        io.reset();
        let out = rt
            .query(&md_range(&[(0, 7), (0, 7)]), EvalMode::Analytic, &mut io)
            .unwrap();
        assert_eq!(out.support().len(), 64);
        assert!(!out.used_fallback);
    }

    #[test]
    fn estimate_agrees_with_materialized_query() {
        let mut io = IoCounters::new();
        let pairs = grid(6, 6);
        let rt = QuantumRangeTree::build(&pairs, params4(), &mut io).unwrap();
        for r in [
            md_range(&[(1, 4), (1, 4)]),
            md_range(&[(0, 5), (0, 5)]),
            md_range(&[(9, 12), (0, 5)]),
        ] {
            let mut io_a = IoCounters::new();
            let mut io_b = IoCounters::new();
            let est = rt.query_io_estimate(&r, &mut io_a);
            let full = rt.query(&r, EvalMode::Analytic, &mut io_b).unwrap();
            assert_eq!(est.attempts, full.attempts.map(|a| a.to_ratio()));
            assert_eq!(est.result_count as usize, full.support().len());
        }
    }

    #[test]
    fn canonical_decomposition_examples() {
        let mut io = IoCounters::new();
        let pairs = grid(8, 8);
        let rt = QuantumRangeTree::build(&pairs, params4(), &mut io).unwrap();

        // Full-domain range: the root alone.
        let full = QueryRange::new(Key::new(0), Key::new(7)).unwrap();
        let set = rt.canonical_nodes(&full, &mut io).unwrap();
        assert_eq!(set.internal, vec![rt_root(&rt)]);
        assert!(set.leaves.is_empty());

        // Empty overlap: nothing.
        let miss = QueryRange::new(Key::new(100), Key::new(200)).unwrap();
        assert!(rt.canonical_nodes(&miss, &mut io).unwrap().is_empty());

        // One-dimensional trees decompose nothing.
        let one_d: Vec<MdPair> = (0..10).map(|k| MdPair::new(&[k], k as u64)).collect();
        let rt1 = QuantumRangeTree::build(&one_d, params4(), &mut io).unwrap();
        assert!(rt1.canonical_nodes(&full, &mut io).is_none());
    }

    fn rt_root(rt: &QuantumRangeTree) -> NodeId {
        // The primary root always has breadth-first id 0.
        let _ = rt;
        NodeId::new(0)
    }

    #[test]
    fn canonical_cover_is_disjoint_and_exact_exhaustively() {
        let mut io = IoCounters::new();
        let pairs = grid(9, 3); // last-dim coordinates 0..3 over 27 pairs
        let rt = QuantumRangeTree::build(&pairs, params4(), &mut io).unwrap();
        let level_pairs = rt.level_pairs().unwrap().to_vec();
        let n = level_pairs.len();
        let last = pairs[0].key.len() - 1;

        for lo in -1..4i64 {
            for hi in lo..4 {
                let r = QueryRange::new(Key::new(lo), Key::new(hi)).unwrap();
                let set = rt.canonical_nodes(&r, &mut io).unwrap();

                // Disjointness: covered index ranges never overlap.
                let mut covered = alloc::vec![false; n];
                for id in set.internal.iter() {
                    let (s, e) = rt.primary_node_range(*id).unwrap();
                    for slot in covered.iter_mut().take(e).skip(s) {
                        assert!(!*slot, "overlapping canonical subtrees");
                        *slot = true;
                    }
                }
                // Exact cover: internal subtrees lie fully inside; adding
                // the filtered leaf pairs reproduces the brute-force set.
                let mut got: Vec<u64> = Vec::new();
                for (i, flag) in covered.iter().enumerate() {
                    if *flag {
                        assert!(r.contains(level_pairs[i].key[last]));
                        got.push(level_pairs[i].rec.0);
                    }
                }
                for id in set.leaves.iter() {
                    let (s, e) = rt.primary_node_range(*id).unwrap();
                    for p in &level_pairs[s..e] {
                        if r.contains(p.key[last]) {
                            got.push(p.rec.0);
                        }
                    }
                }
                got.sort_unstable();
                let mut want: Vec<u64> = pairs
                    .iter()
                    .filter(|p| r.contains(p.key[last]))
                    .map(|p| p.rec.0)
                    .collect();
                want.sort_unstable();
                assert_eq!(got, want, "range [{lo},{hi}]");
            }
        }
    }

    #[test]
    fn empty_overlap_returns_empty() {
        let mut io = IoCounters::new();
        let rt = QuantumRangeTree::build(&grid(4, 4), params4(), &mut io).unwrap();
        let out = rt
            .query(&md_range(&[(10, 20), (0, 3)]), EvalMode::Analytic, &mut io)
            .unwrap();
        assert!(matches!(out.result, QueryResult::Empty));
        assert!(out.support().is_empty());
    }
}
