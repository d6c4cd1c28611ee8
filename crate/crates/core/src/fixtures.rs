//! Hand-assembled worked-example trees used across the test suites and the
//! demo: a 14-pair, B = 4 weight-balanced tree whose shape exercises every
//! interesting case (partial/inside classification, the 3/32 post-selection
//! probability, sibling borrow and subtree rebuild on deletion).

use alloc::vec;
use alloc::vec::Vec;

use crate::btree::WeightBalancedTree;
use crate::metrics::IoCounters;
use crate::qbtree::QuantumBPlusTree;
use crate::types::{KeyRecordPair, TreeParams};

/// Keys of the 14-pair example, in order. The first ten sit under the two
/// level-1 nodes covering [1, 6] and [8, 21]; the last four are the keys of
/// the third subtree (27 drives the rebuild fixture, 33 occupies the first
/// slot of leaf 10).
pub const EXAMPLE_KEYS: [i64; 14] = [1, 2, 4, 6, 8, 10, 13, 16, 19, 21, 25, 27, 33, 35];

/// Each record handle equals its key value, so `rec_k` reads naturally.
pub fn example_pairs() -> Vec<KeyRecordPair> {
    EXAMPLE_KEYS
        .iter()
        .map(|&k| KeyRecordPair::new(k, k as u64))
        .collect()
}

/// The example tree: N = 14, B = 4, height 2.
///
/// Breadth-first ids: root 0; internal nodes 1 (children 4, 5), 2 (children
/// 6, 7, 8) and 3 (children 9, 10); leaves 4..=10 holding
/// {1,2} {4,6} {8,10} {13} {16,19,21} {25,27} {33,35}.
/// Weight-balanced but not perfectly balanced (nodes 1 and 3 have weight 4,
/// below B^2/2 = 8).
pub fn example_tree() -> WeightBalancedTree {
    let params = TreeParams::new(4).unwrap();
    let leaf = |keys: &[i64]| -> Vec<KeyRecordPair> {
        keys.iter()
            .map(|&k| KeyRecordPair::new(k, k as u64))
            .collect()
    };
    WeightBalancedTree::assemble(
        params,
        vec![
            leaf(&[1, 2]),
            leaf(&[4, 6]),
            leaf(&[8, 10]),
            leaf(&[13]),
            leaf(&[16, 19, 21]),
            leaf(&[25, 27]),
            leaf(&[33, 35]),
        ],
        vec![vec![2, 3, 2], vec![3]],
    )
    .unwrap()
}

/// The example tree mirrored into its QRAMs.
pub fn example_quantum_tree(io: &mut IoCounters) -> QuantumBPlusTree {
    QuantumBPlusTree::from_tree(example_tree(), io)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::btree::NodeId;

    #[test]
    fn example_tree_shape() {
        let t = example_tree();
        assert_eq!(t.height(), 2);
        assert_eq!(t.node_count(), 11);
        assert_eq!(t.live_pairs(), 14);
        let report = t.check_balance();
        assert!(report.is_clean(), "{:?}", report.violations);
        assert!(!report.all_perfectly_balanced);

        // Node 1 is balanced (weight 4 >= B^2/4) but not perfectly so.
        let n1 = report
            .per_node
            .iter()
            .find(|n| n.id == NodeId::new(1))
            .unwrap();
        assert_eq!(n1.weight, 4);
        assert!(n1.balanced && !n1.perfectly_balanced);
    }
}
