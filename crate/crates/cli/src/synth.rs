//! Synthetic datasets: uniform random integer keys, distinct by
//! construction so rank-window queries cover an exact number of records.

use qbtree_core::rtree::MdPair;
use qbtree_core::{KeyRecordPair, Rng};
use std::collections::BTreeSet;

const KEY_SPAN: u64 = 1 << 62;

/// `n` pairs with distinct keys; record handles are 0..n in key order.
pub fn gen_pairs(n: usize, rng: &mut Rng) -> Vec<KeyRecordPair> {
    let mut keys = BTreeSet::new();
    while keys.len() < n {
        keys.insert(rng.gen_range(KEY_SPAN) as i64);
    }
    keys.into_iter()
        .enumerate()
        .map(|(i, k)| KeyRecordPair::new(k, i as u64))
        .collect()
}

/// `n` two-dimensional pairs with per-dimension distinct coordinates.
pub fn gen_md_pairs(n: usize, rng: &mut Rng) -> Vec<MdPair> {
    let mut xs = BTreeSet::new();
    while xs.len() < n {
        xs.insert(rng.gen_range(KEY_SPAN) as i64);
    }
    let mut ys = BTreeSet::new();
    while ys.len() < n {
        ys.insert(rng.gen_range(KEY_SPAN) as i64);
    }
    let xs: Vec<i64> = xs.into_iter().collect();
    let mut ys: Vec<i64> = ys.into_iter().collect();
    // Shuffle the second coordinate so the dimensions are independent.
    for i in (1..ys.len()).rev() {
        ys.swap(i, rng.gen_index(i + 1));
    }
    xs.into_iter()
        .zip(ys)
        .enumerate()
        .map(|(i, (x, y))| MdPair::new(&[x, y], i as u64))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn keys_are_distinct_and_sorted() {
        let mut rng = Rng::from_seed(5);
        let pairs = gen_pairs(500, &mut rng);
        assert_eq!(pairs.len(), 500);
        assert!(pairs.windows(2).all(|w| w[0].key < w[1].key));
    }

    #[test]
    fn md_coordinates_distinct_per_dimension() {
        let mut rng = Rng::from_seed(6);
        let pairs = gen_md_pairs(300, &mut rng);
        let xs: BTreeSet<i64> = pairs.iter().map(|p| p.key[0].get()).collect();
        let ys: BTreeSet<i64> = pairs.iter().map(|p| p.key[1].get()).collect();
        assert_eq!(xs.len(), 300);
        assert_eq!(ys.len(), 300);
    }

    #[test]
    fn same_seed_same_dataset() {
        let a = gen_pairs(100, &mut Rng::from_seed(9));
        let b = gen_pairs(100, &mut Rng::from_seed(9));
        assert_eq!(a, b);
    }
}
