//! Query workload generation. A query is a uniformly random sorted-rank
//! window of `ceil(selectivity * N)` consecutive keys, so its result size
//! is exact when keys are distinct. Two-dimensional queries window each
//! dimension by `sqrt(selectivity)` to approximate the joint selectivity.

use qbtree_core::rtree::{MdPair, MdRange};
use qbtree_core::{Key, KeyRecordPair, QueryRange, Rng};

pub fn window_size(n: usize, selectivity: f64) -> usize {
    ((selectivity * n as f64).ceil() as usize).clamp(1, n)
}

/// Rank-window ranges over a sorted dataset.
pub fn gen_queries(
    pairs: &[KeyRecordPair],
    selectivity: f64,
    count: usize,
    rng: &mut Rng,
) -> Vec<QueryRange> {
    let n = pairs.len();
    let k = window_size(n, selectivity);
    (0..count)
        .map(|_| {
            let start = rng.gen_index(n - k + 1);
            QueryRange::new(pairs[start].key, pairs[start + k - 1].key).unwrap()
        })
        .collect()
}

/// Independent per-dimension rank windows of sqrt(selectivity) each.
pub fn gen_md_queries(
    pairs: &[MdPair],
    selectivity: f64,
    count: usize,
    rng: &mut Rng,
) -> Vec<MdRange> {
    let n = pairs.len();
    let per_dim = selectivity.sqrt();
    let k = window_size(n, per_dim);
    let dims = pairs[0].key.len();
    let mut sorted_dims: Vec<Vec<Key>> = Vec::with_capacity(dims);
    for d in 0..dims {
        let mut coords: Vec<Key> = pairs.iter().map(|p| p.key[d]).collect();
        coords.sort_unstable();
        sorted_dims.push(coords);
    }
    (0..count)
        .map(|_| {
            let dims = sorted_dims
                .iter()
                .map(|coords| {
                    let start = rng.gen_index(n - k + 1);
                    QueryRange::new(coords[start], coords[start + k - 1]).unwrap()
                })
                .collect();
            MdRange::new(dims)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::synth::gen_pairs;

    #[test]
    fn full_selectivity_covers_the_domain() {
        let mut rng = Rng::from_seed(3);
        let pairs = gen_pairs(50, &mut rng);
        let qs = gen_queries(&pairs, 1.0, 5, &mut rng);
        for q in qs {
            assert_eq!(q.lo, pairs[0].key);
            assert_eq!(q.hi, pairs[49].key);
        }
    }

    #[test]
    fn five_percent_windows_cover_exactly_fifty_ranks() {
        let mut rng = Rng::from_seed(4);
        let pairs = gen_pairs(1000, &mut rng);
        let qs = gen_queries(&pairs, 0.05, 20, &mut rng);
        for q in qs {
            let k = pairs.iter().filter(|p| q.contains(p.key)).count();
            assert_eq!(k, 50);
        }
    }

    #[test]
    fn same_seed_same_queries() {
        let pairs = gen_pairs(200, &mut Rng::from_seed(8));
        let a = gen_queries(&pairs, 0.1, 10, &mut Rng::from_seed(21));
        let b = gen_queries(&pairs, 0.1, 10, &mut Rng::from_seed(21));
        assert_eq!(a, b);
    }
}
