//! The `verify` subcommand: compact invariant and oracle suites. Returns
//! false (and the binary exits non-zero) on any violation.

use qbtree_core::dynamic::DynamicQuantumBTree;
use qbtree_core::qbtree::{EvalMode, GlobalOutcome};
use qbtree_core::rtree::QuantumRangeTree;
use qbtree_core::{
    Dataset, IoCounters, Key, KeyRecordPair, QuantumBPlusTree, QueryRange, Ratio, Rng, TreeParams,
};

use crate::queries::{gen_md_queries, gen_queries};
use crate::synth::{gen_md_pairs, gen_pairs};

pub fn run_verify(seed: u64) -> bool {
    let mut ok = true;
    ok &= report("static oracle equivalence", static_oracle(seed));
    ok &= report("candidate and density lemmas", candidate_density(seed ^ 1));
    ok &= report("dynamic workload invariants", dynamic_invariants(seed ^ 2));
    ok &= report("range tree 2-d oracle", range_tree_oracle(seed ^ 3));
    ok
}

fn report(name: &str, passed: bool) -> bool {
    println!("{}: {}", name, if passed { "ok" } else { "VIOLATION" });
    passed
}

fn brute(pairs: &[KeyRecordPair], range: &QueryRange) -> Vec<KeyRecordPair> {
    let mut v: Vec<KeyRecordPair> = pairs
        .iter()
        .copied()
        .filter(|p| range.contains(p.key))
        .collect();
    v.sort_unstable();
    v
}

fn static_oracle(seed: u64) -> bool {
    let mut rng = Rng::from_seed(seed);
    for b in [4u32, 8, 16] {
        let params = TreeParams::new(b).unwrap();
        for _ in 0..10 {
            let n = 1 + rng.gen_index(400);
            let pairs = gen_pairs(n, &mut rng);
            let dataset = Dataset::from_pairs(pairs.clone()).unwrap();
            let mut io = IoCounters::new();
            let Ok(qt) = QuantumBPlusTree::build(&dataset, params, &mut io) else {
                return false;
            };
            let queries = gen_queries(&pairs, 0.07, 6, &mut rng);
            for q in queries {
                let Ok(out) = qt.query(&q, EvalMode::Analytic, &mut io) else {
                    return false;
                };
                if out.result.support() != brute(&pairs, &q) {
                    return false;
                }
            }
        }
    }
    true
}

fn candidate_density(seed: u64) -> bool {
    let mut rng = Rng::from_seed(seed);
    for b in [4u32, 8, 16] {
        let params = TreeParams::new(b).unwrap();
        for _ in 0..10 {
            let n = 1 + rng.gen_index(400);
            let pairs = gen_pairs(n, &mut rng);
            let dataset = Dataset::from_pairs(pairs).unwrap();
            let mut io = IoCounters::new();
            let qt = QuantumBPlusTree::build(&dataset, params, &mut io).unwrap();
            for _ in 0..6 {
                let a = rng.gen_range(1 << 62) as i64;
                let len = rng.gen_range(1 << 61) as i64;
                let range = QueryRange::new(Key::new(a), Key::new(a.saturating_add(len))).unwrap();
                if let GlobalOutcome::Quantum(c) = qt.global_search(&range, &mut io) {
                    if c.nodes.len() > 2 {
                        return false;
                    }
                }
                let est = qt.query_io_estimate(&range, &mut io);
                if let Some(attempts) = est.attempts {
                    if attempts > Ratio::from_int(8 * b as u64) {
                        return false;
                    }
                }
            }
        }
    }
    true
}

fn dynamic_invariants(seed: u64) -> bool {
    let mut rng = Rng::from_seed(seed);
    let params = TreeParams::new(8).unwrap();
    let mut d = DynamicQuantumBTree::new(params);
    let mut io = IoCounters::new();
    let mut live: Vec<KeyRecordPair> = Vec::new();
    for _ in 0..1200 {
        if !live.is_empty() && rng.gen_ratio(1, 5) {
            let victim = live.swap_remove(rng.gen_index(live.len()));
            if d.delete(victim, &mut io).is_err() {
                return false;
            }
        } else {
            let p = KeyRecordPair::new(rng.gen_range(1 << 40) as i64, rng.next_u64());
            if live.contains(&p) {
                continue;
            }
            if d.insert(p, &mut io).is_err() {
                return false;
            }
            live.push(p);
        }
    }
    if !d.check_invariants().is_clean() {
        return false;
    }
    live.sort_unstable();
    for q in gen_queries(&live, 0.05, 10, &mut rng) {
        let Ok(out) = d.query(&q, EvalMode::Analytic, &mut io) else {
            return false;
        };
        if out.support() != brute(&live, &q) {
            return false;
        }
    }
    true
}

fn range_tree_oracle(seed: u64) -> bool {
    let mut rng = Rng::from_seed(seed);
    let params = TreeParams::new(4).unwrap();
    for _ in 0..8 {
        let n = 16 + rng.gen_index(200);
        let pairs = gen_md_pairs(n, &mut rng);
        let mut io = IoCounters::new();
        let Ok(rt) = QuantumRangeTree::build(&pairs, params, &mut io) else {
            return false;
        };
        if !rt.check_structure().is_empty() {
            return false;
        }
        for q in gen_md_queries(&pairs, 0.1, 5, &mut rng) {
            let Ok(out) = rt.query(&q, EvalMode::Analytic, &mut io) else {
                return false;
            };
            let mut want: Vec<u64> = pairs
                .iter()
                .filter(|p| q.contains(&p.key))
                .map(|p| p.rec.0)
                .collect();
            want.sort_unstable();
            let got: Vec<u64> = out.support().iter().map(|p| p.rec.0).collect();
            if got != want {
                return false;
            }
        }
    }
    true
}
