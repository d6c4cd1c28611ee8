//! Experiment driver: builds the quantum structure and its classical
//! baseline on the same data, runs the query workload on both, and reports
//! mean IO counts per operation. Analytic mode is deterministic under a
//! fixed seed; stochastic mode actually draws the post-selections (and is
//! meant for moderate dataset sizes, since it materializes superpositions).

use anyhow::Context;
use qbtree_core::dynamic::DynamicQuantumBTree;
use qbtree_core::qbtree::EvalMode;
use qbtree_core::rtree::{MdPair, MdRange, QuantumRangeTree};
use qbtree_core::{
    Attempts, Dataset, IoCounters, KeyRecordPair, QuantumBPlusTree, QueryRange, Rng, TreeParams,
};

use crate::config::{Eval, ExperimentConfig, KeyMode, Mode, ResultRow};
use crate::ingest::{ingest_checkins, Ingested};
use crate::queries::{gen_md_queries, gen_queries};
use crate::synth::{gen_md_pairs, gen_pairs};

pub fn run_experiment(cfg: &ExperimentConfig) -> anyhow::Result<Vec<ResultRow>> {
    cfg.validate()?;
    let mut master = Rng::from_seed(cfg.seed);
    let mut data_rng = master.split(1);
    let mut query_rng = master.split(2);
    let mut eval_rng = master.split(3);

    match cfg.mode {
        Mode::Static => {
            let pairs = load_1d(cfg, &mut data_rng)?;
            run_static(cfg, pairs, &mut query_rng, &mut eval_rng)
        }
        Mode::Dynamic => {
            let pairs = load_1d(cfg, &mut data_rng)?;
            run_dynamic(cfg, pairs, &mut data_rng, &mut query_rng, &mut eval_rng)
        }
        Mode::Range2d => {
            let pairs = load_2d(cfg, &mut data_rng)?;
            run_range2d(cfg, pairs, &mut query_rng, &mut eval_rng)
        }
    }
}

fn load_1d(cfg: &ExperimentConfig, rng: &mut Rng) -> anyhow::Result<Vec<KeyRecordPair>> {
    match &cfg.dataset {
        None => Ok(gen_pairs(cfg.n, rng)),
        Some(path) => match ingest_checkins(path, KeyMode::Timestamp, cfg.n, rng)? {
            Ingested::Timestamps(mut pairs) => {
                pairs.sort_unstable();
                Ok(pairs)
            }
            Ingested::Locations(_) => unreachable!(),
        },
    }
}

fn load_2d(cfg: &ExperimentConfig, rng: &mut Rng) -> anyhow::Result<Vec<MdPair>> {
    match &cfg.dataset {
        None => Ok(gen_md_pairs(cfg.n, rng)),
        Some(path) => match ingest_checkins(path, KeyMode::Location2d, cfg.n, rng)? {
            Ingested::Locations(pairs) => Ok(pairs),
            Ingested::Timestamps(_) => unreachable!(),
        },
    }
}

struct Means {
    io: f64,
    attempts: f64,
}

fn run_static(
    cfg: &ExperimentConfig,
    pairs: Vec<KeyRecordPair>,
    query_rng: &mut Rng,
    eval_rng: &mut Rng,
) -> anyhow::Result<Vec<ResultRow>> {
    let params = TreeParams::new(cfg.b).context("invalid branching factor")?;
    let dataset = Dataset::from_pairs(pairs).context("bad dataset")?;
    let n = dataset.len();
    let mut build_io = IoCounters::new();
    let qt = QuantumBPlusTree::build(&dataset, params, &mut build_io)?;

    let queries = gen_queries(dataset.pairs(), cfg.selectivity, cfg.query_count, query_rng);
    let quantum = measure_static_quantum(&qt, &queries, cfg.eval, eval_rng)?;
    let classical = measure_classical_1d(&qt, &queries);

    Ok(vec![
        ResultRow {
            structure: "quantum_bptree",
            n,
            b: cfg.b,
            selectivity: cfg.selectivity,
            mean_query_io: Some(quantum.io),
            mean_attempts: Some(quantum.attempts),
            mean_insert_io: None,
            mean_delete_io: None,
            seed: cfg.seed,
        },
        ResultRow {
            structure: "classical_bptree",
            n,
            b: cfg.b,
            selectivity: cfg.selectivity,
            mean_query_io: Some(classical),
            mean_attempts: None,
            mean_insert_io: None,
            mean_delete_io: None,
            seed: cfg.seed,
        },
    ])
}

fn measure_static_quantum(
    qt: &QuantumBPlusTree,
    queries: &[QueryRange],
    eval: Eval,
    rng: &mut Rng,
) -> anyhow::Result<Means> {
    let mut io_sum = 0.0;
    let mut attempts_sum = 0.0;
    for q in queries {
        let mut io = IoCounters::new();
        match eval {
            Eval::Analytic => {
                let est = qt.query_io_estimate(q, &mut io);
                io_sum += est.expected_io.to_f64();
                attempts_sum += est.attempts.map(|a| a.to_f64()).unwrap_or(0.0);
            }
            Eval::Stochastic => {
                let out = qt.query(q, EvalMode::Stochastic(rng), &mut io)?;
                io_sum += io.total_io() as f64;
                if let Some(Attempts::Observed(a)) = out.attempts {
                    attempts_sum += a as f64;
                }
            }
        }
    }
    let count = queries.len() as f64;
    Ok(Means {
        io: io_sum / count,
        attempts: attempts_sum / count,
    })
}

fn measure_classical_1d(qt: &QuantumBPlusTree, queries: &[QueryRange]) -> f64 {
    let mut io_sum = 0u64;
    for q in queries {
        let mut io = IoCounters::new();
        let _ = qt.tree().range_query(q, &mut io);
        io_sum += io.total_io();
    }
    io_sum as f64 / queries.len() as f64
}

fn run_dynamic(
    cfg: &ExperimentConfig,
    pairs: Vec<KeyRecordPair>,
    workload_rng: &mut Rng,
    query_rng: &mut Rng,
    eval_rng: &mut Rng,
) -> anyhow::Result<Vec<ResultRow>> {
    let params = TreeParams::new(cfg.b).context("invalid branching factor")?;
    let mut dyn_tree = DynamicQuantumBTree::new(params);
    let mut live: Vec<KeyRecordPair> = Vec::new();

    let mut insert_io = 0u64;
    let mut inserts = 0u64;
    let mut delete_io = 0u64;
    let mut deletes = 0u64;
    for pair in pairs {
        let mut io = IoCounters::new();
        // 1% chance to delete an existing record instead of inserting.
        if !live.is_empty() && workload_rng.gen_ratio(1, 100) {
            let victim = live.swap_remove(workload_rng.gen_index(live.len()));
            dyn_tree.delete(victim, &mut io)?;
            delete_io += io.total_io();
            deletes += 1;
        } else {
            dyn_tree.insert(pair, &mut io)?;
            live.push(pair);
            insert_io += io.total_io();
            inserts += 1;
        }
    }
    let mut io = IoCounters::new();
    dyn_tree.flush_buffer(&mut io)?;
    live.sort_unstable();
    anyhow::ensure!(!live.is_empty(), "workload deleted every record");
    let n = live.len();

    let queries = gen_queries(&live, cfg.selectivity, cfg.query_count, query_rng);
    let mut io_sum = 0.0;
    let mut attempts_sum = 0.0;
    for q in &queries {
        let mut io = IoCounters::new();
        match cfg.eval {
            Eval::Analytic => {
                let est = dyn_tree.query_io_estimate(q, &mut io);
                io_sum += est.expected_io.to_f64();
                attempts_sum += est.attempts.map(|a| a.to_f64()).unwrap_or(0.0);
            }
            Eval::Stochastic => {
                let out = dyn_tree.query(q, EvalMode::Stochastic(eval_rng), &mut io)?;
                io_sum += io.total_io() as f64;
                if let Some(Attempts::Observed(a)) = out.attempts {
                    attempts_sum += a as f64;
                }
            }
        }
    }

    // Classical baseline over the same live records.
    let dataset = Dataset::from_pairs(live)?;
    let mut build_io = IoCounters::new();
    let baseline = QuantumBPlusTree::build(&dataset, params, &mut build_io)?;
    let classical = measure_classical_1d(&baseline, &queries);

    let count = queries.len() as f64;
    Ok(vec![
        ResultRow {
            structure: "dynamic_quantum_bptree",
            n,
            b: cfg.b,
            selectivity: cfg.selectivity,
            mean_query_io: Some(io_sum / count),
            mean_attempts: Some(attempts_sum / count),
            mean_insert_io: Some(insert_io as f64 / inserts.max(1) as f64),
            mean_delete_io: Some(delete_io as f64 / deletes.max(1) as f64),
            seed: cfg.seed,
        },
        ResultRow {
            structure: "classical_bptree",
            n,
            b: cfg.b,
            selectivity: cfg.selectivity,
            mean_query_io: Some(classical),
            mean_attempts: None,
            mean_insert_io: None,
            mean_delete_io: None,
            seed: cfg.seed,
        },
    ])
}

fn run_range2d(
    cfg: &ExperimentConfig,
    pairs: Vec<MdPair>,
    query_rng: &mut Rng,
    eval_rng: &mut Rng,
) -> anyhow::Result<Vec<ResultRow>> {
    let params = TreeParams::new(cfg.b).context("invalid branching factor")?;
    let mut build_io = IoCounters::new();
    let rt = QuantumRangeTree::build(&pairs, params, &mut build_io)?;
    let n = rt.len();

    let queries = gen_md_queries(&pairs, cfg.selectivity, cfg.query_count, query_rng);
    let mut io_sum = 0.0;
    let mut attempts_sum = 0.0;
    let mut classical_sum = 0u64;
    for q in &queries {
        let mut io = IoCounters::new();
        match cfg.eval {
            Eval::Analytic => {
                let est = rt.query_io_estimate(q, &mut io);
                io_sum += est.expected_io.to_f64();
                attempts_sum += est.attempts.map(|a| a.to_f64()).unwrap_or(0.0);
            }
            Eval::Stochastic => {
                let out = rt.query(q, EvalMode::Stochastic(eval_rng), &mut io)?;
                io_sum += io.total_io() as f64;
                if let Some(Attempts::Observed(a)) = out.attempts {
                    attempts_sum += a as f64;
                }
            }
        }
        let mut cio = IoCounters::new();
        let _ = rt.classical_query(q, &mut cio);
        classical_sum += cio.total_io();
    }

    let count = queries.len() as f64;
    Ok(vec![
        ResultRow {
            structure: "quantum_range_tree",
            n,
            b: cfg.b,
            selectivity: cfg.selectivity,
            mean_query_io: Some(io_sum / count),
            mean_attempts: Some(attempts_sum / count),
            mean_insert_io: None,
            mean_delete_io: None,
            seed: cfg.seed,
        },
        ResultRow {
            structure: "classical_range_tree",
            n,
            b: cfg.b,
            selectivity: cfg.selectivity,
            mean_query_io: Some(classical_sum as f64 / count),
            mean_attempts: None,
            mean_insert_io: None,
            mean_delete_io: None,
            seed: cfg.seed,
        },
    ])
}

pub fn write_csv(rows: &[ResultRow], path: &std::path::Path) -> anyhow::Result<()> {
    std::fs::write(path, crate::config::to_csv(rows))
        .with_context(|| format!("cannot write {}", path.display()))
}

/// Range queries used by both MdRange consumers; re-exported for tests.
pub type MdQuery = MdRange;
