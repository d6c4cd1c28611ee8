//! The `demo` subcommand: walks the 14-pair worked example end to end.

use qbtree_core::fixtures::example_quantum_tree;
use qbtree_core::qbtree::{EvalMode, GlobalOutcome, QueryResult};
use qbtree_core::{IoCounters, Key, QueryRange, Rng};

pub fn run_demo(seed: u64) -> anyhow::Result<()> {
    let mut io = IoCounters::new();
    let qt = example_quantum_tree(&mut io);
    println!(
        "built example tree: N = {}, B = {}, height = {}, {} nodes, {} QRAM stores",
        qt.live_pairs(),
        qt.params().b(),
        qt.height(),
        qt.tree().node_count(),
        io.qram_stores,
    );

    let range = QueryRange::new(Key::new(5), Key::new(11)).unwrap();
    println!("\nQUERY(5, 11)");

    io.reset();
    match qt.global_search(&range, &mut io) {
        GlobalOutcome::Quantum(c) => {
            let ids: Vec<u64> = c.nodes.iter().map(|n| n.get()).collect();
            println!(
                "  global classical search: candidates {ids:?} at level {}",
                c.level
            );
        }
        GlobalOutcome::Fallback(_) => println!("  classical fallback"),
    }

    let out = qt.query(&range, EvalMode::Analytic, &mut io)?;
    if let QueryResult::Superposition(state) = &out.result {
        println!("  result superposition (total weight {}):", state.total());
        for (p, w) in state.iter() {
            println!("    |{}>|rec_{}>  weight {w}", p.key.get(), p.rec.0);
        }
    }
    if let Some(attempts) = out.attempts {
        let a = attempts.to_ratio();
        println!("  per-attempt success probability {}", a.recip());
        println!("  expected attempts {a}");
    }
    println!(
        "  IO this query: {} loads, {} classical accesses",
        io.qram_loads, io.classical_node_accesses
    );

    let mut rng = Rng::from_seed(seed);
    io.reset();
    let sampled = qt.query(&range, EvalMode::Stochastic(&mut rng), &mut io)?;
    if let QueryResult::Superposition(state) = &sampled.result {
        let picked = state.measure_once(&mut rng);
        println!(
            "\nstochastic run: post-selection succeeded after {} attempt(s); measuring once collapsed to |{}>|rec_{}>",
            io.post_selection_attempts,
            picked.key.get(),
            picked.rec.0,
        );
    }
    Ok(())
}
