//! Classical simulation of quantum B+ trees.
//!
//! A quantum B+ tree pairs a weight-balanced classical B+ tree with two
//! QRAMs mirroring its hierarchy and data, and answers range queries with a
//! hybrid search: a global classical walk narrows the range to at most two
//! candidate nodes, then a local quantum expansion loads every pair below
//! them in a superposition and post-selects the in-range ones. The
//! simulation tracks superpositions with exact integer weights and meters
//! every memory access (one QRAM load or store, or one classical node
//! access, is 1 IO), so success probabilities and IO counts are exact.
//!
//! The crate also provides the dynamic variant (logarithmic-method forests
//! with insertion and deletion) and the multi-dimensional quantum range
//! tree, plus the metered classical baselines they are compared against.

#![no_std]

extern crate alloc;

pub mod btree;
pub mod dynamic;
pub mod error;
pub mod fixtures;
pub mod metrics;
pub mod qbtree;
pub mod qram;
pub mod qstate;
pub mod ratio;
pub mod rng;
pub mod rtree;
pub mod types;

pub use btree::{BalanceReport, NodeId, RoutingKey, WeightBalancedTree};
pub use error::{Error, Result};
pub use metrics::IoCounters;
pub use qbtree::{
    Attempts, Candidates, EvalMode, GlobalOutcome, NodeClass, QuantumBPlusTree, QueryOutcome,
    QueryResult,
};
pub use qram::{Qram, QramValue};
pub use qstate::{FlaggedState, MeasureOutcome, WeightedState};
pub use ratio::Ratio;
pub use rng::Rng;
pub use types::{Dataset, Key, KeyRecordPair, QueryRange, RecordHandle, TreeParams};
