//! IO accounting. One QRAM load applied to an entire superposition counts as
//! a single IO, one QRAM store counts as one IO, and one classical node or
//! page access counts as one IO. Post-selection attempts are tallied
//! separately; the IOs a failed attempt consumed stay counted.

/// Per-run IO tally. Counters only ever increase between resets.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct IoCounters {
    pub qram_loads: u64,
    pub qram_stores: u64,
    pub classical_node_accesses: u64,
    pub post_selection_attempts: u64,
}

impl IoCounters {
    pub fn new() -> IoCounters {
        IoCounters::default()
    }

    pub fn reset(&mut self) {
        *self = IoCounters::default();
    }

    /// Value copy of the current tally.
    pub fn snapshot(&self) -> IoCounters {
        *self
    }

    /// Memory-access total: loads + stores + classical accesses.
    /// Post-selection attempts are not IOs.
    pub fn total_io(&self) -> u64 {
        self.qram_loads + self.qram_stores + self.classical_node_accesses
    }

    /// Component-wise difference since an earlier snapshot.
    pub fn since(&self, earlier: &IoCounters) -> IoCounters {
        IoCounters {
            qram_loads: self.qram_loads - earlier.qram_loads,
            qram_stores: self.qram_stores - earlier.qram_stores,
            classical_node_accesses: self.classical_node_accesses - earlier.classical_node_accesses,
            post_selection_attempts: self.post_selection_attempts - earlier.post_selection_attempts,
        }
    }
}
