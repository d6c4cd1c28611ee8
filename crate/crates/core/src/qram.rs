//! Classical-write quantum-read QRAM. A store writes one classical value at
//! an address for 1 IO. A load acts on a whole superposition of addresses
//! for 1 IO, mapping each address to its stored value with the input weights
//! preserved. Unwritten addresses read back as dummy.

use alloc::vec::Vec;

use crate::btree::{NodeId, RoutingKey};
use crate::metrics::IoCounters;
use crate::qstate::WeightedState;
use crate::types::KeyRecordPair;

pub type Addr = u64;

/// One QRAM cell. The hierarchy QRAM holds node references, the data QRAM
/// holds key-record pairs (leaf cells) and routing bounds (internal cells).
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum QramValue {
    NodeRef(NodeId),
    PairVal(KeyRecordPair),
    Routing(RoutingKey),
    Dummy,
}

/// Address of the `slot`-th cell in node `node`'s block.
///
/// The dummy node id maps to a reserved block at the top of the address
/// space whose cells always read as dummy.
pub fn slot_addr(node: NodeId, slot: u32, b: u32) -> Addr {
    if node.is_dummy() {
        u64::MAX - b as u64 + slot as u64
    } else {
        node.get() * b as u64 + slot as u64
    }
}

#[derive(Debug, Clone, Default)]
pub struct Qram {
    cells: Vec<QramValue>,
}

impl Qram {
    pub fn new() -> Qram {
        Qram { cells: Vec::new() }
    }

    /// `Q[addr] = val`; the table grows on demand. 1 IO.
    pub fn store(&mut self, addr: Addr, val: QramValue, io: &mut IoCounters) {
        let idx = addr as usize;
        if idx >= self.cells.len() {
            self.cells.resize(idx + 1, QramValue::Dummy);
        }
        self.cells[idx] = val;
        io.qram_stores += 1;
    }

    /// The value currently stored at `addr`, without metering. Loads and
    /// invariant checks read cells through this.
    pub fn peek(&self, addr: Addr) -> QramValue {
        self.cells
            .get(addr as usize)
            .copied()
            .unwrap_or(QramValue::Dummy)
    }

    /// Applies the QRAM to a superposition of addresses: every basis label
    /// `addr` with weight `w` becomes `(addr, Q[addr])` with weight `w`.
    /// Exactly 1 IO regardless of how many addresses the state holds.
    pub fn load_superposed(
        &self,
        addrs: &WeightedState<Addr>,
        io: &mut IoCounters,
    ) -> WeightedState<(Addr, QramValue)> {
        io.qram_loads += 1;
        addrs.map_labels(|addr| (*addr, self.peek(*addr)))
    }

    /// XOR-write form of the load: returns `register ^ encode(Q[addr])`.
    /// Applying it twice with the same register restores the register. The
    /// search algorithms always load into zeroed registers, so they use
    /// [`Qram::load_superposed`]; this witnesses the XOR semantics.
    pub fn xor_load(&self, addr: Addr, register: u128) -> u128 {
        register ^ encode_value(self.peek(addr))
    }
}

/// Canonical 128-bit image of a cell value for the XOR register.
fn encode_value(v: QramValue) -> u128 {
    match v {
        QramValue::Dummy => u128::MAX,
        QramValue::NodeRef(id) => id.get() as u128,
        QramValue::PairVal(p) => ((p.key.get() as u64 as u128) << 64) | p.rec.0 as u128,
        QramValue::Routing(r) => ((r.lo.get() as u64 as u128) << 64) | r.hi.get() as u64 as u128,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::types::Key;

    #[test]
    fn store_then_read_back() {
        let mut io = IoCounters::new();
        let mut q = Qram::new();
        q.store(
            slot_addr(NodeId::new(0), 0, 4),
            QramValue::NodeRef(NodeId::new(1)),
            &mut io,
        );
        assert_eq!(q.peek(0), QramValue::NodeRef(NodeId::new(1)));
        q.store(3, QramValue::Dummy, &mut io);
        assert_eq!(q.peek(3), QramValue::Dummy);
        assert_eq!(io.qram_stores, 2);
    }

    #[test]
    fn unwritten_address_reads_dummy() {
        let q = Qram::new();
        assert_eq!(q.peek(1234), QramValue::Dummy);
        assert_eq!(q.peek(slot_addr(NodeId::DUMMY, 2, 4)), QramValue::Dummy);
    }

    #[test]
    fn superposed_load_costs_one_io_and_preserves_weights() {
        let mut io = IoCounters::new();
        let mut q = Qram::new();
        q.store(40, QramValue::PairVal(KeyRecordPair::new(33, 33)), &mut io);
        io.reset();

        let addrs = WeightedState::from_weights([(40u64, 2), (41, 1)]).unwrap();
        let loaded = q.load_superposed(&addrs, &mut io);
        assert_eq!(io.qram_loads, 1);
        assert_eq!(loaded.total(), 3);
        assert_eq!(
            loaded.weight_of(&(40, QramValue::PairVal(KeyRecordPair::new(33, 33)))),
            2
        );
        assert_eq!(loaded.weight_of(&(41, QramValue::Dummy)), 1);
    }

    #[test]
    fn singleton_load() {
        let mut io = IoCounters::new();
        let mut q = Qram::new();
        q.store(7, QramValue::NodeRef(NodeId::new(9)), &mut io);
        let s = WeightedState::from_weights([(7u64, 1)]).unwrap();
        let loaded = q.load_superposed(&s, &mut io);
        assert_eq!(loaded.len(), 1);
        assert_eq!(
            loaded.weight_of(&(7, QramValue::NodeRef(NodeId::new(9)))),
            1
        );
    }

    #[test]
    fn xor_load_involution() {
        let mut io = IoCounters::new();
        let mut q = Qram::new();
        let val = QramValue::Routing(RoutingKey::new(Key::new(1), Key::new(6)));
        q.store(5, val, &mut io);

        // Zero register yields the exact encoded value.
        let image = q.xor_load(5, 0);
        assert_eq!(image, encode_value(val));
        // Involution and self-cancellation.
        for reg in [0u128, 1, 0xdead_beef, u128::MAX] {
            assert_eq!(q.xor_load(5, q.xor_load(5, reg)), reg);
        }
        assert_eq!(q.xor_load(5, image), 0);
    }
}
