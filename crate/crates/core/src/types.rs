//! Domain primitives: keys, record handles, query ranges, datasets and the
//! tree parameters shared by every structure in this crate.
//!
//! The maximum value of each integer domain is reserved as the `dummy`
//! sentinel. Dummies fill unused child and pair slots and sort after every
//! real value, so ordered containers need no special casing.

use alloc::vec::Vec;

use crate::error::{Error, Result};

/// A 1-dimensional search key. `i64::MAX` is reserved for [`Key::DUMMY`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Key(i64);

impl Key {
    /// The dummy sentinel; compares greater than every constructible key.
    pub const DUMMY: Key = Key(i64::MAX);

    /// Wraps a raw key value.
    ///
    /// Panics if `value` is the reserved sentinel.
    pub fn new(value: i64) -> Key {
        assert!(
            value < i64::MAX,
            "i64::MAX is reserved for the dummy sentinel"
        );
        Key(value)
    }

    pub fn get(self) -> i64 {
        self.0
    }

    pub fn is_dummy(self) -> bool {
        self.0 == i64::MAX
    }
}

/// Opaque 64-bit handle referencing an externally stored record payload.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct RecordHandle(pub u64);

/// The indexed unit: an integer key plus a record handle.
///
/// Duplicate key values are permitted; uniqueness is enforced on the
/// (key, record) pair.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct KeyRecordPair {
    pub key: Key,
    pub rec: RecordHandle,
}

impl KeyRecordPair {
    /// Dummy pair label used in superpositions over pair slots. Sorts last.
    pub const DUMMY: KeyRecordPair = KeyRecordPair {
        key: Key::DUMMY,
        rec: RecordHandle(u64::MAX),
    };

    pub fn new(key: i64, rec: u64) -> KeyRecordPair {
        KeyRecordPair {
            key: Key::new(key),
            rec: RecordHandle(rec),
        }
    }

    pub fn is_dummy(&self) -> bool {
        self.key.is_dummy()
    }
}

/// An inclusive query range `[lo, hi]`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct QueryRange {
    pub lo: Key,
    pub hi: Key,
}

impl QueryRange {
    pub fn new(lo: Key, hi: Key) -> Result<QueryRange> {
        if lo > hi {
            return Err(Error::InvertedRange);
        }
        Ok(QueryRange { lo, hi })
    }

    pub fn contains(&self, key: Key) -> bool {
        self.lo <= key && key <= self.hi
    }
}

/// Validated tree parameters: the branching factor `B` and `n_b = log2(B)`.
///
/// `B` must be a power of two with `B >= 4`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TreeParams {
    b: u32,
    n_b: u32,
}

impl TreeParams {
    pub fn new(b: u32) -> Result<TreeParams> {
        if b < 4 {
            return Err(Error::TooSmall);
        }
        if !b.is_power_of_two() {
            return Err(Error::NotPowerOfTwo);
        }
        Ok(TreeParams {
            b,
            n_b: b.trailing_zeros(),
        })
    }

    /// The branching factor: maximum fanout and leaf capacity.
    pub fn b(&self) -> u32 {
        self.b
    }

    /// Number of qubits addressing one node's slots, `log2(B)`.
    pub fn n_b(&self) -> u32 {
        self.n_b
    }

    /// `B^exp` as a u64. The structures in this crate keep `exp` small
    /// enough (`exp <= log_B N + 1`) that this cannot overflow.
    pub fn b_pow(&self, exp: u32) -> u64 {
        (self.b as u64).pow(exp)
    }

    /// Largest `h` with `B^h <= n`. Zero for `n < B`.
    pub fn floor_log(&self, n: u64) -> u32 {
        let b = self.b as u64;
        let mut h = 0;
        let mut p = b;
        while p <= n {
            h += 1;
            match p.checked_mul(b) {
                Some(next) => p = next,
                None => break,
            }
        }
        h
    }

    /// Smallest `t` with `B^t >= n`. Zero for `n <= 1`.
    pub fn ceil_log(&self, n: u64) -> u32 {
        if n <= 1 {
            return 0;
        }
        let b = self.b as u64;
        let mut t = 0;
        let mut p = 1u64;
        while p < n {
            t += 1;
            match p.checked_mul(b) {
                Some(next) => p = next,
                None => break,
            }
        }
        t
    }
}

/// An ordered dataset of unique (key, record) pairs.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Dataset {
    pairs: Vec<KeyRecordPair>,
}

impl Dataset {
    /// Sorts the pairs by (key, record) and rejects duplicates.
    pub fn from_pairs(mut pairs: Vec<KeyRecordPair>) -> Result<Dataset> {
        pairs.sort_unstable();
        if pairs.windows(2).any(|w| w[0] == w[1]) {
            return Err(Error::DuplicatePair);
        }
        Ok(Dataset { pairs })
    }

    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }

    pub fn pairs(&self) -> &[KeyRecordPair] {
        &self.pairs
    }
}
