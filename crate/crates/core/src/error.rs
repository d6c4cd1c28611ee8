use core::fmt;

/// Errors produced by tree construction, state preparation and search.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Error {
    /// Branching factor is not a power of two.
    NotPowerOfTwo,
    /// Branching factor is below the minimum of 4.
    TooSmall,
    /// A (key, record) pair occurs more than once.
    DuplicatePair,
    /// Range lower bound exceeds the upper bound.
    InvertedRange,
    /// Tried to build a structure from zero pairs.
    EmptyDataset,
    /// Tried to prepare a superposition over an empty label set.
    EmptySet,
    /// A weighted initialization contained a zero weight.
    ZeroWeight,
    /// The requested pair is not present.
    NotFound,
    /// Post-selection can never succeed because no basis state is marked.
    /// Defensive: the search algorithms only enter the quantum path with at
    /// least one in-range pair below the candidates.
    NoResults,
}

impl core::error::Error for Error {}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let msg = match self {
            Error::NotPowerOfTwo => "branching factor must be a power of two",
            Error::TooSmall => "branching factor must be at least 4",
            Error::DuplicatePair => "duplicate (key, record) pair",
            Error::InvertedRange => "range lower bound exceeds upper bound",
            Error::EmptyDataset => "dataset must contain at least one pair",
            Error::EmptySet => "superposition requires at least one label",
            Error::ZeroWeight => "superposition weights must be positive",
            Error::NotFound => "pair not found",
            Error::NoResults => "no marked state to post-select",
        };
        f.write_str(msg)
    }
}

pub type Result<T> = core::result::Result<T, Error>;
