//! Error types shared across the crate.

use thiserror::Error;

/// Everything that can go wrong while building terms, applying optical
/// elements, or evaluating rate formulas.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// Two photons in one term carry the same (mode, time bin, polarization,
    /// frequency tag). The ideal evolutions never populate a mode twice, so
    /// this is treated as a hard error rather than a bosonic special case.
    #[error("duplicate occupancy: {0}")]
    DuplicateOccupancy(String),

    /// An amplitude sum left the exact ±(1/√2)^k ring.
    #[error("amplitude overflow: {0}")]
    AmplitudeOverflow(String),

    /// Half-wave plates are only modeled at 22.5° and 45°; any other angle
    /// would produce coefficients outside the exact ring.
    #[error("unsupported wave-plate angle: {0}°")]
    UnsupportedAngle(f64),

    /// Strict wiring was requested and a photon sat in a mode the element
    /// does not declare.
    #[error("photon in unwired mode {0}")]
    UnwiredMode(String),

    /// A delay tagger saw a photon that already carries a time bin.
    #[error("photon in mode {0} is already time-tagged")]
    DoubleTagging(String),

    /// A crystal was asked to split a photon past the declared cascade depth.
    #[error("cascade depth {depth} exceeds maximum {max} in mode {mode}")]
    DepthExceeded { mode: String, depth: u32, max: u32 },

    /// Pattern lists handed to the tensor-factor checker disagree in length.
    #[error("pattern arity mismatch: expected {expected}, got {got}")]
    PatternArity { expected: usize, got: usize },

    /// A cascade specification is out of range (e.g. fewer than two photons).
    #[error("invalid cascade spec: {0}")]
    InvalidSpec(String),

    /// A statistics query is out of range (e.g. m < 2 or a probability
    /// outside [0, 1]).
    #[error("invalid query: {0}")]
    InvalidQuery(String),

    /// The enumeration oracle was asked for a product space beyond its
    /// declared bounds.
    #[error("oracle bound exceeded: n={n} (max {max_n}), m={m} (max {max_m})")]
    OracleBound { n: u32, m: u32, max_n: u32, max_m: u32 },

    /// A state whose squared norm is not an exact power of two cannot be
    /// renormalized inside the amplitude ring.
    #[error("cannot renormalize: kept probability mass {0} is not a power of two")]
    NonRenormalizableMass(String),

    /// Internal consistency check: an element application changed the exact
    /// norm of a state in symbolic mode.
    #[error("norm violation after {0}")]
    NormViolation(String),
}

pub type Result<T> = std::result::Result<T, Error>;
