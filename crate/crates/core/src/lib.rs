//! Symbolic simulator and statistics engine for cascaded-SPDC multi-photon
//! hyperentanglement sources.
//!
//! The crate has two halves:
//!
//! * an exact symbolic engine ([`state`], [`elements`], [`circuit`]) that
//!   evolves photon states through the cascade circuits with amplitudes in
//!   the ±(1/√2)^k ring and verifies the generated GHZ hyperentangled
//!   states bit-exactly, and
//! * a numeric half ([`stats`], [`stochastic`]) with the multi-photon-event
//!   probability formulas, an independent brute-force enumeration oracle,
//!   and seeded Monte Carlo estimators, generic over the floating-point
//!   scalar.

pub mod amplitude;
pub mod circuit;
pub mod elements;
pub mod error;
pub mod photon;
pub mod state;
pub mod stats;
pub mod stochastic;

pub use amplitude::{Amplitude, DyadicSum, Sign};
pub use circuit::{
    build_cascade, expected_state, leaf_pattern, simulate_symbolic, simulate_with_trace,
    verify_cascade, CascadeSpec, CascadeVerification, Circuit, Scheme, SimulationTrace,
};
pub use elements::{
    apply_crystal, apply_delay_tag, apply_delay_tagger, apply_dm, apply_hwp, apply_longpass,
    apply_npbs, apply_pbs, DmWiring, FreqClass, HwpAngle, OpticalElement, PbsWiring,
};
pub use error::{Error, Result};
pub use photon::{FreqTag, Mode, Photon, Polarization, TimeBin};
pub use state::{states_equal, tensor_factor_check, PhotonState, PhotonTerm};
pub use stats::{
    cascade_source_distribution, monte_carlo_rate, n_tot, oracle_breakdown, oracle_success,
    p_failure_terms, p_success, p_success_scenarios, poisson_weighted_pairs,
    poisson_weighted_success, pr_pairs, pr_ratio_two_one, rate_report, reference_comparison,
    EventQuery, MonteCarloEstimate, OracleBreakdown, PairDistribution, RateReport,
    ReferenceComparison, ReferenceRate, SourceModel, ORACLE_MAX_M, ORACLE_MAX_N, REFERENCE_RATES,
};
pub use stochastic::{simulate_stochastic, CoincidenceCounts};

/// Default scalar for rate computations.
pub type Real = f64;

/// Source model over the default scalar.
pub type Source = SourceModel<Real>;

/// Pair-count distribution over the default scalar.
pub type Pairs = PairDistribution<Real>;
