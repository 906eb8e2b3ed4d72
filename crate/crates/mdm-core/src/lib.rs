//! # mdm-core
//!
//! A library for approximating integrals of functions with infinitely many
//! variables by the multivariate decomposition method (MDM).
//!
//! The integrand `f` is written as a sum of terms `f_u`, one per finite subset
//! `u` of the variable indices, anchored at zero: `f_u` vanishes whenever one
//! of its own variables is zero, and each term is an alternating sum of
//! evaluations of `f` with all variables outside a subset frozen at the
//! anchor. Given significance weights `w(u)` of product-and-order-dependent
//! (POD) form and an error request `epsilon`, the method
//!
//! 1. computes a threshold `T` by bounding the tail of the weight series
//!    ([`tolerance`]),
//! 2. collects the active set `U = {u : w(u) > T}` ([`active_set`]),
//! 3. assigns each active term a point budget and a quadrature level
//!    ([`integrands`]),
//! 4. regroups the quadratures over the subset-closure of `U` into integer
//!    coefficient tables so that no term `f_u` is ever expanded explicitly
//!    ([`coeff_tables`]),
//! 5. runs one of the quadrature engines ([`mdm`]): sparse-grid (Smolyak)
//!    rules in direct or combination-technique form over a nested
//!    one-dimensional family ([`quad1d`], [`smolyak`]), or a rank-1 lattice
//!    rule in deterministic or randomly shifted form ([`lattice`]).
//!
//! Naive engines that do expand every `f_u` term by term are provided as
//! oracles; they must agree with the efficient engines to rounding while
//! costing many times more integrand evaluations.
//!
//! All accumulations use compensated summation in 64-bit floats ([`kahan`]),
//! and every engine iterates work items in a deterministic order, so a run is
//! reproducible bit for bit for a fixed configuration regardless of thread
//! count.

pub mod active_set;
pub mod coeff_tables;
pub mod decomposition;
pub mod integrands;
pub mod kahan;
pub mod lattice;
pub mod mdm;
pub mod pod_weights;
pub mod quad1d;
pub mod setkit;
pub mod smolyak;
pub mod tolerance;

use thiserror::Error;

/// Errors shared by all modules of the crate.
#[derive(Debug, Error)]
pub enum Error {
    /// Subset enumeration uses a 64-bit mask per element.
    #[error("set too large for subset enumeration")]
    SetTooLarge,

    /// Position maps are only defined for subsets.
    #[error("not a subset")]
    NotASubset,

    /// A point or coordinate index fell outside its valid range.
    #[error("index out of range")]
    IndexOutOfRange,

    /// Weight-model parameters failed validation.
    #[error("invalid weight parameters: {0}")]
    InvalidWeights(String),

    /// The decay requirement `Omega_(l+1) * omega_(l+1) <= Omega_l` failed.
    #[error("weight monotonicity violated at cardinality {0}")]
    WeightMonotonicity(usize),

    /// The tail bound needs `alpha >= 1` and `b1 < alpha < b2`.
    #[error("alpha out of range")]
    AlphaOutOfRange,

    /// No grid point produced a positive finite threshold.
    #[error("no admissible alpha")]
    NoAdmissibleAlpha,

    /// The product-form tail bound only applies when `b1 = 0`.
    #[error("product-form bound requires b1 = 0")]
    ProductFormNeedsB1Zero,

    /// The threshold exceeds even the weight of the empty set.
    #[error("empty active set")]
    EmptyActiveSet,

    /// The active set still grows at the configured cardinality cap;
    /// truncating it would silently void the error request.
    #[error("cardinality cap hit")]
    CardinalityCapHit,

    /// Sparse-grid rules need level `m >= 1`.
    #[error("quadrature level must be at least 1")]
    LevelTooSmall,

    /// Level assignments must keep `2^m_max` inside a signed 64-bit integer.
    #[error("level {0} exceeds the cap of 62")]
    LevelCapExceeded(u32),

    /// An integer quadrature coefficient left the signed 64-bit range.
    #[error("coefficient magnitude overflow")]
    CoefficientOverflow,

    /// A requested lattice level exceeds the sequence capacity.
    #[error("lattice exhausted")]
    LatticeExhausted,

    /// More point coordinates were requested than the generating vector has.
    #[error("generating vector exhausted")]
    GeneratingVectorExhausted,

    /// Expanding a decomposition term costs `2^|u|` evaluations.
    #[error("anchored term of cardinality {0} exceeds the expansion guard")]
    AnchoredTermTooLarge(usize),

    /// A run or command parameter failed validation.
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    /// Reading or writing a file failed.
    #[error("i/o failure: {0}")]
    Io(#[from] std::io::Error),

    /// A persisted artifact did not parse.
    #[error("malformed JSON: {0}")]
    Json(#[from] serde_json::Error),
}

/// Crate-wide result alias.
pub type Result<T> = std::result::Result<T, Error>;
