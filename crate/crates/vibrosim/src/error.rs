//! Crate-wide error type.
//!
//! Every fallible operation in the library returns [`Result`]; the CLI maps
//! these onto nonzero exit codes with a module-qualified diagnostic on stderr.

use thiserror::Error;

/// Errors produced by model construction, propagation, mapping, and I/O.
#[derive(Debug, Error)]
pub enum Error {
    /// Fock cutoffs below 2 cannot represent a harmonic mode.
    #[error("fock: cutoff must be at least 2, got {0}")]
    InvalidCutoff(usize),

    /// The composite dimension 2·n_max² would overflow `usize`.
    #[error("fock: composite dimension overflows at cutoff {0}")]
    DimensionOverflow(usize),

    /// Two objects that must share a dimension do not.
    #[error("{context}: dimension mismatch ({left} vs {right})")]
    DimensionMismatch {
        context: &'static str,
        left: usize,
        right: usize,
    },

    /// Index outside the composite (or mode) space.
    #[error("{context}: index {index} out of range for dimension {dim}")]
    IndexOutOfRange {
        context: &'static str,
        index: usize,
        dim: usize,
    },

    /// A parameter that must be finite is NaN or infinite.
    #[error("{context}: parameter {name} is not finite ({value})")]
    NonFinite {
        context: &'static str,
        name: &'static str,
        value: f64,
    },

    /// A parameter violates its documented range.
    #[error("{context}: {message}")]
    InvalidParameter {
        context: &'static str,
        message: String,
    },

    /// An operator expected to be Hermitian is not (max |A − A†| reported).
    #[error("{context}: operator is not Hermitian, max |A - A\u{2020}| = {deviation:.3e}")]
    NotHermitian {
        context: &'static str,
        deviation: f64,
    },

    /// A state or density matrix fails its normalization check.
    #[error("{context}: norm/trace deviates from 1 by {deviation:.3e}")]
    NotNormalized {
        context: &'static str,
        deviation: f64,
    },

    /// The Krylov exponential action failed to reach tolerance in budget.
    #[error(
        "propagator: exponential action failed to converge at t = {t_ps:.6} ps \
         (error estimate {estimate:.3e}, tolerance {tolerance:.3e})"
    )]
    ExpConvergence {
        t_ps: f64,
        estimate: f64,
        tolerance: f64,
    },

    /// Norm drifted beyond tolerance during closed-system propagation.
    #[error("propagator: norm drift {drift:.3e} at t = {t_fs:.3} fs exceeds 1e-6")]
    NormDrift { t_fs: f64, drift: f64 },

    /// Trace drifted beyond tolerance during open-system integration.
    #[error("lindblad: trace drift {drift:.3e} at t = {t_fs:.3} fs exceeds 1e-6")]
    TraceDrift { t_fs: f64, drift: f64 },

    /// Density matrix developed unphysical negativity during integration.
    #[error("lindblad: density matrix negativity {value:.3e} at t = {t_fs:.3} fs")]
    Negativity { t_fs: f64, value: f64 },

    /// A per-mode dissipation rate is negative or non-finite.
    #[error("lindblad: invalid dissipation rate {name} = {value}")]
    InvalidRate { name: &'static str, value: f64 },

    /// Pulse compilation hit the configured laser-power ceiling.
    #[error(
        "ion: {term} Rabi frequency {rabi_hz:.3} Hz exceeds the power ceiling {ceiling_hz:.3} Hz"
    )]
    PowerCeiling {
        term: &'static str,
        rabi_hz: f64,
        ceiling_hz: f64,
    },

    /// The tuning-mode coupling vanishes, so no scale factor can be derived.
    #[error("ion: \u{03ba} = 0 leaves the scale factor undefined; supply one explicitly")]
    UndefinedScaleFactor,

    /// A probability argument left [0, 1].
    #[error("{context}: probability {value} outside [0, 1]")]
    InvalidProbability { context: &'static str, value: f64 },

    /// Two time series that must share a grid do not.
    #[error("resources: time grids differ at sample {index} ({left} fs vs {right} fs)")]
    GridMismatch { index: usize, left: f64, right: f64 },

    /// The Trotter step search exhausted its ceiling without meeting target.
    #[error("resources: no step count up to {ceiling} reaches mse target {target:.3e}")]
    SearchExhausted { ceiling: usize, target: f64 },

    /// Configuration file could not be parsed (position info from the parser).
    #[error("config: {0}")]
    ConfigParse(String),

    /// Configuration parsed but violates a documented constraint.
    #[error("config: {0}")]
    ConfigInvalid(String),

    /// Unknown molecule preset name.
    #[error("config: unknown preset '{0}' (expected allene, butatriene, or pyrazine)")]
    UnknownPreset(String),

    /// A non-finite number reached the serializer; nothing was written.
    #[error("io: refusing to serialize non-finite value in column '{column}', row {row}")]
    NonFiniteOutput { column: String, row: usize },

    /// Underlying file-system failure.
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
}

/// Crate-wide result alias.
pub type Result<T> = std::result::Result<T, Error>;
