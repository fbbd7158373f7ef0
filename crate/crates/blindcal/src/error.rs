//! Error types for every stage of the calibration pipeline.

use thiserror::Error;

#[derive(Debug, Clone, Error)]
pub enum LinalgError {
    #[error("matrix is not Hermitian: asymmetry {asymmetry:.3e} exceeds {tolerance:.3e}")]
    NotHermitian { asymmetry: f64, tolerance: f64 },
    #[error("sequence too short: need length >= 2, got {0}")]
    SequenceTooShort(usize),
    #[error("sequence first entry must be real: |Im f0| = {im:.3e} vs |f0| = {abs:.3e}")]
    NonRealLeadingEntry { im: f64, abs: f64 },
    #[error("eigensolver failed to converge")]
    EigFailed,
}

#[derive(Debug, Clone, Error)]
pub enum ModelError {
    #[error("frequency {0} outside [0, 1)")]
    FrequencyOutOfRange(f64),
    #[error("frequencies {0} and {1} coincide on the torus")]
    DuplicateFrequency(usize, usize),
    #[error("power amplitude at index {0} is not positive")]
    NonPositiveGamma(usize),
    #[error("calibration gain at sensor {0} vanishes")]
    VanishingGain(usize),
    #[error("need N >= s+1 sensors: N = {n}, s = {s}")]
    TooFewSensors { n: usize, s: usize },
    #[error("frequency/amplitude length mismatch: {0} vs {1}")]
    LengthMismatch(usize, usize),
    #[error("noise level must be nonnegative, got {0}")]
    NegativeSigma(f64),
    #[error("could not draw an instance satisfying the separation/spectrum constraints")]
    InstanceRejected,
}

#[derive(Debug, Clone, Error)]
pub enum SpectraError {
    #[error("sparsity s = {s} must be below the sensor count N = {n}")]
    SparsityTooLarge { s: usize, n: usize },
}

#[derive(Debug, Clone, Error)]
pub enum AlgebraicError {
    #[error("covariance diagonal entry {index} is not positive ({value:.3e})")]
    NonPositiveDiagonal { index: usize, value: f64 },
    #[error("sub-diagonal entry ({index},{}) has magnitude {magnitude:.3e}; |f1| ~ 0 makes phase recovery impossible", .index - 1)]
    VanishingSubdiagonal { index: usize, magnitude: f64 },
    #[error("phase system solve failed or residual too large")]
    SingularSystem,
}

#[derive(Debug, Clone, Error)]
pub enum MusicError {
    #[error("sparsity s = {s} must be below the matrix dimension N = {n}")]
    SparsityTooLarge { s: usize, n: usize },
    #[error("found only {found} local maxima of the imaging function; peak set is degraded")]
    InsufficientPeaks {
        found: usize,
        partial: crate::music::PeakSet,
    },
}

#[derive(Debug, Clone, Error)]
pub enum OptimError {
    #[error("covariance diagonal entry {index} is not positive ({value:.3e})")]
    NonPositiveDiagonal { index: usize, value: f64 },
    #[error("initial vector has zero norm; cannot normalize")]
    ZeroInitialVector,
    #[error("line search step fell below eta_min = {eta_min:.3e} without sufficient decrease")]
    StepUnderflow { eta_min: f64 },
    #[error("invalid optimizer configuration: {0}")]
    InvalidConfig(&'static str),
    #[error("penalty weight rho = {rho:.3e} below the confinement rule {required:.3e}")]
    RhoTooSmall { rho: f64, required: f64 },
}

#[derive(Debug, Clone, Error)]
pub enum MetricsError {
    #[error("true gain at sensor {0} is zero; relative error undefined")]
    ZeroTrueGain(usize),
    #[error("gain vectors have different lengths: {0} vs {1}")]
    LengthMismatch(usize, usize),
}

#[derive(Debug, Clone, Error)]
pub enum DiagnosticsError {
    #[error("diagonal offset k = {k} outside 1..=N-2 for N = {n}")]
    BadK { k: usize, n: usize },
}

/// Umbrella error for pipeline drivers that cross module boundaries.
#[derive(Debug, Clone, Error)]
pub enum Error {
    #[error(transparent)]
    Linalg(#[from] LinalgError),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Spectra(#[from] SpectraError),
    #[error(transparent)]
    Algebraic(#[from] AlgebraicError),
    #[error(transparent)]
    Music(#[from] MusicError),
    #[error(transparent)]
    Optim(#[from] OptimError),
    #[error(transparent)]
    Metrics(#[from] MetricsError),
    #[error(transparent)]
    Diagnostics(#[from] DiagnosticsError),
}

impl Error {
    /// Stable machine-readable code for CLI output and sweep error columns.
    pub fn code(&self) -> &'static str {
        match self {
            Error::Linalg(LinalgError::NotHermitian { .. }) => "not_hermitian",
            Error::Linalg(LinalgError::SequenceTooShort(_)) => "sequence_too_short",
            Error::Linalg(LinalgError::NonRealLeadingEntry { .. }) => "non_real_leading_entry",
            Error::Linalg(LinalgError::EigFailed) => "eig_failed",
            Error::Model(ModelError::InstanceRejected) => "instance_rejected",
            Error::Model(_) => "invalid_instance",
            Error::Spectra(SpectraError::SparsityTooLarge { .. }) => "sparsity_too_large",
            Error::Algebraic(AlgebraicError::NonPositiveDiagonal { .. }) => {
                "non_positive_diagonal"
            }
            Error::Algebraic(AlgebraicError::VanishingSubdiagonal { .. }) => {
                "vanishing_subdiagonal"
            }
            Error::Algebraic(AlgebraicError::SingularSystem) => "singular_system",
            Error::Music(MusicError::SparsityTooLarge { .. }) => "sparsity_too_large",
            Error::Music(MusicError::InsufficientPeaks { .. }) => "insufficient_peaks",
            Error::Optim(OptimError::NonPositiveDiagonal { .. }) => "non_positive_diagonal",
            Error::Optim(OptimError::ZeroInitialVector) => "zero_initial_vector",
            Error::Optim(OptimError::StepUnderflow { .. }) => "step_underflow",
            Error::Optim(OptimError::InvalidConfig(_)) => "invalid_config",
            Error::Optim(OptimError::RhoTooSmall { .. }) => "rho_too_small",
            Error::Metrics(MetricsError::ZeroTrueGain(_)) => "zero_true_gain",
            Error::Metrics(MetricsError::LengthMismatch(..)) => "length_mismatch",
            Error::Diagnostics(DiagnosticsError::BadK { .. }) => "bad_k",
        }
    }
}
