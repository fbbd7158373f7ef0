//! Joint recovery of unknown per-sensor gains and off-the-grid frequencies
//! from multi-snapshot uniform-array measurements.
//!
//! Two recovery routes share the same covariance front end:
//!
//! * the partial algebraic method — amplitudes from the covariance diagonal,
//!   phases from the first sub-diagonal, then subspace frequency
//!   localization ([`calibrate_algebraic`]);
//! * a regularized non-convex fit of `diag(g) T(f) diag(conj g)` to the
//!   covariance, minimized by Wirtinger gradient descent with backtracking
//!   ([`optim::run_optimizer`]).
//!
//! [`metrics`] scores results up to the inherent scale / global-phase /
//! linear-phase ambiguity, and [`diagnostics`] exposes the computable
//! theoretical bounds.

pub mod algebraic;
pub mod diagnostics;
pub mod error;
pub mod linalg;
pub mod metrics;
pub mod model;
pub mod music;
pub mod optim;
pub mod spectra;

pub use error::Error;
pub use linalg::{CMat, CVec, HermitianMatrix, ToeplitzSpec};
pub use model::{CalibrationVector, FrequencySet, ProblemInstance};
pub use music::{MusicConfig, PeakSet};
pub use optim::{IterationRecord, OptimConfig};
pub use spectra::DenoisedCovariance;

/// Why the descent loop stopped.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Termination {
    GradientTolerance,
    StepUnderflow,
    MaxIterations,
}

/// Solver-side quantities reported with a calibration run.
#[derive(Debug, Clone)]
pub struct RunDiagnostics {
    /// Estimated noise level behind the covariance estimate.
    pub sigma_hat: f64,
    /// Feasible-region scale, when the optimizer ran.
    pub n0_hat: Option<f64>,
    /// Penalty weight actually used.
    pub rho: Option<f64>,
    pub final_objective: Option<f64>,
    pub final_grad_norm: Option<f64>,
    pub termination: Option<Termination>,
}

/// Recovered gains and frequencies with the solver trace and diagnostics.
#[derive(Debug, Clone)]
pub struct CalibrationResult {
    pub g_hat: CVec,
    /// Recovered Toeplitz sequence (optimizer only).
    pub f_hat: Option<CVec>,
    pub peaks: PeakSet,
    /// True when the peak set had to be padded with non-maxima.
    pub degraded_peaks: bool,
    /// Per-iteration records; empty for the algebraic method.
    pub trace: Vec<IterationRecord>,
    pub diagnostics: RunDiagnostics,
}

impl CalibrationResult {
    /// Recovered frequencies, ascending.
    pub fn frequencies(&self) -> &[f64] {
        &self.peaks.omegas
    }
}

/// The complete algebraic pipeline: gains from the covariance followed by
/// frequency localization on the calibrated matrix.
pub fn calibrate_algebraic(
    r_hat: &DenoisedCovariance,
    s: usize,
    music_cfg: &MusicConfig,
) -> Result<CalibrationResult, Error> {
    let alg = algebraic::run_partial_algebraic(r_hat)?;
    let (peaks, degraded) = match music::locate_frequencies(&alg.f_matrix, s, music_cfg) {
        Ok(p) => (p, false),
        Err(error::MusicError::InsufficientPeaks { partial, .. }) => (partial, true),
        Err(e) => return Err(e.into()),
    };
    Ok(CalibrationResult {
        g_hat: alg.g_hat.gains().clone(),
        f_hat: None,
        peaks,
        degraded_peaks: degraded,
        trace: Vec::new(),
        diagnostics: RunDiagnostics {
            sigma_hat: r_hat.sigma_hat,
            n0_hat: None,
            rho: None,
            final_objective: None,
            final_grad_norm: None,
            termination: None,
        },
    })
}
