//! Partial algebraic calibration: amplitudes from the covariance diagonal,
//! phases from the sub-diagonal second-difference system, and the calibrated
//! matrix `F_hat = diag(g_hat)^-1 R_hat diag(conj g_hat)^-1`.
//!
//! Only the first sub-diagonal feeds the phase system, so each equation holds
//! independently modulo 2 pi and no phase unwrapping is required. The corner
//! rows pin the gauge `beta_0 = beta_{N-1} = 0`.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::error::AlgebraicError;
use crate::linalg::{sandwich, CVec, HermitianMatrix};
use crate::model::CalibrationVector;
use crate::spectra::DenoisedCovariance;

/// Phase-recovery linear system `Phi beta = b`.
///
/// Interior row r carries the second difference `(1, -2, 1)` centered at
/// column r; the two corner rows have a single `1/N^2` entry, forcing the
/// endpoint phases to zero since the matching right-hand sides are zero.
#[derive(Debug, Clone)]
pub struct PhaseSystem {
    phi: DMatrix<f64>,
    b_hat: DVector<f64>,
}

impl PhaseSystem {
    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.phi
    }

    pub fn rhs(&self) -> &DVector<f64> {
        &self.b_hat
    }

    pub fn dim(&self) -> usize {
        self.phi.nrows()
    }
}

/// Output of the partial algebraic pipeline (covariance to gains).
#[derive(Debug, Clone)]
pub struct AlgebraicOutput {
    /// Recovered gains, gauge-fixed to zero phase at both endpoints.
    pub g_hat: CalibrationVector,
    /// Calibrated matrix `F_hat`, the input to frequency localization.
    pub f_matrix: HermitianMatrix,
    /// The solved phase system, kept for diagnostics.
    pub phase_system: PhaseSystem,
}

/// The N x N phase-system matrix for a given sensor count.
pub fn phase_matrix(n: usize) -> DMatrix<f64> {
    assert!(n >= 3, "phase system needs at least 3 sensors");
    let corner = 1.0 / (n * n) as f64;
    let mut phi = DMatrix::zeros(n, n);
    phi[(0, 0)] = corner;
    phi[(n - 1, n - 1)] = corner;
    for r in 1..n - 1 {
        phi[(r, r - 1)] = 1.0;
        phi[(r, r)] = -2.0;
        phi[(r, r + 1)] = 1.0;
    }
    phi
}

/// Calibration amplitudes `alpha_n = sqrt(r_hat[n][n])`.
pub fn estimate_amplitudes(r_hat: &DenoisedCovariance) -> Result<Vec<f64>, AlgebraicError> {
    let m = r_hat.r_hat.matrix();
    (0..m.nrows())
        .map(|i| {
            let d = m[(i, i)].re;
            if d > 0.0 {
                Ok(d.sqrt())
            } else {
                Err(AlgebraicError::NonPositiveDiagonal { index: i, value: d })
            }
        })
        .collect()
}

/// Build the phase system from the first sub-diagonal:
/// `b_n = angle(r[n+1][n] / r[n][n-1])` for interior n (principal value in
/// `(-pi, pi]`), zero at the corners.
pub fn build_phase_system(r_hat: &DenoisedCovariance) -> Result<PhaseSystem, AlgebraicError> {
    let m = r_hat.r_hat.matrix();
    let n = m.nrows();
    let scale = m.norm();
    for i in 1..n {
        let mag = m[(i, i - 1)].norm();
        if mag < 1e-12 * scale {
            return Err(AlgebraicError::VanishingSubdiagonal {
                index: i,
                magnitude: mag,
            });
        }
    }
    let mut b = DVector::zeros(n);
    for i in 1..n - 1 {
        b[i] = (m[(i + 1, i)] / m[(i, i - 1)]).arg();
    }
    Ok(PhaseSystem {
        phi: phase_matrix(n),
        b_hat: b,
    })
}

/// Solve `Phi beta = b` by dense LU; the residual must satisfy
/// `||Phi beta - b||_inf <= 1e-9 (1 + ||b||_inf)`.
pub fn solve_phase_system(sys: &PhaseSystem) -> Result<DVector<f64>, AlgebraicError> {
    let beta = sys
        .phi
        .clone()
        .lu()
        .solve(&sys.b_hat)
        .ok_or(AlgebraicError::SingularSystem)?;
    let residual = (&sys.phi * &beta - &sys.b_hat).amax();
    if residual > 1e-9 * (1.0 + sys.b_hat.amax()) {
        return Err(AlgebraicError::SingularSystem);
    }
    Ok(beta)
}

/// Covariance-to-gains pipeline: amplitudes, phases, and the calibrated
/// matrix `F_hat`.
pub fn run_partial_algebraic(r_hat: &DenoisedCovariance) -> Result<AlgebraicOutput, AlgebraicError> {
    let alpha = estimate_amplitudes(r_hat)?;
    let system = build_phase_system(r_hat)?;
    let beta = solve_phase_system(&system)?;
    let g = CVec::from_fn(alpha.len(), |i, _| Complex64::from_polar(alpha[i], beta[i]));
    let inv_g = g.map(|z| z.inv());
    let f_matrix = sandwich(&inv_g, r_hat.r_hat.matrix(), &inv_g);
    Ok(AlgebraicOutput {
        g_hat: CalibrationVector::new(g).expect("amplitudes are strictly positive"),
        f_matrix: HermitianMatrix::new(f_matrix)
            .expect("congruence with a diagonal preserves symmetry"),
        phase_system: system,
    })
}
