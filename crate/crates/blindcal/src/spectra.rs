//! Empirical covariance formation, noise-level estimation from the tail of
//! the spectrum, and noise-floor subtraction.

use num_complex::Complex64;

use crate::error::SpectraError;
use crate::linalg::{hermitian_eig, CMat, HermitianMatrix};

/// Relative floor applied to covariance diagonal entries after subtraction;
/// amplitude extraction takes square roots of these entries.
pub const DIAGONAL_FLOOR_REL: f64 = 1e-12;

/// Covariance estimate with the noise component removed.
#[derive(Debug, Clone)]
pub struct DenoisedCovariance {
    /// Estimate of the noiseless covariance `R^y`.
    pub r_hat: HermitianMatrix,
    /// Estimated noise level (standard deviation), nonnegative.
    pub sigma_hat: f64,
    /// Number of snapshots behind the estimate; 0 for exact covariances.
    pub l_used: usize,
    /// True when any diagonal entry was clamped to the floor.
    pub diagonal_clamped: bool,
}

impl DenoisedCovariance {
    /// Wrap an exactly known covariance (the infinite-snapshot limit).
    pub fn from_exact(r: HermitianMatrix) -> Self {
        Self {
            r_hat: r,
            sigma_hat: 0.0,
            l_used: 0,
            diagonal_clamped: false,
        }
    }

    pub fn dim(&self) -> usize {
        self.r_hat.dim()
    }
}

/// Empirical covariance `(1/L) sum_t y(t) y(t)*` of an N x L snapshot matrix.
pub fn empirical_covariance(y: &CMat) -> HermitianMatrix {
    let l = y.ncols();
    assert!(l >= 1, "need at least one snapshot");
    let cov = (y * y.adjoint()).unscale(l as f64);
    // gemm evaluates (i,j) and (j,i) as independent dot products; symmetrize
    // away the rounding asymmetry.
    HermitianMatrix::symmetrizing(cov)
}

/// Noise level from the N-s smallest eigenvalues:
/// `sigma_hat = sqrt(mean of lambda_s..lambda_{N-1})`, clamped at zero.
pub fn estimate_noise_level(cov: &HermitianMatrix, s: usize) -> Result<f64, SpectraError> {
    let n = cov.dim();
    if s >= n {
        return Err(SpectraError::SparsityTooLarge { s, n });
    }
    let eig = hermitian_eig(cov);
    let tail: f64 = eig.eigenvalues[s..].iter().sum();
    let mean = tail / (n - s) as f64;
    Ok(mean.max(0.0).sqrt())
}

/// Subtract the estimated noise component: `r_hat = cov - sigma_hat^2 I`,
/// flooring any diagonal entry below `1e-12 * trace / N` so downstream square
/// roots stay real.
pub fn denoise(
    cov: &HermitianMatrix,
    s: usize,
    l_used: usize,
) -> Result<DenoisedCovariance, SpectraError> {
    let sigma_hat = estimate_noise_level(cov, s)?;
    let n = cov.dim();
    let mut m = cov.matrix().clone();
    let shift = sigma_hat * sigma_hat;
    for i in 0..n {
        m[(i, i)] -= Complex64::new(shift, 0.0);
    }
    let trace: f64 = (0..n).map(|i| m[(i, i)].re).sum();
    let floor = DIAGONAL_FLOOR_REL * trace.max(0.0) / n as f64;
    let mut clamped = false;
    for i in 0..n {
        if m[(i, i)].re < floor {
            m[(i, i)] = Complex64::new(floor, 0.0);
            clamped = true;
        }
    }
    let r_hat = HermitianMatrix::new(m).expect("diagonal shift preserves symmetry");
    Ok(DenoisedCovariance {
        r_hat,
        sigma_hat,
        l_used,
        diagonal_clamped: clamped,
    })
}

/// Convenience: empirical covariance followed by [`denoise`].
pub fn denoise_snapshots(y: &CMat, s: usize) -> Result<DenoisedCovariance, SpectraError> {
    denoise(&empirical_covariance(y), s, y.ncols())
}
