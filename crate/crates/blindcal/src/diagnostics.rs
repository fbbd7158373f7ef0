//! Computable theoretical quantities: the expected covariance-deviation
//! bound, the noise-correlation perturbation bound, and the generalized
//! phase-identifiability rank condition.

use nalgebra::DMatrix;

use crate::error::DiagnosticsError;
use crate::linalg::ToeplitzSpec;

/// Inputs of the covariance deviation bound. Norm fields are the observed
/// maxima over the drawn snapshots.
#[derive(Debug, Clone, Copy)]
pub struct BoundInputs {
    pub alpha_max: f64,
    pub gamma_max: f64,
    /// Largest singular value of the steering matrix.
    pub sigma_max_a: f64,
    /// Noise level.
    pub sigma: f64,
    pub l: usize,
    pub n: usize,
    pub s: usize,
    /// max_t ||x(t)||.
    pub max_x_norm: f64,
    /// max_t ||e(t)||.
    pub max_e_norm: f64,
}

/// Expected spectral-norm deviation `E ||R^y - R_hat^y||` bound: three
/// Bernstein-type terms for the source, cross, and noise covariance blocks.
/// Logarithms are natural.
pub fn delta_ry_bound(inp: &BoundInputs) -> f64 {
    let l = inp.l as f64;
    let sqrt_l = l.sqrt();
    let log4s = (4.0 * inp.s as f64).ln();
    let log_ns = (inp.n as f64 + inp.s as f64).ln();
    let log2n = (2.0 * inp.n as f64).ln();

    let source = 2.0
        * inp.alpha_max.powi(2)
        * inp.sigma_max_a.powi(2)
        * (inp.gamma_max * inp.max_x_norm * (2.0 * log4s).sqrt() / sqrt_l
            + (inp.gamma_max.powi(2) + inp.max_x_norm.powi(2)) * log4s / (3.0 * l));
    let cross = 4.0
        * inp.alpha_max
        * inp.sigma_max_a
        * (inp.sigma * inp.gamma_max * (2.0 * inp.n as f64 * log_ns).sqrt() / sqrt_l
            + inp.max_x_norm * inp.max_e_norm * log_ns / (3.0 * l));
    let noise = 2.0
        * (inp.sigma * inp.max_e_norm * (2.0 * log2n).sqrt() / sqrt_l
            + (inp.sigma.powi(2) + inp.max_e_norm.powi(2)) * log2n / (3.0 * l));
    source + cross + noise
}

/// Outcome of the noise-correlation perturbation bound.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum PerturbationBound {
    /// `sup |R_hat - R| <= 2 ||E|| / lambda_s(F)`.
    Bound(f64),
    /// The hypothesis `2 ||E|| < lambda_s(F)` fails.
    Inapplicable,
}

pub fn music_perturbation_bound(e_norm: f64, lambda_s: f64) -> PerturbationBound {
    assert!(lambda_s > 0.0, "lambda_s must be positive");
    if 2.0 * e_norm < lambda_s {
        PerturbationBound::Bound(2.0 * e_norm / lambda_s)
    } else {
        PerturbationBound::Inapplicable
    }
}

/// Difference matrix of the k-th diagonal phase equations: row l encodes
/// `beta_{l+k+1} - beta_{l+k} - beta_{l+1} + beta_l`. For k = 1 the pattern
/// collapses to the second difference `(1, -2, 1)`.
pub fn build_phi_k(k: usize, n: usize) -> Result<DMatrix<f64>, DiagnosticsError> {
    if k < 1 || k > n.saturating_sub(2) {
        return Err(DiagnosticsError::BadK { k, n });
    }
    let rows = n - k - 1;
    let mut phi = DMatrix::zeros(rows, n);
    for l in 0..rows {
        phi[(l, l)] += 1.0;
        phi[(l, l + 1)] += -1.0;
        phi[(l, l + k)] += -1.0;
        phi[(l, l + k + 1)] += 1.0;
    }
    Ok(phi)
}

/// Rank condition on the stacked difference matrices over the set of
/// non-vanishing sequence entries.
#[derive(Debug, Clone)]
pub struct RankCondition {
    /// Indices k with `|f_k| > zero_tol * |f_0|`, restricted to 1..=N-2.
    pub lambda: Vec<usize>,
    /// Numerical rank of the stacked matrix.
    pub rank: usize,
    /// True when the rank reaches N-2, the phase-identifiability condition.
    pub satisfied: bool,
}

/// Default relative threshold for membership in the index set.
pub const RANK_ZERO_TOL: f64 = 1e-10;

pub fn rank_condition(f: &ToeplitzSpec, zero_tol: f64) -> RankCondition {
    let n = f.len();
    let f0 = f.entries()[0].norm();
    let lambda: Vec<usize> = (1..n.saturating_sub(1))
        .filter(|&k| f.entries()[k].norm() > zero_tol * f0)
        .collect();
    if lambda.is_empty() {
        return RankCondition {
            lambda,
            rank: 0,
            satisfied: n == 2,
        };
    }
    let total_rows: usize = lambda.iter().map(|&k| n - k - 1).sum();
    let mut stacked = DMatrix::zeros(total_rows, n);
    let mut row = 0;
    for &k in &lambda {
        let phi = build_phi_k(k, n).expect("lambda indices are in range");
        stacked.rows_mut(row, phi.nrows()).copy_from(&phi);
        row += phi.nrows();
    }
    let svd = stacked.svd(false, false);
    let smax = svd.singular_values.max();
    let rank = svd
        .singular_values
        .iter()
        .filter(|&&s| s > 1e-10 * smax)
        .count();
    RankCondition {
        lambda,
        rank,
        satisfied: rank == n - 2,
    }
}
