//! Frequency localization on the continuous torus by noise-subspace
//! correlation: imaging function `J(omega) = ||phi|| / ||V2* phi||`, its
//! reciprocal `R = 1/J`, and peak extraction with golden-section refinement.

use num_complex::Complex64;

use crate::error::MusicError;
use crate::linalg::{hermitian_eig, CMat, CVec, HermitianMatrix};
use crate::metrics::wrap_distance;

/// Finite stand-in for an unbounded imaging value at an exact root.
pub const J_AT_EXACT_ROOT: f64 = 1e18;

const GOLDEN: f64 = 0.618_033_988_749_894_9;

/// Grid and refinement parameters for peak extraction.
#[derive(Debug, Clone, Copy)]
pub struct MusicConfig {
    pub grid_size: usize,
    pub refine_tol: f64,
}

impl MusicConfig {
    /// Default layout for an N-sensor array: grid `max(4096, 16 N)`,
    /// refinement to 1e-10 in torus units — far below the 0.2/N success
    /// threshold.
    pub fn for_sensor_count(n: usize) -> Self {
        Self {
            grid_size: 4096.max(16 * n),
            refine_tol: 1e-10,
        }
    }
}

/// Orthonormal basis of the noise subspace plus the signal eigenvalues.
#[derive(Debug, Clone)]
pub struct NoiseSubspace {
    basis: CMat,
    signal_eigenvalues: Vec<f64>,
}

impl NoiseSubspace {
    /// N x (N - s) orthonormal basis of the noise subspace.
    pub fn basis(&self) -> &CMat {
        &self.basis
    }

    /// The s largest eigenvalues, descending.
    pub fn signal_eigenvalues(&self) -> &[f64] {
        &self.signal_eigenvalues
    }

    pub fn sensor_count(&self) -> usize {
        self.basis.nrows()
    }

    pub fn sparsity(&self) -> usize {
        self.signal_eigenvalues.len()
    }
}

/// Locations of the s largest local maxima of the imaging function.
#[derive(Debug, Clone)]
pub struct PeakSet {
    /// Peak locations, sorted ascending in [0, 1).
    pub omegas: Vec<f64>,
    /// Imaging-function values at the peaks, in the same order.
    pub peak_values: Vec<f64>,
    /// Grid used for the coarse scan.
    pub grid_size: usize,
    /// False when the set had to be padded with non-maxima grid points.
    pub refined: bool,
}

/// Split the spectrum of `F`: the eigenvectors of the N-s smallest
/// eigenvalues span the noise subspace.
pub fn noise_subspace(f: &HermitianMatrix, s: usize) -> Result<NoiseSubspace, MusicError> {
    let n = f.dim();
    if s >= n {
        return Err(MusicError::SparsityTooLarge { s, n });
    }
    let eig = hermitian_eig(f);
    Ok(NoiseSubspace {
        basis: eig.eigenvectors.columns(s, n - s).clone_owned(),
        signal_eigenvalues: eig.eigenvalues[..s].to_vec(),
    })
}

fn array_response(n: usize, omega: f64) -> CVec {
    CVec::from_fn(n, |row, _| {
        Complex64::from_polar(1.0, std::f64::consts::TAU * row as f64 * omega)
    })
}

/// Imaging function `J(omega) = ||phi(omega)|| / ||V2* phi(omega)||`, at
/// least 1 everywhere; exact roots of the denominator return
/// [`J_AT_EXACT_ROOT`].
pub fn imaging_function(sub: &NoiseSubspace, omega: f64) -> f64 {
    let n = sub.sensor_count();
    let phi = array_response(n, omega);
    let sqrt_n = (n as f64).sqrt();
    let denom = (sub.basis.adjoint() * phi).norm();
    if denom < 1e-14 * sqrt_n {
        J_AT_EXACT_ROOT
    } else {
        (sqrt_n / denom).max(1.0)
    }
}

/// Noise-space correlation `R(omega) = 1 / J(omega)`, in [0, 1], exactly 0 at
/// exact roots.
pub fn noise_correlation(sub: &NoiseSubspace, omega: f64) -> f64 {
    let j = imaging_function(sub, omega);
    if j >= J_AT_EXACT_ROOT {
        0.0
    } else {
        1.0 / j
    }
}

/// Maximize J by golden-section search on `[lo, hi]` (torus coordinates may
/// exceed [0,1); evaluation wraps).
fn refine_peak(sub: &NoiseSubspace, lo: f64, hi: f64, tol: f64) -> (f64, f64) {
    let (mut a, mut b) = (lo, hi);
    let mut c = b - GOLDEN * (b - a);
    let mut d = a + GOLDEN * (b - a);
    let mut fc = imaging_function(sub, c.rem_euclid(1.0));
    let mut fd = imaging_function(sub, d.rem_euclid(1.0));
    while b - a > tol {
        if fc > fd {
            b = d;
            d = c;
            fd = fc;
            c = b - GOLDEN * (b - a);
            fc = imaging_function(sub, c.rem_euclid(1.0));
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + GOLDEN * (b - a);
            fd = imaging_function(sub, d.rem_euclid(1.0));
        }
    }
    let w = ((a + b) / 2.0).rem_euclid(1.0);
    (w, imaging_function(sub, w))
}

/// Extract the s largest local maxima of J on a uniform cyclic grid, refine
/// each within one grid cell, and return them sorted by location.
///
/// Too few local maxima yields `InsufficientPeaks` carrying a degraded set
/// padded with the largest remaining grid values.
pub fn find_peaks(
    sub: &NoiseSubspace,
    s: usize,
    grid_size: usize,
    refine_tol: f64,
) -> Result<PeakSet, MusicError> {
    let n = sub.sensor_count();
    assert!(grid_size >= 8 * n, "grid must have at least 8N points");
    let j: Vec<f64> = (0..grid_size)
        .map(|i| imaging_function(sub, i as f64 / grid_size as f64))
        .collect();

    let mut maxima: Vec<usize> = (0..grid_size)
        .filter(|&i| {
            let prev = j[(i + grid_size - 1) % grid_size];
            let next = j[(i + 1) % grid_size];
            j[i] > prev && j[i] > next
        })
        .collect();
    // Largest J first; ties broken toward smaller omega.
    maxima.sort_by(|&a, &b| j[b].partial_cmp(&j[a]).unwrap().then(a.cmp(&b)));

    let cell = 1.0 / grid_size as f64;
    let mut peaks: Vec<(f64, f64)> = Vec::with_capacity(s);
    for &i in &maxima {
        if peaks.len() == s {
            break;
        }
        let center = i as f64 * cell;
        let (w, jw) = refine_peak(sub, center - cell, center + cell, refine_tol);
        if peaks
            .iter()
            .all(|&(p, _)| wrap_distance(p, w) >= refine_tol / 2.0)
        {
            peaks.push((w, jw));
        }
    }

    if peaks.len() < s {
        let found = peaks.len();
        // Pad with the largest grid values not already represented.
        let mut order: Vec<usize> = (0..grid_size).collect();
        order.sort_by(|&a, &b| j[b].partial_cmp(&j[a]).unwrap().then(a.cmp(&b)));
        for i in order {
            if peaks.len() == s {
                break;
            }
            let w = i as f64 * cell;
            if peaks
                .iter()
                .all(|&(p, _)| wrap_distance(p, w) >= refine_tol / 2.0)
            {
                peaks.push((w, j[i]));
            }
        }
        peaks.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
        let partial = PeakSet {
            omegas: peaks.iter().map(|p| p.0).collect(),
            peak_values: peaks.iter().map(|p| p.1).collect(),
            grid_size,
            refined: false,
        };
        return Err(MusicError::InsufficientPeaks { found, partial });
    }

    peaks.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
    Ok(PeakSet {
        omegas: peaks.iter().map(|p| p.0).collect(),
        peak_values: peaks.iter().map(|p| p.1).collect(),
        grid_size,
        refined: true,
    })
}

/// Noise subspace followed by peak extraction: the frequency-localization
/// step applied to a calibrated matrix.
pub fn locate_frequencies(
    f_matrix: &HermitianMatrix,
    s: usize,
    cfg: &MusicConfig,
) -> Result<PeakSet, MusicError> {
    let sub = noise_subspace(f_matrix, s)?;
    find_peaks(&sub, s, cfg.grid_size, cfg.refine_tol)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{largest_singular_value, spectral_norm, CVec};
    use crate::model::{steering_matrix, FrequencySet};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use rand_distr::{Distribution, StandardNormal};

    fn exact_f(freq: &FrequencySet, n: usize) -> HermitianMatrix {
        let a = steering_matrix(freq, n);
        let rx = CMat::from_diagonal(&CVec::from_iterator(
            freq.sparsity(),
            freq.gammas().iter().map(|&g| Complex64::new(g * g, 0.0)),
        ));
        HermitianMatrix::symmetrizing(&a * rx * a.adjoint())
    }

    fn random_hermitian(rng: &mut ChaCha8Rng, n: usize) -> CMat {
        let raw = CMat::from_fn(n, n, |_, _| {
            Complex64::new(StandardNormal.sample(rng), StandardNormal.sample(rng))
        });
        (&raw + raw.adjoint()).scale(0.5)
    }

    #[test]
    fn noise_subspace_orthogonal_to_steering() {
        let freq = FrequencySet::new(vec![0.12, 0.41, 0.77], vec![1.0, 1.3, 0.8]).unwrap();
        let n = 10;
        let f = exact_f(&freq, n);
        let sub = noise_subspace(&f, 3).unwrap();
        let a = steering_matrix(&freq, n);
        assert!(largest_singular_value(&(sub.basis().adjoint() * a)) <= 1e-9);
        // Orthonormal columns.
        let gram = sub.basis().adjoint() * sub.basis();
        assert!((gram - CMat::identity(n - 3, n - 3)).norm() <= 1e-9);
    }

    #[test]
    fn noise_subspace_annihilates_rank_s_matrix() {
        let mut rng = ChaCha8Rng::seed_from_u64(31);
        let n = 9;
        let b = CMat::from_fn(n, 3, |_, _| {
            Complex64::new(StandardNormal.sample(&mut rng), StandardNormal.sample(&mut rng))
        });
        let f = HermitianMatrix::symmetrizing(&b * b.adjoint());
        let sub = noise_subspace(&f, 3).unwrap();
        let prod = sub.basis().adjoint() * f.matrix();
        assert!(prod.norm() <= 1e-9 * f.matrix().norm());
    }

    #[test]
    fn noise_subspace_rejects_large_sparsity() {
        let f = HermitianMatrix::new(CMat::identity(4, 4)).unwrap();
        assert!(matches!(
            noise_subspace(&f, 4),
            Err(MusicError::SparsityTooLarge { .. })
        ));
    }

    #[test]
    fn imaging_flags_exact_roots() {
        let freq = FrequencySet::new(vec![0.2, 0.6], vec![1.0, 1.0]).unwrap();
        let f = exact_f(&freq, 8);
        let sub = noise_subspace(&f, 2).unwrap();
        for &w in freq.omegas() {
            assert_eq!(imaging_function(&sub, w), J_AT_EXACT_ROOT);
            assert_eq!(noise_correlation(&sub, w), 0.0);
        }
    }

    #[test]
    fn imaging_degenerate_full_noise_space() {
        // s = 0: the noise subspace is everything and J == 1, R == 1.
        let f = HermitianMatrix::new(CMat::identity(6, 6)).unwrap();
        let sub = noise_subspace(&f, 0).unwrap();
        for i in 0..20 {
            let w = i as f64 / 20.0;
            assert!((imaging_function(&sub, w) - 1.0).abs() <= 1e-12);
            assert!((noise_correlation(&sub, w) - 1.0).abs() <= 1e-12);
        }
    }

    #[test]
    fn imaging_matches_projector_oracle() {
        // For exact F the noise space is the orthocomplement of range(A), so
        // ||V2* phi|| = ||(I - A (A*A)^-1 A*) phi||.
        let freq = FrequencySet::new(vec![0.13, 0.37, 0.81], vec![1.1, 0.9, 1.4]).unwrap();
        let n = 12;
        let f = exact_f(&freq, n);
        let sub = noise_subspace(&f, 3).unwrap();
        let a = steering_matrix(&freq, n);
        let gram_inv = (a.adjoint() * &a).try_inverse().unwrap();
        let proj = CMat::identity(n, n) - &a * gram_inv * a.adjoint();
        for i in 0..64 {
            let w = i as f64 / 64.0 + 0.003;
            let phi = array_response(n, w.rem_euclid(1.0));
            let denom = (&proj * &phi).norm();
            let expected = if denom < 1e-14 * (n as f64).sqrt() {
                J_AT_EXACT_ROOT
            } else {
                (n as f64).sqrt() / denom
            };
            let got = imaging_function(&sub, w.rem_euclid(1.0));
            if expected < J_AT_EXACT_ROOT {
                assert!(
                    (got - expected).abs() <= 1e-9 * expected,
                    "w = {w}: {got} vs {expected}"
                );
            }
        }
    }

    #[test]
    fn imaging_invariant_under_basis_mixing() {
        // J depends only on the subspace: mixing V2 by a random unitary
        // changes nothing.
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let freq = FrequencySet::new(vec![0.22, 0.58], vec![1.0, 1.2]).unwrap();
        let n = 8;
        let f = exact_f(&freq, n);
        let sub = noise_subspace(&f, 2).unwrap();
        // Random unitary from the QR of a random matrix.
        let raw = CMat::from_fn(n - 2, n - 2, |_, _| {
            Complex64::new(StandardNormal.sample(&mut rng), StandardNormal.sample(&mut rng))
        });
        let q = raw.qr().q();
        let mixed = NoiseSubspace {
            basis: sub.basis() * q,
            signal_eigenvalues: sub.signal_eigenvalues().to_vec(),
        };
        for i in 0..50 {
            let w = i as f64 / 50.0;
            let a = imaging_function(&sub, w);
            let b = imaging_function(&mixed, w);
            if a < J_AT_EXACT_ROOT && b < J_AT_EXACT_ROOT {
                assert!((a - b).abs() <= 1e-10 * a.max(1.0));
            }
        }
    }

    #[test]
    fn imaging_range_properties() {
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        let f = HermitianMatrix::symmetrizing(random_hermitian(&mut rng, 7));
        let sub = noise_subspace(&f, 2).unwrap();
        for i in 0..200 {
            let w = i as f64 / 200.0;
            let j = imaging_function(&sub, w);
            let r = noise_correlation(&sub, w);
            assert!(j >= 1.0);
            assert!((0.0..=1.0).contains(&r));
        }
    }

    #[test]
    fn perturbation_bound_on_grid() {
        // sup |R_hat - R| <= 2 ||E|| / lambda_s(F) whenever 2||E|| < lambda_s.
        let mut rng = ChaCha8Rng::seed_from_u64(77);
        let freq = FrequencySet::new(vec![0.1, 0.35, 0.72], vec![1.0, 1.4, 0.9]).unwrap();
        let n = 12;
        let f = exact_f(&freq, n);
        let lam_s = {
            let eig = crate::linalg::hermitian_eig(&f);
            eig.eigenvalues[2]
        };
        let mut e = random_hermitian(&mut rng, n);
        let e_norm_target = 0.2 * lam_s;
        let e_norm0 = spectral_norm(&HermitianMatrix::symmetrizing(e.clone()));
        e *= Complex64::new(e_norm_target / e_norm0, 0.0);
        let e_norm = spectral_norm(&HermitianMatrix::symmetrizing(e.clone()));
        assert!(2.0 * e_norm < lam_s);
        let f_pert = HermitianMatrix::symmetrizing(f.matrix() + &e);
        let sub = noise_subspace(&f, 3).unwrap();
        let sub_pert = noise_subspace(&f_pert, 3).unwrap();
        let mut sup = 0.0f64;
        for i in 0..4096 {
            let w = i as f64 / 4096.0;
            sup = sup.max((noise_correlation(&sub, w) - noise_correlation(&sub_pert, w)).abs());
        }
        assert!(sup <= 2.0 * e_norm / lam_s, "sup = {sup}");
    }

    #[test]
    fn peaks_recover_exact_frequencies() {
        let freq = FrequencySet::new(
            vec![0.05, 0.05 + 2.0 / 16.0, 0.05 + 4.0 / 16.0, 0.7],
            vec![1.0, 1.2, 0.9, 1.5],
        )
        .unwrap();
        let n = 16;
        let f = exact_f(&freq, n);
        let peaks = locate_frequencies(
            &f,
            4,
            &MusicConfig {
                grid_size: 8192,
                refine_tol: 1e-10,
            },
        )
        .unwrap();
        assert!(peaks.refined);
        let mut truth = freq.omegas().to_vec();
        truth.sort_by(|a, b| a.partial_cmp(b).unwrap());
        for (w, t) in peaks.omegas.iter().zip(&truth) {
            assert!(wrap_distance(*w, *t) <= 1e-6, "peak {w} vs truth {t}");
        }
    }

    #[test]
    fn single_peak_at_half() {
        let freq = FrequencySet::new(vec![0.5], vec![1.0]).unwrap();
        let f = exact_f(&freq, 8);
        let peaks = locate_frequencies(&f, 1, &MusicConfig::for_sensor_count(8)).unwrap();
        assert_eq!(peaks.omegas.len(), 1);
        assert!(wrap_distance(peaks.omegas[0], 0.5) <= 1e-9);
    }

    #[test]
    fn flat_imaging_reports_insufficient_peaks() {
        // F = I has a flat spectrum: no strict local maxima anywhere.
        let f = HermitianMatrix::new(CMat::identity(8, 8)).unwrap();
        let sub = noise_subspace(&f, 2).unwrap();
        match find_peaks(&sub, 2, 4096, 1e-10) {
            Err(MusicError::InsufficientPeaks { found, partial }) => {
                assert_eq!(found, 0);
                assert_eq!(partial.omegas.len(), 2);
                assert!(!partial.refined);
            }
            other => panic!("expected InsufficientPeaks, got {other:?}"),
        }
    }

    #[test]
    fn peak_tie_break_is_deterministic() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let f = HermitianMatrix::symmetrizing(random_hermitian(&mut rng, 8));
        let sub = noise_subspace(&f, 3).unwrap();
        let p1 = find_peaks(&sub, 3, 4096, 1e-10);
        let p2 = find_peaks(&sub, 3, 4096, 1e-10);
        match (p1, p2) {
            (Ok(a), Ok(b)) => assert_eq!(a.omegas, b.omegas),
            (Err(_), Err(_)) => {}
            _ => panic!("nondeterministic outcome"),
        }
        let _ = rng.random::<f64>();
    }
}
