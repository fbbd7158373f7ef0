//! Ground-truth problem instances and synthetic snapshot generation.
//!
//! Sources have constant modulus with uniformly random phases so that
//! `E x x* = diag(gamma^2)` holds exactly, and the noise is circular complex
//! Gaussian with `E e e* = sigma^2 I` (per-entry real/imag variance
//! `sigma^2 / 2`).

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::ModelError;
use crate::linalg::{sandwich, toeplitz, CMat, CVec, HermitianMatrix, ToeplitzSpec};
use crate::metrics::wrap_distance;

/// SplitMix64 step, used to derive independent stream seeds from a base seed.
pub fn splitmix64(seed: u64, stream: u64) -> u64 {
    let mut z = seed.wrapping_add(stream.wrapping_mul(0x9e37_79b9_7f4a_7c15));
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// s frequencies on the torus [0,1) with root powers gamma_j > 0.
#[derive(Debug, Clone, PartialEq)]
pub struct FrequencySet {
    omegas: Vec<f64>,
    gammas: Vec<f64>,
}

impl FrequencySet {
    pub fn new(omegas: Vec<f64>, gammas: Vec<f64>) -> Result<Self, ModelError> {
        if omegas.len() != gammas.len() {
            return Err(ModelError::LengthMismatch(omegas.len(), gammas.len()));
        }
        for &w in &omegas {
            if !(0.0..1.0).contains(&w) {
                return Err(ModelError::FrequencyOutOfRange(w));
            }
        }
        for i in 0..omegas.len() {
            for j in i + 1..omegas.len() {
                if wrap_distance(omegas[i], omegas[j]) == 0.0 {
                    return Err(ModelError::DuplicateFrequency(i, j));
                }
            }
        }
        for (j, &g) in gammas.iter().enumerate() {
            if !(g > 0.0) {
                return Err(ModelError::NonPositiveGamma(j));
            }
        }
        Ok(Self { omegas, gammas })
    }

    pub fn sparsity(&self) -> usize {
        self.omegas.len()
    }

    pub fn omegas(&self) -> &[f64] {
        &self.omegas
    }

    pub fn gammas(&self) -> &[f64] {
        &self.gammas
    }

    /// Smallest pairwise wrap-around distance.
    pub fn min_separation(&self) -> f64 {
        let mut best = f64::INFINITY;
        for i in 0..self.omegas.len() {
            for j in i + 1..self.omegas.len() {
                best = best.min(wrap_distance(self.omegas[i], self.omegas[j]));
            }
        }
        best
    }
}

/// Per-sensor complex gains g_n = alpha_n e^{ i beta_n }, all nonvanishing.
#[derive(Debug, Clone, PartialEq)]
pub struct CalibrationVector {
    g: CVec,
}

impl CalibrationVector {
    pub fn new(g: CVec) -> Result<Self, ModelError> {
        for (n, z) in g.iter().enumerate() {
            if z.norm() == 0.0 {
                return Err(ModelError::VanishingGain(n));
            }
        }
        Ok(Self { g })
    }

    pub fn gains(&self) -> &CVec {
        &self.g
    }

    pub fn len(&self) -> usize {
        self.g.len()
    }

    pub fn is_empty(&self) -> bool {
        self.g.is_empty()
    }

    /// Amplitudes alpha_n = |g_n|.
    pub fn amplitudes(&self) -> Vec<f64> {
        self.g.iter().map(|z| z.norm()).collect()
    }

    /// Phases beta_n = angle(g_n) in (-pi, pi].
    pub fn phases(&self) -> Vec<f64> {
        self.g.iter().map(|z| z.arg()).collect()
    }
}

/// A complete synthetic calibration problem.
#[derive(Debug, Clone)]
pub struct ProblemInstance {
    pub freq: FrequencySet,
    pub cal: CalibrationVector,
    pub n: usize,
    pub sigma: f64,
    pub seed: u64,
}

impl ProblemInstance {
    pub fn new(
        freq: FrequencySet,
        cal: CalibrationVector,
        sigma: f64,
        seed: u64,
    ) -> Result<Self, ModelError> {
        let n = cal.len();
        let s = freq.sparsity();
        if n < s + 1 {
            return Err(ModelError::TooFewSensors { n, s });
        }
        if sigma < 0.0 {
            return Err(ModelError::NegativeSigma(sigma));
        }
        Ok(Self {
            freq,
            cal,
            n,
            sigma,
            seed,
        })
    }

    pub fn sparsity(&self) -> usize {
        self.freq.sparsity()
    }

    /// RNG stream reserved for snapshot sampling (distinct from the stream
    /// the instance factories consume).
    pub fn snapshot_rng(&self) -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(splitmix64(self.seed, 1))
    }

    /// The experimental setup used throughout the figures: s frequencies with
    /// jitter-free spacing `separation / N` starting from a random offset,
    /// gamma_j in [1, dr_gamma], |g_n| in [1, dr_g], gain phases uniform.
    pub fn equispaced(
        n: usize,
        s: usize,
        separation: f64,
        dr_gamma: f64,
        dr_g: f64,
        sigma: f64,
        seed: u64,
    ) -> Result<Self, ModelError> {
        let mut rng = ChaCha8Rng::seed_from_u64(splitmix64(seed, 0));
        let offset: f64 = rng.random();
        let omegas: Vec<f64> = (0..s)
            .map(|j| (offset + j as f64 * separation / n as f64).rem_euclid(1.0))
            .collect();
        let gammas: Vec<f64> = (0..s).map(|_| rng.random_range(1.0..dr_gamma.max(1.0 + 1e-12))).collect();
        let freq = FrequencySet::new(omegas, gammas)?;
        let cal = draw_gains(&mut rng, n, dr_g)?;
        Self::new(freq, cal, sigma, seed)
    }

    /// Random instance with pairwise wrap separation at least `min_sep` and
    /// |f1| > `f1_floor * f0`; frequencies are redrawn until both hold.
    pub fn random_separated(
        n: usize,
        s: usize,
        min_sep: f64,
        dr_gamma: f64,
        dr_g: f64,
        sigma: f64,
        seed: u64,
        f1_floor: f64,
    ) -> Result<Self, ModelError> {
        let mut rng = ChaCha8Rng::seed_from_u64(splitmix64(seed, 0));
        for _ in 0..10_000 {
            let omegas: Vec<f64> = (0..s).map(|_| rng.random::<f64>()).collect();
            let gammas: Vec<f64> =
                (0..s).map(|_| rng.random_range(1.0..dr_gamma.max(1.0 + 1e-12))).collect();
            let Ok(freq) = FrequencySet::new(omegas, gammas) else {
                continue;
            };
            if freq.min_separation() < min_sep {
                continue;
            }
            let f = ground_truth_f(&freq, n);
            if f.entries()[1].norm() <= f1_floor * f.entries()[0].re {
                continue;
            }
            let cal = draw_gains(&mut rng, n, dr_g)?;
            return Self::new(freq, cal, sigma, seed);
        }
        Err(ModelError::InstanceRejected)
    }
}

fn draw_gains(rng: &mut ChaCha8Rng, n: usize, dr_g: f64) -> Result<CalibrationVector, ModelError> {
    let g = CVec::from_fn(n, |_, _| {
        let amp: f64 = rng.random_range(1.0..dr_g.max(1.0 + 1e-12));
        let phase: f64 = rng.random_range(0.0..std::f64::consts::TAU);
        Complex64::from_polar(amp, phase)
    });
    CalibrationVector::new(g)
}

/// Sensing matrix `A[n][j] = exp(2 pi i n omega_j) / sqrt(N)`; every column
/// has unit Euclidean norm.
pub fn steering_matrix(freq: &FrequencySet, n: usize) -> CMat {
    let scale = 1.0 / (n as f64).sqrt();
    CMat::from_fn(n, freq.sparsity(), |row, j| {
        Complex64::from_polar(scale, std::f64::consts::TAU * row as f64 * freq.omegas()[j])
    })
}

/// The sequence `f_k = (1/N) sum_j gamma_j^2 exp(2 pi i k omega_j)`; its
/// Toeplitz matrix is the calibration-free core of the covariance.
pub fn ground_truth_f(freq: &FrequencySet, n: usize) -> ToeplitzSpec {
    let mut f = CVec::zeros(n);
    for k in 0..n {
        let mut acc = Complex64::ZERO;
        for (j, &w) in freq.omegas().iter().enumerate() {
            let p = freq.gammas()[j] * freq.gammas()[j];
            acc += Complex64::from_polar(p, std::f64::consts::TAU * k as f64 * w);
        }
        f[k] = acc / n as f64;
    }
    // f0 = (1/N) sum gamma^2 is real by construction; drop rounding residue.
    f[0] = Complex64::new(f[0].re, 0.0);
    ToeplitzSpec::new(f).expect("ground-truth sequence is always valid")
}

/// Noiseless covariance `R^y = diag(g) T(f) diag(conj g)`.
pub fn exact_covariance(inst: &ProblemInstance) -> HermitianMatrix {
    let f = ground_truth_f(&inst.freq, inst.n);
    let t = toeplitz(&f);
    let g = inst.cal.gains();
    HermitianMatrix::new(sandwich(g, t.matrix(), g))
        .expect("sandwich of a Hermitian Toeplitz matrix is Hermitian")
}

/// One batch of snapshots together with the observed extreme norms needed by
/// the covariance deviation bound.
#[derive(Debug, Clone)]
pub struct SnapshotDraw {
    /// N x L measurement matrix, one snapshot per column.
    pub snapshots: CMat,
    /// max_t ||x(t)||.
    pub max_source_norm: f64,
    /// max_t ||e(t)||.
    pub max_noise_norm: f64,
}

/// Draw L snapshots `y(t) = diag(g) A x(t) + e(t)` with
/// `x_j(t) = gamma_j e^{i theta}, theta ~ U[0, 2 pi)` and circular Gaussian
/// noise. Deterministic given the RNG state.
pub fn sample_snapshots(inst: &ProblemInstance, l: usize, rng: &mut impl Rng) -> CMat {
    sample_snapshots_detailed(inst, l, rng).snapshots
}

/// As [`sample_snapshots`], also reporting max snapshot norms.
pub fn sample_snapshots_detailed(
    inst: &ProblemInstance,
    l: usize,
    rng: &mut impl Rng,
) -> SnapshotDraw {
    assert!(l >= 1, "need at least one snapshot");
    let n = inst.n;
    let s = inst.sparsity();
    let a = steering_matrix(&inst.freq, n);
    let g = inst.cal.gains();
    let noise_scale = inst.sigma / 2.0f64.sqrt();

    let mut y = CMat::zeros(n, l);
    let mut max_x = 0.0f64;
    let mut max_e = 0.0f64;
    let mut x = CVec::zeros(s);
    for t in 0..l {
        for j in 0..s {
            let theta: f64 = rng.random_range(0.0..std::f64::consts::TAU);
            x[j] = Complex64::from_polar(inst.freq.gammas()[j], theta);
        }
        max_x = max_x.max(x.norm());
        let clean = &a * &x;
        let mut e_norm_sq = 0.0f64;
        for row in 0..n {
            let re: f64 = StandardNormal.sample(rng);
            let im: f64 = StandardNormal.sample(rng);
            let e = Complex64::new(noise_scale * re, noise_scale * im);
            e_norm_sq += e.norm_sqr();
            y[(row, t)] = g[row] * clean[row] + e;
        }
        max_e = max_e.max(e_norm_sq.sqrt());
    }
    SnapshotDraw {
        snapshots: y,
        max_source_norm: max_x,
        max_noise_norm: max_e,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{hermitian_eig, spectral_norm};
    use approx::assert_abs_diff_eq;

    fn simple_instance(sigma: f64) -> ProblemInstance {
        let freq = FrequencySet::new(vec![0.12, 0.37, 0.81], vec![1.0, 1.5, 2.0]).unwrap();
        let g = CVec::from_fn(8, |i, _| Complex64::from_polar(1.0 + 0.1 * i as f64, 0.3 * i as f64));
        ProblemInstance::new(freq, CalibrationVector::new(g).unwrap(), sigma, 99).unwrap()
    }

    #[test]
    fn steering_zero_frequency() {
        let freq = FrequencySet::new(vec![0.0], vec![1.0]).unwrap();
        let a = steering_matrix(&freq, 4);
        for i in 0..4 {
            assert_abs_diff_eq!(a[(i, 0)].re, 0.5, epsilon = 1e-15);
            assert_abs_diff_eq!(a[(i, 0)].im, 0.0, epsilon = 1e-15);
        }
    }

    #[test]
    fn steering_half_frequency_alternates() {
        let freq = FrequencySet::new(vec![0.5], vec![1.0]).unwrap();
        let a = steering_matrix(&freq, 2);
        let r = 1.0 / 2.0f64.sqrt();
        assert_abs_diff_eq!(a[(0, 0)].re, r, epsilon = 1e-15);
        assert_abs_diff_eq!(a[(1, 0)].re, -r, epsilon = 1e-15);
        assert_abs_diff_eq!(a[(1, 0)].im, 0.0, epsilon = 1e-12);
    }

    #[test]
    fn steering_quarter_frequency() {
        let freq = FrequencySet::new(vec![0.25], vec![1.0]).unwrap();
        let a = steering_matrix(&freq, 4);
        let expect = [
            Complex64::new(0.5, 0.0),
            Complex64::new(0.0, 0.5),
            Complex64::new(-0.5, 0.0),
            Complex64::new(0.0, -0.5),
        ];
        for i in 0..4 {
            assert!((a[(i, 0)] - expect[i]).norm() < 1e-14);
        }
    }

    #[test]
    fn steering_columns_unit_norm() {
        let inst = simple_instance(0.0);
        let a = steering_matrix(&inst.freq, inst.n);
        for j in 0..inst.sparsity() {
            assert_abs_diff_eq!(a.column(j).norm(), 1.0, epsilon = 1e-12);
        }
    }

    #[test]
    fn ground_truth_f_single_zero_frequency() {
        let freq = FrequencySet::new(vec![0.0], vec![1.0]).unwrap();
        let f = ground_truth_f(&freq, 4);
        for k in 0..4 {
            assert!((f.entries()[k] - Complex64::new(0.25, 0.0)).norm() < 1e-15);
        }
    }

    #[test]
    fn ground_truth_f_single_source_constant_modulus() {
        let freq = FrequencySet::new(vec![0.3717], vec![1.4]).unwrap();
        let f = ground_truth_f(&freq, 6);
        for k in 0..6 {
            assert_abs_diff_eq!(f.entries()[k].norm(), 1.4 * 1.4 / 6.0, epsilon = 1e-13);
        }
    }

    #[test]
    fn toeplitz_of_f_matches_steering_product() {
        let inst = simple_instance(0.0);
        let f = ground_truth_f(&inst.freq, inst.n);
        let t = toeplitz(&f);
        let a = steering_matrix(&inst.freq, inst.n);
        let rx = CMat::from_diagonal(&CVec::from_iterator(
            inst.sparsity(),
            inst.freq.gammas().iter().map(|&g| Complex64::new(g * g, 0.0)),
        ));
        let direct = &a * rx * a.adjoint();
        assert!((t.matrix() - direct).norm() <= 1e-12 * direct.norm());
    }

    #[test]
    fn exact_covariance_unit_gains_single_source() {
        let freq = FrequencySet::new(vec![0.0], vec![1.0]).unwrap();
        let g = CVec::from_element(4, Complex64::ONE);
        let inst =
            ProblemInstance::new(freq, CalibrationVector::new(g).unwrap(), 0.0, 1).unwrap();
        let r = exact_covariance(&inst);
        for i in 0..4 {
            for j in 0..4 {
                assert!((r.matrix()[(i, j)] - Complex64::new(0.25, 0.0)).norm() < 1e-14);
            }
        }
    }

    #[test]
    fn exact_covariance_diagonal_and_product_oracle() {
        let inst = simple_instance(0.0);
        let r = exact_covariance(&inst);
        let f0 = ground_truth_f(&inst.freq, inst.n).entries()[0].re;
        for (i, z) in inst.cal.gains().iter().enumerate() {
            assert_abs_diff_eq!(r.matrix()[(i, i)].re, z.norm_sqr() * f0, epsilon = 1e-12);
        }
        // Independent product oracle G A R^x A* G*.
        let a = steering_matrix(&inst.freq, inst.n);
        let rx = CMat::from_diagonal(&CVec::from_iterator(
            inst.sparsity(),
            inst.freq.gammas().iter().map(|&g| Complex64::new(g * g, 0.0)),
        ));
        let gd = CMat::from_diagonal(inst.cal.gains());
        let direct = &gd * &a * rx * a.adjoint() * gd.adjoint();
        assert!((r.matrix() - &direct).norm() <= 1e-12 * direct.norm());
        // PSD.
        let eig = hermitian_eig(&r);
        let norm = spectral_norm(&r);
        assert!(eig.eigenvalues.iter().all(|&l| l >= -1e-10 * norm));
    }

    #[test]
    fn snapshots_noiseless_single_source_modulus() {
        let freq = FrequencySet::new(vec![0.321], vec![1.7]).unwrap();
        let g = CVec::from_fn(5, |i, _| Complex64::from_polar(1.0 + i as f64, 0.17 * i as f64));
        let inst =
            ProblemInstance::new(freq, CalibrationVector::new(g.clone()).unwrap(), 0.0, 5).unwrap();
        let y = sample_snapshots(&inst, 3, &mut inst.snapshot_rng());
        for t in 0..3 {
            for row in 0..5 {
                let expect = 1.7 * g[row].norm() / (5.0f64).sqrt();
                assert_abs_diff_eq!(y[(row, t)].norm(), expect, epsilon = 1e-12);
            }
        }
    }

    #[test]
    fn snapshots_deterministic_per_seed() {
        let inst = simple_instance(0.5);
        let y1 = sample_snapshots(&inst, 20, &mut inst.snapshot_rng());
        let y2 = sample_snapshots(&inst, 20, &mut inst.snapshot_rng());
        assert_eq!(y1, y2);
    }

    #[test]
    fn source_covariance_matches_design() {
        // E x x* = diag(gamma^2): empirical deviation over 1e5 draws <= 5%.
        let freq = FrequencySet::new(vec![0.1, 0.45, 0.72], vec![1.0, 1.3, 1.9]).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(77);
        let s = 3;
        let l = 100_000;
        let mut acc = CMat::zeros(s, s);
        let mut x = CVec::zeros(s);
        for _ in 0..l {
            for j in 0..s {
                let theta: f64 = rng.random_range(0.0..std::f64::consts::TAU);
                x[j] = Complex64::from_polar(freq.gammas()[j], theta);
            }
            acc += &x * x.adjoint();
        }
        acc /= Complex64::new(l as f64, 0.0);
        let target = CMat::from_diagonal(&CVec::from_iterator(
            s,
            freq.gammas().iter().map(|&g| Complex64::new(g * g, 0.0)),
        ));
        let dev = HermitianMatrix::symmetrizing(&acc - &target);
        assert!(spectral_norm(&dev) <= 0.05 * spectral_norm(&HermitianMatrix::new(target).unwrap()));
    }

    #[test]
    fn equispaced_factory_respects_separation() {
        let inst = ProblemInstance::equispaced(64, 20, 2.0, 2.0, 2.0, 0.5, 3).unwrap();
        assert!(inst.freq.min_separation() >= 2.0 / 64.0 - 1e-12);
        assert_eq!(inst.sparsity(), 20);
        for a in inst.cal.amplitudes() {
            assert!((1.0..=2.0).contains(&a));
        }
    }

    #[test]
    fn random_separated_factory_meets_floors() {
        let inst =
            ProblemInstance::random_separated(16, 4, 1.5 / 16.0, 2.0, 2.0, 0.0, 11, 0.01).unwrap();
        assert!(inst.freq.min_separation() >= 1.5 / 16.0);
        let f = ground_truth_f(&inst.freq, inst.n);
        assert!(f.entries()[1].norm() > 0.01 * f.entries()[0].re);
    }

    #[test]
    fn instance_rejects_too_few_sensors() {
        let freq = FrequencySet::new(vec![0.1, 0.2], vec![1.0, 1.0]).unwrap();
        let g = CVec::from_element(2, Complex64::ONE);
        assert!(matches!(
            ProblemInstance::new(freq, CalibrationVector::new(g).unwrap(), 0.0, 0),
            Err(ModelError::TooFewSensors { .. })
        ));
    }
}
