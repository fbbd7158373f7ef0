//! Evaluation up to the trivial ambiguity class: wrap-around distance,
//! translation-minimized Hausdorff support error, and relative calibration
//! error after optimal linear-phase and complex-scale alignment.

use num_complex::Complex64;

use crate::error::MetricsError;
use crate::linalg::CVec;

const GOLDEN: f64 = 0.618_033_988_749_894_9;

/// Wrap-around distance on the torus [0,1): `min(|a-b|, 1-|a-b|)`.
pub fn wrap_distance(a: f64, b: f64) -> f64 {
    let d = (a - b).rem_euclid(1.0);
    d.min(1.0 - d)
}

/// Symmetric Hausdorff distance between `s_true` and `s_hat` shifted by
/// `shift` (torus units).
fn hausdorff_at_shift(s_true: &[f64], s_hat: &[f64], shift: f64) -> f64 {
    let mut worst = 0.0f64;
    for &w in s_hat {
        let ws = (w + shift).rem_euclid(1.0);
        let nearest = s_true
            .iter()
            .map(|&v| wrap_distance(ws, v))
            .fold(f64::INFINITY, f64::min);
        worst = worst.max(nearest);
    }
    for &v in s_true {
        let nearest = s_hat
            .iter()
            .map(|&w| wrap_distance((w + shift).rem_euclid(1.0), v))
            .fold(f64::INFINITY, f64::min);
        worst = worst.max(nearest);
    }
    worst
}

/// Support error: the Hausdorff distance between the true set and the
/// recovered set shifted by `c2 / (2 pi)`, minimized over the translation
/// `c2`. Returns `(supp_error, c2_star)` with `c2_star` in `[0, 2 pi)`.
///
/// The objective is piecewise linear in the shift; its minimum sits at or
/// between pairwise alignments `omega_j - omega_hat_k`, so those serve as
/// candidates, followed by a local scan and golden-section refinement of the
/// bracket around the best candidate.
pub fn supp_error(s_true: &[f64], s_hat: &[f64]) -> (f64, f64) {
    assert!(!s_true.is_empty() && !s_hat.is_empty(), "sets must be nonempty");

    let mut candidates: Vec<f64> = Vec::with_capacity(s_true.len() * s_hat.len());
    for &v in s_true {
        for &w in s_hat {
            candidates.push((v - w).rem_euclid(1.0));
        }
    }
    candidates.sort_by(|a, b| a.partial_cmp(b).unwrap());
    candidates.dedup();

    let mut best_shift = candidates[0];
    let mut best = f64::INFINITY;
    for &c in &candidates {
        let h = hausdorff_at_shift(s_true, s_hat, c);
        if h < best {
            best = h;
            best_shift = c;
        }
    }

    // Bracket the best candidate by its circular neighbors; midpoint optima
    // live inside this interval.
    let idx = candidates
        .iter()
        .position(|&c| c == best_shift)
        .unwrap_or(0);
    let lo = if idx == 0 {
        candidates[candidates.len() - 1] - 1.0
    } else {
        candidates[idx - 1]
    };
    let hi = if idx + 1 == candidates.len() {
        candidates[0] + 1.0
    } else {
        candidates[idx + 1]
    };

    // The objective is a max of mins of V-shapes, so scan before refining.
    let scans = 512.max(8 * candidates.len());
    let mut scan_best = best_shift;
    let mut scan_val = best;
    for i in 0..=scans {
        let c = lo + (hi - lo) * i as f64 / scans as f64;
        let h = hausdorff_at_shift(s_true, s_hat, c);
        if h < scan_val {
            scan_val = h;
            scan_best = c;
        }
    }
    let width = (hi - lo) / scans as f64;
    let (mut a, mut b) = (scan_best - width, scan_best + width);
    let mut c = b - GOLDEN * (b - a);
    let mut d = a + GOLDEN * (b - a);
    let mut fc = hausdorff_at_shift(s_true, s_hat, c);
    let mut fd = hausdorff_at_shift(s_true, s_hat, d);
    while b - a > 1e-13 {
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - GOLDEN * (b - a);
            fc = hausdorff_at_shift(s_true, s_hat, c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + GOLDEN * (b - a);
            fd = hausdorff_at_shift(s_true, s_hat, d);
        }
    }
    let refined = (a + b) / 2.0;
    let refined_val = hausdorff_at_shift(s_true, s_hat, refined);
    let (err, shift) = if refined_val < best {
        (refined_val, refined)
    } else {
        (best, best_shift)
    };
    (err, (shift * std::f64::consts::TAU).rem_euclid(std::f64::consts::TAU))
}

/// Calibration alignment of `g_hat` against `g_true` after removing the
/// linear-phase ramp `e^{i n c2_star}` and the optimal complex scale.
#[derive(Debug, Clone)]
pub struct AlignmentResult {
    /// Translation (radians) taken from the support alignment.
    pub c2_star: f64,
    /// Least-squares optimal complex scale.
    pub c_star: Complex64,
    /// Support error carried through from [`supp_error`], in [0, 0.5].
    pub supp_error: f64,
    /// Per-sensor relative errors.
    pub cal_error_per_sensor: Vec<f64>,
    /// Mean relative calibration error.
    pub cal_error_mean: f64,
}

/// Relative calibration error after translation `c2_star`:
/// `g~_n = g_hat_n e^{-i n c2_star}`, `C* = <g, g~> / ||g||^2`, and
/// `CalError_n = |g~_n - C* g_n| / |g_n|`.
pub fn cal_error(
    g_true: &CVec,
    g_hat: &CVec,
    c2_star: f64,
) -> Result<(Complex64, Vec<f64>, f64), MetricsError> {
    if g_true.len() != g_hat.len() {
        return Err(MetricsError::LengthMismatch(g_true.len(), g_hat.len()));
    }
    for (n, z) in g_true.iter().enumerate() {
        if z.norm() == 0.0 {
            return Err(MetricsError::ZeroTrueGain(n));
        }
    }
    let n = g_true.len();
    let mut num = Complex64::ZERO;
    let mut den = 0.0f64;
    let aligned: Vec<Complex64> = (0..n)
        .map(|k| g_hat[k] * Complex64::from_polar(1.0, -(k as f64) * c2_star))
        .collect();
    for k in 0..n {
        num += g_true[k].conj() * aligned[k];
        den += g_true[k].norm_sqr();
    }
    let c_star = num / den;
    let per_sensor: Vec<f64> = (0..n)
        .map(|k| (aligned[k] - c_star * g_true[k]).norm() / g_true[k].norm())
        .collect();
    let mean = per_sensor.iter().sum::<f64>() / n as f64;
    Ok((c_star, per_sensor, mean))
}

/// Full alignment of a recovered (frequencies, gains) pair against the truth.
pub fn evaluate(
    s_true: &[f64],
    s_hat: &[f64],
    g_true: &CVec,
    g_hat: &CVec,
) -> Result<AlignmentResult, MetricsError> {
    let (se, c2) = supp_error(s_true, s_hat);
    let (c_star, per_sensor, mean) = cal_error(g_true, g_hat, c2)?;
    Ok(AlignmentResult {
        c2_star: c2,
        c_star,
        supp_error: se,
        cal_error_per_sensor: per_sensor,
        cal_error_mean: mean,
    })
}

/// Support recovery succeeds when the Hausdorff error is at most `0.2 / N`
/// (inclusive).
pub fn success_indicator(supp_error: f64, n: usize) -> bool {
    supp_error <= 0.2 / n as f64
}
