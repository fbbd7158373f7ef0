//! Regularized non-convex calibration: feasible-region scale from the
//! covariance, quadratic objective over (gains, Toeplitz sequence), Wirtinger
//! gradients, initialization from the algebraic method, and gradient descent
//! with backtracking line search followed by frequency localization.

use num_complex::Complex64;

use crate::algebraic::{run_partial_algebraic, AlgebraicOutput};
use crate::error::{Error, OptimError};
use crate::linalg::{toeplitz_of, CMat, CVec, HermitianMatrix, ToeplitzSpec};
use crate::music::{locate_frequencies, MusicConfig};
use crate::spectra::DenoisedCovariance;
use crate::{CalibrationResult, RunDiagnostics, Termination};

/// Coefficient of the default penalty-weight rule `rho = 3 (sqrt2 - 1)^-2 n0`.
pub fn default_rho(n0: f64) -> f64 {
    3.0 * n0 / (std::f64::consts::SQRT_2 - 1.0).powi(2)
}

/// Rule for the initial trial step of the line search.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum EtaBarRule {
    /// `eta_bar = L~(z) / ||grad L~(z)||` (the experimental default).
    ObjectiveOverGradient,
    /// A fixed initial trial step.
    Fixed(f64),
}

/// Step-size strategy for the descent loop.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum StepRule {
    /// Backtracking line search with sufficient decrease.
    Backtracking,
    /// Constant step, unconditionally applied; monotone whenever
    /// `eta <= 2 / C_Lip`.
    Fixed(f64),
}

#[derive(Debug, Clone)]
pub struct OptimConfig {
    /// Penalty weight; `None` selects `3 (sqrt2 - 1)^-2 n0_hat`. A supplied
    /// value below that rule is rejected.
    pub rho: Option<f64>,
    pub eta_bar: EtaBarRule,
    /// Backtracking shrink factor, in (0, 1).
    pub theta: f64,
    /// Sufficient-decrease constant, in (0, 1).
    pub c: f64,
    /// Line-search termination step.
    pub eta_min: f64,
    pub max_iters: usize,
    /// Gradient-norm stop; `None` selects `1e-9 * max(1, L~_0)`.
    pub grad_tol: Option<f64>,
    pub step_rule: StepRule,
}

impl Default for OptimConfig {
    fn default() -> Self {
        Self {
            rho: None,
            eta_bar: EtaBarRule::ObjectiveOverGradient,
            theta: 0.5,
            c: 0.5,
            eta_min: 1e-4,
            max_iters: 5_000,
            grad_tol: None,
            step_rule: StepRule::Backtracking,
        }
    }
}

impl OptimConfig {
    pub fn validate(&self) -> Result<(), OptimError> {
        if !(self.theta > 0.0 && self.theta < 1.0) {
            return Err(OptimError::InvalidConfig("theta must lie in (0, 1)"));
        }
        if !(self.c > 0.0 && self.c < 1.0) {
            return Err(OptimError::InvalidConfig("c must lie in (0, 1)"));
        }
        if !(self.eta_min > 0.0) {
            return Err(OptimError::InvalidConfig("eta_min must be positive"));
        }
        if self.max_iters == 0 {
            return Err(OptimError::InvalidConfig("max_iters must be positive"));
        }
        Ok(())
    }
}

/// Current iterate of the descent. The leading entry of `f` stays real; the
/// gradient's first f-component is real by construction.
#[derive(Debug, Clone)]
pub struct OptimState {
    pub g: CVec,
    pub f: CVec,
    pub iterate_index: usize,
    /// Regularized objective at this iterate (NaN until first evaluation).
    pub objective_value: f64,
    /// Joint gradient norm at this iterate (NaN until first evaluation).
    pub gradient_norm: f64,
}

/// One row of the solver trace.
#[derive(Debug, Clone, Copy)]
pub struct IterationRecord {
    pub iter: usize,
    /// Regularized objective at the start of the iteration.
    pub objective: f64,
    pub grad_norm: f64,
    /// Step accepted from this iterate; 0 on the terminal row.
    pub eta: f64,
    pub g_norm_sq: f64,
    pub f_norm: f64,
    pub im_f0_abs: f64,
}

/// Feasible-region scale `n0 = ||g||^2 ||f||` recovered from the covariance
/// alone: the trace supplies `||g||^2 f0` and each k-diagonal supplies
/// `|f_k|^2 / f0^2`, averaged over its N-k entries.
pub fn estimate_n0(r_hat: &HermitianMatrix) -> Result<f64, OptimError> {
    let m = r_hat.matrix();
    let n = m.nrows();
    let mut trace = 0.0f64;
    for i in 0..n {
        let d = m[(i, i)].re;
        if d <= 0.0 {
            return Err(OptimError::NonPositiveDiagonal { index: i, value: d });
        }
        trace += d;
    }
    let mut acc = 0.0f64;
    for k in 1..n {
        let mut sk = 0.0f64;
        for i in 0..n - k {
            sk += m[(i + k, i)].norm_sqr() / (m[(i + k, i + k)].re * m[(i, i)].re);
        }
        acc += sk / (n - k) as f64;
    }
    Ok(trace * (1.0 + acc).sqrt())
}

/// Quadratic fit loss `|| diag(g) T(f) diag(conj g) - r_hat ||_F^2`.
pub fn objective(g: &CVec, f: &CVec, r_hat: &CMat) -> f64 {
    residual(g, f, r_hat).norm().powi(2)
}

fn residual(g: &CVec, f: &CVec, r_hat: &CMat) -> CMat {
    let t = toeplitz_of(f);
    let n = g.len();
    CMat::from_fn(n, n, |i, j| g[i] * t[(i, j)] * g[j].conj() - r_hat[(i, j)])
}

fn hinge(z: f64) -> f64 {
    (z - 1.0).max(0.0)
}

/// Region penalty `G = rho [ G0(||f||^2 / 2 n0) + G0(||g||^2 / sqrt(2 n0)) ]`
/// with `G0(z) = max(z - 1, 0)^2`; zero on the feasible region.
pub fn penalty(g: &CVec, f: &CVec, n0: f64, rho: f64) -> f64 {
    let zf = f.norm_squared() / (2.0 * n0);
    let zg = g.norm_squared() / (2.0 * n0).sqrt();
    rho * (hinge(zf).powi(2) + hinge(zg).powi(2))
}

/// Regularized objective `L~ = L + G`.
pub fn regularized_objective(g: &CVec, f: &CVec, r_hat: &CMat, n0: f64, rho: f64) -> f64 {
    objective(g, f, r_hat) + penalty(g, f, n0, rho)
}

/// Wirtinger gradient of the regularized objective with respect to (g, f).
///
/// The f-gradient is the diagonal-sum operator applied to
/// `conj(diag(conj g) E diag(g))`, except that its first component is the
/// scalar derivative `sum_n |g_n|^2 Re(E_nn)` so that the directional
/// derivative identity `dL~/dt = 2 Re <dz, conj grad>` holds on the
/// real-leading-entry state space and `Im f_0` is preserved exactly.
pub fn gradient(g: &CVec, f: &CVec, r_hat: &CMat, n0: f64, rho: f64) -> (CVec, CVec) {
    let n = g.len();
    let t = toeplitz_of(f);
    let e = CMat::from_fn(n, n, |i, j| g[i] * t[(i, j)] * g[j].conj() - r_hat[(i, j)]);

    // grad_g L = 2 diag[ conj( T(f)* diag(conj g) E ) ].
    let mut grad_g = CVec::zeros(n);
    for col in 0..n {
        let mut acc = Complex64::ZERO;
        for row in 0..n {
            acc += t[(row, col)].conj() * g[row].conj() * e[(row, col)];
        }
        grad_g[col] = 2.0 * acc.conj();
    }

    // grad_f L via diagonal sums of X = conj(diag(conj g) E diag(g)).
    let mut grad_f = CVec::zeros(n);
    let mut first = 0.0f64;
    for i in 0..n {
        first += g[i].norm_sqr() * e[(i, i)].re;
    }
    grad_f[0] = Complex64::new(first, 0.0);
    for k in 1..n {
        let mut upper = Complex64::ZERO; // diag(X, k)
        let mut lower = Complex64::ZERO; // diag(X, -k)
        for i in 0..n - k {
            upper += (g[i].conj() * e[(i, i + k)] * g[i + k]).conj();
            lower += (g[i + k].conj() * e[(i + k, i)] * g[i]).conj();
        }
        grad_f[k] = upper + lower.conj();
    }

    // Penalty gradients: rho / sqrt(2 n0) G0'(.) g and rho / (2 n0) G0'(.) f.
    let root = (2.0 * n0).sqrt();
    let cg = rho / root * 2.0 * hinge(g.norm_squared() / root);
    let cf = rho / (2.0 * n0) * 2.0 * hinge(f.norm_squared() / (2.0 * n0));
    if cg != 0.0 {
        for i in 0..n {
            grad_g[i] += cg * g[i];
        }
    }
    if cf != 0.0 {
        for i in 0..n {
            grad_f[i] += cf * f[i];
        }
    }
    (grad_g, grad_f)
}

fn joint_norm(a: &CVec, b: &CVec) -> f64 {
    (a.norm_squared() + b.norm_squared()).sqrt()
}

/// Initial point from the algebraic output: `g0 = g_hat`, `f0_k` the mean of
/// the k-th subdiagonal of `F_hat`, then normalized onto
/// `||g0||^2 = sqrt(n0)`, `||f0|| = sqrt(n0)`.
pub fn initialize(alg: &AlgebraicOutput, n0: f64) -> Result<OptimState, OptimError> {
    let n = alg.g_hat.len();
    let fm = alg.f_matrix.matrix();
    let mut f = CVec::zeros(n);
    for k in 0..n {
        let mut acc = Complex64::ZERO;
        for i in 0..n - k {
            acc += fm[(i + k, i)];
        }
        f[k] = acc / (n - k) as f64;
    }
    // F_hat is Hermitian so f_0 is real; drop the rounding residue to start
    // the real-leading-entry invariant exactly.
    f[0] = Complex64::new(f[0].re, 0.0);
    let g = alg.g_hat.gains().clone();
    let g_norm = g.norm();
    let f_norm = f.norm();
    if g_norm == 0.0 || f_norm == 0.0 {
        return Err(OptimError::ZeroInitialVector);
    }
    let g = g.map(|z| z * (n0.powf(0.25) / g_norm));
    let f = f.map(|z| z * (n0.sqrt() / f_norm));
    Ok(OptimState {
        g,
        f,
        iterate_index: 0,
        objective_value: f64::NAN,
        gradient_norm: f64::NAN,
    })
}

/// Backtracking search shared by the optimizer and its tests: starting from
/// `eta_bar`, shrink by `theta` until
/// `eval(eta) <= l_current - c * eta * grad_norm_sq`. The first tested step
/// is `theta * eta_bar`.
pub fn backtrack_search(
    l_current: f64,
    grad_norm_sq: f64,
    eta_bar: f64,
    theta: f64,
    c: f64,
    eta_min: f64,
    mut eval: impl FnMut(f64) -> f64,
) -> Result<(f64, f64), OptimError> {
    let mut eta = eta_bar;
    loop {
        eta *= theta;
        if eta < eta_min {
            return Err(OptimError::StepUnderflow { eta_min });
        }
        let l_new = eval(eta);
        if l_new <= l_current - c * eta * grad_norm_sq {
            return Ok((eta, l_new));
        }
    }
}

/// One backtracking descent step from `state` along the negative gradient.
/// Requires a nonzero gradient; the caller stops at its gradient tolerance
/// first.
pub fn backtracking_step(
    state: &OptimState,
    r_hat: &CMat,
    n0: f64,
    rho: f64,
    cfg: &OptimConfig,
) -> Result<(f64, OptimState), OptimError> {
    let l = regularized_objective(&state.g, &state.f, r_hat, n0, rho);
    let (gg, gf) = gradient(&state.g, &state.f, r_hat, n0, rho);
    let grad_norm = joint_norm(&gg, &gf);
    debug_assert!(grad_norm > 0.0, "caller must stop at zero gradient");

    let eta_bar = match cfg.eta_bar {
        EtaBarRule::ObjectiveOverGradient => l / grad_norm,
        EtaBarRule::Fixed(v) => v,
    };
    let (eta, l_new) = backtrack_search(
        l,
        grad_norm * grad_norm,
        eta_bar,
        cfg.theta,
        cfg.c,
        cfg.eta_min,
        |eta| {
            let g = CVec::from_fn(state.g.len(), |i, _| state.g[i] - eta * gg[i]);
            let f = CVec::from_fn(state.f.len(), |i, _| state.f[i] - eta * gf[i]);
            regularized_objective(&g, &f, r_hat, n0, rho)
        },
    )?;
    let g = CVec::from_fn(state.g.len(), |i, _| state.g[i] - eta * gg[i]);
    let f = CVec::from_fn(state.f.len(), |i, _| state.f[i] - eta * gf[i]);
    Ok((
        eta,
        OptimState {
            g,
            f,
            iterate_index: state.iterate_index + 1,
            objective_value: l_new,
            gradient_norm: f64::NAN,
        },
    ))
}

/// Gradient Lipschitz constant on the feasible region, and thereby the safe
/// fixed-step rule `eta <= 2 / C_Lip`.
pub fn lipschitz_bound(n0: f64, r_residual_frobenius: f64, rho: f64) -> f64 {
    let scale = n0.sqrt().max(n0.powf(0.25));
    166.0 * n0 * scale + 8.0 * n0 + 16.0 * scale * r_residual_frobenius
        + 12.0 * rho / n0.min(n0.sqrt())
}

/// Largest fixed step covered by the descent guarantee for a given Lipschitz
/// constant.
pub fn lipschitz_max_step(c_lip: f64) -> f64 {
    2.0 / c_lip
}

/// Run the full optimization pipeline on a denoised covariance: algebraic
/// warm start, region scale, gradient descent, and frequency localization on
/// the Toeplitz matrix of the recovered sequence.
pub fn run_optimizer(
    r_hat: &DenoisedCovariance,
    s: usize,
    cfg: &OptimConfig,
    music_cfg: &MusicConfig,
) -> Result<CalibrationResult, Error> {
    cfg.validate()?;
    let alg = run_partial_algebraic(r_hat)?;
    let n0 = estimate_n0(&r_hat.r_hat)?;
    let rho_floor = default_rho(n0);
    let rho = match cfg.rho {
        None => rho_floor,
        Some(r) => {
            if r < rho_floor * (1.0 - 1e-12) {
                return Err(OptimError::RhoTooSmall {
                    rho: r,
                    required: rho_floor,
                }
                .into());
            }
            r
        }
    };

    let mut state = initialize(&alg, n0)?;
    let r = r_hat.r_hat.matrix();
    let mut trace: Vec<IterationRecord> = Vec::new();
    let mut termination = Termination::MaxIterations;

    let l0 = regularized_objective(&state.g, &state.f, r, n0, rho);
    let grad_tol = cfg.grad_tol.unwrap_or(1e-9 * l0.max(1.0));

    for iter in 0..cfg.max_iters {
        let l = regularized_objective(&state.g, &state.f, r, n0, rho);
        let (gg, gf) = gradient(&state.g, &state.f, r, n0, rho);
        let grad_norm = joint_norm(&gg, &gf);
        state.iterate_index = iter;
        state.objective_value = l;
        state.gradient_norm = grad_norm;
        let mut record = IterationRecord {
            iter,
            objective: l,
            grad_norm,
            eta: 0.0,
            g_norm_sq: state.g.norm_squared(),
            f_norm: state.f.norm(),
            im_f0_abs: state.f[0].im.abs(),
        };
        debug_assert!(record.im_f0_abs <= 1e-10 * (1.0 + state.f[0].norm()));

        if grad_norm <= grad_tol {
            trace.push(record);
            termination = Termination::GradientTolerance;
            break;
        }

        let step = match cfg.step_rule {
            StepRule::Backtracking => {
                let eta_bar = match cfg.eta_bar {
                    EtaBarRule::ObjectiveOverGradient => l / grad_norm,
                    EtaBarRule::Fixed(v) => v,
                };
                backtrack_search(
                    l,
                    grad_norm * grad_norm,
                    eta_bar,
                    cfg.theta,
                    cfg.c,
                    cfg.eta_min,
                    |eta| {
                        let g = CVec::from_fn(state.g.len(), |i, _| state.g[i] - eta * gg[i]);
                        let f = CVec::from_fn(state.f.len(), |i, _| state.f[i] - eta * gf[i]);
                        regularized_objective(&g, &f, r, n0, rho)
                    },
                )
                .map(|(eta, _)| eta)
            }
            StepRule::Fixed(eta) => Ok(eta),
        };

        match step {
            Ok(eta) => {
                record.eta = eta;
                trace.push(record);
                state.g = CVec::from_fn(state.g.len(), |i, _| state.g[i] - eta * gg[i]);
                state.f = CVec::from_fn(state.f.len(), |i, _| state.f[i] - eta * gf[i]);
            }
            Err(OptimError::StepUnderflow { .. }) => {
                trace.push(record);
                termination = Termination::StepUnderflow;
                break;
            }
            Err(e) => return Err(e.into()),
        }
    }

    let final_objective = regularized_objective(&state.g, &state.f, r, n0, rho);
    let (gg, gf) = gradient(&state.g, &state.f, r, n0, rho);
    let final_grad_norm = joint_norm(&gg, &gf);
    if trace.last().map(|t| t.eta != 0.0).unwrap_or(false) {
        trace.push(IterationRecord {
            iter: trace.len(),
            objective: final_objective,
            grad_norm: final_grad_norm,
            eta: 0.0,
            g_norm_sq: state.g.norm_squared(),
            f_norm: state.f.norm(),
            im_f0_abs: state.f[0].im.abs(),
        });
    }

    let f_spec = ToeplitzSpec::new(state.f.clone()).map_err(Error::from)?;
    let t_f = crate::linalg::toeplitz(&f_spec);
    let (peaks, degraded) = match locate_frequencies(&t_f, s, music_cfg) {
        Ok(p) => (p, false),
        Err(crate::error::MusicError::InsufficientPeaks { partial, .. }) => (partial, true),
        Err(e) => return Err(e.into()),
    };

    Ok(CalibrationResult {
        g_hat: state.g,
        f_hat: Some(state.f),
        peaks,
        degraded_peaks: degraded,
        trace,
        diagnostics: RunDiagnostics {
            sigma_hat: r_hat.sigma_hat,
            n0_hat: Some(n0),
            rho: Some(rho),
            final_objective: Some(final_objective),
            final_grad_norm: Some(final_grad_norm),
            termination: Some(termination),
        },
    })
}
