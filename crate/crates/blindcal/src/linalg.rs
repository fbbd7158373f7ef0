//! Complex linear-algebra kernels shared by every other module: the Toeplitz
//! operator, its diagonal-sum adjoint, diagonal sandwich products, and a
//! sorted Hermitian eigendecomposition.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::error::LinalgError;

pub type CVec = DVector<Complex64>;
pub type CMat = DMatrix<Complex64>;

/// Relative Frobenius asymmetry allowed in a [`HermitianMatrix`].
pub const HERMITIAN_REL_TOL: f64 = 1e-10;

/// Relative bound on the imaginary part of the leading entry of a
/// [`ToeplitzSpec`] built from data.
pub const LEADING_ENTRY_REL_TOL: f64 = 1e-12;

/// Length-N sequence defining a Hermitian Toeplitz matrix.
///
/// The first entry is semantically real; construction rejects sequences whose
/// leading imaginary part exceeds `LEADING_ENTRY_REL_TOL` relative to |f0|.
#[derive(Debug, Clone, PartialEq)]
pub struct ToeplitzSpec {
    f: CVec,
}

impl ToeplitzSpec {
    pub fn new(f: CVec) -> Result<Self, LinalgError> {
        if f.len() < 2 {
            return Err(LinalgError::SequenceTooShort(f.len()));
        }
        let f0 = f[0];
        if f0.im.abs() > LEADING_ENTRY_REL_TOL * f0.norm() {
            return Err(LinalgError::NonRealLeadingEntry {
                im: f0.im.abs(),
                abs: f0.norm(),
            });
        }
        Ok(Self { f })
    }

    pub fn entries(&self) -> &CVec {
        &self.f
    }

    pub fn len(&self) -> usize {
        self.f.len()
    }

    pub fn is_empty(&self) -> bool {
        self.f.is_empty()
    }
}

/// N x N complex matrix with `||M - M*||_F <= 1e-10 * ||M||_F` checked on
/// construction.
#[derive(Debug, Clone, PartialEq)]
pub struct HermitianMatrix {
    m: CMat,
}

impl HermitianMatrix {
    pub fn new(m: CMat) -> Result<Self, LinalgError> {
        assert_eq!(m.nrows(), m.ncols(), "matrix must be square");
        let asymmetry = (&m - m.adjoint()).norm();
        let tolerance = HERMITIAN_REL_TOL * m.norm();
        if asymmetry > tolerance {
            return Err(LinalgError::NotHermitian {
                asymmetry,
                tolerance,
            });
        }
        Ok(Self { m })
    }

    /// Symmetrize `(M + M*)/2` and wrap without further checks.
    pub fn symmetrizing(m: CMat) -> Self {
        assert_eq!(m.nrows(), m.ncols(), "matrix must be square");
        let sym = (&m + m.adjoint()).scale(0.5);
        Self { m: sym }
    }

    pub fn matrix(&self) -> &CMat {
        &self.m
    }

    pub fn into_matrix(self) -> CMat {
        self.m
    }

    pub fn dim(&self) -> usize {
        self.m.nrows()
    }
}

/// Build the Hermitian Toeplitz matrix `T(f)` with `T[m][n] = f_{m-n}` on and
/// below the diagonal and `conj(f_{n-m})` above it.
pub fn toeplitz(spec: &ToeplitzSpec) -> HermitianMatrix {
    // Force the leading entry real so the result is exactly Hermitian; the
    // constructor already bounded its imaginary part.
    let mut f = spec.entries().clone();
    f[0] = Complex64::new(f[0].re, 0.0);
    HermitianMatrix { m: toeplitz_of(&f) }
}

/// Toeplitz matrix from an arbitrary complex sequence (total function; the
/// result is Hermitian only when `Im f0 = 0`).
pub fn toeplitz_of(f: &CVec) -> CMat {
    let n = f.len();
    CMat::from_fn(n, n, |m, k| {
        if m >= k {
            f[m - k]
        } else {
            f[k - m].conj()
        }
    })
}

/// Diagonal-sum operator mapping an N x N matrix back to a length-N sequence:
/// `out[k] = sum(diag(X, k)) + conj(sum(diag(X, -k)))` for `k >= 1`, and
/// `out[0] = 2 * Re(trace(X))`, which is real for every input.
pub fn toeplitz_adjoint(x: &CMat) -> CVec {
    let n = x.nrows();
    assert_eq!(n, x.ncols(), "matrix must be square");
    let mut out = CVec::zeros(n);
    let mut trace = Complex64::ZERO;
    for i in 0..n {
        trace += x[(i, i)];
    }
    out[0] = Complex64::new(2.0 * trace.re, 0.0);
    for k in 1..n {
        let mut upper = Complex64::ZERO; // diag(X, k)
        let mut lower = Complex64::ZERO; // diag(X, -k)
        for i in 0..n - k {
            upper += x[(i, i + k)];
            lower += x[(i + k, i)];
        }
        out[k] = upper + lower.conj();
    }
    out
}

/// `diag(g) * M * diag(conj h)`: entrywise `g_m * M[m][n] * conj(h_n)`.
pub fn sandwich(g: &CVec, m: &CMat, h: &CVec) -> CMat {
    assert_eq!(g.len(), m.nrows(), "row scaling length mismatch");
    assert_eq!(h.len(), m.ncols(), "column scaling length mismatch");
    CMat::from_fn(m.nrows(), m.ncols(), |i, j| g[i] * m[(i, j)] * h[j].conj())
}

/// Eigendecomposition of a Hermitian matrix, eigenvalues sorted descending.
#[derive(Debug, Clone)]
pub struct HermitianEig {
    /// Real eigenvalues in descending order.
    pub eigenvalues: Vec<f64>,
    /// Unitary matrix whose columns match `eigenvalues`.
    pub eigenvectors: CMat,
}

/// Diagonalize a Hermitian matrix. The accuracy contract is reconstruction:
/// `||M - V diag(lambda) V*||_F <= 1e-9 ||M||_F`.
pub fn hermitian_eig(m: &HermitianMatrix) -> HermitianEig {
    let n = m.dim();
    let eig = m
        .matrix()
        .clone()
        .try_symmetric_eigen(f64::EPSILON, 0)
        .expect("Hermitian eigensolver did not converge");
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].partial_cmp(&eig.eigenvalues[a]).unwrap());
    let eigenvalues: Vec<f64> = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let mut eigenvectors = CMat::zeros(n, n);
    for (dst, &src) in order.iter().enumerate() {
        eigenvectors.set_column(dst, &eig.eigenvectors.column(src));
    }
    HermitianEig {
        eigenvalues,
        eigenvectors,
    }
}

/// Spectral norm of a Hermitian matrix (largest |eigenvalue|).
pub fn spectral_norm(m: &HermitianMatrix) -> f64 {
    let eig = hermitian_eig(m);
    eig.eigenvalues
        .iter()
        .fold(0.0f64, |acc, &l| acc.max(l.abs()))
}

/// Largest singular value of an arbitrary complex matrix, via the Gram matrix.
pub fn largest_singular_value(a: &CMat) -> f64 {
    let gram = HermitianMatrix::symmetrizing(a.adjoint() * a);
    spectral_norm(&gram).max(0.0).sqrt()
}
