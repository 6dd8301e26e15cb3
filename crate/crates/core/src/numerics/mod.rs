//! Dense complex linear algebra and random sampling primitives.

mod eig;
mod rng;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::error::{Error, Result};

pub use eig::{eig_hermitian, Eigen};
pub use rng::{sample_complex_gaussian, stream_id, RngStream};

pub type C64 = Complex64;
pub type ComplexMatrix = DMatrix<C64>;
pub type ComplexVector = DVector<C64>;

/// Square complex matrix equal to its conjugate transpose.
#[derive(Debug, Clone, PartialEq)]
pub struct HermitianMatrix(ComplexMatrix);

impl HermitianMatrix {
    /// Wraps `m` after checking squareness, finiteness and Hermitian symmetry
    /// to `1e-12·max(1, ‖m‖_F)`. The stored matrix is the exact Hermitian part.
    pub fn new(m: ComplexMatrix) -> Result<Self> {
        if !m.is_square() {
            return Err(Error::InvalidInput(format!(
                "hermitian matrix must be square, got {}x{}",
                m.nrows(),
                m.ncols()
            )));
        }
        if m.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::InvalidInput("non-finite matrix entry".into()));
        }
        let asym = (&m - m.adjoint()).norm();
        if asym > 1e-12 * m.norm().max(1.0) {
            return Err(Error::InvalidInput(format!(
                "matrix is not Hermitian (asymmetry {asym:e})"
            )));
        }
        Ok(Self::from_hermitian_part(&m))
    }

    /// Hermitian part `(m + m^H)/2`, no checks beyond squareness.
    pub fn from_hermitian_part(m: &ComplexMatrix) -> Self {
        let mut h = (m + m.adjoint()) * C64::new(0.5, 0.0);
        for i in 0..h.nrows() {
            h[(i, i)].im = 0.0;
        }
        HermitianMatrix(h)
    }

    pub fn from_real_diagonal(d: &[f64]) -> Self {
        let n = d.len();
        let mut m = ComplexMatrix::zeros(n, n);
        for (i, &v) in d.iter().enumerate() {
            m[(i, i)] = C64::new(v, 0.0);
        }
        HermitianMatrix(m)
    }

    pub fn identity(n: usize) -> Self {
        HermitianMatrix(ComplexMatrix::identity(n, n))
    }

    /// `v v^H`.
    pub fn outer(v: &ComplexVector) -> Self {
        Self::from_hermitian_part(&(v * v.adjoint()))
    }

    pub fn dim(&self) -> usize {
        self.0.nrows()
    }

    pub fn as_matrix(&self) -> &ComplexMatrix {
        &self.0
    }

    pub fn into_matrix(self) -> ComplexMatrix {
        self.0
    }

    pub fn trace(&self) -> f64 {
        (0..self.dim()).map(|i| self.0[(i, i)].re).sum()
    }

    /// Real inner product `tr(self · other)` for Hermitian operands.
    pub fn inner(&self, other: &HermitianMatrix) -> f64 {
        hermitian_inner(&self.0, &other.0)
    }
}

/// `Re tr(a b)` for Hermitian `a`, `b`, i.e. `Σ_ij Re(a_ij conj(b_ij))`.
pub fn hermitian_inner(a: &ComplexMatrix, b: &ComplexMatrix) -> f64 {
    a.iter()
        .zip(b.iter())
        .map(|(x, y)| x.re * y.re + x.im * y.im)
        .sum()
}

/// Complex matrix product through four real products, which reach the
/// optimized real kernels for moderate sizes.
pub fn cmatmul(a: &ComplexMatrix, b: &ComplexMatrix) -> ComplexMatrix {
    if a.nrows() * a.ncols() * b.ncols() < 4096 {
        return a * b;
    }
    let ar = a.map(|z| z.re);
    let ai = a.map(|z| z.im);
    let br = b.map(|z| z.re);
    let bi = b.map(|z| z.im);
    let mut re = &ar * &br;
    re -= &ai * &bi;
    let mut im = &ar * &bi;
    im += &ai * &br;
    re.zip_map(&im, C64::new)
}

pub fn db_to_linear(x_db: f64) -> f64 {
    10f64.powf(x_db / 10.0)
}

pub fn linear_to_db(x: f64) -> f64 {
    10.0 * x.log10()
}

pub fn dbm_to_watts(x_dbm: f64) -> f64 {
    10f64.powf((x_dbm - 30.0) / 10.0)
}

pub fn watts_to_dbm(w: f64) -> f64 {
    10.0 * w.log10() + 30.0
}
