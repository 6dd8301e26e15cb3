use nalgebra::SymmetricEigen;

use super::{ComplexMatrix, HermitianMatrix};
use crate::error::{Error, Result};

/// Eigendecomposition `a = U diag(values) U^H` with eigenvalues descending.
#[derive(Debug, Clone)]
pub struct Eigen {
    pub values: Vec<f64>,
    pub vectors: ComplexMatrix,
}

/// Hermitian eigendecomposition via Householder tridiagonalization and
/// implicit QR (nalgebra), reordered so eigenvalues descend.
pub fn eig_hermitian(a: &HermitianMatrix) -> Result<Eigen> {
    let n = a.dim();
    if n == 0 {
        return Err(Error::InvalidInput("empty matrix".into()));
    }
    let m = a.as_matrix();
    if m.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
        return Err(Error::InvalidInput("non-finite matrix entry".into()));
    }
    let se = SymmetricEigen::try_new(m.clone(), f64::EPSILON, 0)
        .ok_or_else(|| Error::Numerical("eigensolver did not converge".into()))?;
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| se.eigenvalues[j].total_cmp(&se.eigenvalues[i]));
    let values = order.iter().map(|&i| se.eigenvalues[i]).collect();
    let vectors = ComplexMatrix::from_fn(n, n, |r, c| se.eigenvectors[(r, order[c])]);
    Ok(Eigen { values, vectors })
}
