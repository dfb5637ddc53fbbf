use nalgebra::{DMatrix, DVector, SymmetricEigen};
use num_complex::Complex64;

use crate::error::{Error, Result};

const MAX_SWEEPS: usize = 10_000;

/// Real symmetric eigendecomposition (unsorted, as produced by the solver).
pub(crate) fn sym_eigen(m: &DMatrix<f64>) -> Result<(DVector<f64>, DMatrix<f64>)> {
    if m.nrows() == 0 {
        return Ok((DVector::zeros(0), DMatrix::zeros(0, 0)));
    }
    let eig = SymmetricEigen::try_new(m.clone(), f64::EPSILON, MAX_SWEEPS)
        .ok_or_else(|| Error::Decomposition("symmetric eigensolver did not converge".into()))?;
    Ok((eig.eigenvalues, eig.eigenvectors))
}

/// Hermitian eigendecomposition (unsorted).
pub(crate) fn herm_eigen(m: &DMatrix<Complex64>) -> Result<(DVector<f64>, DMatrix<Complex64>)> {
    if m.nrows() == 0 {
        return Ok((DVector::zeros(0), DMatrix::zeros(0, 0)));
    }
    let eig = SymmetricEigen::try_new(m.clone(), f64::EPSILON, MAX_SWEEPS)
        .ok_or_else(|| Error::Decomposition("hermitian eigensolver did not converge".into()))?;
    Ok((eig.eigenvalues, eig.eigenvectors))
}

/// Ascending eigenvalues of the Hermitian part of `m`.
pub(crate) fn herm_eigenvalues(m: &DMatrix<Complex64>) -> Result<Vec<f64>> {
    let h = (m + m.adjoint()) * Complex64::new(0.5, 0.0);
    let (vals, _) = herm_eigen(&h)?;
    let mut v: Vec<f64> = vals.iter().copied().collect();
    v.sort_by(f64::total_cmp);
    Ok(v)
}

pub(crate) fn max_abs(m: &DMatrix<f64>) -> f64 {
    m.iter().fold(0.0, |acc, x| acc.max(x.abs()))
}

pub(crate) fn max_abs_c(m: &DMatrix<Complex64>) -> f64 {
    m.iter().fold(0.0, |acc, x| acc.max(x.norm()))
}

pub(crate) fn real_to_complex(m: &DMatrix<f64>) -> DMatrix<Complex64> {
    m.map(|x| Complex64::new(x, 0.0))
}
