//! Dense complex eigenvalues and spectral radii.

use nalgebra::{Complex, DMatrix, Dim, Matrix, Storage};

use crate::error::{Error, Result};

pub type C64 = Complex<f64>;
pub type CMat = DMatrix<C64>;

/// All eigenvalues of a square complex matrix. The two-grid symbols have
/// large defective zero blocks on which the nalgebra Schur iteration stalls,
/// so the dense eigensolver of `faer` is used.
pub fn eigenvalues<R, C, S>(m: &Matrix<C64, R, C, S>) -> Result<Vec<C64>>
where
    R: Dim,
    C: Dim,
    S: Storage<C64, R, C>,
{
    let (nr, nc) = m.shape();
    if nr != nc {
        return Err(Error::ShapeMismatch(format!(
            "eigenvalues need a square matrix, got {nr}x{nc}"
        )));
    }
    if m.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
        return Err(Error::Domain("matrix has non-finite entries".into()));
    }
    let dense = faer::Mat::<faer::c64>::from_fn(nr, nc, |i, j| {
        let z = m[(i, j)];
        faer::c64::new(z.re, z.im)
    });
    let ev = dense
        .eigenvalues()
        .map_err(|_| Error::EigenNoConvergence { dim: nr })?;
    Ok(ev.into_iter().map(|z| C64::new(z.re, z.im)).collect())
}

pub fn spectral_radius<R, C, S>(m: &Matrix<C64, R, C, S>) -> Result<f64>
where
    R: Dim,
    C: Dim,
    S: Storage<C64, R, C>,
{
    Ok(eigenvalues(m)?.iter().map(|z| z.norm()).fold(0.0, f64::max))
}

/// Spectral radius of a real matrix.
pub fn spectral_radius_real(m: &DMatrix<f64>) -> Result<f64> {
    spectral_radius(&m.map(|x| C64::new(x, 0.0)))
}

/// Eigenvalues of a real matrix.
pub fn eigenvalues_real(m: &DMatrix<f64>) -> Result<Vec<C64>> {
    eigenvalues(&m.map(|x| C64::new(x, 0.0)))
}
