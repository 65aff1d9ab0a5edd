use nalgebra::{Complex, DMatrix, Matrix3, SMatrix, SymmetricEigen};

use crate::error::{Error, Result};
use crate::scalar::{lit, tol, to_f64, Real};

/// Induced 1-norm (largest absolute column sum).
pub fn norm1<T: Real, const R: usize, const C: usize>(m: &SMatrix<T, R, C>) -> T {
    m.column_iter()
        .map(|c| c.iter().fold(T::zero(), |a, x| a + x.abs()))
        .fold(T::zero(), |a, b| a.max(b))
}

/// Smallest eigenvalue of a symmetric real matrix.
pub fn posdef_min_eig<T: Real>(s: &DMatrix<T>) -> Result<T> {
    let asymmetry = (s - s.transpose()).amax();
    if asymmetry > tol(1e-10) {
        return Err(Error::NotSymmetric { asymmetry: to_f64(asymmetry) });
    }
    let sym = (s + s.transpose()) * lit::<T>(0.5);
    Ok(SymmetricEigen::new(sym).eigenvalues.min())
}

/// 2-norm condition number of a real matrix.
pub fn real_condition<T: Real>(m: &DMatrix<T>) -> T {
    condition_from(m.clone().singular_values().as_slice())
}

/// 2-norm condition number of a complex matrix.
pub fn complex_condition<T: Real>(m: &DMatrix<Complex<T>>) -> T {
    condition_from(m.clone().singular_values().as_slice())
}

fn condition_from<T: Real>(sv: &[T]) -> T {
    let max = sv.iter().fold(T::zero(), |a, &b| a.max(b));
    let min = sv.iter().fold(T::max_value().unwrap(), |a, &b| a.min(b));
    if min > T::zero() && min.is_finite() {
        max / min
    } else {
        T::max_value().unwrap()
    }
}

/// Inverse of a 3x3 complex matrix, refusing condition numbers above 1e12.
pub fn cinv3<T: Real>(m: &Matrix3<Complex<T>>) -> Result<Matrix3<Complex<T>>> {
    let cond = condition_from(m.singular_values().as_slice());
    if cond > lit(1e12) {
        return Err(Error::NearSingular { condition: to_f64(cond) });
    }
    m.try_inverse().ok_or(Error::NearSingular { condition: to_f64(cond) })
}
