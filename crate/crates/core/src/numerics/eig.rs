use nalgebra::{Complex, ComplexField, DMatrix, DVector, Schur};

use crate::error::{Error, Result};
use crate::scalar::{tol, Real};

/// Eigenvalues of a real square matrix with one unit-norm eigenvector each.
#[derive(Debug, Clone)]
pub struct EigenDecomposition<T: Real> {
    pub values: Vec<Complex<T>>,
    pub vectors: Vec<DVector<Complex<T>>>,
}

impl<T: Real> EigenDecomposition<T> {
    /// Largest `|M v - λ v| / |v|` over all pairs.
    pub fn max_residual(&self, m: &DMatrix<T>) -> T {
        let mc = m.map(|x| Complex::new(x, T::zero()));
        self.values
            .iter()
            .zip(&self.vectors)
            .map(|(&l, v)| (&mc * v - v * l).norm() / v.norm())
            .fold(T::zero(), |a, b| a.max(b))
    }
}

/// Full eigen-decomposition of a small dense real matrix.
///
/// Eigenvalues come from the real Schur form; each eigenvector is the right
/// singular vector of `M - λI` with the smallest singular value. Clusters of
/// numerically equal eigenvalues take as many null vectors as their
/// multiplicity, which recovers distinct eigenvectors for semisimple
/// degeneracies. Defective clusters fall back to one vector per eigenvalue and
/// show up downstream as an ill-conditioned eigenvector matrix.
pub fn eig_general<T: Real>(m: &DMatrix<T>) -> Result<EigenDecomposition<T>> {
    let n = m.nrows();
    assert_eq!(n, m.ncols(), "eig_general needs a square matrix");
    if n == 0 {
        return Ok(EigenDecomposition { values: vec![], vectors: vec![] });
    }
    if m.iter().any(|x| !x.is_finite()) {
        return Err(Error::ConvergenceFailure);
    }
    let schur = Schur::try_new(m.clone(), T::default_epsilon(), 10_000).ok_or(Error::ConvergenceFailure)?;
    let mut values: Vec<Complex<T>> = schur.complex_eigenvalues().iter().copied().collect();
    // Real input: enforce exact conjugate symmetry of the spectrum.
    for v in values.iter_mut() {
        if v.im.abs() <= T::default_epsilon() * (T::one() + v.re.abs()) {
            v.im = T::zero();
        }
    }

    let scale = values.iter().fold(T::one(), |a, v| a.max(v.modulus()));
    let cluster_tol = tol::<T>(1e-9) * scale;
    let residual_tol = tol::<T>(1e-10) * scale;
    let mc = m.map(|x| Complex::new(x, T::zero()));

    let mut vectors: Vec<Option<DVector<Complex<T>>>> = vec![None; n];
    let mut assigned = vec![false; n];
    for i in 0..n {
        if assigned[i] {
            continue;
        }
        let members: Vec<usize> = (i..n)
            .filter(|&j| !assigned[j] && (values[j] - values[i]).modulus() <= cluster_tol)
            .collect();
        for &j in &members {
            assigned[j] = true;
        }
        let k = members.len();
        let centre = members.iter().fold(Complex::new(T::zero(), T::zero()), |a, &j| a + values[j])
            / Complex::new(T::from_usize(k).unwrap(), T::zero());
        let cands = null_vectors(&mc, centre, k)?;
        let ok = cands.iter().all(|v| (&mc * v - v * centre).norm() <= residual_tol);
        if ok {
            for (&j, v) in members.iter().zip(cands) {
                vectors[j] = Some(v);
            }
        } else {
            for &j in &members {
                vectors[j] = Some(null_vectors(&mc, values[j], 1)?.remove(0));
            }
        }
    }
    let vectors = vectors.into_iter().map(|v| v.expect("every eigenvalue assigned")).collect();
    Ok(EigenDecomposition { values, vectors })
}

fn null_vectors<T: Real>(mc: &DMatrix<Complex<T>>, shift: Complex<T>, k: usize) -> Result<Vec<DVector<Complex<T>>>> {
    let n = mc.nrows();
    let shifted = mc - DMatrix::<Complex<T>>::identity(n, n) * shift;
    let svd = shifted.try_svd(false, true, T::default_epsilon(), 10_000).ok_or(Error::ConvergenceFailure)?;
    let v_t = svd.v_t.ok_or(Error::ConvergenceFailure)?;
    let mut order: Vec<usize> = (0..svd.singular_values.len()).collect();
    order.sort_by(|&a, &b| {
        svd.singular_values[a]
            .partial_cmp(&svd.singular_values[b])
            .unwrap_or(std::cmp::Ordering::Equal)
    });
    Ok(order
        .into_iter()
        .take(k)
        .map(|idx| {
            let v: DVector<Complex<T>> = v_t.row(idx).adjoint();
            let norm = v.norm();
            v.map(|z| z / Complex::new(norm, T::zero()))
        })
        .collect())
}
