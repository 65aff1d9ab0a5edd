//! Trap configuration, the 6x6 dynamics matrix and the invariant
//! coefficients of its characteristic polynomial.
//!
//! Units: mass is fixed to 1, frequencies are in units of `frequency_unit`
//! and potential entries in units of its square.

use nalgebra::{Matrix3, Matrix6, SymmetricEigen, Vector3, Vector6};
use serde::{Deserialize, Serialize};

use crate::error::{ConfigError, ConfigIssue, Error, Result};
use crate::scalar::{lit, tol, to_f64, Real};

/// Symmetric positive-definite potential matrix `V`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrapPotential<T: Real> {
    v: Matrix3<T>,
}

impl<T: Real> TrapPotential<T> {
    /// Diagonal potential from its principal values `(Vx, Vy, Vz)`.
    pub fn from_diag(vx: T, vy: T, vz: T) -> Self {
        Self { v: Matrix3::from_diagonal(&Vector3::new(vx, vy, vz)) }
    }

    /// Full matrix; symmetry and positivity are checked by [`validate_config`].
    pub fn from_matrix(v: Matrix3<T>) -> Self {
        Self { v }
    }

    pub fn matrix(&self) -> &Matrix3<T> {
        &self.v
    }
}

/// Rotation rate `Ω >= 0` about the unit axis `n`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RotationSpec<T: Real> {
    pub omega: T,
    pub axis: Vector3<T>,
}

impl<T: Real> RotationSpec<T> {
    pub fn new(omega: T, axis: Vector3<T>) -> Self {
        Self { omega, axis }
    }

    pub fn angular_velocity(&self) -> Vector3<T> {
        self.axis * self.omega
    }

    /// Antisymmetric matrix with entries `Ω_ik = ε_ijk Ω_j`.
    pub fn omega_hat(&self) -> Matrix3<T> {
        omega_hat(&self.angular_velocity())
    }
}

/// `Ω_ik = ε_ijk Ω_j`, so that `(Ω̂ r) = Ω × r`.
pub fn omega_hat<T: Real>(w: &Vector3<T>) -> Matrix3<T> {
    let z = T::zero();
    Matrix3::new(z, -w.z, w.y, w.z, z, -w.x, -w.y, w.x, z)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrapConfig<T: Real> {
    pub potential: TrapPotential<T>,
    pub rotation: RotationSpec<T>,
    /// Frequency unit ω₀ used only to label reported values.
    pub frequency_unit: T,
}

impl<T: Real> TrapConfig<T> {
    pub fn new(potential: TrapPotential<T>, rotation: RotationSpec<T>) -> Self {
        Self { potential, rotation, frequency_unit: T::one() }
    }

    pub fn diag(vx: T, vy: T, vz: T, axis: Vector3<T>, omega: T) -> Self {
        Self::new(TrapPotential::from_diag(vx, vy, vz), RotationSpec::new(omega, axis))
    }
}

/// A configuration whose invariants have been checked.
///
/// The potential is exactly symmetric and the axis exactly unit length.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ValidatedConfig<T: Real> {
    cfg: TrapConfig<T>,
}

impl<T: Real> ValidatedConfig<T> {
    pub fn config(&self) -> &TrapConfig<T> {
        &self.cfg
    }

    pub fn v(&self) -> &Matrix3<T> {
        &self.cfg.potential.v
    }

    pub fn axis(&self) -> &Vector3<T> {
        &self.cfg.rotation.axis
    }

    pub fn omega(&self) -> T {
        self.cfg.rotation.omega
    }

    pub fn frequency_unit(&self) -> T {
        self.cfg.frequency_unit
    }

    pub fn omega_hat(&self) -> Matrix3<T> {
        self.cfg.rotation.omega_hat()
    }

    /// Same trap and axis at a different rotation rate.
    pub fn with_omega(&self, omega: T) -> Result<Self> {
        if !(omega >= T::zero()) || !omega.is_finite() {
            return Err(ConfigError { issues: vec![ConfigIssue::NegativeOmega { omega: to_f64(omega) }] }.into());
        }
        let mut cfg = self.cfg;
        cfg.rotation.omega = omega;
        Ok(Self { cfg })
    }

    /// `n·V·n`
    pub fn axial_potential(&self) -> T {
        let n = self.axis();
        n.dot(&(self.v() * n))
    }

    /// `n·V²·n`
    pub fn axial_potential_sq(&self) -> T {
        let vn = self.v() * self.axis();
        vn.dot(&vn)
    }

    /// True when the rotation axis is a principal axis of `V`.
    pub fn is_axis_aligned(&self) -> bool {
        let vn = self.v() * self.axis();
        let along = self.axis() * self.axial_potential();
        (vn - along).norm() <= tol::<T>(1e-9) * (T::one() + self.v().norm())
    }

    pub fn eigenvalues_of_v(&self) -> Vector3<T> {
        let mut e = SymmetricEigen::new(*self.v()).eigenvalues;
        e.as_mut_slice().sort_by(|a, b| a.partial_cmp(b).unwrap());
        e
    }
}

/// Checks every configuration invariant, collecting all violations.
///
/// The axis is renormalized when its length is within 1e-6 of one.
pub fn validate_config<T: Real>(cfg: TrapConfig<T>) -> Result<ValidatedConfig<T>, ConfigError> {
    let mut issues = Vec::new();
    let v = cfg.potential.v;
    let n = cfg.rotation.axis;
    let omega = cfg.rotation.omega;
    let finite = v.iter().chain(n.iter()).all(|x| x.is_finite())
        && omega.is_finite()
        && cfg.frequency_unit.is_finite();
    if !finite {
        return Err(ConfigError { issues: vec![ConfigIssue::NonFinite] });
    }

    let asymmetry = (v - v.transpose()).amax();
    if asymmetry > lit(1e-14) {
        issues.push(ConfigIssue::NonSymmetricPotential { asymmetry: to_f64(asymmetry) });
    }
    let sym = (v + v.transpose()) * lit::<T>(0.5);
    let min_eig = SymmetricEigen::new(sym).eigenvalues.min();
    if !(min_eig > T::zero()) {
        issues.push(ConfigIssue::NonPositivePotential { min_eigenvalue: to_f64(min_eig) });
    }

    let norm = n.norm();
    let mut axis = n;
    if norm <= T::default_epsilon() {
        issues.push(ConfigIssue::ZeroAxis);
    } else if (norm - T::one()).abs() > lit(1e-6) {
        issues.push(ConfigIssue::AxisNotUnit { norm: to_f64(norm) });
    } else {
        axis = n / norm;
    }

    if omega < T::zero() {
        issues.push(ConfigIssue::NegativeOmega { omega: to_f64(omega) });
    }
    if !(cfg.frequency_unit > T::zero()) {
        issues.push(ConfigIssue::NonPositiveFrequencyUnit { unit: to_f64(cfg.frequency_unit) });
    }

    if !issues.is_empty() {
        return Err(ConfigError { issues });
    }
    Ok(ValidatedConfig {
        cfg: TrapConfig {
            potential: TrapPotential { v: sym },
            rotation: RotationSpec { omega, axis },
            frequency_unit: cfg.frequency_unit,
        },
    })
}

/// Phase-space point ordered `(x, y, z, p_x, p_y, p_z)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhaseVector<T: Real>(pub Vector6<T>);

impl<T: Real> PhaseVector<T> {
    pub fn new(x: [T; 6]) -> Self {
        Self(Vector6::from_row_slice(&x))
    }

    pub fn zeros() -> Self {
        Self(Vector6::zeros())
    }

    pub fn position(&self) -> Vector3<T> {
        self.0.fixed_rows::<3>(0).into_owned()
    }

    pub fn momentum(&self) -> Vector3<T> {
        self.0.fixed_rows::<3>(3).into_owned()
    }

    pub fn is_finite(&self) -> bool {
        self.0.iter().all(|x| x.is_finite())
    }
}

impl<T: Real> crate::numerics::Rk4State<T> for PhaseVector<T> {
    fn add_scaled(&self, other: &Self, h: T) -> Self {
        Self(self.0 + other.0 * h)
    }

    fn is_finite(&self) -> bool {
        PhaseVector::is_finite(self)
    }
}

/// Generator of the phase-space flow `dX/dt = M X`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DynamicsMatrix<T: Real> {
    pub m: Matrix6<T>,
}

impl<T: Real> DynamicsMatrix<T> {
    pub fn apply(&self, x: &PhaseVector<T>) -> PhaseVector<T> {
        PhaseVector(self.m * x.0)
    }
}

/// Builds `M = [[-Ω̂, I], [-V, -Ω̂]]` for unit mass.
pub fn build_dynamics_matrix<T: Real>(cfg: &ValidatedConfig<T>) -> DynamicsMatrix<T> {
    let w = -cfg.omega_hat();
    let mut m = Matrix6::zeros();
    m.fixed_view_mut::<3, 3>(0, 0).copy_from(&w);
    m.fixed_view_mut::<3, 3>(0, 3).copy_from(&Matrix3::identity());
    m.fixed_view_mut::<3, 3>(3, 0).copy_from(&(-cfg.v()));
    m.fixed_view_mut::<3, 3>(3, 3).copy_from(&w);
    DynamicsMatrix { m }
}

/// Coefficients of `P(ω) = ω⁶ + A ω⁴ + B ω² + C`, equivalently of the cubic
/// `Q(χ) = χ³ + A χ² + B χ + C` with `χ = ω²`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CharPolyCoeffs<T> {
    pub a: T,
    pub b: T,
    pub c: T,
}

impl<T: Real> CharPolyCoeffs<T> {
    pub fn q(&self, chi: T) -> T {
        ((chi + self.a) * chi + self.b) * chi + self.c
    }

    pub fn q_complex(&self, chi: nalgebra::Complex<T>) -> nalgebra::Complex<T> {
        ((chi + self.a) * chi + self.b) * chi + self.c
    }

    pub fn p(&self, omega: T) -> T {
        self.q(omega * omega)
    }

    pub fn max_abs(&self) -> T {
        self.a.abs().max(self.b.abs()).max(self.c.abs())
    }
}

/// Closed-form rotationally invariant coefficients.
pub fn char_poly_coeffs<T: Real>(cfg: &ValidatedConfig<T>) -> CharPolyCoeffs<T> {
    let v = cfg.v();
    let w2 = cfg.omega() * cfg.omega();
    let tr = v.trace();
    let tr_sq = (v * v).trace();
    let nvn = cfg.axial_potential();
    let nv2n = cfg.axial_potential_sq();
    let two = lit::<T>(2.0);
    let a = -two * w2 - tr;
    let b = w2 * w2 + w2 * (lit::<T>(3.0) * nvn - tr) + (tr * tr - tr_sq) / two;
    let c = w2 * (tr - w2) * nvn - w2 * nv2n - v.determinant();
    CharPolyCoeffs { a, b, c }
}

/// Coefficients recovered from `det(λI - M)` at `λ = iω`.
///
/// The characteristic polynomial is expanded with Faddeev-LeVerrier, so this
/// path shares nothing with [`char_poly_coeffs`].
pub fn char_poly_from_matrix<T: Real>(m: &DynamicsMatrix<T>) -> Result<CharPolyCoeffs<T>> {
    // coeffs[k] multiplies λ^k in det(λI - M)
    let mut coeffs = [T::zero(); 7];
    coeffs[6] = T::one();
    let mut acc = Matrix6::<T>::zeros();
    for k in 1..=6 {
        acc = m.m * acc + Matrix6::identity() * coeffs[7 - k];
        coeffs[6 - k] = -(m.m * acc).trace() / lit(k as f64);
    }
    let even_scale = [coeffs[0], coeffs[2], coeffs[4], coeffs[6]]
        .iter()
        .fold(T::one(), |a, c| a.max(c.abs()));
    let odd_max = [coeffs[1], coeffs[3], coeffs[5]].iter().fold(T::zero(), |a, c| a.max(c.abs()));
    if odd_max > tol::<T>(1e-10) * even_scale {
        return Err(Error::OddPowersPresent { max: to_f64(odd_max) });
    }
    // λ = iω: λ⁶ = -ω⁶, λ⁴ = ω⁴, λ² = -ω²; normalise to +ω⁶.
    Ok(CharPolyCoeffs { a: -coeffs[4], b: coeffs[2], c: -coeffs[0] })
}
