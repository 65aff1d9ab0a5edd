//! Quadratic constants of motion `C = ½ p·T·p + r·W·p + ½ r·U·r`.

use nalgebra::{DMatrix, Matrix3, Matrix6};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::modes::ModeSet;
use crate::numerics::Trajectory;
use crate::scalar::{lit, Real};
use crate::trap::{PhaseVector, ValidatedConfig};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum InvariantLabel {
    C1,
    C2_2D,
    C2_3D,
    C3,
    /// Basis vector of the numerically computed solution space.
    NullSpace(usize),
}

impl InvariantLabel {
    pub fn name(&self) -> String {
        match self {
            InvariantLabel::C1 => "C1".into(),
            InvariantLabel::C2_2D => "C2_2D".into(),
            InvariantLabel::C2_3D => "C2_3D".into(),
            InvariantLabel::C3 => "C3".into(),
            InvariantLabel::NullSpace(i) => format!("N{i}"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadraticInvariant<T: Real> {
    pub t_mat: Matrix3<T>,
    pub w_mat: Matrix3<T>,
    pub u_mat: Matrix3<T>,
    pub label: InvariantLabel,
}

impl<T: Real> QuadraticInvariant<T> {
    /// `G` with `C = ½ Xᵀ G X`, i.e. `[[U, W], [Wᵀ, T]]`.
    pub fn form(&self) -> Matrix6<T> {
        let mut g = Matrix6::zeros();
        g.fixed_view_mut::<3, 3>(0, 0).copy_from(&self.u_mat);
        g.fixed_view_mut::<3, 3>(0, 3).copy_from(&self.w_mat);
        g.fixed_view_mut::<3, 3>(3, 0).copy_from(&self.w_mat.transpose());
        g.fixed_view_mut::<3, 3>(3, 3).copy_from(&self.t_mat);
        g
    }

    /// Restriction to the coordinate plane `(i, j)` as a `4×4` form on `(rᵢ, rⱼ, pᵢ, pⱼ)`.
    pub fn planar_form(&self, i: usize, j: usize) -> Matrix6<T> {
        let g = self.form();
        let idx = [i, j, i + 3, j + 3];
        let mut out = Matrix6::zeros();
        for (a, &ia) in idx.iter().enumerate() {
            for (b, &ib) in idx.iter().enumerate() {
                out[(a, b)] = g[(ia, ib)];
            }
        }
        out
    }
}

/// Builds one of the closed-form invariants.
pub fn build_invariant<T: Real>(label: InvariantLabel, cfg: &ValidatedConfig<T>) -> Result<QuadraticInvariant<T>> {
    let v = *cfg.v();
    let o = cfg.omega_hat();
    let o2 = o * o;
    let o3 = o2 * o;
    let id = Matrix3::identity();
    let c = lit::<T>;
    let (t_mat, w_mat, u_mat) = match label {
        InvariantLabel::C1 => (id, o, v),
        InvariantLabel::C2_2D => {
            if !cfg.is_axis_aligned() {
                return Err(Error::WrongDimension);
            }
            (v, o * v + v * o * c(2.0) + o3 * c(2.0), v * v + v * o2 - o * v * o)
        }
        InvariantLabel::C2_3D => (
            v - o2 * c(3.0),
            o * v + v * o * c(2.0) - o3,
            v * v - v * o2 - o2 * v - o * v * o,
        ),
        InvariantLabel::C3 => {
            let w2 = cfg.omega() * cfg.omega();
            let tr_v = v.trace();
            let tr_vo2 = (v * o2).trace();
            let o4 = o2 * o2;
            let o5 = o4 * o;
            let t = v * v * c(3.0) + o2 * v * c(4.0) + v * o2 * c(4.0) + o * v * o + v * (c(8.0) * w2)
                - (id * w2 - o2) * (c(13.0) * tr_v);
            let u = v * v * v * c(3.0) - v * o4 * c(2.0) - o4 * v * c(2.0) + o2 * v * o2 * c(3.0)
                - o * v * o * w2
                - v * v * o2 * c(3.0)
                - o2 * v * v * c(3.0)
                - o * v * v * o * c(3.0)
                - v * o2 * v * c(9.0)
                - v * o * v * o * c(6.0)
                - o * v * o * v * c(6.0)
                - v * v * (c(5.0) * w2)
                + v * (c(13.0) * tr_vo2);
            let w = -o5 * c(2.0) - v * o3 * c(2.0) + o3 * v * c(2.0) + o2 * v * o * c(7.0) + o * v * o2 * c(4.0)
                + o * v * v * c(3.0)
                + v * o * v * c(6.0)
                + v * v * o * c(6.0);
            (t, w, u)
        }
        InvariantLabel::NullSpace(_) => return Err(Error::WrongDimension),
    };
    Ok(QuadraticInvariant { t_mat, w_mat, u_mat, label })
}

fn max_abs<T: Real>(m: &Matrix3<T>) -> T {
    m.iter().fold(T::zero(), |a, x| a.max(x.abs()))
}

/// Max-norms of `[Ω,T]+W+Wᵀ`, `[Ω,U]−WV−VWᵀ`, `[Ω,W]+U−VT`.
pub fn invariance_residuals<T: Real>(inv: &QuadraticInvariant<T>, cfg: &ValidatedConfig<T>) -> [T; 3] {
    let o = cfg.omega_hat();
    let v = *cfg.v();
    let (t, w, u) = (inv.t_mat, inv.w_mat, inv.u_mat);
    [
        max_abs(&(o * t - t * o + w + w.transpose())),
        max_abs(&(o * u - u * o - w * v - v * w.transpose())),
        max_abs(&(o * w - w * o + u - v * t)),
    ]
}

pub fn evaluate_invariant<T: Real>(inv: &QuadraticInvariant<T>, x: &PhaseVector<T>) -> T {
    let r = x.position();
    let p = x.momentum();
    let half = lit::<T>(0.5);
    half * p.dot(&(inv.t_mat * p)) + r.dot(&(inv.w_mat * p)) + half * r.dot(&(inv.u_mat * r))
}

/// `max |C(t) − C(0)| / (1 + |C(0)|)` over the samples.
pub fn trajectory_drift<T: Real>(inv: &QuadraticInvariant<T>, traj: &Trajectory<T, PhaseVector<T>>) -> T {
    let Some(first) = traj.states.first() else {
        return T::zero();
    };
    let c0 = evaluate_invariant(inv, first);
    traj.states
        .iter()
        .map(|x| (evaluate_invariant(inv, x) - c0).abs() / (T::one() + c0.abs()))
        .fold(T::zero(), |a, b| a.max(b))
}

/// Solution space of the invariance equations found numerically.
#[derive(Debug, Clone, PartialEq)]
pub struct InvariantSpace<T: Real> {
    pub nullity: usize,
    pub singular_values: Vec<T>,
    pub basis: Vec<QuadraticInvariant<T>>,
}

const SYM_INDEX: [(usize, usize); 6] = [(0, 0), (1, 1), (2, 2), (0, 1), (0, 2), (1, 2)];

fn unpack<T: Real>(x: &[T]) -> (Matrix3<T>, Matrix3<T>, Matrix3<T>) {
    let mut t = Matrix3::zeros();
    let mut u = Matrix3::zeros();
    for (k, &(i, j)) in SYM_INDEX.iter().enumerate() {
        t[(i, j)] = x[k];
        t[(j, i)] = x[k];
        u[(i, j)] = x[6 + k];
        u[(j, i)] = x[6 + k];
    }
    let w = Matrix3::from_fn(|i, j| x[12 + 3 * i + j]);
    (t, w, u)
}

/// Treats the invariance equations as a homogeneous linear system in the
/// 21 unknowns of symmetric `T`, symmetric `U` and general `W`, and returns
/// its null space (singular values below `1e-10 · σmax`).
pub fn invariant_null_space<T: Real>(cfg: &ValidatedConfig<T>) -> InvariantSpace<T> {
    let mut a = DMatrix::<T>::zeros(27, 21);
    for col in 0..21 {
        let mut x = [T::zero(); 21];
        x[col] = T::one();
        let (t, w, u) = unpack(&x);
        let o = cfg.omega_hat();
        let v = *cfg.v();
        let blocks = [
            o * t - t * o + w + w.transpose(),
            o * u - u * o - w * v - v * w.transpose(),
            o * w - w * o + u - v * t,
        ];
        for (b, m) in blocks.iter().enumerate() {
            for (k, val) in m.iter().enumerate() {
                a[(9 * b + k, col)] = *val;
            }
        }
    }
    let svd = a.svd(false, true);
    let v_t = svd.v_t.expect("requested right singular vectors");
    let sv: Vec<T> = svd.singular_values.iter().copied().collect();
    let smax = sv.iter().fold(T::zero(), |m, &s| m.max(s));
    let cutoff = crate::scalar::tol::<T>(1e-10) * smax;
    let mut basis = Vec::new();
    for (k, &s) in sv.iter().enumerate() {
        if s <= cutoff {
            let row: Vec<T> = v_t.row(k).iter().copied().collect();
            let (t, w, u) = unpack(&row);
            basis.push(QuadraticInvariant { t_mat: t, w_mat: w, u_mat: u, label: InvariantLabel::NullSpace(basis.len()) });
        }
    }
    let mut sorted = sv.clone();
    sorted.sort_by(|a, b| b.partial_cmp(a).unwrap());
    InvariantSpace { nullity: basis.len(), singular_values: sorted, basis }
}

/// Per-mode energy terms `±ωₖ |aₖ|²` of a phase-space point.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AmplitudeDecomposition<T> {
    /// Positive frequencies sorted ascending.
    pub omegas: [T; 3],
    /// `ωₖ` times the sign of the mode's symplectic self-pairing.
    pub coefficients: [T; 3],
    /// `|aₖ|²` with modes normalized to self-pairing `±i`.
    pub amplitudes_sq: [T; 3],
    pub energies: [T; 3],
}

impl<T: Real> AmplitudeDecomposition<T> {
    pub fn total(&self) -> T {
        self.energies[0] + self.energies[1] + self.energies[2]
    }
}

/// Projects `x` onto the modes through the symplectic pairing `X̄ₖ† J X`.
pub fn amplitude_energies<T: Real>(modes: &ModeSet<T>, x: &PhaseVector<T>) -> Result<AmplitudeDecomposition<T>> {
    if !modes.is_stable(lit(1e-9)) {
        return Err(Error::UnstableConfig);
    }
    let selected = modes.positive_modes()?;
    let xc = x.0.map(|v| nalgebra::Complex::new(v, T::zero()));
    let j_apply = |y: &nalgebra::SVector<nalgebra::Complex<T>, 6>| {
        let mut out = *y;
        for i in 0..3 {
            out[i] = y[i + 3];
            out[i + 3] = -y[i];
        }
        out
    };
    let mut omegas = [T::zero(); 3];
    let mut coefficients = [T::zero(); 3];
    let mut amplitudes_sq = [T::zero(); 3];
    let mut energies = [T::zero(); 3];
    for (k, mode) in selected.iter().enumerate() {
        let s = mode.krein_signature();
        if s.abs() <= lit::<T>(1e-12) * mode.xbar.norm_squared() {
            return Err(Error::DegenerateFrequencies);
        }
        // rescale so that X̄†JX̄ = ±i, i.e. |s| = 1
        let scale = T::one() / s.abs().sqrt();
        let xbar = mode.xbar * nalgebra::Complex::new(scale, T::zero());
        let self_pair = xbar.dotc(&j_apply(&xbar));
        let a = xbar.dotc(&j_apply(&xc)) / self_pair;
        omegas[k] = mode.omega.re;
        coefficients[k] = mode.omega.re * s.signum();
        amplitudes_sq[k] = a.norm_sqr();
        energies[k] = coefficients[k] * amplitudes_sq[k];
    }
    Ok(AmplitudeDecomposition { omegas, coefficients, amplitudes_sq, energies })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::modes::eigenmodes;
    use crate::numerics::rk4_integrate;
    use crate::trap::{build_dynamics_matrix, validate_config, TrapConfig};
    use nalgebra::{Rotation3, Vector3};
    use proptest::prelude::*;

    fn cfg(v: [f64; 3], n: [f64; 3], omega: f64) -> ValidatedConfig<f64> {
        validate_config(TrapConfig::diag(v[0], v[1], v[2], Vector3::from(n), omega)).unwrap()
    }

    fn general_cfg(v: [f64; 3], angles: [f64; 3], n: Vector3<f64>, omega: f64) -> ValidatedConfig<f64> {
        let r = Rotation3::from_euler_angles(angles[0], angles[1], angles[2]);
        let vm = r.matrix() * Matrix3::from_diagonal(&Vector3::from(v)) * r.matrix().transpose();
        let vm = (vm + vm.transpose()) * 0.5;
        let c = TrapConfig::new(
            crate::trap::TrapPotential::from_matrix(vm),
            crate::trap::RotationSpec::new(omega, n.normalize()),
        );
        validate_config(c).unwrap()
    }

    #[test]
    fn c1_is_the_hamiltonian() {
        let c = cfg([1.0, 2.0, 3.0], [0.0, 0.0, 1.0], 2.0);
        let inv = build_invariant(InvariantLabel::C1, &c).unwrap();
        assert_eq!(evaluate_invariant(&inv, &PhaseVector::new([1.0, 0.0, 0.0, 0.0, 0.0, 0.0])), 0.5);
        assert_eq!(evaluate_invariant(&inv, &PhaseVector::new([0.0, 0.0, 0.0, 1.0, 0.0, 0.0])), 0.5);
        // H = p²/2 + r·V·r/2 − Ω·(r × p)
        let x = PhaseVector::new([1.0, 0.0, 0.0, 0.0, 1.0, 0.0]);
        let h = 0.5 + 0.5 - 2.0 * Vector3::z().dot(&x.position().cross(&x.momentum()));
        assert!((evaluate_invariant(&inv, &x) - h).abs() < 1e-15);
    }

    #[test]
    fn c2_3d_reduces_without_rotation() {
        let c = cfg([1.0, 2.0, 3.0], [0.6, 0.0, 0.8], 0.0);
        let inv = build_invariant(InvariantLabel::C2_3D, &c).unwrap();
        assert_eq!(inv.t_mat, *c.v());
        assert_eq!(inv.w_mat, Matrix3::zeros());
        assert_eq!(inv.u_mat, c.v() * c.v());
    }

    #[test]
    fn c2_3d_on_diagonal_axis() {
        let s = 1.0 / 3f64.sqrt();
        let c = cfg([1.0, 2.0, 3.0], [s, s, s], 1.0);
        let inv = build_invariant(InvariantLabel::C2_3D, &c).unwrap();
        let n = Vector3::new(s, s, s);
        let o2 = n * n.transpose() - Matrix3::identity();
        assert!((inv.t_mat - (c.v() - o2 * 3.0)).amax() < 1e-14);
        assert!(invariance_residuals(&inv, &c).iter().all(|&r| r < 1e-12));
    }

    #[test]
    fn c2_2d_needs_a_principal_axis() {
        let c = cfg([1.0, 2.0, 3.0], [0.6, 0.0, 0.8], 1.0);
        assert!(matches!(build_invariant(InvariantLabel::C2_2D, &c), Err(Error::WrongDimension)));
    }

    #[test]
    fn random_matrices_are_not_invariant() {
        let c = cfg([1.0, 2.0, 3.0], [0.6, 0.0, 0.8], 1.0);
        let inv = QuadraticInvariant {
            t_mat: Matrix3::new(1.0, 0.3, 0.0, 0.3, 2.0, 0.1, 0.0, 0.1, 1.0),
            w_mat: Matrix3::new(0.2, -0.5, 0.7, 0.1, 0.0, 0.4, -0.3, 0.9, 0.5),
            u_mat: Matrix3::new(2.0, 0.1, 0.4, 0.1, 1.0, 0.0, 0.4, 0.0, 3.0),
            label: InvariantLabel::NullSpace(0),
        };
        assert!(invariance_residuals(&inv, &c).iter().all(|&r| r > 0.1));
    }

    #[test]
    fn null_space_is_three_dimensional() {
        let c = general_cfg([1.0, 2.0, 3.5], [0.3, 1.1, -0.4], Vector3::new(0.2, 0.5, 0.9), 0.8);
        let space = invariant_null_space(&c);
        assert_eq!(space.nullity, 3);
        for inv in &space.basis {
            assert!(invariance_residuals(inv, &c).iter().all(|&r| r < 1e-10));
        }
    }

    #[test]
    fn drift_of_zero_trajectory_is_zero() {
        let c = cfg([1.0, 2.0, 3.0], [0.6, 0.0, 0.8], 0.5);
        let m = build_dynamics_matrix(&c);
        let traj = rk4_integrate(move |_, x: &PhaseVector<f64>| m.apply(x), PhaseVector::zeros(), 5.0, 0.01).unwrap();
        let inv = build_invariant(InvariantLabel::C2_3D, &c).unwrap();
        assert_eq!(trajectory_drift(&inv, &traj), 0.0);
    }

    #[test]
    fn invariants_conserved_along_rk4_trajectory() {
        let c = cfg([1.0, 2.0, 3.0], [0.6, 0.0, 0.8], 0.5);
        let m = build_dynamics_matrix(&c);
        let w_max = eigenmodes(&m).unwrap().omegas().iter().map(|w| w.re).fold(0.0, f64::max);
        let period = std::f64::consts::TAU / w_max;
        let x0 = PhaseVector::new([0.3, -0.2, 0.5, 0.1, 0.4, -0.3]);
        let traj = rk4_integrate(move |_, x: &PhaseVector<f64>| m.apply(x), x0, 20.0 * period, period / 400.0).unwrap();
        for label in [InvariantLabel::C1, InvariantLabel::C2_3D] {
            let inv = build_invariant(label, &c).unwrap();
            let d = trajectory_drift(&inv, &traj);
            assert!(d < 1e-8, "{label:?} {d}");
        }
    }

    #[test]
    fn amplitude_energies_static_trap() {
        let c = cfg([1.0, 2.0, 3.0], [0.0, 0.0, 1.0], 0.0);
        let modes = eigenmodes(&build_dynamics_matrix(&c)).unwrap();
        let x = PhaseVector::new([0.7, 0.0, 0.0, 0.2, 0.0, 0.0]);
        let d = amplitude_energies(&modes, &x).unwrap();
        let nonzero: Vec<f64> = d.energies.iter().copied().filter(|e| e.abs() > 1e-14).collect();
        assert_eq!(nonzero.len(), 1);
        assert!(nonzero[0] > 0.0);
        assert!((d.total() - 0.5 * (0.49 + 0.04)).abs() < 1e-12);
    }

    #[test]
    fn amplitude_energies_planar_s2_sign() {
        let c = cfg([1.0, 2.0, 3.0], [0.0, 0.0, 1.0], 1.8);
        let modes = eigenmodes(&build_dynamics_matrix(&c)).unwrap();
        let x = PhaseVector::new([0.3, -0.2, 0.1, 0.4, 0.2, -0.5]);
        let d = amplitude_energies(&modes, &x).unwrap();
        let h = evaluate_invariant(&build_invariant(InvariantLabel::C1, &c).unwrap(), &x);
        assert!((d.total() - h).abs() < 1e-8 * (1.0 + h.abs()));
        // the smallest planar frequency carries negative energy
        assert!(d.coefficients[0] < 0.0);
        assert!(d.coefficients[1] > 0.0 && d.coefficients[2] > 0.0);
    }

    #[test]
    fn amplitude_energies_need_stability() {
        let c = cfg([1.0, 2.0, 3.0], [0.0, 0.0, 1.0], 1.2);
        let m = build_dynamics_matrix(&c);
        let modes = eigenmodes(&m).unwrap();
        assert!(matches!(amplitude_energies(&modes, &PhaseVector::zeros()), Err(Error::UnstableConfig)));
    }

    proptest! {
        #[test]
        fn closed_form_invariants_satisfy_equations(
            v in prop::array::uniform3(0.2f64..4.0),
            angles in prop::array::uniform3(-3.0f64..3.0),
            n in prop::array::uniform3(-1.0f64..1.0),
            omega in 0.0f64..3.0,
        ) {
            let n = Vector3::from(n);
            prop_assume!(n.norm() > 0.1);
            let c = general_cfg(v, angles, n, omega);
            for label in [InvariantLabel::C1, InvariantLabel::C2_3D] {
                let inv = build_invariant(label, &c).unwrap();
                let r = invariance_residuals(&inv, &c);
                let scale = 1.0 + c.v().amax().powi(2) + omega.powi(3);
                prop_assert!(r.iter().all(|&x| x < 1e-10 * scale), "{label:?}: {r:?}");
            }
        }

        #[test]
        fn c2_2d_satisfies_equations_for_principal_axes(
            v in prop::array::uniform3(0.2f64..4.0), axis in 0usize..3, omega in 0.0f64..3.0,
        ) {
            let mut n = [0.0; 3];
            n[axis] = 1.0;
            let c = cfg(v, n, omega);
            let inv = build_invariant(InvariantLabel::C2_2D, &c).unwrap();
            let r = invariance_residuals(&inv, &c);
            let scale = 1.0 + 16.0 + omega.powi(3);
            prop_assert!(r.iter().all(|&x| x < 1e-10 * scale), "{r:?}");
        }

        #[test]
        fn mode_energies_sum_to_hamiltonian(
            v in prop::array::uniform3(0.3f64..4.0),
            n in prop::array::uniform3(-1.0f64..1.0),
            omega in 0.0f64..0.5,
            x in prop::array::uniform6(-1.0f64..1.0),
        ) {
            let n = Vector3::from(n);
            prop_assume!(n.norm() > 0.1);
            let c = cfg(v, n.normalize().into(), omega);
            let Ok(modes) = eigenmodes(&build_dynamics_matrix(&c)) else { return Ok(()) };
            prop_assume!(modes.is_stable(1e-9));
            let w: Vec<f64> = modes.positive_modes().unwrap().iter().map(|m| m.omega.re).collect();
            prop_assume!(w[1] - w[0] > 1e-3 && w[2] - w[1] > 1e-3);
            let x = PhaseVector::new(x);
            let d = amplitude_energies(&modes, &x).unwrap();
            let h = evaluate_invariant(&build_invariant(InvariantLabel::C1, &c).unwrap(), &x);
            prop_assert!((d.total() - h).abs() < 1e-8 * (1.0 + h.abs()));
            if omega < crate::stability::exponential_window(&c).0 {
                prop_assert!(d.coefficients.iter().all(|&k| k > 0.0));
            }
        }
    }
}
