//! Gaussian wave packets `Ψ = C exp(−½ r·K·r)`: the matrix Riccati flow for
//! `K`, stationary states built from classical modes, the planar closed form,
//! and the Wigner function.

use nalgebra::{Complex, ComplexField, DMatrix, DVector, Matrix3};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gravity::MAX_STEP_NORM;
use crate::invariants::{build_invariant, invariant_null_space, InvariantLabel, QuadraticInvariant};
use crate::modes::{eigenmodes, ModeVector};
use crate::numerics::{cinv3, complex_condition, norm1, posdef_min_eig, rk4_integrate, Trajectory};
use crate::scalar::{lit, to_f64, Real};
use crate::stability::{classify_chi_roots, default_tolerance, region_map, solve_cubic, RegionLabel};
use crate::trap::{build_dynamics_matrix, char_poly_coeffs, ValidatedConfig};

/// Smallest eigenvalue of `Re K` accepted as normalizable.
pub const NORMALIZABLE_MIN_EIG: f64 = 1e-10;

/// Complex symmetric width matrix `K` in 1, 2 or 3 dimensions.
#[derive(Debug, Clone, PartialEq)]
pub struct GaussianState<T: Real> {
    pub k: DMatrix<Complex<T>>,
}

impl<T: Real> GaussianState<T> {
    pub fn new(k: DMatrix<Complex<T>>) -> Result<Self> {
        if k.nrows() != k.ncols() || k.nrows() == 0 || k.nrows() > 3 {
            return Err(Error::WrongDimension);
        }
        Ok(GaussianState { k })
    }

    pub fn from_matrix3(k: Matrix3<Complex<T>>) -> Self {
        GaussianState { k: DMatrix::from_iterator(3, 3, k.iter().copied()) }
    }

    pub fn dim(&self) -> usize {
        self.k.nrows()
    }

    pub fn matrix3(&self) -> Result<Matrix3<Complex<T>>> {
        if self.dim() != 3 {
            return Err(Error::WrongDimension);
        }
        Ok(Matrix3::from_iterator(self.k.iter().copied()))
    }

    pub fn re(&self) -> DMatrix<T> {
        self.k.map(|z| z.re)
    }

    pub fn im(&self) -> DMatrix<T> {
        self.k.map(|z| z.im)
    }

    /// `max |K − Kᵀ|`
    pub fn asymmetry(&self) -> T {
        (&self.k - self.k.transpose()).iter().fold(T::zero(), |a, z| a.max(z.modulus()))
    }

    /// Smallest eigenvalue of the symmetric part of `Re K`.
    pub fn min_re_eigenvalue(&self) -> T {
        let re = self.re();
        let sym = (&re + re.transpose()) * lit::<T>(0.5);
        posdef_min_eig(&sym).expect("symmetrised matrix")
    }

    pub fn is_normalizable(&self) -> bool {
        self.min_re_eigenvalue() > lit(NORMALIZABLE_MIN_EIG)
    }

    /// Restriction to the listed coordinates.
    pub fn section(&self, indices: &[usize]) -> Result<Self> {
        if indices.iter().any(|&i| i >= self.dim()) {
            return Err(Error::WrongDimension);
        }
        let n = indices.len();
        GaussianState::new(DMatrix::from_fn(n, n, |a, b| self.k[(indices[a], indices[b])]))
    }

    fn require_normalizable(&self) -> Result<T> {
        let min = self.min_re_eigenvalue();
        if min > lit(NORMALIZABLE_MIN_EIG) {
            Ok(min)
        } else {
            Err(Error::NotNormalizable { min_eigenvalue: to_f64(min) })
        }
    }
}

fn complexify<T: Real>(m: &Matrix3<T>) -> Matrix3<Complex<T>> {
    m.map(|x| Complex::new(x, T::zero()))
}

fn i_unit<T: Real>() -> Complex<T> {
    Complex::new(T::zero(), T::one())
}

fn riccati_rhs3<T: Real>(k: &Matrix3<Complex<T>>, v: &Matrix3<Complex<T>>, o: &Matrix3<Complex<T>>) -> Matrix3<Complex<T>> {
    let i = i_unit::<T>();
    -(k * k) * i + v * i - (o * k - k * o)
}

/// `dK/dt = −iK² + iV − [Ω̂, K]`
pub fn riccati_rhs<T: Real>(k: &GaussianState<T>, cfg: &ValidatedConfig<T>) -> Result<Matrix3<Complex<T>>> {
    let k = k.matrix3()?;
    Ok(riccati_rhs3(&k, &complexify(cfg.v()), &complexify(&cfg.omega_hat())))
}

/// Largest entry modulus of the Riccati right-hand side.
pub fn riccati_residual<T: Real>(k: &GaussianState<T>, cfg: &ValidatedConfig<T>) -> Result<T> {
    Ok(riccati_rhs(k, cfg)?.iter().fold(T::zero(), |a, z| a.max(z.modulus())))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum RiccatiMethod {
    /// RK4 on the Riccati equation itself.
    Direct,
    /// RK4 on `dD/dt = N − Ω̂D`, `dN/dt = −VD − Ω̂N` with `K = −iND⁻¹`.
    Linearized,
}

pub type RiccatiTrajectory<T> = Trajectory<T, Matrix3<Complex<T>>>;

/// Evolves `K` from `k0` up to `t_end`.
pub fn evolve_riccati<T: Real>(
    k0: &GaussianState<T>,
    cfg: &ValidatedConfig<T>,
    t_end: T,
    dt: T,
    method: RiccatiMethod,
) -> Result<RiccatiTrajectory<T>> {
    let k0m = k0.matrix3()?;
    k0.require_normalizable()?;
    let product = dt * norm1(&build_dynamics_matrix(cfg).m);
    if product > lit(MAX_STEP_NORM) {
        return Err(Error::StepTooLarge { product: to_f64(product) });
    }
    let v = complexify(cfg.v());
    let o = complexify(&cfg.omega_hat());
    match method {
        RiccatiMethod::Direct => rk4_integrate(move |_, k: &Matrix3<Complex<T>>| riccati_rhs3(k, &v, &o), k0m, t_end, dt),
        RiccatiMethod::Linearized => {
            let i = i_unit::<T>();
            let start = (Matrix3::<Complex<T>>::identity(), k0m * i);
            let traj = rk4_integrate(
                move |_, s: &(Matrix3<Complex<T>>, Matrix3<Complex<T>>)| {
                    let (d, n) = s;
                    (n - o * d, -(v * d) - o * n)
                },
                start,
                t_end,
                dt,
            )?;
            let mut states = Vec::with_capacity(traj.len());
            for (d, n) in &traj.states {
                let inv = cinv3(d).map_err(|e| match e {
                    Error::NearSingular { condition } => Error::SingularD { condition },
                    other => other,
                })?;
                states.push(-(n * inv) * i);
            }
            Ok(Trajectory { times: traj.times, states })
        }
    }
}

/// `K = −i 𝒩 𝒟⁻¹` from three modes, position parts as the columns of `𝒟` and
/// momentum parts as the columns of `𝒩`.
pub fn k_from_modes<T: Real>(modes: &[ModeVector<T>; 3]) -> Result<GaussianState<T>> {
    let d = Matrix3::from_columns(&[modes[0].position(), modes[1].position(), modes[2].position()]);
    let n = Matrix3::from_columns(&[modes[0].momentum(), modes[1].momentum(), modes[2].momentum()]);
    let inv = cinv3(&d).map_err(|_| {
        let dm = DMatrix::from_iterator(3, 3, d.iter().copied());
        Error::SingularModeMatrix { condition: to_f64(complex_condition(&dm)) }
    })?;
    Ok(GaussianState::from_matrix3(-(n * inv) * i_unit::<T>()))
}

/// Which of the three positive-frequency modes, sorted by `|ω|`, enter
/// with the opposite frequency sign in a given stability region.
pub fn sign_pattern(region: RegionLabel) -> Option<[bool; 3]> {
    match region {
        RegionLabel::S1 => Some([false, false, false]),
        RegionLabel::S2 => Some([true, false, false]),
        RegionLabel::S3 => Some([false, true, false]),
        RegionLabel::I1 | RegionLabel::I2 => None,
    }
}

/// The time-reversed partner at `−ω` of a real-frequency mode.
pub fn reverse_mode<T: Real>(mode: &ModeVector<T>) -> ModeVector<T> {
    ModeVector { omega: -mode.omega.conj(), xbar: mode.xbar.map(|z| z.conj()) }
}

/// Relative gap below which two `|ω|` count as degenerate.
pub const DEGENERACY_TOL: f64 = 1e-8;

/// Positive-frequency modes with negative Krein signature `−i X̄†JX̄`.
///
/// These are the modes that must enter `K` through their time-reversed
/// partners. Away from exact branch crossings this reproduces
/// [`sign_pattern`]; when an axial branch crosses a planar one (rotation
/// about a principal axis) the `|ω|` ordering changes but the signatures do not.
pub fn krein_pattern<T: Real>(modes: &[ModeVector<T>; 3]) -> [bool; 3] {
    std::array::from_fn(|k| modes[k].krein_signature() < T::zero())
}

/// Stationary state built from three modes, one per `±ω` pair, each taken
/// with positive Krein signature.
pub fn stationary_k_from_modes<T: Real>(cfg: &ValidatedConfig<T>) -> Result<GaussianState<T>> {
    let coeffs = char_poly_coeffs(cfg);
    let class = classify_chi_roots(&solve_cubic(&coeffs), default_tolerance(&coeffs))?;
    if !class.is_stable() {
        return Err(Error::InInstabilityRegion);
    }
    let region = region_map(cfg)?.region_of(cfg, cfg.omega())?;
    sign_pattern(region).ok_or(Error::InInstabilityRegion)?;
    let set = eigenmodes(&build_dynamics_matrix(cfg))?;
    let pos = set.positive_modes()?;
    let w_max = pos[2].omega.re;
    if pos[1].omega.re - pos[0].omega.re <= lit::<T>(DEGENERACY_TOL) * w_max
        || pos[2].omega.re - pos[1].omega.re <= lit::<T>(DEGENERACY_TOL) * w_max
    {
        return Err(Error::DegenerateFrequencies);
    }
    let pattern = krein_pattern(&pos);
    let selected: [ModeVector<T>; 3] =
        std::array::from_fn(|k| if pattern[k] { reverse_mode(&pos[k]) } else { pos[k] });
    let state = k_from_modes(&selected)?;
    state.require_normalizable()?;
    Ok(state)
}

/// Planar stationary state about a principal axis,
/// `K = [[α, iγ, 0], [iγ, β, 0], [0, 0, √Vz]]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PlanarStationaryK<T> {
    pub alpha: T,
    pub beta: T,
    pub gamma: T,
    /// `κ = (γ + Ω)/(γ − Ω)`; its sign records which branch satisfied the constraint.
    pub kappa: T,
    pub vz: T,
}

impl<T: Real> PlanarStationaryK<T> {
    pub fn matrix(&self) -> Matrix3<Complex<T>> {
        let z = Complex::new(T::zero(), T::zero());
        let ig = Complex::new(T::zero(), self.gamma);
        Matrix3::new(
            Complex::new(self.alpha, T::zero()),
            ig,
            z,
            ig,
            Complex::new(self.beta, T::zero()),
            z,
            z,
            z,
            Complex::new(self.vz.sqrt(), T::zero()),
        )
    }

    pub fn state(&self) -> GaussianState<T> {
        GaussianState::from_matrix3(self.matrix())
    }

    /// `α(Ω − γ) − β(Ω + γ)`
    pub fn constraint(&self, omega: T) -> T {
        self.alpha * (omega - self.gamma) - self.beta * (omega + self.gamma)
    }
}

/// Ground state of the non-rotating trap, `K = V^{1/2}`.
pub fn static_ground_state<T: Real>(cfg: &ValidatedConfig<T>) -> GaussianState<T> {
    let eig = nalgebra::SymmetricEigen::new(*cfg.v());
    let root = eig.eigenvectors * Matrix3::from_diagonal(&eig.eigenvalues.map(|x| x.sqrt())) * eig.eigenvectors.transpose();
    GaussianState::from_matrix3(complexify(&((root + root.transpose()) * lit::<T>(0.5))))
}

/// Closed-form stationary `K` for rotation about z with `V = diag(vx, vy, vz)`.
///
/// Both roots of the squared constraint `(Vx−Ω²)(Ω−γ)² = (Vy−Ω²)(Ω+γ)²` are
/// tried, negative `κ` first; the one satisfying `α(Ω−γ) = β(Ω+γ)` with real
/// positive `α, β` is returned.
pub fn planar_stationary_k<T: Real>(vx: T, vy: T, vz: T, omega: T) -> Result<PlanarStationaryK<T>> {
    let w2 = omega * omega;
    let den = vy - w2;
    if den == T::zero() {
        return Err(Error::NoValidRoot);
    }
    let ratio = (vx - w2) / den;
    if ratio < T::zero() {
        return Err(Error::ComplexKappa { ratio: to_f64(ratio) });
    }
    let two = lit::<T>(2.0);
    for sign in [-T::one(), T::one()] {
        let kappa = sign * ratio.sqrt();
        if (kappa - T::one()).abs() <= T::default_epsilon() {
            continue;
        }
        let gamma = omega * (kappa + T::one()) / (kappa - T::one());
        let a2 = vx + gamma * gamma + two * gamma * omega;
        let b2 = vy + gamma * gamma - two * gamma * omega;
        if !(a2 > T::zero() && b2 > T::zero()) {
            continue;
        }
        let sol = PlanarStationaryK { alpha: a2.sqrt(), beta: b2.sqrt(), gamma, kappa, vz };
        let scale = (T::one() + sol.alpha + sol.beta) * (T::one() + omega.abs() + gamma.abs());
        if sol.constraint(omega).abs() <= lit::<T>(1e-10) * scale {
            return Ok(sol);
        }
    }
    Err(Error::NoValidRoot)
}

/// `C = sqrt(det(Re K / √π))`
pub fn normalization_constant<T: Real>(k: &GaussianState<T>) -> Result<T> {
    k.require_normalizable()?;
    let re = k.re() / T::pi().sqrt();
    Ok(re.determinant().sqrt())
}

/// `W(X) = M exp(−½ X·Ŵ·X)` with `X = (r, p)`.
#[derive(Debug, Clone, PartialEq)]
pub struct WignerForm<T: Real> {
    pub w: DMatrix<T>,
    pub norm_const: T,
}

impl<T: Real> WignerForm<T> {
    pub fn dim(&self) -> usize {
        self.w.nrows() / 2
    }
}

/// Wigner function of the Gaussian with `K = A + iB`:
/// `Ŵ = 2 [[A + B A⁻¹ B, B A⁻¹], [A⁻¹ B, A⁻¹]]`, `M = π^(−d)`.
pub fn wigner_form<T: Real>(k: &GaussianState<T>) -> Result<WignerForm<T>> {
    k.require_normalizable()?;
    let d = k.dim();
    let a = k.re();
    let b = k.im();
    let a_inv = a.clone().try_inverse().ok_or(Error::NotNormalizable { min_eigenvalue: 0.0 })?;
    let two = lit::<T>(2.0);
    let mut w = DMatrix::zeros(2 * d, 2 * d);
    w.view_mut((0, 0), (d, d)).copy_from(&((&a + &b * &a_inv * &b) * two));
    w.view_mut((0, d), (d, d)).copy_from(&(&b * &a_inv * two));
    w.view_mut((d, 0), (d, d)).copy_from(&(&a_inv * &b * two));
    w.view_mut((d, d), (d, d)).copy_from(&(&a_inv * two));
    let w = (&w + w.transpose()) * lit::<T>(0.5);
    let norm_const = T::pi().powi(-(d as i32));
    Ok(WignerForm { w, norm_const })
}

/// Where the third basis form in three dimensions came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ThirdInvariant {
    /// The closed-form `C3` passed the invariance equations.
    Closed,
    /// The closed form failed; a null-space solution independent of `C1, C2` was used.
    NullSpace,
}

/// `Ŵ ≈ Σ cᵢ Gᵢ` over the invariant forms, i.e. `W = M exp(−Σ cᵢ Cᵢ)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WignerDecomposition<T> {
    pub labels: Vec<String>,
    pub coefficients: Vec<T>,
    /// `‖Ŵ − Σ cᵢ Gᵢ‖_F / ‖Ŵ‖_F`
    pub residual: T,
    /// `(k₁, k₂)` from the planar closed form, when `Vx ≠ Vy`.
    pub closed_form: Option<[T; 2]>,
    pub third: Option<ThirdInvariant>,
}

/// Residual threshold of the invariance equations for accepting the closed-form `C3`.
pub const C3_ACCEPT: f64 = 1e-8;

fn plane_of<T: Real>(cfg: &ValidatedConfig<T>) -> Result<(usize, usize, usize)> {
    let n = cfg.axis();
    let axis = (0..3).find(|&a| (n[a].abs() - T::one()).abs() <= lit(1e-12)).ok_or(Error::WrongDimension)?;
    if !cfg.is_axis_aligned() {
        return Err(Error::WrongDimension);
    }
    let (i, j) = match axis {
        0 => (1, 2),
        1 => (0, 2),
        _ => (0, 1),
    };
    Ok((axis, i, j))
}

fn restrict<T: Real>(inv: &QuadraticInvariant<T>, idx: &[usize]) -> DMatrix<T> {
    let g = inv.form();
    let d = idx.len();
    DMatrix::from_fn(2 * d, 2 * d, |a, b| {
        let ia = if a < d { idx[a] } else { idx[a - d] + 3 };
        let ib = if b < d { idx[b] } else { idx[b - d] + 3 };
        g[(ia, ib)]
    })
}

fn least_squares<T: Real>(target: &DMatrix<T>, basis: &[DMatrix<T>]) -> (Vec<T>, T) {
    let rows = target.len();
    let a = DMatrix::from_fn(rows, basis.len(), |r, c| basis[c][r]);
    let b = DVector::from_iterator(rows, target.iter().copied());
    let svd = a.clone().svd(true, true);
    let x = svd.solve(&b, T::default_epsilon()).expect("both factors computed");
    let fitted = &a * &x;
    let residual = (&b - fitted).norm() / b.norm();
    (x.iter().copied().collect(), residual)
}

/// Decomposes a stationary Wigner form onto the quadratic invariants.
///
/// Two-dimensional forms need rotation about a coordinate axis and are taken
/// in the perpendicular plane; three-dimensional forms use `C1`, `C2` and a
/// third invariant.
pub fn wigner_decompose_into_invariants<T: Real>(
    wf: &WignerForm<T>,
    cfg: &ValidatedConfig<T>,
) -> Result<WignerDecomposition<T>> {
    let c1 = build_invariant(InvariantLabel::C1, cfg)?;
    let (labels, basis, closed_form, third) = match wf.dim() {
        2 => {
            let (_, i, j) = plane_of(cfg)?;
            let c2 = build_invariant(InvariantLabel::C2_2D, cfg)?;
            let v = cfg.v();
            let (vx, vy) = (v[(i, i)], v[(j, j)]);
            let closed = if (vy - vx).abs() >= lit(1e-8) && v[(i, j)] == T::zero() {
                planar_stationary_k(vx, vy, T::one(), cfg.omega()).ok().map(|p| {
                    let two = lit::<T>(2.0);
                    let den = p.alpha * p.beta * (vy - vx);
                    [two * (p.beta * vy - p.alpha * vx) / den, two * (p.alpha - p.beta) / den]
                })
            } else {
                None
            };
            (vec!["C1".to_string(), "C2_2D".to_string()], vec![restrict(&c1, &[i, j]), restrict(&c2, &[i, j])], closed, None)
        }
        3 => {
            let idx = [0, 1, 2];
            let c2 = build_invariant(InvariantLabel::C2_3D, cfg)?;
            let c3 = build_invariant(InvariantLabel::C3, cfg)?;
            let g1 = restrict(&c1, &idx);
            let g2 = restrict(&c2, &idx);
            let scale = T::one() + c3.form().iter().fold(T::zero(), |a, x| a.max(x.abs()));
            let printed_ok = crate::invariants::invariance_residuals(&c3, cfg)
                .iter()
                .all(|&r| r < lit::<T>(C3_ACCEPT) * scale);
            let (g3, label, third) = if printed_ok {
                (restrict(&c3, &idx), "C3".to_string(), ThirdInvariant::Closed)
            } else {
                let space = invariant_null_space(cfg);
                let best = space
                    .basis
                    .iter()
                    .map(|inv| {
                        let g = restrict(inv, &idx);
                        let (_, r) = least_squares(&g, &[g1.clone(), g2.clone()]);
                        (r, g)
                    })
                    .max_by(|a, b| a.0.partial_cmp(&b.0).unwrap())
                    .ok_or(Error::NotInSpan { residual: 1.0 })?;
                (best.1, "N3".to_string(), ThirdInvariant::NullSpace)
            };
            (vec!["C1".to_string(), "C2_3D".to_string(), label], vec![g1, g2, g3], None, Some(third))
        }
        _ => return Err(Error::WrongDimension),
    };
    let (coefficients, residual) = least_squares(&wf.w, &basis);
    if !(residual <= lit(1e-6)) {
        return Err(Error::NotInSpan { residual: to_f64(residual) });
    }
    Ok(WignerDecomposition { labels, coefficients, residual, closed_form, third })
}
