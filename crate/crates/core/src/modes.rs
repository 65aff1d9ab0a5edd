//! Normal modes `X(t) = X̄ exp(iωt)` of the rotating trap.

use nalgebra::{Complex, ComplexField, DMatrix, Matrix4, SVector, Vector3, Vector4};

use crate::error::{Error, Result};
use crate::numerics::{complex_condition, eig_general};
use crate::scalar::{lit, to_f64, Real};
use crate::trap::DynamicsMatrix;

/// One eigenmode, `M X̄ = iω X̄`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModeVector<T: Real> {
    pub omega: Complex<T>,
    pub xbar: SVector<Complex<T>, 6>,
}

impl<T: Real> ModeVector<T> {
    pub fn position(&self) -> Vector3<Complex<T>> {
        self.xbar.fixed_rows::<3>(0).into_owned()
    }

    pub fn momentum(&self) -> Vector3<Complex<T>> {
        self.xbar.fixed_rows::<3>(3).into_owned()
    }

    /// `|M X̄ − iω X̄| / |X̄|`
    pub fn residual(&self, m: &DynamicsMatrix<T>) -> T {
        let mc = m.m.map(|x| Complex::new(x, T::zero()));
        let lambda = Complex::new(T::zero(), T::one()) * self.omega;
        (mc * self.xbar - self.xbar * lambda).norm() / self.xbar.norm()
    }

    /// `−i X̄† J X̄`, real; its sign is the mode's energy sign.
    pub fn krein_signature(&self) -> T {
        let x = self.position();
        let p = self.momentum();
        // J = [[0, I], [−I, 0]]
        let pairing = x.dotc(&p) - p.dotc(&x);
        (Complex::new(T::zero(), -T::one()) * pairing).re
    }

    pub fn scaled(&self, c: Complex<T>) -> Self {
        ModeVector { omega: self.omega, xbar: self.xbar * c }
    }
}

fn normalize_largest<T: Real, const N: usize>(v: &SVector<Complex<T>, N>) -> SVector<Complex<T>, N> {
    let max = v.iter().fold(T::zero(), |a, z| a.max(z.modulus()));
    let cutoff = max * (T::one() - lit::<T>(1e-9));
    let pivot = v.iter().find(|z| z.modulus() >= cutoff).copied().unwrap_or(Complex::new(T::one(), T::zero()));
    let scaled = v / pivot;
    let mut out = scaled;
    for z in out.iter_mut() {
        if z.im.abs() <= T::default_epsilon() * (T::one() + z.re.abs()) * lit(4.0) {
            z.im = T::zero();
        }
    }
    out
}

/// All six modes with their time-reversal partners.
#[derive(Debug, Clone, PartialEq)]
pub struct ModeSet<T: Real> {
    /// Sorted by real part of ω, then imaginary part.
    pub modes: Vec<ModeVector<T>>,
    /// `partner[i]` is the mode at `−ω̄ᵢ` (at `−ωᵢ` for purely imaginary `ωᵢ`).
    pub partner: Vec<usize>,
}

impl<T: Real> ModeSet<T> {
    pub fn omegas(&self) -> Vec<Complex<T>> {
        self.modes.iter().map(|m| m.omega).collect()
    }

    /// The three distinct `ω²` values, one per pair.
    pub fn omega_squared(&self) -> Vec<Complex<T>> {
        let mut out = Vec::new();
        for (i, &j) in self.partner.iter().enumerate() {
            if i < j {
                out.push(self.modes[i].omega * self.modes[i].omega);
            }
        }
        out
    }

    /// Every frequency real within `tol` relative.
    pub fn is_stable(&self, tol: T) -> bool {
        self.modes.iter().all(|m| m.omega.im.abs() <= tol * (T::one() + m.omega.re.abs()))
    }

    /// The three modes with `ω > 0`, sorted by `|ω|` ascending. Stable spectra only.
    pub fn positive_modes(&self) -> Result<[ModeVector<T>; 3]> {
        let mut pos: Vec<ModeVector<T>> = self.modes.iter().copied().filter(|m| m.omega.re > T::zero()).collect();
        if pos.len() != 3 {
            return Err(Error::UnstableConfig);
        }
        pos.sort_by(|a, b| a.omega.re.partial_cmp(&b.omega.re).unwrap());
        Ok([pos[0], pos[1], pos[2]])
    }

    /// The mode at `−ω` for a real `ω`, i.e. the time-reversed partner.
    pub fn partner_of(&self, i: usize) -> &ModeVector<T> {
        &self.modes[self.partner[i]]
    }
}

/// Relative tolerance for matching `ω` with its partner.
pub const PAIRING_TOL: f64 = 1e-8;

/// Full eigen-decomposition of `M`, reported as frequencies `ω = λ/i`.
pub fn eigenmodes<T: Real>(m: &DynamicsMatrix<T>) -> Result<ModeSet<T>> {
    let dm = DMatrix::from_iterator(6, 6, m.m.iter().copied());
    let eig = eig_general(&dm)?;
    let vecs = DMatrix::from_columns(&eig.vectors);
    let cond = complex_condition(&vecs);
    if cond > lit(1e12) {
        return Err(Error::DefectiveMatrix { condition: to_f64(cond) });
    }
    let minus_i = Complex::new(T::zero(), -T::one());
    let mut modes: Vec<ModeVector<T>> = eig
        .values
        .iter()
        .zip(&eig.vectors)
        .map(|(&l, v)| ModeVector { omega: l * minus_i, xbar: normalize_largest(&SVector::<_, 6>::from_iterator(v.iter().copied())) })
        .collect();
    modes.sort_by(|a, b| {
        (a.omega.re, a.omega.im)
            .partial_cmp(&(b.omega.re, b.omega.im))
            .unwrap_or(std::cmp::Ordering::Equal)
    });

    let scale = modes.iter().fold(T::one(), |a, m| a.max(m.omega.modulus()));
    let tol = crate::scalar::tol::<T>(PAIRING_TOL) * scale;
    let mut partner = vec![usize::MAX; 6];
    for i in 0..6 {
        if partner[i] != usize::MAX {
            continue;
        }
        let w = modes[i].omega;
        let target = if w.re.abs() <= tol { -w } else { -w.conj() };
        let best = (0..6)
            .filter(|&j| j != i && partner[j] == usize::MAX)
            .min_by(|&a, &b| {
                (modes[a].omega - target)
                    .modulus()
                    .partial_cmp(&(modes[b].omega - target).modulus())
                    .unwrap()
            })
            .ok_or(Error::UnpairedFrequencies)?;
        if (modes[best].omega - target).modulus() > tol {
            return Err(Error::UnpairedFrequencies);
        }
        partner[i] = best;
        partner[best] = i;
    }
    Ok(ModeSet { modes, partner })
}

/// `(ω+², ω−²)` of the planar problem rotating about a principal axis.
pub fn planar_frequencies<T: Real>(vx: T, vy: T, omega: T) -> (T, T) {
    let two = lit::<T>(2.0);
    let w2 = omega * omega;
    let d = vx - vy;
    let root = (d * d + lit::<T>(8.0) * w2 * (vx + vy)).sqrt();
    let base = vx + vy + two * w2;
    ((base + root) / two, (base - root) / two)
}

/// Planar dynamics matrix on `(x, y, p_x, p_y)` for rotation about z.
pub fn planar_dynamics_matrix<T: Real>(vx: T, vy: T, omega: T) -> Matrix4<T> {
    let (o, z, one) = (omega, T::zero(), T::one());
    Matrix4::new(
        z, o, one, z, //
        -o, z, z, one, //
        -vx, z, z, o, //
        z, -vy, -o, z,
    )
}

/// Closed-form planar mode on `(x, y, p_x, p_y)`, unnormalized.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PlanarModeVector<T: Real> {
    pub omega: Complex<T>,
    pub xbar: Vector4<Complex<T>>,
}

impl<T: Real> PlanarModeVector<T> {
    pub fn normalized(&self) -> Self {
        PlanarModeVector { omega: self.omega, xbar: normalize_largest(&self.xbar) }
    }

    pub fn residual(&self, vx: T, vy: T, omega: T) -> T {
        let m = planar_dynamics_matrix(vx, vy, omega).map(|x| Complex::new(x, T::zero()));
        let lambda = Complex::new(T::zero(), T::one()) * self.omega;
        (m * self.xbar - self.xbar * lambda).norm() / self.xbar.norm()
    }
}

/// `(2iωΩ, Vx−ω²−Ω², Ω(Ω²−ω²−Vx), iω(Ω²−ω²+Vx))`
pub fn planar_mode_vector<T: Real>(omega_char: Complex<T>, vx: T, omega: T) -> Result<PlanarModeVector<T>> {
    let i = Complex::new(T::zero(), T::one());
    let w = omega_char;
    let w2 = w * w;
    let o = Complex::new(omega, T::zero());
    let o2 = o * o;
    let vx = Complex::new(vx, T::zero());
    let two = lit::<T>(2.0);
    let xbar = Vector4::new(i * w * o * two, vx - w2 - o2, o * (o2 - w2 - vx), i * w * (o2 - w2 + vx));
    let scale = T::one() + w2.modulus() + o2.modulus() + vx.modulus();
    let scale = scale * (T::one() + w.modulus());
    if xbar.iter().all(|z| z.modulus() <= lit::<T>(1e-12) * scale) {
        return Err(Error::DegenerateModeVector);
    }
    Ok(PlanarModeVector { omega: w, xbar })
}
