//! Constant lab-frame gravity seen from the rotating frame, the resonance
//! condition `ω = Ω`, and growth diagnosis of forced trajectories.

use nalgebra::{Vector3, Vector6};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerics::{norm1, rk4_integrate, Trajectory};
use crate::scalar::{lit, to_f64, Real};
use crate::stability::{region_map, solve_cubic, RegionLabel};
use crate::trap::{build_dynamics_matrix, char_poly_coeffs, PhaseVector, ValidatedConfig};

/// Gravity split along and across the rotation axis.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DecomposedGravity<T: Real> {
    pub g_par: Vector3<T>,
    pub g_perp: Vector3<T>,
    pub axis: Vector3<T>,
}

pub fn decompose_gravity<T: Real>(g: &Vector3<T>, n: &Vector3<T>) -> DecomposedGravity<T> {
    let g_par = n * g.dot(n);
    DecomposedGravity { g_par, g_perp: g - g_par, axis: *n }
}

/// `g(t) = g∥ + g⊥ cos Ωt − (n × g⊥) sin Ωt`
pub fn gravity_in_rotating_frame<T: Real>(dg: &DecomposedGravity<T>, omega: T, t: T) -> Vector3<T> {
    let (s, c) = (omega * t).sin_cos();
    dg.g_par + dg.g_perp * c - dg.axis.cross(&dg.g_perp) * s
}

/// Coefficients of `D Ω⁴ + E Ω² + F = 0`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ResonanceCoeffs<T> {
    pub d: T,
    pub e: T,
    pub f: T,
}

impl<T: Real> ResonanceCoeffs<T> {
    pub fn eval(&self, omega: T) -> T {
        let w2 = omega * omega;
        (self.d * w2 + self.e) * w2 + self.f
    }

    pub fn discriminant(&self) -> T {
        self.e * self.e - lit::<T>(4.0) * self.d * self.f
    }
}

pub fn resonance_coefficients<T: Real>(cfg: &ValidatedConfig<T>) -> ResonanceCoeffs<T> {
    let v = cfg.v();
    let tr = v.trace();
    let nvn = cfg.axial_potential();
    let two = lit::<T>(2.0);
    let e2 = (tr * tr - (v * v).trace()) / two;
    ResonanceCoeffs {
        d: -two * (tr - nvn),
        e: e2 + tr * nvn - cfg.axial_potential_sq(),
        f: -v.determinant(),
    }
}

/// The two resonant rotation rates and the stability regions they fall in.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ResonanceReport<T> {
    pub omega1_sq: T,
    pub omega2_sq: T,
    pub region1: RegionLabel,
    pub region2: RegionLabel,
}

impl<T: Real> ResonanceReport<T> {
    pub fn omegas(&self) -> (T, T) {
        (self.omega1_sq.sqrt(), self.omega2_sq.sqrt())
    }
}

/// Roots `Ω₁² ≤ Ω₂²` of the resonance biquadratic.
pub fn resonance_roots<T: Real>(cfg: &ValidatedConfig<T>) -> Result<(T, T)> {
    let k = resonance_coefficients(cfg);
    if k.d.abs() < lit(1e-12) {
        return Err(Error::DegenerateD);
    }
    let disc = k.discriminant().max(T::zero());
    let two = lit::<T>(2.0);
    let q = -(k.e + k.e.signum() * disc.sqrt()) / two;
    let r1 = q / k.d;
    let r2 = if q != T::zero() { k.f / q } else { T::zero() };
    let (lo, hi) = if r1 <= r2 { (r1, r2) } else { (r2, r1) };
    if lo < T::zero() {
        return Err(Error::NoValidRoot);
    }
    Ok((lo, hi))
}

/// Resonant rates with region labels from the root classification at each.
pub fn resonant_frequencies<T: Real>(cfg: &ValidatedConfig<T>) -> Result<ResonanceReport<T>> {
    let (omega1_sq, omega2_sq) = resonance_roots(cfg)?;
    let map = region_map(cfg)?;
    Ok(ResonanceReport {
        omega1_sq,
        omega2_sq,
        region1: map.region_of(cfg, omega1_sq.sqrt())?,
        region2: map.region_of(cfg, omega2_sq.sqrt())?,
    })
}

/// Resonances plus the graphical check that each `Ωᵢ²` is a root of `Q` at `Ωᵢ`,
/// i.e. that the parabola `χ = Ω²` meets a characteristic branch there.
pub fn classify_resonances<T: Real>(cfg: &ValidatedConfig<T>) -> Result<(ResonanceReport<T>, [T; 2])> {
    let report = resonant_frequencies(cfg)?;
    let gap = |w2: T| -> Result<T> {
        let c = cfg.with_omega(w2.sqrt())?;
        let roots = solve_cubic(&char_poly_coeffs(&c));
        Ok(roots
            .roots
            .iter()
            .map(|z| (*z - nalgebra::Complex::new(w2, T::zero())).norm_sqr().sqrt() / (T::one() + w2))
            .fold(T::max_value().unwrap(), |a, b| a.min(b)))
    };
    Ok((report, [gap(report.omega1_sq)?, gap(report.omega2_sq)?]))
}

/// Largest admissible `dt · ‖M‖₁`.
pub const MAX_STEP_NORM: f64 = 0.1;

/// `(2π / max(Ω, max ωᵢ)) / 200`, capped to respect [`MAX_STEP_NORM`].
pub fn default_forced_dt<T: Real>(cfg: &ValidatedConfig<T>) -> T {
    let roots = solve_cubic(&char_poly_coeffs(cfg));
    let max_freq = roots
        .roots
        .iter()
        .map(|z| z.norm_sqr().sqrt().sqrt())
        .fold(cfg.omega(), |a, b| a.max(b));
    let m = build_dynamics_matrix(cfg);
    let cap = lit::<T>(MAX_STEP_NORM * 0.99) / norm1(&m.m);
    (T::two_pi() / max_freq / lit(200.0)).min(cap)
}

/// RK4 on `dX/dt = M X + (0, g(t))` from `X(0) = 0`.
pub fn forced_evolve<T: Real>(
    cfg: &ValidatedConfig<T>,
    g: &Vector3<T>,
    t_end: T,
    dt: T,
) -> Result<Trajectory<T, PhaseVector<T>>> {
    forced_evolve_from(cfg, g, PhaseVector::zeros(), t_end, dt)
}

pub fn forced_evolve_from<T: Real>(
    cfg: &ValidatedConfig<T>,
    g: &Vector3<T>,
    x0: PhaseVector<T>,
    t_end: T,
    dt: T,
) -> Result<Trajectory<T, PhaseVector<T>>> {
    let m = build_dynamics_matrix(cfg);
    let product = dt * norm1(&m.m);
    if product > lit(MAX_STEP_NORM) {
        return Err(Error::StepTooLarge { product: to_f64(product) });
    }
    let dg = decompose_gravity(g, cfg.axis());
    let omega = cfg.omega();
    rk4_integrate(
        move |t, x: &PhaseVector<T>| {
            let f = gravity_in_rotating_frame(&dg, omega, t);
            let mut dx = m.m * x.0;
            dx += Vector6::new(T::zero(), T::zero(), T::zero(), f.x, f.y, f.z);
            PhaseVector(dx)
        },
        x0,
        t_end,
        dt,
    )
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum GrowthClass {
    Bounded,
    LinearGrowth,
    ExponentialGrowth,
}

/// Least-squares line with goodness of fit.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LineFit<T> {
    pub slope: T,
    pub intercept: T,
    pub slope_se: T,
    pub r_squared: T,
}

pub fn fit_line<T: Real>(xs: &[T], ys: &[T]) -> LineFit<T> {
    let n = lit::<T>(xs.len() as f64);
    let mx = xs.iter().fold(T::zero(), |a, &b| a + b) / n;
    let my = ys.iter().fold(T::zero(), |a, &b| a + b) / n;
    let (mut sxx, mut sxy, mut syy) = (T::zero(), T::zero(), T::zero());
    for (&x, &y) in xs.iter().zip(ys) {
        sxx += (x - mx) * (x - mx);
        sxy += (x - mx) * (y - my);
        syy += (y - my) * (y - my);
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let sse = (syy - slope * sxy).max(T::zero());
    let r_squared = if syy > T::zero() { T::one() - sse / syy } else { T::zero() };
    let dof = (n - lit(2.0)).max(T::one());
    let slope_se = (sse / dof / sxx).sqrt();
    LineFit { slope, intercept, slope_se, r_squared }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GrowthReport<T> {
    pub class: GrowthClass,
    pub linear: LineFit<T>,
    /// Fit of `ln(peak)`; absent when a window peak is zero.
    pub log: Option<LineFit<T>>,
    pub peak_times: Vec<T>,
    pub peaks: Vec<T>,
}

/// Minimum trajectory length in rotation periods.
pub const MIN_PERIODS: f64 = 20.0;

/// Classifies the envelope of `|(x, y, z)|` from its per-period peaks.
///
/// The span is cut into consecutive windows of one `period`; the peak of
/// each window is fitted linearly and logarithmically against its time.
pub fn growth_classification<T: Real>(traj: &Trajectory<T, PhaseVector<T>>, period: T) -> Result<GrowthReport<T>> {
    let span = traj.span();
    let required = period * lit(MIN_PERIODS);
    if !(period > T::zero()) || span < required * (T::one() - lit(1e-9)) {
        return Err(Error::InsufficientSpan { span: to_f64(span), required: to_f64(required) });
    }
    let t0 = traj.times[0];
    let windows = (span / period).floor().to_usize().unwrap_or(0);
    let mut best: Vec<Option<(T, T)>> = vec![None; windows];
    for (t, x) in traj.iter() {
        let k = ((t - t0) / period).floor().to_usize().unwrap_or(usize::MAX);
        if k >= windows {
            continue;
        }
        let r = x.position().norm();
        if best[k].is_none_or(|(_, p)| r > p) {
            best[k] = Some((t, r));
        }
    }
    let (peak_times, peaks): (Vec<T>, Vec<T>) = best.into_iter().flatten().unzip();
    let linear = fit_line(&peak_times, &peaks);
    let log = if peaks.iter().all(|&p| p > T::zero()) {
        let logs: Vec<T> = peaks.iter().map(|p| p.ln()).collect();
        Some(fit_line(&peak_times, &logs))
    } else {
        None
    };
    let threshold = lit::<T>(0.99);
    let exponential = log.is_some_and(|l| {
        l.r_squared > threshold && l.slope > T::zero() && l.r_squared >= linear.r_squared
    });
    let class = if exponential {
        GrowthClass::ExponentialGrowth
    } else if linear.r_squared > threshold && linear.slope > lit::<T>(5.0) * linear.slope_se && linear.slope > T::zero() {
        GrowthClass::LinearGrowth
    } else {
        GrowthClass::Bounded
    };
    Ok(GrowthReport { class, linear, log, peak_times, peaks })
}
