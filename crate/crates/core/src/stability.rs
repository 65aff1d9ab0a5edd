//! Roots of the cubic `Q(χ)`, stability classification, the exponential and
//! oscillatory instability windows, and Ω scans.

use nalgebra::{Complex, ComplexField, Matrix3, Schur};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerics::OmegaRange;
use crate::scalar::{lit, to_f64, Real};
use crate::trap::{char_poly_coeffs, CharPolyCoeffs, ValidatedConfig};

/// The three roots `χ = ω²` of `Q(χ)`, sorted by real then imaginary part.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChiRoots<T: Real> {
    pub roots: [Complex<T>; 3],
}

impl<T: Real> ChiRoots<T> {
    pub fn sum(&self) -> Complex<T> {
        self.roots[0] + self.roots[1] + self.roots[2]
    }

    pub fn pairwise_sum(&self) -> Complex<T> {
        let [a, b, c] = self.roots;
        a * b + b * c + a * c
    }

    pub fn product(&self) -> Complex<T> {
        self.roots[0] * self.roots[1] * self.roots[2]
    }

    /// Largest relative Vieta mismatch against the generating coefficients.
    pub fn vieta_error(&self, k: &CharPolyCoeffs<T>) -> T {
        let rel = |got: Complex<T>, want: T| (got - Complex::new(want, T::zero())).modulus() / (T::one() + want.abs());
        rel(self.sum(), -k.a).max(rel(self.pairwise_sum(), k.b)).max(rel(self.product(), -k.c))
    }

    pub fn is_all_real(&self) -> bool {
        self.roots.iter().all(|z| z.im == T::zero())
    }
}

fn sort_roots<T: Real>(roots: &mut [Complex<T>; 3]) {
    roots.sort_by(|a, b| (a.re, a.im).partial_cmp(&(b.re, b.im)).unwrap_or(std::cmp::Ordering::Equal));
}

fn polish_real<T: Real>(k: &CharPolyCoeffs<T>, mut x: T) -> T {
    let three = lit::<T>(3.0);
    let two = lit::<T>(2.0);
    for _ in 0..3 {
        let d = (three * x + two * k.a) * x + k.b;
        if d == T::zero() {
            break;
        }
        let next = x - k.q(x) / d;
        if next.is_finite() && k.q(next).abs() < k.q(x).abs() {
            x = next;
        } else {
            break;
        }
    }
    x
}

fn polish_complex<T: Real>(k: &CharPolyCoeffs<T>, mut z: Complex<T>) -> Complex<T> {
    let three = lit::<T>(3.0);
    let two = lit::<T>(2.0);
    for _ in 0..3 {
        let d = (z * three + two * k.a) * z + k.b;
        if d.modulus() == T::zero() {
            break;
        }
        let next = z - k.q_complex(z) / d;
        if next.re.is_finite() && next.im.is_finite() && k.q_complex(next).modulus() < k.q_complex(z).modulus() {
            z = next;
        } else {
            break;
        }
    }
    z
}

/// Roots of `χ³ + Aχ² + Bχ + C`.
///
/// A real root is located from the companion-matrix eigenvalues and polished
/// by Newton's method; the remaining pair comes from the deflated quadratic,
/// whose discriminant decides between a real pair and a conjugate pair.
pub fn solve_cubic<T: Real>(k: &CharPolyCoeffs<T>) -> ChiRoots<T> {
    let nan = Complex::new(lit::<T>(f64::NAN), lit::<T>(f64::NAN));
    let companion = Matrix3::new(-k.a, -k.b, -k.c, T::one(), T::zero(), T::zero(), T::zero(), T::one(), T::zero());
    let eig = match Schur::try_new(companion, T::default_epsilon(), 10_000) {
        Some(s) => s.complex_eigenvalues(),
        None => return ChiRoots { roots: [nan; 3] },
    };
    let near_real = |z: &Complex<T>| z.im.abs() <= lit::<T>(1e-8) * (T::one() + z.modulus());
    let mut candidates: Vec<Complex<T>> = eig.iter().copied().filter(near_real).collect();
    if candidates.is_empty() {
        let closest = eig
            .iter()
            .copied()
            .min_by(|a, b| a.im.abs().partial_cmp(&b.im.abs()).unwrap())
            .unwrap();
        candidates.push(closest);
    }
    let seed = candidates
        .iter()
        .min_by(|a, b| a.re.abs().partial_cmp(&b.re.abs()).unwrap())
        .unwrap()
        .re;
    let r0 = polish_real(k, seed);

    // Q(χ) = (χ - r0)(χ² + pχ + q)
    let p = k.a + r0;
    let q = k.b + r0 * p;
    let four = lit::<T>(4.0);
    let two = lit::<T>(2.0);
    let disc = p * p - four * q;
    let noise = lit::<T>(1e-13) * (p * p + four * q.abs());
    let (r1, r2) = if disc.abs() <= noise {
        let x = polish_real(k, -p / two);
        (Complex::new(x, T::zero()), Complex::new(x, T::zero()))
    } else if disc > T::zero() {
        let s = disc.sqrt();
        let big = if p >= T::zero() { -(p + s) / two } else { (s - p) / two };
        let small = if big != T::zero() { q / big } else { T::zero() };
        (
            Complex::new(polish_real(k, big), T::zero()),
            Complex::new(polish_real(k, small), T::zero()),
        )
    } else {
        let z = polish_complex(k, Complex::new(-p / two, (-disc).sqrt() / two));
        let z = if z.im < T::zero() { z.conj() } else { z };
        (z, z.conj())
    };
    let mut roots = [Complex::new(r0, T::zero()), r1, r2];
    sort_roots(&mut roots);
    ChiRoots { roots }
}

/// Discriminant of the monic cubic together with the magnitude of its terms.
///
/// Positive: three distinct real roots. Negative: one real root and a
/// conjugate pair.
pub fn cubic_discriminant<T: Real>(k: &CharPolyCoeffs<T>) -> (T, T) {
    let (a, b, c) = (k.a, k.b, k.c);
    let terms = [
        lit::<T>(18.0) * a * b * c,
        -lit::<T>(4.0) * a * a * a * c,
        a * a * b * b,
        -lit::<T>(4.0) * b * b * b,
        -lit::<T>(27.0) * c * c,
    ];
    let value = terms.iter().fold(T::zero(), |s, &t| s + t);
    let scale = terms.iter().fold(T::zero(), |s, t| s + t.abs());
    (value, scale)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum StabilityClass {
    Stable,
    /// All roots real, one negative (index into the sorted roots).
    ExponentialInstability { root: usize },
    /// A conjugate pair; `root` indexes the member with positive imaginary part.
    OscillatoryInstability { root: usize },
}

impl StabilityClass {
    pub fn name(&self) -> &'static str {
        match self {
            StabilityClass::Stable => "Stable",
            StabilityClass::ExponentialInstability { .. } => "ExponentialInstability",
            StabilityClass::OscillatoryInstability { .. } => "OscillatoryInstability",
        }
    }

    pub fn is_stable(&self) -> bool {
        matches!(self, StabilityClass::Stable)
    }
}

/// `1e-9 · max(1, |A|, |B|, |C|)`
pub fn default_tolerance<T: Real>(k: &CharPolyCoeffs<T>) -> T {
    crate::scalar::tol::<T>(1e-9) * T::one().max(k.max_abs())
}

/// Classifies the roots of `Q`.
///
/// A conjugate pair whose imaginary part is below `sqrt(tol)` is
/// indistinguishable from a near-double real root and is reported as
/// ambiguous, as is any real root within `tol` of zero.
pub fn classify_chi_roots<T: Real>(roots: &ChiRoots<T>, tol: T) -> Result<StabilityClass> {
    let band = tol.sqrt();
    let mut complex_idx = None;
    for (i, z) in roots.roots.iter().enumerate() {
        let scale = T::one() + z.modulus();
        if z.im.abs() > tol * scale {
            if z.im.abs() <= band * scale {
                return Err(Error::AmbiguousClassification {
                    reason: format!("root {i} has imaginary part {} near the real axis", to_f64(z.im)),
                });
            }
            if z.im > T::zero() {
                complex_idx = Some(i);
            }
        }
    }
    if let Some(root) = complex_idx {
        return Ok(StabilityClass::OscillatoryInstability { root });
    }
    for (i, z) in roots.roots.iter().enumerate() {
        if z.re.abs() <= tol {
            return Err(Error::AmbiguousClassification {
                reason: format!("root {i} = {} lies at zero", to_f64(z.re)),
            });
        }
    }
    match roots.roots.iter().position(|z| z.re < -tol) {
        Some(root) => Ok(StabilityClass::ExponentialInstability { root }),
        None => Ok(StabilityClass::Stable),
    }
}

/// `a = n·V·n`, `b = Tr V · n·V·n − n·V²·n`, `c = det V`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WindowCoeffs<T> {
    pub a: T,
    pub b: T,
    pub c: T,
}

pub fn window_coeffs<T: Real>(cfg: &ValidatedConfig<T>) -> WindowCoeffs<T> {
    let a = cfg.axial_potential();
    WindowCoeffs { a, b: cfg.v().trace() * a - cfg.axial_potential_sq(), c: cfg.v().determinant() }
}

/// The rotation rates `Ω− ≤ Ω+` bounding the exponential instability, the
/// zeros of `C` as a biquadratic in Ω.
pub fn exponential_window<T: Real>(cfg: &ValidatedConfig<T>) -> (T, T) {
    let WindowCoeffs { a, b, c } = window_coeffs(cfg);
    let two = lit::<T>(2.0);
    let disc = (b * b - lit::<T>(4.0) * a * c).max(T::zero());
    let s = disc.sqrt();
    (((b - s) / (two * a)).sqrt(), ((b + s) / (two * a)).sqrt())
}

/// Bisection width used when locating window edges.
pub const DEFAULT_EDGE_TOL: f64 = 1e-12;

fn discriminant_negative<T: Real>(cfg: &ValidatedConfig<T>, omega: T) -> bool {
    let cfg = cfg.with_omega(omega).expect("scan rates are non-negative");
    let (value, scale) = cubic_discriminant(&char_poly_coeffs(&cfg));
    value < -lit::<T>(1e-12) * scale
}

fn bisect_edge<T: Real>(cfg: &ValidatedConfig<T>, mut lo: T, mut hi: T, lo_negative: bool, tol: T) -> T {
    let half = lit::<T>(0.5);
    while hi - lo > tol {
        let mid = (lo + hi) * half;
        if mid <= lo || mid >= hi {
            break;
        }
        if discriminant_negative(cfg, mid) == lo_negative {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    (lo + hi) * half
}

/// Every interval of the bracket on which `Q` has a complex pair.
pub fn oscillatory_windows<T: Real>(cfg: &ValidatedConfig<T>, bracket: &OmegaRange<T>, tol: T) -> Result<Vec<(T, T)>> {
    let points: Vec<T> = bracket.points().collect();
    let negative: Vec<bool> = points.iter().map(|&w| discriminant_negative(cfg, w)).collect();
    if *negative.last().unwrap() {
        return Err(Error::BracketTooSmall { omega_max: to_f64(bracket.stop()) });
    }
    let mut windows = Vec::new();
    let mut start = None;
    for i in 0..points.len() {
        match (negative[i], start) {
            (true, None) => {
                start = Some(if i == 0 {
                    points[0]
                } else {
                    bisect_edge(cfg, points[i - 1], points[i], false, tol)
                });
            }
            (false, Some(s)) => {
                windows.push((s, bisect_edge(cfg, points[i - 1], points[i], true, tol)));
                start = None;
            }
            _ => {}
        }
    }
    Ok(windows)
}

/// The oscillatory-instability interval above `Ω+`, if the bracket contains one.
pub fn oscillatory_window<T: Real>(cfg: &ValidatedConfig<T>, bracket: &OmegaRange<T>, tol: T) -> Result<Option<(T, T)>> {
    let (_, omega_plus) = exponential_window(cfg);
    Ok(oscillatory_windows(cfg, bracket, tol)?
        .into_iter()
        .find(|&(a, _)| a >= omega_plus - tol))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum RegionLabel {
    S1,
    I1,
    S2,
    I2,
    S3,
}

impl RegionLabel {
    pub fn name(&self) -> &'static str {
        match self {
            RegionLabel::S1 => "S1",
            RegionLabel::I1 => "I1",
            RegionLabel::S2 => "S2",
            RegionLabel::I2 => "I2",
            RegionLabel::S3 => "S3",
        }
    }

    pub fn is_stable(&self) -> bool {
        matches!(self, RegionLabel::S1 | RegionLabel::S2 | RegionLabel::S3)
    }
}

/// A labelled Ω-interval; `end` is infinite for the last region.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RegionInterval<T> {
    pub label: RegionLabel,
    pub start: T,
    pub end: T,
}

/// Window positions for a fixed trap and axis, independent of Ω.
#[derive(Debug, Clone, PartialEq)]
pub struct RegionMap<T: Real> {
    pub omega_minus: T,
    pub omega_plus: T,
    pub oscillatory: Option<(T, T)>,
    /// Complex-pair intervals other than the one above `Ω+`.
    pub extra_windows: Vec<(T, T)>,
    /// Upper end of the bracket that was searched.
    pub searched_to: T,
}

/// Grid resolution of the default oscillatory-window search.
pub const REGION_SCAN_STEPS: usize = 20_000;

/// Locates all windows, growing the search bracket until the cubic
/// discriminant is non-negative at its upper end.
pub fn region_map<T: Real>(cfg: &ValidatedConfig<T>) -> Result<RegionMap<T>> {
    let (omega_minus, omega_plus) = exponential_window(cfg);
    let mut stop = lit::<T>(4.0) * cfg.v().trace().sqrt() + lit::<T>(2.0) * omega_plus;
    let tol = crate::scalar::tol::<T>(DEFAULT_EDGE_TOL) * T::one().max(stop);
    let mut last_err = None;
    for _ in 0..8 {
        let bracket = OmegaRange::new(T::zero(), stop, REGION_SCAN_STEPS)?;
        match oscillatory_windows(cfg, &bracket, tol) {
            Ok(all) => {
                let idx = all.iter().position(|&(a, _)| a >= omega_plus - tol);
                let oscillatory = idx.map(|i| all[i]);
                let extra_windows = all
                    .iter()
                    .enumerate()
                    .filter(|(i, _)| Some(*i) != idx)
                    .map(|(_, w)| *w)
                    .collect();
                return Ok(RegionMap { omega_minus, omega_plus, oscillatory, extra_windows, searched_to: stop });
            }
            Err(e @ Error::BracketTooSmall { .. }) => {
                last_err = Some(e);
                stop *= lit(2.0);
            }
            Err(e) => return Err(e),
        }
    }
    Err(last_err.unwrap())
}

impl<T: Real> RegionMap<T> {
    /// Label from window positions alone; window edges count as unstable.
    pub fn label(&self, omega: T) -> RegionLabel {
        if omega < self.omega_minus {
            RegionLabel::S1
        } else if omega <= self.omega_plus {
            RegionLabel::I1
        } else {
            match self.oscillatory {
                None => RegionLabel::S2,
                Some((a, _)) if omega < a => RegionLabel::S2,
                Some((_, b)) if omega <= b => RegionLabel::I2,
                Some(_) => RegionLabel::S3,
            }
        }
    }

    /// Label for a point the root classifier called ambiguous: the
    /// instability region whose edge is closest.
    pub fn nearest_instability(&self, omega: T) -> RegionLabel {
        let d_exp = (omega - self.omega_minus).abs().min((omega - self.omega_plus).abs());
        match self.oscillatory {
            Some((a, b)) if (omega - a).abs().min((omega - b).abs()) < d_exp => RegionLabel::I2,
            _ => RegionLabel::I1,
        }
    }

    /// Partition of `[0, ∞)` into labelled intervals.
    pub fn intervals(&self) -> Vec<RegionInterval<T>> {
        let inf = T::max_value().unwrap();
        let mut out = Vec::new();
        let mut push = |label, start: T, end: T| {
            if end > start {
                out.push(RegionInterval { label, start, end });
            }
        };
        push(RegionLabel::S1, T::zero(), self.omega_minus);
        push(RegionLabel::I1, self.omega_minus, self.omega_plus);
        match self.oscillatory {
            None => push(RegionLabel::S2, self.omega_plus, inf),
            Some((a, b)) => {
                push(RegionLabel::S2, self.omega_plus, a);
                push(RegionLabel::I2, a, b);
                push(RegionLabel::S3, b, inf);
            }
        }
        out
    }

    /// Region at `omega`, driven by the root classification of the cubic.
    pub fn region_of(&self, cfg: &ValidatedConfig<T>, omega: T) -> Result<RegionLabel> {
        let cfg = cfg.with_omega(omega)?;
        let k = char_poly_coeffs(&cfg);
        let class = classify_chi_roots(&solve_cubic(&k), default_tolerance(&k))?;
        Ok(self.label_for_class(class, omega))
    }

    fn label_for_class(&self, class: StabilityClass, omega: T) -> RegionLabel {
        match class {
            StabilityClass::ExponentialInstability { .. } => RegionLabel::I1,
            StabilityClass::OscillatoryInstability { .. } => RegionLabel::I2,
            StabilityClass::Stable => {
                if omega < self.omega_minus {
                    RegionLabel::S1
                } else {
                    match self.oscillatory {
                        Some((_, b)) if omega > b => RegionLabel::S3,
                        _ => RegionLabel::S2,
                    }
                }
            }
        }
    }
}

/// Region containing `omega` for this trap and axis.
pub fn region_of<T: Real>(cfg: &ValidatedConfig<T>, omega: T) -> Result<RegionLabel> {
    if omega < T::zero() {
        return Err(Error::InvalidRange { reason: format!("omega must be non-negative, got {omega}") });
    }
    region_map(cfg)?.region_of(cfg, omega)
}

/// Stable region for `Δ = 8Ω²(Vx+Vy) + (Vx−Vy)²` of the planar factor of `Q`
/// when rotating about a principal axis.
pub fn planar_discriminant<T: Real>(vx: T, vy: T, omega: T) -> T {
    let d = vx - vy;
    lit::<T>(8.0) * omega * omega * (vx + vy) + d * d
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScanRow<T: Real> {
    pub omega: T,
    pub roots: [Complex<T>; 3],
    pub class: StabilityClass,
    pub region: RegionLabel,
    /// Classification was ambiguous; reported on the unstable side.
    pub boundary: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScanTable<T: Real> {
    pub rows: Vec<ScanRow<T>>,
    pub regions: RegionMap<T>,
    /// Regions along the scan did not follow S1 < I1 < S2 < I2 < S3.
    pub ordering_violation: bool,
}

impl<T: Real> ScanTable<T> {
    /// Distinct consecutive region labels along the scan.
    pub fn region_sequence(&self) -> Vec<RegionLabel> {
        let mut seq: Vec<RegionLabel> = Vec::new();
        for row in &self.rows {
            if seq.last() != Some(&row.region) {
                seq.push(row.region);
            }
        }
        seq
    }
}

fn instability_class(label: RegionLabel) -> StabilityClass {
    match label {
        RegionLabel::I2 => StabilityClass::OscillatoryInstability { root: 2 },
        _ => StabilityClass::ExponentialInstability { root: 0 },
    }
}

/// Roots, class and region at every grid point.
///
/// Grid points are evaluated in parallel. Root order is then made continuous
/// in Ω by matching each row to a linear extrapolation of the previous two.
pub fn stability_scan<T: Real>(cfg: &ValidatedConfig<T>, grid: &OmegaRange<T>) -> Result<ScanTable<T>> {
    let regions = region_map(cfg)?;
    let omegas: Vec<T> = grid.points().collect();
    let mut rows: Vec<ScanRow<T>> = omegas
        .par_iter()
        .map(|&omega| {
            let c = cfg.with_omega(omega)?;
            let k = char_poly_coeffs(&c);
            let roots = solve_cubic(&k);
            let (class, region, boundary) = match classify_chi_roots(&roots, default_tolerance(&k)) {
                Ok(class) => (class, regions.label_for_class(class, omega), false),
                Err(Error::AmbiguousClassification { .. }) => {
                    let label = regions.nearest_instability(omega);
                    (instability_class(label), label, true)
                }
                Err(e) => return Err(e),
            };
            Ok(ScanRow { omega, roots: roots.roots, class, region, boundary })
        })
        .collect::<Result<_>>()?;

    for i in 1..rows.len() {
        let predicted: [Complex<T>; 3] = if i >= 2 {
            let two = lit::<T>(2.0);
            std::array::from_fn(|j| rows[i - 1].roots[j] * two - rows[i - 2].roots[j])
        } else {
            rows[i - 1].roots
        };
        let current = rows[i].roots;
        let best = PERMUTATIONS
            .iter()
            .min_by(|p, q| {
                let cost = |perm: &[usize; 3]| {
                    (0..3).fold(T::zero(), |s, j| s + (current[perm[j]] - predicted[j]).modulus())
                };
                cost(p).partial_cmp(&cost(q)).unwrap_or(std::cmp::Ordering::Equal)
            })
            .unwrap();
        rows[i].roots = std::array::from_fn(|j| current[best[j]]);
        rows[i].class = reindex_class(rows[i].class, best);
    }

    let ordering_violation = rows.windows(2).any(|w| w[1].region < w[0].region);
    Ok(ScanTable { rows, regions, ordering_violation })
}

const PERMUTATIONS: [[usize; 3]; 6] = [[0, 1, 2], [0, 2, 1], [1, 0, 2], [1, 2, 0], [2, 0, 1], [2, 1, 0]];

fn reindex_class(class: StabilityClass, perm: &[usize; 3]) -> StabilityClass {
    let map = |r: usize| perm.iter().position(|&p| p == r).unwrap_or(r);
    match class {
        StabilityClass::Stable => StabilityClass::Stable,
        StabilityClass::ExponentialInstability { root } => StabilityClass::ExponentialInstability { root: map(root) },
        StabilityClass::OscillatoryInstability { root } => StabilityClass::OscillatoryInstability { root: map(root) },
    }
}
