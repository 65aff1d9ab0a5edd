use nalgebra::{Complex, SMatrix};

use crate::error::{Error, Result};
use crate::scalar::{lit, to_f64, Real};

/// State types the fixed-step integrator can advance.
pub trait Rk4State<T>: Clone {
    /// `self + h * other`
    fn add_scaled(&self, other: &Self, h: T) -> Self;
    fn is_finite(&self) -> bool;
}

impl<T: Real, const R: usize, const C: usize> Rk4State<T> for SMatrix<T, R, C> {
    fn add_scaled(&self, other: &Self, h: T) -> Self {
        self + other * h
    }

    fn is_finite(&self) -> bool {
        self.iter().all(|x| x.is_finite())
    }
}

impl<T: Real, const R: usize, const C: usize> Rk4State<T> for SMatrix<Complex<T>, R, C> {
    fn add_scaled(&self, other: &Self, h: T) -> Self {
        self + other.map(|z| z * h)
    }

    fn is_finite(&self) -> bool {
        self.iter().all(|z| z.re.is_finite() && z.im.is_finite())
    }
}

impl<T: Real, A: Rk4State<T>, B: Rk4State<T>> Rk4State<T> for (A, B) {
    fn add_scaled(&self, other: &Self, h: T) -> Self {
        (self.0.add_scaled(&other.0, h), self.1.add_scaled(&other.1, h))
    }

    fn is_finite(&self) -> bool {
        self.0.is_finite() && self.1.is_finite()
    }
}

/// Sampled solution of an initial-value problem.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory<T, S> {
    pub times: Vec<T>,
    pub states: Vec<S>,
}

impl<T: Real, S> Trajectory<T, S> {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn span(&self) -> T {
        match (self.times.first(), self.times.last()) {
            (Some(&a), Some(&b)) => b - a,
            _ => T::zero(),
        }
    }

    pub fn last(&self) -> Option<(T, &S)> {
        self.times.last().copied().zip(self.states.last())
    }

    pub fn iter(&self) -> impl Iterator<Item = (T, &S)> {
        self.times.iter().copied().zip(self.states.iter())
    }

    pub fn map<U>(self, f: impl FnMut(S) -> U) -> Trajectory<T, U> {
        Trajectory {
            times: self.times,
            states: self.states.into_iter().map(f).collect(),
        }
    }
}

/// One classical RK4 step of size `h` from `(t, y)`.
pub fn rk4_step<T, S, F>(rhs: &F, t: T, y: &S, h: T) -> S
where
    T: Real,
    S: Rk4State<T>,
    F: Fn(T, &S) -> S,
{
    let half = h * lit(0.5);
    let k1 = rhs(t, y);
    let k2 = rhs(t + half, &y.add_scaled(&k1, half));
    let k3 = rhs(t + half, &y.add_scaled(&k2, half));
    let k4 = rhs(t + h, &y.add_scaled(&k3, h));
    let sixth = h / lit(6.0);
    y.add_scaled(&k1, sixth)
        .add_scaled(&k2, sixth * lit(2.0))
        .add_scaled(&k3, sixth * lit(2.0))
        .add_scaled(&k4, sixth)
}

/// Integrates `dy/dt = rhs(t, y)` from `t = 0` to `t_end` with fixed step `dt`.
///
/// Every step is sampled. The final step is shortened so the last sample
/// lands exactly on `t_end`.
pub fn rk4_integrate<T, S, F>(rhs: F, y0: S, t_end: T, dt: T) -> Result<Trajectory<T, S>>
where
    T: Real,
    S: Rk4State<T>,
    F: Fn(T, &S) -> S,
{
    if !(dt > T::zero()) || !dt.is_finite() {
        return Err(Error::InvalidIntegration {
            reason: format!("dt must be positive, got {dt}"),
        });
    }
    if !(t_end >= T::zero()) || !t_end.is_finite() {
        return Err(Error::InvalidIntegration {
            reason: format!("t_end must be non-negative, got {t_end}"),
        });
    }
    let n_full = (t_end / dt).floor().to_usize().unwrap_or(0);
    let mut times = Vec::with_capacity(n_full + 2);
    let mut states = Vec::with_capacity(n_full + 2);
    times.push(T::zero());
    states.push(y0.clone());

    let mut y = y0;
    let mut step = 0usize;
    loop {
        let t = dt * lit(step as f64);
        let remaining = t_end - t;
        // Treat a sliver below 1e-9 dt as already at t_end.
        if remaining <= dt * lit(1e-9) {
            break;
        }
        let h = if remaining < dt { remaining } else { dt };
        y = rk4_step(&rhs, t, &y, h);
        step += 1;
        let t_next = if h < dt { t_end } else { dt * lit(step as f64) };
        if !y.is_finite() {
            return Err(Error::NonFiniteState { t: to_f64(t_next) });
        }
        times.push(t_next);
        states.push(y.clone());
        if h < dt {
            break;
        }
    }
    Ok(Trajectory { times, states })
}
