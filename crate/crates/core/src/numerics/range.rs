use crate::error::{Error, Result};
use crate::scalar::{lit, Real};

/// Uniform grid of rotation rates, endpoints included.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OmegaRange<T> {
    start: T,
    stop: T,
    steps: usize,
}

impl<T: Real> OmegaRange<T> {
    pub fn new(start: T, stop: T, steps: usize) -> Result<Self> {
        if !(start < stop) {
            return Err(Error::InvalidRange {
                reason: format!("start {start} must be below stop {stop}"),
            });
        }
        if steps < 2 {
            return Err(Error::InvalidRange {
                reason: format!("need at least 2 steps, got {steps}"),
            });
        }
        Ok(Self { start, stop, steps })
    }

    pub fn start(&self) -> T {
        self.start
    }

    pub fn stop(&self) -> T {
        self.stop
    }

    pub fn steps(&self) -> usize {
        self.steps
    }

    pub fn spacing(&self) -> T {
        (self.stop - self.start) / lit(self.steps as f64 - 1.0)
    }

    pub fn point(&self, i: usize) -> T {
        if i + 1 == self.steps {
            self.stop
        } else {
            self.start + self.spacing() * lit(i as f64)
        }
    }

    pub fn points(&self) -> impl ExactSizeIterator<Item = T> + '_ {
        (0..self.steps).map(move |i| self.point(i))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn endpoints_are_exact() {
        let r = OmegaRange::new(0.0, 3.0, 7).unwrap();
        let pts: Vec<f64> = r.points().collect();
        assert_eq!(pts.len(), 7);
        assert_eq!(pts[0], 0.0);
        assert_eq!(pts[6], 3.0);
        assert!((pts[1] - 0.5).abs() < 1e-15);
    }

    #[test]
    fn rejects_bad_ranges() {
        assert!(OmegaRange::new(1.0, 1.0, 5).is_err());
        assert!(OmegaRange::new(0.0, 1.0, 1).is_err());
    }
}
