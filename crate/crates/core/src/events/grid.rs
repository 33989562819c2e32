use crate::error::{Error, Result};

pub const WEEK: i64 = 7 * 24 * 3600;

/// `n` contiguous half-open steps `[start + i*len, start + (i+1)*len)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TimeGrid {
    start: i64,
    step_length: i64,
    n: usize,
}

impl TimeGrid {
    pub fn new(start: i64, step_length: i64, n: usize) -> Result<Self> {
        if step_length <= 0 {
            return Err(Error::Config(format!("time step length must be positive, got {step_length}")));
        }
        if n < 2 {
            return Err(Error::Config(format!("time grid needs at least 2 steps, got {n}")));
        }
        if start < 0 {
            return Err(Error::Config(format!("time grid start must be non-negative, got {start}")));
        }
        start
            .checked_add(step_length.checked_mul(n as i64).unwrap_or(i64::MAX))
            .filter(|&e| e < i64::MAX)
            .ok_or_else(|| Error::Config("time grid overflows 64-bit seconds".into()))?;
        Ok(TimeGrid { start, step_length, n })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn start(&self) -> i64 {
        self.start
    }

    pub fn end(&self) -> i64 {
        self.start + self.step_length * self.n as i64
    }

    pub fn step_length(&self) -> i64 {
        self.step_length
    }

    /// Bounds `[begin, end)` of step `i`.
    pub fn interval(&self, i: usize) -> (i64, i64) {
        let b = self.start + self.step_length * i as i64;
        (b, b + self.step_length)
    }

    pub fn intervals(&self) -> Vec<(i64, i64)> {
        (0..self.n).map(|i| self.interval(i)).collect()
    }

    pub fn step_of(&self, ts: i64) -> Option<usize> {
        if ts < self.start || ts >= self.end() {
            None
        } else {
            Some(((ts - self.start) / self.step_length) as usize)
        }
    }
}

/// Same as [`TimeGrid::new`].
pub fn build_time_grid(start: i64, step_length: i64, n: usize) -> Result<TimeGrid> {
    TimeGrid::new(start, step_length, n)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn four_weekly_steps() {
        let g = build_time_grid(0, 604800, 4).unwrap();
        assert_eq!(
            g.intervals(),
            vec![(0, 604800), (604800, 1209600), (1209600, 1814400), (1814400, 2419200)]
        );
    }

    #[test]
    fn unit_steps_and_boundaries() {
        let g = build_time_grid(0, 1, 2).unwrap();
        assert_eq!(g.intervals(), vec![(0, 1), (1, 2)]);
        assert_eq!(g.step_of(0), Some(0));
        assert_eq!(g.step_of(1), Some(1));
        assert_eq!(g.step_of(2), None);
    }

    #[test]
    fn rejects_bad_grids() {
        assert!(build_time_grid(0, 0, 4).is_err());
        assert!(build_time_grid(0, 10, 1).is_err());
        assert!(build_time_grid(0, i64::MAX / 2, 4).is_err());
    }
}
