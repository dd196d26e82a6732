//! Uniform time grids.

use serde::{Deserialize, Serialize};

/// Uniform grid t_0 = 0, ..., t_end with n_steps intervals.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct TimeGrid {
    pub t_end: f64,
    pub n_steps: usize,
}

impl TimeGrid {
    pub fn new(t_end: f64, n_steps: usize) -> Self {
        assert!(t_end > 0.0, "t_end must be positive");
        assert!(n_steps >= 2, "need at least two steps");
        Self { t_end, n_steps }
    }

    pub fn step(&self) -> f64 {
        self.t_end / self.n_steps as f64
    }

    /// Number of grid points (n_steps + 1).
    pub fn len(&self) -> usize {
        self.n_steps + 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn t(&self, i: usize) -> f64 {
        self.t_end * i as f64 / self.n_steps as f64
    }

    pub fn times(&self) -> Vec<f64> {
        (0..self.len()).map(|i| self.t(i)).collect()
    }

    /// Grid with the same horizon and doubled resolution.
    pub fn refined(&self) -> TimeGrid {
        TimeGrid::new(self.t_end, self.n_steps * 2)
    }
}
