//! Borrowed view of one simulated log-price path on a time grid.

use crate::error::{Error, Result};

/// A path `X` sampled on `times`, stored row-major: `values[k*dim + i]` is
/// asset `i` at `times[k]`. `X_0 = 0` by convention (log prices).
#[derive(Debug, Clone, Copy)]
pub struct SamplePath<'a> {
    times: &'a [f64],
    values: &'a [f64],
    dim: usize,
}

impl<'a> SamplePath<'a> {
    pub fn new(times: &'a [f64], values: &'a [f64], dim: usize) -> Result<Self> {
        if dim == 0 || times.is_empty() || values.len() != times.len() * dim {
            return Err(Error::InvalidInput(format!(
                "path shape mismatch: {} times, {} values, dim {dim}",
                times.len(),
                values.len()
            )));
        }
        Ok(Self { times, values, dim })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn times(&self) -> &[f64] {
        self.times
    }

    pub fn n_points(&self) -> usize {
        self.times.len()
    }

    /// Asset values at grid point `k`.
    pub fn at(&self, k: usize) -> &[f64] {
        &self.values[k * self.dim..(k + 1) * self.dim]
    }

    /// Index of grid time `t`, matched to absolute tolerance `1e-9 * max(1, T)`.
    pub fn index_of_time(&self, t: f64) -> Option<usize> {
        let horizon = *self.times.last().unwrap();
        let tol = 1e-9 * horizon.abs().max(1.0);
        let k = self.times.partition_point(|&x| x < t - tol);
        if k < self.times.len() && (self.times[k] - t).abs() <= tol {
            Some(k)
        } else {
            None
        }
    }
}
