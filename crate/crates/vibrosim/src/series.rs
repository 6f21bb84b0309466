//! Sampled observable traces.
//!
//! A [`TimeSeries`] is a shared time grid (fs) plus named observable
//! columns in a deterministic (insertion) order — the in-memory form of
//! every CSV table the simulator emits.

use crate::error::{Error, Result};

/// Column name for the diabatic population of the initially excited state.
pub const COL_POPULATION: &str = "P_diabatic";
/// Column name for the tuning-mode occupation ⟨N₁⟩.
pub const COL_N1: &str = "n1";
/// Column name for the coupling-mode occupation ⟨N₂⟩.
pub const COL_N2: &str = "n2";
/// Column name for the energy expectation ⟨H⟩ (rad/ps).
pub const COL_ENERGY: &str = "energy";
/// Column name for the state norm (closed system).
pub const COL_NORM: &str = "norm";
/// Column name for the density-matrix trace (open system).
pub const COL_TRACE: &str = "trace";
/// Column name for the purity tr ρ² (open system).
pub const COL_PURITY: &str = "purity";
/// Column name for shot-noise-emulated population estimates.
pub const COL_SHOTS: &str = "P_shots";
/// Column name for the binomial standard error of `P_shots`.
pub const COL_SIGMA: &str = "sigma";

/// Time grid (fs) with named observable columns of equal length.
#[derive(Clone, Debug, PartialEq)]
pub struct TimeSeries {
    times_fs: Vec<f64>,
    columns: Vec<(String, Vec<f64>)>,
}

impl TimeSeries {
    /// Creates an empty series over the given grid.
    pub fn new(times_fs: Vec<f64>) -> Self {
        TimeSeries {
            times_fs,
            columns: Vec::new(),
        }
    }

    /// Appends a named column; its length must match the time grid and the
    /// name must be fresh.
    pub fn push_column(&mut self, name: &str, values: Vec<f64>) -> Result<()> {
        if values.len() != self.times_fs.len() {
            return Err(Error::DimensionMismatch {
                context: "series::TimeSeries::push_column",
                left: values.len(),
                right: self.times_fs.len(),
            });
        }
        if self.columns.iter().any(|(n, _)| n == name) {
            return Err(Error::InvalidParameter {
                context: "series::TimeSeries::push_column",
                message: format!("duplicate column '{name}'"),
            });
        }
        self.columns.push((name.to_string(), values));
        Ok(())
    }

    /// Sample times in femtoseconds.
    pub fn times_fs(&self) -> &[f64] {
        &self.times_fs
    }

    /// Number of samples.
    pub fn len(&self) -> usize {
        self.times_fs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times_fs.is_empty()
    }

    /// Column values by name.
    pub fn column(&self, name: &str) -> Option<&[f64]> {
        self.columns
            .iter()
            .find(|(n, _)| n == name)
            .map(|(_, v)| v.as_slice())
    }

    /// Columns in insertion order.
    pub fn columns(&self) -> impl Iterator<Item = (&str, &[f64])> {
        self.columns.iter().map(|(n, v)| (n.as_str(), v.as_slice()))
    }

    /// Evenly spaced grid `0 ≤ t ≤ t_max_fs` with `n_points` samples.
    pub fn linspace(t_max_fs: f64, n_points: usize) -> Result<Vec<f64>> {
        if n_points < 2 {
            return Err(Error::InvalidParameter {
                context: "series::TimeSeries::linspace",
                message: format!("need at least 2 samples, got {n_points}"),
            });
        }
        if !(t_max_fs.is_finite() && t_max_fs > 0.0) {
            return Err(Error::InvalidParameter {
                context: "series::TimeSeries::linspace",
                message: format!("t_max must be positive and finite, got {t_max_fs} fs"),
            });
        }
        let last = (n_points - 1) as f64;
        Ok((0..n_points)
            .map(|k| t_max_fs * (k as f64) / last)
            .collect())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn linspace_endpoints_exact() {
        let grid = TimeSeries::linspace(300.0, 7).unwrap();
        assert_eq!(grid.len(), 7);
        assert_eq!(grid[0], 0.0);
        assert_eq!(grid[6], 300.0);
    }

    #[test]
    fn linspace_validation() {
        assert!(TimeSeries::linspace(300.0, 1).is_err());
        assert!(TimeSeries::linspace(-1.0, 10).is_err());
        assert!(TimeSeries::linspace(f64::NAN, 10).is_err());
    }

    #[test]
    fn column_bookkeeping() {
        let mut s = TimeSeries::new(vec![0.0, 1.0]);
        s.push_column("a", vec![1.0, 2.0]).unwrap();
        assert!(s.push_column("a", vec![1.0, 2.0]).is_err());
        assert!(s.push_column("b", vec![1.0]).is_err());
        assert_eq!(s.column("a").unwrap(), &[1.0, 2.0]);
        assert!(s.column("missing").is_none());
        assert_eq!(s.columns().count(), 1);
    }
}
