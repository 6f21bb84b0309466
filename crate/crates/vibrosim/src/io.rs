//! Result serialization: fixed-format CSV for time series, surface grids,
//! and convergence tables.
//!
//! Every float is written in 9-significant-digit scientific notation, so a
//! given configuration and seed produce byte-identical files (stable golden
//! tests, clean diffs). Non-finite values are never serialized: each writer
//! scans its payload and aborts with a diagnostic before emitting anything.

use std::io::Write;

use crate::error::{Error, Result};
use crate::lvc::SurfaceGrid;
use crate::series::TimeSeries;

/// Name of the leading molecular-time column.
pub const TIME_COLUMN: &str = "t_fs";
/// Name of the optional ion-frame time column (milliseconds).
pub const ION_TIME_COLUMN: &str = "t_ion_ms";

fn fmt(x: f64) -> String {
    format!("{x:.8e}")
}

fn check_finite(column: &str, values: &[f64]) -> Result<()> {
    for (row, v) in values.iter().enumerate() {
        if !v.is_finite() {
            return Err(Error::NonFiniteOutput {
                column: column.to_string(),
                row,
            });
        }
    }
    Ok(())
}

/// Writes a time series as CSV: `t_fs` first, then — when `ion_scale` (the
/// dimensionless molecule → ion factor F) is given — `t_ion_ms` with
/// t·1e−15/F·1e3, then every observable column in recorded order.
pub fn write_series_csv(
    out: &mut dyn Write,
    series: &TimeSeries,
    ion_scale: Option<f64>,
) -> Result<()> {
    if let Some(f) = ion_scale {
        if !(f.is_finite() && f > 0.0) {
            return Err(Error::InvalidParameter {
                context: "io::write_series_csv",
                message: format!("ion scale factor must be positive and finite, got {f}"),
            });
        }
    }
    check_finite(TIME_COLUMN, series.times_fs())?;
    for (name, values) in series.columns() {
        check_finite(name, values)?;
    }

    let mut header = vec![TIME_COLUMN.to_string()];
    if ion_scale.is_some() {
        header.push(ION_TIME_COLUMN.to_string());
    }
    header.extend(series.columns().map(|(name, _)| name.to_string()));
    writeln!(out, "{}", header.join(","))?;

    let columns: Vec<&[f64]> = series.columns().map(|(_, v)| v).collect();
    for (row, &t_fs) in series.times_fs().iter().enumerate() {
        let mut fields = vec![fmt(t_fs)];
        if let Some(f) = ion_scale {
            fields.push(fmt(t_fs * 1e-12 / f));
        }
        fields.extend(columns.iter().map(|col| fmt(col[row])));
        writeln!(out, "{}", fields.join(","))?;
    }
    Ok(())
}

/// Writes adiabatic surfaces as CSV rows `Q1,Q2,V_lower,V_upper`, row-major
/// over the (Q₁, Q₂) grid. Energies are in rad/ps.
pub fn write_surface_csv(out: &mut dyn Write, grid: &SurfaceGrid) -> Result<()> {
    check_finite("Q1", &grid.q1)?;
    check_finite("Q2", &grid.q2)?;
    check_finite("V_lower", &grid.lower)?;
    check_finite("V_upper", &grid.upper)?;
    writeln!(out, "Q1,Q2,V_lower,V_upper")?;
    for (i1, &a) in grid.q1.iter().enumerate() {
        for (i2, &b) in grid.q2.iter().enumerate() {
            let (lo, hi) = grid.at(i1, i2);
            writeln!(out, "{},{},{},{}", fmt(a), fmt(b), fmt(lo), fmt(hi))?;
        }
    }
    Ok(())
}

/// One row of a cutoff-convergence table: the largest absolute difference
/// of the diabatic-population traces at two Fock cutoffs.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConvergenceRow {
    pub cutoff_a: usize,
    pub cutoff_b: usize,
    pub max_abs_delta_p: f64,
}

/// Writes a convergence sweep as CSV rows `cutoff_a,cutoff_b,max_abs_delta_p`.
pub fn write_convergence_csv(out: &mut dyn Write, rows: &[ConvergenceRow]) -> Result<()> {
    for row in rows {
        check_finite("max_abs_delta_p", &[row.max_abs_delta_p])?;
    }
    writeln!(out, "cutoff_a,cutoff_b,max_abs_delta_p")?;
    for row in rows {
        writeln!(
            out,
            "{},{},{}",
            row.cutoff_a,
            row.cutoff_b,
            fmt(row.max_abs_delta_p)
        )?;
    }
    Ok(())
}
