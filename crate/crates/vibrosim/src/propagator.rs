//! Closed-system propagation: exact (Krylov) evolution, first-order Trotter
//! products, and observable recording.
//!
//! Exact propagation applies `exp(−iHΔt)` between sample times with the
//! [`crate::krylov::ExpAction`] kernel and records the diabatic population,
//! mode occupations ⟨N₁⟩/⟨N₂⟩, energy ⟨H⟩, and norm on the sample grid.
//! Trotterized propagation splits the evolution into `n` first-order product
//! steps `∏_k exp(−iH_k Δt)` over a supplied term list (the physically
//! motivated split is [`crate::lvc::hamiltonian_terms`]); every factor uses
//! the same exponential-action kernel.
//!
//! Public time arguments are femtoseconds; Hamiltonians are rad/ps, and the
//! fs → ps conversion happens once on entry.

use crate::error::{Error, Result};
use crate::fock::{self, FockCutoff, SparseOp, StateVector};
use crate::krylov::ExpAction;
use crate::lvc::{self, MoleculeParams};
use crate::series::{
    TimeSeries, COL_ENERGY, COL_N1, COL_N2, COL_NORM, COL_POPULATION,
};

/// Propagation method selector.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Method {
    /// Krylov exponential action between sample times (numerically exact).
    Exact,
    /// First-order Trotter product with the given number of steps over the
    /// full window, sampled at step boundaries.
    Trotter { n_steps: usize },
}

/// Numerical controls shared by the closed- and open-system integrators.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EvolutionSettings {
    /// Target local truncation error per substep, relative to the state
    /// norm. Must lie in (0, 1e−3].
    pub tolerance: f64,
    /// Upper bound on internal substeps (fs). Must be positive.
    pub max_step_fs: f64,
    /// Propagation method.
    pub method: Method,
}

impl Default for EvolutionSettings {
    fn default() -> Self {
        EvolutionSettings {
            tolerance: 1e-12,
            max_step_fs: 100.0,
            method: Method::Exact,
        }
    }
}

impl EvolutionSettings {
    /// Validates the documented ranges.
    pub fn validate(&self) -> Result<()> {
        if !(self.tolerance > 0.0 && self.tolerance <= 1e-3) {
            return Err(Error::InvalidParameter {
                context: "propagator::EvolutionSettings",
                message: format!(
                    "tolerance must lie in (0, 1e-3], got {:e}",
                    self.tolerance
                ),
            });
        }
        if !(self.max_step_fs.is_finite() && self.max_step_fs > 0.0) {
            return Err(Error::InvalidParameter {
                context: "propagator::EvolutionSettings",
                message: format!("max_step_fs must be positive, got {}", self.max_step_fs),
            });
        }
        if let Method::Trotter { n_steps } = self.method {
            if n_steps == 0 {
                return Err(Error::InvalidParameter {
                    context: "propagator::EvolutionSettings",
                    message: "trotter step count must be at least 1".to_string(),
                });
            }
        }
        Ok(())
    }
}

pub(crate) const FS_TO_PS: f64 = 1e-3;

/// Validates a sample grid: finite, starting at or after 0, strictly
/// increasing.
pub(crate) fn validate_grid(t_grid_fs: &[f64]) -> Result<()> {
    if t_grid_fs.is_empty() {
        return Err(Error::InvalidParameter {
            context: "propagator::evolve",
            message: "sample grid is empty".to_string(),
        });
    }
    if t_grid_fs.iter().any(|t| !t.is_finite()) || t_grid_fs[0] < 0.0 {
        return Err(Error::InvalidParameter {
            context: "propagator::evolve",
            message: "sample times must be finite and start at t ≥ 0".to_string(),
        });
    }
    for w in t_grid_fs.windows(2) {
        if !(w[0] < w[1]) {
            return Err(Error::InvalidParameter {
                context: "propagator::evolve",
                message: "sample times must be strictly increasing".to_string(),
            });
        }
    }
    Ok(())
}

pub(crate) fn check_hermitian(h: &SparseOp, context: &'static str) -> Result<()> {
    let dev = h.hermiticity_error();
    if dev > 1e-12 {
        return Err(Error::NotHermitian {
            context,
            deviation: dev,
        });
    }
    Ok(())
}

fn check_normalized(psi: &StateVector, context: &'static str) -> Result<()> {
    let dev = (psi.norm() - 1.0).abs();
    if dev > 1e-6 {
        return Err(Error::NotNormalized {
            context,
            deviation: dev,
        });
    }
    Ok(())
}

/// Observable operators reused across samples.
struct Observables {
    n1: SparseOp,
    n2: SparseOp,
    excited: std::ops::Range<usize>,
}

impl Observables {
    fn build(cutoff: FockCutoff) -> Result<Self> {
        let n = fock::number(cutoff);
        Ok(Observables {
            n1: fock::lift_mode(cutoff, 1, &n)?,
            n2: fock::lift_mode(cutoff, 2, &n)?,
            excited: lvc::excited_block(cutoff),
        })
    }

    fn record(
        &self,
        h: &SparseOp,
        psi: &StateVector,
        t_fs: f64,
        out: &mut SampleColumns,
    ) -> Result<()> {
        let norm = psi.norm();
        if (norm - 1.0).abs() > 1e-6 {
            return Err(Error::NormDrift {
                t_fs,
                drift: (norm - 1.0).abs(),
            });
        }
        let p: f64 = psi.amplitudes()[self.excited.clone()]
            .iter()
            .map(|a| a.norm_sqr())
            .sum();
        out.population.push(p);
        out.n1.push(psi.expectation(&self.n1)?.re);
        out.n2.push(psi.expectation(&self.n2)?.re);
        out.energy.push(psi.expectation(h)?.re);
        out.norm.push(norm);
        Ok(())
    }
}

#[derive(Default)]
struct SampleColumns {
    population: Vec<f64>,
    n1: Vec<f64>,
    n2: Vec<f64>,
    energy: Vec<f64>,
    norm: Vec<f64>,
}

impl SampleColumns {
    fn into_series(self, times_fs: Vec<f64>) -> Result<TimeSeries> {
        let mut series = TimeSeries::new(times_fs);
        series.push_column(COL_POPULATION, self.population)?;
        series.push_column(COL_N1, self.n1)?;
        series.push_column(COL_N2, self.n2)?;
        series.push_column(COL_ENERGY, self.energy)?;
        series.push_column(COL_NORM, self.norm)?;
        Ok(series)
    }
}

/// Exact closed-system propagation of `psi0` under `h`, recording
/// observables at every time in `t_grid_fs` (strictly increasing, ≥ 0;
/// propagation starts at t = 0). Returns the observable series and the
/// final state.
pub fn evolve(
    h: &SparseOp,
    psi0: &StateVector,
    cutoff: FockCutoff,
    t_grid_fs: &[f64],
    settings: &EvolutionSettings,
) -> Result<(TimeSeries, StateVector)> {
    settings.validate()?;
    if let Method::Trotter { .. } = settings.method {
        return Err(Error::InvalidParameter {
            context: "propagator::evolve",
            message: "evolve is the exact path; use trotter_evolve for products".to_string(),
        });
    }
    if h.dim() != cutoff.composite_dim() || psi0.dim() != h.dim() {
        return Err(Error::DimensionMismatch {
            context: "propagator::evolve",
            left: h.dim(),
            right: psi0.dim(),
        });
    }
    check_hermitian(h, "propagator::evolve")?;
    check_normalized(psi0, "propagator::evolve")?;
    validate_grid(t_grid_fs)?;

    let obs = Observables::build(cutoff)?;
    let mut cols = SampleColumns::default();
    let mut psi = psi0.clone();
    let mut kernel = ExpAction::new(h);
    let mut t_now_fs = 0.0;
    for &t_fs in t_grid_fs {
        let dt_ps = (t_fs - t_now_fs) * FS_TO_PS;
        kernel.apply(
            dt_ps,
            psi.amplitudes_mut(),
            settings.tolerance,
            settings.max_step_fs * FS_TO_PS,
        )?;
        t_now_fs = t_fs;
        obs.record(h, &psi, t_fs, &mut cols)?;
    }
    Ok((cols.into_series(t_grid_fs.to_vec())?, psi))
}

/// Verifies that a Trotter term list sums to the reference Hamiltonian
/// entrywise within 1e−10.
pub fn verify_term_sum(terms: &[SparseOp], h: &SparseOp) -> Result<()> {
    let mut sum = SparseOp::zero(h.dim());
    for t in terms {
        sum = sum.add(t)?;
    }
    let dev = sum.max_abs_diff(h)?;
    if dev > 1e-10 {
        return Err(Error::InvalidParameter {
            context: "propagator::verify_term_sum",
            message: format!("terms deviate from the Hamiltonian by {dev:.3e}"),
        });
    }
    Ok(())
}

/// First-order Trotter product: applies `n_steps` sweeps of
/// `∏_k exp(−iH_k Δt)` (factors in listed order, Δt = t_total/n_steps) and
/// returns the final state. Terms must be Hermitian and share a dimension;
/// callers are responsible for the terms summing to the intended `H`
/// ([`verify_term_sum`] checks that).
pub fn trotter_evolve(
    terms: &[SparseOp],
    psi0: &StateVector,
    t_total_fs: f64,
    n_steps: usize,
    settings: &EvolutionSettings,
) -> Result<StateVector> {
    let mut psi = psi0.clone();
    let mut kernels = trotter_kernels(terms, psi0, t_total_fs, n_steps, settings)?;
    let dt_ps = t_total_fs / n_steps as f64 * FS_TO_PS;
    for _ in 0..n_steps {
        for kernel in kernels.iter_mut() {
            kernel.apply(
                dt_ps,
                psi.amplitudes_mut(),
                settings.tolerance,
                settings.max_step_fs * FS_TO_PS,
            )?;
        }
    }
    Ok(psi)
}

/// Diabatic population after every Trotter step: the series is sampled on
/// the `n_steps + 1` step-boundary times (including t = 0), which is the
/// grid on which trotterized and exact traces are compared.
pub fn trotter_population_series(
    terms: &[SparseOp],
    psi0: &StateVector,
    cutoff: FockCutoff,
    t_total_fs: f64,
    n_steps: usize,
    settings: &EvolutionSettings,
) -> Result<TimeSeries> {
    if terms.first().map(SparseOp::dim) != Some(cutoff.composite_dim()) {
        return Err(Error::DimensionMismatch {
            context: "propagator::trotter_population_series",
            left: terms.first().map(SparseOp::dim).unwrap_or(0),
            right: cutoff.composite_dim(),
        });
    }
    let mut psi = psi0.clone();
    let mut kernels = trotter_kernels(terms, psi0, t_total_fs, n_steps, settings)?;
    let dt_ps = t_total_fs / n_steps as f64 * FS_TO_PS;
    let excited = lvc::excited_block(cutoff);
    let population = |psi: &StateVector| -> f64 {
        psi.amplitudes()[excited.clone()]
            .iter()
            .map(|a| a.norm_sqr())
            .sum()
    };
    let mut times = Vec::with_capacity(n_steps + 1);
    let mut pops = Vec::with_capacity(n_steps + 1);
    times.push(0.0);
    pops.push(population(&psi));
    for step in 1..=n_steps {
        for kernel in kernels.iter_mut() {
            kernel.apply(
                dt_ps,
                psi.amplitudes_mut(),
                settings.tolerance,
                settings.max_step_fs * FS_TO_PS,
            )?;
        }
        times.push(t_total_fs * step as f64 / n_steps as f64);
        pops.push(population(&psi));
    }
    let mut series = TimeSeries::new(times);
    series.push_column(COL_POPULATION, pops)?;
    Ok(series)
}

/// Shared validation + kernel construction for the Trotter paths.
fn trotter_kernels<'t>(
    terms: &'t [SparseOp],
    psi0: &StateVector,
    t_total_fs: f64,
    n_steps: usize,
    settings: &EvolutionSettings,
) -> Result<Vec<ExpAction<'t>>> {
    settings.validate()?;
    if n_steps == 0 {
        return Err(Error::InvalidParameter {
            context: "propagator::trotter_evolve",
            message: "n_steps must be at least 1".to_string(),
        });
    }
    if !(t_total_fs.is_finite() && t_total_fs >= 0.0) {
        return Err(Error::InvalidParameter {
            context: "propagator::trotter_evolve",
            message: format!("t_total_fs must be non-negative, got {t_total_fs}"),
        });
    }
    if terms.is_empty() {
        return Err(Error::InvalidParameter {
            context: "propagator::trotter_evolve",
            message: "term list is empty".to_string(),
        });
    }
    for t in terms {
        if t.dim() != psi0.dim() {
            return Err(Error::DimensionMismatch {
                context: "propagator::trotter_evolve",
                left: t.dim(),
                right: psi0.dim(),
            });
        }
        check_hermitian(t, "propagator::trotter_evolve")?;
    }
    check_normalized(psi0, "propagator::trotter_evolve")?;
    Ok(terms.iter().map(ExpAction::new).collect())
}

/// End-to-end diabatic population trace for a molecule: builds the LVC
/// Hamiltonian and initial wavepacket at `cutoff`, then either propagates
/// exactly over an even `n_points` grid spanning `[0, t_max_fs]`
/// ([`Method::Exact`]) or applies the default three-group Trotter split
/// sampled at step boundaries ([`Method::Trotter`]).
pub fn population_trace(
    params: &MoleculeParams,
    cutoff: FockCutoff,
    t_max_fs: f64,
    n_points: usize,
    settings: &EvolutionSettings,
) -> Result<TimeSeries> {
    let psi0 = lvc::initial_state(params, cutoff)?;
    match settings.method {
        Method::Exact => {
            let h = lvc::build_hamiltonian(params, cutoff)?;
            let grid = TimeSeries::linspace(t_max_fs, n_points)?;
            let (series, _) = evolve(&h, &psi0, cutoff, &grid, settings)?;
            Ok(series)
        }
        Method::Trotter { n_steps } => {
            let terms = lvc::hamiltonian_terms(params, cutoff)?;
            let exact = EvolutionSettings {
                method: Method::Exact,
                ..*settings
            };
            trotter_population_series(&terms, &psi0, cutoff, t_max_fs, n_steps, &exact)
        }
    }
}
