//! Molecule → trapped-ion pulse-parameter compilation, frame mapping, and
//! finite-shot measurement emulation.
//!
//! A molecular LVC Hamiltonian (rad/ps) maps onto an ion-trap interaction
//! Hamiltonian through a single dimensionless scale factor F:
//!
//! Ĥ_ion = Ĥ_{1,z}^SDF(Fω₁, √2Fκ) + Ĥ_{2,x}^SDF(Fω₂, √2Fλ) + Ĥ_z^Q(−FΔE),
//!
//! where each spin-dependent-force (SDF) term
//! Ĥ^SDF(δ, Ω) = δ N̂ + (Ω/2) σ̂ (â e^{iφ} + â† e^{−iφ}) acts on one motional
//! mode, and the qubit term is Ĥ_z^Q(χ) = (χ/2) σ̂_z.  Since Ĥ_ion = F·Ĥ_mol,
//! evolving the ion for t_ion = t_mol/F reproduces the molecular dynamics
//! exactly; F stretches femtosecond chemistry onto millisecond ion timescales.
//!
//! F is fixed either by the available laser power through F = Ω₁/(√2|κ|) or
//! taken from a preset's tabulated value.  Dissipation rates map between
//! frames as γ_ion = F·Γ_mol (with the ps⁻¹ → s⁻¹ conversion included), and
//! projective readout with M shots is emulated by seeded binomial sampling
//! with σ = √(P(1−P)/M).

use num_complex::Complex64 as C64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Binomial, Distribution};
use std::fmt::Write as _;

use crate::error::{Error, Result};
use crate::fock::{self, FockCutoff, SparseOp};
use crate::lvc::MoleculeParams;
use crate::series::{self, TimeSeries};

/// rad/ps → rad/s.
const PS_TO_S_RATE: f64 = 1e12;

/// Qubit basis a spin-dependent force couples through.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SdfBasis {
    X,
    Y,
    Z,
}

impl SdfBasis {
    /// Lowercase letter used in rendered pulse programs.
    pub fn letter(self) -> &'static str {
        match self {
            SdfBasis::X => "x",
            SdfBasis::Y => "y",
            SdfBasis::Z => "z",
        }
    }

    fn pauli(self) -> SparseOp {
        match self {
            SdfBasis::X => fock::pauli_x(),
            SdfBasis::Y => fock::pauli_y(),
            SdfBasis::Z => fock::pauli_z(),
        }
    }
}

/// One spin-dependent-force tone: δ N̂ + (Ω/2) σ̂ (â e^{iφ} + â† e^{−iφ}).
///
/// All frequencies are angular and in the ion frame (rad/s); Ω keeps the sign
/// of the molecular coupling it encodes (a negative κ yields a negative Ω).
/// A z-basis SDF is realized in hardware as an R_x(±π/2) sandwich around the
/// native y-basis force; that bookkeeping flag is set automatically.
#[derive(Debug, Clone, PartialEq)]
pub struct SdfTerm {
    mode: usize,
    detuning: f64,
    rabi: f64,
    basis: SdfBasis,
    phase: f64,
    rx_sandwich: bool,
}

impl SdfTerm {
    /// Validates the mode index (1 or 2) and finiteness of all frequencies.
    pub fn new(mode: usize, detuning: f64, rabi: f64, basis: SdfBasis, phase: f64) -> Result<Self> {
        if mode != 1 && mode != 2 {
            return Err(Error::IndexOutOfRange {
                context: "ion: sdf term mode",
                index: mode,
                dim: 2,
            });
        }
        for (name, value) in [("detuning", detuning), ("rabi", rabi), ("phase", phase)] {
            if !value.is_finite() {
                return Err(Error::NonFinite {
                    context: "ion: sdf term",
                    name: match name {
                        "detuning" => "detuning",
                        "rabi" => "rabi",
                        _ => "phase",
                    },
                    value,
                });
            }
        }
        Ok(SdfTerm {
            mode,
            detuning,
            rabi,
            basis,
            phase,
            rx_sandwich: basis == SdfBasis::Z,
        })
    }

    /// Motional mode index (1 = tuning, 2 = coupling).
    pub fn mode(&self) -> usize {
        self.mode
    }

    /// Detuning δ (rad/s).
    pub fn detuning(&self) -> f64 {
        self.detuning
    }

    /// Rabi frequency Ω (rad/s, signed).
    pub fn rabi(&self) -> f64 {
        self.rabi
    }

    /// Coupling basis.
    pub fn basis(&self) -> SdfBasis {
        self.basis
    }

    /// Drive phase φ_s (radians).
    pub fn phase(&self) -> f64 {
        self.phase
    }

    /// True when the term is a z-basis force (R_x(±π/2)-sandwiched y force).
    pub fn rx_sandwich(&self) -> bool {
        self.rx_sandwich
    }

    /// δ/2π in Hz.
    pub fn detuning_hz(&self) -> f64 {
        self.detuning / std::f64::consts::TAU
    }

    /// Ω/2π in Hz (signed).
    pub fn rabi_hz(&self) -> f64 {
        self.rabi / std::f64::consts::TAU
    }
}

/// Trap hardware envelope: available secular frequencies and the laser-power
/// ceiling on SDF Rabi frequencies.
#[derive(Debug, Clone, PartialEq)]
pub struct TrapConfig {
    secular_freqs: [f64; 3],
    power_ceiling: f64,
}

impl Default for TrapConfig {
    /// Two radial modes at 2π×1.33 MHz and 2π×1.51 MHz, the axial mode at
    /// 2π×0.5 MHz, and a default power ceiling of Ω/2π ≤ 20 kHz.
    fn default() -> Self {
        let tau = std::f64::consts::TAU;
        TrapConfig {
            secular_freqs: [tau * 1.33e6, tau * 1.51e6, tau * 0.5e6],
            power_ceiling: tau * 20e3,
        }
    }
}

impl TrapConfig {
    /// Custom secular frequencies (rad/s) and power ceiling (rad/s).
    pub fn new(secular_freqs: [f64; 3], power_ceiling: f64) -> Result<Self> {
        for &f in &secular_freqs {
            if !f.is_finite() || f <= 0.0 {
                return Err(Error::InvalidParameter {
                    context: "ion: trap config",
                    message: format!("secular frequencies must be positive and finite, got {f}"),
                });
            }
        }
        if !power_ceiling.is_finite() || power_ceiling <= 0.0 {
            return Err(Error::InvalidParameter {
                context: "ion: trap config",
                message: format!("power ceiling must be positive and finite, got {power_ceiling}"),
            });
        }
        Ok(TrapConfig {
            secular_freqs,
            power_ceiling,
        })
    }

    /// Same trap with a different power ceiling (rad/s).
    pub fn with_power_ceiling(&self, power_ceiling: f64) -> Result<Self> {
        TrapConfig::new(self.secular_freqs, power_ceiling)
    }

    /// Secular frequencies (rad/s): two radial modes, then the axial mode.
    pub fn secular_freqs(&self) -> &[f64; 3] {
        &self.secular_freqs
    }

    /// Maximum |Ω| (rad/s) the lasers can drive.
    pub fn power_ceiling(&self) -> f64 {
        self.power_ceiling
    }
}

/// A compiled ion experiment: the frame scale F, the two SDF tones, the qubit
/// drive, and the trap context, plus human-readable sanity notes.
#[derive(Debug, Clone, PartialEq)]
pub struct PulseProgram {
    molecule: String,
    scaling: f64,
    sdf_terms: Vec<SdfTerm>,
    qubit_term: f64,
    trap_freqs: [f64; 3],
    notes: Vec<String>,
}

impl PulseProgram {
    /// Molecule label the program was compiled from.
    pub fn molecule(&self) -> &str {
        &self.molecule
    }

    /// Dimensionless frame scale F.
    pub fn scaling(&self) -> f64 {
        self.scaling
    }

    /// The SDF tones, mode 1 first.
    pub fn sdf_terms(&self) -> &[SdfTerm] {
        &self.sdf_terms
    }

    /// Qubit drive coefficient χ = −FΔE (rad/s); the term is (χ/2)σ̂_z.
    pub fn qubit_term(&self) -> f64 {
        self.qubit_term
    }

    /// Secular frequencies of the trap the program targets (rad/s).
    pub fn trap_freqs(&self) -> &[f64; 3] {
        &self.trap_freqs
    }

    /// Compilation sanity notes (detuning vs. secular frequency ratios).
    pub fn notes(&self) -> &[String] {
        &self.notes
    }

    /// Maps a molecular time (fs) to the ion-frame duration in seconds:
    /// t_ion = t_mol / F.
    pub fn ion_time_s(&self, t_mol_fs: f64) -> f64 {
        t_mol_fs * 1e-15 / self.scaling
    }

    /// Maps a molecular time (fs) to the ion-frame duration in milliseconds.
    pub fn ion_time_ms(&self, t_mol_fs: f64) -> f64 {
        self.ion_time_s(t_mol_fs) * 1e3
    }

    /// Renders the program as a stable `key = value` text block (Hz where the
    /// quantity is a frequency; 9-significant-digit scientific notation).
    pub fn render(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "molecule = {}", self.molecule);
        let _ = writeln!(out, "scaling_factor = {:.8e}", self.scaling);
        for (k, term) in self.sdf_terms.iter().enumerate() {
            let tag = format!("sdf{}", k + 1);
            let _ = writeln!(out, "{tag}.mode = {}", term.mode());
            let _ = writeln!(out, "{tag}.basis = {}", term.basis().letter());
            let _ = writeln!(out, "{tag}.detuning_hz = {:.8e}", term.detuning_hz());
            let _ = writeln!(out, "{tag}.rabi_hz = {:.8e}", term.rabi_hz());
            let _ = writeln!(out, "{tag}.phase_rad = {:.8e}", term.phase());
            let _ = writeln!(out, "{tag}.rx_sandwich = {}", term.rx_sandwich());
        }
        let _ = writeln!(
            out,
            "qubit.chi_hz = {:.8e}",
            self.qubit_term / std::f64::consts::TAU
        );
        let _ = writeln!(
            out,
            "trap.secular_hz = {:.8e} {:.8e} {:.8e}",
            self.trap_freqs[0] / std::f64::consts::TAU,
            self.trap_freqs[1] / std::f64::consts::TAU,
            self.trap_freqs[2] / std::f64::consts::TAU
        );
        for note in &self.notes {
            let _ = writeln!(out, "note = {note}");
        }
        out
    }
}

/// A finite-shot measurement emulation result.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ShotRecord {
    estimate: f64,
    sigma: f64,
    shots: u64,
    seed: u64,
}

impl ShotRecord {
    /// Estimated probability, count/M.
    pub fn estimate(&self) -> f64 {
        self.estimate
    }

    /// Projection-noise standard error √(P̂(1−P̂)/M) from the estimate.
    pub fn sigma(&self) -> f64 {
        self.sigma
    }

    /// Number of shots M.
    pub fn shots(&self) -> u64 {
        self.shots
    }

    /// Generator seed that produced the record.
    pub fn seed(&self) -> u64 {
        self.seed
    }
}

/// F = Ω₁ / (√2 |κ|): the frame scale a given mode-1 Rabi frequency (rad/s)
/// buys for this molecule.  |κ| keeps F positive for negative couplings.
pub fn scaling_factor(params: &MoleculeParams, omega1_rabi: f64) -> Result<f64> {
    if !omega1_rabi.is_finite() || omega1_rabi <= 0.0 {
        return Err(Error::InvalidParameter {
            context: "ion: scaling factor",
            message: format!("omega1_rabi must be positive and finite, got {omega1_rabi}"),
        });
    }
    let kappa_rad_s = params.kappa().abs() * PS_TO_S_RATE;
    if kappa_rad_s == 0.0 {
        return Err(Error::UndefinedScaleFactor);
    }
    Ok(omega1_rabi / (std::f64::consts::SQRT_2 * kappa_rad_s))
}

/// Inverse direction: the mode-1 Rabi frequency Ω₁ = √2 F |κ| (rad/s) that a
/// given frame scale requires.
pub fn rabi_for_scaling(params: &MoleculeParams, scaling: f64) -> Result<f64> {
    check_scaling(scaling)?;
    Ok(std::f64::consts::SQRT_2 * scaling * params.kappa().abs() * PS_TO_S_RATE)
}

fn check_scaling(scaling: f64) -> Result<()> {
    if !scaling.is_finite() || scaling <= 0.0 {
        return Err(Error::InvalidParameter {
            context: "ion: scaling factor",
            message: format!("scale factor must be positive and finite, got {scaling}"),
        });
    }
    Ok(())
}

/// Compiles a molecule into a pulse program.
///
/// The frame scale comes from `omega1_rabi` (rad/s) when given, otherwise
/// from the molecule's tabulated F.  Emits SDF tone 1 = (mode 1, δ = Fω₁,
/// Ω = √2Fκ, basis z), tone 2 = (mode 2, δ = Fω₂, Ω = √2Fλ, basis x), and the
/// qubit drive χ = −FΔE, all ion-frame rad/s.  Tones whose |Ω| exceeds the
/// trap's power ceiling abort compilation; detunings are compared against the
/// secular frequencies in the notes.
pub fn compile_pulse_program(
    params: &MoleculeParams,
    omega1_rabi: Option<f64>,
    trap: &TrapConfig,
) -> Result<PulseProgram> {
    let scaling = match omega1_rabi {
        Some(omega) => scaling_factor(params, omega)?,
        None => params.tabulated_f().ok_or_else(|| Error::InvalidParameter {
            context: "ion: pulse compilation",
            message: format!(
                "molecule '{}' has no tabulated scale factor; supply omega1_rabi",
                params.name()
            ),
        })?,
    };
    check_scaling(scaling)?;

    let sqrt2 = std::f64::consts::SQRT_2;
    let term1 = SdfTerm::new(
        1,
        scaling * params.omega1() * PS_TO_S_RATE,
        sqrt2 * scaling * params.kappa() * PS_TO_S_RATE,
        SdfBasis::Z,
        0.0,
    )?;
    let term2 = SdfTerm::new(
        2,
        scaling * params.omega2() * PS_TO_S_RATE,
        sqrt2 * scaling * params.lambda() * PS_TO_S_RATE,
        SdfBasis::X,
        0.0,
    )?;
    let qubit_term = -scaling * params.delta_e() * PS_TO_S_RATE;

    let mut notes = Vec::new();
    for term in [&term1, &term2] {
        if term.rabi().abs() > trap.power_ceiling() {
            return Err(Error::PowerCeiling {
                term: if term.mode() == 1 { "SDF-1" } else { "SDF-2" },
                rabi_hz: term.rabi_hz().abs(),
                ceiling_hz: trap.power_ceiling() / std::f64::consts::TAU,
            });
        }
        let secular = trap.secular_freqs()[term.mode() - 1];
        let ratio = term.detuning().abs() / secular;
        notes.push(format!(
            "SDF-{} detuning {:.1} Hz is {:.3}% of its {:.3} MHz secular mode",
            term.mode(),
            term.detuning_hz().abs(),
            100.0 * ratio,
            secular / std::f64::consts::TAU / 1e6,
        ));
        if ratio > 0.1 {
            notes.push(format!(
                "SDF-{} detuning exceeds 10% of its secular frequency; \
                 the resolved-sideband picture is strained",
                term.mode()
            ));
        }
    }

    Ok(PulseProgram {
        molecule: params.name().to_string(),
        scaling,
        sdf_terms: vec![term1, term2],
        qubit_term,
        trap_freqs: *trap.secular_freqs(),
        notes,
    })
}

/// Rebuilds Ĥ_ion (rad/s) on the composite space from a compiled program:
/// the two SDF terms plus the qubit drive.  By construction this equals
/// F·Ĥ_mol with the ps⁻¹ → s⁻¹ conversion.
pub fn ion_hamiltonian(program: &PulseProgram, cutoff: FockCutoff) -> Result<SparseOp> {
    let dim = cutoff.composite_dim();
    let mut h = SparseOp::zero(dim);
    for term in program.sdf_terms() {
        // δ N̂ on the term's mode.
        let number = fock::lift_mode(cutoff, term.mode(), &fock::number(cutoff))?;
        h = h.add(&number.scaled(C64::new(term.detuning(), 0.0)))?;
        // (Ω/2) σ̂ (â e^{iφ} + â† e^{−iφ}).
        let phase = C64::from_polar(1.0, term.phase());
        let drive = fock::annihilation(cutoff)
            .scaled(phase)
            .add(&fock::creation(cutoff).scaled(phase.conj()))?;
        let ident = SparseOp::identity(cutoff.mode_dim());
        let sigma = term.basis().pauli();
        let lifted = match term.mode() {
            1 => fock::tensor_composite(&sigma, &drive, &ident)?,
            _ => fock::tensor_composite(&sigma, &ident, &drive)?,
        };
        h = h.add(&lifted.scaled(C64::new(0.5 * term.rabi(), 0.0)))?;
    }
    let qubit = fock::lift_qubit(cutoff, &fock::pauli_z())?;
    h = h.add(&qubit.scaled(C64::new(0.5 * program.qubit_term(), 0.0)))?;
    Ok(h)
}

/// Molecular-frame rate Γ (ps⁻¹) → ion-frame rate γ = F·Γ (s⁻¹).
pub fn map_dissipation(gamma_molecular_ps: f64, scaling: f64) -> Result<f64> {
    check_scaling(scaling)?;
    if !gamma_molecular_ps.is_finite() || gamma_molecular_ps < 0.0 {
        return Err(Error::InvalidRate {
            name: "gamma_molecular",
            value: gamma_molecular_ps,
        });
    }
    Ok(scaling * gamma_molecular_ps * PS_TO_S_RATE)
}

/// Ion-frame rate γ (s⁻¹) → molecular-frame rate Γ = γ/F (ps⁻¹).
pub fn molecular_dissipation(gamma_ion_s: f64, scaling: f64) -> Result<f64> {
    check_scaling(scaling)?;
    if !gamma_ion_s.is_finite() || gamma_ion_s < 0.0 {
        return Err(Error::InvalidRate {
            name: "gamma_ion",
            value: gamma_ion_s,
        });
    }
    Ok(gamma_ion_s / (scaling * PS_TO_S_RATE))
}

/// Projection-noise standard error σ = √(P(1−P)/M).
pub fn projection_noise_sigma(p: f64, shots: u64) -> Result<f64> {
    check_probability(p)?;
    check_shots(shots)?;
    Ok((p * (1.0 - p) / shots as f64).sqrt())
}

fn check_probability(p: f64) -> Result<f64> {
    if !p.is_finite() || !(0.0..=1.0).contains(&p) {
        return Err(Error::InvalidProbability {
            context: "ion: measurement emulation",
            value: p,
        });
    }
    Ok(p)
}

fn check_shots(shots: u64) -> Result<()> {
    if shots == 0 {
        return Err(Error::InvalidParameter {
            context: "ion: measurement emulation",
            message: "shot count must be at least 1".into(),
        });
    }
    Ok(())
}

/// Draws a binomial(M, P) count with a seeded deterministic generator and
/// returns the estimate count/M together with its projection-noise σ
/// (computed from the estimate, as for real counts).
pub fn emulate_measurement(p: f64, shots: u64, seed: u64) -> Result<ShotRecord> {
    check_probability(p)?;
    check_shots(shots)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let count = draw_binomial(p, shots, &mut rng)?;
    let estimate = count as f64 / shots as f64;
    Ok(ShotRecord {
        estimate,
        sigma: projection_noise_sigma(estimate, shots)?,
        shots,
        seed,
    })
}

fn draw_binomial(p: f64, shots: u64, rng: &mut ChaCha8Rng) -> Result<u64> {
    let dist = Binomial::new(shots, p).map_err(|e| Error::InvalidParameter {
        context: "ion: measurement emulation",
        message: e.to_string(),
    })?;
    Ok(dist.sample(rng))
}

/// Emulates finite-shot readout of a population trace: appends `P_shots` and
/// `sigma` columns drawn from one seeded generator stream (sample order),
/// leaving the exact columns in place.
///
/// Populations may exceed [0, 1] by at most 1e−9 from propagation rounding;
/// they are clamped before sampling.  Larger excursions are rejected.
pub fn noisy_population_series(
    series_in: &TimeSeries,
    shots: u64,
    seed: u64,
) -> Result<TimeSeries> {
    check_shots(shots)?;
    let p_exact = series_in
        .column(series::COL_POPULATION)
        .ok_or_else(|| Error::InvalidParameter {
            context: "ion: measurement emulation",
            message: format!("series lacks a '{}' column", series::COL_POPULATION),
        })?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut estimates = Vec::with_capacity(p_exact.len());
    let mut sigmas = Vec::with_capacity(p_exact.len());
    for &p in p_exact {
        if !p.is_finite() || p < -1e-9 || p > 1.0 + 1e-9 {
            return Err(Error::InvalidProbability {
                context: "ion: measurement emulation",
                value: p,
            });
        }
        let clamped = p.clamp(0.0, 1.0);
        let count = draw_binomial(clamped, shots, &mut rng)?;
        let estimate = count as f64 / shots as f64;
        estimates.push(estimate);
        sigmas.push(projection_noise_sigma(estimate, shots)?);
    }
    let mut out = series_in.clone();
    out.push_column(series::COL_SHOTS, estimates)?;
    out.push_column(series::COL_SIGMA, sigmas)?;
    Ok(out)
}
