//! Two-state, two-mode linear vibronic coupling (LVC) model.
//!
//! The model Hamiltonian on qubit ⊗ mode 1 ⊗ mode 2 is (ħ = 1, all
//! parameters angular frequencies in rad/ps)
//!
//! > H = −½ΔE Σ_z + ω₁ N₁ + ω₂ N₂
//! >     + (κ/√2) Σ_z (a₁† + a₁) + (λ/√2) Σ_x (a₂† + a₂)
//!
//! where mode 1 is the *tuning* mode (κ shifts the surfaces along Q₁) and
//! mode 2 is the *coupling* mode (λ mixes the electronic states along Q₂).
//! With σ_z = diag(+1, −1) the initially populated electronic state `|1⟩`
//! sits at +ΔE/2 and the ground state `|0⟩` at −ΔE/2.
//!
//! Frequencies enter as ν = ω/2π in THz and are multiplied by 2π on
//! ingestion; times are reported in fs elsewhere (1 THz = 1/ps).

use num_complex::Complex64 as C64;
use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::fock::{
    self, coherent_state, FockCutoff, SparseOp, StateVector,
};

/// Number of bosonic modes in the model (tuning + coupling).
pub const N_MODES: usize = 2;

/// LVC parameter record. All frequency-like fields are angular frequencies
/// in rad/ps; `alpha` is the dimensionless initial displacement of mode 1.
#[derive(Clone, Debug, PartialEq)]
pub struct MoleculeParams {
    name: String,
    omega1: f64,
    omega2: f64,
    delta_e: f64,
    kappa: f64,
    lambda: f64,
    alpha: f64,
    /// Label of the initially populated electronic state `|1⟩`.
    excited_label: String,
    /// Label of the electronic ground state `|0⟩`.
    ground_label: String,
    /// Published molecule → ion scale factor, when known.
    tabulated_f: Option<f64>,
    /// Default propagation window in fs.
    default_window_fs: f64,
}

impl MoleculeParams {
    /// Builds a parameter set from plain frequencies ν = ω/2π in THz.
    /// Mode frequencies must be positive; every number must be finite.
    pub fn from_thz(
        name: &str,
        nu1_thz: f64,
        nu2_thz: f64,
        delta_e_thz: f64,
        kappa_thz: f64,
        lambda_thz: f64,
        alpha: f64,
    ) -> Result<Self> {
        let check = |name: &'static str, value: f64| -> Result<f64> {
            if value.is_finite() {
                Ok(value)
            } else {
                Err(Error::NonFinite {
                    context: "lvc::MoleculeParams",
                    name,
                    value,
                })
            }
        };
        for (n, v) in [("nu1", nu1_thz), ("nu2", nu2_thz)] {
            check(n, v)?;
            if v <= 0.0 {
                return Err(Error::InvalidParameter {
                    context: "lvc::MoleculeParams",
                    message: format!("mode frequency {n} must be positive, got {v} THz"),
                });
            }
        }
        Ok(MoleculeParams {
            name: name.to_string(),
            omega1: 2.0 * PI * nu1_thz,
            omega2: 2.0 * PI * nu2_thz,
            delta_e: 2.0 * PI * check("delta_e", delta_e_thz)?,
            kappa: 2.0 * PI * check("kappa", kappa_thz)?,
            lambda: 2.0 * PI * check("lambda", lambda_thz)?,
            alpha: check("alpha", alpha)?,
            excited_label: "excited".to_string(),
            ground_label: "ground".to_string(),
            tabulated_f: None,
            default_window_fs: 300.0,
        })
    }

    /// Sets the electronic state labels (excited = `|1⟩`, ground = `|0⟩`).
    pub fn with_state_labels(mut self, excited: &str, ground: &str) -> Self {
        self.excited_label = excited.to_string();
        self.ground_label = ground.to_string();
        self
    }

    /// Attaches the published molecule → ion scale factor.
    pub fn with_tabulated_f(mut self, f: f64) -> Self {
        self.tabulated_f = Some(f);
        self
    }

    /// Overrides the default propagation window (fs).
    pub fn with_default_window_fs(mut self, t_fs: f64) -> Self {
        self.default_window_fs = t_fs;
        self
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    /// Tuning-mode angular frequency ω₁ (rad/ps).
    pub fn omega1(&self) -> f64 {
        self.omega1
    }

    /// Coupling-mode angular frequency ω₂ (rad/ps).
    pub fn omega2(&self) -> f64 {
        self.omega2
    }

    /// Electronic gap ΔE (rad/ps).
    pub fn delta_e(&self) -> f64 {
        self.delta_e
    }

    /// Tuning (on-diagonal) vibronic coupling κ (rad/ps).
    pub fn kappa(&self) -> f64 {
        self.kappa
    }

    /// Inter-state (off-diagonal) vibronic coupling λ (rad/ps).
    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    /// Initial coherent displacement of mode 1 (dimensionless).
    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn excited_label(&self) -> &str {
        &self.excited_label
    }

    pub fn ground_label(&self) -> &str {
        &self.ground_label
    }

    pub fn tabulated_f(&self) -> Option<f64> {
        self.tabulated_f
    }

    pub fn default_window_fs(&self) -> f64 {
        self.default_window_fs
    }

    /// ν₁ = ω₁/2π in THz (for reports).
    pub fn nu1_thz(&self) -> f64 {
        self.omega1 / (2.0 * PI)
    }

    pub fn nu2_thz(&self) -> f64 {
        self.omega2 / (2.0 * PI)
    }

    pub fn delta_e_thz(&self) -> f64 {
        self.delta_e / (2.0 * PI)
    }

    pub fn kappa_thz(&self) -> f64 {
        self.kappa / (2.0 * PI)
    }

    pub fn lambda_thz(&self) -> f64 {
        self.lambda / (2.0 * PI)
    }
}

/// Allene cation preset: degenerate π_x/π_y states (ΔE = 0), no initial
/// displacement. Frequencies in THz: ν₁ = 22.5, ν₂ = 57.3, κ = 74.7,
/// λ = 67.7; published scale factor F = 1.08e−11.
pub fn allene() -> MoleculeParams {
    MoleculeParams::from_thz("allene", 22.5, 57.3, 0.0, 74.7, 67.7, 0.0)
        .expect("preset values are valid")
        .with_state_labels("pi_x", "pi_y")
        .with_tabulated_f(1.08e-11)
        .with_default_window_fs(300.0)
}

/// Butatriene cation preset: π*/π states. ν₁ = 62.9, ν₂ = 22.0,
/// ΔE = 131.5, κ = 62.1, λ = 69.6 (THz), α = −0.140; F = 1.10e−11.
pub fn butatriene() -> MoleculeParams {
    MoleculeParams::from_thz("butatriene", 62.9, 22.0, 131.5, 62.1, 69.6, -0.140)
        .expect("preset values are valid")
        .with_state_labels("pi*", "pi")
        .with_tabulated_f(1.10e-11)
        .with_default_window_fs(300.0)
}

/// Pyrazine preset: ππ*/nπ* states. ν₁ = 17.9, ν₂ = 28.5, ΔE = 199,
/// κ = −30.7, λ = 63.3 (THz), α = 0.210; F = 1.33e−11.
pub fn pyrazine() -> MoleculeParams {
    MoleculeParams::from_thz("pyrazine", 17.9, 28.5, 199.0, -30.7, 63.3, 0.210)
        .expect("preset values are valid")
        .with_state_labels("pipi*", "npi*")
        .with_tabulated_f(1.33e-11)
        .with_default_window_fs(500.0)
}

/// Preset registry keyed by lowercase molecule name.
pub fn preset(name: &str) -> Result<MoleculeParams> {
    match name.to_ascii_lowercase().as_str() {
        "allene" => Ok(allene()),
        "butatriene" => Ok(butatriene()),
        "pyrazine" => Ok(pyrazine()),
        _ => Err(Error::UnknownPreset(name.to_string())),
    }
}

/// Names accepted by [`preset`].
pub const PRESET_NAMES: [&str; 3] = ["allene", "butatriene", "pyrazine"];

/// Assembles the full LVC Hamiltonian on the composite space (rad/ps).
pub fn build_hamiltonian(params: &MoleculeParams, cutoff: FockCutoff) -> Result<SparseOp> {
    let terms = hamiltonian_terms(params, cutoff)?;
    let mut h = SparseOp::zero(cutoff.composite_dim());
    for t in &terms {
        h = h.add(t)?;
    }
    Ok(h)
}

/// The Hamiltonian split into three internally coupled groups, used both to
/// assemble the full operator and as the default Trotterization:
///
/// 1. qubit term −½ΔE Σ_z (diagonal),
/// 2. mode-1 group ω₁N₁ + (κ/√2) Σ_z (a₁† + a₁),
/// 3. mode-2 group ω₂N₂ + (λ/√2) Σ_x (a₂† + a₂).
pub fn hamiltonian_terms(params: &MoleculeParams, cutoff: FockCutoff) -> Result<Vec<SparseOp>> {
    let sqrt2 = std::f64::consts::SQRT_2;
    let x_op = fock::annihilation(cutoff).add(&fock::creation(cutoff))?;
    let number = fock::number(cutoff);
    let id_m = SparseOp::identity(cutoff.mode_dim());

    let re = |x: f64| C64::new(x, 0.0);

    let qubit = fock::lift_qubit(cutoff, &fock::pauli_z())?.scaled(re(-params.delta_e / 2.0));

    let mode1 = fock::lift_mode(cutoff, 1, &number)?
        .scaled(re(params.omega1))
        .add(
            &fock::tensor_composite(&fock::pauli_z(), &x_op, &id_m)?
                .scaled(re(params.kappa / sqrt2)),
        )?;

    let mode2 = fock::lift_mode(cutoff, 2, &number)?
        .scaled(re(params.omega2))
        .add(
            &fock::tensor_composite(&fock::pauli_x(), &id_m, &x_op)?
                .scaled(re(params.lambda / sqrt2)),
        )?;

    Ok(vec![qubit, mode1, mode2])
}

/// Initial wavepacket `|1⟩ ⊗ D(α)|0⟩ ⊗ |0⟩`: excited electronic state,
/// mode 1 coherently displaced by α, mode 2 in its ground state.
pub fn initial_state(params: &MoleculeParams, cutoff: FockCutoff) -> Result<StateVector> {
    let coh = coherent_state(cutoff, params.alpha)?;
    let n = cutoff.mode_dim();
    let mut amps = vec![C64::new(0.0, 0.0); cutoff.composite_dim()];
    for (n1, &c) in coh.amplitudes().iter().enumerate() {
        amps[cutoff.composite_index(1, n1, 0)?] = c;
    }
    debug_assert_eq!(n, coh.dim());
    Ok(StateVector::new(amps))
}

/// Flat index range of the `s = 1` electronic block (used for populations).
pub fn excited_block(cutoff: FockCutoff) -> std::ops::Range<usize> {
    let n2 = cutoff.n_max() * cutoff.n_max();
    n2..2 * n2
}

/// Diabatic population of the initially excited state `|1⟩`, i.e. the
/// expectation of the projector `|1⟩⟨1| ⊗ I ⊗ I`. The state must be
/// normalized within 1e−6.
pub fn diabatic_population(state: &StateVector, cutoff: FockCutoff) -> Result<f64> {
    if state.dim() != cutoff.composite_dim() {
        return Err(Error::DimensionMismatch {
            context: "lvc::diabatic_population",
            left: state.dim(),
            right: cutoff.composite_dim(),
        });
    }
    let norm = state.norm();
    if (norm - 1.0).abs() > 1e-6 {
        return Err(Error::NotNormalized {
            context: "lvc::diabatic_population",
            deviation: (norm - 1.0).abs(),
        });
    }
    Ok(state.amplitudes()[excited_block(cutoff)]
        .iter()
        .map(|a| a.norm_sqr())
        .sum())
}

/// Adiabatic potential energy surfaces evaluated on a rectangular grid of
/// dimensionless normal-mode coordinates.
#[derive(Clone, Debug)]
pub struct SurfaceGrid {
    /// Tuning-mode axis Q₁.
    pub q1: Vec<f64>,
    /// Coupling-mode axis Q₂.
    pub q2: Vec<f64>,
    /// Lower surface V₋, row-major over (Q₁, Q₂), rad/ps.
    pub lower: Vec<f64>,
    /// Upper surface V₊, row-major over (Q₁, Q₂), rad/ps.
    pub upper: Vec<f64>,
}

impl SurfaceGrid {
    /// Value pair `(V₋, V₊)` at grid node `(i1, i2)`.
    pub fn at(&self, i1: usize, i2: usize) -> (f64, f64) {
        let idx = i1 * self.q2.len() + i2;
        (self.lower[idx], self.upper[idx])
    }
}

/// Pointwise adiabatic energies
/// `V±(Q₁, Q₂) = ½(ω₁Q₁² + ω₂Q₂²) ± √((ΔE/2 − κQ₁)² + λ²Q₂²)` (rad/ps).
pub fn adiabatic_energies(params: &MoleculeParams, q1: f64, q2: f64) -> (f64, f64) {
    let trace = 0.5 * (params.omega1 * q1 * q1 + params.omega2 * q2 * q2);
    let tilt = params.delta_e / 2.0 - params.kappa * q1;
    let split = (tilt * tilt + params.lambda * params.lambda * q2 * q2).sqrt();
    (trace - split, trace + split)
}

/// Location `(Q₁*, 0)` of the conical intersection seam minimum, when the
/// tuning coupling is nonzero: Q₁* = ΔE/(2κ).
pub fn conical_intersection(params: &MoleculeParams) -> Option<(f64, f64)> {
    if params.kappa == 0.0 {
        None
    } else {
        Some((params.delta_e / (2.0 * params.kappa), 0.0))
    }
}

/// Default surface axis: 161 evenly spaced points covering Q ∈ [−4, 4].
pub fn default_surface_axis() -> Vec<f64> {
    (0..161).map(|i| (i as f64 - 80.0) / 20.0).collect()
}

/// Evaluates both adiabatic surfaces on the grid `q1 × q2`. Axes must be
/// non-empty, finite, and strictly increasing.
pub fn adiabatic_surfaces(
    params: &MoleculeParams,
    q1: &[f64],
    q2: &[f64],
) -> Result<SurfaceGrid> {
    for (name, axis) in [("q1", q1), ("q2", q2)] {
        if axis.is_empty() {
            return Err(Error::InvalidParameter {
                context: "lvc::adiabatic_surfaces",
                message: format!("axis {name} is empty"),
            });
        }
        for w in axis.windows(2) {
            if !(w[0] < w[1]) {
                return Err(Error::InvalidParameter {
                    context: "lvc::adiabatic_surfaces",
                    message: format!("axis {name} must be strictly increasing"),
                });
            }
        }
        if axis.iter().any(|x| !x.is_finite()) {
            return Err(Error::InvalidParameter {
                context: "lvc::adiabatic_surfaces",
                message: format!("axis {name} contains non-finite values"),
            });
        }
    }
    let mut lower = Vec::with_capacity(q1.len() * q2.len());
    let mut upper = Vec::with_capacity(q1.len() * q2.len());
    for &a in q1 {
        for &b in q2 {
            let (lo, hi) = adiabatic_energies(params, a, b);
            lower.push(lo);
            upper.push(hi);
        }
    }
    Ok(SurfaceGrid {
        q1: q1.to_vec(),
        q2: q2.to_vec(),
        lower,
        upper,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::{assert_abs_diff_eq, assert_relative_eq};

    fn cutoff(n: usize) -> FockCutoff {
        FockCutoff::new(n).unwrap()
    }

    #[test]
    fn uncoupled_hamiltonian_is_bare_oscillators() {
        let params = MoleculeParams::from_thz("bare", 1.5, 2.5, 0.0, 0.0, 0.0, 0.0).unwrap();
        let c = cutoff(6);
        let h = build_hamiltonian(&params, c).unwrap();
        let reference = fock::lift_mode(c, 1, &fock::number(c))
            .unwrap()
            .scaled(C64::new(params.omega1(), 0.0))
            .add(
                &fock::lift_mode(c, 2, &fock::number(c))
                    .unwrap()
                    .scaled(C64::new(params.omega2(), 0.0)),
            )
            .unwrap();
        assert!(h.max_abs_diff(&reference).unwrap() < 1e-12);
    }

    #[test]
    fn excited_state_diagonal_energy_is_half_gap() {
        // ⟨1,0,0|H|1,0,0⟩ = +ΔE/2 (σ_z eigenvalue −1 flips the −½ΔE sign).
        let params = butatriene();
        let c = cutoff(8);
        let h = build_hamiltonian(&params, c).unwrap();
        let idx = c.composite_index(1, 0, 0).unwrap();
        assert_relative_eq!(h.get(idx, idx).re, PI * 131.5, max_relative = 1e-12);
    }

    #[test]
    fn preset_hamiltonians_are_hermitian() {
        let c = cutoff(16);
        for name in PRESET_NAMES {
            let h = build_hamiltonian(&preset(name).unwrap(), c).unwrap();
            assert!(
                h.hermiticity_error() < 1e-12,
                "{name}: hermiticity error {:.3e}",
                h.hermiticity_error()
            );
        }
    }

    #[test]
    fn term_sum_matches_full_hamiltonian() {
        let c = cutoff(12);
        for name in PRESET_NAMES {
            let params = preset(name).unwrap();
            let h = build_hamiltonian(&params, c).unwrap();
            let mut sum = SparseOp::zero(c.composite_dim());
            for t in hamiltonian_terms(&params, c).unwrap() {
                sum = sum.add(&t).unwrap();
            }
            assert!(h.max_abs_diff(&sum).unwrap() < 1e-10);
        }
    }

    #[test]
    fn kappa_enters_linearly() {
        let base = |kappa: f64| {
            let p =
                MoleculeParams::from_thz("lin", 10.0, 20.0, 50.0, kappa, 30.0, 0.0).unwrap();
            build_hamiltonian(&p, cutoff(6)).unwrap()
        };
        let h0 = base(0.0);
        let h1 = base(40.0);
        let h2 = base(80.0);
        // H(2κ) − H(0) = 2·(H(κ) − H(0)).
        let lhs = h2.add_scaled(C64::new(-1.0, 0.0), &h0).unwrap();
        let rhs = h1
            .add_scaled(C64::new(-1.0, 0.0), &h0)
            .unwrap()
            .scaled(C64::new(2.0, 0.0));
        assert!(lhs.max_abs_diff(&rhs).unwrap() < 1e-9);
    }

    #[test]
    fn zero_lambda_conserves_sigma_z() {
        let p = MoleculeParams::from_thz("dec", 10.0, 20.0, 50.0, 40.0, 0.0, 0.1).unwrap();
        let c = cutoff(8);
        let h = build_hamiltonian(&p, c).unwrap();
        let sz = fock::lift_qubit(c, &fock::pauli_z()).unwrap();
        let comm = h
            .matmul(&sz)
            .unwrap()
            .add_scaled(C64::new(-1.0, 0.0), &sz.matmul(&h).unwrap())
            .unwrap();
        assert!(comm.max_abs() < 1e-12);
    }

    #[test]
    fn nan_parameter_rejected() {
        assert!(matches!(
            MoleculeParams::from_thz("bad", 1.0, 1.0, 0.0, f64::NAN, 0.0, 0.0),
            Err(Error::NonFinite { .. })
        ));
        assert!(matches!(
            MoleculeParams::from_thz("bad", -1.0, 1.0, 0.0, 0.0, 0.0, 0.0),
            Err(Error::InvalidParameter { .. })
        ));
    }

    #[test]
    fn initial_state_allene_is_bare_basis_state() {
        let c = cutoff(8);
        let psi = initial_state(&allene(), c).unwrap();
        let expect = StateVector::basis(c.composite_dim(), c.composite_index(1, 0, 0).unwrap())
            .unwrap();
        let overlap = psi.inner(&expect).unwrap();
        assert_relative_eq!(overlap.re, 1.0, max_relative = 1e-15);
    }

    #[test]
    fn initial_state_pyrazine_occupations() {
        let c = cutoff(32);
        let psi = initial_state(&pyrazine(), c).unwrap();
        let n1 = fock::lift_mode(c, 1, &fock::number(c)).unwrap();
        let n2 = fock::lift_mode(c, 2, &fock::number(c)).unwrap();
        assert!((psi.expectation(&n1).unwrap().re - 0.0441).abs() < 1e-10);
        assert_abs_diff_eq!(psi.expectation(&n2).unwrap().re, 0.0);
        assert_relative_eq!(diabatic_population(&psi, c).unwrap(), 1.0, max_relative = 1e-12);
    }

    #[test]
    fn unnormalized_state_rejected() {
        let c = cutoff(4);
        let mut psi = initial_state(&allene(), c).unwrap();
        for a in psi.amplitudes_mut() {
            *a *= 1.001;
        }
        assert!(matches!(
            diabatic_population(&psi, c),
            Err(Error::NotNormalized { .. })
        ));
    }

    #[test]
    fn allene_intersection_at_origin() {
        let params = allene();
        let (q1, q2) = conical_intersection(&params).unwrap();
        assert_abs_diff_eq!(q1, 0.0);
        assert_abs_diff_eq!(q2, 0.0);
        let (lo, hi) = adiabatic_energies(&params, 0.0, 0.0);
        assert!(hi - lo < 1e-12);
        // ΔE = 0 makes the surfaces symmetric under Q₁ → −Q₁.
        for &q in &[0.3, 1.1, 2.7] {
            let a = adiabatic_energies(&params, q, 0.4);
            let b = adiabatic_energies(&params, -q, 0.4);
            assert_relative_eq!(a.0, b.0, max_relative = 1e-14);
            assert_relative_eq!(a.1, b.1, max_relative = 1e-14);
        }
    }

    #[test]
    fn butatriene_intersection_location_and_gap() {
        let params = butatriene();
        let (q1_star, q2_star) = conical_intersection(&params).unwrap();
        assert_relative_eq!(q1_star, 131.5 / 124.2, max_relative = 1e-12);
        assert_abs_diff_eq!(q2_star, 0.0);
        let (lo, hi) = adiabatic_energies(&params, q1_star, q2_star);
        assert!(hi - lo < 1e-9, "gap at CI = {:.3e}", hi - lo);
    }

    #[test]
    fn gap_along_seam_axis_matches_linear_formula() {
        // On Q₂ = 0 the splitting is |ΔE − 2κQ₁|.
        let params = butatriene();
        for &q1 in &[-2.0, -0.5, 0.0, 0.8, 1.5, 3.0] {
            let (lo, hi) = adiabatic_energies(&params, q1, 0.0);
            let expect = (params.delta_e() - 2.0 * params.kappa() * q1).abs();
            assert_relative_eq!(hi - lo, expect, max_relative = 1e-12);
        }
    }

    #[test]
    fn grid_minimum_gap_sits_next_to_intersection() {
        let params = butatriene();
        let axis = default_surface_axis();
        assert_eq!(axis.len(), 161);
        assert_abs_diff_eq!(axis[0], -4.0);
        assert_abs_diff_eq!(axis[160], 4.0);
        let grid = adiabatic_surfaces(&params, &axis, &axis).unwrap();
        let mut best = (0usize, 0usize, f64::INFINITY);
        for i1 in 0..axis.len() {
            for i2 in 0..axis.len() {
                let (lo, hi) = grid.at(i1, i2);
                assert!(hi >= lo, "upper < lower at ({i1}, {i2})");
                if hi - lo < best.2 {
                    best = (i1, i2, hi - lo);
                }
            }
        }
        let (q1_star, q2_star) = conical_intersection(&params).unwrap();
        let cell = axis[1] - axis[0];
        assert!((axis[best.0] - q1_star).abs() <= cell);
        assert!((axis[best.1] - q2_star).abs() <= cell);
    }

    #[test]
    fn surface_axis_validation() {
        let params = allene();
        assert!(matches!(
            adiabatic_surfaces(&params, &[], &[0.0]),
            Err(Error::InvalidParameter { .. })
        ));
        assert!(matches!(
            adiabatic_surfaces(&params, &[0.0, 0.0], &[0.0]),
            Err(Error::InvalidParameter { .. })
        ));
    }

    #[test]
    fn preset_lookup_is_case_insensitive() {
        assert_eq!(preset("Pyrazine").unwrap().name(), "pyrazine");
        assert!(matches!(preset("benzene"), Err(Error::UnknownPreset(_))));
        for name in PRESET_NAMES {
            let p = preset(name).unwrap();
            assert!(p.tabulated_f().is_some());
        }
    }
}
