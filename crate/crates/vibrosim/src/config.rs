//! Run configuration: a TOML document with nested sections for the
//! molecule, evolution window, open-system rates, measurement emulation,
//! ion-mapping knobs, resource estimation, and convergence sweeps.
//!
//! Unknown keys are rejected so that typos in scientific workflows fail
//! loudly instead of silently running defaults. Presets are embedded in
//! the binary; a config file only selects and overrides. The full schema:
//!
//! ```toml
//! [molecule]
//! preset = "butatriene"          # or the inline block below, not both
//! # name = "custom"              # inline: all six parameters required
//! # nu1_thz = 62.9
//! # nu2_thz = 22.0
//! # delta_e_thz = 131.5
//! # kappa_thz = 62.1
//! # lambda_thz = 69.6
//! # alpha = -0.140
//!
//! [evolution]
//! cutoff = 32                    # Fock states per mode
//! t_max_fs = 300.0               # default: the molecule's window
//! n_points = 400
//! tolerance = 1e-12
//! max_step_fs = 100.0
//!
//! [open_system]
//! cutoff = 24
//! gamma_per_ps = 491.0           # equal heating/cooling on both modes…
//! # heating_per_ps = [491.0, 491.0]   # …or explicit per-mode arrays
//! # cooling_per_ps = [491.0, 491.0]
//! max_step_fs = 100.0
//!
//! [measurement]
//! shots = 500
//! seed = 0                       # --seed overrides
//!
//! [ion]
//! omega1_rabi_hz = 966.0         # default: derived from the tabulated F
//! trap_hz = [1.33e6, 1.51e6, 0.5e6]
//! power_ceiling_hz = 20e3
//!
//! [resources]
//! cutoff = 16
//! t_max_fs = 300.0
//! target_mse = 3.4e-3            # or pin the depth with `steps`, not both
//! # steps = 300
//! cnot_per_step = 1000
//! step_ceiling = 100000
//!
//! [convergence]
//! cutoffs = [8, 16, 24, 32]
//! ```

use serde::Deserialize;

use crate::error::{Error, Result};
use crate::fock::FockCutoff;
use crate::ion::TrapConfig;
use crate::lindblad::{DissipationRates, ModeRates, OpenSettings};
use crate::lvc::{self, MoleculeParams, N_MODES};
use crate::propagator::{EvolutionSettings, Method};
use crate::resources::{StepsPolicy, DEFAULT_CNOT_PER_STEP, DEFAULT_STEP_CEILING, DEFAULT_TARGET_MSE};

/// Default Fock states per mode for closed-system (state-vector) runs.
pub const DEFAULT_CLOSED_CUTOFF: usize = 32;
/// Default Fock states per mode for open-system (density-matrix) runs.
pub const DEFAULT_OPEN_CUTOFF: usize = 24;
/// Default number of CSV sample points over the window.
pub const DEFAULT_N_POINTS: usize = 400;
/// Default Fock states per mode for the Trotter-depth search (the
/// wavepacket occupies only low number states, so the searched depth is
/// insensitive to the cutoff well before dynamics converge).
pub const DEFAULT_RESOURCES_CUTOFF: usize = 16;
/// Default cutoff ladder for convergence sweeps.
pub const DEFAULT_CONVERGENCE_CUTOFFS: [usize; 4] = [8, 16, 24, 32];

/// Shot-noise emulation request: `shots` measurements per sample time.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Measurement {
    pub shots: u64,
    pub seed: u64,
}

/// Resolved knobs for the `resources` command.
#[derive(Debug, Clone)]
pub struct ResourcesConfig {
    pub cutoff: FockCutoff,
    pub t_max_fs: f64,
    pub policy: StepsPolicy,
    pub cnot_per_step: usize,
    pub step_ceiling: usize,
}

/// Fully resolved, validated run configuration shared by every command.
#[derive(Debug, Clone)]
pub struct RunConfig {
    pub params: MoleculeParams,
    pub cutoff: FockCutoff,
    pub t_max_fs: f64,
    pub n_points: usize,
    pub evolution: EvolutionSettings,
    pub open_cutoff: FockCutoff,
    pub open_rates: DissipationRates,
    pub open_settings: OpenSettings,
    pub measurement: Option<Measurement>,
    /// SDF-1 Rabi frequency in rad/s, when pinned by the config.
    pub omega1_rabi: Option<f64>,
    pub trap: TrapConfig,
    pub resources: ResourcesConfig,
    pub convergence_cutoffs: Vec<FockCutoff>,
}

// ---------------------------------------------------------------------------
// Raw (serde) layer: every field optional, unknown keys rejected.
// ---------------------------------------------------------------------------

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    molecule: Option<RawMolecule>,
    evolution: Option<RawEvolution>,
    open_system: Option<RawOpenSystem>,
    measurement: Option<RawMeasurement>,
    ion: Option<RawIon>,
    resources: Option<RawResources>,
    convergence: Option<RawConvergence>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawMolecule {
    preset: Option<String>,
    name: Option<String>,
    nu1_thz: Option<f64>,
    nu2_thz: Option<f64>,
    delta_e_thz: Option<f64>,
    kappa_thz: Option<f64>,
    lambda_thz: Option<f64>,
    alpha: Option<f64>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawEvolution {
    cutoff: Option<usize>,
    t_max_fs: Option<f64>,
    n_points: Option<usize>,
    tolerance: Option<f64>,
    max_step_fs: Option<f64>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawOpenSystem {
    cutoff: Option<usize>,
    gamma_per_ps: Option<f64>,
    heating_per_ps: Option<Vec<f64>>,
    cooling_per_ps: Option<Vec<f64>>,
    max_step_fs: Option<f64>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawMeasurement {
    shots: Option<u64>,
    seed: Option<u64>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawIon {
    omega1_rabi_hz: Option<f64>,
    trap_hz: Option<Vec<f64>>,
    power_ceiling_hz: Option<f64>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawResources {
    cutoff: Option<usize>,
    t_max_fs: Option<f64>,
    target_mse: Option<f64>,
    steps: Option<usize>,
    cnot_per_step: Option<usize>,
    step_ceiling: Option<usize>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConvergence {
    cutoffs: Option<Vec<usize>>,
}

// ---------------------------------------------------------------------------
// Resolution
// ---------------------------------------------------------------------------

fn invalid(message: String) -> Error {
    Error::ConfigInvalid(message)
}

fn positive(field: &str, value: f64) -> Result<f64> {
    if value.is_finite() && value > 0.0 {
        Ok(value)
    } else {
        Err(invalid(format!("{field} must be positive and finite, got {value}")))
    }
}

/// Parses and validates a TOML configuration document.
pub fn parse_config(text: &str) -> Result<RunConfig> {
    resolve_config(Some(text), None, None)
}

/// Builds the all-defaults configuration for a named preset (no file).
pub fn preset_config(name: &str) -> Result<RunConfig> {
    resolve_config(None, Some(name), None)
}

/// Full resolution path used by the CLI: optional config text, optional
/// `--molecule` preset override (wins over the file's `[molecule]`), and
/// optional `--seed` override for the measurement stream.
pub fn resolve_config(
    text: Option<&str>,
    molecule_override: Option<&str>,
    seed_override: Option<u64>,
) -> Result<RunConfig> {
    let raw: RawConfig = match text {
        Some(t) => toml::from_str(t).map_err(|e| Error::ConfigParse(e.to_string()))?,
        None => RawConfig::default(),
    };

    // Molecule: the file's section must be internally consistent even when
    // a flag overrides it — a malformed file is never silently accepted.
    let file_params = raw.molecule.as_ref().map(resolve_molecule).transpose()?;
    let params = match molecule_override {
        Some(name) => lvc::preset(name)?,
        None => file_params.ok_or_else(|| {
            invalid("no molecule given: add a [molecule] section or pass --molecule".to_string())
        })?,
    };

    let evo = raw.evolution.unwrap_or_default();
    let cutoff = FockCutoff::new(evo.cutoff.unwrap_or(DEFAULT_CLOSED_CUTOFF))?;
    let t_max_fs = positive(
        "evolution.t_max_fs",
        evo.t_max_fs.unwrap_or_else(|| params.default_window_fs()),
    )?;
    let n_points = evo.n_points.unwrap_or(DEFAULT_N_POINTS);
    if n_points < 2 {
        return Err(invalid(format!(
            "evolution.n_points must be at least 2, got {n_points}"
        )));
    }
    let evolution = EvolutionSettings {
        tolerance: evo.tolerance.unwrap_or(EvolutionSettings::default().tolerance),
        max_step_fs: evo.max_step_fs.unwrap_or(EvolutionSettings::default().max_step_fs),
        method: Method::Exact,
    };
    evolution.validate()?;

    let open = raw.open_system.unwrap_or_default();
    let open_cutoff = FockCutoff::new(open.cutoff.unwrap_or(DEFAULT_OPEN_CUTOFF))?;
    let open_rates = resolve_rates(&open)?;
    let open_settings = match open.max_step_fs {
        Some(h) => OpenSettings::new(h)?,
        None => OpenSettings::default(),
    };

    let measurement = match raw.measurement {
        None => None,
        Some(m) => {
            let shots = m.shots.ok_or_else(|| {
                invalid("measurement.shots is required when [measurement] is present".to_string())
            })?;
            if shots == 0 {
                return Err(invalid("measurement.shots must be at least 1".to_string()));
            }
            Some(Measurement {
                shots,
                seed: seed_override.or(m.seed).unwrap_or(0),
            })
        }
    };

    let ion = raw.ion.unwrap_or_default();
    let omega1_rabi = ion
        .omega1_rabi_hz
        .map(|hz| positive("ion.omega1_rabi_hz", hz).map(|hz| hz * std::f64::consts::TAU))
        .transpose()?;
    let mut trap = TrapConfig::default();
    if let Some(hz) = ion.trap_hz {
        let freqs: [f64; 3] = hz.try_into().map_err(|v: Vec<f64>| {
            invalid(format!("ion.trap_hz must list exactly 3 frequencies, got {}", v.len()))
        })?;
        trap = TrapConfig::new(
            freqs.map(|f| f * std::f64::consts::TAU),
            trap.power_ceiling(),
        )?;
    }
    if let Some(hz) = ion.power_ceiling_hz {
        trap = trap.with_power_ceiling(positive("ion.power_ceiling_hz", hz)? * std::f64::consts::TAU)?;
    }

    let res = raw.resources.unwrap_or_default();
    let policy = match (res.steps, res.target_mse) {
        (Some(_), Some(_)) => {
            return Err(invalid(
                "resources: give either steps (pinned) or target_mse, not both".to_string(),
            ))
        }
        (Some(n), None) => {
            if n == 0 {
                return Err(invalid("resources.steps must be at least 1".to_string()));
            }
            StepsPolicy::Pinned(n)
        }
        (None, Some(t)) => StepsPolicy::TargetMse(positive("resources.target_mse", t)?),
        (None, None) => StepsPolicy::TargetMse(DEFAULT_TARGET_MSE),
    };
    let resources = ResourcesConfig {
        cutoff: FockCutoff::new(res.cutoff.unwrap_or(DEFAULT_RESOURCES_CUTOFF))?,
        t_max_fs: positive(
            "resources.t_max_fs",
            res.t_max_fs.unwrap_or_else(|| params.default_window_fs()),
        )?,
        policy,
        cnot_per_step: match res.cnot_per_step {
            Some(0) => {
                return Err(invalid("resources.cnot_per_step must be at least 1".to_string()))
            }
            Some(c) => c,
            None => DEFAULT_CNOT_PER_STEP,
        },
        step_ceiling: match res.step_ceiling {
            Some(0) => return Err(invalid("resources.step_ceiling must be at least 1".to_string())),
            Some(c) => c,
            None => DEFAULT_STEP_CEILING,
        },
    };

    let cutoffs = raw
        .convergence
        .unwrap_or_default()
        .cutoffs
        .unwrap_or_else(|| DEFAULT_CONVERGENCE_CUTOFFS.to_vec());
    if cutoffs.len() < 2 {
        return Err(invalid(format!(
            "convergence.cutoffs needs at least 2 entries, got {}",
            cutoffs.len()
        )));
    }
    for w in cutoffs.windows(2) {
        if w[0] >= w[1] {
            return Err(invalid(
                "convergence.cutoffs must be strictly increasing".to_string(),
            ));
        }
    }
    let convergence_cutoffs = cutoffs
        .into_iter()
        .map(FockCutoff::new)
        .collect::<Result<Vec<_>>>()?;

    Ok(RunConfig {
        params,
        cutoff,
        t_max_fs,
        n_points,
        evolution,
        open_cutoff,
        open_rates,
        open_settings,
        measurement,
        omega1_rabi,
        trap,
        resources,
        convergence_cutoffs,
    })
}

/// Molecule section rules: exactly one of `preset` or the full inline
/// parameter block.
fn resolve_molecule(m: &RawMolecule) -> Result<MoleculeParams> {
    let inline_fields = [
        ("name", m.name.is_some()),
        ("nu1_thz", m.nu1_thz.is_some()),
        ("nu2_thz", m.nu2_thz.is_some()),
        ("delta_e_thz", m.delta_e_thz.is_some()),
        ("kappa_thz", m.kappa_thz.is_some()),
        ("lambda_thz", m.lambda_thz.is_some()),
        ("alpha", m.alpha.is_some()),
    ];
    let any_inline = inline_fields.iter().any(|(_, given)| *given);
    match (&m.preset, any_inline) {
        (Some(_), true) => Err(invalid(
            "molecule: give either preset or the inline parameter block, not both".to_string(),
        )),
        (Some(name), false) => lvc::preset(name),
        (None, true) => {
            let missing: Vec<&str> = inline_fields
                .iter()
                .filter(|(_, given)| !given)
                .map(|(name, _)| *name)
                .collect();
            if !missing.is_empty() {
                return Err(invalid(format!(
                    "molecule: inline definition is missing {}",
                    missing.join(", ")
                )));
            }
            MoleculeParams::from_thz(
                m.name.as_deref().unwrap_or_default(),
                m.nu1_thz.unwrap(),
                m.nu2_thz.unwrap(),
                m.delta_e_thz.unwrap(),
                m.kappa_thz.unwrap(),
                m.lambda_thz.unwrap(),
                m.alpha.unwrap(),
            )
        }
        (None, false) => Err(invalid(
            "molecule: section is present but empty; give preset or inline parameters".to_string(),
        )),
    }
}

/// Open-system rate rules: the `gamma_per_ps` shorthand (equal heating and
/// cooling on both modes) or explicit per-mode arrays, not both; absent
/// section means zero rates (the master equation then reproduces closed
/// dynamics).
fn resolve_rates(open: &RawOpenSystem) -> Result<DissipationRates> {
    let arrays_given = open.heating_per_ps.is_some() || open.cooling_per_ps.is_some();
    match (open.gamma_per_ps, arrays_given) {
        (Some(_), true) => Err(invalid(
            "open_system: give gamma_per_ps or the per-mode arrays, not both".to_string(),
        )),
        (Some(g), false) => DissipationRates::equal(N_MODES, g),
        (None, true) => {
            let field = |name: &str, v: &Option<Vec<f64>>| -> Result<Vec<f64>> {
                let v = v.clone().ok_or_else(|| {
                    invalid(format!("open_system: {name} is required alongside its partner"))
                })?;
                if v.len() != N_MODES {
                    return Err(invalid(format!(
                        "open_system.{name} must list exactly {N_MODES} rates, got {}",
                        v.len()
                    )));
                }
                Ok(v)
            };
            let heat = field("heating_per_ps", &open.heating_per_ps)?;
            let cool = field("cooling_per_ps", &open.cooling_per_ps)?;
            let modes = heat
                .iter()
                .zip(cool.iter())
                .map(|(&h, &c)| ModeRates::new(h, c))
                .collect::<Result<Vec<_>>>()?;
            DissipationRates::per_mode(modes)
        }
        (None, false) => Ok(DissipationRates::zero(N_MODES)),
    }
}

/// Renders a molecule as an inline `[molecule]` block (THz frequencies),
/// the inverse of the inline parsing path.
pub fn render_inline_molecule(params: &MoleculeParams) -> String {
    format!(
        "[molecule]\nname = \"{}\"\nnu1_thz = {:?}\nnu2_thz = {:?}\ndelta_e_thz = {:?}\nkappa_thz = {:?}\nlambda_thz = {:?}\nalpha = {:?}\n",
        params.name(),
        params.nu1_thz(),
        params.nu2_thz(),
        params.delta_e_thz(),
        params.kappa_thz(),
        params.lambda_thz(),
        params.alpha(),
    )
}
