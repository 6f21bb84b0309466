//! Command-line surface: config-driven simulation runs serialized to CSV
//! or text artifacts. One command per invocation; errors surface as a
//! single module-qualified diagnostic on stderr and a nonzero exit status.

use std::path::PathBuf;

use clap::{Parser, Subcommand};
use rayon::prelude::*;

use vibrosim::config::{self, RunConfig};
use vibrosim::error::{Error, Result};
use vibrosim::io::{write_convergence_csv, write_series_csv, write_surface_csv, ConvergenceRow};
use vibrosim::lindblad::{evolve_open, DensityMatrix};
use vibrosim::propagator::evolve;
use vibrosim::resources::estimate_with_ceiling;
use vibrosim::series::{TimeSeries, COL_POPULATION};
use vibrosim::{ion, lvc};

#[derive(Parser)]
#[command(
    name = "vibrosim",
    version,
    about = "Mixed qudit-boson simulator for non-adiabatic vibronic wavepacket dynamics"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,

    /// TOML run configuration (see the documented schema).
    #[arg(long, global = true, value_name = "PATH")]
    config: Option<PathBuf>,

    /// Molecule preset (allene, butatriene, pyrazine); overrides the
    /// config's [molecule] section.
    #[arg(long, global = true, value_name = "PRESET")]
    molecule: Option<String>,

    /// Output path; stdout when omitted.
    #[arg(long, global = true, value_name = "PATH")]
    out: Option<PathBuf>,

    /// Measurement RNG seed; overrides the config's seed.
    #[arg(long, global = true, value_name = "INT")]
    seed: Option<u64>,
}

#[derive(Subcommand)]
enum Command {
    /// Closed-system wavepacket dynamics as a CSV time series.
    Simulate,
    /// Open-system (master equation) dynamics as a CSV time series.
    Open,
    /// Adiabatic potential-energy surfaces on a coordinate grid as CSV.
    Surfaces,
    /// Molecule-to-ion pulse-parameter mapping as a text block.
    Ionmap,
    /// Qubit-based resource estimate as a report plus key-value text.
    Resources,
    /// Fock-cutoff convergence sweep as a CSV difference table.
    Converge,
}

fn main() {
    env_logger::init();
    let cli = Cli::parse();
    if let Err(e) = run(cli) {
        eprintln!("vibrosim: {e}");
        std::process::exit(1);
    }
}

fn run(cli: Cli) -> Result<()> {
    if cli.config.is_none() && cli.molecule.is_none() {
        return Err(Error::ConfigInvalid(
            "nothing to run from: pass --config <path> and/or --molecule <preset>".to_string(),
        ));
    }
    let text = cli
        .config
        .as_deref()
        .map(std::fs::read_to_string)
        .transpose()?;
    let cfg = config::resolve_config(text.as_deref(), cli.molecule.as_deref(), cli.seed)?;
    log::info!(
        "molecule {} | cutoff {} | window {} fs | {} samples",
        cfg.params.name(),
        cfg.cutoff.n_max(),
        cfg.t_max_fs,
        cfg.n_points
    );

    let artifact = match cli.command {
        Command::Simulate => simulate(&cfg)?,
        Command::Open => open(&cfg)?,
        Command::Surfaces => surfaces(&cfg)?,
        Command::Ionmap => ionmap(&cfg)?,
        Command::Resources => resources(&cfg)?,
        Command::Converge => converge(&cfg)?,
    };

    match &cli.out {
        Some(path) => {
            std::fs::write(path, artifact)?;
            log::info!("wrote {}", path.display());
        }
        None => {
            use std::io::Write;
            let stdout = std::io::stdout();
            let mut lock = stdout.lock();
            // A closed pipe downstream (e.g. `| head`) is not a failure.
            match lock.write_all(artifact.as_bytes()).and_then(|()| lock.flush()) {
                Err(e) if e.kind() == std::io::ErrorKind::BrokenPipe => {}
                other => other?,
            }
        }
    }
    Ok(())
}

/// Molecule → ion time-axis factor for the optional `t_ion_ms` column: an
/// explicitly configured SDF-1 Rabi frequency wins, then the preset's
/// tabulated value; custom molecules without either get no ion column.
fn ion_scale(cfg: &RunConfig) -> Result<Option<f64>> {
    match cfg.omega1_rabi {
        Some(omega) => ion::scaling_factor(&cfg.params, omega).map(Some),
        None => Ok(cfg.params.tabulated_f()),
    }
}

fn append_shots(cfg: &RunConfig, series: TimeSeries) -> Result<TimeSeries> {
    match cfg.measurement {
        Some(m) => ion::noisy_population_series(&series, m.shots, m.seed),
        None => Ok(series),
    }
}

fn simulate(cfg: &RunConfig) -> Result<String> {
    let grid = TimeSeries::linspace(cfg.t_max_fs, cfg.n_points)?;
    let h = lvc::build_hamiltonian(&cfg.params, cfg.cutoff)?;
    let psi0 = lvc::initial_state(&cfg.params, cfg.cutoff)?;
    let (series, _) = evolve(&h, &psi0, cfg.cutoff, &grid, &cfg.evolution)?;
    let series = append_shots(cfg, series)?;
    let mut buf = Vec::new();
    write_series_csv(&mut buf, &series, ion_scale(cfg)?)?;
    Ok(String::from_utf8(buf).expect("csv is ascii"))
}

fn open(cfg: &RunConfig) -> Result<String> {
    let grid = TimeSeries::linspace(cfg.t_max_fs, cfg.n_points)?;
    let h = lvc::build_hamiltonian(&cfg.params, cfg.open_cutoff)?;
    let psi0 = lvc::initial_state(&cfg.params, cfg.open_cutoff)?;
    let rho0 = DensityMatrix::pure(&psi0);
    let (series, _) = evolve_open(
        &h,
        &cfg.open_rates,
        &rho0,
        cfg.open_cutoff,
        &grid,
        &cfg.open_settings,
    )?;
    let series = append_shots(cfg, series)?;
    let mut buf = Vec::new();
    write_series_csv(&mut buf, &series, ion_scale(cfg)?)?;
    Ok(String::from_utf8(buf).expect("csv is ascii"))
}

fn surfaces(cfg: &RunConfig) -> Result<String> {
    let axis = lvc::default_surface_axis();
    let grid = lvc::adiabatic_surfaces(&cfg.params, &axis, &axis)?;
    let mut buf = Vec::new();
    write_surface_csv(&mut buf, &grid)?;
    Ok(String::from_utf8(buf).expect("csv is ascii"))
}

fn ionmap(cfg: &RunConfig) -> Result<String> {
    let program = ion::compile_pulse_program(&cfg.params, cfg.omega1_rabi, &cfg.trap)?;
    Ok(program.render())
}

fn resources(cfg: &RunConfig) -> Result<String> {
    let est = estimate_with_ceiling(
        &cfg.params,
        cfg.resources.cutoff,
        cfg.resources.t_max_fs,
        cfg.resources.policy,
        cfg.resources.cnot_per_step,
        cfg.resources.step_ceiling,
    )?;
    Ok(format!("{}\n{}", est.render_report(), est.render_kv()))
}

fn converge(cfg: &RunConfig) -> Result<String> {
    let grid = TimeSeries::linspace(cfg.t_max_fs, cfg.n_points)?;
    // Propagations at different cutoffs are independent; fan out, then
    // merge in cutoff order so the table is deterministic regardless of
    // the schedule.
    let traces = cfg
        .convergence_cutoffs
        .par_iter()
        .map(|&cutoff| -> Result<Vec<f64>> {
            let h = lvc::build_hamiltonian(&cfg.params, cutoff)?;
            let psi0 = lvc::initial_state(&cfg.params, cutoff)?;
            let (series, _) = evolve(&h, &psi0, cutoff, &grid, &cfg.evolution)?;
            Ok(series
                .column(COL_POPULATION)
                .expect("closed-system runs always record populations")
                .to_vec())
        })
        .collect::<Result<Vec<_>>>()?;

    let rows: Vec<ConvergenceRow> = cfg
        .convergence_cutoffs
        .windows(2)
        .zip(traces.windows(2))
        .map(|(cutoffs, pair)| ConvergenceRow {
            cutoff_a: cutoffs[0].n_max(),
            cutoff_b: cutoffs[1].n_max(),
            max_abs_delta_p: pair[0]
                .iter()
                .zip(pair[1].iter())
                .map(|(a, b)| (a - b).abs())
                .fold(0.0, f64::max),
        })
        .collect();
    let mut buf = Vec::new();
    write_convergence_csv(&mut buf, &rows)?;
    Ok(String::from_utf8(buf).expect("csv is ascii"))
}
