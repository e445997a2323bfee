//! `cavlink`: effective parameters, gate tables, fidelity sweeps and model
//! checks for cavity-waveguide photonic gates.
//!
//! Exit codes: 0 success, 1 threshold breach, 2 invalid input.

mod angle;
mod commands;
mod config;

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use cavlink_core::open_system::DecoherenceParams;
use cavlink_core::units::Units;
use clap::{Parser, Subcommand, ValueEnum};

use commands::*;
use config::{default_spacing, Axis, Builtin, Definition, Job, SpacingArg};

#[derive(Parser)]
#[command(name = "cavlink", version, about = "Photonic gates from waveguide-coupled cavities and a quantum dot")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Print effective detunings and couplings for a set of phase settings.
    EffectiveParams {
        /// Named row (one qubit: hold, rabi, relative-phase; two qubits: A, B, C, D, feed-rabi, feed-phase, hold).
        #[arg(long, conflicts_with = "angles")]
        row: Option<String>,
        /// Comma-separated angles, 3 (θM1,θM2,θ12) or 8 (M3,34,4y,My,Mx,5x,56,M6); accepts forms like pi/2.
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true, value_parser = parse_angle_arg)]
        angles: Option<Vec<f64>>,
        #[arg(long, value_enum, default_value = "two")]
        geometry: Geometry,
        /// Coupling rate Γ.
        #[arg(long, default_value_t = 1.0)]
        gamma: f64,
        /// Reference frequency ω0 (rotating frame: 0).
        #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
        omega0: f64,
    },
    /// Step-resolved q-CNOT truth table.
    TruthTable {
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// q-CNOT fidelity along one decoherence axis.
    FidelitySweep {
        #[arg(long, value_enum)]
        axis: Axis,
        /// Lower end (µeV linewidth or Q).
        #[arg(long)]
        min: f64,
        #[arg(long)]
        max: f64,
        #[arg(long, default_value_t = 20)]
        points: usize,
        /// Grid spacing; linear for dephasing and log for Q unless given.
        #[arg(long, value_enum)]
        spacing: Option<SpacingArg>,
        /// 1/(4Γ) in picoseconds.
        #[arg(long, default_value_t = 38.5)]
        gamma_inv_ps: f64,
        #[arg(long, value_enum, default_value = "basis-average")]
        definition: Definition,
        #[arg(long, default_value_t = 1.55)]
        wavelength_um: f64,
        /// Fixed linewidth (µeV) while sweeping Q.
        #[arg(long, default_value_t = 0.0)]
        linewidth_uev: f64,
        /// Fixed Q while sweeping dephasing; lossless if omitted.
        #[arg(long)]
        q_factor: Option<f64>,
        /// Exciton decay into free space (s⁻¹).
        #[arg(long, default_value_t = 0.0)]
        qd_radiative_rate: f64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Check model equivalences against their thresholds.
    Verify {
        #[arg(long, value_enum)]
        which: Which,
        /// Round-trip time τ_P in units of 1/Γ.
        #[arg(long, default_value_t = 0.01)]
        tau_p: f64,
        /// Fabry-Perot modes kept (101 for full-vs-effective, 201 for cmt-vs-full).
        #[arg(long)]
        modes: Option<usize>,
        /// Simulated time in units of 1/Γ (5 and 3 by default).
        #[arg(long)]
        horizon: Option<f64>,
    },
    /// Run the entangled-pair source and report the final state.
    Entangle {
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// q-CNOT duration in picoseconds.
    GateTime {
        #[arg(long, default_value_t = 38.5)]
        gamma_inv_ps: f64,
    },
    /// Execute a TOML run configuration.
    Run {
        #[arg(long)]
        config: PathBuf,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Geometry {
    #[value(name = "one", alias = "1q")]
    One,
    #[value(name = "two", alias = "2q")]
    Two,
}

#[derive(Clone, Copy, ValueEnum)]
enum Which {
    FullVsEffective,
    CmtVsFull,
}

fn parse_angle_arg(s: &str) -> Result<f64, String> {
    angle::parse_angle(s)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("cavlink: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

/// Opens `path` or stdout.
fn sink(path: Option<&Path>) -> CliResult<Box<dyn Write>> {
    Ok(match path {
        Some(p) => {
            Box::new(BufWriter::new(File::create(p).map_err(|e| CliError::Input(format!("{}: {e}", p.display())))?))
        }
        None => Box::new(BufWriter::new(std::io::stdout().lock())),
    })
}

fn with_sink(path: Option<&Path>, f: impl FnOnce(&mut dyn Write) -> CliResult) -> CliResult {
    let mut w = sink(path)?;
    let r = f(&mut *w);
    w.flush()?;
    r
}

fn dispatch(cmd: Command) -> CliResult {
    match cmd {
        Command::EffectiveParams { row, angles, geometry, gamma, omega0 } => {
            let a = match (row, angles) {
                (Some(r), None) => resolve_row(&r, matches!(geometry, Geometry::One))?,
                (None, Some(v)) => angles_from_values(&v)?,
                _ => return Err(CliError::Input("give --row or --angles".into())),
            };
            with_sink(None, |w| effective_params(&a, gamma, omega0, w))
        }
        Command::TruthTable { out } => with_sink(out.as_deref(), truth_table_csv),
        Command::FidelitySweep {
            axis,
            min,
            max,
            points,
            spacing,
            gamma_inv_ps,
            definition,
            wavelength_um,
            linewidth_uev,
            q_factor,
            qd_radiative_rate,
            out,
        } => {
            let mut fixed = DecoherenceParams::lossless()
                .with_linewidth_uev(linewidth_uev)
                .with_wavelength(wavelength_um * 1e-6)
                .with_qd_radiative_rate(qd_radiative_rate);
            if let Some(q) = q_factor {
                fixed = fixed.with_q(q);
            }
            fixed.validate()?;
            let req = SweepRequest {
                axis: axis.into(),
                grid: grid(min, max, points, spacing.map_or(default_spacing(axis), Into::into))?,
                fixed,
                units: Units::from_quarter_lifetime_ps(gamma_inv_ps)?,
                definition: definition.into(),
            };
            run_sweep(&req, out.as_deref())
        }
        Command::Verify { which, tau_p, modes, horizon } => {
            let (m, h) = match which {
                Which::FullVsEffective => (101, 5.0),
                Which::CmtVsFull => (201, 3.0),
            };
            let o = VerifyOptions { tau_p, modes: modes.unwrap_or(m), horizon: horizon.unwrap_or(h) };
            with_sink(None, |w| match which {
                Which::FullVsEffective => verify_full_vs_effective(&o, w),
                Which::CmtVsFull => verify_cmt_vs_full(&o, w),
            })
        }
        Command::Entangle { out, seed } => with_sink(out.as_deref(), |w| entangle_csv(seed, w)),
        Command::GateTime { gamma_inv_ps } => {
            let u = Units::from_quarter_lifetime_ps(gamma_inv_ps)?;
            with_sink(None, |w| gate_time(&u, w))
        }
        Command::Run { config } => run_config(&config),
    }
}

fn run_sweep(req: &SweepRequest, out: Option<&Path>) -> CliResult {
    let mut crossing = None;
    with_sink(out, |w| {
        crossing = fidelity_sweep_csv(req, w)?;
        Ok(())
    })?;
    match crossing {
        Some(x) => eprintln!("fidelity crosses 0.9 at {}", num(x)),
        None => eprintln!("fidelity does not cross 0.9 on this grid"),
    }
    Ok(())
}

fn run_config(path: &Path) -> CliResult {
    let loaded = config::load(path)?;
    let out = loaded.output.as_deref();
    let seed = loaded.config.seed;
    match &loaded.job {
        Job::Sweep { axis, grid } => {
            let req = SweepRequest {
                axis: (*axis).into(),
                grid: grid.clone(),
                fixed: loaded.decoherence,
                units: loaded.units,
                definition: loaded.config.decoherence.fidelity.into(),
            };
            run_sweep(&req, out)
        }
        Job::Program { space, program, initial } => with_sink(out, |w| run_program_csv(space, program, initial, w)),
        Job::Protocol(b) => {
            let space = cavlink_core::Space::new(cavlink_core::HilbertSpec::two_qubit(1))?;
            match b {
                Builtin::TruthTable => with_sink(out, truth_table_csv),
                Builtin::Entangle => with_sink(out, |w| entangle_csv(seed, w)),
                Builtin::GateTime => with_sink(out, |w| gate_time(&loaded.units, w)),
                Builtin::Fidelity => with_sink(out, |w| {
                    single_fidelity(&loaded.decoherence, &loaded.units, loaded.config.decoherence.fidelity.into(), w)
                }),
                Builtin::Qcnot | Builtin::Cnot => {
                    let prog = b.program().expect("gate protocols carry a program");
                    with_sink(out, |w| logical_matrix_csv(&space, &prog, w))
                }
            }
        }
    }
}
