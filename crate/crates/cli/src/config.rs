//! `run --config` documents: flat TOML sections, unknown keys rejected.

use std::path::{Path, PathBuf};

use cavlink_core::dynamics::{cnot_program, qcnot_program, PhaseProgram};
use cavlink_core::open_system::{DecoherenceParams, FidelityDefinition, SweepAxis};
use cavlink_core::units::Units;
use cavlink_core::{HilbertSpec, PhaseSettings1Q, PhaseSettings2Q, QdLevel, Setting2Q, Space, StateVector};
use serde::Deserialize;

use crate::angle::Number;
use crate::commands::{grid, CliError, CliResult, Spacing};

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    /// Seed for the phase-setting solver.
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub units: UnitsSection,
    #[serde(default)]
    pub decoherence: DecoherenceSection,
    pub protocol: Option<ProtocolSection>,
    pub sweep: Option<SweepSection>,
    #[serde(default)]
    pub output: OutputSection,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct UnitsSection {
    /// `1/(4Γ)` in picoseconds.
    pub gamma_inv_ps: Option<f64>,
    /// `Γ` in s⁻¹.
    pub gamma_per_s: Option<f64>,
}

impl UnitsSection {
    pub fn resolve(&self) -> CliResult<Units> {
        Ok(match (self.gamma_inv_ps, self.gamma_per_s) {
            (Some(_), Some(_)) => return Err(CliError::Input("give gamma_inv_ps or gamma_per_s, not both".into())),
            (None, Some(g)) => Units::new(g)?,
            (ps, None) => Units::from_quarter_lifetime_ps(ps.unwrap_or(38.5))?,
        })
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DecoherenceSection {
    /// Dot linewidth `2ħγ` in µeV.
    #[serde(default)]
    pub linewidth_uev: f64,
    /// Cavity quality factor; omitted means lossless.
    pub q_factor: Option<f64>,
    #[serde(default = "default_wavelength_um")]
    pub wavelength_um: f64,
    #[serde(default)]
    pub fidelity: Definition,
    /// Exciton decay into free space, s⁻¹.
    #[serde(default)]
    pub qd_radiative_rate: f64,
}

fn default_wavelength_um() -> f64 {
    1.55
}

impl Default for DecoherenceSection {
    fn default() -> Self {
        Self {
            linewidth_uev: 0.0,
            q_factor: None,
            wavelength_um: default_wavelength_um(),
            fidelity: Definition::default(),
            qd_radiative_rate: 0.0,
        }
    }
}

impl DecoherenceSection {
    pub fn resolve(&self) -> CliResult<DecoherenceParams> {
        let mut d = DecoherenceParams::lossless()
            .with_linewidth_uev(self.linewidth_uev)
            .with_wavelength(self.wavelength_um * 1e-6)
            .with_qd_radiative_rate(self.qd_radiative_rate);
        if let Some(q) = self.q_factor {
            d = d.with_q(q);
        }
        d.validate()?;
        Ok(d)
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Definition {
    #[default]
    BasisAverage,
    Process,
}

impl From<Definition> for FidelityDefinition {
    fn from(d: Definition) -> Self {
        match d {
            Definition::BasisAverage => FidelityDefinition::BasisAverage,
            Definition::Process => FidelityDefinition::Process,
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProtocolSection {
    /// Built-in protocol name.
    pub name: Option<String>,
    /// Program file, relative to the config file.
    pub program: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Axis {
    Dephasing,
    Qfactor,
}

impl From<Axis> for SweepAxis {
    fn from(a: Axis) -> Self {
        match a {
            Axis::Dephasing => SweepAxis::Dephasing,
            Axis::Qfactor => SweepAxis::QFactor,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum SpacingArg {
    Linear,
    Log,
}

impl From<SpacingArg> for Spacing {
    fn from(s: SpacingArg) -> Self {
        match s {
            SpacingArg::Linear => Spacing::Linear,
            SpacingArg::Log => Spacing::Log,
        }
    }
}

/// Default grid spacing per axis: linear in linewidth, logarithmic in Q.
pub fn default_spacing(axis: Axis) -> Spacing {
    match axis {
        Axis::Dephasing => Spacing::Linear,
        Axis::Qfactor => Spacing::Log,
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSection {
    pub axis: Axis,
    pub min: f64,
    pub max: f64,
    pub points: usize,
    pub spacing: Option<SpacingArg>,
}

impl SweepSection {
    pub fn grid(&self) -> CliResult<Vec<f64>> {
        grid(self.min, self.max, self.points, self.spacing.map_or(default_spacing(self.axis), Into::into))
    }
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSection {
    /// CSV destination, relative to the config file; stdout when absent.
    pub path: Option<PathBuf>,
}

/// What a validated config asks for.
pub enum Job {
    Sweep { axis: Axis, grid: Vec<f64> },
    Protocol(Builtin),
    Program { space: Space, program: PhaseProgram, initial: StateVector },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Builtin {
    TruthTable,
    Qcnot,
    Cnot,
    Entangle,
    Fidelity,
    GateTime,
}

impl Builtin {
    fn parse(s: &str) -> CliResult<Self> {
        Ok(match s {
            "truth-table" => Builtin::TruthTable,
            "qcnot" => Builtin::Qcnot,
            "cnot" => Builtin::Cnot,
            "entangle" => Builtin::Entangle,
            "fidelity" => Builtin::Fidelity,
            "gate-time" => Builtin::GateTime,
            _ => {
                return Err(CliError::Input(format!(
                    "unknown protocol '{s}' (truth-table, qcnot, cnot, entangle, fidelity, gate-time)"
                )))
            }
        })
    }

    /// Program behind a gate protocol, if it has one.
    pub fn program(self) -> Option<PhaseProgram> {
        match self {
            Builtin::Qcnot => Some(qcnot_program()),
            Builtin::Cnot => Some(cnot_program()),
            _ => None,
        }
    }
}

pub struct Loaded {
    pub config: RunConfig,
    pub units: Units,
    pub decoherence: DecoherenceParams,
    pub job: Job,
    pub output: Option<PathBuf>,
}

pub fn load(path: &Path) -> CliResult<Loaded> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::Input(format!("{}: {e}", path.display())))?;
    let base = path.parent().unwrap_or(Path::new("."));
    parse(&text, base)
}

/// Parses and validates a config; relative paths resolve against `base`.
pub fn parse(text: &str, base: &Path) -> CliResult<Loaded> {
    let config: RunConfig = toml::from_str(text).map_err(|e| CliError::Input(format!("config: {e}")))?;
    let units = config.units.resolve()?;
    let decoherence = config.decoherence.resolve()?;
    let job = match (&config.sweep, &config.protocol) {
        (Some(_), Some(_)) => return Err(CliError::Input("config has both [sweep] and [protocol]".into())),
        (None, None) => return Err(CliError::Input("config needs a [sweep] or [protocol] section".into())),
        (Some(s), None) => Job::Sweep { axis: s.axis, grid: s.grid()? },
        (None, Some(p)) => match (&p.name, &p.program) {
            (Some(n), None) => Job::Protocol(Builtin::parse(n)?),
            (None, Some(file)) => {
                let path = base.join(file);
                let text =
                    std::fs::read_to_string(&path).map_err(|e| CliError::Input(format!("{}: {e}", path.display())))?;
                parse_program(&text)?
            }
            _ => return Err(CliError::Input("[protocol] needs exactly one of name or program".into())),
        },
    };
    let output = config.output.path.as_ref().map(|p| base.join(p));
    Ok(Loaded { config, units, decoherence, job, output })
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
struct ProgramFile {
    /// Basis label of the initial state, e.g. `|0101g>`.
    initial: String,
    /// Photon-number truncation per cavity.
    #[serde(default = "one")]
    n_max: usize,
    #[serde(rename = "step", default)]
    steps: Vec<StepEntry>,
}

fn one() -> usize {
    1
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
struct StepEntry {
    /// Named two-qubit row.
    setting: Option<String>,
    /// Explicit angles: 3 for one qubit, 8 for two.
    angles: Option<Vec<Number>>,
    duration: Option<Number>,
    /// Dot level reached by an ideal π pulse from `g`.
    prepare: Option<String>,
}

fn value(n: &Number) -> CliResult<f64> {
    n.value().map_err(CliError::Input)
}

pub fn parse_program(text: &str) -> CliResult<Job> {
    let file: ProgramFile = toml::from_str(text).map_err(|e| CliError::Input(format!("program: {e}")))?;
    let mut program = PhaseProgram::new();
    for (k, s) in file.steps.iter().enumerate() {
        let ctx = |m: &str| CliError::Input(format!("step {}: {m}", k + 1));
        match (&s.setting, &s.angles, &s.prepare) {
            (Some(name), None, None) => {
                let row = Setting2Q::from_name(name).ok_or_else(|| ctx(&format!("unknown setting '{name}'")))?;
                let d = s.duration.as_ref().ok_or_else(|| ctx("missing duration"))?;
                program = program.named_2q(row, value(d)?);
            }
            (None, Some(a), None) => {
                let d = value(s.duration.as_ref().ok_or_else(|| ctx("missing duration"))?)?;
                let v: Vec<f64> = a.iter().map(value).collect::<CliResult<_>>()?;
                program = match v.len() {
                    3 => program.segment_1q(PhaseSettings1Q::new(v[0], v[1], v[2])?, d),
                    8 => program.segment_2q(PhaseSettings2Q::from_array(v.try_into().unwrap())?, d),
                    n => return Err(ctx(&format!("expected 3 or 8 angles, got {n}"))),
                };
            }
            (None, None, Some(level)) => {
                if s.duration.is_some() {
                    return Err(ctx("prepare steps are instantaneous"));
                }
                program = program.prepare(level.parse::<QdLevel>()?);
            }
            _ => return Err(ctx("give exactly one of setting, angles, prepare")),
        }
    }
    program.validate()?;
    let one_qubit = program.steps.iter().any(|s| matches!(s, cavlink_core::dynamics::Step::Segment1Q { .. }));
    let spec = if one_qubit { HilbertSpec::one_qubit(file.n_max) } else { HilbertSpec::two_qubit(file.n_max) };
    let space = Space::new(spec)?;
    let initial = parse_basis_label(&space, &file.initial)?;
    Ok(Job::Program { space, program, initial })
}

/// Basis state whose label matches `label` (brackets optional).
pub fn parse_basis_label(space: &Space, label: &str) -> CliResult<StateVector> {
    let want = label.trim().trim_start_matches('|').trim_end_matches('>').to_ascii_lowercase();
    (0..space.dim())
        .find(|&k| space.basis_label(k).trim_start_matches('|').trim_end_matches('>') == want)
        .map(|k| {
            let one = num_complex::Complex64::new(1.0, 0.0);
            let mut psi = space.vacuum().scaled(num_complex::Complex64::default());
            psi.0[k] = one;
            psi
        })
        .ok_or_else(|| CliError::Input(format!("'{label}' is not a basis label of this space")))
}
