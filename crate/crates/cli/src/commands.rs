//! Subcommand bodies. Each writes CSV or a report to `out` and reports
//! threshold breaches through [`CliError::Breach`].

use std::io::Write;

use cavlink_core::cmt::compare_full_model;
use cavlink_core::dynamics::{entangled_source, program_unitary, run_program, truth_table, PhaseProgram};
use cavlink_core::full_model::{compare_effective, compare_effective_unchecked, CmtConfig, FullModelConfig};
use cavlink_core::open_system::{fidelity_sweep, qcnot_fidelity, DecoherenceParams, FidelityDefinition, SweepAxis};
use cavlink_core::phase::{effective_params_1q, effective_params_2q};
use cavlink_core::units::{qcnot_gate_time_ps, Units};
use cavlink_core::{
    EffectiveParams2Q, Error, HilbertSpec, PhaseSettings1Q, PhaseSettings2Q, Setting1Q, Setting2Q, Space, StateVector,
};

#[derive(Debug)]
pub enum CliError {
    /// Bad arguments or configuration (exit 2).
    Input(String),
    /// A check ran and failed its threshold (exit 1).
    Breach(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Input(_) => 2,
            CliError::Breach(_) => 1,
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Input(m) => write!(f, "invalid input: {m}"),
            CliError::Breach(m) => write!(f, "threshold breach: {m}"),
        }
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        match e {
            Error::SingularPhase { .. } => CliError::Input(format!("singular phase ({e})")),
            Error::IntegratorFailure { .. } | Error::UnstableStep { .. } | Error::ValidityViolated(_) => {
                CliError::Breach(e.to_string())
            }
            _ => CliError::Input(e.to_string()),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Input(format!("i/o: {e}"))
    }
}

pub type CliResult<T = ()> = Result<T, CliError>;

/// Fixed formatting for every float written to CSV.
pub fn num(v: f64) -> String {
    // adding zero folds -0 into +0
    format!("{:.12e}", v + 0.0)
}

pub enum Angles {
    One(PhaseSettings1Q),
    Two(PhaseSettings2Q),
}

pub fn resolve_row(name: &str, one_qubit: bool) -> CliResult<Angles> {
    let key = name.to_ascii_lowercase();
    if one_qubit {
        let s = match key.as_str() {
            "hold" => Setting1Q::Hold,
            "rabi" => Setting1Q::Rabi,
            "relative-phase" => Setting1Q::RelativePhase,
            _ => return Err(CliError::Input(format!("unknown one-qubit row '{name}' (hold, rabi, relative-phase)"))),
        };
        Ok(Angles::One(s.settings()))
    } else {
        Setting2Q::from_name(&key)
            .map(|s| Angles::Two(s.settings()))
            .ok_or_else(|| CliError::Input(format!("unknown two-qubit row '{name}'")))
    }
}

pub fn angles_from_values(v: &[f64]) -> CliResult<Angles> {
    match v.len() {
        3 => Ok(Angles::One(PhaseSettings1Q::new(v[0], v[1], v[2])?)),
        8 => Ok(Angles::Two(PhaseSettings2Q::from_array(v.try_into().unwrap())?)),
        n => Err(CliError::Input(format!("expected 3 (one-qubit) or 8 (two-qubit) angles, got {n}"))),
    }
}

pub fn effective_params(angles: &Angles, gamma: f64, omega0: f64, out: &mut dyn Write) -> CliResult {
    let rows: Vec<(&str, f64)> = match angles {
        Angles::One(s) => {
            let p = effective_params_1q(s, gamma, omega0)?;
            vec![("omega_c1", p.omega_c1), ("omega_c2", p.omega_c2), ("g12", p.g12)]
        }
        Angles::Two(s) => {
            let p = effective_params_2q(s, gamma, omega0)?;
            EffectiveParams2Q::NAMES.iter().copied().zip(p.as_array()).collect()
        }
    };
    writeln!(out, "parameter,value")?;
    for (n, v) in rows {
        writeln!(out, "{n},{}", num(v))?;
    }
    Ok(())
}

pub fn truth_table_csv(out: &mut dyn Write) -> CliResult {
    let space = Space::new(HilbertSpec::two_qubit(1))?;
    writeln!(out, "input,after_a,after_b,output,sign,max_deviation")?;
    for r in truth_table(&space)? {
        writeln!(out, "{},{},{},{},{:+},{}", r.input, r.after_a, r.after_b, r.output, r.sign as i32, num(r.deviation))?;
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Spacing {
    Linear,
    Log,
}

pub fn grid(min: f64, max: f64, points: usize, spacing: Spacing) -> CliResult<Vec<f64>> {
    if points == 0 {
        return Err(CliError::Input("a sweep needs at least one point".into()));
    }
    if !(min.is_finite() && max.is_finite() && min <= max) {
        return Err(CliError::Input(format!("invalid sweep range [{min}, {max}]")));
    }
    if spacing == Spacing::Log && min <= 0.0 {
        return Err(CliError::Input("logarithmic spacing needs a positive minimum".into()));
    }
    if points == 1 {
        return Ok(vec![min]);
    }
    let n = (points - 1) as f64;
    Ok((0..points)
        .map(|k| {
            let s = k as f64 / n;
            match spacing {
                Spacing::Linear => min + s * (max - min),
                Spacing::Log => (min.ln() + s * (max.ln() - min.ln())).exp(),
            }
        })
        .collect())
}

pub struct SweepRequest {
    pub axis: SweepAxis,
    pub grid: Vec<f64>,
    pub fixed: DecoherenceParams,
    pub units: Units,
    pub definition: FidelityDefinition,
}

/// Runs a sweep, writes `axis_value,fidelity` rows and returns the 0.9 crossing.
pub fn fidelity_sweep_csv(req: &SweepRequest, out: &mut dyn Write) -> CliResult<Option<f64>> {
    let r = fidelity_sweep(req.axis, &req.grid, &req.fixed, &req.units, req.definition)?;
    writeln!(out, "axis_value,fidelity")?;
    for (x, f) in r.grid.iter().zip(&r.fidelity) {
        writeln!(out, "{},{}", num(*x), num(*f))?;
    }
    Ok(r.crossing(0.9))
}

pub fn single_fidelity(
    d: &DecoherenceParams,
    units: &Units,
    def: FidelityDefinition,
    out: &mut dyn Write,
) -> CliResult {
    let f = qcnot_fidelity(d, units, def)?;
    writeln!(out, "fidelity")?;
    writeln!(out, "{}", num(f))?;
    Ok(())
}

pub fn entangle_csv(seed: u64, out: &mut dyn Write) -> CliResult {
    let space = Space::new(HilbertSpec::two_qubit(1))?;
    let r = entangled_source(&space, seed)?;
    write_amplitudes(&space, &r.state, out)?;
    writeln!(
        out,
        "# concurrence={} bell_fidelity={} ground_population={}",
        num(r.concurrence),
        num(r.bell_fidelity),
        num(r.ground_population)
    )?;
    Ok(())
}

pub fn write_amplitudes(space: &Space, psi: &StateVector, out: &mut dyn Write) -> CliResult {
    writeln!(out, "basis,re,im")?;
    for (k, z) in psi.0.iter().enumerate() {
        writeln!(out, "{},{},{}", space.basis_label(k), num(z.re), num(z.im))?;
    }
    Ok(())
}

pub fn gate_time(units: &Units, out: &mut dyn Write) -> CliResult {
    writeln!(out, "quarter_lifetime_ps,qcnot_gate_time_ps")?;
    writeln!(out, "{},{}", num(units.quarter_lifetime_ps()), num(qcnot_gate_time_ps(units)))?;
    Ok(())
}

/// Runs `prog` from `initial` and writes the final amplitudes.
pub fn run_program_csv(space: &Space, prog: &PhaseProgram, initial: &StateVector, out: &mut dyn Write) -> CliResult {
    prog.validate()?;
    let psi = run_program(space, prog, initial)?;
    write_amplitudes(space, &psi, out)
}

/// Writes the logical 4×4 block of a two-qubit program.
pub fn logical_matrix_csv(space: &Space, prog: &PhaseProgram, out: &mut dyn Write) -> CliResult {
    let u = program_unitary(space, prog)?;
    let idx: Vec<usize> = (0..4)
        .map(|k| {
            let (a, b) = (k / 2, k % 2);
            space.index(&[a, 1 - a, b, 1 - b], cavlink_core::QdLevel::G)
        })
        .collect::<Result<_, _>>()?;
    writeln!(out, "row,col,re,im")?;
    for (i, &r) in idx.iter().enumerate() {
        for (j, &c) in idx.iter().enumerate() {
            let z = u.0[(r, c)];
            writeln!(out, "{i},{j},{},{}", num(z.re), num(z.im))?;
        }
    }
    Ok(())
}

pub struct Check {
    pub name: String,
    pub value: f64,
    pub threshold: f64,
    /// `true` when the value must stay below the threshold.
    pub below: bool,
}

impl Check {
    fn new(name: impl Into<String>, value: f64, threshold: f64, below: bool) -> Self {
        Self { name: name.into(), value, threshold, below }
    }

    pub fn passed(&self) -> bool {
        if self.below {
            self.value < self.threshold
        } else {
            self.value > self.threshold
        }
    }
}

fn report(checks: &[Check], out: &mut dyn Write) -> CliResult {
    writeln!(out, "check,value,threshold,status")?;
    for c in checks {
        let rel = if c.below { "<" } else { ">" };
        let status = if c.passed() { "pass" } else { "FAIL" };
        writeln!(out, "{},{},{rel}{},{status}", c.name, num(c.value), num(c.threshold))?;
    }
    let failed: Vec<&str> = checks.iter().filter(|c| !c.passed()).map(|c| c.name.as_str()).collect();
    if failed.is_empty() {
        Ok(())
    } else {
        Err(CliError::Breach(failed.join(", ")))
    }
}

pub struct VerifyOptions {
    pub tau_p: f64,
    pub modes: usize,
    pub horizon: f64,
}

/// Full single-excitation model against the effective model.
pub fn verify_full_vs_effective(o: &VerifyOptions, out: &mut dyn Write) -> CliResult {
    let config = |s: Setting1Q, n: usize| -> CliResult<FullModelConfig> {
        Ok(FullModelConfig::centered(CmtConfig::from_phase_settings(&s.settings(), 1.0, o.tau_p)?, n)?)
    };
    let mut notes = Vec::new();
    let mut compare = |cfg: &FullModelConfig| -> CliResult<_> {
        match compare_effective(cfg, o.horizon) {
            Err(Error::ValidityViolated(m)) => {
                notes.push(m);
                Ok((compare_effective_unchecked(cfg, o.horizon)?, false))
            }
            r => Ok((r?, true)),
        }
    };
    let (rabi, valid) = compare(&config(Setting1Q::Rabi, o.modes)?)?;
    let (doubled, _) = compare(&config(Setting1Q::Rabi, 2 * o.modes)?)?;
    let (hold, _) = compare(&config(Setting1Q::Hold, o.modes)?)?;
    for n in &notes {
        writeln!(out, "# validity: {n}")?;
    }
    let freq = |r: &cavlink_core::full_model::EffectiveComparison| r.rabi_frequency.unwrap_or(f64::NAN);
    let delta = (freq(&doubled) - freq(&rabi)).abs() / freq(&rabi);
    let nan_fail = |v: f64| if v.is_nan() { f64::INFINITY } else { v };
    let checks = vec![
        Check::new("validity_conditions", if valid { 0.0 } else { 1.0 }, 0.5, true),
        Check::new("rabi_frequency_error", nan_fail(rabi.rabi_error.unwrap_or(f64::NAN)), 0.05, true),
        Check::new("peak_fp_leakage", rabi.peak_leakage, 1e-2, true),
        Check::new("hold_min_c1_population", hold.min_c1_population, 0.99, false),
        Check::new("window_doubling_delta", nan_fail(delta), 5e-3, true),
        Check::new("detuning_shift_error", rabi.shift_error, 1e-3, true),
    ];
    writeln!(
        out,
        "# tau_p={} modes={} horizon={} rabi_frequency={} expected={}",
        num(o.tau_p),
        o.modes,
        num(o.horizon),
        num(freq(&rabi)),
        num(rabi.expected_rabi_frequency)
    )?;
    report(&checks, out)
}

/// Classical coupled-mode trace against the full model.
pub fn verify_cmt_vs_full(o: &VerifyOptions, out: &mut dyn Write) -> CliResult {
    let mut checks = Vec::new();
    for (name, s) in
        [("rabi", Setting1Q::Rabi), ("hold", Setting1Q::Hold), ("relative_phase", Setting1Q::RelativePhase)]
    {
        let cfg = CmtConfig::from_phase_settings(&s.settings(), 1.0, o.tau_p)?;
        let half = compare_full_model(&cfg, (o.modes / 2).max(7), o.horizon)?;
        let full = compare_full_model(&cfg, o.modes, o.horizon)?;
        checks.push(Check::new(format!("{name}_max_deviation"), full.max_deviation(), 1e-3, true));
        checks.push(Check::new(format!("{name}_energy_residual"), full.max_energy_residual, 1e-6, true));
        // convergence: halving the window may not do better
        checks.push(Check::new(
            format!("{name}_window_halving_delta"),
            half.max_deviation() - full.max_deviation(),
            -1e-12,
            false,
        ));
    }
    writeln!(out, "# tau_p={} modes={} horizon={}", num(o.tau_p), o.modes, num(o.horizon))?;
    report(&checks, out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_endpoints() {
        let g = grid(1e6, 1e8, 3, Spacing::Log).unwrap();
        assert!((g[1] - 1e7).abs() < 1e-3);
        assert_eq!(grid(1.0, 4.0, 4, Spacing::Linear).unwrap(), vec![1.0, 2.0, 3.0, 4.0]);
        assert_eq!(grid(2.0, 9.0, 1, Spacing::Linear).unwrap(), vec![2.0]);
        assert!(grid(0.0, 1.0, 3, Spacing::Log).is_err());
        assert!(grid(2.0, 1.0, 3, Spacing::Linear).is_err());
    }

    #[test]
    fn singular_maps_to_exit_two() {
        let e: CliError = Error::SingularPhase { value: 0.0 }.into();
        assert_eq!(e.exit_code(), 2);
        assert!(e.to_string().contains("singular phase"));
    }

    #[test]
    fn report_flags_failures() {
        let mut buf = Vec::new();
        let r = report(&[Check::new("a", 1.0, 2.0, true), Check::new("b", 1.0, 2.0, false)], &mut buf);
        assert!(matches!(r, Err(CliError::Breach(ref m)) if m == "b"));
        let text = String::from_utf8(buf).unwrap();
        assert!(text.contains("a,") && text.contains("pass") && text.contains("FAIL"));
    }
}
