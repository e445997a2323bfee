use std::path::Path;
use std::process::{Command, Output};

use cavlink_core::open_system::{qcnot_fidelity, DecoherenceParams, FidelityDefinition};
use cavlink_core::units::Units;

fn cavlink(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_cavlink")).args(args).output().expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn table(text: &str) -> Vec<(String, f64)> {
    text.lines()
        .skip(1)
        .map(|l| {
            let (k, v) = l.split_once(',').unwrap();
            (k.to_string(), v.parse().unwrap())
        })
        .collect()
}

#[test]
fn step_a_row() {
    let o = cavlink(&["effective-params", "--row", "A"]);
    assert!(o.status.success());
    let t = table(&stdout(&o));
    assert_eq!(t.len(), 12);
    // swap between c5 and the x exciton: equal detunings 2Γ, coupling magnitude 2Γ
    for (k, v) in t {
        let want = match k.as_str() {
            "c5" | "x" => 2.0,
            "gx5" => -2.0,
            _ => 0.0,
        };
        assert!((v - want).abs() < 1e-12, "{k} = {v}");
    }
}

#[test]
fn hold_rows_are_zero() {
    for args in [&["--row", "hold"][..], &["--row", "hold", "--geometry", "one"][..]] {
        let o = cavlink(&[&["effective-params"][..], args].concat());
        assert!(o.status.success());
        assert!(table(&stdout(&o)).iter().all(|(_, v)| v.abs() < 1e-12));
    }
}

#[test]
fn angle_expressions() {
    let o = cavlink(&["effective-params", "--angles", "pi/2,pi/2,0"]);
    assert!(o.status.success());
    let t = table(&stdout(&o));
    assert!(t.iter().all(|(_, v)| (v - 1.0).abs() < 1e-12), "{t:?}");
    let digits = stdout(&o).lines().nth(1).unwrap().split(',').nth(1).unwrap().split('e').next().unwrap().len();
    assert_eq!(digits, 14, "twelve significant digits plus point");
}

#[test]
fn singular_phase_exits_two() {
    let o = cavlink(&["effective-params", "--angles", "0,0,0"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("singular phase"));
    assert!(o.stdout.is_empty());
}

#[test]
fn bad_arguments_exit_two() {
    assert_eq!(cavlink(&["effective-params", "--angles", "0,1"]).status.code(), Some(2));
    assert_eq!(cavlink(&["effective-params", "--row", "E"]).status.code(), Some(2));
    assert_eq!(cavlink(&["fidelity-sweep", "--axis", "spin", "--min", "1", "--max", "2"]).status.code(), Some(2));
    assert_eq!(cavlink(&["fidelity-sweep", "--axis", "qfactor", "--min", "0", "--max", "2"]).status.code(), Some(2));
    assert_eq!(cavlink(&["frobnicate"]).status.code(), Some(2));
}

#[test]
fn truth_table() {
    let o = cavlink(&["truth-table"]);
    assert!(o.status.success());
    let text = stdout(&o);
    let rows: Vec<Vec<&str>> = text.lines().map(|l| l.split(',').collect()).collect();
    assert_eq!(rows[0], ["input", "after_a", "after_b", "output", "sign", "max_deviation"]);
    let expected = [
        ["|0101g>", "+|0101g>", "+|0101g>", "+|0101g>", "+1"],
        ["|0110g>", "+|0100x>", "-|1000x>", "-|1010g>", "-1"],
        ["|1001g>", "+|1001g>", "+|1001g>", "+|1001g>", "+1"],
        ["|1010g>", "+|1000x>", "-|0100x>", "-|0110g>", "-1"],
    ];
    assert_eq!(rows.len(), 5);
    for (row, want) in rows[1..].iter().zip(expected) {
        assert_eq!(row.len(), 6);
        assert_eq!(&row[..5], want);
        assert!(row[5].parse::<f64>().unwrap() < 1e-9);
    }
}

#[test]
fn single_point_sweep_matches_direct_fidelity() {
    let o = cavlink(&["fidelity-sweep", "--axis", "dephasing", "--min", "2", "--max", "2", "--points", "1"]);
    assert!(o.status.success());
    let text = stdout(&o);
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("axis_value,fidelity"));
    let f: f64 = lines.next().unwrap().split(',').nth(1).unwrap().parse().unwrap();
    let units = Units::from_quarter_lifetime_ps(38.5).unwrap();
    let direct = qcnot_fidelity(
        &DecoherenceParams::lossless().with_linewidth_uev(2.0),
        &units,
        FidelityDefinition::BasisAverage,
    )
    .unwrap();
    assert!((f - direct).abs() < 1e-11);
}

#[test]
fn sweep_output_is_deterministic() {
    let args = ["fidelity-sweep", "--axis", "qfactor", "--min", "1e6", "--max", "1e8", "--points", "3"];
    let (a, b) = (cavlink(&args), cavlink(&args));
    assert!(a.status.success());
    assert_eq!(a.stdout, b.stdout);
    assert_eq!(stdout(&a).lines().count(), 4);
}

#[test]
fn gate_time() {
    let o = cavlink(&["gate-time"]);
    let text = stdout(&o);
    let ps: f64 = text.lines().nth(1).unwrap().split(',').nth(1).unwrap().parse().unwrap();
    assert!((ps - 483.8).abs() < 0.1);
}

#[test]
fn entangle_writes_state_and_summary() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("state.csv");
    let o = cavlink(&["entangle", "--out", path.to_str().unwrap()]);
    assert!(o.status.success());
    let text = std::fs::read_to_string(&path).unwrap();
    let summary = text.lines().last().unwrap();
    let field = |name: &str| -> f64 {
        summary.split_whitespace().find_map(|kv| kv.strip_prefix(&format!("{name}="))).unwrap().parse().unwrap()
    };
    assert!(field("bell_fidelity") > 1.0 - 1e-9);
    assert!((field("concurrence") - 1.0).abs() < 1e-9);
    assert!((field("ground_population") - 1.0).abs() < 1e-9);
    assert_eq!(text.lines().count(), 1 + 48 + 1);
}

#[test]
fn verify_cmt_vs_full_passes() {
    let o = cavlink(&["verify", "--which", "cmt-vs-full"]);
    let text = stdout(&o);
    assert_eq!(o.status.code(), Some(0), "{text}");
    assert!(text.contains("rabi_max_deviation") && text.contains("window_halving_delta"));
}

#[test]
fn verify_full_vs_effective_reports_each_check() {
    let o = cavlink(&["verify", "--which", "full-vs-effective"]);
    let text = stdout(&o);
    let status =
        |name: &str| text.lines().find(|l| l.starts_with(name)).unwrap().rsplit(',').next().unwrap().to_string();
    assert_eq!(status("rabi_frequency_error"), "pass");
    assert_eq!(status("hold_min_c1_population"), "pass");
    assert_eq!(status("window_doubling_delta"), "pass");
    // photons in flight hold about 2Γτ_P of the population, above the 1e-2 bound
    assert_eq!(status("peak_fp_leakage"), "FAIL");
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn verify_negative_control_fails() {
    let o = cavlink(&["verify", "--which", "full-vs-effective", "--tau-p", "0.5"]);
    let text = stdout(&o);
    assert_eq!(o.status.code(), Some(1));
    assert!(text.contains("# validity:"));
    assert!(text.lines().any(|l| l.starts_with("rabi_frequency_error") && l.ends_with("FAIL")), "{text}");
}

fn write(dir: &Path, name: &str, text: &str) -> String {
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p.to_str().unwrap().to_string()
}

#[test]
fn run_config_with_program_file() {
    let dir = tempfile::tempdir().unwrap();
    write(
        dir.path(),
        "qcnot.toml",
        "initial = \"|0110g>\"\n\
         [[step]]\nsetting = \"A\"\nduration = \"pi/4\"\n\
         [[step]]\nsetting = \"B\"\nduration = \"pi/2\"\n\
         [[step]]\nsetting = \"C\"\nduration = \"pi/4\"\n",
    );
    let cfg =
        write(dir.path(), "run.toml", "seed = 3\n[protocol]\nprogram = \"qcnot.toml\"\n[output]\npath = \"out.csv\"\n");
    let o = cavlink(&["run", "--config", &cfg]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let text = std::fs::read_to_string(dir.path().join("out.csv")).unwrap();
    let big: Vec<&str> = text
        .lines()
        .skip(1)
        .filter(|l| {
            let v: Vec<f64> = l.split(',').skip(1).map(|x| x.parse().unwrap()).collect();
            v[0].hypot(v[1]) > 0.5
        })
        .collect();
    assert_eq!(big.len(), 1);
    assert!(big[0].starts_with("|1010g>"));
}

#[test]
fn run_config_is_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "run.toml", "seed = 11\n[protocol]\nname = \"entangle\"\n");
    let (a, b) = (cavlink(&["run", "--config", &cfg]), cavlink(&["run", "--config", &cfg]));
    assert!(a.status.success());
    assert_eq!(a.stdout, b.stdout);
}

#[test]
fn run_config_rejects_unknown_keys() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "run.toml", "[protocol]\nname = \"qcnot\"\nturbo = true\n");
    let o = cavlink(&["run", "--config", &cfg]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("turbo"));
}

#[test]
fn run_config_cnot_matrix() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "run.toml", "[protocol]\nname = \"cnot\"\n");
    let o = cavlink(&["run", "--config", &cfg]);
    assert!(o.status.success());
    let m: Vec<(usize, usize, f64, f64)> = stdout(&o)
        .lines()
        .skip(1)
        .map(|l| {
            let f: Vec<&str> = l.split(',').collect();
            (f[0].parse().unwrap(), f[1].parse().unwrap(), f[2].parse().unwrap(), f[3].parse().unwrap())
        })
        .collect();
    assert_eq!(m.len(), 16);
    // CNOT with the first qubit as target: |a,b> -> |a xor b, b>
    let phase = m.iter().find(|e| e.0 == 0 && e.1 == 0).map(|e| (e.2, e.3)).unwrap();
    for (i, j, re, im) in m {
        let (a, b) = (j / 2, j % 2);
        let want = if i == 2 * (a ^ b) + b { phase } else { (0.0, 0.0) };
        assert!((re - want.0).abs() < 1e-9 && (im - want.1).abs() < 1e-9, "{i},{j}");
    }
}
