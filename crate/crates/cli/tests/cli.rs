use std::fs;
use std::io::Write;
use std::path::Path;
use std::process::{Command, Output};

use respo_cli::config::{self, ScenarioConfig};
use respo_cli::report::config_echo;

fn respo(args: &[&str], out: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_respo"))
        .args(args)
        .arg("--out")
        .arg(out)
        .output()
        .unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

#[test]
fn spectrum_writes_table_and_report() {
    let dir = tempfile::tempdir().unwrap();
    let o = respo(&["spectrum", "--preset", "dirichlet-divergence"], dir.path());
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let csv = fs::read_to_string(dir.path().join("spectrum.csv")).unwrap();
    let mut lines = csv.lines();
    assert_eq!(lines.next(), Some("k,eigenvalue,multiplicity"));
    assert_eq!(lines.count(), 64);
    let report = fs::read_to_string(dir.path().join("report.txt")).unwrap();
    assert!(report.contains("PASS self_adjoint"));
    assert!(!report.contains("FAIL"));
}

#[test]
fn lambda_between_eigenvalues_is_a_precondition_failure() {
    let dir = tempfile::tempdir().unwrap();
    let o = respo(&["resonance-check", "--set", "resonance.lambda=0.5"], dir.path());
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("not at resonance"), "{}", stderr(&o));
    let report = fs::read_to_string(dir.path().join("report.txt")).unwrap();
    assert!(report.contains("FAIL resonance-check: not at resonance"));
}

#[test]
fn pure_time_forcing_has_undefined_degree() {
    let dir = tempfile::tempdir().unwrap();
    let o = respo(
        &["degree", "--set", "nonlinearity.expr=cos(2*pi*t/T)", "--set", "nonlinearity.m=1"],
        dir.path(),
    );
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("degree undefined: g vanishes on all sampled spheres"));
}

#[test]
fn config_errors_exit_one_with_location() {
    let dir = tempfile::tempdir().unwrap();
    let mut file = tempfile::NamedTempFile::new().unwrap();
    writeln!(file, "[operator]\nbc = \"neumann\"\nn = \"many\"").unwrap();
    let path = file.path().to_str().unwrap();
    let o = respo(&["spectrum", "--config", path], dir.path());
    assert_eq!(o.status.code(), Some(1));
    let err = stderr(&o);
    assert!(err.contains(path) && err.contains("line 3"), "{err}");

    let o = respo(&["spectrum", "--set", "resonance.k=500"], dir.path());
    assert_eq!(o.status.code(), Some(0), "spectrum ignores k");
    let o = respo(&["ll-check", "--set", "resonance.k=500"], dir.path());
    assert_eq!(o.status.code(), Some(1), "{}", stderr(&o));

    let o = respo(&["no-such-command"], dir.path());
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn report_echo_round_trips() {
    let dir = tempfile::tempdir().unwrap();
    let o = respo(
        &["ll-check", "--preset", "dirichlet-divergence", "--set", "resonance.period=2.5"],
        dir.path(),
    );
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let report = fs::read_to_string(dir.path().join("report.txt")).unwrap();
    assert!(report.contains("PASS ll_verdict: holds_positive"));
    let echo = config_echo(&report).unwrap();
    let parsed: ScenarioConfig = toml::from_str(echo).unwrap();
    let mut expected = config::preset("dirichlet-divergence").unwrap();
    expected.resonance.period = 2.5;
    assert_eq!(parsed, expected);

    // Feeding the echo back reproduces the same report.
    let cfg_path = dir.path().join("echo.toml");
    fs::write(&cfg_path, echo).unwrap();
    let again = tempfile::tempdir().unwrap();
    let o = respo(&["ll-check", "--config", cfg_path.to_str().unwrap()], again.path());
    assert_eq!(o.status.code(), Some(0));
    let report2 = fs::read_to_string(again.path().join("report.txt")).unwrap();
    assert_eq!(report, report2);
}

#[test]
fn verify_index_reports_both_parities() {
    let dir = tempfile::tempdir().unwrap();
    let o = respo(&["verify-index", "--preset", "dirichlet-divergence"], dir.path());
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let report = fs::read_to_string(dir.path().join("report.txt")).unwrap();
    assert!(report.contains("PASS index_formula"));
    assert!(report.contains("INFO parity_comparison: (-1)^d_k deg g = -1 does not match"));
}

#[test]
fn constant_forcing_yields_drift_witness() {
    let dir = tempfile::tempdir().unwrap();
    let o = respo(
        &["solve-periodic", "--set", "nonlinearity.expr=0.4", "--set", "nonlinearity.m=0.4"],
        dir.path(),
    );
    assert_eq!(o.status.code(), Some(2));
    let report = fs::read_to_string(dir.path().join("report.txt")).unwrap();
    assert!(report.contains("PASS nonexistence_witness"), "{report}");
    assert!(!dir.path().join("orbit.csv").exists());
}

#[test]
fn averaged_map_two_dimensional_kernel() {
    let dir = tempfile::tempdir().unwrap();
    let o = respo(
        &[
            "averaged-map",
            "--set",
            "operator.dimension=2",
            "--set",
            "operator.lengths=[3.141592653589793, 3.141592653589793]",
            "--set",
            "operator.n=[8, 8]",
            "--set",
            "resonance.k=2",
            "--set",
            "output.gmap_samples=5",
        ],
        dir.path(),
    );
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let csv = fs::read_to_string(dir.path().join("gmap.csv")).unwrap();
    assert!(csv.starts_with("c1,c2,g1,g2\n"));
    assert_eq!(csv.lines().count(), 26);
}
