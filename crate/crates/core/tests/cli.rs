use std::fs;
use std::io::BufReader;
use std::path::Path;
use std::process::{Command, Output};

use coupled_nehari::cli::parse_config;
use coupled_nehari::grid::{read_field, StatePair};
use coupled_nehari::Problem;

const SYSTEM: &str = "\
grid.nx = 15
params.p = 4
params.beta = -2
solver.restarts = 1
";

fn nehari(dir: &Path, config: &str, args: &[&str]) -> Output {
    let path = dir.join("run.cfg");
    fs::write(&path, config).unwrap();
    Command::new(env!("CARGO_BIN_EXE_nehari"))
        .args(args)
        .arg("--config")
        .arg(&path)
        .arg("--out")
        .arg(dir.join("out"))
        .output()
        .unwrap()
}

/// Data rows of a report, skipping the provenance comment and the header.
fn rows(path: &Path) -> Vec<Vec<String>> {
    let text = fs::read_to_string(path).unwrap();
    let mut lines = text.lines();
    assert!(lines.next().unwrap().starts_with("# config_sha256="));
    lines.skip(1).map(|l| l.split(',').map(str::to_owned).collect()).collect()
}

#[test]
fn eigen_writes_report_and_eigenvector() {
    let dir = tempfile::tempdir().unwrap();
    let out = nehari(dir.path(), "grid.nx = 9\nparams.p = 4\nparams.beta = 0\n", &["eigen"]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let r = rows(&dir.path().join("out/eigen.csv"));
    let mu: f64 = r[0][0].parse().unwrap();
    let h = 0.1f64;
    let exact = 8.0 / (h * h) * (std::f64::consts::PI * h / 2.0).sin().powi(2);
    assert!((mu - exact).abs() < 1e-9 * exact);
    let (_, phi) = read_field(BufReader::new(fs::File::open(dir.path().join("out/phi1.field")).unwrap())).unwrap();
    assert!(phi.min() > 0.0);
}

#[test]
fn competitive_solve_round_trips_through_dumps() {
    let dir = tempfile::tempdir().unwrap();
    let out = nehari(dir.path(), SYSTEM, &["solve-system"]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let r = rows(&dir.path().join("out/system.csv"));
    assert_eq!(r.len(), 1);
    assert_eq!(r[0].last().unwrap(), "ok");
    let energy: f64 = r[0][1].parse().unwrap();

    let read = |name: &str| read_field(BufReader::new(fs::File::open(dir.path().join("out").join(name)).unwrap())).unwrap();
    let (grid, u1) = read("u1.field");
    let (_, u2) = read("u2.field");
    let cfg = parse_config(SYSTEM).unwrap();
    assert_eq!(grid.spec(), cfg.grid);
    let pr = Problem::new(cfg.grid, cfg.params, cfg.family(0).unwrap(), cfg.family(1).unwrap()).unwrap();
    let e = pr.total_energy(&StatePair::new(u1, u2)).unwrap();
    assert!((e - energy).abs() <= 1e-12 * energy.abs(), "{e} vs {energy}");
}

#[test]
fn seed_flag_changes_provenance() {
    let dir = tempfile::tempdir().unwrap();
    let out = nehari(dir.path(), "grid.nx = 5\nparams.p = 4\nparams.beta = 0\n", &["eigen", "--seed", "77"]);
    assert_eq!(out.status.code(), Some(0));
    let text = fs::read_to_string(dir.path().join("out/eigen.csv")).unwrap();
    assert!(text.lines().next().unwrap().contains("seed=77"));
}

#[test]
fn lambda_above_threshold_exits_inadmissible() {
    let dir = tempfile::tempdir().unwrap();
    let out = nehari(dir.path(), &format!("{SYSTEM}params.lambda1 = 100\n"), &["solve-system"]);
    assert_eq!(out.status.code(), Some(3));
    let msg = String::from_utf8_lossy(&out.stderr);
    assert!(msg.contains("lambda_1 = 100") && msg.contains("below 9."), "{msg}");
}

#[test]
fn failed_certification_exits_inadmissible() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = "grid.nx = 5\nparams.p = 4\nparams.beta = 0\nparams.gamma = 1.5\n\
               family1.kind = polynomial\nfamily1.coeffs = 1, 1\nfamily1.c0 = 1000\n";
    let out = nehari(dir.path(), cfg, &["certify"]);
    assert_eq!(out.status.code(), Some(3), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(dir.path().join("out/certify_family1.csv").exists());
    assert!(String::from_utf8_lossy(&out.stderr).contains("family1"));
}

#[test]
fn usage_errors_exit_one() {
    let dir = tempfile::tempdir().unwrap();
    let out = nehari(dir.path(), "grid.nx = 5\nparams.p = 1.5\nparams.beta = 0\n", &["eigen"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("params.p"));
    let out = nehari(dir.path(), "grid.nx = 5\nbogus.key = 1\n", &["eigen"]);
    assert_eq!(out.status.code(), Some(1));
    let missing = Command::new(env!("CARGO_BIN_EXE_nehari")).arg("eigen").output().unwrap();
    assert_eq!(missing.status.code(), Some(1));
}
