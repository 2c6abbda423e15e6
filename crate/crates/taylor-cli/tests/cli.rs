use std::fs;
use std::path::Path;
use std::process::{Command, Output};
use taylor_cli::report::config_from_report;
use taylor_cli::RunConfig;

fn taylor(dir: &Path, cfg: &str, extra: &[&str]) -> Output {
    let path = dir.join("run.cfg");
    fs::write(&path, cfg).unwrap();
    Command::new(env!("CARGO_BIN_EXE_taylor"))
        .arg(&path)
        .arg("--out")
        .arg(dir.join("out"))
        .args(extra)
        .output()
        .unwrap()
}

fn value(report: &str, key: &str) -> f64 {
    report
        .lines()
        .find_map(|l| l.strip_prefix(&format!("{key} = ")))
        .unwrap_or_else(|| panic!("missing {key}"))
        .parse()
        .unwrap()
}

fn without_timings(report: &str) -> String {
    report.lines().filter(|l| !l.starts_with("timing.")).collect::<Vec<_>>().join("\n")
}

const MILLER: &str = "mode = solve1\ngeometry = miller\nr0 = 2\neps = 0.6\nkappa = 1.3\ndelta = 0.2\nlambda = 1.3\nphi_tor = 0.8\nn = 48\n";

#[test]
fn solve_reports_fluxes_and_is_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let out = taylor(dir.path(), MILLER, &[]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let first = fs::read_to_string(dir.path().join("out/report.txt")).unwrap();
    assert!((value(&first, "result.flux.toroidal") - 0.8).abs() < 1e-6 * 0.8);
    assert!(value(&first, "result.flux_residual") < 1e-6);
    assert_eq!(value(&first, "result.unknowns"), 49.0);
    assert!(first.lines().any(|l| l.starts_with("timing.total = ")));

    let again = taylor(dir.path(), MILLER, &[]);
    assert!(again.status.success());
    let second = fs::read_to_string(dir.path().join("out/report.txt")).unwrap();
    assert_eq!(without_timings(&first), without_timings(&second));

    let echoed = config_from_report(&first).unwrap();
    assert_eq!(echoed, RunConfig::parse(MILLER).unwrap());
}

#[test]
fn flag_overrides_are_echoed() {
    let dir = tempfile::tempdir().unwrap();
    let out = taylor(dir.path(), MILLER, &["--n", "40", "--lambda", "1.1"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let rep = fs::read_to_string(dir.path().join("out/report.txt")).unwrap();
    assert!(rep.contains("config.n = 40\n") && rep.contains("config.lambda = 1.1\n"));
    assert_eq!(value(&rep, "result.unknowns"), 41.0);
}

#[test]
fn slice_from_saved_solution_matches_solve_slice() {
    let dir = tempfile::tempdir().unwrap();
    let grid = "slice_r = 1.5, 2.5, 6\nslice_z = -0.5, 0.5, 5\n";
    let out = taylor(dir.path(), &format!("{MILLER}{grid}"), &[]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let direct = fs::read_to_string(dir.path().join("out/slice.csv")).unwrap();
    let saved = dir.path().join("saved.txt");
    fs::copy(dir.path().join("out/solution.txt"), &saved).unwrap();
    fs::remove_dir_all(dir.path().join("out")).unwrap();

    let cfg = format!("mode = slice\nsolution = {}\n{grid}", saved.display());
    let out = taylor(dir.path(), &cfg, &[]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    assert_eq!(direct, fs::read_to_string(dir.path().join("out/slice.csv")).unwrap());
    assert!(direct.lines().count() > 1);
}

#[test]
fn verify_writes_convergence_table() {
    let dir = tempfile::tempdir().unwrap();
    let out = taylor(dir.path(), "mode = verify1\nn_list = 32, 64\n", &[]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let csv = fs::read_to_string(dir.path().join("out/convergence.csv")).unwrap();
    let rows: Vec<&str> = csv.lines().collect();
    assert_eq!(rows[0], "n,Br,Bphi,Bz,error,condition,residual");
    assert_eq!(rows.len(), 3);
    let err = |row: &str| row.split(',').nth(4).unwrap().parse::<f64>().unwrap();
    assert!(err(rows[2]) < err(rows[1]) && err(rows[2]) < 1e-4);
}

#[test]
fn exit_codes_by_failure_class() {
    let dir = tempfile::tempdir().unwrap();
    let code = |cfg: &str| taylor(dir.path(), cfg, &[]).status.code().unwrap();
    assert_eq!(code("mode = nonsense\n"), 2);
    assert_eq!(code(&MILLER.replace("n = 48", "n = 8")), 2);
    assert_eq!(code("mode = slice\nsolution = nothere.txt\nslice_r = 1, 2, 3\nslice_z = 0, 1, 2\n"), 2);
    assert_eq!(code("mode = eigscan\ngeometry = miller\nr0 = 2\neps = 0.6\nkappa = 1.3\ndelta = 0.2\nell = 0\n"), 2);
    assert_eq!(code(&MILLER.replace("eps = 0.6", "eps = 2.5")), 3);

    let out = Command::new(env!("CARGO_BIN_EXE_taylor")).arg(dir.path().join("absent.cfg")).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).starts_with("taylor: "));
}
