use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn configs() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs")
}

fn recbound(args: &[&str], out: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_recbound"))
        .arg("--out")
        .arg(out)
        .args(args)
        .output()
        .expect("binary runs")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exit code")
}

fn write(dir: &Path, name: &str, text: &str) -> String {
    let p = dir.join(name);
    fs::write(&p, text).unwrap();
    p.to_string_lossy().into_owned()
}

fn report(dir: &Path, name: &str) -> toml::Table {
    fs::read_to_string(dir.join(name)).unwrap().parse().unwrap()
}

#[test]
fn geometric_report_and_samples() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = configs().join("geometric.toml");
    let o = recbound(&["analyze", cfg.to_str().unwrap()], dir.path());
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let r = report(dir.path(), "geometric.toml");
    assert_eq!(r["verdict"].as_str(), Some("BoundedCertified"));
    let sup = r["sup_abs"].as_float().unwrap();
    assert!((sup - 2f64.sqrt()).abs() < 1e-12);
    assert!(r["bound_value"].as_float().unwrap() >= sup);
    let samples = fs::read_to_string(dir.path().join("geometric.csv")).unwrap();
    let mut lines = samples.lines();
    assert_eq!(lines.next(), Some("n,abs,re,im"));
    let first: Vec<f64> = lines.next().unwrap().split(',').map(|s| s.parse().unwrap()).collect();
    assert_eq!(first[0], 1.0);
    assert!((first[1] - 1.0).abs() < 1e-15);
}

#[test]
fn horizon_override() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = configs().join("sqrt_log.toml");
    let o = recbound(&["--horizon", "20000", "analyze", cfg.to_str().unwrap()], dir.path());
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let r = report(dir.path(), "report.toml");
    assert_eq!(r["horizon"].as_integer(), Some(20000));
    assert_eq!(r["verdict"].as_str(), Some("BoundedCertified"));
}

#[test]
fn config_errors_exit_two_and_write_nothing() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("out");
    let cases = [
        "kind = \"expsum\"\nhorizon = 1000\nbogus = 1\n",
        "kind = \"expsum\"\nhorizon = 1000\n[phase]\nexpr = \"n +\"\n",
        "kind = \"sideways\"\nhorizon = 1000\n",
        "not toml at all [",
    ];
    for (i, text) in cases.iter().enumerate() {
        let cfg = write(dir.path(), &format!("bad{i}.toml"), text);
        let o = recbound(&["analyze", &cfg], &out);
        assert_eq!(code(&o), 2, "case {i}: {}", String::from_utf8_lossy(&o.stderr));
        assert!(!out.exists());
    }
    let missing = dir.path().join("missing.toml");
    assert_eq!(code(&recbound(&["analyze", missing.to_str().unwrap()], &out)), 2);
}

#[test]
fn analyze_rejects_sweep_configs() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = configs().join("sweep_alpha.toml");
    assert_eq!(code(&recbound(&["analyze", cfg.to_str().unwrap()], dir.path())), 2);
}

#[test]
fn numeric_failure_exits_three() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("out");
    let cfg = write(
        dir.path(),
        "pole.toml",
        "kind = \"expsum\"\nhorizon = 1000\n[phase]\nexpr = \"1/(n-3)\"\n",
    );
    let o = recbound(&["analyze", &cfg], &out);
    assert_eq!(code(&o), 3);
    assert!(String::from_utf8_lossy(&o.stderr).contains("index 3"));
    assert!(!out.exists());
}

#[test]
fn refusal_exits_four() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("out");
    let cfg = write(
        dir.path(),
        "cell.toml",
        "kind = \"jordan-cell\"\nhorizon = 1000\n[cell]\nphi = 0.0\nytilde = [\"zero\", { phase = \"0\" }]\n",
    );
    assert_eq!(code(&recbound(&["analyze", &cfg], &out)), 4);
    assert!(!out.exists());
}

#[test]
fn selftest_passes_deterministically_and_catches_mutation() {
    let dir = tempfile::tempdir().unwrap();
    let a = recbound(&["selftest"], dir.path());
    let b = recbound(&["selftest"], dir.path());
    assert_eq!(code(&a), 0);
    assert_eq!(a.stdout, b.stdout);
    assert!(!a.stdout.is_empty());
    let m = recbound(&["selftest", "--mutate-lemma"], dir.path());
    assert_eq!(code(&m), 1);
}

#[test]
fn sweep_grid_rows() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(
        dir.path(),
        "sweep.toml",
        "kind = \"expsum\"\nhorizon = 10000\n[phase]\nexpr = \"n^{alpha}\"\n[declarations]\npsi = 0.0\n[output]\naggregate = \"alpha.csv\"\n[sweep]\nalpha = [0.3, 0.5, 0.7]\n",
    );
    let o = recbound(&["sweep", &cfg], dir.path());
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let text = fs::read_to_string(dir.path().join("alpha.csv")).unwrap();
    let lines: Vec<_> = text.lines().collect();
    assert_eq!(
        lines[0],
        "point,alpha,exit_code,verdict,verdict_class,horizon,sup_abs,growth_exponent,bound_value,error"
    );
    assert_eq!(lines.len(), 4);
    for (i, line) in lines[1..].iter().enumerate() {
        assert!(line.starts_with(&format!("{i},")), "{line}");
    }
}

#[test]
fn sweep_failures_are_rows_unless_all_fail() {
    let dir = tempfile::tempdir().unwrap();
    let mixed = write(
        dir.path(),
        "mixed.toml",
        "kind = \"expsum\"\nhorizon = 1000\n[phase]\nexpr = \"1/(n-{p})\"\n[sweep]\np = [0.5, 3.0]\n",
    );
    assert_eq!(code(&recbound(&["sweep", &mixed], dir.path())), 0);
    let text = fs::read_to_string(dir.path().join("sweep.csv")).unwrap();
    let rows: Vec<_> = text.lines().skip(1).collect();
    assert!(rows[0].split(',').nth(2) == Some("0"));
    assert!(rows[1].split(',').nth(2) == Some("3"));

    let out = dir.path().join("none");
    let all = write(
        dir.path(),
        "all.toml",
        "kind = \"expsum\"\nhorizon = 1000\n[phase]\nexpr = \"1/(n-{p})\"\n[sweep]\np = [2.0, 3.0]\n",
    );
    assert_eq!(code(&recbound(&["sweep", &all], &out)), 3);
    assert!(!out.exists());
}

#[test]
fn empty_sweep_grid_exits_two() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(
        dir.path(),
        "empty.toml",
        "kind = \"expsum\"\nhorizon = 1000\n[phase]\nexpr = \"n\"\n[sweep]\na = []\n",
    );
    assert_eq!(code(&recbound(&["sweep", &cfg], dir.path())), 2);
    let none = write(dir.path(), "none.toml", "kind = \"expsum\"\nhorizon = 1000\n");
    assert_eq!(code(&recbound(&["sweep", &none], dir.path())), 2);
}

#[test]
fn reports_identical_across_jobs() {
    let dir = tempfile::tempdir().unwrap();
    for name in ["cell_ln2.toml", "system.toml", "scalar_critical.toml"] {
        let cfg = configs().join(name);
        let mut texts = Vec::new();
        for jobs in ["1", "4"] {
            let out = dir.path().join(format!("{name}-{jobs}"));
            let o = recbound(&["--jobs", jobs, "analyze", cfg.to_str().unwrap()], &out);
            assert_eq!(code(&o), 0, "{name}: {}", String::from_utf8_lossy(&o.stderr));
            texts.push(fs::read(out.join("report.toml")).unwrap());
        }
        assert_eq!(texts[0], texts[1], "{name}");
    }
}

#[test]
fn cell_reports() {
    let dir = tempfile::tempdir().unwrap();
    let ln2 = configs().join("cell_ln2.toml");
    assert_eq!(code(&recbound(&["analyze", ln2.to_str().unwrap()], dir.path())), 0);
    let text = fs::read_to_string(dir.path().join("report.toml")).unwrap();
    assert!(text.contains("first_row_ratio"));
    let expanding = configs().join("cell_expanding.toml");
    let out = dir.path().join("exp");
    assert_eq!(code(&recbound(&["analyze", expanding.to_str().unwrap()], &out)), 0);
    let r = report(&out, "report.toml");
    assert!(r["sup_abs"].as_float().unwrap() < 10.0);
}
