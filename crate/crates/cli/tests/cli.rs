use std::path::Path;
use std::process::{Command, Output};

fn wavelab(args: &[&str], cwd: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_wavelab"))
        .args(args)
        .current_dir(cwd)
        .env("WAVELAB_THREADS", "1")
        .output()
        .expect("binary runs")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exited normally")
}

#[test]
fn shell_verb_prints_json() {
    let dir = tempfile::tempdir().unwrap();
    let out = wavelab(&["shell", "--E", "25"], dir.path());
    assert_eq!(code(&out), 0);
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(v["E"], 25);
    assert_eq!(v["points"].as_array().unwrap().len(), 12);
}

#[test]
fn eigen_and_berry_files_load_back() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(
        code(&wavelab(
            &["eigen", "--E", "25", "--flat", "--out", "f.json"],
            dir.path()
        )),
        0
    );
    assert_eq!(
        code(&wavelab(
            &["berry", "--seed", "4", "--ntrunc", "60", "--out", "b.json"],
            dir.path()
        )),
        0
    );
    let out = wavelab(
        &[
            "nodal-census",
            "--field",
            "f.json",
            "--grid",
            "128",
            "--out-dir",
            "torus",
        ],
        dir.path(),
    );
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let csv = std::fs::read_to_string(dir.path().join("torus/components.csv")).unwrap();
    assert!(csv.starts_with("index,sign,cells,diameter"));
    assert!(csv.lines().count() > 1);
    let out = wavelab(
        &["nodal-census", "--field", "b.json", "--R", "8", "--out-dir", "disk"],
        dir.path(),
    );
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
}

#[test]
fn local_stats_dump() {
    let dir = tempfile::tempdir().unwrap();
    wavelab(&["eigen", "--E", "1105", "--flat", "--out", "f.json"], dir.path());
    let args = [
        "local-stats",
        "--field",
        "f.json",
        "--windows",
        "30",
        "--N",
        "2",
        "--seed",
        "9",
        "--out",
        "s.csv",
    ];
    assert_eq!(code(&wavelab(&args, dir.path())), 0);
    let text = std::fs::read_to_string(dir.path().join("s.csv")).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next().unwrap().split(',').count(), 3 + 2 * 5);
    assert_eq!(lines.count(), 30);
}

#[test]
fn malformed_config_exits_one() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(
        dir.path().join("bad.toml"),
        "schema_version = 1\nexperiment = \"cns\"\n[params]\nradius = 5.0\nradius_prime = 10.0\n",
    )
    .unwrap();
    let out = wavelab(&["run", "bad.toml"], dir.path());
    assert_eq!(code(&out), 1);
    assert!(String::from_utf8_lossy(&out.stderr).contains("radius_prime"));
    assert_eq!(code(&wavelab(&["cns", "--R", "5", "--Rp", "10"], dir.path())), 1);
    assert_eq!(code(&wavelab(&["no-such-verb"], dir.path())), 1);
    assert_eq!(code(&wavelab(&["report", "missing.json"], dir.path())), 1);
    assert_eq!(code(&wavelab(&["--help"], dir.path())), 0);
}

#[test]
fn unexpected_outcome_exits_two() {
    let dir = tempfile::tempdir().unwrap();
    let args = [
        "berry-conformance",
        "--plane-wave",
        "50",
        "--windows",
        "600",
        "--expect-berry",
        "pass",
        "--out-dir",
        "o",
    ];
    let out = wavelab(&args, dir.path());
    assert_eq!(code(&out), 2, "{}", String::from_utf8_lossy(&out.stderr));
    let report: serde_json::Value =
        serde_json::from_slice(&std::fs::read(dir.path().join("o/report.json")).unwrap()).unwrap();
    assert_eq!(report["exit_code"], 2);
    assert_eq!(report["config"]["params"]["windows"], 600);
    assert_eq!(report["config"]["seed"], 0);
    assert!(report["tool"]["core_version"].is_string());
}

#[test]
fn conditioning_failure_exits_three() {
    let dir = tempfile::tempdir().unwrap();
    // The grid cannot resolve E = 1105 at eight cells per wavelength.
    let args = [
        "cns",
        "--E",
        "1105",
        "--grid",
        "64",
        "--samples",
        "2",
        "--R",
        "10",
        "--Rp",
        "5",
        "--cells",
        "4",
    ];
    let out = wavelab(&args, dir.path());
    assert_eq!(code(&out), 3, "{}", String::from_utf8_lossy(&out.stderr));
}

#[test]
fn report_verb_regenerates_tables() {
    let dir = tempfile::tempdir().unwrap();
    let args = [
        "que-check",
        "--E",
        "25",
        "--flat",
        "--rects",
        "dyadic:3",
        "--out-dir",
        "q",
    ];
    assert_eq!(code(&wavelab(&args, dir.path())), 0);
    assert_eq!(
        code(&wavelab(&["report", "q/report.json", "--out-dir", "again"], dir.path())),
        0
    );
    for name in ["masses", "sectors", "sup_norm", "checks"] {
        let a = std::fs::read(dir.path().join(format!("q/{name}.csv"))).unwrap();
        let b = std::fs::read(dir.path().join(format!("again/{name}.csv"))).unwrap();
        assert_eq!(a, b, "{name}");
    }
    let masses = std::fs::read_to_string(dir.path().join("q/masses.csv")).unwrap();
    assert_eq!(masses.lines().count(), 1 + 4 + 16 + 64);
}

#[test]
fn flags_override_config_file() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(
        dir.path().join("q.toml"),
        "schema_version = 1\nexperiment = \"que-check\"\n[field]\nkind = \"flat\"\nenergy = 25\n[params]\nsectors = 4\n",
    )
    .unwrap();
    let out = wavelab(
        &["que-check", "--config", "q.toml", "--sectors", "6", "--out-dir", "o"],
        dir.path(),
    );
    assert_eq!(code(&out), 0);
    let report: serde_json::Value =
        serde_json::from_slice(&std::fs::read(dir.path().join("o/report.json")).unwrap()).unwrap();
    assert_eq!(report["config"]["params"]["sectors"], 6);
    assert_eq!(report["result"]["sectors"]["masses"].as_array().unwrap().len(), 6);
    let out = wavelab(&["cns", "--config", "q.toml"], dir.path());
    assert_eq!(code(&out), 1);
}
