use std::path::Path;
use std::process::{Command, Output};

fn homogmart(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_homogmart"))
        .args(args)
        .env_remove("HOMOGMART_THREADS")
        .output()
        .expect("run homogmart")
}

fn code(o: &Output) -> i32 {
    o.status.code().unwrap_or(-1)
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn json(o: &Output) -> serde_json::Value {
    serde_json::from_slice(&o.stdout).expect("json on stdout")
}

fn simulate_bm(out: &Path) -> Output {
    homogmart(&[
        "simulate", "--space", "sphere:2", "--process", "bm", "--paths", "100", "--dt", "0.001", "--T", "1", "--seed", "7",
        "--out", out.to_str().unwrap(),
    ])
}

#[test]
fn simulate_writes_csv_and_manifest() {
    let dir = tempfile::tempdir().unwrap();
    let o = simulate_bm(dir.path());
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let manifest: serde_json::Value =
        serde_json::from_slice(&std::fs::read(dir.path().join("manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["seed"], 7);
    assert_eq!(manifest["process"], "bm");
    assert_eq!(manifest["n_paths"], 100);
    assert_eq!(manifest["grid"]["steps"], 1000);
    let csv = std::fs::read_to_string(dir.path().join("paths.csv")).unwrap();
    let mut lines = csv.lines();
    assert_eq!(lines.next(), Some("path_id,t,c1,c2,c3"));
    assert_eq!(csv.lines().count(), 1 + 100 * 1001);
    assert_eq!(csv.lines().last().unwrap().split(',').next(), Some("99"));
}

#[test]
fn simulate_twice_gives_identical_checksums() {
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    let (oa, ob) = (simulate_bm(a.path()), simulate_bm(b.path()));
    assert_eq!(json(&oa)["checksum"], json(&ob)["checksum"]);
    assert_eq!(std::fs::read(a.path().join("paths.csv")).unwrap(), std::fs::read(b.path().join("paths.csv")).unwrap());
}

#[test]
fn zero_paths_is_a_usage_error() {
    let o = homogmart(&["simulate", "--space", "sphere:2", "--process", "bm", "--paths", "0"]);
    assert_eq!(code(&o), 2);
}

#[test]
fn unknown_process_or_space_is_a_usage_error() {
    assert_eq!(code(&homogmart(&["simulate", "--space", "sphere:2", "--process", "levy", "--paths", "2"])), 2);
    assert_eq!(code(&homogmart(&["simulate", "--space", "torus:2", "--process", "bm", "--paths", "2"])), 2);
    assert_eq!(code(&homogmart(&["criterion", "--process", "bm"])), 2);
}

#[test]
fn unwritable_output_is_an_io_error() {
    let dir = tempfile::tempdir().unwrap();
    let blocker = dir.path().join("file");
    std::fs::write(&blocker, "x").unwrap();
    let out = blocker.join("sub");
    let o = homogmart(&["simulate", "--space", "sphere:2", "--process", "bm", "--paths", "2", "--out", out.to_str().unwrap()]);
    assert_eq!(code(&o), 3, "{}", stderr(&o));
    let o = homogmart(&["criterion", "--space", "sphere:2", "--input", dir.path().join("missing.csv").to_str().unwrap()]);
    assert_eq!(code(&o), 3);
}

#[test]
fn criterion_bm_passes_with_all_verdicts() {
    let o = homogmart(&[
        "criterion", "--space", "sphere:2", "--process", "bm", "--paths", "10000", "--dt", "0.01", "--seed", "1",
    ]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let r = json(&o);
    assert_eq!(r["verdict"], "pass");
    let a = &r["analysis"];
    for key in ["criterion", "frame_integrals", "tangential"] {
        assert_eq!(a[key]["verdict"], "pass", "{key}");
    }
    assert_eq!(a["coordinates"]["verdict"], "fail");
    assert_eq!(r["classification"], "criterion-pass/coordinates-drift");
    assert_eq!(r["run"]["seed"], 1);
    assert_eq!(r["run"]["policy"]["z_max"], 4.0);
}

#[test]
fn criterion_great_circle_fails() {
    let o = homogmart(&["criterion", "--space", "sphere:2", "--process", "great-circle", "--paths", "5", "--dt", "0.01"]);
    assert_eq!(code(&o), 1);
    assert_eq!(json(&o)["verdict"], "fail");
}

#[test]
fn malformed_spec_reports_line_and_column() {
    let dir = tempfile::tempdir().unwrap();
    let spec = dir.path().join("space.toml");
    std::fs::write(&spec, "group_dim = 3\nh_pairs = [[2, 3]\n").unwrap();
    let o = homogmart(&["criterion", "--spec", spec.to_str().unwrap(), "--process", "bm"]);
    assert_eq!(code(&o), 2);
    let msg = stderr(&o);
    assert!(msg.contains("line 2, column"), "{msg}");
}

#[test]
fn malformed_run_config_reports_line_and_column() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.toml");
    std::fs::write(&cfg, "[ensemble]\npaths = \"many\"\n").unwrap();
    let o = homogmart(&["simulate", "--config", cfg.to_str().unwrap()]);
    assert_eq!(code(&o), 2);
    assert!(stderr(&o).contains("line 2, column"), "{}", stderr(&o));
}

#[test]
fn explicit_spec_file_runs_criterion_on_input_paths() {
    let dir = tempfile::tempdir().unwrap();
    let sim = homogmart(&[
        "simulate", "--space", "sphere:2", "--process", "bm", "--paths", "200", "--dt", "0.01", "--seed", "2", "--out",
        dir.path().to_str().unwrap(),
    ]);
    assert_eq!(code(&sim), 0);
    let spec = dir.path().join("space.toml");
    std::fs::write(
        &spec,
        "name = \"s2-newton\"\ngroup_dim = 3\nh_pairs = [[2, 3]]\nm_pairs = [[1, 2], [1, 3]]\nconnection = \"second-kind\"\nsolver = \"newton\"\n\n[model]\nkind = \"orbit\"\nbase = [1.0, 0.0, 0.0]\n",
    )
    .unwrap();
    let input = dir.path().join("paths.csv");
    let o = homogmart(&["criterion", "--spec", spec.to_str().unwrap(), "--input", input.to_str().unwrap()]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let r = json(&o);
    assert_eq!(r["run"]["space"], "s2-newton");
    assert_eq!(r["criterion"]["verdict"], "pass");
    assert!(r.get("analysis").is_none());
}

#[test]
fn config_file_values_are_overridden_by_flags() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.toml");
    std::fs::write(
        &cfg,
        "[space]\npreset = \"sphere:3\"\n[process]\nname = \"constant\"\n[grid]\ndt = 0.1\nT = 1.0\n[ensemble]\npaths = 4\nseed = 9\n[output]\ndir = \"sim\"\n",
    )
    .unwrap();
    let o = homogmart(&["simulate", "--config", cfg.to_str().unwrap(), "--paths", "2"]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let m = json(&o);
    assert_eq!(m["n_paths"], 2);
    assert_eq!(m["seed"], 9);
    assert_eq!(m["space"], "sphere:3");
    assert!(dir.path().join("sim/paths.csv").exists());
}

#[test]
fn verify_passes_and_filters_by_suite() {
    let o = homogmart(&["verify"]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stdout));
    let o = homogmart(&["verify", "--filter", "sphere"]);
    assert_eq!(code(&o), 0);
    let table = String::from_utf8(o.stdout).unwrap();
    let rows: Vec<&str> = table.lines().filter(|l| l.contains("PASS") || l.contains("FAIL")).collect();
    assert!(!rows.is_empty());
    assert!(rows.iter().all(|l| l.starts_with("sphere ")), "{table}");
}

#[test]
fn verify_catches_flipped_ito_correction() {
    let o = homogmart(&["verify", "--filter", "group-sde", "--inject-ito-sign-flip"]);
    assert_eq!(code(&o), 1);
    let table = String::from_utf8(o.stdout).unwrap();
    let row = table.lines().find(|l| l.contains("ito-exponential-refinement")).unwrap();
    assert!(row.contains("FAIL"), "{row}");
}

#[test]
fn bad_thread_env_is_a_usage_error() {
    let o = Command::new(env!("CARGO_BIN_EXE_homogmart"))
        .args(["verify", "--filter", "lie"])
        .env("HOMOGMART_THREADS", "zero")
        .output()
        .unwrap();
    assert_eq!(code(&o), 2);
}
