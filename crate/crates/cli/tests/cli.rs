use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn entroherd(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_entroherd"))
        .args(args)
        .env_remove("ENTROHERD_DATA_DIR")
        .env("RUST_LOG", "warn")
        .output()
        .expect("binary runs")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exited normally")
}

fn write_config(dir: &Path, body: &str) -> PathBuf {
    let p = dir.join("run.conf");
    std::fs::write(&p, body).unwrap();
    p
}

fn assert_schema(report: &Path) {
    let schema: serde_json::Value = serde_json::from_str(entroherd::experiments::REPORT_SCHEMA).unwrap();
    let value: serde_json::Value = serde_json::from_slice(&std::fs::read(report).unwrap()).unwrap();
    let validator = jsonschema::validator_for(&schema).unwrap();
    let errors: Vec<String> = validator.iter_errors(&value).map(|e| e.to_string()).collect();
    assert!(errors.is_empty(), "{}: {errors:?}", report.display());
}

/// Every output file except the wall-clock timing, sorted by name.
fn outputs(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut files: Vec<(String, Vec<u8>)> = std::fs::read_dir(dir)
        .unwrap()
        .map(|e| e.unwrap().path())
        .filter(|p| p.file_name().unwrap() != "timing.json")
        .map(|p| (p.file_name().unwrap().to_string_lossy().into_owned(), std::fs::read(&p).unwrap()))
        .collect();
    files.sort();
    files
}

fn fixture_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../core/fixtures")
}

const SMALL_BIMODAL: &str = "\
# short run for tests
n_samples = 2000
t_output = 40
t_burnin = 10
k_update = 20
point_t_output = 40
point_t_burnin = 10
grid_step = 0.01
";

#[test]
fn selftest_passes() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("st");
    let o = entroherd(&["selftest", "--out", out.to_str().unwrap(), "--seed", "3"]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    assert!(String::from_utf8_lossy(&o.stdout).contains("all_passed = true"));
    assert_schema(&out.join("report.json"));
    assert!(out.join("timing.json").is_file());
}

#[test]
fn unknown_key_is_a_config_error() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "lambda = 1.0\nlamda = 2.0\n");
    let o = entroherd(&["bimodal", "--config", cfg.to_str().unwrap(), "--out", dir.path().to_str().unwrap()]);
    assert_eq!(code(&o), 2);
    assert!(String::from_utf8_lossy(&o.stderr).contains("lamda"));
}

#[test]
fn bad_values_are_config_errors() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();
    for body in ["eps_herding = 1.5\n", "lambda = -1\n", "t_output = many\n", "no equals sign\n"] {
        let cfg = write_config(dir.path(), body);
        let o = entroherd(&["bimodal", "--config", cfg.to_str().unwrap(), "--out", out]);
        assert_eq!(code(&o), 2, "{body}");
    }
}

#[test]
fn missing_out_and_misplaced_sweep_are_config_errors() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), SMALL_BIMODAL);
    let o = entroherd(&["bimodal", "--config", cfg.to_str().unwrap()]);
    assert_eq!(code(&o), 2);
    let o = entroherd(&["bimodal", "--config", cfg.to_str().unwrap(), "--out", dir.path().to_str().unwrap(), "--sweep"]);
    assert_eq!(code(&o), 2);
}

#[test]
fn wine_checksum_mismatch_is_a_data_error() {
    let dir = tempfile::tempdir().unwrap();
    let body = format!("data_dir = {}\nred_sha256 = {}\n", fixture_dir().display(), "0".repeat(64));
    let cfg = write_config(dir.path(), &body);
    let o = entroherd(&["wine", "--config", cfg.to_str().unwrap(), "--out", dir.path().join("w").to_str().unwrap()]);
    assert_eq!(code(&o), 3, "{}", String::from_utf8_lossy(&o.stderr));
    assert!(String::from_utf8_lossy(&o.stderr).contains("checksum"));
}

#[test]
fn wine_missing_files_is_a_data_error() {
    let dir = tempfile::tempdir().unwrap();
    let body = format!("data_dir = {}\n", dir.path().join("nowhere").display());
    let cfg = write_config(dir.path(), &body);
    let o = entroherd(&["wine", "--config", cfg.to_str().unwrap(), "--out", dir.path().join("w").to_str().unwrap()]);
    assert_eq!(code(&o), 3, "{}", String::from_utf8_lossy(&o.stderr));
}

#[test]
fn wine_malformed_csv_is_a_data_error() {
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("data");
    std::fs::create_dir_all(&data).unwrap();
    for f in ["winequality-red.csv", "winequality-white.csv"] {
        let text = std::fs::read_to_string(fixture_dir().join(f)).unwrap();
        let broken = text.replacen("\n", "\nnot;a;number\n", 1);
        std::fs::write(data.join(f), broken).unwrap();
    }
    let cfg = write_config(dir.path(), &format!("data_dir = {}\n", data.display()));
    let o = entroherd(&["wine", "--config", cfg.to_str().unwrap(), "--out", dir.path().join("w").to_str().unwrap()]);
    assert_eq!(code(&o), 3, "{}", String::from_utf8_lossy(&o.stderr));
}

#[test]
fn bimodal_is_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), SMALL_BIMODAL);
    let mut runs = Vec::new();
    for run in ["a", "b"] {
        let out = dir.path().join(run);
        let o = entroherd(&["bimodal", "--config", cfg.to_str().unwrap(), "--out", out.to_str().unwrap(), "--seed", "7"]);
        assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
        assert!(out.join("timing.json").is_file());
        assert_schema(&out.join("report.json"));
        runs.push(outputs(&out));
    }
    assert!(runs[0].len() > 10);
    assert_eq!(runs[0], runs[1]);
    let report: serde_json::Value = serde_json::from_slice(&runs[0].iter().find(|f| f.0 == "report.json").unwrap().1).unwrap();
    assert_eq!(report["seed"], 7);
    assert_eq!(report["experiment"], "bimodal");
}

#[test]
fn boltzmann_and_wine_reports_follow_the_schema() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "t_output = 40\nt_burnin = 10\nk_update = 10\n");
    let out = dir.path().join("b");
    let o = entroherd(&["boltzmann", "--config", cfg.to_str().unwrap(), "--out", out.to_str().unwrap()]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    assert_schema(&out.join("report.json"));

    let body = format!("data_dir = {}\nt_output = 30\nt_burnin = 10\nk_update = 5\n", fixture_dir().display());
    let cfg = write_config(dir.path(), &body);
    let out = dir.path().join("w");
    let o = entroherd(&["wine", "--config", cfg.to_str().unwrap(), "--out", out.to_str().unwrap()]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    assert_schema(&out.join("report.json"));
}
