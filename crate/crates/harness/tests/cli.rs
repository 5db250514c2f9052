//! End-to-end runs of the `susy-gci` binary: exit codes, output files and
//! reproducibility of the written report.

use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use susy_gci_harness::ReportDocument;

const BIN: &str = env!("CARGO_BIN_EXE_susy-gci");

fn susy_gci(args: &[&str]) -> Output {
    Command::new(BIN).args(args).env_remove("SUSY_GCI_JOBS").output().expect("binary runs")
}

fn write(dir: &Path, name: &str, text: &str) -> String {
    let p = dir.join(name);
    fs::write(&p, text).unwrap();
    p.to_string_lossy().into_owned()
}

const SMALL: &str = r#"
seed = 5
tau_grid = [0.5]
gamma_k = [2]
[budget]
identity_samples = 8
mc_samples = 40000
slice_samples = 200000
[[matrices]]
name = "rho-half"
rows = [[1.0, 0.5], [0.5, 1.0]]
n1 = 1
"#;

#[test]
fn identities_exit_zero() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "c.toml", SMALL);
    let out = dir.path().join("r.toml");
    let o = susy_gci(&["verify", "--config", &cfg, "--suite", "identities", "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let doc = ReportDocument::from_toml(&fs::read_to_string(out).unwrap()).unwrap();
    assert!(doc.passed);
    assert!(doc.records.iter().all(|r| r.suite == "identities"));
}

#[test]
fn failing_check_exits_one() {
    let dir = tempfile::tempdir().unwrap();
    let text = format!("{SMALL}\n[tolerances]\ndecomposition_rel = 1e-12\n");
    let cfg = write(dir.path(), "c.toml", &text);
    let o = susy_gci(&["verify", "--config", &cfg, "--suite", "decomposition"]);
    assert_eq!(o.status.code(), Some(1));
    // report goes to stdout when no path is given
    assert!(ReportDocument::from_toml(&String::from_utf8_lossy(&o.stdout)).is_ok());
}

#[test]
fn usage_and_config_errors_exit_two() {
    let dir = tempfile::tempdir().unwrap();
    let bad = write(dir.path(), "bad.toml", "seed = 1\nunknown_field = 3\n");
    assert_eq!(susy_gci(&["verify", "--config", &bad]).status.code(), Some(2));

    let asym = write(
        dir.path(),
        "asym.toml",
        "[[matrices]]\nname = \"a\"\nrows = [[1.0, 0.5], [0.4, 1.0]]\nn1 = 1\n",
    );
    let o = susy_gci(&["verify", "--config", &asym]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("symmetric"));

    assert_eq!(susy_gci(&["verify"]).status.code(), Some(2));
    assert_eq!(susy_gci(&["verify", "--config", "/nonexistent.toml"]).status.code(), Some(2));
    let cfg = write(dir.path(), "c.toml", SMALL);
    assert_eq!(susy_gci(&["verify", "--config", &cfg, "--suite", "nope"]).status.code(), Some(2));
    assert_eq!(susy_gci(&["verify", "--config", &cfg, "--jobs", "0"]).status.code(), Some(2));
    assert_eq!(susy_gci(&["ensemble", "--n", "3", "--n1", "3", "--count", "1", "--seed", "1"]).status.code(), Some(2));
}

#[test]
fn reports_reproduce_across_runs_and_job_counts() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "c.toml", SMALL);
    let mut docs = Vec::new();
    for jobs in ["1", "2", "2"] {
        let out = dir.path().join(format!("r{}.toml", docs.len()));
        let o = susy_gci(&["verify", "--config", &cfg, "--jobs", jobs, "--out", out.to_str().unwrap()]);
        assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
        docs.push(ReportDocument::from_toml(&fs::read_to_string(out).unwrap()).unwrap().without_timing());
    }
    assert_eq!(docs[0], docs[1]);
    assert_eq!(docs[1], docs[2]);
    assert!(docs[0].records.iter().all(|r| !r.budget.is_empty()));
}

#[test]
fn seed_flag_changes_random_records_only() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "c.toml", SMALL);
    let run = |seed: &str| {
        let o = susy_gci(&["verify", "--config", &cfg, "--suite", "gamma", "--seed", seed]);
        ReportDocument::from_toml(&String::from_utf8_lossy(&o.stdout)).unwrap()
    };
    let (a, b) = (run("1"), run("2"));
    assert_eq!(a.seed, 1);
    assert_ne!(a.records[0].values["joint"], b.records[0].values["joint"]);
}

#[test]
fn ensemble_output_is_a_config_fragment() {
    let args = ["ensemble", "--n", "4", "--n1", "2", "--count", "3", "--seed", "9"];
    let a = susy_gci(&args);
    assert_eq!(a.status.code(), Some(0));
    assert_eq!(a.stdout, susy_gci(&args).stdout);
    let text = String::from_utf8(a.stdout).unwrap();
    let config = susy_gci_harness::RunConfig::parse(&text).unwrap();
    let matrices = config.validate().unwrap();
    assert_eq!(matrices.len(), 3);
    assert!(matrices.iter().all(|m| m.ci.n() == 4 && m.ci.n1() == 2));
}

#[test]
fn profile_csv_written() {
    let dir = tempfile::tempdir().unwrap();
    let text = format!("profile_csv = \"profiles.csv\"\n{SMALL}");
    let cfg = write(dir.path(), "c.toml", &text);
    let cwd = dir.path();
    let o = Command::new(BIN)
        .current_dir(cwd)
        .args(["verify", "--config", &cfg, "--suite", "gci"])
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(0));
    let csv = fs::read_to_string(cwd.join("profiles.csv")).unwrap();
    assert!(csv.starts_with("record,tau,value,abs_error\n"));
    assert_eq!(csv.lines().count(), 1 + 21);
}
