//! End-to-end runs of the `boga` binary.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use boga_core::engine::{CHECKPOINT_FILE, CONFIG_FILE, EVALUATIONS_FILE, GENERATIONS_FILE};
use boga_core::CampaignConfig;

const BOGA: &str = env!("CARGO_BIN_EXE_boga");

const BODY: &str = r#"
master_seed = 3
n_init = 12

[objective]
name = "sheet"
evaluator = { kind = "builtin", landscape = "sheet" }

[surrogate]
hidden_sizes = [8]
ensemble_size = 2
epochs = 10

[[schedule]]
generations = 4
m_select = 3
k_propose = 30
"#;

fn write(dir: &Path, name: &str, text: &str) -> PathBuf {
    let path = dir.join(name);
    fs::write(&path, text).unwrap();
    path
}

fn boga(args: &[&str]) -> Output {
    Command::new(BOGA).args(args).output().expect("boga runs")
}

fn boga_in(dir: &Path, args: &[&str]) -> Output {
    Command::new(BOGA).args(args).current_dir(dir).output().expect("boga runs")
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

#[test]
fn a_valid_run_exits_zero_and_writes_its_log() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write(tmp.path(), "run.toml", BODY);
    let out = tmp.path().join("log");
    let o = boga(&["run", "--config", cfg.to_str().unwrap(), "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let text = stdout(&o);
    assert!(text.contains("best sequence:"), "{text}");
    assert!(text.contains("objective evaluations: 24 ok, 0 failed"), "{text}");
    for f in [CONFIG_FILE, EVALUATIONS_FILE, GENERATIONS_FILE, CHECKPOINT_FILE] {
        assert!(out.join(f).is_file(), "missing {f}");
    }
    assert_eq!(fs::read_to_string(out.join(EVALUATIONS_FILE)).unwrap().lines().count(), 24);
}

#[test]
fn a_missing_schedule_is_a_config_error_naming_the_field() {
    let tmp = tempfile::tempdir().unwrap();
    let text = BODY.split("[[schedule]]").next().unwrap();
    let cfg = write(tmp.path(), "bad.toml", text);
    let o = boga(&["run", "--config", cfg.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("schedule"), "{}", stderr(&o));
}

#[test]
fn a_field_violation_points_at_its_line() {
    let tmp = tempfile::tempdir().unwrap();
    let text = BODY.replace("k_propose = 30", "k_propose = 2");
    let line = text.lines().position(|l| l.starts_with("k_propose")).unwrap() + 1;
    let cfg = write(tmp.path(), "bad.toml", &text);
    let o = boga(&["run", "--config", cfg.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    let err = stderr(&o);
    assert!(err.contains(&format!("bad.toml:{line}:")), "{err}");
    assert!(err.contains("schedule[0].k_propose"), "{err}");
}

#[test]
fn a_toml_syntax_error_points_at_its_line() {
    let tmp = tempfile::tempdir().unwrap();
    let text = BODY.replace("n_init = 12", "n_init = = 12");
    let cfg = write(tmp.path(), "broken.toml", &text);
    let o = boga(&["run", "--config", cfg.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("broken.toml:3:"), "{}", stderr(&o));
}

#[test]
fn the_seed_flag_overrides_the_config() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write(tmp.path(), "run.toml", BODY);
    let out = tmp.path().join("log");
    let o = boga(&["run", "--config", cfg.to_str().unwrap(), "--seed", "99", "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let logged = CampaignConfig::load(&out.join(CONFIG_FILE)).unwrap();
    assert_eq!(logged.master_seed, 99);
}

#[test]
fn an_unlaunchable_evaluator_exits_three() {
    let tmp = tempfile::tempdir().unwrap();
    let text = BODY.replace(
        r#"evaluator = { kind = "builtin", landscape = "sheet" }"#,
        r#"evaluator = { kind = "external", command = ["/nonexistent/evaluator"], timeout_ms = 1000 }"#,
    );
    let cfg = write(tmp.path(), "ext.toml", &text);
    let out = tmp.path().join("log");
    let o = boga(&["run", "--config", cfg.to_str().unwrap(), "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(3), "{}", stderr(&o));
}

#[test]
fn resume_of_a_finished_run_changes_nothing() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write(tmp.path(), "run.toml", BODY);
    let out = tmp.path().join("log");
    let args = ["run", "--config", cfg.to_str().unwrap(), "--out", out.to_str().unwrap()];
    assert_eq!(boga(&args).status.code(), Some(0));
    let before = fs::read(out.join(EVALUATIONS_FILE)).unwrap();
    let mut with_resume = args.to_vec();
    with_resume.push("--resume");
    let o = boga(&with_resume);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert!(stdout(&o).contains("resuming"));
    assert_eq!(fs::read(out.join(EVALUATIONS_FILE)).unwrap(), before);
}

#[test]
fn an_unknown_log_level_is_reported_but_not_fatal() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write(tmp.path(), "run.toml", BODY);
    let out = tmp.path().join("log");
    let o = Command::new(BOGA)
        .args(["run", "--config", cfg.to_str().unwrap(), "--out", out.to_str().unwrap()])
        .env("BOGA_LOG_LEVEL", "chatty")
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(0));
    assert!(stderr(&o).contains("BOGA_LOG_LEVEL"));
}

fn sweep_file(dir: &Path, k: &str, seeds: &str) -> PathBuf {
    write(dir, "base.toml", BODY);
    write(
        dir,
        "sweep.toml",
        &format!("base_config = \"base.toml\"\nk_propose = {k}\nseeds = {seeds}\nm_select = 3\noutput_dir = \"out\"\njobs = 2\n"),
    )
}

#[test]
fn a_sweep_runs_every_cell() {
    let tmp = tempfile::tempdir().unwrap();
    let spec = sweep_file(tmp.path(), "[3, 30]", "[1, 2]");
    let o = boga_in(tmp.path(), &["sweep", "--config", spec.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let mut reader = csv::Reader::from_path(tmp.path().join("out/comparison.csv")).unwrap();
    assert_eq!(reader.records().count(), 4);
    let summary = fs::read_to_string(tmp.path().join("out/summary.csv")).unwrap();
    assert_eq!(summary.lines().count(), 3, "{summary}");
}

#[test]
fn a_sweep_with_duplicate_pool_sizes_is_rejected() {
    let tmp = tempfile::tempdir().unwrap();
    let spec = sweep_file(tmp.path(), "[30, 30]", "[1]");
    let o = boga(&["sweep", "--config", spec.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("duplicate"), "{}", stderr(&o));
}

#[test]
fn a_sweep_cell_reproduces_the_equivalent_single_run() {
    let tmp = tempfile::tempdir().unwrap();
    let spec = sweep_file(tmp.path(), "[30]", "[5]");
    assert_eq!(boga_in(tmp.path(), &["sweep", "--config", spec.to_str().unwrap()]).status.code(), Some(0));
    let single = tmp.path().join("single");
    let cfg = tmp.path().join("base.toml");
    let o = boga(&["run", "--config", cfg.to_str().unwrap(), "--seed", "5", "--out", single.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0));
    let cell = fs::read(tmp.path().join("out/k30/seed5").join(EVALUATIONS_FILE)).unwrap();
    assert_eq!(cell, fs::read(single.join(EVALUATIONS_FILE)).unwrap());
}

#[test]
fn report_writes_tables_and_plots() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write(tmp.path(), "run.toml", BODY);
    let log = tmp.path().join("log");
    assert_eq!(
        boga(&["run", "--config", cfg.to_str().unwrap(), "--out", log.to_str().unwrap()]).status.code(),
        Some(0)
    );
    let rep = tmp.path().join("report");
    let o = boga(&["report", "--log", log.to_str().unwrap(), "--out", rep.to_str().unwrap(), "--window", "10"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    for f in ["trajectory.csv", "trajectory.svg", "r2.csv", "r2.svg", "distributions.csv", "distributions.svg"] {
        assert!(rep.join(f).is_file(), "missing {f}");
    }
    let o = boga(&["report", "--log", tmp.path().join("nope").to_str().unwrap(), "--out", rep.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn shipped_configs_are_valid() {
    let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs");
    let mut seen = 0;
    for entry in fs::read_dir(&dir).unwrap() {
        let path = entry.unwrap().path();
        if path.extension().is_none_or(|e| e != "toml") {
            continue;
        }
        seen += 1;
        if path.file_stem().unwrap().to_string_lossy().ends_with("sweep") {
            boga_cli::SweepSpec::load(&path).unwrap_or_else(|e| panic!("{}: {e}", path.display()));
        } else {
            CampaignConfig::load(&path).unwrap_or_else(|e| panic!("{}: {e}", path.display()));
        }
    }
    assert!(seen >= 4);
}
