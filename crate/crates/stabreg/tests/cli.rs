use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn scenarios() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../scenarios")
}

fn stabreg(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_stabreg")).args(args).env_remove("STABREG_MAX_EVENTS").output().unwrap()
}

fn code(out: &Output) -> i32 {
    out.status.code().unwrap()
}

fn stdout(out: &Output) -> String {
    String::from_utf8_lossy(&out.stdout).into_owned()
}

fn path(name: &str) -> String {
    scenarios().join(name).to_str().unwrap().to_owned()
}

#[test]
fn run_passes_and_prints_verdicts() {
    let out = stabreg(&["run", "--scenario", &path("regular-async.toml")]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    assert!(stdout(&out).contains("regularity: Pass"));
}

#[test]
fn run_then_check_agree() {
    let dir = tempfile::tempdir().unwrap();
    let trace = dir.path().join("t.jsonl");
    let trace = trace.to_str().unwrap();
    let run = stabreg(&["run", "--scenario", &path("atomic-sync.toml"), "--seed", "4", "--out", trace]);
    assert_eq!(code(&run), 0);
    let check = stabreg(&["check", "--trace", trace]);
    assert_eq!(code(&check), 0);
    assert_eq!(stdout(&run), stdout(&check));
}

#[test]
fn eight_servers_cannot_tolerate_one_byzantine_asynchronously() {
    let dir = tempfile::tempdir().unwrap();
    let text = std::fs::read_to_string(scenarios().join("regular-async.toml")).unwrap();
    let bad = dir.path().join("n8.toml");
    std::fs::write(&bad, text.replace("n = 9", "n = 8")).unwrap();
    let out = stabreg(&["run", "--scenario", bad.to_str().unwrap()]);
    assert_eq!(code(&out), 2);
    assert!(String::from_utf8_lossy(&out.stderr).contains("8t + 1"));
}

#[test]
fn four_servers_suffice_synchronously() {
    assert_eq!(code(&stabreg(&["run", "--scenario", &path("atomic-sync.toml")])), 0);
}

#[test]
fn missing_and_malformed_files_exit_3() {
    assert_eq!(code(&stabreg(&["run", "--scenario", "/nonexistent.toml"])), 3);
    let dir = tempfile::tempdir().unwrap();
    let junk = dir.path().join("junk.jsonl");
    std::fs::write(&junk, "not json\n").unwrap();
    assert_eq!(code(&stabreg(&["check", "--trace", junk.to_str().unwrap()])), 3);
}

#[test]
fn bad_flags_are_configuration_errors() {
    let out = stabreg(&["run", "--scenario", &path("regular-async.toml"), "--adversary", "nobody"]);
    assert_eq!(code(&out), 2);
}

#[test]
fn search_finds_the_regular_inversion_and_expect_fail_accepts_it() {
    let contested = path("contested.toml");
    let plain = stabreg(&["search", "--scenario", &contested, "--budget", "2000"]);
    assert_eq!(code(&plain), 1);
    assert!(stdout(&plain).contains("first: schedule"));
    let expected = stabreg(&["search", "--scenario", &contested, "--budget", "2000", "--expect-fail", "no_inversion"]);
    assert_eq!(code(&expected), 0);
}

#[test]
fn sweep_over_adversaries() {
    let out = stabreg(&[
        "sweep",
        "--scenario",
        &path("regular-async.toml"),
        "--seeds",
        "0..20",
        "--mixed",
        "--all-adversaries",
    ]);
    assert_eq!(code(&out), 0, "{}", stdout(&out));
    assert!(stdout(&out).starts_with("100 runs"));
}

#[test]
fn event_budget_from_the_environment() {
    let out = Command::new(env!("CARGO_BIN_EXE_stabreg"))
        .args(["run", "--scenario", &path("regular-async.toml"), "--check", "liveness"])
        .env("STABREG_MAX_EVENTS", "50")
        .output()
        .unwrap();
    assert_eq!(code(&out), 1);
    assert!(stdout(&out).contains("liveness: Fail"));
}
