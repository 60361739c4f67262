use std::path::PathBuf;
use std::process::{Command, Output};

fn l2ai(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_l2ai"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn scenario(name: &str) -> String {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("scenarios")
        .join(name)
        .display()
        .to_string()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

#[test]
fn run_honest_scenario_exits_zero() {
    let out = l2ai(&["run", &scenario("honest.l2s")]);
    assert_eq!(out.status.code(), Some(0), "{}", stdout(&out));
    let text = stdout(&out);
    assert!(text.contains("assert pass expect u1 keys-match"));
    assert!(text.ends_with("result=pass\n"));
}

#[test]
fn run_replay_scenario_exits_zero() {
    let out = l2ai(&["run", &scenario("replay-stale.l2s")]);
    assert_eq!(out.status.code(), Some(0), "{}", stdout(&out));
    assert!(stdout(&out).contains("assert pass expect hms stale"));
}

#[test]
fn builtin_prefix_runs_shipped_scenarios() {
    let out = l2ai(&["run", "builtin:drop-msg2"]);
    assert_eq!(out.status.code(), Some(0));
}

#[test]
fn failing_assertion_exits_one() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("wrong.l2s");
    std::fs::write(
        &path,
        "user u1 D\nhonest register u1\nhonest login u1\nexpect hms bad-mac\n",
    )
    .unwrap();
    let out = l2ai(&["run", path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
    assert!(stdout(&out).contains("assert fail expect hms bad-mac :: actual=accepted"));
}

#[test]
fn parse_error_exits_two_and_names_line() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bad.l2s");
    std::fs::write(&path, "seed 1\nuser u1 D\nteleport u1\n").unwrap();
    let out = l2ai(&["run", path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("line 3"), "{err}");
}

#[test]
fn bad_permission_table_exits_two() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("perms.txt");
    std::fs::write(&path, "D read-patient-vitals\nZZ everything\n").unwrap();
    let out = l2ai(&["--perm-table", path.to_str().unwrap(), "suite", "metrics"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn custom_permission_table_applies() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("perms.txt");
    std::fs::write(&path, "D read-patient-record\n").unwrap();
    let out = l2ai(&[
        "--perm-table",
        path.to_str().unwrap(),
        "run",
        &scenario("honest.l2s"),
    ]);
    assert_eq!(out.status.code(), Some(1));
    assert!(stdout(&out).contains("actual=unauthorized"));
}

#[test]
fn unknown_suite_exits_two() {
    assert_eq!(l2ai(&["suite", "everything"]).status.code(), Some(2));
}

#[test]
fn metrics_suite_reports_wire_sizes() {
    let out = l2ai(&["suite", "metrics", "--seed", "42"]);
    assert_eq!(out.status.code(), Some(0));
    let text = stdout(&out);
    assert!(text.contains("metric phase=Login side=User hash=6 xor=6 enc=0 dec=1 fe=1 bytes=68"));
    assert!(text.contains(
        "metric phase=AuthKeyExchange side=Server hash=10 xor=7 enc=0 dec=0 fe=0 bytes=48"
    ));
}

#[test]
fn delta_t_flag_changes_outcome() {
    let out = l2ai(&["--delta-t", "3000", "run", &scenario("replay-stale.l2s")]);
    assert_eq!(out.status.code(), Some(1));
    assert!(stdout(&out).contains("version.delta_t_ms=3000"));
}

#[test]
fn report_can_go_to_a_file() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("report.txt");
    let out = l2ai(&["suite", "metrics", "--out", path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0));
    assert!(out.stdout.is_empty());
    assert!(std::fs::read_to_string(path)
        .unwrap()
        .contains("result=pass"));
}

#[test]
fn export_writes_deterministic_trace() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a.txt");
    let b = dir.path().join("b.txt");
    for p in [&a, &b] {
        let out = l2ai(&["export", "--trace", p.to_str().unwrap(), "--seed", "42"]);
        assert_eq!(out.status.code(), Some(0));
    }
    let a = std::fs::read(a).unwrap();
    assert_eq!(a, std::fs::read(b).unwrap());
    let golden = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/golden/trace_seed42.txt");
    assert_eq!(a, std::fs::read(golden).unwrap());
}
