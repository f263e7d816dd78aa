use std::process::Command;

fn nonlin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_nonlin"))
}

fn stdout(out: &std::process::Output) -> String {
    String::from_utf8_lossy(&out.stdout).into_owned()
}

#[test]
fn find_hard_then_verify() {
    let dir = tempfile::tempdir().unwrap();
    let inst = dir.path().join("inst.json");
    let out = nonlin()
        .args(["find-hard", "--g", "mnl", "--m", "2", "--b", "2", "--grid", "50", "--out"])
        .arg(&inst)
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0));
    let text = stdout(&out);
    let gamma: f64 = text.lines().find_map(|l| l.strip_prefix("gamma = ")).expect("gamma line").parse().unwrap();
    assert!(gamma > 0.0);

    let ok = nonlin().args(["verify", "--g", "mnl", "--inst"]).arg(&inst).output().unwrap();
    assert_eq!(ok.status.code(), Some(0));
    assert!(stdout(&ok).trim_end().ends_with("VALID"));

    let bad = nonlin().args(["verify", "--g", "linear:0.3", "--inst"]).arg(&inst).output().unwrap();
    assert_eq!(bad.status.code(), Some(1));
    assert!(stdout(&bad).trim_end().ends_with("INVALID"));
}

#[test]
fn linear_link_has_no_gap() {
    let dir = tempfile::tempdir().unwrap();
    let out = nonlin()
        .args(["find-hard", "--g", "linear:0.3", "--m", "2", "--b", "2", "--grid", "20", "--x0", "0.2,0.5", "--out"])
        .arg(dir.path().join("i.json"))
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0));
    let gamma: f64 = stdout(&out).lines().find_map(|l| l.strip_prefix("gamma = ")).unwrap().parse().unwrap();
    assert!(gamma <= 1e-8);
}

#[test]
fn identity_check_passes() {
    let out = nonlin().args(["identity-check", "--trials", "200", "--seed", "3"]).output().unwrap();
    assert_eq!(out.status.code(), Some(0));
    assert!(stdout(&out).contains("PASS"));
}

#[test]
fn run_and_sweep_write_csv() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = r#"{
        "dims": {"n": 4, "k": 2, "t": 500},
        "link": {"kind": "mnl"},
        "adversary": {"kind": "mnl_hard", "instance": {"grid": 20}, "delta": "auto"},
        "algorithms": [{"name": "exp3"}],
        "replications": 2,
        "base_seed": 5,
        "t_grid": [100, 500],
        "output": "result.csv"
    }"#;
    let path = dir.path().join("cfg.json");
    std::fs::write(&path, cfg).unwrap();
    let run = nonlin().args(["run", "--config"]).arg(&path).output().unwrap();
    assert_eq!(run.status.code(), Some(0), "{}", String::from_utf8_lossy(&run.stderr));
    let first = std::fs::read(dir.path().join("result.csv")).unwrap();
    assert!(String::from_utf8_lossy(&first).starts_with("run_id,seed,t,subset_rank,reward,inst_regret,cum_regret"));
    nonlin().args(["run", "--config"]).arg(&path).output().unwrap();
    assert_eq!(first, std::fs::read(dir.path().join("result.csv")).unwrap());

    let sweep = nonlin().args(["sweep", "--config"]).arg(&path).output().unwrap();
    assert_eq!(sweep.status.code(), Some(0));
    let text = std::fs::read_to_string(dir.path().join("result.csv")).unwrap();
    assert_eq!(text.lines().count(), 3);
}

#[test]
fn exit_codes() {
    assert_eq!(nonlin().arg("--help").output().unwrap().status.code(), Some(0));
    assert_eq!(nonlin().arg("--version").output().unwrap().status.code(), Some(0));
    assert_eq!(nonlin().arg("frobnicate").output().unwrap().status.code(), Some(1));
    assert_eq!(nonlin().args(["identity-check", "--trials", "x"]).output().unwrap().status.code(), Some(1));
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.json");
    std::fs::write(&bad, r#"{"dims": {"n": 2, "k": 3, "t": 10}}"#).unwrap();
    assert_eq!(nonlin().args(["run", "--config"]).arg(&bad).output().unwrap().status.code(), Some(1));
    let missing = dir.path().join("missing.json");
    assert_eq!(nonlin().args(["run", "--config"]).arg(&missing).output().unwrap().status.code(), Some(2));
    let out = nonlin()
        .args(["find-hard", "--g", "wiggly", "--m", "2", "--b", "2", "--grid", "10", "--out"])
        .arg(dir.path().join("x.json"))
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(1));
}
