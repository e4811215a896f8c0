use std::process::{Command, Output};

fn qtrack(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_qtrack")).args(args).output().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

#[test]
fn scenario_list_names_every_preset() {
    let o = qtrack(&["scenario", "list"]);
    assert!(o.status.success());
    let text = stdout(&o);
    for name in ["fig1", "fig3", "fig4", "fig5", "fig6", "fig7", "fig8"] {
        assert!(text.lines().any(|l| l.starts_with(name)), "{name} missing");
    }
}

#[test]
fn config_errors_exit_with_two() {
    assert_eq!(qtrack(&["run", "--scenario", "nope"]).status.code(), Some(2));
    assert_eq!(qtrack(&["run", "--scenario", "fig1", "--set", "system.bogus=1"]).status.code(), Some(2));
    assert_eq!(qtrack(&["run", "--scenario", "fig1", "--set", "measurement.p0=0.7"]).status.code(), Some(2));
    assert_eq!(qtrack(&["scenario", "show", "fig2"]).status.code(), Some(2));
}

#[test]
fn validate_passes() {
    let o = qtrack(&["validate", "--seed", "3"]);
    assert_eq!(o.status.code(), Some(0), "{}", stdout(&o));
    assert_eq!(stdout(&o).lines().filter(|l| l.starts_with("[PASS]")).count(), 4);
}

#[test]
fn run_output_is_reproducible() {
    let args = ["run", "--scenario", "fig4", "--seed", "8", "--trajectory", "3", "--set", "system.d_eps=0.1"];
    let a = qtrack(&args);
    let b = qtrack(&args);
    assert!(a.status.success());
    assert_eq!(a.stdout, b.stdout);
    let text = stdout(&a);
    assert_eq!(text.lines().next(), Some("t,outcome,sz_E,sz_N,sz_NM,F_EN,F_EM,F_TE,F_TN,F_TM"));
    assert_eq!(text.lines().count(), 102);
    assert!(text.lines().nth(1).unwrap().starts_with("0.0,,1.0,"));
}

#[test]
fn disabled_measurement_leaves_outcomes_empty() {
    let o = qtrack(&["run", "--scenario", "fig1", "--no-measurement", "--set", "schedule.K=5"]);
    assert!(o.status.success());
    for line in stdout(&o).lines().skip(1) {
        assert_eq!(line.split(',').nth(1), Some(""));
    }
}

#[test]
fn spin_feedback_fields_have_no_z_component() {
    let o = qtrack(&["fields", "--scenario", "fig8"]);
    assert!(o.status.success());
    let text = stdout(&o);
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("t,outcome,bx_tF,by_tF,bz_tF"));
    let mut rows = 0;
    for line in lines {
        let bz: f64 = line.split(',').nth(4).unwrap().parse().unwrap();
        assert!(bz.abs() <= 1e-9);
        rows += 1;
    }
    assert_eq!(rows, 2 * 50);
}

#[test]
fn ensemble_writes_to_file() {
    let dir = std::env::temp_dir().join(format!("qtrack-cli-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let path = dir.join("s.csv");
    let o = qtrack(&[
        "ensemble",
        "--scenario",
        "fig6",
        "--runs",
        "3",
        "--sweep",
        "measurement.p0=0.1,0.3",
        "--set",
        "schedule.K=4",
        "--out",
        path.to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let text = std::fs::read_to_string(&path).unwrap();
    std::fs::remove_dir_all(&dir).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "p0,t,mean_F,std_F");
    assert_eq!(lines.len(), 1 + 2 * 5);
    assert!(lines[1].starts_with("0.1,0.0,1.0,0.0"));
    assert!(lines[6].starts_with("0.3,0.0,"));
}
