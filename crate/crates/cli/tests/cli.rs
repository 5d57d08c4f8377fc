use std::path::Path;
use std::process::{Command, Output};

use tlcl_core::demos::write_demo_set;
use tlcl_core::fixtures::{line_demo, line_scenario, LINE_TOML};
use tlcl_core::trace::{load_trace, save_trace};

const SPEC: &str = "F[0,10)(r1 & F[0,15) r2) & G[0,40) !obs";

fn tlcl(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_tlcl")).args(args).output().unwrap()
}

fn code(o: &Output) -> i32 {
    o.status.code().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

/// Fixture files plus a trained classifier in `dir/out`.
fn trained(dir: &Path) {
    assert_eq!(code(&tlcl(&["fixture", "--out", p(dir)])), 0);
    let o = tlcl(&[
        "infer",
        "--scenario",
        p(&dir.join("scenario.toml")),
        "--demos",
        p(&dir.join("demos")),
        "--epsilon",
        "0.5",
        "--condition-samples",
        "50",
        "--out",
        p(&dir.join("out")),
    ]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
}

fn simulate(dir: &Path, env: &str, x0: &str, out: &str) -> Output {
    tlcl(&[
        "simulate",
        "--scenario",
        p(&dir.join("scenario.toml")),
        "--classifier",
        p(&dir.join("out/classifier.toml")),
        "--env",
        p(&dir.join(env)),
        "--x0",
        x0,
        "--out",
        p(&dir.join(out)),
    ])
}

#[test]
fn parse_reports_horizon_and_errors() {
    let o = tlcl(&["parse", "--formula", SPEC]);
    assert_eq!(code(&o), 0);
    assert!(stdout(&o).contains("horizon = 40"));
    let o = tlcl(&["parse", "--formula", "true"]);
    assert!(stdout(&o).contains("horizon = 0"));
    let o = tlcl(&["parse", "--formula", "P[0,3) a"]);
    assert!(stdout(&o).contains("necessary_length = 3"), "{}", stdout(&o));
    let o = tlcl(&["parse", "--formula", "F[3,1) a"]);
    assert_eq!(code(&o), 2);
    assert!(stderr(&o).contains("error"));
}

#[test]
fn monitor_simulate_and_verify_exit_codes() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path();
    trained(dir);
    let scenario = dir.join("scenario.toml");
    let classifier = dir.join("out/classifier.toml");

    // The nominal environment belongs to demonstration 0, so its run is
    // replayed exactly.
    let o = simulate(dir, "env_nominal.csv", "0,0", "nominal");
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    assert!(!stderr(&o).contains("outside certified region"));
    assert_eq!(
        load_trace(dir.join("nominal/agent.csv")).unwrap(),
        load_trace(dir.join("demos/demo_0/agent.csv")).unwrap()
    );

    let q = dir.join("nominal/q.csv");
    let monitor = |formula: &str, trace: &Path, extra: &[&str]| {
        let mut args = vec![
            "monitor",
            "--formula",
            formula,
            "--trace",
            p(trace),
            "--scenario",
            p(&scenario),
        ];
        args.extend_from_slice(extra);
        tlcl(&args)
    };
    let o = monitor(SPEC, &q, &["--robust"]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    assert!(stdout(&o).contains("verdict = satisfied"));
    assert!(stdout(&o).contains("robustness = "));
    assert_eq!(code(&monitor(&format!("!({SPEC})"), &q, &[])), 1);
    let o = monitor(SPEC, &q, &["--at", "20"]);
    assert!(stderr(&o).contains("warning"), "{}", stderr(&o));
    assert_eq!(code(&monitor(SPEC, &dir.join("missing.csv"), &[])), 2);

    let o = simulate(dir, "env_nominal.csv", "9,9", "far");
    assert!(stderr(&o).contains("outside certified region"));
    assert!(dir.join("far/agent.csv").exists());

    let o = simulate(dir, "env_late.csv", "0,0", "late");
    assert_eq!(code(&o), 1);
    assert!(stdout(&o).contains("violated"));

    let verify = |scale: &str, samples: &str, out: &str| {
        tlcl(&[
            "verify",
            "--scenario",
            p(&scenario),
            "--classifier",
            p(&classifier),
            "--samples",
            samples,
            "--seed",
            "3",
            "--radius-scale",
            scale,
            "--out",
            p(&dir.join(out)),
        ])
    };
    let o = verify("1.0", "40", "v1");
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    assert!(stdout(&o).contains("verdict = verified-sampled"));
    let o = verify("3.0", "40", "v3");
    assert_eq!(code(&o), 1, "{}", stdout(&o));
    assert!(stdout(&o).contains("verdict = falsified"));
    assert!(dir.join("v3/counterexample_0_agent.csv").exists());
    assert_eq!(code(&verify("1.0", "0", "v0")), 2);
}

#[test]
fn infer_single_demo_and_conflicts() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path();
    let s = line_scenario();
    std::fs::write(dir.join("line.toml"), LINE_TOML).unwrap();
    let up = vec![2; 30];
    let mut late = up.clone();
    late[0] = 1;
    write_demo_set(dir.join("one"), &[line_demo(&s, 0.0, &[0.0; 34], &up).unwrap()]).unwrap();
    write_demo_set(
        dir.join("conflict"),
        &[
            line_demo(&s, 0.0, &[0.0; 34], &up).unwrap(),
            line_demo(&s, 0.0, &[0.0; 34], &late).unwrap(),
        ],
    )
    .unwrap();
    let infer = |demos: &str, eps: &str, extra: &[&str]| {
        let out = dir.join(format!("out_{demos}_{eps}"));
        let (scenario, demos) = (dir.join("line.toml"), dir.join(demos));
        let mut args = vec![
            "infer",
            "--scenario",
            p(&scenario),
            "--demos",
            p(&demos),
            "--epsilon",
            eps,
            "--condition-samples",
            "20",
            "--out",
            p(&out),
        ];
        args.extend_from_slice(extra);
        tlcl(&args)
    };
    let o = infer("one", "0", &[]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    assert!(stdout(&o).contains("l0: true -> [1.0]"), "{}", stdout(&o));
    let o = infer("conflict", "0", &[]);
    assert_eq!(code(&o), 2);
    assert!(stderr(&o).contains("(demo 0, k 0) vs (demo 1, k 0)"), "{}", stderr(&o));
    assert_eq!(code(&infer("one", "0", &["--tradeoff", "ratio:0"])), 2);
}

#[test]
fn emitted_traces_round_trip() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path();
    trained(dir);
    let o = simulate(dir, "env_nominal.csv", "0.1234567890123,-0.3", "sim");
    assert!(code(&o) <= 1, "{}", stderr(&o));
    for f in ["agent.csv", "q.csv", "input.csv"] {
        let path = dir.join("sim").join(f);
        let t = load_trace(&path).unwrap();
        let again = dir.join("sim").join(format!("again_{f}"));
        save_trace(&t, &again).unwrap();
        assert_eq!(std::fs::read(&path).unwrap(), std::fs::read(&again).unwrap());
        assert_eq!(load_trace(&again).unwrap(), t);
    }
}

#[test]
fn reruns_are_byte_identical() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path();
    trained(dir);
    let o = tlcl(&[
        "infer",
        "--scenario",
        p(&dir.join("scenario.toml")),
        "--demos",
        p(&dir.join("demos")),
        "--epsilon",
        "0.5",
        "--condition-samples",
        "50",
        "--out",
        p(&dir.join("again")),
    ]);
    assert_eq!(code(&o), 0);
    for f in ["classifier.toml", "inference_report.toml", "conditions.toml"] {
        assert_eq!(
            std::fs::read(dir.join("out").join(f)).unwrap(),
            std::fs::read(dir.join("again").join(f)).unwrap(),
            "{f}"
        );
    }
}
