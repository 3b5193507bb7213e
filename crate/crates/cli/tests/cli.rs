use std::path::PathBuf;
use std::process::{Command, Output};

use serde_json::Value;

fn fixture(name: &str) -> String {
    let p: PathBuf = [env!("CARGO_MANIFEST_DIR"), "..", "core", "fixtures", name]
        .iter()
        .collect();
    p.to_string_lossy().into_owned()
}

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_respgames"))
        .args(args)
        .env_remove("RESPGAMES_THREADS")
        .output()
        .expect("binary runs")
}

fn json(args: &[&str]) -> (i32, Value) {
    let mut all = args.to_vec();
    all.extend(["--format", "json"]);
    let out = run(&all);
    let code = out.status.code().unwrap();
    let v = serde_json::from_slice(&out.stdout).unwrap_or(Value::Null);
    (code, v)
}

fn close(v: &Value, x: f64, tol: f64) -> bool {
    (v.as_f64().unwrap() - x).abs() < tol
}

#[test]
fn check_exit_codes() {
    let m = fixture("junction.csg");
    let (code, v) = json(&[
        "check",
        &m,
        "--formula",
        r#"<<A1,A2>> D<=0 [BCR(A1,p_brake,F<=2 "crash")]"#,
    ]);
    assert_eq!(code, 0);
    assert_eq!(v["result"]["truth"], true);
    let (code, v) = json(&["check", &m, "--formula", r#"<<A1,A2>> P>=1 [X "pass"]"#]);
    assert_eq!(code, 1);
    assert!(close(&v["result"]["value"], 0.88, 1e-12));
    assert_eq!(
        run(&["check", "/no/such/model.csg", "--formula", "true"]).status.code(),
        Some(2)
    );
    assert_eq!(run(&["check", &m, "--formula", "<<A1>> P>="]).status.code(), Some(2));
}

#[test]
fn responsibility_reports() {
    let m = fixture("junction.csg");
    let (code, v) = json(&["resp", &m, "--profile", "p_nb", "--outcome", r#"X "crash""#]);
    assert_eq!(code, 0);
    let r = &v["result"];
    assert!(close(&r["degrees"]["A1"], 0.64, 1e-9));
    assert!(close(&r["degrees"]["A2"], 0.24, 1e-9));
    assert!(close(&r["upsilon"], 0.88, 1e-9));

    let (_, v) = json(&["resp", &m, "--profile", "p_brake", "--outcome", r#"X "crash""#]);
    assert!(close(&v["result"]["upsilon"], 0.0, 1e-9));
    assert!(close(&v["result"]["degrees"]["A1"], 0.0, 1e-9));

    let (_, v) = json(&[
        "resp",
        &m,
        "--profile",
        "p_nb",
        "--outcome",
        r#"F<=2 "crash""#,
        "--agent",
        "A1",
    ]);
    assert!(close(&v["result"]["degree"], 0.64, 1e-9));

    assert_eq!(
        run(&["resp", &m, "--profile", "nope", "--outcome", r#"X "crash""#])
            .status
            .code(),
        Some(2)
    );
    assert_eq!(
        run(&[
            "resp",
            &m,
            "--profile",
            "p_nb",
            "--outcome",
            r#"X "crash""#,
            "--cap",
            "1"
        ])
        .status
        .code(),
        Some(2)
    );
}

#[test]
fn max_mode_is_plumbed() {
    let m = fixture("junction.csg");
    let (code, v) = json(&[
        "resp",
        &m,
        "--profile",
        "p_brake",
        "--outcome",
        r#"X "pass""#,
        "--mode",
        "max",
    ]);
    assert_eq!(code, 0);
    assert_eq!(v["result"]["mode"], "max");
}

#[test]
fn qualitative_witness() {
    let m = fixture("junction.csg");
    let (code, v) = json(&[
        "bcr",
        &m,
        "--profile",
        "p_nb",
        "--outcome",
        r#"X "crash""#,
        "--agent",
        "A2",
    ]);
    assert_eq!(code, 0);
    assert_eq!(v["result"]["witness"]["coalition"], serde_json::json!(["A1"]));
    let (code, v) = json(&[
        "bcr",
        &m,
        "--profile",
        "p_brake",
        "--outcome",
        r#"X "pass""#,
        "--agent",
        "A1",
    ]);
    assert_eq!(code, 1);
    assert_eq!(v["result"]["responsible"], false);
}

#[test]
fn equilibria() {
    let m = fixture("junction.csg");
    let (code, v) = json(&["ne", &m, "--utility-file", &fixture("junction_utilities.txt")]);
    assert_eq!(code, 0);
    let sols = v["result"]["solutions"].as_array().unwrap();
    assert_eq!(sols.len(), 1);
    assert!(close(&sols[0]["params"]["x1"], 5.0 / 12.0, 1e-6));
    assert!(close(&sols[0]["params"]["x2"], 0.625, 1e-6));

    let d = fixture("dominant.csg");
    let (code, v) = json(&["ne", &d, "--utility-file", &fixture("dominant_utilities.txt")]);
    assert_eq!(code, 0);
    let sols = v["result"]["solutions"].as_array().unwrap();
    assert_eq!(sols.len(), 1);
    assert_eq!(sols[0]["params"]["x1"], 1.0);

    // Payoffs only: `up` pays 1 to its player, so both play it.
    let (code, v) = json(&[
        "ne",
        &d,
        "--outcome",
        r#"X "done""#,
        "--lambda",
        "0",
        "--reward",
        "P=rp",
        "--reward",
        "Q=rq",
    ]);
    assert_eq!(code, 0);
    let sols = v["result"]["solutions"].as_array().unwrap();
    assert_eq!(sols.len(), 1);
    assert_eq!(sols[0]["params"]["x[P,start,up]"], 1.0);
    assert_eq!(sols[0]["params"]["x[Q,start,up]"], 1.0);

    assert_eq!(run(&["ne", &m, "--reward", "r1"]).status.code(), Some(2));
}

#[test]
fn no_equilibrium_exit_code() {
    // P wants to match Q and Q wants to differ, with quadratic utilities:
    // the only indifference point fails the deviation check.
    let dir = std::env::temp_dir().join(format!("respgames-cli-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let u = dir.join("u.txt");
    std::fs::write(
        &u,
        "param x1 = P start up\nparam x2 = Q start up\nu P = x1^2 - x1\nu Q = 0\n",
    )
    .unwrap();
    let out = run(&["ne", &fixture("dominant.csg"), "--utility-file", u.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    std::fs::write(
        &u,
        "param x1 = P start up\nparam x2 = Q start up\nu P = -(x1 - x2)^2\nu Q = (x1 - x2)^2\n",
    )
    .unwrap();
    let out = run(&["ne", &fixture("dominant.csg"), "--utility-file", u.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(3), "{}", String::from_utf8_lossy(&out.stdout));
    std::fs::remove_dir_all(&dir).ok();
}

#[test]
fn simulation() {
    let m = fixture("junction.csg");
    let args = [
        "simulate",
        m.as_str(),
        "--profile",
        "p_brake",
        "--outcome",
        r#"X "crash""#,
        "--samples",
        "100000",
        "--seed",
        "7",
    ];
    let (code, v) = json(&args);
    assert_eq!(code, 0);
    let r = &v["result"];
    assert!(r["diff_over_stderr"].as_f64().unwrap() < 3.0);
    let (_, v) = json(&[
        "simulate",
        &m,
        "--profile",
        "p_nb",
        "--outcome",
        r#"X "crash""#,
        "--samples",
        "1000",
    ]);
    assert_eq!(v["result"]["estimate"], 1.0);
    assert_eq!(
        run(&[
            "simulate",
            &m,
            "--profile",
            "p_nb",
            "--outcome",
            r#"X "crash""#,
            "--samples",
            "0"
        ])
        .status
        .code(),
        Some(2)
    );
}

#[test]
fn output_is_deterministic() {
    let m = fixture("junction.csg");
    let args = [
        "simulate",
        m.as_str(),
        "--profile",
        "p_half",
        "--outcome",
        r#"F<=2 "crash""#,
        "--samples",
        "20000",
        "--seed",
        "3",
        "--format",
        "json",
    ];
    let a = run(&args);
    let b = Command::new(env!("CARGO_BIN_EXE_respgames"))
        .args(args)
        .env("RESPGAMES_THREADS", "1")
        .output()
        .unwrap();
    assert_eq!(a.stdout, b.stdout);
    let u = fixture("junction_utilities.txt");
    let ne = ["ne", m.as_str(), "--utility-file", u.as_str(), "--format", "json"];
    assert_eq!(run(&ne).stdout, run(&ne).stdout);
}

#[test]
fn text_numbers_appear_in_json() {
    let m = fixture("junction.csg");
    let base = ["resp", m.as_str(), "--profile", "p_nb", "--outcome", r#"X "crash""#];
    let text = String::from_utf8(run(&base).stdout).unwrap();
    let mut with_json = base.to_vec();
    with_json.extend(["--format", "json"]);
    let json = String::from_utf8(run(&with_json).stdout).unwrap();
    let mut seen = 0;
    for tok in text.split(|c: char| c.is_whitespace() || c == ',' || c == '[' || c == ']') {
        if tok.parse::<f64>().is_ok() && tok.contains('.') {
            assert!(json.contains(tok), "{tok} missing from JSON");
            seen += 1;
        }
    }
    assert!(seen >= 5);
}

#[test]
fn validate_and_fmt() {
    let m = fixture("junction.csg");
    let (code, v) = json(&["validate", &m]);
    assert_eq!(code, 0);
    assert_eq!(v["result"]["states"], 3);
    let out = run(&["fmt", &m]);
    assert_eq!(out.status.code(), Some(0));
    let dir = std::env::temp_dir().join(format!("respgames-fmt-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let f = dir.join("m.csg");
    std::fs::write(&f, &out.stdout).unwrap();
    let again = run(&["fmt", f.to_str().unwrap()]);
    assert_eq!(out.stdout, again.stdout);
    std::fs::write(
        &f,
        "agents A\nactions A { a }\nstate s init { }\ntrans s (a) { s:0.5 }\n",
    )
    .unwrap();
    assert_eq!(run(&["validate", f.to_str().unwrap()]).status.code(), Some(2));
    std::fs::remove_dir_all(&dir).ok();
}

#[test]
fn extra_profiles_file() {
    let m = fixture("junction.csg");
    let dir = std::env::temp_dir().join(format!("respgames-prof-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let p = dir.join("p.txt");
    std::fs::write(&p, "profile mixed { A1 s0 { b1:0.5 nb1:0.5 } A2 s0 { b2:1.0 } }\n").unwrap();
    let (code, v) = json(&[
        "resp",
        &m,
        "--profiles",
        p.to_str().unwrap(),
        "--profile",
        "mixed",
        "--outcome",
        r#"X "crash""#,
    ]);
    assert_eq!(code, 0, "{v}");
    assert!(v["result"]["upsilon"].as_f64().is_some());
    std::fs::remove_dir_all(&dir).ok();
}
