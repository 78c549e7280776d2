use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn ogaprox(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_ogaprox"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exit code")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn run_to(dir: &Path, name: &str, extra: &[&str]) -> (Output, Value) {
    let trace = dir.join(format!("{name}.csv"));
    let summary = dir.join(format!("{name}.json"));
    let mut args = vec![
        "run",
        "--trace",
        trace.to_str().unwrap(),
        "--summary",
        summary.to_str().unwrap(),
    ];
    args.extend_from_slice(extra);
    let out = ogaprox(&args);
    let json = std::fs::read_to_string(&summary)
        .map(|s| serde_json::from_str(&s).unwrap())
        .unwrap_or(Value::Null);
    (out, json)
}

#[test]
fn counterexample_run_summary() {
    let dir = tempfile::tempdir().unwrap();
    let (out, s) = run_to(
        dir.path(),
        "ce",
        &[
            "--problem",
            "counterexample",
            "--epsilon",
            "0.1",
            "--iters",
            "10000",
        ],
    );
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    assert_eq!(s["iters"], 10000);
    assert!(s["floors"]["min_x"].as_f64().unwrap() > 0.5);
    assert!(s["floors"]["min_y"].as_f64().unwrap() > 0.99);
    assert!(s["floors"]["min_f_ergodic"].as_f64().unwrap() > 0.495);
    assert!(s["max_abs_gap"].as_f64().unwrap() < 1e-10);
    assert_eq!(s["violations"], 0);
    assert_eq!(s["regime"]["kind"], "adversarial");
    for key in [
        "run",
        "regime",
        "iters",
        "final_value_error",
        "fitted_rate",
        "floors",
        "max_abs_gap",
        "violations",
    ] {
        assert!(s.get(key).is_some(), "{key}");
    }
}

#[test]
fn bilinear_constant_run_decays_like_inverse_square() {
    let dir = tempfile::tempdir().unwrap();
    let (out, s) = run_to(
        dir.path(),
        "bil",
        &[
            "--problem",
            "bilinear",
            "--regime",
            "constant",
            "--tau",
            "0.2",
            "--sigma",
            "0.2",
            "--iters",
            "100000",
        ],
    );
    assert_eq!(code(&out), 0);
    assert_eq!(s["fitted_rate"]["model"], "power");
    assert!(s["fitted_rate"]["value"].as_f64().unwrap() <= -1.8);

    let trace = dir.path().join("bil.csv");
    let r = ogaprox(&[
        "rates",
        "--trace",
        trace.to_str().unwrap(),
        "--model",
        "power",
        "--column",
        "f_ergodic",
        "--from",
        "100",
    ]);
    assert_eq!(code(&r), 0);
    let text = stdout(&r);
    let value: f64 = text
        .split_whitespace()
        .find_map(|w| w.strip_prefix("value="))
        .unwrap()
        .parse()
        .unwrap();
    assert!((value + 2.0).abs() < 0.05, "{text}");
}

#[test]
fn scsc_linear_rate_summary_and_rates() {
    let dir = tempfile::tempdir().unwrap();
    let (out, s) = run_to(
        dir.path(),
        "scsc",
        &["--problem", "scsc", "--theta", "0.6", "--iters", "200"],
    );
    assert_eq!(code(&out), 0);
    assert_eq!(s["fitted_rate"]["model"], "geometric");
    assert!(s["fitted_rate"]["value"].as_f64().unwrap() <= 0.62);
    let trace = dir.path().join("scsc.csv");
    let r = ogaprox(&[
        "rates",
        "--trace",
        trace.to_str().unwrap(),
        "--model",
        "geometric",
    ]);
    assert_eq!(code(&r), 0);
    let value: f64 = stdout(&r)
        .split_whitespace()
        .find_map(|w| w.strip_prefix("value="))
        .unwrap()
        .parse()
        .unwrap();
    assert!(value <= 0.62);
}

#[test]
fn trace_header_and_determinism() {
    let dir = tempfile::tempdir().unwrap();
    let args = ["--problem", "csc", "--iters", "300"];
    let (a, _) = run_to(dir.path(), "a", &args);
    let (b, _) = run_to(dir.path(), "b", &args);
    assert_eq!(code(&a), 0);
    assert_eq!(code(&b), 0);
    let ta = std::fs::read(dir.path().join("a.csv")).unwrap();
    let tb = std::fs::read(dir.path().join("b.csv")).unwrap();
    assert_eq!(ta, tb);
    let text = String::from_utf8(ta).unwrap();
    let header = text.lines().next().unwrap();
    assert_eq!(
        header,
        "k,tau_k,sigma_k,theta_k,t_k,x_norm,y_norm,xhat_norm,yhat_norm,f_ergodic,gap_ergodic,\
         value_error,lower_bound,upper_bound,cert_slack,x_0,y_0"
    );
    assert_eq!(text.lines().count(), 301);
    let first: Vec<&str> = text.lines().nth(1).unwrap().split(',').collect();
    assert_eq!(first[0], "1");
    // 17 significant digits in scientific notation
    assert_eq!(first[1], "5.0000000000000000e-1");
}

#[test]
fn verify_suites() {
    let out = ogaprox(&["verify", "--suite", "counterexample"]);
    assert_eq!(code(&out), 0);
    let text = stdout(&out);
    for name in ["gap-zero", "value-floor", "iterate-floors"] {
        assert!(
            text.lines()
                .any(|l| l.starts_with("PASS") && l.contains(name)),
            "{name}: {text}"
        );
    }
    for suite in [
        "certificates",
        "schedules",
        "engine",
        "ergodic",
        "problem",
        "sandwich",
    ] {
        let out = ogaprox(&["verify", "--suite", suite]);
        assert_eq!(code(&out), 0, "{suite}: {}", stdout(&out));
        assert!(!stdout(&out).contains("FAIL"));
    }
    assert_eq!(code(&ogaprox(&["verify", "--suite", "bogus"])), 2);
}

#[test]
fn rates_input_errors() {
    let dir = tempfile::tempdir().unwrap();
    let (out, _) = run_to(
        dir.path(),
        "short",
        &["--problem", "bilinear", "--iters", "9"],
    );
    assert_eq!(code(&out), 0);
    let short = dir.path().join("short.csv");
    assert_eq!(
        code(&ogaprox(&["rates", "--trace", short.to_str().unwrap()])),
        2
    );

    let bad = dir.path().join("bad.csv");
    std::fs::write(&bad, "k,value_error\n1,0.5\n2,oops\n").unwrap();
    assert_eq!(
        code(&ogaprox(&["rates", "--trace", bad.to_str().unwrap()])),
        2
    );

    let missing = dir.path().join("missing.csv");
    assert_eq!(
        code(&ogaprox(&["rates", "--trace", missing.to_str().unwrap()])),
        2
    );

    let (_, _) = run_to(
        dir.path(),
        "ok",
        &["--problem", "bilinear", "--iters", "50"],
    );
    let ok = dir.path().join("ok.csv");
    assert_eq!(
        code(&ogaprox(&[
            "rates",
            "--trace",
            ok.to_str().unwrap(),
            "--column",
            "nope"
        ])),
        2
    );
}

#[test]
fn configuration_errors() {
    for args in [
        &["run", "--problem", "nope"][..],
        &["run", "--problem", "counterexample", "--epsilon", "0.31"],
        &[
            "run",
            "--problem",
            "csc",
            "--sigma0",
            "10",
            "--tau0",
            "0.01",
        ],
        &["run", "--problem", "bilinear", "--iters", "0"],
        &["run", "--problem", "bilinear", "--regime", "accelerated"],
        &["run", "--problem", "bilinear", "--x0", "1,2"],
        &["run", "--problem", "bilinear", "--tau", "1", "--sigma", "1"],
        &["frobnicate"],
    ] {
        assert_eq!(code(&ogaprox(args)), 2, "{args:?}");
    }
}

#[test]
fn numeric_failure_exit_code() {
    let out = ogaprox(&[
        "run",
        "--problem",
        "bilinear",
        "--tau",
        "1e300",
        "--sigma",
        "1e-301",
        "--iters",
        "1000",
    ]);
    assert_eq!(code(&out), 3);
}

#[test]
fn help_lists_catalog_and_regimes() {
    let out = ogaprox(&["--help"]);
    assert_eq!(code(&out), 0);
    let text = stdout(&out);
    for word in [
        "bilinear",
        "csc",
        "scsc",
        "counterexample",
        "constant",
        "accelerated",
        "linear",
        "adversarial",
    ] {
        assert!(text.contains(word), "{word}");
    }
}
