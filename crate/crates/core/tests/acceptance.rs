//! Acceptance criteria. Prints one PASS/FAIL line per criterion and exits
//! non-zero if any criterion fails.

use std::time::Instant;

use ogaprox::cli::{self, read_trace_csv, write_trace_csv, RunArgs};
use ogaprox::diagnostics::{ergodic_inequalities, fit_rate, fit_trace, RateModel, ROW_COLUMNS};
use ogaprox::engine::{run, RunOutcome, Trace};
use ogaprox::model::{probe_rng, sample_box};
use ogaprox::problems;
use ogaprox::schedules::{RegimeSpec, Schedule};
use ogaprox::verify::{certificate_sweep, PROBE_SEED};
use ogaprox::SaddleProblem;

const SUM_TOL: f64 = 1e-8;

type Criterion = (&'static str, fn() -> Outcome);

struct Outcome {
    passed: bool,
    detail: String,
}

fn outcome(passed: bool, detail: impl Into<String>) -> Outcome {
    Outcome {
        passed,
        detail: detail.into(),
    }
}

fn run_catalog(label: &str, iters: usize) -> (SaddleProblem, Trace) {
    let entry = problems::lookup(label).unwrap();
    let p = entry.build().unwrap();
    let (x0, y0) = entry.default_start().unwrap();
    let t = run(&p, entry.default_regime, x0, y0, iters, &mut []).unwrap();
    assert_eq!(t.outcome, RunOutcome::Completed);
    (p, t)
}

fn within(value: f64, lower: f64, upper: f64) -> bool {
    let scale = 1.0 + value.abs() + lower.abs().max(upper.abs());
    value >= lower - SUM_TOL * scale && value <= upper + SUM_TOL * scale
}

fn criterion_1() -> Outcome {
    let start = Instant::now();
    let (p, regime, x0, y0) = problems::counterexample_setup(0.1).unwrap();
    let t = run(&p, regime, x0, y0, 10_000, &mut []).unwrap();
    let elapsed = start.elapsed().as_secs_f64();
    let min_x = t.iterates[1..]
        .iter()
        .map(|(x, _)| x[0])
        .fold(f64::INFINITY, f64::min);
    let min_y = t.iterates[1..]
        .iter()
        .map(|(_, y)| y[0])
        .fold(f64::INFINITY, f64::min);
    let min_f = t
        .rows
        .iter()
        .map(|r| r.xhat[0] * r.yhat[0])
        .fold(f64::INFINITY, f64::min);
    let max_gap = t
        .rows
        .iter()
        .map(|r| r.gap_ergodic.abs())
        .fold(0.0, f64::max);
    let passed = t.len() == 10_000
        && min_x > 0.5
        && min_y > 0.99
        && min_f > 0.495
        && max_gap <= 1e-10
        && elapsed < 1.0;
    outcome(
        passed,
        format!(
            "min x {min_x:.6}, min y {min_y:.6}, min f_ergodic {min_f:.6}, max |gap| {max_gap:.1e}, {elapsed:.3} s"
        ),
    )
}

fn criterion_2() -> Outcome {
    let (p, regime, x0, y0) = problems::counterexample_setup(0.1).unwrap();
    let t = run(&p, regime, x0, y0, 101, &mut []).unwrap();
    let (x1, y1) = (t.iterates[1].0[0], t.iterates[1].1[0]);
    let first = (y1 - 1.1).abs() <= 1e-14 && (x1 - 0.9).abs() <= 1e-14;
    let mut partial = 0.0;
    let mut worst: f64 = 0.0;
    for k in 0..=100usize {
        partial += 1.0 / ((k + 1) as f64).powi(2);
        worst = worst.max((t.iterates[k + 1].0[0] - (1.0 - 0.1 * partial)).abs());
    }
    outcome(
        first && worst <= 1e-12,
        format!("x1 = {x1:.17}, y1 = {y1:.17}, closed-form error {worst:.1e} for k <= 100"),
    )
}

fn criterion_3() -> Outcome {
    let start = Instant::now();
    let (_, t) = run_catalog("bilinear", 100_000);
    let it = |k: usize| (t.iterates[k].0[0], t.iterates[k].1[0]);
    let hand = [(1, 0.76, 1.2), (2, 0.4992, 1.304)]
        .iter()
        .all(|&(k, x, y)| (it(k).0 - x).abs() <= 1e-14 && (it(k).1 - y).abs() <= 1e-14);
    let (x0, y0) = it(0);
    let (tau, sigma) = (0.2, 0.2);
    let mut worst: f64 = 0.0;
    for k in 1..=10_000usize {
        let row = &t.rows[k - 1];
        let kf = k as f64;
        let xhat = (it(k + 1).1 - y0 - sigma * it(k).0) / (kf * sigma);
        let yhat = (x0 - it(k).0) / (kf * tau);
        for (a, b) in [(row.xhat[0], xhat), (row.yhat[0], yhat)] {
            worst = worst.max((a - b).abs() / a.abs().max(b.abs()));
        }
    }
    let fit = fit_trace(&t.rows, "f_ergodic", Some((100, 100_000)), RateModel::Power).unwrap();
    let elapsed = start.elapsed().as_secs_f64();
    outcome(
        hand && worst <= 1e-9 && fit.value <= -1.8 && elapsed < 5.0,
        format!(
            "hand iterates {}, identity error {worst:.1e}, f_ergodic slope {:.4}, {elapsed:.2} s",
            if hand { "exact" } else { "WRONG" },
            fit.value
        ),
    )
}

fn criterion_4() -> Outcome {
    let p = problems::bilinear_scalar();
    let regime = RegimeSpec::ConstantUnit {
        tau: 0.2,
        sigma: 0.2,
        c_alpha: 2.0,
    };
    let mut rng = probe_rng(PROBE_SEED);
    let mut ok = true;
    let mut checked = 0;
    for _ in 0..5 {
        let x0 = sample_box(&mut rng, 1, 5.0);
        let y0 = sample_box(&mut rng, 1, 5.0);
        let (a, b) = (x0[0], y0[0]);
        let t = run(&p, regime, x0, y0, 10_000, &mut []).unwrap();
        for r in &t.rows {
            let k = r.k as f64;
            let (xh, yh) = (r.xhat[0], r.yhat[0]);
            let upper = (2.5 * a * a + 2.5 * (yh - b).powi(2)) / k;
            let lower = -(2.5 * (xh - a).powi(2) + 2.5 * b * b) / k;
            ok &= within(xh * yh, lower, upper);
            checked += 1;
        }
    }
    outcome(
        ok && checked == 50_000,
        format!("{checked} rows over 5 random starts"),
    )
}

fn criterion_5() -> Outcome {
    let (_, t) = run_catalog("csc", 10_000);
    let (nu, tau0, sigma0) = (1.0, 0.5, 0.5);
    let coupling_ok = (2.0 * 1.0 * tau0 + 0.0) * sigma0 < 1.0;
    let mut sandwich_ok = true;
    for r in t.rows.iter().filter(|r| r.k >= 2) {
        let k = r.k as f64;
        let c = 6.0 / (nu * sigma0 * k * k);
        let (xh, yh) = (r.xhat[0], r.yhat[0]);
        let upper = c * (1.0 / tau0 + (yh - 1.0).powi(2) / sigma0);
        let lower = -c * ((xh - 1.0).powi(2) / tau0 + 1.0 / sigma0);
        let value = xh * yh - 0.5 * nu * yh * yh;
        sandwich_ok &= within(value, lower, upper);
    }
    let fit = fit_trace(&t.rows, "value_error", None, RateModel::Power).unwrap();
    let slope_ok = (-2.3..=-1.7).contains(&fit.value);
    outcome(
        coupling_ok && sandwich_ok && slope_ok,
        format!(
            "sandwich {} for 2 <= k <= 1e4; value_error slope {:.4} (required in [-2.3, -1.7])",
            if sandwich_ok { "holds" } else { "VIOLATED" },
            fit.value
        ),
    )
}

fn criterion_6() -> Outcome {
    let (_, t) = run_catalog("scsc", 300);
    let theta: f64 = 0.6;
    let w = 0.5 / (2.0 / 3.0);
    let mut sandwich_ok = true;
    for r in &t.rows {
        let c = theta.powi(r.k as i32 - 1);
        let (xh, yh) = (r.xhat[0], r.yhat[0]);
        let upper = c * (w + w * (yh - 1.0).powi(2));
        let lower = -c * (w * (xh - 1.0).powi(2) + w);
        let value = 0.5 * xh * xh + xh * yh - 0.5 * yh * yh;
        sandwich_ok &= within(value, lower, upper);
    }
    let rows = &t.rows[..200];
    let value_fit = fit_trace(rows, "value_error", None, RateModel::Geometric).unwrap();
    let ks: Vec<f64> = rows[20..].iter().map(|r| r.k as f64).collect();
    let ds: Vec<f64> = rows[20..].iter().map(|r| r.iterate_norm()).collect();
    let dist_fit = fit_rate(&ks, &ds, RateModel::Geometric).unwrap();
    outcome(
        sandwich_ok && value_fit.value <= 0.62 && dist_fit.value <= 0.62,
        format!(
            "sandwich {} for k <= 300; value_error ratio {:.4}, iterate distance ratio {:.4}",
            if sandwich_ok { "holds" } else { "VIOLATED" },
            value_fit.value,
            dist_fit.value
        ),
    )
}

fn criterion_7() -> Outcome {
    let mut ok = true;
    let mut details = Vec::new();
    for label in ["bilinear", "csc"] {
        let (p, t) = run_catalog(label, 501);
        let sweep = certificate_sweep(&p, &t, 500, 20).unwrap();
        let worst = sweep.iter().map(|(_, s)| *s).fold(f64::INFINITY, f64::min);
        ok &= worst >= -SUM_TOL;
        details.push(format!("{label} min relative slack {worst:.1e}"));
    }
    outcome(ok, details.join(", "))
}

fn criterion_8() -> Outcome {
    let mut ok = true;
    let mut details = Vec::new();
    for entry in problems::catalog() {
        let (p, t) = run_catalog(entry.label, 1000);
        let mut worst = f64::INFINITY;
        let mut max_abs: f64 = 0.0;
        for k in 1..=1000 {
            let (ix, iy) = ergodic_inequalities(&p, &t, k, None).unwrap();
            for i in [ix, iy] {
                worst = worst.min(i.relative_slack());
                max_abs = max_abs.max(i.slack().abs() / i.scale());
            }
        }
        ok &= worst >= -SUM_TOL;
        if entry.label == "bilinear" {
            ok &= max_abs <= 1e-12;
            details.push(format!("bilinear |slack| <= {max_abs:.1e}"));
        } else {
            details.push(format!("{} min {worst:.1e}", entry.label));
        }
    }
    outcome(ok, details.join(", "))
}

fn criterion_9() -> Outcome {
    let p = problems::convex_strongly_concave(1.0).unwrap();
    let (nu, tau0, sigma0) = (1.0, 0.5, 0.5);
    let regime = RegimeSpec::Accelerated {
        tau0,
        sigma0,
        c_alpha: 2.0,
    };
    let mut ok = true;
    let mut worst: f64 = 0.0;
    let mut sum = 0.0;
    for s in Schedule::new(regime, p.constants()).unwrap().take(10_001) {
        let k = s.k as f64;
        let t = s.t_k();
        worst = worst.max((t - s.tau / tau0).abs() / t);
        if s.k >= 2 {
            ok &= t / s.sigma >= nu * nu * sigma0 / 9.0 * k * k;
            ok &= sum >= nu * sigma0 / 12.0 * k * k;
        }
        sum += t;
    }
    let cap = (9.0 + 3.0 * 13f64.sqrt()) / (2.0 * nu);
    let accepts = |sigma0: f64| {
        Schedule::new(
            RegimeSpec::Accelerated {
                tau0: 0.01,
                sigma0,
                c_alpha: 2.0,
            },
            p.constants(),
        )
        .is_ok()
    };
    let validators = accepts(8.0) && !accepts(cap * (1.0 + 1e-9)) && !accepts(10.0);
    outcome(
        ok && worst <= 1e-12 && validators,
        format!(
            "t_k = tau_k/tau_0 to {worst:.1e}; growth laws {}; cap {cap:.4}",
            if ok { "hold" } else { "FAIL" }
        ),
    )
}

fn run_args(
    problem: &str,
    iters: usize,
    trace: &std::path::Path,
    summary: &std::path::Path,
) -> RunArgs {
    use clap::Parser;
    let parsed = cli::Cli::try_parse_from([
        "ogaprox",
        "run",
        "--problem",
        problem,
        "--iters",
        &iters.to_string(),
        "--trace",
        trace.to_str().unwrap(),
        "--summary",
        summary.to_str().unwrap(),
    ])
    .unwrap();
    match parsed.command {
        cli::Command::Run(a) => *a,
        _ => unreachable!(),
    }
}

fn criterion_10() -> Outcome {
    let dir = tempfile::tempdir().unwrap();
    let mut identical = true;
    for label in ["bilinear", "csc", "scsc", "counterexample"] {
        let mut bytes = Vec::new();
        for rep in 0..2 {
            let trace = dir.path().join(format!("{label}-{rep}.csv"));
            let summary = dir.path().join(format!("{label}-{rep}.json"));
            let code = cli::cmd_run(
                &run_args(label, 500, &trace, &summary),
                &mut std::io::sink(),
            );
            identical &= code == 0;
            bytes.push((
                std::fs::read(&trace).unwrap(),
                std::fs::read(&summary).unwrap(),
            ));
        }
        identical &= bytes[0] == bytes[1];
    }

    let (_, t) = run_catalog("csc", 2000);
    let path = dir.path().join("roundtrip.csv");
    write_trace_csv(&t, std::fs::File::create(&path).unwrap()).unwrap();
    let table = read_trace_csv(&path).unwrap();
    let mut lossless = table.rows.len() == t.rows.len();
    for name in ROW_COLUMNS {
        let col = table.column(name).unwrap();
        for (r, v) in t.rows.iter().zip(&col) {
            let orig = r.column(name).unwrap();
            lossless &= orig.to_bits() == v.to_bits() || (orig.is_nan() && v.is_nan());
        }
    }
    let xs = table.column("x_0").unwrap();
    lossless &= xs
        .iter()
        .zip(&t.iterates[1..])
        .all(|(v, (x, _))| v.to_bits() == x[0].to_bits());
    outcome(
        identical && lossless,
        format!(
            "repeat runs {}; CSV round trip {}",
            if identical {
                "byte-identical"
            } else {
                "DIFFER"
            },
            if lossless { "bit-exact" } else { "LOSSY" }
        ),
    )
}

fn main() {
    let criteria: [Criterion; 10] = [
        ("counterexample reproduction", criterion_1),
        ("early-iterate exactness", criterion_2),
        ("constant-step bilinear identities and rate", criterion_3),
        ("convex-concave sandwich", criterion_4),
        ("convex-strongly-concave sandwich and rate", criterion_5),
        ("linear-rate sandwich and ratios", criterion_6),
        ("certificate suite", criterion_7),
        ("ergodic inequalities", criterion_8),
        ("schedule laws", criterion_9),
        ("determinism and round trip", criterion_10),
    ];
    let mut failed = 0;
    for (i, (name, f)) in criteria.iter().enumerate() {
        let o = f();
        if !o.passed {
            failed += 1;
        }
        println!(
            "{} criterion {:>2} {name}: {}",
            if o.passed { "PASS" } else { "FAIL" },
            i + 1,
            o.detail
        );
    }
    println!(
        "acceptance: {} passed, {} failed",
        criteria.len() - failed,
        failed
    );
    if failed > 0 {
        std::process::exit(1);
    }
}
