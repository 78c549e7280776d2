//! Invariant suites run by `ogaprox verify`. Each suite returns one
//! [`CheckResult`] per named check.

use std::fmt;

use nalgebra::DVector;

use crate::diagnostics::{
    self, certificate_checks, check_qk_bound, ergodic_inequalities, fit_trace, RateModel,
    StepRecord, STEP_TOL, SUM_TOL,
};
use crate::engine::{run, Trace};
use crate::model::{check_lipschitz, check_saddle, probe_rng, sample_box, SaddleProblem};
use crate::problems;
use crate::schedules::{accelerated_sigma0_cap, RegimeSpec, Schedule};
use crate::{Error, Result};

pub const SUITES: [&str; 8] = [
    "problem",
    "schedules",
    "engine",
    "counterexample",
    "certificates",
    "ergodic",
    "sandwich",
    "rates",
];

/// Seed for every probe sweep in the suites.
pub const PROBE_SEED: u64 = 20_240_601;

#[derive(Debug, Clone, PartialEq)]
pub struct CheckResult {
    pub suite: &'static str,
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

impl fmt::Display for CheckResult {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let status = if self.passed { "PASS" } else { "FAIL" };
        write!(f, "{status}  {}/{}  {}", self.suite, self.name, self.detail)
    }
}

fn check(
    suite: &'static str,
    name: impl Into<String>,
    passed: bool,
    detail: String,
) -> CheckResult {
    CheckResult {
        suite,
        name: name.into(),
        passed,
        detail,
    }
}

pub fn run_suite(name: &str) -> Result<Vec<CheckResult>> {
    match name {
        "problem" => problem_suite(),
        "schedules" => schedules_suite(),
        "engine" => engine_suite(),
        "counterexample" => counterexample_suite(),
        "certificates" => certificates_suite(),
        "ergodic" => ergodic_suite(),
        "sandwich" => sandwich_suite(),
        "rates" => rates_suite(),
        other => Err(Error::InvalidArgument(format!(
            "unknown suite '{other}' (expected one of: {})",
            SUITES.join(", ")
        ))),
    }
}

pub fn run_all() -> Result<Vec<CheckResult>> {
    let mut out = Vec::new();
    for s in SUITES {
        out.extend(run_suite(s)?);
    }
    Ok(out)
}

fn run_default(label: &str, iters: usize) -> Result<(SaddleProblem, Trace)> {
    let entry = problems::lookup(label)?;
    let p = entry.build()?;
    let (x0, y0) = entry.default_start()?;
    let t = run(&p, entry.default_regime, x0, y0, iters, &mut [])?;
    Ok((p, t))
}

/// Oracle consistency for every catalog problem.
pub fn problem_suite() -> Result<Vec<CheckResult>> {
    const S: &str = "problem";
    let mut out = Vec::new();
    for (label, p) in problems::catalog_problems() {
        let lip = check_lipschitz(&p, 1000, 10.0, PROBE_SEED)?;
        out.push(check(
            S,
            format!("{label}: lipschitz"),
            lip.passed(),
            format!(
                "max violation {:.3e} over {} pairs",
                lip.max_violation, lip.samples
            ),
        ));
        let (slack, f_star) = check_saddle(&p, 100, 10.0, PROBE_SEED)?;
        out.push(check(
            S,
            format!("{label}: saddle inequality"),
            slack >= -STEP_TOL * (1.0 + f_star.abs()),
            format!("min slack {slack:.3e}"),
        ));
        let mut rng = probe_rng(PROBE_SEED);
        let mut worst: f64 = 0.0;
        let mut ratio_ok = true;
        for _ in 0..50 {
            let x = sample_box(&mut rng, p.dim_x(), 10.0);
            let y = sample_box(&mut rng, p.dim_y(), 10.0);
            for step in [1e-3, 0.2, 1.0, 10.0] {
                if let Some(r) = p.prox_coupling_residual(step, &y, &x) {
                    worst = worst.max(r);
                }
                if let Some(r) = p.prox_g_residual(step, &y) {
                    worst = worst.max(r);
                }
            }
            let d4 = (p.prox_coupling(1e-4, &y, &x) - &x).norm();
            let d6 = (p.prox_coupling(1e-6, &y, &x) - &x).norm();
            if d4 > 0.0 && (d6 / d4 - 1e-2).abs() > 1e-3 {
                ratio_ok = false;
            }
        }
        out.push(check(
            S,
            format!("{label}: prox optimality"),
            worst <= 1e-10,
            format!("max first-order residual {worst:.3e}"),
        ));
        out.push(check(
            S,
            format!("{label}: prox small-step ratio"),
            ratio_ok,
            "d(1e-6)/d(1e-4) = 1e-2".into(),
        ));
    }
    Ok(out)
}

/// Accelerated schedule laws and the step-size validators.
pub fn schedules_suite() -> Result<Vec<CheckResult>> {
    const S: &str = "schedules";
    let mut out = Vec::new();
    let csc = problems::convex_strongly_concave(1.0)?;
    let nu = csc.constants().nu;
    for (tau0, sigma0) in [(0.5, 0.5), (0.05, 8.0)] {
        let regime = RegimeSpec::Accelerated {
            tau0,
            sigma0,
            c_alpha: 2.0,
        };
        let mut worst_ratio: f64 = 0.0;
        let mut growth_ok = true;
        let mut sum_ok = true;
        let mut sum = 0.0;
        for s in Schedule::new(regime, csc.constants())?.take(10_001) {
            let k = s.k as f64;
            worst_ratio = worst_ratio.max((s.t_k() - s.tau / tau0).abs() / s.t_k());
            if s.k >= 2 {
                growth_ok &= s.t_k() / s.sigma >= nu * nu * sigma0 / 9.0 * k * k;
                sum_ok &= sum >= nu * sigma0 / 12.0 * k * k;
            }
            sum += s.t_k();
        }
        let tag = format!("sigma0={sigma0}");
        out.push(check(
            S,
            format!("{tag}: t_k = tau_k/tau_0"),
            worst_ratio <= 1e-12,
            format!("max relative error {worst_ratio:.3e}"),
        ));
        out.push(check(
            S,
            format!("{tag}: t_k/sigma_k growth"),
            growth_ok,
            "t_k/sigma_k >= (nu^2 sigma_0/9) k^2 for 2 <= k <= 1e4".into(),
        ));
        out.push(check(
            S,
            format!("{tag}: weight sum growth"),
            sum_ok,
            "sum_{i<k} t_i >= (nu sigma_0/12) k^2 for 2 <= k <= 1e4".into(),
        ));
    }
    let cap = accelerated_sigma0_cap(nu);
    let accepts = |sigma0: f64| {
        Schedule::new(
            RegimeSpec::Accelerated {
                tau0: 0.01,
                sigma0,
                c_alpha: 2.0,
            },
            csc.constants(),
        )
        .is_ok()
    };
    out.push(check(
        S,
        "sigma0 cap",
        accepts(8.0) && accepts(cap) && !accepts(cap * (1.0 + 1e-12)) && !accepts(10.0),
        format!("cap = {cap:.6}; 8 accepted, 10 rejected"),
    ));
    let bil = problems::bilinear_scalar();
    let unit = Schedule::new(
        problems::lookup("bilinear")?.default_regime,
        bil.constants(),
    )?
    .take(1000)
    .all(|s| s.t_k() == 1.0 && s.theta == 1.0);
    out.push(check(
        S,
        "constant weights",
        unit,
        "t_k = theta_k = 1".into(),
    ));
    Ok(out)
}

/// Hand-checkable iterates and closed-form identities.
pub fn engine_suite() -> Result<Vec<CheckResult>> {
    const S: &str = "engine";
    let mut out = Vec::new();
    let (_, t) = run_default("bilinear", 10_001)?;
    let it = |k: usize| (t.iterates[k].0[0], t.iterates[k].1[0]);
    let expect = [(1, 0.76, 1.2), (2, 0.4992, 1.304)];
    let hand = expect
        .iter()
        .all(|&(k, x, y)| (it(k).0 - x).abs() <= 1e-14 && (it(k).1 - y).abs() <= 1e-14);
    out.push(check(
        S,
        "bilinear first iterates",
        hand,
        format!(
            "(x1,y1)=({:.17},{:.17}) (x2,y2)=({:.17},{:.17})",
            it(1).0,
            it(1).1,
            it(2).0,
            it(2).1
        ),
    ));
    let (tau, sigma) = (0.2, 0.2);
    let (x0, y0) = it(0);
    let mut worst: f64 = 0.0;
    for k in 1..=10_000 {
        let row = &t.rows[k - 1];
        let kf = k as f64;
        let xhat = (it(k + 1).1 - y0 - sigma * it(k).0) / (kf * sigma);
        let yhat = (x0 - it(k).0) / (kf * tau);
        for (a, b) in [(row.xhat[0], xhat), (row.yhat[0], yhat)] {
            worst = worst.max((a - b).abs() / a.abs().max(b.abs()).max(f64::MIN_POSITIVE));
        }
    }
    out.push(check(
        S,
        "bilinear averaged-iterate identities",
        worst <= 1e-9,
        format!("max relative error {worst:.3e} for k <= 1e4"),
    ));
    let f_ok =
        t.rows.iter().take(10_000).all(|r| {
            (r.f_ergodic - r.xhat[0] * r.yhat[0]).abs() <= 1e-15 * (1.0 + r.f_ergodic.abs())
        });
    out.push(check(
        S,
        "bilinear ergodic value",
        f_ok,
        "f = xhat*yhat".into(),
    ));

    let (_, adv) = run_default("counterexample", 101)?;
    let first =
        (adv.iterates[1].0[0] - 0.9).abs() <= 1e-14 && (adv.iterates[1].1[0] - 1.1).abs() <= 1e-14;
    out.push(check(
        S,
        "adversarial first iterate",
        first,
        "(x1, y1) = (1 - eps, 1 + eps)".into(),
    ));
    let mut partial = 0.0;
    let mut worst: f64 = 0.0;
    for k in 0..=100 {
        partial += 1.0 / ((k + 1) as f64).powi(2);
        worst = worst.max((adv.iterates[k + 1].0[0] - (1.0 - 0.1 * partial)).abs());
    }
    out.push(check(
        S,
        "adversarial primal closed form",
        worst <= 1e-12,
        format!("max abs error {worst:.3e} for k <= 100"),
    ));
    Ok(out)
}

/// The gap-versus-value separation on the adversarial run.
pub fn counterexample_suite() -> Result<Vec<CheckResult>> {
    const S: &str = "counterexample";
    let eps = 0.1;
    let (p, regime, x0, y0) = problems::counterexample_setup(eps)?;
    let t = run(&p, regime, x0, y0, 10_000, &mut [])?;
    let mut out = Vec::new();
    out.push(check(
        S,
        "run completed",
        t.outcome == crate::engine::RunOutcome::Completed && t.len() == 10_000,
        format!("{} iterations", t.len()),
    ));
    let max_gap = t
        .rows
        .iter()
        .map(|r| r.gap_ergodic.abs())
        .fold(0.0, f64::max);
    out.push(check(
        S,
        "gap-zero",
        max_gap <= 1e-10,
        format!("max |gap| {max_gap:.3e}"),
    ));
    let floor = (1.0 - eps * eps) / 2.0;
    let min_f = t
        .rows
        .iter()
        .map(|r| r.f_ergodic)
        .fold(f64::INFINITY, f64::min);
    out.push(check(
        S,
        "value-floor",
        min_f > floor,
        format!("min f(xhat,yhat) {min_f:.6} > {floor}"),
    ));
    let min_x = t.iterates[1..]
        .iter()
        .map(|(x, _)| x[0])
        .fold(f64::INFINITY, f64::min);
    let min_y = t.iterates[1..]
        .iter()
        .map(|(_, y)| y[0])
        .fold(f64::INFINITY, f64::min);
    out.push(check(
        S,
        "iterate-floors",
        min_x > 0.5 && min_y > 1.0 - eps * eps,
        format!(
            "min x {min_x:.6} > 0.5, min y {min_y:.6} > {}",
            1.0 - eps * eps
        ),
    ));
    Ok(out)
}

fn probes(n: usize, dim_x: usize, dim_y: usize) -> Vec<(DVector<f64>, DVector<f64>)> {
    let mut rng = probe_rng(PROBE_SEED);
    (0..n)
        .map(|_| {
            (
                sample_box(&mut rng, dim_x, 10.0),
                sample_box(&mut rng, dim_y, 10.0),
            )
        })
        .collect()
}

/// Worst relative slack of the per-step certificate checks over `steps × probes`.
pub fn certificate_sweep(
    problem: &SaddleProblem,
    trace: &Trace,
    steps: usize,
    probe_count: usize,
) -> Result<[(&'static str, f64); 4]> {
    let probes = probes(probe_count, problem.dim_x(), problem.dim_y());
    let mut worst = [f64::INFINITY; 4];
    let last = steps.min(trace.params.len().saturating_sub(1));
    let mut before = trace.state_at(problem, 0).expect("start state");
    for k in 0..last {
        let after = trace.state_at(problem, k + 1).expect("recorded state");
        let step = StepRecord {
            params: &trace.params[k],
            next_params: &trace.params[k + 1],
            before: &before,
            after: &after,
        };
        for (x, y) in &probes {
            let c = certificate_checks(problem, &step, x, y)?;
            let q = check_qk_bound(problem, &after, &trace.params[k + 1], y);
            for (w, i) in worst
                .iter_mut()
                .zip([q, c.descent, c.telescoping, c.c_lower])
            {
                *w = w.min(i.relative_slack());
            }
        }
        before = after;
    }
    Ok([
        ("q_k bound", worst[0]),
        ("descent", worst[1]),
        ("telescoping", worst[2]),
        ("c_k lower bound", worst[3]),
    ])
}

/// The per-step certificate on bilinear and csc runs plus the summed inequality.
pub fn certificates_suite() -> Result<Vec<CheckResult>> {
    const S: &str = "certificates";
    let mut out = Vec::new();
    for label in ["bilinear", "csc"] {
        let (p, t) = run_default(label, 501)?;
        for (name, worst) in certificate_sweep(&p, &t, 500, 20)? {
            out.push(check(
                S,
                format!("{label}: {name}"),
                worst >= -SUM_TOL,
                format!("min relative slack {worst:.3e} over 500 steps x 20 probes"),
            ));
        }
        let mut worst = f64::INFINITY;
        for (x, y) in probes(20, p.dim_x(), p.dim_y()) {
            worst = worst
                .min(diagnostics::prop_inequality_check(&p, &t, &x, &y, 500)?.relative_slack());
        }
        out.push(check(
            S,
            format!("{label}: summed gap bound"),
            worst >= -SUM_TOL,
            format!("min relative slack {worst:.3e} at k = 500"),
        ));
    }
    Ok(out)
}

/// The two Jensen-type inequalities for `k ≤ 1000` on every catalog problem.
pub fn ergodic_suite() -> Result<Vec<CheckResult>> {
    const S: &str = "ergodic";
    let mut out = Vec::new();
    for entry in problems::catalog() {
        let (p, t) = run_default(entry.label, 1000)?;
        let mut worst = f64::INFINITY;
        let mut max_abs: f64 = 0.0;
        for k in 1..=t.len() {
            let (ix, iy) = ergodic_inequalities(&p, &t, k, None)?;
            for i in [ix, iy] {
                worst = worst.min(i.relative_slack());
                max_abs = max_abs.max(i.slack().abs() / i.scale());
            }
        }
        out.push(check(
            S,
            format!("{}: slacks nonnegative", entry.label),
            worst >= -SUM_TOL,
            format!("min relative slack {worst:.3e} for k <= {}", t.len()),
        ));
        if p.label() == "bilinear" {
            out.push(check(
                S,
                format!("{}: equality", entry.label),
                max_abs <= 1e-12,
                format!("max relative |slack| {max_abs:.3e}"),
            ));
        }
    }
    Ok(out)
}

fn sandwich_stats(t: &Trace, from_k: usize) -> (bool, usize, f64) {
    let mut ok = true;
    let mut checked = 0;
    let mut worst_gap = f64::INFINITY;
    for r in t.rows.iter().filter(|r| r.k >= from_k) {
        let s = diagnostics::Sandwich {
            lower: r.lower_bound,
            upper: r.upper_bound,
            lower_printed: r.lower_bound_printed,
        };
        ok &= s.contains(r.value_error, SUM_TOL);
        checked += 1;
        worst_gap = worst_gap.min(r.gap_ergodic);
    }
    (ok, checked, worst_gap)
}

/// Rate sandwiches and gap nonnegativity in all three regimes.
pub fn sandwich_suite() -> Result<Vec<CheckResult>> {
    const S: &str = "sandwich";
    let mut out = Vec::new();
    let p = problems::bilinear_scalar();
    let regime = problems::lookup("bilinear")?.default_regime;
    let mut rng = probe_rng(PROBE_SEED);
    for i in 0..5 {
        let x0 = sample_box(&mut rng, 1, 5.0);
        let y0 = sample_box(&mut rng, 1, 5.0);
        let start = format!("({:.3}, {:.3})", x0[0], y0[0]);
        let t = run(&p, regime, x0, y0, 10_000, &mut [])?;
        let (ok, n, gap) = sandwich_stats(&t, 1);
        out.push(check(
            S,
            format!("bilinear start {i}: convex-concave sandwich"),
            ok && n == 10_000,
            format!("start {start}, {n} rows"),
        ));
        out.push(check(
            S,
            format!("bilinear start {i}: gap nonnegative"),
            gap >= -STEP_TOL,
            format!("min gap {gap:.3e}"),
        ));
    }
    let (_, t) = run_default("csc", 10_000)?;
    let (ok, n, gap) = sandwich_stats(&t, 2);
    let printed_held = t
        .rows
        .iter()
        .skip(1)
        .filter(|r| r.value_error >= r.lower_bound_printed)
        .count();
    out.push(check(
        S,
        "csc: convex-strongly-concave sandwich",
        ok && n == 9_999,
        format!("2 <= k <= 1e4; printed lower form held on {printed_held}/{n} rows"),
    ));
    out.push(check(
        S,
        "csc: gap nonnegative",
        gap >= -STEP_TOL,
        format!("min gap {gap:.3e}"),
    ));
    let (_, t) = run_default("scsc", 300)?;
    let (ok, n, gap) = sandwich_stats(&t, 1);
    out.push(check(
        S,
        "scsc: linear-rate sandwich",
        ok && n == 300,
        "k <= 300".into(),
    ));
    out.push(check(
        S,
        "scsc: gap nonnegative",
        gap >= -STEP_TOL,
        format!("min gap {gap:.3e}"),
    ));
    Ok(out)
}

/// Empirical rates against the proven envelopes.
pub fn rates_suite() -> Result<Vec<CheckResult>> {
    const S: &str = "rates";
    let mut out = Vec::new();
    let (_, t) = run_default("bilinear", 100_000)?;
    let fit = fit_trace(&t.rows, "f_ergodic", Some((100, 100_000)), RateModel::Power)?;
    out.push(check(
        S,
        "bilinear: f_ergodic power slope <= -1.8",
        fit.value <= -1.8,
        format!("slope {:.4} (residual {:.3e})", fit.value, fit.residual),
    ));
    let (_, t) = run_default("csc", 10_000)?;
    let fit = fit_trace(&t.rows, "value_error", None, RateModel::Power)?;
    out.push(check(
        S,
        "csc: value_error power slope in [-2.3, -1.7]",
        (-2.3..=-1.7).contains(&fit.value),
        format!("slope {:.4} (residual {:.3e})", fit.value, fit.residual),
    ));
    let (_, t) = run_default("scsc", 200)?;
    let fit = fit_trace(&t.rows, "value_error", None, RateModel::Geometric)?;
    out.push(check(
        S,
        "scsc: value_error geometric ratio <= 0.62",
        fit.value <= 0.62,
        format!("ratio {:.4} (residual {:.3e})", fit.value, fit.residual),
    ));
    let (lo, hi) = diagnostics::default_window(t.len());
    let ks: Vec<f64> = t.rows[lo - 1..hi].iter().map(|r| r.k as f64).collect();
    let ds: Vec<f64> = t.rows[lo - 1..hi]
        .iter()
        .map(|r| r.iterate_norm())
        .collect();
    let fit = diagnostics::fit_rate(&ks, &ds, RateModel::Geometric)?;
    out.push(check(
        S,
        "scsc: iterate distance geometric ratio <= 0.62",
        fit.value <= 0.62,
        format!("ratio {:.4} (residual {:.3e})", fit.value, fit.residual),
    ));
    Ok(out)
}

/// Counts failed checks.
pub fn failures(results: &[CheckResult]) -> usize {
    results.iter().filter(|r| !r.passed).count()
}
