//! Quantities and inequalities evaluated along a run: minimax gap, value
//! error, the rate sandwiches, the per-step certificate, the ergodic
//! (Jensen-type) inequalities and empirical rate fits.
//!
//! Every inequality is reported as an [`Inequality`] `lhs ≤ rhs` so callers
//! can inspect both sides; the tolerance policy lives in [`Inequality::holds`].

mod bounds;
mod certificate;
mod rates;

pub use bounds::{
    bound_convex_concave, bound_convex_strongly_concave, bound_linear, BoundInputs, Sandwich,
};
pub use certificate::{
    certificate, certificate_checks, check_qk_bound, Certificate, CertificateChecks,
};
pub use rates::{default_window, fit_rate, fit_trace, RateFit, RateModel};

use nalgebra::DVector;

use crate::engine::{ErgodicAccumulator, IterateState, Trace};
use crate::model::{DualPoint, PrimalPoint, SaddleProblem};
use crate::schedules::{RegimeSpec, ScheduleState};
use crate::{Error, Result};

/// Relative tolerance for inequalities that accumulate many terms.
pub const SUM_TOL: f64 = 1e-8;
/// Relative tolerance for single-step identities.
pub const STEP_TOL: f64 = 1e-10;

/// The claim `lhs ≤ rhs`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Inequality {
    pub lhs: f64,
    pub rhs: f64,
}

impl Inequality {
    pub fn new(lhs: f64, rhs: f64) -> Self {
        Self { lhs, rhs }
    }

    /// `rhs − lhs`.
    pub fn slack(&self) -> f64 {
        self.rhs - self.lhs
    }

    pub fn scale(&self) -> f64 {
        1.0 + self.lhs.abs() + self.rhs.abs()
    }

    /// `slack / (1 + |lhs| + |rhs|)`.
    pub fn relative_slack(&self) -> f64 {
        self.slack() / self.scale()
    }

    /// `slack ≥ −tol·(1 + |lhs| + |rhs|)`; NaN never holds.
    pub fn holds(&self, tol: f64) -> bool {
        self.slack() >= -tol * self.scale()
    }
}

/// `f(x̂, y*) − f(x*, ŷ)`.
pub fn minimax_gap(problem: &SaddleProblem, xhat: &PrimalPoint, yhat: &DualPoint) -> Result<f64> {
    let s = problem.saddle().ok_or(Error::MissingSaddle)?;
    Ok(problem.f(xhat, &s.y)? - problem.f(&s.x, yhat)?)
}

/// Scale used for the gap nonnegativity check.
pub fn gap_scale(problem: &SaddleProblem, xhat: &PrimalPoint, yhat: &DualPoint) -> Result<f64> {
    let s = problem.saddle().ok_or(Error::MissingSaddle)?;
    Ok(1.0 + problem.f(xhat, &s.y)?.abs() + problem.f(&s.x, yhat)?.abs())
}

/// `f(x̂, ŷ) − f*`.
pub fn value_error(problem: &SaddleProblem, xhat: &PrimalPoint, yhat: &DualPoint) -> Result<f64> {
    let f_star = problem.f_star().ok_or(Error::MissingSaddle)?;
    Ok(problem.f(xhat, yhat)? - f_star)
}

/// One row of a run, describing `(x^k, y^k)` and `(x̂_k, ŷ_k)`.
#[derive(Debug, Clone, PartialEq)]
pub struct TraceRow {
    pub k: usize,
    /// Parameters of the step that produced `x^k`, i.e. `τ_{k−1}, σ_{k−1}, θ_{k−1}, t_{k−1}`.
    pub tau: f64,
    pub sigma: f64,
    pub theta: f64,
    pub t: f64,
    pub x_norm: f64,
    pub y_norm: f64,
    pub xhat: DVector<f64>,
    pub yhat: DVector<f64>,
    pub f_ergodic: f64,
    pub gap_ergodic: f64,
    pub value_error: f64,
    pub lower_bound: f64,
    pub upper_bound: f64,
    /// Lower bound with the inner sign as printed in the rate statements.
    pub lower_bound_printed: f64,
    /// Smallest slack of the certificate checks at the saddle probe for this step.
    pub cert_slack: f64,
    /// Number of failed checks at this row (gap sign, sandwich, certificate).
    pub violations: usize,
}

/// Names of the scalar row columns, in trace-file order.
pub const ROW_COLUMNS: [&str; 15] = [
    "k",
    "tau_k",
    "sigma_k",
    "theta_k",
    "t_k",
    "x_norm",
    "y_norm",
    "xhat_norm",
    "yhat_norm",
    "f_ergodic",
    "gap_ergodic",
    "value_error",
    "lower_bound",
    "upper_bound",
    "cert_slack",
];

impl TraceRow {
    /// Value of a named scalar column (see [`ROW_COLUMNS`]).
    pub fn column(&self, name: &str) -> Option<f64> {
        Some(match name {
            "k" => self.k as f64,
            "tau_k" => self.tau,
            "sigma_k" => self.sigma,
            "theta_k" => self.theta,
            "t_k" => self.t,
            "x_norm" => self.x_norm,
            "y_norm" => self.y_norm,
            "xhat_norm" => self.xhat.norm(),
            "yhat_norm" => self.yhat.norm(),
            "f_ergodic" => self.f_ergodic,
            "gap_ergodic" => self.gap_ergodic,
            "value_error" => self.value_error,
            "lower_bound" => self.lower_bound,
            "upper_bound" => self.upper_bound,
            "cert_slack" => self.cert_slack,
            _ => return None,
        })
    }

    /// `‖(x^k, y^k)‖`.
    pub fn iterate_norm(&self) -> f64 {
        self.x_norm.hypot(self.y_norm)
    }
}

/// Parameters and iterates of one step `k → k + 1`.
#[derive(Debug, Clone, Copy)]
pub struct StepRecord<'a> {
    pub params: &'a ScheduleState,
    pub next_params: &'a ScheduleState,
    pub before: &'a IterateState,
    pub after: &'a IterateState,
}

/// The rate sandwich for `regime` at `k`, or `None` where no bound applies.
pub fn regime_sandwich(
    problem: &SaddleProblem,
    regime: &RegimeSpec,
    params: &ScheduleState,
    inputs: &BoundInputs<'_>,
) -> Option<Sandwich> {
    match *regime {
        RegimeSpec::ConstantUnit { tau, sigma, .. } => {
            Some(bound_convex_concave(inputs, tau, sigma))
        }
        RegimeSpec::Accelerated { tau0, sigma0, .. } if inputs.k >= 2 => Some(
            bound_convex_strongly_concave(inputs, problem.constants().nu, tau0, sigma0),
        ),
        RegimeSpec::LinearRate { theta, .. } => {
            Some(bound_linear(inputs, theta, params.tau, params.sigma))
        }
        _ => None,
    }
}

/// Builds the row for `after.k` from the step that produced it.
pub fn trace_row(
    problem: &SaddleProblem,
    regime: &RegimeSpec,
    start: &(PrimalPoint, DualPoint),
    step: &StepRecord<'_>,
    acc: &ErgodicAccumulator,
) -> Result<TraceRow> {
    let k = step.after.k;
    let (xhat, yhat) = match (acc.mean_x(), acc.mean_y()) {
        (Some(x), Some(y)) => (x.clone(), y.clone()),
        _ => return Err(Error::InvalidArgument("accumulator is empty".into())),
    };
    let f_ergodic = problem.f(&xhat, &yhat)?;
    let mut violations = 0;
    let mut gap_ergodic = f64::NAN;
    let mut value_err = f64::NAN;
    let mut sandwich = None;
    let mut cert_slack = f64::NAN;
    if let Some(s) = problem.saddle() {
        gap_ergodic = minimax_gap(problem, &xhat, &yhat)?;
        if gap_ergodic < -STEP_TOL * gap_scale(problem, &xhat, &yhat)? {
            violations += 1;
        }
        value_err = f_ergodic - s.value;
        let inputs = BoundInputs {
            k,
            x0: &start.0,
            y0: &start.1,
            xstar: &s.x,
            ystar: &s.y,
            xhat: &xhat,
            yhat: &yhat,
        };
        sandwich = regime_sandwich(problem, regime, step.params, &inputs);
        if let Some(sw) = &sandwich {
            if !sw.contains(value_err, SUM_TOL) {
                violations += 1;
            }
        }
        if regime.has_certificate() {
            let checks = certificate_checks(problem, step, &s.x, &s.y)?;
            let qk = check_qk_bound(problem, step.after, step.next_params, &s.y);
            let all = [checks.descent, checks.telescoping, checks.c_lower, qk];
            violations += all.iter().filter(|i| !i.holds(SUM_TOL)).count();
            cert_slack = all
                .iter()
                .map(Inequality::slack)
                .fold(f64::INFINITY, f64::min);
        }
    }
    let (lower_bound, upper_bound, lower_bound_printed) = sandwich
        .map(|s| (s.lower, s.upper, s.lower_printed))
        .unwrap_or((f64::NAN, f64::NAN, f64::NAN));
    Ok(TraceRow {
        k,
        tau: step.params.tau,
        sigma: step.params.sigma,
        theta: step.params.theta,
        t: step.params.t_k(),
        x_norm: step.after.x_cur.norm(),
        y_norm: step.after.y_cur.norm(),
        xhat,
        yhat,
        f_ergodic,
        gap_ergodic,
        value_error: value_err,
        lower_bound,
        upper_bound,
        lower_bound_printed,
        cert_slack,
        violations,
    })
}

fn ergodic_weights(trace: &Trace, k: usize) -> Result<Vec<f64>> {
    if k == 0 || k > trace.len() {
        return Err(Error::InvalidArgument(format!(
            "k = {k} outside the recorded range 1..={}",
            trace.len()
        )));
    }
    let total = trace.weight_sums[k - 1];
    Ok(trace.params[..k]
        .iter()
        .map(|p| p.weight.ratio(total))
        .collect())
}

/// The two Jensen-type inequalities at `k` against a reference point
/// (the known saddle when `reference` is `None`).
///
/// Returns `(x-side, y-side)`:
/// `f(x̂,ŷ) − f(x_ref,y_ref) ≤ Σ w_j (f(x^{j+1},ŷ) − f(x_ref,y^{j+1}))` and
/// `f(x_ref,y_ref) − f(x̂,ŷ) ≤ Σ w_j (f(x^{j+1},y_ref) − f(x̂,y^{j+1}))`
/// with `w_j = t_j / Σ t_i`.
pub fn ergodic_inequalities(
    problem: &SaddleProblem,
    trace: &Trace,
    k: usize,
    reference: Option<(&PrimalPoint, &DualPoint)>,
) -> Result<(Inequality, Inequality)> {
    let (xr, yr) = match reference {
        Some(r) => r,
        None => {
            let s = problem.saddle().ok_or(Error::MissingSaddle)?;
            (&s.x, &s.y)
        }
    };
    let weights = ergodic_weights(trace, k)?;
    let row = &trace.rows[k - 1];
    let (xhat, yhat) = (&row.xhat, &row.yhat);
    let f_ref = problem.f(xr, yr)?;
    let f_hat = problem.f(xhat, yhat)?;
    let (mut sum_x, mut sum_y) = (0.0, 0.0);
    for (j, w) in weights.iter().enumerate() {
        let (x1, y1) = &trace.iterates[j + 1];
        sum_x += w * (problem.f(x1, yhat)? - problem.f(xr, y1)?);
        sum_y += w * (problem.f(x1, yr)? - problem.f(xhat, y1)?);
    }
    Ok((
        Inequality::new(f_hat - f_ref, sum_x),
        Inequality::new(f_ref - f_hat, sum_y),
    ))
}

/// `Σ_{i<k} (t_i/t_0)(f(x^{i+1}, y) − f(x, y^{i+1})) ≤ ‖x − x^0‖²/(2τ_0) + ‖y − y^0‖²/(2σ_0)`.
pub fn prop_inequality_check(
    problem: &SaddleProblem,
    trace: &Trace,
    probe_x: &PrimalPoint,
    probe_y: &DualPoint,
    k: usize,
) -> Result<Inequality> {
    if !trace.regime.has_certificate() {
        return Err(Error::InvalidArgument(format!(
            "regime '{}' is outside the certificate setting",
            trace.regime.name()
        )));
    }
    if k == 0 || k > trace.len() {
        return Err(Error::InvalidArgument(format!(
            "k = {k} outside the recorded range 1..={}",
            trace.len()
        )));
    }
    let p0 = &trace.params[0];
    let mut lhs = 0.0;
    for i in 0..k {
        let (x1, y1) = &trace.iterates[i + 1];
        let w = trace.params[i].weight.ratio(p0.weight);
        lhs += w * (problem.f(x1, probe_y)? - problem.f(probe_x, y1)?);
    }
    let rhs = (probe_x - trace.x0()).norm_squared() / (2.0 * p0.tau)
        + (probe_y - trace.y0()).norm_squared() / (2.0 * p0.sigma);
    Ok(Inequality::new(lhs, rhs))
}
