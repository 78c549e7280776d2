//! Per-step certificate for the constant and accelerated regimes.
//!
//! With `q_k = ∇_yΦ(x^k, y^k) − ∇_yΦ(x^{k−1}, y^{k−1})` and `α_k = c_α τ_{k−1}`
//! (`α_0 = c_α τ_0`), at a probe `(x, y)`:
//!
//! ```text
//! a_k     = ‖x−x^k‖²/(2τ_k) + ‖y−y^k‖²/(2σ_k) + θ_k⟨q_k, y^k−y⟩
//!           + θ_k L_yx/(2α_k)‖x^k−x^{k−1}‖² + θ_k L_yy/2 ‖y^k−y^{k−1}‖²
//! b_{k+1} = ‖x−x^{k+1}‖²/(2τ_k) + (1/σ_k + ν)/2 ‖y−y^{k+1}‖² + ⟨q_{k+1}, y^{k+1}−y⟩
//!           + L_yx/(2α_{k+1})‖x^{k+1}−x^k‖² + L_yy/2 ‖y^{k+1}−y^k‖²
//! c_k     = (1/τ_k − L_yx/α_{k+1})/2 ‖x^{k+1}−x^k‖²
//!           + (1/σ_k − L_yy − θ_k(L_yx α_k + L_yy))/2 ‖y^{k+1}−y^k‖²
//! ```

use super::{Inequality, StepRecord};
use crate::engine::IterateState;
use crate::model::{DualPoint, PrimalPoint, SaddleProblem};
use crate::schedules::ScheduleState;
use crate::Result;

#[derive(Debug, Clone, PartialEq)]
pub struct Certificate {
    pub a_k: f64,
    pub b_k1: f64,
    pub c_k: f64,
    pub probe: (PrimalPoint, DualPoint),
}

/// The three chained inequalities of one step.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CertificateChecks {
    /// `f(x^{k+1}, y) − f(x, y^{k+1}) ≤ a_k − b_{k+1} − c_k`.
    pub descent: Inequality,
    /// `(t_{k+1}/t_k) a_{k+1} ≤ b_{k+1}`.
    pub telescoping: Inequality,
    /// `δ(‖Δx‖²/(2τ_k) + ‖Δy‖²/(2σ_k)) ≤ c_k`.
    pub c_lower: Inequality,
}

fn q(problem: &SaddleProblem, state: &IterateState) -> DualPoint {
    problem.grad_y_phi(&state.x_cur, &state.y_cur) - &state.grad_prev
}

fn a_value(
    problem: &SaddleProblem,
    params: &ScheduleState,
    state: &IterateState,
    x: &PrimalPoint,
    y: &DualPoint,
) -> f64 {
    let c = problem.constants();
    let qk = q(problem, state);
    (x - &state.x_cur).norm_squared() / (2.0 * params.tau)
        + (y - &state.y_cur).norm_squared() / (2.0 * params.sigma)
        + params.theta * qk.dot(&(&state.y_cur - y))
        + params.theta * c.l_yx / (2.0 * params.alpha)
            * (&state.x_cur - &state.x_prev).norm_squared()
        + params.theta * c.l_yy / 2.0 * (&state.y_cur - &state.y_prev).norm_squared()
}

/// Evaluates `a_k`, `b_{k+1}` and `c_k` at the probe.
pub fn certificate(
    problem: &SaddleProblem,
    params: &ScheduleState,
    before: &IterateState,
    after: &IterateState,
    x: &PrimalPoint,
    y: &DualPoint,
) -> Certificate {
    let c = problem.constants();
    let alpha_next = params.next_alpha();
    let dx = (&after.x_cur - &before.x_cur).norm_squared();
    let dy = (&after.y_cur - &before.y_cur).norm_squared();
    let q_next = q(problem, after);
    let a_k = a_value(problem, params, before, x, y);
    let b_k1 = (x - &after.x_cur).norm_squared() / (2.0 * params.tau)
        + 0.5 * (1.0 / params.sigma + c.nu) * (y - &after.y_cur).norm_squared()
        + q_next.dot(&(&after.y_cur - y))
        + c.l_yx / (2.0 * alpha_next) * dx
        + c.l_yy / 2.0 * dy;
    let c_k = 0.5 * (1.0 / params.tau - c.l_yx / alpha_next) * dx
        + 0.5
            * (1.0 / params.sigma - c.l_yy - params.theta * (c.l_yx * params.alpha + c.l_yy))
            * dy;
    Certificate {
        a_k,
        b_k1,
        c_k,
        probe: (x.clone(), y.clone()),
    }
}

pub fn certificate_checks(
    problem: &SaddleProblem,
    step: &StepRecord<'_>,
    x: &PrimalPoint,
    y: &DualPoint,
) -> Result<CertificateChecks> {
    let (params, before, after) = (step.params, step.before, step.after);
    let cert = certificate(problem, params, before, after, x, y);
    let gap = problem.f(&after.x_cur, y)? - problem.f(x, &after.y_cur)?;
    let descent = Inequality::new(gap, cert.a_k - cert.b_k1 - cert.c_k);
    let a_next = a_value(problem, step.next_params, after, x, y);
    let ratio = step.next_params.weight.ratio(params.weight);
    let telescoping = Inequality::new(ratio * a_next, cert.b_k1);
    let dx = (&after.x_cur - &before.x_cur).norm_squared();
    let dy = (&after.y_cur - &before.y_cur).norm_squared();
    let c_lower = Inequality::new(
        params.delta * (dx / (2.0 * params.tau) + dy / (2.0 * params.sigma)),
        cert.c_k,
    );
    Ok(CertificateChecks {
        descent,
        telescoping,
        c_lower,
    })
}

/// `|⟨q_k, y^k − y⟩| ≤ (L_yx/2)(α_k‖y − y^k‖² + ‖x^k − x^{k−1}‖²/α_k)
///                   + (L_yy/2)(‖y − y^k‖² + ‖y^k − y^{k−1}‖²)`.
pub fn check_qk_bound(
    problem: &SaddleProblem,
    state: &IterateState,
    params: &ScheduleState,
    y: &DualPoint,
) -> Inequality {
    let c = problem.constants();
    let qk = q(problem, state);
    let lhs = qk.dot(&(&state.y_cur - y)).abs();
    let dist = (y - &state.y_cur).norm_squared();
    let dx = (&state.x_cur - &state.x_prev).norm_squared();
    let dy = (&state.y_cur - &state.y_prev).norm_squared();
    let mut rhs = c.l_yy / 2.0 * (dist + dy);
    if c.l_yx > 0.0 {
        rhs += c.l_yx / 2.0 * (params.alpha * dist + dx / params.alpha);
    }
    Inequality::new(lhs, rhs)
}
