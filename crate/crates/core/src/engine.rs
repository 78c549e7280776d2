//! The OGAProx iteration
//!
//! ```text
//! y^{k+1} = Prox_{σ_k g}( y^k + σ_k [ (1+θ_k) ∇_yΦ(x^k, y^k) − θ_k ∇_yΦ(x^{k−1}, y^{k−1}) ] )
//! x^{k+1} = Prox_{τ_k Φ(·, y^{k+1})}( x^k )
//! ```
//!
//! started from `(x^{−1}, y^{−1}) = (x^0, y^0)`, together with the weighted
//! ergodic averages `x̂_k = Σ_{j<k} t_j x^{j+1} / Σ_{j<k} t_j` (and likewise `ŷ_k`).

use crate::diagnostics::{self, StepRecord, TraceRow};
use crate::model::{DualPoint, PrimalPoint, SaddleProblem};
use crate::schedules::{adversarial_tau, RegimeSpec, ScaledWeight, Schedule, ScheduleState};
use crate::{Error, Result};

/// Iterates `x^{k−1}, x^k, y^{k−1}, y^k` and the cached `∇_yΦ(x^{k−1}, y^{k−1})`.
#[derive(Debug, Clone, PartialEq)]
pub struct IterateState {
    pub x_prev: PrimalPoint,
    pub x_cur: PrimalPoint,
    pub y_prev: DualPoint,
    pub y_cur: DualPoint,
    pub grad_prev: DualPoint,
    pub k: usize,
}

impl IterateState {
    /// State at `k = 0`; `q_0 = 0` because the previous point equals the start.
    pub fn new(problem: &SaddleProblem, x0: PrimalPoint, y0: DualPoint) -> Result<Self> {
        problem.check_dims(&x0, &y0)?;
        if !(x0.iter().chain(y0.iter()).all(|v| v.is_finite())) {
            return Err(Error::InvalidArgument("start point must be finite".into()));
        }
        let grad_prev = problem.grad_y_phi(&x0, &y0);
        Ok(Self {
            x_prev: x0.clone(),
            x_cur: x0,
            y_prev: y0.clone(),
            y_cur: y0,
            grad_prev,
            k: 0,
        })
    }

    fn is_finite(&self) -> bool {
        self.x_cur
            .iter()
            .chain(self.y_cur.iter())
            .chain(self.grad_prev.iter())
            .all(|v| v.is_finite())
    }
}

fn dual_update(
    problem: &SaddleProblem,
    state: &IterateState,
    sigma: f64,
    theta: f64,
) -> (DualPoint, DualPoint) {
    let grad_cur = problem.grad_y_phi(&state.x_cur, &state.y_cur);
    let optimistic = &grad_cur * (1.0 + theta) - &state.grad_prev * theta;
    let y_next = problem.prox_g(sigma, &(&state.y_cur + optimistic * sigma));
    (y_next, grad_cur)
}

fn finish_step(
    problem: &SaddleProblem,
    state: &IterateState,
    y_next: DualPoint,
    grad_cur: DualPoint,
    tau: f64,
) -> Result<IterateState> {
    let x_next = problem.prox_coupling(tau, &y_next, &state.x_cur);
    let next = IterateState {
        x_prev: state.x_cur.clone(),
        x_cur: x_next,
        y_prev: state.y_cur.clone(),
        y_cur: y_next,
        grad_prev: grad_cur,
        k: state.k + 1,
    };
    if next.is_finite() {
        Ok(next)
    } else {
        Err(Error::NonFiniteIterate { k: next.k })
    }
}

/// One OGAProx step with fully specified parameters.
///
/// Evaluates `∇_yΦ` exactly once (at `(x^k, y^k)`); the previous gradient is cached.
pub fn ogaprox_step(
    problem: &SaddleProblem,
    state: &IterateState,
    params: &ScheduleState,
) -> Result<IterateState> {
    if params.k != state.k {
        return Err(Error::InvalidArgument(format!(
            "schedule index {} does not match iterate index {}",
            params.k, state.k
        )));
    }
    let (y_next, grad_cur) = dual_update(problem, state, params.sigma, params.theta);
    finish_step(problem, state, y_next, grad_cur, params.tau)
}

/// One step of the adversarial schedule: `σ_k = θ_k = ε`, then
/// `τ_k = ε/(y^{k+1}(k+1)²)` from the freshly computed dual iterate.
///
/// Returns the new state and the `τ_k` that was used.
pub fn ogaprox_step_adversarial(
    problem: &SaddleProblem,
    state: &IterateState,
    epsilon: f64,
) -> Result<(IterateState, f64)> {
    if problem.dim_x() != 1 || problem.dim_y() != 1 {
        return Err(Error::DimensionMismatch {
            expected: 1,
            found: problem.dim_x().max(problem.dim_y()),
        });
    }
    let (y_next, grad_cur) = dual_update(problem, state, epsilon, epsilon);
    let tau = adversarial_tau(epsilon, state.k, y_next[0]);
    let next = finish_step(problem, state, y_next, grad_cur, tau)?;
    Ok((next, tau))
}

/// Streaming weighted averages `(x̂_k, ŷ_k)` with the weight sum kept in scaled form.
#[derive(Debug, Clone, Default)]
pub struct ErgodicAccumulator {
    mean_x: Option<PrimalPoint>,
    mean_y: Option<DualPoint>,
    weight_sum: Option<ScaledWeight>,
    count: usize,
}

impl ErgodicAccumulator {
    pub fn new() -> Self {
        Self::default()
    }

    /// `mean ← mean + t/(S + t) · (point − mean)`, `S ← S + t`.
    pub fn update(&mut self, weight: ScaledWeight, x_next: &PrimalPoint, y_next: &DualPoint) {
        match (&mut self.mean_x, &mut self.mean_y, self.weight_sum) {
            (Some(mx), Some(my), Some(sum)) => {
                let total = sum + weight;
                let c = weight.ratio(total);
                mx.axpy(c, &(x_next - &*mx), 1.0);
                my.axpy(c, &(y_next - &*my), 1.0);
                self.weight_sum = Some(total);
            }
            _ => {
                self.mean_x = Some(x_next.clone());
                self.mean_y = Some(y_next.clone());
                self.weight_sum = Some(weight);
            }
        }
        self.count += 1;
    }

    pub fn mean_x(&self) -> Option<&PrimalPoint> {
        self.mean_x.as_ref()
    }

    pub fn mean_y(&self) -> Option<&DualPoint> {
        self.mean_y.as_ref()
    }

    pub fn weight_sum(&self) -> Option<ScaledWeight> {
        self.weight_sum
    }

    pub fn count(&self) -> usize {
        self.count
    }
}

/// What an observer wants after seeing a row.
#[derive(Debug, Clone, PartialEq)]
pub enum Control {
    Continue,
    Stop(String),
}

pub trait Observer {
    fn observe(&mut self, row: &TraceRow, state: &IterateState) -> Control;
}

impl<F: FnMut(&TraceRow, &IterateState) -> Control> Observer for F {
    fn observe(&mut self, row: &TraceRow, state: &IterateState) -> Control {
        self(row, state)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum RunOutcome {
    Completed,
    StoppedByObserver(String),
    Failed(Error),
}

/// Everything recorded by [`run`].
#[derive(Debug, Clone)]
pub struct Trace {
    pub problem_label: String,
    pub regime: RegimeSpec,
    /// One row per iteration; `rows[k − 1]` describes `(x^k, y^k)` and `(x̂_k, ŷ_k)`.
    pub rows: Vec<TraceRow>,
    /// `iterates[k] = (x^k, y^k)`, starting with the initial point.
    pub iterates: Vec<(PrimalPoint, DualPoint)>,
    /// `params[k]` holds `σ_k, τ_k, θ_k, t_k, …` used to go from `k` to `k + 1`.
    pub params: Vec<ScheduleState>,
    /// `weight_sums[k − 1] = Σ_{i<k} t_i`.
    pub weight_sums: Vec<ScaledWeight>,
    pub outcome: RunOutcome,
}

impl Trace {
    pub fn x0(&self) -> &PrimalPoint {
        &self.iterates[0].0
    }

    pub fn y0(&self) -> &DualPoint {
        &self.iterates[0].1
    }

    /// Number of completed iterations.
    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn row(&self, k: usize) -> Option<&TraceRow> {
        k.checked_sub(1).and_then(|i| self.rows.get(i))
    }

    /// Rebuilds the engine state at iteration `k` from the stored iterates.
    pub fn state_at(&self, problem: &SaddleProblem, k: usize) -> Option<IterateState> {
        let (x_cur, y_cur) = self.iterates.get(k)?.clone();
        let (x_prev, y_prev) = self.iterates[k.saturating_sub(1)].clone();
        let grad_prev = problem.grad_y_phi(&x_prev, &y_prev);
        Some(IterateState {
            x_prev,
            x_cur,
            y_prev,
            y_cur,
            grad_prev,
            k,
        })
    }
}

/// Runs `max_iters` OGAProx steps, recording a [`TraceRow`] per step.
///
/// Precondition failures (bad regime, dimension mismatch, `max_iters = 0`) are
/// returned as `Err`; failures during the iteration end the run early and are
/// reported in [`Trace::outcome`] together with the rows computed so far.
pub fn run(
    problem: &SaddleProblem,
    regime: RegimeSpec,
    x0: PrimalPoint,
    y0: DualPoint,
    max_iters: usize,
    observers: &mut [&mut dyn Observer],
) -> Result<Trace> {
    if max_iters == 0 {
        return Err(Error::InvalidArgument(
            "max_iters must be at least 1".into(),
        ));
    }
    let mut schedule = Schedule::new(regime, problem.constants())?;
    let mut state = IterateState::new(problem, x0, y0)?;
    let mut acc = ErgodicAccumulator::new();
    let mut trace = Trace {
        problem_label: problem.label().to_string(),
        regime,
        rows: Vec::with_capacity(max_iters),
        iterates: Vec::with_capacity(max_iters + 1),
        params: Vec::with_capacity(max_iters),
        weight_sums: Vec::with_capacity(max_iters),
        outcome: RunOutcome::Completed,
    };
    trace
        .iterates
        .push((state.x_cur.clone(), state.y_cur.clone()));

    for _ in 0..max_iters {
        let mut params = *schedule.state();
        let stepped = match regime {
            RegimeSpec::Adversarial { epsilon } => {
                ogaprox_step_adversarial(problem, &state, epsilon).map(|(next, tau)| {
                    params.tau = tau;
                    next
                })
            }
            _ => ogaprox_step(problem, &state, &params),
        };
        let next = match stepped {
            Ok(next) => next,
            Err(e) => {
                trace.outcome = RunOutcome::Failed(e);
                break;
            }
        };
        acc.update(params.weight, &next.x_cur, &next.y_cur);
        let next_params = schedule.peek_next();
        let step = StepRecord {
            params: &params,
            next_params: &next_params,
            before: &state,
            after: &next,
        };
        let row = diagnostics::trace_row(problem, &regime, &trace.iterates[0], &step, &acc);
        let row = match row {
            Ok(row) => row,
            Err(e) => {
                trace.outcome = RunOutcome::Failed(e);
                break;
            }
        };
        trace.params.push(params);
        trace
            .weight_sums
            .push(acc.weight_sum().expect("updated above"));
        trace
            .iterates
            .push((next.x_cur.clone(), next.y_cur.clone()));
        let mut stop = None;
        for obs in observers.iter_mut() {
            if let Control::Stop(reason) = obs.observe(&row, &next) {
                stop = Some(reason);
                break;
            }
        }
        trace.rows.push(row);
        state = next;
        schedule.advance();
        if let Some(reason) = stop {
            trace.outcome = RunOutcome::StoppedByObserver(reason);
            break;
        }
    }
    Ok(trace)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::problems;
    use nalgebra::DVector;
    use std::sync::atomic::{AtomicUsize, Ordering};
    use std::sync::Arc;

    fn v(xs: &[f64]) -> DVector<f64> {
        DVector::from_column_slice(xs)
    }

    fn constant(tau: f64, sigma: f64) -> RegimeSpec {
        RegimeSpec::ConstantUnit {
            tau,
            sigma,
            c_alpha: 2.0,
        }
    }

    #[test]
    fn bilinear_hand_steps() {
        let p = problems::bilinear_scalar();
        let sched = Schedule::new(constant(0.2, 0.2), p.constants()).unwrap();
        let states: Vec<_> = sched.take(2).collect();
        let s0 = IterateState::new(&p, v(&[1.0]), v(&[1.0])).unwrap();
        let s1 = ogaprox_step(&p, &s0, &states[0]).unwrap();
        assert!((s1.y_cur[0] - 1.2).abs() < 1e-14);
        assert!((s1.x_cur[0] - 0.76).abs() < 1e-14);
        let s2 = ogaprox_step(&p, &s1, &states[1]).unwrap();
        assert!((s2.y_cur[0] - 1.304).abs() < 1e-14);
        assert!((s2.x_cur[0] - 0.4992).abs() < 1e-14);
        assert!(ogaprox_step(&p, &s0, &states[1]).is_err());
    }

    #[test]
    fn saddle_is_a_fixed_point() {
        let p = problems::bilinear_scalar();
        let t = run(&p, constant(0.2, 0.2), v(&[0.0]), v(&[0.0]), 50, &mut []).unwrap();
        assert!(t.iterates.iter().all(|(x, y)| x[0] == 0.0 && y[0] == 0.0));
    }

    #[test]
    fn adversarial_hand_steps() {
        let p = problems::bilinear_scalar();
        let s0 = IterateState::new(&p, v(&[1.0]), v(&[1.0])).unwrap();
        let (s1, tau0) = ogaprox_step_adversarial(&p, &s0, 0.1).unwrap();
        assert!((s1.y_cur[0] - 1.1).abs() < 1e-15);
        assert!((s1.x_cur[0] - 0.9).abs() < 1e-15);
        assert!((tau0 - 0.1 / 1.1).abs() < 1e-16);
        let (s2, _) = ogaprox_step_adversarial(&p, &s1, 0.1).unwrap();
        assert!((s2.y_cur[0] - 1.189).abs() < 1e-14);
        assert!((s2.x_cur[0] - 0.875).abs() < 1e-14);
    }

    #[test]
    fn adversarial_requires_scalar_problem() {
        let p = problems::bilinear(nalgebra::DMatrix::identity(2, 2)).unwrap();
        let s0 = IterateState::new(&p, v(&[1.0, 1.0]), v(&[1.0, 1.0])).unwrap();
        assert!(ogaprox_step_adversarial(&p, &s0, 0.1).is_err());
    }

    #[test]
    fn run_rows_and_averages() {
        let p = problems::bilinear_scalar();
        let t = run(&p, constant(0.2, 0.2), v(&[1.0]), v(&[1.0]), 1, &mut []).unwrap();
        let r = &t.rows[0];
        assert_eq!(r.k, 1);
        assert!((r.xhat[0] - 0.76).abs() < 1e-15);
        assert!((r.yhat[0] - 1.2).abs() < 1e-15);
        assert!((r.f_ergodic - 0.912).abs() < 1e-15);

        let (p, regime, x0, y0) = problems::counterexample_setup(0.1).unwrap();
        let t = run(&p, regime, x0, y0, 2, &mut []).unwrap();
        let r = &t.rows[1];
        assert!((r.xhat[0] - 0.8875).abs() < 1e-15);
        assert!((r.yhat[0] - 1.1445).abs() < 1e-15);
        assert!((r.f_ergodic - 1.01574375).abs() < 1e-14);
        assert!((t.params[0].tau - 0.1 / 1.1).abs() < 1e-16);
    }

    #[test]
    fn run_rejects_zero_iterations() {
        let p = problems::bilinear_scalar();
        assert!(matches!(
            run(&p, constant(0.2, 0.2), v(&[1.0]), v(&[1.0]), 0, &mut []),
            Err(Error::InvalidArgument(_))
        ));
    }

    #[test]
    fn observer_can_stop_the_run() {
        let p = problems::bilinear_scalar();
        let mut stopper = |row: &TraceRow, _: &IterateState| {
            if row.k == 7 {
                Control::Stop("seen enough".into())
            } else {
                Control::Continue
            }
        };
        let t = run(
            &p,
            constant(0.2, 0.2),
            v(&[1.0]),
            v(&[1.0]),
            100,
            &mut [&mut stopper],
        )
        .unwrap();
        assert_eq!(t.len(), 7);
        assert_eq!(
            t.outcome,
            RunOutcome::StoppedByObserver("seen enough".into())
        );
    }

    struct Blowup;
    impl crate::model::Coupling for Blowup {
        fn dim_x(&self) -> usize {
            1
        }
        fn dim_y(&self) -> usize {
            1
        }
        fn value(&self, x: &PrimalPoint, y: &DualPoint) -> crate::ExtendedReal {
            crate::ExtendedReal::Finite(x[0] * y[0])
        }
        fn grad_y(&self, x: &PrimalPoint, _y: &DualPoint) -> DualPoint {
            x * 1e200
        }
        fn prox(&self, step: f64, y: &DualPoint, anchor: &PrimalPoint) -> PrimalPoint {
            anchor - y * (step * 1e200)
        }
    }

    #[test]
    fn non_finite_iterates_end_the_run_with_partial_trace() {
        let p = crate::SaddleProblem::new(
            "blowup",
            Arc::new(Blowup),
            Arc::new(crate::prox::ZeroRegularizer::new(1)),
            crate::model::RegularityConstants {
                l_yx: 1.0,
                l_yy: 0.0,
                mu: 0.0,
                nu: 0.0,
            },
        )
        .unwrap();
        let regime = constant(0.2, 0.2);
        let t = run(&p, regime, v(&[1.0]), v(&[1.0]), 50, &mut []).unwrap();
        assert!(matches!(
            t.outcome,
            RunOutcome::Failed(Error::NonFiniteIterate { .. })
        ));
        assert!(t.len() < 50);
    }

    struct Counting {
        inner: crate::prox::BilinearCoupling,
        grads: Arc<AtomicUsize>,
    }
    impl crate::model::Coupling for Counting {
        fn dim_x(&self) -> usize {
            self.inner.dim_x()
        }
        fn dim_y(&self) -> usize {
            self.inner.dim_y()
        }
        fn value(&self, x: &PrimalPoint, y: &DualPoint) -> crate::ExtendedReal {
            self.inner.value(x, y)
        }
        fn grad_y(&self, x: &PrimalPoint, y: &DualPoint) -> DualPoint {
            self.grads.fetch_add(1, Ordering::SeqCst);
            self.inner.grad_y(x, y)
        }
        fn prox(&self, step: f64, y: &DualPoint, anchor: &PrimalPoint) -> PrimalPoint {
            self.inner.prox(step, y, anchor)
        }
    }

    #[test]
    fn one_gradient_evaluation_per_step() {
        let grads = Arc::new(AtomicUsize::new(0));
        let coupling = Counting {
            inner: crate::prox::BilinearCoupling::new(nalgebra::DMatrix::identity(1, 1), 0.0)
                .unwrap(),
            grads: grads.clone(),
        };
        let p = crate::SaddleProblem::new(
            "counting",
            Arc::new(coupling),
            Arc::new(crate::prox::ZeroRegularizer::new(1)),
            crate::model::RegularityConstants {
                l_yx: 1.0,
                l_yy: 0.0,
                mu: 0.0,
                nu: 0.0,
            },
        )
        .unwrap();
        let sched = Schedule::new(constant(0.2, 0.2), p.constants()).unwrap();
        let mut s = IterateState::new(&p, v(&[1.0]), v(&[1.0])).unwrap();
        assert_eq!(grads.load(Ordering::SeqCst), 1);
        for params in sched.take(25) {
            let before = grads.load(Ordering::SeqCst);
            s = ogaprox_step(&p, &s, &params).unwrap();
            assert_eq!(grads.load(Ordering::SeqCst) - before, 1);
        }
    }

    #[test]
    fn accumulator_examples() {
        let mut acc = ErgodicAccumulator::new();
        acc.update(ScaledWeight::ONE, &v(&[0.76]), &v(&[1.2]));
        assert_eq!(acc.mean_x().unwrap()[0], 0.76);
        assert_eq!(acc.mean_y().unwrap()[0], 1.2);
        let mut acc = ErgodicAccumulator::new();
        acc.update(ScaledWeight::ONE, &v(&[0.9]), &v(&[0.0]));
        acc.update(ScaledWeight::ONE, &v(&[0.875]), &v(&[0.0]));
        assert!((acc.mean_x().unwrap()[0] - 0.8875).abs() < 1e-16);
        assert_eq!(acc.count(), 2);
    }

    #[test]
    fn traces_are_deterministic() {
        let p = problems::strongly_convex_strongly_concave(1.0, 1.0).unwrap();
        let regime = RegimeSpec::LinearRate {
            theta: 0.6,
            alpha: 1.0,
        };
        let a = run(&p, regime, v(&[1.0]), v(&[1.0]), 100, &mut []).unwrap();
        let b = run(&p, regime, v(&[1.0]), v(&[1.0]), 100, &mut []).unwrap();
        for (ra, rb) in a.rows.iter().zip(&b.rows) {
            assert_eq!(ra.f_ergodic.to_bits(), rb.f_ergodic.to_bits());
            assert_eq!(ra.xhat, rb.xhat);
        }
    }
}
