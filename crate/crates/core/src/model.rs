//! Saddle-point problem abstraction: `f(x, y) = Φ(x, y) − g(y)` over
//! finite-dimensional real vectors, described through value, gradient and
//! proximity oracles together with the regularity constants the step-size
//! rules depend on.

use std::fmt;
use std::ops::Sub;
use std::sync::Arc;

use nalgebra::DVector;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::{Error, Result};

/// Point of the primal (minimising) space.
pub type PrimalPoint = DVector<f64>;
/// Point of the dual (maximising) space.
pub type DualPoint = DVector<f64>;

/// A value in `R ∪ {−∞, +∞}`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ExtendedReal {
    Finite(f64),
    PosInf,
    NegInf,
}

impl ExtendedReal {
    /// Maps `±inf` to the tagged infinities. NaN is rejected.
    pub fn from_f64(v: f64) -> Result<Self> {
        if v.is_nan() {
            Err(Error::IndeterminateValue("NaN".into()))
        } else if v == f64::INFINITY {
            Ok(Self::PosInf)
        } else if v == f64::NEG_INFINITY {
            Ok(Self::NegInf)
        } else {
            Ok(Self::Finite(v))
        }
    }

    pub fn is_finite(&self) -> bool {
        matches!(self, Self::Finite(_))
    }

    /// The finite value, or an `OracleDomain` error for either infinity.
    pub fn finite(self) -> Result<f64> {
        match self {
            Self::Finite(v) => Ok(v),
            other => Err(Error::OracleDomain(format!("value is {other}"))),
        }
    }

    pub fn to_f64(self) -> f64 {
        match self {
            Self::Finite(v) => v,
            Self::PosInf => f64::INFINITY,
            Self::NegInf => f64::NEG_INFINITY,
        }
    }
}

impl Sub for ExtendedReal {
    type Output = Result<ExtendedReal>;

    fn sub(self, rhs: Self) -> Result<ExtendedReal> {
        use ExtendedReal::*;
        match (self, rhs) {
            (PosInf, PosInf) | (NegInf, NegInf) => {
                Err(Error::IndeterminateValue(format!("{self} - {rhs}")))
            }
            (PosInf, _) | (_, NegInf) => Ok(PosInf),
            (NegInf, _) | (_, PosInf) => Ok(NegInf),
            (Finite(a), Finite(b)) => ExtendedReal::from_f64(a - b),
        }
    }
}

impl fmt::Display for ExtendedReal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Finite(v) => write!(f, "{v}"),
            Self::PosInf => f.write_str("+inf"),
            Self::NegInf => f.write_str("-inf"),
        }
    }
}

/// The coupling term `Φ(x, y)`: convex in `x`, differentiable in `y`.
pub trait Coupling: Send + Sync {
    fn dim_x(&self) -> usize;
    fn dim_y(&self) -> usize;

    fn value(&self, x: &PrimalPoint, y: &DualPoint) -> ExtendedReal;

    /// `∇_y Φ(x, y)`.
    fn grad_y(&self, x: &PrimalPoint, y: &DualPoint) -> DualPoint;

    /// Exact minimiser of `Φ(·, y) + ‖· − anchor‖² / (2 step)`.
    fn prox(&self, step: f64, y: &DualPoint, anchor: &PrimalPoint) -> PrimalPoint;

    /// `∇_x Φ(x, y)` when `Φ(·, y)` is smooth. Only used to measure prox residuals.
    fn grad_x(&self, _x: &PrimalPoint, _y: &DualPoint) -> Option<PrimalPoint> {
        None
    }
}

/// The regulariser `g(y)`: proper, lsc, convex with modulus `ν`.
pub trait Regularizer: Send + Sync {
    fn value(&self, y: &DualPoint) -> ExtendedReal;

    /// `Prox_{step·g}(anchor)`.
    fn prox(&self, step: f64, anchor: &DualPoint) -> DualPoint;

    /// `∇g(y)` when `g` is smooth. Only used to measure prox residuals.
    fn gradient(&self, _y: &DualPoint) -> Option<DualPoint> {
        None
    }
}

/// `L_yx`, `L_yy` from `‖∇_yΦ(x,y) − ∇_yΦ(x',y')‖ ≤ L_yx‖x−x'‖ + L_yy‖y−y'‖`
/// and the strong-convexity moduli `μ` (of `Φ(·, y)`) and `ν` (of `g`).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RegularityConstants {
    pub l_yx: f64,
    pub l_yy: f64,
    pub mu: f64,
    pub nu: f64,
}

impl RegularityConstants {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("L_yx", self.l_yx),
            ("L_yy", self.l_yy),
            ("mu", self.mu),
            ("nu", self.nu),
        ] {
            if !(v.is_finite() && v >= 0.0) {
                return Err(Error::InvalidArgument(format!(
                    "{name} must be a finite nonnegative number, got {v}"
                )));
            }
        }
        Ok(())
    }
}

/// A known saddle point `(x*, y*)` with `f* = f(x*, y*)`.
#[derive(Debug, Clone, PartialEq)]
pub struct KnownSaddle {
    pub x: PrimalPoint,
    pub y: DualPoint,
    pub value: f64,
}

/// Oracle bundle for `f(x, y) = Φ(x, y) − g(y)`.
///
/// Cloning is cheap: oracles are shared behind `Arc`.
#[derive(Clone)]
pub struct SaddleProblem {
    label: String,
    coupling: Arc<dyn Coupling>,
    regularizer: Arc<dyn Regularizer>,
    constants: RegularityConstants,
    saddle: Option<KnownSaddle>,
}

impl fmt::Debug for SaddleProblem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("SaddleProblem")
            .field("label", &self.label)
            .field("dim_x", &self.dim_x())
            .field("dim_y", &self.dim_y())
            .field("constants", &self.constants)
            .field("saddle", &self.saddle)
            .finish()
    }
}

impl SaddleProblem {
    pub fn new(
        label: impl Into<String>,
        coupling: Arc<dyn Coupling>,
        regularizer: Arc<dyn Regularizer>,
        constants: RegularityConstants,
    ) -> Result<Self> {
        constants.validate()?;
        Ok(Self {
            label: label.into(),
            coupling,
            regularizer,
            constants,
            saddle: None,
        })
    }

    /// Attaches a known saddle point; `f*` is evaluated from the oracles.
    pub fn with_saddle(mut self, x: PrimalPoint, y: DualPoint) -> Result<Self> {
        self.check_dims(&x, &y)?;
        let value = self.f_value(&x, &y)?.finite()?;
        self.saddle = Some(KnownSaddle { x, y, value });
        Ok(self)
    }

    /// Replaces the regularity constants (e.g. to probe a deliberately wrong `L_yx`).
    pub fn with_constants(mut self, constants: RegularityConstants) -> Result<Self> {
        constants.validate()?;
        self.constants = constants;
        Ok(self)
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn dim_x(&self) -> usize {
        self.coupling.dim_x()
    }

    pub fn dim_y(&self) -> usize {
        self.coupling.dim_y()
    }

    pub fn constants(&self) -> &RegularityConstants {
        &self.constants
    }

    pub fn saddle(&self) -> Option<&KnownSaddle> {
        self.saddle.as_ref()
    }

    pub fn f_star(&self) -> Option<f64> {
        self.saddle.as_ref().map(|s| s.value)
    }

    pub fn coupling(&self) -> &dyn Coupling {
        self.coupling.as_ref()
    }

    pub fn regularizer(&self) -> &dyn Regularizer {
        self.regularizer.as_ref()
    }

    pub fn check_dims(&self, x: &PrimalPoint, y: &DualPoint) -> Result<()> {
        if x.len() != self.dim_x() {
            return Err(Error::DimensionMismatch {
                expected: self.dim_x(),
                found: x.len(),
            });
        }
        if y.len() != self.dim_y() {
            return Err(Error::DimensionMismatch {
                expected: self.dim_y(),
                found: y.len(),
            });
        }
        Ok(())
    }

    pub fn phi_value(&self, x: &PrimalPoint, y: &DualPoint) -> ExtendedReal {
        self.coupling.value(x, y)
    }

    pub fn g_value(&self, y: &DualPoint) -> ExtendedReal {
        self.regularizer.value(y)
    }

    pub fn grad_y_phi(&self, x: &PrimalPoint, y: &DualPoint) -> DualPoint {
        self.coupling.grad_y(x, y)
    }

    pub fn prox_coupling(&self, step: f64, y: &DualPoint, anchor: &PrimalPoint) -> PrimalPoint {
        self.coupling.prox(step, y, anchor)
    }

    pub fn prox_g(&self, step: f64, anchor: &DualPoint) -> DualPoint {
        self.regularizer.prox(step, anchor)
    }

    /// `f(x, y) = Φ(x, y) − g(y)` in extended arithmetic.
    pub fn f_value(&self, x: &PrimalPoint, y: &DualPoint) -> Result<ExtendedReal> {
        let phi = ExtendedReal::from_f64(self.phi_value(x, y).to_f64())?;
        let g = ExtendedReal::from_f64(self.g_value(y).to_f64())?;
        phi - g
    }

    /// `f(x, y)` as a finite real; out-of-domain evaluations are errors.
    pub fn f(&self, x: &PrimalPoint, y: &DualPoint) -> Result<f64> {
        self.f_value(x, y)?.finite()
    }

    /// First-order residual `‖∇_xΦ(p, y) + (p − anchor)/step‖` of the coupling prox,
    /// when `Φ(·, y)` exposes a gradient.
    pub fn prox_coupling_residual(
        &self,
        step: f64,
        y: &DualPoint,
        anchor: &PrimalPoint,
    ) -> Option<f64> {
        let p = self.prox_coupling(step, y, anchor);
        let grad = self.coupling.grad_x(&p, y)?;
        Some((grad + (&p - anchor) / step).norm())
    }

    /// First-order residual `‖∇g(p) + (p − anchor)/step‖` of `Prox_{step·g}`.
    pub fn prox_g_residual(&self, step: f64, anchor: &DualPoint) -> Option<f64> {
        let p = self.prox_g(step, anchor);
        let grad = self.regularizer.gradient(&p)?;
        Some((grad + (&p - anchor) / step).norm())
    }
}

/// Uniform sample in the box `[−radius, radius]^n`.
pub fn sample_box(rng: &mut impl Rng, n: usize, radius: f64) -> DVector<f64> {
    DVector::from_fn(n, |_, _| rng.random_range(-radius..=radius))
}

/// Seeded generator used for every probe sweep in the crate.
pub fn probe_rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Outcome of a sampled Lipschitz check of `∇_yΦ`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LipschitzReport {
    /// `max (‖Δ∇_yΦ‖ − L_yx‖Δx‖ − L_yy‖Δy‖)` over sampled pairs.
    pub max_violation: f64,
    /// Largest `L_yx‖Δx‖ + L_yy‖Δy‖ + ‖Δ∇_yΦ‖` seen; sets the tolerance scale.
    pub scale: f64,
    pub samples: usize,
}

impl LipschitzReport {
    pub fn passed(&self) -> bool {
        self.max_violation <= 1e-9 * (1.0 + self.scale)
    }
}

pub fn check_lipschitz(
    problem: &SaddleProblem,
    sample_count: usize,
    box_radius: f64,
    rng_seed: u64,
) -> Result<LipschitzReport> {
    if sample_count == 0 || box_radius.is_nan() || box_radius <= 0.0 {
        return Err(Error::InvalidArgument(
            "sample_count and box_radius must be positive".into(),
        ));
    }
    let c = problem.constants();
    let mut rng = probe_rng(rng_seed);
    let mut max_violation = f64::NEG_INFINITY;
    let mut scale: f64 = 0.0;
    for _ in 0..sample_count {
        let x1 = sample_box(&mut rng, problem.dim_x(), box_radius);
        let y1 = sample_box(&mut rng, problem.dim_y(), box_radius);
        let x2 = sample_box(&mut rng, problem.dim_x(), box_radius);
        let y2 = sample_box(&mut rng, problem.dim_y(), box_radius);
        for (x, y) in [(&x1, &y1), (&x2, &y2)] {
            if !problem.phi_value(x, y).is_finite() {
                return Err(Error::OracleDomain(format!(
                    "Φ is not finite at sampled point x={:?}",
                    x.as_slice()
                )));
            }
        }
        let dg = (problem.grad_y_phi(&x1, &y1) - problem.grad_y_phi(&x2, &y2)).norm();
        let bound = c.l_yx * (&x1 - &x2).norm() + c.l_yy * (&y1 - &y2).norm();
        max_violation = max_violation.max(dg - bound);
        scale = scale.max(dg + bound);
    }
    Ok(LipschitzReport {
        max_violation,
        scale,
        samples: sample_count,
    })
}

/// Smallest slack of `f(x*, y) ≤ f* ≤ f(x, y*)` over sampled probes.
///
/// Returns `(min slack, f*)`; the check passes when the slack is at least
/// `−1e-10·(1 + |f*|)`.
pub fn check_saddle(
    problem: &SaddleProblem,
    probes: usize,
    box_radius: f64,
    rng_seed: u64,
) -> Result<(f64, f64)> {
    let saddle = problem.saddle().ok_or(Error::MissingSaddle)?;
    let mut rng = probe_rng(rng_seed);
    let mut min_slack = f64::INFINITY;
    for _ in 0..probes {
        let x = sample_box(&mut rng, problem.dim_x(), box_radius);
        let y = sample_box(&mut rng, problem.dim_y(), box_radius);
        let left = saddle.value - problem.f(&saddle.x, &y)?;
        let right = problem.f(&x, &saddle.y)? - saddle.value;
        min_slack = min_slack.min(left).min(right);
    }
    Ok((min_slack, saddle.value))
}
