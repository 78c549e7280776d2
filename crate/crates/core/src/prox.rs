//! Closed-form proximity operators `Prox_{s h}(z) = argmin_u h(u) + ‖u − z‖²/(2s)`
//! for the functions used by the built-in problems, and the oracle structs
//! that plug them into a [`SaddleProblem`](crate::SaddleProblem).

use std::fmt;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};

use crate::model::{Coupling, DualPoint, ExtendedReal, PrimalPoint, Regularizer};
use crate::{Error, Result};

type ProxFn = dyn Fn(f64, &DVector<f64>) -> DVector<f64> + Send + Sync;

/// A proximity operator `(step, anchor) ↦ Prox_{step·h}(anchor)` with a label.
#[derive(Clone)]
pub struct ProxMap {
    evaluator: Arc<ProxFn>,
    description: String,
}

impl ProxMap {
    pub fn new(
        description: impl Into<String>,
        evaluator: impl Fn(f64, &DVector<f64>) -> DVector<f64> + Send + Sync + 'static,
    ) -> Self {
        Self {
            evaluator: Arc::new(evaluator),
            description: description.into(),
        }
    }

    pub fn zero() -> Self {
        Self::new("prox of 0 (identity)", prox_zero)
    }

    pub fn quadratic(nu: f64) -> Self {
        Self::new(format!("prox of ({nu}/2)|.|^2"), move |s, z| {
            prox_quadratic(nu, s, z)
        })
    }

    pub fn apply(&self, step: f64, anchor: &DVector<f64>) -> DVector<f64> {
        (self.evaluator)(step, anchor)
    }

    pub fn description(&self) -> &str {
        &self.description
    }
}

impl fmt::Debug for ProxMap {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_tuple("ProxMap").field(&self.description).finish()
    }
}

/// Prox of the zero function: the identity.
pub fn prox_zero(_step: f64, anchor: &DVector<f64>) -> DVector<f64> {
    anchor.clone()
}

/// Prox of `(ν/2)‖·‖²`: `z / (1 + σν)`.
pub fn prox_quadratic(nu: f64, step: f64, anchor: &DVector<f64>) -> DVector<f64> {
    anchor / (1.0 + step * nu)
}

/// Minimiser of `(μ/2)‖x‖² + ⟨Ax, y⟩ + ‖x − x̄‖²/(2τ)`: `(x̄ − τAᵀy)/(1 + τμ)`.
pub fn prox_bilinear_coupling(
    a: &DMatrix<f64>,
    mu: f64,
    step: f64,
    y: &DVector<f64>,
    anchor: &DVector<f64>,
) -> Result<DVector<f64>> {
    if y.len() != a.nrows() {
        return Err(Error::DimensionMismatch {
            expected: a.nrows(),
            found: y.len(),
        });
    }
    if anchor.len() != a.ncols() {
        return Err(Error::DimensionMismatch {
            expected: a.ncols(),
            found: anchor.len(),
        });
    }
    Ok((anchor - step * a.tr_mul(y)) / (1.0 + step * mu))
}

/// `g ≡ 0` on `R^n`.
#[derive(Debug, Clone)]
pub struct ZeroRegularizer {
    dim: usize,
}

impl ZeroRegularizer {
    pub fn new(dim: usize) -> Self {
        Self { dim }
    }
}

impl Regularizer for ZeroRegularizer {
    fn value(&self, _y: &DualPoint) -> ExtendedReal {
        ExtendedReal::Finite(0.0)
    }

    fn prox(&self, step: f64, anchor: &DualPoint) -> DualPoint {
        prox_zero(step, anchor)
    }

    fn gradient(&self, _y: &DualPoint) -> Option<DualPoint> {
        Some(DVector::zeros(self.dim))
    }
}

/// `g(y) = (ν/2)‖y‖²`, convex with modulus `ν`.
#[derive(Debug, Clone)]
pub struct QuadraticRegularizer {
    pub nu: f64,
}

impl Regularizer for QuadraticRegularizer {
    fn value(&self, y: &DualPoint) -> ExtendedReal {
        ExtendedReal::Finite(0.5 * self.nu * y.norm_squared())
    }

    fn prox(&self, step: f64, anchor: &DualPoint) -> DualPoint {
        prox_quadratic(self.nu, step, anchor)
    }

    fn gradient(&self, y: &DualPoint) -> Option<DualPoint> {
        Some(y * self.nu)
    }
}

/// A regulariser assembled from a value closure and a [`ProxMap`].
pub struct CustomRegularizer {
    value: Arc<dyn Fn(&DualPoint) -> ExtendedReal + Send + Sync>,
    prox: ProxMap,
}

impl CustomRegularizer {
    pub fn new(
        value: impl Fn(&DualPoint) -> ExtendedReal + Send + Sync + 'static,
        prox: ProxMap,
    ) -> Self {
        Self {
            value: Arc::new(value),
            prox,
        }
    }
}

impl Regularizer for CustomRegularizer {
    fn value(&self, y: &DualPoint) -> ExtendedReal {
        (self.value)(y)
    }

    fn prox(&self, step: f64, anchor: &DualPoint) -> DualPoint {
        self.prox.apply(step, anchor)
    }
}

/// `Φ(x, y) = (μ/2)‖x‖² + ⟨Ax, y⟩` with `A ∈ R^{n2×n1}`.
#[derive(Debug, Clone)]
pub struct BilinearCoupling {
    a: DMatrix<f64>,
    mu: f64,
}

impl BilinearCoupling {
    pub fn new(a: DMatrix<f64>, mu: f64) -> Result<Self> {
        if a.nrows() == 0 || a.ncols() == 0 {
            return Err(Error::InvalidArgument(
                "coupling matrix must be non-empty".into(),
            ));
        }
        if !(mu.is_finite() && mu >= 0.0) {
            return Err(Error::InvalidArgument(format!("mu must be >= 0, got {mu}")));
        }
        Ok(Self { a, mu })
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.a
    }

    /// Largest singular value of `A`, i.e. the exact `L_yx` of this coupling.
    pub fn operator_norm(&self) -> f64 {
        self.a.singular_values().iter().copied().fold(0.0, f64::max)
    }
}

impl Coupling for BilinearCoupling {
    fn dim_x(&self) -> usize {
        self.a.ncols()
    }

    fn dim_y(&self) -> usize {
        self.a.nrows()
    }

    fn value(&self, x: &PrimalPoint, y: &DualPoint) -> ExtendedReal {
        ExtendedReal::Finite(0.5 * self.mu * x.norm_squared() + (&self.a * x).dot(y))
    }

    fn grad_y(&self, x: &PrimalPoint, _y: &DualPoint) -> DualPoint {
        &self.a * x
    }

    fn prox(&self, step: f64, y: &DualPoint, anchor: &PrimalPoint) -> PrimalPoint {
        (anchor - step * self.a.tr_mul(y)) / (1.0 + step * self.mu)
    }

    fn grad_x(&self, x: &PrimalPoint, y: &DualPoint) -> Option<PrimalPoint> {
        Some(x * self.mu + self.a.tr_mul(y))
    }
}
