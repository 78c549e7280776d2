//! Built-in problem instances with closed-form prox maps and exact constants.

use std::sync::Arc;

use nalgebra::{DMatrix, DVector};

use crate::model::{DualPoint, PrimalPoint, RegularityConstants, SaddleProblem};
use crate::prox::{BilinearCoupling, QuadraticRegularizer, ZeroRegularizer};
use crate::schedules::{validate_epsilon, RegimeSpec};
use crate::{Error, Result};

fn with_origin_saddle(problem: SaddleProblem) -> Result<SaddleProblem> {
    let (n, m) = (problem.dim_x(), problem.dim_y());
    problem.with_saddle(DVector::zeros(n), DVector::zeros(m))
}

/// `f(x, y) = ⟨Ax, y⟩` with `g ≡ 0`; `L_yx = ‖A‖₂`.
pub fn bilinear(a: DMatrix<f64>) -> Result<SaddleProblem> {
    let coupling = BilinearCoupling::new(a, 0.0)?;
    let constants = RegularityConstants {
        l_yx: coupling.operator_norm(),
        l_yy: 0.0,
        mu: 0.0,
        nu: 0.0,
    };
    let dim_y = coupling.matrix().nrows();
    let problem = SaddleProblem::new(
        "bilinear",
        Arc::new(coupling),
        Arc::new(ZeroRegularizer::new(dim_y)),
        constants,
    )?;
    with_origin_saddle(problem)
}

/// `f(x, y) = xy`.
pub fn bilinear_scalar() -> SaddleProblem {
    bilinear(DMatrix::from_element(1, 1, 1.0)).expect("scalar bilinear problem is well formed")
}

/// `f(x, y) = xy − (ν/2)y²`.
pub fn convex_strongly_concave(nu: f64) -> Result<SaddleProblem> {
    if !(nu.is_finite() && nu > 0.0) {
        return Err(Error::InvalidArgument(format!("nu must be > 0, got {nu}")));
    }
    let coupling = BilinearCoupling::new(DMatrix::from_element(1, 1, 1.0), 0.0)?;
    let problem = SaddleProblem::new(
        "csc",
        Arc::new(coupling),
        Arc::new(QuadraticRegularizer { nu }),
        RegularityConstants {
            l_yx: 1.0,
            l_yy: 0.0,
            mu: 0.0,
            nu,
        },
    )?;
    with_origin_saddle(problem)
}

/// `f(x, y) = (μ/2)x² + xy − (ν/2)y²`.
pub fn strongly_convex_strongly_concave(mu: f64, nu: f64) -> Result<SaddleProblem> {
    for (name, v) in [("mu", mu), ("nu", nu)] {
        if !(v.is_finite() && v > 0.0) {
            return Err(Error::InvalidArgument(format!(
                "{name} must be > 0, got {v}"
            )));
        }
    }
    let coupling = BilinearCoupling::new(DMatrix::from_element(1, 1, 1.0), mu)?;
    let problem = SaddleProblem::new(
        "scsc",
        Arc::new(coupling),
        Arc::new(QuadraticRegularizer { nu }),
        RegularityConstants {
            l_yx: 1.0,
            l_yy: 0.0,
            mu,
            nu,
        },
    )?;
    with_origin_saddle(problem)
}

/// The scalar bilinear problem with the adversarial schedule, started at `(1, 1)`.
pub fn counterexample_setup(
    epsilon: f64,
) -> Result<(SaddleProblem, RegimeSpec, PrimalPoint, DualPoint)> {
    validate_epsilon(epsilon)?;
    let problem = bilinear_scalar();
    Ok((
        problem,
        RegimeSpec::Adversarial { epsilon },
        DVector::from_element(1, 1.0),
        DVector::from_element(1, 1.0),
    ))
}

/// A named problem with the regime and start point used when none are given.
#[derive(Debug, Clone, Copy)]
pub struct ProblemCatalogEntry {
    pub label: &'static str,
    pub notes: &'static str,
    pub default_regime: RegimeSpec,
    builder: fn() -> Result<SaddleProblem>,
}

impl ProblemCatalogEntry {
    pub fn build(&self) -> Result<SaddleProblem> {
        (self.builder)()
    }

    /// `(1, …, 1)` in both blocks.
    pub fn default_start(&self) -> Result<(PrimalPoint, DualPoint)> {
        let p = self.build()?;
        Ok((
            DVector::from_element(p.dim_x(), 1.0),
            DVector::from_element(p.dim_y(), 1.0),
        ))
    }
}

pub const CATALOG: [ProblemCatalogEntry; 4] = [
    ProblemCatalogEntry {
        label: "bilinear",
        notes: "f(x,y) = xy, g = 0; constant steps tau = sigma = 0.2",
        default_regime: RegimeSpec::ConstantUnit {
            tau: 0.2,
            sigma: 0.2,
            c_alpha: 2.0,
        },
        builder: || Ok(bilinear_scalar()),
    },
    ProblemCatalogEntry {
        label: "csc",
        notes: "f(x,y) = xy - y^2/2; accelerated steps tau0 = sigma0 = 0.5",
        default_regime: RegimeSpec::Accelerated {
            tau0: 0.5,
            sigma0: 0.5,
            c_alpha: 2.0,
        },
        builder: || convex_strongly_concave(1.0),
    },
    ProblemCatalogEntry {
        label: "scsc",
        notes: "f(x,y) = x^2/2 + xy - y^2/2; linear rate theta = 0.6, alpha = 1",
        default_regime: RegimeSpec::LinearRate {
            theta: 0.6,
            alpha: 1.0,
        },
        builder: || strongly_convex_strongly_concave(1.0, 1.0),
    },
    ProblemCatalogEntry {
        label: "counterexample",
        notes: "f(x,y) = xy with the adversarial schedule, epsilon = 0.1",
        default_regime: RegimeSpec::Adversarial { epsilon: 0.1 },
        builder: || Ok(bilinear_scalar()),
    },
];

pub fn catalog() -> &'static [ProblemCatalogEntry] {
    &CATALOG
}

pub fn lookup(label: &str) -> Result<&'static ProblemCatalogEntry> {
    CATALOG.iter().find(|e| e.label == label).ok_or_else(|| {
        let known: Vec<_> = CATALOG.iter().map(|e| e.label).collect();
        Error::InvalidArgument(format!(
            "unknown problem '{label}' (expected one of: {})",
            known.join(", ")
        ))
    })
}

/// One instance of every catalog entry, paired with its label.
pub fn catalog_problems() -> Vec<(&'static str, SaddleProblem)> {
    CATALOG
        .iter()
        .map(|e| (e.label, e.build().expect("catalog entries are well formed")))
        .collect()
}
