use crate::model::{DualPoint, PrimalPoint};

/// Points entering the rate bounds at iteration `k`.
#[derive(Debug, Clone, Copy)]
pub struct BoundInputs<'a> {
    pub k: usize,
    pub x0: &'a PrimalPoint,
    pub y0: &'a DualPoint,
    pub xstar: &'a PrimalPoint,
    pub ystar: &'a DualPoint,
    pub xhat: &'a PrimalPoint,
    pub yhat: &'a DualPoint,
}

/// `lower ≤ f(x̂_k, ŷ_k) − f* ≤ upper`.
///
/// `lower_printed` uses `−c(X − Y)` in place of `−c(X + Y)`; it is recorded but
/// not asserted, since it can exceed `upper`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Sandwich {
    pub lower: f64,
    pub upper: f64,
    pub lower_printed: f64,
}

impl Sandwich {
    pub fn contains(&self, value: f64, tol: f64) -> bool {
        let scale = 1.0 + value.abs() + self.lower.abs().max(self.upper.abs());
        value >= self.lower - tol * scale && value <= self.upper + tol * scale
    }

    pub fn printed_contains(&self, value: f64, tol: f64) -> bool {
        let scale = 1.0 + value.abs() + self.lower_printed.abs().max(self.upper.abs());
        value >= self.lower_printed - tol * scale
    }
}

fn sandwich(factor: f64, wx: f64, wy: f64, b: &BoundInputs<'_>) -> Sandwich {
    let upper =
        factor * (wx * (b.xstar - b.x0).norm_squared() + wy * (b.yhat - b.y0).norm_squared());
    let lx = wx * (b.xhat - b.x0).norm_squared();
    let ly = wy * (b.ystar - b.y0).norm_squared();
    Sandwich {
        lower: -factor * (lx + ly),
        upper,
        lower_printed: -factor * (lx - ly),
    }
}

/// Constant steps with `t_k ≡ 1`: factor `1/k`, weights `1/(2τ)`, `1/(2σ)`.
pub fn bound_convex_concave(b: &BoundInputs<'_>, tau: f64, sigma: f64) -> Sandwich {
    let s = sandwich(1.0 / b.k as f64, 0.5 / tau, 0.5 / sigma, b);
    // the constant-step statement already carries the plus sign
    Sandwich {
        lower_printed: s.lower,
        ..s
    }
}

/// Accelerated steps, `k ≥ 2`: factor `6/(νσ_0k²)`, weights `1/τ_0`, `1/σ_0`.
pub fn bound_convex_strongly_concave(
    b: &BoundInputs<'_>,
    nu: f64,
    tau0: f64,
    sigma0: f64,
) -> Sandwich {
    let k = b.k as f64;
    sandwich(6.0 / (nu * sigma0 * k * k), 1.0 / tau0, 1.0 / sigma0, b)
}

/// Linear-rate steps: factor `θ^{k−1}`, weights `1/(2τ)`, `1/(2σ)`.
pub fn bound_linear(b: &BoundInputs<'_>, theta: f64, tau: f64, sigma: f64) -> Sandwich {
    let factor = theta.powf(b.k as f64 - 1.0);
    sandwich(factor, 0.5 / tau, 0.5 / sigma, b)
}
