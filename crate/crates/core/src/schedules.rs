//! Per-iteration parameter sequences `(σ_k, τ_k, θ_k, t_k, α_k)`.
//!
//! Four regimes are supported:
//!
//! * **constant**: `θ_k ≡ 1`, constant `σ`, `τ`; ergodic weights `t_k ≡ 1`.
//! * **accelerated**: `θ_0 = 1`, `θ_{k+1} = 1/√(1 + νσ_k)`, `τ_{k+1} = τ_k/θ_{k+1}`,
//!   `σ_{k+1} = θ_{k+1}σ_k`; weights `t_k = τ_k/τ_0`.
//! * **linear**: constant `θ ∈ (θ̃, 1)` with `σ = (1−θ)/(νθ)`, `τ = (1−θ)/(μθ)`;
//!   weights `t_k = θ^{−k}`.
//! * **adversarial**: `σ_k = θ_k = ε` and `τ_k = ε/(y^{k+1}(k+1)²)`, chosen after
//!   the dual update; weights `t_k ≡ 1`.
//!
//! Weights are kept as [`ScaledWeight`] so that `θ^{−k}` never overflows.

use std::cmp::Ordering;
use std::f64::consts::PI;
use std::fmt;
use std::ops::Add;

use serde::{Deserialize, Serialize};

use crate::model::RegularityConstants;
use crate::{Error, Result};

/// `|y^{k+1}|` at or below this value selects the `τ_k = 0` branch of the
/// adversarial schedule.
pub const ADVERSARIAL_ZERO_GUARD: f64 = 1e-300;

/// Upper end of the admissible `ε` range for the adversarial schedule, `3/π²`.
pub fn adversarial_epsilon_cap() -> f64 {
    3.0 / (PI * PI)
}

/// `(9 + 3√13)/(2ν)`, the largest admissible `σ_0` in the accelerated regime.
pub fn accelerated_sigma0_cap(nu: f64) -> f64 {
    (9.0 + 3.0 * 13f64.sqrt()) / (2.0 * nu)
}

/// A positive real stored as `mantissa · 2^exponent` with `mantissa ∈ [1, 2)`.
///
/// Multiplication and division by finite factors only touch the mantissa and
/// rescale by exact powers of two, so values such as `0.6^{−10000}` keep full
/// double precision in their ratios.
#[derive(Clone, Copy, PartialEq)]
pub struct ScaledWeight {
    mantissa: f64,
    exponent: i64,
}

fn split(v: f64) -> (f64, i64) {
    debug_assert!(v.is_finite() && v > 0.0);
    let (v, bias) = if v < f64::MIN_POSITIVE {
        (v * 2f64.powi(64), -64)
    } else {
        (v, 0)
    };
    let bits = v.to_bits();
    let exp = ((bits >> 52) & 0x7ff) as i64 - 1023;
    let mantissa = f64::from_bits((bits & !(0x7ffu64 << 52)) | (1023u64 << 52));
    (mantissa, exp + bias)
}

/// `2^e` for any integer `e`, saturating to `0` / `inf` outside the f64 range.
fn pow2(e: i64) -> f64 {
    if e > 1023 {
        f64::INFINITY
    } else if e < -1074 {
        0.0
    } else if e < -1022 {
        // subnormal: split the scaling so each factor stays exact
        2f64.powi(-1022) * 2f64.powi((e + 1022) as i32)
    } else {
        f64::from_bits(((e + 1023) as u64) << 52)
    }
}

impl ScaledWeight {
    pub const ONE: ScaledWeight = ScaledWeight {
        mantissa: 1.0,
        exponent: 0,
    };

    pub fn new(v: f64) -> Result<Self> {
        if !(v.is_finite() && v > 0.0) {
            return Err(Error::InvalidArgument(format!(
                "weight must be finite and positive, got {v}"
            )));
        }
        let (mantissa, exponent) = split(v);
        Ok(Self { mantissa, exponent })
    }

    /// `self · factor` for a finite positive factor.
    pub fn scale(self, factor: f64) -> Self {
        let (m, e) = split(self.mantissa * factor);
        Self {
            mantissa: m,
            exponent: self.exponent + e,
        }
    }

    /// `self / other` as an ordinary float (may overflow to `inf` or underflow to `0`).
    pub fn ratio(self, other: ScaledWeight) -> f64 {
        (self.mantissa / other.mantissa) * pow2(self.exponent - other.exponent)
    }

    /// The value as an ordinary float; `inf` once it exceeds the f64 range.
    pub fn to_f64(self) -> f64 {
        self.mantissa * pow2(self.exponent)
    }

    pub fn ln(self) -> f64 {
        self.mantissa.ln() + self.exponent as f64 * std::f64::consts::LN_2
    }
}

impl Add for ScaledWeight {
    type Output = ScaledWeight;

    fn add(self, rhs: ScaledWeight) -> ScaledWeight {
        let (big, small) = if self.exponent >= rhs.exponent {
            (self, rhs)
        } else {
            (rhs, self)
        };
        let aligned = small.mantissa * pow2(small.exponent - big.exponent);
        let (m, e) = split(big.mantissa + aligned);
        ScaledWeight {
            mantissa: m,
            exponent: big.exponent + e,
        }
    }
}

impl PartialOrd for ScaledWeight {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        match self.exponent.cmp(&other.exponent) {
            Ordering::Equal => self.mantissa.partial_cmp(&other.mantissa),
            ord => Some(ord),
        }
    }
}

impl fmt::Debug for ScaledWeight {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}·2^{}", self.mantissa, self.exponent)
    }
}

/// Parameter regime, validated by [`Schedule::new`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum RegimeSpec {
    /// `θ_k ≡ 1` with constant steps; the convex–concave setting.
    ConstantUnit { tau: f64, sigma: f64, c_alpha: f64 },
    /// `θ_0 = 1` and the `θ_{k+1} = 1/√(1+νσ_k)` recursion; needs `ν > 0`.
    Accelerated {
        tau0: f64,
        sigma0: f64,
        c_alpha: f64,
    },
    /// Constant `θ ∈ (θ̃, 1)`; needs `μ, ν > 0`.
    LinearRate { theta: f64, alpha: f64 },
    /// `σ_k = θ_k = ε` with `τ_k` chosen from `y^{k+1}`.
    Adversarial { epsilon: f64 },
}

impl RegimeSpec {
    pub fn name(&self) -> &'static str {
        match self {
            Self::ConstantUnit { .. } => "constant",
            Self::Accelerated { .. } => "accelerated",
            Self::LinearRate { .. } => "linear",
            Self::Adversarial { .. } => "adversarial",
        }
    }

    /// True for the regimes covered by the `a_k`, `b_{k+1}`, `c_k` certificate.
    pub fn has_certificate(&self) -> bool {
        matches!(self, Self::ConstantUnit { .. } | Self::Accelerated { .. })
    }
}

/// Parameters in force at iteration `k`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScheduleState {
    pub k: usize,
    pub sigma: f64,
    /// `NaN` for the adversarial regime until the dual update fixes it.
    pub tau: f64,
    pub theta: f64,
    /// Ergodic weight `t_k`.
    pub weight: ScaledWeight,
    /// `α_k`; `NaN` where the regime does not define it.
    pub alpha: f64,
    /// `c_α` for the regimes that use it, else `NaN`.
    pub c_alpha: f64,
    /// `δ`; `NaN` outside the constant and accelerated regimes.
    pub delta: f64,
}

impl ScheduleState {
    /// `t_k` as a float (may be `inf` deep into the linear regime).
    pub fn t_k(&self) -> f64 {
        self.weight.to_f64()
    }

    /// `α_{k+1} = c_α τ_k` in the constant and accelerated regimes.
    pub fn next_alpha(&self) -> f64 {
        self.c_alpha * self.tau
    }
}

/// Default `c_α`: `2 L_yx` when `L_yx > 0`, else `1`.
pub fn default_c_alpha(l_yx: f64) -> f64 {
    if l_yx > 0.0 {
        2.0 * l_yx
    } else {
        1.0
    }
}

/// Default `σ = τ = 0.9/√(c_α L_yx + 2L_yy)` (or `1` if the denominator vanishes).
pub fn default_constant_steps(c_alpha: f64, l_yx: f64, l_yy: f64) -> f64 {
    let d = c_alpha * l_yx + 2.0 * l_yy;
    if d > 0.0 {
        0.9 / d.sqrt()
    } else {
        1.0
    }
}

fn positive(name: &str, v: f64) -> Result<()> {
    if v.is_finite() && v > 0.0 {
        Ok(())
    } else {
        Err(Error::ConstraintViolated(format!(
            "{name} must be positive, got {v}"
        )))
    }
}

fn delta_for(tau0: f64, sigma0: f64, c_alpha: f64, l_yx: f64, l_yy: f64) -> Result<f64> {
    positive("tau", tau0)?;
    positive("sigma", sigma0)?;
    if c_alpha.is_nan() || c_alpha <= l_yx {
        return Err(Error::ConstraintViolated(format!(
            "c_alpha = {c_alpha} must exceed L_yx = {l_yx}"
        )));
    }
    let coupling = (c_alpha * l_yx * tau0 + 2.0 * l_yy) * sigma0;
    if coupling >= 1.0 {
        return Err(Error::ConstraintViolated(format!(
            "(c_alpha L_yx tau + 2 L_yy) sigma = {coupling} must be < 1"
        )));
    }
    Ok((1.0 - l_yx / c_alpha).min(1.0 - coupling))
}

/// Checks the constant-step conditions and returns `δ`.
pub fn validate_constant_unit(
    tau: f64,
    sigma: f64,
    c_alpha: f64,
    l_yx: f64,
    l_yy: f64,
) -> Result<f64> {
    delta_for(tau, sigma, c_alpha, l_yx, l_yy)
}

/// Checks the accelerated-regime conditions (including the `σ_0` cap) and returns `δ`.
pub fn validate_accelerated(
    tau0: f64,
    sigma0: f64,
    c_alpha: f64,
    l_yx: f64,
    l_yy: f64,
    nu: f64,
) -> Result<f64> {
    if nu.is_nan() || nu <= 0.0 {
        return Err(Error::ConstraintViolated(format!(
            "accelerated regime needs nu > 0, got {nu}"
        )));
    }
    let delta = delta_for(tau0, sigma0, c_alpha, l_yx, l_yy)?;
    let cap = accelerated_sigma0_cap(nu);
    if sigma0 > cap {
        return Err(Error::ConstraintViolated(format!(
            "sigma0 = {sigma0} exceeds (9 + 3 sqrt 13)/(2 nu) = {cap}"
        )));
    }
    Ok(delta)
}

/// One step of the accelerated recursion.
pub fn advance_accelerated(state: &ScheduleState, nu: f64) -> ScheduleState {
    let theta = 1.0 / (1.0 + nu * state.sigma).sqrt();
    ScheduleState {
        k: state.k + 1,
        sigma: theta * state.sigma,
        tau: state.tau / theta,
        theta,
        weight: state.weight.scale(1.0 / theta),
        alpha: state.c_alpha * state.tau,
        c_alpha: state.c_alpha,
        delta: state.delta,
    }
}

/// `θ̃ = max{L_yx/(αμ + L_yx), (αL_yx + 2L_yy)/(ν + αL_yx + 2L_yy)}`.
pub fn theta_tilde(alpha: f64, mu: f64, nu: f64, l_yx: f64, l_yy: f64) -> f64 {
    let first = l_yx / (alpha * mu + l_yx);
    let coupled = alpha * l_yx + 2.0 * l_yy;
    let second = coupled / (nu + coupled);
    first.max(second)
}

/// `(σ, τ) = ((1−θ)/(νθ), (1−θ)/(μθ))` for `θ ∈ (θ̃, 1)`.
pub fn linear_rate_params(theta: f64, theta_tilde: f64, mu: f64, nu: f64) -> Result<(f64, f64)> {
    positive("mu", mu)?;
    positive("nu", nu)?;
    if !(theta > theta_tilde && theta < 1.0) {
        return Err(Error::ConstraintViolated(format!(
            "theta = {theta} must lie in (theta_tilde, 1) = ({theta_tilde}, 1)"
        )));
    }
    let r = (1.0 - theta) / theta;
    Ok((r / nu, r / mu))
}

/// `τ_k = ε/(y^{k+1}(k+1)²)`, or `0` when `|y^{k+1}|` is below the zero guard.
pub fn adversarial_tau(epsilon: f64, k: usize, y_next: f64) -> f64 {
    if y_next.abs() > ADVERSARIAL_ZERO_GUARD {
        let kk = (k + 1) as f64;
        epsilon / (y_next * kk * kk)
    } else {
        0.0
    }
}

pub fn validate_epsilon(epsilon: f64) -> Result<()> {
    if epsilon > 0.0 && epsilon < adversarial_epsilon_cap() {
        Ok(())
    } else {
        Err(Error::EpsilonOutOfRange(epsilon))
    }
}

/// Generator for the parameter sequence of one regime.
#[derive(Debug, Clone)]
pub struct Schedule {
    regime: RegimeSpec,
    nu: f64,
    current: ScheduleState,
}

impl Schedule {
    pub fn new(regime: RegimeSpec, constants: &RegularityConstants) -> Result<Self> {
        let RegularityConstants { l_yx, l_yy, mu, nu } = *constants;
        let current = match regime {
            RegimeSpec::ConstantUnit {
                tau,
                sigma,
                c_alpha,
            } => {
                let delta = validate_constant_unit(tau, sigma, c_alpha, l_yx, l_yy)?;
                ScheduleState {
                    k: 0,
                    sigma,
                    tau,
                    theta: 1.0,
                    weight: ScaledWeight::ONE,
                    alpha: c_alpha * tau,
                    c_alpha,
                    delta,
                }
            }
            RegimeSpec::Accelerated {
                tau0,
                sigma0,
                c_alpha,
            } => {
                let delta = validate_accelerated(tau0, sigma0, c_alpha, l_yx, l_yy, nu)?;
                ScheduleState {
                    k: 0,
                    sigma: sigma0,
                    tau: tau0,
                    theta: 1.0,
                    weight: ScaledWeight::ONE,
                    alpha: c_alpha * tau0,
                    c_alpha,
                    delta,
                }
            }
            RegimeSpec::LinearRate { theta, alpha } => {
                positive("alpha", alpha)?;
                positive("mu", mu)?;
                positive("nu", nu)?;
                let tt = theta_tilde(alpha, mu, nu, l_yx, l_yy);
                let (sigma, tau) = linear_rate_params(theta, tt, mu, nu)?;
                ScheduleState {
                    k: 0,
                    sigma,
                    tau,
                    theta,
                    weight: ScaledWeight::ONE,
                    alpha,
                    c_alpha: f64::NAN,
                    delta: f64::NAN,
                }
            }
            RegimeSpec::Adversarial { epsilon } => {
                validate_epsilon(epsilon)?;
                ScheduleState {
                    k: 0,
                    sigma: epsilon,
                    tau: f64::NAN,
                    theta: epsilon,
                    weight: ScaledWeight::ONE,
                    alpha: f64::NAN,
                    c_alpha: f64::NAN,
                    delta: f64::NAN,
                }
            }
        };
        Ok(Self {
            regime,
            nu,
            current,
        })
    }

    pub fn regime(&self) -> &RegimeSpec {
        &self.regime
    }

    pub fn state(&self) -> &ScheduleState {
        &self.current
    }

    /// Parameters for iteration `k + 1`.
    pub fn peek_next(&self) -> ScheduleState {
        let s = &self.current;
        match self.regime {
            RegimeSpec::Accelerated { .. } => advance_accelerated(s, self.nu),
            RegimeSpec::LinearRate { theta, .. } => ScheduleState {
                k: s.k + 1,
                weight: s.weight.scale(1.0 / theta),
                ..*s
            },
            RegimeSpec::ConstantUnit { .. } | RegimeSpec::Adversarial { .. } => {
                ScheduleState { k: s.k + 1, ..*s }
            }
        }
    }

    pub fn advance(&mut self) {
        self.current = self.peek_next();
    }
}

impl Iterator for Schedule {
    type Item = ScheduleState;

    fn next(&mut self) -> Option<ScheduleState> {
        let out = self.current;
        self.advance();
        Some(out)
    }
}
