//! Special functions used by the analytic propensity formulas.

use statrs::function::beta;

/// Standard normal CDF.
pub fn normal_cdf(x: f64) -> f64 {
    0.5 * libm::erfc(-x / std::f64::consts::SQRT_2)
}

/// Regularized incomplete beta `I_x(a, b)`; `a, b > 0`, `x ∈ [0, 1]`.
pub fn reg_inc_beta(a: f64, b: f64, x: f64) -> Option<f64> {
    beta::checked_beta_reg(a, b, x).ok()
}
