use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::{DecisionRule, RuleSpec};
use crate::error::{Error, Result};
use crate::special::normal_cdf;

type Scalar = dyn Fn(&[f64]) -> f64 + Send + Sync;

/// Real-valued function of the continuous covariates, used for the bandit
/// rules' means and standard deviations.
///
/// Config files can only express the constant, affine and quadratic forms;
/// `Custom` is for programmatic use.
#[derive(Clone, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScalarFn {
    Constant(f64),
    /// `w·x + b`
    Affine { weights: Vec<f64>, offset: f64 },
    /// `x'Qx + w·x + b` with `Q` given row-major.
    Quadratic {
        matrix: Vec<f64>,
        weights: Vec<f64>,
        offset: f64,
    },
    #[serde(skip)]
    Custom(Arc<Scalar>),
}

impl fmt::Debug for ScalarFn {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ScalarFn::Constant(c) => f.debug_tuple("Constant").field(c).finish(),
            ScalarFn::Affine { weights, offset } => f
                .debug_struct("Affine")
                .field("weights", weights)
                .field("offset", offset)
                .finish(),
            ScalarFn::Quadratic {
                matrix,
                weights,
                offset,
            } => f
                .debug_struct("Quadratic")
                .field("matrix", matrix)
                .field("weights", weights)
                .field("offset", offset)
                .finish(),
            ScalarFn::Custom(_) => f.write_str("Custom(..)"),
        }
    }
}

impl ScalarFn {
    pub fn custom(f: impl Fn(&[f64]) -> f64 + Send + Sync + 'static) -> Self {
        ScalarFn::Custom(Arc::new(f))
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        match self {
            ScalarFn::Constant(c) => *c,
            ScalarFn::Affine { weights, offset } => dot(weights, x) + offset,
            ScalarFn::Quadratic {
                matrix,
                weights,
                offset,
            } => {
                let p = x.len();
                let mut quad = 0.0;
                for i in 0..p {
                    quad += x[i] * dot(&matrix[i * p..(i + 1) * p], x);
                }
                quad + dot(weights, x) + offset
            }
            ScalarFn::Custom(f) => f(x),
        }
    }

    /// Multiplies the function by a constant.
    pub fn scaled(&self, k: f64) -> ScalarFn {
        match self {
            ScalarFn::Constant(c) => ScalarFn::Constant(k * c),
            ScalarFn::Affine { weights, offset } => ScalarFn::Affine {
                weights: weights.iter().map(|w| k * w).collect(),
                offset: k * offset,
            },
            ScalarFn::Quadratic {
                matrix,
                weights,
                offset,
            } => ScalarFn::Quadratic {
                matrix: matrix.iter().map(|w| k * w).collect(),
                weights: weights.iter().map(|w| k * w).collect(),
                offset: k * offset,
            },
            ScalarFn::Custom(f) => {
                let f = Arc::clone(f);
                ScalarFn::custom(move |x| k * f(x))
            }
        }
    }

    fn check_dim(&self, dim: usize) -> Result<()> {
        let ok = match self {
            ScalarFn::Constant(_) | ScalarFn::Custom(_) => true,
            ScalarFn::Affine { weights, .. } => weights.len() == dim,
            ScalarFn::Quadratic {
                matrix, weights, ..
            } => weights.len() == dim && matrix.len() == dim * dim,
        };
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidParameter(format!(
                "function {self:?} does not match dimension {dim}"
            )))
        }
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Thompson sampling with independent Gaussian posteriors:
/// `A(x) = 1 − Φ((μ0(x) − μ1(x)) / √(σ0(x)² + σ1(x)²))`.
///
/// The rule is continuous, so its limiting APS equals `A(x)` everywhere.
#[derive(Debug, Clone)]
pub struct ThompsonRule {
    dim: usize,
    mu0: ScalarFn,
    mu1: ScalarFn,
    sigma0: ScalarFn,
    sigma1: ScalarFn,
}

/// Builds a [`ThompsonRule`].
///
/// Positivity of `σ0, σ1` is the caller's obligation on the covariate domain;
/// construction rejects a nonpositive standard deviation at the origin (the
/// center of standardized data). Use [`ThompsonRule::validate_on`] to check a
/// concrete set of points.
pub fn thompson_gaussian_rule(
    dim: usize,
    mu0: ScalarFn,
    mu1: ScalarFn,
    sigma0: ScalarFn,
    sigma1: ScalarFn,
) -> Result<ThompsonRule> {
    for f in [&mu0, &mu1, &sigma0, &sigma1] {
        f.check_dim(dim)?;
    }
    let rule = ThompsonRule {
        dim,
        mu0,
        mu1,
        sigma0,
        sigma1,
    };
    rule.validate_point(&vec![0.0; dim])?;
    Ok(rule)
}

impl ThompsonRule {
    fn validate_point(&self, x: &[f64]) -> Result<()> {
        for (name, f) in [("sigma0", &self.sigma0), ("sigma1", &self.sigma1)] {
            let s = f.eval(x);
            if !(s > 0.0) {
                return Err(Error::NonpositiveVariance(format!("{name}({x:?}) = {s}")));
            }
        }
        Ok(())
    }

    /// Checks `σ0, σ1 > 0` at each of the given covariate rows.
    pub fn validate_on<'a>(&self, points: impl IntoIterator<Item = &'a [f64]>) -> Result<()> {
        points.into_iter().try_for_each(|x| self.validate_point(x))
    }
}

impl DecisionRule for ThompsonRule {
    fn cont_dim(&self) -> usize {
        self.dim
    }

    fn evaluate(&self, x: &[f64], _: &[i64]) -> f64 {
        let gap = self.mu0.eval(x) - self.mu1.eval(x);
        let s0 = self.sigma0.eval(x);
        let s1 = self.sigma1.eval(x);
        let scale = (s0 * s0 + s1 * s1).sqrt();
        if scale > 0.0 {
            1.0 - normal_cdf(gap / scale)
        } else {
            // no posterior uncertainty: the larger mean wins
            match gap.partial_cmp(&0.0) {
                Some(std::cmp::Ordering::Less) => 1.0,
                Some(std::cmp::Ordering::Greater) => 0.0,
                _ => 0.5,
            }
        }
    }

    fn aps_limit(&self, x: &[f64], xd: &[i64]) -> Option<f64> {
        Some(self.evaluate(x, xd))
    }

    fn descriptor(&self) -> Option<RuleSpec> {
        if [&self.mu0, &self.mu1, &self.sigma0, &self.sigma1]
            .iter()
            .any(|f| matches!(f, ScalarFn::Custom(_)))
        {
            return None;
        }
        Some(RuleSpec::Thompson {
            dim: self.dim,
            mu0: self.mu0.clone(),
            mu1: self.mu1.clone(),
            sigma0: self.sigma0.clone(),
            sigma1: self.sigma1.clone(),
        })
    }
}

/// Upper-confidence-bound rule: `A(x) = 1{μ1 + ασ1 > μ0 + ασ0}`.
///
/// The limiting APS is 0.5 on the tie set `g(x) = 0` where
/// `g = μ1 − μ0 + α(σ1 − σ0)`, and `A(x)` elsewhere. The half-half split on
/// the tie set presumes `∇g ≠ 0` there, which is not checked.
#[derive(Debug, Clone)]
pub struct UcbRule {
    dim: usize,
    mu0: ScalarFn,
    mu1: ScalarFn,
    sigma0: ScalarFn,
    sigma1: ScalarFn,
    alpha: f64,
}

pub fn ucb_rule(
    dim: usize,
    mu0: ScalarFn,
    mu1: ScalarFn,
    sigma0: ScalarFn,
    sigma1: ScalarFn,
    alpha: f64,
) -> Result<UcbRule> {
    if !(alpha >= 0.0) || !alpha.is_finite() {
        return Err(Error::InvalidParameter(format!("alpha = {alpha} must be ≥ 0")));
    }
    for f in [&mu0, &mu1, &sigma0, &sigma1] {
        f.check_dim(dim)?;
    }
    Ok(UcbRule {
        dim,
        mu0,
        mu1,
        sigma0,
        sigma1,
        alpha,
    })
}

impl UcbRule {
    /// `(g(x), scale)` where `scale` bounds the magnitude of the summands.
    fn gap(&self, x: &[f64]) -> (f64, f64) {
        let up1 = self.mu1.eval(x) + self.alpha * self.sigma1.eval(x);
        let up0 = self.mu0.eval(x) + self.alpha * self.sigma0.eval(x);
        (up1 - up0, up1.abs().max(up0.abs()))
    }
}

impl DecisionRule for UcbRule {
    fn cont_dim(&self) -> usize {
        self.dim
    }

    fn evaluate(&self, x: &[f64], _: &[i64]) -> f64 {
        if self.gap(x).0 > 0.0 {
            1.0
        } else {
            0.0
        }
    }

    fn aps_limit(&self, x: &[f64], _: &[i64]) -> Option<f64> {
        let (g, scale) = self.gap(x);
        if g.abs() <= 1e-12 * scale {
            Some(0.5)
        } else if g > 0.0 {
            Some(1.0)
        } else {
            Some(0.0)
        }
    }

    fn descriptor(&self) -> Option<RuleSpec> {
        if [&self.mu0, &self.mu1, &self.sigma0, &self.sigma1]
            .iter()
            .any(|f| matches!(f, ScalarFn::Custom(_)))
        {
            return None;
        }
        Some(RuleSpec::Ucb {
            dim: self.dim,
            mu0: self.mu0.clone(),
            mu1: self.mu1.clone(),
            sigma0: self.sigma0.clone(),
            sigma1: self.sigma1.clone(),
            alpha: self.alpha,
        })
    }
}
