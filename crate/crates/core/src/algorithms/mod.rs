//! Decision rules `A: covariates → [0, 1]`.
//!
//! A rule returns the probability that an observation with the given
//! covariates is recommended treatment. Builtins may also expose the
//! limiting APS in closed form, the fixed-bandwidth APS in closed form, and a
//! cheap test for "the rule is constant on this box", which lets the APS
//! engine skip simulation where the answer is already determined.

mod affine;
mod band;
mod bandit;
mod cares;
mod kmeans;
mod quadrant;
mod spec;

use std::fmt;
use std::sync::Arc;

pub use affine::{AffineThresholdRule, Combinator, Condition, Direction};
pub use band::BandRule;
pub use bandit::{thompson_gaussian_rule, ucb_rule, ScalarFn, ThompsonRule, UcbRule};
pub use cares::{
    cares_funding, cares_rule, cares_rule_and_funding, CaresThresholds, FundingFormula, Hospital,
};
pub use kmeans::{kmeans_target_rule, KMeansRule};
pub use quadrant::{tree_rule_quadrant, QuadrantTreeRule};
pub use spec::RuleSpec;

use crate::error::{Error, Result};

/// A recommendation algorithm evaluated on one observation's covariates.
///
/// Implementations must be deterministic and return values in `[0, 1]`.
pub trait DecisionRule: Send + Sync + fmt::Debug {
    /// Number of continuous covariates the rule reads.
    fn cont_dim(&self) -> usize;

    /// Number of discrete covariates the rule reads (0 if it ignores them).
    fn disc_dim(&self) -> usize {
        0
    }

    fn evaluate(&self, x_cont: &[f64], x_disc: &[i64]) -> f64;

    /// Limit of the ball average as the bandwidth shrinks, where known.
    fn aps_limit(&self, _x_cont: &[f64], _x_disc: &[i64]) -> Option<f64> {
        None
    }

    /// Exact average of the rule over the open ball `B(x, delta)`, where known.
    fn aps_fixed(&self, _x_cont: &[f64], _x_disc: &[i64], _delta: f64) -> Option<f64> {
        None
    }

    /// `Some(a)` only if the rule equals `a` at every point of the box
    /// `[center − half_width, center + half_width]`. Returning `None` is
    /// always correct.
    fn constant_on_box(&self, _center: &[f64], _half_width: &[f64], _x_disc: &[i64]) -> Option<f64> {
        None
    }

    /// Serializable description, for rules built from a config file.
    fn descriptor(&self) -> Option<RuleSpec> {
        None
    }
}

pub type SharedRule = Arc<dyn DecisionRule>;

/// Evaluates `rule` after checking the covariate dimensions.
pub fn eval_rule(rule: &dyn DecisionRule, x_cont: &[f64], x_disc: &[i64]) -> Result<f64> {
    check_dims(rule, x_cont.len(), x_disc.len())?;
    Ok(rule.evaluate(x_cont, x_disc))
}

pub(crate) fn check_dims(rule: &dyn DecisionRule, p_cont: usize, p_disc: usize) -> Result<()> {
    if rule.cont_dim() != p_cont {
        return Err(Error::DimensionMismatch {
            what: "continuous covariates",
            expected: rule.cont_dim(),
            found: p_cont,
        });
    }
    if rule.disc_dim() != 0 && rule.disc_dim() != p_disc {
        return Err(Error::DimensionMismatch {
            what: "discrete covariates",
            expected: rule.disc_dim(),
            found: p_disc,
        });
    }
    Ok(())
}

pub(crate) fn check_prob(name: &str, q: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&q) {
        return Err(Error::InvalidParameter(format!("{name} = {q} is not in [0, 1]")));
    }
    Ok(())
}

/// A rule that returns the same probability everywhere.
#[derive(Debug, Clone, PartialEq)]
pub struct ConstantRule {
    pub dim: usize,
    pub value: f64,
}

impl ConstantRule {
    pub fn new(dim: usize, value: f64) -> Result<Self> {
        check_prob("value", value)?;
        Ok(Self { dim, value })
    }
}

impl DecisionRule for ConstantRule {
    fn cont_dim(&self) -> usize {
        self.dim
    }

    fn evaluate(&self, _: &[f64], _: &[i64]) -> f64 {
        self.value
    }

    fn aps_limit(&self, _: &[f64], _: &[i64]) -> Option<f64> {
        Some(self.value)
    }

    fn aps_fixed(&self, _: &[f64], _: &[i64], _: f64) -> Option<f64> {
        Some(self.value)
    }

    fn constant_on_box(&self, _: &[f64], _: &[f64], _: &[i64]) -> Option<f64> {
        Some(self.value)
    }

    fn descriptor(&self) -> Option<RuleSpec> {
        Some(RuleSpec::Constant {
            dim: self.dim,
            value: self.value,
        })
    }
}

type RuleFn = dyn Fn(&[f64], &[i64]) -> f64 + Send + Sync;

/// Plugin rule backed by an arbitrary closure. The closure's output is
/// clamped to `[0, 1]`.
#[derive(Clone)]
pub struct FnRule {
    cont_dim: usize,
    disc_dim: usize,
    f: Arc<RuleFn>,
}

impl FnRule {
    pub fn new(
        cont_dim: usize,
        disc_dim: usize,
        f: impl Fn(&[f64], &[i64]) -> f64 + Send + Sync + 'static,
    ) -> Self {
        Self {
            cont_dim,
            disc_dim,
            f: Arc::new(f),
        }
    }
}

impl fmt::Debug for FnRule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("FnRule")
            .field("cont_dim", &self.cont_dim)
            .field("disc_dim", &self.disc_dim)
            .finish_non_exhaustive()
    }
}

impl DecisionRule for FnRule {
    fn cont_dim(&self) -> usize {
        self.cont_dim
    }

    fn disc_dim(&self) -> usize {
        self.disc_dim
    }

    fn evaluate(&self, x_cont: &[f64], x_disc: &[i64]) -> f64 {
        (self.f)(x_cont, x_disc).clamp(0.0, 1.0)
    }
}

/// Slack added to box half-widths before constancy checks, so a point that
/// lands on the box edge after rounding is still covered.
pub(crate) fn inflate(center: f64, half_width: f64) -> f64 {
    half_width * (1.0 + 1e-9) + 1e-12 * center.abs()
}
