use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::{
    cares_rule, kmeans_target_rule, thompson_gaussian_rule, tree_rule_quadrant, ucb_rule,
    AffineThresholdRule, BandRule, CaresThresholds, Combinator, Condition, ConstantRule,
    Direction, ScalarFn, SharedRule,
};
use crate::error::Result;

fn one() -> f64 {
    1.0
}

fn half() -> f64 {
    0.5
}

/// Declarative rule description, as found in config files under a `kind` tag.
///
/// Coordinates are 0-based indices into the continuous covariates.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum RuleSpec {
    Constant {
        dim: usize,
        value: f64,
    },
    /// `x_coord ≥ cutoff` (or `≤`) on one coordinate.
    Threshold {
        dim: usize,
        coord: usize,
        cutoff: f64,
        #[serde(default)]
        direction: Direction,
        #[serde(default = "one")]
        inside_prob: f64,
        #[serde(default)]
        outside_prob: f64,
    },
    AffineAnd {
        dim: usize,
        conditions: Vec<Condition>,
        #[serde(default)]
        combinator: Combinator,
        #[serde(default = "one")]
        inside_prob: f64,
        #[serde(default)]
        outside_prob: f64,
    },
    EpsilonBand {
        coord: usize,
        lower: f64,
        upper: f64,
        #[serde(default = "half")]
        inside_prob: f64,
        base: Box<RuleSpec>,
    },
    Thompson {
        dim: usize,
        mu0: ScalarFn,
        mu1: ScalarFn,
        sigma0: ScalarFn,
        sigma1: ScalarFn,
    },
    Ucb {
        dim: usize,
        mu0: ScalarFn,
        mu1: ScalarFn,
        sigma0: ScalarFn,
        sigma1: ScalarFn,
        alpha: f64,
    },
    Kmeans {
        centroids: Vec<Vec<f64>>,
        targets: Vec<usize>,
    },
    QuadrantTree {
        q1: f64,
        q2: f64,
    },
    Cares {
        #[serde(flatten)]
        thresholds: CaresThresholds,
    },
}

impl RuleSpec {
    pub fn build(&self) -> Result<SharedRule> {
        Ok(match self {
            RuleSpec::Constant { dim, value } => Arc::new(ConstantRule::new(*dim, *value)?),
            RuleSpec::Threshold {
                dim,
                coord,
                cutoff,
                direction,
                inside_prob,
                outside_prob,
            } => {
                if *coord >= *dim {
                    return Err(crate::Error::Config(format!(
                        "threshold coordinate {coord} out of range for dimension {dim}"
                    )));
                }
                Arc::new(AffineThresholdRule::new(
                    *dim,
                    vec![Condition::on_coordinate(*dim, *coord, *cutoff, *direction)],
                    Combinator::And,
                    *inside_prob,
                    *outside_prob,
                )?)
            }
            RuleSpec::AffineAnd {
                dim,
                conditions,
                combinator,
                inside_prob,
                outside_prob,
            } => Arc::new(AffineThresholdRule::new(
                *dim,
                conditions.clone(),
                *combinator,
                *inside_prob,
                *outside_prob,
            )?),
            RuleSpec::EpsilonBand {
                coord,
                lower,
                upper,
                inside_prob,
                base,
            } => Arc::new(BandRule::new(
                *coord,
                *lower,
                *upper,
                *inside_prob,
                base.build()?,
            )?),
            RuleSpec::Thompson {
                dim,
                mu0,
                mu1,
                sigma0,
                sigma1,
            } => Arc::new(thompson_gaussian_rule(
                *dim,
                mu0.clone(),
                mu1.clone(),
                sigma0.clone(),
                sigma1.clone(),
            )?),
            RuleSpec::Ucb {
                dim,
                mu0,
                mu1,
                sigma0,
                sigma1,
                alpha,
            } => Arc::new(ucb_rule(
                *dim,
                mu0.clone(),
                mu1.clone(),
                sigma0.clone(),
                sigma1.clone(),
                *alpha,
            )?),
            RuleSpec::Kmeans { centroids, targets } => Arc::new(kmeans_target_rule(
                centroids.clone(),
                targets.iter().copied(),
            )?),
            RuleSpec::QuadrantTree { q1, q2 } => Arc::new(tree_rule_quadrant(*q1, *q2)?),
            RuleSpec::Cares { thresholds } => {
                Arc::new(cares_rule(*thresholds))
            }
        })
    }
}
