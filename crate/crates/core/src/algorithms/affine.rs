use serde::{Deserialize, Serialize};

use super::{check_prob, inflate, DecisionRule, RuleSpec};
use crate::aps::cap_fraction;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Direction {
    /// Satisfied when `w·x + b ≥ 0`.
    #[default]
    Ge,
    /// Satisfied when `w·x + b ≤ 0`.
    Le,
}

/// One half-space condition `w·x + b ≥ 0` (or `≤ 0`).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Condition {
    pub weights: Vec<f64>,
    pub offset: f64,
    #[serde(default)]
    pub direction: Direction,
}

impl Condition {
    pub fn new(weights: Vec<f64>, offset: f64, direction: Direction) -> Self {
        Self {
            weights,
            offset,
            direction,
        }
    }

    /// `x_coord ≥ cutoff` (or `≤`) on a single coordinate of a `dim`-vector.
    pub fn on_coordinate(dim: usize, coord: usize, cutoff: f64, direction: Direction) -> Self {
        let mut weights = vec![0.0; dim];
        weights[coord] = 1.0;
        Self::new(weights, -cutoff, direction)
    }

    fn score(&self, x: &[f64]) -> f64 {
        self.weights.iter().zip(x).map(|(w, v)| w * v).sum::<f64>() + self.offset
    }

    /// Score oriented so that positive means satisfied.
    fn oriented(&self, x: &[f64]) -> f64 {
        match self.direction {
            Direction::Ge => self.score(x),
            Direction::Le => -self.score(x),
        }
    }

    fn holds(&self, x: &[f64]) -> bool {
        self.oriented(x) >= 0.0
    }

    fn norm(&self) -> f64 {
        self.weights.iter().map(|w| w * w).sum::<f64>().sqrt()
    }

    /// `Some(true/false)` if the condition is decided everywhere on the box.
    fn decided_on_box(&self, center: &[f64], half_width: &[f64]) -> Option<bool> {
        let s = self.oriented(center);
        let reach: f64 = self
            .weights
            .iter()
            .zip(center.iter().zip(half_width))
            .map(|(w, (c, h))| w.abs() * inflate(*c, *h))
            .sum::<f64>()
            * (1.0 + 1e-12);
        if s - reach > 0.0 {
            Some(true)
        } else if s + reach < 0.0 {
            Some(false)
        } else {
            None
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Combinator {
    #[default]
    And,
    Or,
}

/// Piecewise-constant rule built from affine threshold conditions.
///
/// Returns `inside_prob` where the combined condition holds and
/// `outside_prob` elsewhere. Deterministic eligibility rules use `(1, 0)`.
#[derive(Debug, Clone, PartialEq)]
pub struct AffineThresholdRule {
    dim: usize,
    conditions: Vec<Condition>,
    combinator: Combinator,
    inside_prob: f64,
    outside_prob: f64,
}

impl AffineThresholdRule {
    pub fn new(
        dim: usize,
        conditions: Vec<Condition>,
        combinator: Combinator,
        inside_prob: f64,
        outside_prob: f64,
    ) -> Result<Self> {
        if conditions.is_empty() {
            return Err(Error::InvalidParameter(
                "affine rule needs at least one condition".into(),
            ));
        }
        for c in &conditions {
            if c.weights.len() != dim {
                return Err(Error::DimensionMismatch {
                    what: "condition weights",
                    expected: dim,
                    found: c.weights.len(),
                });
            }
            if c.norm() == 0.0 || !c.offset.is_finite() {
                return Err(Error::InvalidParameter(
                    "condition weights must be finite and not all zero".into(),
                ));
            }
        }
        check_prob("inside_prob", inside_prob)?;
        check_prob("outside_prob", outside_prob)?;
        Ok(Self {
            dim,
            conditions,
            combinator,
            inside_prob,
            outside_prob,
        })
    }

    /// `A(x) = 1{x_coord ≥ cutoff}`, the sharp regression-discontinuity rule.
    pub fn univariate_threshold(dim: usize, coord: usize, cutoff: f64) -> Result<Self> {
        if coord >= dim {
            return Err(Error::InvalidParameter(format!(
                "coordinate {coord} out of range for dimension {dim}"
            )));
        }
        Self::new(
            dim,
            vec![Condition::on_coordinate(dim, coord, cutoff, Direction::Ge)],
            Combinator::And,
            1.0,
            0.0,
        )
    }

    pub fn conditions(&self) -> &[Condition] {
        &self.conditions
    }

    pub fn combinator(&self) -> Combinator {
        self.combinator
    }

    pub fn inside_prob(&self) -> f64 {
        self.inside_prob
    }

    pub fn outside_prob(&self) -> f64 {
        self.outside_prob
    }

    fn combine(&self, states: impl Iterator<Item = bool>) -> bool {
        let mut states = states;
        match self.combinator {
            Combinator::And => states.all(|s| s),
            Combinator::Or => states.any(|s| s),
        }
    }

    fn value(&self, inside: bool) -> f64 {
        if inside {
            self.inside_prob
        } else {
            self.outside_prob
        }
    }
}

impl DecisionRule for AffineThresholdRule {
    fn cont_dim(&self) -> usize {
        self.dim
    }

    fn evaluate(&self, x: &[f64], _: &[i64]) -> f64 {
        self.value(self.combine(self.conditions.iter().map(|c| c.holds(x))))
    }

    /// Continuity points map to `A(x)`. On a boundary face where exactly one
    /// condition is active and it alone decides the outcome, the limit is the
    /// midpoint of the two levels. Corners are left unresolved.
    fn aps_limit(&self, x: &[f64], xd: &[i64]) -> Option<f64> {
        let active: Vec<usize> = self
            .conditions
            .iter()
            .enumerate()
            .filter(|(_, c)| c.score(x) == 0.0)
            .map(|(k, _)| k)
            .collect();
        match active.as_slice() {
            [] => Some(self.evaluate(x, xd)),
            [k] => {
                let with = |flag: bool| {
                    self.combine(
                        self.conditions
                            .iter()
                            .enumerate()
                            .map(|(j, c)| if j == *k { flag } else { c.holds(x) }),
                    )
                };
                let (a, b) = (with(true), with(false));
                if a == b {
                    Some(self.value(a))
                } else {
                    Some(0.5 * (self.inside_prob + self.outside_prob))
                }
            }
            _ => None,
        }
    }

    /// Closed form for a single half-space: the ball's volume fraction on the
    /// satisfied side, via the spherical-cap fraction.
    fn aps_fixed(&self, x: &[f64], _: &[i64], delta: f64) -> Option<f64> {
        let [c] = self.conditions.as_slice() else {
            return None;
        };
        let v = c.oriented(x) / (c.norm() * delta);
        let share = if v >= 1.0 {
            1.0
        } else if v <= -1.0 {
            0.0
        } else {
            cap_fraction(v, self.dim).ok()?
        };
        Some(self.outside_prob + (self.inside_prob - self.outside_prob) * share)
    }

    fn constant_on_box(&self, center: &[f64], half_width: &[f64], _: &[i64]) -> Option<f64> {
        let mut undecided = false;
        let mut states = Vec::with_capacity(self.conditions.len());
        for c in &self.conditions {
            match c.decided_on_box(center, half_width) {
                Some(s) => {
                    // a single decided condition can settle the outcome
                    match (self.combinator, s) {
                        (Combinator::And, false) => return Some(self.outside_prob),
                        (Combinator::Or, true) => return Some(self.inside_prob),
                        _ => states.push(s),
                    }
                }
                None => undecided = true,
            }
        }
        if undecided {
            return (self.inside_prob == self.outside_prob).then_some(self.inside_prob);
        }
        Some(self.value(self.combine(states.into_iter())))
    }

    fn descriptor(&self) -> Option<RuleSpec> {
        Some(RuleSpec::AffineAnd {
            dim: self.dim,
            conditions: self.conditions.clone(),
            combinator: self.combinator,
            inside_prob: self.inside_prob,
            outside_prob: self.outside_prob,
        })
    }
}
