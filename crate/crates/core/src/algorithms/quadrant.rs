use super::{check_prob, inflate, DecisionRule, RuleSpec};
use crate::error::Result;

/// Depth-two classification tree on two covariates: `q2` on the open
/// quadrant `{x1 > 0, x2 > 0}`, `q1` elsewhere.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadrantTreeRule {
    q1: f64,
    q2: f64,
}

pub fn tree_rule_quadrant(q1: f64, q2: f64) -> Result<QuadrantTreeRule> {
    check_prob("q1", q1)?;
    check_prob("q2", q2)?;
    Ok(QuadrantTreeRule { q1, q2 })
}

impl DecisionRule for QuadrantTreeRule {
    fn cont_dim(&self) -> usize {
        2
    }

    fn evaluate(&self, x: &[f64], _: &[i64]) -> f64 {
        if x[0] > 0.0 && x[1] > 0.0 {
            self.q2
        } else {
            self.q1
        }
    }

    /// `¾q1 + ¼q2` at the corner, `½(q1 + q2)` on the two open boundary rays,
    /// `A(x)` elsewhere.
    fn aps_limit(&self, x: &[f64], xd: &[i64]) -> Option<f64> {
        let (a, b) = (x[0], x[1]);
        Some(if a == 0.0 && b == 0.0 {
            0.75 * self.q1 + 0.25 * self.q2
        } else if (a == 0.0 && b > 0.0) || (b == 0.0 && a > 0.0) {
            0.5 * (self.q1 + self.q2)
        } else {
            self.evaluate(x, xd)
        })
    }

    fn constant_on_box(&self, c: &[f64], h: &[f64], _: &[i64]) -> Option<f64> {
        let h0 = inflate(c[0], h[0]);
        let h1 = inflate(c[1], h[1]);
        if c[0] - h0 > 0.0 && c[1] - h1 > 0.0 {
            Some(self.q2)
        } else if c[0] + h0 <= 0.0 || c[1] + h1 <= 0.0 || self.q1 == self.q2 {
            Some(self.q1)
        } else {
            None
        }
    }

    fn descriptor(&self) -> Option<RuleSpec> {
        Some(RuleSpec::QuadrantTree {
            q1: self.q1,
            q2: self.q2,
        })
    }
}
