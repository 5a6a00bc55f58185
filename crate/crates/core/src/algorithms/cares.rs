//! Safety-net hospital relief eligibility and funding.
//!
//! Covariate order for the eligibility rule is
//! `(disproportionate patient percentage, uncompensated care per bed, profit margin)`.

use serde::{Deserialize, Serialize};

use super::{AffineThresholdRule, Combinator, Condition, Direction};
use crate::error::{Error, Result};

/// A hospital is eligible when all three thresholds are met.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct CaresThresholds {
    /// Minimum disproportionate patient percentage (as a fraction).
    pub dpp_min: f64,
    /// Minimum annual uncompensated care per bed, in dollars.
    pub ucc_per_bed_min: f64,
    /// Maximum profit margin (as a fraction).
    pub margin_max: f64,
}

impl Default for CaresThresholds {
    fn default() -> Self {
        Self {
            dpp_min: 0.202,
            ucc_per_bed_min: 25_000.0,
            margin_max: 0.03,
        }
    }
}

impl CaresThresholds {
    pub fn is_eligible(&self, dpp: f64, ucc_per_bed: f64, margin: f64) -> bool {
        dpp >= self.dpp_min && ucc_per_bed >= self.ucc_per_bed_min && margin <= self.margin_max
    }
}

/// Total pool and per-hospital bounds, in dollars.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FundingFormula {
    pub pool: f64,
    pub floor: f64,
    pub cap: f64,
}

impl Default for FundingFormula {
    fn default() -> Self {
        Self {
            pool: 10.0e9,
            floor: 5.0e6,
            cap: 50.0e6,
        }
    }
}

impl FundingFormula {
    fn validate(&self) -> Result<()> {
        if !(self.pool > 0.0 && self.floor > 0.0 && self.cap > 0.0) || self.floor > self.cap {
            return Err(Error::InvalidParameter(format!(
                "funding formula needs 0 < floor ≤ cap and pool > 0, got {self:?}"
            )));
        }
        Ok(())
    }
}

/// The eligibility rule as a three-condition AND of half-spaces.
pub fn cares_rule(thresholds: CaresThresholds) -> AffineThresholdRule {
    AffineThresholdRule::new(
        3,
        vec![
            Condition::on_coordinate(3, 0, thresholds.dpp_min, Direction::Ge),
            Condition::on_coordinate(3, 1, thresholds.ucc_per_bed_min, Direction::Ge),
            Condition::on_coordinate(3, 2, thresholds.margin_max, Direction::Le),
        ],
        Combinator::And,
        1.0,
        0.0,
    )
    .expect("static CARES conditions are valid")
}

/// Eligibility and funding for one hospital.
///
/// The facility score is `dpp × beds`; an eligible hospital receives
/// `clamp(score / cumulative_score × pool, floor, cap)`, an ineligible one
/// receives nothing.
pub fn cares_rule_and_funding(
    dpp: f64,
    ucc_per_bed: f64,
    margin: f64,
    beds: f64,
    cumulative_score: f64,
    thresholds: &CaresThresholds,
    formula: &FundingFormula,
) -> Result<(u8, f64)> {
    if !(beds > 0.0) {
        return Err(Error::NonpositiveBeds(beds));
    }
    formula.validate()?;
    if !thresholds.is_eligible(dpp, ucc_per_bed, margin) {
        return Ok((0, 0.0));
    }
    if !(cumulative_score > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "cumulative facility score must be positive, got {cumulative_score}"
        )));
    }
    let share = dpp * beds / cumulative_score;
    Ok((1, (share * formula.pool).clamp(formula.floor, formula.cap)))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Hospital {
    pub dpp: f64,
    pub ucc_per_bed: f64,
    pub margin: f64,
    pub beds: f64,
}

/// Eligibility and funding for a population of hospitals, with the
/// cumulative score summed over the eligible ones.
pub fn cares_funding(
    hospitals: &[Hospital],
    thresholds: &CaresThresholds,
    formula: &FundingFormula,
) -> Result<Vec<(u8, f64)>> {
    if let Some(h) = hospitals.iter().find(|h| !(h.beds > 0.0)) {
        return Err(Error::NonpositiveBeds(h.beds));
    }
    let cumulative: f64 = hospitals
        .iter()
        .filter(|h| thresholds.is_eligible(h.dpp, h.ucc_per_bed, h.margin))
        .map(|h| h.dpp * h.beds)
        .sum();
    hospitals
        .iter()
        .map(|h| {
            cares_rule_and_funding(
                h.dpp,
                h.ucc_per_bed,
                h.margin,
                h.beds,
                cumulative,
                thresholds,
                formula,
            )
        })
        .collect()
}
