use super::{check_prob, inflate, DecisionRule, RuleSpec, SharedRule};
use crate::error::{Error, Result};

/// Randomizes inside a band of one coordinate and defers to `base` elsewhere:
/// `A(x) = inside_prob` if `lower ≤ x_coord ≤ upper`, else `base(x)`.
///
/// This is the shape of an ε-greedy deployment: an experimental slice of the
/// population gets a coin flip, the rest gets the production algorithm.
#[derive(Debug, Clone)]
pub struct BandRule {
    coord: usize,
    lower: f64,
    upper: f64,
    inside_prob: f64,
    base: SharedRule,
}

impl BandRule {
    pub fn new(
        coord: usize,
        lower: f64,
        upper: f64,
        inside_prob: f64,
        base: SharedRule,
    ) -> Result<Self> {
        if coord >= base.cont_dim() {
            return Err(Error::InvalidParameter(format!(
                "band coordinate {coord} out of range for dimension {}",
                base.cont_dim()
            )));
        }
        if !(lower <= upper) {
            return Err(Error::InvalidParameter(format!(
                "band [{lower}, {upper}] is empty"
            )));
        }
        check_prob("inside_prob", inside_prob)?;
        Ok(Self {
            coord,
            lower,
            upper,
            inside_prob,
            base,
        })
    }

    pub fn bounds(&self) -> (f64, f64) {
        (self.lower, self.upper)
    }

    pub fn base(&self) -> &SharedRule {
        &self.base
    }

    fn in_band(&self, x: &[f64]) -> bool {
        let v = x[self.coord];
        self.lower <= v && v <= self.upper
    }
}

impl DecisionRule for BandRule {
    fn cont_dim(&self) -> usize {
        self.base.cont_dim()
    }

    fn disc_dim(&self) -> usize {
        self.base.disc_dim()
    }

    fn evaluate(&self, x: &[f64], xd: &[i64]) -> f64 {
        if self.in_band(x) {
            self.inside_prob
        } else {
            self.base.evaluate(x, xd)
        }
    }

    fn aps_limit(&self, x: &[f64], xd: &[i64]) -> Option<f64> {
        let v = x[self.coord];
        if self.lower < v && v < self.upper {
            Some(self.inside_prob)
        } else if v < self.lower || v > self.upper {
            self.base.aps_limit(x, xd)
        } else if self.lower == self.upper {
            // a zero-width band has measure zero
            self.base.aps_limit(x, xd)
        } else {
            let outside = self.base.aps_limit(x, xd)?;
            Some(0.5 * (self.inside_prob + outside))
        }
    }

    fn constant_on_box(&self, center: &[f64], half_width: &[f64], xd: &[i64]) -> Option<f64> {
        let c = center[self.coord];
        let h = inflate(c, half_width[self.coord]);
        if c + h < self.lower || c - h > self.upper {
            self.base.constant_on_box(center, half_width, xd)
        } else if c - h >= self.lower && c + h <= self.upper {
            Some(self.inside_prob)
        } else {
            let outside = self.base.constant_on_box(center, half_width, xd)?;
            (outside == self.inside_prob).then_some(outside)
        }
    }

    fn descriptor(&self) -> Option<RuleSpec> {
        Some(RuleSpec::EpsilonBand {
            coord: self.coord,
            lower: self.lower,
            upper: self.upper,
            inside_prob: self.inside_prob,
            base: Box::new(self.base.descriptor()?),
        })
    }
}
