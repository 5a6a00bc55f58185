//! Estimands computed from potential outcomes.

use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal};

use super::dgp::Dgp;
use crate::algorithms::DecisionRule;
use crate::data::{Dataset, PotentialOutcomes};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OracleEstimands {
    /// `E[Y(1) − Y(0)]`.
    pub ate: f64,
    /// Average effect where `A(X) ∈ (0, 1)`; `None` if that segment is empty.
    pub ate_rct: Option<f64>,
    /// Average effect among compliers `D(1) ≠ D(0)`.
    pub late: f64,
    /// Complier effect inside the randomized segment, if it has compliers.
    pub late_rct: Option<f64>,
    /// `Σ w_i (Y1_i − Y0_i) / Σ w_i` with `w_i = p_i (1 − p_i)(D1_i − D0_i)`,
    /// when scores `p_i` were supplied and the weights do not sum to zero.
    pub weighted_beta1: Option<f64>,
    pub n: usize,
    pub n_rct: usize,
    pub n_compliers: usize,
}

#[derive(Debug, Default, Clone, Copy)]
struct Acc {
    n: usize,
    effect: f64,
    n_rct: usize,
    effect_rct: f64,
    n_c: usize,
    effect_c: f64,
    n_c_rct: usize,
    effect_c_rct: f64,
    w: f64,
    w_effect: f64,
}

impl Acc {
    fn push(&mut self, effect: f64, rct: bool, complier: bool) {
        self.n += 1;
        self.effect += effect;
        if rct {
            self.n_rct += 1;
            self.effect_rct += effect;
        }
        if complier {
            self.n_c += 1;
            self.effect_c += effect;
            if rct {
                self.n_c_rct += 1;
                self.effect_c_rct += effect;
            }
        }
    }

    fn finish(self, weighted: bool) -> Result<OracleEstimands> {
        if self.n_c == 0 {
            return Err(Error::NoCompliers);
        }
        let ratio = |s: f64, k: usize| (k > 0).then(|| s / k as f64);
        Ok(OracleEstimands {
            ate: self.effect / self.n as f64,
            ate_rct: ratio(self.effect_rct, self.n_rct),
            late: self.effect_c / self.n_c as f64,
            late_rct: ratio(self.effect_c_rct, self.n_c_rct),
            weighted_beta1: (weighted && self.w != 0.0).then(|| self.w_effect / self.w),
            n: self.n,
            n_rct: self.n_rct,
            n_compliers: self.n_c,
        })
    }
}

/// Sample analogs of the estimands.
///
/// The randomized segment is `{i : 0 < A(X_i) < 1}` with `A` evaluated on
/// raw covariates. `scores`, if given, are the fixed-bandwidth APS used in
/// the weighted estimand.
pub fn oracle_estimands(
    pot: &PotentialOutcomes,
    dataset: &Dataset,
    rule: &dyn DecisionRule,
    scores: Option<&[f64]>,
) -> Result<OracleEstimands> {
    let n = dataset.n();
    if pot.n() != n {
        return Err(Error::DimensionMismatch {
            what: "potential outcomes",
            expected: n,
            found: pot.n(),
        });
    }
    if let Some(s) = scores {
        if s.len() != n {
            return Err(Error::DimensionMismatch {
                what: "scores",
                expected: n,
                found: s.len(),
            });
        }
    }
    let mut acc = Acc::default();
    for i in 0..n {
        let effect = pot.y1[i] - pot.y0[i];
        let a = rule.evaluate(&dataset.raw_cont_row(i), dataset.x_disc_row(i));
        let shift = pot.d1[i] - pot.d0[i];
        acc.push(effect, a > 0.0 && a < 1.0, shift != 0.0);
        if let Some(s) = scores {
            let w = s[i] * (1.0 - s[i]) * shift;
            acc.w += w;
            acc.w_effect += w * effect;
        }
    }
    acc.finish(scores.is_some())
}

/// Population estimands approximated from `n` fresh draws, in chunks.
///
/// The randomized segment uses the population quantiles of `X₁`, which is
/// normal with variance `Σ₁₁`.
pub fn population_estimands(dgp: &Dgp, n: usize, seed: u64) -> Result<OracleEstimands> {
    const CHUNK: usize = 100_000;
    let sd1 = dgp.covariance()[0][0].sqrt();
    let std = Normal::standard();
    let (qlo, qhi) = dgp.config().band;
    let band = (sd1 * std.inverse_cdf(qlo), sd1 * std.inverse_cdf(qhi));
    let p = dgp.config().p;
    let mut acc = Acc::default();
    let mut done = 0;
    let mut chunk = 0u64;
    while done < n {
        let m = CHUNK.min(n - done);
        let s = dgp.sample_n(m, crate::rng::derive_seed(seed, chunk))?;
        let x = s.dataset.x_cont_flat();
        for i in 0..m {
            let x1 = x[i * p];
            let pot = &s.potential;
            acc.push(
                pot.y1[i] - pot.y0[i],
                band.0 <= x1 && x1 <= band.1,
                pot.d1[i] != pot.d0[i],
            );
        }
        done += m;
        chunk += 1;
    }
    acc.finish(false)
}
