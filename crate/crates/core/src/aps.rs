//! Simulated fixed-bandwidth APS.
//!
//! For each observation, `p^s(X_i; δ)` averages the rule over `S` uniform
//! draws from the open ball of radius `δ` around the observation's
//! standardized continuous covariates. Discrete covariates are held fixed.
//! Each observation draws from its own stream `(seed, i)`, so results do not
//! depend on how the work is scheduled.

use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::algorithms::{check_dims, DecisionRule};
use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::rng::{self, Stream};
use crate::special::reg_inc_beta;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ApsConfig {
    pub delta: f64,
    pub draws: usize,
    pub seed: u64,
}

impl ApsConfig {
    pub fn new(delta: f64, draws: usize, seed: u64) -> Result<Self> {
        let config = Self { delta, draws, seed };
        config.validate()?;
        Ok(config)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.delta > 0.0 && self.delta.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "bandwidth must be positive, got {}",
                self.delta
            )));
        }
        if self.draws == 0 {
            return Err(Error::InvalidParameter("draws must be at least 1".into()));
        }
        Ok(())
    }
}

/// Default number of draws for a sample of size `n`: `max(1000, ⌈n^0.6⌉)`.
pub fn default_draws(n: usize) -> usize {
    ((n as f64).powf(0.6).ceil() as usize).max(1000)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ApsResult {
    pub values: Vec<f64>,
    /// `0 < values[i] < 1`.
    pub nondegenerate: Vec<bool>,
    pub config: ApsConfig,
}

impl ApsResult {
    /// Wraps externally computed scores, e.g. the exact propensity `A(X_i)`.
    pub fn from_values(values: Vec<f64>, config: ApsConfig) -> Self {
        let nondegenerate = values.iter().map(|&v| v > 0.0 && v < 1.0).collect();
        Self {
            values,
            nondegenerate,
            config,
        }
    }

    pub fn n(&self) -> usize {
        self.values.len()
    }

    pub fn n_nondegenerate(&self) -> usize {
        self.nondegenerate.iter().filter(|&&b| b).count()
    }
}

/// Fills `out` with a uniform draw from the open ball of radius `delta`
/// centered at the origin.
pub fn sample_ball_offset_into(delta: f64, rng: &mut Stream, out: &mut [f64]) {
    let p = out.len();
    let inv_p = 1.0 / p as f64;
    loop {
        let mut sq = 0.0;
        for o in out.iter_mut() {
            let g: f64 = rng.sample(StandardNormal);
            *o = g;
            sq += g * g;
        }
        if sq == 0.0 {
            continue;
        }
        let u: f64 = rng.random();
        let r = u.powf(inv_p);
        if r >= 1.0 {
            continue;
        }
        let scale = delta * r / sq.sqrt();
        let mut norm_sq = 0.0;
        for o in out.iter_mut() {
            *o *= scale;
            norm_sq += *o * *o;
        }
        if norm_sq.sqrt() < delta {
            return;
        }
    }
}

/// A uniform draw from the open ball `B(center, delta)`.
pub fn sample_uniform_ball(center: &[f64], delta: f64, rng: &mut Stream) -> Vec<f64> {
    let mut out = vec![0.0; center.len()];
    sample_ball_offset_into(delta, rng, &mut out);
    for (o, c) in out.iter_mut().zip(center) {
        *o += c;
    }
    out
}

/// Simulated APS for every observation.
///
/// The dataset should be standardized; the rule is evaluated in raw units by
/// undoing the dataset's standardization map. When the rule reports that it
/// is constant on the box enclosing an observation's ball, that constant is
/// used without drawing.
pub fn simulate_aps(
    dataset: &Dataset,
    rule: &dyn DecisionRule,
    config: &ApsConfig,
) -> Result<ApsResult> {
    config.validate()?;
    check_dims(rule, dataset.p_cont(), dataset.p_disc())?;
    if dataset.scaling().is_none() && dataset.p_cont() > 0 {
        log::warn!("simulate_aps called on a dataset that was not standardized");
    }
    let p = dataset.p_cont();
    let identity;
    let map = match dataset.scaling() {
        Some(m) => m,
        None => {
            identity = crate::data::StandardizationMap::identity(p);
            &identity
        }
    };
    let half_width: Vec<f64> = map.stddevs.iter().map(|s| config.delta * s).collect();

    let values: Vec<f64> = (0..dataset.n())
        .into_par_iter()
        .map(|i| {
            let center = dataset.x_cont_row(i);
            let xd = dataset.x_disc_row(i);
            let raw_center = map.invert(center);
            if let Some(v) = rule.constant_on_box(&raw_center, &half_width, xd) {
                return v;
            }
            if p == 0 {
                return rule.evaluate(&raw_center, xd);
            }
            let mut rng = rng::stream(config.seed, i as u64);
            let mut offset = vec![0.0; p];
            let mut point = vec![0.0; p];
            let mut raw = vec![0.0; p];
            let mut sum = 0.0;
            for _ in 0..config.draws {
                sample_ball_offset_into(config.delta, &mut rng, &mut offset);
                for j in 0..p {
                    point[j] = center[j] + offset[j];
                }
                map.invert_into(&point, &mut raw);
                sum += rule.evaluate(&raw, xd);
            }
            (sum / config.draws as f64).clamp(0.0, 1.0)
        })
        .collect();
    Ok(ApsResult::from_values(values, *config))
}

/// Fixed-bandwidth APS of the rule `1{x ≥ c}` in one dimension.
pub fn analytic_aps_univariate_threshold(x: f64, c: f64, delta: f64) -> f64 {
    ((x - c) / (2.0 * delta) + 0.5).clamp(0.0, 1.0)
}

/// Share of the unit `p`-ball lying on the far side of a hyperplane at
/// signed distance `v` from the center, i.e. the fixed-bandwidth APS of a
/// half-space whose boundary is `v·δ` from the observation.
pub fn cap_fraction(v: f64, p: usize) -> Result<f64> {
    if !(v.abs() < 1.0) {
        return Err(Error::DomainError(format!(
            "cap fraction needs |v| < 1, got {v}"
        )));
    }
    if p == 0 {
        return Err(Error::DomainError("dimension must be at least 1".into()));
    }
    let x = (1.0 - v) * (1.0 + v);
    let i = reg_inc_beta((p as f64 + 1.0) / 2.0, 0.5, x)
        .ok_or_else(|| Error::DomainError(format!("incomplete beta failed at v = {v}")))?;
    Ok(if v >= 0.0 { 1.0 - 0.5 * i } else { 0.5 * i })
}
