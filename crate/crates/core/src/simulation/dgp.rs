//! Data-generating process with an experimental band on the first covariate
//! and a learned deterministic rule everywhere else.
//!
//! `X = V ξ` with `ξ ~ N(0, I)`, so `Cov(X) = V V`. Untreated outcomes are
//! `Y(0) = 0.75 X'α₀ + 0.25 ε₀`; Model A adds pure noise `ε₁` under
//! treatment, Model B adds `X'α₁`. Take-up is `D(0) = 0`,
//! `D(1) = 1{Y(1) − Y(0) > u}`. Inside the band `[q_lo, q_hi]` of empirical
//! `X₁` quantiles the recommendation is a fair coin; elsewhere it is
//! `1{τ_pred(X) ≥ 0}` for a prediction `τ_pred` fitted once on a surrogate
//! experiment.

use std::sync::Arc;

use rand::Rng;
use rand_distr::{Distribution, StandardNormal, Uniform};
use serde::{Deserialize, Serialize};

use super::tree::{RegressionTree, TreeParams};
use crate::algorithms::{inflate, BandRule, DecisionRule, SharedRule};
use crate::data::{Dataset, PotentialOutcomes};
use crate::error::{Error, Result};
use crate::rng::{self, derive_seed};
use crate::stats::quantile;

/// Minimum surrogate sample size for fitting `τ_pred`.
pub const MIN_SURROGATE: usize = 50;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Model {
    /// Effect `Y(1) − Y(0) = ε₁`, unrelated to `X`.
    A,
    /// Effect `Y(1) − Y(0) = X'α₁`.
    B,
}

/// How `τ_pred` is obtained.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TauSource {
    /// Two regression trees fitted on a surrogate experiment.
    Fitted,
    /// A fixed prediction everywhere.
    Constant(f64),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct DgpConfig {
    pub n: usize,
    pub p: usize,
    pub model: Model,
    /// Quantile band of `X₁` where recommendations are randomized.
    pub band: (f64, f64),
    pub seed: u64,
    pub surrogate_n: usize,
    pub tau: TauSource,
    pub tree: TreeParams,
    /// Weights on `X'α₀` and `ε₀` in `Y(0)`.
    pub y0_signal: f64,
    pub y0_noise: f64,
    /// Weights on `X'α₁` and `ε₁` in the surrogate's treatment effect.
    pub surrogate_signal: f64,
    pub surrogate_noise: f64,
}

impl Default for DgpConfig {
    fn default() -> Self {
        Self {
            n: 10_000,
            p: 100,
            model: Model::A,
            band: (0.495, 0.505),
            seed: 0,
            surrogate_n: 2_000,
            tau: TauSource::Fitted,
            tree: TreeParams::default(),
            y0_signal: 0.75,
            y0_noise: 0.25,
            surrogate_signal: 0.5,
            surrogate_noise: 0.5,
        }
    }
}

impl DgpConfig {
    pub fn validate(&self) -> Result<()> {
        let (lo, hi) = self.band;
        if !(0.0 <= lo && lo < hi && hi <= 1.0) {
            return Err(Error::Config(format!(
                "band quantiles must satisfy 0 ≤ lower < upper ≤ 1, got ({lo}, {hi})"
            )));
        }
        if self.n == 0 || self.p == 0 || self.surrogate_n == 0 {
            return Err(Error::Config("n, p and surrogate_n must be at least 1".into()));
        }
        if self.tree.max_depth == 0 || self.tree.min_leaf == 0 {
            return Err(Error::Config("tree depth and leaf size must be at least 1".into()));
        }
        Ok(())
    }
}

/// Off-diagonal support of `V` as 0-based `(row, col)` pairs.
///
/// At `p = 100` this is `{2,…,6} × {35, 66, 78}` (1-based). Other sizes
/// scale the column indices by `p / 100`, keep rows `2..=6` that fit, and
/// never touch the first coordinate or the diagonal.
pub fn v_support(p: usize) -> Vec<(usize, usize)> {
    let mut cols: Vec<usize> = [35usize, 66, 78]
        .iter()
        .map(|&j| (j * p).div_ceil(100))
        .filter(|&c| c >= 2 && c <= p)
        .collect();
    cols.dedup();
    let rows: Vec<usize> = (2..=6.min(p)).filter(|r| !cols.contains(r)).collect();
    rows.iter()
        .flat_map(|&r| cols.iter().map(move |&c| (r - 1, c - 1)))
        .collect()
}

/// Prediction of the recommendation effect.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum TauPredictor {
    Trees {
        treated: RegressionTree,
        control: RegressionTree,
    },
    Constant { dim: usize, value: f64 },
}

impl TauPredictor {
    pub fn dim(&self) -> usize {
        match self {
            TauPredictor::Trees { treated, .. } => treated.dim(),
            TauPredictor::Constant { dim, .. } => *dim,
        }
    }

    pub fn predict(&self, x: &[f64]) -> f64 {
        match self {
            TauPredictor::Trees { treated, control } => treated.predict(x) - control.predict(x),
            TauPredictor::Constant { value, .. } => *value,
        }
    }

    /// Bounds on `τ_pred` over a box. Conservative for the tree pair.
    pub fn range_on_box(&self, lo: &[f64], hi: &[f64]) -> (f64, f64) {
        match self {
            TauPredictor::Trees { treated, control } => {
                let (t0, t1) = treated.range_on_box(lo, hi);
                let (c0, c1) = control.range_on_box(lo, hi);
                (t0 - c1, t1 - c0)
            }
            TauPredictor::Constant { value, .. } => (*value, *value),
        }
    }

    /// Distinct values `τ_pred` can take.
    pub fn distinct_values(&self) -> Vec<f64> {
        let mut v: Vec<f64> = match self {
            TauPredictor::Trees { treated, control } => {
                let c = control.leaf_values();
                treated
                    .leaf_values()
                    .iter()
                    .flat_map(|t| c.iter().map(move |c| t - c))
                    .collect()
            }
            TauPredictor::Constant { value, .. } => vec![*value],
        };
        v.sort_by(f64::total_cmp);
        v.dedup();
        v
    }
}

/// `A(x) = 1{τ_pred(x) ≥ 0}`.
#[derive(Debug, Clone)]
pub struct TauSignRule {
    tau: Arc<TauPredictor>,
}

impl TauSignRule {
    pub fn new(tau: Arc<TauPredictor>) -> Self {
        Self { tau }
    }
}

impl DecisionRule for TauSignRule {
    fn cont_dim(&self) -> usize {
        self.tau.dim()
    }

    fn evaluate(&self, x: &[f64], _: &[i64]) -> f64 {
        if self.tau.predict(x) >= 0.0 {
            1.0
        } else {
            0.0
        }
    }

    fn constant_on_box(&self, c: &[f64], h: &[f64], _: &[i64]) -> Option<f64> {
        let lo: Vec<f64> = c.iter().zip(h).map(|(c, h)| c - inflate(*c, *h)).collect();
        let hi: Vec<f64> = c.iter().zip(h).map(|(c, h)| c + inflate(*c, *h)).collect();
        let (min, max) = self.tau.range_on_box(&lo, &hi);
        if min >= 0.0 {
            Some(1.0)
        } else if max < 0.0 {
            Some(0.0)
        } else {
            None
        }
    }
}

/// Fits `τ_pred(x) = μ̂₁(x) − μ̂₀(x)` with one tree per recommendation arm.
///
/// `x` is row-major `n × dim`; `z` is binary.
pub fn fit_tau_pred(x: &[f64], y: &[f64], z: &[f64], dim: usize, params: TreeParams) -> Result<TauPredictor> {
    let n = y.len();
    if n < MIN_SURROGATE {
        return Err(Error::InsufficientSurrogate {
            n,
            min: MIN_SURROGATE,
        });
    }
    let arm = |value: f64| {
        let rows: Vec<usize> = (0..n).filter(|&i| z[i] == value).collect();
        let xs: Vec<f64> = rows
            .iter()
            .flat_map(|&i| x[i * dim..(i + 1) * dim].iter().copied())
            .collect();
        let ys: Vec<f64> = rows.iter().map(|&i| y[i]).collect();
        (rows.len(), xs, ys)
    };
    let (n1, x1, y1) = arm(1.0);
    let (n0, x0, y0) = arm(0.0);
    if n1 == 0 || n0 == 0 {
        return Err(Error::InsufficientSurrogate {
            n: n1.min(n0),
            min: 1,
        });
    }
    Ok(TauPredictor::Trees {
        treated: RegressionTree::fit(&x1, &y1, dim, params),
        control: RegressionTree::fit(&x0, &y0, dim, params),
    })
}

/// One simulated sample.
#[derive(Debug, Clone)]
pub struct Sample {
    /// Raw (unstandardized) covariates.
    pub dataset: Dataset,
    pub potential: PotentialOutcomes,
    /// The recommendation probability `A(x)` that generated `Z`, in raw units.
    pub rule: SharedRule,
    /// Empirical `X₁` band of the randomized segment.
    pub band: (f64, f64),
}

/// Fixed parameters of the process: `V`, `α₀`, `α₁` and `τ_pred`.
#[derive(Debug, Clone)]
pub struct Dgp {
    config: DgpConfig,
    /// Off-diagonal entries of the symmetric `V` as `(row, col, value)`, `row < col` not assumed.
    v_entries: Vec<(usize, usize, f64)>,
    alpha0: Vec<f64>,
    alpha1: Vec<f64>,
    tau: Arc<TauPredictor>,
}

struct Draws {
    x: Vec<f64>,
    y0: Vec<f64>,
    eps1: Vec<f64>,
    u: Vec<f64>,
    coin: Vec<f64>,
}

impl Dgp {
    pub fn new(config: DgpConfig) -> Result<Self> {
        config.validate()?;
        let p = config.p;
        let mut prng = rng::stream(derive_seed(config.seed, 0xD6_0001), 0);
        let off = Uniform::new(-0.5, 0.5).expect("valid range");
        let v_entries: Vec<(usize, usize, f64)> = v_support(p)
            .into_iter()
            .map(|(r, c)| (r, c, off.sample(&mut prng)))
            .collect();

        let a1 = Uniform::new(-150.0, 200.0).expect("valid range");
        let a0 = Uniform::new(-100.0, 100.0).expect("valid range");
        let raw1: Vec<f64> = (0..p).map(|_| a1.sample(&mut prng)).collect();
        let half = p / 2;
        let mut raw0 = raw1.clone();
        for v in raw0.iter_mut().skip(half) {
            *v = a0.sample(&mut prng);
        }

        let mut dgp = Dgp {
            config,
            v_entries,
            alpha0: Vec::new(),
            alpha1: Vec::new(),
            tau: Arc::new(TauPredictor::Constant { dim: p, value: 0.0 }),
        };
        dgp.alpha0 = dgp.normalize(&raw0)?;
        dgp.alpha1 = dgp.normalize(&raw1)?;
        dgp.tau = Arc::new(match dgp.config.tau {
            TauSource::Constant(value) => TauPredictor::Constant { dim: p, value },
            TauSource::Fitted => dgp.fit_surrogate()?,
        });
        Ok(dgp)
    }

    /// Rebuilds the process with a different `τ_pred`.
    pub fn with_tau(mut self, tau: TauPredictor) -> Result<Self> {
        if tau.dim() != self.config.p {
            return Err(Error::DimensionMismatch {
                what: "tau_pred",
                expected: self.config.p,
                found: tau.dim(),
            });
        }
        self.tau = Arc::new(tau);
        Ok(self)
    }

    pub fn config(&self) -> &DgpConfig {
        &self.config
    }

    pub fn alpha0(&self) -> &[f64] {
        &self.alpha0
    }

    pub fn alpha1(&self) -> &[f64] {
        &self.alpha1
    }

    pub fn tau(&self) -> &Arc<TauPredictor> {
        &self.tau
    }

    /// `V a` for the sparse symmetric `V` with unit diagonal.
    fn v_times(&self, a: &[f64], out: &mut [f64]) {
        out.copy_from_slice(a);
        for &(r, c, v) in &self.v_entries {
            out[r] += v * a[c];
            out[c] += v * a[r];
        }
    }

    /// Dense `Σ = V V`.
    pub fn covariance(&self) -> Vec<Vec<f64>> {
        let p = self.config.p;
        let mut cols = vec![vec![0.0; p]; p];
        let mut e = vec![0.0; p];
        let mut ve = vec![0.0; p];
        for (j, col) in cols.iter_mut().enumerate() {
            e.fill(0.0);
            e[j] = 1.0;
            self.v_times(&e, &mut ve);
            self.v_times(&ve, col);
        }
        cols
    }

    /// `α / ‖Vα‖`, so that `Var(X'α) = α'VVα = 1`.
    fn normalize(&self, raw: &[f64]) -> Result<Vec<f64>> {
        let mut va = vec![0.0; raw.len()];
        self.v_times(raw, &mut va);
        let norm = va.iter().map(|v| v * v).sum::<f64>().sqrt();
        if !(norm > 0.0) {
            return Err(Error::Config("coefficient vector normalizes to zero".into()));
        }
        Ok(raw.iter().map(|v| v / norm).collect())
    }

    fn draw(&self, n: usize, seed: u64) -> Draws {
        let p = self.config.p;
        let mut rng = rng::stream(seed, 0);
        let mut x = vec![0.0; n * p];
        let mut xi = vec![0.0; p];
        let (mut y0, mut eps1, mut u, mut coin) = (
            Vec::with_capacity(n),
            Vec::with_capacity(n),
            Vec::with_capacity(n),
            Vec::with_capacity(n),
        );
        for i in 0..n {
            for v in xi.iter_mut() {
                *v = rng.sample(StandardNormal);
            }
            let row = &mut x[i * p..(i + 1) * p];
            self.v_times(&xi, row);
            let e0: f64 = rng.sample(StandardNormal);
            let xa0: f64 = row.iter().zip(&self.alpha0).map(|(a, b)| a * b).sum();
            y0.push(self.config.y0_signal * xa0 + self.config.y0_noise * e0);
            eps1.push(rng.sample(StandardNormal));
            u.push(rng.sample(StandardNormal));
            coin.push(if rng.random::<f64>() < 0.5 { 1.0 } else { 0.0 });
        }
        Draws {
            x,
            y0,
            eps1,
            u,
            coin,
        }
    }

    fn xa1(&self, x: &[f64], i: usize) -> f64 {
        let p = self.config.p;
        x[i * p..(i + 1) * p]
            .iter()
            .zip(&self.alpha1)
            .map(|(a, b)| a * b)
            .sum()
    }

    fn fit_surrogate(&self) -> Result<TauPredictor> {
        let c = &self.config;
        if c.surrogate_n < MIN_SURROGATE {
            return Err(Error::InsufficientSurrogate {
                n: c.surrogate_n,
                min: MIN_SURROGATE,
            });
        }
        let draws = self.draw(c.surrogate_n, derive_seed(c.seed, 0xD6_0002));
        let y: Vec<f64> = (0..c.surrogate_n)
            .map(|i| {
                let y0 = draws.y0[i];
                let y1 = y0 + c.surrogate_signal * self.xa1(&draws.x, i) + c.surrogate_noise * draws.eps1[i];
                let d = draws.coin[i] * f64::from(u8::from(y1 - y0 > draws.u[i]));
                d * y1 + (1.0 - d) * y0
            })
            .collect();
        fit_tau_pred(&draws.x, &y, &draws.coin, c.p, c.tree)
    }

    /// Potential outcomes for drawn units.
    fn potentials(&self, draws: &Draws) -> PotentialOutcomes {
        let n = draws.y0.len();
        let y1: Vec<f64> = (0..n)
            .map(|i| {
                draws.y0[i]
                    + match self.config.model {
                        Model::A => draws.eps1[i],
                        Model::B => self.xa1(&draws.x, i),
                    }
            })
            .collect();
        let d1 = (0..n)
            .map(|i| f64::from(u8::from(y1[i] - draws.y0[i] > draws.u[i])))
            .collect();
        PotentialOutcomes {
            y1,
            y0: draws.y0.clone(),
            d1,
            d0: vec![0.0; n],
        }
    }

    /// The band rule for given `X₁` bounds.
    pub fn rule(&self, band: (f64, f64)) -> Result<SharedRule> {
        let base: SharedRule = Arc::new(TauSignRule::new(self.tau.clone()));
        Ok(Arc::new(BandRule::new(0, band.0, band.1, 0.5, base)?))
    }

    /// Draws a sample of size `config.n` under `seed`.
    pub fn sample(&self, seed: u64) -> Result<Sample> {
        self.sample_n(self.config.n, seed)
    }

    pub fn sample_n(&self, n: usize, seed: u64) -> Result<Sample> {
        let p = self.config.p;
        let draws = self.draw(n, seed);
        let x1: Vec<f64> = (0..n).map(|i| draws.x[i * p]).collect();
        let band = (
            quantile(&x1, self.config.band.0),
            quantile(&x1, self.config.band.1),
        );
        let potential = self.potentials(&draws);
        let z: Vec<f64> = (0..n)
            .map(|i| {
                if band.0 <= x1[i] && x1[i] <= band.1 {
                    draws.coin[i]
                } else if self.tau.predict(&draws.x[i * p..(i + 1) * p]) >= 0.0 {
                    1.0
                } else {
                    0.0
                }
            })
            .collect();
        let (d, y) = potential.observe(&z);
        let names = (1..=p).map(|j| format!("x{j}")).collect();
        let dataset = Dataset::builder(y, d, z)
            .continuous(draws.x, p)
            .continuous_names(names)
            .build()?;
        Ok(Sample {
            dataset,
            potential,
            rule: self.rule(band)?,
            band,
        })
    }
}

/// Builds the process and draws one sample with `config.seed`.
pub fn generate_sample(config: &DgpConfig) -> Result<Sample> {
    let dgp = Dgp::new(config.clone())?;
    dgp.sample(derive_seed(config.seed, 0xD6_0003))
}
