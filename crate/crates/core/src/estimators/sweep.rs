use crate::algorithms::DecisionRule;
use crate::aps::{simulate_aps, ApsConfig, ApsResult};
use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::rng::derive_seed;

use super::{tsls_aps, EstimateReport};

/// One bandwidth of a sweep. A failed estimation is kept as an `Err` entry.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepEntry<T> {
    pub index: usize,
    pub delta: f64,
    /// Seed used for this bandwidth's APS draws.
    pub seed: u64,
    pub aps: Option<ApsResult>,
    pub result: Result<T>,
}

/// Simulates the APS at every `delta` and applies `estimate` to each result.
///
/// Bandwidth `k` in the list draws with seed `derive_seed(seed, k)`, so the
/// sub-seed follows the position in the list, not the value.
pub fn bandwidth_sweep_with<T>(
    dataset: &Dataset,
    rule: &dyn DecisionRule,
    deltas: &[f64],
    draws: usize,
    seed: u64,
    mut estimate: impl FnMut(&Dataset, &ApsResult) -> Result<T>,
) -> Result<Vec<SweepEntry<T>>> {
    if deltas.is_empty() {
        return Err(Error::InvalidParameter("bandwidth list is empty".into()));
    }
    let configs = deltas
        .iter()
        .enumerate()
        .map(|(k, &delta)| ApsConfig::new(delta, draws, derive_seed(seed, k as u64)))
        .collect::<Result<Vec<_>>>()?;
    Ok(configs
        .into_iter()
        .enumerate()
        .map(|(index, config)| {
            let aps = simulate_aps(dataset, rule, &config);
            let (aps, result) = match aps {
                Ok(aps) => {
                    let result = estimate(dataset, &aps);
                    (Some(aps), result)
                }
                Err(e) => (None, Err(e)),
            };
            if let Err(e) = &result {
                log::warn!("bandwidth {} failed: {e}", config.delta);
            }
            SweepEntry {
                index,
                delta: config.delta,
                seed: config.seed,
                aps,
                result,
            }
        })
        .collect())
}

/// APS-controlled 2SLS at each bandwidth.
pub fn bandwidth_sweep(
    dataset: &Dataset,
    rule: &dyn DecisionRule,
    deltas: &[f64],
    draws: usize,
    seed: u64,
) -> Result<Vec<SweepEntry<EstimateReport>>> {
    bandwidth_sweep_with(dataset, rule, deltas, draws, seed, tsls_aps)
}
