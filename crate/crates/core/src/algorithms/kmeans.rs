use std::collections::BTreeSet;

use super::{DecisionRule, RuleSpec};
use crate::error::{Error, Result};

/// Targets the union of K-means cells `∪_{k∈T} S_k`: recommend when the
/// nearest centroid is a target. Equidistant points go to the lowest index.
#[derive(Debug, Clone, PartialEq)]
pub struct KMeansRule {
    centroids: Vec<Vec<f64>>,
    targets: BTreeSet<usize>,
}

pub fn kmeans_target_rule(
    centroids: Vec<Vec<f64>>,
    targets: impl IntoIterator<Item = usize>,
) -> Result<KMeansRule> {
    if centroids.len() < 2 {
        return Err(Error::InvalidParameter(
            "k-means rule needs at least two centroids".into(),
        ));
    }
    let dim = centroids[0].len();
    if dim == 0 {
        return Err(Error::InvalidParameter("centroids must be nonempty".into()));
    }
    for c in &centroids {
        if c.len() != dim {
            return Err(Error::DimensionMismatch {
                what: "centroid",
                expected: dim,
                found: c.len(),
            });
        }
    }
    for i in 0..centroids.len() {
        for j in i + 1..centroids.len() {
            if centroids[i] == centroids[j] {
                return Err(Error::DuplicateCentroids(i, j));
            }
        }
    }
    let targets: BTreeSet<usize> = targets.into_iter().collect();
    if let Some(&bad) = targets.iter().find(|&&t| t >= centroids.len()) {
        return Err(Error::InvalidParameter(format!(
            "target index {bad} out of range"
        )));
    }
    Ok(KMeansRule { centroids, targets })
}

impl KMeansRule {
    fn sq_dists(&self, x: &[f64]) -> Vec<f64> {
        self.centroids
            .iter()
            .map(|c| c.iter().zip(x).map(|(a, b)| (a - b) * (a - b)).sum())
            .collect()
    }

    /// Index of the nearest centroid, lowest index on ties.
    pub fn assign(&self, x: &[f64]) -> usize {
        let d = self.sq_dists(x);
        let mut best = 0;
        for k in 1..d.len() {
            if d[k] < d[best] {
                best = k;
            }
        }
        best
    }

    /// The set `C(x)` of nearest centroids, with a relative tie tolerance.
    pub fn nearest_set(&self, x: &[f64]) -> Vec<usize> {
        let d = self.sq_dists(x);
        let min = d.iter().cloned().fold(f64::INFINITY, f64::min);
        let tol = 1e-12 * min.max(1e-300);
        (0..d.len()).filter(|&k| d[k] - min <= tol).collect()
    }
}

impl DecisionRule for KMeansRule {
    fn cont_dim(&self) -> usize {
        self.centroids[0].len()
    }

    fn evaluate(&self, x: &[f64], _: &[i64]) -> f64 {
        if self.targets.contains(&self.assign(x)) {
            1.0
        } else {
            0.0
        }
    }

    /// 0 or 1 when all nearest centroids agree; 0.5 on a two-cell boundary
    /// between a target and a non-target cell. Junctions of three or more
    /// cells depend on the boundary angles and are left unresolved.
    fn aps_limit(&self, x: &[f64], _: &[i64]) -> Option<f64> {
        let near = self.nearest_set(x);
        let hits = near.iter().filter(|k| self.targets.contains(k)).count();
        if hits == 0 {
            Some(0.0)
        } else if hits == near.len() {
            Some(1.0)
        } else if near.len() == 2 {
            Some(0.5)
        } else {
            None
        }
    }

    fn descriptor(&self) -> Option<RuleSpec> {
        Some(RuleSpec::Kmeans {
            centroids: self.centroids.clone(),
            targets: self.targets.iter().copied().collect(),
        })
    }
}
