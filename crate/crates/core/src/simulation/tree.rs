//! Axis-aligned regression tree with squared-error splits.

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TreeParams {
    pub max_depth: usize,
    pub min_leaf: usize,
}

impl Default for TreeParams {
    fn default() -> Self {
        Self {
            max_depth: 4,
            min_leaf: 10,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
enum Node {
    Leaf(f64),
    /// Go left when `x[feature] <= threshold`.
    Split {
        feature: usize,
        threshold: f64,
        left: usize,
        right: usize,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegressionTree {
    nodes: Vec<Node>,
    dim: usize,
}

impl RegressionTree {
    /// Fits a tree to row-major `x` (`n × dim`) and `y`.
    pub fn fit(x: &[f64], y: &[f64], dim: usize, params: TreeParams) -> Self {
        assert_eq!(x.len(), y.len() * dim);
        let mut tree = RegressionTree {
            nodes: Vec::new(),
            dim,
        };
        let idx: Vec<usize> = (0..y.len()).collect();
        tree.grow(x, y, idx, 0, params);
        tree
    }

    fn grow(&mut self, x: &[f64], y: &[f64], idx: Vec<usize>, depth: usize, params: TreeParams) -> usize {
        let id = self.nodes.len();
        let mean = idx.iter().map(|&i| y[i]).sum::<f64>() / idx.len().max(1) as f64;
        self.nodes.push(Node::Leaf(mean));
        if depth >= params.max_depth || idx.len() < 2 * params.min_leaf.max(1) {
            return id;
        }
        let Some((feature, threshold)) = self.best_split(x, y, &idx, params.min_leaf.max(1)) else {
            return id;
        };
        let (l, r): (Vec<usize>, Vec<usize>) =
            idx.iter().partition(|&&i| x[i * self.dim + feature] <= threshold);
        let left = self.grow(x, y, l, depth + 1, params);
        let right = self.grow(x, y, r, depth + 1, params);
        self.nodes[id] = Node::Split {
            feature,
            threshold,
            left,
            right,
        };
        id
    }

    /// Split with the largest reduction in squared error; ties keep the
    /// first candidate in (feature, position) order.
    fn best_split(&self, x: &[f64], y: &[f64], idx: &[usize], min_leaf: usize) -> Option<(usize, f64)> {
        let n = idx.len();
        let total: f64 = idx.iter().map(|&i| y[i]).sum();
        let base = total * total / n as f64;
        let mut best: Option<(f64, usize, f64)> = None;
        let mut order = idx.to_vec();
        for f in 0..self.dim {
            let key = |i: usize| x[i * self.dim + f];
            order.sort_by(|&a, &b| key(a).total_cmp(&key(b)).then(a.cmp(&b)));
            let mut left_sum = 0.0;
            for pos in 0..n - 1 {
                left_sum += y[order[pos]];
                let nl = pos + 1;
                let nr = n - nl;
                if nl < min_leaf || nr < min_leaf {
                    continue;
                }
                let (a, b) = (key(order[pos]), key(order[pos + 1]));
                if a == b {
                    continue;
                }
                let right_sum = total - left_sum;
                // Gain in Σŷ², equivalent to the drop in squared error.
                let gain = left_sum * left_sum / nl as f64 + right_sum * right_sum / nr as f64 - base;
                if best.is_none_or(|(g, _, _)| gain > g) {
                    best = Some((gain, f, a + 0.5 * (b - a)));
                }
            }
        }
        best.filter(|(g, _, _)| *g > 1e-12 * base.abs().max(1e-300))
            .map(|(_, f, t)| (f, t))
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn predict(&self, x: &[f64]) -> f64 {
        let mut id = 0;
        loop {
            match self.nodes[id] {
                Node::Leaf(v) => return v,
                Node::Split {
                    feature,
                    threshold,
                    left,
                    right,
                } => id = if x[feature] <= threshold { left } else { right },
            }
        }
    }

    pub fn n_leaves(&self) -> usize {
        self.nodes.iter().filter(|n| matches!(n, Node::Leaf(_))).count()
    }

    pub fn leaf_values(&self) -> Vec<f64> {
        self.nodes
            .iter()
            .filter_map(|n| match n {
                Node::Leaf(v) => Some(*v),
                _ => None,
            })
            .collect()
    }

    /// Range `(min, max)` of predictions over the box `[lo, hi]`.
    pub fn range_on_box(&self, lo: &[f64], hi: &[f64]) -> (f64, f64) {
        let mut range = (f64::INFINITY, f64::NEG_INFINITY);
        let mut stack = vec![0];
        while let Some(id) = stack.pop() {
            match self.nodes[id] {
                Node::Leaf(v) => {
                    range.0 = range.0.min(v);
                    range.1 = range.1.max(v);
                }
                Node::Split {
                    feature,
                    threshold,
                    left,
                    right,
                } => {
                    if lo[feature] <= threshold {
                        stack.push(left);
                    }
                    if hi[feature] > threshold {
                        stack.push(right);
                    }
                }
            }
        }
        range
    }
}
