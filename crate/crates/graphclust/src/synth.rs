//! Synthetic planted-partition graphs with known ground truth.
//!
//! Each node belongs to a block; a pair's weight distribution depends only
//! on whether its endpoints share a block. Because the generating
//! distribution is known in closed form, the *exact* expected prediction
//! loss of any model can be computed by enumerating node pairs — the
//! oracle against which the generalization bound is validated.

use std::fmt::Write as _;
use std::sync::Arc;

use rand_chacha::ChaCha8Rng;
use rand_core::SeedableRng;

use crate::data::{uniform_f64, uniform_index, uniform_range, EdgeDataset, EdgeObservation, NodeSpace};
use crate::error::{Error, Result};
use crate::model::ClusterModel;
use crate::optimizer::derive_seed;

/// Conditional weight law of a node pair given its block-pair mean `m`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum WeightModel {
    /// `clamp(m + u, 0, 1)` with `u` uniform on `[-noise, +noise]`; the
    /// clamping bias is part of the exact computation.
    #[default]
    TruncatedUniform,
    /// Weight 1 with probability `m`, else 0 (binary weights, alphabet
    /// size 2).
    Bernoulli,
}

/// Describes a planted-partition instance.
#[derive(Debug, Clone)]
pub struct PlantedPartitionSpec {
    pub num_nodes: usize,
    pub num_blocks: usize,
    pub intra_weight_mean: f64,
    pub inter_weight_mean: f64,
    /// Half-width of the uniform weight noise (ignored for Bernoulli).
    pub weight_noise: f64,
    /// Probability that each unordered pair is observed.
    pub edge_observation_rate: f64,
    pub weight_model: WeightModel,
    pub seed: u64,
}

impl PlantedPartitionSpec {
    pub fn new(num_nodes: usize, num_blocks: usize) -> Self {
        Self {
            num_nodes,
            num_blocks,
            intra_weight_mean: 0.9,
            inter_weight_mean: 0.1,
            weight_noise: 0.0,
            edge_observation_rate: 1.0,
            weight_model: WeightModel::TruncatedUniform,
            seed: 0,
        }
    }

    fn validate(&self) -> Result<()> {
        if self.num_nodes < 2 {
            return Err(Error::Config("need at least 2 nodes".into()));
        }
        if self.num_blocks == 0 || self.num_blocks > self.num_nodes {
            return Err(Error::Config(format!(
                "{} blocks for {} nodes",
                self.num_blocks, self.num_nodes
            )));
        }
        for (name, v) in
            [("intra", self.intra_weight_mean), ("inter", self.inter_weight_mean)]
        {
            if !(0.0..=1.0).contains(&v) {
                return Err(Error::Config(format!("{name} weight mean {v} outside [0, 1]")));
            }
        }
        if !self.weight_noise.is_finite() || self.weight_noise < 0.0 {
            return Err(Error::Config(format!("bad weight noise {}", self.weight_noise)));
        }
        if !(self.edge_observation_rate > 0.0 && self.edge_observation_rate <= 1.0) {
            return Err(Error::Config(format!(
                "observation rate {} outside (0, 1]",
                self.edge_observation_rate
            )));
        }
        Ok(())
    }
}

/// The generating distribution: uniform over unordered node pairs, with a
/// known conditional weight law per pair. Supports exact expected-loss
/// evaluation, fresh weight draws, and i.i.d. sampling with repetition.
#[derive(Debug, Clone)]
pub struct TrueDistribution {
    labels: Vec<usize>,
    intra: f64,
    inter: f64,
    noise: f64,
    weight_model: WeightModel,
    nodes: Arc<NodeSpace>,
}

impl TrueDistribution {
    pub fn block_labels(&self) -> &[usize] {
        &self.labels
    }

    /// Mean weight of the pair `(i, j)` under the clamped noise law.
    pub fn pair_mean(&self, i: usize, j: usize) -> f64 {
        let m = if self.labels[i] == self.labels[j] { self.intra } else { self.inter };
        match self.weight_model {
            WeightModel::Bernoulli => m,
            WeightModel::TruncatedUniform => {
                // clamping shifts the mean when the noise window leaves [0, 1]
                let (e, _) = clamped_uniform_moments(m, self.noise);
                e
            }
        }
    }

    /// Draws one weight for the pair `(i, j)`.
    pub fn sample_weight(&self, i: usize, j: usize, rng: &mut ChaCha8Rng) -> f64 {
        let m = if self.labels[i] == self.labels[j] { self.intra } else { self.inter };
        match self.weight_model {
            WeightModel::Bernoulli => {
                if uniform_f64(rng) < m {
                    1.0
                } else {
                    0.0
                }
            }
            WeightModel::TruncatedUniform => {
                if self.noise == 0.0 {
                    m
                } else {
                    (m + uniform_range(rng, -self.noise, self.noise)).clamp(0.0, 1.0)
                }
            }
        }
    }

    /// Exact expected quadratic loss of `model` under this distribution:
    /// the average over all unordered pairs of `E[(w - p)^2]`, with the
    /// inner expectation integrated in closed form (including clamping
    /// mass at 0 and 1 for the noisy law).
    pub fn exact_expected_loss(&self, model: &ClusterModel) -> Result<f64> {
        let n = self.labels.len();
        if model.num_nodes() != n {
            return Err(Error::DimensionMismatch(format!(
                "model covers {} nodes, distribution has {n}",
                model.num_nodes()
            )));
        }
        let mut sum = 0.0;
        let mut pairs = 0usize;
        for i in 0..n {
            for j in (i + 1)..n {
                let p = model.predict_edge(i, j);
                let m = if self.labels[i] == self.labels[j] { self.intra } else { self.inter };
                sum += match self.weight_model {
                    // E[(w - p)^2] = (m - p)^2 + Var(w) for w ~ Bernoulli(m)
                    WeightModel::Bernoulli => (m - p) * (m - p) + m * (1.0 - m),
                    WeightModel::TruncatedUniform => {
                        expected_sq_error_clamped_uniform(m, self.noise, p)
                    }
                };
                pairs += 1;
            }
        }
        Ok(sum / pairs as f64)
    }

    /// Draws `n` observations i.i.d. (pairs with repetition, fresh weight
    /// each time), matching the sampling model the generalization bound
    /// assumes. The result may contain repeated pairs.
    pub fn sample_iid(&self, n: usize, seed: u64) -> Result<EdgeDataset> {
        if n == 0 {
            return Err(Error::EmptyDataset);
        }
        let num_nodes = self.labels.len();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut edges = Vec::with_capacity(n);
        for _ in 0..n {
            let i = uniform_index(&mut rng, num_nodes);
            let j = loop {
                let j = uniform_index(&mut rng, num_nodes);
                if j != i {
                    break j;
                }
            };
            let (i, j) = (i.min(j), i.max(j));
            let w = self.sample_weight(i, j, &mut rng);
            edges.push(EdgeObservation { i, j, w });
        }
        EdgeDataset::with_repetition(Arc::clone(&self.nodes), edges, true)
    }
}

/// Mean and second moment of `clamp(m + U(-a, a), 0, 1)`.
fn clamped_uniform_moments(m: f64, a: f64) -> (f64, f64) {
    if a == 0.0 {
        return (m, m * m);
    }
    let lo = m - a;
    let hi = m + a;
    let width = hi - lo;
    // mass clamped to 0 contributes nothing to either moment
    let p1 = ((hi - 1.0).clamp(0.0, width)) / width; // mass clamped to 1
    let a0 = lo.max(0.0);
    let b0 = hi.min(1.0);
    let (mid_mean, mid_sq) = if b0 > a0 {
        let mean = 0.5 * (a0 + b0) * (b0 - a0) / width;
        let sq = (b0 * b0 * b0 - a0 * a0 * a0) / (3.0 * width);
        (mean, sq)
    } else {
        (0.0, 0.0)
    };
    (mid_mean + p1, mid_sq + p1)
}

/// Closed-form `E[(w - p)^2]` for `w = clamp(m + U(-a, a), 0, 1)`.
fn expected_sq_error_clamped_uniform(m: f64, a: f64, p: f64) -> f64 {
    let (e, e2) = clamped_uniform_moments(m, a);
    e2 - 2.0 * p * e + p * p
}

/// Generates the dataset, the ground-truth block labels, and the true
/// distribution handle. Nodes are assigned to blocks round-robin; each
/// unordered pair is observed independently with the spec's rate.
pub fn generate(spec: &PlantedPartitionSpec) -> Result<(EdgeDataset, Vec<usize>, TrueDistribution)> {
    spec.validate()?;
    let n = spec.num_nodes;
    let labels: Vec<usize> = (0..n).map(|i| i % spec.num_blocks).collect();
    let nodes = Arc::new(NodeSpace::with_labels((0..n).map(|i| i.to_string()).collect())?);
    let truth = TrueDistribution {
        labels: labels.clone(),
        intra: spec.intra_weight_mean,
        inter: spec.inter_weight_mean,
        noise: spec.weight_noise,
        weight_model: spec.weight_model,
        nodes: Arc::clone(&nodes),
    };
    let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(spec.seed, 0x5e_ed));
    let mut edges = Vec::new();
    for i in 0..n {
        for j in (i + 1)..n {
            if spec.edge_observation_rate < 1.0 && uniform_f64(&mut rng) >= spec.edge_observation_rate
            {
                continue;
            }
            let w = truth.sample_weight(i, j, &mut rng);
            edges.push(EdgeObservation { i, j, w });
        }
    }
    if edges.is_empty() {
        return Err(Error::Data("observation rate left no edges".into()));
    }
    let dataset = EdgeDataset::new(nodes, edges, true)?;
    Ok((dataset, labels, truth))
}

/// Two-column `node label` text for ground-truth labels.
pub fn labels_to_text(nodes: &NodeSpace, labels: &[usize]) -> String {
    let mut out = String::new();
    for (i, &l) in labels.iter().enumerate() {
        let _ = writeln!(out, "{}\t{}", nodes.label(i), l);
    }
    out
}

/// Reads a `node label` file back into per-node labels, resolving node
/// names against the given space.
pub fn labels_from_text(nodes: &NodeSpace, text: &str) -> Result<Vec<usize>> {
    let mut labels = vec![usize::MAX; nodes.size()];
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.strip_suffix('\r').unwrap_or(raw);
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let mut it = line.split('\t');
        let (node, label) = match (it.next(), it.next(), it.next()) {
            (Some(n), Some(l), None) => (n, l),
            _ => {
                return Err(Error::Parse {
                    line: lineno + 1,
                    msg: "expected `node <TAB> label`".into(),
                })
            }
        };
        let idx = nodes.index_of(node).ok_or_else(|| Error::Parse {
            line: lineno + 1,
            msg: format!("unknown node {node:?}"),
        })?;
        labels[idx] = label.parse().map_err(|_| Error::Parse {
            line: lineno + 1,
            msg: format!("bad label {label:?}"),
        })?;
    }
    if labels.contains(&usize::MAX) {
        return Err(Error::Data("label file does not cover every node".into()));
    }
    Ok(labels)
}

/// Adjusted Rand index between two labelings of the same nodes: 1 for
/// identical partitions (up to renaming), approximately 0 for independent
/// ones. Degenerate cases where the index is 0/0 score 1.
pub fn adjusted_rand_index(a: &[usize], b: &[usize]) -> Result<f64> {
    if a.len() != b.len() || a.is_empty() {
        return Err(Error::DimensionMismatch(format!(
            "label vectors of length {} and {}",
            a.len(),
            b.len()
        )));
    }
    let ka = a.iter().max().unwrap() + 1;
    let kb = b.iter().max().unwrap() + 1;
    let mut contingency = vec![0u64; ka * kb];
    let mut rows = vec![0u64; ka];
    let mut cols = vec![0u64; kb];
    for (&x, &y) in a.iter().zip(b) {
        contingency[x * kb + y] += 1;
        rows[x] += 1;
        cols[y] += 1;
    }
    let choose2 = |n: u64| (n * n.saturating_sub(1)) as f64 / 2.0;
    let sum_ij: f64 = contingency.iter().map(|&n| choose2(n)).sum();
    let sum_a: f64 = rows.iter().map(|&n| choose2(n)).sum();
    let sum_b: f64 = cols.iter().map(|&n| choose2(n)).sum();
    let total = choose2(a.len() as u64);
    let expected = sum_a * sum_b / total;
    let max_index = 0.5 * (sum_a + sum_b);
    if (max_index - expected).abs() < 1e-12 {
        return Ok(1.0);
    }
    Ok((sum_ij - expected) / (max_index - expected))
}
