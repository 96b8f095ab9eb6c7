//! Weighted edge-list ingestion, weight scaling, and reproducible
//! train/cross-validation/test splitting.
//!
//! A dataset is a fixed space of nodes plus a sample of observed edge
//! weights in `[0, 1]`. Files are UTF-8 text, one `src <TAB> dst <TAB> weight`
//! triple per line, `#` starting a comment line, LF or CRLF endings.

use std::collections::HashMap;
use std::fmt::Write as _;
use std::sync::Arc;

use rand_chacha::ChaCha8Rng;
use rand_core::{RngCore, SeedableRng};

use crate::error::{Error, Result};

/// The node space: how many nodes exist and, optionally, their string labels.
#[derive(Debug, Clone, PartialEq)]
pub struct NodeSpace {
    size: usize,
    labels: Option<Vec<String>>,
}

impl NodeSpace {
    pub fn new(size: usize) -> Result<Self> {
        if size < 2 {
            return Err(Error::Data(format!("node space needs >= 2 nodes, got {size}")));
        }
        Ok(Self { size, labels: None })
    }

    pub fn with_labels(labels: Vec<String>) -> Result<Self> {
        if labels.len() < 2 {
            return Err(Error::Data(format!(
                "node space needs >= 2 nodes, got {}",
                labels.len()
            )));
        }
        let mut seen = HashMap::new();
        for (i, l) in labels.iter().enumerate() {
            if seen.insert(l.clone(), i).is_some() {
                return Err(Error::Data(format!("duplicate node label {l:?}")));
            }
        }
        Ok(Self { size: labels.len(), labels: Some(labels) })
    }

    pub fn size(&self) -> usize {
        self.size
    }

    pub fn labels(&self) -> Option<&[String]> {
        self.labels.as_deref()
    }

    /// Label of node `i`, falling back to the index itself.
    pub fn label(&self, i: usize) -> String {
        match &self.labels {
            Some(ls) => ls[i].clone(),
            None => i.to_string(),
        }
    }

    /// Index of the node carrying `label`, if any.
    pub fn index_of(&self, label: &str) -> Option<usize> {
        match &self.labels {
            Some(ls) => ls.iter().position(|l| l == label),
            None => label.parse::<usize>().ok().filter(|&i| i < self.size),
        }
    }
}

/// One observed edge: endpoints and a weight in `[0, 1]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EdgeObservation {
    pub i: usize,
    pub j: usize,
    pub w: f64,
}

/// A node space together with a sample of observed edge weights.
///
/// For symmetric datasets at most one orientation of each edge is stored.
/// The observation count `N` is the sample size entering losses and bounds.
#[derive(Debug, Clone, PartialEq)]
pub struct EdgeDataset {
    nodes: Arc<NodeSpace>,
    edges: Vec<EdgeObservation>,
    symmetric: bool,
}

impl EdgeDataset {
    /// Builds a dataset, rejecting out-of-range weights, out-of-bounds
    /// indices, and duplicate pairs (in either orientation when symmetric).
    pub fn new(nodes: Arc<NodeSpace>, edges: Vec<EdgeObservation>, symmetric: bool) -> Result<Self> {
        let mut seen = HashMap::new();
        for e in &edges {
            validate_edge(&nodes, e)?;
            let key = if symmetric { (e.i.min(e.j), e.i.max(e.j)) } else { (e.i, e.j) };
            if seen.insert(key, (e.i, e.j)).is_some() {
                return Err(Error::Data(format!("duplicate edge ({}, {})", e.i, e.j)));
            }
        }
        Ok(Self { nodes, edges, symmetric })
    }

    /// Builds a dataset that may contain repeated pairs, for samples drawn
    /// i.i.d. with repetition (e.g. synthetic bound-validation draws).
    /// File-based ingestion never takes this path.
    pub fn with_repetition(
        nodes: Arc<NodeSpace>,
        edges: Vec<EdgeObservation>,
        symmetric: bool,
    ) -> Result<Self> {
        for e in &edges {
            validate_edge(&nodes, e)?;
        }
        Ok(Self { nodes, edges, symmetric })
    }

    pub fn nodes(&self) -> &Arc<NodeSpace> {
        &self.nodes
    }

    pub fn num_nodes(&self) -> usize {
        self.nodes.size()
    }

    pub fn edges(&self) -> &[EdgeObservation] {
        &self.edges
    }

    /// Sample size `N`.
    pub fn num_edges(&self) -> usize {
        self.edges.len()
    }

    pub fn is_symmetric(&self) -> bool {
        self.symmetric
    }

    pub fn is_empty(&self) -> bool {
        self.edges.is_empty()
    }

    /// Mean of the observed weights.
    pub fn mean_weight(&self) -> Result<f64> {
        if self.edges.is_empty() {
            return Err(Error::EmptyDataset);
        }
        Ok(self.edges.iter().map(|e| e.w).sum::<f64>() / self.edges.len() as f64)
    }

    /// Population variance of the observed weights.
    pub fn weight_variance(&self) -> Result<f64> {
        let m = self.mean_weight()?;
        Ok(self.edges.iter().map(|e| (e.w - m) * (e.w - m)).sum::<f64>() / self.edges.len() as f64)
    }

    /// Serializes to the tab-separated edge-list format. Parsing the output
    /// with the same options reproduces the dataset exactly; nodes that
    /// appear in no edge are not representable in this format (the split
    /// manifest is the exact-reproduction mechanism for split shares).
    pub fn to_edge_list(&self) -> String {
        let mut out = String::new();
        for e in &self.edges {
            let _ = writeln!(out, "{}\t{}\t{}", self.nodes.label(e.i), self.nodes.label(e.j), e.w);
        }
        out
    }
}

fn validate_edge(nodes: &NodeSpace, e: &EdgeObservation) -> Result<()> {
    if e.i >= nodes.size() || e.j >= nodes.size() {
        return Err(Error::Data(format!(
            "edge ({}, {}) out of bounds for {} nodes",
            e.i,
            e.j,
            nodes.size()
        )));
    }
    if !e.w.is_finite() || e.w < 0.0 || e.w > 1.0 {
        return Err(Error::Data(format!("edge weight {} outside [0, 1]", e.w)));
    }
    Ok(())
}

/// How raw weights are mapped into `[0, 1]` at ingestion.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ScaleMethod {
    /// Weights must already lie in `[0, 1]`.
    #[default]
    None,
    /// Affine map of `[min, max]` onto `[0, 1]`; constant data maps to 0.5.
    MinMax,
    /// `exp(-latency / median(latencies))` for nonnegative raw latencies.
    NegExpMedian,
}

impl ScaleMethod {
    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "none" => Ok(Self::None),
            "minmax" => Ok(Self::MinMax),
            "neg-exp-median" | "neg_exp_median" => Ok(Self::NegExpMedian),
            other => Err(Error::Config(format!("unknown scale method {other:?}"))),
        }
    }
}

/// Options controlling edge-list parsing.
#[derive(Debug, Clone)]
pub struct ParseOptions {
    pub symmetric: bool,
    pub allow_self_loops: bool,
    pub comment_prefix: char,
    pub scale: ScaleMethod,
}

impl Default for ParseOptions {
    fn default() -> Self {
        Self {
            symmetric: false,
            allow_self_loops: false,
            comment_prefix: '#',
            scale: ScaleMethod::None,
        }
    }
}

/// Parses a tab-separated edge list. Node labels are assigned dense indices
/// in order of first appearance. A repeated `(i, j)` pair is an error; for
/// symmetric datasets the mirrored pair `(j, i)` merges silently when the
/// weights agree and errors when they conflict.
pub fn parse_edge_list(text: &str, options: &ParseOptions) -> Result<EdgeDataset> {
    let mut labels: Vec<String> = Vec::new();
    let mut index: HashMap<String, usize> = HashMap::new();
    let mut edges: Vec<EdgeObservation> = Vec::new();
    // canonical pair -> (orientation as read, position in `edges`)
    let mut seen: HashMap<(usize, usize), (usize, usize, usize)> = HashMap::new();

    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.strip_suffix('\r').unwrap_or(raw);
        let lineno = lineno + 1;
        if line.is_empty() || line.starts_with(options.comment_prefix) {
            continue;
        }
        let fields: Vec<&str> = line.split('\t').collect();
        if fields.len() != 3 {
            return Err(Error::Parse {
                line: lineno,
                msg: format!("expected 3 tab-separated fields, found {}", fields.len()),
            });
        }
        if fields[0].is_empty() || fields[1].is_empty() {
            return Err(Error::Parse { line: lineno, msg: "empty node label".into() });
        }
        let w: f64 = fields[2].parse().map_err(|_| Error::Parse {
            line: lineno,
            msg: format!("non-numeric weight {:?}", fields[2]),
        })?;
        if !w.is_finite() {
            return Err(Error::Parse { line: lineno, msg: format!("non-finite weight {w}") });
        }
        if options.scale == ScaleMethod::None && !(0.0..=1.0).contains(&w) {
            return Err(Error::Parse {
                line: lineno,
                msg: format!("weight {w} outside [0, 1] and scaling is disabled"),
            });
        }

        let mut intern = |label: &str| -> usize {
            *index.entry(label.to_string()).or_insert_with(|| {
                labels.push(label.to_string());
                labels.len() - 1
            })
        };
        let i = intern(fields[0]);
        let j = intern(fields[1]);
        if i == j && !options.allow_self_loops {
            return Err(Error::Parse {
                line: lineno,
                msg: format!("self-loop on {:?} (self-loops are disabled)", fields[0]),
            });
        }

        let key = if options.symmetric { (i.min(j), i.max(j)) } else { (i, j) };
        match seen.get(&key) {
            None => {
                seen.insert(key, (i, j, edges.len()));
                edges.push(EdgeObservation { i, j, w });
            }
            Some(&(pi, pj, pos)) => {
                if options.symmetric && (pi, pj) != (i, j) {
                    // mirrored copy of an undirected edge
                    if edges[pos].w == w {
                        continue;
                    }
                    return Err(Error::Parse {
                        line: lineno,
                        msg: format!(
                            "edge ({}, {}) conflicts with its mirror: {} vs {}",
                            fields[0], fields[1], w, edges[pos].w
                        ),
                    });
                }
                return Err(Error::Parse {
                    line: lineno,
                    msg: format!("duplicate edge ({}, {})", fields[0], fields[1]),
                });
            }
        }
    }

    if edges.is_empty() {
        return Err(Error::EmptyDataset);
    }
    let nodes = Arc::new(NodeSpace::with_labels(labels)?);
    let dataset = EdgeDataset { nodes, edges, symmetric: options.symmetric };
    match options.scale {
        ScaleMethod::None => Ok(dataset),
        method => scale_weights(&dataset, method),
    }
}

/// Maps raw weights into `[0, 1]` by the chosen method. The input is a
/// structurally valid dataset whose weights may lie outside the unit range.
pub fn scale_weights(data: &EdgeDataset, method: ScaleMethod) -> Result<EdgeDataset> {
    if data.edges.is_empty() {
        return Err(Error::EmptyDataset);
    }
    for e in &data.edges {
        if !e.w.is_finite() {
            return Err(Error::Data(format!("non-finite weight {}", e.w)));
        }
    }
    let scaled: Vec<EdgeObservation> = match method {
        ScaleMethod::None => {
            for e in &data.edges {
                if e.w < 0.0 || e.w > 1.0 {
                    return Err(Error::Data(format!("weight {} outside [0, 1]", e.w)));
                }
            }
            data.edges.clone()
        }
        ScaleMethod::MinMax => {
            let min = data.edges.iter().map(|e| e.w).fold(f64::INFINITY, f64::min);
            let max = data.edges.iter().map(|e| e.w).fold(f64::NEG_INFINITY, f64::max);
            data.edges
                .iter()
                .map(|e| {
                    let w = if max > min { ((e.w - min) / (max - min)).clamp(0.0, 1.0) } else { 0.5 };
                    EdgeObservation { w, ..*e }
                })
                .collect()
        }
        ScaleMethod::NegExpMedian => {
            if data.edges.iter().any(|e| e.w < 0.0) {
                return Err(Error::Data("negative latency under neg-exp-median scaling".into()));
            }
            let med = median(data.edges.iter().map(|e| e.w));
            if med <= 0.0 {
                return Err(Error::Data("median latency is zero; cannot scale".into()));
            }
            data.edges
                .iter()
                .map(|e| EdgeObservation { w: (-e.w / med).exp().clamp(0.0, 1.0), ..*e })
                .collect()
        }
    };
    Ok(EdgeDataset { nodes: Arc::clone(&data.nodes), edges: scaled, symmetric: data.symmetric })
}

fn median(values: impl Iterator<Item = f64>) -> f64 {
    let mut v: Vec<f64> = values.collect();
    v.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

/// Outcome of a reproducible split: the three shares plus the manifest that
/// reconstructs them exactly from the original dataset.
#[derive(Debug, Clone)]
pub struct SplitResult {
    pub train: EdgeDataset,
    pub cv: EdgeDataset,
    pub test: EdgeDataset,
    pub manifest: SplitManifest,
}

/// Records a split's seed, fractions, and edge-index lists.
#[derive(Debug, Clone, PartialEq)]
pub struct SplitManifest {
    pub seed: u64,
    pub fractions: (f64, f64, f64),
    pub train_indices: Vec<usize>,
    pub cv_indices: Vec<usize>,
    pub test_indices: Vec<usize>,
}

impl SplitManifest {
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "seed {}", self.seed);
        let _ = writeln!(out, "fractions {} {} {}", self.fractions.0, self.fractions.1, self.fractions.2);
        for (name, idx) in [
            ("train", &self.train_indices),
            ("cv", &self.cv_indices),
            ("test", &self.test_indices),
        ] {
            let _ = write!(out, "{name}");
            for i in idx {
                let _ = write!(out, " {i}");
            }
            let _ = writeln!(out);
        }
        out
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let mut seed = None;
        let mut fractions = None;
        let mut lists: HashMap<&str, Vec<usize>> = HashMap::new();
        for line in text.lines() {
            let line = line.strip_suffix('\r').unwrap_or(line);
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let mut it = line.split_whitespace();
            let tag = it.next().unwrap_or("");
            match tag {
                "seed" => {
                    seed = Some(
                        it.next()
                            .and_then(|s| s.parse().ok())
                            .ok_or_else(|| Error::Data("bad manifest seed".into()))?,
                    )
                }
                "fractions" => {
                    let v: Vec<f64> = it.map(|s| s.parse().unwrap_or(f64::NAN)).collect();
                    if v.len() != 3 || v.iter().any(|x| !x.is_finite()) {
                        return Err(Error::Data("bad manifest fractions".into()));
                    }
                    fractions = Some((v[0], v[1], v[2]));
                }
                "train" | "cv" | "test" => {
                    let v: std::result::Result<Vec<usize>, _> = it.map(|s| s.parse()).collect();
                    lists.insert(
                        tag,
                        v.map_err(|_| Error::Data(format!("bad manifest index list {tag}")))?,
                    );
                }
                other => return Err(Error::Data(format!("unknown manifest line {other:?}"))),
            }
        }
        Ok(Self {
            seed: seed.ok_or_else(|| Error::Data("manifest missing seed".into()))?,
            fractions: fractions.ok_or_else(|| Error::Data("manifest missing fractions".into()))?,
            train_indices: lists.remove("train").unwrap_or_default(),
            cv_indices: lists.remove("cv").unwrap_or_default(),
            test_indices: lists.remove("test").unwrap_or_default(),
        })
    }

    /// Rebuilds the three shares from the dataset the manifest was made for.
    pub fn apply(&self, data: &EdgeDataset) -> Result<(EdgeDataset, EdgeDataset, EdgeDataset)> {
        let pick = |idx: &[usize]| -> Result<EdgeDataset> {
            let mut edges = Vec::with_capacity(idx.len());
            for &i in idx {
                let e = data
                    .edges
                    .get(i)
                    .ok_or_else(|| Error::Data(format!("manifest index {i} out of range")))?;
                edges.push(*e);
            }
            Ok(EdgeDataset { nodes: Arc::clone(&data.nodes), edges, symmetric: data.symmetric })
        };
        Ok((pick(&self.train_indices)?, pick(&self.cv_indices)?, pick(&self.test_indices)?))
    }
}

/// Partitions the edge sample into train/cv/test shares uniformly at random.
///
/// Share sizes are `floor(N * fraction)` for train and cv with the remainder
/// going to test; all three shares reference the same node space, and the
/// same seed always produces the same split.
pub fn split(data: &EdgeDataset, fractions: (f64, f64, f64), seed: u64) -> Result<SplitResult> {
    let (ft, fc, fe) = fractions;
    for f in [ft, fc, fe] {
        if !f.is_finite() || f < 0.0 {
            return Err(Error::Config(format!("negative or non-finite fraction {f}")));
        }
    }
    if (ft + fc + fe - 1.0).abs() > 1e-9 {
        return Err(Error::Config(format!("fractions sum to {}, expected 1", ft + fc + fe)));
    }
    let n = data.num_edges();
    let n_train = floor_share(n, ft);
    let n_cv = floor_share(n, fc);
    if n_train + n_cv > n {
        return Err(Error::Config("train and cv fractions exceed the sample".into()));
    }
    let n_test = n - n_train - n_cv;
    for (f, sz, name) in [(ft, n_train, "train"), (fc, n_cv, "cv"), (fe, n_test, "test")] {
        if f > 0.0 && sz == 0 {
            return Err(Error::Config(format!("requested nonzero {name} share received zero edges")));
        }
    }

    let mut order: Vec<usize> = (0..n).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    // Fisher-Yates
    for k in (1..n).rev() {
        let r = uniform_index(&mut rng, k + 1);
        order.swap(k, r);
    }
    let mut train_indices: Vec<usize> = order[..n_train].to_vec();
    let mut cv_indices: Vec<usize> = order[n_train..n_train + n_cv].to_vec();
    let mut test_indices: Vec<usize> = order[n_train + n_cv..].to_vec();
    train_indices.sort_unstable();
    cv_indices.sort_unstable();
    test_indices.sort_unstable();

    let manifest = SplitManifest { seed, fractions, train_indices, cv_indices, test_indices };
    let (train, cv, test) = manifest.apply(data)?;
    Ok(SplitResult { train, cv, test, manifest })
}

/// `floor(n * f)`, snapping to the nearest integer when `n * f` is within
/// relative 1e-9 of one so that fractions given as exact ratios `k / n`
/// yield exactly `k` despite floating-point rounding.
fn floor_share(n: usize, f: f64) -> usize {
    let x = n as f64 * f;
    let r = x.round();
    if (x - r).abs() <= 1e-9 * r.max(1.0) {
        r as usize
    } else {
        x.floor() as usize
    }
}

/// Uniform draw from `0..n` by rejection, avoiding modulo bias.
pub(crate) fn uniform_index(rng: &mut ChaCha8Rng, n: usize) -> usize {
    debug_assert!(n > 0);
    let n = n as u64;
    let zone = u64::MAX - u64::MAX % n;
    loop {
        let v = rng.next_u64();
        if v < zone {
            return (v % n) as usize;
        }
    }
}

/// Uniform draw from `[0, 1)` with 53-bit resolution.
pub(crate) fn uniform_f64(rng: &mut ChaCha8Rng) -> f64 {
    (rng.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
}

/// Uniform draw from `[lo, hi)`.
pub(crate) fn uniform_range(rng: &mut ChaCha8Rng, lo: f64, hi: f64) -> f64 {
    lo + (hi - lo) * uniform_f64(rng)
}
