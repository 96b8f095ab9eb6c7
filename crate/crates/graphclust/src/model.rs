//! The cluster-based edge-weight predictor and its training quantities.
//!
//! A model is a soft assignment `q(c|x)` of nodes to clusters together with
//! a matrix `g(c1, c2)` of predicted weights on cluster pairs. An edge
//! `(i, j)` is predicted as the mixture
//!
//! ```text
//! p(i, j) = sum_{c1, c2} q(c1|i) g(c1, c2) q(c2|j)
//! ```
//!
//! The empirical loss is the mean squared error of these predictions over
//! the observed sample, and the regularizer is the mutual information
//! between nodes and clusters under a uniform node distribution.

use std::fmt::Write as _;

use crate::data::EdgeDataset;
use crate::error::{Error, Result};

const ROW_SUM_TOL: f64 = 1e-9;
/// Assignment-mass threshold below which a cluster-pair cell is treated as
/// unobserved and falls back to the global mean weight.
const EMPTY_CELL_MASS: f64 = 1e-12;

/// Soft assignment of nodes to clusters: one distribution over `|C|`
/// clusters per node, stored row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct Assignment {
    q: Vec<f64>,
    num_nodes: usize,
    num_clusters: usize,
}

impl Assignment {
    /// Validates that every row is a distribution: entries nonnegative and
    /// summing to 1 within 1e-9.
    pub fn new(q: Vec<f64>, num_nodes: usize, num_clusters: usize) -> Result<Self> {
        if num_nodes == 0 || num_clusters == 0 || q.len() != num_nodes * num_clusters {
            return Err(Error::DimensionMismatch(format!(
                "assignment of {} values for {} nodes x {} clusters",
                q.len(),
                num_nodes,
                num_clusters
            )));
        }
        for (x, row) in q.chunks(num_clusters).enumerate() {
            let mut sum = 0.0;
            for &v in row {
                if !v.is_finite() || v < 0.0 {
                    return Err(Error::Data(format!("assignment entry {v} in row {x}")));
                }
                sum += v;
            }
            if (sum - 1.0).abs() > ROW_SUM_TOL {
                return Err(Error::Data(format!("assignment row {x} sums to {sum}")));
            }
        }
        Ok(Self { q, num_nodes, num_clusters })
    }

    /// Skips row-sum validation. Intended for perturbation analysis
    /// (finite differences) where rows are deliberately unnormalized;
    /// entries must still be finite.
    pub fn new_unchecked(q: Vec<f64>, num_nodes: usize, num_clusters: usize) -> Self {
        assert_eq!(q.len(), num_nodes * num_clusters);
        Self { q, num_nodes, num_clusters }
    }

    /// The maximum-entropy assignment: every row uniform.
    pub fn uniform(num_nodes: usize, num_clusters: usize) -> Self {
        let v = 1.0 / num_clusters as f64;
        Self { q: vec![v; num_nodes * num_clusters], num_nodes, num_clusters }
    }

    /// Hard (one-hot) assignment from per-node labels.
    pub fn hard(labels: &[usize], num_clusters: usize) -> Result<Self> {
        let mut q = vec![0.0; labels.len() * num_clusters];
        for (x, &c) in labels.iter().enumerate() {
            if c >= num_clusters {
                return Err(Error::Data(format!("label {c} exceeds {num_clusters} clusters")));
            }
            q[x * num_clusters + c] = 1.0;
        }
        Self::new(q, labels.len(), num_clusters)
    }

    pub fn num_nodes(&self) -> usize {
        self.num_nodes
    }

    pub fn num_clusters(&self) -> usize {
        self.num_clusters
    }

    pub fn row(&self, x: usize) -> &[f64] {
        &self.q[x * self.num_clusters..(x + 1) * self.num_clusters]
    }

    pub fn values(&self) -> &[f64] {
        &self.q
    }

    /// Cluster marginal under the uniform node distribution:
    /// `qbar(c) = (1/|X|) sum_x q(c|x)`.
    pub fn marginal(&self) -> Vec<f64> {
        let mut m = vec![0.0; self.num_clusters];
        for row in self.q.chunks(self.num_clusters) {
            for (c, &v) in row.iter().enumerate() {
                m[c] += v;
            }
        }
        let inv = 1.0 / self.num_nodes as f64;
        for v in &mut m {
            *v *= inv;
        }
        m
    }

    /// Mutual information between node and cluster in nats, for a uniform
    /// distribution over nodes. Zero-probability terms contribute zero.
    pub fn mutual_information(&self) -> f64 {
        let marginal = self.marginal();
        let mut sum = 0.0;
        for row in self.q.chunks(self.num_clusters) {
            for (c, &v) in row.iter().enumerate() {
                if v > 0.0 && marginal[c] > 0.0 {
                    sum += v * (v / marginal[c]).ln();
                }
            }
        }
        (sum / self.num_nodes as f64).max(0.0)
    }

    /// Hardens to per-node labels by row-wise argmax (lowest index wins ties).
    pub fn harden(&self) -> Vec<usize> {
        self.q
            .chunks(self.num_clusters)
            .map(|row| {
                let mut best = 0;
                for (c, &v) in row.iter().enumerate() {
                    if v > row[best] {
                        best = c;
                    }
                }
                best
            })
            .collect()
    }

    /// Relabels clusters: new cluster `perm[c]` receives old cluster `c`.
    pub fn permute_clusters(&self, perm: &[usize]) -> Result<Self> {
        check_permutation(perm, self.num_clusters)?;
        let mut q = vec![0.0; self.q.len()];
        for x in 0..self.num_nodes {
            for c in 0..self.num_clusters {
                q[x * self.num_clusters + perm[c]] = self.q[x * self.num_clusters + c];
            }
        }
        Ok(Self { q, ..self.clone() })
    }
}

fn check_permutation(perm: &[usize], k: usize) -> Result<()> {
    let mut seen = vec![false; k];
    if perm.len() != k || perm.iter().any(|&p| p >= k || std::mem::replace(&mut seen[p], true)) {
        return Err(Error::Data(format!("{perm:?} is not a permutation of 0..{k}")));
    }
    Ok(())
}

/// Predicted weight per cluster-pair cell, a `|C| x |C|` matrix with
/// entries in `[0, 1]`, symmetric when the dataset is.
#[derive(Debug, Clone, PartialEq)]
pub struct ClusterWeights {
    g: Vec<f64>,
    num_clusters: usize,
    symmetric: bool,
}

impl ClusterWeights {
    pub fn new(g: Vec<f64>, num_clusters: usize, symmetric: bool) -> Result<Self> {
        if g.len() != num_clusters * num_clusters || num_clusters == 0 {
            return Err(Error::DimensionMismatch(format!(
                "{} cell weights for {} clusters",
                g.len(),
                num_clusters
            )));
        }
        for &v in &g {
            if !v.is_finite() || !(0.0..=1.0).contains(&v) {
                return Err(Error::Data(format!("cell weight {v} outside [0, 1]")));
            }
        }
        if symmetric {
            for a in 0..num_clusters {
                for b in (a + 1)..num_clusters {
                    let (x, y) = (g[a * num_clusters + b], g[b * num_clusters + a]);
                    if (x - y).abs() > 1e-9 {
                        return Err(Error::Data(format!(
                            "cell weights not symmetric: g[{a}][{b}]={x} vs g[{b}][{a}]={y}"
                        )));
                    }
                }
            }
        }
        Ok(Self { g, num_clusters, symmetric })
    }

    pub fn constant(value: f64, num_clusters: usize, symmetric: bool) -> Result<Self> {
        Self::new(vec![value; num_clusters * num_clusters], num_clusters, symmetric)
    }

    pub fn num_clusters(&self) -> usize {
        self.num_clusters
    }

    pub fn is_symmetric(&self) -> bool {
        self.symmetric
    }

    pub fn get(&self, c1: usize, c2: usize) -> f64 {
        self.g[c1 * self.num_clusters + c2]
    }

    pub fn values(&self) -> &[f64] {
        &self.g
    }

    pub fn permute_clusters(&self, perm: &[usize]) -> Result<Self> {
        check_permutation(perm, self.num_clusters)?;
        let k = self.num_clusters;
        let mut g = vec![0.0; k * k];
        for a in 0..k {
            for b in 0..k {
                g[perm[a] * k + perm[b]] = self.g[a * k + b];
            }
        }
        Ok(Self { g, ..self.clone() })
    }
}

/// A full predictor: soft assignment plus cluster-pair weights.
#[derive(Debug, Clone, PartialEq)]
pub struct ClusterModel {
    pub assignment: Assignment,
    pub weights: ClusterWeights,
}

impl ClusterModel {
    pub fn new(assignment: Assignment, weights: ClusterWeights) -> Result<Self> {
        if assignment.num_clusters() != weights.num_clusters() {
            return Err(Error::DimensionMismatch(format!(
                "assignment has {} clusters, weights have {}",
                assignment.num_clusters(),
                weights.num_clusters()
            )));
        }
        Ok(Self { assignment, weights })
    }

    pub fn num_clusters(&self) -> usize {
        self.assignment.num_clusters()
    }

    pub fn num_nodes(&self) -> usize {
        self.assignment.num_nodes()
    }

    /// Mixture-mean prediction for the edge `(i, j)`:
    /// `sum_{c1, c2} q(c1|i) g(c1, c2) q(c2|j)`.
    pub fn predict_edge(&self, i: usize, j: usize) -> f64 {
        let k = self.num_clusters();
        let qi = self.assignment.row(i);
        let qj = self.assignment.row(j);
        let mut p = 0.0;
        for (a, &qa) in qi.iter().enumerate() {
            if qa == 0.0 {
                continue;
            }
            let grow = &self.weights.values()[a * k..(a + 1) * k];
            let mut inner = 0.0;
            for (b, &qb) in qj.iter().enumerate() {
                inner += grow[b] * qb;
            }
            p += qa * inner;
        }
        p
    }

    /// Mean squared prediction error over the observed sample:
    /// `(1/N) sum_(i,j) (w_ij - p(i, j))^2`. Each stored edge counts once.
    pub fn empirical_loss(&self, data: &EdgeDataset) -> Result<f64> {
        self.check_data(data)?;
        if data.is_empty() {
            return Err(Error::EmptyDataset);
        }
        let mixed = MixedWeights::new(self);
        let mut sum = 0.0;
        for e in data.edges() {
            let r = e.w - mixed.predict(&self.assignment, e.i, e.j);
            sum += r * r;
        }
        Ok(sum / data.num_edges() as f64)
    }

    /// Partial derivatives of [`Self::empirical_loss`] with respect to every
    /// raw assignment entry `q(c|x)`, holding `g` fixed. Returned row-major
    /// (`|X| x |C|`).
    ///
    /// Each stored observation contributes exactly once, accumulating into
    /// both of its endpoints' rows. The familiar matrix shorthand
    /// `4 G' Q (S o (Q' G Q - M)) / N` assumes a doubled symmetric mask and
    /// a symmetric `G`, so its constant differs; finite differences of the
    /// loss itself are the ground truth here, and the tests enforce
    /// agreement with them.
    pub fn loss_gradient(&self, data: &EdgeDataset) -> Result<Vec<f64>> {
        self.check_data(data)?;
        let k = self.num_clusters();
        let n = data.num_edges();
        let mut grad = vec![0.0; self.num_nodes() * k];
        if n == 0 {
            return Ok(grad);
        }
        let mixed = MixedWeights::new(self);
        let scale = 2.0 / n as f64;
        for e in data.edges() {
            let p = mixed.predict(&self.assignment, e.i, e.j);
            let r = scale * (p - e.w);
            // p depends on q(.|i) through G q_j and on q(.|j) through G^T q_i
            for c in 0..k {
                grad[e.i * k + c] += r * mixed.left[e.j * k + c];
            }
            for c in 0..k {
                grad[e.j * k + c] += r * mixed.right[e.i * k + c];
            }
        }
        Ok(grad)
    }

    fn check_data(&self, data: &EdgeDataset) -> Result<()> {
        if data.num_nodes() != self.num_nodes() {
            return Err(Error::DimensionMismatch(format!(
                "model covers {} nodes, dataset has {}",
                self.num_nodes(),
                data.num_nodes()
            )));
        }
        Ok(())
    }

    pub fn permute_clusters(&self, perm: &[usize]) -> Result<Self> {
        Ok(Self {
            assignment: self.assignment.permute_clusters(perm)?,
            weights: self.weights.permute_clusters(perm)?,
        })
    }

    /// Serializes to a line-oriented text format with full-precision decimal
    /// values; parsing the output reproduces the model bit-exactly.
    pub fn to_text(&self) -> String {
        let k = self.num_clusters();
        let mut out = String::new();
        let _ = writeln!(out, "graphclust-model 1");
        let _ = writeln!(out, "nodes {}", self.num_nodes());
        let _ = writeln!(out, "clusters {k}");
        let _ = writeln!(out, "symmetric {}", u8::from(self.weights.is_symmetric()));
        let _ = writeln!(out, "Q");
        for x in 0..self.num_nodes() {
            let row: Vec<String> = self.assignment.row(x).iter().map(|v| v.to_string()).collect();
            let _ = writeln!(out, "{}", row.join(" "));
        }
        let _ = writeln!(out, "G");
        for a in 0..k {
            let row: Vec<String> =
                self.weights.values()[a * k..(a + 1) * k].iter().map(|v| v.to_string()).collect();
            let _ = writeln!(out, "{}", row.join(" "));
        }
        out
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let mut lines = text.lines().map(|l| l.strip_suffix('\r').unwrap_or(l));
        let header = lines.next().unwrap_or("");
        if header != "graphclust-model 1" {
            return Err(Error::Data(format!("unrecognized model header {header:?}")));
        }
        let mut field = |name: &str| -> Result<String> {
            let line = lines.next().unwrap_or("");
            line.strip_prefix(name)
                .and_then(|r| r.strip_prefix(' '))
                .map(str::to_string)
                .ok_or_else(|| Error::Data(format!("expected `{name} <value>`, found {line:?}")))
        };
        let nodes: usize =
            field("nodes")?.parse().map_err(|_| Error::Data("bad node count".into()))?;
        let clusters: usize =
            field("clusters")?.parse().map_err(|_| Error::Data("bad cluster count".into()))?;
        let symmetric = match field("symmetric")?.as_str() {
            "0" => false,
            "1" => true,
            other => return Err(Error::Data(format!("bad symmetric flag {other:?}"))),
        };
        let parse_block = |lines: &mut dyn Iterator<Item = &str>,
                           tag: &str,
                           rows: usize,
                           cols: usize|
         -> Result<Vec<f64>> {
            if lines.next() != Some(tag) {
                return Err(Error::Data(format!("expected `{tag}` section")));
            }
            let mut vals = Vec::with_capacity(rows * cols);
            for _ in 0..rows {
                let line = lines.next().ok_or_else(|| Error::Data("truncated model file".into()))?;
                for tok in line.split(' ') {
                    vals.push(
                        tok.parse::<f64>()
                            .map_err(|_| Error::Data(format!("bad model value {tok:?}")))?,
                    );
                }
            }
            if vals.len() != rows * cols {
                return Err(Error::Data(format!(
                    "expected {} values in {tag}, found {}",
                    rows * cols,
                    vals.len()
                )));
            }
            Ok(vals)
        };
        let q = parse_block(&mut lines, "Q", nodes, clusters)?;
        let g = parse_block(&mut lines, "G", clusters, clusters)?;
        Self::new(Assignment::new(q, nodes, clusters)?, ClusterWeights::new(g, clusters, symmetric)?)
    }
}

/// Per-node mixed weight vectors: `left[x] = G q_x` and `right[x] = G^T q_x`,
/// so `p(i, j) = q_i . right[j]... ` strictly `p(i, j) = q_i^T G q_j =
/// dot(q_i, left-of-j)`. Precomputed once per pass over the edges.
struct MixedWeights {
    /// `(G q_x)[c]` row-major by node. `p(i, j) = dot(q_i, left[j])`.
    left: Vec<f64>,
    /// `(G^T q_x)[c]` row-major by node.
    right: Vec<f64>,
    k: usize,
}

impl MixedWeights {
    fn new(model: &ClusterModel) -> Self {
        let k = model.num_clusters();
        let n = model.num_nodes();
        let g = model.weights.values();
        let mut left = vec![0.0; n * k];
        let mut right = vec![0.0; n * k];
        for x in 0..n {
            let q = model.assignment.row(x);
            for a in 0..k {
                let mut l = 0.0;
                let mut r = 0.0;
                for b in 0..k {
                    l += g[a * k + b] * q[b];
                    r += g[b * k + a] * q[b];
                }
                left[x * k + a] = l;
                right[x * k + a] = r;
            }
        }
        Self { left, right, k }
    }

    fn predict(&self, assignment: &Assignment, i: usize, j: usize) -> f64 {
        let qi = assignment.row(i);
        let lj = &self.left[j * self.k..(j + 1) * self.k];
        qi.iter().zip(lj).map(|(&a, &b)| a * b).sum()
    }
}

/// The closed-form per-cell weighted means
///
/// ```text
/// g(c1, c2) = sum_(i,j) q(c1|i) w_ij q(c2|j) / sum_(i,j) q(c1|i) q(c2|j)
/// ```
///
/// i.e. the cell-wise optimum when each edge's loss is averaged over the
/// cluster assignment mixture. For symmetric datasets both orientations of
/// every stored edge enter the sums, making the result symmetric. Cells with
/// assignment mass below 1e-12 fall back to the global mean observed weight.
///
/// This separable update is the warm start for [`ml_cluster_weights`]; the
/// two coincide for hard assignments but differ for soft ones.
pub fn cell_mean_weights(assignment: &Assignment, data: &EdgeDataset) -> Result<ClusterWeights> {
    check_assignment_data(assignment, data)?;
    if data.is_empty() {
        return Err(Error::EmptyDataset);
    }
    let k = assignment.num_clusters();
    let mut num = vec![0.0; k * k];
    let mut den = vec![0.0; k * k];
    for e in data.edges() {
        let qi = assignment.row(e.i);
        let qj = assignment.row(e.j);
        for a in 0..k {
            for b in 0..k {
                let mut m = qi[a] * qj[b];
                if data.is_symmetric() {
                    m += qj[a] * qi[b];
                }
                num[a * k + b] += m * e.w;
                den[a * k + b] += m;
            }
        }
    }
    let fallback = data.mean_weight()?;
    let g: Vec<f64> = num
        .iter()
        .zip(&den)
        .map(|(&n, &d)| if d > EMPTY_CELL_MASS { (n / d).clamp(0.0, 1.0) } else { fallback })
        .collect();
    ClusterWeights::new(g, k, data.is_symmetric())
}

/// The maximum-likelihood cluster-pair weights for a fixed assignment: the
/// matrix `G` in `[0, 1]^(|C| x |C|)` minimizing the empirical loss
/// (constrained to symmetric `G` for symmetric datasets).
///
/// Solved exactly as a box-constrained least-squares problem on assembled
/// normal equations, warm-started at [`cell_mean_weights`]. Cells that no
/// observation touches keep the warm start's global-mean fallback; in
/// degenerate (rank-deficient) problems the solution returned is the one
/// reached from that warm start. Above ~2,100 free coordinates (cluster
/// counts past the mid-sixties) a per-edge descent with a work-capped sweep
/// budget takes over, which is best-effort rather than exact on
/// ill-conditioned instances.
pub fn ml_cluster_weights(assignment: &Assignment, data: &EdgeDataset) -> Result<ClusterWeights> {
    check_assignment_data(assignment, data)?;
    if data.is_empty() {
        return Err(Error::EmptyDataset);
    }
    let init = cell_mean_weights(assignment, data)?;
    let k = assignment.num_clusters();
    if k == 1 {
        return Ok(init); // global mean is already exact
    }
    let coords = CoordMap::new(k, data.is_symmetric());
    let mut g: Vec<f64> = coords.pack(init.values());

    const DENSE_COORD_LIMIT: usize = 2_100;
    if coords.len() <= DENSE_COORD_LIMIT {
        let (a, b) = assemble_normal_equations(assignment, data, &coords);
        box_constrained_least_squares(&a, &b, &mut g, coords.len());
    } else {
        residual_coordinate_descent(assignment, data, &coords, &mut g);
    }

    let matrix = coords.unpack(&g);
    ClusterWeights::new(matrix, k, data.is_symmetric())
}

fn check_assignment_data(assignment: &Assignment, data: &EdgeDataset) -> Result<()> {
    if assignment.num_nodes() != data.num_nodes() {
        return Err(Error::DimensionMismatch(format!(
            "assignment covers {} nodes, dataset has {}",
            assignment.num_nodes(),
            data.num_nodes()
        )));
    }
    Ok(())
}

/// A coordinate's matrix cell plus its mirror cell when the coordinate
/// represents an unordered cluster pair.
type CellOrientations = (usize, usize, Option<(usize, usize)>);

/// Mapping between the free coordinates of `G` and matrix cells. Symmetric
/// datasets constrain `G` to be symmetric, so a coordinate is an unordered
/// cluster pair; otherwise every ordered pair is free.
struct CoordMap {
    k: usize,
    symmetric: bool,
    /// orientation lists: each coordinate touches one or two matrix cells
    cells: Vec<CellOrientations>,
}

impl CoordMap {
    fn new(k: usize, symmetric: bool) -> Self {
        let mut cells = Vec::new();
        if symmetric {
            for a in 0..k {
                for b in a..k {
                    cells.push((a, b, if a == b { None } else { Some((b, a)) }));
                }
            }
        } else {
            for a in 0..k {
                for b in 0..k {
                    cells.push((a, b, None));
                }
            }
        }
        Self { k, symmetric, cells }
    }

    fn len(&self) -> usize {
        self.cells.len()
    }

    /// Extracts the coordinate values from a full matrix.
    fn pack(&self, g: &[f64]) -> Vec<f64> {
        self.cells.iter().map(|&(a, b, _)| g[a * self.k + b]).collect()
    }

    /// Expands coordinate values back into a full (mirrored) matrix.
    fn unpack(&self, coords: &[f64]) -> Vec<f64> {
        let mut g = vec![0.0; self.k * self.k];
        for (&(a, b, mirror), &v) in self.cells.iter().zip(coords) {
            let v = v.clamp(0.0, 1.0);
            g[a * self.k + b] = v;
            if let Some((c, d)) = mirror {
                g[c * self.k + d] = v;
            }
        }
        g
    }
}

/// Assembles the normal equations `A g = b` of the (unnormalized) quadratic
/// loss in coordinate space. Grouping edges by their first endpoint reduces
/// the cost to `O(|E| |C|^2 + |X| d^2)` where `d` is the coordinate count.
fn assemble_normal_equations(
    assignment: &Assignment,
    data: &EdgeDataset,
    coords: &CoordMap,
) -> (Vec<f64>, Vec<f64>) {
    let k = coords.k;
    let d = coords.len();
    let n = assignment.num_nodes();
    let mut a = vec![0.0; d * d];
    let mut b = vec![0.0; d];

    // adjacency grouped by first endpoint of each stored observation
    let mut heads: Vec<Vec<(usize, f64)>> = vec![Vec::new(); n];
    for e in data.edges() {
        heads[e.i].push((e.j, e.w));
    }

    let mut outer = vec![0.0; k * k]; // R_i = sum_j q_j q_j^T over neighbors
    let mut weighted = vec![0.0; k]; // t_i = sum_j w_ij q_j
    for (i, neighbors) in heads.iter().enumerate() {
        if neighbors.is_empty() {
            continue;
        }
        outer.iter_mut().for_each(|v| *v = 0.0);
        weighted.iter_mut().for_each(|v| *v = 0.0);
        for &(j, w) in neighbors {
            let qj = assignment.row(j);
            for c in 0..k {
                let qc = qj[c];
                if qc == 0.0 {
                    continue;
                }
                weighted[c] += w * qc;
                let row = &mut outer[c * k..(c + 1) * k];
                for (dst, &qd) in row.iter_mut().zip(qj) {
                    *dst += qc * qd;
                }
            }
        }
        let qi = assignment.row(i);
        // psi_u = sum over the coordinate's orientations (a', b') of
        // q_i[a'] q_j[b']; accumulate psi_u psi_v via P[a,c] R[b,d] terms.
        for (u, &(ua, ub, um)) in coords.cells.iter().enumerate() {
            let mut bu = qi[ua] * weighted[ub];
            if let Some((ma, mb)) = um {
                bu += qi[ma] * weighted[mb];
            }
            b[u] += bu;
            for (v, &(va, vb, vm)) in coords.cells.iter().enumerate().skip(u) {
                let mut s = qi[ua] * qi[va] * outer[ub * k + vb];
                if let Some((ma, mb)) = um {
                    s += qi[ma] * qi[va] * outer[mb * k + vb];
                }
                if let Some((na, nb)) = vm {
                    s += qi[ua] * qi[na] * outer[ub * k + nb];
                }
                if let (Some((ma, mb)), Some((na, nb))) = (um, vm) {
                    s += qi[ma] * qi[na] * outer[mb * k + nb];
                }
                a[u * d + v] += s;
                if v != u {
                    a[v * d + u] += s;
                }
            }
        }
    }
    (a, b)
}

/// Exact minimization of `g'Ag - 2b'g` over the box `[0, 1]^d` (the normal
/// equations of the quadratic loss): a primal active-set method whose
/// equality subproblems are solved by conjugate gradients, finished with a
/// coordinate-descent polish that verifies KKT stationarity.
///
/// `A` is a PSD Gram matrix `sum psi psi'` and both `b` and every reduced
/// right-hand side lie in its range, so CG is well-defined even when the
/// system is rank-deficient; null-space components of the warm start are
/// never moved, which pins unidentifiable cells at their warm-start value.
fn box_constrained_least_squares(a: &[f64], b: &[f64], g: &mut [f64], d: usize) {
    let scale = b.iter().fold(1.0f64, |m, &v| m.max(v.abs()));
    let tol = 1e-12 * scale;

    let gradient = |g: &[f64], out: &mut [f64]| {
        for u in 0..d {
            out[u] =
                a[u * d..(u + 1) * d].iter().zip(g.iter()).map(|(&x, &y)| x * y).sum::<f64>()
                    - b[u];
        }
    };
    let kkt_violation = |g: &[f64], grad: &[f64]| -> f64 {
        let mut worst = 0.0f64;
        for u in 0..d {
            if a[u * d + u] <= 0.0 {
                continue; // untouched by any observation
            }
            let v = if g[u] <= 0.0 {
                (-grad[u]).max(0.0)
            } else if g[u] >= 1.0 {
                grad[u].max(0.0)
            } else {
                grad[u].abs()
            };
            worst = worst.max(v);
        }
        worst
    };

    let mut grad = vec![0.0; d];
    // bounds currently held: 0 = free, 1 = at lower, 2 = at upper
    let mut held = vec![0u8; d];
    let mut free: Vec<usize> = Vec::with_capacity(d);
    'outer: for _outer in 0..(8 * d + 32) {
        free.clear();
        for u in 0..d {
            if a[u * d + u] > 0.0 && held[u] == 0 {
                free.push(u);
            }
        }
        if !free.is_empty() {
            // equality solve on the free set, warm-started at current point
            let target = cg_solve(a, b, g, &free, d, 1e-14 * scale);
            // step toward the subproblem solution, stopping at the first
            // bound; coordinates that block get their bound activated
            let mut alpha = 1.0f64;
            for (fi, &u) in free.iter().enumerate() {
                let dir = target[fi] - g[u];
                if dir > f64::EPSILON {
                    alpha = alpha.min((1.0 - g[u]) / dir);
                } else if dir < -f64::EPSILON {
                    alpha = alpha.min((0.0 - g[u]) / dir);
                }
            }
            let alpha = alpha.clamp(0.0, 1.0);
            for (fi, &u) in free.iter().enumerate() {
                let dir = target[fi] - g[u];
                g[u] = (g[u] + alpha * dir).clamp(0.0, 1.0);
                if g[u] <= 1e-15 && dir < 0.0 {
                    g[u] = 0.0;
                    held[u] = 1;
                } else if g[u] >= 1.0 - 1e-15 && dir > 0.0 {
                    g[u] = 1.0;
                    held[u] = 2;
                }
            }
            if alpha < 1.0 {
                continue 'outer; // keep minimizing with the grown active set
            }
        }
        // the reduced problem is solved; check multipliers on held bounds
        // and release the most violating one
        gradient(g, &mut grad);
        if kkt_violation(g, &grad) <= tol {
            return;
        }
        let mut release: Option<(usize, f64)> = None;
        for u in 0..d {
            if held[u] == 0 || a[u * d + u] <= 0.0 {
                continue;
            }
            let v = if held[u] == 1 { -grad[u] } else { grad[u] };
            if v > tol && release.is_none_or(|(_, best)| v > best) {
                release = Some((u, v));
            }
        }
        match release {
            Some((u, _)) => held[u] = 0,
            None => break, // violation sits inside the free set: polish below
        }
    }
    // polish: cyclic projected coordinate descent from the near-solution,
    // maintaining s = A g incrementally with periodic refreshes against
    // floating-point drift
    let max_sweeps = if d <= 64 { 200_000 } else { 2_000 };
    let refresh = |g: &[f64], s: &mut [f64]| {
        for u in 0..d {
            s[u] = a[u * d..(u + 1) * d].iter().zip(g.iter()).map(|(&x, &y)| x * y).sum();
        }
    };
    let mut s = vec![0.0; d];
    refresh(g, &mut s);
    for sweep in 0..max_sweeps {
        let mut worst = 0.0f64;
        for u in 0..d {
            let curv = a[u * d + u];
            if curv <= 0.0 {
                continue;
            }
            let gr = s[u] - b[u];
            let next = (g[u] - gr / curv).clamp(0.0, 1.0);
            let delta = next - g[u];
            if delta != 0.0 {
                g[u] = next;
                let col = &a[u * d..(u + 1) * d];
                for (sv, &av) in s.iter_mut().zip(col) {
                    *sv += delta * av;
                }
            }
            let v = if g[u] <= 0.0 {
                (-(s[u] - b[u])).max(0.0)
            } else if g[u] >= 1.0 {
                (s[u] - b[u]).max(0.0)
            } else {
                (s[u] - b[u]).abs()
            };
            worst = worst.max(v);
        }
        if sweep % 64 == 63 {
            refresh(g, &mut s);
        }
        if worst <= tol {
            refresh(g, &mut s);
            let mut confirmed = 0.0f64;
            for u in 0..d {
                if a[u * d + u] <= 0.0 {
                    continue;
                }
                let gr = s[u] - b[u];
                let v = if g[u] <= 0.0 {
                    (-gr).max(0.0)
                } else if g[u] >= 1.0 {
                    gr.max(0.0)
                } else {
                    gr.abs()
                };
                confirmed = confirmed.max(v);
            }
            if confirmed <= tol * 4.0 {
                return;
            }
        }
    }
}

/// Conjugate gradients for the reduced system
/// `A[free, free] x = b[free] - A[free, fixed] g[fixed]`, warm-started at
/// the current free values. Search directions stay in the range of the
/// reduced matrix, so rank deficiency leaves null components untouched.
fn cg_solve(a: &[f64], b: &[f64], g: &[f64], free: &[usize], d: usize, tol: f64) -> Vec<f64> {
    let m = free.len();
    let mut x: Vec<f64> = free.iter().map(|&u| g[u]).collect();
    // reduced rhs: b_F - A_FP g_P  computed as b_F - A_F. g + A_FF x
    let mut r = vec![0.0; m];
    for (fi, &u) in free.iter().enumerate() {
        let full: f64 = a[u * d..(u + 1) * d].iter().zip(g.iter()).map(|(&x, &y)| x * y).sum();
        r[fi] = b[u] - full; // residual at the warm start
    }
    let mut p = r.clone();
    let mut rs: f64 = r.iter().map(|v| v * v).sum();
    let mut ap = vec![0.0; m];
    for _ in 0..(2 * m + 8) {
        if rs.sqrt() <= tol {
            break;
        }
        for (fi, &u) in free.iter().enumerate() {
            let row = &a[u * d..(u + 1) * d];
            ap[fi] = free.iter().zip(&p).map(|(&v, &pv)| row[v] * pv).sum();
        }
        let pap: f64 = p.iter().zip(&ap).map(|(&x, &y)| x * y).sum();
        if pap <= 0.0 || !pap.is_finite() {
            break;
        }
        let alpha = rs / pap;
        for fi in 0..m {
            x[fi] += alpha * p[fi];
            r[fi] -= alpha * ap[fi];
        }
        let rs_new: f64 = r.iter().map(|v| v * v).sum();
        let beta = rs_new / rs;
        for fi in 0..m {
            p[fi] = r[fi] + beta * p[fi];
        }
        rs = rs_new;
    }
    x
}

/// Fallback for cluster counts too large to assemble dense normal equations:
/// coordinate descent maintaining per-edge residuals directly.
fn residual_coordinate_descent(
    assignment: &Assignment,
    data: &EdgeDataset,
    coords: &CoordMap,
    g: &mut [f64],
) {
    let edges = data.edges();
    let k = coords.k;
    let matrix = coords.unpack(g);
    let model = ClusterModel {
        assignment: assignment.clone(),
        weights: ClusterWeights { g: matrix, num_clusters: k, symmetric: coords.symmetric },
    };
    let mixed = MixedWeights::new(&model);
    let mut residual: Vec<f64> = edges
        .iter()
        .map(|e| mixed.predict(&model.assignment, e.i, e.j) - e.w)
        .collect();

    let psi = |e_idx: usize, u: usize| -> f64 {
        let e = &edges[e_idx];
        let qi = assignment.row(e.i);
        let qj = assignment.row(e.j);
        let (a, b, m) = coords.cells[u];
        let mut v = qi[a] * qj[b];
        if let Some((c, dd)) = m {
            v += qi[c] * qj[dd];
        }
        v
    };

    let scale = edges.iter().map(|e| e.w.abs()).fold(1.0f64, f64::max) * edges.len() as f64;
    let tol = 1e-12 * scale;
    // budget sweeps by total work so enormous problems stay tractable;
    // stationarity usually exits far earlier
    let d = coords.len();
    let max_sweeps = (2_000_000_000 / (edges.len() * d).max(1)).clamp(8, 200);
    for _ in 0..max_sweeps {
        // stationarity is judged at each coordinate as visited, before its
        // own move; a sweep where every visit was already within tolerance
        // is a fixed point of the whole cycle
        let mut worst = 0.0f64;
        for (u, gu) in g.iter_mut().enumerate() {
            let mut grad = 0.0;
            let mut curv = 0.0;
            for (idx, r) in residual.iter().enumerate() {
                let p = psi(idx, u);
                grad += r * p;
                curv += p * p;
            }
            if curv <= 0.0 {
                continue;
            }
            let kkt = if *gu <= 0.0 {
                (-grad).max(0.0)
            } else if *gu >= 1.0 {
                grad.max(0.0)
            } else {
                grad.abs()
            };
            worst = worst.max(kkt);
            let target = (*gu - grad / curv).clamp(0.0, 1.0);
            let delta = target - *gu;
            if delta != 0.0 {
                *gu = target;
                for (idx, r) in residual.iter_mut().enumerate() {
                    *r += delta * psi(idx, u);
                }
            }
        }
        if worst <= tol {
            break;
        }
    }
}
