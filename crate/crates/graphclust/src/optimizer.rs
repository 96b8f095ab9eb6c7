//! Alternating-projection minimization of the trade-off
//!
//! ```text
//! obj(Q) = beta * N * empirical_loss + |X| * mutual_information
//! ```
//!
//! One iteration re-derives each node's cluster distribution from the
//! current marginal and the loss gradient,
//!
//! ```text
//! q'(c|x) ~ qbar(c) * exp(-beta * N * d loss / d q(c|x))
//! ```
//!
//! normalized per node, then refits the cluster-pair weights. Repeated
//! iteration is not guaranteed to converge (the loss is quartic in the
//! assignment), so the driver tracks the best model seen anywhere in the
//! schedule, anneals `beta` upward from a small start, shakes the
//! assignment with a little noise between levels, and restarts from
//! multiple seeds.

use rand_chacha::ChaCha8Rng;
use rand_core::SeedableRng;

use crate::data::{uniform_range, EdgeDataset};
use crate::error::{Error, Result};
use crate::model::{cell_mean_weights, ml_cluster_weights, Assignment, ClusterModel};

/// Drives [`optimize`]. `beta` is the target trade-off parameter; when
/// `anneal` is set the schedule starts at `anneal_start` (default `1/N`)
/// and multiplies by `anneal_factor` until reaching `beta`, running
/// `iters_per_beta` iterations at each level and injecting noise of scale
/// `noise_scale` between levels.
#[derive(Debug, Clone)]
pub struct OptimizerConfig {
    pub beta: f64,
    pub num_clusters: usize,
    pub anneal: bool,
    /// Defaults to `1/N` when `None`.
    pub anneal_start: Option<f64>,
    pub anneal_factor: f64,
    pub iters_per_beta: usize,
    pub noise_scale: f64,
    pub restarts: usize,
    pub seed: u64,
    /// Safety cap on the total number of alternating steps across all
    /// restarts; hitting it returns the best model so far with a warning
    /// flag on the trace.
    pub max_total_iters: usize,
}

impl OptimizerConfig {
    pub fn new(beta: f64, num_clusters: usize) -> Self {
        Self {
            beta,
            num_clusters,
            anneal: true,
            anneal_start: None,
            anneal_factor: 2.0,
            iters_per_beta: 5,
            // a full-strength shake (per-entry noise comparable to 1/|C|):
            // the collapsed all-rows-equal state is a fixed point whose
            // first-order response to perturbations vanishes, so weak noise
            // is simply contracted away and the schedule never discovers
            // structure on symmetric instances
            noise_scale: 1.0,
            restarts: 10,
            seed: 0,
            max_total_iters: 100_000,
        }
    }

    fn validate(&self) -> Result<()> {
        if !self.beta.is_finite() || self.beta <= 0.0 {
            return Err(Error::Config(format!("beta must be positive, got {}", self.beta)));
        }
        if self.num_clusters == 0 {
            return Err(Error::Config("need at least one cluster".into()));
        }
        if let Some(s) = self.anneal_start {
            if !s.is_finite() || s <= 0.0 {
                return Err(Error::Config(format!("anneal_start must be positive, got {s}")));
            }
        }
        if !self.anneal_factor.is_finite() || self.anneal_factor <= 1.0 {
            return Err(Error::Config(format!(
                "anneal_factor must exceed 1, got {}",
                self.anneal_factor
            )));
        }
        if self.iters_per_beta == 0 || self.restarts == 0 || self.max_total_iters == 0 {
            return Err(Error::Config("iteration and restart counts must be positive".into()));
        }
        if !self.noise_scale.is_finite() || self.noise_scale < 0.0 {
            return Err(Error::Config(format!("bad noise scale {}", self.noise_scale)));
        }
        Ok(())
    }
}

/// One evaluated point of the optimization schedule.
#[derive(Debug, Clone, PartialEq)]
pub struct TraceRow {
    pub restart: usize,
    /// The annealing level the step ran at.
    pub beta: f64,
    /// Step index within the restart; 0 is the freshly initialized model.
    pub iter: usize,
    /// Trade-off objective at this row's `beta`.
    pub objective: f64,
    pub loss: f64,
    pub mi: f64,
}

/// Per-iteration history of an [`optimize`] run.
#[derive(Debug, Clone, Default)]
pub struct OptimizerTrace {
    pub rows: Vec<TraceRow>,
    /// Set when `max_total_iters` stopped the schedule early.
    pub iteration_cap_hit: bool,
}

impl OptimizerTrace {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("restart,beta,iter,objective,loss,mi\n");
        for r in &self.rows {
            out.push_str(&format!(
                "{},{:.10e},{},{:.10e},{:.10e},{:.10e}\n",
                r.restart, r.beta, r.iter, r.objective, r.loss, r.mi
            ));
        }
        out
    }
}

/// The trade-off objective `beta * N * loss + |X| * mutual_information`.
pub fn objective(model: &ClusterModel, data: &EdgeDataset, beta: f64) -> Result<f64> {
    let loss = model.empirical_loss(data)?;
    let mi = model.assignment.mutual_information();
    Ok(beta * data.num_edges() as f64 * loss + data.num_nodes() as f64 * mi)
}

/// One alternating projection at inverse temperature `beta`: the marginal
/// update, the exponentiated-gradient reassignment with per-node
/// normalization, then the cell-weight refit to the per-cell weighted means
/// (the argmin of each cell's mixture-averaged loss, which is what the
/// self-consistent equations prescribe).
///
/// The weighted-mean refit deliberately does *not* compensate assignment
/// softness the way the exact least-squares fit would; the residuals it
/// leaves behind are the gradient signal that sharpens assignments as
/// `beta` grows. The driver refits the final model exactly afterward.
///
/// The exponent is computed in log domain with per-node max subtraction, so
/// large `beta * N * gradient` values cannot overflow; a node whose entire
/// row degenerates to zero mass is an error.
pub fn alternating_step(model: &ClusterModel, data: &EdgeDataset, beta: f64) -> Result<ClusterModel> {
    let k = model.num_clusters();
    let n = data.num_edges() as f64;
    let marginal = model.assignment.marginal();
    let grad = model.loss_gradient(data)?;

    let log_marginal: Vec<f64> =
        marginal.iter().map(|&m| if m > 0.0 { m.ln() } else { f64::NEG_INFINITY }).collect();
    let mut q = vec![0.0; model.num_nodes() * k];
    for x in 0..model.num_nodes() {
        let row = &mut q[x * k..(x + 1) * k];
        let grad_row = &grad[x * k..(x + 1) * k];
        let mut max_logit = f64::NEG_INFINITY;
        for ((dst, &lm), &g) in row.iter_mut().zip(&log_marginal).zip(grad_row) {
            let logit = lm - beta * n * g;
            *dst = logit;
            if logit > max_logit {
                max_logit = logit;
            }
        }
        if !max_logit.is_finite() {
            return Err(Error::Data(format!("assignment row {x} degenerated to zero mass")));
        }
        let mut z = 0.0;
        for v in row.iter_mut() {
            *v = (*v - max_logit).exp();
            z += *v;
        }
        if !z.is_finite() || z <= 0.0 {
            return Err(Error::Data(format!("assignment row {x} degenerated to zero mass")));
        }
        for v in row.iter_mut() {
            *v /= z;
        }
    }
    let assignment = Assignment::new(q, model.num_nodes(), k)?;
    let weights = cell_mean_weights(&assignment, data)?;
    ClusterModel::new(assignment, weights)
}

/// Minimizes the trade-off and returns the best model found together with
/// the full schedule trace. Deterministic given the dataset and config.
///
/// "Best" means the smallest objective *at the target `beta`* over every
/// model the schedule visits, in every restart, at every annealing level --
/// iterations may oscillate, so the final iterate is not privileged. The
/// winner's cell weights are then refit exactly (the true loss argmin for
/// its assignment), which can only lower the objective further.
pub fn optimize(data: &EdgeDataset, config: &OptimizerConfig) -> Result<(ClusterModel, OptimizerTrace)> {
    config.validate()?;
    if data.is_empty() {
        return Err(Error::EmptyDataset);
    }
    let n = data.num_edges() as f64;
    let x = data.num_nodes();
    let k = config.num_clusters;

    let levels = beta_schedule(config, n);
    let mut trace = OptimizerTrace::default();
    let mut best: Option<(f64, ClusterModel)> = None;
    let mut total_iters = 0usize;

    'restarts: for restart in 0..config.restarts {
        let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(config.seed, restart as u64));
        let assignment = initial_assignment(&mut rng, x, k);
        let weights = cell_mean_weights(&assignment, data)?;
        let mut model = ClusterModel::new(assignment, weights)?;
        let mut iter = 0usize;

        record(&mut trace, &mut best, &model, data, config.beta, levels[0], restart, iter)?;

        for (li, &beta) in levels.iter().enumerate() {
            for _ in 0..config.iters_per_beta {
                if total_iters >= config.max_total_iters {
                    trace.iteration_cap_hit = true;
                    break 'restarts;
                }
                model = alternating_step(&model, data, beta)?;
                total_iters += 1;
                iter += 1;
                record(&mut trace, &mut best, &model, data, config.beta, beta, restart, iter)?;
            }
            let last_level = li + 1 == levels.len();
            if !last_level && config.noise_scale > 0.0 {
                let noisy = inject_noise(&model.assignment, config.noise_scale, &mut rng)?;
                let weights = cell_mean_weights(&noisy, data)?;
                model = ClusterModel::new(noisy, weights)?;
            }
        }
    }

    let (best_objective, best_model) = best.expect("at least the initial model is always recorded");
    // exact maximum-likelihood refit of the winner's cell weights; keep it
    // only if it helps (it always does, up to floating-point ties)
    let refit = ClusterModel::new(
        best_model.assignment.clone(),
        ml_cluster_weights(&best_model.assignment, data)?,
    )?;
    let refit_objective = objective(&refit, data, config.beta)?;
    let winner = if refit_objective <= best_objective { refit } else { best_model };
    Ok((winner, trace))
}

fn beta_schedule(config: &OptimizerConfig, n: f64) -> Vec<f64> {
    if !config.anneal {
        return vec![config.beta];
    }
    let start = config.anneal_start.unwrap_or(1.0 / n);
    let mut levels = Vec::new();
    let mut b = start;
    while b < config.beta {
        levels.push(b);
        b *= config.anneal_factor;
    }
    levels.push(config.beta);
    levels
}

#[allow(clippy::too_many_arguments)]
fn record(
    trace: &mut OptimizerTrace,
    best: &mut Option<(f64, ClusterModel)>,
    model: &ClusterModel,
    data: &EdgeDataset,
    target_beta: f64,
    current_beta: f64,
    restart: usize,
    iter: usize,
) -> Result<()> {
    let loss = model.empirical_loss(data)?;
    let mi = model.assignment.mutual_information();
    let n = data.num_edges() as f64;
    let x = data.num_nodes() as f64;
    trace.rows.push(TraceRow {
        restart,
        beta: current_beta,
        iter,
        objective: current_beta * n * loss + x * mi,
        loss,
        mi,
    });
    let at_target = target_beta * n * loss + x * mi;
    if best.as_ref().is_none_or(|(b, _)| at_target < *b) {
        *best = Some((at_target, model.clone()));
    }
    Ok(())
}

/// Uniform rows with multiplicative noise in `[0.9, 1.1)`, renormalized.
fn initial_assignment(rng: &mut ChaCha8Rng, num_nodes: usize, num_clusters: usize) -> Assignment {
    let mut q = Vec::with_capacity(num_nodes * num_clusters);
    for _ in 0..num_nodes {
        let mut row: Vec<f64> =
            (0..num_clusters).map(|_| uniform_range(rng, 0.9, 1.1) / num_clusters as f64).collect();
        let s: f64 = row.iter().sum();
        row.iter_mut().for_each(|v| *v /= s);
        q.extend(row);
    }
    Assignment::new_unchecked(q, num_nodes, num_clusters)
}

/// Additive uniform noise of scale `noise_scale / |C|` per entry, clamped
/// away from zero and renormalized.
fn inject_noise(assignment: &Assignment, noise_scale: f64, rng: &mut ChaCha8Rng) -> Result<Assignment> {
    let k = assignment.num_clusters();
    let s = noise_scale / k as f64;
    let mut q = assignment.values().to_vec();
    for row in q.chunks_mut(k) {
        let mut sum = 0.0;
        for v in row.iter_mut() {
            *v = (*v + uniform_range(rng, -s, s)).max(1e-12);
            sum += *v;
        }
        for v in row.iter_mut() {
            *v /= sum;
        }
    }
    Assignment::new(q, assignment.num_nodes(), k)
}

/// SplitMix64 step: decorrelates per-restart streams from the root seed.
pub(crate) fn derive_seed(root: u64, stream: u64) -> u64 {
    let mut z = root ^ stream.wrapping_mul(0x9e3779b97f4a7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58476d1ce4e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d049bb133111eb);
    z ^ (z >> 31)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::{parse_edge_list, EdgeObservation, NodeSpace, ParseOptions};
    use crate::model::{cell_mean_weights, ClusterWeights};
    use std::sync::Arc;

    fn two_block_graph() -> EdgeDataset {
        // 10 nodes, blocks {0..5} and {5..10}, intra weight 1, inter 0,
        // every pair observed
        let mut edges = Vec::new();
        for i in 0..10usize {
            for j in (i + 1)..10 {
                let w = if (i < 5) == (j < 5) { 1.0 } else { 0.0 };
                edges.push(EdgeObservation { i, j, w });
            }
        }
        EdgeDataset::new(Arc::new(NodeSpace::new(10).unwrap()), edges, true).unwrap()
    }

    #[test]
    fn objective_is_sum_of_terms() {
        let data = two_block_graph();
        let a = Assignment::hard(&[0, 0, 0, 0, 0, 1, 1, 1, 1, 1], 2).unwrap();
        let g = ml_cluster_weights(&a, &data).unwrap();
        let model = ClusterModel::new(a, g).unwrap();
        let beta = 3.0;
        let expect = beta * data.num_edges() as f64 * model.empirical_loss(&data).unwrap()
            + 10.0 * model.assignment.mutual_information();
        assert!((objective(&model, &data, beta).unwrap() - expect).abs() < 1e-12);
        // zero beta leaves only the information term
        let uniform =
            ClusterModel::new(Assignment::uniform(10, 2), ClusterWeights::constant(0.5, 2, true).unwrap())
                .unwrap();
        assert_eq!(objective(&uniform, &data, 0.0).unwrap(), 0.0);
        // the single-cluster closed form: beta N var(w) plus nothing
        let mean_model = ClusterModel::new(
            Assignment::uniform(10, 1),
            ClusterWeights::new(vec![data.mean_weight().unwrap()], 1, true).unwrap(),
        )
        .unwrap();
        let expect = beta * data.num_edges() as f64 * data.weight_variance().unwrap();
        assert!((objective(&mean_model, &data, beta).unwrap() - expect).abs() < 1e-12);
    }

    #[test]
    fn zero_gradient_collapses_rows_to_marginal() {
        // all weights zero and G = 0 makes the loss flat
        let data = parse_edge_list("a\tb\t0\nb\tc\t0\nc\ta\t0", &ParseOptions::default()).unwrap();
        let q = vec![0.7, 0.3, 0.2, 0.8, 0.5, 0.5];
        let a = Assignment::new(q, 3, 2).unwrap();
        let g = ClusterWeights::new(vec![0.0; 4], 2, false).unwrap();
        let model = ClusterModel::new(a, g).unwrap();
        let marginal = model.assignment.marginal();
        let next = alternating_step(&model, &data, 5.0).unwrap();
        for x in 0..3 {
            for (&v, &m) in next.assignment.row(x).iter().zip(&marginal) {
                assert!((v - m).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn beta_zero_is_prior_only_update() {
        let data = two_block_graph();
        let q = vec![
            0.9, 0.1, 0.8, 0.2, 0.7, 0.3, 0.6, 0.4, 0.5, 0.5, 0.4, 0.6, 0.3, 0.7, 0.2, 0.8, 0.1,
            0.9, 0.5, 0.5,
        ];
        let a = Assignment::new(q, 10, 2).unwrap();
        let g = cell_mean_weights(&a, &data).unwrap();
        let model = ClusterModel::new(a, g).unwrap();
        let marginal = model.assignment.marginal();
        let next = alternating_step(&model, &data, 0.0).unwrap();
        for x in 0..10 {
            for (&v, &m) in next.assignment.row(x).iter().zip(&marginal) {
                assert!((v - m).abs() < 1e-12);
            }
        }
        // with collapsed rows every cell weight is the global mean
        let mean = data.mean_weight().unwrap();
        for v in next.weights.values() {
            assert!((v - mean).abs() < 1e-9);
        }
    }

    #[test]
    fn g_update_argmin_for_fixed_assignment() {
        // one step from a random start: the maximum-likelihood refit for
        // the new assignment never loses to the stale weights carried in,
        // nor to the weighted-mean refit the step itself performs
        let data = two_block_graph();
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for trial in 0..10u64 {
            let start = initial_assignment(&mut rng, 10, 2);
            let model =
                ClusterModel::new(start.clone(), cell_mean_weights(&start, &data).unwrap()).unwrap();
            let stepped = alternating_step(&model, &data, 0.5 + trial as f64).unwrap();
            let exact = ClusterModel::new(
                stepped.assignment.clone(),
                ml_cluster_weights(&stepped.assignment, &data).unwrap(),
            )
            .unwrap();
            let exact_loss = exact.empirical_loss(&data).unwrap();
            let stale = ClusterModel::new(stepped.assignment.clone(), model.weights.clone()).unwrap();
            assert!(exact_loss <= stale.empirical_loss(&data).unwrap() + 1e-12);
            assert!(exact_loss <= stepped.empirical_loss(&data).unwrap() + 1e-12);
        }
    }

    #[test]
    fn rows_stay_stochastic_through_steps() {
        let data = two_block_graph();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let a = initial_assignment(&mut rng, 10, 3);
        let g = ml_cluster_weights(&a, &data).unwrap();
        let mut model = ClusterModel::new(a, g).unwrap();
        for step in 0..8 {
            model = alternating_step(&model, &data, 0.02 * (step + 1) as f64).unwrap();
            for x in 0..10 {
                let s: f64 = model.assignment.row(x).iter().sum();
                assert!((s - 1.0).abs() < 1e-9);
                assert!(model.assignment.row(x).iter().all(|&v| v >= 0.0));
            }
        }
    }

    #[test]
    fn single_cluster_returns_global_mean_model() {
        let data = two_block_graph();
        let mut config = OptimizerConfig::new(8.0, 1);
        config.restarts = 2;
        config.seed = 9;
        let (model, _) = optimize(&data, &config).unwrap();
        let mean = data.mean_weight().unwrap();
        assert!((model.weights.get(0, 0) - mean).abs() < 1e-12);
        assert!(
            (model.empirical_loss(&data).unwrap() - data.weight_variance().unwrap()).abs() < 1e-12
        );
        assert_eq!(model.assignment.mutual_information(), 0.0);
    }

    #[test]
    fn planted_bipartition_is_unique_zero_loss_optimum() {
        // brute force over all 2^10 hard bipartitions: only the planted one
        // (and its label swap) fits the two-block graph exactly
        let data = two_block_graph();
        let mut zero_loss = Vec::new();
        for mask in 0u32..(1 << 10) {
            let labels: Vec<usize> = (0..10).map(|x| ((mask >> x) & 1) as usize).collect();
            let a = Assignment::hard(&labels, 2).unwrap();
            let g = ml_cluster_weights(&a, &data).unwrap();
            let loss = ClusterModel::new(a, g).unwrap().empirical_loss(&data).unwrap();
            if loss < 1e-15 {
                zero_loss.push(mask);
            }
        }
        assert_eq!(zero_loss, vec![0b00000_11111, 0b11111_00000]);
    }

    #[test]
    fn recovers_planted_two_blocks() {
        // the objective-optimal model is epsilon-soft at any finite beta
        // (the information term's derivative blows up at hard assignments
        // while the loss derivative vanishes), with loss shrinking like
        // 1/beta^2; a large beta pushes it below 1e-9 and the hardened
        // partition is the planted one
        let data = two_block_graph();
        let mut config = OptimizerConfig::new(32768.0, 2);
        config.restarts = 4;
        config.seed = 1;
        let (model, trace) = optimize(&data, &config).unwrap();
        assert!(!trace.iteration_cap_hit);
        assert!(model.empirical_loss(&data).unwrap() < 1e-9);
        let labels = model.assignment.harden();
        // the planted bipartition is the unique zero-loss two-clustering,
        // up to label swap
        let first = labels[0];
        assert!(labels[..5].iter().all(|&l| l == first));
        assert!(labels[5..].iter().all(|&l| l != first));
    }

    #[test]
    fn optimize_is_deterministic() {
        let data = two_block_graph();
        let mut config = OptimizerConfig::new(2.0, 2);
        config.restarts = 3;
        config.seed = 1234;
        let (m1, t1) = optimize(&data, &config).unwrap();
        let (m2, t2) = optimize(&data, &config).unwrap();
        assert_eq!(m1, m2);
        assert_eq!(t1.rows, t2.rows);
    }

    #[test]
    fn best_model_beats_every_trace_row() {
        let data = two_block_graph();
        let mut config = OptimizerConfig::new(1.5, 3);
        config.restarts = 3;
        config.seed = 5;
        let (model, trace) = optimize(&data, &config).unwrap();
        let n = data.num_edges() as f64;
        let best = objective(&model, &data, config.beta).unwrap();
        for row in &trace.rows {
            let at_target = config.beta * n * row.loss + 10.0 * row.mi;
            assert!(best <= at_target + 1e-9);
        }
    }

    #[test]
    fn iteration_cap_flags_trace() {
        let data = two_block_graph();
        let mut config = OptimizerConfig::new(4.0, 2);
        config.restarts = 10;
        config.max_total_iters = 7;
        let (_, trace) = optimize(&data, &config).unwrap();
        assert!(trace.iteration_cap_hit);
        assert!(trace.rows.len() >= 7);
    }

    #[test]
    fn anneal_schedule_doubles_to_target() {
        let config = OptimizerConfig::new(1.0, 2);
        let levels = beta_schedule(&config, 16.0);
        assert_eq!(levels, vec![0.0625, 0.125, 0.25, 0.5, 1.0]);
        let mut flat = OptimizerConfig::new(3.0, 2);
        flat.anneal = false;
        assert_eq!(beta_schedule(&flat, 16.0), vec![3.0]);
        let mut high_start = OptimizerConfig::new(1.0, 2);
        high_start.anneal_start = Some(5.0);
        assert_eq!(beta_schedule(&high_start, 16.0), vec![1.0]);
    }

    #[test]
    fn trace_csv_shape() {
        let data = two_block_graph();
        let mut config = OptimizerConfig::new(1.0, 2);
        config.restarts = 1;
        config.anneal = false;
        config.iters_per_beta = 2;
        let (_, trace) = optimize(&data, &config).unwrap();
        let csv = trace.to_csv();
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines[0], "restart,beta,iter,objective,loss,mi");
        assert_eq!(lines.len(), 1 + 3); // header + init + 2 steps
    }
}
