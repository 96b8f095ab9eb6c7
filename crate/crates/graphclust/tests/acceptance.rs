//! End-to-end acceptance suite. Each test covers one numbered criterion and
//! prints a `[acceptance] criterion N (<name>): PASS` line (visible with
//! `cargo test --test acceptance -- --nocapture`).

use std::sync::Arc;

use graphclust::bound::{
    binary_kl, default_quantization, inv_kl_upper, quantized_bound, finite_alphabet_bound, BoundInputs,
    Quantization,
};
use graphclust::data::{parse_edge_list, EdgeDataset, EdgeObservation, NodeSpace, ParseOptions};
use graphclust::model::{ml_cluster_weights, Assignment, ClusterModel, ClusterWeights};
use graphclust::optimizer::{optimize, OptimizerConfig};
use graphclust::synth::{
    adjusted_rand_index, generate, PlantedPartitionSpec, WeightModel,
};

mod util {
    use rand_chacha::ChaCha8Rng;
    use rand_core::{RngCore, SeedableRng};

    pub fn rng(seed: u64) -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(seed)
    }

    pub fn unit(r: &mut ChaCha8Rng) -> f64 {
        (r.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    pub fn range(r: &mut ChaCha8Rng, lo: f64, hi: f64) -> f64 {
        lo + (hi - lo) * unit(r)
    }

    pub fn index(r: &mut ChaCha8Rng, n: usize) -> usize {
        (r.next_u64() % n as u64) as usize
    }

    pub fn pass(n: &str, label: &str) {
        println!("[acceptance] criterion {n} ({label}): PASS");
    }
}

use util::{index, pass, range, rng, unit};

fn random_assignment(r: &mut rand_chacha::ChaCha8Rng, nodes: usize, clusters: usize) -> Assignment {
    let mut q = Vec::with_capacity(nodes * clusters);
    for _ in 0..nodes {
        let mut row: Vec<f64> = (0..clusters).map(|_| unit(r) + 1e-3).collect();
        let s: f64 = row.iter().sum();
        row.iter_mut().for_each(|v| *v /= s);
        q.extend(row);
    }
    Assignment::new(q, nodes, clusters).unwrap()
}

/// Random dataset with a random observation mask.
fn random_dataset(
    r: &mut rand_chacha::ChaCha8Rng,
    nodes: usize,
    symmetric: bool,
    density: f64,
) -> EdgeDataset {
    let mut edges = Vec::new();
    for i in 0..nodes {
        for j in 0..nodes {
            if i == j || (symmetric && j < i) {
                continue;
            }
            if unit(r) < density {
                edges.push(EdgeObservation { i, j, w: unit(r) });
            }
        }
    }
    if edges.is_empty() {
        edges.push(EdgeObservation { i: 0, j: 1, w: 0.5 });
    }
    EdgeDataset::new(Arc::new(NodeSpace::new(nodes).unwrap()), edges, symmetric).unwrap()
}

/// Criterion 1: the analytic loss gradient matches central finite
/// differences on 20 seeded random instances (relative error < 1e-5,
/// absolute < 1e-9 where the gradient is below 1e-4).
#[test]
fn criterion_1_gradient_correctness() {
    let start = std::time::Instant::now();
    for trial in 0..20u64 {
        let mut r = rng(1000 + trial);
        let nodes = 4 + index(&mut r, 9); // up to 12
        let clusters = 2 + index(&mut r, 3); // up to 4
        let symmetric = trial % 2 == 0;
        let density = range(&mut r, 0.3, 0.9);
        let data = random_dataset(&mut r, nodes, symmetric, density);
        let a = random_assignment(&mut r, nodes, clusters);
        let g = ml_cluster_weights(&a, &data).unwrap();
        let model = ClusterModel::new(a.clone(), g.clone()).unwrap();
        let grad = model.loss_gradient(&data).unwrap();

        let h = 1e-6;
        for x in 0..nodes {
            for c in 0..clusters {
                let idx = x * clusters + c;
                let mut plus = a.values().to_vec();
                plus[idx] += h;
                let mut minus = a.values().to_vec();
                minus[idx] -= h;
                let lp = ClusterModel::new(
                    Assignment::new_unchecked(plus, nodes, clusters),
                    g.clone(),
                )
                .unwrap()
                .empirical_loss(&data)
                .unwrap();
                let lm = ClusterModel::new(
                    Assignment::new_unchecked(minus, nodes, clusters),
                    g.clone(),
                )
                .unwrap()
                .empirical_loss(&data)
                .unwrap();
                let fd = (lp - lm) / (2.0 * h);
                let an = grad[idx];
                if an.abs() < 1e-4 {
                    assert!(
                        (fd - an).abs() < 1e-9,
                        "trial {trial} entry ({x},{c}): fd={fd} analytic={an}"
                    );
                } else {
                    assert!(
                        ((fd - an) / an).abs() < 1e-5,
                        "trial {trial} entry ({x},{c}): fd={fd} analytic={an}"
                    );
                }
            }
        }
    }
    assert!(start.elapsed().as_secs() < 10, "runtime budget exceeded");
    pass("1", "gradient matches finite differences");
}

/// Criterion 2: the inverse KL is feasible and tight for 1,000 seeded
/// pairs, a grid-scan oracle finds no feasible larger value, and the
/// inverse is monotone in both arguments on a 50x50 grid.
#[test]
fn criterion_2_inverse_kl_correctness() {
    let start = std::time::Instant::now();
    let mut r = rng(2024);
    for trial in 0..1000 {
        let p_hat = unit(&mut r);
        let eps = range(&mut r, 0.0, 2.0);
        let z = inv_kl_upper(p_hat, eps);
        assert!((p_hat..=1.0).contains(&z));
        if z < 1.0 {
            let kl = binary_kl(p_hat, z);
            assert!(kl <= eps, "trial {trial}: kl {kl} exceeds budget {eps}");
            // tight in divergence; where one ulp of z moves kl by more than
            // 1e-9 (z within ~1e-7 of 1) the next float must be infeasible
            assert!(
                kl >= eps - 1e-9 || binary_kl(p_hat, z.next_up()) > eps,
                "trial {trial}: kl {kl} loose below {eps} at z={z}"
            );
            // grid-scan step: the next 1e-6 grid point is infeasible
            let next = (z + 1e-6).min(1.0 - 1e-15);
            assert!(binary_kl(p_hat, next) > eps, "trial {trial}: larger feasible z on grid");
        }
        // full grid scan for a subsample: no feasible z above the result
        if trial % 100 == 0 && z < 1.0 {
            let mut s = z + 1e-6;
            while s < 1.0 - 1e-15 {
                assert!(binary_kl(p_hat, s) > eps, "grid scan found feasible {s}");
                s += 1e-6;
            }
        }
    }
    // monotonicity on a 50x50 grid
    let ps: Vec<f64> = (0..50).map(|i| i as f64 / 49.0).collect();
    let es: Vec<f64> = (0..50).map(|i| i as f64 * 1.5 / 49.0).collect();
    let zs: Vec<Vec<f64>> =
        ps.iter().map(|&p| es.iter().map(|&e| inv_kl_upper(p, e)).collect()).collect();
    for i in 0..50 {
        for j in 0..50 {
            if i + 1 < 50 {
                assert!(zs[i + 1][j] >= zs[i][j] - 1e-11, "not monotone in p_hat");
            }
            if j + 1 < 50 {
                assert!(zs[i][j + 1] >= zs[i][j] - 1e-11, "not monotone in epsilon");
            }
        }
    }
    assert!(start.elapsed().as_secs() < 30, "runtime budget exceeded");
    pass("2", "inverse binary KL feasible, tight, monotone");
}

/// Criterion 3: the single-cluster model is the global observed mean, its
/// loss is the weight variance to 1e-12, and its information is exactly 0.
#[test]
fn criterion_3_single_cluster_closed_form() {
    let parsed = parse_edge_list(
        "a\tb\t0.25\nb\tc\t0.5\nc\td\t0.75\nd\ta\t1.0\na\tc\t0.0",
        &ParseOptions::default(),
    )
    .unwrap();
    let (synthetic, _, truth) = generate(&PlantedPartitionSpec {
        intra_weight_mean: 0.7,
        inter_weight_mean: 0.3,
        weight_noise: 0.1,
        seed: 5,
        ..PlantedPartitionSpec::new(15, 3)
    })
    .unwrap();
    let iid = truth.sample_iid(300, 9).unwrap();

    for (name, data) in [("parsed", parsed), ("synthetic", synthetic), ("iid", iid)] {
        let mut config = OptimizerConfig::new(1.0, 1);
        config.restarts = 2;
        config.seed = 3;
        let (model, _) = optimize(&data, &config).unwrap();
        let mean = data.mean_weight().unwrap();
        let variance = data.weight_variance().unwrap();
        assert!(
            (model.weights.get(0, 0) - mean).abs() < 1e-12,
            "{name}: cell weight is not the global mean"
        );
        assert!(
            (model.empirical_loss(&data).unwrap() - variance).abs() < 1e-12,
            "{name}: loss is not the weight variance"
        );
        assert_eq!(model.assignment.mutual_information(), 0.0, "{name}: nonzero information");
    }
    pass("3", "single-cluster closed form");
}

/// Criterion 4: Monte-Carlo validity of the finite-alphabet bound. 200
/// seeded trials draw 500 i.i.d. binary-weight observations on 20 nodes,
/// train a 2-cluster model, and compare the bound at delta = 0.05 against
/// the exact expected loss; the bound must hold in at least 190 trials
/// (failures are expected in none, since the bound holds uniformly).
#[test]
fn criterion_4_bound_validity_monte_carlo() {
    let start = std::time::Instant::now();
    let mut holds = 0usize;
    let trials = 200usize;
    for trial in 0..trials {
        let spec = PlantedPartitionSpec {
            intra_weight_mean: 0.8,
            inter_weight_mean: 0.2,
            weight_model: WeightModel::Bernoulli,
            seed: 40_000 + trial as u64,
            ..PlantedPartitionSpec::new(20, 2)
        };
        let (_, _, truth) = generate(&spec).unwrap();
        let sample = truth.sample_iid(500, 80_000 + trial as u64).unwrap();

        let mut config = OptimizerConfig::new(1.0, 2);
        config.restarts = 2;
        config.seed = 7_000 + trial as u64;
        let (model, _) = optimize(&sample, &config).unwrap();

        let report = finite_alphabet_bound(&BoundInputs {
            empirical_loss: model.empirical_loss(&sample).unwrap(),
            mutual_info: model.assignment.mutual_information(),
            num_nodes: 20,
            num_clusters: 2,
            sample_size: 500,
            delta: 0.05,
            quantization: Quantization::Alphabet(2),
        })
        .unwrap();
        let exact = truth.exact_expected_loss(&model).unwrap();
        if report.expected_loss_bound >= exact {
            holds += 1;
        }
    }
    assert!(holds >= 190, "bound held in only {holds}/{trials} trials");
    assert!(start.elapsed().as_secs() < 300, "runtime budget exceeded");
    println!("[acceptance] criterion 4 detail: bound held in {holds}/{trials} trials");
    pass("4", "Monte-Carlo bound validity");
}

/// Criterion 5: planted-partition recovery. 40 nodes in 4 blocks
/// (intra 0.9, inter 0.1, noise 0.05, fully observed), 10 restarts with
/// annealing: the best model reaches ARI >= 0.9 against the planted labels
/// and loss within 1.5x of the ground-truth model's.
#[test]
fn criterion_5_planted_partition_recovery() {
    let start = std::time::Instant::now();
    let spec = PlantedPartitionSpec {
        intra_weight_mean: 0.9,
        inter_weight_mean: 0.1,
        weight_noise: 0.05,
        edge_observation_rate: 1.0,
        seed: 50,
        ..PlantedPartitionSpec::new(40, 4)
    };
    let (data, labels, _) = generate(&spec).unwrap();

    let truth_model = {
        let a = Assignment::hard(&labels, 4).unwrap();
        let g = ml_cluster_weights(&a, &data).unwrap();
        ClusterModel::new(a, g).unwrap()
    };
    let truth_loss = truth_model.empirical_loss(&data).unwrap();

    // fit-dominant beta with extra settle time per annealing level; the
    // strong default noise keeps restarts escaping the collapsed state
    let mut config = OptimizerConfig::new(64.0, 4);
    config.iters_per_beta = 15;
    config.restarts = 10;
    config.seed = 51;
    let (model, trace) = optimize(&data, &config).unwrap();
    assert!(!trace.iteration_cap_hit);

    let ari = adjusted_rand_index(&labels, &model.assignment.harden()).unwrap();
    let loss = model.empirical_loss(&data).unwrap();
    println!(
        "[acceptance] criterion 5 detail: ari={ari:.4} loss={loss:.6} truth_loss={truth_loss:.6}"
    );
    assert!(ari >= 0.9, "recovered ARI {ari} below 0.9");
    assert!(loss <= 1.5 * truth_loss, "loss {loss} exceeds 1.5x truth {truth_loss}");
    assert!(start.elapsed().as_secs() < 60, "runtime budget exceeded");
    pass("5", "planted-partition recovery");
}

/// Criterion 6: the refit cluster weights minimize the empirical loss — on
/// 50 random (assignment, dataset) pairs, no random perturbation of G (20
/// each) improves the loss beyond 1e-12.
#[test]
fn criterion_6_g_update_argmin() {
    for trial in 0..50u64 {
        let mut r = rng(6000 + trial);
        let nodes = 4 + index(&mut r, 7);
        let clusters = 2 + index(&mut r, 3);
        let symmetric = trial % 2 == 0;
        let density = range(&mut r, 0.4, 0.9);
        let data = random_dataset(&mut r, nodes, symmetric, density);
        let a = random_assignment(&mut r, nodes, clusters);
        let g = ml_cluster_weights(&a, &data).unwrap();
        let base =
            ClusterModel::new(a.clone(), g.clone()).unwrap().empirical_loss(&data).unwrap();
        for p in 0..20 {
            let scale = [0.01, 0.05, 0.2][p % 3];
            let perturbed = perturb(&g, scale, &mut r);
            let loss = ClusterModel::new(a.clone(), perturbed)
                .unwrap()
                .empirical_loss(&data)
                .unwrap();
            assert!(
                loss >= base - 1e-12,
                "trial {trial} perturbation {p}: {loss} < {base} (diff {})",
                base - loss
            );
        }
    }
    pass("6", "G-update is the loss argmin");
}

fn perturb(g: &ClusterWeights, scale: f64, r: &mut rand_chacha::ChaCha8Rng) -> ClusterWeights {
    let k = g.num_clusters();
    let mut vals = g.values().to_vec();
    if g.is_symmetric() {
        for a in 0..k {
            for b in a..k {
                let v = (vals[a * k + b] + range(r, -scale, scale)).clamp(0.0, 1.0);
                vals[a * k + b] = v;
                vals[b * k + a] = v;
            }
        }
    } else {
        for v in &mut vals {
            *v = (*v + range(r, -scale, scale)).clamp(0.0, 1.0);
        }
    }
    ClusterWeights::new(vals, k, g.is_symmetric()).unwrap()
}

/// Criterion 7: the quantized bound reproduces independent hand arithmetic
/// term by term on three input sets, carries the rounding correction in
/// both the empirical slot and the final addition, and caps at 1.
#[test]
fn criterion_7_quantization_correction() {
    // (loss, mi, |X|, |C|, N, delta) with the rule-of-thumb spacing;
    // expected values computed independently
    let cases = [
        (0.1, 0.5, 100usize, 4usize, 100_000usize, 0.05, 0.00191960404215293, 0.12127099981416767),
        (0.02, 1.3, 1740, 4, 1_500_000, 0.05, 0.001640046075572241, 0.029209665030335598),
        (0.3, 0.0, 20, 1, 500, 0.1, 0.02740787756461434, 0.4338046569764035),
    ];
    for (l, mi, x, c, n, delta, want_comp, want_bound) in cases {
        let dq = default_quantization(c, n);
        assert!((dq - 5.0 * (c * c) as f64 / n as f64).abs() < 1e-18, "rule of thumb");
        let inputs = BoundInputs {
            empirical_loss: l,
            mutual_info: mi,
            num_nodes: x,
            num_clusters: c,
            sample_size: n,
            delta,
            quantization: Quantization::Delta(dq),
        };
        let r = quantized_bound(&inputs).unwrap();
        // term-by-term complexity assembly
        let manual_comp = (x as f64 * mi + c as f64 * (x as f64).ln()
            - (c * c) as f64 * dq.ln()
            + 0.5 * (4.0 * n as f64).ln()
            - delta.ln())
            / n as f64;
        assert!((r.complexity - manual_comp).abs() < 1e-15, "complexity disagrees with terms");
        assert!((r.complexity - want_comp).abs() < 1e-12, "complexity vs independent value");
        assert!((r.expected_loss_bound - want_bound).abs() < 1e-9, "bound vs independent value");
        // the correction enters the empirical slot and the final addition
        let corr = dq + dq * dq / 4.0;
        let recomposed = (inv_kl_upper((l + corr).min(1.0), r.complexity) + corr).min(1.0);
        assert!((r.expected_loss_bound - recomposed).abs() < 1e-15);
        assert!(r.expected_loss_bound >= l);
    }
    // saturation: a loose regime caps at exactly 1
    let capped = quantized_bound(&BoundInputs {
        empirical_loss: 0.9,
        mutual_info: 1.0,
        num_nodes: 50,
        num_clusters: 3,
        sample_size: 200,
        delta: 0.05,
        quantization: Quantization::Delta(0.4),
    })
    .unwrap();
    assert_eq!(capped.expected_loss_bound, 1.0);
    pass("7", "quantization correction");
}

/// Criterion 8 (conditional): reproduction of the published latency-graph
/// model-order sweep. Runs only when the dataset is available (set
/// `GRAPHCLUST_KING_TSV` to a `src <TAB> dst <TAB> latency` file); the
/// self-contained criteria 4 and 5 stand in when it is not.
#[test]
fn criterion_8_king_reproduction() {
    let path = match std::env::var("GRAPHCLUST_KING_TSV") {
        Ok(p) => p,
        Err(_) => {
            println!(
                "[acceptance] criterion 8 (latency-graph reproduction): SKIPPED \
                 (dataset unavailable; covered by criteria 4-5)"
            );
            return;
        }
    };
    let text = std::fs::read_to_string(&path).expect("readable dataset");
    let opts = ParseOptions {
        symmetric: true,
        scale: graphclust::data::ScaleMethod::NegExpMedian,
        ..ParseOptions::default()
    };
    let data = parse_edge_list(&text, &opts).expect("parseable dataset");
    assert_eq!(data.num_nodes(), 1740, "expected the 1,740-server graph");

    let mut losses = Vec::new();
    let mut mis = Vec::new();
    let mut bounds = Vec::new();
    for k in 1..=15usize {
        let mut config = OptimizerConfig::new(1.0, k);
        config.restarts = 3;
        config.seed = 800 + k as u64;
        let (model, _) = optimize(&data, &config).unwrap();
        let loss = model.empirical_loss(&data).unwrap();
        let mi = model.assignment.mutual_information();
        let report = quantized_bound(&BoundInputs {
            empirical_loss: loss,
            mutual_info: mi,
            num_nodes: data.num_nodes(),
            num_clusters: k,
            sample_size: data.num_edges(),
            delta: 0.05,
            quantization: Quantization::Delta(default_quantization(k, data.num_edges())),
        })
        .unwrap();
        println!(
            "[acceptance] criterion 8 detail: |C|={k} loss={loss:.4} mi={mi:.3} bound={:.4}",
            report.expected_loss_bound
        );
        losses.push(loss);
        mis.push(mi);
        bounds.push(report.expected_loss_bound);
    }
    assert!((losses[0] - 0.046).abs() < 0.01, "single-cluster loss {}", losses[0]);
    let c4to6 = losses[3..6].iter().cloned().fold(f64::INFINITY, f64::min);
    assert!((c4to6 - 0.02).abs() <= 0.005, "loss by 4-6 clusters {c4to6}");
    let saturated = mis[14];
    assert!((1.2 - 0.3..=1.5 + 0.3).contains(&saturated), "information {saturated}");
    for (l, b) in losses.iter().zip(&bounds) {
        assert!(b - l < 0.05, "bound gap {b} - {l} too wide");
        assert!(b >= l);
    }
    pass("8", "latency-graph reproduction");
}

/// Final criterion: on a structureless graph (intra = inter) the
/// bound-minimizing cluster count in a model-order sweep is 1 — the bound
/// correctly reports that clustering does not help.
#[test]
fn criterion_9_no_structure_control() {
    let spec = PlantedPartitionSpec {
        intra_weight_mean: 0.5,
        inter_weight_mean: 0.5,
        weight_noise: 0.05,
        seed: 90,
        ..PlantedPartitionSpec::new(24, 4)
    };
    let (data, _, _) = generate(&spec).unwrap();
    let n = data.num_edges();

    let mut bounds = Vec::new();
    for k in 1..=5usize {
        let mut config = OptimizerConfig::new(1.0, k);
        config.restarts = 4;
        config.seed = 91 + k as u64;
        let (model, _) = optimize(&data, &config).unwrap();
        let report = quantized_bound(&BoundInputs {
            empirical_loss: model.empirical_loss(&data).unwrap(),
            mutual_info: model.assignment.mutual_information(),
            num_nodes: data.num_nodes(),
            num_clusters: k,
            sample_size: n,
            delta: 0.05,
            quantization: Quantization::Delta(default_quantization(k, n)),
        })
        .unwrap();
        bounds.push(report.expected_loss_bound);
    }
    println!("[acceptance] control detail: bounds by |C| = {bounds:?}");
    for (i, b) in bounds.iter().enumerate().skip(1) {
        assert!(
            *b >= bounds[0],
            "bound at |C|={} ({b}) improves on |C|=1 ({})",
            i + 1,
            bounds[0]
        );
    }
    pass("9", "no-structure control selects |C| = 1");
}
