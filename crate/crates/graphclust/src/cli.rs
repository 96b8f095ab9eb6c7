//! Command implementations behind the `graphclust` binary.
//!
//! Each command takes a plain argument struct (the binary maps flags onto
//! these), performs its file I/O under the configured output directory,
//! prints a short `key value` summary to stdout, and returns the process
//! exit code: 0 on success, 1 for usage/config errors, 2 for data errors,
//! 3 when the optimizer hit its iteration cap (results are still written).
//!
//! All randomness flows from the root `--seed`, expanded per task, and the
//! seed is echoed in every output header so runs can be reproduced.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use crate::bound::{
    default_quantization, quantized_bound, finite_alphabet_bound, BoundInputs, BoundReport, Quantization,
};
use crate::data::{parse_edge_list, split, EdgeDataset, ParseOptions, ScaleMethod};
use crate::error::{Error, Result};
use crate::optimizer::{derive_seed, optimize, OptimizerConfig};
use crate::synth::{
    adjusted_rand_index, generate, labels_from_text, labels_to_text, PlantedPartitionSpec,
};

/// Exit code for an error, per the documented convention.
pub fn exit_code(err: &Error) -> i32 {
    match err {
        Error::Config(_) => 1,
        Error::IterationCap(_) => 3,
        _ => 2,
    }
}

/// How the CLI specifies the bound's quantization.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum QuantSpec {
    /// The rule of thumb `5 |C|^2 / N`, clamped for safety.
    RuleOfThumb,
    /// Explicit grid spacing.
    Delta(f64),
    /// Finite weight alphabet of this size.
    Alphabet(u64),
}

impl QuantSpec {
    fn report(
        &self,
        empirical_loss: f64,
        mutual_info: f64,
        num_nodes: usize,
        num_clusters: usize,
        sample_size: usize,
        delta: f64,
    ) -> Result<BoundReport> {
        let mut inputs = BoundInputs {
            empirical_loss,
            mutual_info,
            num_nodes,
            num_clusters,
            sample_size,
            delta,
            quantization: Quantization::Delta(0.5),
        };
        match *self {
            QuantSpec::RuleOfThumb => {
                inputs.quantization =
                    Quantization::Delta(default_quantization(num_clusters, sample_size));
                quantized_bound(&inputs)
            }
            QuantSpec::Delta(d) => {
                inputs.quantization = Quantization::Delta(d);
                quantized_bound(&inputs)
            }
            QuantSpec::Alphabet(w) => {
                inputs.quantization = Quantization::Alphabet(w);
                finite_alphabet_bound(&inputs)
            }
        }
    }
}

/// Ingestion settings shared by the file-reading commands.
#[derive(Debug, Clone)]
pub struct InputOptions {
    pub path: PathBuf,
    pub symmetric: bool,
    pub allow_self_loops: bool,
    pub scale: ScaleMethod,
}

impl InputOptions {
    fn load(&self) -> Result<EdgeDataset> {
        let text = fs::read_to_string(&self.path)?;
        let opts = ParseOptions {
            symmetric: self.symmetric,
            allow_self_loops: self.allow_self_loops,
            scale: self.scale,
            ..ParseOptions::default()
        };
        parse_edge_list(&text, &opts)
    }
}

#[derive(Debug, Clone)]
pub struct ClusterArgs {
    pub input: InputOptions,
    pub clusters: usize,
    pub beta: f64,
    pub delta: f64,
    pub quantization: QuantSpec,
    pub fractions: Option<(f64, f64, f64)>,
    pub seed: u64,
    pub restarts: usize,
    pub anneal: bool,
    pub tuning: OptimizerTuning,
    pub out_dir: PathBuf,
    /// Ground-truth labels to score the hardened clustering against.
    pub labels: Option<PathBuf>,
}

/// Optional overrides for the annealing schedule; `None` keeps the
/// library defaults.
#[derive(Debug, Clone, Default)]
pub struct OptimizerTuning {
    pub anneal_start: Option<f64>,
    pub anneal_factor: Option<f64>,
    pub iters_per_beta: Option<usize>,
    pub noise_scale: Option<f64>,
    pub max_total_iters: Option<usize>,
}

impl OptimizerTuning {
    fn apply(&self, config: &mut OptimizerConfig) {
        if self.anneal_start.is_some() {
            config.anneal_start = self.anneal_start;
        }
        if let Some(v) = self.anneal_factor {
            config.anneal_factor = v;
        }
        if let Some(v) = self.iters_per_beta {
            config.iters_per_beta = v;
        }
        if let Some(v) = self.noise_scale {
            config.noise_scale = v;
        }
        if let Some(v) = self.max_total_iters {
            config.max_total_iters = v;
        }
    }
}

/// A beta grid: explicit values, or the default log grid derived from the
/// training sample size (`beta N` from 1 to 4096 in two-fold increments).
#[derive(Debug, Clone, PartialEq)]
pub enum BetaGrid {
    Auto,
    Explicit(Vec<f64>),
}

#[derive(Debug, Clone)]
pub struct SweepArgs {
    pub input: InputOptions,
    /// Fixed cluster count when sweeping beta.
    pub clusters: usize,
    /// Fixed beta when sweeping cluster counts.
    pub beta: f64,
    pub beta_grid: Option<BetaGrid>,
    pub cluster_grid: Option<Vec<usize>>,
    pub delta: f64,
    pub quantization: QuantSpec,
    pub fractions: Option<(f64, f64, f64)>,
    pub seed: u64,
    pub restarts: usize,
    pub anneal: bool,
    pub tuning: OptimizerTuning,
    pub out_dir: PathBuf,
    pub plot: bool,
}

#[derive(Debug, Clone)]
pub struct SplitArgs {
    pub input: InputOptions,
    pub fractions: (f64, f64, f64),
    pub seed: u64,
    pub out_dir: PathBuf,
}

#[derive(Debug, Clone)]
pub struct SynthArgs {
    pub spec: PlantedPartitionSpec,
    pub out_dir: PathBuf,
}

#[derive(Debug, Clone)]
pub struct BoundArgs {
    pub empirical_loss: f64,
    pub mutual_info: f64,
    pub nodes: usize,
    pub clusters: usize,
    pub samples: usize,
    pub delta: f64,
    pub quantization: QuantSpec,
}

fn ensure_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir)?;
    Ok(())
}

fn file_header(command: &str, seed: u64, extra: &str) -> String {
    let mut h = format!("# graphclust {command} seed={seed}");
    if !extra.is_empty() {
        h.push(' ');
        h.push_str(extra);
    }
    h.push('\n');
    h
}

/// Trains one model at the given cluster count and beta, writes the model,
/// trace, and bound report, and prints the headline numbers.
pub fn cmd_cluster(args: &ClusterArgs) -> Result<i32> {
    ensure_dir(&args.out_dir)?;
    let full = args.input.load()?;
    let (train, cv, test, manifest) = match args.fractions {
        Some(fr) => {
            let s = split(&full, fr, derive_seed(args.seed, 0))?;
            (s.train, Some(s.cv), Some(s.test), Some(s.manifest))
        }
        None => (full.clone(), None, None, None),
    };

    let mut config = OptimizerConfig::new(args.beta, args.clusters);
    config.anneal = args.anneal;
    config.restarts = args.restarts;
    config.seed = derive_seed(args.seed, 1);
    args.tuning.apply(&mut config);
    let (model, trace) = optimize(&train, &config)?;

    let train_loss = model.empirical_loss(&train)?;
    let mi = model.assignment.mutual_information();
    let report = args.quantization.report(
        train_loss,
        mi,
        train.num_nodes(),
        args.clusters,
        train.num_edges(),
        args.delta,
    )?;

    fs::write(args.out_dir.join("model.txt"), model.to_text())?;
    let mut trace_csv = file_header("cluster", args.seed, &format!("beta={} clusters={}", args.beta, args.clusters));
    trace_csv.push_str(&trace.to_csv());
    fs::write(args.out_dir.join("trace.csv"), trace_csv)?;
    let mut bound_txt = file_header("cluster", args.seed, "");
    bound_txt.push_str(&report.to_text());
    fs::write(args.out_dir.join("bound.txt"), bound_txt)?;
    let mut label_map = file_header("cluster", args.seed, "node-index map");
    for i in 0..full.num_nodes() {
        let _ = writeln!(label_map, "{i}\t{}", full.nodes().label(i));
    }
    fs::write(args.out_dir.join("nodes.tsv"), label_map)?;
    if let Some(m) = &manifest {
        fs::write(args.out_dir.join("split_manifest.txt"), m.to_text())?;
    }

    println!("seed {}", args.seed);
    println!("nodes {}", train.num_nodes());
    println!("train_edges {}", train.num_edges());
    println!("clusters {}", args.clusters);
    println!("beta {}", args.beta);
    println!("train_loss {train_loss}");
    if let Some(cv) = &cv {
        if !cv.is_empty() {
            println!("cv_loss {}", model.empirical_loss(cv)?);
        }
    }
    if let Some(test) = &test {
        if !test.is_empty() {
            println!("test_loss {}", model.empirical_loss(test)?);
        }
    }
    println!("mutual_info {mi}");
    println!("bound {}", report.expected_loss_bound);
    if let Some(path) = &args.labels {
        let text = fs::read_to_string(path)?;
        let truth = labels_from_text(full.nodes(), &text)?;
        let ari = adjusted_rand_index(&truth, &model.assignment.harden())?;
        println!("ari {ari}");
    }
    Ok(if trace.iteration_cap_hit { 3 } else { 0 })
}

/// One trained point of a sweep.
struct SweepPoint {
    param: f64,
    train_loss: f64,
    cv_loss: Option<f64>,
    test_loss: Option<f64>,
    mi: f64,
    bound: f64,
    cap_hit: bool,
}

/// Sweeps beta or the cluster count over a grid (one trained model per grid
/// point, shared split), writes the aggregated CSV with the bound-minimizing
/// row marked, and optionally renders an SVG chart.
pub fn cmd_sweep(args: &SweepArgs) -> Result<i32> {
    if args.beta_grid.is_some() == args.cluster_grid.is_some() {
        return Err(Error::Config(
            "provide exactly one of --beta-grid and --cluster-grid".into(),
        ));
    }
    ensure_dir(&args.out_dir)?;
    let full = args.input.load()?;
    let (train, cv, test) = match args.fractions {
        Some(fr) => {
            let s = split(&full, fr, derive_seed(args.seed, 0))?;
            (s.train, Some(s.cv), Some(s.test), )
        }
        None => (full.clone(), None, None),
    };

    let grid: Vec<(f64, usize, f64)> = match (&args.beta_grid, &args.cluster_grid) {
        (Some(BetaGrid::Auto), None) => default_beta_grid(train.num_edges())
            .into_iter()
            .map(|b| (b, args.clusters, b))
            .collect(),
        (Some(BetaGrid::Explicit(betas)), None) => {
            betas.iter().map(|&b| (b, args.clusters, b)).collect()
        }
        (None, Some(ks)) => ks.iter().map(|&k| (args.beta, k, k as f64)).collect(),
        _ => unreachable!(),
    };
    if grid.is_empty() {
        return Err(Error::Config("empty sweep grid".into()));
    }

    let mut points = Vec::with_capacity(grid.len());
    for (idx, &(beta, clusters, param)) in grid.iter().enumerate() {
        let mut config = OptimizerConfig::new(beta, clusters);
        config.anneal = args.anneal;
        config.restarts = args.restarts;
        config.seed = derive_seed(args.seed, 1 + idx as u64);
        args.tuning.apply(&mut config);
        let (model, trace) = optimize(&train, &config)?;
        let train_loss = model.empirical_loss(&train)?;
        let mi = model.assignment.mutual_information();
        let report = args.quantization.report(
            train_loss,
            mi,
            train.num_nodes(),
            clusters,
            train.num_edges(),
            args.delta,
        )?;
        let share_loss = |share: &Option<EdgeDataset>| -> Result<Option<f64>> {
            match share {
                Some(s) if !s.is_empty() => Ok(Some(model.empirical_loss(s)?)),
                _ => Ok(None),
            }
        };
        points.push(SweepPoint {
            param,
            train_loss,
            cv_loss: share_loss(&cv)?,
            test_loss: share_loss(&test)?,
            mi,
            bound: report.expected_loss_bound,
            cap_hit: trace.iteration_cap_hit,
        });
    }

    let best = points
        .iter()
        .enumerate()
        .min_by(|(_, a), (_, b)| a.bound.partial_cmp(&b.bound).unwrap())
        .map(|(i, _)| i)
        .unwrap();

    let mut csv = file_header("sweep", args.seed, "");
    csv.push_str("param,train_loss,cv_loss,test_loss,mi,bound,best\n");
    let opt = |v: &Option<f64>| v.map(|x| format!("{x:.10e}")).unwrap_or_default();
    for (i, p) in points.iter().enumerate() {
        let _ = writeln!(
            csv,
            "{},{:.10e},{},{},{:.10e},{:.10e},{}",
            p.param,
            p.train_loss,
            opt(&p.cv_loss),
            opt(&p.test_loss),
            p.mi,
            p.bound,
            u8::from(i == best)
        );
    }
    fs::write(args.out_dir.join("sweep.csv"), &csv)?;

    if args.plot {
        let svg = render_sweep_svg(&points, best);
        fs::write(args.out_dir.join("sweep.svg"), svg)?;
    }

    println!("seed {}", args.seed);
    println!("grid_points {}", points.len());
    println!("best_param {}", points[best].param);
    println!("best_bound {}", points[best].bound);
    Ok(if points.iter().any(|p| p.cap_hit) { 3 } else { 0 })
}

/// Splits an edge list into train/cv/test files plus the manifest that
/// reproduces the split exactly.
pub fn cmd_split(args: &SplitArgs) -> Result<i32> {
    ensure_dir(&args.out_dir)?;
    let full = args.input.load()?;
    let s = split(&full, args.fractions, args.seed)?;
    for (name, share) in [("train", &s.train), ("cv", &s.cv), ("test", &s.test)] {
        let mut text = file_header("split", args.seed, &format!("share={name}"));
        text.push_str(&share.to_edge_list());
        fs::write(args.out_dir.join(format!("{name}.tsv")), text)?;
    }
    fs::write(args.out_dir.join("split_manifest.txt"), s.manifest.to_text())?;
    println!("seed {}", args.seed);
    println!("train_edges {}", s.train.num_edges());
    println!("cv_edges {}", s.cv.num_edges());
    println!("test_edges {}", s.test.num_edges());
    Ok(0)
}

/// Generates a planted-partition dataset and its ground-truth labels.
pub fn cmd_synth(args: &SynthArgs) -> Result<i32> {
    ensure_dir(&args.out_dir)?;
    let (data, labels, _) = generate(&args.spec)?;
    let mut text = file_header(
        "synth",
        args.spec.seed,
        &format!(
            "nodes={} blocks={} intra={} inter={} noise={} rate={}",
            args.spec.num_nodes,
            args.spec.num_blocks,
            args.spec.intra_weight_mean,
            args.spec.inter_weight_mean,
            args.spec.weight_noise,
            args.spec.edge_observation_rate
        ),
    );
    text.push_str(&data.to_edge_list());
    fs::write(args.out_dir.join("dataset.tsv"), text)?;
    fs::write(args.out_dir.join("labels.tsv"), labels_to_text(data.nodes(), &labels))?;
    println!("seed {}", args.spec.seed);
    println!("nodes {}", data.num_nodes());
    println!("edges {}", data.num_edges());
    Ok(0)
}

/// Evaluates the bound for externally supplied quantities.
pub fn cmd_bound(args: &BoundArgs) -> Result<i32> {
    let report = args.quantization.report(
        args.empirical_loss,
        args.mutual_info,
        args.nodes,
        args.clusters,
        args.samples,
        args.delta,
    )?;
    print!("{}", report.to_text());
    Ok(0)
}

/// Minimal line chart: train loss and bound (plus test loss when present)
/// against the grid, the bound minimum starred.
fn render_sweep_svg(points: &[SweepPoint], best: usize) -> String {
    const W: f64 = 640.0;
    const H: f64 = 420.0;
    const ML: f64 = 60.0; // margins
    const MR: f64 = 20.0;
    const MT: f64 = 20.0;
    const MB: f64 = 50.0;

    let xs: Vec<f64> = (0..points.len()).map(|i| i as f64).collect();
    let mut ymax = 0.0f64;
    for p in points {
        ymax = ymax.max(p.bound).max(p.train_loss);
        if let Some(t) = p.test_loss {
            ymax = ymax.max(t);
        }
    }
    let ymax = (ymax * 1.1).max(1e-12);
    let xspan = (points.len().max(2) - 1) as f64;
    let px = |i: f64| ML + (W - ML - MR) * i / xspan;
    let py = |v: f64| H - MB - (H - MT - MB) * v / ymax;

    let polyline = |vals: &[(f64, f64)], color: &str, dash: &str| {
        let pts: Vec<String> =
            vals.iter().map(|&(x, y)| format!("{:.2},{:.2}", px(x), py(y))).collect();
        format!(
            "<polyline fill=\"none\" stroke=\"{color}\" stroke-width=\"1.5\"{dash} points=\"{}\"/>\n",
            pts.join(" ")
        )
    };

    let mut svg = format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{W}\" height=\"{H}\" viewBox=\"0 0 {W} {H}\">\n\
         <rect width=\"{W}\" height=\"{H}\" fill=\"white\"/>\n\
         <line x1=\"{ML}\" y1=\"{}\" x2=\"{}\" y2=\"{}\" stroke=\"black\"/>\n\
         <line x1=\"{ML}\" y1=\"{MT}\" x2=\"{ML}\" y2=\"{}\" stroke=\"black\"/>\n",
        H - MB,
        W - MR,
        H - MB,
        H - MB
    );
    let train: Vec<(f64, f64)> = xs.iter().zip(points).map(|(&x, p)| (x, p.train_loss)).collect();
    let bound: Vec<(f64, f64)> = xs.iter().zip(points).map(|(&x, p)| (x, p.bound)).collect();
    svg.push_str(&polyline(&train, "#1f77b4", ""));
    svg.push_str(&polyline(&bound, "#d62728", ""));
    let have_test = points.iter().all(|p| p.test_loss.is_some());
    if have_test {
        let test: Vec<(f64, f64)> =
            xs.iter().zip(points).map(|(&x, p)| (x, p.test_loss.unwrap())).collect();
        svg.push_str(&polyline(&test, "#2ca02c", " stroke-dasharray=\"4 3\""));
    }
    // star the bound minimum
    let (bx, by) = (px(best as f64), py(points[best].bound));
    let _ = writeln!(
        svg,
        "<text x=\"{:.2}\" y=\"{:.2}\" font-size=\"18\" text-anchor=\"middle\">*</text>",
        bx,
        by + 6.0
    );
    // x tick labels
    for (i, p) in points.iter().enumerate() {
        let _ = writeln!(
            svg,
            "<text x=\"{:.2}\" y=\"{:.2}\" font-size=\"10\" text-anchor=\"middle\">{}</text>",
            px(i as f64),
            H - MB + 14.0,
            p.param
        );
    }
    // y axis extremes and legend
    let _ = write!(
        svg,
        "<text x=\"{:.2}\" y=\"{:.2}\" font-size=\"10\" text-anchor=\"end\">{ymax:.3}</text>\n\
         <text x=\"{:.2}\" y=\"{:.2}\" font-size=\"10\" text-anchor=\"end\">0</text>\n\
         <text x=\"{}\" y=\"{}\" font-size=\"11\" fill=\"#1f77b4\">train loss</text>\n\
         <text x=\"{}\" y=\"{}\" font-size=\"11\" fill=\"#d62728\">bound</text>\n",
        ML - 6.0,
        MT + 4.0,
        ML - 6.0,
        H - MB + 4.0,
        ML + 8.0,
        MT + 14.0,
        ML + 8.0,
        MT + 28.0,
    );
    if have_test {
        let _ = writeln!(
            svg,
            "<text x=\"{}\" y=\"{}\" font-size=\"11\" fill=\"#2ca02c\">test loss</text>",
            ML + 8.0,
            MT + 42.0
        );
    }
    svg.push_str("</svg>\n");
    svg
}

/// Parses a `train,cv,test` fraction triple.
pub fn parse_fractions(s: &str) -> Result<(f64, f64, f64)> {
    let parts: Vec<&str> = s.split(',').collect();
    if parts.len() != 3 {
        return Err(Error::Config(format!("expected three comma-separated fractions, got {s:?}")));
    }
    let mut v = [0.0; 3];
    for (dst, p) in v.iter_mut().zip(&parts) {
        *dst = p
            .trim()
            .parse()
            .map_err(|_| Error::Config(format!("bad fraction {p:?}")))?;
    }
    Ok((v[0], v[1], v[2]))
}

/// Parses a comma-separated list of f64 grid values.
pub fn parse_f64_grid(s: &str) -> Result<Vec<f64>> {
    s.split(',')
        .map(|p| {
            p.trim().parse::<f64>().map_err(|_| Error::Config(format!("bad grid value {p:?}")))
        })
        .collect()
}

/// Parses a cluster grid: comma-separated counts and/or `a..b` ranges
/// (inclusive), e.g. `1..15` or `2,4,8`.
pub fn parse_cluster_grid(s: &str) -> Result<Vec<usize>> {
    let mut out = Vec::new();
    for part in s.split(',') {
        let part = part.trim();
        if let Some((a, b)) = part.split_once("..") {
            let a: usize =
                a.parse().map_err(|_| Error::Config(format!("bad range start {a:?}")))?;
            let b: usize = b.parse().map_err(|_| Error::Config(format!("bad range end {b:?}")))?;
            if a == 0 || b < a {
                return Err(Error::Config(format!("bad range {part:?}")));
            }
            out.extend(a..=b);
        } else {
            let k: usize =
                part.parse().map_err(|_| Error::Config(format!("bad cluster count {part:?}")))?;
            if k == 0 {
                return Err(Error::Config("cluster count must be positive".into()));
            }
            out.push(k);
        }
    }
    Ok(out)
}

/// The default beta grid when sweeping beta without an explicit grid:
/// `beta N` from 1 to 4096 in two-fold increments.
pub fn default_beta_grid(sample_size: usize) -> Vec<f64> {
    let n = sample_size as f64;
    (0..=12).map(|k| (1u64 << k) as f64 / n).collect()
}
