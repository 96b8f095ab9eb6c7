use std::path::PathBuf;
use std::process::ExitCode;

use clap::{ArgAction, Args, Parser, Subcommand};

use graphclust::cli::{
    self, BoundArgs, ClusterArgs, InputOptions, OptimizerTuning, QuantSpec, SplitArgs, SweepArgs,
    SynthArgs,
};
use graphclust::data::ScaleMethod;
use graphclust::error::{Error, Result};
use graphclust::synth::{PlantedPartitionSpec, WeightModel};

/// Soft graph clustering with generalization bounds on edge-weight
/// prediction.
#[derive(Parser)]
#[command(name = "graphclust", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct InputFlags {
    /// Edge-list file: `src <TAB> dst <TAB> weight` lines, `#` comments.
    #[arg(long)]
    input: PathBuf,
    /// Treat edges as undirected (mirrored duplicates merge).
    #[arg(long, default_value_t = false)]
    symmetric: bool,
    /// Accept self-loop edges.
    #[arg(long, default_value_t = false)]
    allow_self_loops: bool,
    /// Weight scaling: none, minmax, or neg-exp-median.
    #[arg(long, default_value = "none")]
    scale: String,
}

impl InputFlags {
    fn build(&self) -> Result<InputOptions> {
        Ok(InputOptions {
            path: self.input.clone(),
            symmetric: self.symmetric,
            allow_self_loops: self.allow_self_loops,
            scale: ScaleMethod::parse(&self.scale)?,
        })
    }
}

#[derive(Args, Clone, Default)]
struct TuningFlags {
    /// Starting beta of the annealing schedule (default 1/N).
    #[arg(long)]
    anneal_start: Option<f64>,
    /// Multiplier between annealing levels (default 2).
    #[arg(long)]
    anneal_factor: Option<f64>,
    /// Alternating steps per annealing level (default 5).
    #[arg(long)]
    iters_per_beta: Option<usize>,
    /// Noise shake between levels, relative to 1/clusters (default 1).
    #[arg(long)]
    noise_scale: Option<f64>,
    /// Cap on total alternating steps across restarts.
    #[arg(long)]
    max_iters: Option<usize>,
}

impl TuningFlags {
    fn build(&self) -> OptimizerTuning {
        OptimizerTuning {
            anneal_start: self.anneal_start,
            anneal_factor: self.anneal_factor,
            iters_per_beta: self.iters_per_beta,
            noise_scale: self.noise_scale,
            max_total_iters: self.max_iters,
        }
    }
}

#[derive(Args, Clone)]
struct QuantFlags {
    /// Confidence parameter of the bound.
    #[arg(long, default_value_t = 0.05)]
    delta: f64,
    /// Quantization grid spacing, or `auto` for the 5|C|^2/N rule.
    #[arg(long, default_value = "auto")]
    quantization: String,
    /// Finite weight-alphabet size (replaces grid quantization).
    #[arg(long, conflicts_with = "quantization")]
    alphabet: Option<u64>,
}

impl QuantFlags {
    fn build(&self) -> Result<QuantSpec> {
        if let Some(w) = self.alphabet {
            return Ok(QuantSpec::Alphabet(w));
        }
        if self.quantization == "auto" {
            return Ok(QuantSpec::RuleOfThumb);
        }
        let d: f64 = self
            .quantization
            .parse()
            .map_err(|_| Error::Config(format!("bad quantization {:?}", self.quantization)))?;
        Ok(QuantSpec::Delta(d))
    }
}

#[derive(Subcommand)]
enum Command {
    /// Train one model and report its loss, information, and bound.
    Cluster {
        #[command(flatten)]
        input: InputFlags,
        /// Number of clusters.
        #[arg(long)]
        clusters: usize,
        /// Trade-off parameter beta.
        #[arg(long, default_value_t = 1.0)]
        beta: f64,
        #[command(flatten)]
        quant: QuantFlags,
        /// Train/cv/test fractions, e.g. 0.7,0.1,0.2 (default: train on all).
        #[arg(long)]
        fractions: Option<String>,
        /// Root seed; all randomness derives from it.
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Random restarts.
        #[arg(long, default_value_t = 10)]
        restarts: usize,
        /// Anneal beta up from 1/N (disable with --anneal false).
        #[arg(long, default_value_t = true, action = ArgAction::Set)]
        anneal: bool,
        #[command(flatten)]
        tuning: TuningFlags,
        /// Output directory.
        #[arg(long, default_value = "out")]
        out_dir: PathBuf,
        /// Ground-truth `node <TAB> label` file to score ARI against.
        #[arg(long)]
        labels: Option<PathBuf>,
    },
    /// Train a model per grid point (over beta or cluster count) and
    /// aggregate losses and bounds into a CSV, marking the bound minimum.
    Sweep {
        #[command(flatten)]
        input: InputFlags,
        /// Cluster count (fixed when sweeping beta).
        #[arg(long, default_value_t = 2)]
        clusters: usize,
        /// Beta (fixed when sweeping cluster counts).
        #[arg(long, default_value_t = 1.0)]
        beta: f64,
        /// Comma-separated beta grid; `auto` for betaN = 1..4096 twofold.
        #[arg(long)]
        beta_grid: Option<String>,
        /// Cluster grid, e.g. `1..15` or `2,4,8`.
        #[arg(long, conflicts_with = "beta_grid")]
        cluster_grid: Option<String>,
        #[command(flatten)]
        quant: QuantFlags,
        #[arg(long)]
        fractions: Option<String>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 10)]
        restarts: usize,
        #[arg(long, default_value_t = true, action = ArgAction::Set)]
        anneal: bool,
        #[command(flatten)]
        tuning: TuningFlags,
        #[arg(long, default_value = "out")]
        out_dir: PathBuf,
        /// Also render sweep.svg.
        #[arg(long, default_value_t = false)]
        plot: bool,
    },
    /// Split an edge list into train/cv/test files plus a manifest.
    Split {
        #[command(flatten)]
        input: InputFlags,
        /// Train/cv/test fractions, e.g. 0.7,0.1,0.2.
        #[arg(long)]
        fractions: String,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value = "out")]
        out_dir: PathBuf,
    },
    /// Generate a planted-partition dataset with ground-truth labels.
    Synth {
        /// Number of nodes.
        #[arg(long)]
        nodes: usize,
        /// Number of planted blocks.
        #[arg(long)]
        blocks: usize,
        /// Mean weight within a block.
        #[arg(long, default_value_t = 0.9)]
        intra: f64,
        /// Mean weight across blocks.
        #[arg(long, default_value_t = 0.1)]
        inter: f64,
        /// Half-width of the uniform weight noise.
        #[arg(long, default_value_t = 0.0)]
        noise: f64,
        /// Probability each pair is observed.
        #[arg(long, default_value_t = 1.0)]
        rate: f64,
        /// Weight law: uniform (mean plus truncated noise) or bernoulli.
        #[arg(long, default_value = "uniform")]
        weight_model: String,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value = "out")]
        out_dir: PathBuf,
    },
    /// Evaluate the bound for externally supplied quantities.
    Bound {
        /// Empirical loss in [0, 1].
        #[arg(long)]
        empirical_loss: f64,
        /// Mutual information in nats.
        #[arg(long)]
        mutual_info: f64,
        /// Number of nodes |X|.
        #[arg(long)]
        nodes: usize,
        /// Number of clusters |C|.
        #[arg(long)]
        clusters: usize,
        /// Sample size N.
        #[arg(long)]
        samples: usize,
        #[command(flatten)]
        quant: QuantFlags,
    },
}

fn run(cli: Cli) -> Result<i32> {
    match cli.command {
        Command::Cluster {
            input,
            clusters,
            beta,
            quant,
            fractions,
            seed,
            restarts,
            anneal,
            tuning,
            out_dir,
            labels,
        } => cli::cmd_cluster(&ClusterArgs {
            input: input.build()?,
            clusters,
            beta,
            delta: quant.delta,
            quantization: quant.build()?,
            fractions: fractions.as_deref().map(cli::parse_fractions).transpose()?,
            seed,
            restarts,
            anneal,
            tuning: tuning.build(),
            out_dir,
            labels,
        }),
        Command::Sweep {
            input,
            clusters,
            beta,
            beta_grid,
            cluster_grid,
            quant,
            fractions,
            seed,
            restarts,
            anneal,
            tuning,
            out_dir,
            plot,
        } => {
            let beta_grid = match beta_grid.as_deref() {
                Some("auto") => Some(cli::BetaGrid::Auto),
                Some(s) => Some(cli::BetaGrid::Explicit(cli::parse_f64_grid(s)?)),
                None => None,
            };
            cli::cmd_sweep(&SweepArgs {
                input: input.build()?,
                clusters,
                beta,
                beta_grid,
                cluster_grid: cluster_grid.as_deref().map(cli::parse_cluster_grid).transpose()?,
                delta: quant.delta,
                quantization: quant.build()?,
                fractions: fractions.as_deref().map(cli::parse_fractions).transpose()?,
                seed,
                restarts,
                anneal,
                tuning: tuning.build(),
                out_dir,
                plot,
            })
        }
        Command::Split { input, fractions, seed, out_dir } => cli::cmd_split(&SplitArgs {
            input: input.build()?,
            fractions: cli::parse_fractions(&fractions)?,
            seed,
            out_dir,
        }),
        Command::Synth {
            nodes,
            blocks,
            intra,
            inter,
            noise,
            rate,
            weight_model,
            seed,
            out_dir,
        } => {
            let weight_model = match weight_model.as_str() {
                "uniform" => WeightModel::TruncatedUniform,
                "bernoulli" => WeightModel::Bernoulli,
                other => return Err(Error::Config(format!("unknown weight model {other:?}"))),
            };
            cli::cmd_synth(&SynthArgs {
                spec: PlantedPartitionSpec {
                    num_nodes: nodes,
                    num_blocks: blocks,
                    intra_weight_mean: intra,
                    inter_weight_mean: inter,
                    weight_noise: noise,
                    edge_observation_rate: rate,
                    weight_model,
                    seed,
                },
                out_dir,
            })
        }
        Command::Bound { empirical_loss, mutual_info, nodes, clusters, samples, quant } => {
            cli::cmd_bound(&BoundArgs {
                empirical_loss,
                mutual_info,
                nodes,
                clusters,
                samples,
                delta: quant.delta,
                quantization: quant.build()?,
            })
        }
    }
}

fn main() -> ExitCode {
    // usage errors exit 1 (clap's default would be 2, which is reserved
    // for data errors); --help and --version stay success
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e)
            if matches!(
                e.kind(),
                clap::error::ErrorKind::DisplayHelp | clap::error::ErrorKind::DisplayVersion
            ) =>
        {
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(1);
        }
    };
    match run(cli) {
        Ok(code) => ExitCode::from(code as u8),
        Err(err) => {
            eprintln!("error: {err}");
            ExitCode::from(cli::exit_code(&err) as u8)
        }
    }
}
