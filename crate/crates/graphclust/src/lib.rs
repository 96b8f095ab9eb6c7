//! Soft clustering of weighted graphs, trained by alternating projections
//! on an empirical-loss / mutual-information trade-off and certified by a
//! numerically inverted PAC-Bayesian generalization bound on the
//! edge-weight prediction error.
//!
//! The pipeline:
//!
//! 1. [`data`] ingests tab-separated edge lists with weights in `[0, 1]`
//!    (or scales raw weights into range) and produces seeded
//!    train/cv/test splits.
//! 2. [`model`] defines the predictor: a soft node-to-cluster assignment
//!    `Q` and cluster-pair weights `G`, predicting edge `(i, j)` as
//!    `q_i' G q_j`, with quadratic empirical loss and the uniform-marginal
//!    mutual information as the complexity measure.
//! 3. [`optimizer`] minimizes `beta N loss + |X| mi` by alternating
//!    projections with beta-annealing, noise injection, and restarts.
//! 4. [`bound`] turns the trained model's empirical loss and mutual
//!    information into a high-probability upper bound on its expected
//!    loss, via the numeric inverse of the binary KL divergence.
//! 5. [`synth`] generates planted-partition graphs whose exact expected
//!    loss is computable in closed form, for validating both recovery and
//!    the bound itself.
//!
//! The `graphclust` binary exposes the whole pipeline as subcommands
//! (`cluster`, `sweep`, `split`, `synth`, `bound`); see [`cli`].
//!
//! ```
//! use graphclust::{
//!     generate, optimize, quantized_bound, BoundInputs, OptimizerConfig,
//!     PlantedPartitionSpec, Quantization,
//! };
//!
//! // a small planted two-block graph with known ground truth
//! let spec = PlantedPartitionSpec {
//!     intra_weight_mean: 0.9,
//!     inter_weight_mean: 0.1,
//!     weight_noise: 0.05,
//!     seed: 1,
//!     ..PlantedPartitionSpec::new(16, 2)
//! };
//! let (data, labels, _truth) = generate(&spec)?;
//!
//! // train a two-cluster model and recover the blocks
//! let mut config = OptimizerConfig::new(64.0, 2);
//! config.restarts = 4;
//! let (model, _trace) = optimize(&data, &config)?;
//! assert!(graphclust::adjusted_rand_index(&labels, &model.assignment.harden())? > 0.9);
//!
//! // certify the expected prediction loss from the training data alone
//! let report = quantized_bound(&BoundInputs {
//!     empirical_loss: model.empirical_loss(&data)?,
//!     mutual_info: model.assignment.mutual_information(),
//!     num_nodes: data.num_nodes(),
//!     num_clusters: 2,
//!     sample_size: data.num_edges(),
//!     delta: 0.05,
//!     quantization: Quantization::Delta(graphclust::default_quantization(2, data.num_edges())),
//! })?;
//! assert!(report.expected_loss_bound <= 1.0);
//! assert!(report.expected_loss_bound >= report.inputs.empirical_loss);
//! # Ok::<(), graphclust::Error>(())
//! ```

pub mod bound;
pub mod cli;
pub mod data;
pub mod error;
pub mod model;
pub mod optimizer;
pub mod synth;

pub use bound::{
    binary_kl, default_quantization, inv_kl_upper, quantized_bound, finite_alphabet_bound, BoundInputs,
    BoundReport, Quantization,
};
pub use data::{
    parse_edge_list, scale_weights, split, EdgeDataset, EdgeObservation, NodeSpace, ParseOptions,
    ScaleMethod, SplitManifest, SplitResult,
};
pub use error::{Error, Result};
pub use model::{
    cell_mean_weights, ml_cluster_weights, Assignment, ClusterModel, ClusterWeights,
};
pub use optimizer::{
    alternating_step, objective, optimize, OptimizerConfig, OptimizerTrace, TraceRow,
};
pub use synth::{
    adjusted_rand_index, generate, PlantedPartitionSpec, TrueDistribution, WeightModel,
};
