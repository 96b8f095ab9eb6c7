#ifndef GRAPHCLUST_H
#define GRAPHCLUST_H

/* Generated by cbindgen from graphclust-ffi; do not edit by hand. */

#include <stdarg.h>
#include <stdbool.h>
#include <stdint.h>
#include <stdlib.h>

// Result of every fallible call.
typedef enum GcStatus {
  GcStatus_Ok = 0,
  // A required pointer argument was null.
  GcStatus_NullArgument = 1,
  // A string argument was not valid UTF-8.
  GcStatus_InvalidUtf8 = 2,
  // The edge-list or model text could not be parsed.
  GcStatus_ParseError = 3,
  // Structurally invalid data (duplicate edges, bad weights, ...).
  GcStatus_DataError = 4,
  // Invalid configuration values.
  GcStatus_ConfigError = 5,
  GcStatus_IoError = 6,
  // The optimizer hit its iteration cap; the returned model is the best
  // found so far.
  GcStatus_IterationCap = 7,
  // An internal invariant failed.
  GcStatus_InternalError = 8,
} GcStatus;

// Weight scaling applied while parsing an edge list.
typedef enum GcScale {
  // Weights must already be in [0, 1].
  GcScale_None = 0,
  // Affine map of the observed range onto [0, 1].
  GcScale_MinMax = 1,
  // exp(-latency / median latency) for raw nonnegative latencies.
  GcScale_NegExpMedian = 2,
} GcScale;

// Opaque edge-weight sample over a fixed node space.
typedef struct GcDataset GcDataset;

// Opaque trained predictor (soft assignment plus cluster-pair weights).
typedef struct GcModel GcModel;

// Planted-partition generator parameters.
typedef struct GcPlantedSpec {
  uint64_t num_nodes;
  uint64_t num_blocks;
  double intra_weight_mean;
  double inter_weight_mean;
  // Half-width of the uniform weight noise (ignored for Bernoulli).
  double weight_noise;
  // Probability each unordered pair is observed, in (0, 1].
  double edge_observation_rate;
  // Draw weights in {0, 1} with the block mean as success probability.
  bool bernoulli_weights;
  uint64_t seed;
} GcPlantedSpec;

// Optimizer configuration. Zero or negative values select the defaults
// noted per field.
typedef struct GcTrainConfig {
  uint64_t num_clusters;
  // Target trade-off parameter (> 0).
  double beta;
  bool anneal;
  // Starting beta of the annealing schedule; <= 0 means 1/N.
  double anneal_start;
  // Multiplier between annealing levels; <= 1 means 2.
  double anneal_factor;
  // Alternating steps per level; 0 means 5.
  uint64_t iters_per_beta;
  // Noise shake between levels; < 0 means the default 1.0.
  double noise_scale;
  // Random restarts; 0 means 10.
  uint64_t restarts;
  uint64_t seed;
  // Total step cap; 0 means 100,000.
  uint64_t max_total_iters;
} GcTrainConfig;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Library version as a static nul-terminated string.
const char *gc_version(void);

// Message for the most recent failure on this thread. Valid until the
// next API call on the same thread; never null.
const char *gc_last_error_message(void);

// Releases a string returned by this API.
//
// # Safety
// `s` must be null or a pointer previously returned by a `gc_*` function
// documented to transfer string ownership, not yet freed.
void gc_string_free(char *s);

// Parses a tab-separated edge list (`src <TAB> dst <TAB> weight` lines,
// `#` comments) into a new dataset handle.
//
// # Safety
// `text` must be a valid nul-terminated string; `out` must be writable.
enum GcStatus gc_dataset_parse(const char *text,
                               bool symmetric,
                               bool allow_self_loops,
                               enum GcScale scale,
                               struct GcDataset **out);

// Reads and parses an edge-list file.
//
// # Safety
// `path` must be a valid nul-terminated string; `out` must be writable.
enum GcStatus gc_dataset_load(const char *path,
                              bool symmetric,
                              bool allow_self_loops,
                              enum GcScale scale,
                              struct GcDataset **out);

// Writes the dataset back out as a tab-separated edge list.
//
// # Safety
// `dataset` must be a live handle; `path` a valid nul-terminated string.
enum GcStatus gc_dataset_save(const struct GcDataset *dataset, const char *path);

// Releases a dataset handle (null is a no-op).
//
// # Safety
// `dataset` must be null or a live handle from this API, not yet freed.
void gc_dataset_free(struct GcDataset *dataset);

// Number of nodes, or 0 for a null handle.
//
// # Safety
// `dataset` must be null or a live handle.
uint64_t gc_dataset_num_nodes(const struct GcDataset *dataset);

// Number of observed edges, or 0 for a null handle.
//
// # Safety
// `dataset` must be null or a live handle.
uint64_t gc_dataset_num_edges(const struct GcDataset *dataset);

// Splits a dataset into train/cv/test shares (fractions must sum to 1);
// identical seeds give identical splits.
//
// # Safety
// `dataset` must be a live handle; the out-pointers must be writable.
enum GcStatus gc_dataset_split(const struct GcDataset *dataset,
                               double train_fraction,
                               double cv_fraction,
                               double test_fraction,
                               uint64_t seed,
                               struct GcDataset **out_train,
                               struct GcDataset **out_cv,
                               struct GcDataset **out_test);

// Generates a planted-partition dataset. When `out_labels` is non-null it
// must point to `num_nodes` writable `uint32_t` slots and receives the
// ground-truth block of each node.
//
// # Safety
// `spec` must be readable, `out_dataset` writable, and `out_labels` null
// or an array of at least `spec.num_nodes` entries.
enum GcStatus gc_synth_planted(const struct GcPlantedSpec *spec,
                               struct GcDataset **out_dataset,
                               uint32_t *out_labels);

// Fills `out` with the default training configuration for the given
// cluster count and beta.
//
// # Safety
// `out` must be writable.
enum GcStatus gc_train_config_default(uint64_t num_clusters,
                                      double beta,
                                      struct GcTrainConfig *out);

// Trains a model on the dataset. Returns `Ok`, or `IterationCap` when the
// step budget ran out (the best model so far is still written to `out`).
//
// # Safety
// `dataset` and `config` must be live/readable; `out` must be writable.
enum GcStatus gc_train(const struct GcDataset *dataset,
                       const struct GcTrainConfig *config,
                       struct GcModel **out);

// Releases a model handle (null is a no-op).
//
// # Safety
// `model` must be null or a live handle from this API, not yet freed.
void gc_model_free(struct GcModel *model);

// Number of nodes the model covers, or 0 for a null handle.
//
// # Safety
// `model` must be null or a live handle.
uint64_t gc_model_num_nodes(const struct GcModel *model);

// Number of clusters, or 0 for a null handle.
//
// # Safety
// `model` must be null or a live handle.
uint64_t gc_model_num_clusters(const struct GcModel *model);

// Predicted weight for the edge `(i, j)`.
//
// # Safety
// `model` must be a live handle and `out` writable.
enum GcStatus gc_model_predict(const struct GcModel *model, uint64_t i, uint64_t j, double *out);

// Mean squared prediction error of the model on a dataset.
//
// # Safety
// `model` and `dataset` must be live handles; `out` writable.
enum GcStatus gc_model_empirical_loss(const struct GcModel *model,
                                      const struct GcDataset *dataset,
                                      double *out);

// Node-cluster mutual information of the model's assignment, in nats.
//
// # Safety
// `model` must be a live handle; `out` writable.
enum GcStatus gc_model_mutual_information(const struct GcModel *model, double *out);

// Copies the soft assignment (row-major, `num_nodes x num_clusters`) into
// a caller buffer of `len` doubles.
//
// # Safety
// `model` must be a live handle; `buf` must hold at least `len` doubles.
enum GcStatus gc_model_assignment(const struct GcModel *model, double *buf, uint64_t len);

// Copies the cluster-pair weights (row-major, `num_clusters^2`) into a
// caller buffer of `len` doubles.
//
// # Safety
// `model` must be a live handle; `buf` must hold at least `len` doubles.
enum GcStatus gc_model_cluster_weights(const struct GcModel *model, double *buf, uint64_t len);

// Serializes the model to its text format. The returned string belongs to
// the caller (release with `gc_string_free`).
//
// # Safety
// `model` must be a live handle; `out` writable.
enum GcStatus gc_model_to_text(const struct GcModel *model, char **out);

// Parses a model from its text format.
//
// # Safety
// `text` must be a valid nul-terminated string; `out` writable.
enum GcStatus gc_model_from_text(const char *text, struct GcModel **out);

// Expected-loss bound for weights in a finite alphabet of `alphabet_size`
// symbols. Writes the bound and, optionally, the complexity term.
//
// # Safety
// `out_bound` must be writable; `out_complexity` may be null.
enum GcStatus gc_bound_finite_alphabet(double empirical_loss,
                                       double mutual_info,
                                       uint64_t num_nodes,
                                       uint64_t num_clusters,
                                       uint64_t sample_size,
                                       double delta,
                                       uint64_t alphabet_size,
                                       double *out_bound,
                                       double *out_complexity);

// Expected-loss bound for continuous weights quantized at spacing
// `quantization_delta`; pass a value <= 0 to use the rule of thumb
// `5 |C|^2 / N`.
//
// # Safety
// `out_bound` must be writable; `out_complexity` may be null.
enum GcStatus gc_bound_quantized(double empirical_loss,
                                 double mutual_info,
                                 uint64_t num_nodes,
                                 uint64_t num_clusters,
                                 uint64_t sample_size,
                                 double delta,
                                 double quantization_delta,
                                 double *out_bound,
                                 double *out_complexity);

// Adjusted Rand index between two labelings of the same `len` nodes.
//
// # Safety
// `a` and `b` must each point to `len` readable entries; `out` writable.
enum GcStatus gc_adjusted_rand_index(const uint32_t *a,
                                     const uint32_t *b,
                                     uint64_t len,
                                     double *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* GRAPHCLUST_H */
