//! C ABI for the graphclust library.
//!
//! Conventions:
//! - Datasets and models are opaque handles created and destroyed by this
//!   API; every `*_free` accepts null.
//! - Functions return a [`GcStatus`]; outputs go through out-pointers that
//!   are written only on success (plus [`GcStatus::IterationCap`], which
//!   still yields a model).
//! - On failure, `gc_last_error_message` returns a thread-local,
//!   nul-terminated description valid until the next API call on the same
//!   thread.
//! - Strings returned as `char*` are owned by the caller and must be
//!   released with `gc_string_free`.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};

use graphclust::bound::{
    quantized_bound, finite_alphabet_bound, BoundInputs, Quantization,
};
use graphclust::data::{parse_edge_list, split, EdgeDataset, ParseOptions, ScaleMethod};
use graphclust::error::Error;
use graphclust::model::ClusterModel;
use graphclust::optimizer::{optimize, OptimizerConfig};
use graphclust::synth::{adjusted_rand_index, generate, PlantedPartitionSpec, WeightModel};

/// Result of every fallible call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GcStatus {
    Ok = 0,
    /// A required pointer argument was null.
    NullArgument = 1,
    /// A string argument was not valid UTF-8.
    InvalidUtf8 = 2,
    /// The edge-list or model text could not be parsed.
    ParseError = 3,
    /// Structurally invalid data (duplicate edges, bad weights, ...).
    DataError = 4,
    /// Invalid configuration values.
    ConfigError = 5,
    IoError = 6,
    /// The optimizer hit its iteration cap; the returned model is the best
    /// found so far.
    IterationCap = 7,
    /// An internal invariant failed.
    InternalError = 8,
}

/// Weight scaling applied while parsing an edge list.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GcScale {
    /// Weights must already be in [0, 1].
    None = 0,
    /// Affine map of the observed range onto [0, 1].
    MinMax = 1,
    /// exp(-latency / median latency) for raw nonnegative latencies.
    NegExpMedian = 2,
}

impl From<GcScale> for ScaleMethod {
    fn from(s: GcScale) -> Self {
        match s {
            GcScale::None => ScaleMethod::None,
            GcScale::MinMax => ScaleMethod::MinMax,
            GcScale::NegExpMedian => ScaleMethod::NegExpMedian,
        }
    }
}

/// Opaque edge-weight sample over a fixed node space.
pub struct GcDataset(EdgeDataset);

/// Opaque trained predictor (soft assignment plus cluster-pair weights).
pub struct GcModel(ClusterModel);

/// Planted-partition generator parameters.
#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct GcPlantedSpec {
    pub num_nodes: u64,
    pub num_blocks: u64,
    pub intra_weight_mean: f64,
    pub inter_weight_mean: f64,
    /// Half-width of the uniform weight noise (ignored for Bernoulli).
    pub weight_noise: f64,
    /// Probability each unordered pair is observed, in (0, 1].
    pub edge_observation_rate: f64,
    /// Draw weights in {0, 1} with the block mean as success probability.
    pub bernoulli_weights: bool,
    pub seed: u64,
}

/// Optimizer configuration. Zero or negative values select the defaults
/// noted per field.
#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct GcTrainConfig {
    pub num_clusters: u64,
    /// Target trade-off parameter (> 0).
    pub beta: f64,
    pub anneal: bool,
    /// Starting beta of the annealing schedule; <= 0 means 1/N.
    pub anneal_start: f64,
    /// Multiplier between annealing levels; <= 1 means 2.
    pub anneal_factor: f64,
    /// Alternating steps per level; 0 means 5.
    pub iters_per_beta: u64,
    /// Noise shake between levels; < 0 means the default 1.0.
    pub noise_scale: f64,
    /// Random restarts; 0 means 10.
    pub restarts: u64,
    pub seed: u64,
    /// Total step cap; 0 means 100,000.
    pub max_total_iters: u64,
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_error(msg: &str) {
    let sanitized: String = msg.chars().map(|c| if c == '\0' { ' ' } else { c }).collect();
    LAST_ERROR.with(|e| *e.borrow_mut() = CString::new(sanitized).unwrap_or_default());
}

fn status_of(err: &Error) -> GcStatus {
    match err {
        Error::Parse { .. } => GcStatus::ParseError,
        Error::Data(_) | Error::EmptyDataset | Error::DimensionMismatch(_) => GcStatus::DataError,
        Error::Config(_) => GcStatus::ConfigError,
        Error::IterationCap(_) => GcStatus::IterationCap,
        Error::Io(_) => GcStatus::IoError,
    }
}

fn fail(err: &Error) -> GcStatus {
    set_error(&err.to_string());
    status_of(err)
}

/// Runs a closure, converting panics into `InternalError`.
fn guarded(f: impl FnOnce() -> GcStatus) -> GcStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(s) => s,
        Err(_) => {
            set_error("internal panic");
            GcStatus::InternalError
        }
    }
}

/// # Safety
/// `ptr` must be null or a valid nul-terminated string.
unsafe fn read_str<'a>(ptr: *const c_char) -> Result<&'a str, GcStatus> {
    if ptr.is_null() {
        set_error("null string argument");
        return Err(GcStatus::NullArgument);
    }
    CStr::from_ptr(ptr).to_str().map_err(|_| {
        set_error("string argument is not valid UTF-8");
        GcStatus::InvalidUtf8
    })
}

fn require<'a, T>(ptr: *const T) -> Result<&'a T, GcStatus> {
    if ptr.is_null() {
        set_error("null handle argument");
        return Err(GcStatus::NullArgument);
    }
    Ok(unsafe { &*ptr })
}

fn require_out<'a, T>(ptr: *mut T) -> Result<&'a mut T, GcStatus> {
    if ptr.is_null() {
        set_error("null output argument");
        return Err(GcStatus::NullArgument);
    }
    Ok(unsafe { &mut *ptr })
}

/// Library version as a static nul-terminated string.
#[no_mangle]
pub extern "C" fn gc_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr() as *const c_char
}

/// Message for the most recent failure on this thread. Valid until the
/// next API call on the same thread; never null.
#[no_mangle]
pub extern "C" fn gc_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

/// Releases a string returned by this API.
///
/// # Safety
/// `s` must be null or a pointer previously returned by a `gc_*` function
/// documented to transfer string ownership, not yet freed.
#[no_mangle]
pub unsafe extern "C" fn gc_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// Parses a tab-separated edge list (`src <TAB> dst <TAB> weight` lines,
/// `#` comments) into a new dataset handle.
///
/// # Safety
/// `text` must be a valid nul-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn gc_dataset_parse(
    text: *const c_char,
    symmetric: bool,
    allow_self_loops: bool,
    scale: GcScale,
    out: *mut *mut GcDataset,
) -> GcStatus {
    guarded(|| {
        let (text, out) = match (read_str(text), require_out(out)) {
            (Ok(t), Ok(o)) => (t, o),
            (Err(s), _) | (_, Err(s)) => return s,
        };
        let options = ParseOptions {
            symmetric,
            allow_self_loops,
            scale: scale.into(),
            ..ParseOptions::default()
        };
        match parse_edge_list(text, &options) {
            Ok(d) => {
                *out = Box::into_raw(Box::new(GcDataset(d)));
                GcStatus::Ok
            }
            Err(e) => fail(&e),
        }
    })
}

/// Reads and parses an edge-list file.
///
/// # Safety
/// `path` must be a valid nul-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn gc_dataset_load(
    path: *const c_char,
    symmetric: bool,
    allow_self_loops: bool,
    scale: GcScale,
    out: *mut *mut GcDataset,
) -> GcStatus {
    guarded(|| {
        let path = match read_str(path) {
            Ok(p) => p,
            Err(s) => return s,
        };
        let text = match std::fs::read_to_string(path) {
            Ok(t) => t,
            Err(e) => return fail(&Error::Io(e)),
        };
        let c_text = match CString::new(text) {
            Ok(t) => t,
            Err(_) => {
                set_error("file contains interior nul bytes");
                return GcStatus::ParseError;
            }
        };
        gc_dataset_parse(c_text.as_ptr(), symmetric, allow_self_loops, scale, out)
    })
}

/// Writes the dataset back out as a tab-separated edge list.
///
/// # Safety
/// `dataset` must be a live handle; `path` a valid nul-terminated string.
#[no_mangle]
pub unsafe extern "C" fn gc_dataset_save(
    dataset: *const GcDataset,
    path: *const c_char,
) -> GcStatus {
    guarded(|| {
        let (ds, path) = match (require(dataset), read_str(path)) {
            (Ok(d), Ok(p)) => (d, p),
            (Err(s), _) | (_, Err(s)) => return s,
        };
        match std::fs::write(path, ds.0.to_edge_list()) {
            Ok(()) => GcStatus::Ok,
            Err(e) => fail(&Error::Io(e)),
        }
    })
}

/// Releases a dataset handle (null is a no-op).
///
/// # Safety
/// `dataset` must be null or a live handle from this API, not yet freed.
#[no_mangle]
pub unsafe extern "C" fn gc_dataset_free(dataset: *mut GcDataset) {
    if !dataset.is_null() {
        drop(Box::from_raw(dataset));
    }
}

/// Number of nodes, or 0 for a null handle.
///
/// # Safety
/// `dataset` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn gc_dataset_num_nodes(dataset: *const GcDataset) -> u64 {
    dataset.as_ref().map_or(0, |d| d.0.num_nodes() as u64)
}

/// Number of observed edges, or 0 for a null handle.
///
/// # Safety
/// `dataset` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn gc_dataset_num_edges(dataset: *const GcDataset) -> u64 {
    dataset.as_ref().map_or(0, |d| d.0.num_edges() as u64)
}

/// Splits a dataset into train/cv/test shares (fractions must sum to 1);
/// identical seeds give identical splits.
///
/// # Safety
/// `dataset` must be a live handle; the out-pointers must be writable.
#[no_mangle]
pub unsafe extern "C" fn gc_dataset_split(
    dataset: *const GcDataset,
    train_fraction: f64,
    cv_fraction: f64,
    test_fraction: f64,
    seed: u64,
    out_train: *mut *mut GcDataset,
    out_cv: *mut *mut GcDataset,
    out_test: *mut *mut GcDataset,
) -> GcStatus {
    guarded(|| {
        let ds = match require(dataset) {
            Ok(d) => d,
            Err(s) => return s,
        };
        let (ot, oc, oe) = match (require_out(out_train), require_out(out_cv), require_out(out_test))
        {
            (Ok(a), Ok(b), Ok(c)) => (a, b, c),
            (Err(s), _, _) | (_, Err(s), _) | (_, _, Err(s)) => return s,
        };
        match split(&ds.0, (train_fraction, cv_fraction, test_fraction), seed) {
            Ok(s) => {
                *ot = Box::into_raw(Box::new(GcDataset(s.train)));
                *oc = Box::into_raw(Box::new(GcDataset(s.cv)));
                *oe = Box::into_raw(Box::new(GcDataset(s.test)));
                GcStatus::Ok
            }
            Err(e) => fail(&e),
        }
    })
}

/// Generates a planted-partition dataset. When `out_labels` is non-null it
/// must point to `num_nodes` writable `uint32_t` slots and receives the
/// ground-truth block of each node.
///
/// # Safety
/// `spec` must be readable, `out_dataset` writable, and `out_labels` null
/// or an array of at least `spec.num_nodes` entries.
#[no_mangle]
pub unsafe extern "C" fn gc_synth_planted(
    spec: *const GcPlantedSpec,
    out_dataset: *mut *mut GcDataset,
    out_labels: *mut u32,
) -> GcStatus {
    guarded(|| {
        let (spec, out) = match (require(spec), require_out(out_dataset)) {
            (Ok(s), Ok(o)) => (s, o),
            (Err(s), _) | (_, Err(s)) => return s,
        };
        let planted = PlantedPartitionSpec {
            num_nodes: spec.num_nodes as usize,
            num_blocks: spec.num_blocks as usize,
            intra_weight_mean: spec.intra_weight_mean,
            inter_weight_mean: spec.inter_weight_mean,
            weight_noise: spec.weight_noise,
            edge_observation_rate: spec.edge_observation_rate,
            weight_model: if spec.bernoulli_weights {
                WeightModel::Bernoulli
            } else {
                WeightModel::TruncatedUniform
            },
            seed: spec.seed,
        };
        match generate(&planted) {
            Ok((data, labels, _)) => {
                if !out_labels.is_null() {
                    for (k, &l) in labels.iter().enumerate() {
                        *out_labels.add(k) = l as u32;
                    }
                }
                *out = Box::into_raw(Box::new(GcDataset(data)));
                GcStatus::Ok
            }
            Err(e) => fail(&e),
        }
    })
}

/// Fills `out` with the default training configuration for the given
/// cluster count and beta.
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn gc_train_config_default(
    num_clusters: u64,
    beta: f64,
    out: *mut GcTrainConfig,
) -> GcStatus {
    guarded(|| {
        let out = match require_out(out) {
            Ok(o) => o,
            Err(s) => return s,
        };
        let d = OptimizerConfig::new(beta, num_clusters as usize);
        *out = GcTrainConfig {
            num_clusters,
            beta,
            anneal: d.anneal,
            anneal_start: 0.0,
            anneal_factor: d.anneal_factor,
            iters_per_beta: d.iters_per_beta as u64,
            noise_scale: d.noise_scale,
            restarts: d.restarts as u64,
            seed: d.seed,
            max_total_iters: d.max_total_iters as u64,
        };
        GcStatus::Ok
    })
}

/// Trains a model on the dataset. Returns `Ok`, or `IterationCap` when the
/// step budget ran out (the best model so far is still written to `out`).
///
/// # Safety
/// `dataset` and `config` must be live/readable; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn gc_train(
    dataset: *const GcDataset,
    config: *const GcTrainConfig,
    out: *mut *mut GcModel,
) -> GcStatus {
    guarded(|| {
        let (ds, cfg, out) = match (require(dataset), require(config), require_out(out)) {
            (Ok(d), Ok(c), Ok(o)) => (d, c, o),
            (Err(s), _, _) | (_, Err(s), _) | (_, _, Err(s)) => return s,
        };
        let mut oc = OptimizerConfig::new(cfg.beta, cfg.num_clusters as usize);
        oc.anneal = cfg.anneal;
        if cfg.anneal_start > 0.0 {
            oc.anneal_start = Some(cfg.anneal_start);
        }
        if cfg.anneal_factor > 1.0 {
            oc.anneal_factor = cfg.anneal_factor;
        }
        if cfg.iters_per_beta > 0 {
            oc.iters_per_beta = cfg.iters_per_beta as usize;
        }
        if cfg.noise_scale >= 0.0 {
            oc.noise_scale = cfg.noise_scale;
        }
        if cfg.restarts > 0 {
            oc.restarts = cfg.restarts as usize;
        }
        oc.seed = cfg.seed;
        if cfg.max_total_iters > 0 {
            oc.max_total_iters = cfg.max_total_iters as usize;
        }
        match optimize(&ds.0, &oc) {
            Ok((model, trace)) => {
                *out = Box::into_raw(Box::new(GcModel(model)));
                if trace.iteration_cap_hit {
                    set_error("iteration cap reached; returning best model so far");
                    GcStatus::IterationCap
                } else {
                    GcStatus::Ok
                }
            }
            Err(e) => fail(&e),
        }
    })
}

/// Releases a model handle (null is a no-op).
///
/// # Safety
/// `model` must be null or a live handle from this API, not yet freed.
#[no_mangle]
pub unsafe extern "C" fn gc_model_free(model: *mut GcModel) {
    if !model.is_null() {
        drop(Box::from_raw(model));
    }
}

/// Number of nodes the model covers, or 0 for a null handle.
///
/// # Safety
/// `model` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn gc_model_num_nodes(model: *const GcModel) -> u64 {
    model.as_ref().map_or(0, |m| m.0.num_nodes() as u64)
}

/// Number of clusters, or 0 for a null handle.
///
/// # Safety
/// `model` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn gc_model_num_clusters(model: *const GcModel) -> u64 {
    model.as_ref().map_or(0, |m| m.0.num_clusters() as u64)
}

/// Predicted weight for the edge `(i, j)`.
///
/// # Safety
/// `model` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn gc_model_predict(
    model: *const GcModel,
    i: u64,
    j: u64,
    out: *mut f64,
) -> GcStatus {
    guarded(|| {
        let (m, out) = match (require(model), require_out(out)) {
            (Ok(m), Ok(o)) => (m, o),
            (Err(s), _) | (_, Err(s)) => return s,
        };
        let n = m.0.num_nodes() as u64;
        if i >= n || j >= n {
            set_error("node index out of bounds");
            return GcStatus::DataError;
        }
        *out = m.0.predict_edge(i as usize, j as usize);
        GcStatus::Ok
    })
}

/// Mean squared prediction error of the model on a dataset.
///
/// # Safety
/// `model` and `dataset` must be live handles; `out` writable.
#[no_mangle]
pub unsafe extern "C" fn gc_model_empirical_loss(
    model: *const GcModel,
    dataset: *const GcDataset,
    out: *mut f64,
) -> GcStatus {
    guarded(|| {
        let (m, d, out) = match (require(model), require(dataset), require_out(out)) {
            (Ok(m), Ok(d), Ok(o)) => (m, d, o),
            (Err(s), _, _) | (_, Err(s), _) | (_, _, Err(s)) => return s,
        };
        match m.0.empirical_loss(&d.0) {
            Ok(l) => {
                *out = l;
                GcStatus::Ok
            }
            Err(e) => fail(&e),
        }
    })
}

/// Node-cluster mutual information of the model's assignment, in nats.
///
/// # Safety
/// `model` must be a live handle; `out` writable.
#[no_mangle]
pub unsafe extern "C" fn gc_model_mutual_information(
    model: *const GcModel,
    out: *mut f64,
) -> GcStatus {
    guarded(|| {
        let (m, out) = match (require(model), require_out(out)) {
            (Ok(m), Ok(o)) => (m, o),
            (Err(s), _) | (_, Err(s)) => return s,
        };
        *out = m.0.assignment.mutual_information();
        GcStatus::Ok
    })
}

/// Copies the soft assignment (row-major, `num_nodes x num_clusters`) into
/// a caller buffer of `len` doubles.
///
/// # Safety
/// `model` must be a live handle; `buf` must hold at least `len` doubles.
#[no_mangle]
pub unsafe extern "C" fn gc_model_assignment(
    model: *const GcModel,
    buf: *mut f64,
    len: u64,
) -> GcStatus {
    guarded(|| {
        let m = match require(model) {
            Ok(m) => m,
            Err(s) => return s,
        };
        if buf.is_null() {
            set_error("null buffer");
            return GcStatus::NullArgument;
        }
        let values = m.0.assignment.values();
        if (len as usize) < values.len() {
            set_error("assignment buffer too small");
            return GcStatus::ConfigError;
        }
        std::ptr::copy_nonoverlapping(values.as_ptr(), buf, values.len());
        GcStatus::Ok
    })
}

/// Copies the cluster-pair weights (row-major, `num_clusters^2`) into a
/// caller buffer of `len` doubles.
///
/// # Safety
/// `model` must be a live handle; `buf` must hold at least `len` doubles.
#[no_mangle]
pub unsafe extern "C" fn gc_model_cluster_weights(
    model: *const GcModel,
    buf: *mut f64,
    len: u64,
) -> GcStatus {
    guarded(|| {
        let m = match require(model) {
            Ok(m) => m,
            Err(s) => return s,
        };
        if buf.is_null() {
            set_error("null buffer");
            return GcStatus::NullArgument;
        }
        let values = m.0.weights.values();
        if (len as usize) < values.len() {
            set_error("weights buffer too small");
            return GcStatus::ConfigError;
        }
        std::ptr::copy_nonoverlapping(values.as_ptr(), buf, values.len());
        GcStatus::Ok
    })
}

/// Serializes the model to its text format. The returned string belongs to
/// the caller (release with `gc_string_free`).
///
/// # Safety
/// `model` must be a live handle; `out` writable.
#[no_mangle]
pub unsafe extern "C" fn gc_model_to_text(
    model: *const GcModel,
    out: *mut *mut c_char,
) -> GcStatus {
    guarded(|| {
        let (m, out) = match (require(model), require_out(out)) {
            (Ok(m), Ok(o)) => (m, o),
            (Err(s), _) | (_, Err(s)) => return s,
        };
        match CString::new(m.0.to_text()) {
            Ok(s) => {
                *out = s.into_raw();
                GcStatus::Ok
            }
            Err(_) => {
                set_error("model text contained a nul byte");
                GcStatus::InternalError
            }
        }
    })
}

/// Parses a model from its text format.
///
/// # Safety
/// `text` must be a valid nul-terminated string; `out` writable.
#[no_mangle]
pub unsafe extern "C" fn gc_model_from_text(
    text: *const c_char,
    out: *mut *mut GcModel,
) -> GcStatus {
    guarded(|| {
        let (text, out) = match (read_str(text), require_out(out)) {
            (Ok(t), Ok(o)) => (t, o),
            (Err(s), _) | (_, Err(s)) => return s,
        };
        match ClusterModel::from_text(text) {
            Ok(m) => {
                *out = Box::into_raw(Box::new(GcModel(m)));
                GcStatus::Ok
            }
            Err(e) => fail(&e),
        }
    })
}

/// Expected-loss bound for weights in a finite alphabet of `alphabet_size`
/// symbols. Writes the bound and, optionally, the complexity term.
///
/// # Safety
/// `out_bound` must be writable; `out_complexity` may be null.
#[no_mangle]
pub unsafe extern "C" fn gc_bound_finite_alphabet(
    empirical_loss: f64,
    mutual_info: f64,
    num_nodes: u64,
    num_clusters: u64,
    sample_size: u64,
    delta: f64,
    alphabet_size: u64,
    out_bound: *mut f64,
    out_complexity: *mut f64,
) -> GcStatus {
    guarded(|| {
        let out = match require_out(out_bound) {
            Ok(o) => o,
            Err(s) => return s,
        };
        let inputs = BoundInputs {
            empirical_loss,
            mutual_info,
            num_nodes: num_nodes as usize,
            num_clusters: num_clusters as usize,
            sample_size: sample_size as usize,
            delta,
            quantization: Quantization::Alphabet(alphabet_size),
        };
        match finite_alphabet_bound(&inputs) {
            Ok(report) => {
                *out = report.expected_loss_bound;
                if !out_complexity.is_null() {
                    *out_complexity = report.complexity;
                }
                GcStatus::Ok
            }
            Err(e) => fail(&e),
        }
    })
}

/// Expected-loss bound for continuous weights quantized at spacing
/// `quantization_delta`; pass a value <= 0 to use the rule of thumb
/// `5 |C|^2 / N`.
///
/// # Safety
/// `out_bound` must be writable; `out_complexity` may be null.
#[no_mangle]
pub unsafe extern "C" fn gc_bound_quantized(
    empirical_loss: f64,
    mutual_info: f64,
    num_nodes: u64,
    num_clusters: u64,
    sample_size: u64,
    delta: f64,
    quantization_delta: f64,
    out_bound: *mut f64,
    out_complexity: *mut f64,
) -> GcStatus {
    guarded(|| {
        let out = match require_out(out_bound) {
            Ok(o) => o,
            Err(s) => return s,
        };
        let dq = if quantization_delta > 0.0 {
            quantization_delta
        } else {
            graphclust::bound::default_quantization(num_clusters as usize, sample_size as usize)
        };
        let inputs = BoundInputs {
            empirical_loss,
            mutual_info,
            num_nodes: num_nodes as usize,
            num_clusters: num_clusters as usize,
            sample_size: sample_size as usize,
            delta,
            quantization: Quantization::Delta(dq),
        };
        match quantized_bound(&inputs) {
            Ok(report) => {
                *out = report.expected_loss_bound;
                if !out_complexity.is_null() {
                    *out_complexity = report.complexity;
                }
                GcStatus::Ok
            }
            Err(e) => fail(&e),
        }
    })
}

/// Adjusted Rand index between two labelings of the same `len` nodes.
///
/// # Safety
/// `a` and `b` must each point to `len` readable entries; `out` writable.
#[no_mangle]
pub unsafe extern "C" fn gc_adjusted_rand_index(
    a: *const u32,
    b: *const u32,
    len: u64,
    out: *mut f64,
) -> GcStatus {
    guarded(|| {
        let out = match require_out(out) {
            Ok(o) => o,
            Err(s) => return s,
        };
        if a.is_null() || b.is_null() {
            set_error("null label array");
            return GcStatus::NullArgument;
        }
        let av: Vec<usize> =
            std::slice::from_raw_parts(a, len as usize).iter().map(|&x| x as usize).collect();
        let bv: Vec<usize> =
            std::slice::from_raw_parts(b, len as usize).iter().map(|&x| x as usize).collect();
        match adjusted_rand_index(&av, &bv) {
            Ok(score) => {
                *out = score;
                GcStatus::Ok
            }
            Err(e) => fail(&e),
        }
    })
}
