//! PAC-Bayesian generalization bounds on the expected edge-weight
//! prediction loss.
//!
//! The bound is a high-probability statement holding uniformly over all
//! cluster models: with probability at least `1 - delta` over the sample,
//!
//! ```text
//! kl(empirical_loss || expected_loss) <= complexity
//! complexity = (|X| I + |C| ln|X| + |C|^2 ln|W| + ln(4N)/2 - ln(delta)) / N
//! ```
//!
//! where `I` is the node-cluster mutual information in nats and `|W|` the
//! size of a finite weight alphabet. Inverting the binary KL divergence
//! numerically turns this into an upper bound on the expected loss. For
//! continuous weights, rounding predictions to a grid of spacing `delta_q`
//! costs at most `delta_q + delta_q^2 / 4` in both losses and replaces
//! `ln|W|` by `-ln(delta_q)`.

use crate::error::{Error, Result};
use std::fmt::Write as _;

/// Binary KL divergence `kl(p || q)` between Bernoulli biases, in nats.
///
/// Degenerate `q` in `{0, 1}` yields `+inf` unless `p` matches exactly,
/// in which case the divergence is 0.
pub fn binary_kl(p: f64, q: f64) -> f64 {
    debug_assert!((0.0..=1.0).contains(&p) && (0.0..=1.0).contains(&q));
    if p == q {
        return 0.0;
    }
    if q <= 0.0 || q >= 1.0 {
        return f64::INFINITY;
    }
    if p == 0.0 {
        return -(1.0 - q).ln();
    }
    if p == 1.0 {
        return -q.ln();
    }
    p * (p / q).ln() + (1.0 - p) * ((1.0 - p) / (1.0 - q)).ln()
}

/// Upper inverse of the binary KL divergence:
/// the largest `z in [p_hat, 1)` with `binary_kl(p_hat, z) <= epsilon`,
/// or 1 when even `z -> 1` stays within budget.
///
/// Found by bisection on a monotone function, bracket `[p_hat, 1 - 1e-15]`,
/// run to an interval of width 1e-12 (or one ulp, whichever comes first)
/// within at most 200 iterations. The feasible endpoint is returned, so the
/// result never overshoots the budget.
pub fn inv_kl_upper(p_hat: f64, epsilon: f64) -> f64 {
    debug_assert!((0.0..=1.0).contains(&p_hat) && epsilon >= 0.0);
    if epsilon == 0.0 {
        return p_hat;
    }
    if p_hat >= 1.0 {
        return 1.0;
    }
    let hi0 = 1.0 - 1e-15;
    if binary_kl(p_hat, hi0) <= epsilon {
        return 1.0;
    }
    let mut lo = p_hat;
    let mut hi = hi0;
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break; // interval at floating-point resolution
        }
        if binary_kl(p_hat, mid) <= epsilon {
            lo = mid;
        } else {
            hi = mid;
        }
        // where kl is steep a narrow interval can still leave a visible
        // divergence gap, so require both to be tight
        if hi - lo <= 1e-12 && epsilon - binary_kl(p_hat, lo) <= 1e-10 {
            break;
        }
    }
    lo
}

/// How the finite weight alphabet of the bound is specified.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Quantization {
    /// The weights already live in a finite alphabet of this size.
    Alphabet(u64),
    /// Continuous weights rounded to a grid of this spacing (the grid runs
    /// from `delta/2` to `1 - delta/2`; only the spacing enters the bound).
    Delta(f64),
}

/// The rule-of-thumb grid spacing `5 |C|^2 / N`, clamped into
/// `[1e-9, 0.5]` for numerical safety.
pub fn default_quantization(num_clusters: usize, sample_size: usize) -> f64 {
    let d = 5.0 * (num_clusters * num_clusters) as f64 / sample_size as f64;
    d.clamp(1e-9, 0.5)
}

/// Everything the bound depends on.
#[derive(Debug, Clone, PartialEq)]
pub struct BoundInputs {
    pub empirical_loss: f64,
    /// Node-cluster mutual information in nats.
    pub mutual_info: f64,
    pub num_nodes: usize,
    pub num_clusters: usize,
    pub sample_size: usize,
    /// Confidence parameter in (0, 1).
    pub delta: f64,
    pub quantization: Quantization,
}

impl BoundInputs {
    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.empirical_loss) || !self.empirical_loss.is_finite() {
            return Err(Error::Config(format!(
                "empirical loss {} outside [0, 1]",
                self.empirical_loss
            )));
        }
        let ln_c = (self.num_clusters.max(1) as f64).ln();
        if !self.mutual_info.is_finite()
            || self.mutual_info < 0.0
            || self.mutual_info > ln_c + 1e-9
        {
            return Err(Error::Config(format!(
                "mutual information {} outside [0, ln {}]",
                self.mutual_info, self.num_clusters
            )));
        }
        if self.num_nodes < 2 {
            return Err(Error::Config("need at least 2 nodes".into()));
        }
        if self.num_clusters == 0 {
            return Err(Error::Config("need at least 1 cluster".into()));
        }
        if self.sample_size == 0 {
            return Err(Error::Config("sample size must be positive".into()));
        }
        if !(self.delta > 0.0 && self.delta < 1.0) {
            return Err(Error::Config(format!("confidence delta {} outside (0, 1)", self.delta)));
        }
        match self.quantization {
            Quantization::Alphabet(w) if w < 2 => {
                Err(Error::Config("weight alphabet needs at least 2 symbols".into()))
            }
            Quantization::Delta(d) if !(d > 0.0 && d < 1.0) => {
                Err(Error::Config(format!("quantization spacing {d} outside (0, 1)")))
            }
            _ => Ok(()),
        }
    }
}

/// A computed bound: the inputs, the complexity (the divergence budget on
/// the right-hand side), and the resulting expected-loss upper bound.
#[derive(Debug, Clone, PartialEq)]
pub struct BoundReport {
    pub inputs: BoundInputs,
    pub complexity: f64,
    pub expected_loss_bound: f64,
}

impl BoundReport {
    /// Flat key-value record consumed by the CLI reporter.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let i = &self.inputs;
        let _ = writeln!(out, "empirical_loss {}", i.empirical_loss);
        let _ = writeln!(out, "mutual_info {}", i.mutual_info);
        let _ = writeln!(out, "num_nodes {}", i.num_nodes);
        let _ = writeln!(out, "num_clusters {}", i.num_clusters);
        let _ = writeln!(out, "sample_size {}", i.sample_size);
        let _ = writeln!(out, "delta {}", i.delta);
        match i.quantization {
            Quantization::Alphabet(w) => {
                let _ = writeln!(out, "alphabet_size {w}");
            }
            Quantization::Delta(d) => {
                let _ = writeln!(out, "quantization_delta {d}");
            }
        }
        let _ = writeln!(out, "complexity {}", self.complexity);
        let _ = writeln!(out, "expected_loss_bound {}", self.expected_loss_bound);
        out
    }
}

fn shared_complexity_terms(inputs: &BoundInputs) -> f64 {
    let x = inputs.num_nodes as f64;
    let c = inputs.num_clusters as f64;
    let n = inputs.sample_size as f64;
    x * inputs.mutual_info + c * x.ln() + 0.5 * (4.0 * n).ln() - inputs.delta.ln()
}

/// Expected-loss bound for weights in a finite alphabet of size `|W|`:
/// inverts the KL divergence at complexity
/// `(|X| I + |C| ln|X| + |C|^2 ln|W| + ln(4N)/2 - ln delta) / N`.
pub fn finite_alphabet_bound(inputs: &BoundInputs) -> Result<BoundReport> {
    inputs.validate()?;
    let w = match inputs.quantization {
        Quantization::Alphabet(w) => w as f64,
        Quantization::Delta(_) => {
            return Err(Error::Config(
                "alphabet-size quantization required; use quantized_bound for a grid spacing"
                    .into(),
            ))
        }
    };
    let c = inputs.num_clusters as f64;
    let n = inputs.sample_size as f64;
    let complexity = (shared_complexity_terms(inputs) + c * c * w.ln()) / n;
    let expected_loss_bound = inv_kl_upper(inputs.empirical_loss, complexity);
    Ok(BoundReport { inputs: inputs.clone(), complexity, expected_loss_bound })
}

/// Expected-loss bound for continuous weights quantized at spacing `delta_q`:
/// both the empirical slot and the final bound carry the rounding cost
/// `delta_q + delta_q^2 / 4`, `ln|W|` becomes `-ln(delta_q)`, and the result
/// is capped at 1.
pub fn quantized_bound(inputs: &BoundInputs) -> Result<BoundReport> {
    inputs.validate()?;
    let dq = match inputs.quantization {
        Quantization::Delta(d) => d,
        Quantization::Alphabet(_) => {
            return Err(Error::Config(
                "grid-spacing quantization required; use finite_alphabet_bound for a finite alphabet"
                    .into(),
            ))
        }
    };
    let c = inputs.num_clusters as f64;
    let n = inputs.sample_size as f64;
    let complexity = (shared_complexity_terms(inputs) - c * c * dq.ln()) / n;
    let correction = dq + dq * dq / 4.0;
    let corrected_empirical = (inputs.empirical_loss + correction).min(1.0);
    let expected_loss_bound = (inv_kl_upper(corrected_empirical, complexity) + correction).min(1.0);
    Ok(BoundReport { inputs: inputs.clone(), complexity, expected_loss_bound })
}
