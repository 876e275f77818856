//! Empirical dimension of the function spaces that control how many
//! conservation laws exist: the span of sampled loss-gradient directions
//! (cotangents), its restriction to a named block of coordinates, and the
//! span of sign-gradient vectors relevant to sign descent.
//!
//! Every probe follows the same saturation protocol: collect a nominal
//! number of sample rows, compare the numerical rank at 75% and 100% of
//! them, then double the sample count and compare again. The estimate is
//! `saturated` only if all three ranks agree, turning "sample enough
//! directions" into a reproducible stopping rule.

use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use crate::error::Result;
use crate::invalid_input;
use crate::liealg;
use crate::models::{self, BlockSpec, LossKind};
use crate::numerics::{self, Mat};
use crate::rmath;
use crate::rng::Rng;
use crate::CoreError;

/// Inputs are resampled until the activation margin clears this floor, so
/// the sampled cotangents come from differentiable points.
pub const MARGIN_FLOOR: f64 = 1e-6;

/// Sign-gradient rows are resampled when any coordinate is this close to
/// zero, where the sign is numerically undefined.
pub const SIGN_FLOOR: f64 = 1e-12;

const MAX_RESAMPLE: usize = 200;

/// Suggested sample count: 8 rows per parameter dimension saturates all
/// block sizes this crate targets, with margin.
pub fn default_n_samples(spec: &BlockSpec) -> usize {
    8 * models::param_dim(spec)
}

/// Suggested number of complement environments for block-restricted probes.
pub const DEFAULT_N_ENV: usize = 16;

/// A numerical rank estimate for a sampled span.
#[derive(Clone, Debug)]
pub struct SpanEstimate {
    /// Rank of the full (doubled) sample matrix.
    pub rank: usize,
    /// Total rows actually drawn (twice the nominal count).
    pub n_samples: usize,
    /// Relative singular-value tolerance used for the rank decision.
    pub rel_tol: f64,
    /// True iff the rank was identical at 75%, 100%, and 200% of the
    /// nominal sample count.
    pub saturated: bool,
    /// Singular values of the full sample matrix, descending.
    pub singular_values: Vec<f64>,
}

/// Runs the 75% / 100% / 200% saturation protocol over a row stream.
fn saturating_rank(
    dim: usize,
    n_nominal: usize,
    rel_tol: f64,
    mut next_row: impl FnMut(usize) -> Result<Vec<f64>>,
) -> Result<SpanEstimate> {
    if dim == 0 || n_nominal == 0 {
        return Err(invalid_input!("span probe needs dim ≥ 1 and n_samples ≥ 1"));
    }
    let checkpoints = [(3 * n_nominal).div_ceil(4).max(1), n_nominal, 2 * n_nominal];
    let total = checkpoints[2];
    let mut data = Vec::with_capacity(total * dim);
    for i in 0..total {
        let row = next_row(i)?;
        if row.len() != dim {
            return Err(invalid_input!("probe row has {} entries, expected {dim}", row.len()));
        }
        data.extend_from_slice(&row);
    }
    let mut ranks = [0usize; 3];
    let mut spectrum = Vec::new();
    for (which, &rows) in checkpoints.iter().enumerate() {
        let m = Mat { rows, cols: dim, data: data[..rows * dim].to_vec() };
        let est = numerics::rank_of(&m, rel_tol)?;
        ranks[which] = est.rank;
        if which == 2 {
            spectrum = est.singular_values;
        }
    }
    Ok(SpanEstimate {
        rank: ranks[2],
        n_samples: total,
        rel_tol,
        saturated: ranks[0] == ranks[1] && ranks[1] == ranks[2],
        singular_values: spectrum,
    })
}

/// Draws a standard-normal input whose activation margin at θ clears
/// `MARGIN_FLOOR`, so the subsequent pullback is well defined.
fn smooth_input(spec: &BlockSpec, theta: &[f64], rng: &mut Rng) -> Result<Vec<f64>> {
    let din = models::in_dim(spec);
    for _ in 0..MAX_RESAMPLE {
        let x = rng.normal_vec(din);
        if models::activation_margin(spec, theta, &x)? >= MARGIN_FLOOR {
            return Ok(x);
        }
    }
    Err(invalid_input!(
        "no input with activation margin ≥ {MARGIN_FLOOR:e} found in {MAX_RESAMPLE} draws; \
         θ pins an activation to its kink for almost every input"
    ))
}

/// Empirical dimension of the span of cotangent directions ∂g(θ,·)ᵀw over
/// random inputs and output covectors. The gradient of every conserved
/// quantity is orthogonal to this span, so its corank upper-bounds (and at
/// generic θ equals) the number of independent laws.
///
/// Both supported losses realize every output covector as some per-sample
/// loss gradient, so `loss` does not change the sampled space; it is kept
/// so call sites document which training loss the probe stands in for.
pub fn empirical_span_dim(
    spec: &BlockSpec,
    theta: &[f64],
    loss: LossKind,
    n_samples: usize,
    rng: &mut Rng,
    rel_tol: f64,
) -> Result<SpanEstimate> {
    models::validate_spec(spec)?;
    let _ = loss;
    let d = models::param_dim(spec);
    if theta.len() != d {
        return Err(invalid_input!("theta has {} entries, spec needs {d}", theta.len()));
    }
    let dout = models::out_dim(spec);
    saturating_rank(d, n_samples, rel_tol, |_| {
        let x = smooth_input(spec, theta, rng)?;
        let w = rng.normal_vec(dout);
        models::vjp(spec, theta, &x, &w)
    })
}

/// Selects a named, contiguous subset of a composition's parameters.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum BlockSelector {
    /// Every parameter of composition member `index` (a residual block, an
    /// elementary block, or the final classifier).
    Block { index: usize },
    /// The output-side factor U of member `lower` together with the
    /// input-side factor V of member `lower + 1` — the overlapping pair
    /// that couples two consecutive blocks.
    Overlap { lower: usize },
}

/// Resolves a selector to half-open coordinate ranges in registry order.
fn resolve_selector(spec: &BlockSpec, selector: &BlockSelector) -> Result<Vec<(usize, usize)>> {
    let registry = models::param_registry(spec);
    let mut ranges: Vec<(usize, usize)> = Vec::new();
    match selector {
        BlockSelector::Block { index } => {
            let prefix = alloc::format!("{index}.");
            for t in &registry {
                if t.name.starts_with(&prefix) {
                    ranges.push((t.offset, t.offset + t.len()));
                }
            }
            if ranges.is_empty() {
                return Err(invalid_input!("no composition member with index {index}"));
            }
        }
        BlockSelector::Overlap { lower } => {
            for name in [alloc::format!("{lower}.U"), alloc::format!("{}.V", lower + 1)] {
                match registry.iter().find(|t| t.name == name) {
                    Some(t) => ranges.push((t.offset, t.offset + t.len())),
                    None => return Err(invalid_input!("no tensor named {name} in this spec")),
                }
            }
        }
    }
    ranges.sort_unstable();
    Ok(ranges)
}

fn gather(ranges: &[(usize, usize)], full: &[f64]) -> Vec<f64> {
    let mut out = Vec::with_capacity(ranges.iter().map(|(a, b)| b - a).sum());
    for &(a, b) in ranges {
        out.extend_from_slice(&full[a..b]);
    }
    out
}

/// Empirical dimension of the cotangent span restricted to the coordinates
/// selected by `selector`, with the complement coordinates η resampled over
/// `n_env` admissible environments and `n_samples` (input, covector) pairs
/// drawn per environment. A conserved quantity depending only on the
/// selected coordinates exists iff the rank falls short of their count.
pub fn block_span_dim(
    spec: &BlockSpec,
    selector: &BlockSelector,
    theta: &[f64],
    n_env: usize,
    n_samples: usize,
    loss: LossKind,
    rng: &mut Rng,
    rel_tol: f64,
) -> Result<SpanEstimate> {
    models::validate_spec(spec)?;
    let _ = loss;
    if !matches!(spec, BlockSpec::Composition { .. }) {
        return Err(invalid_input!("block-restricted probes need a composition spec"));
    }
    if n_env == 0 || n_samples == 0 {
        return Err(invalid_input!("need n_env ≥ 1 and n_samples ≥ 1"));
    }
    let d = models::param_dim(spec);
    if theta.len() != d {
        return Err(invalid_input!("theta has {} entries, spec needs {d}", theta.len()));
    }
    let ranges = resolve_selector(spec, selector)?;
    let mut selected = vec![false; d];
    for &(a, b) in &ranges {
        for s in &mut selected[a..b] {
            *s = true;
        }
    }
    let sel_dim: usize = ranges.iter().map(|(a, b)| b - a).sum();

    // Fix θ on the selected coordinates; draw each environment's complement
    // standard normal and reject it until the merged point is admissible.
    let mut envs: Vec<Vec<f64>> = Vec::with_capacity(n_env);
    for e in 0..n_env {
        let mut found = false;
        for _ in 0..MAX_RESAMPLE {
            let mut merged = theta.to_vec();
            for (i, m) in merged.iter_mut().enumerate() {
                if !selected[i] {
                    *m = rng.normal();
                }
            }
            if models::admissible(spec, &merged)?.ok {
                envs.push(merged);
                found = true;
                break;
            }
        }
        if !found {
            return Err(invalid_input!(
                "no admissible complement found for environment {e} in {MAX_RESAMPLE} draws"
            ));
        }
    }

    let dout = models::out_dim(spec);
    saturating_rank(sel_dim, n_env * n_samples, rel_tol, |i| {
        let merged = &envs[(i / n_samples) % n_env];
        let x = smooth_input(spec, merged, rng)?;
        let w = rng.normal_vec(dout);
        let row = models::vjp(spec, merged, &x, &w)?;
        Ok(gather(&ranges, &row))
    })
}

/// Empirical dimension of the span of sign-gradient directions
/// sign(Σᵢ wᵢ Aᵢ θ) over standard-normal weights w, where θ ↦ Aᵢθ are the
/// gradient fields of the block's bilinear reparameterization. Sign descent
/// admits a conservation law only where this span has a nontrivial
/// orthogonal complement.
pub fn adam_sign_span_dim(
    spec: &BlockSpec,
    theta: &[f64],
    n_samples: usize,
    rng: &mut Rng,
    rel_tol: f64,
) -> Result<SpanEstimate> {
    if !matches!(spec, BlockSpec::Linear2 { .. } | BlockSpec::Attention { .. }) {
        return Err(invalid_input!(
            "sign-span probes are defined for the linear2 and attention blocks"
        ));
    }
    let family = liealg::reparam_fields(spec)?;
    let d = family.dim;
    if theta.len() != d {
        return Err(invalid_input!("theta has {} entries, spec needs {d}", theta.len()));
    }
    let n_gen = family.generators.len();
    saturating_rank(d, n_samples, rel_tol, |_| {
        for _ in 0..MAX_RESAMPLE {
            let w = rng.normal_vec(n_gen);
            let mut acc = vec![0.0; d];
            for (gi, gen) in family.generators.iter().enumerate() {
                numerics::axpy(w[gi], &gen.apply_matrix(d, theta), &mut acc);
            }
            match acc.iter().position(|v| rmath::abs(*v) < SIGN_FLOOR) {
                None => return Ok(acc.iter().map(|v| rmath::sign0(*v)).collect()),
                Some(_) => continue,
            }
        }
        // Persistent near-zero coordinates mean the sign vector is not
        // well defined at θ for generic weights.
        let w = rng.normal_vec(n_gen);
        let mut acc = vec![0.0; d];
        for (gi, gen) in family.generators.iter().enumerate() {
            numerics::axpy(w[gi], &gen.apply_matrix(d, theta), &mut acc);
        }
        let coordinate =
            acc.iter().position(|v| rmath::abs(*v) < SIGN_FLOOR).unwrap_or(0);
        Err(CoreError::SignUndefined { coordinate })
    })
}

/// The four-parameter scalar residual network x + uσ(vx) + sσ(t(x + uσ(vx)))
/// built as a composition of two one-neuron residual blocks.
pub fn m1_spec() -> BlockSpec {
    let unit = || BlockSpec::Residual {
        inner: alloc::boxed::Box::new(BlockSpec::Relu2 { n: 1, m: 1, r: 1, bias: false }),
    };
    BlockSpec::Composition { blocks: vec![unit(), unit()] }
}

/// Cotangent-span probe for the scalar two-block residual example at
/// θ = (u, v, s, t). Its domain of validity is the cone where all four
/// coordinates are nonzero and share one sign; there the sampled gradients
/// are all parallel, the span is one-dimensional, and the network keeps
/// 4 − 1 = 3 conservation laws.
pub fn m1_example_span(theta: &[f64], n_samples: usize, rng: &mut Rng) -> Result<SpanEstimate> {
    if theta.len() != 4 {
        return Err(invalid_input!("the scalar residual example has 4 parameters (u, v, s, t)"));
    }
    let lead = rmath::sign0(theta[0]);
    if lead == 0.0 || theta.iter().any(|v| rmath::sign0(*v) != lead) {
        return Err(CoreError::OutsideDomain(String::from(
            "(u, v, s, t) must be nonzero and share one sign",
        )));
    }
    let spec = m1_spec();
    saturating_rank(4, n_samples, numerics::DEFAULT_RANK_RTOL, |_| {
        let x = smooth_input(&spec, theta, rng)?;
        let w = rng.normal_vec(1);
        models::vjp(&spec, theta, &x, &w)
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn softmax_span_has_one_law_per_class() {
        // 3 outputs × 2 inputs: rank nm − m = 4.
        let spec = BlockSpec::SoftmaxClassifier { n: 3, m: 2 };
        let mut rng = Rng::seed_from(11);
        let theta = models::sample_params(&spec, &mut rng, 1.0).data;
        let est = empirical_span_dim(
            &spec,
            &theta,
            LossKind::Euclidean,
            default_n_samples(&spec),
            &mut rng,
            numerics::DEFAULT_RANK_RTOL,
        )
        .unwrap();
        assert_eq!(est.rank, 4);
        assert!(est.saturated);
    }

    #[test]
    fn dead_factor_loses_rank() {
        // linear2 with V ≡ 0: only gradients through the one live u column
        // survive, so the sampled span collapses.
        let spec = BlockSpec::Linear2 { n: 2, m: 2, r: 2 };
        let mut theta = vec![0.0; 8];
        theta[0] = 1.0; // u₁₁
        let mut rng = Rng::seed_from(3);
        let est = empirical_span_dim(
            &spec,
            &theta,
            LossKind::Euclidean,
            32,
            &mut rng,
            numerics::DEFAULT_RANK_RTOL,
        )
        .unwrap();
        assert!(est.rank < 8, "rank {} should drop below D=8", est.rank);
    }

    #[test]
    fn m1_domain_is_enforced() {
        let mut rng = Rng::seed_from(5);
        let err = m1_example_span(&[1.0, 1.0, -1.0, 1.0], 50, &mut rng).unwrap_err();
        assert!(matches!(err, CoreError::OutsideDomain(_)));
    }

    #[test]
    fn m1_span_is_a_line() {
        let mut rng = Rng::seed_from(7);
        let est = m1_example_span(&[1.0, 1.0, 1.0, 1.0], 100, &mut rng).unwrap();
        assert_eq!(est.rank, 1);
        assert!(est.saturated);
    }

    #[test]
    fn sign_rows_are_scale_invariant() {
        let spec = BlockSpec::Linear2 { n: 2, m: 2, r: 2 };
        let mut rng = Rng::seed_from(9);
        let theta = models::sample_params(&spec, &mut rng, 1.0).data;
        let scaled: alloc::vec::Vec<f64> = theta.iter().map(|v| 3.5 * v).collect();
        let a = adam_sign_span_dim(&spec, &theta, 64, &mut Rng::seed_from(42), 1e-8).unwrap();
        let b = adam_sign_span_dim(&spec, &scaled, 64, &mut Rng::seed_from(42), 1e-8).unwrap();
        assert_eq!(a.rank, b.rank);
    }
}
