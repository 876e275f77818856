//! Network blocks: specifications, parameters, forward maps, vector–Jacobian
//! products, losses, sampling, and admissibility checks.
//!
//! Elementary blocks:
//! - `linear2`: x ↦ U Vᵀ x with U ∈ R^{n×r}, V ∈ R^{m×r};
//! - `relu2`: x ↦ U σ(Vᵀ x + b) (bias optional), σ = ReLU;
//! - `conv_relu2`: channel-structured two-layer ReLU map built from shifted
//!   zero-padded filter taps (or user-supplied injective tap maps);
//! - `attention`: x ↦ vec(Σ_h softmax(X Q_hᵀ K_h Xᵀ) X V_hᵀ O_h) on a token
//!   matrix X read row-wise from x;
//! - `softmax_classifier`: x ↦ softmax(W x).
//!
//! `residual` wraps a block as x ↦ x + g(x); `composition` chains blocks in
//! list order (first entry applied first). Parameters of a composite are the
//! concatenation of the parts' parameters, names prefixed with the block
//! index ("0.U", "1.V", ...).

mod attention;
mod conv;
mod dense;
mod invariance;
mod json;
mod loss;
mod param;
mod softmax;

pub use invariance::{invariance_transform, InvarianceGenerator};
pub use json::{
    params_from_json_str, params_to_json_string, spec_from_json_str, spec_to_json_string, MatRows,
};
pub use param::{ParamVec, TensorInfo};

use alloc::boxed::Box;
use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::invalid_input;
use crate::numerics::{self, Mat};
use crate::rng::Rng;

/// Margin below which derivative evaluations are refused.
pub const VJP_MARGIN_FLOOR: f64 = 1e-12;

/// Custom tap maps for a convolutional block: `p_maps[s]` (p×n_u) and
/// `q_maps[s]` (p×n_v) replace the circular shift-and-zero-pad defaults.
/// All maps must be injective.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConvMaps {
    pub p_maps: Vec<json::MatRows>,
    pub q_maps: Vec<json::MatRows>,
}

/// Block specification tree.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum BlockSpec {
    Linear2 {
        n: usize,
        m: usize,
        r: usize,
    },
    Relu2 {
        n: usize,
        m: usize,
        r: usize,
        #[serde(default)]
        bias: bool,
    },
    ConvRelu2 {
        c0: usize,
        c1: usize,
        c2: usize,
        p: usize,
        n_u: usize,
        n_v: usize,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        maps: Option<ConvMaps>,
    },
    Attention {
        n_tokens: usize,
        dim: usize,
        d1: usize,
        #[serde(default = "default_heads")]
        heads: usize,
    },
    SoftmaxClassifier {
        n: usize,
        m: usize,
    },
    Residual {
        inner: Box<BlockSpec>,
    },
    Composition {
        blocks: Vec<BlockSpec>,
    },
}

fn default_heads() -> usize {
    1
}

/// Supervised dataset: parallel input/target vectors.
#[derive(Clone, Debug, PartialEq)]
pub struct Dataset {
    pub inputs: Vec<Vec<f64>>,
    pub targets: Vec<Vec<f64>>,
}

impl Dataset {
    pub fn new(inputs: Vec<Vec<f64>>, targets: Vec<Vec<f64>>) -> Result<Self> {
        if inputs.len() != targets.len() {
            return Err(invalid_input!(
                "dataset has {} inputs but {} targets",
                inputs.len(),
                targets.len()
            ));
        }
        Ok(Dataset { inputs, targets })
    }

    pub fn len(&self) -> usize {
        self.inputs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.inputs.is_empty()
    }
}

/// Loss applied sample-wise and averaged.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LossKind {
    /// ½‖z − y‖²; gradient z − y.
    Euclidean,
    /// Generalized KL divergence Σᵢ yᵢ log(yᵢ/zᵢ) − yᵢ + zᵢ (0·log 0 = 0);
    /// gradient 1 − y/z; requires strictly positive z.
    KlCrossEntropy,
}

/// Checks structural validity: positive dimensions, matching chain dims,
/// head divisibility, filter lengths within the spatial period, injective
/// custom tap maps.
pub fn validate_spec(spec: &BlockSpec) -> Result<()> {
    match spec {
        BlockSpec::Linear2 { n, m, r } => {
            if *n == 0 || *m == 0 || *r == 0 {
                return Err(invalid_input!("linear2 dims must be positive"));
            }
        }
        BlockSpec::Relu2 { n, m, r, .. } => {
            if *n == 0 || *m == 0 || *r == 0 {
                return Err(invalid_input!("relu2 dims must be positive"));
            }
        }
        BlockSpec::ConvRelu2 { c0, c1, c2, p, n_u, n_v, maps } => {
            if *c0 == 0 || *c1 == 0 || *c2 == 0 || *p == 0 || *n_u == 0 || *n_v == 0 {
                return Err(invalid_input!("conv_relu2 dims must be positive"));
            }
            if n_u > p || n_v > p {
                return Err(invalid_input!(
                    "conv_relu2 filter lengths (n_u={n_u}, n_v={n_v}) must not exceed p={p}"
                ));
            }
            if let Some(maps) = maps {
                conv::validate_maps(*p, *n_u, *n_v, maps)?;
            }
        }
        BlockSpec::Attention { n_tokens, dim, d1, heads } => {
            if *n_tokens == 0 || *dim == 0 || *d1 == 0 || *heads == 0 {
                return Err(invalid_input!("attention dims must be positive"));
            }
            if d1 % heads != 0 {
                return Err(invalid_input!("attention head count {heads} must divide d1={d1}"));
            }
        }
        BlockSpec::SoftmaxClassifier { n, m } => {
            if *n == 0 || *m == 0 {
                return Err(invalid_input!("softmax_classifier dims must be positive"));
            }
        }
        BlockSpec::Residual { inner } => {
            validate_spec(inner)?;
            if in_dim(inner) != out_dim(inner) {
                return Err(invalid_input!(
                    "residual inner block must preserve dimension (in {}, out {})",
                    in_dim(inner),
                    out_dim(inner)
                ));
            }
        }
        BlockSpec::Composition { blocks } => {
            if blocks.is_empty() {
                return Err(invalid_input!("composition must contain at least one block"));
            }
            for b in blocks {
                validate_spec(b)?;
            }
            for pair in blocks.windows(2) {
                if out_dim(&pair[0]) != in_dim(&pair[1]) {
                    return Err(invalid_input!(
                        "composition dimension mismatch: out {} feeds in {}",
                        out_dim(&pair[0]),
                        in_dim(&pair[1])
                    ));
                }
            }
        }
    }
    Ok(())
}

/// Input dimension of the block's map.
pub fn in_dim(spec: &BlockSpec) -> usize {
    match spec {
        BlockSpec::Linear2 { m, .. } | BlockSpec::Relu2 { m, .. } => *m,
        BlockSpec::ConvRelu2 { c0, p, .. } => c0 * p,
        BlockSpec::Attention { n_tokens, dim, .. } => n_tokens * dim,
        BlockSpec::SoftmaxClassifier { m, .. } => *m,
        BlockSpec::Residual { inner } => in_dim(inner),
        BlockSpec::Composition { blocks } => in_dim(&blocks[0]),
    }
}

/// Output dimension of the block's map.
pub fn out_dim(spec: &BlockSpec) -> usize {
    match spec {
        BlockSpec::Linear2 { n, .. } | BlockSpec::Relu2 { n, .. } => *n,
        BlockSpec::ConvRelu2 { c2, p, .. } => c2 * p,
        BlockSpec::Attention { n_tokens, dim, .. } => n_tokens * dim,
        BlockSpec::SoftmaxClassifier { n, .. } => *n,
        BlockSpec::Residual { inner } => out_dim(inner),
        BlockSpec::Composition { blocks } => out_dim(blocks.last().expect("non-empty")),
    }
}

/// Total parameter count D.
pub fn param_dim(spec: &BlockSpec) -> usize {
    match spec {
        BlockSpec::Linear2 { n, m, r } => (n + m) * r,
        BlockSpec::Relu2 { n, m, r, bias } => (n + m) * r + if *bias { *r } else { 0 },
        BlockSpec::ConvRelu2 { c0, c1, c2, n_u, n_v, .. } => c1 * (c2 * n_u + c0 * n_v),
        BlockSpec::Attention { dim, d1, .. } => 4 * d1 * dim,
        BlockSpec::SoftmaxClassifier { n, m } => n * m,
        BlockSpec::Residual { inner } => param_dim(inner),
        BlockSpec::Composition { blocks } => blocks.iter().map(param_dim).sum(),
    }
}

fn push_registry(spec: &BlockSpec, prefix: &str, offset: &mut usize, out: &mut Vec<TensorInfo>) {
    let named = |name: &str, shape: Vec<usize>, offset: &mut usize, out: &mut Vec<TensorInfo>| {
        let len: usize = shape.iter().product();
        out.push(TensorInfo { name: format!("{prefix}{name}"), shape, offset: *offset });
        *offset += len;
    };
    match spec {
        BlockSpec::Linear2 { n, m, r } => {
            named("U", vec![*n, *r], offset, out);
            named("V", vec![*m, *r], offset, out);
        }
        BlockSpec::Relu2 { n, m, r, bias } => {
            named("U", vec![*n, *r], offset, out);
            named("V", vec![*m, *r], offset, out);
            if *bias {
                named("b", vec![*r], offset, out);
            }
        }
        BlockSpec::ConvRelu2 { c0, c1, c2, n_u, n_v, .. } => {
            named("U", vec![*c2, *c1, *n_u], offset, out);
            named("V", vec![*c1, *c0, *n_v], offset, out);
        }
        BlockSpec::Attention { dim, d1, .. } => {
            named("Q", vec![*d1, *dim], offset, out);
            named("K", vec![*d1, *dim], offset, out);
            named("V", vec![*d1, *dim], offset, out);
            named("O", vec![*d1, *dim], offset, out);
        }
        BlockSpec::SoftmaxClassifier { n, m } => {
            named("W", vec![*n, *m], offset, out);
        }
        BlockSpec::Residual { inner } => push_registry(inner, prefix, offset, out),
        BlockSpec::Composition { blocks } => {
            for (i, b) in blocks.iter().enumerate() {
                let child = format!("{prefix}{i}.");
                push_registry(b, &child, offset, out);
            }
        }
    }
}

/// Named-tensor registry for the spec; ranges partition `[0, param_dim)`.
pub fn param_registry(spec: &BlockSpec) -> Vec<TensorInfo> {
    let mut out = Vec::new();
    let mut offset = 0;
    push_registry(spec, "", &mut offset, &mut out);
    out
}

/// Wraps flat data as a [`ParamVec`] with the spec's registry.
pub fn params_for_spec(spec: &BlockSpec, data: Vec<f64>) -> Result<ParamVec> {
    ParamVec::new(data, param_registry(spec))
}

/// Samples parameters with i.i.d. N(0, scale²) entries.
pub fn sample_params(spec: &BlockSpec, rng: &mut Rng, scale: f64) -> ParamVec {
    let mut p = ParamVec::zeros(param_registry(spec));
    for v in &mut p.data {
        *v = scale * rng.normal();
    }
    p
}

/// Result of one block-local evaluation during a spec-tree walk.
struct Eval {
    y: Vec<f64>,
    margin: f64,
}

fn forward_walk(spec: &BlockSpec, theta: &[f64], x: &[f64]) -> Result<Eval> {
    Ok(match spec {
        BlockSpec::Linear2 { n, m, r } => dense::forward_linear2(*n, *m, *r, theta, x),
        BlockSpec::Relu2 { n, m, r, bias } => dense::forward_relu2(*n, *m, *r, *bias, theta, x),
        BlockSpec::ConvRelu2 { c0, c1, c2, p, n_u, n_v, maps } => {
            conv::forward(*c0, *c1, *c2, *p, *n_u, *n_v, maps.as_ref(), theta, x)
        }
        BlockSpec::Attention { n_tokens, dim, d1, heads } => {
            attention::forward(*n_tokens, *dim, *d1, *heads, theta, x)
        }
        BlockSpec::SoftmaxClassifier { n, m } => softmax::forward(*n, *m, theta, x),
        BlockSpec::Residual { inner } => {
            let mut e = forward_walk(inner, theta, x)?;
            for (yi, xi) in e.y.iter_mut().zip(x) {
                *yi += *xi;
            }
            e
        }
        BlockSpec::Composition { blocks } => {
            let mut cur = x.to_vec();
            let mut margin = f64::INFINITY;
            let mut off = 0;
            for b in blocks {
                let d = param_dim(b);
                let e = forward_walk(b, &theta[off..off + d], &cur)?;
                off += d;
                cur = e.y;
                margin = margin.min(e.margin);
            }
            Eval { y: cur, margin }
        }
    })
}

fn check_theta_x(spec: &BlockSpec, theta: &[f64], x: &[f64]) -> Result<()> {
    let d = param_dim(spec);
    if theta.len() != d {
        return Err(invalid_input!("theta has {} entries, spec needs {d}", theta.len()));
    }
    if x.len() != in_dim(spec) {
        return Err(invalid_input!("input has {} entries, spec needs {}", x.len(), in_dim(spec)));
    }
    if theta.iter().any(|v| !v.is_finite()) || x.iter().any(|v| !v.is_finite()) {
        return Err(invalid_input!("theta/input must be finite"));
    }
    Ok(())
}

/// Evaluates the block map g(θ, x).
pub fn forward(spec: &BlockSpec, theta: &[f64], x: &[f64]) -> Result<Vec<f64>> {
    check_theta_x(spec, theta, x)?;
    Ok(forward_walk(spec, theta, x)?.y)
}

/// Minimum absolute ReLU preactivation over the whole spec tree at (θ, x);
/// `+inf` when the spec contains no ReLU.
pub fn activation_margin(spec: &BlockSpec, theta: &[f64], x: &[f64]) -> Result<f64> {
    check_theta_x(spec, theta, x)?;
    Ok(forward_walk(spec, theta, x)?.margin)
}

fn vjp_walk(spec: &BlockSpec, theta: &[f64], x: &[f64], w: &[f64]) -> Result<(Vec<f64>, Vec<f64>)> {
    Ok(match spec {
        BlockSpec::Linear2 { n, m, r } => dense::vjp_linear2(*n, *m, *r, theta, x, w),
        BlockSpec::Relu2 { n, m, r, bias } => dense::vjp_relu2(*n, *m, *r, *bias, theta, x, w),
        BlockSpec::ConvRelu2 { c0, c1, c2, p, n_u, n_v, maps } => {
            conv::vjp(*c0, *c1, *c2, *p, *n_u, *n_v, maps.as_ref(), theta, x, w)
        }
        BlockSpec::Attention { n_tokens, dim, d1, heads } => {
            attention::vjp(*n_tokens, *dim, *d1, *heads, theta, x, w)
        }
        BlockSpec::SoftmaxClassifier { n, m } => softmax::vjp(*n, *m, theta, x, w),
        BlockSpec::Residual { inner } => {
            // g = x + f(x): parameter gradient unchanged, input gradient
            // w + f's input gradient — identical arithmetic to the skip-free
            // inner map on the parameter side.
            let (pg, mut xg) = vjp_walk(inner, theta, x, w)?;
            for (g, wi) in xg.iter_mut().zip(w) {
                *g += *wi;
            }
            (pg, xg)
        }
        BlockSpec::Composition { blocks } => {
            // Forward pass caching block inputs, then reverse sweep.
            let mut offsets = Vec::with_capacity(blocks.len());
            let mut inputs: Vec<Vec<f64>> = Vec::with_capacity(blocks.len());
            let mut cur = x.to_vec();
            let mut off = 0;
            for b in blocks {
                offsets.push(off);
                inputs.push(cur.clone());
                let d = param_dim(b);
                let e = forward_walk(b, &theta[off..off + d], &cur)?;
                off += d;
                cur = e.y;
            }
            let mut pgrad = vec![0.0; theta.len()];
            let mut wcur = w.to_vec();
            for i in (0..blocks.len()).rev() {
                let b = &blocks[i];
                let d = param_dim(b);
                let o = offsets[i];
                let (pg, xg) = vjp_walk(b, &theta[o..o + d], &inputs[i], &wcur)?;
                pgrad[o..o + d].copy_from_slice(&pg);
                wcur = xg;
            }
            (pgrad, wcur)
        }
    })
}

/// Vector–Jacobian product wᵀ ∂g/∂θ at (θ, x), refusing points whose
/// activation margin is below [`VJP_MARGIN_FLOOR`].
pub fn vjp(spec: &BlockSpec, theta: &[f64], x: &[f64], w: &[f64]) -> Result<Vec<f64>> {
    Ok(vjp_with_input_grad(spec, theta, x, w)?.0)
}

/// Like [`vjp`] but also returns the input gradient wᵀ ∂g/∂x.
pub fn vjp_with_input_grad(
    spec: &BlockSpec,
    theta: &[f64],
    x: &[f64],
    w: &[f64],
) -> Result<(Vec<f64>, Vec<f64>)> {
    check_theta_x(spec, theta, x)?;
    if w.len() != out_dim(spec) {
        return Err(invalid_input!(
            "cotangent has {} entries, spec outputs {}",
            w.len(),
            out_dim(spec)
        ));
    }
    let margin = forward_walk(spec, theta, x)?.margin;
    if margin < VJP_MARGIN_FLOOR {
        return Err(crate::CoreError::NonDifferentiable { margin });
    }
    vjp_walk(spec, theta, x, w)
}

/// Average loss over the dataset: (1/N) Σ ℓ(g(θ, xᵢ), yᵢ).
pub fn loss_value(spec: &BlockSpec, theta: &[f64], data: &Dataset, kind: LossKind) -> Result<f64> {
    if data.is_empty() {
        return Err(invalid_input!("loss over an empty dataset"));
    }
    let mut acc = 0.0;
    for (x, y) in data.inputs.iter().zip(&data.targets) {
        let z = forward(spec, theta, x)?;
        acc += loss::loss_and_grad_z(kind, &z, y)?.0;
    }
    Ok(acc / data.len() as f64)
}

/// Gradient of the average loss: (1/N) Σ vjp(θ, xᵢ, ∇_z ℓ(g(θ, xᵢ), yᵢ)).
pub fn loss_grad(
    spec: &BlockSpec,
    theta: &[f64],
    data: &Dataset,
    kind: LossKind,
) -> Result<Vec<f64>> {
    if data.is_empty() {
        return Err(invalid_input!("loss gradient over an empty dataset"));
    }
    let mut acc = vec![0.0; theta.len()];
    for (x, y) in data.inputs.iter().zip(&data.targets) {
        let z = forward(spec, theta, x)?;
        let (_, gz) = loss::loss_and_grad_z(kind, &z, y)?;
        let g = vjp(spec, theta, x, &gz)?;
        numerics::axpy(1.0, &g, &mut acc);
    }
    let inv = 1.0 / data.len() as f64;
    for v in &mut acc {
        *v *= inv;
    }
    Ok(acc)
}

/// Loss value and gradient in one pass (used by optimizers).
pub fn loss_value_grad(
    spec: &BlockSpec,
    theta: &[f64],
    data: &Dataset,
    kind: LossKind,
) -> Result<(f64, Vec<f64>)> {
    Ok((loss_value(spec, theta, data, kind)?, loss_grad(spec, theta, data, kind)?))
}

/// Admissibility report: whether θ lies in the open parameter set on which
/// the law catalogs are provably complete, with human-readable reasons when
/// it does not.
#[derive(Clone, Debug)]
pub struct Admissibility {
    pub ok: bool,
    pub reasons: Vec<String>,
}

/// Tolerance below which two unit normals count as the same hyperplane.
const COLINEAR_TOL: f64 = 1e-6;
/// Attention columns of Oᵀ·V smaller than this are treated as vanishing.
pub const ATT_COLUMN_FLOOR: f64 = 1e-10;

fn distinct_hyperplanes(normals: &[Vec<f64>], reasons: &mut Vec<String>, what: &str) {
    for (a, na) in normals.iter().enumerate() {
        let norm_a = numerics::norm(na);
        if norm_a < ATT_COLUMN_FLOOR {
            reasons.push(format!("{what} {a} is numerically zero"));
            continue;
        }
        for (bi, nb) in normals.iter().enumerate().skip(a + 1) {
            let norm_b = numerics::norm(nb);
            if norm_b < ATT_COLUMN_FLOOR {
                continue;
            }
            let cosine = numerics::dot(na, nb) / (norm_a * norm_b);
            if 1.0 - crate::rmath::abs(cosine) < COLINEAR_TOL {
                reasons.push(format!("{what}s {a} and {bi} are colinear"));
            }
        }
    }
}

fn full_rank(mat: &Mat, want: usize, reasons: &mut Vec<String>, what: &str) {
    match numerics::rank_of(mat, numerics::DEFAULT_RANK_RTOL) {
        Ok(est) if est.rank == want => {}
        Ok(est) => reasons.push(format!("{what} has rank {} < {want}", est.rank)),
        Err(_) => reasons.push(format!("{what} is non-finite")),
    }
}

fn admissible_walk(spec: &BlockSpec, theta: &[f64], reasons: &mut Vec<String>) {
    match spec {
        BlockSpec::Linear2 { n, m, r } => {
            // Stacked [U; V] ((n+m)×r) must have full column rank r.
            let mat = Mat { rows: n + m, cols: *r, data: theta.to_vec() };
            full_rank(&mat, *r, reasons, "linear2 stacked factor [U;V]");
        }
        BlockSpec::Relu2 { n, m, r, bias } => {
            // Augmented neuron normals (v_k; b_k) pairwise distinct and nonzero.
            let v = &theta[n * r..(n + m) * r];
            let b = if *bias { Some(&theta[(n + m) * r..]) } else { None };
            let normals: Vec<Vec<f64>> = (0..*r)
                .map(|k| {
                    let mut nk: Vec<f64> = (0..*m).map(|i| v[i * r + k]).collect();
                    if let Some(b) = b {
                        nk.push(b[k]);
                    }
                    nk
                })
                .collect();
            distinct_hyperplanes(&normals, reasons, "relu2 neuron normal");
        }
        BlockSpec::ConvRelu2 { c0, c1, c2, p, n_u, n_v, maps } => {
            let taps = conv::Taps::new(*p, *n_u, *n_v, maps.as_ref());
            let normals = conv::hidden_normals(*c0, *c1, *c2, *p, *n_u, *n_v, &taps, theta);
            distinct_hyperplanes(&normals, reasons, "conv hidden-unit normal");
        }
        BlockSpec::Attention { dim, d1, heads, .. } => {
            // Per head: columns of Oᵀ V nonzero; (Q K) and (V O) full rank.
            let dh = d1 / heads;
            for h in 0..*heads {
                let rows = h * dh..(h + 1) * dh;
                let sub = |t: usize| -> Mat {
                    let base = t * d1 * dim;
                    Mat::from_fn(dh, *dim, |i, j| theta[base + (rows.start + i) * dim + j])
                };
                let (q, k, v, o) = (sub(0), sub(1), sub(2), sub(3));
                let ov = o.transposed().matmul(&v); // dim×dim
                for c in 0..*dim {
                    let col: Vec<f64> = (0..*dim).map(|rr| ov.get(rr, c)).collect();
                    if numerics::norm(&col) < ATT_COLUMN_FLOOR {
                        reasons.push(format!("attention head {h}: column {c} of OᵀV vanishes"));
                    }
                }
                let mut qk = Mat::zeros(dh, 2 * dim);
                let mut vo = Mat::zeros(dh, 2 * dim);
                for i in 0..dh {
                    for j in 0..*dim {
                        qk.set(i, j, q.get(i, j));
                        qk.set(i, dim + j, k.get(i, j));
                        vo.set(i, j, v.get(i, j));
                        vo.set(i, dim + j, o.get(i, j));
                    }
                }
                full_rank(&qk, dh, reasons, "attention concat (Q K)");
                full_rank(&vo, dh, reasons, "attention concat (V O)");
            }
        }
        BlockSpec::SoftmaxClassifier { .. } => {}
        BlockSpec::Residual { inner } => admissible_walk(inner, theta, reasons),
        BlockSpec::Composition { blocks } => {
            let mut off = 0;
            for b in blocks {
                let d = param_dim(b);
                admissible_walk(b, &theta[off..off + d], reasons);
                off += d;
            }
        }
    }
}

/// Checks the admissibility conditions under which the law catalogs are
/// complete and the span probes well-posed.
pub fn admissible(spec: &BlockSpec, theta: &[f64]) -> Result<Admissibility> {
    let d = param_dim(spec);
    if theta.len() != d {
        return Err(invalid_input!("theta has {} entries, spec needs {d}", theta.len()));
    }
    let mut reasons = Vec::new();
    admissible_walk(spec, theta, &mut reasons);
    Ok(Admissibility { ok: reasons.is_empty(), reasons })
}



/// Crate-internal access to a conv block's tap maps (used by the
/// Lie-algebra module to pull fields back through the filter structure).
pub(crate) fn conv_taps<'a>(
    p: usize,
    n_u: usize,
    n_v: usize,
    maps: Option<&'a ConvMaps>,
) -> conv::Taps<'a> {
    conv::Taps::new(p, n_u, n_v, maps)
}
