//! One-parameter invariance groups of the elementary blocks: parameter
//! transformations T(ε) with g(T(ε)θ, ·) = g(θ, ·) for every ε.
//!
//! - `linear2`: (U, V) ↦ (U e^{εA}, V e^{−εAᵀ}) for any r×r matrix A;
//! - `relu2`: diagonal A only — neuron k rescales as u_k ↦ e^{ε d_k} u_k,
//!   (v_k, b_k) ↦ e^{−ε d_k} (v_k, b_k), since σ is positively homogeneous;
//! - `conv_relu2`: hidden channel j rescales, u_{·,j} ↦ e^ε u_{·,j},
//!   v_{j,·} ↦ e^{−ε} v_{j,·};
//! - `attention`: per head, (Q, K) ↦ (e^{εA} Q, e^{−εAᵀ} K) with A symmetric,
//!   and the analogous transform on (V, O).
//!
//! Composite specs are rejected: the group acts block-locally.

use alloc::vec::Vec;

use super::BlockSpec;
use crate::error::Result;
use crate::invalid_input;
use crate::numerics::{expm, Mat};
use crate::rmath;

/// Generator of a one-parameter invariance transformation.
#[derive(Clone, Debug)]
pub enum InvarianceGenerator {
    /// Arbitrary r×r matrix acting on the inner index of a `linear2` block.
    Linear2 { a: Mat },
    /// Diagonal generator (one rate per neuron) for a `relu2` block.
    Relu2Diag { d: Vec<f64> },
    /// Single-channel rescaling (A = E_jj) for a `conv_relu2` block.
    ConvChannel { j: usize },
    /// Symmetric (d1/heads)×(d1/heads) generator acting on one head's (Q, K).
    AttentionQk { head: usize, a: Mat },
    /// Symmetric generator acting on one head's (V, O).
    AttentionVo { head: usize, a: Mat },
}

fn check_symmetric(a: &Mat) -> Result<()> {
    if a.rows != a.cols {
        return Err(invalid_input!("generator matrix must be square"));
    }
    for i in 0..a.rows {
        for j in (i + 1)..a.cols {
            if rmath::abs(a.get(i, j) - a.get(j, i)) > 1e-12 {
                return Err(invalid_input!("attention generator must be symmetric"));
            }
        }
    }
    Ok(())
}

/// Right-multiplies the row-major `rows`×`cols` slice by `e`.
fn right_mul(theta: &mut [f64], rows: usize, cols: usize, e: &Mat) {
    let m = Mat { rows, cols, data: theta.to_vec() };
    theta.copy_from_slice(&m.matmul(e).data);
}

/// Left-multiplies the row-major `rows`×`cols` slice by `e`.
fn left_mul(theta: &mut [f64], rows: usize, cols: usize, e: &Mat) {
    let m = Mat { rows, cols, data: theta.to_vec() };
    theta.copy_from_slice(&e.matmul(&m).data);
}

fn scaled(a: &Mat, s: f64) -> Mat {
    let mut b = a.clone();
    b.scale(s);
    b
}

/// Applies the invariance transformation T(ε) to θ, returning the new
/// parameter vector. Errors when the generator does not match the block
/// kind or violates the generator constraints.
pub fn invariance_transform(
    spec: &BlockSpec,
    theta: &[f64],
    eps: f64,
    gen: &InvarianceGenerator,
) -> Result<Vec<f64>> {
    if theta.len() != super::param_dim(spec) {
        return Err(invalid_input!(
            "theta has {} entries, spec needs {}",
            theta.len(),
            super::param_dim(spec)
        ));
    }
    if !eps.is_finite() {
        return Err(invalid_input!("eps must be finite"));
    }
    let mut out = theta.to_vec();
    match (spec, gen) {
        (BlockSpec::Linear2 { n, m, r }, InvarianceGenerator::Linear2 { a }) => {
            if a.rows != *r || a.cols != *r {
                return Err(invalid_input!("generator must be {r}×{r}"));
            }
            let e_pos = expm(&scaled(a, eps));
            let e_neg = expm(&scaled(&a.transposed(), -eps));
            right_mul(&mut out[..n * r], *n, *r, &e_pos);
            right_mul(&mut out[n * r..(n + m) * r], *m, *r, &e_neg);
        }
        (BlockSpec::Relu2 { n, m, r, bias }, InvarianceGenerator::Relu2Diag { d }) => {
            if d.len() != *r {
                return Err(invalid_input!("diagonal generator must have length {r}"));
            }
            for k in 0..*r {
                let (up, down) = (rmath::exp(eps * d[k]), rmath::exp(-eps * d[k]));
                for j in 0..*n {
                    out[j * r + k] *= up;
                }
                for i in 0..*m {
                    out[n * r + i * r + k] *= down;
                }
                if *bias {
                    out[(n + m) * r + k] *= down;
                }
            }
        }
        (BlockSpec::ConvRelu2 { c0, c1, c2, n_u, n_v, .. }, InvarianceGenerator::ConvChannel { j }) => {
            if *j >= *c1 {
                return Err(invalid_input!("channel {j} out of range (c1 = {c1})"));
            }
            let (up, down) = (rmath::exp(eps), rmath::exp(-eps));
            for k in 0..*c2 {
                let base = (k * c1 + j) * n_u;
                for t in 0..*n_u {
                    out[base + t] *= up;
                }
            }
            let u_total = c2 * c1 * n_u;
            for i in 0..*c0 {
                let base = u_total + (j * c0 + i) * n_v;
                for t in 0..*n_v {
                    out[base + t] *= down;
                }
            }
        }
        (
            BlockSpec::Attention { dim, d1, heads, .. },
            InvarianceGenerator::AttentionQk { head, a } | InvarianceGenerator::AttentionVo { head, a },
        ) => {
            let dh = d1 / heads;
            if *head >= *heads {
                return Err(invalid_input!("head {head} out of range ({heads} heads)"));
            }
            if a.rows != dh {
                return Err(invalid_input!("generator must be {dh}×{dh}"));
            }
            check_symmetric(a)?;
            let e_pos = expm(&scaled(a, eps));
            let e_neg = expm(&scaled(&a.transposed(), -eps));
            // Q/K occupy tensor slots 0,1; V/O slots 2,3.
            let (slot_pos, slot_neg) = match gen {
                InvarianceGenerator::AttentionQk { .. } => (0usize, 1usize),
                _ => (2, 3),
            };
            let base_pos = slot_pos * d1 * dim + head * dh * dim;
            let base_neg = slot_neg * d1 * dim + head * dh * dim;
            left_mul(&mut out[base_pos..base_pos + dh * dim], dh, *dim, &e_pos);
            left_mul(&mut out[base_neg..base_neg + dh * dim], dh, *dim, &e_neg);
        }
        _ => {
            return Err(invalid_input!(
                "invariance generator does not apply to this block kind (composites have no block-level invariance transform)"
            ));
        }
    }
    Ok(out)
}
