//! Convolutional two-layer ReLU kernel with channel structure.
//!
//! Filters act through tap maps: `P_s` (p×n_u) on output filters and `Q_s`
//! (p×n_v) on input filters, one pair per tap s. The default taps are
//! circular shifts of zero-padded filters, `(P_s u)[t] = u[(t−s) mod p]`
//! (entry defined when the wrapped index is below n_u, zero otherwise);
//! custom injective maps may be supplied instead.
//!
//! With input channels x⁽ⁱ⁾ ∈ R^p, hidden channel j has preactivations
//! `h_{j,s} = Σ_i ⟨Q_s v_{j,i}, x⁽ⁱ⁾⟩` and output channel k is
//! `g⁽ᵏ⁾ = Σ_j Σ_s σ(h_{j,s}) P_s u_{k,j}`.
//!
//! Parameter layout: U as [c2][c1][n_u], then V as [c1][c0][n_v], row-major.

use alloc::vec;
use alloc::vec::Vec;

use super::{ConvMaps, Eval};
use crate::error::Result;
use crate::invalid_input;
use crate::numerics;

pub(crate) enum Taps<'a> {
    Circular { p: usize, n_u: usize, n_v: usize },
    Custom(&'a ConvMaps),
}

impl<'a> Taps<'a> {
    pub(crate) fn new(p: usize, n_u: usize, n_v: usize, maps: Option<&'a ConvMaps>) -> Self {
        match maps {
            Some(m) => Taps::Custom(m),
            None => Taps::Circular { p, n_u, n_v },
        }
    }

    /// Number of taps (p for circular defaults).
    pub(crate) fn count(&self) -> usize {
        match self {
            Taps::Circular { p, .. } => *p,
            Taps::Custom(m) => m.p_maps.len(),
        }
    }

    /// out += scale · P_s u
    fn p_apply(&self, s: usize, u: &[f64], scale: f64, out: &mut [f64]) {
        match self {
            Taps::Circular { p, n_u, .. } => {
                for j in 0..*n_u {
                    out[(j + s) % p] += scale * u[j];
                }
            }
            Taps::Custom(m) => {
                let mat = &m.p_maps[s].0;
                for t in 0..mat.rows {
                    out[t] += scale * numerics::dot(mat.row(t), u);
                }
            }
        }
    }

    /// out += scale · P_sᵀ w
    fn p_tr_apply(&self, s: usize, w: &[f64], scale: f64, out: &mut [f64]) {
        match self {
            Taps::Circular { p, n_u, .. } => {
                for j in 0..*n_u {
                    out[j] += scale * w[(j + s) % p];
                }
            }
            Taps::Custom(m) => {
                let mat = &m.p_maps[s].0;
                for t in 0..mat.rows {
                    let wt = scale * w[t];
                    for (o, &e) in out.iter_mut().zip(mat.row(t)) {
                        *o += wt * e;
                    }
                }
            }
        }
    }

    /// ⟨P_s u, w⟩
    fn p_dot(&self, s: usize, u: &[f64], w: &[f64]) -> f64 {
        match self {
            Taps::Circular { p, n_u, .. } => {
                let mut acc = 0.0;
                for j in 0..*n_u {
                    acc += u[j] * w[(j + s) % p];
                }
                acc
            }
            Taps::Custom(m) => {
                let mat = &m.p_maps[s].0;
                (0..mat.rows).map(|t| w[t] * numerics::dot(mat.row(t), u)).sum()
            }
        }
    }

    /// out += scale · Q_s v
    pub(crate) fn q_apply(&self, s: usize, v: &[f64], scale: f64, out: &mut [f64]) {
        match self {
            Taps::Circular { p, n_v, .. } => {
                for j in 0..*n_v {
                    out[(j + s) % p] += scale * v[j];
                }
            }
            Taps::Custom(m) => {
                let mat = &m.q_maps[s].0;
                for t in 0..mat.rows {
                    out[t] += scale * numerics::dot(mat.row(t), v);
                }
            }
        }
    }

    /// out += scale · Q_sᵀ x
    fn q_tr_apply(&self, s: usize, x: &[f64], scale: f64, out: &mut [f64]) {
        match self {
            Taps::Circular { p, n_v, .. } => {
                for j in 0..*n_v {
                    out[j] += scale * x[(j + s) % p];
                }
            }
            Taps::Custom(m) => {
                let mat = &m.q_maps[s].0;
                for t in 0..mat.rows {
                    let xt = scale * x[t];
                    for (o, &e) in out.iter_mut().zip(mat.row(t)) {
                        *o += xt * e;
                    }
                }
            }
        }
    }

    /// Row t of P_s as sparse (column, value) pairs.
    pub(crate) fn p_row(&self, s: usize, t: usize) -> Vec<(usize, f64)> {
        match self {
            Taps::Circular { p, n_u, .. } => {
                let j = (t + p - s % p) % p;
                if j < *n_u {
                    vec![(j, 1.0)]
                } else {
                    Vec::new()
                }
            }
            Taps::Custom(m) => {
                let mat = &m.p_maps[s].0;
                mat.row(t).iter().enumerate().filter(|(_, &v)| v != 0.0).map(|(c, &v)| (c, v)).collect()
            }
        }
    }

    /// Row t of Q_s as sparse (column, value) pairs.
    pub(crate) fn q_row(&self, s: usize, t: usize) -> Vec<(usize, f64)> {
        match self {
            Taps::Circular { p, n_v, .. } => {
                let j = (t + p - s % p) % p;
                if j < *n_v {
                    vec![(j, 1.0)]
                } else {
                    Vec::new()
                }
            }
            Taps::Custom(m) => {
                let mat = &m.q_maps[s].0;
                mat.row(t).iter().enumerate().filter(|(_, &v)| v != 0.0).map(|(c, &v)| (c, v)).collect()
            }
        }
    }
}

pub(super) fn validate_maps(p: usize, n_u: usize, n_v: usize, maps: &ConvMaps) -> Result<()> {
    if maps.p_maps.is_empty() || maps.p_maps.len() != maps.q_maps.len() {
        return Err(invalid_input!(
            "conv maps must supply equal nonzero counts of P and Q taps ({} vs {})",
            maps.p_maps.len(),
            maps.q_maps.len()
        ));
    }
    for (s, mr) in maps.p_maps.iter().enumerate() {
        let m = &mr.0;
        if m.rows != p || m.cols != n_u {
            return Err(invalid_input!("P tap {s} must be {p}×{n_u}, got {}×{}", m.rows, m.cols));
        }
        if !m.all_finite() {
            return Err(invalid_input!("P tap {s} has non-finite entries"));
        }
        if numerics::rank_of(m, 1e-10)?.rank != n_u {
            return Err(invalid_input!("P tap {s} is not injective"));
        }
    }
    for (s, mr) in maps.q_maps.iter().enumerate() {
        let m = &mr.0;
        if m.rows != p || m.cols != n_v {
            return Err(invalid_input!("Q tap {s} must be {p}×{n_v}, got {}×{}", m.rows, m.cols));
        }
        if !m.all_finite() {
            return Err(invalid_input!("Q tap {s} has non-finite entries"));
        }
        if numerics::rank_of(m, 1e-10)?.rank != n_v {
            return Err(invalid_input!("Q tap {s} is not injective"));
        }
    }
    Ok(())
}

#[inline]
fn u_slice(theta: &[f64], c1: usize, n_u: usize, k: usize, j: usize) -> &[f64] {
    let base = (k * c1 + j) * n_u;
    &theta[base..base + n_u]
}

#[inline]
fn v_slice(theta: &[f64], c0: usize, c1: usize, c2: usize, n_u: usize, n_v: usize, j: usize, i: usize) -> &[f64] {
    let base = c2 * c1 * n_u + (j * c0 + i) * n_v;
    &theta[base..base + n_v]
}

/// Hidden preactivations h[j·taps + s].
fn hidden(
    c0: usize,
    c1: usize,
    c2: usize,
    n_u: usize,
    n_v: usize,
    p: usize,
    taps: &Taps,
    theta: &[f64],
    x: &[f64],
) -> Vec<f64> {
    let nt = taps.count();
    let mut h = vec![0.0; c1 * nt];
    let mut qv = vec![0.0; p];
    for j in 0..c1 {
        for s in 0..nt {
            let mut acc = 0.0;
            for i in 0..c0 {
                let v = v_slice(theta, c0, c1, c2, n_u, n_v, j, i);
                // acc += ⟨Q_s v, x⁽ⁱ⁾⟩
                qv.iter_mut().for_each(|e| *e = 0.0);
                taps.q_apply(s, v, 1.0, &mut qv);
                acc += numerics::dot(&qv, &x[i * p..(i + 1) * p]);
            }
            h[j * nt + s] = acc;
        }
    }
    h
}

/// Normal vectors of the hidden-unit hyperplanes in input space, one per
/// (hidden channel, tap): concatenation over input channels of Q_s v_{j,i}.
pub(super) fn hidden_normals(
    c0: usize,
    c1: usize,
    c2: usize,
    p: usize,
    n_u: usize,
    n_v: usize,
    taps: &Taps,
    theta: &[f64],
) -> Vec<Vec<f64>> {
    let nt = taps.count();
    let mut out = Vec::with_capacity(c1 * nt);
    for j in 0..c1 {
        for s in 0..nt {
            let mut normal = vec![0.0; c0 * p];
            for i in 0..c0 {
                let v = v_slice(theta, c0, c1, c2, n_u, n_v, j, i);
                taps.q_apply(s, v, 1.0, &mut normal[i * p..(i + 1) * p]);
            }
            out.push(normal);
        }
    }
    out
}

pub(super) fn forward(
    c0: usize,
    c1: usize,
    c2: usize,
    p: usize,
    n_u: usize,
    n_v: usize,
    maps: Option<&ConvMaps>,
    theta: &[f64],
    x: &[f64],
) -> Eval {
    let taps = Taps::new(p, n_u, n_v, maps);
    let nt = taps.count();
    let h = hidden(c0, c1, c2, n_u, n_v, p, &taps, theta, x);
    let margin = h.iter().fold(f64::INFINITY, |m, &v| m.min(crate::rmath::abs(v)));
    let mut y = vec![0.0; c2 * p];
    for k in 0..c2 {
        let out = &mut y[k * p..(k + 1) * p];
        for j in 0..c1 {
            let u = u_slice(theta, c1, n_u, k, j);
            for s in 0..nt {
                let act = h[j * nt + s];
                if act > 0.0 {
                    taps.p_apply(s, u, act, out);
                }
            }
        }
    }
    Eval { y, margin }
}

pub(super) fn vjp(
    c0: usize,
    c1: usize,
    c2: usize,
    p: usize,
    n_u: usize,
    n_v: usize,
    maps: Option<&ConvMaps>,
    theta: &[f64],
    x: &[f64],
    w: &[f64],
) -> (Vec<f64>, Vec<f64>) {
    let taps = Taps::new(p, n_u, n_v, maps);
    let nt = taps.count();
    let h = hidden(c0, c1, c2, n_u, n_v, p, &taps, theta, x);
    let mut pgrad = vec![0.0; c1 * (c2 * n_u + c0 * n_v)];
    let mut xgrad = vec![0.0; c0 * p];
    let u_total = c2 * c1 * n_u;

    for j in 0..c1 {
        for s in 0..nt {
            let act = h[j * nt + s];
            let on = act > 0.0;
            let sigma = if on { act } else { 0.0 };
            // dh accumulates Σ_k ⟨P_s u_{k,j}, w⁽ᵏ⁾⟩ over output channels.
            let mut dh = 0.0;
            for k in 0..c2 {
                let u = u_slice(theta, c1, n_u, k, j);
                let wk = &w[k * p..(k + 1) * p];
                if on {
                    // grad u_{k,j} += σ(h_{j,s}) P_sᵀ w⁽ᵏ⁾
                    let base = (k * c1 + j) * n_u;
                    taps.p_tr_apply(s, wk, sigma, &mut pgrad[base..base + n_u]);
                    dh += taps.p_dot(s, u, wk);
                }
            }
            if on && dh != 0.0 {
                for i in 0..c0 {
                    let v = v_slice(theta, c0, c1, c2, n_u, n_v, j, i);
                    let base = u_total + (j * c0 + i) * n_v;
                    // grad v_{j,i} += δh Q_sᵀ x⁽ⁱ⁾ ; xgrad⁽ⁱ⁾ += δh Q_s v_{j,i}
                    taps.q_tr_apply(s, &x[i * p..(i + 1) * p], dh, &mut pgrad[base..base + n_v]);
                    taps.q_apply(s, v, dh, &mut xgrad[i * p..(i + 1) * p]);
                }
            }
        }
    }
    (pgrad, xgrad)
}
