//! Attention kernel: x ↦ vec(Σ_h softmax(X Q_hᵀ K_h Xᵀ) X V_hᵀ O_h).
//!
//! The input is read row-wise as a token matrix X ∈ R^{N×dim}; softmax acts
//! on each row of the score matrix. Heads partition the d1 rows of each of
//! Q, K, V, O (d1×dim, row-major); parameter order is [Q | K | V | O].

use alloc::vec;
use alloc::vec::Vec;

use super::Eval;
use crate::numerics::Mat;
use crate::rmath;

fn head_mat(theta: &[f64], which: usize, d1: usize, dim: usize, h: usize, dh: usize) -> Mat {
    let base = which * d1 * dim + h * dh * dim;
    Mat { rows: dh, cols: dim, data: theta[base..base + dh * dim].to_vec() }
}

fn row_softmax(a: &Mat) -> Mat {
    let mut s = Mat::zeros(a.rows, a.cols);
    for i in 0..a.rows {
        let row = a.row(i);
        let mx = row.iter().fold(f64::NEG_INFINITY, |m, &v| m.max(v));
        let mut denom = 0.0;
        for j in 0..a.cols {
            let e = rmath::exp(row[j] - mx);
            s.set(i, j, e);
            denom += e;
        }
        for j in 0..a.cols {
            s.set(i, j, s.get(i, j) / denom);
        }
    }
    s
}

pub(super) fn forward(
    n_tokens: usize,
    dim: usize,
    d1: usize,
    heads: usize,
    theta: &[f64],
    x: &[f64],
) -> Eval {
    let xm = Mat { rows: n_tokens, cols: dim, data: x.to_vec() };
    let dh = d1 / heads;
    let mut g = Mat::zeros(n_tokens, dim);
    for h in 0..heads {
        let q = head_mat(theta, 0, d1, dim, h, dh);
        let k = head_mat(theta, 1, d1, dim, h, dh);
        let v = head_mat(theta, 2, d1, dim, h, dh);
        let o = head_mat(theta, 3, d1, dim, h, dh);
        let a = xm.matmul(&q.transposed()).matmul(&k).matmul(&xm.transposed());
        let s = row_softmax(&a);
        let m = xm.matmul(&v.transposed()).matmul(&o);
        g = g.add(&s.matmul(&m));
    }
    Eval { y: g.data, margin: f64::INFINITY }
}

pub(super) fn vjp(
    n_tokens: usize,
    dim: usize,
    d1: usize,
    heads: usize,
    theta: &[f64],
    x: &[f64],
    w: &[f64],
) -> (Vec<f64>, Vec<f64>) {
    let xm = Mat { rows: n_tokens, cols: dim, data: x.to_vec() };
    let wm = Mat { rows: n_tokens, cols: dim, data: w.to_vec() };
    let dh = d1 / heads;
    let mut pgrad = vec![0.0; 4 * d1 * dim];
    let mut dx = Mat::zeros(n_tokens, dim);

    for h in 0..heads {
        let q = head_mat(theta, 0, d1, dim, h, dh);
        let k = head_mat(theta, 1, d1, dim, h, dh);
        let v = head_mat(theta, 2, d1, dim, h, dh);
        let o = head_mat(theta, 3, d1, dim, h, dh);

        let a = xm.matmul(&q.transposed()).matmul(&k).matmul(&xm.transposed());
        let s = row_softmax(&a);
        let m = xm.matmul(&v.transposed()).matmul(&o);

        // Value path: ⟨W, S M⟩.
        let gm = s.transposed().matmul(&wm); // grad wrt M
        let grad_o = v.matmul(&xm.transposed()).matmul(&gm);
        let grad_v = o.matmul(&gm.transposed()).matmul(&xm);

        // Score path through the row softmax.
        let ds = wm.matmul(&m.transposed()); // grad wrt S
        let mut da = Mat::zeros(n_tokens, n_tokens);
        for i in 0..n_tokens {
            let mut dot = 0.0;
            for l in 0..n_tokens {
                dot += s.get(i, l) * ds.get(i, l);
            }
            for j in 0..n_tokens {
                da.set(i, j, s.get(i, j) * (ds.get(i, j) - dot));
            }
        }
        let xtdax = xm.transposed().matmul(&da).matmul(&xm); // Xᵀ dA X
        let grad_q = k.matmul(&xtdax.transposed());
        let grad_k = q.matmul(&xtdax);

        // Input gradient: A = X B Xᵀ with B = QᵀK, plus the value path.
        let b = q.transposed().matmul(&k);
        dx = dx.add(&da.matmul(&xm).matmul(&b.transposed()));
        dx = dx.add(&da.transposed().matmul(&xm).matmul(&b));
        dx = dx.add(&gm.matmul(&o.transposed()).matmul(&v));

        for (which, grad) in [(0usize, grad_q), (1, grad_k), (2, grad_v), (3, grad_o)] {
            let base = which * d1 * dim + h * dh * dim;
            pgrad[base..base + dh * dim].copy_from_slice(&grad.data);
        }
    }
    (pgrad, dx.data)
}
