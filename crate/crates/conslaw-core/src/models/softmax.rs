//! Softmax classifier kernel: x ↦ softmax(W x), W ∈ R^{n×m} row-major.

use alloc::vec;
use alloc::vec::Vec;

use super::Eval;
use crate::rmath;

fn logits(n: usize, m: usize, theta: &[f64], x: &[f64]) -> Vec<f64> {
    let mut z = vec![0.0; n];
    for i in 0..n {
        z[i] = crate::numerics::dot(&theta[i * m..(i + 1) * m], x);
    }
    z
}

fn softmax(z: &[f64]) -> Vec<f64> {
    let mx = z.iter().fold(f64::NEG_INFINITY, |m, &v| m.max(v));
    let mut p: Vec<f64> = z.iter().map(|&v| rmath::exp(v - mx)).collect();
    let denom: f64 = p.iter().sum();
    for v in &mut p {
        *v /= denom;
    }
    p
}

pub(super) fn forward(n: usize, m: usize, theta: &[f64], x: &[f64]) -> Eval {
    Eval { y: softmax(&logits(n, m, theta, x)), margin: f64::INFINITY }
}

pub(super) fn vjp(n: usize, m: usize, theta: &[f64], x: &[f64], w: &[f64]) -> (Vec<f64>, Vec<f64>) {
    let p = softmax(&logits(n, m, theta, x));
    // dz = (diag p − p pᵀ) w
    let pw = crate::numerics::dot(&p, w);
    let dz: Vec<f64> = p.iter().zip(w).map(|(&pi, &wi)| pi * (wi - pw)).collect();
    let mut pgrad = vec![0.0; n * m];
    for i in 0..n {
        for j in 0..m {
            pgrad[i * m + j] = dz[i] * x[j];
        }
    }
    let mut xgrad = vec![0.0; m];
    for i in 0..n {
        let di = dz[i];
        for j in 0..m {
            xgrad[j] += theta[i * m + j] * di;
        }
    }
    (pgrad, xgrad)
}
