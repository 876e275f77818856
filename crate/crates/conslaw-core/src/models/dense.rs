//! Two-layer dense kernels: `linear2` (x ↦ U Vᵀ x) and `relu2`
//! (x ↦ U σ(Vᵀ x + b)).
//!
//! Parameter layout: U (n×r row-major), then V (m×r row-major), then the
//! optional bias b (r).

use alloc::vec;
use alloc::vec::Vec;

use super::Eval;

pub(super) fn forward_linear2(n: usize, m: usize, r: usize, theta: &[f64], x: &[f64]) -> Eval {
    let (u, v) = (&theta[..n * r], &theta[n * r..(n + m) * r]);
    let mut a = vec![0.0; r];
    for i in 0..m {
        let xi = x[i];
        for k in 0..r {
            a[k] += v[i * r + k] * xi;
        }
    }
    let mut y = vec![0.0; n];
    for j in 0..n {
        let mut s = 0.0;
        for k in 0..r {
            s += u[j * r + k] * a[k];
        }
        y[j] = s;
    }
    Eval { y, margin: f64::INFINITY }
}

pub(super) fn vjp_linear2(
    n: usize,
    m: usize,
    r: usize,
    theta: &[f64],
    x: &[f64],
    w: &[f64],
) -> (Vec<f64>, Vec<f64>) {
    let (u, v) = (&theta[..n * r], &theta[n * r..(n + m) * r]);
    let mut a = vec![0.0; r]; // Vᵀ x
    for i in 0..m {
        let xi = x[i];
        for k in 0..r {
            a[k] += v[i * r + k] * xi;
        }
    }
    let mut da = vec![0.0; r]; // Uᵀ w
    for j in 0..n {
        let wj = w[j];
        for k in 0..r {
            da[k] += u[j * r + k] * wj;
        }
    }
    let mut pgrad = vec![0.0; (n + m) * r];
    for j in 0..n {
        for k in 0..r {
            pgrad[j * r + k] = w[j] * a[k];
        }
    }
    for i in 0..m {
        for k in 0..r {
            pgrad[n * r + i * r + k] = x[i] * da[k];
        }
    }
    let mut xgrad = vec![0.0; m];
    for i in 0..m {
        let mut s = 0.0;
        for k in 0..r {
            s += v[i * r + k] * da[k];
        }
        xgrad[i] = s;
    }
    (pgrad, xgrad)
}

pub(super) fn forward_relu2(
    n: usize,
    m: usize,
    r: usize,
    bias: bool,
    theta: &[f64],
    x: &[f64],
) -> Eval {
    let (u, v) = (&theta[..n * r], &theta[n * r..(n + m) * r]);
    let b = if bias { &theta[(n + m) * r..] } else { &[][..] };
    let mut margin = f64::INFINITY;
    let mut act = vec![0.0; r];
    for k in 0..r {
        let mut pre = if bias { b[k] } else { 0.0 };
        for i in 0..m {
            pre += v[i * r + k] * x[i];
        }
        margin = margin.min(crate::rmath::abs(pre));
        act[k] = if pre > 0.0 { pre } else { 0.0 };
    }
    let mut y = vec![0.0; n];
    for j in 0..n {
        let mut s = 0.0;
        for k in 0..r {
            s += u[j * r + k] * act[k];
        }
        y[j] = s;
    }
    Eval { y, margin }
}

pub(super) fn vjp_relu2(
    n: usize,
    m: usize,
    r: usize,
    bias: bool,
    theta: &[f64],
    x: &[f64],
    w: &[f64],
) -> (Vec<f64>, Vec<f64>) {
    let (u, v) = (&theta[..n * r], &theta[n * r..(n + m) * r]);
    let b = if bias { &theta[(n + m) * r..] } else { &[][..] };
    let mut act = vec![0.0; r];
    let mut on = vec![false; r];
    for k in 0..r {
        let mut pre = if bias { b[k] } else { 0.0 };
        for i in 0..m {
            pre += v[i * r + k] * x[i];
        }
        if pre > 0.0 {
            act[k] = pre;
            on[k] = true;
        }
    }
    let mut dpre = vec![0.0; r]; // (Uᵀ w) gated by the active set
    for j in 0..n {
        let wj = w[j];
        for k in 0..r {
            if on[k] {
                dpre[k] += u[j * r + k] * wj;
            }
        }
    }
    let d = (n + m) * r + if bias { r } else { 0 };
    let mut pgrad = vec![0.0; d];
    for j in 0..n {
        for k in 0..r {
            pgrad[j * r + k] = w[j] * act[k];
        }
    }
    for i in 0..m {
        for k in 0..r {
            pgrad[n * r + i * r + k] = x[i] * dpre[k];
        }
    }
    if bias {
        pgrad[(n + m) * r..].copy_from_slice(&dpre);
    }
    let mut xgrad = vec![0.0; m];
    for i in 0..m {
        let mut s = 0.0;
        for k in 0..r {
            s += v[i * r + k] * dpre[k];
        }
        xgrad[i] = s;
    }
    (pgrad, xgrad)
}
