//! Bracket-closure and law-count checks against independent oracles:
//! an exact integer-arithmetic closure for a small block, a dense
//! floating-point closure that ignores the production code's support
//! decoupling, and hand-counted dimensions for the benchmark blocks.

use conslaw_core::laws;
use conslaw_core::liealg::{
    self, lie_bracket_linear, FieldFamily, SpVec, DEFAULT_CLOSURE_RTOL, DEFAULT_MAX_GENERATIONS,
};
use conslaw_core::models::BlockSpec;
use conslaw_core::numerics::{self, Mat};
use conslaw_core::rng::Rng;

// ---------------------------------------------------------------------------
// Exact integer oracle: fraction-free Gaussian elimination never rounds, so
// the span dimension of integer bracket words is computed without tolerance.

fn int_rank(rows: &[Vec<i128>], width: usize) -> usize {
    let mut m: Vec<Vec<i128>> = rows.to_vec();
    let nr = m.len();
    let mut rank = 0usize;
    let mut prev = 1i128;
    for col in 0..width {
        let Some(pivot) = (rank..nr).find(|&r| m[r][col] != 0) else { continue };
        m.swap(rank, pivot);
        for r in 0..nr {
            if r == rank {
                continue;
            }
            for c in 0..width {
                if c == col {
                    continue;
                }
                m[r][c] = (m[rank][col] * m[r][c] - m[r][col] * m[rank][c]) / prev;
            }
            m[r][col] = 0;
        }
        prev = m[rank][col];
        rank += 1;
    }
    rank
}

fn int_bracket(a: &[i128], b: &[i128], d: usize) -> Vec<i128> {
    let mut c = vec![0i128; d * d];
    for i in 0..d {
        for j in 0..d {
            let mut s = 0i128;
            for k in 0..d {
                s += a[i * d + k] * b[k * d + j] - b[i * d + k] * a[k * d + j];
            }
            c[i * d + j] = s;
        }
    }
    c
}

/// Closes a list of integer matrices under brackets by brute force,
/// returning the exact span dimension and a spanning list.
fn int_closure(gens: Vec<Vec<i128>>, d: usize) -> (usize, Vec<Vec<i128>>) {
    let mut elems = gens;
    let mut rank = int_rank(&elems, d * d);
    for _ in 0..6 {
        let n = elems.len();
        let mut new = Vec::new();
        for i in 0..n {
            for j in i + 1..n {
                let c = int_bracket(&elems[i], &elems[j], d);
                if c.iter().any(|v| *v != 0) {
                    new.push(c);
                }
            }
        }
        elems.extend(new);
        let r = int_rank(&elems, d * d);
        if r == rank {
            return (rank, elems);
        }
        rank = r;
    }
    (rank, elems)
}

#[test]
fn integer_oracle_confirms_small_relu_closure() {
    // relu2 n=2, m=2, r=1 without bias: θ = (u₁, u₂, v₁, v₂); the four
    // generators pair one u with one v coordinate. Hand count: 4 pair
    // matrices + rotations on each side = 2·2 + 1 + 1 = 6.
    let d = 4usize;
    let mut gens = Vec::new();
    for a in 0..2usize {
        for b in 0..2usize {
            let mut g = vec![0i128; d * d];
            g[a * d + (2 + b)] = 1;
            g[(2 + b) * d + a] = 1;
            gens.push(g);
        }
    }
    let (oracle_dim, oracle_elems) = int_closure(gens, d);
    assert_eq!(oracle_dim, 6);

    let spec = BlockSpec::Relu2 { n: 2, m: 2, r: 1, bias: false };
    let family = liealg::reparam_fields(&spec).unwrap();
    assert_eq!(family.generators.len(), 4);
    let closure =
        liealg::lie_closure(&family, DEFAULT_CLOSURE_RTOL, DEFAULT_MAX_GENERATIONS).unwrap();
    assert_eq!(closure.matrices.len(), 6);

    // Same span: stacking the float basis on the integer spanning set must
    // not increase the rank.
    let mut rows: Vec<Vec<f64>> = oracle_elems
        .iter()
        .map(|e| e.iter().map(|v| *v as f64).collect())
        .collect();
    for m in &closure.matrices {
        rows.push(m.to_dense());
    }
    let est = numerics::rank_of(&Mat::from_rows(rows), 1e-10).unwrap();
    assert_eq!(est.rank, 6);
}

// ---------------------------------------------------------------------------
// Dense reference closure: same candidate order, no sparsity, no support
// decoupling. Dimensions must agree with the production path.

fn dense_closure_dim(generators: &[SpVec], d: usize, rel_tol: f64) -> usize {
    let mut basis: Vec<Vec<f64>> = Vec::new();
    for g in generators {
        numerics::extend_basis(&mut basis, &g.to_dense(), rel_tol).unwrap();
    }
    let mut gen_start = 0usize;
    loop {
        let hi = basis.len();
        let mut added = false;
        for i in 0..hi {
            for j in (i + 1).max(gen_start)..hi {
                let a = SpVec::from_dense(&basis[i]);
                let b = SpVec::from_dense(&basis[j]);
                let br = lie_bracket_linear(&a, &b, d).to_dense();
                if numerics::extend_basis(&mut basis, &br, rel_tol).unwrap() {
                    added = true;
                }
            }
        }
        if !added {
            return basis.len();
        }
        gen_start = hi;
    }
}

#[test]
fn decoupled_closure_matches_dense_reference() {
    // Attention and a small conv block both split into support components;
    // the undecoupled dense closure must land on the same dimension.
    let cases = [
        BlockSpec::Attention { n_tokens: 2, dim: 3, d1: 2, heads: 1 },
        BlockSpec::ConvRelu2 { c0: 1, c1: 2, c2: 1, p: 2, n_u: 2, n_v: 2, maps: None },
        BlockSpec::Relu2 { n: 2, m: 3, r: 2, bias: true },
    ];
    for spec in cases {
        let family = liealg::reparam_fields(&spec).unwrap();
        let closure =
            liealg::lie_closure(&family, DEFAULT_CLOSURE_RTOL, DEFAULT_MAX_GENERATIONS).unwrap();
        let dense = dense_closure_dim(&family.generators, family.dim, DEFAULT_CLOSURE_RTOL);
        assert_eq!(closure.matrices.len(), dense, "closure dim mismatch for {spec:?}");
    }
}

#[test]
fn closure_is_idempotent() {
    let spec = BlockSpec::Relu2 { n: 2, m: 2, r: 2, bias: false };
    let family = liealg::reparam_fields(&spec).unwrap();
    let closure =
        liealg::lie_closure(&family, DEFAULT_CLOSURE_RTOL, DEFAULT_MAX_GENERATIONS).unwrap();
    let reclosed = liealg::lie_closure(
        &FieldFamily {
            dim: family.dim,
            generators: closure.matrices.clone(),
            constants: Vec::new(),
            provenance: vec![String::from("basis"); closure.matrices.len()],
        },
        DEFAULT_CLOSURE_RTOL,
        DEFAULT_MAX_GENERATIONS,
    )
    .unwrap();
    assert_eq!(reclosed.matrices.len(), closure.matrices.len());
    assert_eq!(reclosed.generations, 0);
    assert!(!reclosed.truncated);
}

#[test]
fn component_structure_of_benchmark_blocks() {
    // Per-neuron components for relu2: |P|·|Q| + C(|P|,2) + C(|Q|,2).
    let spec = BlockSpec::Relu2 { n: 3, m: 4, r: 5, bias: false };
    let family = liealg::reparam_fields(&spec).unwrap();
    let closure =
        liealg::lie_closure(&family, DEFAULT_CLOSURE_RTOL, DEFAULT_MAX_GENERATIONS).unwrap();
    assert_eq!(closure.component_dims, vec![21; 5]);
    assert!(!closure.truncated);

    // Attention factors into a (Q,K) and a (V,O) component per head. The
    // generators pair columns of the two factors, so each component closes
    // like a bipartite family over (dim, dim): dim² + 2·C(dim,2) = 15.
    let spec = BlockSpec::Attention { n_tokens: 2, dim: 3, d1: 2, heads: 1 };
    let family = liealg::reparam_fields(&spec).unwrap();
    let closure =
        liealg::lie_closure(&family, DEFAULT_CLOSURE_RTOL, DEFAULT_MAX_GENERATIONS).unwrap();
    assert_eq!(closure.component_dims, vec![15, 15]);
    assert_eq!(closure.generations, 1);
}

// ---------------------------------------------------------------------------
// Law counts.

fn generic_theta(spec: &BlockSpec, seed: u64) -> Vec<f64> {
    let mut rng = Rng::seed_from(seed);
    laws::sample_admissible_theta(spec, &mut rng)
}

#[test]
fn law_counts_match_hand_counts() {
    let cases: [(BlockSpec, usize, usize); 4] = [
        (BlockSpec::Relu2 { n: 3, m: 4, r: 5, bias: false }, 35, 5),
        (BlockSpec::Attention { n_tokens: 2, dim: 3, d1: 2, heads: 1 }, 24, 6),
        (BlockSpec::SoftmaxClassifier { n: 4, m: 3 }, 12, 3),
        (BlockSpec::Linear2 { n: 1, m: 1, r: 2 }, 4, 3),
    ];
    for (spec, d, want) in cases {
        let theta = generic_theta(&spec, 0xBEEF);
        let count = liealg::count_laws(&spec, &theta, numerics::DEFAULT_RANK_RTOL).unwrap();
        assert_eq!(count.dim_param, d, "D for {spec:?}");
        assert_eq!(count.n_laws, want, "laws for {spec:?}");
        assert_eq!(count.n_laws, laws::catalog(&spec).len(), "catalog size for {spec:?}");
        assert!(!count.truncated);
    }
}

#[test]
fn conv_law_count_is_channel_count() {
    let spec = BlockSpec::ConvRelu2 { c0: 2, c1: 3, c2: 2, p: 8, n_u: 8, n_v: 8, maps: None };
    let theta = generic_theta(&spec, 0xC0C0);
    let count = liealg::count_laws(&spec, &theta, numerics::DEFAULT_RANK_RTOL).unwrap();
    assert_eq!(count.dim_param, 96);
    assert_eq!(count.closure_dim, 3 * 496);
    assert_eq!(count.n_laws, 3);
    assert_eq!(laws::catalog(&spec).len(), 3);
}

#[test]
fn counts_are_stable_over_random_generic_points() {
    let specs = [
        BlockSpec::Relu2 { n: 2, m: 3, r: 2, bias: true },
        BlockSpec::Linear2 { n: 2, m: 2, r: 2 },
    ];
    for spec in specs {
        let want = laws::catalog(&spec).len();
        for seed in 0..10u64 {
            let theta = generic_theta(&spec, 1000 + seed);
            let count = liealg::count_laws(&spec, &theta, numerics::DEFAULT_RANK_RTOL).unwrap();
            assert_eq!(count.n_laws, want, "{spec:?} seed {seed}");
        }
    }
}

#[test]
fn trace_dim_is_scale_equivariant() {
    // The fields are linear in θ, so the trace span (hence its rank) is
    // invariant under positive rescaling of θ.
    let spec = BlockSpec::Relu2 { n: 2, m: 3, r: 2, bias: false };
    let family = liealg::reparam_fields(&spec).unwrap();
    let closure =
        liealg::lie_closure(&family, DEFAULT_CLOSURE_RTOL, DEFAULT_MAX_GENERATIONS).unwrap();
    let theta = generic_theta(&spec, 77);
    let scaled: Vec<f64> = theta.iter().map(|v| 2.75 * v).collect();
    let a = liealg::trace_dim(&closure, &theta, numerics::DEFAULT_RANK_RTOL).unwrap();
    let b = liealg::trace_dim(&closure, &scaled, numerics::DEFAULT_RANK_RTOL).unwrap();
    assert_eq!(a.rank, b.rank);
}

#[test]
fn reparam_values_generate_the_tracked_laws() {
    // The catalog's quadratic laws for linear2 are exactly differences of
    // reparameterization values across a sign flip of V — sanity-check the
    // value map by finite difference of its components against the fields.
    let spec = BlockSpec::Linear2 { n: 2, m: 2, r: 2 };
    let family = liealg::reparam_fields(&spec).unwrap();
    let theta = generic_theta(&spec, 5);
    let h = 1e-6;
    for (gi, gen) in family.generators.iter().enumerate() {
        // ∇φ_i = A_i θ: central difference of reparam_value component gi.
        let field = gen.apply_matrix(family.dim, &theta);
        for c in 0..family.dim {
            let mut tp = theta.clone();
            let mut tm = theta.clone();
            tp[c] += h;
            tm[c] -= h;
            let vp = liealg::reparam_value(&spec, &tp).unwrap()[gi];
            let vm = liealg::reparam_value(&spec, &tm).unwrap()[gi];
            let fd = (vp - vm) / (2.0 * h);
            assert!(
                (fd - field[c]).abs() < 1e-7,
                "component {gi}, coord {c}: fd {fd} vs field {}",
                field[c]
            );
        }
    }
}
