//! Lie-algebra machinery for counting conservation laws exactly.
//!
//! Each block's distinguished reparameterization φ induces one vector field
//! per φ-coordinate, χ_i(θ) = ∂φ(θ)ᵀ e_i. For the bilinear reparameterizations
//! used here every field is exactly linear, χ_i(θ) = A_i θ, so the Lie
//! bracket of two fields is the matrix commutator [A, B] = AB − BA and the
//! smallest bracket-closed family containing the generators is an ordinary
//! matrix Lie algebra. Its trace at θ — the span of {A θ} over a basis of the
//! closure — has some dimension k(θ); on a neighborhood of a generic θ the
//! number of independent conserved quantities is exactly D − k.
//!
//! The softmax classifier contributes *constant* fields (its function-space
//! span is θ-independent); constants bracket to zero with everything here
//! because block supports are disjoint, so they simply join the basis.
//!
//! Generators are stored sparsely. Families decouple into support components
//! (per neuron for `relu2`, per hidden channel for `conv_relu2`, the (Q,K)
//! and (V,O) halves for `attention`); brackets across components vanish
//! identically and orthonormalization never mixes them, so the closure runs
//! per component. The incremental Gram–Schmidt here performs, entry for
//! entry, the same arithmetic as [`numerics::extend_basis`] (skipped terms
//! are exact zeros), which a test checks by direct comparison.

use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use crate::error::Result;
use crate::invalid_input;
use crate::models::{self, BlockSpec};
use crate::numerics::{self, Mat, RankEstimate};
use crate::rng::Rng;

/// Largest parameter dimension accepted by the closure routines; the
/// vectorized matrix space has D² coordinates and grows quadratically.
pub const MAX_CLOSURE_DIM: usize = 512;
/// Default relative tolerance for closure basis extension.
pub const DEFAULT_CLOSURE_RTOL: f64 = 1e-10;
/// Default cap on bracket generations.
pub const DEFAULT_MAX_GENERATIONS: usize = 8;

/// Sparse vector: sorted indices, exact nonzero values only.
#[derive(Clone, Debug, PartialEq)]
pub struct SpVec {
    pub dim: usize,
    pub entries: Vec<(u32, f64)>,
}

impl SpVec {
    /// Builds from (index, value) pairs; sorts, merges duplicates by
    /// addition, and drops exact zeros.
    pub fn from_entries(dim: usize, mut entries: Vec<(u32, f64)>) -> Self {
        entries.sort_unstable_by_key(|e| e.0);
        let mut merged: Vec<(u32, f64)> = Vec::with_capacity(entries.len());
        for (i, v) in entries {
            match merged.last_mut() {
                Some((j, acc)) if *j == i => *acc += v,
                _ => merged.push((i, v)),
            }
        }
        merged.retain(|&(_, v)| v != 0.0);
        SpVec { dim, entries: merged }
    }

    pub fn from_dense(v: &[f64]) -> Self {
        SpVec {
            dim: v.len(),
            entries: v
                .iter()
                .enumerate()
                .filter(|(_, &x)| x != 0.0)
                .map(|(i, &x)| (i as u32, x))
                .collect(),
        }
    }

    pub fn to_dense(&self) -> Vec<f64> {
        let mut v = vec![0.0; self.dim];
        for &(i, x) in &self.entries {
            v[i as usize] = x;
        }
        v
    }

    pub fn nnz(&self) -> usize {
        self.entries.len()
    }

    /// Interprets the vector as a d×d matrix (row-major) and applies it
    /// to θ ∈ R^d.
    pub fn apply_matrix(&self, d: usize, theta: &[f64]) -> Vec<f64> {
        debug_assert_eq!(self.dim, d * d);
        debug_assert_eq!(theta.len(), d);
        let mut out = vec![0.0; d];
        for &(i, v) in &self.entries {
            let (r, c) = ((i as usize) / d, (i as usize) % d);
            out[r] += v * theta[c];
        }
        out
    }
}

/// Matrix commutator [A, B] = AB − BA of two vectorized d×d matrices.
pub fn lie_bracket_linear(a: &SpVec, b: &SpVec, d: usize) -> SpVec {
    let mut entries: Vec<(u32, f64)> = Vec::new();
    for &(ia, va) in &a.entries {
        let (ra, ca) = ((ia as usize) / d, (ia as usize) % d);
        for &(ib, vb) in &b.entries {
            let (rb, cb) = ((ib as usize) / d, (ib as usize) % d);
            if ca == rb {
                entries.push(((ra * d + cb) as u32, va * vb));
            }
            if cb == ra {
                entries.push(((rb * d + ca) as u32, -vb * va));
            }
        }
    }
    SpVec::from_entries(d * d, entries)
}

/// A family of vector fields on parameter space: linear fields θ ↦ A_i θ
/// (sparse vectorized matrices) plus constant fields θ ↦ v_j. `provenance`
/// carries one tag per generator, linear fields first.
#[derive(Clone, Debug)]
pub struct FieldFamily {
    pub dim: usize,
    pub generators: Vec<SpVec>,
    pub constants: Vec<Vec<f64>>,
    pub provenance: Vec<String>,
}

/// Bracket-closed, orthonormalized span of a field family.
///
/// `matrices` are orthonormal in the vectorized matrix space R^{D²};
/// `vectors` (from constant fields) are orthonormal in R^D. The two lists
/// live in different spaces and are reported separately.
#[derive(Clone, Debug)]
pub struct LieClosure {
    pub dim_param: usize,
    pub matrices: Vec<SpVec>,
    pub vectors: Vec<Vec<f64>>,
    /// Bracket sweeps that added at least one element (max over components).
    pub generations: usize,
    /// True when the generation cap stopped a still-growing component.
    pub truncated: bool,
    /// Closure dimension of each support component, in order of first index.
    pub component_dims: Vec<usize>,
}

impl LieClosure {
    /// Total closure dimension (matrix part + constant part).
    pub fn dim(&self) -> usize {
        self.matrices.len() + self.vectors.len()
    }
}

// ---------------------------------------------------------------------------
// Reparameterization fields per block kind.
// ---------------------------------------------------------------------------

struct FamilyBuilder {
    dim: usize,
    generators: Vec<SpVec>,
    constants: Vec<Vec<f64>>,
    provenance: Vec<String>,
}

impl FamilyBuilder {
    fn push_sym_pair_sum(&mut self, pairs: &[(usize, usize)], tag: String) {
        // Generator with A[a,b] = A[b,a] = w for each (a,b) weight-1 pair;
        // used by the bilinear reparameterizations whose φ-coordinate is a
        // sum of products Σ θ_a θ_b.
        let d = self.dim;
        let mut entries = Vec::with_capacity(2 * pairs.len());
        for &(a, b) in pairs {
            entries.push(((a * d + b) as u32, 1.0));
            entries.push(((b * d + a) as u32, 1.0));
        }
        let g = SpVec::from_entries(d * d, entries);
        if g.nnz() > 0 {
            self.generators.push(g);
            self.provenance.push(tag);
        }
    }

    fn push_weighted_sym(&mut self, pairs: &[(usize, usize, f64)], tag: String) {
        let d = self.dim;
        let mut entries = Vec::with_capacity(2 * pairs.len());
        for &(a, b, w) in pairs {
            entries.push(((a * d + b) as u32, w));
            entries.push(((b * d + a) as u32, w));
        }
        let g = SpVec::from_entries(d * d, entries);
        if g.nnz() > 0 {
            self.generators.push(g);
            self.provenance.push(tag);
        }
    }
}

fn fields_walk(spec: &BlockSpec, offset: usize, prefix: &str, b: &mut FamilyBuilder) -> Result<()> {
    match spec {
        BlockSpec::Linear2 { n, m, r } => {
            // φ_{ab} = Σ_k U[a,k] V[b,k]
            for a in 0..*n {
                for bb in 0..*m {
                    let pairs: Vec<(usize, usize)> = (0..*r)
                        .map(|k| (offset + a * r + k, offset + n * r + bb * r + k))
                        .collect();
                    b.push_sym_pair_sum(&pairs, format!("{prefix}phi[{a},{bb}]"));
                }
            }
        }
        BlockSpec::Relu2 { n, m, r, bias } => {
            // φ_{k,a,b} = U[a,k] Ṽ[b,k] with Ṽ the bias-augmented factor.
            let mtot = m + usize::from(*bias);
            for k in 0..*r {
                for a in 0..*n {
                    for bb in 0..mtot {
                        let vidx = if bb < *m {
                            offset + n * r + bb * r + k
                        } else {
                            offset + (n + m) * r + k
                        };
                        b.push_sym_pair_sum(
                            &[(offset + a * r + k, vidx)],
                            format!("{prefix}phi[{k};{a},{bb}]"),
                        );
                    }
                }
            }
        }
        BlockSpec::ConvRelu2 { c0, c1, c2, p, n_u, n_v, maps } => {
            // ψ(θ) = φ(Tθ): the pulled-back field for ψ-coordinate
            // ((j,s), (k,t), (i,t')) is the symmetrized outer product of
            // row t of P_s (in u_{k,j}-coordinates) with row t' of Q_s
            // (in v_{j,i}-coordinates).
            let taps = crate::models::conv_taps(*p, *n_u, *n_v, maps.as_ref());
            let nt = taps.count();
            let u_total = c2 * c1 * n_u;
            for j in 0..*c1 {
                for s in 0..nt {
                    let prow: Vec<Vec<(usize, f64)>> =
                        (0..*p).map(|t| taps.p_row(s, t)).collect();
                    let qrow: Vec<Vec<(usize, f64)>> =
                        (0..*p).map(|t| taps.q_row(s, t)).collect();
                    for k in 0..*c2 {
                        let ubase = offset + (k * c1 + j) * n_u;
                        for t in 0..*p {
                            if prow[t].is_empty() {
                                continue;
                            }
                            for i in 0..*c0 {
                                let vbase = offset + u_total + (j * c0 + i) * n_v;
                                for t2 in 0..*p {
                                    if qrow[t2].is_empty() {
                                        continue;
                                    }
                                    let mut pairs = Vec::new();
                                    for &(cu, wu) in &prow[t] {
                                        for &(cv, wv) in &qrow[t2] {
                                            pairs.push((ubase + cu, vbase + cv, wu * wv));
                                        }
                                    }
                                    b.push_weighted_sym(
                                        &pairs,
                                        format!("{prefix}psi[{j},{s};{k},{t};{i},{t2}]"),
                                    );
                                }
                            }
                        }
                    }
                }
            }
        }
        BlockSpec::Attention { dim, d1, heads, .. } => {
            // φ = (Q_hᵀ K_h, V_hᵀ O_h) per head.
            let dh = d1 / heads;
            let idx = |slot: usize, row: usize, col: usize| offset + slot * d1 * dim + row * dim + col;
            for h in 0..*heads {
                for c in 0..*dim {
                    for f in 0..*dim {
                        let pairs: Vec<(usize, usize)> =
                            (h * dh..(h + 1) * dh).map(|e| (idx(0, e, c), idx(1, e, f))).collect();
                        b.push_sym_pair_sum(&pairs, format!("{prefix}qk[{h};{c},{f}]"));
                        let pairs: Vec<(usize, usize)> =
                            (h * dh..(h + 1) * dh).map(|e| (idx(2, e, c), idx(3, e, f))).collect();
                        b.push_sym_pair_sum(&pairs, format!("{prefix}vo[{h};{c},{f}]"));
                    }
                }
            }
        }
        BlockSpec::SoftmaxClassifier { n, m } => {
            // Constant fields spanning {Z : column sums of Z vanish}:
            // e_{ij} − e_{0j} for i ≥ 1, per column j.
            for j in 0..*m {
                for i in 1..*n {
                    let mut v = vec![0.0; b.dim];
                    v[offset + j] = -1.0;
                    v[offset + i * m + j] = 1.0;
                    b.constants.push(v);
                    b.provenance.push(format!("{prefix}colfree[{i},{j}]"));
                }
            }
        }
        BlockSpec::Residual { inner } => fields_walk(inner, offset, prefix, b)?,
        BlockSpec::Composition { blocks } => {
            let mut off = offset;
            for (i, blk) in blocks.iter().enumerate() {
                let child = format!("{prefix}{i}.");
                fields_walk(blk, off, &child, b)?;
                off += models::param_dim(blk);
            }
        }
    }
    Ok(())
}

/// The field family induced by the spec's distinguished reparameterization:
/// one generator per φ-coordinate (linear fields for the bilinear blocks,
/// constant fields for the softmax classifier), identically-zero generators
/// dropped.
pub fn reparam_fields(spec: &BlockSpec) -> Result<FieldFamily> {
    models::validate_spec(spec)?;
    let d = models::param_dim(spec);
    let mut b = FamilyBuilder { dim: d, generators: Vec::new(), constants: Vec::new(), provenance: Vec::new() };
    fields_walk(spec, 0, "", &mut b)?;
    Ok(FieldFamily { dim: d, generators: b.generators, constants: b.constants, provenance: b.provenance })
}

/// φ(θ) for the linear-field block kinds, coordinates ordered exactly like
/// the generators of [`reparam_fields`]; used to cross-check the fields
/// against finite differences.
pub fn reparam_value(spec: &BlockSpec, theta: &[f64]) -> Result<Vec<f64>> {
    models::validate_spec(spec)?;
    if theta.len() != models::param_dim(spec) {
        return Err(invalid_input!("theta length mismatch"));
    }
    let mut out = Vec::new();
    match spec {
        BlockSpec::Linear2 { n, m, r } => {
            for a in 0..*n {
                for bb in 0..*m {
                    out.push((0..*r).map(|k| theta[a * r + k] * theta[n * r + bb * r + k]).sum());
                }
            }
        }
        BlockSpec::Relu2 { n, m, r, bias } => {
            let mtot = m + usize::from(*bias);
            for k in 0..*r {
                for a in 0..*n {
                    for bb in 0..mtot {
                        let v = if bb < *m { theta[n * r + bb * r + k] } else { theta[(n + m) * r + k] };
                        out.push(theta[a * r + k] * v);
                    }
                }
            }
        }
        BlockSpec::ConvRelu2 { c0, c1, c2, p, n_u, n_v, maps } => {
            let taps = crate::models::conv_taps(*p, *n_u, *n_v, maps.as_ref());
            let nt = taps.count();
            let u_total = c2 * c1 * n_u;
            for j in 0..*c1 {
                for s in 0..nt {
                    for k in 0..*c2 {
                        let ubase = (k * c1 + j) * n_u;
                        for t in 0..*p {
                            let pu: f64 = taps
                                .p_row(s, t)
                                .iter()
                                .map(|&(c, w)| w * theta[ubase + c])
                                .sum();
                            for i in 0..*c0 {
                                let vbase = u_total + (j * c0 + i) * n_v;
                                for t2 in 0..*p {
                                    let qv: f64 = taps
                                        .q_row(s, t2)
                                        .iter()
                                        .map(|&(c, w)| w * theta[vbase + c])
                                        .sum();
                                    out.push(pu * qv);
                                }
                            }
                        }
                    }
                }
            }
        }
        BlockSpec::Attention { dim, d1, heads, .. } => {
            let dh = d1 / heads;
            let idx = |slot: usize, row: usize, col: usize| slot * d1 * dim + row * dim + col;
            for h in 0..*heads {
                for c in 0..*dim {
                    for f in 0..*dim {
                        out.push(
                            (h * dh..(h + 1) * dh)
                                .map(|e| theta[idx(0, e, c)] * theta[idx(1, e, f)])
                                .sum(),
                        );
                        out.push(
                            (h * dh..(h + 1) * dh)
                                .map(|e| theta[idx(2, e, c)] * theta[idx(3, e, f)])
                                .sum(),
                        );
                    }
                }
            }
        }
        _ => {
            return Err(invalid_input!(
                "reparam_value is defined for the elementary bilinear block kinds"
            ))
        }
    }
    Ok(out)
}

// ---------------------------------------------------------------------------
// Sparse incremental Gram–Schmidt (bit-compatible with numerics::extend_basis)
// ---------------------------------------------------------------------------

struct Scratch {
    vals: Vec<f64>,
    support: Vec<u32>,
}

impl Scratch {
    fn new(dim: usize) -> Self {
        Scratch { vals: vec![0.0; dim], support: Vec::new() }
    }

    fn load(&mut self, v: &SpVec) {
        debug_assert!(self.support.is_empty());
        for &(i, x) in &v.entries {
            self.vals[i as usize] = x;
            self.support.push(i);
        }
    }


    fn merge_support(&mut self, other: &[(u32, f64)]) {
        // Union of sorted index lists; values outside the current support
        // are exact zeros by invariant.
        let mut merged = Vec::with_capacity(self.support.len() + other.len());
        let (mut a, mut b) = (0, 0);
        while a < self.support.len() && b < other.len() {
            let (ia, ib) = (self.support[a], other[b].0);
            if ia == ib {
                merged.push(ia);
                a += 1;
                b += 1;
            } else if ia < ib {
                merged.push(ia);
                a += 1;
            } else {
                merged.push(ib);
                b += 1;
            }
        }
        merged.extend_from_slice(&self.support[a..]);
        merged.extend(other[b..].iter().map(|e| e.0));
        self.support = merged;
    }

    fn norm(&self) -> f64 {
        let mut s = 0.0;
        for &i in &self.support {
            let v = self.vals[i as usize];
            s += v * v;
        }
        crate::rmath::sqrt(s)
    }

    fn reset(&mut self) {
        for &i in &self.support {
            self.vals[i as usize] = 0.0;
        }
        self.support.clear();
    }
}

/// Same projection arithmetic as [`numerics::extend_basis`], restricted to
/// stored entries (all skipped terms are exact zeros): two modified
/// Gram–Schmidt passes, residual test against `rel_tol · ‖v‖`, normalized
/// residual appended on success.
fn extend_sparse(basis: &mut Vec<SpVec>, cand: &mut Scratch, rel_tol: f64) -> bool {
    let vnorm = cand.norm();
    if vnorm == 0.0 {
        cand.reset();
        return false;
    }
    for _pass in 0..2 {
        for b in basis.iter() {
            let mut c = 0.0;
            for &(i, x) in &b.entries {
                c += x * cand.vals[i as usize];
            }
            if c != 0.0 {
                for &(i, x) in &b.entries {
                    cand.vals[i as usize] -= c * x;
                }
                cand.merge_support(&b.entries);
            }
        }
    }
    let res = cand.norm();
    let added = res > rel_tol * vnorm;
    if added {
        let inv = 1.0 / res;
        let entries: Vec<(u32, f64)> = cand
            .support
            .iter()
            .filter(|&&i| cand.vals[i as usize] != 0.0)
            .map(|&i| (i, cand.vals[i as usize] * inv))
            .collect();
        basis.push(SpVec { dim: cand.vals.len(), entries });
    }
    cand.reset();
    added
}

// ---------------------------------------------------------------------------
// Support components and the closure proper.
// ---------------------------------------------------------------------------

struct UnionFind {
    parent: Vec<usize>,
}

impl UnionFind {
    fn new(n: usize) -> Self {
        UnionFind { parent: (0..n).collect() }
    }

    fn find(&mut self, mut x: usize) -> usize {
        while self.parent[x] != x {
            self.parent[x] = self.parent[self.parent[x]];
            x = self.parent[x];
        }
        x
    }

    fn union(&mut self, a: usize, b: usize) {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra != rb {
            self.parent[ra] = rb;
        }
    }
}

/// Parameter coordinates touched by a vectorized matrix (row and column
/// indices of its nonzero entries).
fn matrix_support(g: &SpVec, d: usize) -> Vec<usize> {
    let mut s: Vec<usize> = g
        .entries
        .iter()
        .flat_map(|&(i, _)| [(i as usize) / d, (i as usize) % d])
        .collect();
    s.sort_unstable();
    s.dedup();
    s
}

/// Computes the bracket-closed orthonormal span of a field family.
///
/// Generators split into support components; within each component every
/// pair of basis elements is bracketed exactly once across the generation
/// sweeps, candidates extend the basis through [`extend_sparse`], and sweeps
/// stop when nothing new appears or `max_generations` is hit (which sets
/// `truncated`). Constant fields join as an R^D-orthonormalized block.
pub fn lie_closure(family: &FieldFamily, rel_tol: f64, max_generations: usize) -> Result<LieClosure> {
    if !(rel_tol > 0.0 && rel_tol < 1.0) {
        return Err(invalid_input!("rel_tol must lie in (0,1), got {rel_tol}"));
    }
    let d = family.dim;
    if d > MAX_CLOSURE_DIM {
        return Err(invalid_input!(
            "parameter dimension {d} exceeds the closure cap {MAX_CLOSURE_DIM}"
        ));
    }
    for g in &family.generators {
        if g.dim != d * d {
            return Err(invalid_input!("generator dimension mismatch"));
        }
        if g.entries.iter().any(|&(_, v)| !v.is_finite()) {
            return Err(invalid_input!("generator has non-finite entries"));
        }
    }
    for c in &family.constants {
        if c.len() != d {
            return Err(invalid_input!("constant field dimension mismatch"));
        }
    }

    // Partition generators by connected parameter support.
    let mut uf = UnionFind::new(d);
    let mut supports: Vec<Vec<usize>> = Vec::with_capacity(family.generators.len());
    for g in &family.generators {
        let s = matrix_support(g, d);
        for w in s.windows(2) {
            uf.union(w[0], w[1]);
        }
        supports.push(s);
    }
    let mut comp_of_root: Vec<(usize, Vec<usize>)> = Vec::new(); // (root, generator indices)
    for (gi, s) in supports.iter().enumerate() {
        if s.is_empty() {
            continue;
        }
        let root = uf.find(s[0]);
        match comp_of_root.iter_mut().find(|(r, _)| *r == root) {
            Some((_, list)) => list.push(gi),
            None => comp_of_root.push((root, vec![gi])),
        }
    }
    // Deterministic order: by smallest generator index.
    comp_of_root.sort_by_key(|(_, list)| list[0]);

    let mut matrices: Vec<SpVec> = Vec::new();
    let mut component_dims: Vec<usize> = Vec::new();
    let mut generations = 0usize;
    let mut truncated = false;

    for (_, gen_indices) in &comp_of_root {
        // Local coordinate map for this component.
        let mut coords: Vec<usize> = gen_indices
            .iter()
            .flat_map(|&gi| supports[gi].iter().copied())
            .collect();
        coords.sort_unstable();
        coords.dedup();
        let dl = coords.len();
        let mut local_of = alloc::collections::BTreeMap::new();
        for (li, &gi) in coords.iter().enumerate() {
            local_of.insert(gi, li);
        }
        let to_local = |g: &SpVec| -> SpVec {
            let entries: Vec<(u32, f64)> = g
                .entries
                .iter()
                .map(|&(i, v)| {
                    let (r, c) = ((i as usize) / d, (i as usize) % d);
                    ((local_of[&r] * dl + local_of[&c]) as u32, v)
                })
                .collect();
            SpVec::from_entries(dl * dl, entries)
        };

        let mut basis: Vec<SpVec> = Vec::new();
        let mut scratch = Scratch::new(dl * dl);
        for &gi in gen_indices {
            scratch.load(&to_local(&family.generators[gi]));
            extend_sparse(&mut basis, &mut scratch, rel_tol);
        }

        let mut comp_generations = 0usize;
        let mut gen_start = 0usize;
        while basis.len() > gen_start {
            if comp_generations >= max_generations {
                truncated = true;
                break;
            }
            let hi = basis.len();
            let mut added = false;
            for i in 0..hi {
                for j in (i + 1).max(gen_start)..hi {
                    let br = lie_bracket_linear(&basis[i], &basis[j], dl);
                    if br.nnz() == 0 {
                        continue;
                    }
                    scratch.load(&br);
                    if extend_sparse(&mut basis, &mut scratch, rel_tol) {
                        added = true;
                    }
                }
            }
            gen_start = hi;
            if added {
                comp_generations += 1;
            }
        }
        generations = generations.max(comp_generations);
        component_dims.push(basis.len());

        // Map the component basis back to global coordinates.
        for bvec in basis {
            let entries: Vec<(u32, f64)> = bvec
                .entries
                .iter()
                .map(|&(i, v)| {
                    let (r, c) = ((i as usize) / dl, (i as usize) % dl);
                    ((coords[r] * d + coords[c]) as u32, v)
                })
                .collect();
            matrices.push(SpVec::from_entries(d * d, entries));
        }
    }

    // Constant fields: orthonormalize in R^D (brackets vanish).
    let mut vectors: Vec<Vec<f64>> = Vec::new();
    for c in &family.constants {
        numerics::extend_basis(&mut vectors, c, rel_tol)?;
    }

    Ok(LieClosure { dim_param: d, matrices, vectors, generations, truncated, component_dims })
}

/// Dimension at θ of the closure's trace span {A θ : A in the matrix basis}
/// ∪ {v : v in the constant basis}.
pub fn trace_dim(closure: &LieClosure, theta: &[f64], rel_tol: f64) -> Result<RankEstimate> {
    let d = closure.dim_param;
    if theta.len() != d {
        return Err(invalid_input!("theta has {} entries, closure is over {d}", theta.len()));
    }
    if theta.iter().any(|v| !v.is_finite()) {
        return Err(invalid_input!("theta must be finite"));
    }
    let mut rows: Vec<Vec<f64>> = Vec::with_capacity(closure.dim());
    for a in &closure.matrices {
        rows.push(a.apply_matrix(d, theta));
    }
    for v in &closure.vectors {
        rows.push(v.clone());
    }
    if rows.is_empty() {
        return Ok(RankEstimate { rank: 0, singular_values: Vec::new(), tol_used: rel_tol });
    }
    numerics::rank_of(&Mat::from_rows(rows), rel_tol)
}

/// Result of the exact law count at a generic point.
#[derive(Clone, Debug)]
pub struct LawCount {
    pub dim_param: usize,
    pub closure_dim: usize,
    pub trace_dim: usize,
    /// Number of independent conservation laws: D − trace_dim.
    pub n_laws: usize,
    pub generations: usize,
    pub truncated: bool,
    pub component_dims: Vec<usize>,
}

/// Counts conservation laws at θ as D − k, k the trace dimension of the
/// bracket closure of the reparameterization fields.
///
/// Genericity guard: the trace rank is re-evaluated at 5 multiplicatively
/// perturbed copies of θ (relative size 1e-3, directions drawn from fixed
/// internal seeds so the routine stays deterministic); any disagreement
/// yields [`crate::CoreError::NonGenericPoint`].
pub fn count_laws(spec: &BlockSpec, theta: &[f64], rel_tol: f64) -> Result<LawCount> {
    models::validate_spec(spec)?;
    let d = models::param_dim(spec);
    if theta.len() != d {
        return Err(invalid_input!("theta has {} entries, spec needs {d}", theta.len()));
    }
    let family = reparam_fields(spec)?;
    let closure = lie_closure(&family, DEFAULT_CLOSURE_RTOL, DEFAULT_MAX_GENERATIONS)?;
    let base = trace_dim(&closure, theta, rel_tol)?.rank;
    let mut ranks = vec![base];
    for t in 0..5u64 {
        let mut rng = Rng::seed_from(0xC0_1A_75 + t);
        let pert: Vec<f64> =
            theta.iter().map(|&v| v * (1.0 + 1e-3 * rng.normal())).collect();
        ranks.push(trace_dim(&closure, &pert, rel_tol)?.rank);
    }
    if ranks.iter().any(|&r| r != base) {
        return Err(crate::CoreError::NonGenericPoint { ranks });
    }
    Ok(LawCount {
        dim_param: d,
        closure_dim: closure.dim(),
        trace_dim: base,
        n_laws: d - base,
        generations: closure.generations,
        truncated: closure.truncated,
        component_dims: closure.component_dims,
    })
}
