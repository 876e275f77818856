//! Property tests for the numerical kernels, cross-checked against
//! nalgebra's factorizations as an independent implementation.

use conslaw_core::numerics::{self, Mat};
use conslaw_core::rng::Rng;
use proptest::prelude::*;

fn random_mat(rows: usize, cols: usize, seed: u64, scale: f64) -> Mat {
    let mut rng = Rng::seed_from(seed);
    Mat::from_fn(rows, cols, |_, _| scale * rng.normal())
}

fn to_na(m: &Mat) -> nalgebra::DMatrix<f64> {
    nalgebra::DMatrix::from_fn(m.rows, m.cols, |i, j| m.get(i, j))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn singular_values_match_nalgebra(
        rows in 1usize..7,
        cols in 1usize..7,
        seed in any::<u64>(),
    ) {
        let m = random_mat(rows, cols, seed, 3.0);
        let mine = numerics::singular_values(&m);
        let mut theirs: Vec<f64> = to_na(&m).svd(false, false).singular_values.iter().copied().collect();
        theirs.sort_by(|a, b| b.partial_cmp(a).unwrap());
        prop_assert_eq!(mine.len(), theirs.len());
        let top = theirs.first().copied().unwrap_or(0.0).max(1.0);
        for (a, b) in mine.iter().zip(&theirs) {
            prop_assert!((a - b).abs() <= 1e-10 * top, "{a} vs {b}");
        }
    }

    #[test]
    fn singular_values_scale_covariantly(
        rows in 1usize..6,
        cols in 1usize..6,
        seed in any::<u64>(),
        c in -8.0f64..8.0,
    ) {
        let m = random_mat(rows, cols, seed, 1.0);
        let mut scaled = m.clone();
        scaled.scale(c);
        let sv = numerics::singular_values(&m);
        let sv_scaled = numerics::singular_values(&scaled);
        for (a, b) in sv.iter().zip(&sv_scaled) {
            prop_assert!((c.abs() * a - b).abs() <= 1e-12 * (1.0 + c.abs() * a));
        }
    }

    #[test]
    fn extended_bases_stay_orthonormal(
        dim in 2usize..12,
        n_vecs in 1usize..16,
        seed in any::<u64>(),
    ) {
        let mut rng = Rng::seed_from(seed);
        let mut basis: Vec<Vec<f64>> = Vec::new();
        for _ in 0..n_vecs {
            let v = rng.normal_vec(dim);
            numerics::extend_basis(&mut basis, &v, 1e-10).unwrap();
        }
        prop_assert!(basis.len() <= dim);
        for i in 0..basis.len() {
            for j in 0..basis.len() {
                let want = if i == j { 1.0 } else { 0.0 };
                let got = numerics::dot(&basis[i], &basis[j]);
                prop_assert!((got - want).abs() <= 1e-10, "gram[{i}][{j}] = {got}");
            }
        }
    }

    #[test]
    fn spanned_vectors_do_not_extend(
        dim in 2usize..10,
        seed in any::<u64>(),
    ) {
        let mut rng = Rng::seed_from(seed);
        let mut basis: Vec<Vec<f64>> = Vec::new();
        let a = rng.normal_vec(dim);
        let b = rng.normal_vec(dim);
        numerics::extend_basis(&mut basis, &a, 1e-10).unwrap();
        numerics::extend_basis(&mut basis, &b, 1e-10).unwrap();
        let n = basis.len();
        // A random combination of a and b lies in the span already.
        let (ca, cb) = (rng.normal(), rng.normal());
        let combo: Vec<f64> = a.iter().zip(&b).map(|(x, y)| ca * x + cb * y).collect();
        let grew = numerics::extend_basis(&mut basis, &combo, 1e-8).unwrap();
        prop_assert!(!grew);
        prop_assert_eq!(basis.len(), n);
    }

    #[test]
    fn fd_jacobian_reproduces_linear_maps(
        rows in 1usize..6,
        cols in 1usize..6,
        seed in any::<u64>(),
    ) {
        // Entries bounded by 10 keep the difference quotient well scaled.
        let b = random_mat(rows, cols, seed, 3.0);
        let mut rng = Rng::seed_from(seed ^ 0xABCD);
        let x = rng.normal_vec(cols);
        let jac = numerics::fd_jacobian(
            |p| Ok(b.matvec(p)),
            &x,
            numerics::DEFAULT_FD_STEP,
        )
        .unwrap();
        for i in 0..rows {
            for j in 0..cols {
                prop_assert!((jac.get(i, j) - b.get(i, j)).abs() <= 1e-8);
            }
        }
    }

    #[test]
    fn rank_detects_planted_factorization(
        n in 2usize..7,
        m in 2usize..7,
        seed in any::<u64>(),
    ) {
        let r = 1 + (seed as usize) % n.min(m);
        let a = random_mat(n, r, seed, 1.0);
        let b = random_mat(r, m, seed ^ 0x5555, 1.0);
        let prod = a.matmul(&b);
        let est = numerics::rank_of(&prod, 1e-10).unwrap();
        prop_assert_eq!(est.rank, r, "planted rank {} not recovered", r);
    }
}

#[test]
fn expm_matches_symmetric_eigen_oracle() {
    for seed in 0..20u64 {
        let mut rng = Rng::seed_from(seed);
        let n = 2 + (seed as usize) % 5;
        let mut a = Mat::zeros(n, n);
        for i in 0..n {
            for j in 0..=i {
                let v = rng.normal();
                a.set(i, j, v);
                a.set(j, i, v);
            }
        }
        let mine = numerics::expm(&a);
        let eig = nalgebra::SymmetricEigen::new(to_na(&a));
        let exp_vals = nalgebra::DMatrix::from_diagonal(&eig.eigenvalues.map(f64::exp));
        let oracle = &eig.eigenvectors * exp_vals * eig.eigenvectors.transpose();
        let scale = oracle.amax().max(1.0);
        for i in 0..n {
            for j in 0..n {
                assert!(
                    (mine.get(i, j) - oracle[(i, j)]).abs() <= 1e-11 * scale,
                    "seed {seed} entry ({i},{j}): {} vs {}",
                    mine.get(i, j),
                    oracle[(i, j)]
                );
            }
        }
    }
}

#[test]
fn jacobi_handles_graded_singular_values() {
    // Diagonal with singular values spanning 12 orders of magnitude: the
    // one-sided rotations must recover them all to high relative accuracy.
    let vals = [1e6, 1.0, 1e-3, 1e-6];
    let mut a = Mat::zeros(4, 4);
    for (i, v) in vals.iter().enumerate() {
        a.set(i, i, *v);
    }
    // Mix with orthogonal rotations on both sides so nothing is trivially
    // diagonal.
    let rot = |n: usize, i: usize, j: usize, t: f64| -> Mat {
        let mut q = Mat::identity(n);
        q.set(i, i, t.cos());
        q.set(j, j, t.cos());
        q.set(i, j, -t.sin());
        q.set(j, i, t.sin());
        q
    };
    let left = rot(4, 0, 2, 0.7).matmul(&rot(4, 1, 3, -0.3));
    let right = rot(4, 0, 1, 1.1).matmul(&rot(4, 2, 3, 0.5));
    let m = left.matmul(&a).matmul(&right);
    let sv = numerics::singular_values(&m);
    for (got, want) in sv.iter().zip(&vals) {
        assert!(
            ((got - want) / want).abs() < 1e-10,
            "singular value {want}: got {got}"
        );
    }
}
