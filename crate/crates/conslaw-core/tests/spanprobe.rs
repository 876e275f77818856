//! Empirical functional-span probes: the measured rank of the sampled
//! gradient space must complement the law count (rank = D − #laws), match
//! the algebraic trace dimension, restrict correctly to single blocks and
//! interface overlaps, and saturate under the doubling protocol.

use conslaw_core::laws;
use conslaw_core::liealg;
use conslaw_core::models::{self, BlockSpec, LossKind};
use conslaw_core::rng::Rng;
use conslaw_core::spanprobe::{self, BlockSelector};

fn resnet2(inner: BlockSpec) -> BlockSpec {
    BlockSpec::Composition {
        blocks: vec![
            BlockSpec::Residual { inner: Box::new(inner.clone()) },
            BlockSpec::Residual { inner: Box::new(inner) },
        ],
    }
}

#[test]
fn whole_network_rank_complements_the_law_count() {
    let mut rng = Rng::seed_from(51);
    let cases = [
        BlockSpec::Relu2 { n: 3, m: 4, r: 5, bias: false },
        BlockSpec::Relu2 { n: 2, m: 3, r: 2, bias: true },
        BlockSpec::Linear2 { n: 1, m: 1, r: 2 },
        BlockSpec::SoftmaxClassifier { n: 4, m: 3 },
    ];
    for spec in cases {
        let d = models::param_dim(&spec);
        let n_laws = laws::catalog(&spec).len();
        let theta = laws::sample_admissible_theta(&spec, &mut rng);
        let est = spanprobe::empirical_span_dim(
            &spec,
            &theta,
            LossKind::Euclidean,
            spanprobe::default_n_samples(&spec),
            &mut rng,
            conslaw_core::numerics::DEFAULT_RANK_RTOL,
        )
        .unwrap();
        assert!(est.saturated, "{spec:?} did not saturate");
        assert_eq!(est.rank, d - n_laws, "{spec:?}");
        // The sampled space cannot exceed the algebraic envelope.
        let family = liealg::reparam_fields(&spec).unwrap();
        let closure = liealg::lie_closure(
            &family,
            liealg::DEFAULT_CLOSURE_RTOL,
            liealg::DEFAULT_MAX_GENERATIONS,
        )
        .unwrap();
        let trace = liealg::trace_dim(&closure, &theta, conslaw_core::numerics::DEFAULT_RANK_RTOL)
            .unwrap();
        assert_eq!(est.rank, trace.rank, "{spec:?}");
    }
}

#[test]
fn bilinear_point_span_undershoots_the_orbit() {
    // For purely bilinear factorizations the gradients at one point span
    // only the image of the factored differential, strictly inside the
    // orbit tangent: the distribution is non-involutive and only its
    // bracket closure reaches dimension D − #laws. This gap is the reason
    // the algebraic route is authoritative for counting.
    //
    // linear2: image of w ↦ (wV, wᵀU) has dimension nm.
    // attention: each (Q,K)/(V,O) pair factors through a dim×dim product
    // whose differential image has dimension dim² − (dim − d1)².
    let cases: Vec<(BlockSpec, usize)> = vec![
        (BlockSpec::Linear2 { n: 2, m: 3, r: 2 }, 2 * 3),
        (BlockSpec::Attention { n_tokens: 2, dim: 3, d1: 2, heads: 1 }, 2 * (3 * 3 - 1)),
    ];
    let mut rng = Rng::seed_from(59);
    for (spec, point_span) in cases {
        let d = models::param_dim(&spec);
        let n_laws = laws::catalog(&spec).len();
        let theta = laws::sample_admissible_theta(&spec, &mut rng);

        let est = spanprobe::empirical_span_dim(
            &spec,
            &theta,
            LossKind::Euclidean,
            spanprobe::default_n_samples(&spec),
            &mut rng,
            conslaw_core::numerics::DEFAULT_RANK_RTOL,
        )
        .unwrap();
        assert!(est.saturated, "{spec:?}");
        assert_eq!(est.rank, point_span, "{spec:?}: point span is the factored image");

        let family = liealg::reparam_fields(&spec).unwrap();
        let closure = liealg::lie_closure(
            &family,
            liealg::DEFAULT_CLOSURE_RTOL,
            liealg::DEFAULT_MAX_GENERATIONS,
        )
        .unwrap();
        let trace =
            liealg::trace_dim(&closure, &theta, conslaw_core::numerics::DEFAULT_RANK_RTOL)
                .unwrap();
        assert_eq!(trace.rank, d - n_laws, "{spec:?}: closure reaches the orbit tangent");
        assert!(est.rank < trace.rank, "{spec:?}");
    }
}

#[test]
fn deep_network_codimension_is_the_sum_of_block_law_counts() {
    let spec = resnet2(BlockSpec::Relu2 { n: 3, m: 3, r: 2, bias: false });
    let d = models::param_dim(&spec);
    let n_laws = laws::catalog(&spec).len();
    assert_eq!(n_laws, 4);
    for seed in 0..5 {
        let mut rng = Rng::seed_from(520 + seed);
        let theta = laws::sample_admissible_theta(&spec, &mut rng);
        let est = spanprobe::empirical_span_dim(
            &spec,
            &theta,
            LossKind::Euclidean,
            spanprobe::default_n_samples(&spec),
            &mut rng,
            conslaw_core::numerics::DEFAULT_RANK_RTOL,
        )
        .unwrap();
        assert!(est.saturated, "seed {seed}");
        assert_eq!(est.rank, d - n_laws, "seed {seed}");
    }
}

#[test]
fn isolated_block_probe_sees_only_that_block_laws() {
    // Freezing the rest of the net and perturbing its environment must not
    // create or destroy the block's own conserved directions.
    let inner = BlockSpec::Relu2 { n: 3, m: 3, r: 2, bias: false };
    let spec = resnet2(inner.clone());
    let block_dim = models::param_dim(&inner);
    let block_laws = laws::catalog(&inner).len();
    let mut rng = Rng::seed_from(53);
    let theta = laws::sample_admissible_theta(&spec, &mut rng);
    for index in 0..2 {
        let est = spanprobe::block_span_dim(
            &spec,
            &BlockSelector::Block { index },
            &theta,
            16,
            8 * block_dim,
            LossKind::Euclidean,
            &mut rng,
            conslaw_core::numerics::DEFAULT_RANK_RTOL,
        )
        .unwrap();
        assert!(est.saturated, "block {index}");
        assert_eq!(est.rank, block_dim - block_laws, "block {index}");
    }
}

#[test]
fn final_classifier_block_probe_matches_its_column_sums() {
    let spec = BlockSpec::Composition {
        blocks: vec![
            BlockSpec::Relu2 { n: 3, m: 2, r: 2, bias: false },
            BlockSpec::SoftmaxClassifier { n: 4, m: 3 },
        ],
    };
    let mut rng = Rng::seed_from(54);
    let theta = laws::sample_admissible_theta(&spec, &mut rng);
    let est = spanprobe::block_span_dim(
        &spec,
        &BlockSelector::Block { index: 1 },
        &theta,
        16,
        8 * 12,
        LossKind::KlCrossEntropy,
        &mut rng,
        conslaw_core::numerics::DEFAULT_RANK_RTOL,
    )
    .unwrap();
    assert!(est.saturated);
    assert_eq!(est.rank, 4 * 3 - 3);
}

#[test]
fn interface_overlap_probe_has_full_rank_when_taps_cover_the_window() {
    // Adjacent-block overlap (output tensor of block ℓ, input tensor of
    // block ℓ+1) in a two-stage convolutional residual net with n_u = n_v
    // = p: no conserved direction lives across the interface.
    let inner =
        BlockSpec::ConvRelu2 { c0: 2, c1: 2, c2: 2, p: 4, n_u: 4, n_v: 4, maps: None };
    let spec = resnet2(inner);
    let mut rng = Rng::seed_from(55);
    let theta = laws::sample_admissible_theta(&spec, &mut rng);
    let est = spanprobe::block_span_dim(
        &spec,
        &BlockSelector::Overlap { lower: 0 },
        &theta,
        16,
        8 * 32,
        LossKind::Euclidean,
        &mut rng,
        conslaw_core::numerics::DEFAULT_RANK_RTOL,
    )
    .unwrap();
    assert_eq!(est.rank, 32, "U⁰ (16) ⊕ V¹ (16) must fill");
    assert!(est.saturated);
}

#[test]
fn sign_vector_spans_for_the_scalar_and_generic_cases() {
    let mut rng = Rng::seed_from(56);
    // Scalar two-layer block: every sign vector is ±(sign u, −sign v)·w₁…
    // the sampled sign space is one-dimensional.
    let spec = BlockSpec::Linear2 { n: 1, m: 1, r: 1 };
    let theta = laws::sample_admissible_theta(&spec, &mut rng);
    let est = spanprobe::adam_sign_span_dim(&spec, &theta, 64, &mut rng, 1e-8).unwrap();
    assert_eq!(est.rank, 1);
    assert!(est.saturated);

    // Any wider/deeper factorization fills the whole parameter space: the
    // sign nonlinearity destroys every bilinear balance.
    for spec in [
        BlockSpec::Linear2 { n: 2, m: 2, r: 2 },
        BlockSpec::Linear2 { n: 1, m: 2, r: 1 },
        BlockSpec::Linear2 { n: 3, m: 2, r: 2 },
    ] {
        let d = models::param_dim(&spec);
        let theta = laws::sample_admissible_theta(&spec, &mut rng);
        let est =
            spanprobe::adam_sign_span_dim(&spec, &theta, 16 * d, &mut rng, 1e-8).unwrap();
        assert_eq!(est.rank, d, "{spec:?}");
        assert!(est.saturated, "{spec:?}");
    }
}

#[test]
fn two_block_scalar_chain_keeps_one_conserved_direction() {
    let theta = vec![2.0, 3.0, 5.0, 7.0];
    let mut rng = Rng::seed_from(57);
    let est = spanprobe::m1_example_span(&theta, 500, &mut rng).unwrap();
    assert_eq!(est.rank, 1);
    assert!(est.saturated);
    assert_eq!(est.n_samples, 1000);
}

#[test]
fn ranks_are_stable_under_further_doubling() {
    let spec = BlockSpec::Relu2 { n: 3, m: 4, r: 5, bias: false };
    let mut rng = Rng::seed_from(58);
    let theta = laws::sample_admissible_theta(&spec, &mut rng);
    let base = spanprobe::default_n_samples(&spec);
    let mut prev = None;
    for mult in [1usize, 2, 4] {
        let est = spanprobe::empirical_span_dim(
            &spec,
            &theta,
            LossKind::Euclidean,
            base * mult,
            &mut rng,
            conslaw_core::numerics::DEFAULT_RANK_RTOL,
        )
        .unwrap();
        if let Some(p) = prev {
            assert_eq!(est.rank, p, "rank moved at {mult}× nominal sampling");
        }
        prev = Some(est.rank);
        assert_eq!(est.n_samples, 2 * base * mult);
    }
}
