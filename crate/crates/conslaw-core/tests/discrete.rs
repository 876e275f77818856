//! Discrete-time verification: the exact quadratic one-step identity, the
//! telescoped deterministic bound under constant and decaying steps, the
//! τ² / τ scaling split between laws and probes, and sign descent against
//! its continuous-time limit.

use conslaw_core::discrete::{self, Sampler, SweepEntry, SweepResult, TauSchedule};
use conslaw_core::flows;
use conslaw_core::laws;
use conslaw_core::models::{self, BlockSpec, Dataset, LossKind};
use conslaw_core::rng::Rng;

fn fixed_smooth_dataset(
    spec: &BlockSpec,
    theta: &[f64],
    batch: usize,
    noise: f64,
    margin_floor: f64,
    rng: &mut Rng,
) -> Dataset {
    let mut inputs = Vec::new();
    let mut targets = Vec::new();
    while inputs.len() < batch {
        let x = rng.normal_vec(models::in_dim(spec));
        if models::activation_margin(spec, theta, &x).unwrap() < margin_floor {
            continue;
        }
        let mut y = models::forward(spec, theta, &x).unwrap();
        for v in y.iter_mut() {
            *v += noise * rng.normal();
        }
        targets.push(y);
        inputs.push(x);
    }
    Dataset::new(inputs, targets).unwrap()
}

#[test]
fn one_step_drift_is_the_exact_curvature_term() {
    // For a quadratic conserved h the first-order term vanishes
    // identically, so h(θ − τg) − h(θ) = (τ²/2)·gᵀHg with no remainder.
    let spec = BlockSpec::Relu2 { n: 2, m: 3, r: 2, bias: true };
    // Quadratic h has no remainder past τ², so τ need not be small; a large
    // step keeps the curvature term far above the rounding floor of the law
    // values. The quadform is indefinite and can cancel for unlucky batches,
    // so redraw the data until every law's term is resolvable.
    let tau = 0.1;
    let cat = laws::catalog(&spec);
    for seed in 0..20 {
        let mut rng = Rng::seed_from(7100 + seed);
        let theta0 = laws::sample_admissible_theta(&spec, &mut rng);
        let (data, g0) = loop {
            let data = fixed_smooth_dataset(&spec, &theta0, 4, 3.0, 1e-2, &mut rng);
            let g = models::loss_grad(&spec, &theta0, &data, LossKind::Euclidean).unwrap();
            if cat.iter().all(|law| laws::hess_quadform(law, &g).abs() >= 1e-2) {
                break (data, g);
            }
        };
        let rec = discrete::sgd_run(
            &spec,
            &theta0,
            &Sampler::Fixed(data),
            LossKind::Euclidean,
            &TauSchedule::Constant(tau),
            1,
            &cat,
            &[],
            &mut rng,
        )
        .unwrap();
        for (i, law) in cat.iter().enumerate() {
            let measured = rec.law_values[i][1] - rec.law_values[i][0];
            let predicted = 0.5 * tau * tau * laws::hess_quadform(law, &g0);
            assert!(
                (measured - predicted).abs() <= 1e-10 * predicted.abs().max(1e-12),
                "seed {seed} law {}: measured {measured:.17e} predicted {predicted:.17e}",
                law.id
            );
        }
    }
}

#[test]
fn telescoped_bound_holds_under_harmonic_steps() {
    let spec = BlockSpec::Relu2 { n: 2, m: 3, r: 2, bias: true };
    let mut rng = Rng::seed_from(72);
    let theta0 = laws::sample_admissible_theta(&spec, &mut rng);
    let tau0 = 5e-2;
    let steps = 200;
    let cat = laws::catalog(&spec);
    let sampler = Sampler::teacher(spec.clone(), theta0.clone(), 4).unwrap();
    // Push the start away from the teacher so gradients are nonzero.
    let start: Vec<f64> = theta0.iter().map(|v| v * 1.5 + 0.1).collect();
    let rec = discrete::sgd_run(
        &spec,
        &start,
        &sampler,
        LossKind::Euclidean,
        &TauSchedule::Harmonic(tau0),
        steps,
        &cat,
        &[],
        &mut rng,
    )
    .unwrap();
    assert_eq!(rec.bound_violations(), 0);

    // The recorded bound matches the partial-sum oracle and stays below
    // the Basel-series ceiling.
    let ceiling = rec.c_h[0] * rec.c_l / 2.0 * tau0 * tau0 * core::f64::consts::PI.powi(2) / 6.0;
    let mut prefix = 0.0;
    for k in 0..=steps {
        if k > 0 {
            let t = tau0 / k as f64;
            prefix += t * t;
        }
        for i in 0..cat.len() {
            let want = rec.c_h[i] * rec.c_l / 2.0 * prefix;
            let got = rec.bound[i][k];
            assert!(
                (got - want).abs() <= 1e-12 * want.max(1e-300),
                "law {i} step {k}: bound {got} oracle {want}"
            );
            assert!(got <= ceiling * (1.0 + 1e-12), "step {k}: {got} > ceiling {ceiling}");
        }
    }
    // Nondecreasing in k.
    for row in &rec.bound {
        for w in row.windows(2) {
            assert!(w[1] >= w[0]);
        }
    }
}

#[test]
fn drift_scales_as_tau_squared_for_laws_and_tau_for_probes() {
    // One-block sweep exercising the slope machinery end to end: resampled
    // minibatches, repeated seeds, log-log fit at the final step.
    let spec = BlockSpec::Relu2 { n: 2, m: 3, r: 2, bias: false };
    let cat = laws::catalog(&spec);
    let probe = laws::probe_first_unit(&spec);
    // Keep the loss curvature small (weights ~0.4) so fifty steps at the
    // largest tau leave the gradient essentially unchanged; otherwise the
    // per-step curvature term decays along the run and bends the slope.
    let mut seed_rng = Rng::seed_from(73);
    let teacher_theta: Vec<f64> = laws::sample_admissible_theta(&spec, &mut seed_rng)
        .iter()
        .map(|v| v * 0.4)
        .collect();
    let start: Vec<f64> = teacher_theta.iter().map(|v| v * 1.5 + 0.02).collect();
    let sampler = Sampler::teacher(spec.clone(), teacher_theta, 8).unwrap();
    let mut entries = Vec::new();
    for &tau0 in &[1e-3, 2e-3, 3e-3, 5e-3] {
        for seed in 0..6 {
            let mut rng = Rng::seed_from(7400 + seed);
            let record = discrete::sgd_run(
                &spec,
                &start,
                &sampler,
                LossKind::Euclidean,
                &TauSchedule::Constant(tau0),
                50,
                &cat,
                core::slice::from_ref(&probe),
                &mut rng,
            )
            .unwrap();
            entries.push(SweepEntry { tau0, seed, record });
        }
    }
    let sweep = SweepResult { entries };
    assert_eq!(sweep.bound_violations(), 0);
    for law in &cat {
        let fit = discrete::slope_fit(&sweep, &law.id, 50).unwrap();
        assert!(
            (1.7..=2.3).contains(&fit.slope),
            "{}: slope {:.3}",
            law.id,
            fit.slope
        );
    }
    let fit = discrete::slope_fit(&sweep, &probe.id, 50).unwrap();
    assert!((0.8..=1.2).contains(&fit.slope), "probe slope {:.3}", fit.slope);
}

#[test]
fn sign_descent_matches_its_continuous_limit() {
    // L = ½(uv)² from (2,1): both gradients stay positive on [0, T], so
    // discrete sign descent reproduces the unit-rate flow exactly.
    let spec = BlockSpec::Linear2 { n: 1, m: 1, r: 1 };
    let data = Dataset::new(vec![vec![1.0]], vec![vec![0.0]]).unwrap();
    let eta = 1e-3;
    let steps = 500;
    let mut rng = Rng::seed_from(75);
    let rec = discrete::adam_discrete_run(
        &spec,
        &[2.0, 1.0],
        &Sampler::Fixed(data.clone()),
        LossKind::Euclidean,
        eta,
        steps,
        &mut rng,
    )
    .unwrap();
    let flow = flows::integrate_adam_flow(
        &spec,
        &[2.0, 1.0],
        &data,
        LossKind::Euclidean,
        eta * steps as f64,
        eta / 10.0,
    )
    .unwrap();
    assert!(flow.halt.is_none());
    let flow_final = flow.states.last().unwrap();
    for (a, b) in rec.theta_final.iter().zip(flow_final) {
        assert!((a - b).abs() <= 1e-12, "discrete {a} vs flow {b}");
    }
    assert!(rec.segment_starts.is_empty(), "unexpected sign events {:?}", rec.segment_starts);
    for v in &rec.law_values {
        assert!((v - 1.0).abs() <= 1e-13);
    }
}

#[test]
fn sign_descent_law_is_segmentwise_constant_and_2eta_lipschitz() {
    // A longer run that walks v through zero: the law is constant to
    // rounding inside each sign segment and moves by at most 2η per step
    // globally.
    let spec = BlockSpec::Linear2 { n: 1, m: 1, r: 1 };
    let data = Dataset::new(vec![vec![1.0]], vec![vec![0.0]]).unwrap();
    let eta = 1e-3;
    let steps = 1500;
    let mut rng = Rng::seed_from(76);
    let rec = discrete::adam_discrete_run(
        &spec,
        &[2.0, 1.0],
        &Sampler::Fixed(data),
        LossKind::Euclidean,
        eta,
        steps,
        &mut rng,
    )
    .unwrap();
    assert!(!rec.segment_starts.is_empty(), "expected a sign event near step 1000");
    for w in rec.law_values.windows(2) {
        assert!((w[1] - w[0]).abs() <= 2.0 * eta + 1e-12);
    }
    // Segment-wise constancy: between consecutive boundaries the law sits
    // at one value up to accumulated rounding.
    let mut boundaries = vec![0usize];
    boundaries.extend_from_slice(&rec.segment_starts);
    boundaries.push(steps);
    for seg in boundaries.windows(2) {
        let (lo, hi) = (seg[0], seg[1]);
        let v0 = rec.law_values[lo];
        for k in lo..hi {
            assert!(
                (rec.law_values[k] - v0).abs() <= 1e-12,
                "law moved inside segment [{lo},{hi}) at {k}"
            );
        }
    }
}

#[test]
fn teacher_sampler_resamples_fresh_batches() {
    let spec = BlockSpec::Relu2 { n: 2, m: 2, r: 2, bias: false };
    let mut rng = Rng::seed_from(77);
    let theta = laws::sample_admissible_theta(&spec, &mut rng);
    let sampler = Sampler::teacher(spec.clone(), theta.clone(), 5).unwrap();
    let a = sampler.next_batch(&mut rng).unwrap();
    let b = sampler.next_batch(&mut rng).unwrap();
    assert_eq!(a.len(), 5);
    assert_eq!(b.len(), 5);
    assert_ne!(a.inputs, b.inputs, "independent draws must differ");
    // Teacher targets are exact forward outputs.
    for (x, y) in a.inputs.iter().zip(&a.targets) {
        assert_eq!(models::forward(&spec, &theta, x).unwrap(), *y);
    }
}
