//! Discrete training loops: minibatch SGD with conservation-drift tracking
//! against the deterministic step-size² bound, the log-log slope fit that
//! exposes the τ² scaling, and sign descent with its segment-wise exact
//! balance.
//!
//! For a quadratic conserved quantity h and one SGD step θ⁺ = θ − τ·g the
//! expansion is exact: h(θ⁺) − h(θ) = −τ⟨∇h, g⟩ + (τ²/2)·gᵀ(∂²h)g, and the
//! first term vanishes because per-sample loss gradients lie in the span
//! that ∇h is orthogonal to. Telescoping gives the per-run bound
//! |h(θ_k) − h(θ₀)| ≤ (C_h·C_L/2)·Σ_{i<k} τ_i² with C_h an upper bound on
//! the law's (constant) Hessian norm and C_L the realized maximum of
//! ‖∇L_{Z_i}(θ_i)‖² — every run must satisfy it at every step.

use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use crate::error::Result;
use crate::invalid_input;
use crate::laws::{self, LawDescriptor, Probe};
use crate::models::{self, BlockSpec, Dataset, LossKind};
use crate::numerics;
use crate::rmath;
use crate::rng::Rng;
use crate::CoreError;

/// Step-size schedule τ_k.
#[derive(Clone, Debug, PartialEq)]
pub enum TauSchedule {
    /// τ_k = τ₀.
    Constant(f64),
    /// τ_k = τ₀ / (k + 1); Σ τ_k² converges, so the drift bound stays
    /// finite for arbitrarily long runs.
    Harmonic(f64),
    /// Arbitrary positive per-step values.
    Explicit(Vec<f64>),
}

impl TauSchedule {
    pub fn validate(&self, steps: usize) -> Result<()> {
        let ok = match self {
            TauSchedule::Constant(t) | TauSchedule::Harmonic(t) => t.is_finite() && *t > 0.0,
            TauSchedule::Explicit(ts) => {
                ts.len() >= steps && ts.iter().all(|t| t.is_finite() && *t > 0.0)
            }
        };
        if ok {
            Ok(())
        } else {
            Err(invalid_input!("step sizes must be positive, finite, and cover every step"))
        }
    }

    pub fn tau(&self, k: usize) -> f64 {
        match self {
            TauSchedule::Constant(t) => *t,
            TauSchedule::Harmonic(t) => t / (k as f64 + 1.0),
            TauSchedule::Explicit(ts) => ts[k],
        }
    }
}

/// Minibatch source. Batches are i.i.d. draws from a fixed synthetic
/// distribution, so runs are reproducible from a seed alone.
#[derive(Clone, Debug)]
pub enum Sampler {
    /// Standard-normal inputs labeled by a fixed teacher parameter vector
    /// (inputs are redrawn while the teacher's activation margin is below
    /// `margin_floor`, keeping targets stable under perturbation).
    Teacher { spec: BlockSpec, theta: Vec<f64>, batch: usize, margin_floor: f64 },
    /// The same fixed dataset every step (full-batch descent).
    Fixed(Dataset),
}

impl Sampler {
    /// Teacher sampler with the default margin floor of 1e−6.
    pub fn teacher(spec: BlockSpec, theta: Vec<f64>, batch: usize) -> Result<Self> {
        models::validate_spec(&spec)?;
        if theta.len() != models::param_dim(&spec) {
            return Err(invalid_input!("teacher parameters do not match the teacher spec"));
        }
        if batch == 0 {
            return Err(invalid_input!("batch size must be ≥ 1"));
        }
        Ok(Sampler::Teacher { spec, theta, batch, margin_floor: 1e-6 })
    }

    /// Draws the next minibatch.
    pub fn next_batch(&self, rng: &mut Rng) -> Result<Dataset> {
        match self {
            Sampler::Fixed(data) => {
                if data.is_empty() {
                    return Err(invalid_input!("fixed dataset is empty"));
                }
                Ok(data.clone())
            }
            Sampler::Teacher { spec, theta, batch, margin_floor } => {
                let din = models::in_dim(spec);
                let mut inputs = Vec::with_capacity(*batch);
                let mut targets = Vec::with_capacity(*batch);
                let mut misses = 0usize;
                while inputs.len() < *batch {
                    let x = rng.normal_vec(din);
                    if models::activation_margin(spec, theta, &x)? >= *margin_floor
                        || misses >= 200
                    {
                        targets.push(models::forward(spec, theta, &x)?);
                        inputs.push(x);
                        misses = 0;
                    } else {
                        misses += 1;
                    }
                }
                Dataset::new(inputs, targets)
            }
        }
    }
}

/// One SGD run's conservation record.
#[derive(Clone, Debug)]
pub struct RunRecord {
    /// Ids of the tracked laws.
    pub law_ids: Vec<String>,
    /// law_values[i][k]: law i at θ_k, k = 0..=steps.
    pub law_values: Vec<Vec<f64>>,
    /// drift[i][k] = |law_values[i][k] − law_values[i][0]|.
    pub drift: Vec<Vec<f64>>,
    /// bound[i][k] = (c_h[i]·c_l/2)·Σ_{j<k} τ_j²; nondecreasing in k.
    pub bound: Vec<Vec<f64>>,
    /// Ids of the tracked non-conserved probes.
    pub probe_ids: Vec<String>,
    /// probe_values[i][k]: probe i at θ_k.
    pub probe_values: Vec<Vec<f64>>,
    /// probe_drift[i][k] = |probe_values[i][k] − probe_values[i][0]|.
    pub probe_drift: Vec<Vec<f64>>,
    /// Minibatch loss L_{Z_k}(θ_k) before step k, k = 0..steps.
    pub loss: Vec<f64>,
    /// ‖∇L_{Z_k}(θ_k)‖² before step k.
    pub grad_sq: Vec<f64>,
    /// Realized step sizes τ_k.
    pub taus: Vec<f64>,
    /// Per-law Hessian norm bound C_h.
    pub c_h: Vec<f64>,
    /// Realized C_L = max_k ‖∇L_{Z_k}(θ_k)‖².
    pub c_l: f64,
    pub theta0: Vec<f64>,
    pub theta_final: Vec<f64>,
}

impl RunRecord {
    /// Drift of law `i` at the final step.
    pub fn final_drift(&self, i: usize) -> f64 {
        *self.drift[i].last().unwrap_or(&0.0)
    }

    /// Number of (law, step) pairs where the measured drift exceeds the
    /// deterministic bound. Zero for every conserved quadratic law.
    pub fn bound_violations(&self) -> usize {
        let mut n = 0;
        for (d, b) in self.drift.iter().zip(&self.bound) {
            for (dv, bv) in d.iter().zip(b) {
                if dv > bv {
                    n += 1;
                }
            }
        }
        n
    }
}

/// Runs minibatch SGD θ_{k+1} = θ_k − τ_k ∇L_{Z_k}(θ_k), recording the
/// tracked laws and probes at every iterate together with the deterministic
/// drift bound assembled from C_h and the realized C_L.
pub fn sgd_run(
    spec: &BlockSpec,
    theta0: &[f64],
    sampler: &Sampler,
    loss: LossKind,
    tau: &TauSchedule,
    steps: usize,
    tracked: &[LawDescriptor],
    probes: &[Probe],
    rng: &mut Rng,
) -> Result<RunRecord> {
    models::validate_spec(spec)?;
    tau.validate(steps)?;
    let d = models::param_dim(spec);
    if theta0.len() != d {
        return Err(invalid_input!("theta has {} entries, spec needs {d}", theta0.len()));
    }

    let mut rec = RunRecord {
        law_ids: tracked.iter().map(|l| l.id.clone()).collect(),
        law_values: vec![Vec::with_capacity(steps + 1); tracked.len()],
        drift: vec![Vec::with_capacity(steps + 1); tracked.len()],
        bound: vec![Vec::with_capacity(steps + 1); tracked.len()],
        probe_ids: probes.iter().map(|p| p.id.clone()).collect(),
        probe_values: vec![Vec::with_capacity(steps + 1); probes.len()],
        probe_drift: vec![Vec::with_capacity(steps + 1); probes.len()],
        loss: Vec::with_capacity(steps),
        grad_sq: Vec::with_capacity(steps),
        taus: Vec::with_capacity(steps),
        c_h: tracked.iter().map(laws::hessian_norm).collect(),
        c_l: 0.0,
        theta0: theta0.to_vec(),
        theta_final: Vec::new(),
    };

    let mut theta = theta0.to_vec();
    let record_point = |rec: &mut RunRecord, theta: &[f64]| {
        for (i, law) in tracked.iter().enumerate() {
            rec.law_values[i].push(laws::eval(law, theta));
        }
        for (i, probe) in probes.iter().enumerate() {
            rec.probe_values[i].push(probe.eval(theta));
        }
    };
    record_point(&mut rec, &theta);

    for k in 0..steps {
        let batch = sampler.next_batch(rng)?;
        let (lval, g) = models::loss_value_grad(spec, &theta, &batch, loss)?;
        let tk = tau.tau(k);
        rec.loss.push(lval);
        rec.grad_sq.push(numerics::dot(&g, &g));
        rec.taus.push(tk);
        for (ti, gi) in theta.iter_mut().zip(&g) {
            *ti -= tk * gi;
        }
        if theta.iter().any(|v| !v.is_finite()) {
            return Err(CoreError::NonFinite {
                context: String::from("SGD iterate"),
                last_finite_t: Some(k as f64),
            });
        }
        record_point(&mut rec, &theta);
    }
    rec.theta_final = theta;
    rec.c_l = rec.grad_sq.iter().fold(0.0_f64, |a, b| a.max(*b));

    // Assemble drift and bound series now that the realized C_L is known.
    let mut tau_sq_prefix = Vec::with_capacity(steps + 1);
    let mut acc = 0.0;
    tau_sq_prefix.push(0.0);
    for t in &rec.taus {
        acc += t * t;
        tau_sq_prefix.push(acc);
    }
    for i in 0..tracked.len() {
        let v0 = rec.law_values[i][0];
        let scale = rec.c_h[i] * rec.c_l / 2.0;
        for (k, v) in rec.law_values[i].iter().enumerate() {
            rec.drift[i].push(rmath::abs(v - v0));
            rec.bound[i].push(scale * tau_sq_prefix[k]);
        }
    }
    for i in 0..probes.len() {
        let v0 = rec.probe_values[i][0];
        for v in &rec.probe_values[i] {
            rec.probe_drift[i].push(rmath::abs(v - v0));
        }
    }
    Ok(rec)
}

/// A grid of runs over step sizes and seeds.
#[derive(Clone, Debug, Default)]
pub struct SweepResult {
    pub entries: Vec<SweepEntry>,
}

#[derive(Clone, Debug)]
pub struct SweepEntry {
    /// Nominal step size of the run (τ₀ for decaying schedules).
    pub tau0: f64,
    pub seed: u64,
    pub record: RunRecord,
}

impl SweepResult {
    /// Total bound violations across all entries (must be zero).
    pub fn bound_violations(&self) -> usize {
        self.entries.iter().map(|e| e.record.bound_violations()).sum()
    }
}

/// A fitted log-log power law drift ≈ e^{intercept}·τ^{slope}.
#[derive(Clone, Debug)]
pub struct SlopeFit {
    pub slope: f64,
    pub intercept: f64,
    /// Distinct step sizes that entered the fit.
    pub n_taus: usize,
    /// Step sizes excluded because their mean drift was exactly zero.
    pub excluded: Vec<f64>,
}

/// Fits the exponent of mean drift vs step size at a fixed step count:
/// groups the sweep's entries by τ, averages the drift of the series named
/// `series_id` (law or probe) at step `at_step` over seeds, and solves the
/// least-squares line through (log τ, log mean drift). Requires ≥ 4 step
/// sizes with ≥ 5 seeds each; zero-drift step sizes are excluded (their log
/// is undefined), and at least two must survive.
pub fn slope_fit(sweep: &SweepResult, series_id: &str, at_step: usize) -> Result<SlopeFit> {
    let mut taus: Vec<f64> = Vec::new();
    for e in &sweep.entries {
        if !taus.iter().any(|t| *t == e.tau0) {
            taus.push(e.tau0);
        }
    }
    taus.sort_unstable_by(|a, b| a.partial_cmp(b).expect("finite taus"));
    if taus.len() < 4 {
        return Err(invalid_input!("slope fit needs ≥ 4 distinct step sizes, got {}", taus.len()));
    }

    let series_at = |rec: &RunRecord| -> Result<f64> {
        if let Some(i) = rec.law_ids.iter().position(|id| id == series_id) {
            rec.drift[i]
                .get(at_step)
                .copied()
                .ok_or_else(|| invalid_input!("step {at_step} out of range"))
        } else if let Some(i) = rec.probe_ids.iter().position(|id| id == series_id) {
            rec.probe_drift[i]
                .get(at_step)
                .copied()
                .ok_or_else(|| invalid_input!("step {at_step} out of range"))
        } else {
            Err(invalid_input!("no tracked series named {series_id}"))
        }
    };

    let mut log_tau = Vec::new();
    let mut log_drift = Vec::new();
    let mut excluded = Vec::new();
    for &t in &taus {
        let mut sum = 0.0;
        let mut n = 0usize;
        for e in sweep.entries.iter().filter(|e| e.tau0 == t) {
            sum += series_at(&e.record)?;
            n += 1;
        }
        if n < 5 {
            return Err(invalid_input!("slope fit needs ≥ 5 seeds per step size, τ={t} has {n}"));
        }
        let mean = sum / n as f64;
        if mean == 0.0 {
            excluded.push(t);
        } else {
            log_tau.push(rmath::ln(t));
            log_drift.push(rmath::ln(mean));
        }
    }
    if log_tau.len() < 2 {
        return Err(invalid_input!("fewer than two step sizes have nonzero drift"));
    }

    let n = log_tau.len() as f64;
    let mx = log_tau.iter().sum::<f64>() / n;
    let my = log_drift.iter().sum::<f64>() / n;
    let mut sxx = 0.0;
    let mut sxy = 0.0;
    for (x, y) in log_tau.iter().zip(&log_drift) {
        sxx += (x - mx) * (x - mx);
        sxy += (x - mx) * (y - my);
    }
    let slope = sxy / sxx;
    Ok(SlopeFit { slope, intercept: my - slope * mx, n_taus: log_tau.len(), excluded })
}

/// One sign-descent run's record.
#[derive(Clone, Debug)]
pub struct AdamRunRecord {
    /// Id of the tracked sign-descent law, when the shape has one.
    pub law_id: Option<String>,
    /// Law value at θ_k, k = 0..=steps (empty when no law is tracked).
    pub law_values: Vec<f64>,
    /// |law(θ_k) − law(θ₀)|.
    pub drift: Vec<f64>,
    /// Per-step gradient sign patterns (−1, 0, +1), one row per step.
    pub signs: Vec<Vec<i8>>,
    /// Steps k ≥ 1 whose sign pattern differs from step k − 1: the
    /// boundaries of the piecewise-smooth segments.
    pub segment_starts: Vec<usize>,
    /// Minibatch loss before each step.
    pub loss: Vec<f64>,
    pub eta: f64,
    pub theta0: Vec<f64>,
    pub theta_final: Vec<f64>,
}

/// Runs sign descent θ_{k+1} = θ_k − η·sign(∇L_{Z_k}(θ_k)) with the
/// convention sign(0) = 0 (a zero coordinate takes no update, matching the
/// flow's fixed point). For the 1×1×1 two-layer blocks the record tracks
/// |u| − |v|, whose per-step change is bounded by 2η by construction and
/// which is constant to rounding within a sign segment.
pub fn adam_discrete_run(
    spec: &BlockSpec,
    theta0: &[f64],
    sampler: &Sampler,
    loss: LossKind,
    eta: f64,
    steps: usize,
    rng: &mut Rng,
) -> Result<AdamRunRecord> {
    models::validate_spec(spec)?;
    if !(eta > 0.0) || !eta.is_finite() {
        return Err(invalid_input!("step size must be positive and finite"));
    }
    let d = models::param_dim(spec);
    if theta0.len() != d {
        return Err(invalid_input!("theta has {} entries, spec needs {d}", theta0.len()));
    }
    let law = laws::adam_abs_diff_law(spec).ok();
    let mut rec = AdamRunRecord {
        law_id: law.as_ref().map(|l| l.id.clone()),
        law_values: Vec::new(),
        drift: Vec::new(),
        signs: Vec::with_capacity(steps),
        segment_starts: Vec::new(),
        loss: Vec::with_capacity(steps),
        eta,
        theta0: theta0.to_vec(),
        theta_final: Vec::new(),
    };

    let mut theta = theta0.to_vec();
    if let Some(law) = &law {
        rec.law_values.push(laws::eval(law, &theta));
    }
    for k in 0..steps {
        let batch = sampler.next_batch(rng)?;
        let (lval, g) = models::loss_value_grad(spec, &theta, &batch, loss)?;
        rec.loss.push(lval);
        let pattern: Vec<i8> = g.iter().map(|v| rmath::sign0(*v) as i8).collect();
        if k > 0 && pattern != rec.signs[k - 1] {
            rec.segment_starts.push(k);
        }
        for (ti, si) in theta.iter_mut().zip(&pattern) {
            *ti -= eta * f64::from(*si);
        }
        rec.signs.push(pattern);
        if theta.iter().any(|v| !v.is_finite()) {
            return Err(CoreError::NonFinite {
                context: String::from("sign-descent iterate"),
                last_finite_t: Some(k as f64),
            });
        }
        if let Some(law) = &law {
            rec.law_values.push(laws::eval(law, &theta));
        }
    }
    rec.theta_final = theta;
    if let Some(&v0) = rec.law_values.first() {
        rec.drift = rec.law_values.iter().map(|v| rmath::abs(v - v0)).collect();
    }
    Ok(rec)
}
