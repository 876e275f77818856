//! Sign-descent sweep: a grid over step sizes η and seeds. For the 1×1×1
//! two-layer shape the tracked |u| − |v| moves at most 2η per step and is
//! constant to rounding within each flagged smooth segment; the report
//! counts violations of both properties.

use std::path::PathBuf;

use clap::Args;
use serde::{Deserialize, Serialize};

use conslaw_core::discrete::{self, AdamRunRecord, Sampler};
use conslaw_core::laws;
use conslaw_core::models::{BlockSpec, Dataset, LossKind};
use conslaw_core::rng::Rng;

use crate::artifact::{cell, RunDir};
use crate::cmd::Common;
use crate::config;
use crate::error::{CliError, Result};
use crate::recipes;

#[derive(Args, Debug)]
pub struct AdamSweepArgs {
    #[command(flatten)]
    pub common: Common,
    /// Steps per run
    #[arg(long)]
    pub steps: Option<usize>,
    /// Seeds per step size
    #[arg(long)]
    pub n_seeds: Option<u64>,
}

#[derive(Serialize, Deserialize, Clone)]
pub struct FixedData {
    pub inputs: Vec<Vec<f64>>,
    pub targets: Vec<Vec<f64>>,
}

#[derive(Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AdamSweepConfig {
    #[serde(skip_serializing)]
    pub seed: Option<u64>,
    #[serde(skip_serializing)]
    pub out_dir: Option<PathBuf>,
    pub spec: Option<BlockSpec>,
    pub etas: Vec<f64>,
    pub steps: usize,
    pub n_seeds: u64,
    pub batch: usize,
    pub teacher_scale: f64,
    /// Full-batch descent on this dataset instead of teacher minibatches.
    pub fixed_data: Option<FixedData>,
    pub loss: LossKind,
    pub params: Option<serde_json::Value>,
}

impl Default for AdamSweepConfig {
    fn default() -> Self {
        AdamSweepConfig {
            seed: None,
            out_dir: None,
            spec: None,
            etas: vec![1e-3],
            steps: 500,
            n_seeds: 1,
            batch: 8,
            teacher_scale: 1.0,
            fixed_data: None,
            loss: LossKind::Euclidean,
            params: None,
        }
    }
}

#[derive(Serialize)]
struct AdamRunReport {
    eta: f64,
    seed: u64,
    law_id: Option<String>,
    n_segments: usize,
    max_step_change: f64,
    per_step_bound: f64,
    step_bound_violations: usize,
    max_within_segment_drift: f64,
}

#[derive(Serialize)]
struct AdamSweepReport {
    runs: Vec<AdamRunReport>,
    total_step_bound_violations: usize,
}

/// Largest |law(θ_k) − law(θ_a)| with a ranging over segment starts —
/// drift measured against the segment entry point, as the piecewise
/// analysis prescribes.
fn segment_drift(rec: &AdamRunRecord, steps: usize) -> f64 {
    if rec.law_values.is_empty() {
        return 0.0;
    }
    let mut boundaries = vec![0usize];
    boundaries.extend_from_slice(&rec.segment_starts);
    boundaries.push(steps);
    let mut worst = 0.0_f64;
    for seg in boundaries.windows(2) {
        let v0 = rec.law_values[seg[0]];
        for k in seg[0]..seg[1] {
            worst = worst.max((rec.law_values[k] - v0).abs());
        }
    }
    worst
}

pub fn run(args: &AdamSweepArgs) -> Result<()> {
    let mut cfg: AdamSweepConfig = config::load(args.common.config.as_deref())?;
    if let Some(v) = args.steps {
        cfg.steps = v;
    }
    if let Some(v) = args.n_seeds {
        cfg.n_seeds = v;
    }
    let seed = config::resolve_seed(args.common.seed, cfg.seed)?;
    let out = config::resolve_out(args.common.out.as_deref(), cfg.out_dir.as_deref());
    let spec = recipes::require_spec(cfg.spec.clone(), "adam-sweep")?;
    if cfg.etas.is_empty() {
        return Err(CliError::Config(String::from("etas must be nonempty")));
    }

    let run_dir = RunDir::create(&out, "adam-sweep", seed, &cfg)?;
    let mut seed_rng = Rng::seed_from(seed);
    let theta0 = recipes::resolve_theta(&spec, None, cfg.params.as_ref(), || {
        recipes::theta_with_visible_laws(&spec, &mut seed_rng)
    })?;
    let sampler = match &cfg.fixed_data {
        Some(fd) => Sampler::Fixed(Dataset::new(fd.inputs.clone(), fd.targets.clone())?),
        None => {
            let teacher: Vec<f64> = laws::sample_admissible_theta(&spec, &mut seed_rng)
                .iter()
                .map(|v| v * cfg.teacher_scale)
                .collect();
            Sampler::teacher(spec.clone(), teacher, cfg.batch)?
        }
    };

    let mut tasks: Vec<(f64, u64)> = Vec::new();
    for &eta in &cfg.etas {
        for sj in 0..cfg.n_seeds {
            tasks.push((eta, sj));
        }
    }
    let records = recipes::run_indexed(tasks.len(), |i| {
        let (eta, sj) = tasks[i];
        let mut rng = Rng::seed_from(seed + 100 + sj);
        let rec =
            discrete::adam_discrete_run(&spec, &theta0, &sampler, cfg.loss, eta, cfg.steps, &mut rng)?;
        Ok((eta, sj, rec))
    })?;

    let mut rows = Vec::new();
    let mut run_reports = Vec::new();
    let mut total_violations = 0usize;
    for (eta, sj, rec) in &records {
        let tracked = !rec.law_values.is_empty();
        for k in 0..=cfg.steps {
            let is_boundary = rec.segment_starts.binary_search(&k).is_ok();
            rows.push(vec![
                cell(*eta),
                sj.to_string(),
                k.to_string(),
                if k < cfg.steps { cell(rec.loss[k]) } else { String::new() },
                rec.law_id.clone().unwrap_or_default(),
                if tracked { cell(rec.law_values[k]) } else { String::new() },
                if tracked { cell(rec.drift[k]) } else { String::new() },
                u8::from(is_boundary).to_string(),
            ]);
        }
        let bound = 2.0 * eta;
        let mut max_step_change = 0.0_f64;
        let mut violations = 0usize;
        for w in rec.law_values.windows(2) {
            let dv = (w[1] - w[0]).abs();
            max_step_change = max_step_change.max(dv);
            if dv > bound + 1e-12 {
                violations += 1;
            }
        }
        total_violations += violations;
        run_reports.push(AdamRunReport {
            eta: *eta,
            seed: *sj,
            law_id: rec.law_id.clone(),
            n_segments: rec.segment_starts.len() + 1,
            max_step_change,
            per_step_bound: bound,
            step_bound_violations: violations,
            max_within_segment_drift: segment_drift(rec, cfg.steps),
        });
    }

    println!(
        "{} — {} sign-descent runs ({} step sizes × {} seeds, {} steps)",
        recipes::spec_label(&spec),
        records.len(),
        cfg.etas.len(),
        cfg.n_seeds,
        cfg.steps
    );
    for r in &run_reports {
        match &r.law_id {
            Some(id) => println!(
                "  η={:<9} seed {}: {} segments, {id} max step change {:.3e} (bound {:.1e}), \
                 within-segment drift {:.3e}",
                r.eta, r.seed, r.n_segments, r.max_step_change, r.per_step_bound,
                r.max_within_segment_drift
            ),
            None => println!(
                "  η={:<9} seed {}: {} segments (no tracked law for this shape)",
                r.eta, r.seed, r.n_segments
            ),
        }
    }
    println!("  per-step bound violations: {total_violations}");

    let report = AdamSweepReport { runs: run_reports, total_step_bound_violations: total_violations };
    let csv = run_dir.write_csv(
        "adam_sweep.csv",
        &["eta", "seed", "step", "loss", "law_id", "value", "drift", "new_segment"],
        &rows,
    )?;
    let rep = run_dir.write_json("report.json", &report)?;
    println!("wrote {} and {}", csv.display(), rep.display());
    Ok(())
}
