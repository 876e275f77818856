//! SGD step-size sweep: a grid over step sizes and seeds on one network,
//! teacher-labeled minibatches, per-step law drift against its deterministic
//! bound, and fitted log-log drift exponents (≈ 2 for catalog laws, ≈ 1 for
//! the non-conserved probe).
//!
//! Runs at different step sizes share batch sequences per seed index, so the
//! fitted exponents compare like against like. The fan-out across worker
//! threads is merged by (τ, seed) task order and cannot affect the output.

use std::collections::BTreeMap;
use std::path::PathBuf;

use clap::Args;
use serde::{Deserialize, Serialize};

use conslaw_core::discrete::{self, Sampler, SweepEntry, SweepResult, TauSchedule};
use conslaw_core::laws;
use conslaw_core::models::{BlockSpec, LossKind};
use conslaw_core::rng::Rng;

use crate::artifact::{cell, RunDir};
use crate::cmd::Common;
use crate::config;
use crate::error::{CliError, Result};
use crate::recipes;

#[derive(Args, Debug)]
pub struct SgdSweepArgs {
    #[command(flatten)]
    pub common: Common,
    /// Steps per run
    #[arg(long)]
    pub steps: Option<usize>,
    /// Seeds per step size
    #[arg(long)]
    pub n_seeds: Option<u64>,
    /// Step index at which drift is averaged for the exponent fit
    #[arg(long)]
    pub fit_step: Option<usize>,
}

#[derive(Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SgdSweepConfig {
    #[serde(skip_serializing)]
    pub seed: Option<u64>,
    #[serde(skip_serializing)]
    pub out_dir: Option<PathBuf>,
    pub spec: Option<BlockSpec>,
    pub taus: Vec<f64>,
    pub steps: usize,
    pub n_seeds: u64,
    pub batch: usize,
    /// Teacher parameters are a standard-normal draw times this scale; the
    /// run starts at teacher·start_factor + start_offset. Small scales keep
    /// the gradient square stationary over the horizon, the regime where the
    /// τ² law is visible.
    pub teacher_scale: f64,
    pub start_factor: f64,
    pub start_offset: f64,
    pub loss: LossKind,
    /// constant | harmonic (τ_k = τ₀/(k+1))
    pub schedule: String,
    pub fit_step: Option<usize>,
}

impl Default for SgdSweepConfig {
    fn default() -> Self {
        SgdSweepConfig {
            seed: None,
            out_dir: None,
            spec: None,
            taus: vec![1e-3, 2e-3, 3e-3, 5e-3],
            steps: 50,
            n_seeds: 10,
            batch: 8,
            teacher_scale: 1.0,
            start_factor: 1.3,
            start_offset: 0.02,
            loss: LossKind::Euclidean,
            schedule: String::from("constant"),
            fit_step: None,
        }
    }
}

#[derive(Serialize)]
struct SlopeReport {
    slope: f64,
    intercept: f64,
    n_taus: usize,
}

#[derive(Serialize)]
struct SweepReport {
    fit_step: usize,
    slopes: BTreeMap<String, SlopeReport>,
    bound_violations: usize,
    bound_checks: usize,
    c_l_max: f64,
}

fn schedule_for(kind: &str, tau0: f64) -> Result<TauSchedule> {
    match kind {
        "constant" => Ok(TauSchedule::Constant(tau0)),
        "harmonic" => Ok(TauSchedule::Harmonic(tau0)),
        other => Err(CliError::Config(format!("unknown schedule '{other}' (constant | harmonic)"))),
    }
}

pub fn run(args: &SgdSweepArgs) -> Result<()> {
    let mut cfg: SgdSweepConfig = config::load(args.common.config.as_deref())?;
    if let Some(v) = args.steps {
        cfg.steps = v;
    }
    if let Some(v) = args.n_seeds {
        cfg.n_seeds = v;
    }
    if let Some(v) = args.fit_step {
        cfg.fit_step = Some(v);
    }
    let seed = config::resolve_seed(args.common.seed, cfg.seed)?;
    let out = config::resolve_out(args.common.out.as_deref(), cfg.out_dir.as_deref());
    let spec = recipes::require_spec(cfg.spec.clone(), "sgd-sweep")?;
    schedule_for(&cfg.schedule, 1.0)?;
    let fit_step = cfg.fit_step.unwrap_or(cfg.steps);
    if fit_step > cfg.steps {
        return Err(CliError::Config(format!(
            "fit_step {fit_step} exceeds the run length {}",
            cfg.steps
        )));
    }
    if cfg.taus.is_empty() {
        return Err(CliError::Config(String::from("taus must be nonempty")));
    }

    let run_dir = RunDir::create(&out, "sgd-sweep", seed, &cfg)?;
    let cat = laws::catalog(&spec);
    let probe = laws::probe_first_unit(&spec);
    let mut seed_rng = Rng::seed_from(seed);
    let teacher: Vec<f64> = laws::sample_admissible_theta(&spec, &mut seed_rng)
        .iter()
        .map(|v| v * cfg.teacher_scale)
        .collect();
    let start: Vec<f64> =
        teacher.iter().map(|v| v * cfg.start_factor + cfg.start_offset).collect();
    let sampler = Sampler::teacher(spec.clone(), teacher, cfg.batch)?;

    let mut tasks: Vec<(f64, u64)> = Vec::new();
    for &tau0 in &cfg.taus {
        for sj in 0..cfg.n_seeds {
            tasks.push((tau0, sj));
        }
    }
    let entries = recipes::run_indexed(tasks.len(), |i| {
        let (tau0, sj) = tasks[i];
        let mut rng = Rng::seed_from(seed + 100 + sj);
        let record = discrete::sgd_run(
            &spec,
            &start,
            &sampler,
            cfg.loss,
            &schedule_for(&cfg.schedule, tau0)?,
            cfg.steps,
            &cat,
            std::slice::from_ref(&probe),
            &mut rng,
        )?;
        Ok(SweepEntry { tau0, seed: sj, record })
    })?;
    let sweep = SweepResult { entries };

    // Per-step scalars and long-format series rows.
    let mut run_rows = Vec::new();
    let mut series_rows = Vec::new();
    for e in &sweep.entries {
        let r = &e.record;
        for k in 0..cfg.steps {
            run_rows.push(vec![
                cell(e.tau0),
                e.seed.to_string(),
                k.to_string(),
                cell(r.taus[k]),
                cell(r.loss[k]),
                cell(r.grad_sq[k]),
            ]);
        }
        for k in 0..=cfg.steps {
            for (i, id) in r.law_ids.iter().enumerate() {
                series_rows.push(vec![
                    cell(e.tau0),
                    e.seed.to_string(),
                    k.to_string(),
                    id.clone(),
                    cell(r.law_values[i][k]),
                    cell(r.drift[i][k]),
                    cell(r.bound[i][k]),
                ]);
            }
            for (i, id) in r.probe_ids.iter().enumerate() {
                series_rows.push(vec![
                    cell(e.tau0),
                    e.seed.to_string(),
                    k.to_string(),
                    id.clone(),
                    cell(r.probe_values[i][k]),
                    cell(r.probe_drift[i][k]),
                    String::new(),
                ]);
            }
        }
    }

    // Exponent fits and per-τ drift means at the fit step.
    let mut series_ids: Vec<String> = cat.iter().map(|l| l.id.clone()).collect();
    series_ids.push(probe.id.clone());
    let mut slopes = BTreeMap::new();
    let mut summary_rows = Vec::new();
    for id in &series_ids {
        let fit = discrete::slope_fit(&sweep, id, fit_step)?;
        for &tau0 in &cfg.taus {
            let (mut sum, mut n) = (0.0, 0usize);
            for e in sweep.entries.iter().filter(|e| e.tau0 == tau0) {
                let r = &e.record;
                let d = match r.law_ids.iter().position(|l| l == id) {
                    Some(i) => r.drift[i][fit_step],
                    None => {
                        let i = r.probe_ids.iter().position(|l| l == id).expect("known series");
                        r.probe_drift[i][fit_step]
                    }
                };
                sum += d;
                n += 1;
            }
            summary_rows.push(vec![
                id.clone(),
                cell(tau0),
                cell(sum / n as f64),
                cell(fit.slope),
                cell(fit.intercept),
            ]);
        }
        slopes.insert(
            id.clone(),
            SlopeReport { slope: fit.slope, intercept: fit.intercept, n_taus: fit.n_taus },
        );
    }

    let bound_violations = sweep.bound_violations();
    let bound_checks = sweep.entries.len() * cat.len() * (cfg.steps + 1);
    let c_l_max =
        sweep.entries.iter().map(|e| e.record.c_l).fold(0.0_f64, f64::max);

    println!(
        "{} — {} runs ({} step sizes × {} seeds, {} steps)",
        recipes::spec_label(&spec),
        sweep.entries.len(),
        cfg.taus.len(),
        cfg.n_seeds,
        cfg.steps
    );
    for (id, s) in &slopes {
        println!("  {id:<28} slope {:.3}", s.slope);
    }
    println!("  bound violations: {bound_violations}/{bound_checks} checks");

    let report = SweepReport { fit_step, slopes, bound_violations, bound_checks, c_l_max };
    let runs_csv = run_dir.write_csv(
        "runs.csv",
        &["tau", "seed", "step", "tau_k", "loss", "grad_sq"],
        &run_rows,
    )?;
    let sweep_csv = run_dir.write_csv(
        "sweep.csv",
        &["tau", "seed", "step", "series_id", "value", "drift", "bound"],
        &series_rows,
    )?;
    let summary_csv = run_dir.write_csv(
        "summary.csv",
        &["series_id", "tau", "mean_drift", "slope", "intercept"],
        &summary_rows,
    )?;
    let rep = run_dir.write_json("report.json", &report)?;
    println!(
        "wrote {}, {}, {} and {}",
        runs_csv.display(),
        sweep_csv.display(),
        summary_csv.display(),
        rep.display()
    );
    Ok(())
}
