//! Sign-flow integration on a two-layer linear or attention block. The
//! 1×1×1 shape tracks its conserved |u| − |v|; the flow stops flagged when a
//! gradient coordinate reaches zero, where the dynamics are discontinuous.

use std::collections::BTreeMap;
use std::path::PathBuf;

use clap::Args;
use serde::{Deserialize, Serialize};

use conslaw_core::flows;
use conslaw_core::laws;
use conslaw_core::models::{BlockSpec, LossKind};
use conslaw_core::rng::Rng;

use crate::artifact::RunDir;
use crate::cmd::flow::{halt_report, theta_json, trajectory_rows, HaltReport};
use crate::cmd::Common;
use crate::config;
use crate::error::Result;
use crate::recipes;

#[derive(Args, Debug)]
pub struct AdamFlowArgs {
    #[command(flatten)]
    pub common: Common,
    /// Integration step
    #[arg(long)]
    pub dt: Option<f64>,
    /// Final time
    #[arg(long)]
    pub t_final: Option<f64>,
    /// JSON file of named parameter tensors for the start point
    #[arg(long, value_name = "FILE")]
    pub params: Option<PathBuf>,
}

#[derive(Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AdamFlowConfig {
    #[serde(skip_serializing)]
    pub seed: Option<u64>,
    #[serde(skip_serializing)]
    pub out_dir: Option<PathBuf>,
    pub spec: Option<BlockSpec>,
    pub loss: LossKind,
    pub t_final: f64,
    pub dt: f64,
    pub batch: usize,
    pub noise: f64,
    pub params: Option<serde_json::Value>,
}

impl Default for AdamFlowConfig {
    fn default() -> Self {
        AdamFlowConfig {
            seed: None,
            out_dir: None,
            spec: None,
            loss: LossKind::Euclidean,
            t_final: 1.0,
            dt: 1e-3,
            batch: 8,
            noise: 0.05,
            params: None,
        }
    }
}

pub fn run(args: &AdamFlowArgs) -> Result<()> {
    let mut cfg: AdamFlowConfig = config::load(args.common.config.as_deref())?;
    if let Some(v) = args.dt {
        cfg.dt = v;
    }
    if let Some(v) = args.t_final {
        cfg.t_final = v;
    }
    let seed = config::resolve_seed(args.common.seed, cfg.seed)?;
    let out = config::resolve_out(args.common.out.as_deref(), cfg.out_dir.as_deref());
    let spec = recipes::require_spec(cfg.spec.clone(), "adam-flow")?;

    let mut rng = Rng::seed_from(seed);
    let theta0 = recipes::resolve_theta(&spec, args.params.as_deref(), cfg.params.as_ref(), || {
        recipes::theta_with_visible_laws(&spec, &mut rng)
    })?;
    // These blocks have no activation kinks, so no margin floor applies.
    let data = recipes::smooth_teacher_data(&spec, &theta0, cfg.batch, cfg.noise, 0.0, &mut rng)?;

    let run_dir = RunDir::create(&out, "adam-flow", seed, &cfg)?;
    let traj = flows::integrate_adam_flow(&spec, &theta0, &data, cfg.loss, cfg.t_final, cfg.dt)?;

    let probe = laws::probe_first_unit(&spec);
    let drift: BTreeMap<String, f64> = flows::drift_all(&traj).into_iter().collect();
    let probe_drift = flows::drift_of(&traj, |s| probe.eval(s));

    println!(
        "{} — sign flow over t ∈ [0, {}], dt {}",
        recipes::spec_label(&spec),
        cfg.t_final,
        cfg.dt
    );
    if drift.is_empty() {
        println!("  no sign-flow law for this shape; recording the probe only");
    }
    for (id, d) in &drift {
        println!("  {id:<28} drift {d:.3e}");
    }
    println!("  {:<28} drift {probe_drift:.3e}", probe.id);
    if let Some(h) = &traj.halt {
        println!("  halted early: {h:?}");
    }

    #[derive(Serialize)]
    struct AdamFlowReport {
        snapshots: usize,
        drift: BTreeMap<String, f64>,
        probe_id: String,
        probe_drift: f64,
        halt: Option<HaltReport>,
        theta_final: serde_json::Value,
    }
    let report = AdamFlowReport {
        snapshots: traj.times.len(),
        drift,
        probe_id: probe.id.clone(),
        probe_drift,
        halt: traj.halt.as_ref().map(halt_report),
        theta_final: theta_json(&spec, traj.states.last().expect("nonempty trajectory"))?,
    };
    let rows = trajectory_rows(&traj, &probe);
    let csv = run_dir.write_csv("trajectory.csv", &["t", "series_id", "value"], &rows)?;
    let rep = run_dir.write_json("report.json", &report)?;
    println!("wrote {} and {}", csv.display(), rep.display());
    Ok(())
}
