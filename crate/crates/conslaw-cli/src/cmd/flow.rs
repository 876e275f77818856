//! Gradient-flow integration with optional weight decay: records every
//! catalog law and a non-conserved probe along the trajectory, reports the
//! drift table, and — under weight decay — the rescaling-envelope residual
//! under which the λ ≡ 0 law must again be constant.

use std::collections::BTreeMap;
use std::path::PathBuf;

use clap::Args;
use serde::{Deserialize, Serialize};

use conslaw_core::flows::{self, Halt, Trajectory};
use conslaw_core::models::{self, BlockSpec, LossKind};
use conslaw_core::rng::Rng;
use conslaw_core::laws;

use crate::artifact::{cell, RunDir};
use crate::cmd::Common;
use crate::config::{self, WdCfg};
use crate::error::Result;
use crate::recipes;

#[derive(Args, Debug)]
pub struct FlowArgs {
    #[command(flatten)]
    pub common: Common,
    /// Integration step
    #[arg(long)]
    pub dt: Option<f64>,
    /// Final time
    #[arg(long)]
    pub t_final: Option<f64>,
    /// Constant weight-decay coefficient λ
    #[arg(long)]
    pub wd: Option<f64>,
    /// Integrator: rk4 | euler
    #[arg(long)]
    pub method: Option<String>,
    /// JSON file of named parameter tensors for the start point
    #[arg(long, value_name = "FILE")]
    pub params: Option<PathBuf>,
}

#[derive(Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FlowConfig {
    #[serde(skip_serializing)]
    pub seed: Option<u64>,
    #[serde(skip_serializing)]
    pub out_dir: Option<PathBuf>,
    pub spec: Option<BlockSpec>,
    pub loss: LossKind,
    pub method: String,
    pub t_final: f64,
    pub dt: f64,
    pub wd: WdCfg,
    pub batch: usize,
    pub noise: f64,
    pub margin_floor: f64,
    pub params: Option<serde_json::Value>,
    /// Evaluate the rescaling envelope when weight decay is active.
    pub structure_check: bool,
}

impl Default for FlowConfig {
    fn default() -> Self {
        FlowConfig {
            seed: None,
            out_dir: None,
            spec: None,
            loss: LossKind::Euclidean,
            method: String::from("rk4"),
            t_final: 1.0,
            dt: 1e-3,
            wd: WdCfg::default(),
            batch: 8,
            noise: 0.05,
            margin_floor: 0.5,
            params: None,
            structure_check: true,
        }
    }
}

#[derive(Serialize)]
pub struct HaltReport {
    kind: &'static str,
    t: f64,
    margin: Option<f64>,
    coordinate: Option<usize>,
}

pub fn halt_report(halt: &Halt) -> HaltReport {
    match *halt {
        Halt::KinkMargin { t, margin } => {
            HaltReport { kind: "kink_margin", t, margin: Some(margin), coordinate: None }
        }
        Halt::SignStall { t, coordinate } => {
            HaltReport { kind: "sign_stall", t, margin: None, coordinate: Some(coordinate) }
        }
    }
}

#[derive(Serialize)]
struct FlowReport {
    snapshots: usize,
    drift: BTreeMap<String, f64>,
    probe_id: String,
    probe_drift: f64,
    structure_residual: Option<BTreeMap<String, f64>>,
    halt: Option<HaltReport>,
    theta_final: serde_json::Value,
}

/// Long-format trajectory rows: every tracked law plus the probe at every
/// snapshot.
pub fn trajectory_rows(traj: &Trajectory, probe: &laws::Probe) -> Vec<Vec<String>> {
    let mut rows = Vec::new();
    for (k, t) in traj.times.iter().enumerate() {
        for (i, id) in traj.law_ids.iter().enumerate() {
            rows.push(vec![cell(*t), id.clone(), cell(traj.law_values[i][k])]);
        }
        rows.push(vec![cell(*t), probe.id.clone(), cell(probe.eval(&traj.states[k]))]);
    }
    rows
}

pub fn run(args: &FlowArgs) -> Result<()> {
    let mut cfg: FlowConfig = config::load(args.common.config.as_deref())?;
    if let Some(v) = args.dt {
        cfg.dt = v;
    }
    if let Some(v) = args.t_final {
        cfg.t_final = v;
    }
    if let Some(v) = args.wd {
        cfg.wd = WdCfg::Constant(v);
    }
    if let Some(v) = &args.method {
        cfg.method = v.clone();
    }
    let seed = config::resolve_seed(args.common.seed, cfg.seed)?;
    let out = config::resolve_out(args.common.out.as_deref(), cfg.out_dir.as_deref());
    let spec = recipes::require_spec(cfg.spec.clone(), "flow")?;
    let method = recipes::parse_method(&cfg.method)?;
    let wd = cfg.wd.schedule()?;

    let mut rng = Rng::seed_from(seed);
    let theta0 = recipes::resolve_theta(&spec, args.params.as_deref(), cfg.params.as_ref(), || {
        recipes::theta_with_visible_laws(&spec, &mut rng)
    })?;
    let data = recipes::smooth_teacher_data(
        &spec,
        &theta0,
        cfg.batch,
        cfg.noise,
        cfg.margin_floor,
        &mut rng,
    )?;

    let run_dir = RunDir::create(&out, "flow", seed, &cfg)?;
    let traj =
        flows::integrate_gf(&spec, &theta0, &data, cfg.loss, &wd, cfg.t_final, cfg.dt, method)?;

    let probe = laws::probe_first_unit(&spec);
    let drift: BTreeMap<String, f64> = flows::drift_all(&traj).into_iter().collect();
    let probe_drift = flows::drift_of(&traj, |s| probe.eval(s));
    let structure_residual = if cfg.structure_check && !wd.is_zero() {
        let mut m = BTreeMap::new();
        for law in laws::catalog(&spec) {
            m.insert(law.id.clone(), flows::structure_check(&traj, &law)?);
        }
        Some(m)
    } else {
        None
    };

    println!(
        "{} — {} over t ∈ [0, {}], dt {}, wd {}",
        recipes::spec_label(&spec),
        method.name(),
        cfg.t_final,
        cfg.dt,
        wd.describe()
    );
    for (id, d) in &drift {
        match structure_residual.as_ref().and_then(|m| m.get(id)) {
            Some(res) => println!("  {id:<28} drift {d:<12.3e} envelope residual {res:.3e}"),
            None => println!("  {id:<28} drift {d:.3e}"),
        }
    }
    println!("  {:<28} drift {probe_drift:.3e}", probe.id);
    if let Some(h) = &traj.halt {
        println!("  halted early: {h:?}");
    }

    let report = FlowReport {
        snapshots: traj.times.len(),
        drift,
        probe_id: probe.id.clone(),
        probe_drift,
        structure_residual,
        halt: traj.halt.as_ref().map(halt_report),
        theta_final: theta_json(&spec, traj.states.last().expect("nonempty trajectory"))?,
    };
    let rows = trajectory_rows(&traj, &probe);
    let csv = run_dir.write_csv("trajectory.csv", &["t", "series_id", "value"], &rows)?;
    let rep = run_dir.write_json("report.json", &report)?;
    println!("wrote {} and {}", csv.display(), rep.display());
    Ok(())
}

/// Final parameters as the named-tensor object accepted back by `--params`.
pub fn theta_json(spec: &BlockSpec, theta: &[f64]) -> Result<serde_json::Value> {
    let s = models::params_to_json_string(spec, theta)?;
    serde_json::from_str(&s)
        .map_err(|e| crate::error::CliError::Config(format!("params encode: {e}")))
}
