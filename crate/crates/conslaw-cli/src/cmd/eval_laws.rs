//! Evaluates every catalog law at one parameter point, optionally verifying
//! each law's gradient against sampled loss gradients.

use std::path::PathBuf;

use clap::Args;
use serde::{Deserialize, Serialize};

use conslaw_core::laws;
use conslaw_core::models::BlockSpec;
use conslaw_core::rng::Rng;

use crate::artifact::{cell, RunDir};
use crate::cmd::Common;
use crate::error::Result;
use crate::{config, recipes};

#[derive(Args, Debug)]
pub struct EvalLawsArgs {
    #[command(flatten)]
    pub common: Common,
    /// JSON file of named parameter tensors (default: sampled from the seed)
    #[arg(long, value_name = "FILE")]
    pub params: Option<PathBuf>,
    /// Verify gradient orthogonality over this many sampled loss gradients
    #[arg(long)]
    pub ortho_samples: Option<usize>,
}

#[derive(Serialize, Deserialize, Default)]
#[serde(default, deny_unknown_fields)]
pub struct EvalLawsConfig {
    #[serde(skip_serializing)]
    pub seed: Option<u64>,
    #[serde(skip_serializing)]
    pub out_dir: Option<PathBuf>,
    pub spec: Option<BlockSpec>,
    /// Inline named-tensor object, as written by the flow reports.
    pub params: Option<serde_json::Value>,
    pub ortho_samples: usize,
}

pub fn run(args: &EvalLawsArgs) -> Result<()> {
    let mut cfg: EvalLawsConfig = config::load(args.common.config.as_deref())?;
    if let Some(n) = args.ortho_samples {
        cfg.ortho_samples = n;
    }
    let seed = config::resolve_seed(args.common.seed, cfg.seed)?;
    let out = config::resolve_out(args.common.out.as_deref(), cfg.out_dir.as_deref());
    let spec = recipes::require_spec(cfg.spec.clone(), "eval-laws")?;

    let mut rng = Rng::seed_from(seed);
    let theta = recipes::resolve_theta(&spec, args.params.as_deref(), cfg.params.as_ref(), || {
        laws::sample_admissible_theta(&spec, &mut rng)
    })?;

    let run_dir = RunDir::create(&out, "eval-laws", seed, &cfg)?;
    let cat = laws::catalog(&spec);
    println!("{} — {} catalog laws", recipes::spec_label(&spec), cat.len());
    let mut rows = Vec::with_capacity(cat.len());
    let mut ortho_rng = Rng::seed_from(seed);
    for law in &cat {
        let value = laws::eval(law, &theta);
        let (ortho, note) = if cfg.ortho_samples > 0 {
            let rep = laws::verify_orthogonality(&spec, law, cfg.ortho_samples, &mut ortho_rng)?;
            let inner = rep.max_normalized_inner;
            (cell(inner), format!("   max normalized inner {inner:.2e}"))
        } else {
            (String::new(), String::new())
        };
        println!("  {:<28} {:>14.6e}{note}", law.id, value);
        rows.push(vec![law.id.clone(), law.is_quadratic().to_string(), cell(value), ortho]);
    }
    let path = run_dir.write_csv(
        "laws.csv",
        &["law_id", "quadratic", "value", "max_normalized_inner"],
        &rows,
    )?;
    println!("wrote {}", path.display());
    Ok(())
}
