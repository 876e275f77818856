//! Exact law counting: for each configured block, computes the bracket
//! closure of its reparameterization fields, evaluates the trace dimension
//! at a sampled generic point, and compares D − trace_dim with the size of
//! the closed-form catalog.

use std::path::PathBuf;

use clap::Args;
use serde::{Deserialize, Serialize};

use conslaw_core::models::BlockSpec;
use conslaw_core::rng::Rng;
use conslaw_core::{laws, liealg, numerics, CoreError};

use crate::artifact::RunDir;
use crate::cmd::Common;
use crate::error::{CliError, Result};
use crate::{config, recipes};

#[derive(Args, Debug)]
pub struct CountLawsArgs {
    #[command(flatten)]
    pub common: Common,
    /// Relative singular-value tolerance for the trace-rank decision
    #[arg(long)]
    pub rel_tol: Option<f64>,
}

#[derive(Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CountLawsConfig {
    #[serde(skip_serializing)]
    pub seed: Option<u64>,
    #[serde(skip_serializing)]
    pub out_dir: Option<PathBuf>,
    /// Single block, or use `specs` for a batch.
    pub spec: Option<BlockSpec>,
    pub specs: Vec<BlockSpec>,
    pub rel_tol: f64,
}

impl Default for CountLawsConfig {
    fn default() -> Self {
        CountLawsConfig {
            seed: None,
            out_dir: None,
            spec: None,
            specs: Vec::new(),
            rel_tol: numerics::DEFAULT_RANK_RTOL,
        }
    }
}

pub fn run(args: &CountLawsArgs) -> Result<()> {
    let mut cfg: CountLawsConfig = config::load(args.common.config.as_deref())?;
    if let Some(rt) = args.rel_tol {
        cfg.rel_tol = rt;
    }
    let seed = config::resolve_seed(args.common.seed, cfg.seed)?;
    let out = config::resolve_out(args.common.out.as_deref(), cfg.out_dir.as_deref());

    let mut specs = Vec::new();
    if let Some(s) = cfg.spec.clone() {
        specs.push(s);
    }
    specs.extend(cfg.specs.iter().cloned());
    if specs.is_empty() {
        return Err(CliError::Config(String::from(
            "count-laws needs a 'spec' or a nonempty 'specs' list",
        )));
    }

    let run_dir = RunDir::create(&out, "count-laws", seed, &cfg)?;
    let mut rng = Rng::seed_from(seed);
    let mut rows = Vec::new();
    println!("{:<52} {:>5} {:>5} {:>5} {:>8}  result", "block", "D", "k", "laws", "catalog");
    for spec in &specs {
        conslaw_core::models::validate_spec(spec)?;
        // A non-generic sample point gives inconsistent ranks; resample up
        // to 5 times before giving up.
        let mut resamples = 0;
        let lc = loop {
            let theta = laws::sample_admissible_theta(spec, &mut rng);
            match liealg::count_laws(spec, &theta, cfg.rel_tol) {
                Ok(lc) => break lc,
                Err(CoreError::NonGenericPoint { .. }) if resamples < 5 => resamples += 1,
                Err(e) => return Err(e.into()),
            }
        };
        let catalog = laws::catalog(spec).len();
        let label = recipes::spec_label(spec);
        let matched = lc.n_laws == catalog;
        println!(
            "{label:<52} {:>5} {:>5} {:>5} {:>8}  {}",
            lc.dim_param,
            lc.trace_dim,
            lc.n_laws,
            catalog,
            if matched { "MATCH" } else { "MISMATCH" }
        );
        rows.push(vec![
            label,
            lc.dim_param.to_string(),
            lc.closure_dim.to_string(),
            lc.trace_dim.to_string(),
            lc.n_laws.to_string(),
            catalog.to_string(),
            lc.generations.to_string(),
            matched.to_string(),
        ]);
    }
    let path = run_dir.write_csv(
        "counts.csv",
        &[
            "block",
            "dim_param",
            "closure_dim",
            "trace_dim",
            "n_laws",
            "catalog_size",
            "generations",
            "match",
        ],
        &rows,
    )?;
    println!("wrote {}", path.display());
    Ok(())
}
