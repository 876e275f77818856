//! The four-parameter scalar residual chain on its open domain: the sampled
//! gradient span has rank 1 there, so three independent quantities are
//! conserved even though the parameter count is four.

use std::path::PathBuf;

use clap::Args;
use serde::{Deserialize, Serialize};

use conslaw_core::rng::Rng;
use conslaw_core::spanprobe;

use crate::artifact::RunDir;
use crate::cmd::span::{print_summary, report_from, span_row, SPAN_HEADER};
use crate::cmd::Common;
use crate::config;
use crate::error::{CliError, Result};

#[derive(Args, Debug)]
pub struct M1ExampleArgs {
    #[command(flatten)]
    pub common: Common,
    /// Nominal sample count
    #[arg(long)]
    pub n_samples: Option<usize>,
}

#[derive(Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct M1Config {
    #[serde(skip_serializing)]
    pub seed: Option<u64>,
    #[serde(skip_serializing)]
    pub out_dir: Option<PathBuf>,
    /// The four chain parameters; all must be nonzero and share one sign.
    pub theta: Vec<f64>,
    pub n_samples: usize,
}

impl Default for M1Config {
    fn default() -> Self {
        M1Config { seed: None, out_dir: None, theta: vec![2.0, 3.0, 5.0, 7.0], n_samples: 500 }
    }
}

pub fn run(args: &M1ExampleArgs) -> Result<()> {
    let mut cfg: M1Config = config::load(args.common.config.as_deref())?;
    if let Some(n) = args.n_samples {
        cfg.n_samples = n;
    }
    let seed = config::resolve_seed(args.common.seed, cfg.seed)?;
    let out = config::resolve_out(args.common.out.as_deref(), cfg.out_dir.as_deref());
    if cfg.theta.len() != 4 {
        return Err(CliError::Config(format!(
            "the example takes exactly 4 parameters, got {}",
            cfg.theta.len()
        )));
    }

    let run_dir = RunDir::create(&out, "m1-example", seed, &cfg)?;
    let mut rng = Rng::seed_from(seed);
    let est = spanprobe::m1_example_span(&cfg.theta, cfg.n_samples, &mut rng)?;
    let rel_tol = est.rel_tol;
    let report = report_from("m1", String::from("omega_domain"), 4, rel_tol, est);
    print_summary(&report);
    println!(
        "  {} independent conserved quantities on the domain (4 − rank {})",
        report.corank, report.rank
    );
    let csv = run_dir.write_csv("span.csv", &SPAN_HEADER, &[span_row(&report)])?;
    let rep = run_dir.write_json("report.json", &report)?;
    println!("wrote {} and {}", csv.display(), rep.display());
    Ok(())
}
