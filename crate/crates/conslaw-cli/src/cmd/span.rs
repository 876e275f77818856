//! Span probes: empirical rank of the sampled loss-gradient span for a whole
//! network, for one block of a composition (corank = that block's law
//! count), for the overlapping factor pair coupling two blocks (full rank),
//! or for the sign-descent directions. Ranks that fail the saturation
//! protocol are flagged, not fatal.

use std::path::PathBuf;

use clap::{Args, ValueEnum};
use serde::{Deserialize, Serialize};

use conslaw_core::laws;
use conslaw_core::models::{self, BlockSpec, LossKind};
use conslaw_core::numerics;
use conslaw_core::rng::Rng;
use conslaw_core::spanprobe::{self, BlockSelector, SpanEstimate};

use crate::artifact::RunDir;
use crate::cmd::Common;
use crate::config;
use crate::error::Result;
use crate::recipes;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, ValueEnum, Default)]
#[serde(rename_all = "snake_case")]
pub enum SpanMode {
    /// Whole-network cotangent span.
    #[default]
    Function,
    /// Parameters of composition member `index` only.
    Block,
    /// Output factor of member `index` with the input factor of `index`+1.
    Overlap,
    /// Sign-descent update directions.
    Sign,
}

#[derive(Args, Debug)]
pub struct SpanArgs {
    #[command(flatten)]
    pub common: Common,
    /// Which span to probe
    #[arg(long, value_enum)]
    pub mode: Option<SpanMode>,
    /// Composition member index for block/overlap modes
    #[arg(long)]
    pub index: Option<usize>,
    /// Nominal sample count (the probe doubles it for saturation checks)
    #[arg(long)]
    pub n_samples: Option<usize>,
    /// JSON file of named parameter tensors (default: sampled from the seed)
    #[arg(long, value_name = "FILE")]
    pub params: Option<PathBuf>,
}

#[derive(Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SpanConfig {
    #[serde(skip_serializing)]
    pub seed: Option<u64>,
    #[serde(skip_serializing)]
    pub out_dir: Option<PathBuf>,
    pub spec: Option<BlockSpec>,
    pub mode: SpanMode,
    pub index: usize,
    pub n_samples: Option<usize>,
    pub n_env: usize,
    pub rel_tol: f64,
    pub loss: LossKind,
    pub params: Option<serde_json::Value>,
}

impl Default for SpanConfig {
    fn default() -> Self {
        SpanConfig {
            seed: None,
            out_dir: None,
            spec: None,
            mode: SpanMode::Function,
            index: 0,
            n_samples: None,
            n_env: spanprobe::DEFAULT_N_ENV,
            rel_tol: numerics::DEFAULT_RANK_RTOL,
            loss: LossKind::Euclidean,
            params: None,
        }
    }
}

#[derive(Serialize)]
pub struct SpanReport {
    pub mode: String,
    pub target: String,
    pub dim: usize,
    pub rank: usize,
    pub corank: usize,
    pub n_samples: usize,
    pub saturated: bool,
    pub rel_tol: f64,
    pub singular_values: Vec<f64>,
}

pub fn span_row(r: &SpanReport) -> Vec<String> {
    vec![
        r.mode.clone(),
        r.target.clone(),
        r.dim.to_string(),
        r.rank.to_string(),
        r.corank.to_string(),
        r.n_samples.to_string(),
        r.saturated.to_string(),
    ]
}

pub const SPAN_HEADER: [&str; 7] =
    ["mode", "target", "dim", "rank", "corank", "n_samples", "saturated"];

pub fn report_from(mode: &str, target: String, dim: usize, rel_tol: f64, est: SpanEstimate) -> SpanReport {
    SpanReport {
        mode: mode.to_string(),
        target,
        dim,
        rank: est.rank,
        corank: dim.saturating_sub(est.rank),
        n_samples: est.n_samples,
        saturated: est.saturated,
        rel_tol,
        singular_values: est.singular_values,
    }
}

pub fn print_summary(r: &SpanReport) {
    println!(
        "{} span of {}: rank {} of {} (corank {}), {} samples, saturated: {}",
        r.mode, r.target, r.rank, r.dim, r.corank, r.n_samples, r.saturated
    );
    if !r.saturated {
        println!("  WARNING: rank did not saturate; increase n_samples");
    }
}

pub fn run(args: &SpanArgs) -> Result<()> {
    let mut cfg: SpanConfig = config::load(args.common.config.as_deref())?;
    if let Some(m) = args.mode {
        cfg.mode = m;
    }
    if let Some(i) = args.index {
        cfg.index = i;
    }
    if let Some(n) = args.n_samples {
        cfg.n_samples = Some(n);
    }
    let seed = config::resolve_seed(args.common.seed, cfg.seed)?;
    let out = config::resolve_out(args.common.out.as_deref(), cfg.out_dir.as_deref());
    let spec = recipes::require_spec(cfg.spec.clone(), "span")?;

    let mut rng = Rng::seed_from(seed);
    let theta = recipes::resolve_theta(&spec, args.params.as_deref(), cfg.params.as_ref(), || {
        laws::sample_admissible_theta(&spec, &mut rng)
    })?;
    let d = models::param_dim(&spec);

    let run_dir = RunDir::create(&out, "span", seed, &cfg)?;
    let report = match cfg.mode {
        SpanMode::Function => {
            let n = cfg.n_samples.unwrap_or_else(|| spanprobe::default_n_samples(&spec));
            let est = spanprobe::empirical_span_dim(&spec, &theta, cfg.loss, n, &mut rng, cfg.rel_tol)?;
            report_from("function", String::from("full"), d, cfg.rel_tol, est)
        }
        SpanMode::Block => {
            let sel = BlockSelector::Block { index: cfg.index };
            let dim = recipes::selected_dim(&spec, &sel)?;
            let n = cfg.n_samples.unwrap_or(8 * dim);
            let est = spanprobe::block_span_dim(
                &spec, &sel, &theta, cfg.n_env, n, cfg.loss, &mut rng, cfg.rel_tol,
            )?;
            report_from("block", format!("block[{}]", cfg.index), dim, cfg.rel_tol, est)
        }
        SpanMode::Overlap => {
            let sel = BlockSelector::Overlap { lower: cfg.index };
            let dim = recipes::selected_dim(&spec, &sel)?;
            let n = cfg.n_samples.unwrap_or(8 * dim);
            let est = spanprobe::block_span_dim(
                &spec, &sel, &theta, cfg.n_env, n, cfg.loss, &mut rng, cfg.rel_tol,
            )?;
            report_from(
                "overlap",
                format!("overlap[{},{}]", cfg.index, cfg.index + 1),
                dim,
                cfg.rel_tol,
                est,
            )
        }
        SpanMode::Sign => {
            let n = cfg.n_samples.unwrap_or(32 * d);
            let est = spanprobe::adam_sign_span_dim(&spec, &theta, n, &mut rng, cfg.rel_tol)?;
            report_from("sign", String::from("full"), d, cfg.rel_tol, est)
        }
    };

    print_summary(&report);
    let csv = run_dir.write_csv("span.csv", &SPAN_HEADER, &[span_row(&report)])?;
    let rep = run_dir.write_json("report.json", &report)?;
    println!("wrote {} and {}", csv.display(), rep.display());
    Ok(())
}
