//! Shared run setup: human-readable block labels, parameter sources, smooth
//! synthetic datasets, and a deterministic parallel grid runner.

use std::path::Path;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;

use conslaw_core::flows::Method;
use conslaw_core::models::{self, BlockSpec, Dataset};
use conslaw_core::rng::Rng;
use conslaw_core::{laws, spanprobe};

use crate::error::{io_err, CliError, Result};

/// Compact label naming a spec by its shape, e.g. `relu2(n=3,m=4,r=5)`.
pub fn spec_label(spec: &BlockSpec) -> String {
    match spec {
        BlockSpec::Linear2 { n, m, r } => format!("linear2(n={n},m={m},r={r})"),
        BlockSpec::Relu2 { n, m, r, bias } => {
            format!("relu2(n={n},m={m},r={r}{})", if *bias { ",bias" } else { "" })
        }
        BlockSpec::ConvRelu2 { c0, c1, c2, p, n_u, n_v, maps } => format!(
            "conv_relu2(c0={c0},c1={c1},c2={c2},p={p},n_u={n_u},n_v={n_v}{})",
            if maps.is_some() { ",custom_maps" } else { "" }
        ),
        BlockSpec::Attention { n_tokens, dim, d1, heads } => {
            format!("attention(n_tokens={n_tokens},dim={dim},d1={d1},heads={heads})")
        }
        BlockSpec::SoftmaxClassifier { n, m } => format!("softmax_classifier(n={n},m={m})"),
        BlockSpec::Residual { inner } => format!("residual({})", spec_label(inner)),
        BlockSpec::Composition { blocks } => {
            let parts: Vec<String> = blocks.iter().map(spec_label).collect();
            format!("comp[{}]", parts.join(" -> "))
        }
    }
}

/// Extracts a required spec from a config, validating its dimensions.
pub fn require_spec(spec: Option<BlockSpec>, command: &str) -> Result<BlockSpec> {
    let spec = spec
        .ok_or_else(|| CliError::Config(format!("{command} needs a 'spec' field in its config")))?;
    models::validate_spec(&spec)?;
    Ok(spec)
}

/// Resolves a parameter point: `--params` file, then the config's inline
/// tensor object, then the sampled fallback.
pub fn resolve_theta(
    spec: &BlockSpec,
    flag: Option<&Path>,
    inline: Option<&serde_json::Value>,
    fallback: impl FnOnce() -> Vec<f64>,
) -> Result<Vec<f64>> {
    if let Some(p) = flag {
        let s = std::fs::read_to_string(p).map_err(|e| io_err(p, e))?;
        return Ok(models::params_from_json_str(spec, &s)?.data);
    }
    if let Some(v) = inline {
        let s = serde_json::to_string(v)
            .map_err(|e| CliError::Config(format!("params echo: {e}")))?;
        return Ok(models::params_from_json_str(spec, &s)?.data);
    }
    Ok(fallback())
}

/// Admissible parameters rejected until every catalog law is visibly nonzero
/// (|h| ≥ 0.1), so raw drifts and envelope residuals are well above the
/// rounding floor. Capped for totality; the cap is never reached in practice.
pub fn theta_with_visible_laws(spec: &BlockSpec, rng: &mut Rng) -> Vec<f64> {
    let cat = laws::catalog(spec);
    let mut theta = laws::sample_admissible_theta(spec, rng);
    for _ in 0..500 {
        if cat.iter().all(|l| laws::eval(l, &theta).abs() >= 0.1) {
            return theta;
        }
        theta = laws::sample_admissible_theta(spec, rng);
    }
    theta
}

/// Teacher-labeled batch whose inputs all clear the activation-margin floor
/// at θ: targets are the outputs of a nearby teacher (θ plus coordinate
/// noise 0.2) with additive label noise, except for softmax classifiers
/// whose targets must stay on the probability simplex. A margin floor that
/// dominates the training motion keeps integrators away from ReLU kinks.
pub fn smooth_teacher_data(
    spec: &BlockSpec,
    theta: &[f64],
    batch: usize,
    noise: f64,
    margin_floor: f64,
    rng: &mut Rng,
) -> Result<Dataset> {
    if batch == 0 {
        return Err(CliError::Config(String::from("batch size must be ≥ 1")));
    }
    let teacher: Vec<f64> = theta.iter().map(|v| v + 0.2 * rng.normal()).collect();
    let positive_targets = matches!(spec, BlockSpec::SoftmaxClassifier { .. });
    let mut inputs = Vec::with_capacity(batch);
    let mut targets = Vec::with_capacity(batch);
    let mut rejected = 0usize;
    while inputs.len() < batch {
        let x = rng.normal_vec(models::in_dim(spec));
        if models::activation_margin(spec, theta, &x)? < margin_floor {
            rejected += 1;
            if rejected > 10_000 {
                return Err(CliError::Config(format!(
                    "could not draw {batch} inputs with activation margin ≥ {margin_floor}; \
                     lower margin_floor"
                )));
            }
            continue;
        }
        let y = if positive_targets {
            models::forward(spec, &teacher, &x)?
        } else {
            let mut y = models::forward(spec, theta, &x)?;
            for v in y.iter_mut() {
                *v += noise * rng.normal();
            }
            y
        };
        inputs.push(x);
        targets.push(y);
    }
    Ok(Dataset::new(inputs, targets)?)
}

/// Number of coordinates a block selector picks out of a composition.
pub fn selected_dim(spec: &BlockSpec, selector: &spanprobe::BlockSelector) -> Result<usize> {
    let registry = models::param_registry(spec);
    let names: Vec<String> = match selector {
        spanprobe::BlockSelector::Block { index } => {
            let prefix = format!("{index}.");
            let dim: usize =
                registry.iter().filter(|t| t.name.starts_with(&prefix)).map(|t| t.len()).sum();
            if dim == 0 {
                return Err(CliError::Config(format!("no composition member with index {index}")));
            }
            return Ok(dim);
        }
        spanprobe::BlockSelector::Overlap { lower } => {
            vec![format!("{lower}.U"), format!("{}.V", lower + 1)]
        }
    };
    let mut dim = 0;
    for name in names {
        match registry.iter().find(|t| t.name == name) {
            Some(t) => dim += t.len(),
            None => return Err(CliError::Config(format!("no tensor named {name} in this spec"))),
        }
    }
    Ok(dim)
}

pub fn parse_method(s: &str) -> Result<Method> {
    match s {
        "rk4" => Ok(Method::Rk4),
        "euler" => Ok(Method::Euler),
        other => Err(CliError::Config(format!("unknown method '{other}' (rk4 | euler)"))),
    }
}

/// Runs `n` independent tasks across worker threads, each task owning its
/// own RNG state, and returns the results in task-index order — the merge
/// key — so the outcome is identical however the threads interleave.
pub fn run_indexed<T, F>(n: usize, run: F) -> Result<Vec<T>>
where
    T: Send,
    F: Fn(usize) -> Result<T> + Sync,
{
    let mut slots: Vec<Mutex<Option<Result<T>>>> = Vec::with_capacity(n);
    slots.resize_with(n, || Mutex::new(None));
    let next = AtomicUsize::new(0);
    let workers = std::thread::available_parallelism().map_or(1, |w| w.get()).min(n.max(1));
    std::thread::scope(|scope| {
        for _ in 0..workers {
            scope.spawn(|| loop {
                let i = next.fetch_add(1, Ordering::Relaxed);
                if i >= n {
                    break;
                }
                let out = run(i);
                *slots[i].lock().expect("result slot") = Some(out);
            });
        }
    });
    let mut results = Vec::with_capacity(n);
    for slot in slots {
        let out = slot
            .into_inner()
            .expect("result slot")
            .unwrap_or_else(|| Err(CliError::Numerical(String::from("worker task vanished"))));
        results.push(out?);
    }
    Ok(results)
}
