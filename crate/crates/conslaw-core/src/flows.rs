//! Continuous-time training dynamics: Euclidean gradient flow with an
//! optional weight-decay schedule, and the sign-descent flow. Trajectories
//! record every catalog law along the way so conservation drift and the
//! rescaling identity h(t, θ) = H(θ·e^{Λ(t)}) can be checked directly.
//!
//! Integration is fixed-step (classical RK4 or explicit Euler) with steps
//! aligned to the weight-decay schedule's kinks, so refinement studies
//! compare like with like and the closed-form Λ(t) is exact per piece.

use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use crate::error::Result;
use crate::invalid_input;
use crate::laws::{self, LawDescriptor};
use crate::models::{self, BlockSpec, Dataset, LossKind, ParamVec};
use crate::rmath;
use crate::CoreError;

/// States whose activation margin falls below this are treated as sitting
/// on a kink; the trajectory is flagged and stops there.
pub const KINK_MARGIN: f64 = 1e-9;

/// Sign-descent stops when any gradient coordinate's magnitude falls below
/// this, since the sign field is discontinuous across zero.
pub const SIGN_EVENT: f64 = 1e-10;

/// Fixed-step integrator choice.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Method {
    Rk4,
    Euler,
}

impl Method {
    pub fn name(&self) -> &'static str {
        match self {
            Method::Rk4 => "rk4",
            Method::Euler => "euler",
        }
    }
}

/// Nonnegative piecewise-constant weight-decay schedule λ(t) with its
/// running integral Λ(t) available in closed form.
#[derive(Clone, Debug, PartialEq)]
pub struct WDSchedule {
    /// (start time, value) pairs; starts strictly increasing from 0.
    pieces: Vec<(f64, f64)>,
}

impl WDSchedule {
    /// λ(t) ≡ c.
    pub fn constant(c: f64) -> Result<Self> {
        Self::piecewise(vec![(0.0, c)])
    }

    /// Piecewise-constant schedule from (start, value) pairs. The first
    /// piece must start at 0, starts must strictly increase, and all
    /// values must be finite and nonnegative.
    pub fn piecewise(pieces: Vec<(f64, f64)>) -> Result<Self> {
        if pieces.first().map(|p| p.0) != Some(0.0) {
            return Err(invalid_input!("weight-decay schedule must start at t = 0"));
        }
        for w in pieces.windows(2) {
            if !(w[1].0 > w[0].0) {
                return Err(invalid_input!("schedule start times must strictly increase"));
            }
        }
        for &(s, v) in &pieces {
            if !s.is_finite() || !v.is_finite() || v < 0.0 {
                return Err(invalid_input!("schedule values must be finite and ≥ 0"));
            }
        }
        Ok(WDSchedule { pieces })
    }

    /// λ(t): the value of the piece containing t (t < 0 clamps to the
    /// first piece).
    pub fn lambda(&self, t: f64) -> f64 {
        let mut v = self.pieces[0].1;
        for &(s, val) in &self.pieces {
            if s <= t {
                v = val;
            } else {
                break;
            }
        }
        v
    }

    /// Λ(t) = ∫₀ᵗ λ(s) ds, summed in closed form over the pieces.
    pub fn integral(&self, t: f64) -> f64 {
        let mut acc = 0.0;
        for (i, &(s, v)) in self.pieces.iter().enumerate() {
            if t <= s {
                break;
            }
            let end = self.pieces.get(i + 1).map(|p| p.0).unwrap_or(f64::INFINITY);
            acc += v * (t.min(end) - s);
        }
        acc
    }

    /// Piece start times after t = 0 (the schedule's kinks).
    pub fn kinks(&self) -> impl Iterator<Item = f64> + '_ {
        self.pieces.iter().skip(1).map(|p| p.0)
    }

    pub fn is_zero(&self) -> bool {
        self.pieces.iter().all(|p| p.1 == 0.0)
    }

    /// Human-readable one-line description for run manifests.
    pub fn describe(&self) -> String {
        if self.pieces.len() == 1 {
            alloc::format!("constant λ = {}", self.pieces[0].1)
        } else {
            let parts: Vec<String> =
                self.pieces.iter().map(|(s, v)| alloc::format!("t≥{s}: λ={v}")).collect();
            alloc::format!("piecewise [{}]", parts.join(", "))
        }
    }
}

/// Why an integration stopped before reaching its final time.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Halt {
    /// A state's activation margin fell below `KINK_MARGIN`.
    KinkMargin { t: f64, margin: f64 },
    /// A sign-descent gradient coordinate fell below `SIGN_EVENT`.
    SignStall { t: f64, coordinate: usize },
}

/// A fixed-step trajectory with per-snapshot law values.
#[derive(Clone, Debug)]
pub struct Trajectory {
    pub spec: BlockSpec,
    pub method: Method,
    pub dt: f64,
    pub wd: WDSchedule,
    /// Snapshot times, strictly increasing from 0.
    pub times: Vec<f64>,
    /// Parameter snapshots, one per time.
    pub states: Vec<Vec<f64>>,
    /// Ids of the laws tracked along the run.
    pub law_ids: Vec<String>,
    /// law_values[i][k] = value of law i at snapshot k.
    pub law_values: Vec<Vec<f64>>,
    /// Set iff the run stopped early at a guard.
    pub halt: Option<Halt>,
}

impl Trajectory {
    /// Snapshot `k` as a named parameter vector.
    pub fn state_params(&self, k: usize) -> Result<ParamVec> {
        let data = self
            .states
            .get(k)
            .ok_or_else(|| invalid_input!("snapshot {k} out of range"))?
            .clone();
        models::params_for_spec(&self.spec, data)
    }

    /// The recorded series of one law.
    pub fn law_series(&self, law_id: &str) -> Result<&[f64]> {
        match self.law_ids.iter().position(|id| id == law_id) {
            Some(i) => Ok(&self.law_values[i]),
            None => Err(invalid_input!("trajectory does not track law {law_id}")),
        }
    }
}

/// Builds the snapshot grid: uniform steps of `dt` aligned so that every
/// schedule kink inside (0, t_final) and t_final itself land exactly on a
/// snapshot (trailing substeps shortened as needed).
fn time_grid(t_final: f64, dt: f64, wd: &WDSchedule) -> Vec<f64> {
    let mut marks: Vec<f64> = wd.kinks().filter(|&k| k > 0.0 && k < t_final).collect();
    marks.push(t_final);
    let mut times = vec![0.0];
    let mut seg_start = 0.0;
    for &mark in &marks {
        let mut t = seg_start;
        loop {
            let next = t + dt;
            if next >= mark - 1e-12 * dt {
                break;
            }
            times.push(next);
            t = next;
        }
        times.push(mark);
        seg_start = mark;
    }
    times
}

fn min_margin(spec: &BlockSpec, theta: &[f64], data: &Dataset) -> Result<f64> {
    let mut m = f64::INFINITY;
    for x in &data.inputs {
        m = m.min(models::activation_margin(spec, theta, x)?);
    }
    Ok(m)
}

fn check_finite(theta: &[f64], context: &str, last_t: f64) -> Result<()> {
    if theta.iter().all(|v| v.is_finite()) {
        Ok(())
    } else {
        Err(CoreError::NonFinite {
            context: String::from(context),
            last_finite_t: Some(last_t),
        })
    }
}

/// Integrates θ̇ = −∇L_Z(θ) − λ(t)·θ from θ₀ to t_final with fixed steps,
/// recording every catalog law at every snapshot. Runs whose state reaches
/// an activation kink (margin < `KINK_MARGIN`) stop early with a `halt`
/// flag; non-finite states abort with the last finite time.
pub fn integrate_gf(
    spec: &BlockSpec,
    theta0: &[f64],
    data: &Dataset,
    loss: LossKind,
    wd: &WDSchedule,
    t_final: f64,
    dt: f64,
    method: Method,
) -> Result<Trajectory> {
    models::validate_spec(spec)?;
    if !(dt > 0.0) || !dt.is_finite() {
        return Err(invalid_input!("step size must be positive and finite"));
    }
    if !(t_final > 0.0) || !t_final.is_finite() {
        return Err(invalid_input!("final time must be positive and finite"));
    }
    if data.is_empty() {
        return Err(invalid_input!("gradient flow needs a nonempty dataset"));
    }
    let catalog = laws::catalog(spec);
    let mut traj = Trajectory {
        spec: spec.clone(),
        method,
        dt,
        wd: wd.clone(),
        times: Vec::new(),
        states: Vec::new(),
        law_ids: catalog.iter().map(|l| l.id.clone()).collect(),
        law_values: vec![Vec::new(); catalog.len()],
        halt: None,
    };

    let record = |traj: &mut Trajectory, t: f64, theta: &[f64]| {
        traj.times.push(t);
        traj.states.push(theta.to_vec());
        for (i, law) in catalog.iter().enumerate() {
            traj.law_values[i].push(laws::eval(law, theta));
        }
    };

    let mut theta = theta0.to_vec();
    check_finite(&theta, "gradient-flow state", 0.0)?;
    record(&mut traj, 0.0, &theta);
    let margin0 = min_margin(spec, &theta, data)?;
    if margin0 < KINK_MARGIN {
        traj.halt = Some(Halt::KinkMargin { t: 0.0, margin: margin0 });
        return Ok(traj);
    }

    // −∇L − λθ; a kink hit inside a stage evaluation surfaces as
    // NonDifferentiable and is converted into a graceful halt by the caller.
    // λ is sampled once per step at the interval midpoint: the grid is
    // kink-aligned, so λ is constant on every open step interval and the
    // right endpoint (which already belongs to the next piece) must not
    // leak its value into the final stage.
    // A diverging step can overflow inside a stage, before the post-step
    // state check runs; classify that as divergence too, not bad input.
    let field = |lam: f64, th: &[f64]| -> Result<Vec<f64>> {
        check_finite(th, "gradient-flow stage state", f64::NAN)?;
        let mut g = models::loss_grad(spec, th, data, loss)?;
        for (gi, ti) in g.iter_mut().zip(th) {
            *gi = -*gi - lam * ti;
        }
        Ok(g)
    };

    let grid = time_grid(t_final, dt, wd);
    'steps: for w in grid.windows(2) {
        let (t, t_next) = (w[0], w[1]);
        let h = t_next - t;
        let lam = wd.lambda(t + 0.5 * h);
        let stepped: Result<Vec<f64>> = (|| match method {
            Method::Euler => {
                let k1 = field(lam, &theta)?;
                Ok(theta.iter().zip(&k1).map(|(a, b)| a + h * b).collect())
            }
            Method::Rk4 => {
                let k1 = field(lam, &theta)?;
                let y2: Vec<f64> = theta.iter().zip(&k1).map(|(a, b)| a + 0.5 * h * b).collect();
                let k2 = field(lam, &y2)?;
                let y3: Vec<f64> = theta.iter().zip(&k2).map(|(a, b)| a + 0.5 * h * b).collect();
                let k3 = field(lam, &y3)?;
                let y4: Vec<f64> = theta.iter().zip(&k3).map(|(a, b)| a + h * b).collect();
                let k4 = field(lam, &y4)?;
                Ok(theta
                    .iter()
                    .enumerate()
                    .map(|(i, a)| a + h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]))
                    .collect())
            }
        })();
        match stepped {
            Ok(next) => theta = next,
            Err(CoreError::NonDifferentiable { margin }) => {
                traj.halt = Some(Halt::KinkMargin { t, margin });
                break 'steps;
            }
            Err(CoreError::NonFinite { context, .. }) => {
                return Err(CoreError::NonFinite { context, last_finite_t: Some(t) })
            }
            Err(e) => return Err(e),
        }
        check_finite(&theta, "gradient-flow state", t)?;
        record(&mut traj, t_next, &theta);
        let margin = min_margin(spec, &theta, data)?;
        if margin < KINK_MARGIN {
            traj.halt = Some(Halt::KinkMargin { t: t_next, margin });
            break 'steps;
        }
    }
    Ok(traj)
}

/// Max |h(θ(t)) − h(θ(0))| over the recorded snapshots of one law.
pub fn drift(traj: &Trajectory, law_id: &str) -> Result<f64> {
    let series = traj.law_series(law_id)?;
    Ok(series_drift(series))
}

/// Drift of every tracked law, in recording order.
pub fn drift_all(traj: &Trajectory) -> Vec<(String, f64)> {
    traj.law_ids
        .iter()
        .zip(&traj.law_values)
        .map(|(id, series)| (id.clone(), series_drift(series)))
        .collect()
}

/// Max |f(θ(t)) − f(θ(0))| of an arbitrary scalar quantity over the
/// snapshots (used for non-conserved probe quantities).
pub fn drift_of(traj: &Trajectory, mut f: impl FnMut(&[f64]) -> f64) -> f64 {
    let mut first = None;
    let mut worst = 0.0_f64;
    for state in &traj.states {
        let v = f(state);
        match first {
            None => first = Some(v),
            Some(v0) => worst = worst.max(rmath::abs(v - v0)),
        }
    }
    worst
}

fn series_drift(series: &[f64]) -> f64 {
    match series.first() {
        None => 0.0,
        Some(&v0) => series.iter().fold(0.0_f64, |acc, v| acc.max(rmath::abs(v - v0))),
    }
}

/// Max |H(θ(t)·e^{Λ(t)}) − H(θ₀)| over the snapshots: the weight-decay
/// trajectory pushed back through the rescaling under which the λ ≡ 0 law H
/// must again be constant. With λ ≡ 0 this reduces to `drift`.
pub fn structure_check(traj: &Trajectory, law: &LawDescriptor) -> Result<f64> {
    if traj.states.is_empty() {
        return Ok(0.0);
    }
    let mut scaled = vec![0.0; traj.states[0].len()];
    let mut first = 0.0;
    let mut worst = 0.0_f64;
    for (k, (t, state)) in traj.times.iter().zip(&traj.states).enumerate() {
        let factor = rmath::exp(traj.wd.integral(*t));
        for (s, v) in scaled.iter_mut().zip(state) {
            *s = factor * v;
        }
        let val = laws::eval(law, &scaled);
        if k == 0 {
            first = val;
        } else {
            worst = worst.max(rmath::abs(val - first));
        }
    }
    Ok(worst)
}

/// Integrates the sign-descent flow θ̇ = −sign(∇L_Z(θ)) with explicit Euler
/// steps, stopping (flagged) when any gradient coordinate's magnitude falls
/// below `SIGN_EVENT` — the flow is discontinuous there and the paper-level
/// analysis does not extend across the event.
///
/// For the 1×1×1 two-layer linear block the run tracks its sign-descent
/// conserved quantity |u| − |v|; all other shapes record no law. Attention
/// blocks are accepted for exploration but their sign flow has no law to
/// track either.
pub fn integrate_adam_flow(
    spec: &BlockSpec,
    theta0: &[f64],
    data: &Dataset,
    loss: LossKind,
    t_final: f64,
    dt: f64,
) -> Result<Trajectory> {
    models::validate_spec(spec)?;
    if !matches!(spec, BlockSpec::Linear2 { .. } | BlockSpec::Attention { .. }) {
        return Err(invalid_input!(
            "sign-descent flow is defined for the linear2 and attention blocks"
        ));
    }
    if !(dt > 0.0) || !dt.is_finite() {
        return Err(invalid_input!("step size must be positive and finite"));
    }
    if !(t_final > 0.0) || !t_final.is_finite() {
        return Err(invalid_input!("final time must be positive and finite"));
    }
    if data.is_empty() {
        return Err(invalid_input!("sign-descent flow needs a nonempty dataset"));
    }
    let tracked: Vec<LawDescriptor> = match laws::adam_abs_diff_law(spec) {
        Ok(law) => vec![law],
        Err(_) => Vec::new(),
    };
    let wd = WDSchedule::constant(0.0)?;
    let mut traj = Trajectory {
        spec: spec.clone(),
        method: Method::Euler,
        dt,
        wd: wd.clone(),
        times: Vec::new(),
        states: Vec::new(),
        law_ids: tracked.iter().map(|l| l.id.clone()).collect(),
        law_values: vec![Vec::new(); tracked.len()],
        halt: None,
    };
    let record = |traj: &mut Trajectory, t: f64, theta: &[f64]| {
        traj.times.push(t);
        traj.states.push(theta.to_vec());
        for (i, law) in tracked.iter().enumerate() {
            traj.law_values[i].push(laws::eval(law, theta));
        }
    };

    let mut theta = theta0.to_vec();
    check_finite(&theta, "sign-descent state", 0.0)?;
    record(&mut traj, 0.0, &theta);

    let grid = time_grid(t_final, dt, &wd);
    for w in grid.windows(2) {
        let (t, t_next) = (w[0], w[1]);
        let h = t_next - t;
        let g = models::loss_grad(spec, &theta, data, loss)?;
        if let Some(coordinate) = g.iter().position(|v| rmath::abs(*v) < SIGN_EVENT) {
            traj.halt = Some(Halt::SignStall { t, coordinate });
            break;
        }
        for (ti, gi) in theta.iter_mut().zip(&g) {
            *ti -= h * rmath::sign0(*gi);
        }
        check_finite(&theta, "sign-descent state", t)?;
        record(&mut traj, t_next, &theta);
    }
    Ok(traj)
}
