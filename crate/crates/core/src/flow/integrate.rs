use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::rhs::velocity;
use super::state::FlowState;
use crate::error::{Error, Result};

/// When snapshots are taken, counted in accepted steps.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Snapshots {
    Every(usize),
    /// Steps `first, first·ratio, first·ratio², …` (rounded, strictly increasing).
    Geometric { first: usize, ratio: f64 },
}

/// Stop once `max_n |K(n) - r/2| < tol` holds for `consecutive` snapshots in a row.
/// Only applied to normalized flows.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StopRule {
    pub tol: f64,
    pub consecutive: usize,
}

impl Default for StopRule {
    fn default() -> Self {
        Self { tol: 1e-10, consecutive: 10 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IntegrateOptions {
    pub snapshots: Snapshots,
    pub stop: Option<StopRule>,
    /// Local error target for step-doubling; `None` keeps the step fixed.
    pub adaptive: Option<f64>,
    /// Smallest step the adaptive controller may take.
    pub min_dt: f64,
}

impl Default for IntegrateOptions {
    fn default() -> Self {
        Self { snapshots: Snapshots::Every(100), stop: Some(StopRule::default()), adaptive: None, min_dt: 1e-9 }
    }
}

pub const DEFAULT_DT: f64 = 1e-3;

/// Snapshots of a flow run with the monitored quantities.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FlowTrace {
    pub times: Vec<f64>,
    pub states: Vec<FlowState>,
    /// `K(n, t)` per snapshot.
    pub gauss_history: Vec<Vec<f64>>,
    /// `Σ A(x)(i, t)`.
    pub area_history: Vec<f64>,
    pub r_history: Vec<f64>,
    /// Pin residual after projection at each snapshot.
    pub constraint_history: Vec<f64>,
    /// Largest pin residual seen before projection since the previous snapshot.
    pub pre_projection_residual: Vec<f64>,
    pub stopped_early: bool,
    pub steps: usize,
}

impl FlowTrace {
    fn new() -> Self {
        Self {
            times: vec![],
            states: vec![],
            gauss_history: vec![],
            area_history: vec![],
            r_history: vec![],
            constraint_history: vec![],
            pre_projection_residual: vec![],
            stopped_early: false,
            steps: 0,
        }
    }

    fn record(&mut self, state: &FlowState, pre_residual: f64) -> Result<f64> {
        let layers = state.layers()?;
        let r = layers.r();
        let gauss: Vec<f64> = layers.faces.iter().map(|g| g.gauss).collect();
        let spread = gauss.iter().map(|k| (k - 0.5 * r).abs()).fold(0.0, f64::max);
        self.times.push(state.time());
        self.area_history.push(layers.total_area());
        self.r_history.push(r);
        self.gauss_history.push(gauss);
        self.constraint_history.push(state.constraint_residual()?);
        self.pre_projection_residual.push(pre_residual);
        self.states.push(state.clone());
        Ok(spread)
    }

    pub fn last(&self) -> &FlowState {
        self.states.last().expect("trace always holds the initial state")
    }

    /// Largest `|ΣA(t) - ΣA(0)| / ΣA(0)`.
    pub fn max_relative_area_drift(&self) -> f64 {
        let a0 = self.area_history[0];
        self.area_history.iter().map(|a| (a - a0).abs() / a0).fold(0.0, f64::max)
    }

    /// `max_n K - min_n K` at every snapshot.
    pub fn gauss_spread_history(&self) -> Vec<f64> {
        self.gauss_history
            .iter()
            .map(|ks| {
                let max = ks.iter().copied().fold(f64::NEG_INFINITY, f64::max);
                let min = ks.iter().copied().fold(f64::INFINITY, f64::min);
                max - min
            })
            .collect()
    }
}

fn rk4_step(x: &[f64], dt: f64, rhs: &impl Fn(&[f64]) -> Result<Vec<f64>>) -> Result<Vec<f64>> {
    let add = |base: &[f64], k: &[f64], s: f64| -> Vec<f64> { base.iter().zip(k).map(|(b, k)| b + s * k).collect() };
    let k1 = rhs(x)?;
    let k2 = rhs(&add(x, &k1, 0.5 * dt))?;
    let k3 = rhs(&add(x, &k2, 0.5 * dt))?;
    let k4 = rhs(&add(x, &k3, dt))?;
    Ok((0..x.len())
        .map(|i| x[i] + dt / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]))
        .collect())
}

fn check_geometry(x: &[f64], k: usize) -> std::result::Result<(), String> {
    let (f, dh) = x.split_at(k + 1);
    if let Some(n) = f.iter().position(|v| !v.is_finite() || *v < 0.0) {
        return Err(format!("radius f({n}) = {} left the admissible range", f[n]));
    }
    for n in 0..k {
        let df = f[n + 1] - f[n];
        if df * df + dh[n] * dh[n] == 0.0 || !dh[n].is_finite() {
            return Err(format!("profile edge {n} collapsed"));
        }
        if f[n] == 0.0 && f[n + 1] == 0.0 {
            return Err(format!("band {n} degenerated to the axis"));
        }
    }
    Ok(())
}

struct Schedule {
    kind: Snapshots,
    next: usize,
}

impl Schedule {
    fn new(kind: Snapshots) -> Result<Self> {
        let next = match kind {
            Snapshots::Every(n) if n > 0 => n,
            Snapshots::Geometric { first, ratio } if first > 0 && ratio > 1.0 => first,
            _ => return Err(Error::Config(format!("invalid snapshot schedule {kind:?}"))),
        };
        Ok(Self { kind, next })
    }

    fn due(&mut self, step: usize) -> bool {
        if step < self.next {
            return false;
        }
        self.next = match self.kind {
            Snapshots::Every(n) => step + n,
            Snapshots::Geometric { ratio, .. } => ((step as f64 * ratio).round() as usize).max(step + 1),
        };
        true
    }
}

/// Integrates the flow from `initial` to `t_end` with classical RK4 at step `dt`,
/// projecting onto the pins after every step.
pub fn integrate(initial: &FlowState, t_end: f64, dt: f64, opts: &IntegrateOptions) -> Result<FlowTrace> {
    if !(dt > 0.0 && dt.is_finite()) {
        return Err(Error::Config(format!("dt must be positive, got {dt}")));
    }
    if t_end < initial.time() {
        return Err(Error::Config(format!("t_end {t_end} precedes the initial time {}", initial.time())));
    }
    let (k, l, bc) = (initial.k(), initial.l(), initial.bc());
    let rhs = |x: &[f64]| velocity(x, k, l, bc);
    let stop = opts.stop.filter(|_| bc.is_normalized());
    let mut schedule = Schedule::new(opts.snapshots)?;

    let mut trace = FlowTrace::new();
    let mut state = initial.clone();
    let mut quiet = 0usize;
    let spread = trace.record(&state, 0.0)?;
    if let Some(rule) = stop {
        if spread < rule.tol {
            quiet += 1;
        }
    }

    let mut t = initial.time();
    let mut h = dt;
    let mut pre_residual: f64 = 0.0;
    let mut step = 0usize;
    let fail = |t: f64, e: Error| match e {
        e @ Error::SingularJacobian { .. } => e,
        e @ Error::StepFailure { .. } => e,
        other => Error::StepFailure { time: t, reason: other.to_string() },
    };
    let span = (t_end - t).max(1.0);
    while t_end - t > 1e-12 * span {
        let this_dt = h.min(t_end - t);
        let x = state.to_vector();
        let (next, used) = match opts.adaptive {
            None => (rk4_step(&x, this_dt, &rhs).map_err(|e| fail(t, e))?, this_dt),
            Some(tol) => {
                let mut trial = this_dt;
                loop {
                    let full = rk4_step(&x, trial, &rhs);
                    let half = rk4_step(&x, 0.5 * trial, &rhs)
                        .and_then(|mid| rk4_step(&mid, 0.5 * trial, &rhs));
                    match (full, half) {
                        (Ok(full), Ok(half)) => {
                            let err = full.iter().zip(&half).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
                            if err <= tol || trial * 0.5 < opts.min_dt {
                                if err < tol / 32.0 {
                                    h = (2.0 * h).min(dt);
                                }
                                break (half, trial);
                            }
                        }
                        (Err(e), _) | (_, Err(e)) => {
                            if trial * 0.5 < opts.min_dt {
                                return Err(fail(t, e));
                            }
                        }
                    }
                    trial *= 0.5;
                    h = trial;
                }
            }
        };
        t += used;
        step += 1;
        check_geometry(&next, k).map_err(|reason| Error::StepFailure { time: t, reason })?;
        let mut candidate = FlowState::from_vector(&next, initial, t);
        pre_residual = pre_residual.max(candidate.constraint_residual().map_err(|e| fail(t, e))?);
        candidate.project().map_err(|e| fail(t, e))?;
        state = candidate;

        let finished = t_end - t <= 1e-12 * span;
        if schedule.due(step) || finished {
            let spread = trace.record(&state, pre_residual).map_err(|e| fail(t, e))?;
            pre_residual = 0.0;
            if let Some(rule) = stop {
                quiet = if spread < rule.tol { quiet + 1 } else { 0 };
                if quiet >= rule.consecutive {
                    trace.stopped_early = !finished;
                    break;
                }
            }
        }
    }
    trace.steps = step;
    Ok(trace)
}

/// Independent runs in parallel; results keep the input order.
pub fn integrate_batch(
    initials: &[FlowState],
    t_end: f64,
    dt: f64,
    opts: &IntegrateOptions,
) -> Vec<Result<FlowTrace>> {
    initials.par_iter().map(|s| integrate(s, t_end, dt, opts)).collect()
}
