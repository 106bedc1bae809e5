//! Fixed-step RK4 for the switched system `x' = f_sigma(t)(x)`.
//!
//! Steps never straddle a switching instant: the sample grid `t0 + k h` is augmented with
//! every switch in `(t0, t_end)` and with `t_end`, and each interval between consecutive
//! samples is one RK4 step with the graph active at its left end.

use serde::Serialize;

use crate::error::{domain, Error, Result};
use crate::graph::{validate_switching_signal, SwitchingSignal};
use crate::scalar::Scalar;

use super::feasibility::{validate_with_flags, FeasibilityReport, ValidationSettings};
use super::protocol::ProtocolSpec;

pub const DEFAULT_STEP: f64 = 1e-3;

#[derive(Debug, Clone, PartialEq)]
pub struct SimulationConfig<S> {
    /// Stacked initial state, agent-major (`x[i * d + k]`).
    pub x0: Vec<S>,
    pub t_end: S,
    pub h: S,
    /// Check the cone condition at every sample when set.
    pub validation: Option<ValidationSettings<S>>,
}

impl<S: Scalar> SimulationConfig<S> {
    pub fn new(x0: Vec<S>, t_end: S) -> Self {
        Self {
            x0,
            t_end,
            h: S::lit(DEFAULT_STEP),
            validation: None,
        }
    }

    pub fn with_step(mut self, h: S) -> Self {
        self.h = h;
        self
    }

    pub fn with_validation(mut self, settings: ValidationSettings<S>) -> Self {
        self.validation = Some(settings);
        self
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Trajectory<S> {
    pub n: usize,
    pub d: usize,
    pub times: Vec<S>,
    pub states: Vec<Vec<S>>,
    /// Graph index active on `[times[s], times[s + 1])`.
    pub active_index: Vec<usize>,
    /// Per-sample, per-agent cone verdicts when validation ran.
    pub feasibility_flags: Option<Vec<Vec<bool>>>,
    pub feasibility: Option<FeasibilityReport>,
}

impl<S: Scalar> Trajectory<S> {
    /// Builds a trajectory from explicit samples, e.g. for post-processing external data.
    pub fn from_samples(
        n: usize,
        d: usize,
        times: Vec<S>,
        states: Vec<Vec<S>>,
        active_index: Vec<usize>,
    ) -> Result<Self> {
        if times.is_empty() {
            return domain("trajectory needs at least one sample");
        }
        if states.len() != times.len() || active_index.len() != times.len() {
            return domain("times, states and active indices must have equal length");
        }
        if states.iter().any(|x| x.len() != n * d) {
            return domain(format!("every state must have length n*d = {}", n * d));
        }
        if times.windows(2).any(|w| !(w[0] < w[1])) {
            return domain("sample times must be strictly increasing");
        }
        Ok(Self {
            n,
            d,
            times,
            states,
            active_index,
            feasibility_flags: None,
            feasibility: None,
        })
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn agent(&self, sample: usize, i: usize) -> &[S] {
        &self.states[sample][i * self.d..(i + 1) * self.d]
    }

    pub fn final_state(&self) -> &[S] {
        &self.states[self.states.len() - 1]
    }

    pub fn final_time(&self) -> S {
        self.times[self.times.len() - 1]
    }
}

/// Sample times on `[t0, t_end]`: the uniform grid plus switch instants and `t_end`. Points
/// closer than a tiny fraction of `h` collapse onto the switch or end point.
pub fn sample_times<S: Scalar>(signal: &SwitchingSignal<S>, t0: S, t_end: S, h: S) -> Vec<S> {
    let merge = h * S::lit(1e-9);
    let steps = ((t_end - t0) / h).floor().to_usize().unwrap_or(0);
    let mut pts: Vec<S> = (0..=steps).map(|k| t0 + S::from_usize_lossy(k) * h).collect();
    pts.retain(|&t| t < t_end - merge);
    let mut anchors = signal.switch_times(t0, t_end);
    anchors.push(t_end);
    for a in anchors {
        pts.retain(|&t| (t - a).abs() > merge || t == t0);
        pts.push(a);
    }
    pts.sort_by(|a, b| a.partial_cmp(b).expect("finite"));
    pts.dedup();
    pts
}

fn rk4_step<S: Scalar>(
    spec: &ProtocolSpec<S>,
    p: usize,
    x: &[S],
    h: S,
    k: &mut [Vec<S>; 4],
    tmp: &mut [S],
) -> Result<Vec<S>> {
    let half = S::lit(0.5);
    spec.eval_into(p, x, &mut k[0])?;
    for ((t, xi), ki) in tmp.iter_mut().zip(x).zip(&k[0]) {
        *t = *xi + half * h * *ki;
    }
    spec.eval_into(p, tmp, &mut k[1])?;
    for ((t, xi), ki) in tmp.iter_mut().zip(x).zip(&k[1]) {
        *t = *xi + half * h * *ki;
    }
    spec.eval_into(p, tmp, &mut k[2])?;
    for ((t, xi), ki) in tmp.iter_mut().zip(x).zip(&k[2]) {
        *t = *xi + h * *ki;
    }
    spec.eval_into(p, tmp, &mut k[3])?;
    let sixth = h / S::lit(6.0);
    Ok((0..x.len())
        .map(|j| x[j] + sixth * (k[0][j] + S::lit(2.0) * (k[1][j] + k[2][j]) + k[3][j]))
        .collect())
}

/// Integrates `spec` under `signal` from `signal.t0()` to `config.t_end`.
pub fn simulate<S: Scalar>(
    spec: &ProtocolSpec<S>,
    signal: &SwitchingSignal<S>,
    config: &SimulationConfig<S>,
) -> Result<Trajectory<S>> {
    let (n, d) = (spec.n(), spec.d());
    if config.x0.len() != n * d {
        return domain(format!(
            "initial state has length {} but n*d = {}",
            config.x0.len(),
            n * d
        ));
    }
    if config.x0.iter().any(|v| !v.is_finite()) {
        return domain("initial state must be finite");
    }
    if !(config.h > S::zero()) || !config.h.is_finite() {
        return domain(format!("step size must be positive, got {}", config.h));
    }
    let violations = validate_switching_signal(signal);
    if let Some(v) = violations.first() {
        return domain(format!("invalid switching signal: {v:?}"));
    }
    if signal.max_index() >= spec.family().len() {
        return domain(format!(
            "signal references graph {} but the family has {} members",
            signal.max_index(),
            spec.family().len()
        ));
    }
    let t0 = signal.t0();
    if !(config.t_end > t0) || !config.t_end.is_finite() {
        return domain(format!("t_end {} must exceed the start time {t0}", config.t_end));
    }
    if !signal.is_periodic() && config.t_end > signal.horizon_end() {
        return domain(format!(
            "t_end {} lies past the signal horizon {}",
            config.t_end,
            signal.horizon_end()
        ));
    }

    let times = sample_times(signal, t0, config.t_end, config.h);
    let mut states = Vec::with_capacity(times.len());
    let mut active = Vec::with_capacity(times.len());
    let mut k: [Vec<S>; 4] = std::array::from_fn(|_| vec![S::zero(); n * d]);
    let mut tmp = vec![S::zero(); n * d];
    let mut x = config.x0.clone();
    let half = S::lit(0.5);
    for (s, &t) in times.iter().enumerate() {
        // Query at the step midpoint so rounding at a switch instant cannot pick the wrong side.
        let probe = times.get(s + 1).map_or(t, |&next| half * (t + next));
        let p = signal.index_at(probe)?;
        states.push(x.clone());
        active.push(p);
        if let Some(&next) = times.get(s + 1) {
            x = rk4_step(spec, p, &x, next - t, &mut k, &mut tmp)?;
            if x.iter().any(|v| !v.is_finite()) {
                return Err(Error::Divergence { time: next.as_f64() });
            }
        }
    }

    let mut traj = Trajectory::from_samples(n, d, times, states, active)?;
    if let Some(settings) = &config.validation {
        let (flags, report) = validate_with_flags(&traj, spec, settings)?;
        traj.feasibility_flags = Some(flags);
        traj.feasibility = Some(report);
    }
    Ok(traj)
}
