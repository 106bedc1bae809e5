//! Agreement and Lyapunov metrics over trajectories, monotonicity monitors, rate fitting and
//! the explicit exponential rate bound.

use serde::{Deserialize, Serialize};

use crate::dynamics::Trajectory;
use crate::error::{domain, Result};
use crate::scalar::Scalar;

/// Values below this are treated as exact agreement when fitting log-rates.
pub const LOG_FLOOR: f64 = 1e-14;
pub const DEFAULT_TAIL_FRACTION: f64 = 0.5;

/// Per-axis maxima and minima over agents of one stacked state.
pub fn axis_extrema<S: Scalar>(x: &[S], n: usize, d: usize) -> (Vec<S>, Vec<S>) {
    let mut hi = vec![S::neg_infinity(); d];
    let mut lo = vec![S::infinity(); d];
    for i in 0..n {
        for k in 0..d {
            let v = x[i * d + k];
            hi[k] = hi[k].max(v);
            lo[k] = lo[k].min(v);
        }
    }
    (hi, lo)
}

fn per_sample<S: Scalar, T>(traj: &Trajectory<S>, f: impl Fn(&[S]) -> T) -> Vec<T> {
    traj.states.iter().map(|x| f(x)).collect()
}

/// Side lengths `D_k` of the supporting box of the agents at every sample.
pub fn diameters<S: Scalar>(traj: &Trajectory<S>) -> Vec<Vec<S>> {
    per_sample(traj, |x| {
        let (hi, lo) = axis_extrema(x, traj.n, traj.d);
        hi.iter().zip(&lo).map(|(h, l)| *h - *l).collect()
    })
}

/// `V = max_k D_k` at every sample.
pub fn lyapunov_series<S: Scalar>(traj: &Trajectory<S>) -> Vec<S> {
    diameters(traj)
        .into_iter()
        .map(|dk| dk.into_iter().fold(S::zero(), S::max))
        .collect()
}

/// `max_i |x_ik|` per axis at every sample.
pub fn signed_max<S: Scalar>(traj: &Trajectory<S>) -> Vec<Vec<S>> {
    per_sample(traj, |x| {
        (0..traj.d)
            .map(|k| (0..traj.n).fold(S::zero(), |m, i| m.max(x[i * traj.d + k].abs())))
            .collect()
    })
}

/// `y_k = max_i x_ik^2` per axis at every sample.
pub fn squared_extent<S: Scalar>(traj: &Trajectory<S>) -> Vec<Vec<S>> {
    signed_max(traj)
        .into_iter()
        .map(|m| m.into_iter().map(|v| v * v).collect())
        .collect()
}

/// `max_i |x_ik| - min_i |x_ik|` per axis at every sample.
pub fn abs_spread<S: Scalar>(traj: &Trajectory<S>) -> Vec<Vec<S>> {
    per_sample(traj, |x| {
        (0..traj.d)
            .map(|k| {
                let (hi, lo) = (0..traj.n).fold((S::zero(), S::infinity()), |(hi, lo), i| {
                    let a = x[i * traj.d + k].abs();
                    (hi.max(a), lo.min(a))
                });
                hi - lo
            })
            .collect()
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MonitorMode {
    /// Per-axis maxima must not grow and minima must not shrink.
    CooperativeBox,
    /// `max_i x_ik^2` must not grow.
    SignedSquare,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MonitoredQuantity {
    AxisMax,
    AxisMin,
    SquaredExtent,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MonitorViolation {
    pub sample: usize,
    pub time: f64,
    pub axis: usize,
    pub quantity: MonitoredQuantity,
    /// Amount by which the quantity moved the wrong way.
    pub excess: f64,
}

/// `1e-8 * max(1, V(t0))`.
pub fn default_monotone_tolerance<S: Scalar>(traj: &Trajectory<S>) -> S {
    let (hi, lo) = axis_extrema(&traj.states[0], traj.n, traj.d);
    let v0 = hi.iter().zip(&lo).fold(S::zero(), |m, (h, l)| m.max(*h - *l));
    S::lit(1e-8) * v0.max(S::one())
}

/// Sample-to-sample check of the invariant-set property selected by `mode`.
pub fn monotonicity_monitor<S: Scalar>(
    traj: &Trajectory<S>,
    mode: MonitorMode,
    tol: S,
) -> Vec<MonitorViolation> {
    let mut out = Vec::new();
    let mut push = |s: usize, axis, quantity, excess: S| {
        out.push(MonitorViolation {
            sample: s,
            time: traj.times[s].as_f64(),
            axis,
            quantity,
            excess: excess.as_f64(),
        })
    };
    match mode {
        MonitorMode::CooperativeBox => {
            let ext = per_sample(traj, |x| axis_extrema(x, traj.n, traj.d));
            for s in 1..ext.len() {
                let ((hi0, lo0), (hi1, lo1)) = (&ext[s - 1], &ext[s]);
                for k in 0..traj.d {
                    if hi1[k] - hi0[k] > tol {
                        push(s, k, MonitoredQuantity::AxisMax, hi1[k] - hi0[k]);
                    }
                    if lo0[k] - lo1[k] > tol {
                        push(s, k, MonitoredQuantity::AxisMin, lo0[k] - lo1[k]);
                    }
                }
            }
        }
        MonitorMode::SignedSquare => {
            let y = squared_extent(traj);
            for s in 1..y.len() {
                for k in 0..traj.d {
                    let inc = y[s][k] - y[s - 1][k];
                    if inc > tol {
                        push(s, k, MonitoredQuantity::SquaredExtent, inc);
                    }
                }
            }
        }
    }
    out
}

/// Largest distance by which any agent at any sample lies outside the initial supporting box.
pub fn max_initial_box_excursion<S: Scalar>(traj: &Trajectory<S>) -> S {
    let (hi0, lo0) = axis_extrema(&traj.states[0], traj.n, traj.d);
    traj.states
        .iter()
        .flat_map(|x| x.chunks(traj.d))
        .flat_map(|xi| {
            xi.iter()
                .enumerate()
                .map(|(k, v)| (*v - hi0[k]).max(lo0[k] - *v))
                .collect::<Vec<_>>()
        })
        .fold(S::zero(), S::max)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RateFit {
    /// Negated least-squares slope of `ln V` against `t`.
    pub lambda_hat: f64,
    pub r2: f64,
    pub points_used: usize,
    /// True when the series hit the numerical floor and later samples were dropped.
    pub truncated: bool,
}

/// Log-linear least-squares fit over the last `tail_fraction` of the samples before the
/// series first falls below [`LOG_FLOOR`].
pub fn fit_exponential_rate<S: Scalar>(times: &[S], values: &[S], tail_fraction: f64) -> Result<RateFit> {
    if times.len() != values.len() {
        return domain("times and values must have equal length");
    }
    if !(tail_fraction > 0.0 && tail_fraction <= 1.0) {
        return domain(format!("tail fraction must lie in (0, 1], got {tail_fraction}"));
    }
    let cut = values
        .iter()
        .position(|v| !(v.as_f64() >= LOG_FLOOR))
        .unwrap_or(values.len());
    let truncated = cut < values.len();
    let take = ((cut as f64) * tail_fraction).ceil() as usize;
    if take < 2 {
        return domain("fewer than two samples above the floor in the fitted tail");
    }
    let pts: Vec<(f64, f64)> = (cut - take..cut)
        .map(|i| (times[i].as_f64(), values[i].as_f64().ln()))
        .collect();
    let m = pts.len() as f64;
    let (mt, my) = pts
        .iter()
        .fold((0.0, 0.0), |(a, b), (t, y)| (a + t / m, b + y / m));
    let (mut stt, mut sty, mut syy) = (0.0, 0.0, 0.0);
    for (t, y) in &pts {
        stt += (t - mt) * (t - mt);
        sty += (t - mt) * (y - my);
        syy += (y - my) * (y - my);
    }
    if stt == 0.0 {
        return domain("fitted samples share one time");
    }
    // A constant series has exactly zero slope; avoid reporting rounding residue.
    let flat = pts.iter().all(|(_, y)| *y == pts[0].1);
    let slope = if flat { 0.0 } else { sty / stt };
    let ss_res: f64 = pts
        .iter()
        .map(|(t, y)| {
            let r = y - (my + slope * (t - mt));
            r * r
        })
        .sum();
    let r2 = if flat { 1.0 } else { 1.0 - ss_res / syy };
    Ok(RateFit {
        lambda_hat: -slope,
        r2,
        points_used: pts.len(),
        truncated,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AbsoluteAgreement {
    pub axes: Vec<bool>,
    pub final_spread: Vec<f64>,
}

impl AbsoluteAgreement {
    pub fn all(&self) -> bool {
        self.axes.iter().all(|&a| a)
    }
}

/// Componentwise agreement in absolute value: per axis, the final spread is within `tol` and
/// the spread over the later half of the tail never exceeds its peak over the earlier half by
/// more than `tol_monotone`. The two-half comparison tolerates the oscillation that signed
/// dynamics produce while still rejecting growth.
pub fn absolute_value_agreement<S: Scalar>(
    traj: &Trajectory<S>,
    tol: S,
    tol_monotone: S,
) -> AbsoluteAgreement {
    let spread = abs_spread(traj);
    let m = spread.len();
    let tail_start = m - ((m as f64) * DEFAULT_TAIL_FRACTION).ceil() as usize;
    let mid = tail_start + (m - tail_start) / 2;
    let last = &spread[m - 1];
    let axes = (0..traj.d)
        .map(|k| {
            let peak = |r: std::ops::Range<usize>| r.map(|s| spread[s][k]).fold(S::zero(), S::max);
            let early = peak(tail_start..mid.max(tail_start + 1).min(m));
            let late = peak(mid..m);
            last[k] <= tol && late <= early + tol_monotone
        })
        .collect();
    AbsoluteAgreement {
        axes,
        final_spread: last.iter().map(|v| v.as_f64()).collect(),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct AgreementVerdict {
    pub agreed: bool,
    /// First sample time from which `V <= eps` holds through the end of the trajectory.
    pub time_to_agreement: Option<f64>,
}

/// `V(final) <= eps`, with the entry time into the `eps` band.
pub fn agreement_verdict<S: Scalar>(traj: &Trajectory<S>, eps: S) -> Result<AgreementVerdict> {
    if !(eps > S::zero()) {
        return domain(format!("agreement threshold must be positive, got {eps}"));
    }
    let v = lyapunov_series(traj);
    let agreed = v[v.len() - 1] <= eps;
    let time_to_agreement = agreed.then(|| {
        let first = v.iter().rposition(|x| *x > eps).map_or(0, |s| s + 1);
        traj.times[first].as_f64()
    });
    Ok(AgreementVerdict {
        agreed,
        time_to_agreement,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RateBound {
    pub beta: f64,
    pub beta_star: f64,
}

/// `T_bar = n^2 (T + 2 tau_d)` for joint-connectivity window `T` and dwell time `tau_d`.
pub fn t_bar_from(n: usize, window: f64, tau_d: f64) -> Result<f64> {
    if n < 2 {
        return domain(format!("need at least two agents, got {n}"));
    }
    if !(window > 0.0 && tau_d > 0.0) || !window.is_finite() || !tau_d.is_finite() {
        return domain("window and dwell time must be positive and finite");
    }
    Ok((n * n) as f64 * (window + 2.0 * tau_d))
}

/// Contraction factor `beta` of `V` over one `T_bar` period and the implied exponential
/// rate `beta*`:
///
/// `beta = exp(-n L* T_bar) * min{ (gamma tau_d)^(n-1) / (2 (L+ tau_d + 1)^(n-1)), 1/2 }`,
/// `beta* = ln(1 / (1 - beta)) / (d T_bar)`.
///
/// `l_star` and `l_plus` are Lipschitz constants of the fields that the caller must supply.
/// Evaluated in log space so large `n` underflows gracefully instead of producing NaN.
pub fn rate_bound(
    n: usize,
    d: usize,
    t_bar: f64,
    gamma: f64,
    tau_d: f64,
    l_star: f64,
    l_plus: f64,
) -> Result<RateBound> {
    if n < 2 {
        return domain(format!("need at least two agents, got {n}"));
    }
    if d == 0 {
        return domain("state dimension must be positive");
    }
    for (name, v) in [
        ("T_bar", t_bar),
        ("gamma", gamma),
        ("tau_d", tau_d),
        ("L_star", l_star),
        ("L_plus", l_plus),
    ] {
        if !(v > 0.0) || !v.is_finite() {
            return domain(format!("{name} must be positive and finite, got {v}"));
        }
    }
    let m = (n - 1) as f64;
    let ln_ratio = m * (gamma * tau_d).ln() - std::f64::consts::LN_2 - m * (l_plus * tau_d).ln_1p();
    let ln_beta = -(n as f64) * l_star * t_bar + ln_ratio.min(-std::f64::consts::LN_2);
    let beta = ln_beta.exp();
    let beta_star = -(-beta).ln_1p() / (d as f64 * t_bar);
    Ok(RateBound { beta, beta_star })
}

/// Summary of a trajectory's agreement behavior.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AgreementReport {
    pub times: Vec<f64>,
    pub v: Vec<f64>,
    pub diameters: Vec<Vec<f64>>,
    pub axis_max: Vec<Vec<f64>>,
    pub axis_min: Vec<Vec<f64>>,
    pub signed_max: Vec<Vec<f64>>,
    pub squared_extent: Vec<Vec<f64>>,
    pub abs_spread: Vec<Vec<f64>>,
    pub fit: Option<RateFit>,
    pub agreement: AgreementVerdict,
    pub absolute_agreement: AbsoluteAgreement,
}

fn widen<S: Scalar>(rows: Vec<Vec<S>>) -> Vec<Vec<f64>> {
    rows.into_iter()
        .map(|r| r.into_iter().map(Scalar::as_f64).collect())
        .collect()
}

impl AgreementReport {
    /// `fit` is `None` when too few samples remain above the floor to fit a rate.
    pub fn from_trajectory<S: Scalar>(traj: &Trajectory<S>, eps: S, tail_fraction: f64) -> Result<Self> {
        let v = lyapunov_series(traj);
        let ext: Vec<(Vec<S>, Vec<S>)> = per_sample(traj, |x| axis_extrema(x, traj.n, traj.d));
        let (axis_max, axis_min): (Vec<_>, Vec<_>) = ext.into_iter().unzip();
        let fit = fit_exponential_rate(&traj.times, &v, tail_fraction).ok();
        let tol_monotone = default_monotone_tolerance(traj);
        Ok(Self {
            times: traj.times.iter().map(|t| t.as_f64()).collect(),
            v: v.iter().map(|x| x.as_f64()).collect(),
            diameters: widen(diameters(traj)),
            axis_max: widen(axis_max),
            axis_min: widen(axis_min),
            signed_max: widen(signed_max(traj)),
            squared_extent: widen(squared_extent(traj)),
            abs_spread: widen(abs_spread(traj)),
            fit,
            agreement: agreement_verdict(traj, eps)?,
            absolute_agreement: absolute_value_agreement(traj, eps, tol_monotone),
        })
    }
}
