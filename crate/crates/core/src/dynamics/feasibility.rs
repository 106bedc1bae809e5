//! Pointwise check of the cone conditions on a protocol along a trajectory.
//!
//! For each sample and agent the local point set is the agent plus its in-neighbors under the
//! active graph (neighbor states sign-flipped for antagonistic arcs in the signed variant).
//! The agent's field block must lie in the chosen cone of the supporting box of that set.

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::geometry::{
    gamma_margin, meets_gamma, relative_interior_cone_contains, ConeQuery, Hyperrectangle,
};
use crate::graph::Sign;
use crate::scalar::Scalar;

use super::protocol::ProtocolSpec;
use super::integrate::Trajectory;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Assumption {
    /// Field in the gamma-strict tangent cone of the local box.
    GammaStrict,
    /// Field in the relative interior of the tangent cone of the local box.
    RelativeInterior,
    /// As `GammaStrict`, with antagonistic neighbors reflected through the origin.
    SignedGammaStrict,
}

/// Tolerances are relative to the size of each local box: the absolute facet tolerance for an
/// agent is `face_tolerance * rho(local box)`, and likewise for `strictness_tolerance`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ValidationSettings<S> {
    pub assumption: Assumption,
    pub face_tolerance: S,
    pub strictness_tolerance: S,
}

impl<S: Scalar> ValidationSettings<S> {
    pub fn new(assumption: Assumption) -> Self {
        Self {
            assumption,
            face_tolerance: S::lit(crate::geometry::DEFAULT_FACE_TOLERANCE),
            strictness_tolerance: S::lit(crate::geometry::DEFAULT_STRICTNESS_TOLERANCE),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ViolationReason {
    /// Field leaves the tangent cone or moves along a zero-width axis.
    OutsideTangentCone,
    /// Inside the tangent cone but some active facet component is below `gamma * D_k`.
    BelowGammaMargin,
    /// Some active facet component is not strictly inward.
    NotRelativeInterior,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FeasibilityViolation {
    pub sample: usize,
    pub time: f64,
    pub agent: usize,
    pub graph: usize,
    pub reason: ViolationReason,
    /// Largest gamma the field would satisfy, if it is inside the tangent cone.
    pub margin: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FeasibilityReport {
    pub assumption: Assumption,
    pub gamma: f64,
    pub samples_checked: usize,
    pub violations: Vec<FeasibilityViolation>,
    /// Smallest gamma margin observed over all constrained agents; `None` when no agent ever
    /// sat on a proper facet or some field left the tangent cone.
    pub empirical_gamma: Option<f64>,
}

impl FeasibilityReport {
    pub fn is_feasible(&self) -> bool {
        self.violations.is_empty()
    }
}

/// Verdict for a single agent at a single state.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AgentCheck<S> {
    pub ok: bool,
    pub reason: Option<ViolationReason>,
    /// `None` outside the tangent cone, `Some(inf)` with no proper facet active.
    pub margin: Option<S>,
}

/// Local box of agent `i` under graph `p`.
pub fn local_box<S: Scalar>(
    spec: &ProtocolSpec<S>,
    p: usize,
    x: &[S],
    i: usize,
    reflect_antagonists: bool,
) -> Result<Hyperrectangle<S>> {
    let d = spec.d();
    let g = spec.graph(p)?;
    let xi = &x[i * d..(i + 1) * d];
    let mut lo = xi.to_vec();
    let mut hi = xi.to_vec();
    for &(j, sign) in g.in_neighbors(i) {
        let flip = reflect_antagonists && sign == Sign::Negative;
        for k in 0..d {
            let v = if flip { -x[j * d + k] } else { x[j * d + k] };
            lo[k] = lo[k].min(v);
            hi[k] = hi[k].max(v);
        }
    }
    Hyperrectangle::new(lo, hi)
}

/// Checks the field block `f_i` of agent `i` at state `x` under graph `p`.
pub fn check_agent<S: Scalar>(
    spec: &ProtocolSpec<S>,
    settings: &ValidationSettings<S>,
    p: usize,
    x: &[S],
    field: &[S],
    i: usize,
) -> Result<AgentCheck<S>> {
    let d = spec.d();
    let reflect = settings.assumption == Assumption::SignedGammaStrict;
    let bbox = local_box(spec, p, x, i, reflect)?;
    let scale = bbox.rho();
    let query = ConeQuery {
        point: x[i * d..(i + 1) * d].to_vec(),
        bbox,
        direction: field[i * d..(i + 1) * d].to_vec(),
        gamma: spec.gamma(),
        face_tolerance: settings.face_tolerance * scale,
        strictness_tolerance: settings.strictness_tolerance * scale,
    };
    let margin = gamma_margin(&query)?;
    let check = match settings.assumption {
        Assumption::GammaStrict | Assumption::SignedGammaStrict => match margin {
            None => AgentCheck {
                ok: false,
                reason: Some(ViolationReason::OutsideTangentCone),
                margin,
            },
            Some(m) if !meets_gamma(m, spec.gamma()) => AgentCheck {
                ok: false,
                reason: Some(ViolationReason::BelowGammaMargin),
                margin,
            },
            Some(_) => AgentCheck {
                ok: true,
                reason: None,
                margin,
            },
        },
        Assumption::RelativeInterior => {
            let ok = relative_interior_cone_contains(&query)?;
            let reason = match (ok, margin) {
                (true, _) => None,
                (false, None) => Some(ViolationReason::OutsideTangentCone),
                (false, Some(_)) => Some(ViolationReason::NotRelativeInterior),
            };
            AgentCheck { ok, reason, margin }
        }
    };
    Ok(check)
}

/// Per-agent verdicts at one state.
pub fn check_state<S: Scalar>(
    spec: &ProtocolSpec<S>,
    settings: &ValidationSettings<S>,
    p: usize,
    x: &[S],
) -> Result<Vec<AgentCheck<S>>> {
    let field = spec.eval(p, x)?;
    (0..spec.n())
        .map(|i| check_agent(spec, settings, p, x, &field, i))
        .collect()
}

/// Checks every sample of `traj` and collects all violations.
pub fn validate_feasibility<S: Scalar>(
    traj: &Trajectory<S>,
    spec: &ProtocolSpec<S>,
    settings: &ValidationSettings<S>,
) -> Result<FeasibilityReport> {
    validate_with_flags(traj, spec, settings).map(|(_, report)| report)
}

/// As [`validate_feasibility`], also returning per-sample, per-agent verdicts.
pub(crate) fn validate_with_flags<S: Scalar>(
    traj: &Trajectory<S>,
    spec: &ProtocolSpec<S>,
    settings: &ValidationSettings<S>,
) -> Result<(Vec<Vec<bool>>, FeasibilityReport)> {
    if traj.n != spec.n() || traj.d != spec.d() {
        return crate::error::domain("trajectory and protocol disagree on n or d");
    }
    let mut flags = Vec::with_capacity(traj.len());
    let mut violations = Vec::new();
    let mut min_margin = S::infinity();
    let mut any_outside = false;
    for s in 0..traj.len() {
        let p = traj.active_index[s];
        let checks = check_state(spec, settings, p, &traj.states[s])?;
        flags.push(checks.iter().map(|c| c.ok).collect());
        for (i, c) in checks.iter().enumerate() {
            match c.margin {
                Some(m) => min_margin = min_margin.min(m),
                None => any_outside = true,
            }
            if let Some(reason) = c.reason {
                violations.push(FeasibilityViolation {
                    sample: s,
                    time: traj.times[s].as_f64(),
                    agent: i,
                    graph: p,
                    reason,
                    margin: c.margin.map(Scalar::as_f64),
                });
            }
        }
    }
    let empirical_gamma = (!any_outside && min_margin.is_finite()).then(|| min_margin.as_f64());
    let report = FeasibilityReport {
        assumption: settings.assumption,
        gamma: spec.gamma().as_f64(),
        samples_checked: traj.len(),
        violations,
        empirical_gamma,
    };
    Ok((flags, report))
}
