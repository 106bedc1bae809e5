//! Scenario file schema and its translation into core objects.
//!
//! Node labels in `graphs` and arc weights are 1-based, as are rotation axes. Graph indices
//! in the switching signal and in weight overrides are 0-based positions in `graphs`.

use std::path::Path;

use compass_core::dynamics::{
    Assumption, ProtocolKind, ProtocolSpec, Rotation, SimulationConfig, ValidationSettings,
    DEFAULT_STEP,
};
use compass_core::geometry::{DEFAULT_FACE_TOLERANCE, DEFAULT_STRICTNESS_TOLERANCE};
use compass_core::graph::{SignedDigraph, SwitchingSignal};
use compass_core::metrics::{MonitorMode, DEFAULT_TAIL_FRACTION};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::CliError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub agents: AgentsConfig,
    pub protocol: ProtocolConfig,
    pub graphs: Vec<SignedDigraph>,
    pub signal: SwitchingSignal<f64>,
    pub integrator: IntegratorConfig,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub validation: Option<ValidationConfig>,
    #[serde(default)]
    pub monitors: MonitorsConfig,
    #[serde(default)]
    pub outputs: OutputsConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AgentsConfig {
    pub n: usize,
    pub d: usize,
    /// One row of length `d` per agent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub initial_states: Option<Vec<Vec<f64>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sample: Option<SampleConfig>,
}

/// Initial states drawn uniformly from the box `[lo, hi]` with a fixed seed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SampleConfig {
    pub seed: u64,
    pub lo: Vec<f64>,
    pub hi: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProtocolConfig {
    pub kind: ProtocolKind,
    #[serde(default = "one")]
    pub weight: f64,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub weights: Vec<WeightOverride>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rotation: Option<RotationConfig>,
    /// Declared cone margin; defaults to the smallest arc weight.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gamma: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WeightOverride {
    pub graph: usize,
    pub from: usize,
    pub to: usize,
    pub value: f64,
}

/// Exactly one of the fields must be set. Planes are `[axis_a, axis_b, angle]`.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RotationConfig {
    /// Same planar angle for every agent (`d = 2`).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub theta: Option<f64>,
    /// Same Givens product for every agent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub givens: Option<Vec<(usize, usize, f64)>>,
    /// One Givens product per agent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub per_agent: Option<Vec<Vec<(usize, usize, f64)>>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IntegratorConfig {
    #[serde(default = "default_step")]
    pub h: f64,
    pub t_end: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ValidationConfig {
    pub assumption: Assumption,
    #[serde(default = "default_face_tolerance")]
    pub face_tolerance: f64,
    #[serde(default = "default_strictness_tolerance")]
    pub strictness_tolerance: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MonitorsConfig {
    /// Defaults to `signed_square` for the signed protocol and `cooperative_box` otherwise.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mode: Option<MonitorMode>,
    /// Defaults to `1e-8 * max(1, V(t0))`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tol_monotone: Option<f64>,
    #[serde(default = "default_eps")]
    pub eps_agreement: f64,
    #[serde(default = "default_tail")]
    pub tail_fraction: f64,
}

impl Default for MonitorsConfig {
    fn default() -> Self {
        Self {
            mode: None,
            tol_monotone: None,
            eps_agreement: default_eps(),
            tail_fraction: default_tail(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputsConfig {
    #[serde(default = "default_csv")]
    pub trajectory_csv: String,
    #[serde(default = "default_metrics")]
    pub metrics_json: String,
    /// Write every `downsample`-th sample to the CSV (the last sample is always written).
    #[serde(default = "one_usize")]
    pub downsample: usize,
}

impl Default for OutputsConfig {
    fn default() -> Self {
        Self {
            trajectory_csv: default_csv(),
            metrics_json: default_metrics(),
            downsample: 1,
        }
    }
}

fn one() -> f64 {
    1.0
}
fn one_usize() -> usize {
    1
}
fn default_step() -> f64 {
    DEFAULT_STEP
}
fn default_face_tolerance() -> f64 {
    DEFAULT_FACE_TOLERANCE
}
fn default_strictness_tolerance() -> f64 {
    DEFAULT_STRICTNESS_TOLERANCE
}
fn default_eps() -> f64 {
    1e-6
}
fn default_tail() -> f64 {
    DEFAULT_TAIL_FRACTION
}
fn default_csv() -> String {
    "trajectory.csv".into()
}
fn default_metrics() -> String {
    "metrics.json".into()
}

/// Parses a scenario, reporting the failing field path together with line and column.
pub fn parse_scenario(text: &str) -> Result<ScenarioConfig, CliError> {
    let de = &mut serde_json::Deserializer::from_str(text);
    let config: ScenarioConfig = serde_path_to_error::deserialize(de).map_err(|e| {
        let inner = e.inner();
        CliError::Config(format!(
            "line {}, column {}: at `{}`: {}",
            inner.line(),
            inner.column(),
            e.path(),
            inner
        ))
    })?;
    config.validate()?;
    Ok(config)
}

pub fn load_scenario(path: &Path) -> Result<ScenarioConfig, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
    parse_scenario(&text).map_err(|e| match e {
        CliError::Config(msg) => CliError::Config(format!("{}: {msg}", path.display())),
        other => other,
    })
}

fn bad(field: &str, msg: impl std::fmt::Display) -> CliError {
    CliError::Config(format!("at `{field}`: {msg}"))
}

fn positive(field: &str, v: f64) -> Result<(), CliError> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(bad(field, format!("must be positive and finite, got {v}")))
    }
}

impl ScenarioConfig {
    /// Cross-section consistency checks that the schema alone cannot express.
    pub fn validate(&self) -> Result<(), CliError> {
        let (n, d) = (self.agents.n, self.agents.d);
        if n == 0 || d == 0 {
            return Err(bad("agents", "n and d must be at least 1"));
        }
        match (&self.agents.initial_states, &self.agents.sample) {
            (Some(rows), None) => {
                if rows.len() != n || rows.iter().any(|r| r.len() != d) {
                    return Err(bad("agents.initial_states", format!("expected {n} rows of length {d}")));
                }
                if rows.iter().flatten().any(|v| !v.is_finite()) {
                    return Err(bad("agents.initial_states", "entries must be finite"));
                }
            }
            (None, Some(s)) => {
                if s.lo.len() != d || s.hi.len() != d {
                    return Err(bad("agents.sample", format!("lo and hi must have length {d}")));
                }
                if s.lo.iter().zip(&s.hi).any(|(l, h)| !(l <= h) || !l.is_finite() || !h.is_finite()) {
                    return Err(bad("agents.sample", "need finite lo <= hi on every axis"));
                }
            }
            _ => {
                return Err(bad("agents", "give exactly one of `initial_states` or `sample`"));
            }
        }
        if self.graphs.is_empty() {
            return Err(bad("graphs", "at least one graph is required"));
        }
        for (p, g) in self.graphs.iter().enumerate() {
            if g.node_count() != n {
                return Err(bad(&format!("graphs[{p}]"), format!("has {} nodes, expected {n}", g.node_count())));
            }
        }
        if self.signal.max_index() >= self.graphs.len() {
            return Err(bad(
                "signal.pieces",
                format!("graph index {} out of range (0..{})", self.signal.max_index(), self.graphs.len()),
            ));
        }
        positive("protocol.weight", self.protocol.weight)?;
        if let Some(g) = self.protocol.gamma {
            positive("protocol.gamma", g)?;
        }
        for (k, w) in self.protocol.weights.iter().enumerate() {
            positive(&format!("protocol.weights[{k}].value"), w.value)?;
        }
        match (self.protocol.kind, &self.protocol.rotation) {
            (ProtocolKind::RotatedConsensus, None) => {
                return Err(bad("protocol.rotation", "required for rotated_consensus"));
            }
            (ProtocolKind::RotatedConsensus, Some(_)) => {}
            (ProtocolKind::Custom, _) => {
                return Err(bad("protocol.kind", "custom fields are only available through the library"));
            }
            (_, Some(_)) => {
                return Err(bad("protocol.rotation", "only valid for rotated_consensus"));
            }
            (_, None) => {}
        }
        positive("integrator.h", self.integrator.h)?;
        positive("integrator.t_end", self.integrator.t_end)?;
        if let Some(v) = &self.validation {
            if !(v.face_tolerance >= 0.0) || !(v.strictness_tolerance >= 0.0) {
                return Err(bad("validation", "tolerances must be nonnegative"));
            }
        }
        if let Some(t) = self.monitors.tol_monotone {
            if !(t >= 0.0) {
                return Err(bad("monitors.tol_monotone", "must be nonnegative"));
            }
        }
        positive("monitors.eps_agreement", self.monitors.eps_agreement)?;
        if !(self.monitors.tail_fraction > 0.0 && self.monitors.tail_fraction <= 1.0) {
            return Err(bad("monitors.tail_fraction", "must lie in (0, 1]"));
        }
        if self.outputs.downsample == 0 {
            return Err(bad("outputs.downsample", "must be at least 1"));
        }
        // Surface core-level problems (bad rotation planes, unknown weighted arcs) as config errors.
        self.protocol_spec().map(|_| ())
    }

    /// Replaces the sampling seed, if the initial states are sampled.
    pub fn with_seed(mut self, seed: u64) -> Self {
        match &mut self.agents.sample {
            Some(s) => s.seed = seed,
            None => log::warn!("--seed ignored: initial states are given explicitly"),
        }
        self
    }

    pub fn initial_state(&self) -> Vec<f64> {
        match (&self.agents.initial_states, &self.agents.sample) {
            (Some(rows), _) => rows.iter().flatten().copied().collect(),
            (None, Some(s)) => {
                let mut rng = ChaCha8Rng::seed_from_u64(s.seed);
                let mut x = Vec::with_capacity(self.agents.n * self.agents.d);
                for _ in 0..self.agents.n {
                    for k in 0..self.agents.d {
                        x.push(if s.lo[k] == s.hi[k] { s.lo[k] } else { rng.gen_range(s.lo[k]..=s.hi[k]) });
                    }
                }
                x
            }
            (None, None) => unreachable!("validated"),
        }
    }

    fn rotations(&self) -> Result<Vec<Rotation<f64>>, CliError> {
        let n = self.agents.n;
        let r = self.protocol.rotation.clone().unwrap_or_default();
        let zero_based = |planes: &[(usize, usize, f64)]| -> Result<Rotation<f64>, CliError> {
            planes
                .iter()
                .map(|&(a, b, t)| {
                    if a == 0 || b == 0 {
                        Err(bad("protocol.rotation", "axes are 1-based"))
                    } else {
                        Ok((a - 1, b - 1, t))
                    }
                })
                .collect::<Result<Vec<_>, _>>()
                .map(Rotation::givens)
        };
        match (r.theta, r.givens, r.per_agent) {
            (Some(t), None, None) => {
                if self.agents.d < 2 {
                    return Err(bad("protocol.rotation.theta", "planar rotation needs d >= 2"));
                }
                Ok(vec![Rotation::planar(t); n])
            }
            (None, Some(g), None) => Ok(vec![zero_based(&g)?; n]),
            (None, None, Some(rows)) => {
                if rows.len() != n {
                    return Err(bad("protocol.rotation.per_agent", format!("expected {n} entries")));
                }
                rows.iter().map(|g| zero_based(g)).collect()
            }
            _ => Err(bad(
                "protocol.rotation",
                "set exactly one of `theta`, `givens` or `per_agent`",
            )),
        }
    }

    pub fn protocol_spec(&self) -> Result<ProtocolSpec<f64>, CliError> {
        let (d, fam, w) = (self.agents.d, self.graphs.clone(), self.protocol.weight);
        let core = |e: compass_core::Error| bad("protocol", e);
        let mut spec = match self.protocol.kind {
            ProtocolKind::WeightedConsensus => ProtocolSpec::weighted(d, fam, w).map_err(core)?,
            ProtocolKind::SignedConsensus => ProtocolSpec::signed(d, fam, w).map_err(core)?,
            ProtocolKind::RotatedConsensus => {
                ProtocolSpec::rotated(d, fam, w, self.rotations()?).map_err(core)?
            }
            ProtocolKind::Custom => return Err(bad("protocol.kind", "custom is library-only")),
        };
        for (k, o) in self.protocol.weights.iter().enumerate() {
            if o.from == 0 || o.to == 0 {
                return Err(bad(&format!("protocol.weights[{k}]"), "node labels are 1-based"));
            }
            spec = spec
                .with_weight(o.graph, o.from - 1, o.to - 1, o.value)
                .map_err(|e| bad(&format!("protocol.weights[{k}]"), e))?;
        }
        if let Some(g) = self.protocol.gamma {
            spec = spec.with_gamma(g).map_err(core)?;
        }
        Ok(spec)
    }

    pub fn validation_settings(&self) -> Option<ValidationSettings<f64>> {
        self.validation.as_ref().map(|v| ValidationSettings {
            assumption: v.assumption,
            face_tolerance: v.face_tolerance,
            strictness_tolerance: v.strictness_tolerance,
        })
    }

    pub fn simulation_config(&self) -> SimulationConfig<f64> {
        SimulationConfig {
            x0: self.initial_state(),
            t_end: self.integrator.t_end,
            h: self.integrator.h,
            validation: self.validation_settings(),
        }
    }

    pub fn monitor_mode(&self) -> MonitorMode {
        self.monitors.mode.unwrap_or(match self.protocol.kind {
            ProtocolKind::SignedConsensus => MonitorMode::SignedSquare,
            _ => MonitorMode::CooperativeBox,
        })
    }
}

/// `graphs` plus `signal`; any scenario file also parses as one.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GraphsFile {
    pub graphs: Vec<SignedDigraph>,
    pub signal: SwitchingSignal<f64>,
}

pub fn load_graphs(path: &Path) -> Result<GraphsFile, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
    let de = &mut serde_json::Deserializer::from_str(&text);
    serde_path_to_error::deserialize(de).map_err(|e| {
        CliError::Config(format!("{}: at `{}`: {}", path.display(), e.path(), e.inner()))
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"{
        "agents": {"n": 2, "d": 1, "initial_states": [[0.0], [2.0]]},
        "protocol": {"kind": "weighted_consensus"},
        "graphs": [{"n": 2, "arcs": [[1, 2, 1], [2, 1, 1]]}],
        "signal": {"tau_d": 1.0, "pieces": [[0.0, 0]], "horizon_end": 10.0},
        "integrator": {"t_end": 10.0}
    }"#;

    #[test]
    fn defaults_fill_in() {
        let c = parse_scenario(MINIMAL).unwrap();
        assert_eq!(c.integrator.h, 1e-3);
        assert_eq!(c.monitors.eps_agreement, 1e-6);
        assert_eq!(c.outputs.downsample, 1);
        assert_eq!(c.monitor_mode(), MonitorMode::CooperativeBox);
        assert_eq!(c.initial_state(), vec![0.0, 2.0]);
        assert_eq!(c.protocol_spec().unwrap().gamma(), 1.0);
    }

    #[test]
    fn round_trip_through_json() {
        let c = parse_scenario(MINIMAL).unwrap();
        let again = parse_scenario(&serde_json::to_string_pretty(&c).unwrap()).unwrap();
        assert_eq!(c, again);
    }

    #[test]
    fn errors_name_the_field() {
        let bad = MINIMAL.replace(r#""kind": "weighted_consensus""#, r#""kind": "weighted_consensus", "gamma": -1"#);
        let e = parse_scenario(&bad).unwrap_err().to_string();
        assert!(e.contains("protocol.gamma"), "{e}");

        let typo = MINIMAL.replace(r#""t_end": 10.0"#, r#""t_end": "ten""#);
        let e = parse_scenario(&typo).unwrap_err().to_string();
        assert!(e.contains("integrator.t_end") && e.contains("line"), "{e}");
    }

    #[test]
    fn sampling_is_seeded() {
        let sampled = MINIMAL.replace(
            r#""initial_states": [[0.0], [2.0]]"#,
            r#""sample": {"seed": 4, "lo": [-1.0], "hi": [1.0]}"#,
        );
        let c = parse_scenario(&sampled).unwrap();
        let x = c.initial_state();
        assert_eq!(x, c.initial_state());
        assert!(x.iter().all(|v| (-1.0..=1.0).contains(v)));
        assert_ne!(x, c.clone().with_seed(5).initial_state());
    }
}
