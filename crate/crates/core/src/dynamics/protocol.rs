use std::collections::BTreeMap;
use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{domain, Error, Result};
use crate::graph::{Sign, SignedDigraph};
use crate::scalar::Scalar;

use super::linear::DenseMatrix;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ProtocolKind {
    WeightedConsensus,
    RotatedConsensus,
    SignedConsensus,
    Custom,
}

/// Proper rotation of R^d written as a product of Givens rotations `(axis_a, axis_b, angle)`,
/// applied left to right.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Rotation<S> {
    planes: Vec<(usize, usize, S)>,
}

impl<S: Scalar> Rotation<S> {
    pub fn identity() -> Self {
        Self { planes: Vec::new() }
    }

    /// Planar rotation by `theta` (counter-clockwise in the `(0, 1)` plane).
    pub fn planar(theta: S) -> Self {
        Self {
            planes: vec![(0, 1, theta)],
        }
    }

    pub fn givens(planes: Vec<(usize, usize, S)>) -> Self {
        Self { planes }
    }

    pub fn planes(&self) -> &[(usize, usize, S)] {
        &self.planes
    }

    pub fn is_identity(&self) -> bool {
        self.planes.iter().all(|(_, _, a)| *a == S::zero())
    }

    pub fn validate(&self, d: usize) -> Result<()> {
        for &(a, b, angle) in &self.planes {
            if a >= d || b >= d || a == b {
                return domain(format!("rotation plane ({a}, {b}) is invalid in dimension {d}"));
            }
            if !angle.is_finite() {
                return domain("rotation angle must be finite");
            }
        }
        Ok(())
    }

    pub fn apply(&self, v: &mut [S]) {
        for &(a, b, angle) in &self.planes {
            let (s, c) = angle.sin_cos();
            let (va, vb) = (v[a], v[b]);
            v[a] = c * va - s * vb;
            v[b] = s * va + c * vb;
        }
    }

    pub fn matrix(&self, d: usize) -> DenseMatrix<S> {
        let mut m = DenseMatrix::zeros(d, d);
        let mut col = vec![S::zero(); d];
        for j in 0..d {
            col.iter_mut().for_each(|c| *c = S::zero());
            col[j] = S::one();
            self.apply(&mut col);
            for i in 0..d {
                m[(i, j)] = col[i];
            }
        }
        m
    }
}

/// User-supplied field block: writes `f_p(x)` (stacked, length `n*d`) into the output slice.
pub type CustomField<S> = Arc<dyn Fn(usize, &[S], &mut [S]) + Send + Sync>;

/// A family of agent vector fields `f_p`, one per interaction graph, together with the cone
/// margin the protocol claims to honor.
#[derive(Clone)]
pub struct ProtocolSpec<S: Scalar> {
    kind: ProtocolKind,
    d: usize,
    family: Vec<SignedDigraph>,
    default_weight: S,
    weights: BTreeMap<(usize, usize, usize), S>,
    rotations: Vec<Rotation<S>>,
    /// Explicit cone margin; `None` means the minimum arc weight.
    gamma: Option<S>,
    custom: Option<CustomField<S>>,
}

impl<S: Scalar> fmt::Debug for ProtocolSpec<S> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ProtocolSpec")
            .field("kind", &self.kind)
            .field("n", &self.n())
            .field("d", &self.d)
            .field("family", &self.family.len())
            .field("default_weight", &self.default_weight)
            .field("weights", &self.weights)
            .field("rotations", &self.rotations)
            .field("gamma", &self.gamma())
            .finish()
    }
}

impl<S: Scalar> ProtocolSpec<S> {
    fn base(kind: ProtocolKind, d: usize, family: Vec<SignedDigraph>, weight: S) -> Result<Self> {
        if d == 0 {
            return domain("state dimension must be at least 1");
        }
        let n = match family.first() {
            Some(g) => g.node_count(),
            None => return domain("protocol needs at least one interaction graph"),
        };
        if family.iter().any(|g| g.node_count() != n) {
            return domain("all graphs in the family must share the node count");
        }
        if !(weight > S::zero()) || !weight.is_finite() {
            return domain(format!("arc weights must be positive, got {weight}"));
        }
        Ok(Self {
            kind,
            d,
            family,
            default_weight: weight,
            weights: BTreeMap::new(),
            rotations: vec![Rotation::identity(); n],
            gamma: None,
            custom: None,
        })
    }

    /// `f^i = sum_j a_ij (x_j - x_i)` with a common weight; the declared gamma defaults to
    /// the minimum weight.
    pub fn weighted(d: usize, family: Vec<SignedDigraph>, weight: S) -> Result<Self> {
        Self::base(ProtocolKind::WeightedConsensus, d, family, weight)
    }

    /// `f^i = R^i sum_j a_ij (x_j - x_i)` with one constant rotation per agent.
    pub fn rotated(
        d: usize,
        family: Vec<SignedDigraph>,
        weight: S,
        rotations: Vec<Rotation<S>>,
    ) -> Result<Self> {
        let mut spec = Self::base(ProtocolKind::RotatedConsensus, d, family, weight)?;
        if rotations.len() != spec.n() {
            return domain(format!(
                "expected {} rotations (one per agent), got {}",
                spec.n(),
                rotations.len()
            ));
        }
        for r in &rotations {
            r.validate(d)?;
        }
        spec.rotations = rotations;
        Ok(spec)
    }

    /// `f^i = sum_j a_ij (sgn_ij x_j - x_i)`.
    pub fn signed(d: usize, family: Vec<SignedDigraph>, weight: S) -> Result<Self> {
        Self::base(ProtocolKind::SignedConsensus, d, family, weight)
    }

    /// Arbitrary field supplied by the caller. The graph family still defines neighbor sets
    /// for feasibility checking; the callback should honor them.
    pub fn custom(d: usize, family: Vec<SignedDigraph>, gamma: S, field: CustomField<S>) -> Result<Self> {
        let mut spec = Self::base(ProtocolKind::Custom, d, family, S::one())?;
        spec.custom = Some(field);
        spec.with_gamma(gamma)
    }

    pub fn with_gamma(mut self, gamma: S) -> Result<Self> {
        if !(gamma > S::zero()) || !gamma.is_finite() {
            return domain(format!("gamma must be positive, got {gamma}"));
        }
        self.gamma = Some(gamma);
        Ok(self)
    }

    /// Overrides the weight of arc `from -> to` in graph `p`.
    pub fn with_weight(mut self, p: usize, from: usize, to: usize, weight: S) -> Result<Self> {
        let g = self
            .family
            .get(p)
            .ok_or_else(|| Error::Domain(format!("graph {p} is not in the family")))?;
        if !g.has_arc(from, to) {
            return domain(format!(
                "graph {p} has no arc ({}, {}) to weight",
                from + 1,
                to + 1
            ));
        }
        if !(weight > S::zero()) || !weight.is_finite() {
            return domain(format!("arc weights must be positive, got {weight}"));
        }
        self.weights.insert((p, from, to), weight);
        Ok(self)
    }

    pub fn kind(&self) -> ProtocolKind {
        self.kind
    }

    pub fn n(&self) -> usize {
        self.family[0].node_count()
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn gamma(&self) -> S {
        self.gamma.unwrap_or_else(|| self.min_weight())
    }

    pub fn family(&self) -> &[SignedDigraph] {
        &self.family
    }

    pub fn graph(&self, p: usize) -> Result<&SignedDigraph> {
        self.family
            .get(p)
            .ok_or_else(|| Error::Domain(format!("graph {p} is not in the family")))
    }

    pub fn rotations(&self) -> &[Rotation<S>] {
        &self.rotations
    }

    pub fn weight(&self, p: usize, from: usize, to: usize) -> S {
        self.weights
            .get(&(p, from, to))
            .copied()
            .unwrap_or(self.default_weight)
    }

    /// Smallest arc weight in use.
    pub fn min_weight(&self) -> S {
        self.weights
            .values()
            .fold(self.default_weight, |m, w| m.min(*w))
    }

    /// Whether the protocol reads arc signs (only the signed kind does).
    pub fn uses_signs(&self) -> bool {
        self.kind == ProtocolKind::SignedConsensus
    }

    fn check_state(&self, x: &[S]) -> Result<()> {
        if x.len() != self.n() * self.d {
            return domain(format!(
                "state has length {} but n*d = {}",
                x.len(),
                self.n() * self.d
            ));
        }
        Ok(())
    }

    /// Writes `f_p(x)` into `out`.
    pub fn eval_into(&self, p: usize, x: &[S], out: &mut [S]) -> Result<()> {
        self.check_state(x)?;
        let g = self.graph(p)?;
        if let Some(f) = &self.custom {
            f(p, x, out);
            return Ok(());
        }
        let d = self.d;
        let signed = self.uses_signs();
        for i in 0..self.n() {
            let xi = &x[i * d..(i + 1) * d];
            let block = &mut out[i * d..(i + 1) * d];
            block.iter_mut().for_each(|v| *v = S::zero());
            for &(j, sign) in g.in_neighbors(i) {
                if j == i {
                    continue;
                }
                let a = self.weight(p, j, i);
                let xj = &x[j * d..(j + 1) * d];
                let flip = signed && sign == Sign::Negative;
                for k in 0..d {
                    let target = if flip { -xj[k] } else { xj[k] };
                    block[k] += a * (target - xi[k]);
                }
            }
            if self.kind == ProtocolKind::RotatedConsensus {
                self.rotations[i].apply(block);
            }
        }
        Ok(())
    }

    pub fn eval(&self, p: usize, x: &[S]) -> Result<Vec<S>> {
        let mut out = vec![S::zero(); x.len()];
        self.eval_into(p, x, &mut out)?;
        Ok(out)
    }

    /// Matrix `A_p` with `f_p(x) = A_p x`, for the built-in (linear) kinds.
    pub fn system_matrix(&self, p: usize) -> Result<DenseMatrix<S>> {
        if self.kind == ProtocolKind::Custom {
            return Err(Error::OracleScope("custom fields have no system matrix".into()));
        }
        let g = self.graph(p)?;
        let (n, d) = (self.n(), self.d);
        let mut a = DenseMatrix::zeros(n * d, n * d);
        for i in 0..n {
            let rot = if self.kind == ProtocolKind::RotatedConsensus {
                self.rotations[i].matrix(d)
            } else {
                DenseMatrix::identity(d)
            };
            for &(j, sign) in g.in_neighbors(i) {
                if j == i {
                    continue;
                }
                let w = self.weight(p, j, i);
                let s = if self.uses_signs() && sign == Sign::Negative {
                    -S::one()
                } else {
                    S::one()
                };
                for r in 0..d {
                    for c in 0..d {
                        a[(i * d + r, j * d + c)] += w * s * rot[(r, c)];
                        a[(i * d + r, i * d + c)] -= w * rot[(r, c)];
                    }
                }
            }
        }
        Ok(a)
    }
}

fn expect_kind<S: Scalar>(spec: &ProtocolSpec<S>, kinds: &[ProtocolKind]) -> Result<()> {
    if kinds.contains(&spec.kind()) {
        Ok(())
    } else {
        domain(format!("protocol kind {:?} not valid here", spec.kind()))
    }
}

/// Cooperative weighted consensus field (signs and rotations ignored).
pub fn consensus_field<S: Scalar>(spec: &ProtocolSpec<S>, p: usize, x: &[S]) -> Result<Vec<S>> {
    let plain = ProtocolSpec {
        kind: ProtocolKind::WeightedConsensus,
        custom: None,
        ..spec.clone()
    };
    plain.eval(p, x)
}

/// Rotated consensus field `R^i sum_j a_ij (x_j - x_i)`.
pub fn rotated_field<S: Scalar>(spec: &ProtocolSpec<S>, p: usize, x: &[S]) -> Result<Vec<S>> {
    expect_kind(spec, &[ProtocolKind::RotatedConsensus, ProtocolKind::WeightedConsensus])?;
    spec.eval(p, x)
}

/// Signed consensus field `sum_j a_ij (sgn_ij x_j - x_i)`.
pub fn signed_field<S: Scalar>(spec: &ProtocolSpec<S>, p: usize, x: &[S]) -> Result<Vec<S>> {
    let signed = ProtocolSpec {
        kind: ProtocolKind::SignedConsensus,
        custom: None,
        ..spec.clone()
    };
    signed.eval(p, x)
}
