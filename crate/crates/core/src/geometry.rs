//! Axis-aligned hyperrectangles and the tangent cones used by the feasibility conditions.
//!
//! Every predicate here is closed-form: for an axis-aligned box the tangent cone at `x` is
//! the product of per-axis half-lines selected by which facets `x` touches. The numeric probe
//! [`cone_membership_probe`] evaluates the distance-ratio definition directly and is kept as an
//! independent cross-check of those closed forms.

use serde::{Deserialize, Serialize};

use crate::error::{domain, Error, Result};
use crate::scalar::Scalar;

/// Probe steps used by [`cone_membership_probe`] when the caller has no preference.
pub const DEFAULT_PROBE_STEPS: [f64; 4] = [1e-2, 1e-3, 1e-4, 1e-5];

/// Relative facet tolerance applied by [`default_face_tolerance`].
pub const DEFAULT_FACE_TOLERANCE: f64 = 1e-9;

/// Default margin for strict inequalities in the relative-interior test.
pub const DEFAULT_STRICTNESS_TOLERANCE: f64 = 1e-12;

/// Axis-aligned box `[lo_1, hi_1] x ... x [lo_d, hi_d]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Hyperrectangle<S> {
    lo: Vec<S>,
    hi: Vec<S>,
}

impl<S: Scalar> Hyperrectangle<S> {
    pub fn new(lo: Vec<S>, hi: Vec<S>) -> Result<Self> {
        if lo.len() != hi.len() {
            return domain(format!(
                "lower corner has dimension {} but upper corner has {}",
                lo.len(),
                hi.len()
            ));
        }
        if lo.is_empty() {
            return domain("box must have at least one axis");
        }
        for (k, (l, h)) in lo.iter().zip(&hi).enumerate() {
            if !(l.is_finite() && h.is_finite()) {
                return domain(format!("non-finite bound on axis {k}"));
            }
            if l > h {
                return domain(format!("lo > hi on axis {k} ({l} > {h})"));
            }
        }
        Ok(Self { lo, hi })
    }

    pub fn singleton(point: &[S]) -> Result<Self> {
        Self::new(point.to_vec(), point.to_vec())
    }

    /// Smallest axis-aligned box containing every point (per-axis min and max).
    pub fn supporting<'a, I>(points: I) -> Result<Self>
    where
        I: IntoIterator<Item = &'a [S]>,
    {
        let mut iter = points.into_iter();
        let first = match iter.next() {
            Some(p) => p,
            None => return domain("supporting hyperrectangle of an empty point set"),
        };
        let mut lo = first.to_vec();
        let mut hi = first.to_vec();
        for (idx, p) in iter.enumerate() {
            if p.len() != lo.len() {
                return domain(format!(
                    "point {} has dimension {} but expected {}",
                    idx + 1,
                    p.len(),
                    lo.len()
                ));
            }
            for k in 0..p.len() {
                lo[k] = lo[k].min(p[k]);
                hi[k] = hi[k].max(p[k]);
            }
        }
        Self::new(lo, hi)
    }

    pub fn dim(&self) -> usize {
        self.lo.len()
    }

    pub fn lo(&self) -> &[S] {
        &self.lo
    }

    pub fn hi(&self) -> &[S] {
        &self.hi
    }

    /// Side length `hi_k - lo_k` along axis `k`.
    pub fn side_length(&self, k: usize) -> S {
        self.hi[k] - self.lo[k]
    }

    pub fn side_lengths(&self) -> Vec<S> {
        (0..self.dim()).map(|k| self.side_length(k)).collect()
    }

    /// Maximum side length.
    pub fn rho(&self) -> S {
        (0..self.dim()).fold(S::zero(), |m, k| m.max(self.side_length(k)))
    }

    pub fn contains(&self, x: &[S], tol: S) -> bool {
        x.len() == self.dim()
            && x.iter()
                .zip(self.lo.iter().zip(&self.hi))
                .all(|(v, (l, h))| *v >= *l - tol && *v <= *h + tol)
    }

    /// Euclidean projection onto the box (per-axis clamp).
    pub fn project(&self, x: &[S]) -> Vec<S> {
        x.iter()
            .zip(self.lo.iter().zip(&self.hi))
            .map(|(v, (l, h))| v.max(*l).min(*h))
            .collect()
    }

    /// Euclidean distance from `x` to the box.
    pub fn distance(&self, x: &[S]) -> S {
        x.iter()
            .zip(self.lo.iter().zip(&self.hi))
            .map(|(v, (l, h))| {
                let gap = (*l - *v).max(*v - *h).max(S::zero());
                gap * gap
            })
            .sum::<S>()
            .sqrt()
    }

    pub fn translated(&self, offset: &[S]) -> Self {
        Self {
            lo: self.lo.iter().zip(offset).map(|(a, b)| *a + *b).collect(),
            hi: self.hi.iter().zip(offset).map(|(a, b)| *a + *b).collect(),
        }
    }
}

/// Free function form of [`Hyperrectangle::supporting`] for a slice of points.
pub fn supporting_hyperrectangle<S: Scalar, P: AsRef<[S]>>(points: &[P]) -> Result<Hyperrectangle<S>> {
    Hyperrectangle::supporting(points.iter().map(|p| p.as_ref()))
}

pub fn side_lengths<S: Scalar>(b: &Hyperrectangle<S>) -> Vec<S> {
    b.side_lengths()
}

pub fn rho<S: Scalar>(b: &Hyperrectangle<S>) -> S {
    b.rho()
}

/// `1e-9 * max(1, rho(box))`.
pub fn default_face_tolerance<S: Scalar>(b: &Hyperrectangle<S>) -> S {
    S::lit(DEFAULT_FACE_TOLERANCE) * S::one().max(b.rho())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Region {
    RelativeInterior,
    Boundary,
}

/// Which facets perpendicular to one axis a point touches.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum FacetContact {
    Free,
    Lower,
    Upper,
    /// Zero-width axis: both facets coincide.
    Both,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PointClassification {
    pub region: Region,
    /// Axes on which the point sits on a facet (sorted).
    pub active_axes: Vec<usize>,
    /// Axes whose side length is zero within tolerance (sorted, subset of `active_axes`).
    pub degenerate_axes: Vec<usize>,
    pub contacts: Vec<FacetContact>,
}

impl PointClassification {
    /// Active axes that are not degenerate: the facets that carry a sign constraint.
    pub fn proper_active_axes(&self) -> impl Iterator<Item = usize> + '_ {
        self.contacts
            .iter()
            .enumerate()
            .filter(|(_, c)| matches!(c, FacetContact::Lower | FacetContact::Upper))
            .map(|(k, _)| k)
    }
}

fn check_inside<S: Scalar>(x: &[S], b: &Hyperrectangle<S>, tol: S) -> Result<()> {
    if x.len() != b.dim() {
        return domain(format!("point has dimension {} but box has {}", x.len(), b.dim()));
    }
    if tol < S::zero() || !tol.is_finite() {
        return domain("face tolerance must be finite and nonnegative");
    }
    for k in 0..x.len() {
        if !(x[k] >= b.lo[k] - tol && x[k] <= b.hi[k] + tol) {
            return Err(Error::OutsideBox {
                axis: k,
                value: x[k].as_f64(),
                lo: b.lo[k].as_f64(),
                hi: b.hi[k].as_f64(),
            });
        }
    }
    Ok(())
}

pub fn classify_point<S: Scalar>(
    x: &[S],
    b: &Hyperrectangle<S>,
    face_tolerance: S,
) -> Result<PointClassification> {
    check_inside(x, b, face_tolerance)?;
    let two = S::lit(2.0);
    let mut active_axes = Vec::new();
    let mut degenerate_axes = Vec::new();
    let mut contacts = Vec::with_capacity(x.len());
    for k in 0..x.len() {
        let degenerate = b.side_length(k) <= two * face_tolerance;
        let at_lo = (x[k] - b.lo[k]).abs() <= face_tolerance;
        let at_hi = (x[k] - b.hi[k]).abs() <= face_tolerance;
        let contact = if degenerate {
            FacetContact::Both
        } else if at_lo {
            FacetContact::Lower
        } else if at_hi {
            FacetContact::Upper
        } else {
            FacetContact::Free
        };
        if contact != FacetContact::Free {
            active_axes.push(k);
        }
        if degenerate {
            degenerate_axes.push(k);
        }
        contacts.push(contact);
    }
    let region = if active_axes == degenerate_axes {
        Region::RelativeInterior
    } else {
        Region::Boundary
    };
    Ok(PointClassification {
        region,
        active_axes,
        degenerate_axes,
        contacts,
    })
}

fn check_direction<S: Scalar>(v: &[S], d: usize) -> Result<()> {
    if v.len() != d {
        return domain(format!("direction has dimension {} but box has {d}", v.len()));
    }
    Ok(())
}

/// Closed-form tangent cone of the box at `x`: `v_k >= 0` on lower facets, `v_k <= 0` on
/// upper facets, `v_k = 0` on zero-width axes.
pub fn tangent_cone_contains<S: Scalar>(
    x: &[S],
    b: &Hyperrectangle<S>,
    v: &[S],
    face_tolerance: S,
) -> Result<bool> {
    let class = classify_point(x, b, face_tolerance)?;
    check_direction(v, b.dim())?;
    Ok(class.contacts.iter().zip(v).all(|(c, vk)| match c {
        FacetContact::Free => true,
        FacetContact::Lower => *vk >= S::zero(),
        FacetContact::Upper => *vk <= S::zero(),
        FacetContact::Both => *vk == S::zero(),
    }))
}

/// A fully parameterized cone-membership question.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConeQuery<S> {
    pub point: Vec<S>,
    #[serde(rename = "box")]
    pub bbox: Hyperrectangle<S>,
    pub direction: Vec<S>,
    pub gamma: S,
    pub face_tolerance: S,
    pub strictness_tolerance: S,
}

impl<S: Scalar> ConeQuery<S> {
    /// Query with the default tolerances for `bbox`.
    pub fn new(point: Vec<S>, bbox: Hyperrectangle<S>, direction: Vec<S>, gamma: S) -> Self {
        let face_tolerance = default_face_tolerance(&bbox);
        Self {
            point,
            bbox,
            direction,
            gamma,
            face_tolerance,
            strictness_tolerance: S::lit(DEFAULT_STRICTNESS_TOLERANCE),
        }
    }

    pub fn with_face_tolerance(mut self, tol: S) -> Self {
        self.face_tolerance = tol;
        self
    }

    pub fn with_strictness_tolerance(mut self, tol: S) -> Self {
        self.strictness_tolerance = tol;
        self
    }

    fn prepare(&self) -> Result<PointClassification> {
        if self.strictness_tolerance < S::zero() || !self.strictness_tolerance.is_finite() {
            return domain("strictness tolerance must be finite and nonnegative");
        }
        let class = classify_point(&self.point, &self.bbox, self.face_tolerance)?;
        check_direction(&self.direction, self.bbox.dim())?;
        Ok(class)
    }

    /// Degenerate axes must carry no motion: the direction has to stay in the carrier subspace.
    fn in_carrier(&self, class: &PointClassification) -> bool {
        class
            .degenerate_axes
            .iter()
            .all(|&k| self.direction[k].abs() <= self.strictness_tolerance)
    }
}

/// Largest `gamma` for which the query direction lies in the gamma-strict tangent cone.
///
/// `None` when the direction is outside the tangent cone (or leaves the carrier subspace);
/// `Some(inf)` when no proper facet is active, so every `gamma` is admissible.
pub fn gamma_margin<S: Scalar>(q: &ConeQuery<S>) -> Result<Option<S>> {
    let class = q.prepare()?;
    if !q.in_carrier(&class) {
        return Ok(None);
    }
    let mut margin = S::infinity();
    for k in class.proper_active_axes() {
        let vk = q.direction[k];
        let inward = match class.contacts[k] {
            FacetContact::Lower => vk >= S::zero(),
            FacetContact::Upper => vk <= S::zero(),
            _ => unreachable!("proper axes are single-facet"),
        };
        if !inward {
            return Ok(None);
        }
        margin = margin.min(vk.abs() / q.bbox.side_length(k));
    }
    Ok(Some(margin))
}

/// `margin >= gamma` up to a few ulps of `gamma`. A field that meets the margin exactly in
/// real arithmetic (one neighbor, weight equal to `gamma`) can land one ulp short.
pub fn meets_gamma<S: Scalar>(margin: S, gamma: S) -> bool {
    margin >= gamma - S::lit(16.0) * S::epsilon() * gamma
}

/// Membership in the gamma-strict tangent cone: the carrier subspace at relative-interior
/// points, otherwise tangent-cone directions with `|v_k| >= gamma * D_k` on every active facet.
pub fn gamma_cone_contains<S: Scalar>(q: &ConeQuery<S>) -> Result<bool> {
    if !(q.gamma > S::zero()) || !q.gamma.is_finite() {
        return domain(format!("gamma must be positive and finite, got {}", q.gamma));
    }
    Ok(matches!(gamma_margin(q)?, Some(m) if meets_gamma(m, q.gamma)))
}

/// Membership in the relative interior of the tangent cone: every facet inequality holds
/// strictly by at least `strictness_tolerance`, zero-width axes carry no motion.
pub fn relative_interior_cone_contains<S: Scalar>(q: &ConeQuery<S>) -> Result<bool> {
    let class = q.prepare()?;
    if !q.in_carrier(&class) {
        return Ok(false);
    }
    let s = q.strictness_tolerance;
    let strict = class.proper_active_axes().all(|k| {
        let vk = q.direction[k];
        match class.contacts[k] {
            FacetContact::Lower => vk > S::zero() && vk >= s,
            FacetContact::Upper => vk < S::zero() && vk <= -s,
            _ => unreachable!("proper axes are single-facet"),
        }
    });
    Ok(strict)
}

/// `min over zeta of dist(x + zeta v, box) / zeta`: approximately zero for tangent directions,
/// bounded away from zero otherwise.
pub fn cone_membership_probe<S: Scalar>(
    x: &[S],
    b: &Hyperrectangle<S>,
    v: &[S],
    probe_steps: &[S],
) -> Result<S> {
    if x.len() != b.dim() {
        return domain(format!("point has dimension {} but box has {}", x.len(), b.dim()));
    }
    check_direction(v, b.dim())?;
    if probe_steps.is_empty() {
        return domain("at least one probe step is required");
    }
    let mut best = S::infinity();
    let mut moved = vec![S::zero(); x.len()];
    for &zeta in probe_steps {
        if !(zeta > S::zero()) {
            return domain(format!("probe steps must be positive, got {zeta}"));
        }
        for k in 0..x.len() {
            moved[k] = x[k] + zeta * v[k];
        }
        best = best.min(b.distance(&moved) / zeta);
    }
    Ok(best)
}

/// [`cone_membership_probe`] with [`DEFAULT_PROBE_STEPS`].
pub fn cone_membership_probe_default<S: Scalar>(
    x: &[S],
    b: &Hyperrectangle<S>,
    v: &[S],
) -> Result<S> {
    let steps: Vec<S> = DEFAULT_PROBE_STEPS.iter().map(|z| S::lit(*z)).collect();
    cone_membership_probe(x, b, v, &steps)
}
