//! Discrete-time Vicsek heading alignment.

use serde::{Deserialize, Serialize};

use crate::error::{domain, Result};
use crate::graph::SignedDigraph;
use crate::scalar::Scalar;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VicsekState<S> {
    pub positions: Vec<(S, S)>,
    /// Headings in `(-pi, pi]`.
    pub headings: Vec<S>,
    pub speed: S,
    /// Neighbor threshold for [`NeighborRule::Metric`].
    pub radius: S,
}

/// Who agent `i` averages over. Every rule includes `i` itself.
#[derive(Debug, Clone, PartialEq)]
pub enum NeighborRule {
    Complete,
    /// Agents within the state's `radius` (Euclidean, inclusive).
    Metric,
    /// In-neighbors in a fixed graph, plus `i`.
    Graph(SignedDigraph),
}

/// Maps an angle into `(-pi, pi]`.
pub fn normalize_angle<S: Scalar>(theta: S) -> S {
    let two_pi = S::TAU();
    let mut t = theta - (theta / two_pi).round() * two_pi;
    if t <= -S::PI() {
        t += two_pi;
    } else if t > S::PI() {
        t -= two_pi;
    }
    t
}

impl<S: Scalar> VicsekState<S> {
    pub fn new(positions: Vec<(S, S)>, headings: Vec<S>, speed: S, radius: S) -> Result<Self> {
        if positions.len() != headings.len() || positions.is_empty() {
            return domain("positions and headings must be nonempty and of equal length");
        }
        if !(speed > S::zero()) || !(radius > S::zero()) {
            return domain("speed and radius must be positive");
        }
        if positions.iter().any(|(x, y)| !x.is_finite() || !y.is_finite())
            || headings.iter().any(|t| !t.is_finite())
        {
            return domain("positions and headings must be finite");
        }
        let headings = headings.into_iter().map(normalize_angle).collect();
        Ok(Self {
            positions,
            headings,
            speed,
            radius,
        })
    }

    pub fn len(&self) -> usize {
        self.headings.len()
    }

    pub fn is_empty(&self) -> bool {
        self.headings.is_empty()
    }

    fn neighbors(&self, rule: &NeighborRule, i: usize) -> Vec<usize> {
        let n = self.len();
        match rule {
            NeighborRule::Complete => (0..n).collect(),
            NeighborRule::Metric => {
                let (xi, yi) = self.positions[i];
                let r2 = self.radius * self.radius;
                (0..n)
                    .filter(|&j| {
                        let (xj, yj) = self.positions[j];
                        j == i || (xj - xi) * (xj - xi) + (yj - yi) * (yj - yi) <= r2
                    })
                    .collect()
            }
            NeighborRule::Graph(g) => {
                let mut out: Vec<usize> = g.in_neighbors(i).iter().map(|&(j, _)| j).collect();
                if !out.contains(&i) {
                    out.push(i);
                }
                out
            }
        }
    }
}

/// One synchronous update. Headings become the circular mean over each neighborhood; positions
/// move by `speed` along the pre-update heading.
pub fn vicsek_step<S: Scalar>(state: &VicsekState<S>, rule: &NeighborRule) -> Result<VicsekState<S>> {
    if let NeighborRule::Graph(g) = rule {
        if g.node_count() != state.len() {
            return domain(format!(
                "neighbor graph has {} nodes but there are {} agents",
                g.node_count(),
                state.len()
            ));
        }
    }
    let headings = (0..state.len())
        .map(|i| {
            let (s, c) = state
                .neighbors(rule, i)
                .into_iter()
                .fold((S::zero(), S::zero()), |(s, c), j| {
                    let t = state.headings[j];
                    (s + t.sin(), c + t.cos())
                });
            normalize_angle(s.atan2(c))
        })
        .collect();
    let positions = state
        .positions
        .iter()
        .zip(&state.headings)
        .map(|(&(x, y), &t)| (x + state.speed * t.cos(), y + state.speed * t.sin()))
        .collect();
    Ok(VicsekState {
        positions,
        headings,
        speed: state.speed,
        radius: state.radius,
    })
}

/// `max_i theta_i - min_i theta_i`.
pub fn heading_spread<S: Scalar>(headings: &[S]) -> S {
    let (lo, hi) = headings
        .iter()
        .fold((S::infinity(), S::neg_infinity()), |(lo, hi), &t| (lo.min(t), hi.max(t)));
    if headings.is_empty() {
        S::zero()
    } else {
        hi - lo
    }
}
