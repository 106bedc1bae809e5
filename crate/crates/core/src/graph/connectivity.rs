use serde::{Deserialize, Serialize};

use super::digraph::SignedDigraph;
use super::signal::SwitchingSignal;
use crate::error::{domain, Error, Result};
use crate::scalar::Scalar;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ConnectivityMode {
    QuasiStrong,
    Strong,
}

impl ConnectivityMode {
    pub fn holds(self, g: &SignedDigraph) -> bool {
        match self {
            ConnectivityMode::QuasiStrong => g.is_quasi_strongly_connected(),
            ConnectivityMode::Strong => g.is_strongly_connected(),
        }
    }
}

/// How far a joint-connectivity verdict reaches.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum VerdictScope {
    /// Periodic signal: the verdict extends to every `t >= t0`.
    Global,
    /// Aperiodic signal: only windows inside the supplied horizon were certified.
    Horizon,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct WindowVerdict {
    pub start: f64,
    pub end: f64,
    pub connected: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct JointConnectivityReport {
    pub connected: bool,
    pub mode: ConnectivityMode,
    pub window: f64,
    pub scope: VerdictScope,
    pub windows: Vec<WindowVerdict>,
    /// First failing window `[start, end)`, if any.
    pub witness: Option<WindowVerdict>,
}

fn check_family<S: Scalar>(signal: &SwitchingSignal<S>, family: &[SignedDigraph]) -> Result<usize> {
    let n = match family.first() {
        Some(g) => g.node_count(),
        None => return domain("graph family is empty"),
    };
    if family.iter().any(|g| g.node_count() != n) {
        return domain("all graphs in the family must share the node count");
    }
    if signal.max_index() >= family.len() {
        return domain(format!(
            "signal references graph {} but the family has {} members",
            signal.max_index(),
            family.len()
        ));
    }
    Ok(n)
}

/// Joint graph over `[t1, t2)`: union of arcs of every graph active in the interval.
/// Signs are dropped.
pub fn union_graph<S: Scalar>(
    signal: &SwitchingSignal<S>,
    family: &[SignedDigraph],
    t1: S,
    t2: S,
) -> Result<SignedDigraph> {
    let n = check_family(signal, family)?;
    let segments = signal.segments(t1, t2)?;
    SignedDigraph::unsigned_union(n, segments.iter().map(|s| &family[s.index]))
}

/// Window starts at which the set of overlapped pieces can change, plus one interior point
/// of every interval between them. The joint graph is constant on each such interval, so
/// testing these starts is equivalent to testing every real start in `[lo, hi]`.
fn critical_starts<S: Scalar>(switches: &[S], window: S, lo: S, hi: S) -> Vec<S> {
    let mut pts = vec![lo, hi];
    for &s in switches {
        for c in [s, s - window] {
            if c > lo && c < hi {
                pts.push(c);
            }
        }
    }
    pts.sort_by(|a, b| a.partial_cmp(b).expect("finite"));
    pts.dedup();
    let half = S::lit(0.5);
    let mut out = Vec::with_capacity(2 * pts.len());
    for w in pts.windows(2) {
        out.push(w[0]);
        out.push(half * (w[0] + w[1]));
    }
    out.push(pts[pts.len() - 1]);
    out
}

/// Checks that the joint graph over every window `[t, t + window)` satisfies `mode`.
///
/// Periodic signals are checked over one period of window starts, which certifies all
/// `t >= t0`. Aperiodic signals are certified only over the supplied horizon.
pub fn check_uniform_joint_connectivity<S: Scalar>(
    signal: &SwitchingSignal<S>,
    family: &[SignedDigraph],
    window: S,
    mode: ConnectivityMode,
) -> Result<JointConnectivityReport> {
    if !(window > S::zero()) || !window.is_finite() {
        return domain(format!("window length must be positive, got {window}"));
    }
    check_family(signal, family)?;
    let t0 = signal.t0();
    let (lo, hi, scope) = if signal.is_periodic() {
        (t0, t0 + signal.span(), VerdictScope::Global)
    } else {
        if window > signal.span() {
            return Err(Error::InsufficientHorizon {
                window: window.as_f64(),
                horizon: signal.span().as_f64(),
            });
        }
        (t0, signal.horizon_end() - window, VerdictScope::Horizon)
    };
    let switches = signal.switch_times(lo - window, hi + window);
    let starts = if hi > lo {
        critical_starts(&switches, window, lo, hi)
    } else {
        vec![lo]
    };

    let mut windows = Vec::with_capacity(starts.len());
    let mut witness = None;
    for t in starts {
        let g = union_graph(signal, family, t, t + window)?;
        let v = WindowVerdict {
            start: t.as_f64(),
            end: (t + window).as_f64(),
            connected: mode.holds(&g),
        };
        if !v.connected && witness.is_none() {
            witness = Some(v.clone());
        }
        windows.push(v);
    }
    Ok(JointConnectivityReport {
        connected: witness.is_none(),
        mode,
        window: window.as_f64(),
        scope,
        windows,
        witness,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::signal::Piece;

    fn alternating() -> (SwitchingSignal<f64>, Vec<SignedDigraph>) {
        let family = vec![
            SignedDigraph::from_pairs(2, &[(0, 1)]).unwrap(),
            SignedDigraph::from_pairs(2, &[(1, 0)]).unwrap(),
        ];
        (SwitchingSignal::round_robin(&[0, 1], 0.0, 1.0).unwrap(), family)
    }

    #[test]
    fn union_examples() {
        let (s, fam) = alternating();
        let u = union_graph(&s, &fam, 0.5, 1.5).unwrap();
        assert!(u.has_arc(0, 1) && u.has_arc(1, 0));
        let u = union_graph(&s, &fam, 0.2, 0.8).unwrap();
        assert!(u.has_arc(0, 1) && !u.has_arc(1, 0));

        let empty = vec![SignedDigraph::empty(3).unwrap()];
        let c = SwitchingSignal::constant(0, 0.0, 5.0, 1.0).unwrap();
        assert_eq!(union_graph(&c, &empty, 0.0, 5.0).unwrap().arc_count(), 0);
        assert!(union_graph(&c, &empty, 1.0, 6.0).is_err());
    }

    #[test]
    fn alternating_pair_is_jointly_strong_over_two_units() {
        let (s, fam) = alternating();
        let r = check_uniform_joint_connectivity(&s, &fam, 2.0, ConnectivityMode::Strong).unwrap();
        assert!(r.connected);
        assert_eq!(r.scope, VerdictScope::Global);

        let r = check_uniform_joint_connectivity(&s, &fam, 0.5, ConnectivityMode::Strong).unwrap();
        assert!(!r.connected);
        let w = r.witness.unwrap();
        // The witness lies inside a single piece.
        assert!(w.start.floor() == (w.end - 1e-12).floor());
    }

    #[test]
    fn static_quasi_strong_graph_passes_any_window() {
        let fam = vec![SignedDigraph::star(4, 0).unwrap()];
        let s = SwitchingSignal::constant(0, 0.0, 10.0, 1.0).unwrap();
        for t in [0.1, 1.0, 9.9] {
            let r = check_uniform_joint_connectivity(&s, &fam, t, ConnectivityMode::QuasiStrong).unwrap();
            assert!(r.connected);
            assert_eq!(r.scope, VerdictScope::Horizon);
        }
        assert!(matches!(
            check_uniform_joint_connectivity(&s, &fam, 11.0, ConnectivityMode::QuasiStrong),
            Err(Error::InsufficientHorizon { .. })
        ));
    }

    #[test]
    fn unequal_pieces_need_event_based_windows() {
        // Pieces: A on [0,1), B on [1,1.5), A on [1.5,3). A window of length 1 starting at
        // 1.5 sees only A, which a uniform grid of step 0.5 from 0 would also hit, but a start
        // at 1.75 is also A-only; both must be found.
        let fam = vec![
            SignedDigraph::from_pairs(2, &[(0, 1)]).unwrap(),
            SignedDigraph::from_pairs(2, &[(1, 0)]).unwrap(),
        ];
        let s = SwitchingSignal::new(vec![Piece(0.0, 0), Piece(1.0, 1), Piece(1.5, 0)], 0.5, 3.0, false)
            .unwrap();
        let r = check_uniform_joint_connectivity(&s, &fam, 1.0, ConnectivityMode::Strong).unwrap();
        assert!(!r.connected);
        let w = r.witness.unwrap();
        assert!(w.start <= 0.0 + 1e-12 || w.start >= 1.5 - 1e-12);
    }

    #[test]
    fn family_mismatch_is_rejected() {
        let s = SwitchingSignal::round_robin(&[0, 1], 0.0, 1.0).unwrap();
        let fam = vec![SignedDigraph::empty(2).unwrap()];
        assert!(union_graph(&s, &fam, 0.0, 1.0).is_err());
    }
}
