use serde::{Deserialize, Serialize};

use crate::error::{domain, Error, Result};
use crate::scalar::Scalar;

/// One constant stretch of the switching signal: from `start` onward the family member `index`
/// is active. Serialized as `[start, index]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Piece<S>(pub S, pub usize);

impl<S: Copy> Piece<S> {
    pub fn start(&self) -> S {
        self.0
    }

    pub fn index(&self) -> usize {
        self.1
    }
}

/// A clipped piece `[start, end)` during which `index` is active.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Segment<S> {
    pub start: S,
    pub end: S,
    pub index: usize,
}

/// Piecewise-constant selection of a family member over `[t0, horizon_end)`.
///
/// A periodic signal repeats its pieces with period `horizon_end - t0` forever; an aperiodic
/// one is only defined up to `horizon_end`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "SignalWire<S>", into = "SignalWire<S>", bound = "S: Scalar + Serialize + for<'a> Deserialize<'a>")]
pub struct SwitchingSignal<S> {
    pieces: Vec<Piece<S>>,
    tau_d: S,
    horizon_end: S,
    periodic: bool,
}

#[derive(Serialize, Deserialize)]
struct SignalWire<S> {
    tau_d: S,
    pieces: Vec<Piece<S>>,
    horizon_end: S,
    #[serde(default)]
    periodic: bool,
}

impl<S: Scalar> TryFrom<SignalWire<S>> for SwitchingSignal<S> {
    type Error = Error;

    fn try_from(w: SignalWire<S>) -> Result<Self> {
        SwitchingSignal::new(w.pieces, w.tau_d, w.horizon_end, w.periodic)
    }
}

impl<S: Scalar> From<SwitchingSignal<S>> for SignalWire<S> {
    fn from(s: SwitchingSignal<S>) -> Self {
        SignalWire {
            tau_d: s.tau_d,
            pieces: s.pieces,
            horizon_end: s.horizon_end,
            periodic: s.periodic,
        }
    }
}

/// A breach of the dwell-time requirement.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub enum SignalViolation {
    /// Piece `index` does not start strictly after its predecessor.
    NotIncreasing { index: usize },
    /// Piece `index` starts less than `tau_d` after its predecessor, beyond rounding.
    DwellViolation { index: usize, gap: f64 },
    /// Periodic wrap-around: the last piece is shorter than `tau_d`.
    WrapDwellViolation { gap: f64 },
}

impl<S: Scalar> SwitchingSignal<S> {
    /// Builds a signal. Only structural problems are rejected here; dwell-time breaches are
    /// reported by [`validate_switching_signal`].
    pub fn new(pieces: Vec<Piece<S>>, tau_d: S, horizon_end: S, periodic: bool) -> Result<Self> {
        if pieces.is_empty() {
            return domain("switching signal needs at least one piece");
        }
        if !(tau_d > S::zero()) || !tau_d.is_finite() {
            return domain(format!("dwell time must be positive, got {tau_d}"));
        }
        if !horizon_end.is_finite() || pieces.iter().any(|p| !p.start().is_finite()) {
            return domain("switching times must be finite");
        }
        let last = pieces.iter().fold(S::neg_infinity(), |m, p| m.max(p.start()));
        if !(horizon_end > last) {
            return domain(format!("horizon end {horizon_end} must follow the last switch {last}"));
        }
        Ok(Self {
            pieces,
            tau_d,
            horizon_end,
            periodic,
        })
    }

    /// Signal that keeps `index` active over `[t0, horizon_end)`.
    pub fn constant(index: usize, t0: S, horizon_end: S, tau_d: S) -> Result<Self> {
        Self::new(vec![Piece(t0, index)], tau_d, horizon_end, false)
    }

    /// Periodic signal visiting `order` with every piece lasting `dwell`.
    pub fn round_robin(order: &[usize], t0: S, dwell: S) -> Result<Self> {
        let pieces = order
            .iter()
            .enumerate()
            .map(|(k, &idx)| Piece(t0 + S::from_usize_lossy(k) * dwell, idx))
            .collect();
        Self::new(pieces, dwell, t0 + S::from_usize_lossy(order.len()) * dwell, true)
    }

    pub fn pieces(&self) -> &[Piece<S>] {
        &self.pieces
    }

    pub fn tau_d(&self) -> S {
        self.tau_d
    }

    pub fn t0(&self) -> S {
        self.pieces[0].start()
    }

    pub fn horizon_end(&self) -> S {
        self.horizon_end
    }

    pub fn is_periodic(&self) -> bool {
        self.periodic
    }

    /// Length of one period (periodic) or of the defined horizon (aperiodic).
    pub fn span(&self) -> S {
        self.horizon_end - self.t0()
    }

    /// Largest family index referenced by any piece.
    pub fn max_index(&self) -> usize {
        self.pieces.iter().map(|p| p.index()).max().unwrap_or(0)
    }

    /// Shortest piece duration, including the last piece up to `horizon_end`.
    pub fn min_piece_duration(&self) -> S {
        let mut m = S::infinity();
        for w in self.pieces.windows(2) {
            m = m.min(w[1].start() - w[0].start());
        }
        m.min(self.horizon_end - self.pieces[self.pieces.len() - 1].start())
    }

    /// Segments of the signal overlapping `[t1, t2)`, clipped to it, in time order.
    ///
    /// Aperiodic signals require `[t1, t2)` inside `[t0, horizon_end]`.
    pub fn segments(&self, t1: S, t2: S) -> Result<Vec<Segment<S>>> {
        if !(t1 < t2) {
            return domain(format!("empty interval [{t1}, {t2})"));
        }
        let t0 = self.t0();
        if t1 < t0 {
            return domain(format!("interval start {t1} precedes the signal start {t0}"));
        }
        if !self.periodic && t2 > self.horizon_end {
            return domain(format!(
                "interval end {t2} exceeds the signal horizon {}",
                self.horizon_end
            ));
        }
        let period = self.span();
        let first_period = if self.periodic {
            ((t1 - t0) / period).floor()
        } else {
            S::zero()
        };
        let mut out = Vec::new();
        let mut k = first_period;
        loop {
            let offset = k * period;
            if t0 + offset >= t2 {
                break;
            }
            for (idx, p) in self.pieces.iter().enumerate() {
                let start = p.start() + offset;
                let end = match self.pieces.get(idx + 1) {
                    Some(next) => next.start() + offset,
                    None => self.horizon_end + offset,
                };
                if end <= start {
                    continue;
                }
                if start < t2 && end > t1 {
                    out.push(Segment {
                        start: start.max(t1),
                        end: end.min(t2),
                        index: p.index(),
                    });
                }
            }
            if !self.periodic {
                break;
            }
            k += S::one();
        }
        Ok(out)
    }

    /// Index active at time `t` (right-continuous). Aperiodic signals keep their last piece
    /// from the final switch onward.
    pub fn index_at(&self, t: S) -> Result<usize> {
        let t0 = self.t0();
        if t < t0 {
            return domain(format!("time {t} precedes the signal start {t0}"));
        }
        let local = if self.periodic {
            let period = self.span();
            let shifted = t - t0 - ((t - t0) / period).floor() * period;
            t0 + shifted
        } else {
            t
        };
        let mut idx = self.pieces[0].index();
        for p in &self.pieces {
            if p.start() <= local {
                idx = p.index();
            } else {
                break;
            }
        }
        Ok(idx)
    }

    /// Switching instants strictly inside `(t1, t2)`.
    pub fn switch_times(&self, t1: S, t2: S) -> Vec<S> {
        let t0 = self.t0();
        let mut out = Vec::new();
        if !(t1 < t2) {
            return out;
        }
        let period = self.span();
        let mut k = if self.periodic && t1 > t0 {
            ((t1 - t0) / period).floor()
        } else {
            S::zero()
        };
        loop {
            let offset = k * period;
            if t0 + offset >= t2 {
                break;
            }
            for (i, p) in self.pieces.iter().enumerate() {
                // The very first start is not a switch unless the signal wrapped into it.
                if i == 0 && k == S::zero() {
                    continue;
                }
                let s = p.start() + offset;
                if s > t1 && s < t2 {
                    out.push(s);
                }
            }
            if !self.periodic {
                break;
            }
            k += S::one();
        }
        out
    }
}

pub fn validate_switching_signal<S: Scalar>(signal: &SwitchingSignal<S>) -> Vec<SignalViolation> {
    let mut out = Vec::new();
    // Switch times built by repeated addition (e.g. 0.3 * k) miss the dwell by a few ulps.
    let scale = signal.tau_d().max(signal.t0().abs()).max(signal.horizon_end().abs());
    let tau = signal.tau_d() - S::lit(64.0) * S::epsilon() * scale;
    for (i, w) in signal.pieces().windows(2).enumerate() {
        let gap = w[1].start() - w[0].start();
        if !(gap > S::zero()) {
            out.push(SignalViolation::NotIncreasing { index: i + 1 });
        } else if gap < tau {
            out.push(SignalViolation::DwellViolation {
                index: i + 1,
                gap: gap.as_f64(),
            });
        }
    }
    if signal.is_periodic() && signal.pieces().len() > 1 {
        let last = signal.pieces()[signal.pieces().len() - 1].start();
        let gap = signal.horizon_end() - last;
        if gap < tau {
            out.push(SignalViolation::WrapDwellViolation { gap: gap.as_f64() });
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sig(starts: &[f64], tau: f64, end: f64) -> SwitchingSignal<f64> {
        let pieces = starts.iter().enumerate().map(|(k, &t)| Piece(t, k % 2)).collect();
        SwitchingSignal::new(pieces, tau, end, false).unwrap()
    }

    #[test]
    fn dwell_validation_examples() {
        assert!(validate_switching_signal(&sig(&[0.0, 1.0, 2.0], 0.5, 3.0)).is_empty());
        assert_eq!(
            validate_switching_signal(&sig(&[0.0, 0.3], 0.5, 1.0)),
            vec![SignalViolation::DwellViolation { index: 1, gap: 0.3 }]
        );
        assert!(validate_switching_signal(&sig(&[0.0], 0.5, 1.0)).is_empty());
        assert_eq!(
            validate_switching_signal(&sig(&[0.0, 1.0, 1.0], 0.5, 2.0)),
            vec![SignalViolation::NotIncreasing { index: 2 }]
        );
    }

    #[test]
    fn periodic_wraparound_is_checked() {
        let s = SwitchingSignal::new(vec![Piece(0.0, 0), Piece(1.0, 1)], 0.5, 1.2, true).unwrap();
        assert_eq!(
            validate_switching_signal(&s).len(),
            1,
            "last piece of length 0.2 breaks the dwell time when wrapping"
        );
    }

    #[test]
    fn round_robin_with_inexact_dwell_validates() {
        for dwell in [0.1, 0.3, 0.7] {
            let s = SwitchingSignal::round_robin(&[0, 1, 2, 3, 4, 5, 6], 0.0, dwell).unwrap();
            assert!(validate_switching_signal(&s).is_empty(), "dwell {dwell}");
        }
        assert_eq!(validate_switching_signal(&sig(&[0.0, 0.2999], 0.3, 1.0)).len(), 1);
    }

    #[test]
    fn structural_errors() {
        assert!(SwitchingSignal::<f64>::new(vec![], 1.0, 1.0, false).is_err());
        assert!(SwitchingSignal::new(vec![Piece(0.0, 0)], 0.0, 1.0, false).is_err());
        assert!(SwitchingSignal::new(vec![Piece(0.0, 0), Piece(2.0, 1)], 1.0, 2.0, false).is_err());
    }

    #[test]
    fn index_lookup_and_periodicity() {
        let s = SwitchingSignal::round_robin(&[0, 1, 2], 0.0, 0.5).unwrap();
        assert_eq!(s.index_at(0.0).unwrap(), 0);
        assert_eq!(s.index_at(0.5).unwrap(), 1);
        assert_eq!(s.index_at(1.49).unwrap(), 2);
        assert_eq!(s.index_at(1.5).unwrap(), 0);
        assert_eq!(s.index_at(7.75).unwrap(), 0);
        assert!(s.index_at(-1.0).is_err());

        let a = sig(&[0.0, 1.0], 0.5, 2.0);
        assert_eq!(a.index_at(5.0).unwrap(), 1);
    }

    #[test]
    fn segments_clip_and_unroll() {
        let s = SwitchingSignal::round_robin(&[0, 1], 0.0, 1.0).unwrap();
        let segs = s.segments(0.5, 3.25).unwrap();
        let idx: Vec<_> = segs.iter().map(|g| g.index).collect();
        assert_eq!(idx, vec![0, 1, 0, 1]);
        assert_eq!(segs[0].start, 0.5);
        assert_eq!(segs[3].end, 3.25);

        let a = sig(&[0.0, 1.0], 0.5, 2.0);
        assert!(a.segments(1.0, 2.5).is_err());
        assert!(a.segments(1.0, 1.0).is_err());
    }

    #[test]
    fn switch_times_exclude_the_start() {
        let s = SwitchingSignal::round_robin(&[0, 1], 0.0, 1.0).unwrap();
        assert_eq!(s.switch_times(0.0, 3.0), vec![1.0, 2.0]);
        assert_eq!(s.switch_times(0.5, 2.5), vec![1.0, 2.0]);
        let c = SwitchingSignal::constant(0, 0.0, 10.0, 1.0).unwrap();
        assert!(c.switch_times(0.0, 10.0).is_empty());
    }

    #[test]
    fn json_shape() {
        let json = r#"{"tau_d": 0.5, "pieces": [[0, 0], [1.0, 1]], "horizon_end": 2, "periodic": true}"#;
        let s: SwitchingSignal<f64> = serde_json::from_str(json).unwrap();
        assert!(s.is_periodic());
        assert_eq!(s.pieces()[1], Piece(1.0, 1));
        let out = serde_json::to_string(&s).unwrap();
        assert_eq!(out, r#"{"tau_d":0.5,"pieces":[[0.0,0],[1.0,1]],"horizon_end":2.0,"periodic":true}"#);
        assert!(serde_json::from_str::<SwitchingSignal<f64>>(r#"{"tau_d": 0, "pieces": [[0, 0]], "horizon_end": 1}"#).is_err());
    }
}
