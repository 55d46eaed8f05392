//! Finitely-varying timed traces over generalized states.

use alloc::format;
use alloc::vec::Vec;

use rand::RngCore;

use crate::error::{Error, Result};
use crate::model::{time_to_first_expiry, transition, GeneralizedState, GsmpModel};

#[derive(Debug, Clone, PartialEq)]
pub struct Segment {
    pub start: GeneralizedState,
    pub start_time: f64,
    pub dwell: f64,
    /// Clocks stand still on a frozen segment (constant delay prefixes).
    pub frozen: bool,
}

impl Segment {
    pub fn end_time(&self) -> f64 {
        self.start_time + self.dwell
    }

    fn at_offset(&self, model: &GsmpModel, offset: f64) -> GeneralizedState {
        if self.frozen {
            self.start.clone()
        } else {
            self.start.evolved(model, offset)
        }
    }
}

/// A cadlag path over generalized states, truncated at `horizon`.
///
/// Segments tile `[0, horizon)` without gaps. Every dwell is positive.
#[derive(Debug, Clone, PartialEq)]
pub struct TimedTrace {
    segments: Vec<Segment>,
    horizon: f64,
}

impl TimedTrace {
    /// Builds a trace from `(segment start, dwell)` pairs; the horizon is the total dwell.
    pub fn from_segments(model: &GsmpModel, parts: Vec<(GeneralizedState, f64)>) -> Result<Self> {
        let mut segments = Vec::with_capacity(parts.len());
        let mut t = 0.0;
        for (start, dwell) in parts {
            if !(dwell.is_finite() && dwell > 0.0) {
                return Err(Error::InvalidTrace(format!("dwell {dwell} must be > 0")));
            }
            if start.clocks.len() != model.state(start.state).events.len() {
                return Err(Error::InvalidTrace("clock layout does not match the state".into()));
            }
            segments.push(Segment {
                start,
                start_time: t,
                dwell,
                frozen: false,
            });
            t += dwell;
        }
        if segments.is_empty() {
            return Err(Error::InvalidTrace("a trace needs at least one segment".into()));
        }
        Ok(Self { segments, horizon: t })
    }

    pub fn segments(&self) -> &[Segment] {
        &self.segments
    }

    pub fn horizon(&self) -> f64 {
        self.horizon
    }

    fn segment_index(&self, t: f64) -> usize {
        // Last segment whose start is <= t.
        self.segments.partition_point(|s| s.start_time <= t).saturating_sub(1)
    }

    /// Right-continuous evaluation at `t ∈ [0, horizon)`.
    pub fn at(&self, model: &GsmpModel, t: f64) -> Result<GeneralizedState> {
        if !(t >= 0.0 && t < self.horizon) {
            return Err(Error::OutOfHorizon {
                time: t,
                horizon: self.horizon,
            });
        }
        let seg = &self.segments[self.segment_index(t)];
        Ok(seg.at_offset(model, (t - seg.start_time).min(seg.dwell)))
    }

    /// Left limit at `t ∈ (0, horizon]`.
    pub fn left_limit(&self, model: &GsmpModel, t: f64) -> Result<GeneralizedState> {
        if !(t > 0.0 && t <= self.horizon) {
            return Err(Error::OutOfHorizon {
                time: t,
                horizon: self.horizon,
            });
        }
        let i = self.segments.partition_point(|s| s.start_time < t) - 1;
        let seg = &self.segments[i];
        Ok(seg.at_offset(model, (t - seg.start_time).min(seg.dwell)))
    }

    /// Segment boundaries strictly inside the horizon.
    pub fn jump_times(&self) -> Vec<f64> {
        self.segments.iter().skip(1).map(|s| s.start_time).collect()
    }

    /// Restricts the trace to `[0, horizon)`; a longer horizon is an error.
    pub fn truncated(&self, horizon: f64) -> Result<Self> {
        if !(horizon > 0.0 && horizon <= self.horizon) {
            return Err(Error::OutOfHorizon {
                time: horizon,
                horizon: self.horizon,
            });
        }
        let mut segments: Vec<Segment> = self
            .segments
            .iter()
            .filter(|s| s.start_time < horizon)
            .cloned()
            .collect();
        if let Some(last) = segments.last_mut() {
            last.dwell = horizon - last.start_time;
        }
        Ok(Self { segments, horizon })
    }
}

/// Samples one trace from `gs0` up to `horizon`.
///
/// A zero-length first sojourn (a clock already at zero) is skipped, so the
/// trace starts with the post-jump state.
pub fn sample_trace<R: RngCore + ?Sized>(
    model: &GsmpModel,
    gs0: &GeneralizedState,
    horizon: f64,
    rng: &mut R,
) -> Result<TimedTrace> {
    if !(horizon.is_finite() && horizon > 0.0) {
        return Err(Error::InvalidParameter(format!("horizon must be > 0 (got {horizon})")));
    }
    let guard = model.tolerances().zeno_guard;
    let mut segments = Vec::new();
    let mut elapsed = 0.0;
    let mut current = gs0.clone();
    let mut events = 0usize;
    loop {
        let expiry = time_to_first_expiry(&current, model)?;
        if elapsed + expiry.time >= horizon {
            segments.push(Segment {
                start: current,
                start_time: elapsed,
                dwell: horizon - elapsed,
                frozen: false,
            });
            break;
        }
        events += 1;
        if events > guard {
            return Err(Error::ZenoGuardExceeded(guard));
        }
        let tr = transition(model, &current, rng)?;
        if tr.dwell > 0.0 {
            segments.push(Segment {
                start: current,
                start_time: elapsed,
                dwell: tr.dwell,
                frozen: false,
            });
            elapsed += tr.dwell;
        }
        current = tr.next;
    }
    Ok(TimedTrace { segments, horizon })
}

/// Convenience wrapper around [`TimedTrace::at`].
pub fn trace_at(model: &GsmpModel, trace: &TimedTrace, t: f64) -> Result<GeneralizedState> {
    trace.at(model, t)
}

pub fn jump_times(trace: &TimedTrace) -> Vec<f64> {
    trace.jump_times()
}

/// A continuous path on `[0, r)` placed in front of a trace.
#[derive(Debug, Clone, PartialEq)]
pub enum DelayPrefix {
    /// `u(t) = gs` for all `t`.
    Constant(GeneralizedState),
    /// `u(t) = gs` with every clock running down at its rate.
    ClockLinear(GeneralizedState),
}

/// `delay_u(f)`: the prefix on `[0, r)`, then `f` shifted right by `r`.
pub fn delay(model: &GsmpModel, trace: &TimedTrace, prefix: &DelayPrefix, r: f64) -> Result<TimedTrace> {
    if !(r.is_finite() && r >= 0.0) {
        return Err(Error::BadDuration(r));
    }
    if r == 0.0 {
        return Ok(trace.clone());
    }
    let mut segments = Vec::with_capacity(trace.segments.len() + 1);
    let (start, frozen) = match prefix {
        DelayPrefix::Constant(gs) => (gs.clone(), true),
        DelayPrefix::ClockLinear(gs) => (gs.clone(), false),
    };
    let first = &trace.segments[0];
    // A clock-linear prefix that runs exactly into f(0) just extends the first sojourn.
    let merges = !frozen
        && !first.frozen
        && start.state == first.start.state
        && start
            .evolved(model, r)
            .clocks
            .iter()
            .zip(&first.start.clocks)
            .all(|(a, b)| (a - b).abs() <= 1e-12 * (1.0 + b.abs()));
    if merges {
        segments.push(Segment {
            start,
            start_time: 0.0,
            dwell: r + first.dwell,
            frozen: false,
        });
    } else {
        segments.push(Segment {
            start,
            start_time: 0.0,
            dwell: r,
            frozen,
        });
        segments.push(Segment {
            start_time: r,
            ..first.clone()
        });
    }
    for s in &trace.segments[1..] {
        segments.push(Segment {
            start_time: s.start_time + r,
            ..s.clone()
        });
    }
    Ok(TimedTrace {
        segments,
        horizon: trace.horizon + r,
    })
}

#[cfg(test)]
pub(crate) mod tests {
    use super::*;
    use crate::model::ResetDistribution;
    use alloc::vec;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    pub(crate) fn ping_pong() -> GsmpModel {
        GsmpModel::builder()
            .state("s", &[], &[("a", 1.0)])
            .state("s'", &["p"], &[("a", 1.0)])
            .next("s", "a", &[("s'", 1.0)])
            .next("s'", "a", &[("s", 1.0)])
            .reset("s", "a", "s'", "a", ResetDistribution::PointMass { value: 1.0 })
            .reset("s'", "a", "s", "a", ResetDistribution::PointMass { value: 1.0 })
            .build()
            .unwrap()
    }

    fn ping_pong_trace(horizon: f64) -> (GsmpModel, TimedTrace) {
        let m = ping_pong();
        let gs = GeneralizedState::from_named(&m, "s", &[("a", 1.0)]).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let tr = sample_trace(&m, &gs, horizon, &mut rng).unwrap();
        (m, tr)
    }

    #[test]
    fn ping_pong_segments_by_hand() {
        let (m, tr) = ping_pong_trace(3.5);
        let got: Vec<_> = tr
            .segments()
            .iter()
            .map(|s| (m.state(s.start.state).name.as_str(), s.dwell))
            .collect();
        assert_eq!(got, vec![("s", 1.0), ("s'", 1.0), ("s", 1.0), ("s'", 0.5)]);
        assert_eq!(tr.jump_times(), vec![1.0, 2.0, 3.0]);
        assert_eq!(tr.horizon(), 3.5);
    }

    #[test]
    fn short_horizon_gives_one_truncated_segment() {
        let (_, tr) = ping_pong_trace(0.4);
        assert_eq!(tr.segments().len(), 1);
        assert_eq!(tr.segments()[0].dwell, 0.4);
        assert!(tr.jump_times().is_empty());
    }

    #[test]
    fn evaluation_is_right_continuous() {
        let (m, tr) = ping_pong_trace(3.5);
        let at = tr.at(&m, 0.25).unwrap();
        assert_eq!(m.state(at.state).name, "s");
        assert_eq!(at.clocks, vec![0.75]);
        let jump = tr.at(&m, 1.0).unwrap();
        assert_eq!(m.state(jump.state).name, "s'");
        assert_eq!(jump.clocks, vec![1.0]);
        let before = tr.left_limit(&m, 1.0).unwrap();
        assert_eq!(m.state(before.state).name, "s");
        assert_eq!(before.clocks, vec![0.0]);
        assert!(matches!(tr.at(&m, 3.5), Err(Error::OutOfHorizon { .. })));
        assert!(matches!(tr.at(&m, -0.1), Err(Error::OutOfHorizon { .. })));
    }

    #[test]
    fn zeno_guard_trips() {
        let m = ping_pong().with_tolerances(crate::config::Tolerances {
            zeno_guard: 5,
            ..Default::default()
        });
        let gs = GeneralizedState::from_named(&m, "s", &[("a", 1.0)]).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        assert_eq!(
            sample_trace(&m, &gs, 100.0, &mut rng),
            Err(Error::ZenoGuardExceeded(5))
        );
    }

    #[test]
    fn delay_by_zero_is_identity() {
        let (m, tr) = ping_pong_trace(3.5);
        let u = DelayPrefix::Constant(tr.segments()[0].start.clone());
        assert_eq!(delay(&m, &tr, &u, 0.0).unwrap(), tr);
    }

    #[test]
    fn constant_prefix_adds_leading_segment() {
        let (m, tr) = ping_pong_trace(3.5);
        let f0 = tr.at(&m, 0.0).unwrap();
        let d = delay(&m, &tr, &DelayPrefix::Constant(f0.clone()), 0.3).unwrap();
        assert_eq!(d.segments().len(), tr.segments().len() + 1);
        assert!((d.horizon() - 3.8).abs() < 1e-12);
        assert_eq!(d.at(&m, 0.2).unwrap(), f0);
        assert_eq!(d.jump_times()[0], 0.3);
    }

    #[test]
    fn matching_clock_linear_prefix_lengthens_first_dwell() {
        let (m, tr) = ping_pong_trace(3.5);
        let rewound = GeneralizedState::from_named(&m, "s", &[("a", 1.3)]).unwrap();
        let d = delay(&m, &tr, &DelayPrefix::ClockLinear(rewound), 0.3).unwrap();
        assert_eq!(d.segments().len(), tr.segments().len());
        assert!((d.segments()[0].dwell - 1.3).abs() < 1e-12);
        assert_eq!(d.at(&m, 0.3).unwrap().clocks, vec![1.0]);
    }

    #[test]
    fn delay_shifts_evaluation() {
        let m = ping_pong();
        let gs = GeneralizedState::from_named(&m, "s", &[("a", 0.6)]).unwrap();
        let tr = sample_trace(&m, &gs, 4.0, &mut ChaCha8Rng::seed_from_u64(2)).unwrap();
        let d = delay(&m, &tr, &DelayPrefix::Constant(gs.clone()), 0.5).unwrap();
        for i in 0..40 {
            let t = i as f64 * 0.1;
            let a = tr.at(&m, t).unwrap();
            let b = d.at(&m, t + 0.5).unwrap();
            assert_eq!(a.state, b.state);
            for (x, y) in a.clocks.iter().zip(&b.clocks) {
                assert!((x - y).abs() < 1e-12);
            }
        }
    }
}
