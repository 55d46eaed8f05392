//! Observables of traces (hitting times, cumulative rewards and functionals
//! of them), their Monte-Carlo expectations, and an empirical check that
//! close states have close expectations.

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::exec::Executor;
use crate::fixpoint::{Budget, Estimator, FixpointParams};
use crate::model::{GeneralizedState, GsmpModel};
use crate::stats::{mean, mean_ci, Interval};
use crate::trace::{sample_trace, TimedTrace};

/// Reward rate per state, indexed by state id.
#[derive(Debug, Clone, PartialEq)]
pub struct RewardSpec {
    rates: Vec<f64>,
}

impl RewardSpec {
    /// States with equal propositions must carry equal rates.
    pub fn new(model: &GsmpModel, rates: Vec<f64>) -> Result<Self> {
        let states = model.states();
        if rates.len() != states.len() {
            return Err(Error::InvalidParameter(format!(
                "{} reward rates for {} states",
                rates.len(),
                states.len()
            )));
        }
        for (i, &r) in rates.iter().enumerate() {
            if !(r.is_finite() && r >= 0.0) {
                return Err(Error::InvalidParameter(format!("reward of `{}` must be >= 0", states[i].name)));
            }
        }
        for i in 0..states.len() {
            for j in i + 1..states.len() {
                if states[i].props == states[j].props && rates[i] != rates[j] {
                    return Err(Error::InvalidParameter(format!(
                        "`{}` and `{}` have equal propositions but different rewards",
                        states[i].name, states[j].name
                    )));
                }
            }
        }
        Ok(Self { rates })
    }

    /// Unlisted states get rate 0.
    pub fn from_named(model: &GsmpModel, rates: &[(&str, f64)]) -> Result<Self> {
        let mut v = alloc::vec![0.0; model.states().len()];
        for &(name, r) in rates {
            v[model.state_id(name)?.0] = r;
        }
        Self::new(model, v)
    }

    pub fn rates(&self) -> &[f64] {
        &self.rates
    }

    pub fn max_rate(&self) -> f64 {
        self.rates.iter().copied().fold(0.0, f64::max)
    }
}

/// First time the trace is in a state satisfying `prop`, if any before the horizon.
pub fn hitting_time(model: &GsmpModel, trace: &TimedTrace, prop: &str) -> Option<f64> {
    trace
        .segments()
        .iter()
        .find(|s| model.state(s.start.state).has_prop(prop))
        .map(|s| s.start_time)
}

/// `(time, cumulative reward)` at every segment start and at the horizon.
fn reward_curve(trace: &TimedTrace, rewards: &RewardSpec) -> Vec<(f64, f64, f64)> {
    let h = trace.horizon();
    let mut acc = 0.0;
    trace
        .segments()
        .iter()
        .map(|s| {
            let rate = rewards.rates[s.start.state.0];
            let here = (s.start_time, acc, rate);
            acc += rate * (s.end_time().min(h) - s.start_time);
            here
        })
        .collect()
}

/// `∫_0^T R(f(t)) dt`.
pub fn cumulative_reward(trace: &TimedTrace, rewards: &RewardSpec, time: f64) -> Result<f64> {
    if !(time >= 0.0 && time <= trace.horizon()) {
        return Err(Error::OutOfHorizon {
            time,
            horizon: trace.horizon(),
        });
    }
    let curve = reward_curve(trace, rewards);
    let k = curve.partition_point(|&(t, _, _)| t <= time).max(1) - 1;
    let (t0, c0, r) = curve[k];
    Ok(c0 + r * (time - t0))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum RewardFunctional {
    /// `CumR(T)`.
    Cumulative(f64),
    /// `CumR(T) / T`.
    Average(f64),
    /// `sup { T : CumR(T) < v }`, capped at the horizon.
    CumulativeBelow(f64),
    /// `sup { T > 0 : CumR(T) / T < v }`, capped at the horizon; 0 if empty.
    AverageBelow(f64),
}

pub fn reward_functional(trace: &TimedTrace, rewards: &RewardSpec, f: RewardFunctional) -> Result<f64> {
    let h = trace.horizon();
    match f {
        RewardFunctional::Cumulative(t) => cumulative_reward(trace, rewards, t),
        RewardFunctional::Average(t) => {
            if t <= 0.0 {
                return Err(Error::BadDuration(t));
            }
            Ok(cumulative_reward(trace, rewards, t)? / t)
        }
        RewardFunctional::CumulativeBelow(v) => {
            if v <= 0.0 {
                return Ok(0.0);
            }
            let curve = reward_curve(trace, rewards);
            for (k, &(t0, c0, r)) in curve.iter().enumerate() {
                let t1 = curve.get(k + 1).map_or(h, |s| s.0);
                if r > 0.0 && c0 + r * (t1 - t0) >= v {
                    return Ok(t0 + (v - c0) / r);
                }
            }
            Ok(h)
        }
        RewardFunctional::AverageBelow(v) => {
            // g(T) = CumR(T) − v·T is linear on each segment; find the last time it is negative.
            let curve = reward_curve(trace, rewards);
            let g = |c: f64, t: f64| c - v * t;
            let end = cumulative_reward(trace, rewards, h)?;
            if g(end, h) < 0.0 {
                return Ok(h);
            }
            for k in (0..curve.len()).rev() {
                let (t0, c0, r) = curve[k];
                let below = if t0 == 0.0 { r < v } else { g(c0, t0) < 0.0 };
                if below {
                    // g goes from negative to non-negative inside this segment.
                    return Ok(if r == v { t0 } else { t0 + (v * t0 - c0) / (r - v) });
                }
            }
            Ok(0.0)
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Observable {
    HittingTime(String),
    Reward(RewardSpec, RewardFunctional),
}

impl Observable {
    /// `None` when a hitting time misses the horizon.
    pub fn eval(&self, model: &GsmpModel, trace: &TimedTrace) -> Result<Option<f64>> {
        match self {
            Observable::HittingTime(p) => Ok(hitting_time(model, trace, p)),
            Observable::Reward(r, f) => reward_functional(trace, r, *f).map(Some),
        }
    }

    /// Width of the range the observable can take on traces up to `horizon`.
    pub fn range(&self, horizon: f64) -> f64 {
        match self {
            Observable::HittingTime(_) => horizon,
            Observable::Reward(r, f) => match *f {
                RewardFunctional::Cumulative(t) => r.max_rate() * t,
                RewardFunctional::Average(_) => r.max_rate(),
                RewardFunctional::CumulativeBelow(_) | RewardFunctional::AverageBelow(_) => horizon,
            },
        }
    }

    /// How far the value moves per unit of time shift along a trace.
    pub fn scale(&self) -> f64 {
        match self {
            Observable::Reward(r, RewardFunctional::Cumulative(_)) => r.max_rate(),
            Observable::Reward(r, RewardFunctional::Average(t)) => r.max_rate() / t,
            _ => 1.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ObservableParams {
    pub samples: usize,
    pub horizon: f64,
    pub seed: u64,
    pub bootstrap: usize,
    pub confidence: f64,
}

impl Default for ObservableParams {
    fn default() -> Self {
        Self {
            samples: 1000,
            horizon: 10.0,
            seed: 0,
            bootstrap: 200,
            confidence: 0.95,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Expectation {
    /// Mean over traces where the observable is defined; `None` if there are none.
    pub mean: Option<f64>,
    pub ci: Option<Interval>,
    pub samples: usize,
    pub hits: usize,
    pub miss_fraction: f64,
}

/// Monte-Carlo expectation over `params.samples` traces; trace `i` uses random stream `i`.
pub fn expected_observable<E: Executor>(
    model: &GsmpModel,
    gs: &GeneralizedState,
    obs: &Observable,
    params: &ObservableParams,
    exec: &E,
) -> Result<Expectation> {
    if params.samples == 0 {
        return Err(Error::InvalidParameter("samples must be >= 1".into()));
    }
    if !(params.horizon.is_finite() && params.horizon > 0.0) {
        return Err(Error::InvalidParameter("horizon must be > 0".into()));
    }
    let values = exec.map(params.samples, |i| {
        let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
        rng.set_stream(i as u64);
        obs.eval(model, &sample_trace(model, gs, params.horizon, &mut rng)?)
    });
    let mut hit = Vec::with_capacity(params.samples);
    for v in values {
        if let Some(x) = v? {
            hit.push(x);
        }
    }
    let miss_fraction = 1.0 - hit.len() as f64 / params.samples as f64;
    if hit.is_empty() {
        return Ok(Expectation {
            mean: None,
            ci: None,
            samples: params.samples,
            hits: 0,
            miss_fraction,
        });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
    rng.set_stream(u64::MAX);
    Ok(Expectation {
        mean: Some(mean(&hit)),
        ci: Some(mean_ci(&hit, params.bootstrap, params.confidence, &mut rng)),
        samples: params.samples,
        hits: hit.len(),
        miss_fraction,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Verdict {
    Pass,
    Fail,
    /// `2ε̂` already covers the observable's whole range.
    Uninformative,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ContinuityRow {
    pub pair: usize,
    pub epsilon: f64,
    pub budget: Budget,
    pub delta: f64,
    /// Sum of the two interval half-widths.
    pub tolerance: f64,
    /// `2·scale·ε̂ + tolerance`.
    pub bound: f64,
    /// `2·scale·(ε̂ + budget) + tolerance`; `ε̂ + budget` bounds the fixed point from above.
    pub certified: f64,
    /// Judged against `certified`.
    pub verdict: Verdict,
}

/// For each pair, compares the change in expectation with twice the estimated distance,
/// scaled by [`Observable::scale`].
pub fn continuity_report<E: Executor>(
    model: &GsmpModel,
    pairs: &[(GeneralizedState, GeneralizedState)],
    obs: &Observable,
    metric: &FixpointParams,
    params: &ObservableParams,
    exec: &E,
) -> Result<Vec<ContinuityRow>> {
    let est = Estimator::new(model, metric.clone(), exec)?;
    let mut rows = Vec::with_capacity(pairs.len());
    for (pair, (a, b)) in pairs.iter().enumerate() {
        let m = est.estimate(a, b)?;
        let (ea, eb) = (
            expected_observable(model, a, obs, params, exec)?,
            expected_observable(model, b, obs, params, exec)?,
        );
        let half = |e: &Expectation| e.ci.map_or(0.0, |c| c.half_width());
        let (delta, tolerance) = match (ea.mean, eb.mean) {
            (Some(x), Some(y)) => ((x - y).abs(), half(&ea) + half(&eb)),
            (None, None) => (0.0, 0.0),
            _ => (f64::INFINITY, 0.0),
        };
        let scale = obs.scale();
        let bound = 2.0 * scale * m.value + tolerance;
        let reach = 2.0 * scale * (m.value + m.budget.total());
        let certified = reach + tolerance;
        let verdict = if m.value >= 1.0 || reach >= obs.range(params.horizon) {
            Verdict::Uninformative
        } else if delta <= certified {
            Verdict::Pass
        } else {
            Verdict::Fail
        };
        rows.push(ContinuityRow {
            pair,
            epsilon: m.value,
            budget: m.budget,
            delta,
            tolerance,
            bound,
            certified,
            verdict,
        });
    }
    Ok(rows)
}
