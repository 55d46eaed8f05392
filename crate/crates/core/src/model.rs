//! GSMP models, generalized states and single-step semantics.
//!
//! A model has a finite set of states. Each state carries a set of atomic
//! propositions and a set of events; every event owns a clock that runs down
//! at a fixed positive rate. When the first clock reaches zero its event
//! fires: the target state is drawn from the event's probability row, clocks
//! the target does not know are discarded, surviving clocks carry their
//! values, and every other clock of the target is drawn from its reset
//! distribution.

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use rand::{Rng, RngCore};
use rand_distr::{Distribution, Exp, Uniform, Weibull};

use crate::config::Tolerances;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct StateId(pub usize);

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct EventId(pub usize);

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ResetDistribution {
    Exponential { rate: f64 },
    Uniform { a: f64, b: f64 },
    Weibull { shape: f64, scale: f64 },
    /// Deterministic reset. Not a continuous density; accepted for testing only.
    PointMass { value: f64 },
}

impl ResetDistribution {
    /// Returns a description of the first broken parameter constraint, if any.
    pub fn check(&self) -> Option<String> {
        let positive = |name: &str, v: f64| {
            if v.is_finite() && v > 0.0 {
                None
            } else {
                Some(format!("{name} must be > 0 (got {v})"))
            }
        };
        match *self {
            Self::Exponential { rate } => positive("rate", rate),
            Self::Uniform { a, b } => positive("a", a)
                .or_else(|| positive("b", b))
                .or_else(|| (a >= b).then(|| format!("uniform requires a < b (got a={a}, b={b})"))),
            Self::Weibull { shape, scale } => positive("shape", shape).or_else(|| positive("scale", scale)),
            Self::PointMass { value } => positive("value", value),
        }
    }

    pub fn is_continuous(&self) -> bool {
        !matches!(self, Self::PointMass { .. })
    }

    pub fn sample<R: RngCore + ?Sized>(&self, rng: &mut R) -> Result<f64> {
        let bad = |e: &dyn core::fmt::Display| Error::DegenerateModel(format!("reset distribution: {e}"));
        match *self {
            Self::Exponential { rate } => Ok(Exp::new(rate).map_err(|e| bad(&e))?.sample(rng)),
            Self::Uniform { a, b } => Ok(Uniform::new(a, b).map_err(|e| bad(&e))?.sample(rng)),
            Self::Weibull { shape, scale } => Ok(Weibull::new(scale, shape).map_err(|e| bad(&e))?.sample(rng)),
            Self::PointMass { value } => Ok(value),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct StateDef {
    pub name: String,
    /// Sorted, deduplicated proposition names.
    pub props: Vec<String>,
    /// Events enabled in this state with their clock rates, in declaration order.
    /// This order is the clock layout of every generalized state over the state.
    pub events: Vec<(EventId, f64)>,
    /// States with equal proposition sets share a class.
    pub(crate) prop_class: usize,
}

impl StateDef {
    pub fn slot_of(&self, event: EventId) -> Option<usize> {
        self.events.iter().position(|&(e, _)| e == event)
    }

    pub fn has_prop(&self, prop: &str) -> bool {
        self.props.binary_search_by(|p| p.as_str().cmp(prop)).is_ok()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub struct ResetKey {
    pub state: StateId,
    pub event: EventId,
    pub target: StateId,
    pub new_event: EventId,
}

/// A finite-state generalized semi-Markov process.
#[derive(Debug, Clone, PartialEq)]
pub struct GsmpModel {
    states: Vec<StateDef>,
    events: Vec<String>,
    next: BTreeMap<(StateId, EventId), Vec<f64>>,
    resets: BTreeMap<ResetKey, ResetDistribution>,
    tolerances: Tolerances,
}

impl GsmpModel {
    pub fn builder() -> ModelBuilder {
        ModelBuilder::default()
    }

    pub fn states(&self) -> &[StateDef] {
        &self.states
    }

    pub fn state(&self, id: StateId) -> &StateDef {
        &self.states[id.0]
    }

    pub fn event_names(&self) -> &[String] {
        &self.events
    }

    pub fn event_name(&self, id: EventId) -> &str {
        &self.events[id.0]
    }

    pub fn state_id(&self, name: &str) -> Result<StateId> {
        self.states
            .iter()
            .position(|s| s.name == name)
            .map(StateId)
            .ok_or_else(|| Error::UnknownState(name.to_string()))
    }

    pub fn event_id(&self, name: &str) -> Result<EventId> {
        self.events
            .iter()
            .position(|e| e == name)
            .map(EventId)
            .ok_or_else(|| Error::UnknownEvent(name.to_string()))
    }

    pub fn next_row(&self, state: StateId, event: EventId) -> Option<&[f64]> {
        self.next.get(&(state, event)).map(Vec::as_slice)
    }

    pub fn next_rows(&self) -> impl Iterator<Item = (&(StateId, EventId), &Vec<f64>)> {
        self.next.iter()
    }

    pub fn reset(&self, key: &ResetKey) -> Option<&ResetDistribution> {
        self.resets.get(key)
    }

    pub fn resets(&self) -> impl Iterator<Item = (&ResetKey, &ResetDistribution)> {
        self.resets.iter()
    }

    pub fn tolerances(&self) -> &Tolerances {
        &self.tolerances
    }

    pub fn with_tolerances(mut self, tolerances: Tolerances) -> Self {
        self.tolerances = tolerances;
        self
    }

    pub fn same_props(&self, a: StateId, b: StateId) -> bool {
        self.states[a.0].prop_class == self.states[b.0].prop_class
    }

    pub fn max_rate(&self) -> f64 {
        self.states
            .iter()
            .flat_map(|s| s.events.iter().map(|&(_, r)| r))
            .fold(0.0, f64::max)
    }
}

#[derive(Debug, Default)]
pub struct ModelBuilder {
    states: Vec<(String, Vec<String>, Vec<(String, f64)>)>,
    next: Vec<(String, String, Vec<(String, f64)>)>,
    resets: Vec<(String, String, String, String, ResetDistribution)>,
    tolerances: Tolerances,
}

impl ModelBuilder {
    pub fn state(mut self, name: &str, props: &[&str], events: &[(&str, f64)]) -> Self {
        self.add_state(
            name.to_string(),
            props.iter().map(|p| p.to_string()).collect(),
            events.iter().map(|&(e, r)| (e.to_string(), r)).collect(),
        );
        self
    }

    pub fn add_state(&mut self, name: String, props: Vec<String>, events: Vec<(String, f64)>) {
        self.states.push((name, props, events));
    }

    pub fn next(mut self, state: &str, event: &str, row: &[(&str, f64)]) -> Self {
        self.add_next(
            state.to_string(),
            event.to_string(),
            row.iter().map(|&(s, p)| (s.to_string(), p)).collect(),
        );
        self
    }

    pub fn add_next(&mut self, state: String, event: String, row: Vec<(String, f64)>) {
        self.next.push((state, event, row));
    }

    pub fn reset(mut self, state: &str, event: &str, target: &str, new_event: &str, dist: ResetDistribution) -> Self {
        self.add_reset(
            state.to_string(),
            event.to_string(),
            target.to_string(),
            new_event.to_string(),
            dist,
        );
        self
    }

    pub fn add_reset(&mut self, state: String, event: String, target: String, new_event: String, dist: ResetDistribution) {
        self.resets.push((state, event, target, new_event, dist));
    }

    pub fn tolerances(mut self, tolerances: Tolerances) -> Self {
        self.tolerances = tolerances;
        self
    }

    /// Resolves names. Semantic invariants are left to [`validate_model`].
    pub fn build(self) -> Result<GsmpModel> {
        let mut events: Vec<String> = Vec::new();
        let intern = |name: &str, events: &mut Vec<String>| match events.iter().position(|e| e == name) {
            Some(i) => EventId(i),
            None => {
                events.push(name.to_string());
                EventId(events.len() - 1)
            }
        };

        let mut states = Vec::with_capacity(self.states.len());
        let mut classes: Vec<Vec<String>> = Vec::new();
        for (name, mut props, evs) in self.states {
            if states.iter().any(|s: &StateDef| s.name == name) {
                return Err(Error::InvalidParameter(format!("duplicate state `{name}`")));
            }
            props.sort();
            props.dedup();
            let prop_class = match classes.iter().position(|c| *c == props) {
                Some(c) => c,
                None => {
                    classes.push(props.clone());
                    classes.len() - 1
                }
            };
            let mut slots: Vec<(EventId, f64)> = Vec::with_capacity(evs.len());
            for (e, rate) in evs {
                let id = intern(&e, &mut events);
                if slots.iter().any(|&(x, _)| x == id) {
                    return Err(Error::InvalidParameter(format!("state `{name}` lists event `{e}` twice")));
                }
                slots.push((id, rate));
            }
            states.push(StateDef {
                name,
                props,
                events: slots,
                prop_class,
            });
        }

        let state_id = |name: &str| {
            states
                .iter()
                .position(|s: &StateDef| s.name == name)
                .map(StateId)
                .ok_or_else(|| Error::UnknownState(name.to_string()))
        };
        let event_id = |name: &str, events: &[String]| {
            events
                .iter()
                .position(|e| e == name)
                .map(EventId)
                .ok_or_else(|| Error::UnknownEvent(name.to_string()))
        };

        let mut next = BTreeMap::new();
        for (s, e, row) in self.next {
            let key = (state_id(&s)?, event_id(&e, &events)?);
            let mut dense = alloc::vec![0.0; states.len()];
            for (t, p) in row {
                dense[state_id(&t)?.0] += p;
            }
            if next.insert(key, dense).is_some() {
                return Err(Error::InvalidParameter(format!("duplicate probability row for ({s}, {e})")));
            }
        }

        let mut resets = BTreeMap::new();
        for (s, e, t, ne, dist) in self.resets {
            let key = ResetKey {
                state: state_id(&s)?,
                event: event_id(&e, &events)?,
                target: state_id(&t)?,
                new_event: event_id(&ne, &events)?,
            };
            if resets.insert(key, dist).is_some() {
                return Err(Error::InvalidParameter(format!("duplicate reset for ({s}, {e}, {t}, {ne})")));
            }
        }

        Ok(GsmpModel {
            states,
            events,
            next,
            resets,
            tolerances: self.tolerances,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Severity {
    Error,
    /// Accepted, but outside the continuous-density class of the theory.
    Warning,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Violation {
    pub severity: Severity,
    /// Location of the offending field, e.g. `next[s0][a]`.
    pub path: String,
    pub message: String,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct ValidationReport {
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    pub fn is_valid(&self) -> bool {
        self.violations.iter().all(|v| v.severity != Severity::Error)
    }

    pub fn errors(&self) -> impl Iterator<Item = &Violation> {
        self.violations.iter().filter(|v| v.severity == Severity::Error)
    }

    fn push(&mut self, severity: Severity, path: String, message: impl Into<String>) {
        self.violations.push(Violation {
            severity,
            path,
            message: message.into(),
        });
    }
}

pub fn validate_model(model: &GsmpModel) -> ValidationReport {
    let mut report = ValidationReport::default();
    let tol = model.tolerances.mass;

    if model.states.is_empty() {
        report.push(Severity::Error, "states".into(), "model has no states");
    }
    for s in &model.states {
        if s.events.is_empty() {
            report.push(
                Severity::Error,
                format!("states[{}].events", s.name),
                "state has no events; no clock can ever expire",
            );
        }
        for &(e, rate) in &s.events {
            if !(rate.is_finite() && rate > 0.0) {
                report.push(
                    Severity::Error,
                    format!("states[{}].rates[{}]", s.name, model.event_name(e)),
                    format!("rate must be > 0 (got {rate})"),
                );
            }
        }
    }

    for (si, s) in model.states.iter().enumerate() {
        let sid = StateId(si);
        for &(e, _) in &s.events {
            let path = format!("next[{}][{}]", s.name, model.event_name(e));
            let Some(row) = model.next.get(&(sid, e)) else {
                report.push(Severity::Error, path, "missing probability row");
                continue;
            };
            if let Some(p) = row.iter().find(|p| !(p.is_finite() && (0.0..=1.0).contains(*p))) {
                report.push(Severity::Error, path.clone(), format!("probability {p} outside [0, 1]"));
            }
            let sum: f64 = row.iter().sum();
            if (sum - 1.0).abs() > tol {
                report.push(Severity::Error, path, format!("probability row sum ≠ 1 (sum = {sum})"));
            }
        }
    }
    for &(sid, e) in model.next.keys() {
        if model.states[sid.0].slot_of(e).is_none() {
            report.push(
                Severity::Error,
                format!("next[{}][{}]", model.states[sid.0].name, model.event_name(e)),
                "row given for an event the state does not enable",
            );
        }
    }

    for (key, dist) in &model.resets {
        let path = format!(
            "resets[{}][{}][{}][{}]",
            model.states[key.state.0].name,
            model.event_name(key.event),
            model.states[key.target.0].name,
            model.event_name(key.new_event)
        );
        if let Some(msg) = dist.check() {
            report.push(Severity::Error, path.clone(), msg);
        }
        if !dist.is_continuous() {
            report.push(Severity::Warning, path, "non-conforming: testing only (point-mass reset)");
        }
    }

    // Every clock that must be freshly drawn after a possible transition needs a distribution.
    for (si, s) in model.states.iter().enumerate() {
        let sid = StateId(si);
        for &(fired, _) in &s.events {
            let Some(row) = model.next.get(&(sid, fired)) else { continue };
            for (ti, &p) in row.iter().enumerate() {
                if p <= 0.0 {
                    continue;
                }
                let target = &model.states[ti];
                for &(ne, _) in &target.events {
                    let carried = ne != fired && s.slot_of(ne).is_some();
                    if carried {
                        continue;
                    }
                    let key = ResetKey {
                        state: sid,
                        event: fired,
                        target: StateId(ti),
                        new_event: ne,
                    };
                    if !model.resets.contains_key(&key) {
                        report.push(
                            Severity::Error,
                            format!(
                                "resets[{}][{}][{}][{}]",
                                s.name,
                                model.event_name(fired),
                                target.name,
                                model.event_name(ne)
                            ),
                            "missing reset distribution for a new clock",
                        );
                    }
                }
            }
        }
    }
    report
}

/// A state together with one clock value per enabled event.
///
/// `clocks[i]` belongs to the `i`-th event of the state's declaration order.
#[derive(Debug, Clone, PartialEq)]
pub struct GeneralizedState {
    pub state: StateId,
    pub clocks: Vec<f64>,
}

/// The clock that runs out first and when.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Expiry {
    pub time: f64,
    pub event: EventId,
    pub slot: usize,
}

impl GeneralizedState {
    /// Checks the clock layout, non-negativity and the unique-first-expiry condition.
    pub fn new(model: &GsmpModel, state: StateId, clocks: Vec<f64>) -> Result<Self> {
        let def = model
            .states
            .get(state.0)
            .ok_or_else(|| Error::UnknownState(format!("#{}", state.0)))?;
        if clocks.len() != def.events.len() {
            return Err(Error::InvalidState(format!(
                "state `{}` has {} clocks, got {} values",
                def.name,
                def.events.len(),
                clocks.len()
            )));
        }
        if let Some(c) = clocks.iter().find(|c| !(c.is_finite() && **c >= 0.0)) {
            return Err(Error::InvalidState(format!("clock value {c} must be finite and >= 0")));
        }
        let gs = Self { state, clocks };
        time_to_first_expiry(&gs, model)?;
        Ok(gs)
    }

    /// Builds a state from names; every enabled event must be given exactly once.
    pub fn from_named(model: &GsmpModel, state: &str, clocks: &[(&str, f64)]) -> Result<Self> {
        let sid = model.state_id(state)?;
        let def = model.state(sid);
        let mut values = alloc::vec![f64::NAN; def.events.len()];
        for &(name, v) in clocks {
            let eid = model.event_id(name)?;
            let slot = def
                .slot_of(eid)
                .ok_or_else(|| Error::InvalidState(format!("event `{name}` is not enabled in `{state}`")))?;
            if !values[slot].is_nan() {
                return Err(Error::InvalidState(format!("clock `{name}` given twice")));
            }
            values[slot] = v;
        }
        if let Some(slot) = values.iter().position(|v| v.is_nan()) {
            return Err(Error::InvalidState(format!(
                "missing clock `{}` for state `{state}`",
                model.event_name(def.events[slot].0)
            )));
        }
        Self::new(model, sid, values)
    }

    /// Clock vector after `t` time units, without any expiry check.
    pub(crate) fn evolved(&self, model: &GsmpModel, t: f64) -> Self {
        let def = model.state(self.state);
        let clocks = self
            .clocks
            .iter()
            .zip(&def.events)
            .map(|(&c, &(_, r))| (c - r * t).max(0.0))
            .collect();
        Self {
            state: self.state,
            clocks,
        }
    }
}

/// Time until the first clock of `gs` reaches zero, and which clock that is.
pub fn time_to_first_expiry(gs: &GeneralizedState, model: &GsmpModel) -> Result<Expiry> {
    let def = model.state(gs.state);
    let mut best: Option<(f64, usize)> = None;
    let mut second = f64::INFINITY;
    for (slot, (&c, &(_, r))) in gs.clocks.iter().zip(&def.events).enumerate() {
        let t = c / r;
        match best {
            Some((b, _)) if t >= b => second = second.min(t),
            Some((b, _)) => {
                second = b;
                best = Some((t, slot));
            }
            None => best = Some((t, slot)),
        }
    }
    let (time, slot) = best.ok_or_else(|| Error::DegenerateModel(format!("state `{}` has no clocks", def.name)))?;
    if second - time <= model.tolerances.tie {
        return Err(Error::UniquenessViolation {
            tolerance: model.tolerances.tie,
        });
    }
    Ok(Expiry {
        time,
        event: def.events[slot].0,
        slot,
    })
}

/// Lets every clock run down for `t` time units; `t` must stay before the first expiry.
pub fn advance(gs: &GeneralizedState, t: f64, model: &GsmpModel) -> Result<GeneralizedState> {
    if !(t.is_finite() && t >= 0.0) {
        return Err(Error::BadDuration(t));
    }
    let expiry = time_to_first_expiry(gs, model)?;
    if t >= expiry.time {
        return Err(Error::AdvanceBeyondExpiry {
            requested: t,
            expiry: expiry.time,
        });
    }
    Ok(gs.evolved(model, t))
}

/// One transition, with the time spent before it.
#[derive(Debug, Clone, PartialEq)]
pub struct Transition {
    pub dwell: f64,
    pub fired: EventId,
    pub next: GeneralizedState,
}

/// Runs `gs` to its first expiry and performs the resulting transition.
pub fn step<R: RngCore + ?Sized>(model: &GsmpModel, gs: &GeneralizedState, rng: &mut R) -> Result<GeneralizedState> {
    transition(model, gs, rng).map(|t| t.next)
}

pub fn transition<R: RngCore + ?Sized>(model: &GsmpModel, gs: &GeneralizedState, rng: &mut R) -> Result<Transition> {
    let expiry = time_to_first_expiry(gs, model)?;
    let at_expiry = gs.evolved(model, expiry.time);
    let source = model.state(gs.state);

    let row = model.next_row(gs.state, expiry.event).ok_or_else(|| {
        Error::DegenerateModel(format!(
            "no probability row for ({}, {})",
            source.name,
            model.event_name(expiry.event)
        ))
    })?;
    let target = pick_target(row, rng.random::<f64>()).ok_or_else(|| {
        Error::DegenerateModel(format!(
            "probability row for ({}, {}) has no mass",
            source.name,
            model.event_name(expiry.event)
        ))
    })?;
    let target_def = model.state(target);

    // Carried clocks keep their values; fresh ones are drawn in declaration order.
    let mut clocks = alloc::vec![0.0; target_def.events.len()];
    let mut fresh: Vec<(usize, &ResetDistribution)> = Vec::new();
    for (slot, &(e, _)) in target_def.events.iter().enumerate() {
        match source.slot_of(e) {
            Some(src) if e != expiry.event => clocks[slot] = at_expiry.clocks[src],
            _ => {
                let key = ResetKey {
                    state: gs.state,
                    event: expiry.event,
                    target,
                    new_event: e,
                };
                let dist = model.reset(&key).ok_or_else(|| {
                    Error::DegenerateModel(format!(
                        "missing reset for ({}, {}, {}, {})",
                        source.name,
                        model.event_name(expiry.event),
                        target_def.name,
                        model.event_name(e)
                    ))
                })?;
                fresh.push((slot, dist));
            }
        }
    }

    let mut attempts = 0;
    loop {
        for &(slot, dist) in &fresh {
            clocks[slot] = dist.sample(rng)?;
        }
        let next = GeneralizedState {
            state: target,
            clocks: clocks.clone(),
        };
        match time_to_first_expiry(&next, model) {
            Ok(_) => {
                return Ok(Transition {
                    dwell: expiry.time,
                    fired: expiry.event,
                    next,
                })
            }
            Err(Error::UniquenessViolation { .. }) => {
                attempts += 1;
                if fresh.is_empty() || attempts >= model.tolerances.reset_retries {
                    return Err(Error::DegenerateModel(format!(
                        "could not draw tie-free clocks for `{}` after {attempts} attempts",
                        target_def.name
                    )));
                }
            }
            Err(e) => return Err(e),
        }
    }
}

fn pick_target(row: &[f64], u: f64) -> Option<StateId> {
    let mut acc = 0.0;
    let mut last = None;
    for (i, &p) in row.iter().enumerate() {
        if p <= 0.0 {
            continue;
        }
        acc += p;
        last = Some(StateId(i));
        if u < acc {
            return last;
        }
    }
    last
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn two_clock() -> GsmpModel {
        GsmpModel::builder()
            .state("s", &["p"], &[("a", 1.0), ("b", 2.0)])
            .state("t", &["q"], &[("b", 2.0), ("d", 1.0)])
            .next("s", "a", &[("t", 1.0)])
            .next("s", "b", &[("s", 1.0)])
            .next("t", "b", &[("s", 1.0)])
            .next("t", "d", &[("t", 1.0)])
            .reset("s", "a", "t", "d", ResetDistribution::PointMass { value: 5.0 })
            .reset("s", "b", "s", "b", ResetDistribution::Exponential { rate: 1.0 })
            .reset("s", "b", "s", "a", ResetDistribution::Exponential { rate: 1.0 })
            .reset("t", "b", "s", "a", ResetDistribution::Exponential { rate: 1.0 })
            .reset("t", "b", "s", "b", ResetDistribution::Exponential { rate: 1.0 })
            .reset("t", "d", "t", "d", ResetDistribution::Exponential { rate: 1.0 })
            .reset("t", "d", "t", "b", ResetDistribution::Exponential { rate: 1.0 })
            .build()
            .unwrap()
    }

    fn exp_pair() -> GsmpModel {
        GsmpModel::builder()
            .state("s0", &["p"], &[("a", 1.0)])
            .state("s1", &[], &[("a", 1.0)])
            .next("s0", "a", &[("s1", 1.0)])
            .next("s1", "a", &[("s0", 1.0)])
            .reset("s0", "a", "s1", "a", ResetDistribution::Exponential { rate: 2.0 })
            .reset("s1", "a", "s0", "a", ResetDistribution::Uniform { a: 1.0, b: 2.0 })
            .build()
            .unwrap()
    }

    #[test]
    fn well_formed_model_has_empty_report() {
        let report = validate_model(&exp_pair());
        assert!(report.violations.is_empty(), "{:?}", report);
    }

    #[test]
    fn short_row_is_reported() {
        let m = GsmpModel::builder()
            .state("s0", &[], &[("a", 1.0)])
            .state("s1", &[], &[("a", 1.0)])
            .next("s0", "a", &[("s1", 0.9)])
            .next("s1", "a", &[("s0", 1.0)])
            .reset("s0", "a", "s1", "a", ResetDistribution::Exponential { rate: 1.0 })
            .reset("s1", "a", "s0", "a", ResetDistribution::Exponential { rate: 1.0 })
            .build()
            .unwrap();
        let report = validate_model(&m);
        assert!(!report.is_valid());
        let v = report.errors().next().unwrap();
        assert_eq!(v.path, "next[s0][a]");
        assert!(v.message.contains("probability row sum ≠ 1"));
    }

    #[test]
    fn zero_rate_is_reported() {
        let m = GsmpModel::builder()
            .state("s0", &[], &[("a", 0.0)])
            .next("s0", "a", &[("s0", 1.0)])
            .reset("s0", "a", "s0", "a", ResetDistribution::Exponential { rate: 1.0 })
            .build()
            .unwrap();
        let report = validate_model(&m);
        assert!(report.errors().any(|v| v.message.contains("rate must be > 0")));
    }

    #[test]
    fn point_mass_is_flagged_but_valid() {
        let m = GsmpModel::builder()
            .state("s0", &[], &[("a", 1.0)])
            .next("s0", "a", &[("s0", 1.0)])
            .reset("s0", "a", "s0", "a", ResetDistribution::PointMass { value: 1.0 })
            .build()
            .unwrap();
        let report = validate_model(&m);
        assert!(report.is_valid());
        assert_eq!(report.violations.len(), 1);
        assert!(report.violations[0].message.contains("non-conforming: testing only"));
    }

    #[test]
    fn missing_reset_and_bad_uniform_are_reported() {
        let m = GsmpModel::builder()
            .state("s0", &[], &[("a", 1.0)])
            .state("s1", &[], &[("a", 1.0), ("b", 1.0)])
            .next("s0", "a", &[("s1", 1.0)])
            .next("s1", "a", &[("s0", 1.0)])
            .next("s1", "b", &[("s0", 1.0)])
            .reset("s0", "a", "s1", "a", ResetDistribution::Uniform { a: 2.0, b: 1.0 })
            .reset("s1", "a", "s0", "a", ResetDistribution::Exponential { rate: 1.0 })
            .reset("s1", "b", "s0", "a", ResetDistribution::Exponential { rate: 1.0 })
            .build()
            .unwrap();
        let report = validate_model(&m);
        let msgs: Vec<_> = report.errors().map(|v| (v.path.as_str(), v.message.as_str())).collect();
        assert!(msgs.iter().any(|(p, m)| *p == "resets[s0][a][s1][b]" && m.contains("missing reset")));
        assert!(msgs.iter().any(|(_, m)| m.contains("a < b")));
    }

    #[test]
    fn first_expiry_examples() {
        let m = two_clock();
        let gs = GeneralizedState::from_named(&m, "s", &[("a", 2.0), ("b", 6.0)]).unwrap();
        let e = time_to_first_expiry(&gs, &m).unwrap();
        assert_eq!(e.time, 2.0);
        assert_eq!(m.event_name(e.event), "a");

        let single = GsmpModel::builder()
            .state("s", &[], &[("a", 2.5)])
            .next("s", "a", &[("s", 1.0)])
            .reset("s", "a", "s", "a", ResetDistribution::PointMass { value: 1.0 })
            .build()
            .unwrap();
        let gs = GeneralizedState::from_named(&single, "s", &[("a", 5.0)]).unwrap();
        assert_eq!(time_to_first_expiry(&gs, &single).unwrap().time, 2.0);

        let tie = GeneralizedState {
            state: StateId(0),
            clocks: alloc::vec![1.0, 2.0],
        };
        assert!(matches!(time_to_first_expiry(&tie, &m), Err(Error::UniquenessViolation { .. })));
        assert!(matches!(
            GeneralizedState::from_named(&m, "s", &[("a", 1.0), ("b", 2.0)]),
            Err(Error::UniquenessViolation { .. })
        ));
    }

    #[test]
    fn advance_examples() {
        let m = two_clock();
        let gs = GeneralizedState::from_named(&m, "s", &[("a", 2.0), ("b", 6.0)]).unwrap();
        assert_eq!(advance(&gs, 1.0, &m).unwrap().clocks, alloc::vec![1.0, 4.0]);
        assert_eq!(advance(&gs, 0.0, &m).unwrap(), gs);
        assert!(matches!(advance(&gs, 2.0, &m), Err(Error::AdvanceBeyondExpiry { .. })));
        assert!(matches!(advance(&gs, -0.5, &m), Err(Error::BadDuration(_))));
    }

    #[test]
    fn step_carries_and_resets() {
        let m = two_clock();
        // a expires at 2.0; b (rate 2) carries 6 - 4 = 2.0 ... use a = 2, b = 8 to carry 4.0.
        let gs = GeneralizedState::from_named(&m, "s", &[("a", 2.0), ("b", 8.0)]).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let next = step(&m, &gs, &mut rng).unwrap();
        assert_eq!(m.state(next.state).name, "t");
        assert_eq!(next.clocks, alloc::vec![4.0, 5.0]);
    }

    #[test]
    fn self_loop_with_point_masses() {
        let m = GsmpModel::builder()
            .state("s", &[], &[("a", 1.0), ("b", 1.0)])
            .next("s", "a", &[("s", 1.0)])
            .next("s", "b", &[("s", 1.0)])
            .reset("s", "a", "s", "a", ResetDistribution::PointMass { value: 3.0 })
            .reset("s", "b", "s", "b", ResetDistribution::PointMass { value: 1.5 })
            .reset("s", "a", "s", "b", ResetDistribution::PointMass { value: 1.5 })
            .reset("s", "b", "s", "a", ResetDistribution::PointMass { value: 3.0 })
            .build()
            .unwrap();
        // Event b is not carried when it fires; a carries 1.0 - 0.5.
        let gs = GeneralizedState::from_named(&m, "s", &[("a", 1.0), ("b", 0.5)]).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let next = step(&m, &gs, &mut rng).unwrap();
        assert_eq!(next.clocks, alloc::vec![0.5, 1.5]);
    }

    #[test]
    fn forced_tie_is_degenerate() {
        let m = GsmpModel::builder()
            .state("s", &[], &[("a", 1.0)])
            .state("t", &[], &[("b", 1.0), ("d", 2.0)])
            .next("s", "a", &[("t", 1.0)])
            .next("t", "b", &[("s", 1.0)])
            .next("t", "d", &[("s", 1.0)])
            .reset("s", "a", "t", "b", ResetDistribution::PointMass { value: 1.0 })
            .reset("s", "a", "t", "d", ResetDistribution::PointMass { value: 2.0 })
            .reset("t", "b", "s", "a", ResetDistribution::PointMass { value: 1.0 })
            .reset("t", "d", "s", "a", ResetDistribution::PointMass { value: 1.0 })
            .build()
            .unwrap();
        let gs = GeneralizedState::from_named(&m, "s", &[("a", 1.0)]).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        assert!(matches!(step(&m, &gs, &mut rng), Err(Error::DegenerateModel(_))));
    }

    #[test]
    fn step_is_reproducible() {
        let m = exp_pair();
        let gs = GeneralizedState::from_named(&m, "s0", &[("a", 0.7)]).unwrap();
        let run = |seed| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let mut cur = gs.clone();
            let mut out = Vec::new();
            for _ in 0..20 {
                cur = step(&m, &cur, &mut rng).unwrap();
                out.push(cur.clone());
            }
            out
        };
        assert_eq!(run(11), run(11));
        assert_ne!(run(11), run(12));
    }
}
