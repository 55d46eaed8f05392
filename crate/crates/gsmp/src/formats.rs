//! JSON model files, state specifications, JSONL traces and scalar traces.

use std::collections::BTreeMap;
use std::fmt;

use gsmp_core::scalar::{Interpolation, ScalarTrace};
use gsmp_core::{GeneralizedState, GsmpModel, ModelBuilder, ResetDistribution, Segment, TimedTrace, Tolerances};
use serde::{Deserialize, Serialize};

/// A load or parse failure, with a location when one is known.
#[derive(Debug, Clone, PartialEq)]
pub struct FormatError {
    pub source: String,
    pub line: Option<usize>,
    pub column: Option<usize>,
    pub message: String,
}

impl FormatError {
    pub fn new(source: &str, message: impl Into<String>) -> Self {
        Self {
            source: source.into(),
            line: None,
            column: None,
            message: message.into(),
        }
    }

    pub fn at(source: &str, line: usize, column: usize, message: impl Into<String>) -> Self {
        Self {
            source: source.into(),
            line: Some(line),
            column: Some(column),
            message: message.into(),
        }
    }

    fn json(source: &str, e: &serde_json::Error) -> Self {
        let msg = e.to_string();
        // serde_json appends " at line L column C"; keep only the description.
        let msg = msg.split(" at line ").next().unwrap_or(&msg).to_string();
        Self::at(source, e.line(), e.column(), msg)
    }
}

impl fmt::Display for FormatError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match (self.line, self.column) {
            (Some(l), Some(c)) => write!(f, "{}:{l}:{c}: {}", self.source, self.message),
            _ => write!(f, "{}: {}", self.source, self.message),
        }
    }
}

impl std::error::Error for FormatError {}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum DistributionFile {
    Exponential { rate: f64 },
    Uniform { a: f64, b: f64 },
    Weibull { shape: f64, scale: f64 },
    PointMass { value: f64 },
}

impl From<DistributionFile> for ResetDistribution {
    fn from(d: DistributionFile) -> Self {
        match d {
            DistributionFile::Exponential { rate } => ResetDistribution::Exponential { rate },
            DistributionFile::Uniform { a, b } => ResetDistribution::Uniform { a, b },
            DistributionFile::Weibull { shape, scale } => ResetDistribution::Weibull { shape, scale },
            DistributionFile::PointMass { value } => ResetDistribution::PointMass { value },
        }
    }
}

impl From<ResetDistribution> for DistributionFile {
    fn from(d: ResetDistribution) -> Self {
        match d {
            ResetDistribution::Exponential { rate } => DistributionFile::Exponential { rate },
            ResetDistribution::Uniform { a, b } => DistributionFile::Uniform { a, b },
            ResetDistribution::Weibull { shape, scale } => DistributionFile::Weibull { shape, scale },
            ResetDistribution::PointMass { value } => DistributionFile::PointMass { value },
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StateFile {
    pub id: String,
    #[serde(default)]
    pub props: Vec<String>,
    /// Clock layout of the state, in order.
    #[serde(default)]
    pub events: Vec<String>,
    pub rates: BTreeMap<String, f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NextFile {
    pub state: String,
    pub event: String,
    pub row: BTreeMap<String, f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ResetFile {
    pub state: String,
    pub event: String,
    pub target: String,
    pub new_event: String,
    pub dist: DistributionFile,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TolerancesFile {
    pub mass: Option<f64>,
    pub tie: Option<f64>,
    pub reset_retries: Option<u32>,
    pub zeno_guard: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelFile {
    pub states: Vec<StateFile>,
    #[serde(default)]
    pub next: Vec<NextFile>,
    #[serde(default)]
    pub resets: Vec<ResetFile>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tolerances: Option<TolerancesFile>,
}

impl ModelFile {
    pub fn build(&self) -> gsmp_core::Result<GsmpModel> {
        let mut b = ModelBuilder::default();
        for s in &self.states {
            // `events` fixes the clock order; events only listed under `rates` follow in name order.
            let mut order: Vec<String> = s.events.clone();
            order.extend(s.rates.keys().filter(|e| !s.events.contains(e)).cloned());
            let mut evs = Vec::with_capacity(order.len());
            for e in order {
                let rate = *s
                    .rates
                    .get(&e)
                    .ok_or_else(|| gsmp_core::Error::InvalidParameter(format!("state `{}` has no rate for `{e}`", s.id)))?;
                evs.push((e, rate));
            }
            b.add_state(s.id.clone(), s.props.clone(), evs);
        }
        for n in &self.next {
            b.add_next(n.state.clone(), n.event.clone(), n.row.iter().map(|(k, v)| (k.clone(), *v)).collect());
        }
        for r in &self.resets {
            b.add_reset(r.state.clone(), r.event.clone(), r.target.clone(), r.new_event.clone(), r.dist.clone().into());
        }
        let mut tol = Tolerances::default();
        if let Some(t) = &self.tolerances {
            tol.mass = t.mass.unwrap_or(tol.mass);
            tol.tie = t.tie.unwrap_or(tol.tie);
            tol.reset_retries = t.reset_retries.unwrap_or(tol.reset_retries);
            tol.zeno_guard = t.zeno_guard.unwrap_or(tol.zeno_guard);
        }
        b.tolerances(tol).build()
    }

    pub fn from_model(model: &GsmpModel) -> Self {
        let name = |s: gsmp_core::StateId| model.state(s).name.clone();
        let states = model
            .states()
            .iter()
            .map(|s| StateFile {
                id: s.name.clone(),
                props: s.props.clone(),
                events: s.events.iter().map(|&(e, _)| model.event_name(e).to_string()).collect(),
                rates: s.events.iter().map(|&(e, r)| (model.event_name(e).to_string(), r)).collect(),
            })
            .collect();
        let next = model
            .next_rows()
            .map(|(&(s, e), row)| NextFile {
                state: name(s),
                event: model.event_name(e).into(),
                row: row
                    .iter()
                    .enumerate()
                    .filter(|&(_, &p)| p != 0.0)
                    .map(|(t, &p)| (model.states()[t].name.clone(), p))
                    .collect(),
            })
            .collect();
        let resets = model
            .resets()
            .map(|(k, d)| ResetFile {
                state: name(k.state),
                event: model.event_name(k.event).into(),
                target: name(k.target),
                new_event: model.event_name(k.new_event).into(),
                dist: (*d).into(),
            })
            .collect();
        Self {
            states,
            next,
            resets,
            tolerances: None,
        }
    }
}

pub fn parse_model(source: &str, text: &str) -> Result<GsmpModel, FormatError> {
    let file: ModelFile = serde_json::from_str(text).map_err(|e| FormatError::json(source, &e))?;
    file.build().map_err(|e| FormatError::new(source, e.to_string()))
}

pub fn load_model(path: &str) -> Result<GsmpModel, FormatError> {
    parse_model(path, &read(path)?)
}

pub fn read(path: &str) -> Result<String, FormatError> {
    std::fs::read_to_string(path).map_err(|e| FormatError::new(path, e.to_string()))
}

/// `{"state": "s", "clocks": {"a": 1.0}}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StateSpec {
    pub state: String,
    #[serde(default)]
    pub clocks: BTreeMap<String, f64>,
}

impl StateSpec {
    /// Compact form `NAME` or `NAME:EVENT=VALUE,EVENT=VALUE`.
    pub fn parse(text: &str) -> Result<Self, FormatError> {
        let bad = |m: String| FormatError::new("state", m);
        let (state, rest) = match text.split_once(':') {
            Some((s, r)) => (s, r),
            None => (text, ""),
        };
        if state.is_empty() {
            return Err(bad(format!("`{text}` has no state name")));
        }
        let mut clocks = BTreeMap::new();
        for part in rest.split(',').filter(|p| !p.is_empty()) {
            let (e, v) = part
                .split_once('=')
                .ok_or_else(|| bad(format!("expected EVENT=VALUE, got `{part}`")))?;
            let v: f64 = v.trim().parse().map_err(|_| bad(format!("`{v}` is not a number")))?;
            clocks.insert(e.trim().to_string(), v);
        }
        Ok(Self {
            state: state.trim().into(),
            clocks,
        })
    }

    pub fn resolve(&self, model: &GsmpModel) -> gsmp_core::Result<GeneralizedState> {
        let clocks: Vec<(&str, f64)> = self.clocks.iter().map(|(k, v)| (k.as_str(), *v)).collect();
        GeneralizedState::from_named(model, &self.state, &clocks)
    }

    pub fn of(model: &GsmpModel, gs: &GeneralizedState) -> Self {
        let def = model.state(gs.state);
        Self {
            state: def.name.clone(),
            clocks: def
                .events
                .iter()
                .zip(&gs.clocks)
                .map(|(&(e, _), &c)| (model.event_name(e).to_string(), c))
                .collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PairSpec {
    pub a: StateSpec,
    pub b: StateSpec,
}

pub fn parse_pairs(source: &str, text: &str) -> Result<Vec<PairSpec>, FormatError> {
    serde_json::from_str(text).map_err(|e| FormatError::json(source, &e))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SegmentFile {
    pub state: String,
    pub clocks: BTreeMap<String, f64>,
    pub dwell: f64,
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    pub frozen: bool,
}

/// One JSONL line.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TraceFile {
    pub horizon: f64,
    pub segments: Vec<SegmentFile>,
}

impl TraceFile {
    pub fn of(model: &GsmpModel, trace: &TimedTrace) -> Self {
        let segments = trace
            .segments()
            .iter()
            .map(|s: &Segment| {
                let spec = StateSpec::of(model, &s.start);
                SegmentFile {
                    state: spec.state,
                    clocks: spec.clocks,
                    dwell: s.dwell,
                    frozen: s.frozen,
                }
            })
            .collect();
        Self {
            horizon: trace.horizon(),
            segments,
        }
    }

    pub fn resolve(&self, model: &GsmpModel) -> gsmp_core::Result<TimedTrace> {
        let mut parts = Vec::with_capacity(self.segments.len());
        for s in &self.segments {
            let spec = StateSpec {
                state: s.state.clone(),
                clocks: s.clocks.clone(),
            };
            parts.push((spec.resolve(model)?, s.dwell));
        }
        let total: f64 = self.segments.iter().map(|s| s.dwell).sum();
        let mut trace = TimedTrace::from_segments(model, parts)?;
        if self.horizon < total {
            trace = trace.truncated(self.horizon)?;
        }
        Ok(trace)
    }
}

/// Reads a JSONL trace file. Lines holding a `params` header and blank lines are skipped.
pub fn parse_traces(source: &str, text: &str) -> Result<Vec<TraceFile>, FormatError> {
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let value: serde_json::Value = serde_json::from_str(line)
            .map_err(|e| FormatError::at(source, i + 1, e.column(), e.to_string()))?;
        if value.get("params").is_some() {
            continue;
        }
        let t: TraceFile = serde_json::from_value(value).map_err(|e| FormatError::at(source, i + 1, 1, e.to_string()))?;
        out.push(t);
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InterpolationFile {
    Step,
    Linear,
}

/// `{"kind": "step", "horizon": 1.0, "breakpoints": [[0, 0], [0.4, 1]]}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScalarFile {
    pub kind: InterpolationFile,
    pub horizon: f64,
    pub breakpoints: Vec<(f64, f64)>,
}

impl ScalarFile {
    pub fn build(&self) -> gsmp_core::Result<ScalarTrace> {
        let kind = match self.kind {
            InterpolationFile::Step => Interpolation::Step,
            InterpolationFile::Linear => Interpolation::Linear,
        };
        ScalarTrace::new(kind, self.breakpoints.clone(), self.horizon)
    }
}

pub fn parse_scalar(source: &str, text: &str) -> Result<ScalarTrace, FormatError> {
    let f: ScalarFile = serde_json::from_str(text).map_err(|e| FormatError::json(source, &e))?;
    f.build().map_err(|e| FormatError::new(source, e.to_string()))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn state_spec_compact_form() {
        let s = StateSpec::parse("s:a=1.5,b=2").unwrap();
        assert_eq!(s.state, "s");
        assert_eq!(s.clocks["a"], 1.5);
        assert_eq!(s.clocks["b"], 2.0);
        assert!(StateSpec::parse("s:a").is_err());
        assert!(StateSpec::parse(":a=1").is_err());
        assert_eq!(StateSpec::parse("t").unwrap().clocks.len(), 0);
    }

    #[test]
    fn json_errors_carry_position() {
        let e = parse_model("m.json", "{\n  \"states\": [\n    {\"id\": 3}\n  ]\n}").unwrap_err();
        assert_eq!(e.line, Some(3));
        assert!(e.column.is_some());
        assert!(e.to_string().starts_with("m.json:3:"));
    }

    #[test]
    fn unknown_distribution_kind_is_rejected() {
        let text = r#"{"states": [{"id": "s", "rates": {"a": 1}}],
            "resets": [{"state": "s", "event": "a", "target": "s", "new_event": "a", "dist": {"kind": "gamma", "k": 1}}]}"#;
        assert!(parse_model("m", text).is_err());
    }
}
