//! The `gsmp` command line.

use std::ffi::OsString;
use std::fmt::Write as _;
use std::io::Write;

use clap::{Args, Parser, Subcommand};
use gsmp_core::fixpoint::{Budget, Estimator, FixpointParams};
use gsmp_core::j2::{j2_scalar, j2_traces, PropMetric};
use gsmp_core::logic::{dk_estimate, FamilyConfig, Logic};
use gsmp_core::observables::{
    continuity_report, expected_observable, Observable, ObservableParams, RewardFunctional, RewardSpec, Verdict,
};
use gsmp_core::{sample_trace, validate_model, GsmpModel, Severity};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use serde_json::{json, Value};

use crate::exec::Pool;
use crate::expr::parse_exprs;
use crate::formats::{load_model, parse_pairs, parse_scalar, parse_traces, read, StateSpec, TraceFile};

#[derive(Debug, Parser)]
#[command(name = "gsmp", version, about = "Behavioral distances between states of generalized semi-Markov processes")]
pub struct Cli {
    #[command(flatten)]
    pub run: RunArgs,
    #[command(subcommand)]
    pub command: Command,
}

/// Parameters shared by every command.
#[derive(Debug, Clone, Args, Serialize)]
pub struct RunArgs {
    /// Discount factor, 0 < k <= 1/2.
    #[arg(long, global = true, default_value_t = 0.5)]
    pub k: f64,
    /// Iteration depth n of the metric estimate.
    #[arg(long, global = true, default_value_t = 3)]
    pub depth: usize,
    /// Sampled traces per state (top level).
    #[arg(long = "samples", short = 'N', global = true, default_value_t = 200)]
    pub samples: usize,
    /// Sampled traces per state below the top level.
    #[arg(long, global = true, default_value_t = 32)]
    pub inner_samples: usize,
    /// Graph sampling grid.
    #[arg(long, global = true, default_value_t = 0.01)]
    pub grid: f64,
    /// Trace horizon T.
    #[arg(long, short = 'T', global = true, default_value_t = 10.0)]
    pub horizon: f64,
    #[arg(long, global = true, env = "GSMP_SEED", default_value_t = 0)]
    pub seed: u64,
    /// Maximum number of pair evaluations in a metric estimate.
    #[arg(long, global = true, default_value_t = 20_000_000)]
    pub work_limit: u64,
    /// Bootstrap replicates for confidence intervals (0 disables).
    #[arg(long, global = true, default_value_t = 100)]
    pub bootstrap: usize,
    #[arg(long, global = true, default_value_t = 0.95)]
    pub confidence: f64,
    /// Per-level growth of grid and snapping quantum below the top level.
    #[arg(long, global = true, default_value_t = 2.0)]
    pub coarsening: f64,
    /// Re-estimate at twice the horizon and report the change.
    #[arg(long, global = true)]
    pub horizon_check: bool,
    /// Worker threads (0 = one per core).
    #[arg(long, short = 'j', global = true, env = "GSMP_JOBS", default_value_t = 0)]
    #[serde(skip)]
    pub jobs: usize,
    /// Write the result here instead of standard output.
    #[arg(long, short = 'o', global = true)]
    #[serde(skip)]
    pub out: Option<String>,
}

impl RunArgs {
    pub fn check(&self) -> Result<(), String> {
        if !(self.k > 0.0 && self.k <= 0.5) {
            return Err(format!("--k must lie in (0, 1/2] (got {})", self.k));
        }
        if self.samples == 0 {
            return Err("--samples must be >= 1".into());
        }
        if !(self.grid.is_finite() && self.grid > 0.0) {
            return Err("--grid must be > 0".into());
        }
        if !(self.horizon.is_finite() && self.horizon > 0.0) {
            return Err("--horizon must be > 0".into());
        }
        Ok(())
    }

    pub fn fixpoint(&self) -> FixpointParams {
        FixpointParams {
            k: self.k,
            depth: self.depth,
            samples: self.samples,
            inner_samples: self.inner_samples,
            grid: self.grid,
            horizon: self.horizon,
            seed: self.seed,
            coarsening: self.coarsening,
            bootstrap: self.bootstrap,
            confidence: self.confidence,
            horizon_check: self.horizon_check,
            work_limit: self.work_limit,
        }
    }
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Check a model file; exit 1 when it has errors.
    Validate { model: String },
    /// Sample traces from a state as JSON lines.
    Simulate {
        model: String,
        /// NAME or NAME:EVENT=VALUE,...
        #[arg(long)]
        state: String,
    },
    /// Estimate the distance between two states.
    Distance {
        model: String,
        #[arg(long)]
        a: String,
        #[arg(long)]
        b: String,
    },
    /// J2 distance between two scalar traces, or two model traces with --model.
    J2 {
        first: String,
        second: String,
        /// Read JSONL traces of this model instead of scalar traces.
        #[arg(long)]
        model: Option<String>,
        /// Line index of the trace used from each JSONL file.
        #[arg(long, default_value_t = 0)]
        index: usize,
    },
    /// Evaluate function expressions at a state, or at two states.
    Logic {
        model: String,
        #[arg(long)]
        expr: String,
        #[arg(long)]
        a: String,
        #[arg(long)]
        b: Option<String>,
    },
    /// Search for an expression separating two states (lower bound on d_k).
    Dk {
        model: String,
        #[arg(long)]
        a: String,
        #[arg(long)]
        b: String,
        #[arg(long, default_value_t = 64)]
        expressions: usize,
        #[arg(long, default_value_t = 4)]
        max_depth: usize,
        #[arg(long, default_value_t = 2)]
        max_integrals: usize,
        #[arg(long, default_value_t = 16)]
        local_steps: usize,
    },
    /// Monte-Carlo expectation of an observable.
    Observables {
        model: String,
        #[arg(long)]
        state: String,
        #[command(flatten)]
        observable: ObservableArgs,
    },
    /// Compare distance estimates with changes in an observable, as CSV.
    Continuity {
        model: String,
        /// JSON list of {"a": STATE, "b": STATE}.
        #[arg(long)]
        pairs: String,
        #[command(flatten)]
        observable: ObservableArgs,
        /// Traces per state for the observable expectations.
        #[arg(long, default_value_t = 1000)]
        obs_samples: usize,
    },
}

#[derive(Debug, Clone, Args)]
pub struct ObservableArgs {
    /// hit:PROP, cumr:T, avg:T, cumr-below:V or avg-below:V.
    #[arg(long)]
    pub observable: String,
    /// Reward rate of a state, NAME=RATE (repeatable).
    #[arg(long = "reward")]
    pub rewards: Vec<String>,
    /// JSON object mapping state names to reward rates.
    #[arg(long)]
    pub rewards_file: Option<String>,
}

impl ObservableArgs {
    fn build(&self, model: &GsmpModel) -> Result<Observable, String> {
        let (kind, arg) = self
            .observable
            .split_once(':')
            .ok_or_else(|| format!("observable `{}` must look like KIND:ARG", self.observable))?;
        if kind == "hit" {
            return Ok(Observable::HittingTime(arg.into()));
        }
        let x: f64 = arg.parse().map_err(|_| format!("`{arg}` is not a number"))?;
        let f = match kind {
            "cumr" => RewardFunctional::Cumulative(x),
            "avg" => RewardFunctional::Average(x),
            "cumr-below" => RewardFunctional::CumulativeBelow(x),
            "avg-below" => RewardFunctional::AverageBelow(x),
            other => return Err(format!("unknown observable kind `{other}`")),
        };
        let mut rates: Vec<(String, f64)> = Vec::new();
        if let Some(path) = &self.rewards_file {
            let text = read(path).map_err(|e| e.to_string())?;
            let map: std::collections::BTreeMap<String, f64> =
                serde_json::from_str(&text).map_err(|e| format!("{path}:{}:{}: {e}", e.line(), e.column()))?;
            rates.extend(map);
        }
        for r in &self.rewards {
            let (name, v) = r.split_once('=').ok_or_else(|| format!("expected NAME=RATE, got `{r}`"))?;
            rates.push((name.into(), v.parse().map_err(|_| format!("`{v}` is not a number"))?));
        }
        let named: Vec<(&str, f64)> = rates.iter().map(|(n, v)| (n.as_str(), *v)).collect();
        Ok(Observable::Reward(RewardSpec::from_named(model, &named).map_err(|e| e.to_string())?, f))
    }
}

/// Failure of a command: exit code 1 for validation failures, 2 otherwise.
#[derive(Debug)]
pub struct Failure {
    pub code: i32,
    pub message: String,
}

impl<E: std::fmt::Display> From<E> for Failure {
    fn from(e: E) -> Self {
        Self {
            code: 2,
            message: e.to_string(),
        }
    }
}

fn budget_json(b: &Budget) -> Value {
    json!({
        "depth_term": b.depth_term,
        "sampling_term": b.sampling_term,
        "grid_term": b.grid_term,
        "horizon_term": b.horizon_term,
        "total": b.total(),
    })
}

fn pretty(v: &Value) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("JSON values always serialize");
    s.push('\n');
    s
}

fn state(model: &GsmpModel, spec: &str) -> Result<(StateSpec, gsmp_core::GeneralizedState), Failure> {
    let s = StateSpec::parse(spec)?;
    let gs = s.resolve(model)?;
    Ok((StateSpec::of(model, &gs), gs))
}

/// Runs one command and returns its output text.
pub fn execute(cli: &Cli) -> Result<(String, i32), Failure> {
    let run = &cli.run;
    run.check()?;
    let params = serde_json::to_value(run)?;
    let pool = Pool::new(run.jobs)?;
    match &cli.command {
        Command::Validate { model } => {
            let m = load_model(model)?;
            let report = validate_model(&m);
            let violations: Vec<Value> = report
                .violations
                .iter()
                .map(|v| {
                    json!({
                        "severity": match v.severity { Severity::Error => "error", Severity::Warning => "warning" },
                        "path": v.path,
                        "message": v.message,
                    })
                })
                .collect();
            let valid = report.is_valid();
            let out = pretty(&json!({ "params": params, "model": model, "valid": valid, "violations": violations }));
            Ok((out, if valid { 0 } else { 1 }))
        }
        Command::Simulate { model, state: spec } => {
            let m = load_model(model)?;
            let (spec, gs) = state(&m, spec)?;
            let traces = gsmp_core::exec::Executor::map(&pool, run.samples, |i| {
                let mut rng = ChaCha8Rng::seed_from_u64(run.seed);
                rng.set_stream(i as u64);
                sample_trace(&m, &gs, run.horizon, &mut rng)
            });
            let mut out = serde_json::to_string(&json!({ "params": params, "state": spec }))?;
            out.push('\n');
            for t in traces {
                out.push_str(&serde_json::to_string(&TraceFile::of(&m, &t?))?);
                out.push('\n');
            }
            Ok((out, 0))
        }
        Command::Distance { model, a, b } => {
            let m = load_model(model)?;
            let (sa, ga) = state(&m, a)?;
            let (sb, gb) = state(&m, b)?;
            let est = Estimator::new(&m, run.fixpoint(), &pool)?.estimate(&ga, &gb)?;
            Ok((
                pretty(&json!({
                    "params": params,
                    "a": sa,
                    "b": sb,
                    "value": est.value,
                    "depth": est.depth,
                    "budget": budget_json(&est.budget),
                })),
                0,
            ))
        }
        Command::J2 {
            first,
            second,
            model,
            index,
        } => {
            let v = match model {
                None => {
                    let f = parse_scalar(first, &read(first)?)?;
                    let g = parse_scalar(second, &read(second)?)?;
                    j2_scalar(&f, &g, run.grid)?
                }
                Some(path) => {
                    let m = load_model(path)?;
                    let pick = |file: &str| -> Result<gsmp_core::TimedTrace, Failure> {
                        let all = parse_traces(file, &read(file)?)?;
                        let t = all
                            .get(*index)
                            .ok_or_else(|| format!("{file} holds {} traces; index {index} is out of range", all.len()))?;
                        Ok(t.resolve(&m)?)
                    };
                    j2_traces(&m, &pick(first)?, &pick(second)?, &PropMetric(&m), run.grid)?
                }
            };
            Ok((
                pretty(&json!({
                    "params": params,
                    "first": first,
                    "second": second,
                    "value": v.value,
                    "grid_error_bound": v.grid_error_bound,
                })),
                0,
            ))
        }
        Command::Logic { model, expr, a, b } => {
            let m = load_model(model)?;
            let exprs = parse_exprs(expr, &read(expr)?)?;
            let (sa, ga) = state(&m, a)?;
            let second = b.as_deref().map(|b| state(&m, b)).transpose()?;
            let logic = Logic::new(&m, run.fixpoint(), &pool)?;
            let mut results = Vec::with_capacity(exprs.len());
            for e in &exprs {
                let va = logic.eval_f(e, &ga)?;
                let mut r = json!({ "expr": e.to_string(), "value": va, "grid_error": logic.grid_error(e) });
                if let Some((_, gb)) = &second {
                    let vb = logic.eval_f(e, gb)?;
                    r["value_b"] = json!(vb);
                    r["difference"] = json!((va - vb).abs());
                }
                results.push(r);
            }
            let mut out = json!({ "params": params, "a": sa, "results": results });
            if let Some((sb, _)) = second {
                out["b"] = serde_json::to_value(sb)?;
            }
            Ok((pretty(&out), 0))
        }
        Command::Dk {
            model,
            a,
            b,
            expressions,
            max_depth,
            max_integrals,
            local_steps,
        } => {
            let m = load_model(model)?;
            let (sa, ga) = state(&m, a)?;
            let (sb, gb) = state(&m, b)?;
            let family = FamilyConfig {
                expressions: *expressions,
                max_depth: *max_depth,
                max_integrals: *max_integrals,
                local_steps: *local_steps,
                seed: run.seed,
            };
            let d = dk_estimate(&m, &ga, &gb, &family, &run.fixpoint(), &pool)?;
            Ok((
                pretty(&json!({
                    "params": params,
                    "a": sa,
                    "b": sb,
                    "value": d.value,
                    "expr": d.best.to_string(),
                    "evaluated": d.evaluated,
                })),
                0,
            ))
        }
        Command::Observables {
            model,
            state: spec,
            observable,
        } => {
            let m = load_model(model)?;
            let (s, gs) = state(&m, spec)?;
            let obs = observable.build(&m)?;
            let op = ObservableParams {
                samples: run.samples,
                horizon: run.horizon,
                seed: run.seed,
                bootstrap: run.bootstrap,
                confidence: run.confidence,
            };
            let e = expected_observable(&m, &gs, &obs, &op, &pool)?;
            Ok((
                pretty(&json!({
                    "params": params,
                    "state": s,
                    "observable": observable.observable,
                    "mean": e.mean,
                    "ci": e.ci.map(|c| [c.lo, c.hi]),
                    "samples": e.samples,
                    "hits": e.hits,
                    "miss_fraction": e.miss_fraction,
                })),
                0,
            ))
        }
        Command::Continuity {
            model,
            pairs,
            observable,
            obs_samples,
        } => {
            let m = load_model(model)?;
            let specs = parse_pairs(pairs, &read(pairs)?)?;
            let mut resolved = Vec::with_capacity(specs.len());
            for p in &specs {
                resolved.push((p.a.resolve(&m)?, p.b.resolve(&m)?));
            }
            let obs = observable.build(&m)?;
            let op = ObservableParams {
                samples: *obs_samples,
                horizon: run.horizon,
                seed: run.seed,
                bootstrap: run.bootstrap,
                confidence: run.confidence,
            };
            let rows = continuity_report(&m, &resolved, &obs, &run.fixpoint(), &op, &pool)?;
            let mut out = String::new();
            writeln!(out, "# params: {}", serde_json::to_string(&params)?)?;
            writeln!(
                out,
                "pair,epsilon,depth_term,sampling_term,grid_term,horizon_term,observable,delta,tolerance,bound,certified,verdict"
            )?;
            for r in rows {
                let verdict = match r.verdict {
                    Verdict::Pass => "pass",
                    Verdict::Fail => "fail",
                    Verdict::Uninformative => "uninformative",
                };
                writeln!(
                    out,
                    "{},{},{},{},{},{},{},{},{},{},{},{}",
                    r.pair,
                    r.epsilon,
                    r.budget.depth_term,
                    r.budget.sampling_term,
                    r.budget.grid_term,
                    r.budget.horizon_term.map_or(String::new(), |h| h.to_string()),
                    observable.observable,
                    r.delta,
                    r.tolerance,
                    r.bound,
                    r.certified,
                    verdict
                )?;
            }
            Ok((out, 0))
        }
    }
}

/// Parses arguments, runs, writes output; returns the process exit code.
pub fn main_with<I, T>(args: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let text = e.render().to_string();
            let _ = if code == 0 { stdout.write_all(text.as_bytes()) } else { stderr.write_all(text.as_bytes()) };
            return code;
        }
    };
    match execute(&cli) {
        Ok((text, code)) => {
            let written = match &cli.run.out {
                Some(path) => std::fs::write(path, &text),
                None => stdout.write_all(text.as_bytes()),
            };
            if let Err(e) = written {
                let _ = writeln!(stderr, "error: {e}");
                return 2;
            }
            code
        }
        Err(f) => {
            let _ = writeln!(stderr, "error: {}", f.message);
            f.code
        }
    }
}
