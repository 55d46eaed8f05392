//! Function expressions: real-valued tests on generalized states (`FExpr`)
//! and on traces (`GExpr`), their evaluation, and a search for expressions
//! that separate two states.

use alloc::boxed::Box;
use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::exec::Executor;
use crate::fixpoint::FixpointParams;
use crate::j2::{scalar_graph, trace_graph};
use crate::model::{GeneralizedState, GsmpModel};
use crate::scalar::ScalarTrace;
use crate::trace::{sample_trace, TimedTrace};

/// `h(x) = min(1, max(0, a·x + b))`.
pub fn affine_clamp(a: f64, b: f64, x: f64) -> f64 {
    (a * x + b).clamp(0.0, 1.0)
}

#[derive(Debug, Clone, PartialEq)]
pub enum FExpr {
    One,
    Prop(String),
    Min(Box<FExpr>, Box<FExpr>),
    Clamp(f64, f64, Box<FExpr>),
    Integral(Box<GExpr>),
}

#[derive(Debug, Clone, PartialEq)]
pub enum GExpr {
    /// `sup_{t'} F(f(t')) − |t' − t|`.
    L(Box<FExpr>, f64),
    Min(Box<GExpr>, Box<GExpr>),
    Clamp(f64, f64, Box<GExpr>),
}

fn check_clamp(a: f64, b: f64) -> Result<()> {
    if !(a.is_finite() && b.is_finite()) {
        return Err(Error::InvalidExpression(format!("clamp parameters must be finite (got {a}, {b})")));
    }
    if a.abs() > 1.0 {
        return Err(Error::InvalidExpression(format!("clamp slope {a} has |a| > 1")));
    }
    Ok(())
}

impl FExpr {
    pub fn prop(p: &str) -> Self {
        FExpr::Prop(p.into())
    }

    pub fn min(self, other: FExpr) -> Self {
        FExpr::Min(Box::new(self), Box::new(other))
    }

    pub fn clamp(self, a: f64, b: f64) -> Self {
        FExpr::Clamp(a, b, Box::new(self))
    }

    pub fn integral(g: GExpr) -> Self {
        FExpr::Integral(Box::new(g))
    }

    /// `1 − x`.
    pub fn not(self) -> Self {
        self.clamp(-1.0, 1.0)
    }

    /// `max(0, x − q)`.
    pub fn above(self, q: f64) -> Self {
        self.clamp(1.0, -q)
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            FExpr::One | FExpr::Prop(_) => Ok(()),
            FExpr::Min(x, y) => {
                x.validate()?;
                y.validate()
            }
            FExpr::Clamp(a, b, x) => {
                check_clamp(*a, *b)?;
                x.validate()
            }
            FExpr::Integral(g) => g.validate(),
        }
    }

    pub fn max_time(&self) -> f64 {
        match self {
            FExpr::One | FExpr::Prop(_) => 0.0,
            FExpr::Min(x, y) => x.max_time().max(y.max_time()),
            FExpr::Clamp(_, _, x) => x.max_time(),
            FExpr::Integral(g) => g.max_time(),
        }
    }

    /// Deepest nesting of integrals.
    pub fn integral_depth(&self) -> usize {
        match self {
            FExpr::One | FExpr::Prop(_) => 0,
            FExpr::Min(x, y) => x.integral_depth().max(y.integral_depth()),
            FExpr::Clamp(_, _, x) => x.integral_depth(),
            FExpr::Integral(g) => 1 + g.integral_depth(),
        }
    }

    pub fn size(&self) -> usize {
        match self {
            FExpr::One | FExpr::Prop(_) => 1,
            FExpr::Min(x, y) => 1 + x.size() + y.size(),
            FExpr::Clamp(_, _, x) => 1 + x.size(),
            FExpr::Integral(g) => 1 + g.size(),
        }
    }

    /// Value at a state without integrals, or `None` if one occurs.
    fn local(&self, model: &GsmpModel, gs: &GeneralizedState) -> Option<f64> {
        Some(match self {
            FExpr::One => 1.0,
            FExpr::Prop(p) => f64::from(u8::from(model.state(gs.state).has_prop(p))),
            FExpr::Min(x, y) => x.local(model, gs)?.min(y.local(model, gs)?),
            FExpr::Clamp(a, b, x) => affine_clamp(*a, *b, x.local(model, gs)?),
            FExpr::Integral(_) => return None,
        })
    }

    /// Reads the expression as a test on a number: every proposition is the number itself.
    pub fn eval_scalar(&self, x: f64) -> Result<f64> {
        Ok(match self {
            FExpr::One => 1.0,
            FExpr::Prop(_) => x,
            FExpr::Min(p, q) => p.eval_scalar(x)?.min(q.eval_scalar(x)?),
            FExpr::Clamp(a, b, p) => affine_clamp(*a, *b, p.eval_scalar(x)?),
            FExpr::Integral(_) => {
                return Err(Error::InvalidExpression("integrals have no scalar reading".into()));
            }
        })
    }
}

impl GExpr {
    pub fn l(f: FExpr, t: f64) -> Self {
        GExpr::L(Box::new(f), t)
    }

    pub fn min(self, other: GExpr) -> Self {
        GExpr::Min(Box::new(self), Box::new(other))
    }

    pub fn clamp(self, a: f64, b: f64) -> Self {
        GExpr::Clamp(a, b, Box::new(self))
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            GExpr::L(f, t) => {
                if !(t.is_finite() && *t >= 0.0) {
                    return Err(Error::InvalidExpression(format!("time {t} must be finite and >= 0")));
                }
                f.validate()
            }
            GExpr::Min(x, y) => {
                x.validate()?;
                y.validate()
            }
            GExpr::Clamp(a, b, x) => {
                check_clamp(*a, *b)?;
                x.validate()
            }
        }
    }

    pub fn max_time(&self) -> f64 {
        match self {
            GExpr::L(f, t) => t.max(f.max_time()),
            GExpr::Min(x, y) => x.max_time().max(y.max_time()),
            GExpr::Clamp(_, _, x) => x.max_time(),
        }
    }

    pub fn integral_depth(&self) -> usize {
        match self {
            GExpr::L(f, _) => f.integral_depth(),
            GExpr::Min(x, y) => x.integral_depth().max(y.integral_depth()),
            GExpr::Clamp(_, _, x) => x.integral_depth(),
        }
    }

    pub fn size(&self) -> usize {
        match self {
            GExpr::L(f, _) => 1 + f.size(),
            GExpr::Min(x, y) => 1 + x.size() + y.size(),
            GExpr::Clamp(_, _, x) => 1 + x.size(),
        }
    }
}

struct Num(f64);

impl fmt::Display for Num {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0 == libm::trunc(self.0) && self.0.abs() < 1e15 {
            write!(f, "{}", self.0 as i64)
        } else {
            write!(f, "{}", self.0)
        }
    }
}

fn quoted(f: &mut fmt::Formatter<'_>, s: &str) -> fmt::Result {
    f.write_str("\"")?;
    for c in s.chars() {
        if c == '"' || c == '\\' {
            f.write_str("\\")?;
        }
        write!(f, "{c}")?;
    }
    f.write_str("\"")
}

/// S-expression syntax: `one`, `(prop "p")`, `(min A B)`, `(clamp a b A)`,
/// `(int G)`, `(L F t)`.
impl fmt::Display for FExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            FExpr::One => f.write_str("one"),
            FExpr::Prop(p) => {
                f.write_str("(prop ")?;
                quoted(f, p)?;
                f.write_str(")")
            }
            FExpr::Min(x, y) => write!(f, "(min {x} {y})"),
            FExpr::Clamp(a, b, x) => write!(f, "(clamp {} {} {x})", Num(*a), Num(*b)),
            FExpr::Integral(g) => write!(f, "(int {g})"),
        }
    }
}

impl fmt::Display for GExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            GExpr::L(x, t) => write!(f, "(L {x} {})", Num(*t)),
            GExpr::Min(x, y) => write!(f, "(min {x} {y})"),
            GExpr::Clamp(a, b, x) => write!(f, "(clamp {} {} {x})", Num(*a), Num(*b)),
        }
    }
}

/// Distance from `t` to the interval `[lo, hi]`.
fn gap(t: f64, lo: f64, hi: f64) -> f64 {
    (lo - t).max(t - hi).max(0.0)
}

/// Evaluates expressions on a model.
///
/// Uses `k`, `samples`, `inner_samples`, `grid`, `coarsening`, `horizon` and
/// `seed` from the parameters. An integral at nesting depth `d` averages over
/// `samples` traces when `d = 0` and `inner_samples` traces below, and
/// samples their graphs at `grid · coarsening^d`. Trace `i` from any state is
/// drawn from random stream `i`.
pub struct Logic<'a, E: Executor> {
    model: &'a GsmpModel,
    params: FixpointParams,
    exec: &'a E,
}

impl<'a, E: Executor> Logic<'a, E> {
    pub fn new(model: &'a GsmpModel, params: FixpointParams, exec: &'a E) -> Result<Self> {
        params.check()?;
        if params.k > 0.5 {
            return Err(Error::InvalidParameter(format!("k must lie in (0, 1/2] (got {})", params.k)));
        }
        Ok(Self { model, params, exec })
    }

    pub fn params(&self) -> &FixpointParams {
        &self.params
    }

    fn check(&self, time: f64) -> Result<()> {
        if time > self.params.horizon {
            return Err(Error::HorizonTooShort {
                time,
                horizon: self.params.horizon,
            });
        }
        Ok(())
    }

    pub fn eval_f(&self, expr: &FExpr, gs: &GeneralizedState) -> Result<f64> {
        expr.validate()?;
        self.check(expr.max_time())?;
        self.f_at(expr, gs, 0)
    }

    /// Evaluates a trace expression on a given trace at the top resolution.
    pub fn eval_g(&self, expr: &GExpr, trace: &TimedTrace) -> Result<f64> {
        expr.validate()?;
        self.check(expr.max_time())?;
        self.g_on(expr, trace, 0)
    }

    /// Discretization error of [`Logic::eval_f`]: each 𝓛 over an integral
    /// taken on traces at depth `d` may miss the supremum by
    /// `k^{d+2} · grid_d · (1 + r_max)`.
    pub fn grid_error(&self, expr: &FExpr) -> f64 {
        fn f_err(e: &FExpr, d: usize, p: &FixpointParams, r: f64) -> f64 {
            match e {
                FExpr::One | FExpr::Prop(_) => 0.0,
                FExpr::Min(x, y) => f_err(x, d, p, r).max(f_err(y, d, p, r)),
                FExpr::Clamp(a, _, x) => a.abs() * f_err(x, d, p, r),
                FExpr::Integral(g) => p.k * g_err(g, d, p, r),
            }
        }
        fn g_err(e: &GExpr, d: usize, p: &FixpointParams, r: f64) -> f64 {
            match e {
                GExpr::L(f, _) => {
                    let inner = f_err(f, d + 1, p, r);
                    if f.integral_depth() == 0 {
                        inner
                    } else {
                        inner + p.k * p.grid_at(d) * (1.0 + r)
                    }
                }
                GExpr::Min(x, y) => g_err(x, d, p, r).max(g_err(y, d, p, r)),
                GExpr::Clamp(a, _, x) => a.abs() * g_err(x, d, p, r),
            }
        }
        f_err(expr, 0, &self.params, self.model.max_rate())
    }

    fn traces(&self, gs: &GeneralizedState, d: usize) -> Result<Vec<TimedTrace>> {
        let n = if d == 0 { self.params.samples } else { self.params.inner_samples };
        let draw = |i: usize| {
            let mut rng = ChaCha8Rng::seed_from_u64(self.params.seed);
            rng.set_stream(i as u64);
            sample_trace(self.model, gs, self.params.horizon, &mut rng)
        };
        if d == 0 {
            self.exec.map(n, draw).into_iter().collect()
        } else {
            (0..n).map(draw).collect()
        }
    }

    fn f_at(&self, expr: &FExpr, gs: &GeneralizedState, d: usize) -> Result<f64> {
        Ok(match expr {
            FExpr::One => 1.0,
            FExpr::Prop(p) => f64::from(u8::from(self.model.state(gs.state).has_prop(p))),
            FExpr::Min(x, y) => self.f_at(x, gs, d)?.min(self.f_at(y, gs, d)?),
            FExpr::Clamp(a, b, x) => affine_clamp(*a, *b, self.f_at(x, gs, d)?),
            FExpr::Integral(g) => {
                let traces = self.traces(gs, d)?;
                let vals: Vec<Result<f64>> = if d == 0 {
                    self.exec.map(traces.len(), |i| self.g_on(g, &traces[i], d))
                } else {
                    traces.iter().map(|t| self.g_on(g, t, d)).collect()
                };
                let mut sum = 0.0;
                for v in vals {
                    sum += v?;
                }
                self.params.k * sum / traces.len() as f64
            }
        })
    }

    fn g_on(&self, expr: &GExpr, trace: &TimedTrace, d: usize) -> Result<f64> {
        Ok(match expr {
            GExpr::L(f, t) => {
                let h = trace.horizon();
                if f.integral_depth() == 0 {
                    // Piecewise constant along the trace: exact supremum per segment.
                    let mut best: f64 = 0.0;
                    for seg in trace.segments() {
                        let v = f.local(self.model, &seg.start).unwrap_or(0.0);
                        best = best.max(v - gap(*t, seg.start_time, seg.end_time().min(h)));
                    }
                    best
                } else {
                    let graph = trace_graph(self.model, trace, self.params.grid_at(d))?;
                    let mut best: f64 = 0.0;
                    if *t < h {
                        best = best.max(self.f_at(f, &trace.at(self.model, *t)?, d + 1)?);
                    }
                    for p in graph.points() {
                        let reach = 1.0 - (p.time - t).abs();
                        if reach > best {
                            best = best.max(self.f_at(f, &p.value, d + 1)? - (p.time - t).abs());
                        }
                    }
                    best
                }
            }
            GExpr::Min(x, y) => self.g_on(x, trace, d)?.min(self.g_on(y, trace, d)?),
            GExpr::Clamp(a, b, x) => affine_clamp(*a, *b, self.g_on(x, trace, d)?),
        })
    }
}

/// `𝓛`-expressions on a `[0, 1]`-valued trace, with the inner `FExpr` read
/// through [`FExpr::eval_scalar`].
///
/// The supremum is taken over grid samples, both one-sided values at every
/// breakpoint, the left limit at the horizon, and `t` itself.
pub fn eval_g_scalar(expr: &GExpr, f: &ScalarTrace, grid: f64) -> Result<f64> {
    expr.validate()?;
    let time = expr.max_time();
    if time > f.horizon() {
        return Err(Error::HorizonTooShort {
            time,
            horizon: f.horizon(),
        });
    }
    let graph = scalar_graph(f, grid)?;
    g_scalar(expr, f, &graph.points().iter().map(|p| (p.time, p.value)).collect::<Vec<_>>())
}

fn g_scalar(expr: &GExpr, f: &ScalarTrace, points: &[(f64, f64)]) -> Result<f64> {
    Ok(match expr {
        GExpr::L(inner, t) => {
            let mut best = if *t < f.horizon() {
                inner.eval_scalar(f.value_at(*t)?)?
            } else {
                inner.eval_scalar(f.left_limit(*t)?)?
            };
            for &(s, v) in points {
                best = best.max(inner.eval_scalar(v)? - (s - t).abs());
            }
            best.max(0.0)
        }
        GExpr::Min(x, y) => g_scalar(x, f, points)?.min(g_scalar(y, f, points)?),
        GExpr::Clamp(a, b, x) => affine_clamp(*a, *b, g_scalar(x, f, points)?),
    })
}

/// Shape of the randomly generated expression family.
#[derive(Debug, Clone, PartialEq)]
pub struct FamilyConfig {
    pub expressions: usize,
    pub max_depth: usize,
    pub max_integrals: usize,
    /// Random perturbations of the best expression found.
    pub local_steps: usize,
    pub seed: u64,
}

impl Default for FamilyConfig {
    fn default() -> Self {
        Self {
            expressions: 64,
            max_depth: 4,
            max_integrals: 2,
            local_steps: 16,
            seed: 0,
        }
    }
}

/// Random expression over `props` with times in `[0, max_time]`.
pub fn random_fexpr<R: Rng + ?Sized>(props: &[String], depth: usize, integrals: usize, max_time: f64, rng: &mut R) -> FExpr {
    let leaf = |rng: &mut R| {
        if props.is_empty() || rng.random_bool(0.15) {
            FExpr::One
        } else {
            FExpr::Prop(props[rng.random_range(0..props.len())].clone())
        }
    };
    if depth == 0 {
        return leaf(rng);
    }
    let choices = if integrals > 0 { 4 } else { 3 };
    match rng.random_range(0..choices) {
        0 => leaf(rng),
        1 => random_fexpr(props, depth - 1, integrals, max_time, rng).min(random_fexpr(
            props,
            depth - 1,
            integrals,
            max_time,
            rng,
        )),
        2 => random_fexpr(props, depth - 1, integrals, max_time, rng)
            .clamp(rng.random_range(-1.0..=1.0), rng.random_range(-1.0..=1.0)),
        _ => FExpr::integral(random_gexpr(props, depth - 1, integrals - 1, max_time, rng)),
    }
}

pub fn random_gexpr<R: Rng + ?Sized>(props: &[String], depth: usize, integrals: usize, max_time: f64, rng: &mut R) -> GExpr {
    let l = |rng: &mut R| {
        let f = random_fexpr(props, depth.saturating_sub(1), integrals, max_time, rng);
        GExpr::l(f, rng.random_range(0.0..=max_time))
    };
    if depth <= 1 {
        return l(rng);
    }
    match rng.random_range(0..3) {
        0 => l(rng),
        1 => random_gexpr(props, depth - 1, integrals, max_time, rng).min(random_gexpr(
            props,
            depth - 1,
            integrals,
            max_time,
            rng,
        )),
        _ => random_gexpr(props, depth - 1, integrals, max_time, rng)
            .clamp(rng.random_range(-1.0..=1.0), rng.random_range(-1.0..=1.0)),
    }
}

/// Moves one clamp parameter or one time of `expr`.
fn perturb<R: Rng + ?Sized>(expr: &FExpr, max_time: f64, rng: &mut R) -> FExpr {
    let mut e = expr.clone();
    let n = e.size();
    let target = rng.random_range(0..n);
    let step = rng.random_range(-0.2..=0.2);
    let mut seen = 0;
    nudge_f(&mut e, target, &mut seen, step, max_time);
    e
}

fn nudge_f(e: &mut FExpr, target: usize, seen: &mut usize, step: f64, max_time: f64) {
    let me = *seen;
    *seen += 1;
    match e {
        FExpr::One | FExpr::Prop(_) => {}
        FExpr::Min(x, y) => {
            nudge_f(x, target, seen, step, max_time);
            nudge_f(y, target, seen, step, max_time);
        }
        FExpr::Clamp(a, b, x) => {
            if me == target {
                if step > 0.0 {
                    *b += step - 0.1;
                } else {
                    *a = (*a + step + 0.1).clamp(-1.0, 1.0);
                }
            }
            nudge_f(x, target, seen, step, max_time);
        }
        FExpr::Integral(g) => nudge_g(g, target, seen, step, max_time),
    }
}

fn nudge_g(e: &mut GExpr, target: usize, seen: &mut usize, step: f64, max_time: f64) {
    let me = *seen;
    *seen += 1;
    match e {
        GExpr::L(f, t) => {
            if me == target {
                *t = (*t + step).clamp(0.0, max_time);
            }
            nudge_f(f, target, seen, step, max_time);
        }
        GExpr::Min(x, y) => {
            nudge_g(x, target, seen, step, max_time);
            nudge_g(y, target, seen, step, max_time);
        }
        GExpr::Clamp(a, b, x) => {
            if me == target {
                if step > 0.0 {
                    *b += step - 0.1;
                } else {
                    *a = (*a + step + 0.1).clamp(-1.0, 1.0);
                }
            }
            nudge_g(x, target, seen, step, max_time);
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DkEstimate {
    /// Largest `|F(a) − F(b)|` found; a lower bound on `d_k` up to evaluation error.
    pub value: f64,
    pub best: FExpr,
    pub evaluated: usize,
}

/// Searches a generated family for an expression separating `a` from `b`.
///
/// The family holds `one`, every atomic proposition, and
/// `family.expressions` random expressions; the winner is then refined by
/// `family.local_steps` perturbations. Ties keep the earliest candidate.
pub fn dk_estimate<E: Executor>(
    model: &GsmpModel,
    a: &GeneralizedState,
    b: &GeneralizedState,
    family: &FamilyConfig,
    params: &FixpointParams,
    exec: &E,
) -> Result<DkEstimate> {
    let logic = Logic::new(model, params.clone(), exec)?;
    let mut props: Vec<String> = model.states().iter().flat_map(|s| s.props.iter().cloned()).collect();
    props.sort();
    props.dedup();
    let max_time = params.horizon / 2.0;
    let mut rng = ChaCha8Rng::seed_from_u64(family.seed);
    let mut candidates = Vec::with_capacity(props.len() + 1 + family.expressions);
    candidates.push(FExpr::One);
    candidates.extend(props.iter().map(|p| FExpr::prop(p)));
    for _ in 0..family.expressions {
        candidates.push(random_fexpr(&props, family.max_depth, family.max_integrals, max_time, &mut rng));
    }
    let score = |e: &FExpr| -> Result<f64> { Ok((logic.eval_f(e, a)? - logic.eval_f(e, b)?).abs()) };
    let mut best: Option<(f64, FExpr)> = None;
    for e in candidates.iter() {
        let s = score(e)?;
        if best.as_ref().is_none_or(|(v, _)| s > *v) {
            best = Some((s, e.clone()));
        }
    }
    let (mut value, mut expr) = best.expect("family always holds `one`");
    for _ in 0..family.local_steps {
        let e = perturb(&expr, max_time, &mut rng);
        let s = score(&e)?;
        if s > value {
            value = s;
            expr = e;
        }
    }
    Ok(DkEstimate {
        value,
        best: expr,
        evaluated: candidates.len() + family.local_steps,
    })
}
