//! Depth-bounded estimates of the bisimulation pseudometric.
//!
//! `m̂_0` is 0 on pairs with equal propositions and 1 elsewhere, and
//! `m̂_{j+1} = k · W(J(m̂_j))` over sampled traces. Every state handed to
//! the recursion is first snapped to a clock lattice, and trace `i` from any
//! state is always drawn from random stream `i`. The estimate is therefore a
//! deterministic function of the snapped pair and the level. Monotonicity and
//! the geometric step bound between levels then hold exactly.

use alloc::format;
use alloc::sync::Arc;
use alloc::vec;
use alloc::vec::Vec;
use core::sync::atomic::{AtomicU64, Ordering};

use hashbrown::HashMap;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use spin::RwLock;

use crate::error::{Error, Result};
use crate::exec::Executor;
use crate::j2::{hausdorff_capped, trace_graph, BaseMetric, FnMetric, GraphPoint, GraphPointSet, Quick};
use crate::model::{GeneralizedState, GsmpModel, StateId};
use crate::stats::{bootstrap, percentile_interval};
use crate::trace::sample_trace;
use crate::transport::{wasserstein, CostMatrix, WarmTransport};

#[derive(Debug, Clone, PartialEq)]
pub struct FixpointParams {
    pub k: f64,
    pub depth: usize,
    /// Traces per state at the top level.
    pub samples: usize,
    /// Traces per state below the top level.
    pub inner_samples: usize,
    pub grid: f64,
    pub horizon: f64,
    pub seed: u64,
    /// Grid and snapping resolution grow by this factor per level below the top.
    pub coarsening: f64,
    pub bootstrap: usize,
    pub confidence: f64,
    /// Recompute at twice the horizon and report the change.
    pub horizon_check: bool,
    /// Maximum number of pair evaluations before giving up.
    pub work_limit: u64,
}

impl Default for FixpointParams {
    fn default() -> Self {
        Self {
            k: 0.5,
            depth: 3,
            samples: 200,
            inner_samples: 32,
            grid: 0.01,
            horizon: 2.0,
            seed: 0,
            coarsening: 2.0,
            bootstrap: 100,
            confidence: 0.95,
            horizon_check: false,
            work_limit: 20_000_000,
        }
    }
}

impl FixpointParams {
    pub fn check(&self) -> Result<()> {
        let bad = |what: &str| Err(Error::InvalidParameter(what.into()));
        if !(self.k > 0.0 && self.k < 1.0) {
            return bad("k must lie in (0, 1)");
        }
        if self.samples == 0 || self.inner_samples == 0 {
            return bad("sample counts must be >= 1");
        }
        if !(self.grid.is_finite() && self.grid > 0.0) {
            return bad("grid must be > 0");
        }
        if !(self.horizon.is_finite() && self.horizon > 0.0) {
            return bad("horizon must be > 0");
        }
        if !(self.coarsening.is_finite() && self.coarsening >= 1.0) {
            return bad("coarsening must be >= 1");
        }
        if !(self.confidence > 0.0 && self.confidence < 1.0) {
            return bad("confidence must lie in (0, 1)");
        }
        if self.depth > 64 {
            return bad("depth must be <= 64");
        }
        Ok(())
    }

    /// Grid (and snapping quantum) used `d` levels below the top.
    pub fn grid_at(&self, d: usize) -> f64 {
        self.grid * libm::pow(self.coarsening, d as f64)
    }

    fn samples_at(&self, d: usize) -> usize {
        if d == 0 {
            self.samples
        } else {
            self.inner_samples
        }
    }
}

/// Error terms that accompany an estimate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Budget {
    /// `k^{n+1} / (1 − k)`: distance from the depth-`n` iterate to the fixed point.
    pub depth_term: f64,
    /// Bootstrap half-width of the top-level transport value (statistical).
    pub sampling_term: f64,
    /// Graph sampling and clock snapping, summed over levels.
    pub grid_term: f64,
    /// Observed change when the horizon doubles (heuristic), if requested.
    pub horizon_term: Option<f64>,
}

impl Budget {
    pub fn total(&self) -> f64 {
        self.depth_term + self.sampling_term + self.grid_term + self.horizon_term.unwrap_or(0.0)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MetricEstimate {
    pub value: f64,
    pub depth: usize,
    pub budget: Budget,
    pub params: FixpointParams,
}

/// 0 on equal propositions, 1 otherwise.
pub fn base_metric(model: &GsmpModel, a: &GeneralizedState, b: &GeneralizedState) -> f64 {
    if model.same_props(a.state, b.state) {
        0.0
    } else {
        1.0
    }
}

/// `k^{n+1} / (1 − k)`.
pub fn convergence_bound(k: f64, n: usize) -> Result<f64> {
    if !(k > 0.0 && k < 1.0) {
        return Err(Error::InvalidParameter(format!("k must lie in (0, 1) (got {k})")));
    }
    Ok(libm::pow(k, (n + 1) as f64) / (1.0 - k))
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
struct Key {
    res: u8,
    state: u32,
    clocks: Arc<[i64]>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
struct KPoint {
    class: u32,
    id: u32,
}

const NO_ID: u32 = u32::MAX;

struct KGraph {
    set: GraphPointSet<KPoint>,
    by_class: Vec<(u32, Vec<f64>)>,
}

impl KGraph {
    fn new(set: GraphPointSet<KPoint>) -> Self {
        let mut by_class: Vec<(u32, Vec<f64>)> = Vec::new();
        for p in set.points() {
            match by_class.iter_mut().find(|(c, _)| *c == p.value.class) {
                Some((_, ts)) => ts.push(p.time),
                None => by_class.push((p.value.class, vec![p.time])),
            }
        }
        Self { set, by_class }
    }

    fn same_points(&self, other: &Self) -> bool {
        self.set.points() == other.set.points()
    }
}

/// Hausdorff distance under the proposition metric, capped at 1.
fn prop_j2(a: &KGraph, b: &KGraph) -> f64 {
    fn directed(a: &KGraph, b: &KGraph) -> f64 {
        let mut worst: f64 = 0.0;
        for (class, ts) in &a.by_class {
            let Some((_, us)) = b.by_class.iter().find(|(c, _)| c == class) else {
                return 1.0;
            };
            let mut j = 0;
            for &t in ts {
                while j < us.len() && us[j] < t {
                    j += 1;
                }
                let right = us.get(j).map_or(f64::INFINITY, |&s| s - t);
                let left = if j > 0 { t - us[j - 1] } else { f64::INFINITY };
                let d = left.min(right);
                if d > worst {
                    if d >= 1.0 {
                        return 1.0;
                    }
                    worst = d;
                }
            }
        }
        worst
    }
    let ab = directed(a, b);
    if ab >= 1.0 {
        return 1.0;
    }
    ab.max(directed(b, a))
}

/// Deduplicated sampled traces from one snapped state.
struct Bundle {
    graphs: Vec<KGraph>,
    weights: Vec<f64>,
    of_sample: Vec<usize>,
}

struct CostTable {
    cols: usize,
    lb: Vec<f64>,
    /// 0: nothing known, 1: proposition-level lower bound, 2: exact.
    tier: Vec<u8>,
}

#[derive(Default)]
struct Interner {
    ids: HashMap<Key, u32>,
    keys: Vec<Key>,
}

const BUNDLE_CACHE_LIMIT: usize = 4096;

/// Memoizing estimator for one model and parameter set.
pub struct Estimator<'a, E: Executor> {
    model: &'a GsmpModel,
    params: FixpointParams,
    exec: &'a E,
    keys: RwLock<Interner>,
    memo: RwLock<HashMap<(u32, u32, u16), f64>>,
    bundles: RwLock<HashMap<(u32, bool), Arc<Bundle>>>,
    work: AtomicU64,
}

struct LevelMetric<'e, 'a, E: Executor> {
    est: &'e Estimator<'a, E>,
    level: usize,
}

impl<E: Executor> BaseMetric<KPoint> for LevelMetric<'_, '_, E> {
    fn quick(&self, a: &KPoint, b: &KPoint) -> Quick {
        if a.class != b.class {
            Quick::Exact(1.0)
        } else if a.id == b.id || self.level == 0 {
            Quick::Exact(0.0)
        } else {
            match self.est.memo.read().get(&memo_key(a.id, b.id, self.level)) {
                Some(&v) => Quick::Exact(v),
                None => Quick::AtLeast(0.0),
            }
        }
    }

    fn distance(&self, a: &KPoint, b: &KPoint) -> Result<f64> {
        self.est.value(a.id, b.id, self.level)
    }
}

fn memo_key(a: u32, b: u32, level: usize) -> (u32, u32, u16) {
    (a.min(b), a.max(b), level as u16)
}

impl<'a, E: Executor> Estimator<'a, E> {
    pub fn new(model: &'a GsmpModel, params: FixpointParams, exec: &'a E) -> Result<Self> {
        params.check()?;
        Ok(Self {
            model,
            params,
            exec,
            keys: RwLock::new(Interner::default()),
            memo: RwLock::new(HashMap::new()),
            bundles: RwLock::new(HashMap::new()),
            work: AtomicU64::new(0),
        })
    }

    pub fn params(&self) -> &FixpointParams {
        &self.params
    }

    /// Pair evaluations performed so far (memo misses).
    pub fn work(&self) -> u64 {
        self.work.load(Ordering::Relaxed)
    }

    fn snap(&self, gs: &GeneralizedState, res: usize) -> Key {
        let q = self.params.grid_at(res);
        Key {
            res: res as u8,
            state: gs.state.0 as u32,
            clocks: gs.clocks.iter().map(|c| libm::round(c / q) as i64).collect(),
        }
    }

    fn intern(&self, key: Key) -> u32 {
        if let Some(&id) = self.keys.read().ids.get(&key) {
            return id;
        }
        let mut w = self.keys.write();
        if let Some(&id) = w.ids.get(&key) {
            return id;
        }
        let id = w.keys.len() as u32;
        w.keys.push(key.clone());
        w.ids.insert(key, id);
        id
    }

    fn key(&self, id: u32) -> Key {
        self.keys.read().keys[id as usize].clone()
    }

    fn class_of(&self, state: StateId) -> u32 {
        self.model.state(state).prop_class as u32
    }

    /// The generalized state a snapped key stands for. Ties introduced by
    /// snapping are broken by a deterministic nudge.
    fn unsnap(&self, key: &Key) -> Result<GeneralizedState> {
        let q = self.params.grid_at(key.res as usize);
        let state = StateId(key.state as usize);
        let base: Vec<f64> = key.clocks.iter().map(|&c| c as f64 * q).collect();
        if let Ok(gs) = GeneralizedState::new(self.model, state, base.clone()) {
            return Ok(gs);
        }
        // Shifting clock i by (i + 1)·scale·rate_i moves its expiry time by (i + 1)·scale.
        let rates: Vec<f64> = self.model.state(state).events.iter().map(|&(_, r)| r).collect();
        let mut scale = 1e-6 * q;
        for _ in 0..16 {
            let nudged: Vec<f64> = base
                .iter()
                .enumerate()
                .map(|(i, c)| c + (i + 1) as f64 * scale * rates[i])
                .collect();
            if let Ok(gs) = GeneralizedState::new(self.model, state, nudged) {
                return Ok(gs);
            }
            scale *= 3.7;
        }
        Err(Error::DegenerateModel(format!(
            "cannot separate tied clocks of snapped state `{}`",
            self.model.state(state).name
        )))
    }

    fn bundle(&self, id: u32, with_ids: bool) -> Result<Arc<Bundle>> {
        if let Some(b) = self.bundles.read().get(&(id, with_ids)) {
            return Ok(b.clone());
        }
        let key = self.key(id);
        let d = key.res as usize;
        let gs = self.unsnap(&key)?;
        let n = self.params.samples_at(d);
        let grid = self.params.grid_at(d);
        let mut graphs: Vec<KGraph> = Vec::new();
        let mut counts: Vec<usize> = Vec::new();
        let mut of_sample = Vec::with_capacity(n);
        let mut by_print: HashMap<u64, Vec<usize>> = HashMap::new();
        for i in 0..n {
            let mut rng = ChaCha8Rng::seed_from_u64(self.params.seed);
            rng.set_stream(i as u64);
            let trace = sample_trace(self.model, &gs, self.params.horizon, &mut rng)?;
            let raw = trace_graph(self.model, &trace, grid)?;
            let mut print: u64 = 0xcbf2_9ce4_8422_2325;
            let points: Vec<GraphPoint<KPoint>> = raw
                .points()
                .iter()
                .map(|p| {
                    let class = self.class_of(p.value.state);
                    let id = if with_ids {
                        self.intern(self.snap(&p.value, d + 1))
                    } else {
                        NO_ID
                    };
                    for x in [p.time.to_bits(), u64::from(class), u64::from(id)] {
                        print = (print ^ x).wrapping_mul(0x0100_0000_01b3);
                    }
                    GraphPoint {
                        time: p.time,
                        value: KPoint { class, id },
                    }
                })
                .collect();
            let g = KGraph::new(GraphPointSet::new(points, grid)?);
            let slot = by_print.entry(print).or_default();
            match slot.iter().copied().find(|&u| graphs[u].same_points(&g)) {
                Some(u) => {
                    counts[u] += 1;
                    of_sample.push(u);
                }
                None => {
                    slot.push(graphs.len());
                    of_sample.push(graphs.len());
                    graphs.push(g);
                    counts.push(1);
                }
            }
        }
        let weights = counts.iter().map(|&c| c as f64 / n as f64).collect();
        let b = Arc::new(Bundle {
            graphs,
            weights,
            of_sample,
        });
        let mut cache = self.bundles.write();
        if cache.len() >= BUNDLE_CACHE_LIMIT {
            cache.clear();
        }
        cache.insert((id, with_ids), b.clone());
        Ok(b)
    }

    /// `m̂_level` between two interned keys of the same resolution.
    fn value(&self, a: u32, b: u32, level: usize) -> Result<f64> {
        if a == b {
            return Ok(0.0);
        }
        let (ka, kb) = (self.key(a), self.key(b));
        if self.class_of(StateId(ka.state as usize)) != self.class_of(StateId(kb.state as usize)) {
            return Ok(1.0);
        }
        if level == 0 {
            return Ok(0.0);
        }
        let mk = memo_key(a, b, level);
        if let Some(&v) = self.memo.read().get(&mk) {
            return Ok(v);
        }
        let done = self.work.fetch_add(1, Ordering::Relaxed) + 1;
        if done > self.params.work_limit {
            return Err(Error::WorkLimitExceeded(self.params.work_limit));
        }
        let (x, y) = if ka <= kb { (a, b) } else { (b, a) };
        let (bx, by) = (self.bundle(x, level > 1)?, self.bundle(y, level > 1)?);
        let mut table = self.fresh_table(&bx, &by, level)?;
        let w = self.lazy_transport(&bx, &by, level, &mut table, &bx.weights, &by.weights)?;
        let v = (self.params.k * w).clamp(0.0, 1.0);
        self.memo.write().insert(mk, v);
        Ok(v)
    }

    fn fresh_table(&self, bx: &Bundle, by: &Bundle, level: usize) -> Result<CostTable> {
        let (rows, cols) = (bx.graphs.len(), by.graphs.len());
        let mut table = CostTable {
            cols,
            lb: vec![0.0; rows * cols],
            tier: vec![0; rows * cols],
        };
        // Trace i on both sides shares its random stream; those pairs go first.
        let mut paired: Vec<usize> = bx
            .of_sample
            .iter()
            .zip(&by.of_sample)
            .map(|(&r, &c)| r * cols + c)
            .collect();
        paired.sort_unstable();
        paired.dedup();
        self.fill(bx, by, level, &mut table, &paired)?;
        self.fill(bx, by, level, &mut table, &paired)?;
        Ok(table)
    }

    fn fill(&self, bx: &Bundle, by: &Bundle, level: usize, table: &mut CostTable, cells: &[usize]) -> Result<()> {
        let cols = table.cols;
        let todo: Vec<(usize, u8)> = cells
            .iter()
            .map(|&c| (c, table.tier[c]))
            .filter(|&(_, t)| t < 2)
            .collect();
        let out = self.exec.map(todo.len(), |t| {
            let (cell, tier) = todo[t];
            let (gx, gy) = (&bx.graphs[cell / cols], &by.graphs[cell % cols]);
            if tier == 0 {
                let v = prop_j2(gx, gy);
                // Below level 1 every same-proposition distance is at most k.
                Ok((v, if level == 1 || v >= self.params.k { 2 } else { 1 }))
            } else {
                let metric = LevelMetric {
                    est: self,
                    level: level - 1,
                };
                Ok((hausdorff_capped(&gx.set, &gy.set, &metric, 1.0)?, 2))
            }
        });
        for (&(cell, _), r) in todo.iter().zip(out) {
            let (v, tier): (f64, u8) = r?;
            table.lb[cell] = v;
            table.tier[cell] = tier;
        }
        Ok(())
    }

    /// Transport value with costs evaluated only where an optimal plan needs them.
    ///
    /// Unknown costs enter the program at a lower bound. When every cell in the
    /// support of the optimal plan is exact, that plan is optimal for the exact
    /// costs as well.
    fn lazy_transport(
        &self,
        bx: &Bundle,
        by: &Bundle,
        level: usize,
        table: &mut CostTable,
        wr: &[f64],
        wc: &[f64],
    ) -> Result<f64> {
        let rows: Vec<usize> = (0..wr.len()).filter(|&i| wr[i] > 0.0).collect();
        let cols: Vec<usize> = (0..wc.len()).filter(|&j| wc[j] > 0.0).collect();
        let pr: Vec<f64> = rows.iter().map(|&i| wr[i]).collect();
        let pc: Vec<f64> = cols.iter().map(|&j| wc[j]).collect();
        let cost = CostMatrix::from_fn(rows.len(), cols.len(), |i, j| table.lb[rows[i] * table.cols + cols[j]])?;
        let mut lp = WarmTransport::new(pr, pc, cost)?;
        loop {
            let plan = lp.solve()?;
            let pending: Vec<(usize, usize)> = plan
                .support()
                .map(|(i, j, _)| (i, j))
                .filter(|&(i, j)| table.tier[rows[i] * table.cols + cols[j]] < 2)
                .collect();
            if pending.is_empty() {
                return Ok(plan.value);
            }
            let cells: Vec<usize> = pending.iter().map(|&(i, j)| rows[i] * table.cols + cols[j]).collect();
            self.fill(bx, by, level, table, &cells)?;
            for (&(i, j), &c) in pending.iter().zip(&cells) {
                lp.set_cost(i, j, table.lb[c]);
            }
        }
    }

    /// `m̂_n` at the top resolution, without error accounting.
    pub fn value_at_depth(&self, a: &GeneralizedState, b: &GeneralizedState, n: usize) -> Result<f64> {
        let (ia, ib) = (self.intern(self.snap(a, 0)), self.intern(self.snap(b, 0)));
        self.value(ia, ib, n)
    }

    pub fn estimate(&self, a: &GeneralizedState, b: &GeneralizedState) -> Result<MetricEstimate> {
        self.estimate_at_depth(a, b, self.params.depth)
    }

    pub fn estimate_at_depth(&self, a: &GeneralizedState, b: &GeneralizedState, n: usize) -> Result<MetricEstimate> {
        let p = &self.params;
        let mut budget = Budget {
            depth_term: convergence_bound(p.k, n)?,
            sampling_term: 0.0,
            grid_term: 0.0,
            horizon_term: None,
        };
        let (ka, kb) = (self.snap(a, 0), self.snap(b, 0));
        let trivial = ka == kb || !self.model.same_props(a.state, b.state) || n == 0;
        let value = if trivial {
            base_metric(self.model, a, b)
        } else {
            let (ia, ib) = (self.intern(ka.clone()), self.intern(kb.clone()));
            let v = self.value(ia, ib, n)?;
            budget.sampling_term = self.sampling_term(if ka <= kb { (ia, ib) } else { (ib, ia) }, n)?;
            let rate = self.model.max_rate();
            budget.grid_term = p.grid_at(0)
                + (0..n)
                    .map(|d| libm::pow(p.k, (d + 1) as f64) * (p.grid_at(d) * (1.0 + rate) + p.grid_at(d + 1)))
                    .sum::<f64>();
            v
        };
        if p.horizon_check && !trivial {
            let longer = FixpointParams {
                horizon: 2.0 * p.horizon,
                horizon_check: false,
                bootstrap: 0,
                ..p.clone()
            };
            let twice = Estimator::new(self.model, longer, self.exec)?.value_at_depth(a, b, n)?;
            budget.horizon_term = Some((twice - value).abs());
        }
        Ok(MetricEstimate {
            value,
            depth: n,
            budget,
            params: p.clone(),
        })
    }

    /// Paired bootstrap over trace indices of the top-level transport value.
    fn sampling_term(&self, (x, y): (u32, u32), n: usize) -> Result<f64> {
        if self.params.bootstrap == 0 {
            return Ok(0.0);
        }
        let (bx, by) = (self.bundle(x, n > 1)?, self.bundle(y, n > 1)?);
        let mut table = self.fresh_table(&bx, &by, n)?;
        let mut rng = ChaCha8Rng::seed_from_u64(self.params.seed);
        rng.set_stream(u64::MAX);
        let samples = bx.of_sample.len();
        let mut failure = None;
        let reps = bootstrap(samples, self.params.bootstrap, &mut rng, |idx| {
            let mut wr = vec![0.0; bx.graphs.len()];
            let mut wc = vec![0.0; by.graphs.len()];
            for &i in idx {
                wr[bx.of_sample[i]] += 1.0 / samples as f64;
                wc[by.of_sample[i]] += 1.0 / samples as f64;
            }
            match self.lazy_transport(&bx, &by, n, &mut table, &wr, &wc) {
                Ok(w) => self.params.k * w,
                Err(e) => {
                    failure.get_or_insert(e);
                    f64::NAN
                }
            }
        });
        if let Some(e) = failure {
            return Err(e);
        }
        Ok(percentile_interval(reps, self.params.confidence).half_width())
    }
}

pub fn metric_estimate<E: Executor>(
    model: &GsmpModel,
    a: &GeneralizedState,
    b: &GeneralizedState,
    params: &FixpointParams,
    exec: &E,
) -> Result<MetricEstimate> {
    Estimator::new(model, params.clone(), exec)?.estimate(a, b)
}

#[derive(Debug, Clone, PartialEq)]
pub struct BisimCheck {
    pub candidate: f64,
    /// `k · Ŵ(J(candidate))`.
    pub lifted: f64,
    pub margin: f64,
    pub pass: bool,
}

/// Checks `candidate ≥ k · Ŵ(J(candidate)) − tolerance` on each listed pair.
///
/// Uses `samples`, `grid`, `horizon`, `seed` and `k` from `params`.
pub fn check_metric_bisimulation<C, E>(
    model: &GsmpModel,
    pairs: &[(GeneralizedState, GeneralizedState)],
    candidate: &C,
    params: &FixpointParams,
    tolerance: f64,
    exec: &E,
) -> Result<Vec<BisimCheck>>
where
    C: Fn(&GeneralizedState, &GeneralizedState) -> f64 + Sync,
    E: Executor,
{
    params.check()?;
    for (a, b) in pairs {
        let c = candidate(a, b);
        if !model.same_props(a.state, b.state) && c < 1.0 {
            return Err(Error::NotInLattice(format!(
                "candidate gives {c} to a pair with different propositions"
            )));
        }
    }
    let n = params.samples;
    let graphs_from = |gs: &GeneralizedState| -> Result<Vec<GraphPointSet<GeneralizedState>>> {
        (0..n)
            .map(|i| {
                let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
                rng.set_stream(i as u64);
                trace_graph(model, &sample_trace(model, gs, params.horizon, &mut rng)?, params.grid)
            })
            .collect()
    };
    let base = FnMetric(|x: &GeneralizedState, y: &GeneralizedState| candidate(x, y).clamp(0.0, 1.0));
    let mut out = Vec::with_capacity(pairs.len());
    for (a, b) in pairs {
        let c = candidate(a, b);
        let (ga, gb) = (graphs_from(a)?, graphs_from(b)?);
        let cells = exec.map(n * n, |t| hausdorff_capped(&ga[t / n], &gb[t % n], &base, 1.0));
        let costs = cells.into_iter().collect::<Result<Vec<f64>>>()?;
        let w = vec![1.0 / n as f64; n];
        let lifted = params.k * wasserstein(&w, &w, &CostMatrix::new(n, n, costs)?)?.value;
        let margin = c - lifted;
        out.push(BisimCheck {
            candidate: c,
            lifted,
            margin,
            pass: margin >= -tolerance,
        });
    }
    Ok(out)
}
