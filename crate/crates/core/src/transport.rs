//! Exact optimal transport between finite distributions.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::j2::{BaseMetric, Quick};

pub const MASS_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq)]
pub struct DiscreteDistribution<P> {
    points: Vec<P>,
    weights: Vec<f64>,
}

impl<P> DiscreteDistribution<P> {
    pub fn new(points: Vec<P>, weights: Vec<f64>) -> Result<Self> {
        if points.len() != weights.len() {
            return Err(Error::BadDistribution(format!(
                "{} points but {} weights",
                points.len(),
                weights.len()
            )));
        }
        check_weights(&weights)?;
        Ok(Self { points, weights })
    }

    pub fn uniform(points: Vec<P>) -> Result<Self> {
        let n = points.len();
        Self::new(points, vec![1.0 / n as f64; n])
    }

    pub fn dirac(point: P) -> Self {
        Self {
            points: vec![point],
            weights: vec![1.0],
        }
    }

    pub fn points(&self) -> &[P] {
        &self.points
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }
}

fn check_weights(w: &[f64]) -> Result<()> {
    if w.is_empty() {
        return Err(Error::BadDistribution("empty support".into()));
    }
    if let Some(x) = w.iter().find(|x| !(x.is_finite() && **x >= 0.0)) {
        return Err(Error::BadDistribution(format!("weight {x} is negative or not finite")));
    }
    let s: f64 = w.iter().sum();
    if (s - 1.0).abs() > MASS_TOLERANCE {
        return Err(Error::BadDistribution(format!("weights sum to {s}, not 1")));
    }
    Ok(())
}

/// Dense row-major cost matrix with entries in `[0, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct CostMatrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl CostMatrix {
    pub fn new(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::InvalidParameter(format!(
                "cost matrix has {} entries, expected {rows}×{cols}",
                data.len()
            )));
        }
        if let Some(c) = data.iter().find(|c| !(**c >= -1e-12 && **c <= 1.0 + 1e-12)) {
            return Err(Error::InvalidParameter(format!("cost {c} is outside [0, 1]")));
        }
        Ok(Self { rows, cols, data })
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> f64) -> Result<Self> {
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(f(i, j));
            }
        }
        Self::new(rows, cols, data)
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let cols = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != cols) {
            return Err(Error::InvalidParameter("ragged cost matrix".into()));
        }
        Self::new(rows.len(), cols, rows.concat())
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.cols + j]
    }
}

/// An optimal coupling with the potentials that certify it.
#[derive(Debug, Clone, PartialEq)]
pub struct TransportPlan {
    pub value: f64,
    rows: usize,
    cols: usize,
    coupling: Vec<f64>,
    /// Row potentials, tightened so `u_i + v_j ≤ c_ij` holds exactly.
    pub u: Vec<f64>,
    pub v: Vec<f64>,
    /// Primal value minus dual value.
    pub gap: f64,
}

impl TransportPlan {
    pub fn coupling(&self, i: usize, j: usize) -> f64 {
        self.coupling[i * self.cols + j]
    }

    pub fn coupling_rows(&self) -> Vec<Vec<f64>> {
        self.coupling.chunks(self.cols).map(<[f64]>::to_vec).collect()
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    /// Cells with positive mass.
    pub fn support(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        self.coupling
            .iter()
            .enumerate()
            .filter(|(_, &x)| x > 0.0)
            .map(move |(k, &x)| (k / self.cols, k % self.cols, x))
    }
}

/// `W(P, Q)` for weight vectors `p`, `q` under `cost`.
pub fn wasserstein(p: &[f64], q: &[f64], cost: &CostMatrix) -> Result<TransportPlan> {
    check_weights(p)?;
    check_weights(q)?;
    if cost.rows != p.len() || cost.cols != q.len() {
        return Err(Error::InvalidParameter(format!(
            "cost is {}×{} but supports are {}×{}",
            cost.rows,
            cost.cols,
            p.len(),
            q.len()
        )));
    }
    let mut s = Simplex::new(p, q, cost.clone());
    s.solve()?;
    Ok(s.plan(p, q))
}

/// A transport problem whose costs may be raised between solves.
///
/// The previous optimal basis stays primal feasible, so each re-solve starts from it.
pub(crate) struct WarmTransport {
    simplex: Simplex,
    p: Vec<f64>,
    q: Vec<f64>,
}

impl WarmTransport {
    pub(crate) fn new(p: Vec<f64>, q: Vec<f64>, cost: CostMatrix) -> Result<Self> {
        check_weights(&p)?;
        check_weights(&q)?;
        if cost.rows != p.len() || cost.cols != q.len() {
            return Err(Error::InvalidParameter("cost and weight dimensions disagree".into()));
        }
        Ok(Self {
            simplex: Simplex::new(&p, &q, cost),
            p,
            q,
        })
    }

    pub(crate) fn set_cost(&mut self, i: usize, j: usize, c: f64) {
        let m = self.simplex.m;
        self.simplex.cost.data[i * m + j] = c;
    }

    pub(crate) fn solve(&mut self) -> Result<TransportPlan> {
        self.simplex.rebuild();
        self.simplex.solve()?;
        Ok(self.simplex.plan(&self.p, &self.q))
    }
}

pub fn wasserstein_between<P, Q>(
    p: &DiscreteDistribution<P>,
    q: &DiscreteDistribution<Q>,
    cost: &CostMatrix,
) -> Result<TransportPlan> {
    wasserstein(&p.weights, &q.weights, cost)
}

/// Transportation simplex on the bipartite basis tree.
///
/// Rows are nodes `0..n`, columns `n..n+m`. The tree is rooted at node 0 and
/// kept as parent and depth arrays, so a pivot only touches the cycle and the
/// subtree that gets re-hung.
struct Simplex {
    n: usize,
    m: usize,
    cost: CostMatrix,
    flow: Vec<f64>,
    basic: Vec<bool>,
    adj: Vec<Vec<usize>>,
    u: Vec<f64>,
    v: Vec<f64>,
    parent: Vec<usize>,
    depth: Vec<usize>,
    stack: Vec<usize>,
    cursor: usize,
}

impl Simplex {
    fn new(p: &[f64], q: &[f64], cost: CostMatrix) -> Self {
        let (n, m) = (p.len(), q.len());
        // Least-cost start. Every allocation closes exactly one row or column
        // (the last one closes both), which yields a spanning tree of n + m − 1 cells.
        // Sort keys are single-precision costs; they only steer the start.
        let mut order: Vec<u64> = cost
            .data
            .iter()
            .enumerate()
            .map(|(x, &c)| (u64::from((c.max(0.0) as f32).to_bits()) << 32) | x as u64)
            .collect();
        order.sort_unstable();
        let mut s = Simplex {
            n,
            m,
            cost,
            flow: vec![0.0; n * m],
            basic: vec![false; n * m],
            adj: vec![Vec::new(); n + m],
            u: vec![0.0; n],
            v: vec![0.0; m],
            parent: vec![usize::MAX; n + m],
            depth: vec![0; n + m],
            stack: Vec::with_capacity(n + m),
            cursor: 0,
        };
        let (mut a, mut b) = (p.to_vec(), q.to_vec());
        let (mut row_open, mut col_open) = (vec![true; n], vec![true; m]);
        let (mut rows_left, mut cols_left) = (n, m);
        for key in order {
            let cell = (key & 0xffff_ffff) as usize;
            let (i, j) = (cell / m, cell % m);
            if !row_open[i] || !col_open[j] {
                continue;
            }
            let x = a[i].min(b[j]).max(0.0);
            s.flow[cell] = x;
            s.add_basic(i, j);
            a[i] -= x;
            b[j] -= x;
            if rows_left == 1 && cols_left == 1 {
                break;
            }
            let close_row = if cols_left == 1 {
                true
            } else if rows_left == 1 {
                false
            } else {
                a[i] <= b[j]
            };
            if close_row {
                row_open[i] = false;
                rows_left -= 1;
            } else {
                col_open[j] = false;
                cols_left -= 1;
            }
        }
        s.rebuild();
        s
    }

    fn add_basic(&mut self, i: usize, j: usize) {
        self.basic[i * self.m + j] = true;
        self.adj[i].push(self.n + j);
        self.adj[self.n + j].push(i);
    }

    fn remove_basic(&mut self, i: usize, j: usize) {
        self.basic[i * self.m + j] = false;
        let (r, c) = (i, self.n + j);
        self.adj[r].retain(|&x| x != c);
        self.adj[c].retain(|&x| x != r);
    }

    fn edge_cost(&self, x: usize, y: usize) -> f64 {
        if x < self.n {
            self.cost.get(x, y - self.n)
        } else {
            self.cost.get(y, x - self.n)
        }
    }

    /// Sets potentials of `x` from its already-final neighbour `y`.
    fn set_potential(&mut self, x: usize, y: usize) {
        let c = self.edge_cost(x, y);
        if x < self.n {
            self.u[x] = c - self.v[y - self.n];
        } else {
            self.v[x - self.n] = c - self.u[y];
        }
    }

    /// Recomputes parents, depths and potentials from scratch.
    fn rebuild(&mut self) {
        self.parent.fill(usize::MAX);
        self.parent[0] = 0;
        self.depth[0] = 0;
        self.u[0] = 0.0;
        self.stack.clear();
        self.stack.push(0);
        while let Some(x) = self.stack.pop() {
            for k in 0..self.adj[x].len() {
                let y = self.adj[x][k];
                if self.parent[y] == usize::MAX {
                    self.parent[y] = x;
                    self.depth[y] = self.depth[x] + 1;
                    self.set_potential(y, x);
                    self.stack.push(y);
                }
            }
        }
    }

    fn cell_of(&self, x: usize, y: usize) -> (usize, usize) {
        if x < self.n {
            (x, y - self.n)
        } else {
            (y, x - self.n)
        }
    }

    /// Block pricing: scan cells in blocks starting where the last scan
    /// stopped and take the most negative reduced cost of the first block
    /// that has one. With `bland` set, the lowest-index candidate wins.
    fn entering(&mut self, bland: bool) -> Option<(usize, usize)> {
        let total = self.n * self.m;
        let rc = |s: &Self, cell: usize| s.cost.data[cell] - s.u[cell / s.m] - s.v[cell % s.m];
        if bland {
            return (0..total)
                .find(|&c| !self.basic[c] && rc(self, c) < -1e-12)
                .map(|c| (c / self.m, c % self.m));
        }
        let block = (libm::sqrt(total as f64) as usize).max(self.m).max(1);
        let mut best: Option<usize> = None;
        let mut best_rc = -1e-12;
        let mut scanned = 0;
        let mut cell = self.cursor;
        while scanned < total {
            let end = (scanned + block).min(total);
            while scanned < end {
                if !self.basic[cell] {
                    let r = rc(self, cell);
                    if r < best_rc {
                        best_rc = r;
                        best = Some(cell);
                    }
                }
                cell += 1;
                if cell == total {
                    cell = 0;
                }
                scanned += 1;
            }
            if best.is_some() {
                break;
            }
        }
        self.cursor = cell;
        best.map(|c| (c / self.m, c % self.m))
    }

    fn solve(&mut self) -> Result<()> {
        let limit = 50 * (self.n + self.m) * (self.n + self.m) + 1000;
        let mut degenerate_run = 0usize;
        let mut side_b: Vec<usize> = Vec::new();
        let mut side_a: Vec<usize> = Vec::new();
        let mut path: Vec<(usize, usize)> = Vec::new();
        for _ in 0..limit {
            let Some((ei, ej)) = self.entering(degenerate_run > self.n + self.m) else {
                return Ok(());
            };
            let (a, b) = (ei, self.n + ej);
            // Climb both endpoints to their lowest common ancestor.
            side_a.clear();
            side_b.clear();
            let (mut x, mut y) = (a, b);
            while x != y {
                if self.depth[x] >= self.depth[y] {
                    side_a.push(x);
                    x = self.parent[x];
                } else {
                    side_b.push(y);
                    y = self.parent[y];
                }
            }
            // Cycle from the entering column back to the entering row; cells
            // alternate −, +, −, … along it.
            path.clear();
            for &z in &side_b {
                path.push(self.cell_of(z, self.parent[z]));
            }
            for &z in side_a.iter().rev() {
                path.push(self.cell_of(z, self.parent[z]));
            }
            let mut theta = f64::INFINITY;
            let mut leave_at = usize::MAX;
            for k in (0..path.len()).step_by(2) {
                let (i, j) = path[k];
                let x = self.flow[i * self.m + j];
                if x < theta || (x == theta && path[k] < path[leave_at]) {
                    theta = x;
                    leave_at = k;
                }
            }
            let (li, lj) = path[leave_at];
            let theta = theta.max(0.0);
            degenerate_run = if theta == 0.0 { degenerate_run + 1 } else { 0 };
            self.flow[ei * self.m + ej] = theta;
            for (k, &(i, j)) in path.iter().enumerate() {
                let f = &mut self.flow[i * self.m + j];
                if k % 2 == 0 {
                    *f = (*f - theta).max(0.0);
                } else {
                    *f += theta;
                }
            }
            self.flow[li * self.m + lj] = 0.0;
            let rc = self.cost.get(ei, ej) - self.u[ei] - self.v[ej];
            self.remove_basic(li, lj);
            self.add_basic(ei, ej);
            // The leaving edge cut off the subtree holding one entering endpoint;
            // re-hang it below the other endpoint and shift its potentials.
            let (inner, outer) = if leave_at < side_b.len() { (b, a) } else { (a, b) };
            let shift_rows = if inner < self.n { rc } else { -rc };
            self.parent[inner] = outer;
            self.depth[inner] = self.depth[outer] + 1;
            self.stack.clear();
            self.stack.push(inner);
            while let Some(z) = self.stack.pop() {
                if z < self.n {
                    self.u[z] += shift_rows;
                } else {
                    self.v[z - self.n] -= shift_rows;
                }
                for k in 0..self.adj[z].len() {
                    let w = self.adj[z][k];
                    if w != self.parent[z] {
                        self.parent[w] = z;
                        self.depth[w] = self.depth[z] + 1;
                        self.stack.push(w);
                    }
                }
            }
        }
        Err(Error::InvalidParameter("transport simplex did not converge".into()))
    }

    fn plan(&mut self, p: &[f64], q: &[f64]) -> TransportPlan {
        self.rebuild();
        let (n, m) = (self.n, self.m);
        // Tighten row potentials so the dual point is feasible.
        let u: Vec<f64> = (0..n)
            .map(|i| (0..m).map(|j| self.cost.get(i, j) - self.v[j]).fold(f64::INFINITY, f64::min))
            .collect();
        let primal: f64 = (0..n * m).map(|k| self.flow[k] * self.cost.data[k]).sum();
        let dual: f64 = p.iter().zip(&u).map(|(a, b)| a * b).sum::<f64>()
            + q.iter().zip(&self.v).map(|(a, b)| a * b).sum::<f64>();
        TransportPlan {
            value: primal.clamp(0.0, 1.0),
            rows: n,
            cols: m,
            coupling: self.flow.clone(),
            u,
            v: self.v.clone(),
            gap: primal - dual,
        }
    }
}

/// `∫h dP − ∫h dQ` for a witness given by its values on both supports.
///
/// The witness must map into `[0, 1]` and satisfy `|h_p[i] − h_q[j]| ≤ c_ij`.
pub fn dual_lower_bound(p: &[f64], q: &[f64], cost: &CostMatrix, h_p: &[f64], h_q: &[f64]) -> Result<f64> {
    check_weights(p)?;
    check_weights(q)?;
    if h_p.len() != p.len() || h_q.len() != q.len() || cost.rows != p.len() || cost.cols != q.len() {
        return Err(Error::InvalidParameter("witness and cost dimensions disagree".into()));
    }
    const TOL: f64 = 1e-12;
    if let Some(x) = h_p.iter().chain(h_q).find(|x| !(**x >= -TOL && **x <= 1.0 + TOL)) {
        return Err(Error::InfeasibleWitness(format!("value {x} is outside [0, 1]")));
    }
    for (i, a) in h_p.iter().enumerate() {
        for (j, b) in h_q.iter().enumerate() {
            if (a - b).abs() > cost.get(i, j) + TOL {
                return Err(Error::InfeasibleWitness(format!(
                    "|h({i}) − h({j})| = {} exceeds cost {}",
                    (a - b).abs(),
                    cost.get(i, j)
                )));
            }
        }
    }
    Ok(p.iter().zip(h_p).map(|(w, h)| w * h).sum::<f64>() - q.iter().zip(h_q).map(|(w, h)| w * h).sum::<f64>())
}

/// A test function read off the optimal potentials.
///
/// Two c-transforms then a shift into `[0, 1]`. When rows and columns index
/// one universe and the cost is a metric on it, the result passes
/// [`dual_lower_bound`] and attains the optimum up to clamping.
pub fn witness(plan: &TransportPlan, cost: &CostMatrix) -> (Vec<f64>, Vec<f64>) {
    let (n, m) = (cost.rows, cost.cols);
    let g0: Vec<f64> = plan.v.iter().map(|v| -v).collect();
    let h: Vec<f64> = (0..n)
        .map(|i| (0..m).map(|j| g0[j] + cost.get(i, j)).fold(f64::INFINITY, f64::min))
        .collect();
    let g: Vec<f64> = (0..m)
        .map(|j| (0..n).map(|i| h[i] - cost.get(i, j)).fold(f64::NEG_INFINITY, f64::max))
        .collect();
    let lo = h.iter().chain(&g).copied().fold(f64::INFINITY, f64::min);
    let fix = |x: f64| (x - lo).clamp(0.0, 1.0);
    (h.into_iter().map(fix).collect(), g.into_iter().map(fix).collect())
}

/// Samples grouped into clusters of diameter at most `eps`.
#[derive(Debug, Clone, PartialEq)]
pub struct Clustering {
    /// Sample index of each representative.
    pub representatives: Vec<usize>,
    pub weights: Vec<f64>,
    /// Cluster of each sample.
    pub assignment: Vec<usize>,
    /// Mass folded into the heaviest cluster from clusters too light to keep.
    pub residual_mass: f64,
}

impl Clustering {
    pub fn distribution<P: Clone>(&self, samples: &[P]) -> Result<DiscreteDistribution<P>> {
        DiscreteDistribution::new(
            self.representatives.iter().map(|&i| samples[i].clone()).collect(),
            self.weights.clone(),
        )
    }
}

/// Greedy `eps/2`-net over equally weighted samples.
///
/// Each sample joins the first representative within `eps/2`, otherwise it
/// opens a new cluster. Afterwards the lightest clusters are merged into the
/// heaviest one while their total mass stays within `eps`. Moving each sample
/// to its representative costs at most `eps/2`, and the merged mass at most
/// `eps`, so the transport distance to the empirical measure is below `2·eps`.
pub fn cluster_measure<P, M: BaseMetric<P> + ?Sized>(samples: &[P], base: &M, eps: f64) -> Result<Clustering> {
    if !(eps > 0.0) {
        return Err(Error::InvalidParameter(format!("eps must be > 0 (got {eps})")));
    }
    if samples.is_empty() {
        return Err(Error::BadDistribution("no samples to cluster".into()));
    }
    let radius = eps / 2.0;
    let mut reps: Vec<usize> = Vec::new();
    let mut counts: Vec<usize> = Vec::new();
    let mut assignment = Vec::with_capacity(samples.len());
    for (k, s) in samples.iter().enumerate() {
        let mut found = None;
        for (c, &r) in reps.iter().enumerate() {
            let d = match base.quick(s, &samples[r]) {
                Quick::Exact(d) => d,
                Quick::AtLeast(lb) if lb > radius => continue,
                Quick::AtLeast(_) => base.distance(s, &samples[r])?,
            };
            if d <= radius {
                found = Some(c);
                break;
            }
        }
        let c = found.unwrap_or_else(|| {
            reps.push(k);
            counts.push(0);
            reps.len() - 1
        });
        counts[c] += 1;
        assignment.push(c);
    }
    let unit = 1.0 / samples.len() as f64;
    let mut order: Vec<usize> = (0..reps.len()).collect();
    order.sort_by_key(|&c| (counts[c], c));
    let heaviest = *order.last().expect("at least one cluster");
    let mut folded = vec![false; reps.len()];
    let mut residual = 0usize;
    for &c in &order {
        if c == heaviest || (residual + counts[c]) as f64 * unit > eps {
            break;
        }
        residual += counts[c];
        folded[c] = true;
    }
    let mut renumber = vec![0usize; reps.len()];
    let mut kept = Vec::new();
    let mut weights = Vec::new();
    for c in 0..reps.len() {
        if !folded[c] {
            renumber[c] = kept.len();
            kept.push(reps[c]);
            let extra = if c == heaviest { residual } else { 0 };
            weights.push((counts[c] + extra) as f64 * unit);
        }
    }
    for c in 0..reps.len() {
        if folded[c] {
            renumber[c] = renumber[heaviest];
        }
    }
    let total: f64 = weights.iter().sum();
    for w in &mut weights {
        *w /= total;
    }
    Ok(Clustering {
        representatives: kept,
        weights,
        assignment: assignment.into_iter().map(|c| renumber[c]).collect(),
        residual_mass: residual as f64 * unit,
    })
}
