//! Skorohod J2 distance as a Hausdorff distance between sampled graphs.

use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::model::{GeneralizedState, GsmpModel};
use crate::scalar::ScalarTrace;
use crate::trace::TimedTrace;

pub const DEFAULT_GRID: f64 = 0.01;

#[derive(Debug, Clone, PartialEq)]
pub struct GraphPoint<P> {
    pub time: f64,
    pub value: P,
}

/// Points of a graph `{(t, f(t))}`, sorted by time.
#[derive(Debug, Clone, PartialEq)]
pub struct GraphPointSet<P> {
    points: Vec<GraphPoint<P>>,
    grid: f64,
}

impl<P> GraphPointSet<P> {
    pub fn new(points: Vec<GraphPoint<P>>, grid: f64) -> Result<Self> {
        if points.is_empty() {
            return Err(Error::InvalidParameter("graph point set is empty".into()));
        }
        if points.windows(2).any(|w| !(w[0].time <= w[1].time)) {
            return Err(Error::InvalidParameter("graph point times must be nondecreasing".into()));
        }
        Ok(Self { points, grid })
    }

    pub fn points(&self) -> &[GraphPoint<P>] {
        &self.points
    }

    pub fn grid(&self) -> f64 {
        self.grid
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn map<Q>(self, mut f: impl FnMut(P) -> Q) -> GraphPointSet<Q> {
        GraphPointSet {
            points: self
                .points
                .into_iter()
                .map(|p| GraphPoint {
                    time: p.time,
                    value: f(p.value),
                })
                .collect(),
            grid: self.grid,
        }
    }
}

/// What a base metric can say about a pair without doing real work.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Quick {
    Exact(f64),
    AtLeast(f64),
}

/// A pseudometric into `[0, 1]`.
pub trait BaseMetric<P: ?Sized> {
    fn quick(&self, _a: &P, _b: &P) -> Quick {
        Quick::AtLeast(0.0)
    }

    fn distance(&self, a: &P, b: &P) -> Result<f64>;
}

/// `|x − y|` on reals.
#[derive(Debug, Clone, Copy, Default)]
pub struct AbsDiff;

impl BaseMetric<f64> for AbsDiff {
    fn quick(&self, a: &f64, b: &f64) -> Quick {
        Quick::Exact((a - b).abs())
    }

    fn distance(&self, a: &f64, b: &f64) -> Result<f64> {
        Ok((a - b).abs())
    }
}

/// Wraps a cheap closure as a base metric.
pub struct FnMetric<F>(pub F);

impl<P, F: Fn(&P, &P) -> f64> BaseMetric<P> for FnMetric<F> {
    fn quick(&self, a: &P, b: &P) -> Quick {
        Quick::Exact((self.0)(a, b))
    }

    fn distance(&self, a: &P, b: &P) -> Result<f64> {
        Ok((self.0)(a, b))
    }
}

/// 0 when two generalized states carry the same propositions, 1 otherwise.
pub struct PropMetric<'a>(pub &'a GsmpModel);

impl BaseMetric<GeneralizedState> for PropMetric<'_> {
    fn quick(&self, a: &GeneralizedState, b: &GeneralizedState) -> Quick {
        Quick::Exact(if self.0.same_props(a.state, b.state) { 0.0 } else { 1.0 })
    }

    fn distance(&self, a: &GeneralizedState, b: &GeneralizedState) -> Result<f64> {
        Ok(if self.0.same_props(a.state, b.state) { 0.0 } else { 1.0 })
    }
}

pub fn product_distance<P, M: BaseMetric<P> + ?Sized>(a: &GraphPoint<P>, b: &GraphPoint<P>, base: &M) -> Result<f64> {
    let gap = (a.time - b.time).abs();
    Ok(gap.max(base.distance(&a.value, &b.value)?))
}

/// `min(cap, sup_{a∈A} inf_{b∈B} d(a, b))`.
///
/// Candidates are visited outward in time from `a`, so the scan stops once the
/// time gap alone exceeds the best distance found. Cheap answers from
/// [`BaseMetric::quick`] are taken first; expensive ones go in order of their
/// lower bounds.
pub fn directed_hausdorff<P, M: BaseMetric<P> + ?Sized>(
    a: &GraphPointSet<P>,
    b: &GraphPointSet<P>,
    base: &M,
    cap: f64,
) -> Result<f64> {
    let bs = &b.points;
    let mut cmax: f64 = 0.0;
    let mut pending: Vec<(f64, usize)> = Vec::new();
    for p in &a.points {
        let mut cmin = cap;
        let idx = bs.partition_point(|q| q.time < p.time);
        let (mut lo, mut hi) = (idx, idx);
        pending.clear();
        loop {
            if cmin <= cmax {
                break;
            }
            let left_gap = if lo > 0 { p.time - bs[lo - 1].time } else { f64::INFINITY };
            let right_gap = if hi < bs.len() { bs[hi].time - p.time } else { f64::INFINITY };
            let (j, gap) = if left_gap <= right_gap {
                lo -= usize::from(lo > 0);
                (lo, left_gap)
            } else {
                hi += 1;
                (hi - 1, right_gap)
            };
            if !(gap < cmin) {
                break;
            }
            match base.quick(&p.value, &bs[j].value) {
                Quick::Exact(d) => cmin = cmin.min(gap.max(d)),
                Quick::AtLeast(lb) => {
                    let lb = gap.max(lb);
                    if lb < cmin {
                        pending.push((lb, j));
                    }
                }
            }
        }
        pending.sort_by(|x, y| x.0.total_cmp(&y.0));
        for &(lb, j) in &pending {
            if lb >= cmin || cmin <= cmax {
                break;
            }
            let gap = (p.time - bs[j].time).abs();
            cmin = cmin.min(gap.max(base.distance(&p.value, &bs[j].value)?));
        }
        cmax = cmax.max(cmin);
        if cmax >= cap {
            return Ok(cap);
        }
    }
    Ok(cmax)
}

pub fn hausdorff<P, M: BaseMetric<P> + ?Sized>(a: &GraphPointSet<P>, b: &GraphPointSet<P>, base: &M) -> Result<f64> {
    hausdorff_capped(a, b, base, f64::INFINITY)
}

/// `min(cap, H(A, B))`, symmetric by construction.
pub fn hausdorff_capped<P, M: BaseMetric<P> + ?Sized>(
    a: &GraphPointSet<P>,
    b: &GraphPointSet<P>,
    base: &M,
    cap: f64,
) -> Result<f64> {
    let ab = directed_hausdorff(a, b, base, cap)?;
    if ab >= cap {
        return Ok(cap);
    }
    let ba = directed_hausdorff(b, a, base, cap)?;
    Ok(ab.max(ba))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct J2Value {
    pub value: f64,
    pub grid_error_bound: f64,
}

/// `min(1, H)` on two sampled graphs; `drift_rate` bounds how fast points move along a graph.
pub fn j2_distance<P, M: BaseMetric<P> + ?Sized>(
    a: &GraphPointSet<P>,
    b: &GraphPointSet<P>,
    base: &M,
    drift_rate: f64,
) -> Result<J2Value> {
    let grid = a.grid.max(b.grid);
    Ok(J2Value {
        value: hausdorff_capped(a, b, base, 1.0)?,
        grid_error_bound: grid * (1.0 + drift_rate),
    })
}

fn check_grid(grid: f64) -> Result<()> {
    if grid.is_finite() && grid > 0.0 {
        Ok(())
    } else {
        Err(Error::InvalidParameter(alloc::format!("grid must be > 0 (got {grid})")))
    }
}

/// Grid samples, both one-sided values at every breakpoint, and the left limit at the horizon.
pub fn scalar_graph(f: &ScalarTrace, grid: f64) -> Result<GraphPointSet<f64>> {
    check_grid(grid)?;
    let h = f.horizon();
    // (time, 0 = left limit / 1 = value, value)
    let mut raw: Vec<(f64, u8, f64)> = Vec::new();
    let mut j = 0usize;
    loop {
        let t = j as f64 * grid;
        if t >= h {
            break;
        }
        raw.push((t, 1, f.value_at(t)?));
        j += 1;
    }
    for t in f.breakpoint_times() {
        raw.push((t, 0, f.left_limit(t)?));
        raw.push((t, 1, f.value_at(t)?));
    }
    raw.push((h, 0, f.left_limit(h)?));
    raw.sort_by(|x, y| x.0.total_cmp(&y.0).then(x.1.cmp(&y.1)));
    GraphPointSet::new(
        raw.into_iter().map(|(time, _, value)| GraphPoint { time, value }).collect(),
        grid,
    )
}

/// Graph samples of a timed trace, laid out as in [`scalar_graph`].
pub fn trace_graph(model: &GsmpModel, f: &TimedTrace, grid: f64) -> Result<GraphPointSet<GeneralizedState>> {
    check_grid(grid)?;
    let segs = f.segments();
    let mut points = Vec::new();
    let mut j = 0usize;
    for (i, seg) in segs.iter().enumerate() {
        if i > 0 {
            points.push(GraphPoint {
                time: seg.start_time,
                value: f.left_limit(model, seg.start_time)?,
            });
            points.push(GraphPoint {
                time: seg.start_time,
                value: seg.start.clone(),
            });
        }
        let end = seg.end_time().min(f.horizon());
        loop {
            let t = j as f64 * grid;
            if t >= end || t >= f.horizon() {
                break;
            }
            if t > seg.start_time || (i == 0 && t == 0.0) {
                points.push(GraphPoint {
                    time: t,
                    value: f.at(model, t)?,
                });
            }
            j += 1;
        }
    }
    points.push(GraphPoint {
        time: f.horizon(),
        value: f.left_limit(model, f.horizon())?,
    });
    GraphPointSet::new(points, grid)
}

/// J2 between scalar traces under `|x − y|`, truncated to the shorter horizon.
pub fn j2_scalar(f: &ScalarTrace, g: &ScalarTrace, grid: f64) -> Result<J2Value> {
    let h = f.horizon().min(g.horizon());
    let (f, g) = (f.truncated(h)?, g.truncated(h)?);
    let rate = f.max_slope().max(g.max_slope());
    j2_distance(&scalar_graph(&f, grid)?, &scalar_graph(&g, grid)?, &AbsDiff, rate)
}

/// J2 between timed traces of one model, truncated to the shorter horizon.
pub fn j2_traces<M: BaseMetric<GeneralizedState> + ?Sized>(
    model: &GsmpModel,
    f: &TimedTrace,
    g: &TimedTrace,
    base: &M,
    grid: f64,
) -> Result<J2Value> {
    let h = f.horizon().min(g.horizon());
    let (f, g) = (f.truncated(h)?, g.truncated(h)?);
    j2_distance(
        &trace_graph(model, &f, grid)?,
        &trace_graph(model, &g, grid)?,
        base,
        model.max_rate(),
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::Interpolation;
    use alloc::vec;
    use proptest::prelude::*;

    fn pts(v: &[(f64, f64)]) -> GraphPointSet<f64> {
        GraphPointSet::new(v.iter().map(|&(time, value)| GraphPoint { time, value }).collect(), 0.01).unwrap()
    }

    fn brute(a: &GraphPointSet<f64>, b: &GraphPointSet<f64>) -> f64 {
        let dir = |x: &GraphPointSet<f64>, y: &GraphPointSet<f64>| {
            x.points()
                .iter()
                .map(|p| {
                    y.points()
                        .iter()
                        .map(|q| (p.time - q.time).abs().max((p.value - q.value).abs()))
                        .fold(f64::INFINITY, f64::min)
                })
                .fold(0.0, f64::max)
        };
        dir(a, b).max(dir(b, a))
    }

    #[test]
    fn product_distance_examples() {
        let p = |time, value| GraphPoint { time, value };
        let d = |a, b| product_distance(&a, &b, &AbsDiff).unwrap();
        assert!((d(p(0.4, 0.2), p(0.5, 0.2)) - 0.1).abs() < 1e-15);
        assert!((d(p(1.0, 0.0), p(1.0, 0.3)) - 0.3).abs() < 1e-15);
        assert_eq!(d(p(0.0, 0.0), p(2.0, 0.3)), 2.0);
    }

    #[test]
    fn hausdorff_examples() {
        let a = pts(&[(0.0, 0.1), (0.5, 0.7), (1.0, 0.2)]);
        assert_eq!(hausdorff(&a, &a, &AbsDiff).unwrap(), 0.0);
        let x = pts(&[(0.0, 0.0)]);
        let y = pts(&[(0.0, 0.3)]);
        assert!((hausdorff(&x, &y, &AbsDiff).unwrap() - 0.3).abs() < 1e-15);
        let b = pts(&[(0.1, 0.5), (0.2, 0.0), (0.9, 0.9)]);
        assert_eq!(hausdorff(&a, &b, &AbsDiff).unwrap(), brute(&a, &b));
    }

    #[test]
    fn lazy_metric_agrees_with_eager() {
        // Forces every evaluation through the expensive path.
        struct Lazy;
        impl BaseMetric<f64> for Lazy {
            fn distance(&self, a: &f64, b: &f64) -> Result<f64> {
                Ok((a - b).abs())
            }
        }
        let a = pts(&[(0.0, 0.1), (0.3, 0.9), (0.5, 0.7), (1.0, 0.2)]);
        let b = pts(&[(0.1, 0.5), (0.2, 0.0), (0.6, 0.6), (0.9, 0.9)]);
        assert_eq!(hausdorff(&a, &b, &Lazy).unwrap(), brute(&a, &b));
    }

    #[test]
    fn step_examples() {
        let f = |b| ScalarTrace::step_at(b, 1.0).unwrap();
        let v = j2_scalar(&f(0.4), &f(0.5), DEFAULT_GRID).unwrap();
        assert!((v.value - 0.1).abs() < 1e-12);
        assert!((v.grid_error_bound - 0.01).abs() < 1e-15);
        // A spike of width 0.1 at 0.4 against the zero function.
        let spike = ScalarTrace::new(Interpolation::Step, vec![(0.0, 0.0), (0.4, 1.0), (0.5, 0.0)], 1.0).unwrap();
        let zero = ScalarTrace::constant(0.0, 1.0).unwrap();
        assert_eq!(j2_scalar(&spike, &zero, DEFAULT_GRID).unwrap().value, 1.0);
    }

    #[test]
    fn self_distance_is_zero() {
        let h = ScalarTrace::new(Interpolation::Linear, vec![(0.0, 0.0), (0.4, 0.0), (0.6, 1.0)], 1.0).unwrap();
        assert_eq!(j2_scalar(&h, &h, DEFAULT_GRID).unwrap().value, 0.0);
    }

    fn arb_step() -> impl Strategy<Value = ScalarTrace> {
        prop::collection::vec((0.01f64..0.99, 0.0f64..=1.0), 0..5).prop_flat_map(|mut v| {
            v.sort_by(|a, b| a.0.total_cmp(&b.0));
            v.dedup_by(|a, b| (a.0 - b.0).abs() < 1e-3);
            (0.0f64..=1.0).prop_map(move |v0| {
                let mut bp = vec![(0.0, v0)];
                bp.extend(v.iter().copied());
                ScalarTrace::new(Interpolation::Step, bp, 1.0).unwrap()
            })
        })
    }

    proptest! {
        #[test]
        fn symmetric(f in arb_step(), g in arb_step()) {
            let a = j2_scalar(&f, &g, 0.05).unwrap().value;
            let b = j2_scalar(&g, &f, 0.05).unwrap().value;
            prop_assert_eq!(a, b);
        }

        #[test]
        fn matches_brute_force(f in arb_step(), g in arb_step()) {
            let (a, b) = (scalar_graph(&f, 0.05).unwrap(), scalar_graph(&g, 0.05).unwrap());
            prop_assert_eq!(hausdorff(&a, &b, &AbsDiff).unwrap(), brute(&a, &b));
        }

        #[test]
        fn triangle_within_grid_error(f in arb_step(), g in arb_step(), h in arb_step()) {
            let grid = 0.02;
            let fg = j2_scalar(&f, &g, grid).unwrap();
            let gh = j2_scalar(&g, &h, grid).unwrap();
            let fh = j2_scalar(&f, &h, grid).unwrap();
            let slack = 2.0 * (fg.grid_error_bound + gh.grid_error_bound + fh.grid_error_bound);
            prop_assert!(fh.value <= fg.value + gh.value + slack);
        }

        #[test]
        fn monotone_in_base(f in arb_step(), g in arb_step(), s in 0.0f64..1.0) {
            let (a, b) = (scalar_graph(&f, 0.05).unwrap(), scalar_graph(&g, 0.05).unwrap());
            let big = hausdorff_capped(&a, &b, &AbsDiff, 1.0).unwrap();
            let small = hausdorff_capped(&a, &b, &FnMetric(|x: &f64, y: &f64| s * (x - y).abs()), 1.0).unwrap();
            prop_assert!(small <= big);
        }

        #[test]
        fn delay_bound(f in arb_step(), r in 0.0f64..0.5) {
            // Extend so both traces settle before the common horizon.
            let f = ScalarTrace::new(Interpolation::Step, f.breakpoints().to_vec(), 2.0).unwrap();
            let d = f.delayed(r).unwrap();
            let v = j2_scalar(&d, &f, 0.01).unwrap();
            prop_assert!(v.value <= r + v.grid_error_bound + 1e-12);
        }
    }
}
