//! Real-valued traces on `[0, horizon)` with values in `[0, 1]`.

use alloc::format;
use alloc::vec::Vec;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Interpolation {
    /// Value `v_k` holds on `[t_k, t_{k+1})`.
    Step,
    /// Linear between breakpoints, constant after the last one.
    Linear,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScalarTrace {
    kind: Interpolation,
    breakpoints: Vec<(f64, f64)>,
    horizon: f64,
}

impl ScalarTrace {
    pub fn new(kind: Interpolation, breakpoints: Vec<(f64, f64)>, horizon: f64) -> Result<Self> {
        if !(horizon.is_finite() && horizon > 0.0) {
            return Err(Error::InvalidTrace(format!("horizon must be > 0 (got {horizon})")));
        }
        match breakpoints.first() {
            Some(&(t, _)) if t == 0.0 => {}
            _ => return Err(Error::InvalidTrace("first breakpoint must be at t = 0".into())),
        }
        for w in breakpoints.windows(2) {
            if !(w[1].0 > w[0].0) {
                return Err(Error::InvalidTrace("breakpoint times must increase strictly".into()));
            }
        }
        for &(t, v) in &breakpoints {
            if !(0.0..=1.0).contains(&v) {
                return Err(Error::InvalidTrace(format!("value {v} at t = {t} is outside [0, 1]")));
            }
            if t > horizon {
                return Err(Error::InvalidTrace(format!("breakpoint {t} lies beyond the horizon")));
            }
        }
        Ok(Self {
            kind,
            breakpoints,
            horizon,
        })
    }

    pub fn constant(value: f64, horizon: f64) -> Result<Self> {
        Self::new(Interpolation::Step, alloc::vec![(0.0, value)], horizon)
    }

    /// Unit step `0` on `[0, b)`, `1` on `[b, horizon)`.
    pub fn step_at(b: f64, horizon: f64) -> Result<Self> {
        if b <= 0.0 {
            return Self::constant(1.0, horizon);
        }
        Self::new(Interpolation::Step, alloc::vec![(0.0, 0.0), (b, 1.0)], horizon)
    }

    pub fn kind(&self) -> Interpolation {
        self.kind
    }

    pub fn breakpoints(&self) -> &[(f64, f64)] {
        &self.breakpoints
    }

    pub fn horizon(&self) -> f64 {
        self.horizon
    }

    fn check_time(&self, t: f64, left: bool) -> Result<()> {
        let ok = if left {
            t > 0.0 && t <= self.horizon
        } else {
            t >= 0.0 && t < self.horizon
        };
        if ok {
            Ok(())
        } else {
            Err(Error::OutOfHorizon {
                time: t,
                horizon: self.horizon,
            })
        }
    }

    fn eval(&self, t: f64, left: bool) -> f64 {
        let bp = &self.breakpoints;
        let k = if left {
            bp.partition_point(|&(s, _)| s < t)
        } else {
            bp.partition_point(|&(s, _)| s <= t)
        }
        .max(1)
            - 1;
        match self.kind {
            Interpolation::Step => bp[k].1,
            Interpolation::Linear => match bp.get(k + 1) {
                Some(&(t1, v1)) => {
                    let (t0, v0) = bp[k];
                    v0 + (v1 - v0) * (t - t0) / (t1 - t0)
                }
                None => bp[k].1,
            },
        }
    }

    pub fn value_at(&self, t: f64) -> Result<f64> {
        self.check_time(t, false)?;
        Ok(self.eval(t, false))
    }

    pub fn left_limit(&self, t: f64) -> Result<f64> {
        self.check_time(t, true)?;
        Ok(self.eval(t, true))
    }

    /// Times in `(0, horizon)` where the value actually jumps.
    pub fn jump_times(&self) -> Vec<f64> {
        match self.kind {
            Interpolation::Linear => Vec::new(),
            Interpolation::Step => self
                .breakpoints
                .windows(2)
                .filter(|w| w[1].1 != w[0].1 && w[1].0 < self.horizon)
                .map(|w| w[1].0)
                .collect(),
        }
    }

    /// Breakpoint times strictly inside the horizon (kinks included).
    pub fn breakpoint_times(&self) -> Vec<f64> {
        self.breakpoints
            .iter()
            .map(|&(t, _)| t)
            .filter(|&t| t > 0.0 && t < self.horizon)
            .collect()
    }

    pub fn max_slope(&self) -> f64 {
        match self.kind {
            Interpolation::Step => 0.0,
            Interpolation::Linear => self
                .breakpoints
                .windows(2)
                .map(|w| ((w[1].1 - w[0].1) / (w[1].0 - w[0].0)).abs())
                .fold(0.0, f64::max),
        }
    }

    pub fn truncated(&self, horizon: f64) -> Result<Self> {
        if !(horizon > 0.0 && horizon <= self.horizon) {
            return Err(Error::OutOfHorizon {
                time: horizon,
                horizon: self.horizon,
            });
        }
        let mut bp: Vec<_> = self.breakpoints.iter().copied().filter(|&(t, _)| t < horizon).collect();
        if self.kind == Interpolation::Linear && horizon < self.horizon {
            bp.push((horizon, self.eval(horizon, true)));
        }
        Self::new(self.kind, bp, horizon)
    }

    /// `delay_u(f)` with a constant prefix `u ≡ f(0)`.
    pub fn delayed(&self, r: f64) -> Result<Self> {
        if !(r.is_finite() && r >= 0.0) {
            return Err(Error::BadDuration(r));
        }
        if r == 0.0 {
            return Ok(self.clone());
        }
        let mut bp = alloc::vec![(0.0, self.breakpoints[0].1)];
        bp.extend(self.breakpoints.iter().map(|&(t, v)| (t + r, v)));
        Self::new(self.kind, bp, self.horizon + r)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    #[test]
    fn step_evaluation() {
        let f = ScalarTrace::step_at(0.5, 1.0).unwrap();
        assert_eq!(f.value_at(0.0).unwrap(), 0.0);
        assert_eq!(f.value_at(0.49).unwrap(), 0.0);
        assert_eq!(f.value_at(0.5).unwrap(), 1.0);
        assert_eq!(f.left_limit(0.5).unwrap(), 0.0);
        assert_eq!(f.left_limit(1.0).unwrap(), 1.0);
        assert_eq!(f.jump_times(), vec![0.5]);
        assert!(f.value_at(1.0).is_err());
    }

    #[test]
    fn linear_evaluation() {
        let h = ScalarTrace::new(Interpolation::Linear, vec![(0.0, 0.0), (0.4, 0.0), (0.6, 1.0)], 1.0).unwrap();
        assert!((h.value_at(0.5).unwrap() - 0.5).abs() < 1e-12);
        assert_eq!(h.value_at(0.8).unwrap(), 1.0);
        assert!((h.max_slope() - 5.0).abs() < 1e-12);
        assert!(h.jump_times().is_empty());
    }

    #[test]
    fn rejects_bad_input() {
        assert!(ScalarTrace::new(Interpolation::Step, vec![(0.1, 0.0)], 1.0).is_err());
        assert!(ScalarTrace::new(Interpolation::Step, vec![(0.0, 1.5)], 1.0).is_err());
        assert!(ScalarTrace::new(Interpolation::Step, vec![(0.0, 0.0), (0.0, 1.0)], 1.0).is_err());
    }

    #[test]
    fn delay_shifts() {
        let f = ScalarTrace::step_at(0.5, 1.0).unwrap();
        let d = f.delayed(0.25).unwrap();
        assert_eq!(d.horizon(), 1.25);
        assert_eq!(d.value_at(0.7).unwrap(), 0.0);
        assert_eq!(d.value_at(0.75).unwrap(), 1.0);
    }

    #[test]
    fn truncating_linear_keeps_values() {
        let h = ScalarTrace::new(Interpolation::Linear, vec![(0.0, 0.0), (1.0, 1.0)], 2.0).unwrap();
        let t = h.truncated(0.5).unwrap();
        assert!((t.left_limit(0.5).unwrap() - 0.5).abs() < 1e-12);
        assert!((t.value_at(0.25).unwrap() - 0.25).abs() < 1e-12);
    }
}
