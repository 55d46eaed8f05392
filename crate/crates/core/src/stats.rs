//! Small statistics helpers: means and percentile bootstrap intervals.

use alloc::vec::Vec;

use rand::{Rng, RngCore};

pub fn mean(xs: &[f64]) -> f64 {
    if xs.is_empty() {
        return f64::NAN;
    }
    xs.iter().sum::<f64>() / xs.len() as f64
}

/// Linear-interpolation quantile of sorted data, `p ∈ [0, 1]`.
pub fn quantile(sorted: &[f64], p: f64) -> f64 {
    match sorted.len() {
        0 => f64::NAN,
        1 => sorted[0],
        n => {
            let h = p.clamp(0.0, 1.0) * (n - 1) as f64;
            let lo = libm::floor(h) as usize;
            let hi = (lo + 1).min(n - 1);
            sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Interval {
    pub lo: f64,
    pub hi: f64,
}

impl Interval {
    pub fn half_width(&self) -> f64 {
        (self.hi - self.lo) / 2.0
    }
}

/// Percentile interval from bootstrap replicate values.
pub fn percentile_interval(mut replicates: Vec<f64>, confidence: f64) -> Interval {
    replicates.sort_by(f64::total_cmp);
    let tail = (1.0 - confidence) / 2.0;
    Interval {
        lo: quantile(&replicates, tail),
        hi: quantile(&replicates, 1.0 - tail),
    }
}

/// Resamples `0..n` with replacement `reps` times and evaluates `stat` on the index multiset.
pub fn bootstrap<R, F>(n: usize, reps: usize, rng: &mut R, mut stat: F) -> Vec<f64>
where
    R: RngCore + ?Sized,
    F: FnMut(&[usize]) -> f64,
{
    let mut idx = alloc::vec![0usize; n];
    (0..reps)
        .map(|_| {
            for slot in idx.iter_mut() {
                *slot = rng.random_range(0..n);
            }
            stat(&idx)
        })
        .collect()
}

/// Percentile bootstrap interval for the mean.
pub fn mean_ci<R: RngCore + ?Sized>(xs: &[f64], reps: usize, confidence: f64, rng: &mut R) -> Interval {
    if xs.len() < 2 || reps == 0 {
        let m = mean(xs);
        return Interval { lo: m, hi: m };
    }
    let reps = bootstrap(xs.len(), reps, rng, |idx| idx.iter().map(|&i| xs[i]).sum::<f64>() / idx.len() as f64);
    percentile_interval(reps, confidence)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn quantiles() {
        let xs = [1.0, 2.0, 3.0, 4.0];
        assert_eq!(quantile(&xs, 0.0), 1.0);
        assert_eq!(quantile(&xs, 1.0), 4.0);
        assert!((quantile(&xs, 0.5) - 2.5).abs() < 1e-15);
    }

    #[test]
    fn constant_data_has_zero_width() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let ci = mean_ci(&[0.3; 20], 100, 0.95, &mut rng);
        assert_eq!(ci.half_width(), 0.0);
    }

    #[test]
    fn interval_covers_mean() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let xs: alloc::vec::Vec<f64> = (0..100).map(|i| (i % 10) as f64).collect();
        let ci = mean_ci(&xs, 500, 0.95, &mut rng);
        assert!(ci.lo < 4.5 && 4.5 < ci.hi);
        assert!(ci.half_width() < 1.5);
    }
}
