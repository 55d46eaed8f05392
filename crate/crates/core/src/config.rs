/// Numeric tolerances and guards shared by every module.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tolerances {
    /// Allowed deviation of a probability row (or distribution) from total mass 1.
    pub mass: f64,
    /// Two clocks whose expiry times differ by at most this much are a tie.
    pub tie: f64,
    /// How many times `step` redraws fresh clocks before giving up on a tie.
    pub reset_retries: u32,
    /// Maximum number of events in one sampled trace.
    pub zeno_guard: usize,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            mass: 1e-9,
            tie: 1e-12,
            reset_retries: 100,
            zeno_guard: 1_000_000,
        }
    }
}
