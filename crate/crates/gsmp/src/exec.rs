//! Thread-pool executor.

use gsmp_core::exec::Executor;
use rayon::prelude::*;

pub struct Pool(rayon::ThreadPool);

impl Pool {
    /// `jobs = 0` uses one worker per available core.
    pub fn new(jobs: usize) -> Result<Self, rayon::ThreadPoolBuildError> {
        Ok(Self(rayon::ThreadPoolBuilder::new().num_threads(jobs).build()?))
    }

    pub fn threads(&self) -> usize {
        self.0.current_num_threads()
    }
}

impl Executor for Pool {
    fn map<T, F>(&self, len: usize, f: F) -> Vec<T>
    where
        T: Send,
        F: Fn(usize) -> T + Sync + Send,
    {
        self.0.install(|| (0..len).into_par_iter().map(f).collect())
    }
}
