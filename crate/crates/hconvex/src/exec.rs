use hconvex_core::envelope::Executor;
use rayon::prelude::*;

/// Node-parallel executor on a dedicated rayon pool.
///
/// Results come back in index order and the reported error is the one with
/// the lowest failing index, so output does not depend on the worker count.
pub struct Parallel {
    pool: rayon::ThreadPool,
}

impl Parallel {
    /// `threads = None` uses rayon's default (one worker per core).
    pub fn new(threads: Option<usize>) -> Result<Self, rayon::ThreadPoolBuildError> {
        let mut b = rayon::ThreadPoolBuilder::new();
        if let Some(n) = threads {
            b = b.num_threads(n.max(1));
        }
        Ok(Parallel { pool: b.build()? })
    }

    pub fn threads(&self) -> usize {
        self.pool.current_num_threads()
    }
}

impl Executor for Parallel {
    fn map_nodes(
        &self,
        n: usize,
        kernel: &(dyn Fn(usize) -> hconvex_core::Result<f64> + Sync),
    ) -> hconvex_core::Result<Vec<f64>> {
        let out: Vec<hconvex_core::Result<f64>> = self.pool.install(|| (0..n).into_par_iter().map(kernel).collect());
        out.into_iter().collect()
    }
}
