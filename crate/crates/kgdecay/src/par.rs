//! Execution policy for the data-parallel kernels.
//!
//! `Parallel` uses rayon when the `parallel` feature is enabled and silently
//! runs sequentially otherwise, so callers never need to cfg-gate.

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Execution {
    Sequential,
    #[default]
    Parallel,
}

/// Below this many elements a pointwise kernel is not worth splitting.
pub(crate) const MIN_CHUNK: usize = 2048;

impl Execution {
    pub fn is_parallel(self) -> bool {
        cfg!(feature = "parallel") && self == Execution::Parallel
    }

    /// `(0..n).map(f).collect()`, possibly in parallel. Order is preserved.
    pub fn map<R, F>(self, n: usize, f: F) -> Vec<R>
    where
        R: Send,
        F: Fn(usize) -> R + Sync + Send,
    {
        #[cfg(feature = "parallel")]
        if self.is_parallel() {
            use rayon::prelude::*;
            return (0..n).into_par_iter().map(f).collect();
        }
        (0..n).map(f).collect()
    }

    /// Apply `f(offset, chunk)` to consecutive chunks of `data`.
    pub fn for_chunks<T, F>(self, data: &mut [T], chunk: usize, f: F)
    where
        T: Send,
        F: Fn(usize, &mut [T]) + Sync + Send,
    {
        let chunk = chunk.max(1);
        #[cfg(feature = "parallel")]
        if self.is_parallel() && data.len() > chunk {
            use rayon::prelude::*;
            data.par_chunks_mut(chunk)
                .enumerate()
                .for_each(|(i, c)| f(i * chunk, c));
            return;
        }
        for (i, c) in data.chunks_mut(chunk).enumerate() {
            f(i * chunk, c);
        }
    }

    /// Pointwise fill of `out[i] = f(i)`.
    pub fn fill<F>(self, out: &mut [f64], f: F)
    where
        F: Fn(usize) -> f64 + Sync + Send,
    {
        self.for_chunks(out, MIN_CHUNK, |off, c| {
            for (i, x) in c.iter_mut().enumerate() {
                *x = f(off + i);
            }
        });
    }
}

/// Run `f` with at most `jobs` worker threads for `Parallel` work. Without
/// the `parallel` feature, or with `jobs == 0`, this just calls `f`.
pub fn with_jobs<R: Send>(jobs: usize, f: impl FnOnce() -> R + Send) -> crate::error::Result<R> {
    #[cfg(feature = "parallel")]
    if jobs > 0 {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(jobs)
            .build()
            .map_err(|e| crate::error::Error::Unsupported(format!("thread pool: {e}")))?;
        return Ok(pool.install(f));
    }
    let _ = jobs;
    Ok(f())
}
