//! Data-parallel kernels with a sequential fallback.
//!
//! Every reduction splits its input into fixed-size chunks, sums each chunk
//! left to right and then adds the chunk partials in chunk order. The
//! association pattern therefore does not depend on the thread count, and the
//! parallel and sequential paths return bit-identical results.
//!
//! With the `parallel` feature disabled, [`Exec::Parallel`] silently runs the
//! sequential path.

/// Number of elements summed sequentially inside one reduction chunk.
pub const CHUNK: usize = 2048;

/// Execution policy for the inner loops.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Exec {
    Sequential,
    Parallel,
}

impl Default for Exec {
    fn default() -> Self {
        if cfg!(feature = "parallel") {
            Exec::Parallel
        } else {
            Exec::Sequential
        }
    }
}

impl Exec {
    /// True when work will actually be spread over the rayon pool.
    pub fn is_parallel(self) -> bool {
        cfg!(feature = "parallel") && self == Exec::Parallel
    }

    /// Fills `out[i] = f(i)`.
    pub fn fill<F>(self, out: &mut [f64], f: F)
    where
        F: Fn(usize) -> f64 + Sync + Send,
    {
        #[cfg(feature = "parallel")]
        if self.is_parallel() && out.len() > CHUNK {
            use rayon::prelude::*;
            out.par_chunks_mut(CHUNK)
                .enumerate()
                .for_each(|(c, chunk)| {
                    let base = c * CHUNK;
                    for (k, o) in chunk.iter_mut().enumerate() {
                        *o = f(base + k);
                    }
                });
            return;
        }
        for (i, o) in out.iter_mut().enumerate() {
            *o = f(i);
        }
    }

    /// Deterministic sum of `f(i)` for `i in 0..len`.
    pub fn sum<F>(self, len: usize, f: F) -> f64
    where
        F: Fn(usize) -> f64 + Sync + Send,
    {
        let chunks = len.div_ceil(CHUNK);
        let partial = |c: usize| {
            let lo = c * CHUNK;
            let hi = (lo + CHUNK).min(len);
            let mut s = 0.0;
            for i in lo..hi {
                s += f(i);
            }
            s
        };
        #[cfg(feature = "parallel")]
        if self.is_parallel() && chunks > 1 {
            use rayon::prelude::*;
            let partials: Vec<f64> = (0..chunks).into_par_iter().map(partial).collect();
            return partials.iter().sum();
        }
        let mut total = 0.0;
        for c in 0..chunks {
            total += partial(c);
        }
        total
    }

    /// Deterministic maximum of `f(i)`; `f64::NEG_INFINITY` for empty input.
    pub fn max<F>(self, len: usize, f: F) -> f64
    where
        F: Fn(usize) -> f64 + Sync + Send,
    {
        #[cfg(feature = "parallel")]
        if self.is_parallel() && len > CHUNK {
            use rayon::prelude::*;
            return (0..len)
                .into_par_iter()
                .with_min_len(CHUNK)
                .map(f)
                .reduce(|| f64::NEG_INFINITY, f64::max);
        }
        (0..len).map(f).fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn dot(self, a: &[f64], b: &[f64]) -> f64 {
        debug_assert_eq!(a.len(), b.len());
        self.sum(a.len(), |i| a[i] * b[i])
    }

    pub fn norm2(self, a: &[f64]) -> f64 {
        self.dot(a, a).sqrt()
    }

    /// `y += alpha * x`
    pub fn axpy(self, alpha: f64, x: &[f64], y: &mut [f64]) {
        debug_assert_eq!(x.len(), y.len());
        #[cfg(feature = "parallel")]
        if self.is_parallel() && y.len() > CHUNK {
            use rayon::prelude::*;
            y.par_chunks_mut(CHUNK)
                .zip(x.par_chunks(CHUNK))
                .for_each(|(yc, xc)| {
                    for (yi, xi) in yc.iter_mut().zip(xc) {
                        *yi += alpha * xi;
                    }
                });
            return;
        }
        for (yi, xi) in y.iter_mut().zip(x) {
            *yi += alpha * xi;
        }
    }

    /// Maps `f` over `items`, preserving order.
    pub fn map_collect<T, R, F>(self, items: &[T], f: F) -> Vec<R>
    where
        T: Sync,
        R: Send,
        F: Fn(&T) -> R + Sync + Send,
    {
        #[cfg(feature = "parallel")]
        if self.is_parallel() {
            use rayon::prelude::*;
            return items.par_iter().map(f).collect();
        }
        items.iter().map(f).collect()
    }
}

/// Max-norm of a vector.
pub fn norm_inf(a: &[f64]) -> f64 {
    a.iter().fold(0.0_f64, |m, x| m.max(x.abs()))
}
