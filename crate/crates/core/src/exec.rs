//! Data-parallel loop helpers.
//!
//! With the `parallel` feature (default) these run on the rayon pool;
//! without it they are plain sequential loops. Reductions are blocked with a
//! fixed block size and the partial results are combined in index order, so
//! floating-point results are bit-identical between the two builds and
//! independent of the thread count.

#[cfg(feature = "parallel")]
use rayon::prelude::*;

/// Reduction block length.
pub const BLOCK: usize = 2048;

/// `(0..n).map(f).collect()`, in parallel when enabled.
pub fn map_indices<T, F>(n: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    #[cfg(feature = "parallel")]
    {
        (0..n).into_par_iter().map(f).collect()
    }
    #[cfg(not(feature = "parallel"))]
    {
        (0..n).map(f).collect()
    }
}

/// Applies `f(i, &mut out[i])` to every slot.
pub fn for_each_mut<T, F>(out: &mut [T], f: F)
where
    T: Send,
    F: Fn(usize, &mut T) + Sync + Send,
{
    #[cfg(feature = "parallel")]
    {
        out.par_iter_mut().enumerate().for_each(|(i, v)| f(i, v));
    }
    #[cfg(not(feature = "parallel"))]
    {
        out.iter_mut().enumerate().for_each(|(i, v)| f(i, v));
    }
}

/// Deterministic `sum_{i<n} f(i)`.
pub fn sum<F>(n: usize, f: F) -> f64
where
    F: Fn(usize) -> f64 + Sync + Send,
{
    let blocks = n.div_ceil(BLOCK);
    let partial = map_indices(blocks, |b| {
        let end = ((b + 1) * BLOCK).min(n);
        (b * BLOCK..end).map(&f).sum::<f64>()
    });
    partial.into_iter().sum()
}

/// `max_{i<n} f(i)`, or `f64::NEG_INFINITY` for `n == 0`. NaN entries are skipped.
pub fn max<F>(n: usize, f: F) -> f64
where
    F: Fn(usize) -> f64 + Sync + Send,
{
    let blocks = n.div_ceil(BLOCK);
    let partial = map_indices(blocks, |b| {
        let end = ((b + 1) * BLOCK).min(n);
        (b * BLOCK..end).map(&f).fold(f64::NEG_INFINITY, f64::max)
    });
    partial.into_iter().fold(f64::NEG_INFINITY, f64::max)
}

/// Euclidean inner product with the same blocking as [`sum`].
pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    sum(a.len(), |i| a[i] * b[i])
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn blocked_sum_matches_sequential_order_of_blocks() {
        let n = 3 * BLOCK + 17;
        let f = |i: usize| 1.0 / (1.0 + i as f64);
        let mut expect = 0.0;
        for b in 0..n.div_ceil(BLOCK) {
            let end = ((b + 1) * BLOCK).min(n);
            expect += (b * BLOCK..end).map(f).sum::<f64>();
        }
        assert_eq!(sum(n, f).to_bits(), expect.to_bits());
    }

    #[test]
    fn empty_reductions() {
        assert_eq!(sum(0, |_| 1.0), 0.0);
        assert_eq!(max(0, |_| 1.0), f64::NEG_INFINITY);
    }

    #[test]
    fn max_and_map() {
        let v = map_indices(10, |i| (i as f64 - 4.0).abs());
        assert_eq!(v[0], 4.0);
        assert_eq!(max(10, |i| v[i]), 5.0);
    }
}
