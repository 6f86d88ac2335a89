//! Data-parallel loop helpers.
//!
//! With the `parallel` feature the macros expand to rayon iterators; without
//! it they expand to the equivalent sequential `std` iterators. Reductions go
//! through [`map_sum`] and [`map_max`] so floating-point results do not depend
//! on thread scheduling.

macro_rules! par_chunks_mut {
    ($s:expr, $n:expr) => {{
        #[cfg(feature = "parallel")]
        {
            rayon::slice::ParallelSliceMut::par_chunks_mut(&mut $s[..], $n)
        }
        #[cfg(not(feature = "parallel"))]
        {
            $s[..].chunks_mut($n)
        }
    }};
}

macro_rules! par_iter_mut {
    ($s:expr) => {{
        #[cfg(feature = "parallel")]
        {
            rayon::iter::IntoParallelRefMutIterator::par_iter_mut(&mut $s[..])
        }
        #[cfg(not(feature = "parallel"))]
        {
            $s[..].iter_mut()
        }
    }};
}

macro_rules! par_iter {
    ($s:expr) => {{
        #[cfg(feature = "parallel")]
        {
            rayon::iter::IntoParallelRefIterator::par_iter(&$s[..])
        }
        #[cfg(not(feature = "parallel"))]
        {
            $s[..].iter()
        }
    }};
}

macro_rules! par_range {
    ($r:expr) => {{
        #[cfg(feature = "parallel")]
        {
            rayon::iter::IntoParallelIterator::into_par_iter($r)
        }
        #[cfg(not(feature = "parallel"))]
        {
            $r.into_iter()
        }
    }};
}

pub(crate) use {par_chunks_mut, par_iter, par_iter_mut, par_range};

/// Glob-import this to get the macros and, when enabled, the rayon traits
/// their chained adaptors need.
pub(crate) mod prelude {
    #[allow(unused_imports)]
    pub(crate) use super::{par_chunks_mut, par_iter, par_iter_mut, par_range};
    #[cfg(feature = "parallel")]
    #[allow(unused_imports)]
    pub(crate) use rayon::iter::{IndexedParallelIterator, ParallelIterator};
}

#[allow(unused_imports)]
use prelude::*;

/// Block size for deterministic reductions.
const REDUCE_BLOCK: usize = 4096;

/// Sum of `f(i)` over `0..len`, evaluated in fixed-size blocks whose partial
/// sums are combined in order.
pub fn map_sum<F>(len: usize, f: F) -> f64
where
    F: Fn(usize) -> f64 + Sync + Send,
{
    let blocks = len.div_ceil(REDUCE_BLOCK);
    let partial: Vec<f64> = par_range!(0..blocks)
        .map(|b| {
            let lo = b * REDUCE_BLOCK;
            let hi = (lo + REDUCE_BLOCK).min(len);
            (lo..hi).map(&f).sum::<f64>()
        })
        .collect();
    partial.iter().sum()
}

/// Maximum of `f(i)` over `0..len`; 0 for an empty range. NaN propagates.
pub fn map_max<F>(len: usize, f: F) -> f64
where
    F: Fn(usize) -> f64 + Sync + Send,
{
    let blocks = len.div_ceil(REDUCE_BLOCK);
    let partial: Vec<f64> = par_range!(0..blocks)
        .map(|b| {
            let lo = b * REDUCE_BLOCK;
            let hi = (lo + REDUCE_BLOCK).min(len);
            (lo..hi).map(&f).fold(0.0, nan_max)
        })
        .collect();
    partial.into_iter().fold(0.0, nan_max)
}

#[inline]
pub(crate) fn nan_max(a: f64, b: f64) -> f64 {
    if a.is_nan() || b.is_nan() {
        f64::NAN
    } else {
        a.max(b)
    }
}

/// Apply `f(i, &mut out[i])` for every element.
pub fn fill_indexed<T, F>(out: &mut [T], f: F)
where
    T: Send,
    F: Fn(usize, &mut T) + Sync + Send,
{
    par_iter_mut!(out).enumerate().for_each(|(i, o)| f(i, o));
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sum_is_blockwise_and_exact_on_integers() {
        let s = map_sum(10_001, |i| i as f64);
        assert_eq!(s, (10_000.0 * 10_001.0) / 2.0);
    }

    #[test]
    fn max_of_empty_is_zero_and_nan_propagates() {
        assert_eq!(map_max(0, |_| 1.0), 0.0);
        assert!(map_max(5, |i| if i == 3 { f64::NAN } else { 1.0 }).is_nan());
        assert_eq!(map_max(9000, |i| i as f64), 8999.0);
    }
}
