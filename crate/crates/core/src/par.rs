//! Data-parallel helpers with a sequential fallback.
//!
//! With the `parallel` feature (default) and `workers != 1` the work runs on
//! the current rayon pool; otherwise it runs on the calling thread. Results
//! keep input order either way.

#[cfg(feature = "parallel")]
use rayon::prelude::*;

/// Whether `workers` selects the parallel path in this build.
pub fn is_parallel(workers: usize) -> bool {
    cfg!(feature = "parallel") && workers != 1
}

#[cfg(feature = "parallel")]
pub fn map<T, R, F>(items: &[T], workers: usize, f: F) -> Vec<R>
where
    T: Sync,
    R: Send,
    F: Fn(&T) -> R + Sync + Send,
{
    if workers == 1 {
        items.iter().map(f).collect()
    } else {
        items.par_iter().map(f).collect()
    }
}

#[cfg(not(feature = "parallel"))]
pub fn map<T, R, F>(items: &[T], _workers: usize, f: F) -> Vec<R>
where
    T: Sync,
    R: Send,
    F: Fn(&T) -> R + Sync + Send,
{
    items.iter().map(f).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn order_is_preserved() {
        let v: Vec<u32> = (0..1000).collect();
        assert_eq!(map(&v, 0, |x| x * 2), map(&v, 1, |x| x * 2));
    }
}
