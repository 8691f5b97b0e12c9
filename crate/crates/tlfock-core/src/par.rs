//! Data-parallel map helpers with a sequential fallback.
//!
//! With the default `parallel` feature the maps run on a dedicated rayon
//! pool whose size is capped by the `TLFOCK_THREADS` environment variable
//! (unset or 0 means the rayon default). Without the feature the same
//! functions run sequentially, so callers are oblivious to the mode.
//!
//! Per-level verification work (relation residuals, bi-level defects,
//! per-degree norms) is embarrassingly parallel; construction of the
//! fiber chain itself is inherently sequential and does not come through
//! here.

/// Number of worker threads the parallel maps will use.
pub fn thread_count() -> usize {
    #[cfg(feature = "parallel")]
    {
        pool().current_num_threads()
    }
    #[cfg(not(feature = "parallel"))]
    {
        1
    }
}

/// Applies `f` to every element, in parallel when the `parallel` feature
/// is enabled. Output order matches input order in both modes.
pub fn par_map<I, O, F>(items: &[I], f: F) -> Vec<O>
where
    I: Sync,
    O: Send,
    F: Fn(&I) -> O + Sync + Send,
{
    #[cfg(feature = "parallel")]
    {
        use rayon::prelude::*;
        pool().install(|| items.par_iter().map(f).collect())
    }
    #[cfg(not(feature = "parallel"))]
    {
        items.iter().map(f).collect()
    }
}

/// Applies `f` to every element sequentially regardless of the feature
/// set — the reference path the parallel map is benchmarked against.
pub fn seq_map<I, O, F>(items: &[I], f: F) -> Vec<O>
where
    F: Fn(&I) -> O,
{
    items.iter().map(f).collect()
}

/// Applies `f` to every index of a range, in parallel when enabled.
/// Output order matches index order in both modes.
pub fn par_map_range<O, F>(range: std::ops::Range<usize>, f: F) -> Vec<O>
where
    O: Send,
    F: Fn(usize) -> O + Sync + Send,
{
    #[cfg(feature = "parallel")]
    {
        use rayon::prelude::*;
        pool().install(|| range.into_par_iter().map(f).collect())
    }
    #[cfg(not(feature = "parallel"))]
    {
        range.map(f).collect()
    }
}

#[cfg(feature = "parallel")]
fn pool() -> &'static rayon::ThreadPool {
    use std::sync::OnceLock;
    static POOL: OnceLock<rayon::ThreadPool> = OnceLock::new();
    POOL.get_or_init(|| {
        let threads = std::env::var("TLFOCK_THREADS")
            .ok()
            .and_then(|s| s.parse::<usize>().ok())
            .unwrap_or(0);
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .expect("rayon pool construction cannot fail with default stack sizes")
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn par_map_preserves_order() {
        let items: Vec<usize> = (0..100).collect();
        let doubled = par_map(&items, |&x| 2 * x);
        assert_eq!(doubled, (0..100).map(|x| 2 * x).collect::<Vec<_>>());
    }

    #[test]
    fn sequential_map_agrees_with_the_parallel_one() {
        let items: Vec<usize> = (0..64).collect();
        assert_eq!(par_map(&items, |&x| x * x + 1), seq_map(&items, |&x| x * x + 1));
    }

    #[test]
    fn par_map_range_preserves_order() {
        let squares = par_map_range(0..50, |i| i * i);
        assert_eq!(squares, (0..50).map(|i| i * i).collect::<Vec<_>>());
    }

    #[test]
    fn thread_count_is_positive() {
        assert!(thread_count() >= 1);
    }
}
