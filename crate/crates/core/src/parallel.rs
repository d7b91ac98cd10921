//! Replica fan-out. Results come back in index order whatever the thread
//! count, so reductions over them are deterministic.

/// Evaluates `f(0..n)` and returns the results in index order.
///
/// `threads = 0` uses every available core; `1` runs inline.
pub fn map_indexed<T, F>(n: usize, threads: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    #[cfg(feature = "parallel")]
    {
        if threads != 1 && n > 1 {
            use rayon::prelude::*;
            let run = || (0..n).into_par_iter().map(&f).collect();
            if threads == 0 {
                return run();
            }
            if let Ok(pool) = rayon::ThreadPoolBuilder::new().num_threads(threads).build() {
                return pool.install(run);
            }
        }
    }
    let _ = threads;
    (0..n).map(f).collect()
}

#[cfg(test)]
mod tests {
    #[test]
    fn order_is_independent_of_threads() {
        let a = super::map_indexed(100, 1, |i| i * i);
        let b = super::map_indexed(100, 3, |i| i * i);
        let c = super::map_indexed(100, 0, |i| i * i);
        assert_eq!(a, b);
        assert_eq!(a, c);
    }
}
