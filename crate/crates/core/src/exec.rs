//! Order-preserving map over independent work items.
//!
//! With the `parallel` feature the map runs on a rayon pool of the
//! requested size; without it (or with one worker) it runs in place.

/// Worker count used when none is given: the available parallelism.
pub fn default_workers() -> usize {
    std::thread::available_parallelism().map_or(1, |n| n.get())
}

/// Applies `f` to every item and returns results in input order.
/// `workers == 0` means [`default_workers`].
pub fn ordered_map<T, R, F>(items: &[T], workers: usize, f: F) -> Vec<R>
where
    T: Sync,
    R: Send,
    F: Fn(&T) -> R + Sync + Send,
{
    let workers = if workers == 0 { default_workers() } else { workers };
    if workers <= 1 {
        return items.iter().map(f).collect();
    }
    parallel_map(items, workers, f)
}

#[cfg(feature = "parallel")]
fn parallel_map<T, R, F>(items: &[T], workers: usize, f: F) -> Vec<R>
where
    T: Sync,
    R: Send,
    F: Fn(&T) -> R + Sync + Send,
{
    use rayon::prelude::*;
    match rayon::ThreadPoolBuilder::new().num_threads(workers).build() {
        Ok(pool) => pool.install(|| items.par_iter().map(&f).collect()),
        Err(_) => items.iter().map(f).collect(),
    }
}

#[cfg(not(feature = "parallel"))]
fn parallel_map<T, R, F>(items: &[T], _workers: usize, f: F) -> Vec<R>
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
    fn order_is_preserved_for_any_worker_count() {
        let items: Vec<u64> = (0..1000).collect();
        let expected: Vec<u64> = items.iter().map(|x| x * x + 1).collect();
        for workers in [0, 1, 2, 8] {
            assert_eq!(ordered_map(&items, workers, |x| x * x + 1), expected);
        }
    }

    #[test]
    fn empty_input() {
        let out: Vec<u8> = ordered_map(&[] as &[u8], 4, |x| *x);
        assert!(out.is_empty());
    }
}
