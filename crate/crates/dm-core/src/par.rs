//! Deterministic fork-join helper.
//!
//! Work items are mapped on up to `jobs` workers with a fixed block
//! assignment, and results are returned in input order, so the output is
//! identical no matter how many workers run.

/// Maps `f` over `0..n`, optionally on several threads.
///
/// Results come back in index order. `f` must be `Sync` because several
/// workers may call it concurrently.
pub fn map_indexed<T, F>(n: usize, jobs: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync,
{
    let jobs = jobs.max(1).min(n.max(1));
    if jobs <= 1 || n <= 1 {
        return (0..n).map(f).collect();
    }
    let mut out: Vec<Option<T>> = Vec::with_capacity(n);
    out.resize_with(n, || None);
    let chunk = n.div_ceil(jobs);
    std::thread::scope(|scope| {
        let fref = &f;
        let mut rest = out.as_mut_slice();
        let mut start = 0;
        let mut handles = Vec::new();
        while !rest.is_empty() {
            let take = chunk.min(rest.len());
            let (head, tail) = rest.split_at_mut(take);
            rest = tail;
            let base = start;
            start += take;
            handles.push(scope.spawn(move || {
                for (off, slot) in head.iter_mut().enumerate() {
                    *slot = Some(fref(base + off));
                }
            }));
        }
        for h in handles {
            h.join().expect("worker panicked");
        }
    });
    out.into_iter().map(|x| x.expect("slot filled")).collect()
}

/// Reads the worker-count override from the environment (`DM_JOBS`).
pub fn jobs_from_env() -> usize {
    std::env::var("DM_JOBS")
        .ok()
        .and_then(|v| v.parse::<usize>().ok())
        .filter(|&v| v >= 1)
        .unwrap_or(1)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn order_is_input_order_regardless_of_workers() {
        let serial = map_indexed(101, 1, |i| i * i);
        let parallel = map_indexed(101, 4, |i| i * i);
        assert_eq!(serial, parallel);
    }

    #[test]
    fn empty_input() {
        let out: Vec<usize> = map_indexed(0, 4, |i| i);
        assert!(out.is_empty());
    }
}
