use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;

/// Applies `f` to every item on at most `workers` threads and returns the
/// results in input order, whatever order they complete in.
pub(crate) fn map_bounded<T, R, F>(items: &[T], workers: usize, f: F) -> Vec<R>
where
    T: Sync,
    R: Send,
    F: Fn(usize, &T) -> R + Sync,
{
    let workers = workers.clamp(1, items.len().max(1));
    if workers == 1 {
        return items.iter().enumerate().map(|(i, t)| f(i, t)).collect();
    }
    let next = AtomicUsize::new(0);
    let results: Mutex<Vec<Option<R>>> = Mutex::new((0..items.len()).map(|_| None).collect());
    std::thread::scope(|s| {
        for _ in 0..workers {
            s.spawn(|| loop {
                let i = next.fetch_add(1, Ordering::SeqCst);
                let Some(item) = items.get(i) else { break };
                let r = f(i, item);
                results.lock().expect("result slot poisoned")[i] = Some(r);
            });
        }
    });
    results
        .into_inner()
        .expect("result slot poisoned")
        .into_iter()
        .map(|r| r.expect("every index processed"))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn preserves_order() {
        let items: Vec<u64> = (0..100).collect();
        let out = map_bounded(&items, 7, |i, x| {
            std::thread::sleep(std::time::Duration::from_micros((100 - x) * 10));
            (i, x * 2)
        });
        assert!(out.iter().enumerate().all(|(i, (j, v))| i == *j && *v == 2 * i as u64));
        assert!(map_bounded(&Vec::<u8>::new(), 4, |_, x| *x).is_empty());
    }
}
