//! Scoped worker threads for independent jobs (paths, scenario cells).

use std::num::NonZeroUsize;
use std::thread;

/// Environment variable overriding the worker count.
pub const THREADS_ENV: &str = "BREAKEVEN_THREADS";

pub fn thread_count() -> usize {
    std::env::var(THREADS_ENV)
        .ok()
        .and_then(|s| s.trim().parse::<usize>().ok())
        .filter(|&n| n > 0)
        .unwrap_or_else(|| thread::available_parallelism().map(NonZeroUsize::get).unwrap_or(1))
}

/// Runs `job(k)` for `k in 0..count` on up to [`thread_count`] threads and
/// returns the results in index order.
pub fn map_indexed<T, F>(count: usize, job: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync,
{
    let workers = thread_count().min(count.max(1));
    if workers <= 1 {
        return (0..count).map(&job).collect();
    }
    let mut slots: Vec<Option<T>> = (0..count).map(|_| None).collect();
    let chunk = count.div_ceil(workers);
    thread::scope(|s| {
        for (c, part) in slots.chunks_mut(chunk).enumerate() {
            let job = &job;
            s.spawn(move || {
                for (off, slot) in part.iter_mut().enumerate() {
                    *slot = Some(job(c * chunk + off));
                }
            });
        }
    });
    slots.into_iter().map(|s| s.expect("every job ran")).collect()
}

/// Fills `out` in blocks of `width`, block `k` by `job(k, block)`, in
/// parallel. Returns the sum of the job results.
pub fn fill_blocks<F>(out: &mut [f64], width: usize, job: F) -> usize
where
    F: Fn(usize, &mut [f64]) -> usize + Sync,
{
    if width == 0 {
        return 0;
    }
    let blocks = out.len() / width;
    let workers = thread_count().min(blocks.max(1));
    let per = blocks.div_ceil(workers.max(1)).max(1);
    thread::scope(|s| {
        let handles: Vec<_> = out
            .chunks_mut(per * width)
            .enumerate()
            .map(|(c, part)| {
                let job = &job;
                s.spawn(move || {
                    part.chunks_mut(width)
                        .enumerate()
                        .map(|(off, block)| job(c * per + off, block))
                        .sum::<usize>()
                })
            })
            .collect();
        handles.into_iter().map(|h| h.join().expect("worker panicked")).sum()
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn results_keep_index_order() {
        let v = map_indexed(37, |k| k * k);
        assert_eq!(v, (0..37).map(|k| k * k).collect::<Vec<_>>());
        let mut out = vec![0.0; 30];
        let total = fill_blocks(&mut out, 3, |k, b| {
            b.fill(k as f64);
            1
        });
        assert_eq!(total, 10);
        assert_eq!(out[29], 9.0);
    }
}
