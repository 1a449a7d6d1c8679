use std::thread;
use std::time::Instant;

use abrshare_core::ladder::Executor;

/// Runs each job on its own scoped thread, at most `workers` at a time.
#[derive(Clone, Copy, Debug)]
pub struct Threaded {
    pub workers: usize,
}

impl Threaded {
    pub fn new(workers: usize) -> Self {
        Threaded { workers: workers.max(1) }
    }

    /// One worker per available core.
    pub fn available() -> Self {
        Self::new(thread::available_parallelism().map_or(1, |n| n.get()))
    }
}

impl Default for Threaded {
    fn default() -> Self {
        Self::available()
    }
}

impl Executor for Threaded {
    fn run<T: Send, F: Fn(usize) -> T + Sync>(&self, jobs: usize, f: F) -> Vec<(T, u64)> {
        let mut out = Vec::with_capacity(jobs);
        let f = &f;
        for start in (0..jobs).step_by(self.workers) {
            let end = (start + self.workers).min(jobs);
            thread::scope(|s| {
                let handles: Vec<_> = (start..end)
                    .map(|i| {
                        s.spawn(move || {
                            let t0 = Instant::now();
                            let v = f(i);
                            (v, t0.elapsed().as_nanos() as u64)
                        })
                    })
                    .collect();
                for h in handles {
                    out.push(h.join().unwrap_or_else(|p| std::panic::resume_unwind(p)));
                }
            });
        }
        out
    }
}
