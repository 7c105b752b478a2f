use std::sync::atomic::{AtomicUsize, Ordering};

use dsssp_core::ato::CopyRunner;

/// Runs bundle copies on a fixed number of scoped worker threads.
#[derive(Clone, Copy, Debug)]
pub struct Threaded {
    pub workers: usize,
}

impl CopyRunner for Threaded {
    fn run(&self, count: usize, job: &(dyn Fn(usize) + Sync)) {
        let workers = self.workers.clamp(1, count.max(1));
        if workers == 1 {
            (0..count).for_each(job);
            return;
        }
        let next = AtomicUsize::new(0);
        std::thread::scope(|s| {
            for _ in 0..workers {
                s.spawn(|| loop {
                    let i = next.fetch_add(1, Ordering::Relaxed);
                    if i >= count {
                        break;
                    }
                    job(i);
                });
            }
        });
    }
}
