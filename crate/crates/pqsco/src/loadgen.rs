//! Synthetic CPU load: busy-spin/sleep duty cycles on background threads.
//!
//! Each loaded worker spins for `target_load_pct`% of every period and
//! sleeps for the rest. One core is always left unloaded, so a profile may
//! load at most `host cores - 1` workers. Threads are not pinned.

use std::hint::black_box;
use std::sync::atomic::{AtomicBool, AtomicU64, Ordering};
use std::sync::Arc;
use std::thread::{self, JoinHandle};
use std::time::{Duration, Instant};

use crate::error::{Error, Result};

pub const DEFAULT_PERIOD_MS: u64 = 10;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct LoadProfile {
    pub loaded_workers: u32,
    pub target_load_pct: u32,
    pub period_ms: u64,
}

impl LoadProfile {
    pub fn new(loaded_workers: u32, target_load_pct: u32) -> Self {
        Self {
            loaded_workers,
            target_load_pct,
            period_ms: DEFAULT_PERIOD_MS,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.target_load_pct > 100 {
            return Err(Error::InvalidInput(format!(
                "target load {}% exceeds 100%",
                self.target_load_pct
            )));
        }
        if self.period_ms == 0 {
            return Err(Error::InvalidInput("load period must be at least 1 ms".into()));
        }
        Ok(())
    }

    fn period(&self) -> Duration {
        Duration::from_millis(self.period_ms)
    }
}

pub fn host_logical_cores() -> usize {
    thread::available_parallelism().map_or(1, |n| n.get())
}

struct Worker {
    busy_ns: Arc<AtomicU64>,
    thread: JoinHandle<()>,
}

/// Running load generator. Dropping it stops the load.
pub struct LoadHandle {
    profile: LoadProfile,
    stop: Arc<AtomicBool>,
    workers: Vec<Worker>,
    stopped: bool,
}

/// Starts `profile`, checking capacity against this host.
pub fn start_load(profile: LoadProfile) -> Result<LoadHandle> {
    start_load_with_capacity(profile, host_logical_cores())
}

/// Starts `profile` on a machine assumed to have `host_cores` logical cores.
pub fn start_load_with_capacity(profile: LoadProfile, host_cores: usize) -> Result<LoadHandle> {
    profile.validate()?;
    let limit = host_cores.saturating_sub(1);
    if profile.loaded_workers as usize > limit {
        return Err(Error::Capacity(format!(
            "{} loaded workers requested but only {limit} of {host_cores} cores may be loaded",
            profile.loaded_workers
        )));
    }
    let stop = Arc::new(AtomicBool::new(false));
    let mut workers = Vec::new();
    if profile.target_load_pct > 0 {
        for i in 0..profile.loaded_workers {
            let busy_ns = Arc::new(AtomicU64::new(0));
            let (stop, busy) = (stop.clone(), busy_ns.clone());
            let thread = thread::Builder::new()
                .name(format!("pqsco-load-{i}"))
                .spawn(move || duty_cycle(profile, &stop, &busy))
                .map_err(|e| Error::Environment(format!("cannot spawn load worker {i}: {e}")))?;
            workers.push(Worker { busy_ns, thread });
        }
    }
    Ok(LoadHandle {
        profile,
        stop,
        workers,
        stopped: false,
    })
}

fn duty_cycle(profile: LoadProfile, stop: &AtomicBool, busy_ns: &AtomicU64) {
    let period = profile.period();
    let busy = period * profile.target_load_pct / 100;
    let mut cycle_start = Instant::now();
    let mut acc = 0u64;
    while !stop.load(Ordering::Relaxed) {
        while cycle_start.elapsed() < busy {
            acc = black_box(acc.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407));
            if stop.load(Ordering::Relaxed) {
                break;
            }
        }
        busy_ns.fetch_add(cycle_start.elapsed().min(busy).as_nanos() as u64, Ordering::Relaxed);
        let next = cycle_start + period;
        let now = Instant::now();
        if next > now {
            thread::sleep(next - now);
            cycle_start = next;
        } else {
            cycle_start = now;
        }
    }
}

impl LoadHandle {
    pub fn profile(&self) -> &LoadProfile {
        &self.profile
    }

    pub fn is_active(&self) -> bool {
        !self.stopped
    }

    /// Number of spawned load threads; zero at 0% load.
    pub fn active_threads(&self) -> usize {
        self.workers.len()
    }

    /// Signals every worker and waits for it; safe to call repeatedly.
    pub fn stop(&mut self) {
        if self.stopped {
            return;
        }
        self.stop.store(true, Ordering::Relaxed);
        for w in self.workers.drain(..) {
            let _ = w.thread.join();
        }
        self.stopped = true;
    }

    /// Busy fraction (percent) of each loaded worker over `window`, from the
    /// workers' own busy-time accounting.
    pub fn measure_achieved_load(&self, window: Duration) -> Result<Vec<f64>> {
        if self.stopped {
            return Err(Error::InvalidInput("load handle is stopped".into()));
        }
        let min = self.profile.period() * 10;
        if window < min {
            return Err(Error::InvalidInput(format!(
                "window {window:?} is shorter than ten periods ({min:?})"
            )));
        }
        if self.workers.is_empty() {
            thread::sleep(window);
            return Ok(vec![0.0; self.profile.loaded_workers as usize]);
        }
        let read = || {
            self.workers
                .iter()
                .map(|w| w.busy_ns.load(Ordering::Relaxed))
                .collect::<Vec<_>>()
        };
        let (t0, b0) = (Instant::now(), read());
        thread::sleep(window);
        let (b1, wall) = (read(), t0.elapsed().as_nanos() as f64);
        Ok(b0.iter().zip(&b1).map(|(a, b)| 100.0 * (b - a) as f64 / wall).collect())
    }
}

impl Drop for LoadHandle {
    fn drop(&mut self) {
        self.stop();
    }
}
