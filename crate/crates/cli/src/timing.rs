//! Process CPU time.

use std::time::Instant;

/// CPU seconds consumed by the whole process, all threads included.
pub fn cpu_time() -> f64 {
    let mut ts = libc::timespec { tv_sec: 0, tv_nsec: 0 };
    // SAFETY: `ts` is a valid, writable timespec.
    let rc = unsafe { libc::clock_gettime(libc::CLOCK_PROCESS_CPUTIME_ID, &mut ts) };
    if rc != 0 {
        return f64::NAN;
    }
    ts.tv_sec as f64 + ts.tv_nsec as f64 * 1e-9
}

/// Wall and CPU seconds spent in `f`.
pub fn timed<T>(f: impl FnOnce() -> T) -> (T, f64, f64) {
    let cpu0 = cpu_time();
    let wall0 = Instant::now();
    let out = f();
    (out, wall0.elapsed().as_secs_f64(), cpu_time() - cpu0)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn busy_work_shows_up() {
        let (x, wall, cpu) = timed(|| (0..20_000_000u64).fold(0u64, |a, i| a.wrapping_add(i * i)));
        assert!(x > 0);
        assert!(wall > 0.0 && cpu > 0.0);
    }
}
