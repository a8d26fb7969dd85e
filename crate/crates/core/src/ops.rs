//! Thread-local multiplication counter.
//!
//! Every vector kernel in [`crate::linalg`] reports the number of
//! floating-point multiplications (and divisions) it performs. Solvers pause
//! the counter around objective evaluations and diagnostics, so a reading
//! taken across one iteration reflects the arithmetic of the method itself.

use std::cell::Cell;

thread_local! {
    static MULS: Cell<u64> = const { Cell::new(0) };
    static PAUSED: Cell<u32> = const { Cell::new(0) };
}

#[inline]
pub fn count(n: usize) {
    PAUSED.with(|p| {
        if p.get() == 0 {
            MULS.with(|m| m.set(m.get() + n as u64));
        }
    });
}

/// Current multiplication count on this thread.
pub fn read() -> u64 {
    MULS.with(|m| m.get())
}

pub fn reset() {
    MULS.with(|m| m.set(0));
}

/// Runs `f` without counting its arithmetic. Nests.
pub fn paused<T>(f: impl FnOnce() -> T) -> T {
    let _guard = PauseGuard::new();
    f()
}

struct PauseGuard;

impl PauseGuard {
    fn new() -> Self {
        PAUSED.with(|p| p.set(p.get() + 1));
        PauseGuard
    }
}

impl Drop for PauseGuard {
    fn drop(&mut self) {
        PAUSED.with(|p| p.set(p.get() - 1));
    }
}

/// Counts the multiplications performed by `f`.
pub fn measure<T>(f: impl FnOnce() -> T) -> (T, u64) {
    let before = read();
    let out = f();
    (out, read() - before)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn paused_sections_are_not_counted() {
        let (_, n) = measure(|| {
            count(5);
            paused(|| {
                count(100);
                paused(|| count(7));
            });
            count(1);
        });
        assert_eq!(n, 6);
    }
}
