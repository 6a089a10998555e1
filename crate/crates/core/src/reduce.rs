//! Floating-point reductions with a switchable summation order.
//!
//! With deterministic order on (env `BV_DETERMINISTIC=1`, or
//! [`set_deterministic`]), every sum runs sequentially in index order and is
//! bit-reproducible regardless of thread count. Otherwise sums are split
//! across the rayon pool.

use std::sync::atomic::{AtomicU8, Ordering};

use rayon::prelude::*;

const UNSET: u8 = 0;
const ORDERED: u8 = 1;
const PARALLEL: u8 = 2;

static MODE: AtomicU8 = AtomicU8::new(UNSET);

pub fn set_deterministic(on: bool) {
    MODE.store(if on { ORDERED } else { PARALLEL }, Ordering::Relaxed);
}

pub fn is_deterministic() -> bool {
    match MODE.load(Ordering::Relaxed) {
        ORDERED => true,
        PARALLEL => false,
        _ => {
            let on = std::env::var("BV_DETERMINISTIC")
                .map(|v| v.trim() == "1")
                .unwrap_or(false);
            set_deterministic(on);
            on
        }
    }
}

/// Sum of `f(i)` for `i` in `0..len`.
pub fn sum_by<F>(len: usize, f: F) -> f64
where
    F: Fn(usize) -> f64 + Sync + Send,
{
    if is_deterministic() || len < 4096 {
        (0..len).map(f).sum()
    } else {
        (0..len).into_par_iter().map(f).sum()
    }
}

/// Maximum of `f(i)`; exact in any order.
pub fn max_by<F>(len: usize, f: F) -> f64
where
    F: Fn(usize) -> f64 + Sync + Send,
{
    if len < 4096 {
        (0..len).map(f).fold(f64::NEG_INFINITY, f64::max)
    } else {
        (0..len)
            .into_par_iter()
            .map(f)
            .reduce(|| f64::NEG_INFINITY, f64::max)
    }
}

pub fn min_by<F>(len: usize, f: F) -> f64
where
    F: Fn(usize) -> f64 + Sync + Send,
{
    -max_by(len, |i| -f(i))
}
