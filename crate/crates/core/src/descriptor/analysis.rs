use super::transfer::closed_loop_delay_map;
use super::TransferMap;
use crate::error::{Error, Result};
use crate::scalar::{cabs, Real};

/// Grid estimate of the L-infinity norm.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LinfNorm<T: Real> {
    pub value: T,
    /// Frequency of the maximum (first one on ties).
    pub omega: T,
}

/// `max |h(i w)|` over the grid.
pub fn linf_norm_grid<T: Real>(h: &TransferMap<T>, grid: &[T]) -> Result<LinfNorm<T>> {
    if grid.is_empty() {
        return Err(Error::Argument("empty frequency grid".into()));
    }
    let values = h.response(grid)?;
    let mut best = LinfNorm { value: T::zero(), omega: grid[0] };
    for (&w, v) in grid.iter().zip(values) {
        let a = cabs(v);
        if a > best.value {
            best = LinfNorm { value: a, omega: w };
        }
    }
    Ok(best)
}

/// `s -> h k / (1 + h k exp(-tau s))`.
///
/// With `tau = 0` and rational `h`, `k` the result carries the
/// feedback realization.
pub fn closed_loop_delay<T: Real>(h: &TransferMap<T>, k: &TransferMap<T>, tau: T) -> Result<TransferMap<T>> {
    if !(tau >= T::zero()) || !tau.is_finite() {
        return Err(Error::Argument(format!("delay must be finite and non-negative, got {tau}")));
    }
    Ok(closed_loop_delay_map(h, k, tau))
}
