//! Gap-junction current kernels.
//!
//! Both kernels accumulate strictly in index order; the engine uses the same
//! per-term functions so its results are bitwise identical to these.

use crate::error::{Error, Result};
use crate::real::Real;

/// Arithmetic ops in one [`realistic_term`] plus its accumulation.
pub const REALISTIC_TERM_OPS: u64 = 11;
/// Arithmetic ops in one [`simplified_term`] plus its accumulation.
pub const SIMPLIFIED_TERM_OPS: u64 = 3;

/// One connection of the realistic kernel: `w * f(V) * V` with
/// `V = prev - neigh` and `f(V) = 0.8 V exp(-V^2/100) + 0.2`.
#[inline(always)]
pub fn realistic_term<T: Real>(prev_vdend: T, neigh_vdend: T, weight: T) -> T {
    let v = prev_vdend - neigh_vdend;
    let f = T::from_f64(0.8) * v * (T::from_f64(-1.0) * v * v / T::from_f64(100.0)).exp() + T::from_f64(0.2);
    weight * f * v
}

/// One connection of the simplified kernel: `w * (neigh - prev)`.
#[inline(always)]
pub fn simplified_term<T: Real>(prev_vdend: T, neigh_vdend: T, weight: T) -> T {
    weight * (neigh_vdend - prev_vdend)
}

fn check_lengths(neighbors: usize, weights: usize) -> Result<()> {
    if neighbors != weights {
        return Err(Error::InputShape {
            what: "weights",
            expected: neighbors,
            got: weights,
        });
    }
    Ok(())
}

/// Realistic gap-junction current `Ic` (µA/cm²). Positive `Ic` leaves the
/// dendrite.
pub fn gj_current_realistic<T: Real>(prev_vdend: T, neighbor_vdends: &[T], weights: &[T]) -> Result<T> {
    check_lengths(neighbor_vdends.len(), weights.len())?;
    Ok(neighbor_vdends
        .iter()
        .zip(weights)
        .fold(T::zero(), |ic, (&n, &w)| ic + realistic_term(prev_vdend, n, w)))
}

/// Simplified gap-junction current (µA/cm²). Positive values enter the
/// dendrite.
pub fn gj_current_simplified<T: Real>(prev_vdend: T, neighbor_vdends: &[T], weights: &[T]) -> Result<T> {
    check_lengths(neighbor_vdends.len(), weights.len())?;
    Ok(neighbor_vdends
        .iter()
        .zip(weights)
        .fold(T::zero(), |ic, (&n, &w)| ic + simplified_term(prev_vdend, n, w)))
}
