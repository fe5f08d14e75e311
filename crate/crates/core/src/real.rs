//! Scalar abstraction shared by every kernel.
//!
//! Kernels are written once, generic over [`Real`], and instantiated for
//! `f64` (reference path), `f32` (performance experiments) and [`Counted`]
//! (an `f64` wrapper that tallies every arithmetic operation, used to measure
//! the surrogate kernels' true operation count against the analytic model).

use std::cell::Cell;
use std::fmt::Debug;
use std::ops::{Add, Div, Mul, Neg, Sub};

pub trait Real:
    Copy
    + PartialOrd
    + Debug
    + Send
    + Sync
    + 'static
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Div<Output = Self>
    + Neg<Output = Self>
{
    fn from_f64(x: f64) -> Self;
    fn to_f64(self) -> f64;
    fn exp(self) -> Self;
    /// `exp(self) - 1`, accurate near zero.
    fn exp_m1(self) -> Self;
    fn is_finite(self) -> bool;

    #[inline]
    fn zero() -> Self {
        Self::from_f64(0.0)
    }

    #[inline]
    fn one() -> Self {
        Self::from_f64(1.0)
    }

    /// Clamp into `[lo, hi]`. Comparisons are not counted as arithmetic.
    #[inline]
    fn clamp_to(self, lo: Self, hi: Self) -> Self {
        if self < lo {
            lo
        } else if self > hi {
            hi
        } else {
            self
        }
    }
}

impl Real for f64 {
    #[inline]
    fn from_f64(x: f64) -> Self {
        x
    }
    #[inline]
    fn to_f64(self) -> f64 {
        self
    }
    #[inline]
    fn exp(self) -> Self {
        f64::exp(self)
    }
    #[inline]
    fn exp_m1(self) -> Self {
        f64::exp_m1(self)
    }
    #[inline]
    fn is_finite(self) -> bool {
        f64::is_finite(self)
    }
}

impl Real for f32 {
    #[inline]
    fn from_f64(x: f64) -> Self {
        x as f32
    }
    #[inline]
    fn to_f64(self) -> f64 {
        self as f64
    }
    #[inline]
    fn exp(self) -> Self {
        f32::exp(self)
    }
    #[inline]
    fn exp_m1(self) -> Self {
        f32::exp_m1(self)
    }
    #[inline]
    fn is_finite(self) -> bool {
        f32::is_finite(self)
    }
}

thread_local! {
    static OP_COUNT: Cell<u64> = const { Cell::new(0) };
}

/// `f64` that increments a thread-local counter on every arithmetic op
/// (`+ - * /`, negation, `exp`, `exp_m1`). Constants and comparisons are free.
#[derive(Clone, Copy, Debug, PartialEq, PartialOrd, Default)]
pub struct Counted(pub f64);

impl Counted {
    /// Resets the calling thread's counter and returns the previous value.
    pub fn take_count() -> u64 {
        OP_COUNT.with(|c| c.replace(0))
    }

    pub fn count() -> u64 {
        OP_COUNT.with(Cell::get)
    }

    #[inline]
    fn tick() {
        OP_COUNT.with(|c| c.set(c.get() + 1));
    }
}

macro_rules! counted_binop {
    ($tr:ident, $method:ident, $op:tt) => {
        impl $tr for Counted {
            type Output = Counted;
            #[inline]
            fn $method(self, rhs: Counted) -> Counted {
                Counted::tick();
                Counted(self.0 $op rhs.0)
            }
        }
    };
}

counted_binop!(Add, add, +);
counted_binop!(Sub, sub, -);
counted_binop!(Mul, mul, *);
counted_binop!(Div, div, /);

impl Neg for Counted {
    type Output = Counted;
    #[inline]
    fn neg(self) -> Counted {
        Counted::tick();
        Counted(-self.0)
    }
}

impl Real for Counted {
    #[inline]
    fn from_f64(x: f64) -> Self {
        Counted(x)
    }
    #[inline]
    fn to_f64(self) -> f64 {
        self.0
    }
    #[inline]
    fn exp(self) -> Self {
        Counted::tick();
        Counted(self.0.exp())
    }
    #[inline]
    fn exp_m1(self) -> Self {
        Counted::tick();
        Counted(self.0.exp_m1())
    }
    #[inline]
    fn is_finite(self) -> bool {
        self.0.is_finite()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn counted_tallies_arithmetic_only() {
        Counted::take_count();
        let a = Counted(2.0);
        let b = Counted::from_f64(3.0);
        let c = (a + b) * a - b / a;
        let _ = c.exp();
        let _ = -c;
        let _ = c < a;
        assert_eq!(Counted::take_count(), 6);
        assert_eq!(c.0, 8.5);
    }

    #[test]
    fn clamp_to_bounds() {
        assert_eq!(1.5f64.clamp_to(0.0, 1.0), 1.0);
        assert_eq!((-0.5f32).clamp_to(0.0, 1.0), 0.0);
        assert_eq!(0.25f64.clamp_to(0.0, 1.0), 0.25);
    }
}
