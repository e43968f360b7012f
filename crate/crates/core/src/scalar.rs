//! Scalar abstraction shared by every numerical routine in the crate.
//!
//! All algorithms are written against [`Real`], which `f32` and `f64` both
//! satisfy. Accuracy targets quoted in the docs assume `f64`.

use std::fmt::{Debug, Display};
use std::iter::Sum;

use num_complex::Complex;
use num_traits::{Float, FloatConst, FromPrimitive, NumAssign, ToPrimitive};

/// Floating-point scalar usable by the solvers: `f32` or `f64`.
pub trait Real:
    Float
    + FloatConst
    + FromPrimitive
    + ToPrimitive
    + NumAssign
    + Sum
    + Default
    + Debug
    + Display
    + Send
    + Sync
    + 'static
{
    /// Converts an `f64` literal into this scalar type.
    #[inline]
    fn lit(x: f64) -> Self {
        Self::from_f64(x).expect("literal representable in scalar type")
    }

    /// Converts a count into this scalar type.
    #[inline]
    fn from_count(n: usize) -> Self {
        Self::from_usize(n).expect("count representable in scalar type")
    }

    #[inline]
    fn as_f64(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }
}

impl Real for f32 {}
impl Real for f64 {}

/// `(e^z - 1) / z`, finite and accurate near `z = 0`.
pub fn exprel<T: Real>(z: Complex<T>) -> Complex<T> {
    let one = Complex::new(T::one(), T::zero());
    if z.norm() < T::lit(1e-3) {
        // 1 + z/2 + z^2/6 + z^3/24 + z^4/120
        let mut term = one;
        let mut sum = one;
        for k in 2..7 {
            term = term * z / T::from_count(k);
            sum = sum + term;
        }
        sum
    } else {
        (z.exp() - one) / z
    }
}

/// `(e^{z t} - 1) / z`, with the `t` limit when `z` vanishes.
#[inline]
pub fn exp_integral<T: Real>(z: Complex<T>, t: T) -> Complex<T> {
    exprel(z * t) * t
}

/// Relative comparison with an absolute floor.
#[inline]
pub fn close<T: Real>(a: T, b: T, rel: T, abs: T) -> bool {
    let diff = (a - b).abs();
    diff <= abs || diff <= rel * a.abs().max(b.abs())
}

/// Evenly spaced grid of `n` points from `start` to `end` inclusive.
pub fn linspace<T: Real>(start: T, end: T, n: usize) -> Vec<T> {
    match n {
        0 => Vec::new(),
        1 => vec![start],
        _ => {
            let step = (end - start) / T::from_count(n - 1);
            (0..n)
                .map(|i| {
                    if i + 1 == n {
                        end
                    } else {
                        start + step * T::from_count(i)
                    }
                })
                .collect()
        }
    }
}
