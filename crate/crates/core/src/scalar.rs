//! Floating-point abstraction for the numeric kernels.
//!
//! Matrices, simulator states and Euler synthesis are generic over [`Real`]
//! so they can run in `f32` for quick sweeps or `f64` where the tolerances
//! need it. The compiler passes themselves store angles as `f64`.

use std::fmt::{Debug, Display};

use num_traits::{Float, FloatConst, FromPrimitive, NumAssign, ToPrimitive};

pub trait Real:
    Float
    + FloatConst
    + FromPrimitive
    + ToPrimitive
    + NumAssign
    + Debug
    + Display
    + Default
    + Send
    + Sync
    + 'static
{
    /// Converts an `f64` literal, rounding when `Self` is narrower.
    fn lit(x: f64) -> Self;

    fn to_f64_lossy(self) -> f64;
}

impl Real for f32 {
    fn lit(x: f64) -> Self {
        x as f32
    }

    fn to_f64_lossy(self) -> f64 {
        self as f64
    }
}

impl Real for f64 {
    fn lit(x: f64) -> Self {
        x
    }

    fn to_f64_lossy(self) -> f64 {
        self
    }
}

/// Wraps an angle into `(-pi, pi]`.
pub fn wrap_angle<T: Real>(a: T) -> T {
    let two_pi = T::TAU();
    let mut r = a % two_pi;
    if r > T::PI() {
        r -= two_pi;
    } else if r <= -T::PI() {
        r += two_pi;
    }
    r
}
