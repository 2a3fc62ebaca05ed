//! Scalar abstraction: every numerical routine in this crate is generic over
//! a floating-point type implementing [`Real`].

use std::fmt::{Debug, Display, LowerExp};

/// Floating point scalar: f32 or f64.
pub trait Real:
    num_traits::Float + num_traits::FromPrimitive + num_traits::NumCast + Debug + Display + LowerExp + 'static
{
    /// Sensible default comparison tolerance for this precision.
    fn default_eps() -> Self;
}

impl Real for f32 {
    fn default_eps() -> Self {
        1e-5
    }
}

impl Real for f64 {
    fn default_eps() -> Self {
        1e-12
    }
}

/// Shorthand conversion from f64 literals into the working scalar type.
#[inline]
pub(crate) fn c<F: Real>(x: f64) -> F {
    F::from_f64(x).expect("f64 constant convertible to scalar")
}

/// Conversion from small integers into the working scalar type.
#[inline]
pub(crate) fn ci<F: Real>(n: i64) -> F {
    F::from_i64(n).expect("i64 constant convertible to scalar")
}
