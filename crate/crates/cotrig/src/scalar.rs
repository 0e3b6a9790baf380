//! Scalar abstraction: every numeric kernel in this crate is generic over a
//! floating-point scalar so the same code runs in `f32` or `f64`.

use num_traits::{Float, FromPrimitive, ToPrimitive};
use std::fmt::{Debug, Display, LowerExp};
use std::iter::Sum;

/// Floating-point scalar the numeric kernels are written against.
///
/// `f64` is the working type everywhere in the shipped tools; `f32` is kept
/// compiling mostly as a discipline that no code depends on a concrete type.
pub trait Scalar:
    Float
    + FromPrimitive
    + ToPrimitive
    + Sum
    + Debug
    + Display
    + LowerExp
    + Default
    + Send
    + Sync
    + 'static
{
    /// Converts an `f64` algorithm constant into the scalar type.
    fn c(x: f64) -> Self {
        Self::from_f64(x).expect("algorithm constant must be representable")
    }

    /// Lossy view as `f64`, used only for diagnostics and error messages.
    fn to_f64_lossy(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }
}

impl Scalar for f32 {}
impl Scalar for f64 {}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn constants_convert_in_both_widths() {
        assert_eq!(f64::c(1.5), 1.5);
        assert_eq!(f32::c(1.5), 1.5f32);
        assert_eq!(2.0f64.to_f64_lossy(), 2.0);
    }

    #[test]
    fn float_ops_available_through_trait() {
        fn branchy<T: Scalar>(x: T) -> T {
            if x > T::one() {
                x.atan()
            } else {
                x.atanh()
            }
        }
        assert!((branchy(0.5f64) - 0.5493061443340549).abs() < 1e-15);
        assert!((branchy(2.0f64) - 1.1071487177940904).abs() < 1e-15);
    }
}
