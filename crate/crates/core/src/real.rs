//! Scalar abstraction: every solver in this crate is generic over the
//! floating-point type.

use std::fmt;

use num_traits::{Float, FromPrimitive};

/// Floating-point scalar the numerical kernels are generic over.
///
/// `f64` is the working type for all shipped tolerances; `f32` is supported
/// for quick low-precision exploration, but the default fixed-point and
/// residual tolerances assume `f64` accuracy.
pub trait Real:
    Float
    + FromPrimitive
    + fmt::Debug
    + fmt::Display
    + fmt::LowerExp
    + serde::Serialize
    + Send
    + Sync
    + 'static
{
    /// Convert an `f64` constant into the scalar type.
    fn lit(x: f64) -> Self {
        Self::from_f64(x).expect("constant not representable in this scalar type")
    }

    /// Widen to `f64` for diagnostics and serialization.
    fn to_f64_lossy(self) -> f64;
}

impl Real for f32 {
    fn to_f64_lossy(self) -> f64 {
        f64::from(self)
    }
}

impl Real for f64 {
    fn to_f64_lossy(self) -> f64 {
        self
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn literal_round_trip() {
        assert_eq!(f64::lit(0.125), 0.125);
        assert_eq!(f32::lit(0.125), 0.125_f32);
    }
}
