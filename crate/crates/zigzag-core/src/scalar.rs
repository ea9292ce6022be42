//! Scalar abstraction: the numeric kernel is generic over the floating-point
//! type through [`Real`], with `f64` as the working precision of the shipped
//! tools. Concrete aliases live at the crate root.

use std::fmt::{Debug, Display, LowerExp};
use std::iter::Sum;

use num_traits::{Float, FloatConst, FromPrimitive, NumAssign, ToPrimitive};
use serde::{de::DeserializeOwned, Serialize};

/// Floating-point scalar usable in the spectral kernel: `f32` or `f64`.
///
/// Default tolerances throughout the crate are stated for `f64`; `f32` works
/// but the documented accuracy contracts assume double precision.
pub trait Real:
    Float
    + FloatConst
    + FromPrimitive
    + ToPrimitive
    + NumAssign
    + Sum
    + Debug
    + Display
    + LowerExp
    + Serialize
    + DeserializeOwned
    + Default
    + Send
    + Sync
    + 'static
{
    /// Lift an `f64` literal into this scalar type.
    fn of(x: f64) -> Self {
        Self::from_f64(x).expect("finite f64 literal converts to any Real")
    }

    /// Lossy conversion back to `f64` (exact for f64, rounded for f32).
    fn to_f64_lossy(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }
}

impl Real for f32 {}
impl Real for f64 {}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn literal_lift_round_trips() {
        assert_eq!(f64::of(0.25), 0.25);
        assert_eq!(f32::of(0.25), 0.25f32);
        assert_eq!(f64::of(1e-8).to_f64_lossy(), 1e-8);
    }
}
