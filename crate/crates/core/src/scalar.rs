//! Scalar abstraction shared by every numeric routine in the crate.

use std::fmt::{Debug, Display};

use nalgebra::RealField;
use num_traits::{FromPrimitive, ToPrimitive};

/// Floating point scalar: `f32` or `f64`.
///
/// Geometry and filtering are written once against this trait. Conversions
/// to and from literals go through `num-traits`, linear algebra through
/// `nalgebra`.
pub trait Scalar:
    RealField + Copy + FromPrimitive + ToPrimitive + Display + Debug + Send + Sync + 'static
{
    /// Converts an `f64` literal or parameter into this scalar type.
    fn lit(value: f64) -> Self {
        Self::from_f64(value).expect("f64 literal representable in scalar type")
    }

    /// Lossy conversion back to `f64` (for reporting and serialization).
    fn to_f64_lossy(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }
}

impl Scalar for f32 {}
impl Scalar for f64 {}
