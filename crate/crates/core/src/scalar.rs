//! Floating-point scalar abstraction shared by the numeric modules.

use nalgebra::RealField;
use num_traits::{FromPrimitive, ToPrimitive};

/// `f32` or `f64`. Graph algorithms are scalar-free; models, regressions
/// and effect estimates are generic over this trait.
pub trait Scalar: RealField + Copy + FromPrimitive + ToPrimitive + std::fmt::Display + Send + Sync + 'static {
    fn of(x: f64) -> Self {
        Self::from_f64(x).expect("finite f64 converts")
    }

    fn f64(self) -> f64 {
        self.to_f64().expect("scalar converts to f64")
    }

    fn magnitude(self) -> Self {
        if self < Self::zero() {
            -self
        } else {
            self
        }
    }
}

impl Scalar for f32 {}
impl Scalar for f64 {}
