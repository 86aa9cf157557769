//! Scalar abstraction for the numeric core.
//!
//! Tensors, layers, optimizers and the imprinting math are generic over
//! [`Scalar`] so they can be instantiated at f32 or f64. The crate root
//! exports f64 aliases, which is what the pipeline and the persistence
//! format use.

use num_traits::{Float, FromPrimitive, ToPrimitive};

pub trait Scalar:
    Float + FromPrimitive + ToPrimitive + std::fmt::Debug + std::fmt::Display + Send + Sync + 'static
{
    /// Convert a configuration value (always carried as f64) into the
    /// working scalar type.
    #[inline]
    fn from_cfg(v: f64) -> Self {
        Self::from_f64(v).expect("f64 is representable in every Scalar")
    }

    #[inline]
    fn to_f64_lossy(self) -> f64 {
        self.to_f64().expect("Scalar is representable as f64")
    }
}

impl Scalar for f32 {}
impl Scalar for f64 {}
