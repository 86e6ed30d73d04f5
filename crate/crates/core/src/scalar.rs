use num_traits::{Float, FromPrimitive, NumAssign, ToPrimitive};

/// Floating-point scalar used throughout the numeric core: `f32` or `f64`.
///
/// Everything downstream (panels, matrices, optimizers, likelihoods) is
/// generic over this trait; the crate root exports `f64` aliases for the
/// common case.
pub trait Scalar:
    Float
    + NumAssign
    + FromPrimitive
    + ToPrimitive
    + std::iter::Sum
    + std::fmt::Debug
    + std::fmt::Display
    + Send
    + Sync
    + 'static
{
    /// Lossy conversion from `f64`, used for constants and RNG draws.
    fn from_f64_lossy(x: f64) -> Self {
        Self::from_f64(x).expect("finite f64 converts to any Scalar")
    }

    /// Lossy conversion from `usize`, used for sample-size factors.
    fn from_usize_lossy(n: usize) -> Self {
        Self::from_f64_lossy(n as f64)
    }
}

impl Scalar for f32 {}
impl Scalar for f64 {}
