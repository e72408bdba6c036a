//! Scalar abstractions shared by the model and the decoders.

use std::fmt::{Debug, Display};
use std::marker::PhantomData;

use num_traits::{Float, FromPrimitive};

/// Floating-point scalar usable as a log-domain metric.
pub trait Real: Float + FromPrimitive + Debug + Display + Default + Send + Sync + 'static {
    fn from_f64_lossy(x: f64) -> Self {
        Self::from_f64(x).unwrap_or_else(Self::nan)
    }

    fn to_f64_lossy(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }
}

impl Real for f32 {}
impl Real for f64 {}

/// Max-plus arithmetic driving the Viterbi recurrence.
///
/// `neg_inf` must be absorbing under `add` and compare below every other
/// value.
pub trait MaxPlus {
    type Value: Copy + PartialOrd + Debug + Send + Sync;

    fn neg_inf(&self) -> Self::Value;
    fn add(&self, a: Self::Value, b: Self::Value) -> Self::Value;

    fn is_neg_inf(&self, v: Self::Value) -> bool {
        !(v > self.neg_inf())
    }

    /// Encodes a natural-log value in this arithmetic.
    fn lift_log(&self, x: f64) -> Self::Value;
}

/// IEEE float arithmetic; `-inf` is the impossible-event marker.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct FloatArith<F>(PhantomData<F>);

impl<F> FloatArith<F> {
    pub const fn new() -> Self {
        FloatArith(PhantomData)
    }
}

impl<F: Real> MaxPlus for FloatArith<F> {
    type Value = F;

    fn neg_inf(&self) -> F {
        F::neg_infinity()
    }

    fn add(&self, a: F, b: F) -> F {
        a + b
    }

    fn lift_log(&self, x: f64) -> F {
        F::from_f64_lossy(x)
    }
}
