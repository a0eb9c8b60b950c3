//! Scalar abstraction shared by every numerical routine in the crate.

use nalgebra::RealField;
use num_complex::Complex;

/// Real scalar the library is generic over: `f32` or `f64`.
///
/// Everything the crate needs beyond [`RealField`] is conversion to and from
/// `f64`, which is where tolerances and literals come from.
pub trait Real: RealField + Copy + num_traits::ToPrimitive {
    /// Converts an `f64` literal or tolerance into this scalar.
    fn lit(x: f64) -> Self;

    /// Lossy conversion to `f64` for reporting.
    fn to_f64_lossy(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }
}

impl Real for f32 {
    fn lit(x: f64) -> Self {
        x as f32
    }
}

impl Real for f64 {
    fn lit(x: f64) -> Self {
        x
    }
}

/// Complex scalar over `T`.
pub type C<T> = Complex<T>;

/// Tolerance `base`, floored at a small multiple of the scalar's machine
/// epsilon so that `f32` instantiations do not fail on round-off alone.
///
/// For `f64` every tolerance used in this crate is above the floor, so the
/// nominal value is used unchanged.
pub fn tol<T: Real>(base: f64) -> T {
    let floor = T::default_epsilon() * T::lit(256.0);
    let t = T::lit(base);
    if t > floor {
        t
    } else {
        floor
    }
}

pub(crate) fn c<T: Real>(re: f64, im: f64) -> C<T> {
    Complex::new(T::lit(re), T::lit(im))
}

pub(crate) fn re<T: Real>(x: T) -> C<T> {
    Complex::new(x, T::zero())
}
