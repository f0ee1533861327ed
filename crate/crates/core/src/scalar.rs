//! Scalar abstraction shared by every numerical routine in the crate.
//!
//! All algorithms are written against [`Real`], which is satisfied by `f32`
//! and `f64`. Complex quantities are `num_complex::Complex<T>`; the helpers
//! below route complex math through nalgebra's `ComplexField` so no `Float`
//! bound is ever needed on `T`.

use nalgebra::{ComplexField, RealField};
use num_complex::Complex;
use serde::de::DeserializeOwned;
use serde::Serialize;
use std::fmt::{Debug, Display, LowerExp};

/// Real floating-point scalar usable throughout the toolkit.
pub trait Real:
    RealField + Copy + Default + Debug + Display + LowerExp + Serialize + DeserializeOwned + Send + Sync + 'static
{
    /// Converts an `f64` literal or tolerance into this scalar type.
    fn lit(x: f64) -> Self;
    fn to_f64(self) -> f64;
    /// Smallest positive normal value.
    fn tiny() -> Self;
    fn nan() -> Self;
}

impl Real for f64 {
    #[inline]
    fn tiny() -> Self {
        f64::MIN_POSITIVE
    }
    #[inline]
    fn nan() -> Self {
        f64::NAN
    }
    #[inline]
    fn lit(x: f64) -> Self {
        x
    }
    #[inline]
    fn to_f64(self) -> f64 {
        self
    }
}

impl Real for f32 {
    #[inline]
    fn tiny() -> Self {
        f32::MIN_POSITIVE
    }
    #[inline]
    fn nan() -> Self {
        f32::NAN
    }
    #[inline]
    fn lit(x: f64) -> Self {
        x as f32
    }
    #[inline]
    fn to_f64(self) -> f64 {
        self as f64
    }
}

#[inline]
pub(crate) fn lit<T: Real>(x: f64) -> T {
    T::lit(x)
}

#[inline]
pub(crate) fn jw<T: Real>(omega: T) -> Complex<T> {
    Complex::new(T::zero(), omega)
}

#[inline]
pub(crate) fn cabs<T: Real>(z: Complex<T>) -> T {
    ComplexField::modulus(z)
}

#[inline]
pub(crate) fn cexp<T: Real>(z: Complex<T>) -> Complex<T> {
    ComplexField::exp(z)
}

/// Principal square root, branch cut on the negative real axis (upper side).
pub(crate) fn csqrt<T: Real>(z: Complex<T>) -> Complex<T> {
    let r = cabs(z);
    if r == T::zero() {
        return Complex::new(T::zero(), T::zero());
    }
    let two = lit::<T>(2.0);
    let re = ((r + z.re) / two).sqrt();
    let im = ((r - z.re) / two).sqrt();
    if z.im < T::zero() {
        Complex::new(re, -im)
    } else {
        Complex::new(re, im)
    }
}

#[inline]
pub(crate) fn is_finite_c<T: Real>(z: Complex<T>) -> bool {
    z.re.is_finite() && z.im.is_finite()
}

