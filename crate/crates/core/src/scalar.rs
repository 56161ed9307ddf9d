//! Field scalar abstraction so the same solver runs on real and complex data.

use std::fmt::Debug;
use std::ops::{Add, AddAssign, Mul, Neg, Sub};

use num_complex::Complex64;

pub trait Scalar:
    Copy
    + Debug
    + PartialEq
    + Send
    + Sync
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Mul<f64, Output = Self>
    + Neg<Output = Self>
    + AddAssign
    + 'static
{
    const ZERO: Self;

    fn from_real(value: f64) -> Self;

    /// Projects a complex profile value onto this scalar type. Real fields
    /// keep the real part.
    fn from_complex(value: Complex64) -> Self;

    fn to_complex(self) -> Complex64;

    fn modulus(self) -> f64;

    fn is_finite(self) -> bool;
}

impl Scalar for f64 {
    const ZERO: Self = 0.0;

    fn from_real(value: f64) -> Self {
        value
    }

    fn from_complex(value: Complex64) -> Self {
        value.re
    }

    fn to_complex(self) -> Complex64 {
        Complex64::new(self, 0.0)
    }

    fn modulus(self) -> f64 {
        self.abs()
    }

    fn is_finite(self) -> bool {
        f64::is_finite(self)
    }
}

impl Scalar for Complex64 {
    const ZERO: Self = Complex64 { re: 0.0, im: 0.0 };

    fn from_real(value: f64) -> Self {
        Complex64::new(value, 0.0)
    }

    fn from_complex(value: Complex64) -> Self {
        value
    }

    fn to_complex(self) -> Complex64 {
        self
    }

    fn modulus(self) -> f64 {
        self.norm()
    }

    fn is_finite(self) -> bool {
        self.re.is_finite() && self.im.is_finite()
    }
}
