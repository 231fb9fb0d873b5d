//! Gaussian rationals `x + iy` with `x, y` in `Q`, used to compare
//! coefficient identities without rounding.

use std::ops::{Add, Mul, Neg, Sub};

use num_bigint::BigInt;
use num_complex::Complex64;
use num_rational::BigRational;
use num_traits::{ToPrimitive, Zero};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GaussRational {
    pub re: BigRational,
    pub im: BigRational,
}

impl GaussRational {
    pub fn zero() -> Self {
        GaussRational {
            re: BigRational::zero(),
            im: BigRational::zero(),
        }
    }

    pub fn one() -> Self {
        GaussRational::from_integers(1, 0)
    }

    pub fn from_integers(re: i64, im: i64) -> Self {
        GaussRational {
            re: BigRational::from_integer(BigInt::from(re)),
            im: BigRational::from_integer(BigInt::from(im)),
        }
    }

    /// Exact conversion; every finite double is a dyadic rational.
    pub fn from_complex(z: Complex64) -> Result<Self> {
        let conv = |x: f64| BigRational::from_float(x).ok_or_else(|| Error::NotExact(format!("{x} is not finite")));
        Ok(GaussRational {
            re: conv(z.re)?,
            im: conv(z.im)?,
        })
    }

    pub fn to_complex(&self) -> Complex64 {
        Complex64::new(
            self.re.to_f64().unwrap_or(f64::NAN),
            self.im.to_f64().unwrap_or(f64::NAN),
        )
    }

    pub fn is_zero(&self) -> bool {
        self.re.is_zero() && self.im.is_zero()
    }
}

impl Add for &GaussRational {
    type Output = GaussRational;
    fn add(self, o: &GaussRational) -> GaussRational {
        GaussRational {
            re: &self.re + &o.re,
            im: &self.im + &o.im,
        }
    }
}

impl Sub for &GaussRational {
    type Output = GaussRational;
    fn sub(self, o: &GaussRational) -> GaussRational {
        GaussRational {
            re: &self.re - &o.re,
            im: &self.im - &o.im,
        }
    }
}

impl Mul for &GaussRational {
    type Output = GaussRational;
    fn mul(self, o: &GaussRational) -> GaussRational {
        GaussRational {
            re: &self.re * &o.re - &self.im * &o.im,
            im: &self.re * &o.im + &self.im * &o.re,
        }
    }
}

impl Neg for &GaussRational {
    type Output = GaussRational;
    fn neg(self) -> GaussRational {
        GaussRational {
            re: -&self.re,
            im: -&self.im,
        }
    }
}
