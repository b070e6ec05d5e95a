//! Complex numbers with a detached logarithmic scale.
//!
//! Spherical Bessel and Hankel functions at small argument and high order
//! span hundreds of decades (`j_l(z) ~ z^l/(2l+1)!!`, `h_l(z) ~ (2l-1)!!/z^(l+1)`)
//! while the products the Mie sums need stay of order one. [`Scaled`] keeps
//! `value = mant * exp(log)` with `|mant| = 1` so that such products can be
//! formed before converting back.

use std::ops::{Div, Mul};

use crate::{Complex, Real};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Scaled<T> {
    mant: Complex<T>,
    log: T,
}

impl<T: Real> Scaled<T> {
    pub fn zero() -> Self {
        Scaled {
            mant: Complex::new(T::zero(), T::zero()),
            log: T::zero(),
        }
    }

    /// `mant * exp(log)`, normalized.
    pub fn new(mant: Complex<T>, log: T) -> Self {
        let a = mant.norm();
        if a == T::zero() {
            return Self::zero();
        }
        Scaled {
            mant: mant / a,
            log: log + a.ln(),
        }
    }

    pub fn from_complex(v: Complex<T>) -> Self {
        Self::new(v, T::zero())
    }

    pub fn is_zero(&self) -> bool {
        self.mant.re == T::zero() && self.mant.im == T::zero()
    }

    pub fn is_finite(&self) -> bool {
        self.mant.re.is_finite() && self.mant.im.is_finite() && self.log.is_finite()
    }

    /// Natural log of the modulus (`-inf` for zero).
    pub fn ln_abs(&self) -> T {
        if self.is_zero() {
            T::neg_infinity()
        } else {
            self.log
        }
    }

    /// Unit-modulus phase factor.
    pub fn phase(&self) -> Complex<T> {
        self.mant
    }

    pub fn scale(self, c: Complex<T>) -> Self {
        Self::new(self.mant * c, self.log)
    }

    /// Converts to an ordinary complex number. `None` when the modulus is not
    /// representable; values below the smallest normal number flush to zero.
    pub fn to_complex(&self) -> Option<Complex<T>> {
        if self.is_zero() {
            return Some(self.mant);
        }
        if !self.is_finite() {
            return None;
        }
        if self.log > T::max_value().ln() {
            return None;
        }
        if self.log < T::min_positive_value().ln() {
            return Some(Complex::new(T::zero(), T::zero()));
        }
        Some(self.mant * self.log.exp())
    }

    pub fn recip(self) -> Self {
        Scaled {
            mant: self.mant.conj(),
            log: -self.log,
        }
    }
}

impl<T: Real> Mul for Scaled<T> {
    type Output = Self;

    fn mul(self, rhs: Self) -> Self {
        if self.is_zero() || rhs.is_zero() {
            return Self::zero();
        }
        Self::new(self.mant * rhs.mant, self.log + rhs.log)
    }
}

impl<T: Real> Div for Scaled<T> {
    type Output = Self;

    fn div(self, rhs: Self) -> Self {
        if self.is_zero() {
            return Self::zero();
        }
        Self::new(self.mant / rhs.mant, self.log - rhs.log)
    }
}
