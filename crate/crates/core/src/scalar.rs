//! Scalar types accepted by the generic linear algebra.
//!
//! `Field` is the minimal contract: ring operations, division, negation and a
//! floating magnitude for pivot selection. It is implemented for `f32`, `f64`,
//! the compensated [`DoubleDouble`], exact `Ratio<i64>`, and the complex
//! versions of the floating types.

use num_complex::Complex;
use num_rational::Ratio;
use num_traits::{Num, One, ToPrimitive, Zero};
use std::cmp::Ordering;
use std::fmt::{self, Debug};
use std::ops::{Add, Div, Mul, Neg, Rem, Sub};

pub trait Field: Copy + Num + Neg<Output = Self> + Debug + Send + Sync + 'static {
    /// Magnitude used for pivoting; only its ordering matters.
    fn magnitude(&self) -> f64;
}

impl Field for f32 {
    fn magnitude(&self) -> f64 {
        self.abs() as f64
    }
}

impl Field for f64 {
    fn magnitude(&self) -> f64 {
        self.abs()
    }
}

impl Field for Ratio<i64> {
    fn magnitude(&self) -> f64 {
        self.to_f64().map(f64::abs).unwrap_or(f64::INFINITY)
    }
}

impl Field for DoubleDouble {
    fn magnitude(&self) -> f64 {
        self.hi.abs()
    }
}

impl<T: Field> Field for Complex<T> {
    fn magnitude(&self) -> f64 {
        self.re.magnitude().hypot(self.im.magnitude())
    }
}

/// Unevaluated sum `hi + lo` with `|lo| <= ulp(hi)/2`, roughly 106 bits.
#[derive(Clone, Copy, Default)]
pub struct DoubleDouble {
    pub hi: f64,
    pub lo: f64,
}

#[inline]
fn two_sum(a: f64, b: f64) -> (f64, f64) {
    let s = a + b;
    let bb = s - a;
    (s, (a - (s - bb)) + (b - bb))
}

#[inline]
fn quick_two_sum(a: f64, b: f64) -> (f64, f64) {
    let s = a + b;
    (s, b - (s - a))
}

#[inline]
fn two_prod(a: f64, b: f64) -> (f64, f64) {
    let p = a * b;
    (p, a.mul_add(b, -p))
}

impl DoubleDouble {
    pub const fn from_f64(x: f64) -> Self {
        DoubleDouble { hi: x, lo: 0.0 }
    }

    pub fn to_f64(self) -> f64 {
        self.hi + self.lo
    }

    fn trunc(self) -> Self {
        let hi = self.hi.trunc();
        if hi == self.hi {
            let (s, e) = quick_two_sum(hi, self.lo.trunc());
            DoubleDouble { hi: s, lo: e }
        } else {
            DoubleDouble { hi, lo: 0.0 }
        }
    }
}

impl From<f64> for DoubleDouble {
    fn from(x: f64) -> Self {
        DoubleDouble::from_f64(x)
    }
}

impl Debug for DoubleDouble {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "dd({:e} + {:e})", self.hi, self.lo)
    }
}

impl PartialEq for DoubleDouble {
    fn eq(&self, other: &Self) -> bool {
        self.hi == other.hi && self.lo == other.lo
    }
}

impl PartialOrd for DoubleDouble {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        match self.hi.partial_cmp(&other.hi) {
            Some(Ordering::Equal) => self.lo.partial_cmp(&other.lo),
            o => o,
        }
    }
}

impl Add for DoubleDouble {
    type Output = Self;
    fn add(self, y: Self) -> Self {
        let (s, e) = two_sum(self.hi, y.hi);
        let (t, f) = two_sum(self.lo, y.lo);
        let (s, e) = quick_two_sum(s, e + t);
        let (hi, lo) = quick_two_sum(s, e + f);
        DoubleDouble { hi, lo }
    }
}

impl Neg for DoubleDouble {
    type Output = Self;
    fn neg(self) -> Self {
        DoubleDouble { hi: -self.hi, lo: -self.lo }
    }
}

impl Sub for DoubleDouble {
    type Output = Self;
    fn sub(self, y: Self) -> Self {
        self + (-y)
    }
}

impl Mul for DoubleDouble {
    type Output = Self;
    fn mul(self, y: Self) -> Self {
        let (p, e) = two_prod(self.hi, y.hi);
        let e = e + (self.hi * y.lo + self.lo * y.hi);
        let (hi, lo) = quick_two_sum(p, e);
        DoubleDouble { hi, lo }
    }
}

impl Div for DoubleDouble {
    type Output = Self;
    fn div(self, y: Self) -> Self {
        let q1 = self.hi / y.hi;
        let r = self - y * DoubleDouble::from_f64(q1);
        let q2 = r.hi / y.hi;
        let r = r - y * DoubleDouble::from_f64(q2);
        let q3 = r.hi / y.hi;
        let (s, e) = quick_two_sum(q1, q2);
        DoubleDouble { hi: s, lo: e } + DoubleDouble::from_f64(q3)
    }
}

impl Rem for DoubleDouble {
    type Output = Self;
    fn rem(self, y: Self) -> Self {
        self - (self / y).trunc() * y
    }
}

impl Zero for DoubleDouble {
    fn zero() -> Self {
        DoubleDouble::from_f64(0.0)
    }
    fn is_zero(&self) -> bool {
        self.hi == 0.0 && self.lo == 0.0
    }
}

impl One for DoubleDouble {
    fn one() -> Self {
        DoubleDouble::from_f64(1.0)
    }
}

impl Num for DoubleDouble {
    type FromStrRadixErr = <f64 as Num>::FromStrRadixErr;
    fn from_str_radix(s: &str, radix: u32) -> Result<Self, Self::FromStrRadixErr> {
        f64::from_str_radix(s, radix).map(DoubleDouble::from_f64)
    }
}

/// Integer power by repeated squaring, valid for any `Field`.
pub fn powi<E: Field>(base: E, exp: i64) -> E {
    let mut acc = E::one();
    let mut b = base;
    let mut e = exp.unsigned_abs();
    while e > 0 {
        if e & 1 == 1 {
            acc = acc * b;
        }
        b = b * b;
        e >>= 1;
    }
    if exp < 0 {
        E::one() / acc
    } else {
        acc
    }
}

pub fn c64_to_dd(z: Complex<f64>) -> Complex<DoubleDouble> {
    Complex::new(z.re.into(), z.im.into())
}

pub fn dd_to_c64(z: Complex<DoubleDouble>) -> Complex<f64> {
    Complex::new(z.re.to_f64(), z.im.to_f64())
}
