//! Scalar types for the precision ladder used by the orthogonalization.
//!
//! [`Real`] abstracts over `f64` and the fixed-precision binary floats
//! [`Mp<BITS>`]. The latter keep a signed integer mantissa of exactly `BITS`
//! bits and round to nearest after every operation. They are slow but
//! simple, and only run when plain `f64` does not reach the tolerance.

use core::cmp::Ordering;
use core::fmt;
use core::ops::{Add, Div, Mul, Neg, Sub};

use alloc::vec::Vec;
use num_bigint::{BigInt, BigUint, Sign};
use num_complex::Complex64;
use num_traits::{ToPrimitive, Zero};

use crate::math;

pub trait Real:
    Copy
    + fmt::Debug
    + PartialOrd
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Div<Output = Self>
    + Neg<Output = Self>
    + Send
    + Sync
{
    /// Mantissa bits.
    const BITS: u32;

    fn from_f64(x: f64) -> Self;
    fn to_f64(&self) -> f64;
    fn sqrt(&self) -> Self;

    fn zero() -> Self {
        Self::from_f64(0.0)
    }
    fn one() -> Self {
        Self::from_f64(1.0)
    }
    fn abs(&self) -> Self {
        if *self < Self::zero() {
            -*self
        } else {
            *self
        }
    }
    /// Decimal digits carried, `floor(BITS * log10 2)`.
    fn digits() -> u32 {
        (Self::BITS as f64 * core::f64::consts::LOG10_2) as u32
    }

    /// Non-overlapping `f64` expansion whose sum reproduces `self` to
    /// working precision. The first entry is the nearest `f64`.
    fn to_f64_expansion(&self) -> Vec<f64> {
        let mut out = Vec::new();
        let mut rest = *self;
        let parts = Self::BITS.div_ceil(53) + 1;
        for _ in 0..parts {
            let head = rest.to_f64();
            if head == 0.0 {
                break;
            }
            out.push(head);
            rest = rest - Self::from_f64(head);
        }
        if out.is_empty() {
            out.push(0.0);
        }
        out
    }

    fn from_f64_expansion(parts: &[f64]) -> Self {
        // Sum from the small end so nothing is lost in `f64`.
        parts
            .iter()
            .rev()
            .fold(Self::zero(), |acc, &p| acc + Self::from_f64(p))
    }
}

impl Real for f64 {
    const BITS: u32 = 53;

    fn from_f64(x: f64) -> Self {
        x
    }
    fn to_f64(&self) -> f64 {
        *self
    }
    fn sqrt(&self) -> Self {
        math::sqrt(*self)
    }
}

/// Binary floating point value `mant * 2^exp` with `|mant|` holding exactly
/// `BITS` bits (or zero).
///
/// `Copy` is not available for heap mantissas, so the type stores its
/// mantissa inline as up to 16 little-endian `u64` limbs (1024 bits).
#[derive(Clone, Copy)]
pub struct Mp<const BITS: u32> {
    neg: bool,
    exp: i64,
    len: u8,
    limbs: [u64; 16],
}

impl<const BITS: u32> Mp<BITS> {
    const ZERO: Self = Mp { neg: false, exp: 0, len: 0, limbs: [0; 16] };

    pub fn is_zero(&self) -> bool {
        self.len == 0
    }

    fn mant(&self) -> BigUint {
        BigUint::from_slice(&self.u32_digits())
    }

    fn u32_digits(&self) -> Vec<u32> {
        let mut v = Vec::with_capacity(self.len as usize * 2);
        for &l in &self.limbs[..self.len as usize] {
            v.push(l as u32);
            v.push((l >> 32) as u32);
        }
        v
    }

    fn signed(&self) -> BigInt {
        BigInt::from_biguint(if self.neg { Sign::Minus } else { Sign::Plus }, self.mant())
    }

    /// Rounds `m * 2^exp` to `BITS` bits (round half away from zero).
    fn from_parts(neg: bool, m: BigUint, exp: i64) -> Self {
        if m.is_zero() {
            return Self::ZERO;
        }
        let target = BITS as u64;
        let mut m = m;
        let mut exp = exp;
        let bits = m.bits();
        if bits > target {
            let shift = bits - target;
            let half = BigUint::from(1u8) << (shift - 1);
            m = (m + half) >> shift;
            exp += shift as i64;
            if m.bits() > target {
                m >>= 1u32;
                exp += 1;
            }
        } else if bits < target {
            let shift = target - bits;
            m <<= shift;
            exp -= shift as i64;
        }
        let digits = m.to_u64_digits();
        let mut limbs = [0u64; 16];
        limbs[..digits.len()].copy_from_slice(&digits);
        Mp { neg, exp, len: digits.len() as u8, limbs }
    }

    fn from_signed(v: BigInt, exp: i64) -> Self {
        let neg = v.sign() == Sign::Minus;
        Self::from_parts(neg, v.magnitude().clone(), exp)
    }

    fn add_impl(&self, other: &Self, negate_other: bool) -> Self {
        if other.is_zero() {
            return *self;
        }
        if self.is_zero() {
            return if negate_other { -*other } else { *other };
        }
        let b_neg = other.neg ^ negate_other;
        // Operands more than BITS + 2 binary places apart cannot affect
        // each other after rounding, except through the sticky bit which
        // we ignore.
        let gap = self.exp - other.exp;
        let limit = BITS as i64 + 4;
        if gap > limit {
            return *self;
        }
        if gap < -limit {
            return Mp { neg: b_neg, ..*other };
        }
        let a = self.signed();
        let b = BigInt::from_biguint(if b_neg { Sign::Minus } else { Sign::Plus }, other.mant());
        let (sum, exp) = if gap >= 0 {
            ((a << gap as u64) + b, other.exp)
        } else {
            (a + (b << (-gap) as u64), self.exp)
        };
        Self::from_signed(sum, exp)
    }
}

impl<const BITS: u32> fmt::Debug for Mp<BITS> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Mp<{}>({:e})", BITS, self.to_f64())
    }
}

impl<const BITS: u32> PartialEq for Mp<BITS> {
    fn eq(&self, other: &Self) -> bool {
        self.partial_cmp(other) == Some(Ordering::Equal)
    }
}

impl<const BITS: u32> PartialOrd for Mp<BITS> {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        let d = *self - *other;
        Some(if d.is_zero() {
            Ordering::Equal
        } else if d.neg {
            Ordering::Less
        } else {
            Ordering::Greater
        })
    }
}

impl<const BITS: u32> Neg for Mp<BITS> {
    type Output = Self;
    fn neg(self) -> Self {
        if self.is_zero() {
            self
        } else {
            Mp { neg: !self.neg, ..self }
        }
    }
}

impl<const BITS: u32> Add for Mp<BITS> {
    type Output = Self;
    fn add(self, rhs: Self) -> Self {
        self.add_impl(&rhs, false)
    }
}

impl<const BITS: u32> Sub for Mp<BITS> {
    type Output = Self;
    fn sub(self, rhs: Self) -> Self {
        self.add_impl(&rhs, true)
    }
}

impl<const BITS: u32> Mul for Mp<BITS> {
    type Output = Self;
    fn mul(self, rhs: Self) -> Self {
        if self.is_zero() || rhs.is_zero() {
            return Self::ZERO;
        }
        Self::from_parts(self.neg ^ rhs.neg, self.mant() * rhs.mant(), self.exp + rhs.exp)
    }
}

impl<const BITS: u32> Div for Mp<BITS> {
    type Output = Self;
    fn div(self, rhs: Self) -> Self {
        assert!(!rhs.is_zero(), "Mp division by zero");
        if self.is_zero() {
            return Self::ZERO;
        }
        let extra = BITS as u64 + 2;
        let q = (self.mant() << extra) / rhs.mant();
        Self::from_parts(self.neg ^ rhs.neg, q, self.exp - rhs.exp - extra as i64)
    }
}

impl<const BITS: u32> Real for Mp<BITS> {
    const BITS: u32 = BITS;

    fn from_f64(x: f64) -> Self {
        assert!(x.is_finite(), "Mp::from_f64 on non-finite value");
        if x == 0.0 {
            return Self::ZERO;
        }
        let bits = x.to_bits();
        let neg = bits >> 63 == 1;
        let e = ((bits >> 52) & 0x7ff) as i64;
        let frac = bits & 0x000f_ffff_ffff_ffff;
        let (m, exp) = if e == 0 { (frac, -1074) } else { (frac | (1 << 52), e - 1075) };
        Self::from_parts(neg, BigUint::from(m), exp)
    }

    fn to_f64(&self) -> f64 {
        if self.is_zero() {
            return 0.0;
        }
        let m = self.mant();
        let bits = m.bits();
        let (top, shift) = if bits > 64 {
            ((&m >> (bits - 64)).to_u64().unwrap_or(u64::MAX), bits as i64 - 64)
        } else {
            (m.to_u64().unwrap_or(0), 0)
        };
        let e = self.exp + shift;
        let e = e.clamp(i32::MIN as i64 / 2, i32::MAX as i64 / 2) as i32;
        let v = math::ldexp(top as f64, e);
        if self.neg {
            -v
        } else {
            v
        }
    }

    fn sqrt(&self) -> Self {
        assert!(!self.neg || self.is_zero(), "Mp::sqrt of a negative value");
        if self.is_zero() {
            return Self::ZERO;
        }
        // Scale so the radicand has ~2*BITS+4 bits and an even exponent.
        let mut shift = BITS as i64 + 4;
        if (self.exp - shift) % 2 != 0 {
            shift += 1;
        }
        let r = (self.mant() << shift as u64).sqrt();
        Self::from_parts(false, r, (self.exp - shift) / 2)
    }
}

/// Minimal complex number over a [`Real`].
#[derive(Clone, Copy, Debug)]
pub struct Cplx<R> {
    pub re: R,
    pub im: R,
}

impl<R: Real> Cplx<R> {
    pub fn new(re: R, im: R) -> Self {
        Cplx { re, im }
    }
    pub fn zero() -> Self {
        Cplx { re: R::zero(), im: R::zero() }
    }
    pub fn from_c64(z: Complex64) -> Self {
        Cplx { re: R::from_f64(z.re), im: R::from_f64(z.im) }
    }
    pub fn to_c64(&self) -> Complex64 {
        Complex64::new(self.re.to_f64(), self.im.to_f64())
    }
    pub fn conj(&self) -> Self {
        Cplx { re: self.re, im: -self.im }
    }
    pub fn scale(&self, s: R) -> Self {
        Cplx { re: self.re * s, im: self.im * s }
    }
    pub fn norm_sqr(&self) -> R {
        self.re * self.re + self.im * self.im
    }
}

impl<R: Real> Add for Cplx<R> {
    type Output = Self;
    fn add(self, o: Self) -> Self {
        Cplx { re: self.re + o.re, im: self.im + o.im }
    }
}

impl<R: Real> Sub for Cplx<R> {
    type Output = Self;
    fn sub(self, o: Self) -> Self {
        Cplx { re: self.re - o.re, im: self.im - o.im }
    }
}

impl<R: Real> Mul for Cplx<R> {
    type Output = Self;
    fn mul(self, o: Self) -> Self {
        Cplx {
            re: self.re * o.re - self.im * o.im,
            im: self.re * o.im + self.im * o.re,
        }
    }
}
