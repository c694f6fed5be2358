//! Exact Gaussian-integer arithmetic and projective boundary points.
//!
//! Rational integers are embedded as Gaussian integers with zero imaginary
//! part, so the same code serves PSL(2,ℤ) and PSL(2,ℤ[i]).

use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use num_bigint::{BigInt, Sign};
use num_complex::Complex64;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

use crate::hypgeom::BoundaryPoint;

/// `m · 2^e` without intermediate overflow.
pub fn ldexp(m: f64, e: i64) -> f64 {
    if m == 0.0 {
        return 0.0;
    }
    let mut x = m;
    let mut e = e;
    while e > 1000 {
        x *= 2f64.powi(1000);
        e -= 1000;
        if x.is_infinite() {
            return x;
        }
    }
    while e < -1000 {
        x *= 2f64.powi(-1000);
        e += 1000;
        if x == 0.0 {
            return x;
        }
    }
    x * 2f64.powi(e as i32)
}

/// Splits a finite float into `(mantissa, exponent)` with `x = mantissa · 2^exponent`.
pub fn decode_f64(x: f64) -> (i64, i64) {
    if x == 0.0 {
        return (0, 0);
    }
    let bits = x.to_bits();
    let sign = if bits >> 63 == 0 { 1 } else { -1 };
    let exp = ((bits >> 52) & 0x7ff) as i64;
    let mant = if exp == 0 {
        (bits & 0xf_ffff_ffff_ffff) << 1
    } else {
        (bits & 0xf_ffff_ffff_ffff) | 0x10_0000_0000_0000
    };
    (sign * mant as i64, exp - 1075)
}

/// Top bits of `x` as a float together with the binary exponent that was removed:
/// `x ≈ m · 2^shift`.
fn split_big(x: &BigInt) -> (f64, i64) {
    let bits = x.bits() as i64;
    if bits <= 60 {
        return (x.to_f64().unwrap_or(0.0), 0);
    }
    let shift = bits - 60;
    let top: BigInt = x >> (shift as usize);
    (top.to_f64().unwrap_or(0.0), shift)
}

/// `x / 2^shift` as a float.
pub fn big_to_f64_scaled(x: &BigInt, shift: i64) -> f64 {
    let (m, s) = split_big(x);
    ldexp(m, s - shift)
}

/// Natural logarithm of `|x|`; `-inf` for zero.
pub fn big_ln_abs(x: &BigInt) -> f64 {
    if x.is_zero() {
        return f64::NEG_INFINITY;
    }
    let (m, s) = split_big(x);
    m.abs().ln() + s as f64 * std::f64::consts::LN_2
}

/// Gaussian integer with arbitrary-precision parts.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
pub struct GaussInt {
    pub re: BigInt,
    pub im: BigInt,
}

impl GaussInt {
    pub fn new(re: impl Into<BigInt>, im: impl Into<BigInt>) -> Self {
        GaussInt {
            re: re.into(),
            im: im.into(),
        }
    }

    pub fn real(re: impl Into<BigInt>) -> Self {
        GaussInt {
            re: re.into(),
            im: BigInt::zero(),
        }
    }

    pub fn zero() -> Self {
        GaussInt::default()
    }

    pub fn one() -> Self {
        GaussInt::real(1)
    }

    pub fn i() -> Self {
        GaussInt::new(0, 1)
    }

    pub fn is_zero(&self) -> bool {
        self.re.is_zero() && self.im.is_zero()
    }

    pub fn is_real(&self) -> bool {
        self.im.is_zero()
    }

    pub fn conj(&self) -> Self {
        GaussInt {
            re: self.re.clone(),
            im: -&self.im,
        }
    }

    /// `|z|²`.
    pub fn norm(&self) -> BigInt {
        &self.re * &self.re + &self.im * &self.im
    }

    /// Multiplies by the unit `i^k`.
    pub fn mul_unit(&self, k: u8) -> Self {
        match k % 4 {
            0 => self.clone(),
            1 => GaussInt {
                re: -&self.im,
                im: self.re.clone(),
            },
            2 => -self,
            _ => GaussInt {
                re: self.im.clone(),
                im: -&self.re,
            },
        }
    }

    /// Bit length of the larger part.
    pub fn bits(&self) -> u64 {
        self.re.bits().max(self.im.bits())
    }

    /// Positive real part, or zero real part and positive imaginary part.
    pub fn is_canonical_sign(&self) -> bool {
        match self.re.sign() {
            Sign::Plus => true,
            Sign::Minus => false,
            Sign::NoSign => self.im.is_positive(),
        }
    }

    /// Value as a float (may overflow to infinity for huge entries).
    pub fn to_complex(&self) -> Complex64 {
        Complex64::new(
            self.re.to_f64().unwrap_or(f64::NAN),
            self.im.to_f64().unwrap_or(f64::NAN),
        )
    }

    fn to_complex_scaled(&self) -> (Complex64, i64) {
        let shift = (self.bits() as i64 - 60).max(0);
        (
            Complex64::new(
                big_to_f64_scaled(&self.re, shift),
                big_to_f64_scaled(&self.im, shift),
            ),
            shift,
        )
    }

    pub fn from_i64_pair(re: i64, im: i64) -> Self {
        GaussInt::new(re, im)
    }

    pub fn small(&self) -> Option<(i64, i64)> {
        Some((self.re.to_i64()?, self.im.to_i64()?))
    }
}

impl fmt::Display for GaussInt {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.im.is_zero() {
            write!(f, "{}", self.re)
        } else if self.re.is_zero() {
            write!(f, "{}i", self.im)
        } else if self.im.is_negative() {
            write!(f, "({}-{}i)", self.re, -&self.im)
        } else {
            write!(f, "({}+{}i)", self.re, self.im)
        }
    }
}

impl<'a> Add<&'a GaussInt> for &'a GaussInt {
    type Output = GaussInt;
    fn add(self, o: &GaussInt) -> GaussInt {
        GaussInt {
            re: &self.re + &o.re,
            im: &self.im + &o.im,
        }
    }
}

impl<'a> Sub<&'a GaussInt> for &'a GaussInt {
    type Output = GaussInt;
    fn sub(self, o: &GaussInt) -> GaussInt {
        GaussInt {
            re: &self.re - &o.re,
            im: &self.im - &o.im,
        }
    }
}

impl<'a> Mul<&'a GaussInt> for &'a GaussInt {
    type Output = GaussInt;
    fn mul(self, o: &GaussInt) -> GaussInt {
        if self.im.is_zero() && o.im.is_zero() {
            return GaussInt::real(&self.re * &o.re);
        }
        GaussInt {
            re: &self.re * &o.re - &self.im * &o.im,
            im: &self.re * &o.im + &self.im * &o.re,
        }
    }
}

impl Neg for &GaussInt {
    type Output = GaussInt;
    fn neg(self) -> GaussInt {
        GaussInt {
            re: -&self.re,
            im: -&self.im,
        }
    }
}

impl Neg for GaussInt {
    type Output = GaussInt;
    fn neg(self) -> GaussInt {
        GaussInt {
            re: -self.re,
            im: -self.im,
        }
    }
}

/// Exact dyadic encoding of a complex float: `c = g · 2^{-shift}`.
pub fn dyadic(c: Complex64) -> (GaussInt, u32) {
    let (mr, er) = decode_f64(c.re);
    let (mi, ei) = decode_f64(c.im);
    let shift = [-er, -ei, 0].into_iter().max().unwrap_or(0).max(0);
    let part = |m: i64, e: i64| -> BigInt {
        if m == 0 {
            BigInt::zero()
        } else {
            BigInt::from(m) << ((e + shift) as usize)
        }
    };
    (GaussInt::new(part(mr, er), part(mi, ei)), shift as u32)
}

/// A point of ℂ ∪ {∞} in exact homogeneous coordinates `[z : w] = z / w`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ProjPoint {
    pub z: GaussInt,
    pub w: GaussInt,
}

impl ProjPoint {
    pub fn new(z: GaussInt, w: GaussInt) -> Self {
        debug_assert!(!(z.is_zero() && w.is_zero()));
        ProjPoint { z, w }
    }

    pub fn infinity() -> Self {
        ProjPoint::new(GaussInt::one(), GaussInt::zero())
    }

    pub fn is_infinity(&self) -> bool {
        self.w.is_zero()
    }

    /// Exact encoding of a float boundary point.
    pub fn from_boundary(b: &BoundaryPoint) -> Self {
        match b {
            BoundaryPoint::Infinity => ProjPoint::infinity(),
            BoundaryPoint::Finite(c) => {
                let (g, shift) = dyadic(*c);
                ProjPoint::new(g, GaussInt::real(BigInt::one() << shift as usize))
            }
        }
    }

    /// Nearest float boundary point.
    pub fn to_boundary(&self) -> BoundaryPoint {
        if self.w.is_zero() {
            return BoundaryPoint::Infinity;
        }
        let (zf, ez) = self.z.to_complex_scaled();
        let (wf, ew) = self.w.to_complex_scaled();
        let q = zf / wf;
        let e = ez - ew;
        let v = Complex64::new(ldexp(q.re, e), ldexp(q.im, e));
        if v.re.is_finite() && v.im.is_finite() {
            BoundaryPoint::Finite(v)
        } else {
            BoundaryPoint::Infinity
        }
    }

    /// Scaled float coordinates `(ẑ, ŵ, s)` with `[z : w] = 2^s [ẑ : ŵ]` and `max(|ẑ|,|ŵ|) ~ 1`.
    pub fn scaled(&self) -> (Complex64, Complex64, i64) {
        let bits = self.z.bits().max(self.w.bits()) as i64;
        let shift = (bits - 60).max(0);
        let f = |g: &GaussInt| {
            Complex64::new(
                big_to_f64_scaled(&g.re, shift),
                big_to_f64_scaled(&g.im, shift),
            )
        };
        (f(&self.z), f(&self.w), shift)
    }

    /// Canonical representative modulo multiplication by units, used as a cusp identity.
    pub fn normalized(&self) -> ProjPoint {
        let lead = if self.w.is_zero() { &self.z } else { &self.w };
        let k = (0..4u8)
            .find(|&k| {
                let u = lead.mul_unit(k);
                u.re.is_positive() && !u.im.is_negative()
            })
            .unwrap_or(0);
        ProjPoint::new(self.z.mul_unit(k), self.w.mul_unit(k))
    }

    pub fn bits(&self) -> u64 {
        self.z.bits().max(self.w.bits())
    }

    /// Complex conjugate point.
    pub fn conj(&self) -> ProjPoint {
        ProjPoint::new(self.z.conj(), self.w.conj())
    }
}

impl fmt::Display for ProjPoint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.w.is_zero() {
            write!(f, "∞")
        } else {
            write!(f, "{}/{}", self.z, self.w)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn dyadic_round_trip() {
        for &(x, y) in &[(0.3, 0.0), (-1.25e-7, 3.5), (1e300, -2.0), (0.0, 0.0)] {
            let p = ProjPoint::from_boundary(&BoundaryPoint::Finite(Complex64::new(x, y)));
            match p.to_boundary() {
                BoundaryPoint::Finite(c) => {
                    assert_eq!(c.re, x);
                    assert_eq!(c.im, y);
                }
                BoundaryPoint::Infinity => panic!("lost finite point"),
            }
        }
    }

    #[test]
    fn big_logs() {
        let x = BigInt::one() << 5000usize;
        assert!((big_ln_abs(&x) - 5000.0 * std::f64::consts::LN_2).abs() < 1e-9);
        assert!((big_ln_abs(&BigInt::from(-7)) - 7f64.ln()).abs() < 1e-15);
    }

    #[test]
    fn normalization_mod_units() {
        let p = ProjPoint::new(GaussInt::new(3, 1), GaussInt::new(1, 2));
        let n = p.normalized();
        for k in 0..4 {
            let q = ProjPoint::new(p.z.mul_unit(k), p.w.mul_unit(k));
            assert_eq!(q.normalized(), n);
        }
    }

    #[test]
    fn huge_ratio_to_float() {
        let big = BigInt::one() << 3000usize;
        let p = ProjPoint::new(GaussInt::real(&big * 3), GaussInt::real(&big * 2));
        assert_eq!(p.to_boundary(), BoundaryPoint::Finite(Complex64::new(1.5, 0.0)));
    }
}
