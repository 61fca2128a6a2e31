//! The coefficient ring Q[I, S] / (I^2 + 1, S^2 - r).
//!
//! `I` is a formal imaginary unit and `S` a formal square root of the root
//! index r, so every element is q0 + q1*I + q2*S + q3*I*S with rational parts.
//! For non-square r this is the field Q(i, sqrt r); for square r the ring has
//! zero divisors and division is restricted to elements of nonzero norm.

use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use num::{BigRational, One, Signed, Zero};

use crate::error::{Error, Result};

#[derive(Clone, PartialEq, Eq, Debug)]
pub struct Scalar {
    r: u32,
    /// parts[0] + parts[1]*I + parts[2]*S + parts[3]*I*S, always reduced.
    parts: [BigRational; 4],
}

fn rat_u32(n: u32) -> BigRational {
    BigRational::from_integer(n.into())
}

impl Scalar {
    pub fn new(r: u32, parts: [BigRational; 4]) -> Result<Self> {
        if r < 2 {
            return Err(Error::RootIndexTooSmall(r));
        }
        Ok(Scalar { r, parts })
    }

    pub fn zero(r: u32) -> Self {
        Scalar {
            r,
            parts: [
                BigRational::zero(),
                BigRational::zero(),
                BigRational::zero(),
                BigRational::zero(),
            ],
        }
    }

    pub fn one(r: u32) -> Self {
        Scalar::from_integer(r, 1)
    }

    pub fn from_rational(r: u32, q: BigRational) -> Self {
        let mut s = Scalar::zero(r);
        s.parts[0] = q;
        s
    }

    pub fn from_integer(r: u32, n: i64) -> Self {
        Scalar::from_rational(r, BigRational::from_integer(n.into()))
    }

    /// The formal imaginary unit.
    pub fn i(r: u32) -> Self {
        let mut s = Scalar::zero(r);
        s.parts[1] = BigRational::one();
        s
    }

    /// The formal square root of r.
    pub fn s(r: u32) -> Self {
        let mut s = Scalar::zero(r);
        s.parts[2] = BigRational::one();
        s
    }

    /// I*S / r, the symbol produced when D acts on a coefficient.
    pub fn kappa(r: u32) -> Self {
        let mut s = Scalar::zero(r);
        s.parts[3] = BigRational::new(1.into(), i64::from(r).into());
        s
    }

    pub fn r(&self) -> u32 {
        self.r
    }

    pub fn parts(&self) -> &[BigRational; 4] {
        &self.parts
    }

    pub fn is_zero(&self) -> bool {
        self.parts.iter().all(Zero::is_zero)
    }

    pub fn is_one(&self) -> bool {
        self.parts[0].is_one() && self.parts[1..].iter().all(Zero::is_zero)
    }

    /// True when the I and S components all vanish.
    pub fn is_rational(&self) -> bool {
        self.parts[1..].iter().all(Zero::is_zero)
    }

    /// The rational component; the full value only when `is_rational`.
    pub fn rational_part(&self) -> &BigRational {
        &self.parts[0]
    }

    fn check_same_r(&self, other: &Scalar) -> Result<()> {
        if self.r == other.r {
            Ok(())
        } else {
            Err(Error::MixedRootIndex {
                left: self.r,
                right: other.r,
            })
        }
    }

    pub fn try_add(&self, other: &Scalar) -> Result<Scalar> {
        self.check_same_r(other)?;
        let mut parts = self.parts.clone();
        for (p, q) in parts.iter_mut().zip(other.parts.iter()) {
            *p += q;
        }
        Ok(Scalar { r: self.r, parts })
    }

    pub fn try_sub(&self, other: &Scalar) -> Result<Scalar> {
        self.try_add(&other.clone().neg())
    }

    pub fn try_mul(&self, other: &Scalar) -> Result<Scalar> {
        self.check_same_r(other)?;
        let [a0, a1, a2, a3] = &self.parts;
        let [b0, b1, b2, b3] = &other.parts;
        let r = rat_u32(self.r);
        // (A + B*S)(C + E*S) = AC + r*BE + (AE + BC)*S over Q[I].
        let q0 = a0 * b0 - a1 * b1 + &r * (a2 * b2 - a3 * b3);
        let q1 = a0 * b1 + a1 * b0 + &r * (a2 * b3 + a3 * b2);
        let q2 = a0 * b2 - a1 * b3 + a2 * b0 - a3 * b1;
        let q3 = a0 * b3 + a1 * b2 + a2 * b1 + a3 * b0;
        Ok(Scalar {
            r: self.r,
            parts: [q0, q1, q2, q3],
        })
    }

    pub fn scale(&self, q: &BigRational) -> Scalar {
        let mut parts = self.parts.clone();
        for p in parts.iter_mut() {
            *p *= q;
        }
        Scalar { r: self.r, parts }
    }

    /// Multiplicative inverse. Defined exactly when the norm
    /// N(x) = |A^2 - r*B^2|^2 (writing x = A + B*S over Q[I]) is nonzero;
    /// for square r the ring has zero divisors and those are rejected.
    pub fn try_inv(&self) -> Result<Scalar> {
        if self.is_zero() {
            return Err(Error::DivisionByZero);
        }
        let [a0, a1, a2, a3] = &self.parts;
        let r = rat_u32(self.r);
        // u = A^2 - r*B^2 in Q[I].
        let u0 = a0 * a0 - a1 * a1 - &r * (a2 * a2 - a3 * a3);
        let u1 = (a0 * a1 - &r * (a2 * a3)) * BigRational::from_integer(2.into());
        let norm = &u0 * &u0 + &u1 * &u1;
        if norm.is_zero() {
            return Err(Error::NotInvertible(self.to_string()));
        }
        // x^{-1} = (A - B*S)(u0 - u1*I) / norm.
        let conj_s = Scalar {
            r: self.r,
            parts: [a0.clone(), a1.clone(), -a2.clone(), -a3.clone()],
        };
        let u_bar = Scalar {
            r: self.r,
            parts: [u0, -u1, BigRational::zero(), BigRational::zero()],
        };
        Ok(conj_s.try_mul(&u_bar)?.scale(&norm.recip()))
    }

    pub fn try_div(&self, other: &Scalar) -> Result<Scalar> {
        self.try_mul(&other.try_inv()?)
    }

    pub fn pow(&self, n: u32) -> Scalar {
        let mut out = Scalar::one(self.r);
        for _ in 0..n {
            out = out.try_mul(self).expect("same ring");
        }
        out
    }
}

impl Add for Scalar {
    type Output = Scalar;
    fn add(self, rhs: Scalar) -> Scalar {
        self.try_add(&rhs).expect("scalar addition across root indices")
    }
}

impl Sub for Scalar {
    type Output = Scalar;
    fn sub(self, rhs: Scalar) -> Scalar {
        self.try_sub(&rhs).expect("scalar subtraction across root indices")
    }
}

impl Mul for Scalar {
    type Output = Scalar;
    fn mul(self, rhs: Scalar) -> Scalar {
        self.try_mul(&rhs).expect("scalar multiplication across root indices")
    }
}

impl Neg for Scalar {
    type Output = Scalar;
    fn neg(self) -> Scalar {
        let mut parts = self.parts;
        for p in parts.iter_mut() {
            *p = -std::mem::take(p);
        }
        Scalar { r: self.r, parts }
    }
}

impl fmt::Display for Scalar {
    /// Renders as `(q0 + q1*I + q2*S + q3*I*S)` with zero components omitted.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_zero() {
            return write!(f, "(0)");
        }
        let symbols = ["", "I", "S", "I*S"];
        let mut body = String::new();
        for (q, sym) in self.parts.iter().zip(symbols) {
            if q.is_zero() {
                continue;
            }
            let mag = q.abs();
            if body.is_empty() {
                if q.is_negative() {
                    body.push('-');
                }
            } else if q.is_negative() {
                body.push_str(" - ");
            } else {
                body.push_str(" + ");
            }
            if sym.is_empty() {
                body.push_str(&mag.to_string());
            } else if mag.is_one() {
                body.push_str(sym);
            } else {
                body.push_str(&format!("{mag}*{sym}"));
            }
        }
        write!(f, "({body})")
    }
}
