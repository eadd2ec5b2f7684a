//! Double-double arithmetic (~31 significant decimal digits).
//!
//! The Wilson-chain Lanczos recursion works on poles spread over many
//! decades; in plain `f64` the recursion loses orthogonality once the
//! hoppings drop below roughly `sqrt(eps)` of the bandwidth. Running the
//! recursion in double-double pushes that floor far below anything the
//! solvers here ever request.
//!
//! Algorithms follow Dekker and Hida–Li–Bailey (the `qd` library). No FMA
//! is assumed: products are split with Dekker's 2^27+1 trick so the code
//! is exact on any IEEE-754 double hardware.

use std::cmp::Ordering;
use std::ops::{Add, Div, Mul, Neg, Sub};

/// Unevaluated sum `hi + lo` with `|lo| <= ulp(hi)/2`.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct Dd {
    pub hi: f64,
    pub lo: f64,
}

#[inline]
fn two_sum(a: f64, b: f64) -> (f64, f64) {
    let s = a + b;
    let bb = s - a;
    let err = (a - (s - bb)) + (b - bb);
    (s, err)
}

#[inline]
fn quick_two_sum(a: f64, b: f64) -> (f64, f64) {
    // requires |a| >= |b|
    let s = a + b;
    let err = b - (s - a);
    (s, err)
}

#[inline]
fn split(a: f64) -> (f64, f64) {
    const SPLITTER: f64 = 134_217_729.0; // 2^27 + 1
    let c = SPLITTER * a;
    let hi = c - (c - a);
    let lo = a - hi;
    (hi, lo)
}

#[inline]
fn two_prod(a: f64, b: f64) -> (f64, f64) {
    let p = a * b;
    let (ah, al) = split(a);
    let (bh, bl) = split(b);
    let err = ((ah * bh - p) + ah * bl + al * bh) + al * bl;
    (p, err)
}

impl Dd {
    pub const ZERO: Dd = Dd { hi: 0.0, lo: 0.0 };
    pub const ONE: Dd = Dd { hi: 1.0, lo: 0.0 };

    #[inline]
    pub fn from_f64(x: f64) -> Dd {
        Dd { hi: x, lo: 0.0 }
    }

    /// Exact sum of two doubles.
    #[inline]
    pub fn from_sum(a: f64, b: f64) -> Dd {
        let (s, e) = two_sum(a, b);
        Dd { hi: s, lo: e }
    }

    /// Exact product of two doubles.
    #[inline]
    pub fn from_prod(a: f64, b: f64) -> Dd {
        let (p, e) = two_prod(a, b);
        Dd { hi: p, lo: e }
    }

    #[inline]
    pub fn to_f64(self) -> f64 {
        self.hi + self.lo
    }

    #[inline]
    pub fn abs(self) -> Dd {
        if self.hi < 0.0 || (self.hi == 0.0 && self.lo < 0.0) {
            -self
        } else {
            self
        }
    }

    pub fn sqrt(self) -> Dd {
        // Karp's trick: one Newton step on the f64 estimate, done in Dd.
        if self.hi == 0.0 && self.lo == 0.0 {
            return Dd::ZERO;
        }
        assert!(self.hi > 0.0, "Dd::sqrt of negative value {self:?}");
        let x = 1.0 / self.hi.sqrt();
        let ax = self.hi * x;
        let ax_dd = Dd::from_f64(ax);
        let err = (self - ax_dd * ax_dd).hi * (x * 0.5);
        ax_dd + Dd::from_f64(err)
    }
}

impl Add for Dd {
    type Output = Dd;
    #[inline]
    fn add(self, rhs: Dd) -> Dd {
        let (s1, s2) = two_sum(self.hi, rhs.hi);
        let (t1, t2) = two_sum(self.lo, rhs.lo);
        let (s1, s2b) = quick_two_sum(s1, s2 + t1);
        let (hi, lo) = quick_two_sum(s1, s2b + t2);
        Dd { hi, lo }
    }
}

impl Sub for Dd {
    type Output = Dd;
    #[inline]
    fn sub(self, rhs: Dd) -> Dd {
        self + (-rhs)
    }
}

impl Neg for Dd {
    type Output = Dd;
    #[inline]
    fn neg(self) -> Dd {
        Dd {
            hi: -self.hi,
            lo: -self.lo,
        }
    }
}

impl Mul for Dd {
    type Output = Dd;
    #[inline]
    fn mul(self, rhs: Dd) -> Dd {
        let (p1, p2) = two_prod(self.hi, rhs.hi);
        let p2 = p2 + self.hi * rhs.lo + self.lo * rhs.hi;
        let (hi, lo) = quick_two_sum(p1, p2);
        Dd { hi, lo }
    }
}

impl Div for Dd {
    type Output = Dd;
    #[inline]
    fn div(self, rhs: Dd) -> Dd {
        // long division with two correction steps
        let q1 = self.hi / rhs.hi;
        let r = self - rhs * Dd::from_f64(q1);
        let q2 = r.hi / rhs.hi;
        let r = r - rhs * Dd::from_f64(q2);
        let q3 = r.hi / rhs.hi;
        let (hi, lo) = quick_two_sum(q1, q2);
        Dd { hi, lo } + Dd::from_f64(q3)
    }
}

impl PartialOrd for Dd {
    fn partial_cmp(&self, other: &Dd) -> Option<Ordering> {
        match self.hi.partial_cmp(&other.hi) {
            Some(Ordering::Equal) => self.lo.partial_cmp(&other.lo),
            ord => ord,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sum_keeps_small_terms() {
        let a = Dd::from_f64(1.0);
        let b = Dd::from_f64(1e-25);
        let c = (a + b) - a;
        assert_eq!(c.to_f64(), 1e-25);
    }

    #[test]
    fn product_is_exact() {
        // (1 + 2^-30) * (1 - 2^-30) = 1 - 2^-60 exactly
        let x = Dd::from_sum(1.0, (2.0f64).powi(-30));
        let y = Dd::from_sum(1.0, -(2.0f64).powi(-30));
        let p = x * y;
        let err = p - (Dd::ONE - Dd::from_f64((2.0f64).powi(-60)));
        assert!(err.to_f64().abs() < 1e-32);
    }

    #[test]
    fn division_round_trip() {
        let a = Dd::from_prod(std::f64::consts::PI, 1.0) * Dd::from_f64(1e10);
        let b = Dd::from_f64(7.3);
        let q = a / b;
        let back = q * b - a;
        assert!(back.to_f64().abs() < 1e-20 * a.hi.abs());
    }

    #[test]
    fn sqrt_matches_reference() {
        // sqrt(2) to 32 digits: 1.4142135623730950488016887242096981
        let r = Dd::from_f64(2.0).sqrt();
        let hi = 1.414_213_562_373_095_1_f64;
        assert!((r.hi - hi).abs() <= f64::EPSILON * 2.0);
        let sq = r * r - Dd::from_f64(2.0);
        assert!(sq.to_f64().abs() < 1e-31);
    }
}
