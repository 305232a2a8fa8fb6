//! Error-free transformations and a small double-double type.
//!
//! The floating-point evaluation path carries real lifts whose magnitude grows
//! quadratically along an orbit; only their value mod 1 matters, so the lifts
//! are kept as unevaluated `hi + lo` pairs and reduced at the end.

use std::ops::{Add, Mul, Neg, Sub};

#[inline]
pub fn two_sum(a: f64, b: f64) -> (f64, f64) {
    let s = a + b;
    let bb = s - a;
    let err = (a - (s - bb)) + (b - bb);
    (s, err)
}

#[inline]
pub fn two_prod(a: f64, b: f64) -> (f64, f64) {
    let p = a * b;
    (p, a.mul_add(b, -p))
}

/// Neumaier's compensated summation.
#[derive(Clone, Copy, Debug, Default)]
pub struct Neumaier {
    sum: f64,
    comp: f64,
}

impl Neumaier {
    pub fn new() -> Self {
        Self::default()
    }

    #[inline]
    pub fn add(&mut self, v: f64) {
        let t = self.sum + v;
        if self.sum.abs() >= v.abs() {
            self.comp += (self.sum - t) + v;
        } else {
            self.comp += (v - t) + self.sum;
        }
        self.sum = t;
    }

    pub fn total(&self) -> f64 {
        self.sum + self.comp
    }

    pub fn as_dd(&self) -> Dd {
        Dd::from_sum(self.sum, self.comp)
    }
}

/// Unevaluated sum `hi + lo` with `|lo| <= ulp(hi) / 2`.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct Dd {
    pub hi: f64,
    pub lo: f64,
}

impl Dd {
    pub const ZERO: Dd = Dd { hi: 0.0, lo: 0.0 };

    pub fn new(v: f64) -> Self {
        Dd { hi: v, lo: 0.0 }
    }

    pub fn from_sum(a: f64, b: f64) -> Self {
        let (hi, lo) = two_sum(a, b);
        Dd { hi, lo }
    }

    pub fn to_f64(self) -> f64 {
        self.hi + self.lo
    }

    pub fn floor(self) -> f64 {
        let f = self.hi.floor();
        if f == self.hi {
            // hi is an integer; lo decides
            f + self.lo.floor()
        } else {
            f
        }
    }

    /// Fractional part in `[0, 1)`, rounded to `f64`.
    pub fn fract(self) -> f64 {
        let f = self.hi.floor();
        let r = (self.hi - f) + self.lo;
        let r = r - r.floor();
        if r >= 1.0 {
            0.0
        } else {
            r
        }
    }

    pub fn mul_f64(self, b: f64) -> Dd {
        let (p, e) = two_prod(self.hi, b);
        Dd::from_sum(p, e + self.lo * b)
    }
}

impl From<f64> for Dd {
    fn from(v: f64) -> Self {
        Dd::new(v)
    }
}

impl Add for Dd {
    type Output = Dd;
    fn add(self, rhs: Dd) -> Dd {
        let (s, e) = two_sum(self.hi, rhs.hi);
        let (t, f) = two_sum(self.lo, rhs.lo);
        let (s, e) = two_sum(s, e + t);
        Dd::from_sum(s, e + f)
    }
}

impl Neg for Dd {
    type Output = Dd;
    fn neg(self) -> Dd {
        Dd {
            hi: -self.hi,
            lo: -self.lo,
        }
    }
}

impl Sub for Dd {
    type Output = Dd;
    fn sub(self, rhs: Dd) -> Dd {
        self + (-rhs)
    }
}

impl Mul for Dd {
    type Output = Dd;
    fn mul(self, rhs: Dd) -> Dd {
        let (p, e) = two_prod(self.hi, rhs.hi);
        Dd::from_sum(p, e + (self.hi * rhs.lo + self.lo * rhs.hi))
    }
}

/// Distance between `a` and `b` on `R/Z`.
pub fn circle_dist(a: f64, b: f64) -> f64 {
    let d = (a - b).rem_euclid(1.0);
    d.min(1.0 - d)
}
