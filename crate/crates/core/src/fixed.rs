//! Dyadic fixed-point reals.
//!
//! [`Fixed`] carries 64 fractional bits and is used for the base coordinates
//! `x`, `y` and the rotation parameters. Products of two `Fixed` values need
//! 128 fractional bits, so the fiber coordinate `z` is a [`Fiber`]. Since the
//! group laws only ever multiply base coordinates with each other, every group
//! operation closes exactly over these two types.

use std::fmt;
use std::ops::{Add, AddAssign, Neg, Sub, SubAssign};
use std::str::FromStr;

use num_bigint::BigInt;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error};

const FRAC_MASK: i128 = (1i128 << 64) - 1;
const TWO_POW_64: f64 = 18_446_744_073_709_551_616.0;

/// Signed real with 64 fractional bits, stored as `raw / 2^64`.
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
#[derive(Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub struct Fixed(i128);

impl Fixed {
    pub const ZERO: Fixed = Fixed(0);
    pub const ONE: Fixed = Fixed(1 << 64);

    pub const fn from_raw(raw: i128) -> Self {
        Fixed(raw)
    }

    pub const fn raw(self) -> i128 {
        self.0
    }

    pub const fn from_int(n: i64) -> Self {
        Fixed((n as i128) << 64)
    }

    /// Nearest fixed-point value. Panics on non-finite input or `|v| >= 2^63`.
    pub fn from_f64(v: f64) -> Self {
        assert!(
            v.is_finite() && v.abs() < 9.2e18,
            "cannot represent {v} as a fixed-point real"
        );
        Fixed((v * TWO_POW_64).round() as i128)
    }

    pub fn to_f64(self) -> f64 {
        self.0 as f64 / TWO_POW_64
    }

    /// `floor(self)`.
    pub const fn floor(self) -> i64 {
        (self.0 >> 64) as i64
    }

    /// `self - floor(self)`, always in `[0, 1)`.
    pub const fn fract(self) -> Fixed {
        Fixed(self.0 & FRAC_MASK)
    }

    /// Fractional part as a raw 64-bit numerator over `2^64`.
    pub const fn fract_bits(self) -> u64 {
        self.0 as u64
    }

    pub const fn is_integer(self) -> bool {
        self.0 & FRAC_MASK == 0
    }

    pub fn abs(self) -> Fixed {
        Fixed(self.0.abs())
    }

    pub fn mul_int(self, k: i64) -> Fixed {
        Fixed(
            self.0
                .checked_mul(k as i128)
                .expect("fixed-point overflow in integer multiple"),
        )
    }

    /// Exact division; `None` unless `k` divides the raw value.
    pub fn div_exact(self, k: i64) -> Option<Fixed> {
        if k == 0 || self.0 % k as i128 != 0 {
            None
        } else {
            Some(Fixed(self.0 / k as i128))
        }
    }

    /// Exact product, widened to 128 fractional bits.
    pub fn mul_wide(self, rhs: Fixed) -> Fiber {
        let (ai, af) = (self.0 >> 64, self.0 & FRAC_MASK);
        let (bi, bf) = (rhs.0 >> 64, rhs.0 & FRAC_MASK);
        // Each partial product fits in an i128/u128.
        let whole = Fiber::from_int(ai * bi);
        let cross = Fiber::from_scaled_64(ai * bf) + Fiber::from_scaled_64(af * bi);
        let tiny = Fiber {
            int: 0,
            frac: (af as u128) * (bf as u128),
        };
        whole + cross + tiny
    }

    /// Canonical exact text form `raw/2^64`.
    pub fn to_dyadic_string(self) -> String {
        format!("{}/2^64", self.0)
    }
}

impl fmt::Debug for Fixed {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Fixed({})", self.to_f64())
    }
}

impl fmt::Display for Fixed {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(&self.to_f64(), f)
    }
}

impl Add for Fixed {
    type Output = Fixed;
    fn add(self, rhs: Fixed) -> Fixed {
        Fixed(self.0 + rhs.0)
    }
}

impl Sub for Fixed {
    type Output = Fixed;
    fn sub(self, rhs: Fixed) -> Fixed {
        Fixed(self.0 - rhs.0)
    }
}

impl Neg for Fixed {
    type Output = Fixed;
    fn neg(self) -> Fixed {
        Fixed(-self.0)
    }
}

impl AddAssign for Fixed {
    fn add_assign(&mut self, rhs: Fixed) {
        self.0 += rhs.0;
    }
}

impl SubAssign for Fixed {
    fn sub_assign(&mut self, rhs: Fixed) {
        self.0 -= rhs.0;
    }
}

impl From<i64> for Fixed {
    fn from(n: i64) -> Self {
        Fixed::from_int(n)
    }
}

/// Parses either a decimal literal (`"-0.4142135623730950488"`), snapped to
/// the nearest multiple of `2^-64`, or an exact dyadic `"<int>/2^<k>"` with
/// `k <= 64`.
impl FromStr for Fixed {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Error> {
        let s = s.trim();
        if let Some((num, den)) = s.split_once('/') {
            let num: i128 = num
                .trim()
                .parse()
                .map_err(|_| invalid("dyadic", format!("bad numerator in {s:?}")))?;
            let k: u32 = den
                .trim()
                .strip_prefix("2^")
                .and_then(|k| k.parse().ok())
                .filter(|&k| k <= 64)
                .ok_or_else(|| invalid("dyadic", format!("denominator must be 2^k, k <= 64: {s:?}")))?;
            let raw = num
                .checked_mul(1i128 << (64 - k))
                .ok_or_else(|| invalid("dyadic", format!("{s:?} overflows")))?;
            return Ok(Fixed(raw));
        }
        parse_decimal(s)
    }
}

fn parse_decimal(s: &str) -> Result<Fixed, Error> {
    let bad = || invalid("decimal", format!("not a decimal number: {s:?}"));
    let (negative, body) = match s.as_bytes().first() {
        Some(b'-') => (true, &s[1..]),
        Some(b'+') => (false, &s[1..]),
        _ => (false, s),
    };
    let (int_part, frac_part) = body.split_once('.').unwrap_or((body, ""));
    if int_part.is_empty() && frac_part.is_empty() {
        return Err(bad());
    }
    if !int_part.bytes().chain(frac_part.bytes()).all(|b| b.is_ascii_digit()) {
        return Err(bad());
    }
    let digits = format!("{int_part}{frac_part}");
    let numerator = BigInt::parse_bytes(digits.as_bytes(), 10).ok_or_else(bad)?;
    let scale = BigInt::from(10u32).pow(frac_part.len() as u32);
    // round(numerator * 2^64 / scale), ties away from zero
    let scaled: BigInt = (numerator << 65usize) / &scale;
    let rounded: BigInt = (scaled + 1) >> 1usize;
    let magnitude = i128::try_from(rounded).map_err(|_| invalid("decimal", format!("{s:?} is out of range")))?;
    Ok(Fixed(if negative { -magnitude } else { magnitude }))
}

impl TryFrom<String> for Fixed {
    type Error = Error;
    fn try_from(s: String) -> Result<Self, Error> {
        s.parse()
    }
}

impl From<Fixed> for String {
    fn from(v: Fixed) -> String {
        v.to_dyadic_string()
    }
}

/// Signed real with 128 fractional bits: `int + frac / 2^128`, `frac` the
/// non-negative remainder, so `int` is the floor.
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct Fiber {
    int: i128,
    frac: u128,
}

impl Fiber {
    pub const ZERO: Fiber = Fiber { int: 0, frac: 0 };

    pub const fn from_int(n: i128) -> Self {
        Fiber { int: n, frac: 0 }
    }

    pub const fn from_parts(int: i128, frac: u128) -> Self {
        Fiber { int, frac }
    }

    /// `v / 2^64` for an integer `v`.
    const fn from_scaled_64(v: i128) -> Self {
        Fiber {
            int: v >> 64,
            frac: ((v & FRAC_MASK) as u128) << 64,
        }
    }

    pub const fn from_fixed(v: Fixed) -> Self {
        Fiber::from_scaled_64(v.0)
    }

    /// Exact conversion of the dyadic value of `v`; bits below `2^-128` are
    /// truncated toward negative infinity.
    pub fn from_f64(v: f64) -> Self {
        assert!(v.is_finite(), "cannot represent {v} as a fiber value");
        let floor = v.floor();
        let rem = v - floor; // exact
        Fiber {
            int: floor as i128,
            frac: (rem * TWO_POW_64 * TWO_POW_64) as u128,
        }
    }

    pub const fn floor(self) -> i128 {
        self.int
    }

    pub const fn fract(self) -> Fiber {
        Fiber {
            int: 0,
            frac: self.frac,
        }
    }

    pub const fn fract_bits(self) -> u128 {
        self.frac
    }

    pub const fn is_integer(self) -> bool {
        self.frac == 0
    }

    /// Fractional part as an `f64` in `[0, 1)` (truncated, never rounds up to 1).
    pub fn fract_f64(self) -> f64 {
        (self.frac >> 75) as f64 / 9_007_199_254_740_992.0
    }

    pub fn to_f64(self) -> f64 {
        self.int as f64 + self.fract_f64()
    }

    pub fn mul_int(self, k: i64) -> Fiber {
        let m = k.unsigned_abs() as u128;
        let lo = (self.frac as u64 as u128) * m;
        let hi = (self.frac >> 64) * m;
        let (frac, carry) = lo.overflowing_add(hi << 64);
        let int = self
            .int
            .checked_mul(m as i128)
            .and_then(|v| v.checked_add((hi >> 64) as i128 + carry as i128))
            .expect("fiber overflow in integer multiple");
        let out = Fiber { int, frac };
        if k < 0 {
            -out
        } else {
            out
        }
    }

    /// Distance to the nearest integer, as `f64`.
    pub fn circle_norm(self) -> f64 {
        let f = self.fract_f64();
        f.min(1.0 - f)
    }
}

impl fmt::Debug for Fiber {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Fiber({} + {:.6e})", self.int, self.fract_f64())
    }
}

impl fmt::Display for Fiber {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(&self.to_f64(), f)
    }
}

impl Add for Fiber {
    type Output = Fiber;
    fn add(self, rhs: Fiber) -> Fiber {
        let (frac, carry) = self.frac.overflowing_add(rhs.frac);
        Fiber {
            int: self.int + rhs.int + carry as i128,
            frac,
        }
    }
}

impl Neg for Fiber {
    type Output = Fiber;
    fn neg(self) -> Fiber {
        if self.frac == 0 {
            Fiber {
                int: -self.int,
                frac: 0,
            }
        } else {
            Fiber {
                int: -self.int - 1,
                frac: self.frac.wrapping_neg(),
            }
        }
    }
}

impl Sub for Fiber {
    type Output = Fiber;
    fn sub(self, rhs: Fiber) -> Fiber {
        self + (-rhs)
    }
}

impl AddAssign for Fiber {
    fn add_assign(&mut self, rhs: Fiber) {
        *self = *self + rhs;
    }
}

impl SubAssign for Fiber {
    fn sub_assign(&mut self, rhs: Fiber) {
        *self = *self - rhs;
    }
}

impl From<Fixed> for Fiber {
    fn from(v: Fixed) -> Self {
        Fiber::from_fixed(v)
    }
}
