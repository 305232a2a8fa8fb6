//! The Heisenberg group `G`, the twisted group `G*`, their integer lattices,
//! reduction to the fundamental domain `[0,1)^3` and the joining projection.
//!
//! Both groups are `R^3` with the law
//!
//! ```text
//! (x, y, z) (x', y', z') = (x + x', y + y', z + z' + c (x y' - x' y))
//! ```
//!
//! where the twist `c` is `1` for `G` and `p^2 - q^2` for the quotient `G*` of
//! the prime-pair joining group. All arithmetic is exact: base coordinates are
//! [`Fixed`] and the fiber coordinate is a [`Fiber`].

use std::fmt;

use serde::Serialize;

use crate::error::{invalid, Error, Result};
use crate::fixed::{Fiber, Fixed};
use crate::moebius::is_prime;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum LawKind {
    Heisenberg,
    Star,
}

/// Group law tag: the commutator twist `c`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
pub struct GroupLaw {
    kind: LawKind,
    twist: i64,
}

impl GroupLaw {
    pub const HEISENBERG: GroupLaw = GroupLaw {
        kind: LawKind::Heisenberg,
        twist: 1,
    };

    /// The law of `G*` for a prime pair, twist `p^2 - q^2`.
    pub fn star(primes: PrimePair) -> Self {
        GroupLaw {
            kind: LawKind::Star,
            twist: primes.twist(),
        }
    }

    /// A star law with an arbitrary non-zero twist.
    pub fn with_twist(twist: i64) -> Result<Self> {
        if twist == 0 {
            return Err(Error::ZeroTwist);
        }
        Ok(GroupLaw {
            kind: LawKind::Star,
            twist,
        })
    }

    pub fn kind(&self) -> LawKind {
        self.kind
    }

    pub fn twist(&self) -> i64 {
        self.twist
    }
}

impl fmt::Display for GroupLaw {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.kind {
            LawKind::Heisenberg => write!(f, "heisenberg"),
            LawKind::Star => write!(f, "star(c={})", self.twist),
        }
    }
}

/// Two distinct primes `p > q`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
pub struct PrimePair {
    p: u32,
    q: u32,
}

impl PrimePair {
    pub fn new(p: u64, q: u64) -> Result<Self> {
        if p > q && is_prime(p) && is_prime(q) && p < (1 << 20) {
            Ok(PrimePair {
                p: p as u32,
                q: q as u32,
            })
        } else {
            Err(Error::NotAPrimePair { p, q })
        }
    }

    pub fn p(&self) -> i64 {
        self.p as i64
    }

    pub fn q(&self) -> i64 {
        self.q as i64
    }

    /// `p^2 - q^2`.
    pub fn twist(&self) -> i64 {
        self.p() * self.p() - self.q() * self.q()
    }

    /// `p^2 + q^2`.
    pub fn norm(&self) -> i64 {
        self.p() * self.p() + self.q() * self.q()
    }

    /// `(u, v)` with `u q + v p = 1`.
    fn bezout(&self) -> (i64, i64) {
        let (g, u, v) = ext_gcd(self.q(), self.p());
        debug_assert_eq!(g, 1);
        (u, v)
    }
}

fn ext_gcd(a: i64, b: i64) -> (i64, i64, i64) {
    if b == 0 {
        (a, 1, 0)
    } else {
        let (g, u, v) = ext_gcd(b, a.rem_euclid(b));
        (g, v, u - a.div_euclid(b) * v)
    }
}

/// An element `(x, y, z)` of `G` or `G*`.
#[derive(Clone, Copy, PartialEq, Eq, Hash)]
pub struct GroupElement {
    pub x: Fixed,
    pub y: Fixed,
    pub z: Fiber,
    pub law: GroupLaw,
}

impl fmt::Debug for GroupElement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({:?}, {:?}, {:?})@{}", self.x, self.y, self.z, self.law)
    }
}

impl GroupElement {
    pub fn new(x: Fixed, y: Fixed, z: Fiber, law: GroupLaw) -> Self {
        GroupElement { x, y, z, law }
    }

    /// Snaps each coordinate to the nearest representable dyadic.
    pub fn from_f64(x: f64, y: f64, z: f64, law: GroupLaw) -> Self {
        GroupElement {
            x: Fixed::from_f64(x),
            y: Fixed::from_f64(y),
            z: Fiber::from_f64(z),
            law,
        }
    }

    pub fn identity(law: GroupLaw) -> Self {
        GroupElement {
            x: Fixed::ZERO,
            y: Fixed::ZERO,
            z: Fiber::ZERO,
            law,
        }
    }

    /// The central element `(0, 0, z)`.
    pub fn central(z: Fiber, law: GroupLaw) -> Self {
        GroupElement {
            x: Fixed::ZERO,
            y: Fixed::ZERO,
            z,
            law,
        }
    }

    /// Group product; fails when the two elements carry different laws.
    pub fn mul(&self, rhs: &GroupElement) -> Result<GroupElement> {
        if self.law != rhs.law {
            return Err(Error::LawMismatch {
                left: self.law,
                right: rhs.law,
            });
        }
        Ok(self.compose(rhs))
    }

    /// Group product without the law check. The left operand's law is used.
    pub fn compose(&self, rhs: &GroupElement) -> GroupElement {
        debug_assert_eq!(self.law, rhs.law);
        let c = self.law.twist;
        let cross = self.x.mul_int(c).mul_wide(rhs.y) - rhs.x.mul_int(c).mul_wide(self.y);
        GroupElement {
            x: self.x + rhs.x,
            y: self.y + rhs.y,
            z: self.z + rhs.z + cross,
            law: self.law,
        }
    }

    pub fn inv(&self) -> GroupElement {
        GroupElement {
            x: -self.x,
            y: -self.y,
            z: -self.z,
            law: self.law,
        }
    }

    /// The unique lattice element `γ` with `g γ^{-1}` in `[0,1)^3`:
    /// `(⌊x⌋, ⌊y⌋, ⌊z - c (x⌊y⌋ - ⌊x⌋y)⌋)`.
    pub fn lattice_floor(&self) -> LatticeElement {
        let a = self.x.floor();
        let b = self.y.floor();
        let shear = (self.x.mul_int(b) - self.y.mul_int(a)).mul_int(self.law.twist);
        let m = (self.z - Fiber::from_fixed(shear)).floor();
        LatticeElement { a, b, m }
    }

    /// Representative of the coset `gΓ` in the fundamental domain.
    pub fn canonical_rep(&self) -> NilPoint {
        let gamma = self.lattice_floor().to_element(self.law);
        let rep = self.compose(&gamma.inv());
        debug_assert!(rep.in_fundamental_domain(), "{rep:?}");
        NilPoint { rep }
    }

    pub fn in_fundamental_domain(&self) -> bool {
        self.x.floor() == 0 && self.y.floor() == 0 && self.z.floor() == 0
    }

    pub fn is_integral(&self) -> bool {
        self.x.is_integer() && self.y.is_integer() && self.z.is_integer()
    }

    pub fn with_law(self, law: GroupLaw) -> GroupElement {
        GroupElement { law, ..self }
    }

    pub fn to_f64(&self) -> [f64; 3] {
        [self.x.to_f64(), self.y.to_f64(), self.z.to_f64()]
    }
}

/// Integer point `(a, b, m)` of `Γ` or `Γ*`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct LatticeElement {
    pub a: i64,
    pub b: i64,
    pub m: i128,
}

impl LatticeElement {
    pub fn to_element(self, law: GroupLaw) -> GroupElement {
        GroupElement {
            x: Fixed::from_int(self.a),
            y: Fixed::from_int(self.b),
            z: Fiber::from_int(self.m),
            law,
        }
    }

    /// `None` unless all three coordinates of `g` are integers.
    pub fn from_element(g: &GroupElement) -> Option<Self> {
        g.is_integral().then(|| LatticeElement {
            a: g.x.floor(),
            b: g.y.floor(),
            m: g.z.floor(),
        })
    }
}

/// A point of `X = G/Γ` or `X* = G*/Γ*`, held by its representative in
/// `[0,1)^3`.
#[derive(Clone, Copy, PartialEq, Eq, Hash)]
pub struct NilPoint {
    rep: GroupElement,
}

impl fmt::Debug for NilPoint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "NilPoint{:?}", self.rep)
    }
}

impl NilPoint {
    pub fn identity(law: GroupLaw) -> Self {
        NilPoint {
            rep: GroupElement::identity(law),
        }
    }

    pub fn of(g: &GroupElement) -> Self {
        g.canonical_rep()
    }

    pub fn rep(&self) -> &GroupElement {
        &self.rep
    }

    pub fn law(&self) -> GroupLaw {
        self.rep.law
    }

    /// Left translation `g · p`.
    pub fn translate(&self, g: &GroupElement) -> Result<NilPoint> {
        Ok(g.mul(&self.rep)?.canonical_rep())
    }

    pub fn to_f64(&self) -> [f64; 3] {
        [
            self.rep.x.to_f64(),
            self.rep.y.to_f64(),
            self.rep.z.fract_f64(),
        ]
    }
}

/// A pair of Heisenberg elements tested against the joining group
/// `G1 = {q(x1, y1) = p(x2, y2)}`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct JoiningPair {
    pub first: GroupElement,
    pub second: GroupElement,
    pub primes: PrimePair,
}

impl JoiningPair {
    pub fn new(first: GroupElement, second: GroupElement, primes: PrimePair) -> Result<Self> {
        for g in [&first, &second] {
            if g.law != GroupLaw::HEISENBERG {
                return Err(Error::LawMismatch {
                    left: GroupLaw::HEISENBERG,
                    right: g.law,
                });
            }
        }
        Ok(JoiningPair {
            first,
            second,
            primes,
        })
    }

    /// The G1 element `(p x, p y, z1, q x, q y, z2)`.
    pub fn from_base(x: Fixed, y: Fixed, z1: Fiber, z2: Fiber, primes: PrimePair) -> Self {
        let h = GroupLaw::HEISENBERG;
        JoiningPair {
            first: GroupElement::new(x.mul_int(primes.p()), y.mul_int(primes.p()), z1, h),
            second: GroupElement::new(x.mul_int(primes.q()), y.mul_int(primes.q()), z2, h),
            primes,
        }
    }

    fn offsets(&self) -> (Fixed, Fixed) {
        let (p, q) = (self.primes.p(), self.primes.q());
        (
            self.first.x.mul_int(q) - self.second.x.mul_int(p),
            self.first.y.mul_int(q) - self.second.y.mul_int(p),
        )
    }

    /// Whether the pair lies in `X1`: `q(x1, y1) - p(x2, y2)` is integral.
    pub fn is_member(&self) -> bool {
        let (dx, dy) = self.offsets();
        dx.is_integer() && dy.is_integer()
    }

    /// Whether the pair is itself an element of `G1`.
    pub fn in_g1(&self) -> bool {
        self.offsets() == (Fixed::ZERO, Fixed::ZERO)
    }

    /// Right-multiplies both components by lattice elements so that the
    /// result lies in `G1` while representing the same point of `X × X`.
    pub fn lift_to_g1(&self) -> Result<JoiningPair> {
        let (dx, dy) = self.offsets();
        if !(dx.is_integer() && dy.is_integer()) {
            return Err(Error::JoiningConstraint(format!(
                "q(x1,y1) - p(x2,y2) = ({dx}, {dy}) is not integral"
            )));
        }
        let (u, v) = self.primes.bezout();
        let shift = |m: i64| (-m * u, m * v);
        let (a1, a2) = shift(dx.floor());
        let (b1, b2) = shift(dy.floor());
        let h = GroupLaw::HEISENBERG;
        let lifted = JoiningPair {
            first: self
                .first
                .compose(&LatticeElement { a: a1, b: b1, m: 0 }.to_element(h)),
            second: self
                .second
                .compose(&LatticeElement { a: a2, b: b2, m: 0 }.to_element(h)),
            primes: self.primes,
        };
        debug_assert!(lifted.in_g1());
        Ok(lifted)
    }

    /// Componentwise product in `G × G`.
    pub fn mul(&self, rhs: &JoiningPair) -> Result<JoiningPair> {
        if self.primes != rhs.primes {
            return Err(invalid("primes", "joining pairs over different primes"));
        }
        Ok(JoiningPair {
            first: self.first.mul(&rhs.first)?,
            second: self.second.mul(&rhs.second)?,
            primes: self.primes,
        })
    }

    /// The projection `π(px, py, z1, qx, qy, z2) = (x, y, z1 - z2)` onto `G*`.
    pub fn project(&self) -> Result<GroupElement> {
        if !self.in_g1() {
            let (dx, dy) = self.offsets();
            return Err(Error::JoiningConstraint(format!(
                "q(x1,y1) - p(x2,y2) = ({dx}, {dy})"
            )));
        }
        let p = self.primes.p();
        let x = self.first.x.div_exact(p).expect("p | x1 inside G1");
        let y = self.first.y.div_exact(p).expect("p | y1 inside G1");
        Ok(GroupElement::new(
            x,
            y,
            self.first.z - self.second.z,
            GroupLaw::star(self.primes),
        ))
    }
}

/// `π` on six real coordinates, with the `G1` constraint checked to `tol`.
pub fn project_pi_f64(g6: [f64; 6], primes: PrimePair, tol: f64) -> Result<[f64; 3]> {
    let [x1, y1, z1, x2, y2, z2] = g6;
    let (p, q) = (primes.p() as f64, primes.q() as f64);
    let (dx, dy) = (q * x1 - p * x2, q * y1 - p * y2);
    if dx.abs() > tol || dy.abs() > tol {
        return Err(Error::JoiningConstraint(format!(
            "q(x1,y1) - p(x2,y2) = ({dx:e}, {dy:e}) exceeds {tol:e}"
        )));
    }
    Ok([x1 / p, y1 / p, z1 - z2])
}

/// Floating-point membership test for `X1`: `q(x1,y1) - p(x2,y2)` within
/// `tol` of `Z^2`.
pub fn joining_membership_f64(first: [f64; 2], second: [f64; 2], primes: PrimePair, tol: f64) -> bool {
    let (p, q) = (primes.p() as f64, primes.q() as f64);
    (0..2).all(|i| {
        let d = q * first[i] - p * second[i];
        (d - d.round()).abs() <= tol
    })
}

/// Floating-point mirror of the exact group operations, for observables and
/// cross-checks. Each operation agrees with the exact path to about `1e-12`
/// for coordinates of moderate size.
pub mod float {
    pub fn mul(a: [f64; 3], b: [f64; 3], twist: f64) -> [f64; 3] {
        [
            a[0] + b[0],
            a[1] + b[1],
            a[2] + b[2] + twist * (a[0] * b[1] - b[0] * a[1]),
        ]
    }

    pub fn inv(a: [f64; 3]) -> [f64; 3] {
        [-a[0], -a[1], -a[2]]
    }

    /// `(⌊x⌋, ⌊y⌋, ⌊z - c (x⌊y⌋ - ⌊x⌋y)⌋)` with floors chosen so that the
    /// reduced coordinates land in `[0, 1)` after rounding.
    pub fn lattice_floor(a: [f64; 3], twist: f64) -> [f64; 3] {
        let fx = unit_floor(a[0]);
        let fy = unit_floor(a[1]);
        let m = unit_floor(a[2] - twist * (a[0] * fy - fx * a[1]));
        [fx, fy, m]
    }

    pub fn canonical_rep(a: [f64; 3], twist: f64) -> [f64; 3] {
        let gamma = lattice_floor(a, twist);
        let r = mul(a, inv(gamma), twist);
        [wrap(r[0]), wrap(r[1]), wrap(r[2])]
    }

    fn unit_floor(v: f64) -> f64 {
        let f = v.floor();
        if v - f >= 1.0 {
            f + 1.0
        } else {
            f
        }
    }

    fn wrap(v: f64) -> f64 {
        let r = v - v.floor();
        if r >= 1.0 {
            0.0
        } else {
            r
        }
    }
}
