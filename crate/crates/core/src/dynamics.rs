//! Skew products over a rotation of `T^2`.
//!
//! A [`SkewMap`] acts on a nilmanifold by `x ↦ (α, β, φ(x, y)) · x` for a
//! fiber function `φ`. Three instances are provided:
//!
//! * [`SkewSystem`]: the map `T` on `X` with fiber function `h`;
//! * [`PowerSystem`]: `T^k`, i.e. rotation `(kα, kβ)` and fiber `h_k`;
//! * [`JoiningSystem`]: the reduced joining map `T*` on `X*` with fiber
//!   `H(x, y) = h_p(px, py) - h_q(qx, qy)` and twist `p^2 - q^2`.
//!
//! [`JoiningSystem`] also carries the trivialised map `T*'` on `T^3`.

use crate::cocycle::BaseFunctionSpec;
use crate::compensated::{two_prod, Dd};
use crate::error::{Error, Result};
use crate::fixed::{Fiber, Fixed};
use crate::heisenberg::{float, GroupElement, GroupLaw, NilPoint, PrimePair};

pub trait SkewMap: Sync {
    fn law(&self) -> GroupLaw;

    fn rotation(&self) -> (Fixed, Fixed);

    /// Exact lift of the fiber function at an arbitrary (unreduced) base point.
    fn fiber_lift(&self, x: Fixed, y: Fixed) -> Fiber;

    /// Floating-point cocycle `Σ_{i<n} φ(x + iα, y + iβ)`.
    fn cocycle_dd(&self, x: f64, y: f64, n: u64) -> Dd;

    fn fiber_lift_f64(&self, x: f64, y: f64) -> f64 {
        self.cocycle_dd(x, y, 1).to_f64()
    }

    fn rotation_f64(&self) -> (f64, f64) {
        let (a, b) = self.rotation();
        (a.to_f64(), b.to_f64())
    }

    fn check_law(&self, pt: &NilPoint) -> Result<()> {
        if pt.law() == self.law() {
            Ok(())
        } else {
            Err(Error::LawMismatch {
                left: self.law(),
                right: pt.law(),
            })
        }
    }

    /// One application of the map.
    fn step(&self, pt: &NilPoint) -> Result<NilPoint> {
        self.check_law(pt)?;
        let (a, b) = self.rotation();
        let rep = pt.rep();
        let jump = GroupElement::new(a, b, self.fiber_lift(rep.x, rep.y), self.law());
        Ok(jump.compose(rep).canonical_rep())
    }

    /// Exact cocycle `Σ_{i<n} φ(x + iα, y + iβ)`.
    fn cocycle(&self, x: Fixed, y: Fixed, n: u64) -> Fiber {
        let (a, b) = self.rotation();
        let (mut u, mut v) = (x, y);
        let mut acc = Fiber::ZERO;
        for _ in 0..n {
            acc += self.fiber_lift(u, v);
            u += a;
            v += b;
        }
        acc
    }

    /// `(nα, nβ, φ_n(x, y))`, the element acting as the `n`-th iterate over
    /// the base point `(x, y)`.
    fn displacement(&self, x: Fixed, y: Fixed, n: u64) -> GroupElement {
        let (a, b) = self.rotation();
        let n_i = i64::try_from(n).expect("iterate count below 2^63");
        GroupElement::new(a.mul_int(n_i), b.mul_int(n_i), self.cocycle(x, y, n), self.law())
    }

    /// Closed-form `n`-th iterate.
    fn iterate(&self, pt: &NilPoint, n: u64) -> Result<NilPoint> {
        self.check_law(pt)?;
        let rep = pt.rep();
        Ok(self.displacement(rep.x, rep.y, n).compose(rep).canonical_rep())
    }

    /// Floating-point step on a representative in `[0,1)^3`.
    fn step_f64(&self, p: [f64; 3]) -> [f64; 3] {
        let (a, b) = self.rotation_f64();
        let c = self.law().twist() as f64;
        let jump = [a, b, self.fiber_lift_f64(p[0], p[1])];
        float::canonical_rep(float::mul(jump, p, c), c)
    }

    /// Floating-point closed-form iterate with double-double lifts.
    fn iterate_f64(&self, p: [f64; 3], n: u64) -> [f64; 3] {
        let (a, b) = self.rotation_f64();
        let c = self.law().twist() as f64;
        let nf = n as f64;
        let na = Dd::from_sum(two_prod(a, nf).0, two_prod(a, nf).1);
        let nb = Dd::from_sum(two_prod(b, nf).0, two_prod(b, nf).1);
        let big_x = na + Dd::new(p[0]);
        let big_y = nb + Dd::new(p[1]);
        let cross = (na.mul_f64(p[1]) - nb.mul_f64(p[0])).mul_f64(c);
        let big_z = Dd::new(p[2]) + self.cocycle_dd(p[0], p[1], n) + cross;
        reduce_dd(big_x, big_y, big_z, c)
    }
}

/// Canonical representative of `(X, Y, Z)` for twist `c`, in double-double.
fn reduce_dd(x: Dd, y: Dd, z: Dd, c: f64) -> [f64; 3] {
    let a = x.floor();
    let b = y.floor();
    let rx = (x - Dd::new(a)).to_f64();
    let ry = (y - Dd::new(b)).to_f64();
    let shear = (x.mul_f64(b) - y.mul_f64(a)).mul_f64(c);
    let rz = (z - shear).fract();
    [rx.clamp(0.0, 1.0), ry.clamp(0.0, 1.0), rz]
}

/// The skew product `T(x) = (α, β, h(x, y)) · x` on the Heisenberg nilmanifold.
#[derive(Clone, Debug, PartialEq)]
pub struct SkewSystem {
    alpha: Fixed,
    beta: Fixed,
    h: BaseFunctionSpec,
}

impl SkewSystem {
    pub fn new(alpha: Fixed, beta: Fixed, h: BaseFunctionSpec) -> Result<Self> {
        h.validate()?;
        Ok(SkewSystem { alpha, beta, h })
    }

    pub fn alpha(&self) -> Fixed {
        self.alpha
    }

    pub fn beta(&self) -> Fixed {
        self.beta
    }

    pub fn h(&self) -> &BaseFunctionSpec {
        &self.h
    }

    /// `T^k` as a skew map in its own right.
    pub fn power(&self, k: u32) -> PowerSystem<'_> {
        PowerSystem { base: self, k }
    }
}

impl SkewMap for SkewSystem {
    fn law(&self) -> GroupLaw {
        GroupLaw::HEISENBERG
    }

    fn rotation(&self) -> (Fixed, Fixed) {
        (self.alpha, self.beta)
    }

    fn fiber_lift(&self, x: Fixed, y: Fixed) -> Fiber {
        self.h.lift_fixed(x, y)
    }

    fn cocycle(&self, x: Fixed, y: Fixed, n: u64) -> Fiber {
        self.h.cocycle_fixed(x, y, n, self.alpha, self.beta)
    }

    fn fiber_lift_f64(&self, x: f64, y: f64) -> f64 {
        self.h.lift(x, y)
    }

    fn cocycle_dd(&self, x: f64, y: f64, n: u64) -> Dd {
        let (a, b) = self.rotation_f64();
        self.h.cocycle_sum_dd(x, y, n, a, b)
    }
}

/// `T^k`: rotation `(kα, kβ)`, fiber function `h_k`.
#[derive(Clone, Copy, Debug)]
pub struct PowerSystem<'a> {
    base: &'a SkewSystem,
    k: u32,
}

impl SkewMap for PowerSystem<'_> {
    fn law(&self) -> GroupLaw {
        GroupLaw::HEISENBERG
    }

    fn rotation(&self) -> (Fixed, Fixed) {
        let k = self.k as i64;
        (self.base.alpha.mul_int(k), self.base.beta.mul_int(k))
    }

    fn fiber_lift(&self, x: Fixed, y: Fixed) -> Fiber {
        self.base.cocycle(x, y, self.k as u64)
    }

    fn cocycle(&self, x: Fixed, y: Fixed, n: u64) -> Fiber {
        self.base.cocycle(x, y, n * self.k as u64)
    }

    fn cocycle_dd(&self, x: f64, y: f64, n: u64) -> Dd {
        self.base.cocycle_dd(x, y, n * self.k as u64)
    }
}

/// A point of `T^3 = [0,1)^3`, the trivialised joining nilmanifold.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct TorusPoint {
    pub x: Fixed,
    pub y: Fixed,
    pub z: Fiber,
}

impl TorusPoint {
    pub fn new(x: Fixed, y: Fixed, z: Fiber) -> Self {
        TorusPoint {
            x: x.fract(),
            y: y.fract(),
            z: z.fract(),
        }
    }

    pub fn origin() -> Self {
        TorusPoint::new(Fixed::ZERO, Fixed::ZERO, Fiber::ZERO)
    }

    pub fn to_f64(&self) -> [f64; 3] {
        [self.x.to_f64(), self.y.to_f64(), self.z.fract_f64()]
    }
}

/// The reduced joining system `T*` on `X*` for a prime pair `p > q`.
#[derive(Clone, Debug, PartialEq)]
pub struct JoiningSystem {
    base: SkewSystem,
    primes: PrimePair,
}

impl JoiningSystem {
    pub fn new(base: SkewSystem, primes: PrimePair) -> Self {
        JoiningSystem { base, primes }
    }

    /// Builds `T*` from `T` and a pair of primes, rejecting `p <= q` and
    /// non-primes.
    pub fn build(base: &SkewSystem, p: u64, q: u64) -> Result<Self> {
        Ok(JoiningSystem::new(base.clone(), PrimePair::new(p, q)?))
    }

    pub fn base(&self) -> &SkewSystem {
        &self.base
    }

    pub fn primes(&self) -> PrimePair {
        self.primes
    }

    pub fn twist(&self) -> i64 {
        self.primes.twist()
    }

    /// Degree of `H` in `x` and `y`: `(p^2 - q^2)(d1, d2)`.
    pub fn windings(&self) -> (i64, i64) {
        let (d1, d2) = self.base.h.windings();
        (self.twist() * d1, self.twist() * d2)
    }

    /// Lipschitz constant of `H`: `(p^2 + q^2) L`.
    pub fn lipschitz(&self) -> f64 {
        self.primes.norm() as f64 * self.base.h.lipschitz()
    }

    /// The map `ρ`: a point of `X*` to its coordinates in `T^3`.
    pub fn rho(&self, pt: &NilPoint) -> Result<TorusPoint> {
        self.check_law(pt)?;
        let r = pt.rep();
        Ok(TorusPoint {
            x: r.x,
            y: r.y,
            z: r.z,
        })
    }

    /// Inverse of [`Self::rho`].
    pub fn rho_inv(&self, pt: &TorusPoint) -> NilPoint {
        GroupElement::new(pt.x, pt.y, pt.z, self.law()).canonical_rep()
    }

    /// `H_n(x, y) = h_{pn}(px, py) - h_{qn}(qx, qy)` with trigonometric
    /// terms summed in closed form; cost independent of `n`.
    pub fn cocycle_closed(&self, x: f64, y: f64, n: u64) -> Dd {
        let (a, b) = self.base.rotation_f64();
        let (p, q) = (self.primes.p(), self.primes.q());
        let h = &self.base.h;
        h.cocycle_sum_closed(p as f64 * x, p as f64 * y, n * p as u64, a, b)
            - h.cocycle_sum_closed(q as f64 * x, q as f64 * y, n * q as u64, a, b)
    }

    /// The correction `(nα y - nβ x) - (x + nα)⌊y + nβ⌋ + ⌊x + nα⌋(y + nβ)`
    /// before multiplication by the twist.
    pub(crate) fn trivialising_shear(&self, x: Fixed, y: Fixed, n: u64) -> Fiber {
        let n = i64::try_from(n).expect("iterate count below 2^63");
        let na = self.base.alpha.mul_int(n);
        let nb = self.base.beta.mul_int(n);
        let (xs, ys) = (x + na, y + nb);
        na.mul_wide(y) - nb.mul_wide(x) - Fiber::from_fixed(xs.mul_int(ys.floor()))
            + Fiber::from_fixed(ys.mul_int(xs.floor()))
    }

    /// `H'(x, y)` for `(x, y)` in `[0,1)^2`, exact.
    pub fn h_prime(&self, x: Fixed, y: Fixed) -> Fiber {
        self.h_prime_n(x, y, 1)
    }

    /// `H'_n(x, y) = H_n(x, y) + (p^2-q^2)((nαy - nβx) - (x+nα)⌊y+nβ⌋ + ⌊x+nα⌋(y+nβ))`.
    pub fn h_prime_n(&self, x: Fixed, y: Fixed, n: u64) -> Fiber {
        self.cocycle(x, y, n) + self.trivialising_shear(x, y, n).mul_int(self.twist())
    }

    /// One step of `T*'(x, y, z) = (x + α, y + β, z + H'(x, y))`.
    pub fn step_trivialized(&self, pt: &TorusPoint) -> TorusPoint {
        TorusPoint::new(
            pt.x + self.base.alpha,
            pt.y + self.base.beta,
            pt.z + self.h_prime(pt.x, pt.y),
        )
    }

    /// `(T*')^n` via `H'_n`.
    pub fn iterate_trivialized(&self, pt: &TorusPoint, n: u64) -> TorusPoint {
        let n_i = i64::try_from(n).expect("iterate count below 2^63");
        TorusPoint::new(
            pt.x + self.base.alpha.mul_int(n_i),
            pt.y + self.base.beta.mul_int(n_i),
            pt.z + self.h_prime_n(pt.x, pt.y, n),
        )
    }

    /// Floating-point `H'_n(x, y)` as a double-double lift.
    pub fn h_prime_n_dd(&self, x: f64, y: f64, n: u64) -> Dd {
        let (a, b) = self.base.rotation_f64();
        let nf = n as f64;
        let na = Dd::from_sum(two_prod(a, nf).0, two_prod(a, nf).1);
        let nb = Dd::from_sum(two_prod(b, nf).0, two_prod(b, nf).1);
        let xs = na + Dd::new(x);
        let ys = nb + Dd::new(y);
        let shear = na.mul_f64(y) - nb.mul_f64(x) - xs.mul_f64(ys.floor()) + ys.mul_f64(xs.floor());
        self.cocycle_dd(x, y, n) + shear.mul_f64(self.twist() as f64)
    }

    /// Floating-point `H'_n(x, y)`.
    pub fn h_prime_n_f64(&self, x: f64, y: f64, n: u64) -> f64 {
        self.h_prime_n_dd(x, y, n).to_f64()
    }

    pub fn h_prime_f64(&self, x: f64, y: f64) -> f64 {
        self.h_prime_n_f64(x, y, 1)
    }

    pub fn step_trivialized_f64(&self, p: [f64; 3]) -> [f64; 3] {
        let (a, b) = self.base.rotation_f64();
        let z = Dd::new(p[2]) + self.h_prime_n_dd(p[0], p[1], 1);
        [wrap(p[0] + a), wrap(p[1] + b), z.fract()]
    }

    pub fn iterate_trivialized_f64(&self, p: [f64; 3], n: u64) -> [f64; 3] {
        let (a, b) = self.base.rotation_f64();
        let nf = n as f64;
        let x = Dd::new(p[0]) + Dd::from_sum(two_prod(a, nf).0, two_prod(a, nf).1);
        let y = Dd::new(p[1]) + Dd::from_sum(two_prod(b, nf).0, two_prod(b, nf).1);
        let z = Dd::new(p[2]) + self.h_prime_n_dd(p[0], p[1], n);
        [x.fract(), y.fract(), z.fract()]
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

impl SkewMap for JoiningSystem {
    fn law(&self) -> GroupLaw {
        GroupLaw::star(self.primes)
    }

    fn rotation(&self) -> (Fixed, Fixed) {
        self.base.rotation()
    }

    /// `H(x, y) = h_p(px, py) - h_q(qx, qy)`.
    fn fiber_lift(&self, x: Fixed, y: Fixed) -> Fiber {
        let (p, q) = (self.primes.p(), self.primes.q());
        self.base.cocycle(x.mul_int(p), y.mul_int(p), p as u64)
            - self.base.cocycle(x.mul_int(q), y.mul_int(q), q as u64)
    }

    /// Uses `H_n(x, y) = h_{pn}(px, py) - h_{qn}(qx, qy)`.
    fn cocycle(&self, x: Fixed, y: Fixed, n: u64) -> Fiber {
        let (p, q) = (self.primes.p(), self.primes.q());
        self.base.cocycle(x.mul_int(p), y.mul_int(p), n * p as u64)
            - self.base.cocycle(x.mul_int(q), y.mul_int(q), n * q as u64)
    }

    fn cocycle_dd(&self, x: f64, y: f64, n: u64) -> Dd {
        let (p, q) = (self.primes.p() as f64, self.primes.q() as f64);
        let pn = n * self.primes.p() as u64;
        let qn = n * self.primes.q() as u64;
        self.base.cocycle_dd(p * x, p * y, pn) - self.base.cocycle_dd(q * x, q * y, qn)
    }
}
