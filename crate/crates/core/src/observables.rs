//! Test functions of pure vertical frequency.
//!
//! A vertical observable is `F(x, y, z) = e(ξ z) φ(x, y)` on the canonical
//! representative, where `φ` is a radial polynomial bump whose support lies
//! inside `[1/8, 7/8]^2`. Because `φ` vanishes near the boundary of the
//! fundamental domain, `F` is continuous on the nilmanifold, and
//! `F((0,0,s) τ) = e(ξ s) F(τ)`.

use std::f64::consts::TAU;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::dynamics::TorusPoint;
use crate::error::{invalid, Result};
use crate::fixed::{Fiber, Fixed};
use crate::heisenberg::{float, GroupElement, GroupLaw, NilPoint, PrimePair};

/// Margin that the bump support must keep from the boundary of `[0,1)^2`.
pub const SUPPORT_MARGIN: f64 = 0.125;

/// `e(t) = exp(2πi t)`.
#[inline]
pub fn e(t: f64) -> Complex64 {
    let (s, c) = (TAU * t).sin_cos();
    Complex64::new(c, s)
}

/// `e(t)` for a fiber value, reduced exactly mod 1 first.
#[inline]
pub fn e_fiber(t: Fiber) -> Complex64 {
    e(t.fract_f64())
}

/// Radial bump `amplitude · S(1 - r/radius)` with `S` the smoothstep
/// polynomial of the given odd degree.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Bump {
    pub center: [f64; 2],
    pub radius: f64,
    #[serde(default = "one")]
    pub amplitude: f64,
    #[serde(default = "three")]
    pub order: u32,
}

fn one() -> f64 {
    1.0
}

fn three() -> u32 {
    3
}

impl Default for Bump {
    fn default() -> Self {
        Bump {
            center: [0.5, 0.5],
            radius: 0.375,
            amplitude: 1.0,
            order: 3,
        }
    }
}

impl Bump {
    pub fn validate(&self) -> Result<()> {
        if !matches!(self.order, 3 | 5 | 7) {
            return Err(invalid("bump.order", format!("{} is not one of 3, 5, 7", self.order)));
        }
        if self.radius.is_nan() || self.radius <= 0.0 || !self.amplitude.is_finite() {
            return Err(invalid("bump", "radius must be positive and amplitude finite"));
        }
        for c in self.center {
            if c - self.radius < SUPPORT_MARGIN - 1e-15 || c + self.radius > 1.0 - SUPPORT_MARGIN + 1e-15 {
                return Err(invalid("bump", "support must lie inside [1/8, 7/8]^2"));
            }
        }
        Ok(())
    }

    fn smoothstep(&self, u: f64) -> f64 {
        match self.order {
            3 => u * u * (3.0 - 2.0 * u),
            5 => u * u * u * (10.0 + u * (-15.0 + 6.0 * u)),
            _ => {
                let u2 = u * u;
                u2 * u2 * (35.0 + u * (-84.0 + u * (70.0 - 20.0 * u)))
            }
        }
    }

    /// Maximum slope of the smoothstep polynomial on `[0, 1]`.
    fn smoothstep_slope(&self) -> f64 {
        match self.order {
            3 => 1.5,
            5 => 1.875,
            _ => 2.1875,
        }
    }

    pub fn eval(&self, x: f64, y: f64) -> f64 {
        let r = (x - self.center[0]).hypot(y - self.center[1]);
        if r >= self.radius {
            0.0
        } else {
            self.amplitude * self.smoothstep(1.0 - r / self.radius)
        }
    }

    /// Lipschitz constant of the bump in the sup-norm metric.
    pub fn lipschitz(&self) -> f64 {
        self.amplitude.abs() * self.smoothstep_slope() / self.radius * std::f64::consts::SQRT_2
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum Observable {
    /// `e(ξ z) φ(x, y)`.
    Vertical { xi: i64, bump: Bump },
    /// `e(k1 x + k2 y)`, of vertical frequency zero.
    BaseMode { k1: i64, k2: i64 },
}

impl Observable {
    pub fn vertical(xi: i64, bump: Bump) -> Result<Self> {
        bump.validate()?;
        Ok(Observable::Vertical { xi, bump })
    }

    pub fn base_mode(k1: i64, k2: i64) -> Self {
        Observable::BaseMode { k1, k2 }
    }

    /// The constant function 1.
    pub fn one() -> Self {
        Observable::BaseMode { k1: 0, k2: 0 }
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            Observable::Vertical { bump, .. } => bump.validate(),
            Observable::BaseMode { .. } => Ok(()),
        }
    }

    pub fn xi(&self) -> i64 {
        match self {
            Observable::Vertical { xi, .. } => *xi,
            Observable::BaseMode { .. } => 0,
        }
    }

    pub fn sup_norm(&self) -> f64 {
        match self {
            Observable::Vertical { bump, .. } => bump.amplitude.abs(),
            Observable::BaseMode { .. } => 1.0,
        }
    }

    /// Value at a canonical representative `(x, y, z)` in `[0,1)^3`.
    pub fn eval_coords(&self, x: Fixed, y: Fixed, z: Fiber) -> Complex64 {
        match self {
            Observable::Vertical { xi, bump } => {
                let amp = bump.eval(x.to_f64(), y.to_f64());
                if amp == 0.0 {
                    Complex64::new(0.0, 0.0)
                } else {
                    e_fiber(z.mul_int(*xi)) * amp
                }
            }
            Observable::BaseMode { k1, k2 } => {
                e_fiber(Fiber::from_fixed(x.mul_int(*k1) + y.mul_int(*k2)))
            }
        }
    }

    pub fn eval(&self, pt: &NilPoint) -> Complex64 {
        let r = pt.rep();
        self.eval_coords(r.x, r.y, r.z)
    }

    /// Float-path evaluation at a representative in `[0,1)^3`.
    pub fn eval_f64(&self, p: [f64; 3]) -> Complex64 {
        match self {
            Observable::Vertical { xi, bump } => e(*xi as f64 * p[2]) * bump.eval(p[0], p[1]),
            Observable::BaseMode { k1, k2 } => e(*k1 as f64 * p[0] + *k2 as f64 * p[1]),
        }
    }

    /// `(1/m) Σ_j F(x, y, j/m)` with exact rational phases.
    pub fn fiber_average(&self, x: Fixed, y: Fixed, m: u32) -> Result<Complex64> {
        let xi = self.xi();
        if (m as i64) < 2 * xi.abs() + 2 {
            return Err(invalid("m", format!("quadrature count {m} is below 2|xi| + 2")));
        }
        let (x, y) = (x.fract(), y.fract());
        let base = self.eval_coords(x, y, Fiber::ZERO);
        let m_i = m as i64;
        let mut sum = Complex64::new(0.0, 0.0);
        for j in 0..m_i {
            sum += e((xi * j).rem_euclid(m_i) as f64 / m as f64);
        }
        Ok(base * sum / m as f64)
    }

    /// Plain Monte Carlo estimate of `∫_X F` against Haar measure, returned
    /// as `(mean, standard error)`.
    pub fn space_average(&self, samples: u64, seed: u64) -> (Complex64, f64) {
        monte_carlo(samples, seed, |p| self.eval_f64(p))
    }
}

/// The product observable `f ⊗ conj(f)` on `X × X` and its descent to `X*`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct JoiningObservable {
    source: Observable,
    primes: PrimePair,
}

impl JoiningObservable {
    pub fn new(source: Observable, primes: PrimePair) -> Result<Self> {
        source.validate()?;
        Ok(JoiningObservable { source, primes })
    }

    pub fn source(&self) -> &Observable {
        &self.source
    }

    /// `f_1(x_1, x_2) = F(x_1) conj(F(x_2))`.
    pub fn eval_pair(&self, first: &NilPoint, second: &NilPoint) -> Complex64 {
        self.source.eval(first) * self.source.eval(second).conj()
    }

    /// `f_*(x, y, z) = F((px, py, z)Γ) conj(F((qx, qy, 0)Γ))`.
    pub fn eval_star(&self, x: Fixed, y: Fixed, z: Fiber) -> Complex64 {
        let law = GroupLaw::HEISENBERG;
        let (p, q) = (self.primes.p(), self.primes.q());
        let first = GroupElement::new(x.mul_int(p), y.mul_int(p), z, law).canonical_rep();
        let second = GroupElement::new(x.mul_int(q), y.mul_int(q), Fiber::ZERO, law).canonical_rep();
        self.eval_pair(&first, &second)
    }

    pub fn eval_torus(&self, pt: &TorusPoint) -> Complex64 {
        self.eval_star(pt.x, pt.y, pt.z)
    }

    pub fn eval_star_f64(&self, p: [f64; 3]) -> Complex64 {
        let (a, b) = (self.primes.p() as f64, self.primes.q() as f64);
        let first = float::canonical_rep([a * p[0], a * p[1], p[2]], 1.0);
        let second = float::canonical_rep([b * p[0], b * p[1], 0.0], 1.0);
        self.source.eval_f64(first) * self.source.eval_f64(second).conj()
    }

    /// Monte Carlo estimate of `∫_{X*} f_*` as `(mean, standard error)`,
    /// sampling the fundamental domain `[0,1)^3` uniformly.
    pub fn space_average(&self, samples: u64, seed: u64) -> (Complex64, f64) {
        monte_carlo(samples, seed, |p| self.eval_star_f64(p))
    }
}

fn monte_carlo(samples: u64, seed: u64, f: impl Fn([f64; 3]) -> Complex64) -> (Complex64, f64) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut sum = Complex64::new(0.0, 0.0);
    let mut sq = 0.0;
    for _ in 0..samples {
        let p = [rng.random::<f64>(), rng.random::<f64>(), rng.random::<f64>()];
        let v = f(p);
        sum += v;
        sq += v.norm_sqr();
    }
    let n = samples as f64;
    let mean = sum / n;
    let var = (sq / n - mean.norm_sqr()).max(0.0) * n / (n - 1.0).max(1.0);
    (mean, (var / n).sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn fx(v: f64) -> Fixed {
        Fixed::from_f64(v)
    }

    fn at(x: f64, y: f64, z: f64) -> NilPoint {
        GroupElement::from_f64(x, y, z, GroupLaw::HEISENBERG).canonical_rep()
    }

    #[test]
    fn smoothstep_endpoints_and_slopes() {
        for order in [3, 5, 7] {
            let b = Bump { order, ..Bump::default() };
            assert_eq!(b.smoothstep(0.0), 0.0);
            assert!((b.smoothstep(1.0) - 1.0).abs() < 1e-15);
            let h = 1e-6;
            let mut max_slope: f64 = 0.0;
            for i in 0..1000 {
                let u = i as f64 / 1000.0;
                max_slope = max_slope.max((b.smoothstep(u + h) - b.smoothstep(u)) / h);
            }
            assert!((max_slope - b.smoothstep_slope()).abs() < 1e-4, "order {order}");
        }
    }

    #[test]
    fn bump_support_checked() {
        assert!(Bump::default().validate().is_ok());
        let wide = Bump { radius: 0.4, ..Bump::default() };
        assert!(wide.validate().is_err());
        let off = Bump { center: [0.3, 0.5], ..Bump::default() };
        assert!(off.validate().is_err());
        assert!(Bump { order: 4, ..Bump::default() }.validate().is_err());
    }

    #[test]
    fn value_at_bump_center() {
        let f = Observable::vertical(1, Bump::default()).unwrap();
        let v = f.eval(&at(0.5, 0.5, 0.25));
        assert!((v - Complex64::new(0.0, 1.0)).norm() < 1e-15);
        assert_eq!(f.eval(&at(0.05, 0.5, 0.25)), Complex64::new(0.0, 0.0));
    }

    #[test]
    fn vertical_equivariance() {
        let f = Observable::vertical(3, Bump::default()).unwrap();
        let pt = at(0.41, 0.63, 0.17);
        let shift = GroupElement::central(Fiber::from_f64(0.5), GroupLaw::HEISENBERG);
        let moved = pt.translate(&shift).unwrap();
        let ratio = f.eval(&moved) / f.eval(&pt);
        assert!((ratio - e(1.5)).norm() < 1e-12);
        assert!((ratio + 1.0).norm() < 1e-12);
    }

    #[test]
    fn fiber_average_vanishes() {
        for (xi, m) in [(1, 16), (2, 8), (3, 32)] {
            let f = Observable::vertical(xi, Bump::default()).unwrap();
            let v = f.fiber_average(fx(0.45), fx(0.55), m).unwrap();
            assert!(v.norm() <= 1e-12);
        }
        let one = Observable::one().fiber_average(fx(0.3), fx(0.2), 2).unwrap();
        assert!((one - 1.0).norm() < 1e-15);
        let f = Observable::vertical(4, Bump::default()).unwrap();
        assert!(f.fiber_average(fx(0.5), fx(0.5), 9).is_err());
    }

    #[test]
    fn exact_and_float_paths_agree() {
        let f = Observable::vertical(2, Bump { order: 5, ..Bump::default() }).unwrap();
        for &(x, y, z) in &[(0.3, 0.4, 0.9), (0.5, 0.51, 0.01), (0.7, 0.2, 0.5)] {
            let pt = at(x, y, z);
            assert!((f.eval(&pt) - f.eval_f64(pt.to_f64())).norm() < 1e-12);
        }
    }

    #[test]
    fn pair_observable_is_diagonally_invariant() {
        let primes = PrimePair::new(3, 2).unwrap();
        let j = JoiningObservable::new(Observable::vertical(1, Bump::default()).unwrap(), primes).unwrap();
        let a = at(0.4, 0.6, 0.3);
        let b = at(0.55, 0.35, 0.8);
        let s = GroupElement::central(Fiber::from_f64(0.37), GroupLaw::HEISENBERG);
        let before = j.eval_pair(&a, &b);
        let after = j.eval_pair(&a.translate(&s).unwrap(), &b.translate(&s).unwrap());
        assert!((before - after).norm() < 1e-12);
        let id = NilPoint::identity(GroupLaw::HEISENBERG);
        let mid = at(0.5, 0.5, 0.0);
        assert!((j.eval_pair(&mid, &mid) - 1.0).norm() < 1e-15);
        assert_eq!(j.eval_pair(&id, &id), Complex64::new(0.0, 0.0));
    }

    #[test]
    fn star_descent_is_lattice_invariant() {
        let primes = PrimePair::new(5, 3).unwrap();
        let j = JoiningObservable::new(Observable::vertical(2, Bump::default()).unwrap(), primes).unwrap();
        let law = GroupLaw::star(primes);
        let g = GroupElement::from_f64(0.43, 0.61, 0.2, law);
        let gamma = GroupElement::from_f64(1.0, -2.0, 3.0, law);
        let moved = g.compose(&gamma);
        let v = j.eval_star(g.x, g.y, g.z);
        let w = j.eval_star(moved.x, moved.y, moved.z);
        assert!((v - w).norm() < 1e-12, "{v} vs {w}");
        let f = j.eval_star_f64([0.43, 0.61, 0.2]);
        assert!((v - f).norm() < 1e-12);
    }
}
