//! The Möbius function and correlation estimators built on the orbit engine.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use serde_json::{json, Map, Value};

use crate::dynamics::{JoiningSystem, SkewMap, SkewSystem, TorusPoint};
use crate::error::{invalid, Error, Result};
use crate::fixed::Fixed;
use crate::heisenberg::{NilPoint, PrimePair};
use crate::observables::{e, JoiningObservable, Observable};
use crate::orbit::{orbit_stream, FnSink, IndexOrbit, OrbitSegmentPlan, PairOrbit, SkewOrbit, TrivializedOrbit};

pub const MAX_SIEVE_BOUND: u64 = 1_000_000_000;

/// Deterministic Miller-Rabin for all `u64`.
pub fn is_prime(n: u64) -> bool {
    if n < 2 {
        return false;
    }
    const WITNESSES: [u64; 12] = [2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37];
    for p in WITNESSES {
        if n.is_multiple_of(p) {
            return n == p;
        }
    }
    let mul = |a: u64, b: u64| ((a as u128 * b as u128) % n as u128) as u64;
    let pow = |mut b: u64, mut e: u64| {
        let mut r = 1u64;
        while e > 0 {
            if e & 1 == 1 {
                r = mul(r, b);
            }
            b = mul(b, b);
            e >>= 1;
        }
        r
    };
    let s = (n - 1).trailing_zeros();
    let d = (n - 1) >> s;
    'witness: for a in WITNESSES {
        let mut x = pow(a, d);
        if x == 1 || x == n - 1 {
            continue;
        }
        for _ in 1..s {
            x = mul(x, x);
            if x == n - 1 {
                continue 'witness;
            }
        }
        return false;
    }
    true
}

// 2-bit codes; 0 marks "not yet reached", which the sieve reads as prime.
const UNSET: u64 = 0;
const PLUS: u64 = 1;
const MINUS: u64 = 2;
const ZERO: u64 = 3;

/// `μ(n)` for `1 <= n <= N`, packed four values per byte.
#[derive(Clone, Debug)]
pub struct MobiusTable {
    bound: u64,
    words: Vec<u64>,
}

impl MobiusTable {
    /// Linear sieve. Each composite is reached exactly once, from its
    /// smallest prime factor, so only primes up to `sqrt(N)` are retained.
    pub fn sieve(bound: u64) -> Result<Self> {
        if !(1..=MAX_SIEVE_BOUND).contains(&bound) {
            return Err(Error::OutOfRange {
                name: "sieve bound",
                value: bound.to_string(),
                allowed: "1 ..= 10^9",
            });
        }
        let mut table = MobiusTable {
            bound,
            words: vec![0; (bound as usize + 1).div_ceil(32)],
        };
        table.set(1, PLUS);
        let root = bound.isqrt();
        let mut primes: Vec<u64> = Vec::new();
        for i in 2..=bound {
            let code = match table.code(i) {
                UNSET => {
                    if i <= root {
                        primes.push(i);
                    }
                    table.set(i, MINUS);
                    MINUS
                }
                c => c,
            };
            let limit = bound / i;
            for &p in &primes {
                if p > limit {
                    break;
                }
                if i % p == 0 {
                    table.set(i * p, ZERO);
                    break;
                }
                let child = match code {
                    PLUS => MINUS,
                    MINUS => PLUS,
                    _ => ZERO,
                };
                table.set(i * p, child);
            }
        }
        Ok(table)
    }

    #[inline]
    fn code(&self, n: u64) -> u64 {
        (self.words[(n >> 5) as usize] >> ((n & 31) * 2)) & 3
    }

    #[inline]
    fn set(&mut self, n: u64, code: u64) {
        let w = &mut self.words[(n >> 5) as usize];
        let shift = (n & 31) * 2;
        *w = (*w & !(3 << shift)) | (code << shift);
    }

    pub fn bound(&self) -> u64 {
        self.bound
    }

    /// `μ(n)`; panics outside `1..=N`.
    #[inline]
    pub fn mu(&self, n: u64) -> i8 {
        assert!(n >= 1 && n <= self.bound, "μ({n}) outside sieved range 1..={}", self.bound);
        match self.code(n) {
            PLUS => 1,
            MINUS => -1,
            _ => 0,
        }
    }

    /// Mertens function `M(n) = Σ_{k<=n} μ(k)`.
    pub fn mertens(&self, n: u64) -> i64 {
        (1..=n).map(|k| self.mu(k) as i64).sum()
    }

    /// Mertens values at increasing checkpoints in one pass.
    pub fn mertens_at(&self, checkpoints: &[u64]) -> Vec<i64> {
        let mut out = Vec::with_capacity(checkpoints.len());
        let (mut k, mut acc) = (0u64, 0i64);
        for &c in checkpoints {
            while k < c {
                k += 1;
                acc += self.mu(k) as i64;
            }
            out.push(acc);
        }
        out
    }

    pub fn count_nonzero(&self) -> u64 {
        (1..=self.bound).filter(|&n| self.mu(n) != 0).count() as u64
    }

    fn check_covers(&self, checkpoints: &[u64]) -> Result<()> {
        match checkpoints.last() {
            Some(&last) if last > self.bound => Err(Error::OutOfRange {
                name: "checkpoint",
                value: last.to_string(),
                allowed: "at most the sieve bound",
            }),
            _ => Ok(()),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Checkpoint {
    pub n: u64,
    pub value: Complex64,
}

impl Checkpoint {
    pub fn modulus(&self) -> f64 {
        self.value.norm()
    }
}

/// Normalised sums `(1/N) Σ_{n<=N} ...` at each checkpoint, with metadata
/// describing the run that produced them.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CorrelationReport {
    pub checkpoints: Vec<Checkpoint>,
    pub metadata: Map<String, Value>,
}

impl CorrelationReport {
    fn from_sums(checkpoints: &[u64], sums: Vec<Vec<Complex64>>, metadata: Map<String, Value>) -> Self {
        let checkpoints = checkpoints
            .iter()
            .zip(sums)
            .map(|(&n, s)| Checkpoint { n, value: s[0] / n as f64 })
            .collect();
        CorrelationReport { checkpoints, metadata }
    }

    pub fn value_at(&self, n: u64) -> Option<Complex64> {
        self.checkpoints.iter().find(|c| c.n == n).map(|c| c.value)
    }

    pub fn max_modulus(&self) -> f64 {
        self.checkpoints.iter().map(Checkpoint::modulus).fold(0.0, f64::max)
    }
}

/// Arithmetic weight multiplying the observable along the orbit.
#[derive(Clone, Copy, Debug)]
pub enum Weight<'a> {
    Mobius(&'a MobiusTable),
    /// All-ones weight, giving Birkhoff averages.
    Unit,
}

fn system_metadata(sys: &SkewSystem) -> Value {
    json!({
        "alpha": sys.alpha().to_dyadic_string(),
        "beta": sys.beta().to_dyadic_string(),
        "h": sys.h(),
    })
}

fn start_metadata(start: &NilPoint) -> Value {
    let r = start.rep();
    json!([r.x.to_dyadic_string(), r.y.to_dyadic_string(), r.z.to_string()])
}

/// `(1/N) Σ_{n=1}^{N} w(n) F(T^n start)` at every checkpoint.
pub fn correlation_sum(
    sys: &SkewSystem,
    obs: &Observable,
    start: &NilPoint,
    checkpoints: &[u64],
    weight: Weight<'_>,
    plan: &OrbitSegmentPlan,
) -> Result<CorrelationReport> {
    obs.validate()?;
    sys.check_law(start)?;
    if let Weight::Mobius(table) = weight {
        table.check_covers(checkpoints)?;
    }
    let driver = SkewOrbit::new(sys, *start)?;
    let sums = match weight {
        Weight::Mobius(table) => {
            let sink = FnSink::new(1, |n, pt: &NilPoint, acc: &mut [num_complex::Complex64]| {
                let m = table.mu(n);
                if m != 0 {
                    acc[0] += obs.eval(pt) * m as f64;
                }
            });
            orbit_stream(&driver, &sink, checkpoints, plan)?
        }
        Weight::Unit => {
            let sink = FnSink::new(1, |_, pt: &NilPoint, acc: &mut [Complex64]| acc[0] += obs.eval(pt));
            orbit_stream(&driver, &sink, checkpoints, plan)?
        }
    };
    let mut meta = Map::new();
    meta.insert("kind".into(), json!(match weight {
        Weight::Mobius(_) => "mobius_correlation",
        Weight::Unit => "birkhoff_average",
    }));
    meta.insert("system".into(), system_metadata(sys));
    meta.insert("observable".into(), json!(obs));
    meta.insert("start".into(), start_metadata(start));
    meta.insert("segment_size".into(), json!(plan.segment_size()));
    Ok(CorrelationReport::from_sums(checkpoints, sums, meta))
}

/// `(1/N) Σ_{n=1}^{N} F(T^{pn} start) conj(F(T^{qn} start))` along the pair
/// orbit under `T^p × T^q`.
pub fn bilinear_sum(
    sys: &SkewSystem,
    obs: &Observable,
    start: &NilPoint,
    primes: PrimePair,
    checkpoints: &[u64],
    plan: &OrbitSegmentPlan,
) -> Result<CorrelationReport> {
    let jobs = JoiningObservable::new(*obs, primes)?;
    sys.check_law(start)?;
    let tp = sys.power(primes.p() as u32);
    let tq = sys.power(primes.q() as u32);
    let driver = PairOrbit {
        first: SkewOrbit::new(&tp, *start)?,
        second: SkewOrbit::new(&tq, *start)?,
    };
    let sink = FnSink::new(1, |_, s: &(NilPoint, NilPoint), acc: &mut [Complex64]| {
        acc[0] += jobs.eval_pair(&s.0, &s.1);
    });
    let sums = orbit_stream(&driver, &sink, checkpoints, plan)?;
    let mut meta = Map::new();
    meta.insert("kind".into(), json!("bilinear_direct"));
    meta.insert("system".into(), system_metadata(sys));
    meta.insert("observable".into(), json!(obs));
    meta.insert("primes".into(), json!([primes.p(), primes.q()]));
    meta.insert("start".into(), start_metadata(start));
    meta.insert("segment_size".into(), json!(plan.segment_size()));
    Ok(CorrelationReport::from_sums(checkpoints, sums, meta))
}

/// The same bilinear sum evaluated as `(1/N) Σ f_*((T*')^n ρπ(x_0, x_0))`
/// along the trivialised joining orbit. The pair orbit is started at the
/// identity coset, whose diagonal lift lies in the joining group.
pub fn bilinear_sum_reduced(
    sys: &SkewSystem,
    obs: &Observable,
    primes: PrimePair,
    checkpoints: &[u64],
    plan: &OrbitSegmentPlan,
) -> Result<CorrelationReport> {
    let jobs = JoiningObservable::new(*obs, primes)?;
    let js = JoiningSystem::new(sys.clone(), primes);
    let driver = TrivializedOrbit::new(&js, TorusPoint::origin());
    let sink = FnSink::new(1, |_, pt: &TorusPoint, acc: &mut [Complex64]| acc[0] += jobs.eval_torus(pt));
    let sums = orbit_stream(&driver, &sink, checkpoints, plan)?;
    let mut meta = Map::new();
    meta.insert("kind".into(), json!("bilinear_reduced"));
    meta.insert("system".into(), system_metadata(sys));
    meta.insert("observable".into(), json!(obs));
    meta.insert("primes".into(), json!([primes.p(), primes.q()]));
    meta.insert("start".into(), json!("identity"));
    meta.insert("segment_size".into(), json!(plan.segment_size()));
    Ok(CorrelationReport::from_sums(checkpoints, sums, meta))
}

/// `e(n α)` with the phase `n α mod 1` computed exactly in 64-bit arithmetic.
#[inline]
pub fn rotation_phase(alpha: Fixed, n: u64) -> Complex64 {
    let frac = n.wrapping_mul(alpha.fract_bits());
    e(frac as f64 / 18_446_744_073_709_551_616.0)
}

/// Exponential sums `(1/N) Σ_{n<=N} μ(n) e(n α)`.
pub fn davenport_baseline(alpha: Fixed, table: &MobiusTable, checkpoints: &[u64], plan: &OrbitSegmentPlan) -> Result<CorrelationReport> {
    table.check_covers(checkpoints)?;
    let sink = FnSink::new(1, |n, _: &u64, acc: &mut [Complex64]| {
        let m = table.mu(n);
        if m != 0 {
            acc[0] += rotation_phase(alpha, n) * m as f64;
        }
    });
    let sums = orbit_stream(&IndexOrbit, &sink, checkpoints, plan)?;
    let mut meta = Map::new();
    meta.insert("kind".into(), json!("davenport"));
    meta.insert("alpha".into(), json!(alpha.to_dyadic_string()));
    meta.insert("segment_size".into(), json!(plan.segment_size()));
    Ok(CorrelationReport::from_sums(checkpoints, sums, meta))
}

/// Rejects `checkpoints` that are empty, unsorted or beyond `bound`.
pub fn check_checkpoints(checkpoints: &[u64], bound: u64) -> Result<()> {
    if checkpoints.is_empty() || checkpoints[0] == 0 || checkpoints.windows(2).any(|w| w[0] >= w[1]) {
        return Err(invalid("checkpoints", "must be positive and strictly increasing"));
    }
    if *checkpoints.last().unwrap() > bound {
        return Err(Error::OutOfRange {
            name: "checkpoint",
            value: checkpoints.last().unwrap().to_string(),
            allowed: "at most the sieve bound",
        });
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::heisenberg::GroupLaw;

    fn trial_division_mu(mut n: u64) -> i8 {
        let mut mu = 1i8;
        let mut d = 2;
        while d * d <= n {
            if n.is_multiple_of(d) {
                n /= d;
                if n.is_multiple_of(d) {
                    return 0;
                }
                mu = -mu;
            }
            d += 1;
        }
        if n > 1 {
            mu = -mu;
        }
        mu
    }

    #[test]
    fn primality() {
        let small: Vec<u64> = (0..50).filter(|&n| is_prime(n)).collect();
        assert_eq!(small, vec![2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37, 41, 43, 47]);
        assert!(is_prime(1_000_000_007));
        assert!(!is_prime(3_215_031_751));
        assert!(is_prime(18_446_744_073_709_551_557));
    }

    #[test]
    fn small_values() {
        let t = MobiusTable::sieve(100).unwrap();
        let got: Vec<i8> = [1, 2, 4, 6, 30].iter().map(|&n| t.mu(n)).collect();
        assert_eq!(got, vec![1, -1, 0, 1, -1]);
    }

    #[test]
    fn sieve_matches_trial_division() {
        for bound in [1u64, 2, 3, 31, 32, 33, 1000, 4099] {
            let t = MobiusTable::sieve(bound).unwrap();
            for n in 1..=bound {
                assert_eq!(t.mu(n), trial_division_mu(n), "n={n} bound={bound}");
            }
        }
    }

    #[test]
    fn sieve_bound_checked() {
        assert!(MobiusTable::sieve(0).is_err());
        assert!(MobiusTable::sieve(MAX_SIEVE_BOUND + 1).is_err());
    }

    #[test]
    fn mertens_known_values() {
        let t = MobiusTable::sieve(10_000).unwrap();
        assert_eq!(t.mertens_at(&[10, 100, 1000, 10_000]), vec![-1, 1, 2, -23]);
        assert_eq!(t.mertens(1000), 2);
    }

    #[test]
    fn rotation_phase_is_exact() {
        let alpha = Fixed::from_raw(3 << 62);
        assert!((rotation_phase(alpha, 1) - e(0.75)).norm() < 1e-15);
        assert!((rotation_phase(alpha, 3) - e(0.25)).norm() < 1e-15);
    }

    #[test]
    fn constant_observable_reduces_to_mertens() {
        let t = MobiusTable::sieve(2000).unwrap();
        let sys = SkewSystem::new(
            Fixed::from_f64(0.4142135623730951),
            Fixed::from_f64(0.7320508075688772),
            crate::cocycle::BaseFunctionSpec::linear(1, 0),
        )
        .unwrap();
        let start = NilPoint::identity(GroupLaw::HEISENBERG);
        let cps = [10, 100, 1000, 2000];
        let r = correlation_sum(&sys, &Observable::one(), &start, &cps, Weight::Mobius(&t), &OrbitSegmentPlan::default()).unwrap();
        for (c, m) in r.checkpoints.iter().zip(t.mertens_at(&cps)) {
            assert_eq!(c.value.re, m as f64 / c.n as f64);
            assert_eq!(c.value.im, 0.0);
        }
        let too_far = correlation_sum(&sys, &Observable::one(), &start, &[5000], Weight::Mobius(&t), &OrbitSegmentPlan::default());
        assert!(too_far.is_err());
    }

    #[test]
    fn davenport_at_zero_is_mertens() {
        let t = MobiusTable::sieve(1000).unwrap();
        let r = davenport_baseline(Fixed::ZERO, &t, &[100, 1000], &OrbitSegmentPlan::default()).unwrap();
        assert_eq!(r.checkpoints[0].value.re, 0.01);
        assert_eq!(r.checkpoints[1].value.re, 2.0 / 1000.0);
    }
}
