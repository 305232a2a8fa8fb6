//! Invariant suites behind `heislab verify`.
//!
//! Every suite draws its instances from a seeded ChaCha stream and reports
//! counts only, so two runs print identical summaries.

use std::fmt;

use heislab::cocycle::{BaseFunctionSpec, TrigTerm};
use heislab::diagnostics::winding_scan;
use heislab::dynamics::{JoiningSystem, SkewMap, SkewSystem, TorusPoint};
use heislab::heisenberg::{GroupElement, GroupLaw, JoiningPair, LatticeElement, NilPoint, PrimePair};
use heislab::moebius::MobiusTable;
use heislab::orbit::{orbit_stream, FnSink, OrbitSegmentPlan, SkewOrbit};
use heislab::{Fiber, Fixed};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Deliberate corruption used as a negative control.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Fault {
    /// Multiplication uses twist `c + 1` whenever the left factor has
    /// negative `x`. The perturbation is not bilinear, so associativity
    /// breaks.
    Twist,
}

impl std::str::FromStr for Fault {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "twist" => Ok(Fault::Twist),
            other => Err(format!("unknown fault {other:?}; expected \"twist\"")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SuiteOutcome {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

impl fmt::Display for SuiteOutcome {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let tag = if self.passed { "PASS" } else { "FAIL" };
        write!(f, "{tag} {}: {}", self.name, self.detail)
    }
}

fn outcome(name: &'static str, failures: u64, total: u64, what: &str) -> SuiteOutcome {
    SuiteOutcome {
        name,
        passed: failures == 0,
        detail: if failures == 0 {
            format!("{total} {what}")
        } else {
            format!("{failures} of {total} {what} violated")
        },
    }
}

#[derive(Debug, Clone, Copy)]
pub struct VerifyOptions {
    pub instances: u64,
    pub seed: u64,
    pub fault: Option<Fault>,
}

impl Default for VerifyOptions {
    fn default() -> Self {
        VerifyOptions {
            instances: 20_000,
            seed: 0x5eed,
            fault: None,
        }
    }
}

pub fn laws() -> Vec<GroupLaw> {
    let mut v = vec![GroupLaw::HEISENBERG];
    for (p, q) in [(3, 2), (7, 5)] {
        v.push(GroupLaw::star(PrimePair::new(p, q).expect("primes")));
    }
    v
}

pub fn random_fixed(rng: &mut ChaCha8Rng, bound: i64) -> Fixed {
    let b = (bound as i128) << 64;
    Fixed::from_raw(rng.random_range(-b..b))
}

pub fn random_element(rng: &mut ChaCha8Rng, law: GroupLaw) -> GroupElement {
    let x = random_fixed(rng, 4);
    let y = random_fixed(rng, 4);
    let z = Fiber::from_parts(rng.random_range(-8..8), rng.random());
    GroupElement::new(x, y, z, law)
}

pub fn random_lattice(rng: &mut ChaCha8Rng, law: GroupLaw) -> GroupElement {
    LatticeElement {
        a: rng.random_range(-5..=5),
        b: rng.random_range(-5..=5),
        m: rng.random_range(-20..=20),
    }
    .to_element(law)
}

fn multiply(a: &GroupElement, b: &GroupElement, fault: Option<Fault>) -> GroupElement {
    match fault {
        Some(Fault::Twist) if a.x < Fixed::ZERO => {
            let law = a.law;
            let bad = GroupLaw::with_twist(law.twist() + 1).expect("nonzero twist");
            a.with_law(bad).compose(&b.with_law(bad)).with_law(law)
        }
        _ => a.compose(b),
    }
}

pub fn associativity(opts: &VerifyOptions) -> SuiteOutcome {
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let (mut bad, mut total) = (0, 0);
    for law in laws() {
        for _ in 0..opts.instances {
            let (a, b, c) = (random_element(&mut rng, law), random_element(&mut rng, law), random_element(&mut rng, law));
            let left = multiply(&multiply(&a, &b, opts.fault), &c, opts.fault);
            let right = multiply(&a, &multiply(&b, &c, opts.fault), opts.fault);
            bad += (left != right) as u64;
            total += 1;
        }
    }
    outcome("associativity", bad, total, "triples")
}

pub fn inverses(opts: &VerifyOptions) -> SuiteOutcome {
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed ^ 1);
    let (mut bad, mut total) = (0, 0);
    for law in laws() {
        let id = GroupElement::identity(law);
        for _ in 0..opts.instances {
            let g = random_element(&mut rng, law);
            let ok = multiply(&g, &g.inv(), opts.fault) == id && multiply(&g.inv(), &g, opts.fault) == id;
            bad += (!ok) as u64;
            total += 1;
        }
    }
    outcome("inverse", bad, total, "elements")
}

pub fn lattice_closure(opts: &VerifyOptions) -> SuiteOutcome {
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed ^ 2);
    let (mut bad, mut total) = (0, 0);
    for law in laws() {
        for _ in 0..opts.instances {
            let a = random_lattice(&mut rng, law);
            let b = random_lattice(&mut rng, law);
            let g = random_element(&mut rng, law);
            let floor_ok = g.lattice_floor().to_element(law).is_integral();
            bad += (!(multiply(&a, &b, opts.fault).is_integral() && floor_ok)) as u64;
            total += 1;
        }
    }
    outcome("lattice closure", bad, total, "pairs")
}

pub fn centrality(opts: &VerifyOptions) -> SuiteOutcome {
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed ^ 3);
    let (mut bad, mut total) = (0, 0);
    for law in laws() {
        for _ in 0..opts.instances {
            let g = random_element(&mut rng, law);
            let m = GroupElement::central(Fiber::from_int(rng.random_range(-9..=9)), law);
            bad += (multiply(&g, &m, opts.fault) != multiply(&m, &g, opts.fault)) as u64;
            total += 1;
        }
    }
    outcome("centrality", bad, total, "elements")
}

pub fn reduction(opts: &VerifyOptions) -> SuiteOutcome {
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed ^ 4);
    let (mut bad, mut total) = (0, 0);
    for law in laws() {
        for _ in 0..opts.instances {
            let g = random_element(&mut rng, law);
            let gamma = random_lattice(&mut rng, law);
            let r = g.canonical_rep();
            let ok = multiply(&g, &gamma, opts.fault).canonical_rep() == r
                && r.rep().in_fundamental_domain()
                && r.rep().canonical_rep() == r;
            bad += (!ok) as u64;
            total += 1;
        }
    }
    outcome("reduction", bad, total, "cosets")
}

pub fn projection(opts: &VerifyOptions) -> SuiteOutcome {
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed ^ 5);
    let (mut bad, mut total) = (0, 0);
    for (p, q) in [(3, 2), (5, 3), (7, 5)] {
        let primes = PrimePair::new(p, q).expect("primes");
        let star = GroupLaw::star(primes);
        let sample = |rng: &mut ChaCha8Rng| {
            JoiningPair::from_base(
                random_fixed(rng, 2),
                random_fixed(rng, 2),
                Fiber::from_parts(rng.random_range(-4..4), rng.random()),
                Fiber::from_parts(rng.random_range(-4..4), rng.random()),
                primes,
            )
        };
        for _ in 0..opts.instances / 3 {
            let (g, h) = (sample(&mut rng), sample(&mut rng));
            let ok = match (g.mul(&h).and_then(|gh| gh.project()), g.project(), h.project()) {
                (Ok(lhs), Ok(a), Ok(b)) => lhs == multiply(&a, &b, opts.fault) && lhs.law == star,
                _ => false,
            };
            bad += (!ok) as u64;
            total += 1;
        }
    }
    outcome("projection morphism", bad, total, "pairs")
}

/// A random `h` with windings in `-3..=3` and two trigonometric terms.
pub fn random_h(rng: &mut ChaCha8Rng) -> BaseFunctionSpec {
    let terms = (0..2)
        .map(|_| TrigTerm {
            k1: rng.random_range(-3..=3),
            k2: rng.random_range(-3..=3),
            amplitude: rng.random_range(-0.2..0.2),
            phase: rng.random_range(0.0..std::f64::consts::TAU),
        })
        .collect();
    BaseFunctionSpec::trig(rng.random_range(-3..=3), rng.random_range(-3..=3), terms)
}

pub fn random_system(rng: &mut ChaCha8Rng) -> SkewSystem {
    let alpha = Fixed::from_raw(rng.random::<u64>() as i128);
    let beta = Fixed::from_raw(rng.random::<u64>() as i128);
    SkewSystem::new(alpha, beta, random_h(rng)).expect("finite spec")
}

pub fn iterate_oracle(opts: &VerifyOptions) -> SuiteOutcome {
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed ^ 6);
    let systems = (opts.instances / 1000).max(5);
    let (mut bad, mut total) = (0, 0);
    for _ in 0..systems {
        let sys = random_system(&mut rng);
        let start = random_element(&mut rng, GroupLaw::HEISENBERG).canonical_rep();
        let mut pt = start;
        for n in 1..=256u64 {
            pt = sys.step(&pt).expect("law");
            if n.is_power_of_two() {
                bad += (sys.iterate(&start, n).expect("law") != pt) as u64;
                total += 1;
            }
        }
    }
    outcome("iterate oracle", bad, total, "closed-form iterates")
}

/// `ρ π (T^{pn} e, T^{qn} e)` computed from the two `X` orbits.
pub fn reduced_pair_point(first: &NilPoint, second: &NilPoint, primes: PrimePair) -> heislab::Result<TorusPoint> {
    let pair = JoiningPair::new(*first.rep(), *second.rep(), primes)?.lift_to_g1()?;
    let star = pair.project()?.canonical_rep();
    let r = star.rep();
    Ok(TorusPoint::new(r.x, r.y, r.z))
}

pub fn commutation(opts: &VerifyOptions) -> SuiteOutcome {
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed ^ 7);
    let steps = 200u64;
    let (mut bad, mut total) = (0, 0);
    for (p, q) in [(3, 2), (5, 2), (5, 3), (7, 5)] {
        let sys = random_system(&mut rng);
        let js = JoiningSystem::build(&sys, p, q).expect("primes");
        let (tp, tq) = (sys.power(p as u32), sys.power(q as u32));
        let id = NilPoint::identity(GroupLaw::HEISENBERG);
        let (mut a, mut b) = (id, id);
        let mut t = TorusPoint::origin();
        for _ in 0..steps {
            a = tp.step(&a).expect("law");
            b = tq.step(&b).expect("law");
            t = js.step_trivialized(&t);
            let ok = matches!(reduced_pair_point(&a, &b, js.primes()), Ok(r) if r == t);
            bad += (!ok) as u64;
            total += 1;
        }
    }
    outcome("joining commutation", bad, total, "orbit points")
}

pub fn degree_law(opts: &VerifyOptions) -> SuiteOutcome {
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed ^ 8);
    let (mut bad, mut total) = (0, 0);
    for (p, q) in [(3, 2), (5, 3), (7, 2)] {
        for d1 in 0..=3 {
            let mut h = random_h(&mut rng);
            h.d1 = d1;
            let sys = SkewSystem::new(Fixed::from_raw(rng.random::<u64>() as i128), Fixed::from_raw(rng.random::<u64>() as i128), h)
                .expect("finite spec");
            let js = JoiningSystem::build(&sys, p, q).expect("primes");
            for n in [1u64, 7, 20] {
                let y0 = rng.random::<f64>();
                let lip = n as f64 * js.lipschitz();
                let w = winding_scan(|x| js.cocycle_closed(x, y0, n).to_f64(), lip).map(|s| s.winding);
                bad += (w != Ok(n as i64 * js.twist() * d1)) as u64;
                total += 1;
            }
        }
    }
    outcome("degree law", bad, total, "windings")
}

fn trial_division_mu(mut n: u64) -> i8 {
    let mut mu = 1;
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
        -mu
    } else {
        mu
    }
}

pub fn sieve_oracle(_: &VerifyOptions) -> SuiteOutcome {
    let bound = 20_000;
    let table = MobiusTable::sieve(bound).expect("bound in range");
    let bad = (1..=bound).filter(|&n| table.mu(n) != trial_division_mu(n)).count() as u64;
    let mertens_ok = table.mertens_at(&[1000, 10_000]) == vec![2, -23];
    outcome("sieve oracle", bad + (!mertens_ok) as u64, bound, "values")
}

pub fn determinism(opts: &VerifyOptions) -> SuiteOutcome {
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed ^ 9);
    let sys = random_system(&mut rng);
    let driver = SkewOrbit::new(&sys, NilPoint::identity(GroupLaw::HEISENBERG)).expect("law");
    let sink = FnSink::new(1, |n: u64, pt: &NilPoint, acc: &mut [Complex64]| {
        let z = pt.rep().z.fract_f64() + (n % 7) as f64;
        acc[0] += Complex64::from_polar(1.0, std::f64::consts::TAU * z);
    });
    let checkpoints = [1000, 50_000, 200_000];
    let runs: Vec<_> = [1, 2, 8]
        .iter()
        .map(|&w| {
            let plan = OrbitSegmentPlan::new(4096, w).expect("plan");
            orbit_stream(&driver, &sink, &checkpoints, &plan)
        })
        .collect();
    let bad = runs.iter().filter(|r| r.is_err() || **r != runs[0]).count() as u64;
    outcome("determinism", bad, runs.len() as u64, "worker counts")
}

type Suite = fn(&VerifyOptions) -> SuiteOutcome;

pub const SUITES: &[(&str, Suite)] = &[
    ("associativity", associativity),
    ("inverse", inverses),
    ("lattice closure", lattice_closure),
    ("centrality", centrality),
    ("reduction", reduction),
    ("projection morphism", projection),
    ("iterate oracle", iterate_oracle),
    ("joining commutation", commutation),
    ("degree law", degree_law),
    ("sieve oracle", sieve_oracle),
    ("determinism", determinism),
];

pub fn run_all(opts: &VerifyOptions) -> Vec<SuiteOutcome> {
    SUITES.iter().map(|(_, suite)| suite(opts)).collect()
}
