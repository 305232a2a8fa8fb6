use heislab::cocycle::{BaseFunctionSpec, TrigTerm};
use heislab::dynamics::{JoiningSystem, SkewMap, SkewSystem, TorusPoint};
use heislab::heisenberg::{GroupLaw, NilPoint, PrimePair};
use heislab::moebius::{bilinear_sum, bilinear_sum_reduced, correlation_sum, davenport_baseline, rotation_phase, MobiusTable, Weight};
use heislab::observables::{Bump, JoiningObservable, Observable};
use heislab::orbit::OrbitSegmentPlan;
use heislab::Fixed;
use num_complex::Complex64;
use proptest::prelude::*;

fn system() -> SkewSystem {
    let h = BaseFunctionSpec::trig(
        1,
        0,
        vec![TrigTerm {
            k1: 1,
            k2: 1,
            amplitude: 0.1,
            phase: 0.0,
        }],
    );
    SkewSystem::new(Fixed::from_f64(2f64.sqrt() - 1.0), Fixed::from_f64(3f64.sqrt() - 1.0), h).unwrap()
}

fn observable() -> Observable {
    Observable::vertical(1, Bump::default()).unwrap()
}

fn origin() -> NilPoint {
    NilPoint::identity(GroupLaw::HEISENBERG)
}

#[test]
fn correlation_matches_naive_loop() {
    let sys = system();
    let obs = observable();
    let table = MobiusTable::sieve(1000).unwrap();
    let report = correlation_sum(&sys, &obs, &origin(), &[10, 100, 1000], Weight::Mobius(&table), &OrbitSegmentPlan::default()).unwrap();
    let mut pt = origin();
    let mut acc = Complex64::new(0.0, 0.0);
    for n in 1..=1000u64 {
        pt = sys.step(&pt).unwrap();
        let m = table.mu(n);
        if m != 0 {
            acc += obs.eval(&pt) * m as f64;
        }
        if let Some(v) = report.value_at(n) {
            assert_eq!(v, acc / n as f64, "N = {n}");
        }
    }
}

#[test]
fn bilinear_matches_naive_loop() {
    let sys = system();
    let obs = observable();
    let primes = PrimePair::new(5, 3).unwrap();
    let report = bilinear_sum(&sys, &obs, &origin(), primes, &[1000], &OrbitSegmentPlan::default()).unwrap();
    let jo = JoiningObservable::new(obs, primes).unwrap();
    let (mut a, mut b) = (origin(), origin());
    let mut acc = Complex64::new(0.0, 0.0);
    for _ in 0..1000 {
        a = sys.iterate(&a, 5).unwrap();
        b = sys.iterate(&b, 3).unwrap();
        acc += jo.eval_pair(&a, &b);
    }
    assert_eq!(report.value_at(1000).unwrap(), acc / 1000.0);
}

#[test]
fn reduced_route_matches_naive_trivialized_loop() {
    let sys = system();
    let obs = observable();
    let primes = PrimePair::new(3, 2).unwrap();
    let report = bilinear_sum_reduced(&sys, &obs, primes, &[1000], &OrbitSegmentPlan::default()).unwrap();
    let js = JoiningSystem::new(sys, primes);
    let jo = JoiningObservable::new(obs, primes).unwrap();
    let mut t = TorusPoint::origin();
    let mut acc = Complex64::new(0.0, 0.0);
    for _ in 0..1000 {
        t = js.step_trivialized(&t);
        acc += jo.eval_torus(&t);
    }
    assert_eq!(report.value_at(1000).unwrap(), acc / 1000.0);
}

#[test]
fn segment_size_only_reorders_summation() {
    let sys = system();
    let obs = observable();
    let table = MobiusTable::sieve(200_000).unwrap();
    let cps = [1000, 77_777, 200_000];
    let reports: Vec<_> = [1u64 << 8, 1 << 12, 1 << 16]
        .iter()
        .map(|&s| correlation_sum(&sys, &obs, &origin(), &cps, Weight::Mobius(&table), &OrbitSegmentPlan::new(s, 1).unwrap()).unwrap())
        .collect();
    for r in &reports[1..] {
        for (a, b) in r.checkpoints.iter().zip(&reports[0].checkpoints) {
            assert!((a.value - b.value).norm() < 1e-12);
        }
    }
}

#[test]
fn worker_counts_give_identical_bits() {
    let sys = system();
    let obs = observable();
    let primes = PrimePair::new(3, 2).unwrap();
    let cps = [5000, 150_000];
    let run = |w| {
        let plan = OrbitSegmentPlan::new(1 << 12, w).unwrap();
        (
            bilinear_sum(&sys, &obs, &origin(), primes, &cps, &plan).unwrap().checkpoints,
            bilinear_sum_reduced(&sys, &obs, primes, &cps, &plan).unwrap().checkpoints,
        )
    };
    let one = run(1);
    assert_eq!(run(3), one);
    assert_eq!(run(8), one);
}

#[test]
fn mobius_inversion_holds() {
    let bound = 20_000;
    let table = MobiusTable::sieve(bound).unwrap();
    let mut divisor_sums = vec![0i64; bound as usize + 1];
    for d in 1..=bound {
        let m = table.mu(d) as i64;
        for k in (d..=bound).step_by(d as usize) {
            divisor_sums[k as usize] += m;
        }
    }
    assert_eq!(divisor_sums[1], 1);
    assert!(divisor_sums[2..].iter().all(|&s| s == 0));
}

#[test]
fn unit_weight_with_constant_observable_is_one() {
    let report = correlation_sum(&system(), &Observable::one(), &origin(), &[1, 1000], Weight::Unit, &OrbitSegmentPlan::default()).unwrap();
    for c in &report.checkpoints {
        assert!((c.value - Complex64::new(1.0, 0.0)).norm() < 1e-15);
    }
}

#[test]
fn davenport_matches_direct_sum() {
    let table = MobiusTable::sieve(5000).unwrap();
    let alpha = Fixed::from_f64(2f64.sqrt() - 1.0);
    let report = davenport_baseline(alpha, &table, &[5000], &OrbitSegmentPlan::default()).unwrap();
    let direct: Complex64 = (1..=5000u64)
        .map(|n| Complex64::from_polar(1.0, std::f64::consts::TAU * (n as f64 * alpha.to_f64()).fract()) * table.mu(n) as f64)
        .sum::<Complex64>()
        / 5000.0;
    assert!((report.value_at(5000).unwrap() - direct).norm() < 1e-10);
    assert_eq!(rotation_phase(alpha, 0), Complex64::new(1.0, 0.0));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn iterates_compose(m in 0u64..300, n in 0u64..300, raw in any::<u64>()) {
        let sys = system();
        let start = sys.iterate(&origin(), raw % 1000).unwrap();
        let two_step = sys.iterate(&sys.iterate(&start, m).unwrap(), n).unwrap();
        prop_assert_eq!(two_step, sys.iterate(&start, m + n).unwrap());
    }

    #[test]
    fn trivialized_iterates_compose(m in 0u64..300, n in 0u64..300, p_idx in 0usize..3) {
        let (p, q) = [(3, 2), (5, 3), (7, 2)][p_idx];
        let js = JoiningSystem::build(&system(), p, q).unwrap();
        let a = js.iterate_trivialized(&js.iterate_trivialized(&TorusPoint::origin(), m), n);
        prop_assert_eq!(a, js.iterate_trivialized(&TorusPoint::origin(), m + n));
    }
}
