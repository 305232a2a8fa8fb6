use std::f64::consts::TAU;

use heislab::cocycle::{BaseFunctionSpec, TrigTerm};
use heislab::diagnostics::{
    boundary_increment_fn, coboundary_search, frequencies_up_to, solve_transfer, transfer_grid, transfer_residual, weyl_sums, winding_in_x,
};
use heislab::dynamics::{JoiningSystem, SkewSystem, TorusPoint};
use heislab::observables::{Bump, Observable};
use heislab::orbit::OrbitSegmentPlan;
use heislab::{Fiber, Fixed};
use num_complex::Complex64;
use proptest::prelude::*;

const ALPHA: f64 = 0.414_213_562_373_095_1;
const BETA: f64 = 0.732_050_807_568_877_2;

fn trig_term() -> impl Strategy<Value = TrigTerm> {
    (-2i64..=2, -2i64..=2, -0.15f64..0.15, 0.0f64..TAU).prop_map(|(k1, k2, amplitude, phase)| TrigTerm { k1, k2, amplitude, phase })
}

fn joining() -> impl Strategy<Value = JoiningSystem> {
    (
        -3i64..=3,
        -2i64..=2,
        proptest::collection::vec(trig_term(), 0..3),
        prop_oneof![Just((3u64, 2u64)), Just((5, 2)), Just((7, 3)), Just((11, 5))],
    )
        .prop_map(|(d1, d2, terms, (p, q))| {
            let sys = SkewSystem::new(Fixed::from_f64(ALPHA), Fixed::from_f64(BETA), BaseFunctionSpec::trig(d1, d2, terms)).unwrap();
            JoiningSystem::build(&sys, p, q).unwrap()
        })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn winding_is_additive_in_n(js in joining(), n in 1u64..40, y0 in 0.0f64..1.0) {
        let wind = |n: u64| winding_in_x(|x, y| js.cocycle_closed(x, y, n).to_f64(), y0, n as f64 * js.lipschitz()).unwrap();
        let one = wind(1);
        prop_assert_eq!(one, js.windings().0);
        prop_assert_eq!(wind(n), n as i64 * one);
    }

    #[test]
    fn boundary_increment_is_y_independent(js in joining(), n in 1u64..60, k in 1i64..4, ys in proptest::collection::vec(0.0f64..1.0, 2..6)) {
        let values: Vec<_> = ys.iter().map(|&y| boundary_increment_fn(&js, k, n, y).unwrap()).collect();
        for v in &values {
            prop_assert!((v.computed - v.closed_form).abs() < 1e-6);
            prop_assert!((v.computed - values[0].computed).abs() < 1e-6);
        }
    }

    #[test]
    fn synthesized_coboundaries_are_recovered(terms in proptest::collection::vec(trig_term(), 1..5)) {
        let r = |x: f64, y: f64| terms.iter().map(|t| t.amplitude * (TAU * (t.k1 as f64 * x + t.k2 as f64 * y) + t.phase).cos()).sum::<f64>();
        let cutoff = 8;
        let grid = transfer_grid(cutoff);
        let g: Vec<f64> = (0..grid * grid)
            .map(|k| {
                let x = ((k % grid) as f64 + 0.5) / grid as f64;
                let y = ((k / grid) as f64 + 0.5) / grid as f64;
                r(x + ALPHA, y + BETA) - r(x, y)
            })
            .collect();
        let sol = solve_transfer(&g, grid, ALPHA, BETA, cutoff).unwrap();
        prop_assert!(transfer_residual(&sol, &g, grid, ALPHA, BETA) <= 1e-6);
    }
}

#[test]
fn standard_joining_cocycle_is_far_from_a_coboundary() {
    let sys = SkewSystem::new(
        Fixed::from_f64(ALPHA),
        Fixed::from_f64(BETA),
        BaseFunctionSpec::trig(1, 0, vec![TrigTerm { k1: 1, k2: 1, amplitude: 0.1, phase: 0.0 }]),
    )
    .unwrap();
    let js = JoiningSystem::build(&sys, 3, 2).unwrap();
    let report = coboundary_search(&js, 1, 8).unwrap();
    assert!(report.residual > 0.1);
    assert_eq!(report.removed_winding, (5, 0));
}

#[test]
fn weyl_sums_of_base_frequencies_are_geometric() {
    let sys = SkewSystem::new(Fixed::from_f64(ALPHA), Fixed::from_f64(BETA), BaseFunctionSpec::linear(1, 0)).unwrap();
    let js = JoiningSystem::build(&sys, 3, 2).unwrap();
    let freqs = [[1, 0, 0], [0, 2, 0], [1, -1, 0]];
    let n = 4096u64;
    let reports = weyl_sums(&js, &TorusPoint::origin(), &freqs, &[n], &OrbitSegmentPlan::default()).unwrap();
    for (r, f) in reports.iter().zip(freqs) {
        let theta = f[0] as f64 * ALPHA + f[1] as f64 * BETA;
        let geometric: Complex64 = (1..=n).map(|j| Complex64::from_polar(1.0, TAU * theta * j as f64)).sum::<Complex64>() / n as f64;
        assert!((r.checkpoints[0].1 - geometric).norm() < 1e-9, "{f:?}");
    }
    assert_eq!(frequencies_up_to(2).len(), 62);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn vertical_observables_are_fiber_equivariant(
        xi in -3i64..=3,
        x in 0.0f64..1.0,
        y in 0.0f64..1.0,
        z in 0.0f64..1.0,
        t in 0.0f64..1.0,
    ) {
        let obs = Observable::vertical(xi, Bump::default()).unwrap();
        let (fx, fy) = (Fixed::from_f64(x), Fixed::from_f64(y));
        let (fz, ft) = (Fiber::from_f64(z), Fiber::from_f64(t));
        let shifted = obs.eval_coords(fx, fy, fz + ft);
        let expected = obs.eval_coords(fx, fy, fz) * Complex64::from_polar(1.0, TAU * xi as f64 * ft.to_f64());
        prop_assert!((shifted - expected).norm() < 1e-12);
    }
}
