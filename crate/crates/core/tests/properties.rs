mod common;

use bilinear_core::diagnostics::{
    check_l1_lower_bound, check_norm_growth, transition_graph, CheckOptions,
    DEFAULT_DEGENERACY_TOL,
};
use bilinear_core::galerkin::{compress, empirical_truncation_order, harmonic_truncation_order};
use bilinear_core::propagator::{propagate, propagator_matrix};
use bilinear_core::spectral::coupling_norm_column;
use bilinear_core::synth::{design_transfer, waveform_efficiency, DesignOptions};
use bilinear_core::{
    PeriodicPulse, PiecewiseConstantControl, PulseShape, SpectralSystem, StateSpec, Trajectory,
    Waveform,
};
use common::*;
use proptest::prelude::*;

fn system(index: usize) -> SpectralSystem {
    match index % 4 {
        0 => SpectralSystem::square_well(),
        1 => SpectralSystem::harmonic(),
        2 => SpectralSystem::planar_rotor(),
        _ => SpectralSystem::anharmonic(2).unwrap(),
    }
}

fn samples() -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-1.0f64..1.0, 2..24).prop_filter("not all zero", |v| {
        v.iter().any(|x| x.abs() > 1e-3)
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn propagation_is_unitary(seed in any::<u64>(), which in 0usize..4, order in 2usize..16) {
        let sys = system(which);
        let comp = compress(&sys, order).unwrap();
        let mut r = rng(seed);
        // keep the anharmonic generator moderate
        let umax = if which % 4 == 3 { 0.05 } else { 2.0 };
        let u = random_control(&mut r, 5, 0.5, umax);
        let psi0 = random_state(&mut r, order, order.min(3));
        let traj = propagate(&comp, &u, &psi0, 0.07).unwrap();
        for x in traj.states() {
            prop_assert!((norm(x) - 1.0).abs() < 1e-9);
        }
    }

    #[test]
    fn propagators_compose(seed in any::<u64>(), which in 0usize..3, order in 2usize..10) {
        let sys = system(which);
        let comp = compress(&sys, order).unwrap();
        let mut r = rng(seed);
        let u1 = random_control(&mut r, 3, 0.4, 1.5);
        let u2 = random_control(&mut r, 2, 0.4, 1.5);
        let m1 = propagator_matrix(&comp, &u1).unwrap();
        let m2 = propagator_matrix(&comp, &u2).unwrap();
        let m = propagator_matrix(&comp, &u1.concat(&u2)).unwrap();
        prop_assert!((m - m2 * m1).norm() < 1e-10);
    }

    #[test]
    fn compressions_nest(which in 0usize..4, m in 1usize..12, extra in 0usize..12) {
        let sys = system(which);
        let small = compress(&sys, m).unwrap();
        let large = compress(&sys, m + extra).unwrap();
        prop_assert_eq!(small.eigenvalues(), &large.eigenvalues()[..m]);
        prop_assert_eq!(small.coupling(), &large.coupling().view((0, 0), (m, m)).into_owned());
    }

    #[test]
    fn column_norms_grow_with_order(which in 0usize..4, n in 1usize..10, extra in 0usize..10) {
        let sys = system(which);
        let a = coupling_norm_column(&sys, n, n + extra).unwrap();
        let b = coupling_norm_column(&sys, n, n + extra + 1).unwrap();
        prop_assert!(b >= a);
    }

    #[test]
    fn graph_edges_grow_with_order(which in 0usize..4, n in 2usize..15, extra in 1usize..10) {
        let sys = system(which);
        let small = transition_graph(&sys, n, DEFAULT_DEGENERACY_TOL).unwrap();
        let large = transition_graph(&sys, n + extra, DEFAULT_DEGENERACY_TOL).unwrap();
        for e in &small.edges {
            prop_assert!(large.edge(e.j, e.k).is_some());
        }
        prop_assert!(large.edges.len() >= small.edges.len());
    }

    #[test]
    fn efficiency_is_a_fraction(s in samples(), h in 0.25f64..4.0) {
        let eff = waveform_efficiency(&PulseShape::tabulated(s), h).unwrap();
        prop_assert!((0.0..=1.0 + 1e-12).contains(&eff), "{}", eff);
    }

    #[test]
    fn efficiency_is_scale_invariant(s in samples()) {
        let base = waveform_efficiency(&PulseShape::tabulated(s.clone()), 1.0).unwrap();
        for c in [0.1, 1.0, 10.0] {
            let scaled: Vec<f64> = s.iter().map(|v| c * v).collect();
            let e = waveform_efficiency(&PulseShape::tabulated(scaled), 1.0).unwrap();
            prop_assert!((e - base).abs() < 1e-12, "c={} {} vs {}", c, e, base);
        }
    }

    #[test]
    fn efficiency_is_translation_invariant(s in samples(), h in 1u32..4) {
        for shape in [PulseShape::cosine(), PulseShape::square(), PulseShape::tabulated(s.clone())] {
            let base = waveform_efficiency(&shape, h as f64).unwrap();
            for i in 0..8 {
                let phase = i as f64 * std::f64::consts::TAU / 8.0 + 0.1;
                let e = waveform_efficiency(&shape.clone().with_phase(phase), h as f64).unwrap();
                prop_assert!((e - base).abs() < 1e-10, "phase {}: {} vs {}", phase, e, base);
            }
        }
    }

    #[test]
    fn rendered_l1_is_linear_in_repetitions(which in 0usize..3, reps in 1usize..20, amp in 0.01f64..1.0) {
        let sys = system(which);
        let pulse = PeriodicPulse::new(&sys, (1, 2), PulseShape::cosine(), amp, 1).unwrap();
        let one = pulse.render(64).unwrap().l1_norm();
        let many = pulse.with_repetitions(reps).unwrap().render(64).unwrap().l1_norm();
        prop_assert!((many - reps as f64 * one).abs() < 1e-9 * many);
    }

    #[test]
    fn checks_hold_on_random_rotor_controls(seed in any::<u64>()) {
        let sys = SpectralSystem::planar_rotor();
        let order = 24;
        let comp = compress(&sys, order).unwrap();
        let mut r = rng(seed);
        let u = random_control(&mut r, 6, 0.3, 1.0);
        let traj = propagate(&comp, &u, &unit(order, 1), 0.05).unwrap();
        let opts = CheckOptions::default();
        let l1 = check_l1_lower_bound(&traj, &sys, &opts).unwrap();
        prop_assert!(l1.verdict.is_pass(), "{:?}", l1);
        for k in [1.0, 2.0] {
            let c_k = sys.known_coupling_bound(k).unwrap();
            let rep = check_norm_growth(&traj, &sys, k, c_k, &opts).unwrap();
            prop_assert!(!rep.verdict.is_fail(), "{:?}", rep);
        }
    }

    #[test]
    fn controls_round_trip(seed in any::<u64>()) {
        let u = random_control(&mut rng(seed), 7, 1.0, 3.0);
        let back: PiecewiseConstantControl =
            serde_json::from_str(&serde_json::to_string(&u).unwrap()).unwrap();
        prop_assert_eq!(u, back);
    }

    #[test]
    fn pulses_round_trip(s in samples(), amp in 0.0f64..2.0, reps in 1usize..50, phase in 0.0f64..6.0) {
        let sys = SpectralSystem::planar_rotor();
        for shape in [PulseShape::cosine(), PulseShape::tabulated(s.clone()).with_phase(phase)] {
            let p = PeriodicPulse::new(&sys, (2, 3), shape, amp, reps).unwrap();
            let back: PeriodicPulse =
                serde_json::from_str(&serde_json::to_string(&p).unwrap()).unwrap();
            prop_assert_eq!(p, back);
        }
    }

    #[test]
    fn trajectories_round_trip(seed in any::<u64>()) {
        let sys = SpectralSystem::square_well();
        let comp = compress(&sys, 6).unwrap();
        let mut r = rng(seed);
        let u = random_control(&mut r, 3, 0.5, 1.0);
        let traj = propagate(&comp, &u, &random_state(&mut r, 6, 2), 0.2).unwrap();
        let back: Trajectory =
            serde_json::from_str(&serde_json::to_string(&traj).unwrap()).unwrap();
        prop_assert_eq!(traj, back);
    }
}

#[test]
fn waveforms_and_states_round_trip() {
    for w in [
        Waveform::Cosine,
        Waveform::Square,
        Waveform::Tabulated {
            samples: vec![0.5, -1.0, 0.25],
        },
    ] {
        let back: Waveform = serde_json::from_str(&serde_json::to_string(&w).unwrap()).unwrap();
        assert_eq!(w, back);
    }
    for s in [
        StateSpec::Basis(3),
        StateSpec::Coefficients(vec![C64::new(0.6, 0.0), C64::new(0.0, 0.8)]),
    ] {
        let back: StateSpec = serde_json::from_str(&serde_json::to_string(&s).unwrap()).unwrap();
        assert_eq!(s, back);
    }
}

#[test]
fn truncation_order_is_monotone_on_grid() {
    let budgets = [0.1, 1.0, 3.0, 10.0];
    let targets = [1e-2, 1e-4, 1e-8];
    for &k in &budgets {
        let orders: Vec<usize> = targets
            .iter()
            .map(|&e| harmonic_truncation_order(k, e).unwrap())
            .collect();
        assert!(orders.windows(2).all(|w| w[0] <= w[1]), "K={k}: {orders:?}");
    }
    for &e in &targets {
        let orders: Vec<usize> = budgets
            .iter()
            .map(|&k| harmonic_truncation_order(k, e).unwrap())
            .collect();
        assert!(orders.windows(2).all(|w| w[0] <= w[1]), "eps={e}: {orders:?}");
    }
}

#[test]
fn zero_control_needs_only_the_initial_support() {
    for which in 0..4 {
        let sys = system(which);
        let u = PiecewiseConstantControl::constant(0.0, 2.0).unwrap();
        for support in [1usize, 3] {
            let report = empirical_truncation_order(
                &sys,
                &u,
                &StateSpec::Basis(support),
                1e-12,
                64,
            )
            .unwrap();
            assert_eq!(report.order, Some(support), "{}", sys.name());
        }
    }
}

#[test]
fn design_l1_is_asymptotically_amplitude_independent() {
    let sys = SpectralSystem::planar_rotor();
    let l1: Vec<f64> = [0.01, 0.005, 0.0025]
        .iter()
        .map(|&a| {
            design_transfer(&sys, (1, 2), a, &PulseShape::cosine(), &DesignOptions::default())
                .unwrap()
                .l1_norm
        })
        .collect();
    // 2/|b| = 4 for the cosine
    for v in &l1 {
        assert!((v / 4.0 - 1.0).abs() < 0.05, "{l1:?}");
    }
    let slope = (l1[2] - l1[0]) / (0.0025 - 0.01);
    assert!(slope.abs() * 0.01 < 0.05 * l1[0], "slope {slope}");
}
