use proptest::prelude::*;

use qnetsim::cavity::{
    cavity_measure, field_operators, mode_norm_squared, CavityMeasurement, CavitySpec,
};
use qnetsim::jc::{
    build_jc_hamiltonian, energy_transfer_coefficient, jc_eigensystem, jc_propagator,
    CoupledSystem, JcMode,
};
use qnetsim::linalg::{evolution_operator, hermitian_eig, partial_trace, residual, tensor_vec};
use qnetsim::measure::{
    measure, probability, projector_qubit1_energy, projector_qubit1_position,
    projector_qubit2_energy, von_neumann_entropy, EntropyUnit, Node, NETWORK_DIMS,
};
use qnetsim::network::{
    build_network_hamiltonian, build_renormalized_network_hamiltonian, network_eigensystem,
    NetworkForm, NetworkSystem,
};
use qnetsim::qubit::{
    build_qubit_hamiltonian, qubit_eigensystem, qubit_propagator, PropagatorMode, QubitParams,
};
use qnetsim::scenario::{
    parse_scenario_file, to_toml, JcSpec, Method, NetworkSpec, Operation, QubitSpec, Scenario,
    SystemSpec, TimeGrid,
};
use qnetsim::{BasisLabel, ComplexMatrix, DriveSignal, StateVector, C64};

fn complex() -> impl Strategy<Value = C64> {
    (-1.0..1.0f64, -1.0..1.0f64).prop_map(|(a, b)| C64::new(a, b))
}

fn hermitian(n: usize) -> impl Strategy<Value = ComplexMatrix> {
    prop::collection::vec(complex(), n * n).prop_map(move |v| {
        let a = ComplexMatrix::from_row_slice(n, n, &v);
        (&a + &a.adjoint()).scale_real(0.5)
    })
}

fn state(n: usize) -> impl Strategy<Value = StateVector> {
    prop::collection::vec(complex(), n)
        .prop_filter("non-zero", |v| {
            v.iter().map(|z| z.norm_sqr()).sum::<f64>() > 1e-3
        })
        .prop_map(|v| StateVector::normalized(v, BasisLabel::Generic).unwrap())
}

fn network_state() -> impl Strategy<Value = StateVector> {
    state(8).prop_map(|s| s.with_basis(BasisLabel::NetworkEnergy))
}

fn qubit_params() -> impl Strategy<Value = QubitParams> {
    (-5.0..5.0f64, -5.0..5.0f64, 0.01..3.0f64, -3.2..3.2f64)
        .prop_map(|(e1, e2, m, ph)| QubitParams::constant(e1, e2, m, ph))
}

fn jc_system() -> impl Strategy<Value = CoupledSystem> {
    (
        -2.0..2.0f64,
        0.1..4.0f64,
        0.0..2.0f64,
        0.1..3.0f64,
        0.01..2.0f64,
        -3.2..3.2f64,
    )
        .prop_map(|(eg, gap, p1, dp, g, phase)| {
            let mut s = CoupledSystem::constant(eg, eg + gap, p1, p1 + dp, g);
            s.coupling_phase = phase;
            s
        })
}

fn network_system() -> impl Strategy<Value = NetworkSystem> {
    let g = prop_oneof![-2.0..-0.01f64, 0.01..2.0f64];
    (0.1..3.0f64, g.clone(), g, -3.2..3.2f64, -3.2..3.2f64)
        .prop_map(|(e, g1, g2, d1, d2)| NetworkSystem::simplified(e, g1, g2, d1, d2).unwrap())
}

fn sorted(mut v: Vec<f64>) -> Vec<f64> {
    v.sort_by(f64::total_cmp);
    v
}

proptest! {
    #[test]
    fn exponential_of_hermitian_is_unitary(h in hermitian(4), s in -10.0..10.0f64) {
        let u = evolution_operator(&h, s).unwrap();
        prop_assert!(u.unitarity_deviation() <= 1e-10);
    }

    #[test]
    fn spectrum_invariant_under_unitary_conjugation(h in hermitian(4), g in hermitian(4), s in -3.0..3.0f64) {
        let u = evolution_operator(&g, s).unwrap();
        let conj = &(&u * &h) * &u.adjoint();
        let a = hermitian_eig(&h).unwrap().values;
        let b = hermitian_eig(&conj).unwrap().values;
        for (x, y) in a.iter().zip(&b) {
            prop_assert!((x - y).abs() <= 1e-10);
        }
    }

    #[test]
    fn product_state_reduces_to_rank_one(a in state(2), b in state(3)) {
        let psi = StateVector::new(tensor_vec(a.amplitudes(), b.amplitudes()), BasisLabel::Generic).unwrap();
        let rho = psi.density_matrix();
        for keep in 0..2 {
            let values = hermitian_eig(&partial_trace(&rho, &[2, 3], keep).unwrap()).unwrap().values;
            let n = values.len();
            prop_assert!((values[n - 1] - 1.0).abs() <= 1e-10);
            prop_assert!(values[n - 2].abs() <= 1e-10);
        }
    }

    #[test]
    fn qubit_closed_form_matches_solver(p in qubit_params(), t in 0.0..5.0f64) {
        let eig = qubit_eigensystem(&p, t).unwrap();
        let h = build_qubit_hamiltonian(&p, t);
        let num = hermitian_eig(&h).unwrap().values;
        prop_assert!((eig.e1 - num[0]).abs() <= 1e-12 * (1.0 + num[0].abs()));
        prop_assert!((eig.e2 - num[1]).abs() <= 1e-12 * (1.0 + num[1].abs()));
        let trace = p.ep1.evaluate(t) + p.ep2.evaluate(t);
        prop_assert!((eig.e1 + eig.e2 - trace).abs() <= 1e-12 * (1.0 + trace.abs()));
    }

    #[test]
    fn symmetric_imaginary_hopping_is_hadamard(ep in -3.0..3.0f64, m in 0.01..3.0f64, sign in prop::bool::ANY) {
        let phase = if sign { std::f64::consts::FRAC_PI_2 } else { -std::f64::consts::FRAC_PI_2 };
        let eig = qubit_eigensystem(&QubitParams::constant(ep, ep, m, phase), 0.0).unwrap();
        for v in [&eig.v1, &eig.v2] {
            for amp in v.amplitudes() {
                prop_assert!((amp.norm_sqr() - 0.5).abs() <= 1e-12);
            }
        }
    }

    #[test]
    fn cavity_measurements_are_consistent(
        l in 0.5..5.0f64, t in 0.0..10.0f64, frac in -0.49..0.49f64, theta in 0.1..1.4f64, phi in -3.0..3.0f64,
    ) {
        let spec = CavitySpec::line(l, 1.0, 2.0).unwrap();
        let n0 = mode_norm_squared(&spec, 2, 0.0).unwrap();
        prop_assert!((mode_norm_squared(&spec, 2, t).unwrap() - n0).abs() <= 1e-9);
        let m0 = mode_norm_squared(&spec, 1, 0.0).unwrap();
        prop_assert!((mode_norm_squared(&spec, 1, t).unwrap() - m0).abs() <= 1e-9);

        let psi = StateVector::new(
            vec![C64::new(theta.cos(), 0.0), C64::from_polar(theta.sin(), phi)],
            BasisLabel::CavityModes,
        ).unwrap();
        let p1 = cavity_measure(&psi, CavityMeasurement::Energy(1), &spec, t).unwrap().0;
        let p2 = cavity_measure(&psi, CavityMeasurement::Energy(2), &spec, t).unwrap().0;
        prop_assert!((p1 + p2 - 1.0).abs() <= 1e-12);

        let (e, b) = field_operators(&spec, frac * l, t).unwrap();
        prop_assert!(e.hermiticity_deviation() <= 1e-12);
        prop_assert!(b.hermiticity_deviation() <= 1e-12);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    #[test]
    fn jc_closed_form_matches_solver(sys in jc_system()) {
        let h = build_jc_hamiltonian(&sys, 0.0).unwrap();
        let eig = jc_eigensystem(&sys, 0.0).unwrap();
        let num = hermitian_eig(&h).unwrap().values;
        let ana = sorted(eig.energies.to_vec());
        for (a, b) in ana.iter().zip(&num) {
            prop_assert!((a - b).abs() <= 1e-10);
        }
        for k in 0..4 {
            prop_assert!(residual(&h, eig.energies[k], eig.vectors[k].amplitudes()) <= 1e-10);
        }
        let (eg, ee) = sys.qubit_levels(0.0).unwrap();
        let (a, b) = (ee + sys.cavity.0, eg + sys.cavity.1);
        prop_assert!(eig.energies[2] <= a.min(b) + 1e-12);
        prop_assert!(a.max(b) <= eig.energies[3] + 1e-12);
    }

    #[test]
    fn transfer_coefficient_is_block_element(sys in jc_system(), t in 0.0..20.0f64) {
        let k = energy_transfer_coefficient(&sys, 0.0, t).unwrap();
        prop_assert!((0.0..=1.0).contains(&k));
        let u = jc_propagator(&sys, 0.0, t, JcMode::ClosedForm, None).unwrap();
        prop_assert!((k - u[(2, 1)].norm_sqr()).abs() <= 1e-12);
    }

    #[test]
    fn network_spectrum_matches_solver(sys in network_system()) {
        let h = build_network_hamiltonian(&sys, 0.0, NetworkForm::Simplified).unwrap();
        let eig = network_eigensystem(&sys, 0.0).unwrap();
        let num = hermitian_eig(&h).unwrap().values;
        for (a, b) in sorted(eig.energies.to_vec()).iter().zip(&num) {
            prop_assert!((a - b).abs() <= 1e-10);
        }
        let r = sys.g1.hypot(sys.g2);
        let e = sys.cavity.0;
        let expected = sorted(vec![3.0 * e, 4.0 * e, 5.0 * e, 6.0 * e, 4.0 * e - r, 5.0 * e - r, 4.0 * e + r, 5.0 * e + r]);
        for (a, b) in expected.iter().zip(&num) {
            prop_assert!((a - b).abs() <= 1e-10);
        }
        prop_assert_eq!(eig.product.iter().filter(|&&p| p).count(), 2);
    }

    #[test]
    fn network_builders_are_hermitian(
        sys in network_system(), t in 0.0..5.0f64, len in 0.0..3.0f64,
        s in (-2.0..2.0f64, -2.0..2.0f64, -2.0..2.0f64), c0 in 0.0..0.5f64, va in prop::array::uniform5(-1.0..1.0f64),
        dip in complex(),
    ) {
        let mut sys = sys;
        sys.f1 = DriveSignal::cosine(1.0, 0.7, 0.2).plus(&DriveSignal::constant(0.5));
        sys.waveguide_length = len;
        (sys.imprints.s_a, sys.imprints.s_b, sys.imprints.s_0) = s;
        sys.renorm_a.c0 = c0;
        sys.renorm_a.va = va;
        sys.renorm_a.dipole_scale = dip;
        sys.renorm_b.dipole_scale = dip.conj();
        for h in [
            build_network_hamiltonian(&sys, t, NetworkForm::Simplified).unwrap(),
            build_network_hamiltonian(&sys, t, NetworkForm::General).unwrap(),
            build_renormalized_network_hamiltonian(&sys, t).unwrap(),
        ] {
            prop_assert!(h.hermiticity_deviation() <= 1e-12);
        }
    }

    #[test]
    fn imprints_only_change_phases(sys in network_system(), t in 0.0..5.0f64, s in (-2.0..2.0f64, -2.0..2.0f64, -2.0..2.0f64)) {
        let mut sys = sys;
        sys.renorm_a.diagonal_field = [DriveSignal::constant(0.3), DriveSignal::linear(0.1, 0.2)];
        sys.renorm_b.diagonal_field = [DriveSignal::constant(-0.2), DriveSignal::constant(0.4)];
        let plain = build_renormalized_network_hamiltonian(&sys, t).unwrap();
        (sys.imprints.s_a, sys.imprints.s_b, sys.imprints.s_0) = s;
        let imprinted = build_renormalized_network_hamiltonian(&sys, t).unwrap();
        for i in 0..8 {
            for j in 0..8 {
                prop_assert!((plain[(i, j)].norm() - imprinted[(i, j)].norm()).abs() <= 1e-12);
            }
        }
    }

    #[test]
    fn born_rule_completeness(psi in network_state(), p in qubit_params(), t in 0.0..3.0f64) {
        let pairs = [
            (projector_qubit1_energy(false), projector_qubit1_energy(true)),
            (projector_qubit2_energy(false), projector_qubit2_energy(true)),
            (
                projector_qubit1_position(Node::X1, &p, t).unwrap(),
                projector_qubit1_position(Node::X2, &p, t).unwrap(),
            ),
        ];
        for (a, b) in &pairs {
            let total = probability(&psi, a).unwrap() + probability(&psi, b).unwrap();
            prop_assert!((total - 1.0).abs() <= 1e-12);
        }
    }

    #[test]
    fn repeated_measurement_is_certain(psi in network_state(), excited in prop::bool::ANY) {
        let proj = projector_qubit1_energy(excited);
        prop_assume!(probability(&psi, &proj).unwrap() > 1e-6);
        let (_, collapsed) = measure(&psi, &proj).unwrap();
        prop_assert!((probability(&collapsed, &proj).unwrap() - 1.0).abs() <= 1e-12);
    }

    #[test]
    fn pure_state_entropy_is_symmetric(psi in network_state()) {
        for dims in [[2usize, 4], [4, 2]] {
            let a = von_neumann_entropy(&psi, &dims, 0, EntropyUnit::Nats).unwrap();
            let b = von_neumann_entropy(&psi, &dims, 1, EntropyUnit::Nats).unwrap();
            prop_assert!((a - b).abs() <= 1e-10);
        }
        for keep in 0..3 {
            let s = von_neumann_entropy(&psi, &NETWORK_DIMS, keep, EntropyUnit::Bits).unwrap();
            prop_assert!((-1e-12..=1.0 + 1e-12).contains(&s));
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(6))]

    #[test]
    fn stepped_qubit_preserves_norm(p in qubit_params(), sweep in -0.5..0.5f64, psi in state(2)) {
        let mut p = p;
        p.ep1 = p.ep1.plus(&DriveSignal::linear(0.0, sweep));
        let u = qubit_propagator(&p, 0.0, 10.0, PropagatorMode::Stepped, Some(1e-3)).unwrap();
        let out = psi.evolved(&u).unwrap();
        prop_assert!((out.norm_sqr().sqrt() - 1.0).abs() <= 1e-9);
    }

    #[test]
    fn stepped_jc_conserves_probability_each_step(sys in jc_system(), amp in 0.0..1.0f64, psi in state(4)) {
        let mut sys = sys;
        sys.coupling = sys.coupling.plus(&DriveSignal::cosine(amp, 3.0, 0.0));
        let mut psi = psi.with_basis(BasisLabel::CavityQubitEnergy);
        for k in 0..200 {
            let (t0, t1) = (k as f64 * 0.05, (k + 1) as f64 * 0.05);
            psi = psi.evolved(&jc_propagator(&sys, t0, t1, JcMode::Stepped, Some(1e-3)).unwrap()).unwrap();
            let total: f64 = psi.probabilities().iter().sum();
            prop_assert!((total - 1.0).abs() <= 1e-9);
        }
    }
}

fn signal() -> impl Strategy<Value = DriveSignal> {
    let leaf = prop_oneof![
        (-2.0..2.0f64).prop_map(DriveSignal::constant),
        (-2.0..2.0f64, -1.0..1.0f64).prop_map(|(a, b)| DriveSignal::linear(a, b)),
        (-2.0..2.0f64, -1.0..1.0f64, -0.5..0.5f64)
            .prop_map(|(a, b, c)| DriveSignal::quadratic(a, b, c)),
        (0.0..3.0f64, 0.0..30.0f64, -3.0..3.0f64)
            .prop_map(|(a, w, p)| DriveSignal::cosine(a, w, p)),
    ];
    prop::collection::vec(leaf, 1..4).prop_map(|v| {
        if v.len() == 1 {
            v[0].clone()
        } else {
            DriveSignal::Sum(v)
        }
    })
}

fn scenario() -> impl Strategy<Value = Scenario> {
    let system = prop_oneof![
        (signal(), signal(), 0.1..2.0f64).prop_map(|(ep1, ep2, m)| SystemSpec::Qubit(QubitSpec {
            ep1,
            ep2,
            ts_mag: DriveSignal::constant(m),
            ts_phase: DriveSignal::constant(0.0),
        })),
        (signal(), 0.1..2.0f64, -1.0..1.0f64).prop_map(|(d, g, ph)| SystemSpec::Jc(JcSpec {
            e_phi1: 1.0,
            e_phi2: 2.0,
            e_g: DriveSignal::constant(0.0),
            e_e: None,
            detuning: Some(d),
            g: DriveSignal::constant(g),
            g_phase: ph,
        })),
        (0.1..3.0f64, 0.01..1.0f64, 0.01..1.0f64, signal()).prop_map(|(e, g1, g2, d1)| {
            SystemSpec::Network(NetworkSpec {
                e_g: e,
                g1,
                g2,
                d1,
                d2: DriveSignal::constant(0.0),
                f1: DriveSignal::constant(1.0),
                waveguide_length: 0.0,
                signal_speed: 1.0,
                form: Default::default(),
            })
        }),
    ];
    (
        system,
        -5.0..5.0f64,
        0.1..10.0f64,
        2usize..500,
        prop::option::of(0u64..1_000_000),
        prop::bool::ANY,
    )
        .prop_map(|(system, t0, span, samples, seed, stepped)| Scenario {
            name: format!("s_{}", samples),
            operation: Operation::Eig,
            initial: None,
            output: None,
            seed,
            shots: None,
            method: if stepped {
                Method::Stepped
            } else {
                Method::Analytic
            },
            dt: stepped.then_some(1e-3),
            time: TimeGrid {
                t0,
                t1: t0 + span,
                samples,
            },
            system,
        })
}

proptest! {
    #[test]
    fn scenario_text_round_trips(list in prop::collection::vec(scenario(), 1..4)) {
        let list: Vec<Scenario> = list
            .into_iter()
            .enumerate()
            .map(|(k, mut s)| {
                s.name = format!("{}_{k}", s.name);
                s
            })
            .collect();
        let text = to_toml(&list);
        let parsed = parse_scenario_file(&text).unwrap();
        prop_assert_eq!(&parsed, &list);
        prop_assert_eq!(to_toml(&parsed), text);
    }
}
