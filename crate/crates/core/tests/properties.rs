//! Randomized invariants across the public API.

use proptest::prelude::*;
use teleport_lab::counts::{
    acquire, computational_settings, expected_counts, sample_counts, state_probability,
    tomographic_settings, AcquisitionMode, Observation,
};
use teleport_lab::noise::{
    dephase_pair, leaky_cnot, phase_flip, predict, werner, Channel, NoiseConfig,
};
use teleport_lab::protocol::{correction_for, Outcome, Protocol, DATA_QUBITS};
use teleport_lab::quantum::linalg::{c, hermitian_eigen, identity, trace, CMatrix, CVector};
use teleport_lab::quantum::{
    bell_state, BellConvention, BellName, DensityMatrix, Gate, Pauli, PureState, Register, Tensor,
};
use teleport_lab::tomography::{average_gate_fidelity, qst_reconstruct};

fn labels(names: &[&str]) -> Vec<String> {
    names.iter().map(|s| s.to_string()).collect()
}

fn vector(n: usize) -> impl Strategy<Value = CVector> {
    prop::collection::vec(-1.0f64..1.0, 2 * n)
        .prop_filter("nonzero", |v| v.iter().map(|x| x * x).sum::<f64>() > 1e-2)
        .prop_map(move |v| CVector::from_fn(n, |i, _| c(v[2 * i], v[2 * i + 1])))
}

fn pure(names: &'static [&'static str]) -> impl Strategy<Value = PureState> {
    vector(1 << names.len()).prop_map(move |v| PureState::normalized(v, labels(names)).unwrap())
}

fn density(names: &'static [&'static str]) -> impl Strategy<Value = DensityMatrix> {
    let d = 1 << names.len();
    prop::collection::vec(-1.0f64..1.0, 2 * d * d).prop_filter_map("full trace", move |v| {
        let g = CMatrix::from_fn(d, d, |r, k| c(v[2 * (r * d + k)], v[2 * (r * d + k) + 1]));
        DensityMatrix::from_approximate(&(&g * g.adjoint()), labels(names)).ok()
    })
}

fn channels() -> impl Strategy<Value = Channel> {
    prop_oneof![
        (0.0f64..=0.5).prop_map(|e| leaky_cnot(e, "q1", "q2").unwrap()),
        (0.0f64..=1.0).prop_map(|v| dephase_pair(v, ["q1", "q2"]).unwrap()),
        (0.0f64..=0.5).prop_map(|g| phase_flip(g, "q2").unwrap()),
    ]
}

fn noise() -> impl Strategy<Value = NoiseConfig> {
    (0.0f64..=1.0, 0.0f64..=0.2, 0.0f64..=1.0, 0.0f64..=0.5, 1.0f64..1e3, 0.0f64..=0.3).prop_map(
        |(p, eps, v, a, rate, g)| NoiseConfig {
            werner_p: p,
            extinction_eps: eps,
            visibility_v: v,
            accidental_ratio: a,
            pair_rate_hz: rate,
            gate_dephasing: g,
        },
    )
}

fn is_identity(m: &CMatrix, tol: f64) -> bool {
    (m - identity(m.nrows())).norm() < tol
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn gates_preserve_norm(psi in pure(&["q1", "q4"])) {
        for gate in [Gate::cnot("q1", "q4").unwrap(), Gate::h("q1"), Gate::y("q4")] {
            let out = gate.apply(&psi).unwrap();
            prop_assert!((out.amplitudes().norm() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn channels_preserve_trace_and_positivity(ch in channels(), rho in density(&["q1", "q2"])) {
        let out = ch.apply(&rho).unwrap();
        prop_assert!((trace(out.matrix()).re - 1.0).abs() < 1e-12);
        let (values, _) = hermitian_eigen(out.matrix());
        prop_assert!(values[0] > -1e-12);
    }

    #[test]
    fn channels_are_complete_and_cp(ch in channels()) {
        prop_assert!(ch.completeness_error() < 1e-12);
        prop_assert!(ch.is_completely_positive(1e-10));
    }

    #[test]
    fn partial_trace_undoes_tensor(a in density(&["q1", "q4"]), b in density(&["q2"])) {
        let joint = a.tensor(&b).unwrap();
        let back = joint.partial_trace(a.labels()).unwrap();
        prop_assert!((back.matrix() - a.matrix()).norm() < 1e-12);
        let other = joint.partial_trace(b.labels()).unwrap();
        prop_assert!((other.matrix() - b.matrix()).norm() < 1e-12);
    }

    #[test]
    fn exact_counts_over_a_complete_basis_sum_to_rate_times_window(
        rho in density(&["q1", "q4"]),
        cfg in noise(),
        t in 0.1f64..100.0,
    ) {
        let total: f64 = computational_settings()
            .iter()
            .map(|s| expected_counts(state_probability(&rho, s).unwrap(), &cfg, t))
            .sum();
        let want = cfg.pair_rate_hz * t * (1.0 + cfg.accidental_ratio);
        prop_assert!((total - want).abs() <= 1e-9 * want);
    }

    #[test]
    fn sampled_counts_are_seed_deterministic(expected in 0.0f64..1e5, seed: u64) {
        prop_assert_eq!(sample_counts(expected, seed), sample_counts(expected, seed));
    }

    #[test]
    fn acquisitions_are_seed_deterministic(rho in density(&["q1", "q4"]), seed: u64) {
        let probs: Vec<_> = tomographic_settings()
            .into_iter()
            .map(|s| { let p = state_probability(&rho, &s).unwrap(); (s, p) })
            .collect();
        let cfg = NoiseConfig { pair_rate_hz: 100.0, accidental_ratio: 0.1, ..NoiseConfig::ideal() };
        let mode = AcquisitionMode::Sampled { seed };
        let a = acquire(&probs, &cfg, 10.0, mode, 7);
        let b = acquire(&probs, &cfg, 10.0, mode, 7);
        prop_assert_eq!(a.records, b.records);
    }

    #[test]
    fn mle_output_is_a_density_matrix(counts in prop::collection::vec(0u32..5000, 36)) {
        prop_assume!(counts.iter().any(|&n| n > 0));
        let obs: Vec<Observation> = tomographic_settings()
            .into_iter()
            .zip(&counts)
            .map(|(s, &n)| Observation::new(s, f64::from(n), 0.0))
            .collect();
        let r = qst_reconstruct(&obs).unwrap();
        let (values, _) = hermitian_eigen(r.state.matrix());
        prop_assert!(values[0] >= -1e-12);
        prop_assert!((trace(r.state.matrix()).re - 1.0).abs() < 1e-10);
        prop_assert!((r.state.matrix() - r.state.matrix().adjoint()).norm() < 1e-12);
    }

    #[test]
    fn average_gate_fidelity_is_affine(f in 0.0f64..=1.0, d in 2usize..64) {
        let got = average_gate_fidelity(f, d).unwrap().value;
        let d = d as f64;
        prop_assert!((got * (d + 1.0) - (d * f + 1.0)).abs() < 1e-12);
    }

    #[test]
    fn branch_vectors_are_linear_in_the_input(
        a in vector(4),
        b in vector(4),
        alpha in (-1.0f64..1.0, -1.0f64..1.0),
    ) {
        let alpha = c(alpha.0, alpha.1);
        let protocol = Protocol::default();
        let na = a.norm();
        let nb = b.norm();
        let mix = a.scale(1.0 / na) * alpha + b.scale(1.0 / nb);
        prop_assume!(mix.norm() > 1e-3);
        let run = |v: &CVector| {
            protocol
                .run_pure(&PureState::normalized(v.clone(), labels(&DATA_QUBITS)).unwrap())
                .unwrap()
        };
        let (ra, rb, rm) = (run(&a), run(&b), run(&mix));
        for k in 0..4 {
            let combined = (&ra[k] * alpha + &rb[k]).scale(1.0 / mix.norm());
            prop_assert!((&rm[k] - combined).norm() < 1e-12);
        }
    }

    #[test]
    fn werner_fidelity_is_monotone(p in 0.0f64..=1.0, q in 0.0f64..=1.0) {
        let phi = bell_state(BellName::PhiPlus, BellConvention::Standard);
        let (lo, hi) = if p <= q { (p, q) } else { (q, p) };
        let f = |x: f64| werner(x).unwrap().expectation(phi.to_density().matrix());
        prop_assert!(f(lo) <= f(hi) + 1e-12);
        prop_assert!((f(p) - (1.0 + 3.0 * p) / 4.0).abs() < 1e-12);
    }

    #[test]
    fn predicted_fidelities_do_not_increase_with_more_white_noise(
        cfg in noise(),
        dp in 0.0f64..=1.0,
    ) {
        let worse = NoiseConfig { werner_p: cfg.werner_p * dp, ..cfg };
        let a = predict(&cfg).unwrap();
        let b = predict(&worse).unwrap();
        for (x, y) in [
            (a.truth_table, b.truth_table),
            (a.state, b.state),
            (a.bell, b.bell),
            (a.process, b.process),
        ] {
            prop_assert!(y <= x + 1e-12, "{y} > {x}");
        }
    }
}

#[test]
fn paulis_and_cnot_square_to_identity() {
    for p in [Pauli::I, Pauli::X, Pauli::Y, Pauli::Z] {
        let m = p.matrix();
        assert!(is_identity(&(&m * &m), 1e-15));
    }
    let cnot = Gate::cnot("q1", "q4").unwrap();
    assert!(is_identity(&(cnot.matrix() * cnot.matrix()), 1e-15));
}

#[test]
fn corrections_are_involutions() {
    for o in Outcome::ALL {
        let m = correction_for(o).matrix();
        assert!(is_identity(&(&m * &m), 1e-15), "{}", correction_for(o).label());
        assert!(is_identity(&(&m * m.adjoint()), 1e-15));
    }
}
