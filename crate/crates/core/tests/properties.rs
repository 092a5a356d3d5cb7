use std::collections::BTreeSet;

use endqt_core::chains::{ChainGraph, ChainNode, Membership, RoleClass, StabilityParams};
use endqt_core::differentiation::{
    degree_of_differentiation, run_differentiation, Carrier, DifferentiationConfig, PointerCoupling, QuantumProperty,
};
use endqt_core::qcm::BellModel;
use endqt_core::quantum::linalg::{c, CMatrix, CVector};
use endqt_core::quantum::{
    born_probabilities, DensityOperator, Evolve, HilbertSpace, Observable, PureState, Subsystem, UnitaryEvolution,
};
use endqt_core::rng::SeedStreams;
use endqt_core::scenarios::direct_probabilities;
use proptest::prelude::*;

fn amplitudes(n: usize) -> impl Strategy<Value = Vec<(f64, f64)>> {
    prop::collection::vec((-1.0..1.0f64, -1.0..1.0f64), n)
        .prop_filter("non-zero", |v| v.iter().map(|(a, b)| a * a + b * b).sum::<f64>() > 1e-3)
}

fn pure(labels: &[(&str, usize)], amps: &[(f64, f64)]) -> PureState {
    let space = HilbertSpace::new(labels.iter().map(|(l, d)| Subsystem::new(*l, *d)).collect()).unwrap();
    let v = CVector::from_iterator(amps.len(), amps.iter().map(|(a, b)| c(*a, *b)));
    PureState::normalized(space, v).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn partial_trace_keeps_unit_trace_and_entropy_bounds(amps in amplitudes(12)) {
        let psi = pure(&[("a", 2), ("b", 3), ("c", 2)], &amps);
        for keep in [vec!["a"], vec!["b"], vec!["c", "a"], vec!["b", "c"]] {
            let r = psi.reduced(&keep).unwrap();
            let tr: f64 = (0..r.matrix().nrows()).map(|i| r.matrix()[(i, i)].re).sum();
            prop_assert!((tr - 1.0).abs() < 1e-9);
            let s = r.entropy();
            prop_assert!(s >= 0.0 && s <= (r.space().total_dim() as f64).ln() + 1e-12);
        }
        // complementary reductions of a pure state share their entropy
        let sa = psi.reduced(&["a"]).unwrap().entropy();
        let sbc = psi.reduced(&["b", "c"]).unwrap().entropy();
        prop_assert!((sa - sbc).abs() < 1e-8);
    }

    #[test]
    fn evolution_preserves_norm_and_born_sums(amps in amplitudes(4), t in 0.0..5.0f64, theta in 0.0..6.3f64) {
        let psi = pure(&[("a", 2), ("b", 2)], &amps);
        let h = CMatrix::from_fn(4, 4, |i, j| c(((i + 2 * j) % 3) as f64 + if i == j { 1.0 } else { 0.0 }, 0.0));
        let h = (&h + h.adjoint()) * c(0.5, 0.0);
        let u = UnitaryEvolution::from_hamiltonian(psi.space().clone(), &h, t).unwrap();
        let out = psi.evolve(&u).unwrap();
        prop_assert!((out.amplitudes().norm() - 1.0).abs() < 1e-9);
        let p = born_probabilities(&out.to_density(), &Observable::spin("a", theta).unwrap()).unwrap();
        prop_assert!((p.iter().map(|x| x.1).sum::<f64>() - 1.0).abs() < 1e-9);
    }

    #[test]
    fn qcm_matches_direct_oracle_at_any_angles(a in 0.0..6.3f64, b in 0.0..6.3f64) {
        let model = BellModel::new(false).unwrap();
        let q = model.probabilities(a, b).unwrap();
        let d = direct_probabilities(a, b).unwrap();
        for i in 0..2 {
            for j in 0..2 {
                prop_assert!((q[i][j] - d[i][j]).abs() < 1e-8);
            }
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    /// Overlap moduli never grow along a bath run up to the orthogonalization
    /// time, and D* never falls.
    #[test]
    fn degree_is_monotone_while_overlaps_decay(
        dim in 2usize..=3,
        amps in amplitudes(3),
        qubits in 1usize..=4,
        seed in any::<u64>(),
    ) {
        let amps = &amps[..dim];
        let sys = pure(&[("s", dim)], amps);
        let pointer = Observable::number("s", dim).unwrap();
        let mut rng = SeedStreams::new(seed).stream(5, 0);
        let coupling = PointerCoupling::random_bath(pointer.clone(), "e", qubits, (0.5, 1.5), &mut rng).unwrap();
        let duration = coupling.orthogonalization_time().unwrap();
        let prop = QuantumProperty::new(Carrier::Pure(sys), pointer).unwrap();
        let run = run_differentiation(&prop, &coupling, true, duration, 24, &DifferentiationConfig::default(), &mut rng).unwrap();
        let degrees = run.degrees();
        prop_assert!(degrees[0].abs() < 1e-12, "pure input gives D* = {}", degrees[0]);
        for k in 1..run.overlaps.len() {
            let before = run.overlaps[k - 1].off_diagonal_moduli();
            let after = run.overlaps[k].off_diagonal_moduli();
            let decaying = before.iter().zip(&after).all(|(x, y)| y.1 <= x.1 + 1e-9);
            prop_assert!(decaying);
            prop_assert!(degrees[k] >= degrees[k - 1] - 1e-9, "D* fell at step {k}: {:?}", degrees);
        }
    }
}

#[test]
fn degree_extremes() {
    let h = std::f64::consts::FRAC_1_SQRT_2;
    let plus = pure(&[("s", 2)], &[(h, 0.0), (h, 0.0)]);
    let z = Observable::spin("s", 0.0).unwrap();
    assert_eq!(degree_of_differentiation(&plus.to_density(), &z).unwrap(), 0.0);
    let mixed = DensityOperator::diagonal(plus.space().clone(), &[0.5, 0.5]).unwrap();
    assert!((degree_of_differentiation(&mixed, &z).unwrap() - 1.0).abs() < 1e-6);
}

#[derive(Debug, Clone)]
enum Op {
    Record(usize, usize),
    Isolate(Vec<usize>),
    Reopen(Vec<usize>),
}

const SYSTEMS: [&str; 7] = ["P", "Q", "N1", "N2", "N3", "N4", "N5"];

fn op() -> impl Strategy<Value = (Op, f64)> {
    let record = (0..SYSTEMS.len(), 0..SYSTEMS.len()).prop_map(|(a, b)| Op::Record(a, b));
    let boundary = prop::collection::vec(2..SYSTEMS.len(), 1..3);
    prop_oneof![
        6 => record,
        1 => boundary.clone().prop_map(Op::Isolate),
        1 => boundary.prop_map(Op::Reopen),
    ]
    .prop_flat_map(|o| (Just(o), prop_oneof![Just(0.0), 0.05..0.6f64]))
}

fn graph(stability: StabilityParams) -> ChainGraph {
    let mut g = ChainGraph::new(stability).unwrap();
    g.declare_initiators("P", "Q").unwrap();
    for s in &SYSTEMS[2..] {
        g.add_node(ChainNode::new(*s, RoleClass::NonInitiator)).unwrap();
    }
    g
}

fn check_invariants(g: &ChainGraph) -> Result<(), TestCaseError> {
    let t = g.clock();
    prop_assert!(g.validate_at(t).is_ok(), "{:?}", g.validate_at(t));
    prop_assert!(g.edges().all(|e| e.to != "P"));
    let members = g.memberships(t);
    prop_assert!(members["P"].is_sdc());
    for (s, m) in &members {
        if let Membership::Sdc { chain } = m {
            prop_assert_eq!(chain.as_str(), "P", "{} joined an unknown chain", s);
        }
    }
    Ok(())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    /// 48 sequences of 24–40 operations: every accepted mutation keeps the
    /// graph acyclic, prime-rooted and free of edges into the prime; every
    /// rejected one leaves it untouched.
    #[test]
    fn random_mutations_keep_chain_invariants(
        ops in prop::collection::vec(op(), 24..40),
        window in 0.3..1.5f64,
        min_ticks in 1usize..3,
    ) {
        let mut g = graph(StabilityParams::new(window, min_ticks).unwrap());
        let mut t = 0.0;
        for (op, dt) in ops {
            t += dt;
            let before = g.clone();
            let result = match &op {
                Op::Record(a, b) => g.record_value_determination(SYSTEMS[*a], SYSTEMS[*b], t).map(|_| ()),
                Op::Isolate(bs) => {
                    let boundary: Vec<&str> = bs.iter().map(|&i| SYSTEMS[i]).collect::<BTreeSet<_>>().into_iter().collect();
                    let inside_before: Vec<bool> = boundary.iter().map(|s| g.membership(s, t).unwrap().is_sdc()).collect();
                    let out = g.isolate(&boundary, t).unwrap();
                    if let Some(lapse) = out.lapse_time {
                        prop_assert!((lapse - (t + window)).abs() < 1e-12);
                        let now: Vec<bool> = boundary.iter().map(|s| g.membership(s, t).unwrap().is_sdc()).collect();
                        prop_assert_eq!(&now, &inside_before);
                        for s in &boundary {
                            prop_assert!(!g.membership(s, lapse).unwrap().is_sdc(), "{} still a member at lapse", s);
                        }
                    }
                    Ok(())
                }
                Op::Reopen(bs) => {
                    let boundary: Vec<&str> = bs.iter().map(|&i| SYSTEMS[i]).collect::<BTreeSet<_>>().into_iter().collect();
                    g.reopen(&boundary, t).map(|_| ())
                }
            };
            if result.is_err() {
                prop_assert_eq!(&g, &before);
            }
            check_invariants(&g)?;
        }
    }

    /// A denied gate licenses no state update.
    #[test]
    fn denied_gate_licenses_no_update(
        ops in prop::collection::vec(op(), 4..20),
        env in 0..SYSTEMS.len(),
        seed in any::<u64>(),
    ) {
        let mut g = graph(StabilityParams::default());
        let mut t = 0.0;
        for (op, dt) in ops {
            t += dt;
            if let Op::Record(a, b) = op {
                let _ = g.record_value_determination(SYSTEMS[a], SYSTEMS[b], t);
            }
        }
        let gate = g.determinacy_gate("N1", SYSTEMS[env], t).unwrap();
        let h = std::f64::consts::FRAC_1_SQRT_2;
        let prop = QuantumProperty::new(Carrier::Pure(pure(&[("s", 2)], &[(h, 0.0), (h, 0.0)])), Observable::spin("s", 0.0).unwrap()).unwrap();
        let coupling = PointerCoupling::bath(Observable::spin("s", 0.0).unwrap(), "e", vec![1.0, 0.8]).unwrap();
        let duration = coupling.orthogonalization_time().unwrap();
        let mut rng = SeedStreams::new(seed).stream(0, 0);
        let run = run_differentiation(&prop, &coupling, gate.is_permit(), duration, 8, &DifferentiationConfig::default(), &mut rng).unwrap();
        if !gate.is_permit() {
            prop_assert!(run.state_update.is_none());
            prop_assert!(run.points.iter().all(|p| !p.value.is_determinate()));
        } else {
            prop_assert!(run.state_update.is_some());
        }
    }
}
