use std::collections::BTreeMap;
use std::f64::consts::{FRAC_PI_2, FRAC_PI_4, PI};

use rand::Rng;

use super::*;
use crate::error::Error;
use crate::quantum::linalg::{self, c, CMatrix};
use crate::quantum::{singlet, DensityOperator, Evolve, HilbertSpace, Observable, PureState, UnitaryEvolution};
use crate::rng::SeedStreams;

fn random_hermitian<R: Rng>(d: usize, rng: &mut R) -> CMatrix {
    let a = CMatrix::from_fn(d, d, |_, _| c(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5));
    &a + a.adjoint()
}

fn random_unitary<R: Rng>(space: HilbertSpace, rng: &mut R) -> UnitaryEvolution {
    let h = random_hermitian(space.total_dim(), rng);
    UnitaryEvolution::from_hamiltonian(space, &h, 1.3).unwrap()
}

fn random_density<R: Rng>(space: HilbertSpace, rng: &mut R) -> DensityOperator {
    let d = space.total_dim();
    let a = CMatrix::from_fn(d, d, |_, _| c(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5));
    let m = &a * a.adjoint();
    let t = linalg::trace(&m);
    DensityOperator::new(space, m / t).unwrap()
}

/// `⟨ψ|Π_a ⊗ Π_b|ψ⟩` on the singlet.
fn direct_bell(theta_a: f64, theta_b: f64, a: usize, b: usize) -> f64 {
    let psi = singlet("a", "b").unwrap();
    let pa = Observable::spin("a", theta_a).unwrap().projector(a);
    let pb = Observable::spin("b", theta_b).unwrap().projector(b);
    let op = linalg::kron(&pa, &pb);
    (psi.amplitudes().adjoint() * op * psi.amplitudes())[(0, 0)].re
}

#[test]
fn bell_born_matches_direct_oracle_on_all_cells() {
    let m = BellModel::new(false).unwrap();
    for ta in [0.0, FRAC_PI_2] {
        for tb in [FRAC_PI_4, 3.0 * FRAC_PI_4] {
            let p = m.probabilities(ta, tb).unwrap();
            let mut total = 0.0;
            for a in 0..2 {
                for b in 0..2 {
                    assert!((p[a][b] - direct_bell(ta, tb, a, b)).abs() < 1e-8);
                    total += p[a][b];
                }
            }
            assert!((total - 1.0).abs() < 1e-8);
        }
    }
}

#[test]
fn singlet_correlations() {
    let m = BellModel::new(false).unwrap();
    let p = m.probabilities(0.3, 0.3).unwrap();
    assert!(p[0][0].abs() < 1e-12 && p[1][1].abs() < 1e-12);
    for theta in [0.0, 0.4, 1.1, PI] {
        assert!((m.correlation(0.0, theta).unwrap() + theta.cos()).abs() < 1e-8);
    }
    let s = m.chsh([0.0, FRAC_PI_2], [FRAC_PI_4, 3.0 * FRAC_PI_4]).unwrap();
    assert!((s.abs() - 2.0 * 2f64.sqrt()).abs() < 1e-8);
}

#[test]
fn bell_process_obeys_qmc_in_any_order() {
    let m = BellModel::new(false).unwrap();
    assert!(check_qmc(&m.process).unwrap().is_ok());
    let reordered = m.process.with_product_order(&[BOB, SOURCE, ALICE]).unwrap();
    let ia = BellModel::spin_instrument(&m.alice, 0.2).unwrap();
    let ib = BellModel::spin_instrument(&m.bob, 1.0).unwrap();
    let src = &m.source.elements[0];
    for ea in &ia.elements {
        for eb in &ib.elements {
            let p1 = qcm_born(&m.process, &[src, ea, eb]).unwrap();
            let p2 = qcm_born(&reordered, &[src, ea, eb]).unwrap();
            assert!((p1 - p2).abs() < 1e-8);
        }
    }
}

#[test]
fn non_commuting_factors_are_named() {
    let n1 = QcmNode::new("P", &[2], &[]).unwrap();
    let n2 = QcmNode::new("Q", &[2], &[]).unwrap();
    let space = n1.input.clone();
    let plus = PureState::normalized(space.clone(), nalgebra::dvector![c(1.0, 0.0), c(1.0, 0.0)]).unwrap();
    let zero = PureState::basis(space, &[0]).unwrap();
    let factors = BTreeMap::from([
        ("P".to_string(), ChoiMatrix::from_state(&zero.to_density())),
        ("Q".to_string(), ChoiMatrix::from_state(&plus.to_density())),
    ]);
    let p = ProcessOperator::assemble(vec![n1, n2], BTreeMap::new(), factors).unwrap();
    let r = check_qmc(&p).unwrap();
    assert!(!r.is_ok());
    assert_eq!(r.non_commuting, vec![("P".to_string(), "Q".to_string())]);
}

#[test]
fn single_node_is_vacuously_markov() {
    let n = QcmNode::new("S", &[2], &[]).unwrap();
    let rho = DensityOperator::maximally_mixed(n.input.clone());
    let p = ProcessOperator::new(vec![n], BTreeMap::new(), BTreeMap::from([("S".into(), ChoiMatrix::from_state(&rho))]))
        .unwrap();
    let r = check_qmc(&p).unwrap();
    assert!(r.is_ok() && r.commutators.is_empty());
}

#[test]
fn missing_intervention_is_reported() {
    let m = BellModel::new(false).unwrap();
    let ia = BellModel::spin_instrument(&m.alice, 0.0).unwrap();
    let err = qcm_born(&m.process, &[&m.source.elements[0], &ia.elements[0]]).unwrap_err();
    assert!(matches!(err, Error::IncompleteInterventionSet(n) if n == BOB));
}

#[test]
fn product_source_factorizes() {
    let source = QcmNode::new("L", &[2, 2], &[2, 2]).unwrap();
    let alice = QcmNode::new("A", &[2], &[]).unwrap();
    let bob = QcmNode::new("B", &[2], &[]).unwrap();
    let mut rng = SeedStreams::new(3).stream(0, 0);
    let ra = random_density(HilbertSpace::qubits(&["L.in0"]).unwrap(), &mut rng);
    let rb = random_density(HilbertSpace::qubits(&["L.in1"]).unwrap(), &mut rng);
    use crate::quantum::Tensor;
    let rho = ra.tensor(&rb).unwrap();
    let factors = BTreeMap::from([
        ("L".to_string(), ChoiMatrix::from_state(&rho)),
        ("A".to_string(), ChoiMatrix::marginal_channel(&source.output, &["L.out0"], &alice.input).unwrap()),
        ("B".to_string(), ChoiMatrix::marginal_channel(&source.output, &["L.out1"], &bob.input).unwrap()),
    ]);
    let parents = BTreeMap::from([("A".to_string(), vec!["L".to_string()]), ("B".to_string(), vec!["L".to_string()])]);
    let p = ProcessOperator::new(vec![source.clone(), alice.clone(), bob.clone()], parents, factors).unwrap();
    let src = Instrument::identity(&source).unwrap();
    let ia = BellModel::spin_instrument(&alice, 0.7).unwrap();
    let ib = BellModel::spin_instrument(&bob, 2.1).unwrap();
    let s = &src.elements[0];
    let joint = |a: usize, b: usize| qcm_born(&p, &[s, &ia.elements[a], &ib.elements[b]]).unwrap();
    for a in 0..2 {
        for b in 0..2 {
            let pa = joint(a, 0) + joint(a, 1);
            let pb = joint(0, b) + joint(1, b);
            assert!((joint(a, b) - pa * pb).abs() < 1e-9);
        }
    }
}

#[test]
fn classical_limit_rejects_singlet_and_recovers_decohered_model() {
    let quantum = BellModel::new(false).unwrap();
    match classical_limit(&quantum.process) {
        Err(Error::NotDiagonal { node, max_off_diagonal }) => {
            assert_eq!(node, SOURCE);
            assert!((max_off_diagonal - 0.5).abs() < 1e-12);
        }
        other => panic!("expected NotDiagonal, got {other:?}"),
    }
    let m = BellModel::new(true).unwrap();
    let model = classical_limit(&m.process).unwrap();
    for ta in [0.0, FRAC_PI_2] {
        for tb in [FRAC_PI_4, 3.0 * FRAC_PI_4] {
            let ia = BellModel::spin_instrument(&m.alice, ta).unwrap();
            let ib = BellModel::spin_instrument(&m.bob, tb).unwrap();
            for ea in &ia.elements {
                for eb in &ib.elements {
                    let set = [&m.source.elements[0], ea, eb];
                    let q = qcm_born(&m.process, &set).unwrap();
                    let cl = model.probability(&set).unwrap();
                    assert!((q - cl).abs() < 1e-8);
                }
            }
        }
    }
    let s = m.chsh([0.0, FRAC_PI_2], [FRAC_PI_4, 3.0 * FRAC_PI_4]).unwrap();
    assert!((s.abs() - 2f64.sqrt()).abs() < 1e-8);
}

#[test]
fn deterministic_circuit_gives_zero_one_tables() {
    // root prepares |1⟩, next node copies it
    let a = QcmNode::new("X", &[2], &[2]).unwrap();
    let b = QcmNode::new("Y", &[2], &[]).unwrap();
    let one = PureState::basis(a.input.clone(), &[1]).unwrap().to_density();
    let copy = ChoiMatrix::identity_channel(&a.output, &b.input).unwrap().dephased();
    let p = ProcessOperator::new(
        vec![a, b],
        BTreeMap::from([("Y".to_string(), vec!["X".to_string()])]),
        BTreeMap::from([("X".to_string(), ChoiMatrix::from_state(&one)), ("Y".to_string(), copy)]),
    )
    .unwrap();
    let model = classical_limit(&p).unwrap();
    for t in &model.tables {
        assert!(t.probabilities.iter().all(|&x| x == 0.0 || x == 1.0));
    }
    assert!(model.tables[1].to_csv().starts_with("parent,child,p\n0,0,1\n"));
}

#[test]
fn unitary_choi_reproduces_conjugation() {
    let mut rng = SeedStreams::new(9).stream(0, 0);
    let space = HilbertSpace::qubits(&["x", "y"]).unwrap();
    let u = random_unitary(space.clone(), &mut rng);
    let choi = ChoiMatrix::of_unitary(&u, &["x", "y"], &["z", "k"]).unwrap();
    assert!(choi.is_trace_preserving());
    assert_eq!(choi.rank(1e-9), 1);
    let rho = random_density(space.clone(), &mut rng);
    let direct = rho.evolve(&u).unwrap();
    let via = choi.apply(&rho).unwrap();
    assert!(linalg::max_abs(&(via.matrix() - direct.matrix())) < 1e-9);
}

#[test]
fn influence_through_unitaries() {
    let space = HilbertSpace::qubits(&["x", "y"]).unwrap();
    let mut rng = SeedStreams::new(11).stream(0, 0);
    let ux = random_unitary(HilbertSpace::qubits(&["x"]).unwrap(), &mut rng);
    let uy = random_unitary(HilbertSpace::qubits(&["y"]).unwrap(), &mut rng);
    let product = UnitaryEvolution::new(space.clone(), linalg::kron(ux.matrix(), uy.matrix())).unwrap();
    let c1 = ChoiMatrix::of_unitary(&product, &["x", "y"], &["z", "k"]).unwrap();
    assert!(no_influence(&c1, &["x"], &["k"]).unwrap());
    let swap = CMatrix::from_fn(4, 4, |i, j| if (i == 0 && j == 0) || (i == 3 && j == 3) || (i == 1 && j == 2) || (i == 2 && j == 1) { c(1.0, 0.0) } else { c(0.0, 0.0) });
    let swap = UnitaryEvolution::new(space.clone(), swap).unwrap();
    let c2 = ChoiMatrix::of_unitary(&swap, &["x", "y"], &["z", "k"]).unwrap();
    assert!(!no_influence(&c2, &["x"], &["k"]).unwrap());
}

/// Output-marginal variation over a basis of inputs on `x`, for fixed `y`.
fn marginal_variation(u: &UnitaryEvolution, rng: &mut impl Rng) -> f64 {
    use crate::quantum::Tensor;
    let x = HilbertSpace::qubits(&["x"]).unwrap();
    let inputs: Vec<DensityOperator> = [
        nalgebra::dvector![c(1.0, 0.0), c(0.0, 0.0)],
        nalgebra::dvector![c(0.0, 0.0), c(1.0, 0.0)],
        nalgebra::dvector![c(1.0, 0.0), c(1.0, 0.0)],
        nalgebra::dvector![c(1.0, 0.0), c(0.0, 1.0)],
    ]
    .into_iter()
    .map(|v| PureState::normalized(x.clone(), v).unwrap().to_density())
    .collect();
    let mut worst: f64 = 0.0;
    for _ in 0..3 {
        let ry = random_density(HilbertSpace::qubits(&["y"]).unwrap(), rng);
        let outs: Vec<CMatrix> = inputs
            .iter()
            .map(|rx| rx.tensor(&ry).unwrap().evolve(u).unwrap().partial_trace(&["y"]).unwrap().matrix().clone())
            .collect();
        for o in &outs[1..] {
            worst = worst.max(linalg::max_abs(&(o - &outs[0])));
        }
    }
    worst
}

#[test]
fn no_influence_agrees_with_marginal_oracle() {
    let space = HilbertSpace::qubits(&["x", "y"]).unwrap();
    let mut rng = SeedStreams::new(13).stream(0, 0);
    for trial in 0..6 {
        let u = if trial % 2 == 0 {
            random_unitary(space.clone(), &mut rng)
        } else {
            let ux = random_unitary(HilbertSpace::qubits(&["x"]).unwrap(), &mut rng);
            let uy = random_unitary(HilbertSpace::qubits(&["y"]).unwrap(), &mut rng);
            UnitaryEvolution::new(space.clone(), linalg::kron(ux.matrix(), uy.matrix())).unwrap()
        };
        let choi = ChoiMatrix::of_unitary(&u, &["x", "y"], &["z", "k"]).unwrap();
        let oracle = marginal_variation(&u, &mut rng) < 1e-8;
        assert_eq!(no_influence(&choi, &["x"], &["k"]).unwrap(), oracle, "trial {trial}");
    }
}

#[test]
fn process_json_round_trip() {
    let m = BellModel::new(false).unwrap();
    let s = serde_json::to_string(&m.process).unwrap();
    let back: ProcessOperator = serde_json::from_str(&s).unwrap();
    assert_eq!(back, m.process);
    assert_eq!(back.tag(SOURCE), Some("UDC"));
}
