use std::f64::consts::{PI, SQRT_2, TAU};
use std::sync::Arc;

use crowgate::effective::{calibrated_gate_condition_with, exact_two_photon_oracle, paper_evolution, PaperState, PaperVariant};
use crowgate::fock::{
    annihilation_op, creation_op, enumerate_basis, total_excitation_op, total_photon_op, DopantLevelSet, HybridBasis,
    Level, ModeSet, StateVector,
};
use crowgate::gates::{
    cz_device_qubits, cz_target, gate_fidelity, hadamard_coupler, truth_table, Circuit, CircuitElement, CircuitInput,
    CompiledCircuit, DualRailQubit, InteractionModel, SecondCoupler, TruthTable,
};
use crowgate::hamiltonians::{
    cascade_dopant_h, crow_hopping_h, effective_h, loss_term, two_level_dopant_h, DetuningSign, DopantSpec,
    EffectiveParams, ModeGraph, Transition,
};
use crowgate::operator::OperatorMatrix;
use crowgate::propagator::{expectation, Propagator};
use nalgebra::DMatrix;
use num_complex::Complex64 as C64;
use proptest::prelude::*;

fn dopant_sets(kinds: &[bool]) -> Vec<DopantLevelSet> {
    kinds.iter().map(|&c| if c { DopantLevelSet::cascade() } else { DopantLevelSet::two_level() }).collect()
}

fn single_site() -> Arc<HybridBasis> {
    enumerate_basis(ModeSet::new(1, 2).unwrap(), &[DopantLevelSet::cascade()]).unwrap()
}

fn random_state(basis: &Arc<HybridBasis>, seed: &[(f64, f64)], photons: Option<usize>) -> StateVector {
    let amps = basis
        .states()
        .iter()
        .enumerate()
        .map(|(k, s)| {
            let (re, im) = seed[k % seed.len()];
            if photons.is_none_or(|n| s.photons() == n) {
                C64::new(re + 0.01 * k as f64, im)
            } else {
                C64::new(0.0, 0.0)
            }
        })
        .collect();
    StateVector::from_amplitudes(basis, amps).unwrap().normalized()
}

/// Dispersive-regime couplings: |δ| ≥ 10·max(g₁, g₂).
fn regime() -> impl Strategy<Value = (f64, f64, f64)> {
    (1.0..100.0f64, any::<bool>(), 0.0..0.1f64, 0.0..0.1f64)
        .prop_map(|(d, neg, a, b)| (a * d, b * d, if neg { -d } else { d }))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn basis_index_round_trip(modes in 1usize..4, n_max in 0usize..4, kinds in prop::collection::vec(any::<bool>(), 0..3)) {
        let b = enumerate_basis(ModeSet::new(modes, n_max).unwrap(), &dopant_sets(&kinds)).unwrap();
        for (k, s) in b.states().iter().enumerate() {
            prop_assert_eq!(b.index_of(s), Some(k));
        }
    }

    #[test]
    fn canonical_commutator_below_top_layer(modes in 1usize..4, n_max in 1usize..4, kinds in prop::collection::vec(any::<bool>(), 0..2)) {
        let b = enumerate_basis(ModeSet::new(modes, n_max).unwrap(), &dopant_sets(&kinds)).unwrap();
        for m in 0..modes {
            let a = annihilation_op(&b, m).unwrap();
            let c = a.commutator(&creation_op(&b, m).unwrap());
            for r in 0..b.dimension() {
                for col in 0..b.dimension() {
                    if b.state(r).photons() < n_max && b.state(col).photons() < n_max {
                        let want = if r == col { 1.0 } else { 0.0 };
                        prop_assert!((c.get(r, col) - want).norm() <= 1e-12);
                    }
                }
            }
        }
    }

    #[test]
    fn builders_are_pure(n in 2usize..6, j in 0.1..2.0f64, w in 0.0..1.0f64, seed in any::<u64>()) {
        let b1 = enumerate_basis(ModeSet::new(n, 2).unwrap(), &[]).unwrap();
        let b2 = enumerate_basis(ModeSet::new(n, 2).unwrap(), &[]).unwrap();
        let g = ModeGraph::chain(n, 1.0, j).with_onsite_disorder(w, seed);
        let h1 = crow_hopping_h(&b1, &g, 1.0).unwrap();
        let h2 = crow_hopping_h(&b2, &ModeGraph::chain(n, 1.0, j).with_onsite_disorder(w, seed), 1.0).unwrap();
        prop_assert!(h1 == h2);
    }

    #[test]
    fn hopping_is_hermitian_and_conserves_photons(n in 2usize..5, j in -2.0..2.0f64, w in 0.0..1.0f64, seed in any::<u64>()) {
        let b = enumerate_basis(ModeSet::new(n, 3).unwrap(), &[]).unwrap();
        let h = crow_hopping_h(&b, &ModeGraph::chain(n, 0.5, j).with_onsite_disorder(w, seed), 0.0).unwrap();
        prop_assert!(h.hermiticity_error() <= 1e-12);
        prop_assert!(h.commutator(&total_photon_op(&b)).max_abs() <= 1e-12);
    }

    #[test]
    fn cascade_conserves_excitations(
        (g1, g2, delta) in regime(),
        omega in -1.0..1.0f64,
        count in 1u32..5,
        above in any::<bool>(),
    ) {
        let b = enumerate_basis(ModeSet::new(2, 3).unwrap(), &[DopantLevelSet::cascade()]).unwrap();
        let sign = if above { DetuningSign::IntermediateAbove } else { DetuningSign::IntermediateBelow };
        let spec = DopantSpec::symmetric_cascade(0, 1, omega, delta, g1, g2, sign).with_count(count);
        let h = cascade_dopant_h(&b, &spec, omega).unwrap();
        prop_assert!(h.hermiticity_error() <= 1e-12);
        prop_assert!(h.commutator(&total_excitation_op(&b)).max_abs() <= 1e-12);
    }

    #[test]
    fn two_level_and_loss_symmetry(coupling in 0.0..1.0f64, detuning in -5.0..5.0f64, rates in prop::collection::vec(0.0..1.0f64, 2)) {
        let b = enumerate_basis(ModeSet::new(2, 2).unwrap(), &[DopantLevelSet::two_level()]).unwrap();
        let spec = DopantSpec { dopant: 0, attached_mode: 0, count: 1, transition: Transition::TwoLevel { omega_ge: detuning, coupling } };
        prop_assert!(two_level_dopant_h(&b, &spec, 0.0).unwrap().hermiticity_error() <= 1e-12);
        prop_assert!(loss_term(&b, &rates).unwrap().anti_hermiticity_error() <= 1e-12);
    }

    #[test]
    fn effective_h_is_block_diagonal((g1, g2, delta) in regime()) {
        let b = enumerate_basis(ModeSet::new(1, 4).unwrap(), &[DopantLevelSet::cascade()]).unwrap();
        let h = effective_h(&b, &EffectiveParams::new(g1, g2, delta).unwrap()).unwrap();
        prop_assert!(h.hermiticity_error() <= 1e-12);
        for (r, c, v) in h.entries() {
            if r == c || v.norm() == 0.0 {
                continue;
            }
            let (sr, sc) = (b.state(r), b.state(c));
            let pair = |x: &crowgate::fock::BasisState, y: &crowgate::fock::BasisState| {
                x.levels[0] == Level::G && y.levels[0] == Level::E && x.occupation[0] == y.occupation[0] + 2
            };
            prop_assert!(pair(sr, sc) || pair(sc, sr), "coupling between {} and {}", sr, sc);
        }
    }

    #[test]
    fn paper_evolution_conserves_probability((g1, g2, delta) in regime(), t in 0.0..1e4f64, unitary in any::<bool>()) {
        let p = EffectiveParams::new(g1, g2, delta).unwrap();
        let variant = if unitary { PaperVariant::Unitary } else { PaperVariant::AsPrinted };
        for s in [PaperState::G00, PaperState::G01, PaperState::G10, PaperState::G20, PaperState::G02] {
            prop_assert!((paper_evolution(s, &p, t, variant).unwrap().norm_sqr() - 1.0).abs() <= 1e-12);
        }
    }

    #[test]
    fn oracle_is_unitary_and_matches_propagation((g1, g2, delta) in regime(), turns in 0.0..20.0f64) {
        let p = EffectiveParams::new(g1, g2, delta).unwrap();
        let t = turns * PI / p.kappa().max(1e-3);
        let u = exact_two_photon_oracle(g1, g2, delta, t).unwrap();
        prop_assert!((u.adjoint() * u - nalgebra::Matrix2::identity()).iter().all(|z| z.norm() <= 1e-12));
        let b = single_site();
        let psi = Propagator::default()
            .evolve(&effective_h(&b, &p).unwrap(), &StateVector::from_labels(&b, &[2], &[Level::G]).unwrap(), t)
            .unwrap();
        prop_assert!((psi.amplitude(&[2], &[Level::G]) - u[(0, 0)]).norm() <= 1e-10);
        prop_assert!((psi.amplitude(&[0], &[Level::E]) - u[(1, 0)]).norm() <= 1e-10);
    }

    #[test]
    fn closed_form_magnitudes_exact_at_equal_diagonals(g1 in 0.001..0.07f64, delta in 1.0..10.0f64, t in 0.0..1e4f64) {
        let (g1, g2) = (g1 * delta, SQRT_2 * g1 * delta);
        let p = EffectiveParams::new(g1, g2, delta).unwrap();
        let u = exact_two_photon_oracle(g1, g2, delta, t).unwrap();
        let c = paper_evolution(PaperState::G20, &p, t, PaperVariant::AsPrinted).unwrap();
        prop_assert!((c.amplitude(PaperState::G20).norm() - u[(0, 0)].norm()).abs() <= 1e-10);
        prop_assert!((c.amplitude(PaperState::E00).norm() - u[(1, 0)].norm()).abs() <= 1e-10);
    }

    #[test]
    fn single_photon_phase_is_dispersive((g1, g2, delta) in regime(), t in 0.0..100.0f64) {
        let p = EffectiveParams::new(g1, g2, delta).unwrap();
        let b = single_site();
        let h = effective_h(&b, &p).unwrap();
        let one = StateVector::from_labels(&b, &[1], &[Level::G]).unwrap();
        let h_one = h.apply(&one).unwrap();
        for (k, a) in h_one.amplitudes().iter().enumerate() {
            let want = p.phase_rate() * one.amplitudes()[k];
            prop_assert!((a - want).norm() <= 1e-12);
        }
        let psi = Propagator::dense().evolve(&h, &one, t).unwrap();
        prop_assert!((psi.amplitude(&[1], &[Level::G]) - C64::from_polar(1.0, -p.phase_rate() * t)).norm() <= 1e-12);
    }

    #[test]
    fn propagation_is_unitary_and_conserves(decade in -3i32..3, j in 0.1..2.0f64, seed in any::<u64>(),
                                             amps in prop::collection::vec((-1.0..1.0f64, -1.0..1.0f64), 4)) {
        let b = enumerate_basis(ModeSet::new(4, 2).unwrap(), &[]).unwrap();
        let h = crow_hopping_h(&b, &ModeGraph::chain(4, 0.3, j).with_onsite_disorder(0.2, seed), 0.0).unwrap();
        let psi0 = random_state(&b, &amps, Some(2));
        let t = 10f64.powi(decade) * 1.7;
        let psi = Propagator::default().evolve(&h, &psi0, t).unwrap();
        prop_assert!((psi.norm_sqr().sqrt() - 1.0).abs() <= 1e-10);
        let n = total_photon_op(&b);
        prop_assert!((expectation(&n, &psi).unwrap().re() - 2.0).abs() <= 1e-10);
        let e0 = expectation(&h, &psi0).unwrap().re();
        prop_assert!((expectation(&h, &psi).unwrap().re() - e0).abs() <= 1e-10);
    }

    #[test]
    fn krylov_agrees_with_dense(t in 0.01..50.0f64, j in 0.1..1.5f64, g in 0.0..1.0f64, m in 8usize..30,
                                amps in prop::collection::vec((-1.0..1.0f64, -1.0..1.0f64), 5)) {
        let b = enumerate_basis(ModeSet::new(3, 3).unwrap(), &[DopantLevelSet::two_level()]).unwrap();
        prop_assert!(b.dimension() <= 64);
        let spec = DopantSpec { dopant: 0, attached_mode: 1, count: 1, transition: Transition::TwoLevel { omega_ge: 0.4, coupling: g } };
        let h = crow_hopping_h(&b, &ModeGraph::chain(3, 0.0, j), 0.0).unwrap() + two_level_dopant_h(&b, &spec, 0.0).unwrap();
        let psi0 = random_state(&b, &amps, None);
        let dense = Propagator::dense().evolve(&h, &psi0, t).unwrap();
        let kry = Propagator::krylov(m).evolve(&h, &psi0, t).unwrap();
        prop_assert!(dense.distance(&kry).unwrap() <= 1e-10);
    }

    #[test]
    fn loss_survival(gamma in 0.0..2.0f64, t in 0.0..10.0f64) {
        let b = enumerate_basis(ModeSet::new(1, 1).unwrap(), &[]).unwrap();
        let one = StateVector::from_labels(&b, &[1], &[]).unwrap();
        let p = Propagator::default().evolve(&loss_term(&b, &[gamma]).unwrap(), &one, t).unwrap().norm_sqr();
        prop_assert!((p / (-gamma * t).exp() - 1.0).abs() <= 1e-8);
    }

    #[test]
    fn random_linear_circuits_are_unitary(
        ops in prop::collection::vec((0usize..3, 0usize..3, 0.0..2.0f64, any::<bool>()), 1..6),
    ) {
        let mut c = Circuit::new(4);
        for (a, kind, x, inv) in ops {
            if kind == 0 {
                c.push(CircuitElement::Phase { mode: a, theta: x * PI }).unwrap();
            } else {
                let el = hadamard_coupler(1.0, x).unwrap().on_modes(a, a + 1);
                c.push(if inv { el.inverted() } else { el }).unwrap();
            }
        }
        let qubits = [DualRailQubit::modes(0, 1).unwrap(), DualRailQubit::modes(2, 3).unwrap()];
        let compiled = CompiledCircuit::new(&c, &qubits).unwrap();
        // photons may move between qubits, so unitarity holds on the full two-photon sector
        for bits in 0..4u8 {
            let run = compiled.run(&CircuitInput::Label(vec![bits >> 1, bits & 1])).unwrap();
            prop_assert!(run.excitation_drift <= 1e-10);
            prop_assert!((run.reports[0].state.norm_sqr() - 1.0).abs() <= 1e-8);
        }
    }

    #[test]
    fn interaction_device_is_unitary((g1, g2, delta) in regime(), turns in 0.0..3.0f64, effective in any::<bool>()) {
        let p = EffectiveParams::new(g1, g2, delta).unwrap();
        let model = if effective { InteractionModel::Effective } else { InteractionModel::Cascade(DetuningSign::IntermediateBelow) };
        let time = turns * PI / p.kappa().max(1e-3);
        let c = Circuit::cz_device(model, p, time, SecondCoupler::Inverse, Some(0.3)).unwrap();
        let compiled = CompiledCircuit::new(&c, &cz_device_qubits()).unwrap();
        for bits in 0..4u8 {
            let run = compiled.run(&CircuitInput::Label(vec![bits >> 1, bits & 1])).unwrap();
            prop_assert!(run.excitation_drift <= 1e-10);
            for r in &run.reports {
                prop_assert!((r.state.norm_sqr() - 1.0).abs() <= 1e-8);
            }
            prop_assert!(run.success_probability() <= 1.0 + 1e-10);
        }
    }

    #[test]
    fn fidelity_global_phase_invariance(phase in 0.0..TAU, theta in 0.0..TAU,
                                        entries in prop::collection::vec((0.0..1.0f64, 0.0..TAU), 16)) {
        let m = DMatrix::from_fn(4, 4, |r, c| {
            let (a, p) = entries[4 * r + c];
            C64::from_polar(a * 0.5, p)
        });
        let base_free = gate_fidelity(&TruthTable::from_matrix(m.clone()), &cz_target(), true).unwrap().fidelity;
        let base = gate_fidelity(&TruthTable::from_matrix(m.clone()), &cz_target(), false).unwrap().fidelity;
        let rotated = TruthTable::from_matrix(m * C64::from_polar(1.0, phase));
        let target = cz_target() * C64::from_polar(1.0, theta);
        prop_assert!((gate_fidelity(&rotated, &target, true).unwrap().fidelity - base_free).abs() <= 1e-12);
        prop_assert!((gate_fidelity(&rotated, &target, false).unwrap().fidelity - base).abs() <= 1e-12);
        prop_assert!(base_free <= 1.0 + 1e-10 && base <= base_free + 1e-12);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn calibrated_device_is_cz(delta in 0.5..50.0f64, scale in 20.0..200.0f64) {
        let cond = calibrated_gate_condition_with(delta / scale, delta).unwrap();
        let c = Circuit::cz_device(InteractionModel::Effective, cond.params(), cond.time, SecondCoupler::Inverse, None).unwrap();
        let r = gate_fidelity(&truth_table(&c, &cz_device_qubits()).unwrap(), &cz_target(), true).unwrap();
        prop_assert!(r.fidelity >= 1.0 - 1e-6, "{}", r.fidelity);
    }
}

#[test]
fn identity_operator_is_neutral() {
    let b = single_site();
    let psi = random_state(&b, &[(0.3, -0.2), (0.1, 0.9)], None);
    let out = OperatorMatrix::identity(&b).apply(&psi).unwrap();
    assert_eq!(out.distance(&psi).unwrap(), 0.0);
}
