use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use qre_core::stabilizer::statevector::{sv_oracle_run, CircuitOp};
use qre_core::stabilizer::{Basis, Gate, Key, Pauli, QuantumManager};
use qre_core::validate::oracle::{check_circuit, random_circuit};

fn gate_op() -> impl Strategy<Value = (u8, usize, usize)> {
    (0u8..6, 0usize..4, 0usize..4)
}

fn build(ops: &[(u8, usize, usize)]) -> Vec<CircuitOp> {
    ops.iter()
        .filter_map(|&(g, a, b)| match g {
            0 => Some(CircuitOp::Gate(Gate::H, vec![a])),
            1 => Some(CircuitOp::Gate(Gate::S, vec![a])),
            2 => Some(CircuitOp::Pauli(a, Pauli::X)),
            3 => Some(CircuitOp::Pauli(a, Pauli::Z)),
            4 if a != b => Some(CircuitOp::Gate(Gate::Cnot, vec![a, b])),
            5 => Some(CircuitOp::Gate(Gate::Y, vec![a])),
            _ => None,
        })
        .collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn unitary_circuits_agree_on_every_pauli(ops in prop::collection::vec(gate_op(), 0..40)) {
        let circuit = build(&ops);
        let mut qm = QuantumManager::new();
        for q in 0..4 {
            qm.allocate(Key(q)).unwrap();
        }
        for op in &circuit {
            match op {
                CircuitOp::Gate(g, t) => {
                    let keys: Vec<Key> = t.iter().map(|&q| Key(q as u32)).collect();
                    qm.apply_gate(*g, &keys).unwrap();
                }
                CircuitOp::Pauli(q, p) => qm.apply_pauli(Key(*q as u32), *p).unwrap(),
                CircuitOp::Measure(..) => unreachable!(),
            }
        }
        qm.validate().unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let sv = sv_oracle_run(4, &circuit, &mut rng).unwrap().state;
        let paulis = [Pauli::I, Pauli::X, Pauli::Y, Pauli::Z];
        for code in 1..256usize {
            let terms: Vec<(Key, Pauli)> = (0..4)
                .map(|q| (Key(q as u32), paulis[code >> (2 * q) & 3]))
                .filter(|t| t.1 != Pauli::I)
                .collect();
            let ps = qre_core::stabilizer::PauliString::from_sparse(4, terms.iter().map(|&(k, p)| (k.0 as usize, p)));
            let exact = sv.expectation(&ps).unwrap();
            prop_assert!((qm.peek(&terms).unwrap() as f64 - exact).abs() < 1e-9);
        }
    }
}

#[test]
fn random_measured_circuits_match_the_oracle() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for _ in 0..25 {
        let c = random_circuit(&mut rng, 6, 40, 6);
        let r = check_circuit(&c, 2000, 2, &mut rng).unwrap();
        assert!(r.passed(), "{r:?}");
    }
}

#[test]
fn bell_pair_outcomes_are_correlated_and_fair() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut ones = 0;
    for _ in 0..2000 {
        let mut qm = QuantumManager::new();
        qm.bell_pair(Key(0), Key(1)).unwrap();
        let a = qm.measure(Key(0), Basis::X, &mut rng).unwrap();
        let b = qm.measure(Key(1), Basis::X, &mut rng).unwrap();
        assert_eq!(a, b);
        assert_eq!(qm.num_groups(), 2);
        ones += a as u32;
    }
    assert!((ones as f64 - 1000.0).abs() < 3.0 * 500f64.sqrt());
}

#[test]
fn groups_merge_and_split() {
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    let mut qm = QuantumManager::new();
    for q in 0..3 {
        qm.allocate(Key(q)).unwrap();
    }
    assert_eq!(qm.num_groups(), 3);
    qm.apply_gate(Gate::H, &[Key(0)]).unwrap();
    qm.apply_gate(Gate::Cnot, &[Key(0), Key(2)]).unwrap();
    assert_eq!(qm.num_groups(), 2);
    assert_eq!(qm.peek(&[(Key(0), Pauli::Z), (Key(2), Pauli::Z)]).unwrap(), 1);
    qm.release(Key(0), &mut rng).unwrap();
    assert!(!qm.contains(Key(0)));
    assert_eq!(qm.num_qubits(), 2);
    assert!(qm.apply_gate(Gate::Cnot, &[Key(1), Key(1)]).is_err());
    assert!(qm.apply_gate(Gate::H, &[Key(9)]).is_err());
    assert!(qm.allocate(Key(1)).is_err());
}
