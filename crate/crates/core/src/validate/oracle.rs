//! Cross-check of the tableau backend against the dense oracle on random
//! Clifford circuits.

use std::collections::HashMap;

use rand::Rng;

use crate::stabilizer::statevector::{sv_oracle_branches, CircuitOp};
use crate::stabilizer::{Basis, Gate, Key, Pauli, PauliString, QuantumManager, StabilizerError};

#[derive(Debug, Clone)]
pub struct RandomCircuit {
    pub n: usize,
    pub ops: Vec<CircuitOp>,
}

/// Uniform random Clifford circuit with mixed Z/X measurements and a few
/// injected Pauli faults. At most `max_measurements` measurements are used so
/// that every branch can be enumerated.
pub fn random_circuit<R: Rng + ?Sized>(
    rng: &mut R,
    max_qubits: usize,
    max_ops: usize,
    max_measurements: usize,
) -> RandomCircuit {
    let n = rng.random_range(1..=max_qubits);
    let len = rng.random_range(1..=max_ops);
    let mut ops = Vec::with_capacity(len);
    let mut measurements = 0;
    for _ in 0..len {
        let q = rng.random_range(0..n);
        let roll: f64 = rng.random();
        let op = if roll < 0.15 && measurements < max_measurements {
            measurements += 1;
            let basis = if rng.random_bool(0.5) { Basis::Z } else { Basis::X };
            CircuitOp::Measure(q, basis)
        } else if roll < 0.2 {
            CircuitOp::Pauli(q, Pauli::NON_IDENTITY[rng.random_range(0..3)])
        } else if n > 1 && roll < 0.55 {
            let mut t = rng.random_range(0..n - 1);
            if t >= q {
                t += 1;
            }
            CircuitOp::Gate(Gate::Cnot, vec![q, t])
        } else {
            let g = [Gate::H, Gate::S, Gate::X, Gate::Y, Gate::Z][rng.random_range(0..5)];
            CircuitOp::Gate(g, vec![q])
        };
        ops.push(op);
    }
    RandomCircuit { n, ops }
}

fn key(q: usize) -> Key {
    Key(q as u32)
}

fn fresh(n: usize) -> QuantumManager {
    let mut m = QuantumManager::new();
    for q in 0..n {
        m.allocate(key(q)).expect("fresh keys");
    }
    m
}

fn apply<R: Rng + ?Sized>(
    m: &mut QuantumManager,
    op: &CircuitOp,
    forced: Option<bool>,
    rng: &mut R,
) -> Result<Option<(bool, bool)>, StabilizerError> {
    match op {
        CircuitOp::Gate(g, t) => {
            let keys: Vec<Key> = t.iter().map(|&q| key(q)).collect();
            m.apply_gate(*g, &keys)?;
            Ok(None)
        }
        CircuitOp::Pauli(q, p) => {
            m.apply_pauli(key(*q), *p)?;
            Ok(None)
        }
        CircuitOp::Measure(q, b) => m.measure_with(key(*q), *b, forced, rng).map(Some),
    }
}

struct TableauBranch {
    outcomes: Vec<bool>,
    random: Vec<bool>,
    state: QuantumManager,
}

fn tableau_branches<R: Rng + ?Sized>(
    c: &RandomCircuit,
    rng: &mut R,
) -> Result<Vec<TableauBranch>, StabilizerError> {
    let mut done = Vec::new();
    let mut stack = vec![(0usize, TableauBranch {
        outcomes: Vec::new(),
        random: Vec::new(),
        state: fresh(c.n),
    })];
    while let Some((mut pc, mut b)) = stack.pop() {
        while pc < c.ops.len() {
            if let CircuitOp::Measure(q, basis) = c.ops[pc] {
                let p = if basis == Basis::Z { Pauli::Z } else { Pauli::X };
                let random = b.state.peek(&[(key(q), p)])? == 0;
                if random {
                    let mut other = TableauBranch {
                        outcomes: b.outcomes.clone(),
                        random: b.random.clone(),
                        state: b.state.clone(),
                    };
                    other.state.measure_with(key(q), basis, Some(true), rng)?;
                    other.outcomes.push(true);
                    other.random.push(true);
                    stack.push((pc + 1, other));
                }
                let forced = random.then_some(false);
                let (first, _) = b.state.measure_with(key(q), basis, forced, rng)?;
                b.outcomes.push(first);
                b.random.push(random);
            } else {
                apply(&mut b.state, &c.ops[pc], None, rng)?;
            }
            pc += 1;
        }
        done.push(b);
    }
    Ok(done)
}

/// Outcome of comparing one circuit.
#[derive(Debug, Clone, Default)]
pub struct CircuitReport {
    pub n: usize,
    pub ops: usize,
    pub branches: usize,
    /// Branch sets, branch probabilities or determinism flags disagree.
    pub distribution_mismatches: usize,
    pub paulis_checked: usize,
    pub expectation_mismatches: usize,
    /// Standardized deviation of the sampled total number of 1 outcomes;
    /// `None` when every outcome is deterministic.
    pub frequency_z: Option<f64>,
    pub frequency_ok: bool,
}

impl CircuitReport {
    pub fn passed(&self) -> bool {
        self.distribution_mismatches == 0 && self.expectation_mismatches == 0 && self.frequency_ok
    }
}

/// Compares tableau and oracle on every branch of `c`; all `4^n` Pauli
/// expectations are compared on up to `expectation_branches` branches, and
/// `shots` independent tableau trajectories are checked against the exact
/// outcome distribution.
pub fn check_circuit<R: Rng + ?Sized>(
    c: &RandomCircuit,
    shots: usize,
    expectation_branches: usize,
    rng: &mut R,
) -> Result<CircuitReport, StabilizerError> {
    let mut report = CircuitReport {
        n: c.n,
        ops: c.ops.len(),
        ..Default::default()
    };
    let oracle = sv_oracle_branches(c.n, &c.ops)?;
    let tableau = tableau_branches(c, rng)?;
    report.branches = oracle.len();

    let by_outcome: HashMap<&[bool], usize> = tableau
        .iter()
        .enumerate()
        .map(|(i, b)| (b.outcomes.as_slice(), i))
        .collect();
    if tableau.len() != oracle.len() {
        report.distribution_mismatches += 1;
    }
    let mut compared = 0;
    for ob in &oracle {
        let Some(&ti) = by_outcome.get(ob.outcomes.as_slice()) else {
            report.distribution_mismatches += 1;
            continue;
        };
        let tb = &tableau[ti];
        let p = 0.5f64.powi(tb.random.iter().filter(|&&r| r).count() as i32);
        let flags_agree = tb.random.iter().zip(&ob.deterministic).all(|(r, d)| r != d);
        if (p - ob.probability).abs() > 1e-9 || !flags_agree {
            report.distribution_mismatches += 1;
        }
        if compared < expectation_branches {
            compared += 1;
            for code in 0..(1usize << (2 * c.n)) {
                let terms: Vec<(Key, Pauli)> = (0..c.n)
                    .map(|q| (key(q), Pauli::from_bits(code >> (2 * q) & 1 == 1, code >> (2 * q + 1) & 1 == 1)))
                    .collect();
                let obs = PauliString::from_sparse(c.n, terms.iter().enumerate().map(|(q, t)| (q, t.1)));
                let exact = ob.state.expectation(&obs)?;
                let rounded = exact.round();
                let peek = tb.state.peek(&terms)?;
                report.paulis_checked += 1;
                if (exact - rounded).abs() > 1e-9 || rounded as i8 != peek {
                    report.expectation_mismatches += 1;
                }
            }
        }
    }

    let ones = |o: &[bool]| o.iter().filter(|&&b| b).count() as f64;
    let mean: f64 = oracle.iter().map(|b| b.probability * ones(&b.outcomes)).sum();
    let second: f64 = oracle.iter().map(|b| b.probability * ones(&b.outcomes).powi(2)).sum();
    let var = (second - mean * mean).max(0.0);
    let mut total = 0.0;
    for _ in 0..shots {
        let mut m = fresh(c.n);
        for op in &c.ops {
            if let Some((bit, _)) = apply(&mut m, op, None, rng)? {
                total += bit as u8 as f64;
            }
        }
    }
    let expected = mean * shots as f64;
    if var < 1e-12 {
        report.frequency_ok = (total - expected).abs() < 1e-6;
    } else {
        let z = (total - expected) / (var * shots as f64).sqrt();
        report.frequency_z = Some(z);
        report.frequency_ok = z.abs() <= 3.0;
    }
    Ok(report)
}

#[derive(Debug, Clone, Default)]
pub struct OracleSummary {
    pub circuits: usize,
    /// Index and report of every circuit that disagreed.
    pub failures: Vec<(usize, CircuitReport)>,
    pub max_abs_z: f64,
}

/// Runs `circuits` random circuits of up to 8 qubits, 60 operations and 8
/// measurements from one seeded generator.
pub fn oracle_equivalence(circuits: usize, shots: usize, seed: u64) -> Result<OracleSummary, StabilizerError> {
    use rand::SeedableRng;
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let mut summary = OracleSummary {
        circuits,
        ..Default::default()
    };
    for i in 0..circuits {
        let c = random_circuit(&mut rng, 8, 60, 8);
        let r = check_circuit(&c, shots, 2, &mut rng)?;
        if let Some(z) = r.frequency_z {
            summary.max_abs_z = summary.max_abs_z.max(z.abs());
        }
        if !r.passed() {
            summary.failures.push((i, r));
        }
    }
    Ok(summary)
}
