use std::collections::HashSet;

use rand::Rng;

use super::pauli::{Pauli, PauliString};
use super::tableau::Tableau;
use super::{Basis, Gate, Key, StabilizerError};

/// Ordered two-qubit Pauli list used by [`TableauState::apply_pauli_channel_2`]:
/// `IX, IY, IZ, XI, XX, …, ZZ`, first letter acting on qubit `a`.
pub const TWO_QUBIT_PAULIS: [(Pauli, Pauli); 15] = {
    const P: [Pauli; 4] = [Pauli::I, Pauli::X, Pauli::Y, Pauli::Z];
    let mut out = [(Pauli::I, Pauli::I); 15];
    let mut k = 1;
    while k < 16 {
        out[k - 1] = (P[k / 4], P[k % 4]);
        k += 1;
    }
    out
};

const PROB_SLACK: f64 = 1e-12;

/// One entangled group of qubits and the memory keys sharing it.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TableauState {
    keys: Vec<Key>,
    tableau: Tableau,
}

/// Result of measuring one qubit of a [`TableauState`].
#[derive(Debug, Clone)]
pub struct Measured {
    pub outcome: bool,
    pub random: bool,
    /// The measured qubit as its own single-qubit state, when it was split off.
    pub split: Option<TableauState>,
}

impl TableauState {
    pub fn new_zero_state(n: usize, keys: Vec<Key>) -> Result<Self, StabilizerError> {
        if n == 0 || keys.len() != n {
            return Err(StabilizerError::KeyCount {
                n,
                keys: keys.len(),
            });
        }
        let mut seen = HashSet::new();
        if let Some(k) = keys.iter().find(|k| !seen.insert(**k)) {
            return Err(StabilizerError::DuplicateKey(*k));
        }
        Ok(Self {
            keys,
            tableau: Tableau::new(n),
        })
    }

    pub fn num_qubits(&self) -> usize {
        self.keys.len()
    }

    pub fn keys(&self) -> &[Key] {
        &self.keys
    }

    pub fn index_of(&self, key: Key) -> Option<usize> {
        self.keys.iter().position(|&k| k == key)
    }

    pub fn tableau(&self) -> &Tableau {
        &self.tableau
    }

    fn check(&self, index: usize) -> Result<(), StabilizerError> {
        if index >= self.keys.len() {
            return Err(StabilizerError::IndexOutOfRange {
                index,
                n: self.keys.len(),
            });
        }
        Ok(())
    }

    pub fn apply_clifford(&mut self, gate: Gate, targets: &[usize]) -> Result<(), StabilizerError> {
        if targets.len() != gate.arity() {
            return Err(StabilizerError::Arity {
                gate,
                got: targets.len(),
            });
        }
        for &t in targets {
            self.check(t)?;
        }
        let t = &mut self.tableau;
        match gate {
            Gate::H => t.h(targets[0]),
            Gate::S => t.s(targets[0]),
            Gate::X => t.pauli(targets[0], Pauli::X),
            Gate::Y => t.pauli(targets[0], Pauli::Y),
            Gate::Z => t.pauli(targets[0], Pauli::Z),
            Gate::Cnot => {
                if targets[0] == targets[1] {
                    return Err(StabilizerError::RepeatedTarget(targets[0]));
                }
                t.cnot(targets[0], targets[1])
            }
        }
        Ok(())
    }

    pub fn apply_pauli(&mut self, index: usize, p: Pauli) -> Result<(), StabilizerError> {
        self.check(index)?;
        self.tableau.pauli(index, p);
        Ok(())
    }

    /// Measures qubit `index` in `basis`. Unless it is the only qubit, the
    /// measured qubit is removed from this state and returned as `split`.
    pub fn measure<R: Rng + ?Sized>(
        &mut self,
        index: usize,
        basis: Basis,
        rng: &mut R,
    ) -> Result<Measured, StabilizerError> {
        self.measure_with(index, basis, None, rng)
    }

    /// As [`Self::measure`], optionally forcing the outcome of a random
    /// measurement (used for exact branch enumeration).
    pub fn measure_with<R: Rng + ?Sized>(
        &mut self,
        index: usize,
        basis: Basis,
        forced: Option<bool>,
        rng: &mut R,
    ) -> Result<Measured, StabilizerError> {
        self.check(index)?;
        let n = self.keys.len();
        if basis == Basis::X {
            self.tableau.h(index);
        }
        let obs = PauliString::single(n, index, Pauli::Z);
        let res = self.tableau.measure(&obs, forced, rng)?;
        if n == 1 {
            if basis == Basis::X {
                self.tableau.h(index);
            }
            return Ok(Measured {
                outcome: res.outcome,
                random: res.random,
                split: None,
            });
        }
        let bit = self.tableau.remove_z_qubit(index)?;
        debug_assert_eq!(bit, res.outcome);
        let key = self.keys.remove(index);
        let mut single = Tableau::new(1);
        if bit {
            single.pauli(0, Pauli::X);
        }
        if basis == Basis::X {
            single.h(0);
        }
        Ok(Measured {
            outcome: res.outcome,
            random: res.random,
            split: Some(TableauState {
                keys: vec![key],
                tableau: single,
            }),
        })
    }

    /// Projective measurement of a multi-qubit observable; no qubit is split.
    pub fn measure_observable<R: Rng + ?Sized>(
        &mut self,
        obs: &PauliString,
        rng: &mut R,
    ) -> Result<bool, StabilizerError> {
        Ok(self.tableau.measure(obs, None, rng)?.outcome)
    }

    /// Stochastic Pauli channel: X, Y, Z with probabilities `px`, `py`, `pz`.
    /// Returns the Pauli that was applied.
    pub fn apply_pauli_channel_1<R: Rng + ?Sized>(
        &mut self,
        index: usize,
        px: f64,
        py: f64,
        pz: f64,
        rng: &mut R,
    ) -> Result<Pauli, StabilizerError> {
        self.check(index)?;
        let p = sample_pauli_1(px, py, pz, rng)?;
        self.tableau.pauli(index, p);
        Ok(p)
    }

    /// Two-qubit Pauli channel with weights ordered as [`TWO_QUBIT_PAULIS`].
    pub fn apply_pauli_channel_2<R: Rng + ?Sized>(
        &mut self,
        a: usize,
        b: usize,
        probs: &[f64; 15],
        rng: &mut R,
    ) -> Result<(Pauli, Pauli), StabilizerError> {
        self.check(a)?;
        self.check(b)?;
        if a == b {
            return Err(StabilizerError::RepeatedTarget(a));
        }
        let (pa, pb) = sample_pauli_2(probs, rng)?;
        self.tableau.pauli(a, pa);
        self.tableau.pauli(b, pb);
        Ok((pa, pb))
    }

    /// Tensor product of disjoint states, keys concatenated in input order.
    pub fn merge(states: Vec<TableauState>) -> Result<TableauState, StabilizerError> {
        let mut seen = HashSet::new();
        for s in &states {
            for k in &s.keys {
                if !seen.insert(*k) {
                    return Err(StabilizerError::DuplicateKey(*k));
                }
            }
        }
        let mut iter = states.into_iter();
        let Some(mut acc) = iter.next() else {
            return Err(StabilizerError::KeyCount { n: 0, keys: 0 });
        };
        for s in iter {
            acc.tableau = acc.tableau.tensor(&s.tableau);
            acc.keys.extend(s.keys);
        }
        Ok(acc)
    }

    pub fn peek_expectation(&self, obs: &PauliString) -> Result<i8, StabilizerError> {
        self.tableau.peek(obs)
    }

    pub fn validate(&self) -> Result<(), String> {
        self.tableau.validate()
    }
}

fn check_prob(p: f64) -> Result<(), StabilizerError> {
    if !(0.0..=1.0 + PROB_SLACK).contains(&p) || p.is_nan() {
        return Err(StabilizerError::InvalidProbability(p));
    }
    Ok(())
}

pub fn sample_pauli_1<R: Rng + ?Sized>(
    px: f64,
    py: f64,
    pz: f64,
    rng: &mut R,
) -> Result<Pauli, StabilizerError> {
    for p in [px, py, pz] {
        check_prob(p)?;
    }
    check_prob(px + py + pz)?;
    if px + py + pz == 0.0 {
        return Ok(Pauli::I);
    }
    let u: f64 = rng.random();
    Ok(if u < px {
        Pauli::X
    } else if u < px + py {
        Pauli::Y
    } else if u < px + py + pz {
        Pauli::Z
    } else {
        Pauli::I
    })
}

pub fn sample_pauli_2<R: Rng + ?Sized>(
    probs: &[f64; 15],
    rng: &mut R,
) -> Result<(Pauli, Pauli), StabilizerError> {
    for &p in probs {
        check_prob(p)?;
    }
    let total: f64 = probs.iter().sum();
    check_prob(total)?;
    if total == 0.0 {
        return Ok((Pauli::I, Pauli::I));
    }
    let u: f64 = rng.random();
    let mut acc = 0.0;
    for (k, &p) in probs.iter().enumerate() {
        acc += p;
        if u < acc {
            return Ok(TWO_QUBIT_PAULIS[k]);
        }
    }
    Ok((Pauli::I, Pauli::I))
}
