use std::collections::HashMap;

use rand::Rng;

use super::pauli::{Pauli, PauliString};
use super::state::TableauState;
use super::{Basis, Gate, Key, StabilizerError};

/// Registry of live [`TableauState`] groups addressed by memory key.
///
/// Unentangled qubits live in separate groups. Two-qubit gates and joint
/// observable measurements merge the groups involved; single-qubit
/// measurements split the measured qubit back out.
#[derive(Debug, Clone, Default)]
pub struct QuantumManager {
    groups: Vec<Option<TableauState>>,
    free: Vec<usize>,
    slot_of: HashMap<Key, usize>,
}

impl QuantumManager {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn contains(&self, key: Key) -> bool {
        self.slot_of.contains_key(&key)
    }

    pub fn num_qubits(&self) -> usize {
        self.slot_of.len()
    }

    /// Live keys in ascending order.
    pub fn keys(&self) -> Vec<Key> {
        let mut keys: Vec<Key> = self.slot_of.keys().copied().collect();
        keys.sort_unstable();
        keys
    }

    pub fn num_groups(&self) -> usize {
        self.groups.len() - self.free.len()
    }

    fn slot(&self, key: Key) -> Result<usize, StabilizerError> {
        self.slot_of
            .get(&key)
            .copied()
            .ok_or(StabilizerError::UnknownKey(key))
    }

    /// The group currently holding `key`.
    pub fn group(&self, key: Key) -> Result<&TableauState, StabilizerError> {
        let slot = self.slot(key)?;
        Ok(self.groups[slot].as_ref().expect("live slot"))
    }

    fn locate(&mut self, key: Key) -> Result<(&mut TableauState, usize), StabilizerError> {
        let slot = self.slot(key)?;
        let state = self.groups[slot].as_mut().expect("live slot");
        let idx = state.index_of(key).expect("key map in sync");
        Ok((state, idx))
    }

    fn insert(&mut self, state: TableauState) -> usize {
        let slot = match self.free.pop() {
            Some(s) => s,
            None => {
                self.groups.push(None);
                self.groups.len() - 1
            }
        };
        for &k in state.keys() {
            self.slot_of.insert(k, slot);
        }
        self.groups[slot] = Some(state);
        slot
    }

    fn take(&mut self, slot: usize) -> TableauState {
        let s = self.groups[slot].take().expect("live slot");
        self.free.push(slot);
        s
    }

    /// Adds a fresh qubit in |0⟩.
    pub fn allocate(&mut self, key: Key) -> Result<(), StabilizerError> {
        if self.contains(key) {
            return Err(StabilizerError::DuplicateKey(key));
        }
        self.insert(TableauState::new_zero_state(1, vec![key])?);
        Ok(())
    }

    /// Discards the qubit (tracing it out after a Z measurement).
    pub fn release<R: Rng + ?Sized>(&mut self, key: Key, rng: &mut R) -> Result<(), StabilizerError> {
        if self.group(key)?.num_qubits() > 1 {
            self.measure(key, Basis::Z, rng)?;
        }
        let slot = self.slot(key)?;
        self.take(slot);
        self.slot_of.remove(&key);
        Ok(())
    }

    /// Returns the qubit to |0⟩, allocating it if needed.
    pub fn reset<R: Rng + ?Sized>(&mut self, key: Key, rng: &mut R) -> Result<(), StabilizerError> {
        if self.contains(key) {
            self.release(key, rng)?;
        }
        self.allocate(key)
    }

    /// Merges the groups holding `keys` into one and returns its slot.
    fn merge_keys(&mut self, keys: &[Key]) -> Result<usize, StabilizerError> {
        let mut slots = Vec::with_capacity(keys.len());
        for &k in keys {
            let s = self.slot(k)?;
            if !slots.contains(&s) {
                slots.push(s);
            }
        }
        if slots.len() == 1 {
            return Ok(slots[0]);
        }
        let states = slots.iter().map(|&s| self.take(s)).collect();
        let merged = TableauState::merge(states)?;
        Ok(self.insert(merged))
    }

    pub fn apply_gate(&mut self, gate: Gate, keys: &[Key]) -> Result<(), StabilizerError> {
        if keys.len() != gate.arity() {
            return Err(StabilizerError::Arity {
                gate,
                got: keys.len(),
            });
        }
        if keys.len() == 2 && keys[0] == keys[1] {
            let idx = self.locate(keys[0])?.1;
            return Err(StabilizerError::RepeatedTarget(idx));
        }
        let slot = self.merge_keys(keys)?;
        let state = self.groups[slot].as_mut().expect("live slot");
        let targets: Vec<usize> = keys
            .iter()
            .map(|&k| state.index_of(k).expect("merged"))
            .collect();
        state.apply_clifford(gate, &targets)
    }

    pub fn apply_pauli(&mut self, key: Key, p: Pauli) -> Result<(), StabilizerError> {
        let (state, idx) = self.locate(key)?;
        state.apply_pauli(idx, p)
    }

    pub fn apply_pauli_channel_1<R: Rng + ?Sized>(
        &mut self,
        key: Key,
        px: f64,
        py: f64,
        pz: f64,
        rng: &mut R,
    ) -> Result<Pauli, StabilizerError> {
        let (state, idx) = self.locate(key)?;
        state.apply_pauli_channel_1(idx, px, py, pz, rng)
    }

    /// Samples a two-qubit Pauli. Identity and single-sided outcomes do not
    /// merge the groups.
    pub fn apply_pauli_channel_2<R: Rng + ?Sized>(
        &mut self,
        a: Key,
        b: Key,
        probs: &[f64; 15],
        rng: &mut R,
    ) -> Result<(Pauli, Pauli), StabilizerError> {
        self.slot(a)?;
        self.slot(b)?;
        if a == b {
            return Err(StabilizerError::RepeatedTarget(self.locate(a)?.1));
        }
        let (pa, pb) = super::state::sample_pauli_2(probs, rng)?;
        self.apply_pauli(a, pa)?;
        self.apply_pauli(b, pb)?;
        Ok((pa, pb))
    }

    /// Measures one qubit; it ends up alone in its own group.
    pub fn measure<R: Rng + ?Sized>(
        &mut self,
        key: Key,
        basis: Basis,
        rng: &mut R,
    ) -> Result<bool, StabilizerError> {
        Ok(self.measure_with(key, basis, None, rng)?.0)
    }

    /// Returns `(outcome, random)`; `forced` fixes the outcome of a random
    /// measurement.
    pub fn measure_with<R: Rng + ?Sized>(
        &mut self,
        key: Key,
        basis: Basis,
        forced: Option<bool>,
        rng: &mut R,
    ) -> Result<(bool, bool), StabilizerError> {
        let (state, idx) = self.locate(key)?;
        let m = state.measure_with(idx, basis, forced, rng)?;
        if let Some(split) = m.split {
            self.insert(split);
        }
        Ok((m.outcome, m.random))
    }

    fn local_observable(
        state: &TableauState,
        terms: &[(Key, Pauli)],
    ) -> PauliString {
        PauliString::from_sparse(
            state.num_qubits(),
            terms
                .iter()
                .filter_map(|&(k, p)| state.index_of(k).map(|i| (i, p))),
        )
    }

    fn check_terms(&self, terms: &[(Key, Pauli)]) -> Result<(), StabilizerError> {
        for (i, &(k, _)) in terms.iter().enumerate() {
            self.slot(k)?;
            if terms[..i].iter().any(|&(o, _)| o == k) {
                return Err(StabilizerError::DuplicateKey(k));
            }
        }
        Ok(())
    }

    /// Projective measurement of the product of `terms`; merges the groups.
    pub fn measure_observable<R: Rng + ?Sized>(
        &mut self,
        terms: &[(Key, Pauli)],
        rng: &mut R,
    ) -> Result<bool, StabilizerError> {
        self.check_terms(terms)?;
        let keys: Vec<Key> = terms.iter().map(|t| t.0).collect();
        let slot = self.merge_keys(&keys)?;
        let state = self.groups[slot].as_mut().expect("live slot");
        let obs = Self::local_observable(state, terms);
        state.measure_observable(&obs, rng)
    }

    /// Expectation of the product of `terms` without collapsing anything.
    /// Groups are independent, so the value factorizes over them.
    pub fn peek(&self, terms: &[(Key, Pauli)]) -> Result<i8, StabilizerError> {
        self.check_terms(terms)?;
        let mut slots: Vec<usize> = terms.iter().map(|&(k, _)| self.slot_of[&k]).collect();
        slots.sort_unstable();
        slots.dedup();
        let mut value = 1;
        for slot in slots {
            let state = self.groups[slot].as_ref().expect("live slot");
            value *= state.peek_expectation(&Self::local_observable(state, terms))?;
            if value == 0 {
                break;
            }
        }
        Ok(value)
    }

    /// Allocates `a` and `b` and prepares them in |Φ⁺⟩.
    pub fn bell_pair(&mut self, a: Key, b: Key) -> Result<(), StabilizerError> {
        self.allocate(a)?;
        if let Err(e) = self.allocate(b) {
            self.slot_of.remove(&a).map(|s| self.take(s));
            return Err(e);
        }
        self.apply_gate(Gate::H, &[a])?;
        self.apply_gate(Gate::Cnot, &[a, b])
    }

    pub fn validate(&self) -> Result<(), String> {
        for (slot, g) in self.groups.iter().enumerate() {
            if let Some(g) = g {
                g.validate()?;
                for k in g.keys() {
                    if self.slot_of.get(k) != Some(&slot) {
                        return Err(format!("key {k} mapped to wrong group"));
                    }
                }
            }
        }
        Ok(())
    }
}
