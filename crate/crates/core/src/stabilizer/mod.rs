//! Stabilizer-tableau state engine with a dense state-vector oracle.

mod manager;
pub mod pauli;
mod state;
pub mod statevector;
pub mod tableau;

use std::fmt;

use thiserror::Error;

pub use manager::QuantumManager;
pub use pauli::{Pauli, PauliString};
pub use state::{sample_pauli_1, sample_pauli_2, Measured, TableauState, TWO_QUBIT_PAULIS};
pub use tableau::Tableau;

/// Global identifier of one physical memory qubit.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Key(pub u32);

impl fmt::Display for Key {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "q{}", self.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Gate {
    H,
    S,
    X,
    Y,
    Z,
    Cnot,
}

impl Gate {
    pub fn arity(self) -> usize {
        match self {
            Gate::Cnot => 2,
            _ => 1,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Basis {
    Z,
    X,
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum StabilizerError {
    #[error("invalid Pauli symbol {0:?}")]
    Parse(char),
    #[error("observable has {got} qubits, state has {expected}")]
    LengthMismatch { expected: usize, got: usize },
    #[error("forced measurement outcome is impossible")]
    ImpossibleOutcome,
    #[error("qubit index {index} out of range for {n} qubits")]
    IndexOutOfRange { index: usize, n: usize },
    #[error("qubit {0} is not in a product state")]
    NotProduct(usize),
    #[error("{keys} keys given for {n} qubits")]
    KeyCount { n: usize, keys: usize },
    #[error("key {0} is already in use")]
    DuplicateKey(Key),
    #[error("unknown key {0}")]
    UnknownKey(Key),
    #[error("gate {gate:?} given {got} targets")]
    Arity { gate: Gate, got: usize },
    #[error("qubit {0} used twice in one operation")]
    RepeatedTarget(usize),
    #[error("invalid probability {0}")]
    InvalidProbability(f64),
    #[error("state vector oracle limited to {max} qubits, got {n}")]
    TooLarge { n: usize, max: usize },
}
