//! Dense state-vector simulator used as a reference for the tableau backend.
//!
//! Qubit `q` is bit `q` of the basis-state index.

use num_complex::Complex64;
use rand::Rng;

use super::pauli::{Pauli, PauliString};
use super::{Basis, Gate, StabilizerError};

pub const MAX_QUBITS: usize = 12;

const TOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq)]
pub enum CircuitOp {
    Gate(Gate, Vec<usize>),
    /// A fault that was already sampled; applied deterministically.
    Pauli(usize, Pauli),
    Measure(usize, Basis),
}

#[derive(Debug, Clone)]
pub struct StateVector {
    n: usize,
    amps: Vec<Complex64>,
}

impl StateVector {
    pub fn zero(n: usize) -> Result<Self, StabilizerError> {
        if n > MAX_QUBITS {
            return Err(StabilizerError::TooLarge { n, max: MAX_QUBITS });
        }
        let mut amps = vec![Complex64::new(0.0, 0.0); 1 << n];
        amps[0] = Complex64::new(1.0, 0.0);
        Ok(Self { n, amps })
    }

    pub fn num_qubits(&self) -> usize {
        self.n
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amps
    }

    fn check(&self, q: usize) -> Result<(), StabilizerError> {
        if q >= self.n {
            return Err(StabilizerError::IndexOutOfRange { index: q, n: self.n });
        }
        Ok(())
    }

    pub fn h(&mut self, q: usize) {
        let bit = 1 << q;
        let r = std::f64::consts::FRAC_1_SQRT_2;
        for i in 0..self.amps.len() {
            if i & bit == 0 {
                let (a, b) = (self.amps[i], self.amps[i | bit]);
                self.amps[i] = (a + b) * r;
                self.amps[i | bit] = (a - b) * r;
            }
        }
    }

    pub fn s(&mut self, q: usize) {
        let bit = 1 << q;
        for (i, a) in self.amps.iter_mut().enumerate() {
            if i & bit != 0 {
                *a *= Complex64::i();
            }
        }
    }

    pub fn cnot(&mut self, c: usize, t: usize) {
        let (cb, tb) = (1 << c, 1 << t);
        for i in 0..self.amps.len() {
            if i & cb != 0 && i & tb == 0 {
                self.amps.swap(i, i | tb);
            }
        }
    }

    pub fn pauli(&mut self, q: usize, p: Pauli) {
        let mut ps = PauliString::identity(self.n);
        ps.set(q, p);
        self.amps = self.apply_string(&ps);
    }

    pub fn apply_gate(&mut self, gate: Gate, targets: &[usize]) -> Result<(), StabilizerError> {
        if targets.len() != gate.arity() {
            return Err(StabilizerError::Arity {
                gate,
                got: targets.len(),
            });
        }
        for &t in targets {
            self.check(t)?;
        }
        match gate {
            Gate::H => self.h(targets[0]),
            Gate::S => self.s(targets[0]),
            Gate::X => self.pauli(targets[0], Pauli::X),
            Gate::Y => self.pauli(targets[0], Pauli::Y),
            Gate::Z => self.pauli(targets[0], Pauli::Z),
            Gate::Cnot => {
                if targets[0] == targets[1] {
                    return Err(StabilizerError::RepeatedTarget(targets[0]));
                }
                self.cnot(targets[0], targets[1])
            }
        }
        Ok(())
    }

    fn masks(p: &PauliString) -> (usize, usize, u32) {
        let (mut x, mut z, mut ny) = (0usize, 0usize, 0u32);
        for (q, pq) in p.iter().enumerate() {
            if pq.has_x() {
                x |= 1 << q;
            }
            if pq.has_z() {
                z |= 1 << q;
            }
            if pq == Pauli::Y {
                ny += 1;
            }
        }
        (x, z, ny)
    }

    /// Returns `P|ψ⟩` including the sign of `p`.
    fn apply_string(&self, p: &PauliString) -> Vec<Complex64> {
        let (x, z, ny) = Self::masks(p);
        let mut phase = Complex64::i().powu(ny % 4);
        if p.is_negative() {
            phase = -phase;
        }
        let mut out = vec![Complex64::new(0.0, 0.0); self.amps.len()];
        for (i, a) in self.amps.iter().enumerate() {
            let sign = if (i & z).count_ones() % 2 == 1 { -1.0 } else { 1.0 };
            out[i ^ x] = a * phase * sign;
        }
        out
    }

    /// `⟨ψ|P|ψ⟩`, real for Hermitian `P`.
    pub fn expectation(&self, p: &PauliString) -> Result<f64, StabilizerError> {
        if p.len() != self.n {
            return Err(StabilizerError::LengthMismatch {
                expected: self.n,
                got: p.len(),
            });
        }
        let (x, z, ny) = Self::masks(p);
        let phase = Complex64::i().powu(ny % 4);
        let mut acc = Complex64::new(0.0, 0.0);
        for (i, a) in self.amps.iter().enumerate() {
            let sign = if (i & z).count_ones() % 2 == 1 { -1.0 } else { 1.0 };
            acc += self.amps[i ^ x].conj() * a * sign;
        }
        let value = (acc * phase).re;
        Ok(if p.is_negative() { -value } else { value })
    }

    /// Probability that measuring `q` in `basis` yields outcome 1.
    pub fn prob_one(&self, q: usize, basis: Basis) -> Result<f64, StabilizerError> {
        self.check(q)?;
        let obs = PauliString::single(
            self.n,
            q,
            match basis {
                Basis::Z => Pauli::Z,
                Basis::X => Pauli::X,
            },
        );
        Ok(((1.0 - self.expectation(&obs)?) / 2.0).clamp(0.0, 1.0))
    }

    /// Projects onto the given outcome and renormalizes. Returns its probability.
    pub fn collapse(&mut self, q: usize, basis: Basis, outcome: bool) -> Result<f64, StabilizerError> {
        let p1 = self.prob_one(q, basis)?;
        let p = if outcome { p1 } else { 1.0 - p1 };
        if p < TOL {
            return Err(StabilizerError::ImpossibleOutcome);
        }
        let obs = PauliString::single(
            self.n,
            q,
            match basis {
                Basis::Z => Pauli::Z,
                Basis::X => Pauli::X,
            },
        );
        let flipped = self.apply_string(&obs);
        let s = if outcome { -1.0 } else { 1.0 };
        let norm = 1.0 / (2.0 * p.sqrt());
        for (a, b) in self.amps.iter_mut().zip(flipped) {
            *a = (*a + b * s) * norm;
        }
        Ok(p)
    }

    pub fn measure<R: Rng + ?Sized>(
        &mut self,
        q: usize,
        basis: Basis,
        rng: &mut R,
    ) -> Result<bool, StabilizerError> {
        let p1 = self.prob_one(q, basis)?;
        let outcome = if p1 < TOL {
            false
        } else if p1 > 1.0 - TOL {
            true
        } else {
            rng.random::<f64>() < p1
        };
        self.collapse(q, basis, outcome)?;
        Ok(outcome)
    }

    pub fn apply(&mut self, op: &CircuitOp) -> Result<(), StabilizerError> {
        match op {
            CircuitOp::Gate(g, t) => self.apply_gate(*g, t),
            CircuitOp::Pauli(q, p) => {
                self.check(*q)?;
                self.pauli(*q, *p);
                Ok(())
            }
            CircuitOp::Measure(..) => unreachable!("measurements need an outcome"),
        }
    }
}

/// Result of a sampled oracle trajectory.
#[derive(Debug, Clone)]
pub struct OracleRun {
    pub state: StateVector,
    pub outcomes: Vec<bool>,
}

pub fn sv_oracle_run<R: Rng + ?Sized>(
    n: usize,
    circuit: &[CircuitOp],
    rng: &mut R,
) -> Result<OracleRun, StabilizerError> {
    let mut state = StateVector::zero(n)?;
    let mut outcomes = Vec::new();
    for op in circuit {
        match op {
            CircuitOp::Measure(q, b) => outcomes.push(state.measure(*q, *b, rng)?),
            _ => state.apply(op)?,
        }
    }
    Ok(OracleRun { state, outcomes })
}

/// One measurement branch of a circuit with its exact probability.
#[derive(Debug, Clone)]
pub struct Branch {
    pub outcomes: Vec<bool>,
    pub probability: f64,
    /// Per measurement: whether the outcome was certain.
    pub deterministic: Vec<bool>,
    pub state: StateVector,
}

/// Enumerates every measurement branch with nonzero probability.
pub fn sv_oracle_branches(n: usize, circuit: &[CircuitOp]) -> Result<Vec<Branch>, StabilizerError> {
    let mut out = Vec::new();
    let root = Branch {
        outcomes: Vec::new(),
        probability: 1.0,
        deterministic: Vec::new(),
        state: StateVector::zero(n)?,
    };
    walk(root, circuit, &mut out)?;
    Ok(out)
}

fn walk(mut b: Branch, rest: &[CircuitOp], out: &mut Vec<Branch>) -> Result<(), StabilizerError> {
    for (i, op) in rest.iter().enumerate() {
        if let CircuitOp::Measure(q, basis) = op {
            let p1 = b.state.prob_one(*q, *basis)?;
            let certain = p1 < TOL || p1 > 1.0 - TOL;
            for outcome in [false, true] {
                let p = if outcome { p1 } else { 1.0 - p1 };
                if p < TOL {
                    continue;
                }
                let mut child = b.clone();
                child.state.collapse(*q, *basis, outcome)?;
                child.outcomes.push(outcome);
                child.deterministic.push(certain);
                child.probability *= p;
                walk(child, &rest[i + 1..], out)?;
            }
            return Ok(());
        }
        b.state.apply(op)?;
    }
    out.push(b);
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn ps(s: &str) -> PauliString {
        s.parse().unwrap()
    }

    #[test]
    fn bell_amplitudes() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let run = sv_oracle_run(
            2,
            &[CircuitOp::Gate(Gate::H, vec![0]), CircuitOp::Gate(Gate::Cnot, vec![0, 1])],
            &mut rng,
        )
        .unwrap();
        let r = std::f64::consts::FRAC_1_SQRT_2;
        let a = run.state.amplitudes();
        assert!((a[0].re - r).abs() < 1e-12 && (a[3].re - r).abs() < 1e-12);
        assert!(a[1].norm() < 1e-12 && a[2].norm() < 1e-12);
        assert!((run.state.expectation(&ps("YY")).unwrap() + 1.0).abs() < 1e-12);
    }

    #[test]
    fn pauli_phase_convention() {
        let mut s = StateVector::zero(1).unwrap();
        s.pauli(0, Pauli::Y);
        assert!((s.amplitudes()[1] - Complex64::i()).norm() < 1e-12);
        s.h(0);
        s.s(0);
        assert!((s.expectation(&ps("Y")).unwrap().abs() - 1.0).abs() < 1e-12);
        assert!((s.expectation(&ps("-Y")).unwrap() + s.expectation(&ps("Y")).unwrap()).abs() < 1e-12);
    }

    #[test]
    fn branches_sum_to_one() {
        let circuit = [
            CircuitOp::Gate(Gate::H, vec![0]),
            CircuitOp::Gate(Gate::Cnot, vec![0, 1]),
            CircuitOp::Measure(0, Basis::Z),
            CircuitOp::Measure(1, Basis::Z),
            CircuitOp::Measure(1, Basis::X),
        ];
        let branches = sv_oracle_branches(2, &circuit).unwrap();
        assert_eq!(branches.len(), 4);
        let total: f64 = branches.iter().map(|b| b.probability).sum();
        assert!((total - 1.0).abs() < 1e-12);
        for b in &branches {
            assert_eq!(b.outcomes[0], b.outcomes[1]);
            assert_eq!(b.deterministic, vec![false, true, false]);
        }
    }

    #[test]
    fn too_many_qubits() {
        assert!(matches!(
            StateVector::zero(13),
            Err(StabilizerError::TooLarge { n: 13, .. })
        ));
    }
}
