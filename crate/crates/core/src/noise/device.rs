use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{apply_idle, corrupt_bell_pair, flip_measurement, noisy_init, HardwareProfile, IdleRecord, NoiseError};
use crate::kernel::Picos;
use crate::stabilizer::{Basis, Gate, Key, Pauli, QuantumManager};

/// Operation counts for one episode.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Counters {
    pub one_qubit_gates: u64,
    pub two_qubit_gates: u64,
    pub measurements: u64,
    pub prep_attempts: u64,
    pub heralding_attempts: u64,
}

impl Counters {
    pub fn operations(&self) -> u64 {
        self.one_qubit_gates + self.two_qubit_gates + self.measurements
    }
}

/// Quantum state plus the noise applied around every operation on it.
///
/// Every operation first brings the touched qubits up to the current time
/// with the idle channel, then performs the ideal operation, then applies the
/// operation's own noise.
#[derive(Debug, Clone)]
pub struct NoisyDevice {
    pub qm: QuantumManager,
    profile: HardwareProfile,
    gate1: [f64; 3],
    gate2: [f64; 15],
    idle: IdleRecord,
    now: Picos,
    pub counters: Counters,
}

impl NoisyDevice {
    pub fn new(profile: HardwareProfile) -> Result<Self, NoiseError> {
        profile.validate()?;
        Ok(Self {
            qm: QuantumManager::new(),
            gate1: profile.gate_channel_1q()?,
            gate2: profile.gate_channel_2q()?,
            profile,
            idle: IdleRecord::new(),
            now: 0,
            counters: Counters::default(),
        })
    }

    pub fn profile(&self) -> &HardwareProfile {
        &self.profile
    }

    pub fn now(&self) -> Picos {
        self.now
    }

    pub fn set_now(&mut self, now: Picos) {
        debug_assert!(now >= self.now);
        self.now = now;
    }

    pub fn idle_record(&self) -> &IdleRecord {
        &self.idle
    }

    pub fn touch<R: Rng + ?Sized>(&mut self, key: Key, rng: &mut R) -> Result<(), NoiseError> {
        apply_idle(&mut self.qm, key, self.now, &mut self.idle, &self.profile, rng)
    }

    /// Resets `key` to |0⟩ with preparation noise and starts its idle clock.
    pub fn init<R: Rng + ?Sized>(&mut self, key: Key, rng: &mut R) -> Result<(), NoiseError> {
        self.qm.reset(key, rng)?;
        noisy_init(&mut self.qm, key, self.profile.f_init, rng)?;
        self.idle.start(key, self.now);
        Ok(())
    }

    /// Creates a heralded physical pair: |Φ⁺⟩ with the Bell-state error
    /// applied to `a`.
    pub fn bell_pair<R: Rng + ?Sized>(&mut self, a: Key, b: Key, rng: &mut R) -> Result<Pauli, NoiseError> {
        for k in [a, b] {
            if self.qm.contains(k) {
                self.release(k, rng)?;
            }
        }
        self.qm.bell_pair(a, b)?;
        let p = corrupt_bell_pair(&mut self.qm, a, self.profile.f_phys, rng)?;
        self.idle.start(a, self.now);
        self.idle.start(b, self.now);
        Ok(p)
    }

    /// A counted, noisy one-qubit Clifford.
    pub fn gate1<R: Rng + ?Sized>(&mut self, gate: Gate, key: Key, rng: &mut R) -> Result<(), NoiseError> {
        self.touch(key, rng)?;
        self.qm.apply_gate(gate, &[key])?;
        self.counters.one_qubit_gates += 1;
        let [px, py, pz] = self.gate1;
        if px + py + pz > 0.0 {
            self.qm.apply_pauli_channel_1(key, px, py, pz, rng)?;
        }
        Ok(())
    }

    /// A counted, noisy CNOT.
    pub fn cnot<R: Rng + ?Sized>(&mut self, control: Key, target: Key, rng: &mut R) -> Result<(), NoiseError> {
        self.touch(control, rng)?;
        self.touch(target, rng)?;
        self.qm.apply_gate(Gate::Cnot, &[control, target])?;
        self.counters.two_qubit_gates += 1;
        if self.gate2.iter().any(|&p| p > 0.0) {
            self.qm.apply_pauli_channel_2(control, target, &self.gate2, rng)?;
        }
        Ok(())
    }

    /// A counted measurement. Returns the reported (possibly flipped) bit;
    /// the post-measurement state follows the true outcome.
    pub fn measure<R: Rng + ?Sized>(&mut self, key: Key, basis: Basis, rng: &mut R) -> Result<bool, NoiseError> {
        self.touch(key, rng)?;
        let outcome = self.qm.measure(key, basis, rng)?;
        self.counters.measurements += 1;
        Ok(flip_measurement(outcome, self.profile.f_m, rng))
    }

    /// A noiseless, uncounted Pauli (a classically controlled correction).
    pub fn pauli<R: Rng + ?Sized>(&mut self, key: Key, p: Pauli, rng: &mut R) -> Result<(), NoiseError> {
        self.touch(key, rng)?;
        self.qm.apply_pauli(key, p)?;
        Ok(())
    }

    /// Discards a qubit and stops tracking it.
    pub fn release<R: Rng + ?Sized>(&mut self, key: Key, rng: &mut R) -> Result<(), NoiseError> {
        self.idle.stop(key);
        if self.qm.contains(key) {
            self.qm.release(key, rng)?;
        }
        Ok(())
    }
}
