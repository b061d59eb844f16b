//! Hardware noise parameters and the channels built from them.

mod device;

use std::collections::HashMap;

use rand::Rng;
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

use crate::kernel::{ps_to_secs, Picos};
use crate::stabilizer::{Key, Pauli, QuantumManager, StabilizerError};

pub use device::{Counters, NoisyDevice};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum NoiseError {
    #[error("{name} = {value} is outside [{lo}, {hi}]")]
    OutOfRange {
        name: &'static str,
        value: f64,
        lo: f64,
        hi: f64,
    },
    #[error("T2 = {t2} s exceeds 2*T1 = {} s", 2.0 * t1)]
    CoherenceOrder { t1: f64, t2: f64 },
    #[error("negative idle time {0} s")]
    NegativeTime(f64),
    #[error("bias weights must be nonnegative with a positive sum")]
    BadBias,
    #[error(transparent)]
    Backend(#[from] StabilizerError),
}

fn in_range(name: &'static str, value: f64, lo: f64, hi: f64) -> Result<(), NoiseError> {
    if value.is_nan() || value < lo || value > hi {
        return Err(NoiseError::OutOfRange { name, value, lo, hi });
    }
    Ok(())
}

/// Coherence times serialize as seconds, with `null` meaning "never decays".
mod seconds_or_infinite {
    use super::*;

    pub fn serialize<S: Serializer>(v: &f64, s: S) -> Result<S::Ok, S::Error> {
        if v.is_finite() {
            s.serialize_f64(*v)
        } else {
            s.serialize_none()
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
        Ok(Option::<f64>::deserialize(d)?.unwrap_or(f64::INFINITY))
    }
}

/// Per-node and per-link physical parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct HardwareProfile {
    #[serde(rename = "F_1q")]
    pub f_1q: f64,
    #[serde(rename = "F_2q")]
    pub f_2q: f64,
    #[serde(rename = "F_m")]
    pub f_m: f64,
    #[serde(rename = "F_init")]
    pub f_init: f64,
    #[serde(rename = "F_phys")]
    pub f_phys: f64,
    #[serde(rename = "T1_s", with = "seconds_or_infinite")]
    pub t1: f64,
    #[serde(rename = "T2_s", with = "seconds_or_infinite")]
    pub t2: f64,
    pub eta_m: f64,
    pub eta_d: f64,
    #[serde(rename = "alpha_db_per_km")]
    pub alpha: f64,
    #[serde(rename = "c_star_m_per_s")]
    pub c_star: f64,
    #[serde(rename = "D_fwd_s")]
    pub d_fwd: f64,
    #[serde(rename = "D_end_s")]
    pub d_end: f64,
    #[serde(rename = "t_prep_s")]
    pub t_prep: f64,
    /// Relative X/Y/Z weights of the one-qubit gate channel; uniform if absent.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub gate_bias_1q: Option<[f64; 3]>,
    /// Relative weights of the 15 two-qubit Paulis, ordered IX, IY, ..., ZZ.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub gate_bias_2q: Option<[f64; 15]>,
}

pub const T1_BASELINE: f64 = 100.0;
pub const T2_BASELINE: f64 = 2.0;

impl Default for HardwareProfile {
    fn default() -> Self {
        Self::baseline()
    }
}

impl HardwareProfile {
    /// The z = 0 operating point with the default link constants.
    pub fn baseline() -> Self {
        Self {
            f_1q: 0.999,
            f_2q: 0.9991,
            f_m: 0.996,
            f_init: 0.99,
            f_phys: 0.965,
            t1: T1_BASELINE,
            t2: T2_BASELINE,
            eta_m: 0.9,
            eta_d: 0.95,
            alpha: 0.2,
            c_star: 2e8,
            d_fwd: 20e-6,
            d_end: 50e-6,
            t_prep: 0.68e-3,
            gate_bias_1q: None,
            gate_bias_2q: None,
        }
    }

    /// Every qubit noise source off; loss and timing unchanged.
    pub fn noiseless() -> Self {
        Self::baseline().without_qubit_noise()
    }

    pub fn without_qubit_noise(mut self) -> Self {
        self.f_1q = 1.0;
        self.f_2q = 1.0;
        self.f_m = 1.0;
        self.f_init = 1.0;
        self.f_phys = 1.0;
        self.t1 = f64::INFINITY;
        self.t2 = f64::INFINITY;
        self
    }

    pub fn validate(&self) -> Result<(), NoiseError> {
        in_range("F_1q", self.f_1q, 2.0 / 3.0, 1.0)?;
        in_range("F_2q", self.f_2q, 0.2, 1.0)?;
        in_range("F_m", self.f_m, 0.0, 1.0)?;
        in_range("F_init", self.f_init, 0.0, 1.0)?;
        in_range("F_phys", self.f_phys, 0.0, 1.0)?;
        in_range("T1_s", self.t1, f64::MIN_POSITIVE, f64::INFINITY)?;
        in_range("T2_s", self.t2, f64::MIN_POSITIVE, f64::INFINITY)?;
        check_coherence(self.t1, self.t2)?;
        in_range("eta_m", self.eta_m, 0.0, 1.0)?;
        in_range("eta_d", self.eta_d, 0.0, 1.0)?;
        in_range("alpha_db_per_km", self.alpha, 0.0, f64::INFINITY)?;
        in_range("c_star_m_per_s", self.c_star, f64::MIN_POSITIVE, f64::INFINITY)?;
        in_range("D_fwd_s", self.d_fwd, 0.0, f64::INFINITY)?;
        in_range("D_end_s", self.d_end, 0.0, f64::INFINITY)?;
        in_range("t_prep_s", self.t_prep, 0.0, f64::INFINITY)?;
        if let Some(w) = &self.gate_bias_1q {
            normalized(w)?;
        }
        if let Some(w) = &self.gate_bias_2q {
            normalized(w)?;
        }
        Ok(())
    }

    /// X, Y, Z probabilities of the noise following a one-qubit gate.
    pub fn gate_channel_1q(&self) -> Result<[f64; 3], NoiseError> {
        let p = depolarize_prob_1q(self.f_1q)?;
        let w = match &self.gate_bias_1q {
            Some(w) => normalized(w)?,
            None => [1.0 / 3.0; 3],
        };
        Ok(w.map(|x| x * p))
    }

    /// Probabilities of the 15 two-qubit Paulis following a CNOT.
    pub fn gate_channel_2q(&self) -> Result<[f64; 15], NoiseError> {
        let p = depolarize_prob_2q(self.f_2q)?;
        let w = match &self.gate_bias_2q {
            Some(w) => normalized(w)?,
            None => [1.0 / 15.0; 15],
        };
        Ok(w.map(|x| x * p))
    }
}

fn normalized<const K: usize>(w: &[f64; K]) -> Result<[f64; K], NoiseError> {
    let total: f64 = w.iter().sum();
    if w.iter().any(|x| !(*x >= 0.0)) || !(total > 0.0) || !total.is_finite() {
        return Err(NoiseError::BadBias);
    }
    Ok(w.map(|x| x / total))
}

fn check_coherence(t1: f64, t2: f64) -> Result<(), NoiseError> {
    if t2 > 2.0 * t1 {
        return Err(NoiseError::CoherenceOrder { t1, t2 });
    }
    Ok(())
}

pub fn depolarize_prob_1q(f_1q: f64) -> Result<f64, NoiseError> {
    in_range("F_1q", f_1q, 2.0 / 3.0, 1.0)?;
    Ok(1.5 * (1.0 - f_1q))
}

pub fn depolarize_prob_2q(f_2q: f64) -> Result<f64, NoiseError> {
    in_range("F_2q", f_2q, 0.2, 1.0)?;
    Ok(1.25 * (1.0 - f_2q))
}

/// Pauli-twirled amplitude and phase damping over an idle period of `t` seconds.
pub fn idle_channel_probs(t: f64, t1: f64, t2: f64) -> Result<(f64, f64, f64), NoiseError> {
    if t.is_nan() || t < 0.0 {
        return Err(NoiseError::NegativeTime(t));
    }
    check_coherence(t1, t2)?;
    let relax = -(-t / t1).exp_m1();
    let dephase = -(-t / t2).exp_m1();
    let pxy = relax / 4.0;
    let pz = (dephase / 2.0 - pxy).max(0.0);
    Ok((pxy, pxy, pz))
}

/// Classical readout error: the reported bit flips with probability `1 - f_m`.
pub fn flip_measurement<R: Rng + ?Sized>(outcome: bool, f_m: f64, rng: &mut R) -> bool {
    let p = 1.0 - f_m;
    if p > 0.0 && rng.random::<f64>() < p {
        !outcome
    } else {
        outcome
    }
}

/// Flips a freshly reset qubit to |1⟩ with probability `1 - f_init`.
pub fn noisy_init<R: Rng + ?Sized>(
    qm: &mut QuantumManager,
    key: Key,
    f_init: f64,
    rng: &mut R,
) -> Result<bool, NoiseError> {
    let p = 1.0 - f_init;
    let flip = p > 0.0 && rng.random::<f64>() < p;
    if flip {
        qm.apply_pauli(key, Pauli::X)?;
    }
    Ok(flip)
}

/// Moves a fresh |Φ⁺⟩ to one of the other three Bell states with total
/// probability `1 - f_phys`, by applying X, Z or Y to `member`.
pub fn corrupt_bell_pair<R: Rng + ?Sized>(
    qm: &mut QuantumManager,
    member: Key,
    f_phys: f64,
    rng: &mut R,
) -> Result<Pauli, NoiseError> {
    let q = (1.0 - f_phys) / 3.0;
    let p = if q > 0.0 {
        qm.apply_pauli_channel_1(member, q, q, q, rng)?
    } else {
        Pauli::I
    };
    Ok(p)
}

/// Time of the last idle-noise application for each tracked qubit.
#[derive(Debug, Clone, Default)]
pub struct IdleRecord {
    last: HashMap<Key, Picos>,
}

impl IdleRecord {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn start(&mut self, key: Key, now: Picos) {
        self.last.insert(key, now);
    }

    pub fn stop(&mut self, key: Key) {
        self.last.remove(&key);
    }

    pub fn last_idle_time(&self, key: Key) -> Option<Picos> {
        self.last.get(&key).copied()
    }
}

/// Applies the idle channel accumulated since the qubit was last touched.
/// Untracked qubits are left alone.
pub fn apply_idle<R: Rng + ?Sized>(
    qm: &mut QuantumManager,
    key: Key,
    now: Picos,
    record: &mut IdleRecord,
    profile: &HardwareProfile,
    rng: &mut R,
) -> Result<(), NoiseError> {
    let Some(last) = record.last.get_mut(&key) else {
        return Ok(());
    };
    let t = ps_to_secs(now.saturating_sub(*last));
    *last = now;
    if t > 0.0 {
        let (px, py, pz) = idle_channel_probs(t, profile.t1, profile.t2)?;
        if px + py + pz > 0.0 {
            qm.apply_pauli_channel_1(key, px, py, pz, rng)?;
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::stabilizer::Basis;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol
    }

    #[test]
    fn depolarizing_probabilities() {
        assert_eq!(depolarize_prob_1q(1.0).unwrap(), 0.0);
        assert!(close(depolarize_prob_1q(0.999).unwrap(), 0.0015, 1e-15));
        assert!(close(depolarize_prob_1q(0.9995).unwrap(), 0.00075, 1e-15));
        assert!(depolarize_prob_1q(0.6).is_err());
        assert_eq!(depolarize_prob_2q(1.0).unwrap(), 0.0);
        assert!(close(depolarize_prob_2q(0.9991).unwrap(), 0.001125, 1e-15));
        assert!(close(depolarize_prob_2q(0.99955).unwrap(), 0.0005625, 1e-15));
        assert!(depolarize_prob_2q(0.1).is_err());
    }

    #[test]
    fn idle_probabilities() {
        assert_eq!(idle_channel_probs(0.0, 100.0, 2.0).unwrap(), (0.0, 0.0, 0.0));
        let (px, py, pz) = idle_channel_probs(0.0151, 100.0, 2.0).unwrap();
        assert!(close(px, 3.775e-5, 1e-8) && px == py);
        assert!(close(pz, 3.723e-3, 1e-6), "{pz}");
        let (px, py, pz) = idle_channel_probs(1e9, 1.0, 2.0).unwrap();
        assert!(close(px, 0.25, 1e-12) && close(py, 0.25, 1e-12) && close(pz, 0.25, 1e-12));
        let (px, py, pz) = idle_channel_probs(0.5, f64::INFINITY, 2.0).unwrap();
        assert_eq!((px, py), (0.0, 0.0));
        assert!(pz > 0.0);
        assert!(matches!(
            idle_channel_probs(1.0, 1.0, 3.0),
            Err(NoiseError::CoherenceOrder { .. })
        ));
        assert!(idle_channel_probs(-1.0, 1.0, 1.0).is_err());
    }

    #[test]
    fn measurement_flips() {
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        assert!(!flip_measurement(false, 1.0, &mut rng));
        assert!(flip_measurement(false, 0.0, &mut rng));
        let n = 100_000;
        let ones = (0..n).filter(|_| flip_measurement(false, 0.996, &mut rng)).count();
        let sigma = (n as f64 * 0.004 * 0.996).sqrt();
        assert!((ones as f64 - 400.0).abs() < 3.0 * sigma, "{ones}");
    }

    #[test]
    fn init_errors() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let mut qm = QuantumManager::new();
        qm.allocate(Key(0)).unwrap();
        noisy_init(&mut qm, Key(0), 1.0, &mut rng).unwrap();
        assert_eq!(qm.peek(&[(Key(0), Pauli::Z)]).unwrap(), 1);
        noisy_init(&mut qm, Key(0), 0.0, &mut rng).unwrap();
        assert_eq!(qm.peek(&[(Key(0), Pauli::Z)]).unwrap(), -1);
    }

    #[test]
    fn bell_corruption_stays_in_bell_basis() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        for _ in 0..200 {
            let mut qm = QuantumManager::new();
            qm.bell_pair(Key(0), Key(1)).unwrap();
            corrupt_bell_pair(&mut qm, Key(0), 0.5, &mut rng).unwrap();
            let xx = qm.peek(&[(Key(0), Pauli::X), (Key(1), Pauli::X)]).unwrap();
            let zz = qm.peek(&[(Key(0), Pauli::Z), (Key(1), Pauli::Z)]).unwrap();
            assert_eq!((xx.abs(), zz.abs()), (1, 1));
        }
    }

    #[test]
    fn idle_is_lazy_and_idempotent_at_one_instant() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let mut qm = QuantumManager::new();
        qm.allocate(Key(0)).unwrap();
        let mut rec = IdleRecord::new();
        rec.start(Key(0), 0);
        let mut profile = HardwareProfile::noiseless();
        profile.t1 = 1e-12;
        profile.t2 = 1e-12;
        apply_idle(&mut qm, Key(0), 0, &mut rec, &profile, &mut rng).unwrap();
        assert_eq!(qm.peek(&[(Key(0), Pauli::Z)]).unwrap(), 1);
        apply_idle(&mut qm, Key(0), 5_000, &mut rec, &profile, &mut rng).unwrap();
        assert_eq!(rec.last_idle_time(Key(0)), Some(5_000));
        let before = qm.measure(Key(0), Basis::Z, &mut rng).unwrap();
        apply_idle(&mut qm, Key(0), 5_000, &mut rec, &profile, &mut rng).unwrap();
        assert_eq!(qm.measure(Key(0), Basis::Z, &mut rng).unwrap(), before);
    }

    #[test]
    fn profile_validation() {
        HardwareProfile::baseline().validate().unwrap();
        HardwareProfile::noiseless().validate().unwrap();
        let mut p = HardwareProfile::baseline();
        p.t1 = 1.0;
        p.t2 = 3.0;
        assert!(p.validate().is_err());
        let mut p = HardwareProfile::baseline();
        p.eta_d = 1.2;
        assert!(p.validate().is_err());
    }

    #[test]
    fn biased_gate_channels() {
        let mut p = HardwareProfile::baseline();
        let uniform = p.gate_channel_1q().unwrap();
        assert!(uniform.iter().all(|&x| close(x, 0.0005, 1e-15)));
        p.gate_bias_1q = Some([0.0, 0.0, 2.0]);
        assert_eq!(p.gate_channel_1q().unwrap()[2], 1.5 * (1.0 - 0.999));
        let mut w = [0.0; 15];
        w[4] = 1.0;
        p.gate_bias_2q = Some(w);
        assert!(close(p.gate_channel_2q().unwrap()[4], 0.001125, 1e-15));
        p.gate_bias_2q = Some([0.0; 15]);
        assert!(p.validate().is_err());
    }

    #[test]
    fn infinite_coherence_round_trips_as_null() {
        let p = HardwareProfile::noiseless();
        let json = serde_json::to_string(&p).unwrap();
        assert!(json.contains("\"T1_s\":null"));
        let back: HardwareProfile = serde_json::from_str(&json).unwrap();
        assert_eq!(back, p);
        let partial: HardwareProfile = serde_json::from_str(r#"{"F_2q": 0.998}"#).unwrap();
        assert_eq!(partial.f_2q, 0.998);
        assert_eq!(partial.f_1q, 0.999);
        assert!(serde_json::from_str::<HardwareProfile>(r#"{"bogus": 1}"#).is_err());
    }
}
