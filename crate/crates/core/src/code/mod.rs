//! CSS codes; currently the Steane [[7,1,3]] code.

use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::noise::{NoiseError, NoisyDevice};
use crate::stabilizer::statevector::CircuitOp;
use crate::stabilizer::{Basis, Gate, Key, Pauli, PauliString, QuantumManager, StabilizerError};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CodeError {
    #[error("expected {expected} bits, got {got}")]
    Length { expected: usize, got: usize },
    #[error("block preparation rejected {0} times in a row")]
    PrepFailed(u32),
    #[error(transparent)]
    Noise(#[from] NoiseError),
    #[error(transparent)]
    Backend(#[from] StabilizerError),
}

/// Verification applied after the encoding circuit.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FtMode {
    None,
    #[default]
    Minimal,
    Standard,
}

/// Whether measured blocks are Hamming-corrected before the parity is read.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CecMode {
    #[default]
    Cec,
    None,
}

/// A CSS code whose X and Z checks share one classical parity-check matrix.
pub trait CssCode {
    fn name(&self) -> &'static str;
    /// Physical qubits per block.
    fn n(&self) -> usize;
    /// Rows of the parity-check matrix as qubit-index supports.
    fn checks(&self) -> Vec<Vec<usize>>;
    /// Index of the single bit to flip for a syndrome, if any.
    fn decode(&self, syndrome: &[bool]) -> Option<usize>;

    fn syndrome(&self, bits: &[bool]) -> Result<Vec<bool>, CodeError> {
        if bits.len() != self.n() {
            return Err(CodeError::Length {
                expected: self.n(),
                got: bits.len(),
            });
        }
        Ok(self
            .checks()
            .iter()
            .map(|row| row.iter().fold(false, |acc, &q| acc ^ bits[q]))
            .collect())
    }

    fn stabilizers(&self, p: Pauli) -> Vec<PauliString> {
        self.checks()
            .into_iter()
            .map(|row| PauliString::from_sparse(self.n(), row.into_iter().map(|q| (q, p))))
            .collect()
    }

    fn logical(&self, p: Pauli) -> PauliString {
        PauliString::from_sparse(self.n(), (0..self.n()).map(|q| (q, p)))
    }
}

pub const N: usize = 7;

/// Parity-check rows, 1-indexed: column j is the binary expansion of j.
pub const PARITY_CHECK: [[u8; N]; 3] = [
    [0, 0, 0, 1, 1, 1, 1],
    [0, 1, 1, 0, 0, 1, 1],
    [1, 0, 1, 0, 1, 0, 1],
];

/// Encoder for |0̄⟩ on 1-indexed data qubits: Hadamards, then CNOTs.
pub const ENCODER_H: [usize; 3] = [2, 3, 4];
pub const ENCODER_CNOTS: [(usize, usize); 8] =
    [(2, 1), (4, 6), (3, 7), (2, 5), (3, 1), (4, 7), (2, 6), (7, 5)];
/// Support of the weight-3 Z̄ representative checked with the ancilla.
pub const VERIFY_SUPPORT: [usize; 3] = [1, 6, 7];
pub const STANDARD_CHECKS: usize = 4;

#[derive(Debug, Clone, Copy, Default)]
pub struct Steane713;

impl CssCode for Steane713 {
    fn name(&self) -> &'static str {
        "steane713"
    }

    fn n(&self) -> usize {
        N
    }

    fn checks(&self) -> Vec<Vec<usize>> {
        PARITY_CHECK
            .iter()
            .map(|row| (0..N).filter(|&q| row[q] == 1).collect())
            .collect()
    }

    fn decode(&self, s: &[bool]) -> Option<usize> {
        let pos = s.iter().fold(0, |acc, &b| acc * 2 + b as usize);
        (pos != 0).then(|| pos - 1)
    }
}

pub fn hamming_syndrome(m: &[bool]) -> Result<[bool; 3], CodeError> {
    let s = Steane713.syndrome(m)?;
    Ok([s[0], s[1], s[2]])
}

/// Syndrome as the 1-based position it points at (0 for none).
pub fn syndrome_value(s: [bool; 3]) -> usize {
    4 * s[0] as usize + 2 * s[1] as usize + s[2] as usize
}

/// One decoded transversal readout.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct MeasuredBlock {
    pub m: [bool; N],
    pub s: [bool; 3],
    pub m_prime: [bool; N],
    pub logical_bit: bool,
}

pub fn correct_and_extract(m: &[bool], mode: CecMode) -> Result<MeasuredBlock, CodeError> {
    let s = hamming_syndrome(m)?;
    let m: [bool; N] = m.try_into().expect("length checked");
    let mut m_prime = m;
    if mode == CecMode::Cec {
        if let Some(q) = Steane713.decode(&s) {
            m_prime[q] = !m_prime[q];
        }
    }
    Ok(MeasuredBlock {
        m,
        s,
        m_prime,
        logical_bit: m_prime.iter().fold(false, |a, &b| a ^ b),
    })
}

/// Points in block preparation where an observer may act on the device.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum PrepStage {
    /// All eight qubits freshly initialized.
    Initialized,
    /// After the i-th encoder gate (Hadamards first, 0-based).
    EncoderGate(usize),
    /// Block accepted; ancilla released.
    Accepted,
}

/// The encoder as a gate list over 0-based data indices.
pub fn encoder_gates() -> Vec<(Gate, Vec<usize>)> {
    ENCODER_H
        .iter()
        .map(|&q| (Gate::H, vec![q - 1]))
        .chain(ENCODER_CNOTS.iter().map(|&(c, t)| (Gate::Cnot, vec![c - 1, t - 1])))
        .collect()
}

/// Encoder plus one verification round as an oracle circuit on 8 qubits,
/// ancilla last.
pub fn encoder_circuit(verify: bool) -> Vec<CircuitOp> {
    let mut ops: Vec<CircuitOp> = encoder_gates()
        .into_iter()
        .map(|(g, t)| CircuitOp::Gate(g, t))
        .collect();
    if verify {
        for q in VERIFY_SUPPORT {
            ops.push(CircuitOp::Gate(Gate::Cnot, vec![q - 1, N]));
        }
        ops.push(CircuitOp::Measure(N, Basis::Z));
    }
    ops
}

/// Prepares |0̄⟩ on `data` with verification on `ancilla`, retrying on
/// rejection. Returns the number of attempts.
pub fn encode_zero<R: Rng + ?Sized>(
    dev: &mut NoisyDevice,
    data: &[Key; N],
    ancilla: Key,
    mode: FtMode,
    retry_cap: u32,
    rng: &mut R,
) -> Result<u32, CodeError> {
    encode_zero_observed(dev, data, ancilla, mode, retry_cap, rng, &mut |_, _| Ok(()))
}

/// As [`encode_zero`], calling `observe` at every [`PrepStage`].
pub fn encode_zero_observed<R: Rng + ?Sized>(
    dev: &mut NoisyDevice,
    data: &[Key; N],
    ancilla: Key,
    mode: FtMode,
    retry_cap: u32,
    rng: &mut R,
    observe: &mut dyn FnMut(&mut NoisyDevice, PrepStage) -> Result<(), CodeError>,
) -> Result<u32, CodeError> {
    let checks = match mode {
        FtMode::None => 0,
        FtMode::Minimal => 1,
        FtMode::Standard => STANDARD_CHECKS,
    };
    for attempt in 1..=retry_cap.max(1) {
        dev.counters.prep_attempts += 1;
        for &k in data.iter().chain([&ancilla]) {
            dev.init(k, rng)?;
        }
        observe(dev, PrepStage::Initialized)?;
        for (i, (g, t)) in encoder_gates().into_iter().enumerate() {
            match g {
                Gate::Cnot => dev.cnot(data[t[0]], data[t[1]], rng)?,
                _ => dev.gate1(g, data[t[0]], rng)?,
            }
            observe(dev, PrepStage::EncoderGate(i))?;
        }
        let mut accepted = true;
        for round in 0..checks {
            if round > 0 {
                dev.init(ancilla, rng)?;
            }
            for q in VERIFY_SUPPORT {
                dev.cnot(data[q - 1], ancilla, rng)?;
            }
            if dev.measure(ancilla, Basis::Z, rng)? {
                accepted = false;
                break;
            }
        }
        dev.release(ancilla, rng)?;
        if accepted {
            observe(dev, PrepStage::Accepted)?;
            return Ok(attempt);
        }
    }
    Err(CodeError::PrepFailed(retry_cap.max(1)))
}

/// Qubit-wise CNOT from `control` block to `target` block, with gate noise.
pub fn transversal_cnot<R: Rng + ?Sized>(
    dev: &mut NoisyDevice,
    control: &[Key; N],
    target: &[Key; N],
    rng: &mut R,
) -> Result<(), CodeError> {
    if let Some(k) = control.iter().find(|k| target.contains(k)) {
        return Err(StabilizerError::DuplicateKey(*k).into());
    }
    for (&c, &t) in control.iter().zip(target) {
        dev.cnot(c, t, rng)?;
    }
    Ok(())
}

/// Noiseless syndrome extraction and single-qubit correction: Z-type checks
/// locate an X error, then X-type checks locate a Z error.
pub fn ideal_recovery<R: Rng + ?Sized>(
    qm: &mut QuantumManager,
    block: &[Key; N],
    rng: &mut R,
) -> Result<[[bool; 3]; 2], CodeError> {
    let mut syndromes = [[false; 3]; 2];
    for (i, (check, fix)) in [(Pauli::Z, Pauli::X), (Pauli::X, Pauli::Z)].into_iter().enumerate() {
        for (r, row) in Steane713.checks().iter().enumerate() {
            let terms: Vec<(Key, Pauli)> = row.iter().map(|&q| (block[q], check)).collect();
            syndromes[i][r] = qm.measure_observable(&terms, rng)?;
        }
        if let Some(q) = Steane713.decode(&syndromes[i]) {
            qm.apply_pauli(block[q], fix)?;
        }
    }
    Ok(syndromes)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::noise::HardwareProfile;
    use crate::stabilizer::statevector::sv_oracle_run;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn bits(s: &str) -> Vec<bool> {
        s.chars().map(|c| c == '1').collect()
    }

    fn block(base: u32) -> [Key; N] {
        std::array::from_fn(|i| Key(base + i as u32))
    }

    fn peek_all(qm: &QuantumManager, keys: &[Key; N], p: &PauliString) -> i8 {
        let terms: Vec<_> = p
            .iter()
            .enumerate()
            .filter(|(_, x)| *x != Pauli::I)
            .map(|(q, x)| (keys[q], x))
            .collect();
        qm.peek(&terms).unwrap() * p.sign()
    }

    #[test]
    fn code_structure() {
        let code = Steane713;
        for j in 1..=N {
            let col: usize = (0..3).map(|r| (PARITY_CHECK[r][j - 1] as usize) << (2 - r)).sum();
            assert_eq!(col, j);
        }
        let mut all = code.stabilizers(Pauli::X);
        all.extend(code.stabilizers(Pauli::Z));
        let (lx, lz) = (code.logical(Pauli::X), code.logical(Pauli::Z));
        for a in &all {
            for b in &all {
                assert!(a.commutes_with(b));
            }
            assert!(a.commutes_with(&lx) && a.commutes_with(&lz));
        }
        assert!(!lx.commutes_with(&lz));
        let z = code.stabilizers(Pauli::Z);
        let verify = lz.mul(&z[0]).pauli.mul(&z[1]).pauli;
        assert_eq!(verify, "ZIIIIZZ".parse().unwrap());
    }

    #[test]
    fn syndromes() {
        assert_eq!(hamming_syndrome(&bits("0000000")).unwrap(), [false; 3]);
        assert_eq!(hamming_syndrome(&bits("0000100")).unwrap(), [true, false, true]);
        assert_eq!(hamming_syndrome(&bits("1010101")).unwrap(), [false; 3]);
        assert!(matches!(
            hamming_syndrome(&bits("101")),
            Err(CodeError::Length { expected: 7, got: 3 })
        ));
    }

    #[test]
    fn correction_examples() {
        let b = correct_and_extract(&bits("0000100"), CecMode::Cec).unwrap();
        assert_eq!(b.m_prime.to_vec(), bits("0000000"));
        assert!(!b.logical_bit);
        assert!(correct_and_extract(&bits("0000100"), CecMode::None).unwrap().logical_bit);
        let b = correct_and_extract(&bits("1010000"), CecMode::Cec).unwrap();
        assert_eq!(syndrome_value(b.s), 2);
        assert_eq!(b.m_prime.to_vec(), bits("1110000"));
        assert!(b.logical_bit);
    }

    #[test]
    fn encoder_matches_oracle() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let run = sv_oracle_run(8, &encoder_circuit(true), &mut rng).unwrap();
        assert_eq!(run.outcomes, vec![false]);
        let code = Steane713;
        let mut ops = code.stabilizers(Pauli::X);
        ops.extend(code.stabilizers(Pauli::Z));
        ops.push(code.logical(Pauli::Z));
        for s in ops {
            let wide = s.tensor(&PauliString::identity(1));
            assert!((run.state.expectation(&wide).unwrap() - 1.0).abs() < 1e-9, "{s}");
        }
    }

    fn noiseless_block(mode: FtMode) -> (NoisyDevice, [Key; N], u32) {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let mut dev = NoisyDevice::new(HardwareProfile::noiseless()).unwrap();
        let data = block(0);
        let attempts = encode_zero(&mut dev, &data, Key(7), mode, 100, &mut rng).unwrap();
        (dev, data, attempts)
    }

    #[test]
    fn noiseless_encoding_in_all_modes() {
        // six stabilizers plus Z̄ fix the block state uniquely
        let code = Steane713;
        for mode in [FtMode::None, FtMode::Minimal, FtMode::Standard] {
            let (dev, data, attempts) = noiseless_block(mode);
            assert_eq!(attempts, 1);
            let mut values = Vec::new();
            for p in [Pauli::X, Pauli::Z] {
                for s in code.stabilizers(p) {
                    values.push(peek_all(&dev.qm, &data, &s));
                }
            }
            values.push(peek_all(&dev.qm, &data, &code.logical(Pauli::Z)));
            assert!(values.iter().all(|&v| v == 1), "{mode:?}");
            assert!(!dev.qm.contains(Key(7)));
        }
        let (dev, _, _) = noiseless_block(FtMode::Minimal);
        assert_eq!(dev.counters.two_qubit_gates, 11);
        assert_eq!(dev.counters.one_qubit_gates, 3);
        assert_eq!(dev.counters.measurements, 1);
        let (dev, _, _) = noiseless_block(FtMode::Standard);
        assert_eq!(dev.counters.measurements, 4);
    }

    #[test]
    fn verification_rejects_x_on_checked_support() {
        for q in VERIFY_SUPPORT {
            let mut rng = ChaCha8Rng::seed_from_u64(4);
            let mut dev = NoisyDevice::new(HardwareProfile::noiseless()).unwrap();
            let data = block(0);
            let mut injected = false;
            let result = encode_zero_observed(
                &mut dev,
                &data,
                Key(7),
                FtMode::Minimal,
                1,
                &mut rng,
                &mut |d, stage| {
                    if stage == PrepStage::EncoderGate(10) && !injected {
                        injected = true;
                        d.qm.apply_pauli(data[q - 1], Pauli::X)?;
                    }
                    Ok(())
                },
            );
            assert_eq!(result, Err(CodeError::PrepFailed(1)), "qubit {q}");
        }
    }

    #[test]
    fn retry_after_rejection() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let mut dev = NoisyDevice::new(HardwareProfile::noiseless()).unwrap();
        let data = block(0);
        let mut first = true;
        let attempts = encode_zero_observed(
            &mut dev,
            &data,
            Key(7),
            FtMode::Minimal,
            100,
            &mut rng,
            &mut |d, stage| {
                if stage == PrepStage::EncoderGate(10) && first {
                    first = false;
                    d.qm.apply_pauli(data[0], Pauli::X)?;
                }
                Ok(())
            },
        )
        .unwrap();
        assert_eq!(attempts, 2);
        assert_eq!(dev.counters.prep_attempts, 2);
        assert_eq!(peek_all(&dev.qm, &data, &Steane713.logical(Pauli::Z)), 1);
    }

    #[test]
    fn transversal_cnot_on_zero_blocks() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let mut dev = NoisyDevice::new(HardwareProfile::noiseless()).unwrap();
        let (a, b) = (block(0), block(10));
        encode_zero(&mut dev, &a, Key(7), FtMode::Minimal, 10, &mut rng).unwrap();
        encode_zero(&mut dev, &b, Key(17), FtMode::Minimal, 10, &mut rng).unwrap();
        for &k in &b {
            dev.qm.apply_pauli(k, Pauli::X).unwrap();
        }
        transversal_cnot(&mut dev, &a, &b, &mut rng).unwrap();
        let lz = Steane713.logical(Pauli::Z);
        assert_eq!(peek_all(&dev.qm, &a, &lz), 1);
        assert_eq!(peek_all(&dev.qm, &b, &lz), -1);
        assert!(transversal_cnot(&mut dev, &a, &a, &mut rng).is_err());
    }

    #[test]
    fn ideal_recovery_cases() {
        let lz = Steane713.logical(Pauli::Z);
        let (mut dev, data, _) = noiseless_block(FtMode::Minimal);
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let before = dev.qm.group(data[0]).unwrap().clone();
        assert_eq!(ideal_recovery(&mut dev.qm, &data, &mut rng).unwrap(), [[false; 3]; 2]);
        assert_eq!(peek_all(&dev.qm, &data, &lz), 1);
        for s in Steane713.stabilizers(Pauli::X) {
            assert_eq!(peek_all(&dev.qm, &data, &s), 1);
        }
        assert_eq!(
            before.tableau().stabilizers().len(),
            dev.qm.group(data[0]).unwrap().tableau().stabilizers().len()
        );

        let (mut dev, data, _) = noiseless_block(FtMode::Minimal);
        dev.qm.apply_pauli(data[2], Pauli::X).unwrap();
        assert_eq!(peek_all(&dev.qm, &data, &lz), -1);
        let s = ideal_recovery(&mut dev.qm, &data, &mut rng).unwrap();
        assert_eq!(s[0], [false, true, true]);
        assert_eq!(peek_all(&dev.qm, &data, &lz), 1);

        let (mut dev, data, _) = noiseless_block(FtMode::Minimal);
        dev.qm.apply_pauli(data[1], Pauli::X).unwrap();
        dev.qm.apply_pauli(data[2], Pauli::X).unwrap();
        ideal_recovery(&mut dev.qm, &data, &mut rng).unwrap();
        assert_eq!(peek_all(&dev.qm, &data, &lz), -1);
    }
}
