//! Self-checks shared by the test suite and the `validate` command.

pub mod oracle;

use std::collections::HashSet;

use crate::code::{correct_and_extract, hamming_syndrome, CecMode, N};
use crate::network::{ProtocolSettings, SimConfig, Topology};
use crate::noise::HardwareProfile;
use crate::protocol::{run_episode, run_episode_with, FaultPlan, ProtocolError, Stage};
use crate::stabilizer::{Key, Pauli};

fn noiseless_chain(nodes: usize, link_km: f64) -> SimConfig {
    SimConfig::new(
        Topology::chain(nodes - 1, link_km).expect("at least two nodes"),
        HardwareProfile::noiseless(),
        ProtocolSettings::default(),
    )
    .expect("valid defaults")
}

#[derive(Debug, Clone, Default)]
pub struct SoundnessReport {
    pub episodes: usize,
    /// `(nodes, seed, fidelity, clean_swaps)` of every episode that was not
    /// perfect.
    pub bad: Vec<(usize, u64, f64, bool)>,
}

/// Noiseless episodes must end with fidelity exactly 1 and clean swap readouts.
pub fn zero_noise_soundness(
    node_counts: &[usize],
    seeds: u64,
    link_km: f64,
) -> Result<SoundnessReport, ProtocolError> {
    let mut report = SoundnessReport::default();
    for &nodes in node_counts {
        let cfg = noiseless_chain(nodes, link_km);
        for seed in 0..seeds {
            let r = run_episode(&cfg, seed)?;
            report.episodes += 1;
            if !r.success || r.fidelity != 1.0 || !r.clean_swaps {
                report.bad.push((nodes, seed, r.fidelity, r.clean_swaps));
            }
        }
    }
    Ok(report)
}

#[derive(Debug, Clone, Default)]
pub struct FaultReport {
    pub stages: usize,
    pub injections: usize,
    pub failures: Vec<(FaultPlan, f64)>,
}

/// Injects every single-qubit Pauli on every live qubit at every stage
/// boundary of a noiseless three-node episode and checks the delivered pair.
pub fn single_fault_injection(seed: u64, mode: CecMode) -> Result<FaultReport, ProtocolError> {
    let mut cfg = noiseless_chain(3, 20.0);
    cfg.protocol.cec_mode = mode;
    let (_, log) = run_episode_with(&cfg, seed, None, true)?;
    let log = log.expect("stages recorded");
    let mut seen: HashSet<Stage> = HashSet::new();
    let mut report = FaultReport::default();
    for (stage, keys) in log {
        if !seen.insert(stage) {
            continue;
        }
        report.stages += 1;
        for key in keys {
            for pauli in Pauli::NON_IDENTITY {
                let plan = FaultPlan { stage, key, pauli };
                let (r, _) = run_episode_with(&cfg, seed, Some(plan), false)?;
                report.injections += 1;
                if !r.success || r.fidelity != 1.0 {
                    report.failures.push((plan, r.fidelity));
                }
            }
        }
    }
    Ok(report)
}

/// Counted resources of one first-attempt noiseless episode next to the
/// closed forms.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ResourceRow {
    pub nodes: usize,
    /// `[qubits, operations, two-qubit gates, one-qubit gates, measurements]`
    pub counted: [u64; 5],
    pub expected: [u64; 5],
}

impl ResourceRow {
    pub fn matches(&self) -> bool {
        self.counted == self.expected
    }
}

pub fn expected_resources(nodes: usize) -> [u64; 5] {
    let n = nodes as u64;
    [30 * (n - 1), 93 * n - 121, 43 * n - 50, 20 * n - 27, 30 * n - 44]
}

pub fn resource_accounting(node_counts: &[usize], seed: u64) -> Result<Vec<ResourceRow>, ProtocolError> {
    node_counts
        .iter()
        .map(|&nodes| {
            let cfg = noiseless_chain(nodes, 20.0);
            let c = run_episode(&cfg, seed)?.counters;
            Ok(ResourceRow {
                nodes,
                counted: [
                    cfg.topology.total_qubits() as u64,
                    c.operations(),
                    c.two_qubit_gates,
                    c.one_qubit_gates,
                    c.measurements,
                ],
                expected: expected_resources(nodes),
            })
        })
        .collect()
}

#[derive(Debug, Clone, Default)]
pub struct DecoderReport {
    pub inputs: usize,
    pub bad_inputs: Vec<u8>,
    pub corrections_checked: usize,
    pub bad_corrections: Vec<(u8, usize)>,
}

fn to_bits(v: u8) -> [bool; N] {
    std::array::from_fn(|i| v >> (N - 1 - i) & 1 == 1)
}

/// Every 7-bit word decodes to a codeword at distance at most one, and every
/// single-bit error on every codeword is undone.
pub fn decoder_exhaustive() -> DecoderReport {
    let mut report = DecoderReport::default();
    let mut codewords = Vec::new();
    for v in 0..128u8 {
        let m = to_bits(v);
        let b = correct_and_extract(&m, CecMode::Cec).expect("7 bits");
        report.inputs += 1;
        let flipped = m.iter().zip(&b.m_prime).filter(|(a, b)| a != b).count();
        let clean = hamming_syndrome(&b.m_prime).expect("7 bits") == [false; 3];
        if flipped > 1 || !clean {
            report.bad_inputs.push(v);
        }
        if b.s == [false; 3] {
            codewords.push(m);
        }
    }
    for (ci, c) in codewords.iter().enumerate() {
        let parity = c.iter().fold(false, |a, &b| a ^ b);
        for i in 0..N {
            let mut e = *c;
            e[i] = !e[i];
            let b = correct_and_extract(&e, CecMode::Cec).expect("7 bits");
            report.corrections_checked += 1;
            if b.m_prime != *c || b.logical_bit != parity {
                report.bad_corrections.push((ci as u8, i));
            }
        }
    }
    report
}

/// Keys of the two end blocks of a chain, for callers inspecting final states.
pub fn end_blocks(links: usize) -> ([Key; N], [Key; N]) {
    (crate::protocol::data_keys(0, 0), crate::protocol::data_keys(links - 1, 1))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn decoder_is_exhaustively_correct() {
        let r = decoder_exhaustive();
        assert_eq!(r.inputs, 128);
        assert_eq!(r.corrections_checked, 16 * 7);
        assert!(r.bad_inputs.is_empty() && r.bad_corrections.is_empty());
    }

    #[test]
    fn closed_forms_at_two_nodes() {
        assert_eq!(expected_resources(2), [30, 65, 36, 13, 16]);
        let rows = resource_accounting(&[2, 3], 0).unwrap();
        assert!(rows.iter().all(|r| r.matches()), "{rows:?}");
    }

    #[test]
    fn small_soundness_run() {
        let r = zero_noise_soundness(&[2, 4], 5, 20.0).unwrap();
        assert_eq!(r.episodes, 10);
        assert!(r.bad.is_empty(), "{:?}", r.bad);
    }
}
