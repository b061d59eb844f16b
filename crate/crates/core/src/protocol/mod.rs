//! The encoded repeater protocol: heralding, block preparation, teleported
//! CNOT, encoded swapping with classical correction and Pauli-frame update.

mod episode;

use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::code::{ideal_recovery, CodeError, PrepStage, N};
use crate::kernel::{Picos, RunError, ScheduleError};
use crate::noise::{Counters, NoiseError, NoisyDevice};
use crate::stabilizer::{Key, Pauli, QuantumManager, StabilizerError};

pub use episode::{run_episode, run_episode_with, FaultPlan, StageLog};

#[derive(Debug, Error)]
pub enum ProtocolError {
    #[error("duplicate frame contribution from node {0}")]
    DuplicateContribution(usize),
    #[error("unexpected message {0:?}")]
    UnexpectedMessage(MessageKind),
    #[error(transparent)]
    Code(#[from] CodeError),
    #[error(transparent)]
    Noise(#[from] NoiseError),
    #[error(transparent)]
    Backend(#[from] StabilizerError),
    #[error(transparent)]
    Schedule(#[from] ScheduleError),
    #[error(transparent)]
    Run(#[from] Box<RunError<ProtocolError>>),
}

/// Memory layout: every link side owns 7 communication, 7 data and one
/// ancilla qubit. Side 0 sits on the link's left node, side 1 on the right.
pub fn side_base(link: usize, side: usize) -> u32 {
    ((2 * link + side) * 15) as u32
}

pub fn comm_key(link: usize, side: usize, i: usize) -> Key {
    Key(side_base(link, side) + i as u32)
}

pub fn data_keys(link: usize, side: usize) -> [Key; N] {
    std::array::from_fn(|i| Key(side_base(link, side) + (N + i) as u32))
}

pub fn ancilla_key(link: usize, side: usize) -> Key {
    Key(side_base(link, side) + 2 * N as u32)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum MessageKind {
    TcnotAliceResult,
    TcnotBobResult,
    TcnotDone,
    QreFrame,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct FrameContribution {
    pub b_x: bool,
    pub b_z: bool,
    pub origin: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Payload {
    Bits([bool; N]),
    Frame(FrameContribution),
    Empty,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ProtocolMessage {
    pub kind: MessageKind,
    pub sender: usize,
    pub receiver: usize,
    /// Link the message concerns; unused for frame messages.
    pub link: usize,
    pub payload: Payload,
    pub send_time: Picos,
    pub arrival_time: Picos,
}

/// Points between protocol steps where faults may be injected.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Stage {
    PairDelivered { link: usize, slot: usize },
    Prep { link: usize, side: usize, step: PrepStage },
    /// Left block rotated to |+̄⟩.
    LogicalPlus { link: usize },
    /// Local CNOTs done at both ends, nothing measured yet.
    TcnotEntangled { link: usize },
    TcnotCorrected { link: usize, side: usize },
    /// Transversal CNOT done, before the left block is rotated.
    SwapEntangled { node: usize },
    /// Left block rotated, nothing measured yet.
    SwapRotated { node: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Failure {
    Timeout,
    PrepFailed,
}

/// Outcome of one episode.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub success: bool,
    pub failure: Option<Failure>,
    /// End-to-end logical fidelity; 0 for failed episodes.
    pub fidelity: f64,
    pub latency_s: f64,
    pub counters: Counters,
    pub contributions: usize,
    pub frame: (bool, bool),
    /// True if every swap readout had syndrome 000 in both bases.
    pub clean_swaps: bool,
}

/// XOR of all contributions: `(b_x, b_z)`.
pub fn aggregate_frame(contributions: &[FrameContribution]) -> (bool, bool) {
    contributions
        .iter()
        .fold((false, false), |(x, z), c| (x ^ c.b_x, z ^ c.b_z))
}

/// Applies the aggregated frame to a block: `b_x` selects Z̄, `b_z` selects X̄.
pub fn apply_frame<R: Rng + ?Sized>(
    dev: &mut NoisyDevice,
    block: &[Key; N],
    frame: (bool, bool),
    rng: &mut R,
) -> Result<(), ProtocolError> {
    for &k in block {
        match frame {
            (true, true) => dev.pauli(k, Pauli::Y, rng)?,
            (true, false) => dev.pauli(k, Pauli::Z, rng)?,
            (false, true) => dev.pauli(k, Pauli::X, rng)?,
            (false, false) => {}
        }
    }
    Ok(())
}

/// Logical correlator `P̄ ⊗ P̄` over two blocks.
pub fn logical_correlator(
    qm: &QuantumManager,
    a: &[Key; N],
    b: &[Key; N],
    p: Pauli,
) -> Result<i8, StabilizerError> {
    let terms: Vec<(Key, Pauli)> = a.iter().chain(b).map(|&k| (k, p)).collect();
    qm.peek(&terms)
}

/// Fidelity with the logical Φ⁺ from its three correlators. With full-weight
/// representatives Ȳ = −Y⊗7, so ȲȲ is the plain Y⊗14 product.
pub fn bell_fidelity(xx: i8, yy: i8, zz: i8) -> f64 {
    (1.0 + xx as f64 - yy as f64 + zz as f64) / 4.0
}

/// Ideal recovery on both blocks, then the logical Φ⁺ fidelity.
pub fn extract_fidelity<R: Rng + ?Sized>(
    qm: &mut QuantumManager,
    a: &[Key; N],
    b: &[Key; N],
    rng: &mut R,
) -> Result<f64, ProtocolError> {
    ideal_recovery(qm, a, rng)?;
    ideal_recovery(qm, b, rng)?;
    let c = |p| logical_correlator(qm, a, b, p);
    Ok(bell_fidelity(c(Pauli::X)?, c(Pauli::Y)?, c(Pauli::Z)?))
}
