use rand_chacha::ChaCha8Rng;

use super::{
    aggregate_frame, ancilla_key, apply_frame, comm_key, data_keys, extract_fidelity, Failure, FrameContribution,
    MessageKind, Payload, ProtocolError, ProtocolMessage, RunRecord, Stage,
};
use crate::code::{correct_and_extract, encode_zero_observed, transversal_cnot, CodeError, N};
use crate::kernel::{ps_to_secs, secs_to_ps, EventHandle, Picos, RngStreams, Timeline};
use crate::network::{
    classical_latency, herald_attempt_period, herald_success_probability, sample_herald_attempts, SimConfig,
};
use crate::noise::NoisyDevice;
use crate::stabilizer::{Basis, Gate, Key, Pauli, StabilizerError};

/// A single Pauli injected on `key` the first time `stage` is reached.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct FaultPlan {
    pub stage: Stage,
    pub key: Key,
    pub pauli: Pauli,
}

/// Every stage boundary reached, with the qubits live at that moment.
pub type StageLog = Vec<(Stage, Vec<Key>)>;

#[derive(Debug, Default)]
struct Faults {
    plan: Option<FaultPlan>,
    fired: bool,
    log: Option<StageLog>,
}

impl Faults {
    fn hit(&mut self, dev: &mut NoisyDevice, stage: Stage) -> Result<(), StabilizerError> {
        if let Some(log) = &mut self.log {
            log.push((stage, dev.qm.keys()));
        }
        if let Some(plan) = self.plan {
            if !self.fired && plan.stage == stage {
                self.fired = true;
                if dev.qm.contains(plan.key) {
                    dev.qm.apply_pauli(plan.key, plan.pauli)?;
                }
            }
        }
        Ok(())
    }
}

#[derive(Debug)]
enum Ev {
    NodeStart(usize),
    PairReady { link: usize, slot: usize },
    Deliver(ProtocolMessage),
    Timeout,
}

/// Teleported-CNOT progress of one link end.
#[derive(Debug, Default, Clone, Copy)]
struct Side {
    measured: bool,
    partner_bits: Option<[bool; N]>,
    corrected: bool,
    partner_done: bool,
    done: bool,
}

struct Episode<'a> {
    cfg: &'a SimConfig,
    dev: NoisyDevice,
    rng: ChaCha8Rng,
    streams: RngStreams,
    faults: Faults,
    started: Vec<bool>,
    ready: Vec<usize>,
    sides: Vec<[Side; 2]>,
    swapped: Vec<bool>,
    contributions: Vec<FrameContribution>,
    clean_swaps: bool,
    timeout: Option<EventHandle>,
    finished: Option<(Picos, Option<Failure>)>,
    fidelity: f64,
    frame: (bool, bool),
}

impl<'a> Episode<'a> {
    fn nodes(&self) -> usize {
        self.cfg.topology.num_nodes()
    }

    fn send(
        &mut self,
        tl: &mut Timeline<Ev>,
        kind: MessageKind,
        sender: usize,
        receiver: usize,
        link: usize,
        payload: Payload,
    ) -> Result<(), ProtocolError> {
        let delay = classical_latency(&self.cfg.topology, sender, receiver, &self.cfg.hardware)
            .expect("nodes on the chain");
        let send_time = tl.now();
        let arrival_time = send_time + secs_to_ps(delay);
        let msg = ProtocolMessage {
            kind,
            sender,
            receiver,
            link,
            payload,
            send_time,
            arrival_time,
        };
        tl.schedule_at(arrival_time, Ev::Deliver(msg))?;
        Ok(())
    }

    fn handle(&mut self, tl: &mut Timeline<Ev>, ev: Ev) -> Result<(), ProtocolError> {
        self.dev.set_now(tl.now());
        match ev {
            Ev::NodeStart(node) => self.node_start(tl, node),
            Ev::PairReady { link, slot } => self.pair_ready(tl, link, slot),
            Ev::Deliver(msg) => self.deliver(tl, msg),
            Ev::Timeout => {
                self.fail(tl, Failure::Timeout);
                Ok(())
            }
        }
    }

    fn fail(&mut self, tl: &mut Timeline<Ev>, failure: Failure) {
        self.finished = Some((tl.now(), Some(failure)));
        tl.clear();
    }

    fn node_start(&mut self, tl: &mut Timeline<Ev>, node: usize) -> Result<(), ProtocolError> {
        self.started[node] = true;
        let links = self.cfg.topology.num_links();
        for link in [node.checked_sub(1), (node < links).then_some(node)].into_iter().flatten() {
            if self.started[link] && self.started[link + 1] {
                self.start_heralding(tl, link)?;
            }
        }
        Ok(())
    }

    /// All seven slots of the link retry independently until they succeed.
    fn start_heralding(&mut self, tl: &mut Timeline<Ev>, link: usize) -> Result<(), ProtocolError> {
        let km = self.cfg.topology.link_km(link);
        let p = herald_success_probability(&self.cfg.hardware, km);
        let period = secs_to_ps(herald_attempt_period(&self.cfg.hardware, km));
        let mut rng = self.streams.stream(1 + link as u64);
        for slot in 0..N {
            let Some(attempts) = sample_herald_attempts(p, &mut rng) else {
                continue;
            };
            self.dev.counters.heralding_attempts += attempts;
            let at = tl.now().saturating_add(attempts.saturating_mul(period));
            tl.schedule_at(at, Ev::PairReady { link, slot })?;
        }
        Ok(())
    }

    fn pair_ready(&mut self, tl: &mut Timeline<Ev>, link: usize, slot: usize) -> Result<(), ProtocolError> {
        let (a, b) = (comm_key(link, 0, slot), comm_key(link, 1, slot));
        self.dev.bell_pair(a, b, &mut self.rng)?;
        self.faults.hit(&mut self.dev, Stage::PairDelivered { link, slot })?;
        self.ready[link] += 1;
        if self.ready[link] == N {
            self.link_ready(tl, link)?;
        }
        Ok(())
    }

    /// Encodes both blocks, then runs the local half of the teleported CNOT
    /// at each end and sends the outcomes across.
    fn link_ready(&mut self, tl: &mut Timeline<Ev>, link: usize) -> Result<(), ProtocolError> {
        let proto = &self.cfg.protocol;
        for side in 0..2 {
            let faults = &mut self.faults;
            let result = encode_zero_observed(
                &mut self.dev,
                &data_keys(link, side),
                ancilla_key(link, side),
                proto.ft_mode,
                proto.prep_retry_cap,
                &mut self.rng,
                &mut |dev, step| Ok(faults.hit(dev, Stage::Prep { link, side, step })?),
            );
            match result {
                Ok(_) => {}
                Err(CodeError::PrepFailed(_)) => {
                    self.fail(tl, Failure::PrepFailed);
                    return Ok(());
                }
                Err(e) => return Err(e.into()),
            }
        }
        let (alice, bob) = (data_keys(link, 0), data_keys(link, 1));
        for &k in &alice {
            self.dev.gate1(Gate::H, k, &mut self.rng)?;
        }
        self.faults.hit(&mut self.dev, Stage::LogicalPlus { link })?;

        for i in 0..N {
            self.dev.cnot(alice[i], comm_key(link, 0, i), &mut self.rng)?;
            self.dev.cnot(comm_key(link, 1, i), bob[i], &mut self.rng)?;
        }
        self.faults.hit(&mut self.dev, Stage::TcnotEntangled { link })?;

        let mut bits = [[false; N]; 2];
        for i in 0..N {
            for (side, basis) in [(0, Basis::Z), (1, Basis::X)] {
                let c = comm_key(link, side, i);
                bits[side][i] = self.dev.measure(c, basis, &mut self.rng)?;
                self.dev.release(c, &mut self.rng)?;
            }
        }
        for side in 0..2 {
            self.sides[link][side].measured = true;
        }
        let (left, right) = (link, link + 1);
        self.send(tl, MessageKind::TcnotAliceResult, left, right, link, Payload::Bits(bits[0]))?;
        self.send(tl, MessageKind::TcnotBobResult, right, left, link, Payload::Bits(bits[1]))?;
        for side in 0..2 {
            self.try_correct(tl, link, side)?;
        }
        Ok(())
    }

    fn deliver(&mut self, tl: &mut Timeline<Ev>, msg: ProtocolMessage) -> Result<(), ProtocolError> {
        let link = msg.link;
        let side = if msg.receiver == link { 0 } else { 1 };
        match (msg.kind, msg.payload) {
            (MessageKind::TcnotAliceResult, Payload::Bits(bits)) if side == 1 => {
                self.sides[link][1].partner_bits = Some(bits);
                self.try_correct(tl, link, 1)
            }
            (MessageKind::TcnotBobResult, Payload::Bits(bits)) if side == 0 => {
                self.sides[link][0].partner_bits = Some(bits);
                self.try_correct(tl, link, 0)
            }
            (MessageKind::TcnotDone, Payload::Empty) => {
                self.sides[link][side].partner_done = true;
                self.check_done(tl, link, side)
            }
            (MessageKind::QreFrame, Payload::Frame(c)) if msg.receiver == 0 => {
                if self.contributions.iter().any(|x| x.origin == c.origin) {
                    return Err(ProtocolError::DuplicateContribution(c.origin));
                }
                self.contributions.push(c);
                self.check_complete(tl)
            }
            (kind, _) => Err(ProtocolError::UnexpectedMessage(kind)),
        }
    }

    /// Applies the partner's outcomes once both they and the local
    /// measurements are available: X on the target block from Alice's bits,
    /// Z on the control block from Bob's.
    fn try_correct(&mut self, tl: &mut Timeline<Ev>, link: usize, side: usize) -> Result<(), ProtocolError> {
        let s = self.sides[link][side];
        let Some(bits) = s.partner_bits else {
            return Ok(());
        };
        if !s.measured || s.corrected {
            return Ok(());
        }
        let fix = if side == 1 { Pauli::X } else { Pauli::Z };
        for (k, flip) in data_keys(link, side).into_iter().zip(bits) {
            if flip {
                self.dev.pauli(k, fix, &mut self.rng)?;
            }
        }
        self.sides[link][side].corrected = true;
        self.faults.hit(&mut self.dev, Stage::TcnotCorrected { link, side })?;
        let (me, partner) = (link + side, link + 1 - side);
        self.send(tl, MessageKind::TcnotDone, me, partner, link, Payload::Empty)?;
        self.check_done(tl, link, side)
    }

    fn check_done(&mut self, tl: &mut Timeline<Ev>, link: usize, side: usize) -> Result<(), ProtocolError> {
        let s = &mut self.sides[link][side];
        if s.done || !(s.corrected && s.partner_done) {
            return Ok(());
        }
        s.done = true;
        let node = link + side;
        if node == 0 {
            self.check_complete(tl)
        } else if node + 1 < self.nodes() {
            self.try_swap(tl, node)
        } else {
            Ok(())
        }
    }

    fn try_swap(&mut self, tl: &mut Timeline<Ev>, node: usize) -> Result<(), ProtocolError> {
        if self.swapped[node] || !(self.sides[node - 1][1].done && self.sides[node][0].done) {
            return Ok(());
        }
        self.swapped[node] = true;
        let (left, right) = (data_keys(node - 1, 1), data_keys(node, 0));
        transversal_cnot(&mut self.dev, &left, &right, &mut self.rng)?;
        self.faults.hit(&mut self.dev, Stage::SwapEntangled { node })?;
        for &k in &left {
            self.dev.gate1(Gate::H, k, &mut self.rng)?;
        }
        self.faults.hit(&mut self.dev, Stage::SwapRotated { node })?;
        let mut xs = [false; N];
        let mut zs = [false; N];
        for i in 0..N {
            xs[i] = self.dev.measure(left[i], Basis::Z, &mut self.rng)?;
            zs[i] = self.dev.measure(right[i], Basis::Z, &mut self.rng)?;
        }
        for k in left.into_iter().chain(right) {
            self.dev.release(k, &mut self.rng)?;
        }
        let mode = self.cfg.protocol.cec_mode;
        let bx = correct_and_extract(&xs, mode)?;
        let bz = correct_and_extract(&zs, mode)?;
        self.clean_swaps &= bx.s == [false; 3] && bz.s == [false; 3];
        let c = FrameContribution {
            b_x: bx.logical_bit,
            b_z: bz.logical_bit,
            origin: node,
        };
        self.send(tl, MessageKind::QreFrame, node, 0, 0, Payload::Frame(c))
    }

    fn check_complete(&mut self, tl: &mut Timeline<Ev>) -> Result<(), ProtocolError> {
        if !self.sides[0][0].done || self.contributions.len() + 2 < self.nodes() {
            return Ok(());
        }
        self.frame = aggregate_frame(&self.contributions);
        let first = data_keys(0, 0);
        let last = data_keys(self.cfg.topology.num_links() - 1, 1);
        apply_frame(&mut self.dev, &first, self.frame, &mut self.rng)?;
        for k in first.into_iter().chain(last) {
            self.dev.touch(k, &mut self.rng)?;
        }
        self.fidelity = extract_fidelity(&mut self.dev.qm, &first, &last, &mut self.rng)?;
        self.finished = Some((tl.now(), None));
        tl.clear();
        Ok(())
    }
}

pub fn run_episode(cfg: &SimConfig, seed: u64) -> Result<RunRecord, ProtocolError> {
    Ok(run_episode_with(cfg, seed, None, false)?.0)
}

/// Runs one episode, optionally injecting a single fault and recording the
/// stage boundaries passed.
pub fn run_episode_with(
    cfg: &SimConfig,
    seed: u64,
    fault: Option<FaultPlan>,
    record_stages: bool,
) -> Result<(RunRecord, Option<StageLog>), ProtocolError> {
    let nodes = cfg.topology.num_nodes();
    let links = cfg.topology.num_links();
    let streams = RngStreams::new(seed);
    let mut ep = Episode {
        cfg,
        dev: NoisyDevice::new(cfg.hardware.clone())?,
        rng: streams.stream(0),
        streams,
        faults: Faults {
            plan: fault,
            fired: false,
            log: record_stages.then(Vec::new),
        },
        started: vec![false; nodes],
        ready: vec![0; links],
        sides: vec![[Side::default(); 2]; links],
        swapped: vec![false; nodes],
        contributions: Vec::new(),
        clean_swaps: true,
        timeout: None,
        finished: None,
        fidelity: 0.0,
        frame: (false, false),
    };
    let mut tl = Timeline::new(seed);
    ep.timeout = Some(tl.schedule_at(secs_to_ps(cfg.protocol.episode_timeout_s), Ev::Timeout)?);
    tl.schedule(0, Ev::NodeStart(0))?;
    for node in 1..nodes {
        let delay = classical_latency(&cfg.topology, 0, node, &cfg.hardware).expect("valid nodes");
        tl.schedule_at(secs_to_ps(delay), Ev::NodeStart(node))?;
    }
    tl.run_until_idle(|tl, ev| ep.handle(tl, ev.action))
        .map_err(|e| ProtocolError::Run(Box::new(e)))?;

    let (end, failure) = ep.finished.unwrap_or((tl.now(), Some(Failure::Timeout)));
    let record = RunRecord {
        success: failure.is_none(),
        failure,
        fidelity: if failure.is_none() { ep.fidelity } else { 0.0 },
        latency_s: ps_to_secs(end),
        counters: ep.dev.counters,
        contributions: ep.contributions.len(),
        frame: ep.frame,
        clean_swaps: ep.clean_swaps,
    };
    Ok((record, ep.faults.log))
}
