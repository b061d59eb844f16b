//! Chain topology, configuration, heralded link generation and classical
//! message latency.

mod config;

use rand::Rng;
use rand_distr::{Distribution, Geometric};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::noise::{HardwareProfile, NoiseError, T1_BASELINE};

pub use config::{load_config, ConfigDocument, ConfigError, ExperimentSettings, ProtocolSettings, SimConfig};

/// Per link side: communication, data and ancilla memories.
pub const COMM_PER_LINK: usize = 7;
pub const DATA_PER_LINK: usize = 7;
pub const ANCILLA_PER_LINK: usize = 1;
pub const QUBITS_PER_LINK_SIDE: usize = COMM_PER_LINK + DATA_PER_LINK + ANCILLA_PER_LINK;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum TopologyError {
    #[error("a chain needs at least two nodes, got {0}")]
    TooFewNodes(usize),
    #[error("duplicate node name {0:?}")]
    DuplicateNode(String),
    #[error("unknown node {0:?}")]
    UnknownNode(String),
    #[error("node index {0} out of range")]
    NodeIndex(usize),
    #[error("{nodes} nodes need {} links, got {links}", nodes - 1)]
    LinkCount { nodes: usize, links: usize },
    #[error("link {left:?}-{right:?} does not join neighbouring nodes")]
    NotLinear { left: String, right: String },
    #[error("link {left:?}-{right:?} listed twice")]
    DuplicateLink { left: String, right: String },
    #[error("invalid link length {0} km")]
    Length(f64),
    #[error("u and v must differ")]
    SameNode,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LinkSpec {
    pub left: String,
    pub right: String,
    pub length_km: f64,
}

/// Linear chain of repeaters; link `k` joins nodes `k` and `k + 1`.
#[derive(Debug, Clone, PartialEq)]
pub struct Topology {
    nodes: Vec<String>,
    lengths_km: Vec<f64>,
}

impl Topology {
    pub fn new(nodes: Vec<String>, links: &[LinkSpec]) -> Result<Self, TopologyError> {
        let n = nodes.len();
        if n < 2 {
            return Err(TopologyError::TooFewNodes(n));
        }
        for (i, name) in nodes.iter().enumerate() {
            if nodes[..i].contains(name) {
                return Err(TopologyError::DuplicateNode(name.clone()));
            }
        }
        if links.len() != n - 1 {
            return Err(TopologyError::LinkCount {
                nodes: n,
                links: links.len(),
            });
        }
        let index = |name: &str| {
            nodes
                .iter()
                .position(|x| x == name)
                .ok_or_else(|| TopologyError::UnknownNode(name.to_string()))
        };
        let mut lengths = vec![None; n - 1];
        for l in links {
            let (a, b) = (index(&l.left)?, index(&l.right)?);
            if a.abs_diff(b) != 1 {
                return Err(TopologyError::NotLinear {
                    left: l.left.clone(),
                    right: l.right.clone(),
                });
            }
            if !(l.length_km.is_finite() && l.length_km >= 0.0) {
                return Err(TopologyError::Length(l.length_km));
            }
            let slot = &mut lengths[a.min(b)];
            if slot.is_some() {
                return Err(TopologyError::DuplicateLink {
                    left: l.left.clone(),
                    right: l.right.clone(),
                });
            }
            *slot = Some(l.length_km);
        }
        Ok(Self {
            nodes,
            lengths_km: lengths.into_iter().map(|l| l.expect("one link per gap")).collect(),
        })
    }

    /// `links` equal links of `link_km` each, nodes named `n0`, `n1`, ...
    pub fn chain(links: usize, link_km: f64) -> Result<Self, TopologyError> {
        let nodes: Vec<String> = (0..=links).map(|i| format!("n{i}")).collect();
        let specs: Vec<LinkSpec> = (0..links)
            .map(|k| LinkSpec {
                left: nodes[k].clone(),
                right: nodes[k + 1].clone(),
                length_km: link_km,
            })
            .collect();
        Self::new(nodes, &specs)
    }

    pub fn num_nodes(&self) -> usize {
        self.nodes.len()
    }

    pub fn num_links(&self) -> usize {
        self.lengths_km.len()
    }

    pub fn nodes(&self) -> &[String] {
        &self.nodes
    }

    pub fn node_index(&self, name: &str) -> Result<usize, TopologyError> {
        self.nodes
            .iter()
            .position(|x| x == name)
            .ok_or_else(|| TopologyError::UnknownNode(name.to_string()))
    }

    pub fn link_km(&self, link: usize) -> f64 {
        self.lengths_km[link]
    }

    pub fn total_km(&self) -> f64 {
        self.lengths_km.iter().sum()
    }

    pub fn links(&self) -> Vec<LinkSpec> {
        (0..self.num_links())
            .map(|k| LinkSpec {
                left: self.nodes[k].clone(),
                right: self.nodes[k + 1].clone(),
                length_km: self.lengths_km[k],
            })
            .collect()
    }

    /// Links adjacent to `node` (one for the ends, two in the middle).
    pub fn blocks_at(&self, node: usize) -> usize {
        (node > 0) as usize + (node + 1 < self.num_nodes()) as usize
    }

    pub fn qubits_at(&self, node: usize) -> usize {
        self.blocks_at(node) * QUBITS_PER_LINK_SIDE
    }

    pub fn total_qubits(&self) -> usize {
        (0..self.num_nodes()).map(|i| self.qubits_at(i)).sum()
    }

    /// Fiber distance in km between two nodes along the chain.
    pub fn distance_km(&self, u: usize, v: usize) -> f64 {
        let (a, b) = (u.min(v), u.max(v));
        self.lengths_km[a..b].iter().sum()
    }
}

/// One-way classical message delay between nodes `u` and `v`, in seconds.
pub fn classical_latency(
    topology: &Topology,
    u: usize,
    v: usize,
    profile: &HardwareProfile,
) -> Result<f64, TopologyError> {
    let n = topology.num_nodes();
    for x in [u, v] {
        if x >= n {
            return Err(TopologyError::NodeIndex(x));
        }
    }
    if u == v {
        return Err(TopologyError::SameNode);
    }
    let meters = topology.distance_km(u, v) * 1e3;
    let hops = u.abs_diff(v) as f64;
    Ok(meters / profile.c_star + hops * profile.d_fwd + profile.d_end)
}

/// Success probability of one two-round heralding attempt over `length_km`.
pub fn herald_success_probability(profile: &HardwareProfile, length_km: f64) -> f64 {
    let fiber = 10f64.powf(-profile.alpha * (length_km / 2.0) / 10.0);
    0.5 * (profile.eta_m * profile.eta_d * fiber).powi(2)
}

/// Duration of one attempt: two photon round trips to the midpoint plus
/// memory preparation, in seconds.
pub fn herald_attempt_period(profile: &HardwareProfile, length_km: f64) -> f64 {
    2.0 * (length_km * 1e3 / profile.c_star) + profile.t_prep
}

/// Number of attempts up to and including the first success; `None` if
/// success is impossible.
pub fn sample_herald_attempts<R: Rng + ?Sized>(p: f64, rng: &mut R) -> Option<u64> {
    if p <= 0.0 {
        return None;
    }
    if p >= 1.0 {
        return Some(1);
    }
    let failures = Geometric::new(p).expect("0 < p < 1").sample(rng);
    Some(failures.saturating_add(1))
}

pub const T2_CAP: f64 = 199.99;
/// Time scale used to define the coordinated sweep, in seconds.
pub const T_LINK: f64 = 0.0151;

/// Hardware at sweep position `z`: every error rate shrinks linearly to zero
/// as `z` goes from 0 to 1, with dephasing handled through `T2`.
pub fn z_profile(z: f64, baseline: &HardwareProfile, t_link: f64) -> Result<HardwareProfile, NoiseError> {
    if !(0.0..=1.0).contains(&z) {
        return Err(NoiseError::OutOfRange {
            name: "z",
            value: z,
            lo: 0.0,
            hi: 1.0,
        });
    }
    let lift = |f0: f64| f0 + (1.0 - f0) * z;
    let pz0 = -(-t_link / baseline.t2).exp_m1() / 2.0;
    let pz = pz0 * (1.0 - z);
    let t2 = if pz > 0.0 {
        (-t_link / (-2.0 * pz).ln_1p()).min(T2_CAP)
    } else {
        T2_CAP
    };
    let profile = HardwareProfile {
        f_1q: lift(baseline.f_1q),
        f_2q: lift(baseline.f_2q),
        f_m: lift(baseline.f_m),
        f_init: lift(baseline.f_init),
        f_phys: lift(baseline.f_phys),
        t1: T1_BASELINE,
        t2,
        ..baseline.clone()
    };
    profile.validate()?;
    Ok(profile)
}
