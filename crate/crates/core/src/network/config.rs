use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::{z_profile, LinkSpec, Topology, TopologyError, T_LINK};
use crate::code::{CecMode, FtMode};
use crate::noise::{HardwareProfile, NoiseError};

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("malformed configuration: {0}")]
    Parse(#[from] serde_json::Error),
    #[error("topology: {0}")]
    Topology(#[from] TopologyError),
    #[error("hardware: {0}")]
    Hardware(#[from] NoiseError),
    #[error("unsupported code {0:?}")]
    Code(String),
    #[error("{0}")]
    Invalid(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ProtocolSettings {
    pub code: String,
    pub ft_mode: FtMode,
    pub cec_mode: CecMode,
    pub episode_timeout_s: f64,
    pub prep_retry_cap: u32,
}

impl Default for ProtocolSettings {
    fn default() -> Self {
        Self {
            code: "steane713".into(),
            ft_mode: FtMode::Minimal,
            cec_mode: CecMode::Cec,
            episode_timeout_s: 60.0,
            prep_retry_cap: 100,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ExperimentSettings {
    pub runs: u32,
    pub seed: u64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub z: Option<f64>,
}

impl Default for ExperimentSettings {
    fn default() -> Self {
        Self {
            runs: 1000,
            seed: 1,
            z: None,
        }
    }
}

/// The configuration file as written on disk.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigDocument {
    pub nodes: Vec<String>,
    pub links: Vec<LinkSpec>,
    #[serde(default)]
    pub hardware: HardwareProfile,
    #[serde(default)]
    pub protocol: ProtocolSettings,
    #[serde(default)]
    pub experiment: ExperimentSettings,
}

/// Validated simulation inputs. When the document sets `experiment.z`,
/// `hardware` is already the z-mapped profile.
#[derive(Debug, Clone, PartialEq)]
pub struct SimConfig {
    pub topology: Topology,
    pub hardware: HardwareProfile,
    pub protocol: ProtocolSettings,
    pub experiment: ExperimentSettings,
}

impl SimConfig {
    pub fn new(
        topology: Topology,
        hardware: HardwareProfile,
        protocol: ProtocolSettings,
    ) -> Result<Self, ConfigError> {
        let cfg = Self {
            topology,
            hardware,
            protocol,
            experiment: ExperimentSettings::default(),
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        self.hardware.validate()?;
        if self.protocol.code != "steane713" {
            return Err(ConfigError::Code(self.protocol.code.clone()));
        }
        let t = self.protocol.episode_timeout_s;
        if !(t.is_finite() && t > 0.0) {
            return Err(ConfigError::Invalid(format!("episode_timeout_s must be positive, got {t}")));
        }
        if self.protocol.prep_retry_cap == 0 {
            return Err(ConfigError::Invalid("prep_retry_cap must be at least 1".into()));
        }
        if self.experiment.runs == 0 {
            return Err(ConfigError::Invalid("runs must be at least 1".into()));
        }
        Ok(())
    }

    pub fn to_document(&self) -> ConfigDocument {
        ConfigDocument {
            nodes: self.topology.nodes().to_vec(),
            links: self.topology.links(),
            hardware: self.hardware.clone(),
            protocol: self.protocol.clone(),
            experiment: ExperimentSettings {
                z: None,
                ..self.experiment.clone()
            },
        }
    }
}

pub fn load_config(document: &str) -> Result<SimConfig, ConfigError> {
    let doc: ConfigDocument = serde_json::from_str(document)?;
    let topology = Topology::new(doc.nodes, &doc.links)?;
    let hardware = match doc.experiment.z {
        Some(z) => {
            doc.hardware.validate()?;
            z_profile(z, &doc.hardware, T_LINK)?
        }
        None => doc.hardware,
    };
    let cfg = SimConfig {
        topology,
        hardware,
        protocol: doc.protocol,
        experiment: doc.experiment,
    };
    cfg.validate()?;
    Ok(cfg)
}
