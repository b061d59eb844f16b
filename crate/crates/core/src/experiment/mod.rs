//! Monte Carlo sweeps, log-log slope fits and CSV output.

use std::fs::File;
use std::io::{Read, Write};
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::code::CecMode;
use crate::kernel::derive_seed;
use crate::network::{z_profile, ConfigError, ProtocolSettings, SimConfig, Topology, T_LINK};
use crate::noise::HardwareProfile;
use crate::protocol::{run_episode, ProtocolError, RunRecord};

/// Error events a point needs before it is used in a slope fit.
pub const MIN_ERROR_EVENTS: u64 = 10;

#[derive(Debug, Error)]
pub enum ExperimentError {
    #[error("sweep grid is empty")]
    EmptyGrid,
    #[error("sweep grid must be sorted ascending")]
    UnsortedGrid,
    #[error("runs must be at least 1")]
    NoRuns,
    #[error("no protocol modes selected")]
    NoModes,
    #[error("invalid point {var}={value}: {source}")]
    Point {
        var: SweepVar,
        value: f64,
        #[source]
        source: ConfigError,
    },
    #[error("{0}")]
    Fit(String),
    #[error("episode failed: {0}")]
    Protocol(#[from] ProtocolError),
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}: {source}")]
    Csv {
        path: String,
        #[source]
        source: csv::Error,
    },
}

/// The quantity varied across a sweep.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepVar {
    #[serde(rename = "f_1q")]
    F1q,
    #[serde(rename = "f_2q")]
    F2q,
    #[serde(rename = "f_m")]
    Fm,
    #[serde(rename = "f_init")]
    Finit,
    #[serde(rename = "f_phys")]
    Fphys,
    T2,
    Z,
    NumLinks,
    Distance,
}

impl SweepVar {
    pub fn name(self) -> &'static str {
        match self {
            SweepVar::F1q => "F_1q",
            SweepVar::F2q => "F_2q",
            SweepVar::Fm => "F_m",
            SweepVar::Finit => "F_init",
            SweepVar::Fphys => "F_phys",
            SweepVar::T2 => "T2_s",
            SweepVar::Z => "z",
            SweepVar::NumLinks => "num_links",
            SweepVar::Distance => "distance_km",
        }
    }

    /// Single hardware parameters are swept with every other noise source off.
    pub fn is_single_param(self) -> bool {
        matches!(
            self,
            SweepVar::F1q | SweepVar::F2q | SweepVar::Fm | SweepVar::Finit | SweepVar::Fphys | SweepVar::T2
        )
    }
}

impl std::fmt::Display for SweepVar {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

fn default_link_km() -> f64 {
    20.0
}

fn default_links() -> usize {
    1
}

fn default_modes() -> Vec<CecMode> {
    vec![CecMode::Cec]
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSpec {
    pub var: SweepVar,
    pub grid: Vec<f64>,
    #[serde(default = "default_links")]
    pub links: usize,
    #[serde(default = "default_link_km")]
    pub link_km: f64,
    /// For `num_links` sweeps: keep this total length and divide it evenly.
    #[serde(default)]
    pub total_km: Option<f64>,
    /// Starting hardware; loss and timing constants always come from here.
    #[serde(default)]
    pub hardware: HardwareProfile,
    #[serde(default)]
    pub protocol: ProtocolSettings,
    pub runs: u32,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_modes")]
    pub modes: Vec<CecMode>,
}

impl SweepSpec {
    pub fn new(var: SweepVar, grid: Vec<f64>, runs: u32) -> Self {
        Self {
            var,
            grid,
            links: default_links(),
            link_km: default_link_km(),
            total_km: None,
            hardware: HardwareProfile::baseline(),
            protocol: ProtocolSettings::default(),
            runs,
            seed: 0,
            modes: default_modes(),
        }
    }

    fn check(&self) -> Result<(), ExperimentError> {
        if self.grid.is_empty() {
            return Err(ExperimentError::EmptyGrid);
        }
        if self.grid.windows(2).any(|w| !(w[0] <= w[1])) {
            return Err(ExperimentError::UnsortedGrid);
        }
        if self.runs == 0 {
            return Err(ExperimentError::NoRuns);
        }
        if self.modes.is_empty() {
            return Err(ExperimentError::NoModes);
        }
        Ok(())
    }

    /// Configuration of one grid point and mode.
    pub fn point_config(&self, value: f64, mode: CecMode) -> Result<SimConfig, ExperimentError> {
        let wrap = |source: ConfigError| ExperimentError::Point {
            var: self.var,
            value,
            source,
        };
        let mut hw = if self.var.is_single_param() {
            self.hardware.clone().without_qubit_noise()
        } else {
            self.hardware.clone()
        };
        let (mut links, mut link_km) = (self.links, self.link_km);
        match self.var {
            SweepVar::F1q => hw.f_1q = value,
            SweepVar::F2q => hw.f_2q = value,
            SweepVar::Fm => hw.f_m = value,
            SweepVar::Finit => hw.f_init = value,
            SweepVar::Fphys => hw.f_phys = value,
            SweepVar::T2 => {
                hw.t1 = crate::noise::T1_BASELINE;
                hw.t2 = value;
            }
            SweepVar::Z => hw = z_profile(value, &self.hardware, T_LINK).map_err(|e| wrap(e.into()))?,
            SweepVar::NumLinks => {
                links = value.round() as usize;
                if let Some(total) = self.total_km {
                    link_km = total / links.max(1) as f64;
                }
            }
            SweepVar::Distance => links = (value / self.link_km).round() as usize,
        }
        let topology = Topology::chain(links, link_km).map_err(|e| wrap(e.into()))?;
        let protocol = ProtocolSettings {
            cec_mode: mode,
            ..self.protocol.clone()
        };
        SimConfig::new(topology, hw, protocol).map_err(wrap)
    }
}

/// Six log-spaced fidelities covering one decade of infidelity, placed so
/// that a 2-link chain sees enough logical errors at 20,000 runs per point.
/// `None` for variables without a default.
pub fn default_grid(var: SweepVar) -> Option<Vec<f64>> {
    let top = match var {
        SweepVar::F2q => -2.0,
        SweepVar::Fm | SweepVar::F1q => -1.7,
        SweepVar::Fphys | SweepVar::Finit => -1.3,
        _ => return None,
    };
    Some((0..6).map(|k| 1.0 - 10f64.powf(top - 0.2 * k as f64)).collect())
}

/// Aggregate over the runs of one grid point and mode.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub sweep_var: String,
    pub value: f64,
    pub mode: String,
    pub runs: u32,
    pub mean_fidelity: f64,
    pub stderr_fidelity: f64,
    pub mean_latency_s: f64,
    pub failure_rate: f64,
    /// Successful runs with fidelity below 1.
    pub error_events: u64,
    pub slope_eligible: bool,
}

impl SweepRow {
    pub fn logical_error_rate(&self) -> f64 {
        1.0 - self.mean_fidelity
    }
}

pub fn mode_name(mode: CecMode) -> &'static str {
    match mode {
        CecMode::Cec => "cec",
        CecMode::None => "none",
    }
}

/// Folds episode records in order; failed runs only count toward the
/// failure rate.
pub fn summarize(var: SweepVar, value: f64, mode: CecMode, records: &[RunRecord]) -> SweepRow {
    let ok: Vec<&RunRecord> = records.iter().filter(|r| r.success).collect();
    let k = ok.len() as f64;
    let (mut mean, mut m2, mut latency) = (0.0, 0.0, 0.0);
    for (i, r) in ok.iter().enumerate() {
        let d = r.fidelity - mean;
        mean += d / (i + 1) as f64;
        m2 += d * (r.fidelity - mean);
        latency += r.latency_s;
    }
    let stderr = if ok.len() > 1 { (m2 / (k - 1.0) / k).sqrt() } else { 0.0 };
    let error_events = ok.iter().filter(|r| r.fidelity < 1.0).count() as u64;
    SweepRow {
        sweep_var: var.name().to_string(),
        value,
        mode: mode_name(mode).to_string(),
        runs: records.len() as u32,
        mean_fidelity: if ok.is_empty() { f64::NAN } else { mean },
        stderr_fidelity: stderr,
        mean_latency_s: if ok.is_empty() { f64::NAN } else { latency / k },
        failure_rate: 1.0 - k / records.len() as f64,
        error_events,
        slope_eligible: error_events >= MIN_ERROR_EVENTS,
    }
}

/// Runs `runs` episodes of `cfg`; run `i` uses seed `derive_seed(seed, i)`,
/// so different modes and grid points see matched randomness.
pub fn run_point(cfg: &SimConfig, runs: u32, seed: u64) -> Result<Vec<RunRecord>, ExperimentError> {
    (0..runs as u64)
        .into_par_iter()
        .map(|i| run_episode(cfg, derive_seed(seed, i)).map_err(ExperimentError::from))
        .collect()
}

/// All grid points and modes, in grid order then mode order. Every config is
/// built before any episode runs.
pub fn run_sweep(spec: &SweepSpec) -> Result<Vec<SweepRow>, ExperimentError> {
    spec.check()?;
    let mut points = Vec::new();
    for &value in &spec.grid {
        for &mode in &spec.modes {
            points.push((value, mode, spec.point_config(value, mode)?));
        }
    }
    points
        .iter()
        .map(|(value, mode, cfg)| {
            let records = run_point(cfg, spec.runs, spec.seed)?;
            Ok(summarize(spec.var, *value, *mode, &records))
        })
        .collect()
}

/// Physical error rate of a single-parameter grid value.
pub fn physical_error_rate(var: SweepVar, value: f64) -> f64 {
    match var {
        SweepVar::T2 => -(-T_LINK / value).exp_m1() / 2.0,
        _ => 1.0 - value,
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SlopeFit {
    pub points: Vec<(f64, f64)>,
    pub slope: f64,
    pub intercept: f64,
    pub r_squared: f64,
}

/// Least squares on `(log10 x, log10 y)`.
pub fn fit_slope(points: &[(f64, f64)]) -> Result<SlopeFit, ExperimentError> {
    if points.len() < 3 {
        return Err(ExperimentError::Fit(format!("need at least 3 points, got {}", points.len())));
    }
    if let Some(p) = points.iter().find(|(x, y)| !(*x > 0.0 && *y > 0.0)) {
        return Err(ExperimentError::Fit(format!("non-positive point {p:?}")));
    }
    let logs: Vec<(f64, f64)> = points.iter().map(|&(x, y)| (x.log10(), y.log10())).collect();
    let (lo, hi) = logs
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &(x, _)| (lo.min(x), hi.max(x)));
    if hi - lo < 1.0 - 1e-9 {
        return Err(ExperimentError::Fit(format!(
            "x spans only {:.2} decades, need at least one",
            hi - lo
        )));
    }
    let n = logs.len() as f64;
    let mx = logs.iter().map(|p| p.0).sum::<f64>() / n;
    let my = logs.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = logs.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = logs.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let syy: f64 = logs.iter().map(|p| (p.1 - my).powi(2)).sum();
    let slope = sxy / sxx;
    let r_squared = if syy == 0.0 { 1.0 } else { sxy * sxy / (sxx * syy) };
    Ok(SlopeFit {
        points: points.to_vec(),
        slope,
        intercept: my - slope * mx,
        r_squared,
    })
}

/// Fits logical against physical error rate over the eligible rows of `mode`.
pub fn fit_rows(rows: &[SweepRow], var: SweepVar, mode: CecMode) -> Result<SlopeFit, ExperimentError> {
    let pts: Vec<(f64, f64)> = rows
        .iter()
        .filter(|r| r.mode == mode_name(mode) && r.slope_eligible)
        .map(|r| (physical_error_rate(var, r.value), r.logical_error_rate()))
        .collect();
    fit_slope(&pts)
}

pub fn write_csv<W: Write>(rows: &[SweepRow], out: W) -> Result<(), csv::Error> {
    let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(out);
    w.write_record([
        "sweep_var",
        "value",
        "mode",
        "runs",
        "mean_fidelity",
        "stderr_fidelity",
        "mean_latency_s",
        "failure_rate",
        "error_events",
        "slope_eligible",
    ])?;
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_csv<R: Read>(input: R) -> Result<Vec<SweepRow>, csv::Error> {
    csv::Reader::from_reader(input).deserialize().collect()
}

pub fn emit_csv(rows: &[SweepRow], path: &Path) -> Result<(), ExperimentError> {
    let shown = path.display().to_string();
    let file = File::create(path).map_err(|source| ExperimentError::Io {
        path: shown.clone(),
        source,
    })?;
    write_csv(rows, file).map_err(|source| ExperimentError::Csv { path: shown, source })
}

pub fn parse_csv(path: &Path) -> Result<Vec<SweepRow>, ExperimentError> {
    let shown = path.display().to_string();
    let file = File::open(path).map_err(|source| ExperimentError::Io {
        path: shown.clone(),
        source,
    })?;
    read_csv(file).map_err(|source| ExperimentError::Csv { path: shown, source })
}
