//! Simulation of Steane-encoded quantum repeater chains.

pub mod code;
pub mod experiment;
pub mod kernel;
pub mod protocol;
pub mod stabilizer;
pub mod network;
pub mod noise;
pub mod validate;
