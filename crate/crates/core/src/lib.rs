//! Monte Carlo simulator for uplink IoT ultra-dense cellular networks.
//!
//! A drop places base stations (random HPPP or hexagonal lattice) and active
//! UEs on a square torus, realizes every BS-UE link under a multi-piece
//! LoS/NLoS path loss model, associates each UE to the BS with the strongest
//! long-term gain, switches off idle BSs, schedules one UE per active BS on a
//! single resource block and evaluates the uplink SINR of every scheduled UE
//! under fractional power control.
//!
//! Sweeps aggregate drops into the active BS density, the coverage
//! probability and the density of reliably working UEs.
//!
//! - [`config`]: scenario configuration and its TOML form
//! - [`scenario`]: regions, point processes and the hexagonal lattice
//! - [`propagation`]: distances, path loss, shadowing and fading
//! - [`association`]: max-RSS association, idle mode and scheduling
//! - [`uplink`]: power control and SINR evaluation
//! - [`metrics`]: coverage, active density and reliable UE density
//! - [`engine`]: seeded, parallel drops and sweeps
//! - [`output`]: CSV results and run manifests

pub mod association;
pub mod config;
pub mod engine;
mod error;
pub mod metrics;
pub mod output;
pub mod propagation;
pub mod rng;
pub mod scenario;
pub mod uplink;

pub use config::{ChannelVariant, DeploymentKind, ScenarioConfig};
pub use engine::{run_drop, run_point, run_sweep, DropResult, EngineOptions, SweepGrid, SweepPoint};
pub use error::{Result, SimError};
pub use metrics::SweepPointResult;
pub use output::{emit_csv, RunManifest};
