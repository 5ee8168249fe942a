//! CSV results and the run manifest written next to them.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::config::ScenarioConfig;
use crate::error::{Result, SimError};
use crate::metrics::SweepPointResult;

pub const CSV_HEADER: &str = "lambda_bs_per_km2,deployment,variant,L_m,gamma_db,active_density,\
active_density_eq5,p_cov,p_cov_ci,reliable_ue_density,n_sinr_samples,n_drops";

/// Decimal rendering with at least 9 significant digits.
pub fn format_real(x: f64) -> String {
    if x == 0.0 {
        "0.000000000".to_string()
    } else if x.abs() >= 0.1 && x.abs() < 1e15 {
        format!("{x:.9}")
    } else {
        format!("{x:.9e}")
    }
}

/// The full CSV document, one row per (sweep point, threshold) in grid order.
pub fn format_csv(results: &[SweepPointResult]) -> String {
    let mut out = String::from(CSV_HEADER);
    out.push('\n');
    for r in results {
        for t in &r.thresholds {
            let row = [
                format_real(r.bs_density),
                r.deployment.to_string(),
                r.variant.to_string(),
                format_real(r.antenna_height_m),
                format_real(t.gamma_db),
                format_real(r.active_density),
                format_real(r.analytical_active_density),
                format_real(t.coverage.estimate),
                format_real(t.coverage.ci_half_width),
                format_real(t.reliable_density),
                t.coverage.n.to_string(),
                r.n_drops.to_string(),
            ];
            out.push_str(&row.join(","));
            out.push('\n');
        }
    }
    out
}

pub fn emit_csv(results: &[SweepPointResult], path: &Path) -> Result<()> {
    if results.is_empty() {
        return Err(SimError::EmptySamples("sweep results"));
    }
    std::fs::write(path, format_csv(results)).map_err(|e| SimError::io(path, e))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PointDrops {
    pub point_id: u64,
    pub n_drops: u64,
    pub budget_exhausted: bool,
}

/// Everything needed to reproduce a run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    /// The effective configuration, as TOML.
    pub config: String,
    /// Decimal string; JSON numbers lose precision above 2^53.
    pub master_seed: String,
    pub tool_version: String,
    pub max_drops_override: Option<u64>,
    pub points: Vec<PointDrops>,
    pub wall_clock_s: f64,
}

impl RunManifest {
    pub fn new(
        cfg: &ScenarioConfig,
        max_drops_override: Option<u64>,
        results: &[SweepPointResult],
        wall_clock_s: f64,
    ) -> Self {
        RunManifest {
            config: cfg.to_toml_string(),
            master_seed: cfg.master_seed.to_string(),
            tool_version: env!("CARGO_PKG_VERSION").to_string(),
            max_drops_override,
            points: results
                .iter()
                .map(|r| PointDrops {
                    point_id: r.point_id,
                    n_drops: r.n_drops,
                    budget_exhausted: r.budget_exhausted,
                })
                .collect(),
            wall_clock_s,
        }
    }

    /// `results.csv` → `results.manifest.json`.
    pub fn path_for(csv_path: &Path) -> PathBuf {
        csv_path.with_extension("manifest.json")
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        let json = serde_json::to_string_pretty(self).map_err(|e| SimError::Parse {
            path: path.to_path_buf(),
            message: e.to_string(),
        })?;
        std::fs::write(path, json + "\n").map_err(|e| SimError::io(path, e))
    }

    pub fn read(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| SimError::io(path, e))?;
        serde_json::from_str(&text).map_err(|e| SimError::Parse {
            path: path.to_path_buf(),
            message: e.to_string(),
        })
    }

    pub fn scenario(&self) -> Result<ScenarioConfig> {
        ScenarioConfig::from_toml_str(&self.config)
    }
}
