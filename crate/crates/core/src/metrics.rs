//! Active BS density, coverage probability and density of reliably working
//! UEs, estimated from pooled drop outputs.

use serde::Serialize;

use crate::config::{ChannelVariant, DeploymentKind};
use crate::engine::DropResult;
use crate::error::{Result, SimError};

/// Two-sided 95% standard normal quantile.
pub const Z95: f64 = 1.959_963_984_540_054;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CoverageEstimate {
    /// Fraction of samples strictly above the threshold.
    pub estimate: f64,
    /// Half-width of the 95% Wilson score interval.
    pub ci_half_width: f64,
    pub n: u64,
}

impl CoverageEstimate {
    pub fn from_counts(successes: u64, n: u64) -> Result<Self> {
        if n == 0 {
            return Err(SimError::EmptySamples("coverage probability"));
        }
        let nf = n as f64;
        let p = successes as f64 / nf;
        let z2 = Z95 * Z95;
        let half = Z95 / (1.0 + z2 / nf) * (p * (1.0 - p) / nf + z2 / (4.0 * nf * nf)).sqrt();
        Ok(CoverageEstimate {
            estimate: p,
            ci_half_width: half,
            n,
        })
    }
}

/// Fraction of linear SINR samples whose dB value exceeds `gamma_db`.
pub fn estimate_coverage(sinr_linear: &[f64], gamma_db: f64) -> Result<CoverageEstimate> {
    let above = sinr_linear
        .iter()
        .filter(|&&s| 10.0 * s.log10() > gamma_db)
        .count() as u64;
    CoverageEstimate::from_counts(above, sinr_linear.len() as u64)
}

/// Mean active BS density over drops and its standard error.
pub fn estimate_active_density(drops: &[DropResult]) -> Result<(f64, f64)> {
    if drops.is_empty() {
        return Err(SimError::EmptySamples("active BS density"));
    }
    let mut acc = PointAccumulator::new(&[]);
    for d in drops {
        acc.add(d);
    }
    Ok(acc.active_density())
}

/// Density of reliably working UEs, `λ̃ · p_cov`.
pub fn reliable_ue_density(active_density: f64, p_cov: f64) -> f64 {
    active_density * p_cov
}

/// Results at one threshold of one sweep point.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ThresholdResult {
    pub gamma_db: f64,
    pub coverage: CoverageEstimate,
    pub reliable_density: f64,
    /// 95% half-width of `reliable_density` by first-order propagation.
    pub reliable_density_ci: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepPointResult {
    pub point_id: u64,
    pub bs_density: f64,
    pub variant: ChannelVariant,
    pub deployment: DeploymentKind,
    pub antenna_height_m: f64,
    pub active_density: f64,
    pub active_density_se: f64,
    pub analytical_active_density: f64,
    pub thresholds: Vec<ThresholdResult>,
    pub n_drops: u64,
    /// The drop budget ran out before every coverage CI met its target.
    pub budget_exhausted: bool,
}

impl SweepPointResult {
    pub fn at_gamma(&self, gamma_db: f64) -> Option<&ThresholdResult> {
        self.thresholds.iter().find(|t| t.gamma_db == gamma_db)
    }

    pub fn coverage(&self, gamma_db: f64) -> Option<CoverageEstimate> {
        self.at_gamma(gamma_db).map(|t| t.coverage)
    }
}

/// Ordered fold of drop results into per-point statistics.
#[derive(Debug, Clone)]
pub struct PointAccumulator {
    thresholds_db: Vec<f64>,
    above: Vec<u64>,
    n_samples: u64,
    n_drops: u64,
    density_sum: f64,
    density_sq_sum: f64,
}

impl PointAccumulator {
    pub fn new(thresholds_db: &[f64]) -> Self {
        PointAccumulator {
            thresholds_db: thresholds_db.to_vec(),
            above: vec![0; thresholds_db.len()],
            n_samples: 0,
            n_drops: 0,
            density_sum: 0.0,
            density_sq_sum: 0.0,
        }
    }

    pub fn add(&mut self, drop: &DropResult) {
        for (count, &g) in self.above.iter_mut().zip(&self.thresholds_db) {
            *count += drop.sinr_samples_db.iter().filter(|&&s| s > g).count() as u64;
        }
        self.n_samples += drop.sinr_samples_db.len() as u64;
        self.n_drops += 1;
        let density = drop.n_active_bs as f64 / drop.area_km2;
        self.density_sum += density;
        self.density_sq_sum += density * density;
    }

    pub fn n_drops(&self) -> u64 {
        self.n_drops
    }

    pub fn n_samples(&self) -> u64 {
        self.n_samples
    }

    /// Mean and standard error of the per-drop active density.
    pub fn active_density(&self) -> (f64, f64) {
        let n = self.n_drops as f64;
        let mean = self.density_sum / n;
        if self.n_drops < 2 {
            return (mean, 0.0);
        }
        let var = ((self.density_sq_sum - n * mean * mean) / (n - 1.0)).max(0.0);
        (mean, (var / n).sqrt())
    }

    /// Coverage per threshold; `None` while no SINR sample exists.
    pub fn coverage(&self) -> Option<Vec<CoverageEstimate>> {
        if self.n_samples == 0 {
            return None;
        }
        self.above
            .iter()
            .map(|&k| CoverageEstimate::from_counts(k, self.n_samples))
            .collect::<Result<Vec<_>>>()
            .ok()
    }

    /// Widest coverage CI half-width, infinite without samples.
    pub fn widest_ci(&self) -> f64 {
        self.coverage().map_or(f64::INFINITY, |c| {
            c.iter().map(|e| e.ci_half_width).fold(0.0, f64::max)
        })
    }

    pub fn thresholds(&self) -> Vec<ThresholdResult> {
        let (density, se) = self.active_density();
        let coverage = self.coverage().unwrap_or_else(|| {
            vec![
                CoverageEstimate {
                    estimate: 0.0,
                    ci_half_width: 0.5,
                    n: 0,
                };
                self.thresholds_db.len()
            ]
        });
        self.thresholds_db
            .iter()
            .zip(coverage)
            .map(|(&gamma_db, c)| ThresholdResult {
                gamma_db,
                coverage: c,
                reliable_density: reliable_ue_density(density, c.estimate),
                reliable_density_ci: (density * c.ci_half_width).hypot(c.estimate * Z95 * se),
            })
            .collect()
    }
}
