//! Seeded Monte Carlo drops and sweeps.
//!
//! Drops are the unit of parallelism. Every drop derives its random streams
//! from `(master_seed, point id, drop index)` and results are folded in drop
//! order, so the output is bit-identical for any number of workers.

use rand::Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::association::{analytical_active_density, associate_field, build_schedule, AssociationMap, Schedule};
use crate::config::{ChannelVariant, DeploymentKind, ScenarioConfig};
use crate::error::{Result, SimError};
use crate::metrics::{PointAccumulator, SweepPointResult};
use crate::propagation::{k_factor_linear, sample_fading_power, LinkField, PathLossModel, ShadowModel};
use crate::rng::{DropKey, Substream};
use crate::scenario::{generate_hexagonal, resolve_region, sample_hppp, Deployment, Point};
use crate::uplink::{compute_uplink_sinrs, UplinkParams, UplinkSample};

/// One combination of the sweep grids.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SweepPoint {
    /// Position in grid order; also keys the point's random streams.
    pub id: u64,
    pub bs_density: f64,
    pub variant: ChannelVariant,
    pub deployment: DeploymentKind,
    pub antenna_height_m: f64,
}

impl SweepPoint {
    /// `cfg` with this point's density, variant, deployment and height.
    pub fn apply(&self, cfg: &ScenarioConfig) -> ScenarioConfig {
        let mut c = cfg.clone();
        c.bs_density = self.bs_density;
        c.channel_variant = self.variant;
        c.deployment = self.deployment;
        c.antenna_height_diff = self.antenna_height_m;
        c
    }

    /// The point described by the scalar fields of `cfg`.
    pub fn from_config(id: u64, cfg: &ScenarioConfig) -> Self {
        SweepPoint {
            id,
            bs_density: cfg.bs_density,
            variant: cfg.channel_variant,
            deployment: cfg.deployment,
            antenna_height_m: cfg.antenna_height_diff,
        }
    }
}

/// Grids spanned by a sweep.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepGrid {
    pub bs_densities: Vec<f64>,
    pub variants: Vec<ChannelVariant>,
    pub deployments: Vec<DeploymentKind>,
    pub antenna_heights_m: Vec<f64>,
}

impl SweepGrid {
    pub fn from_config(cfg: &ScenarioConfig) -> Self {
        SweepGrid {
            bs_densities: cfg.bs_density_grid(),
            variants: cfg.variant_grid(),
            deployments: cfg.deployment_grid(),
            antenna_heights_m: cfg.antenna_height_grid(),
        }
    }

    /// Points in grid order: variant, then deployment, then antenna height,
    /// then BS density (innermost).
    pub fn points(&self) -> Vec<SweepPoint> {
        let mut out = Vec::new();
        for &variant in &self.variants {
            for &deployment in &self.deployments {
                for &antenna_height_m in &self.antenna_heights_m {
                    for &bs_density in &self.bs_densities {
                        out.push(SweepPoint {
                            id: out.len() as u64,
                            bs_density,
                            variant,
                            deployment,
                            antenna_height_m,
                        });
                    }
                }
            }
        }
        out
    }

    fn validate(&self) -> Result<()> {
        if self.bs_densities.is_empty()
            || self.variants.is_empty()
            || self.deployments.is_empty()
            || self.antenna_heights_m.is_empty()
        {
            return Err(SimError::config("sweep", "every grid needs at least one value"));
        }
        Ok(())
    }
}

/// Summary of one drop.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DropResult {
    pub drop_index: u64,
    pub n_bs: usize,
    pub n_ue: usize,
    pub n_active_bs: usize,
    pub area_km2: f64,
    /// One SINR per active BS, in schedule order, dB.
    pub sinr_samples_db: Vec<f64>,
}

/// Everything a drop produced, for inspection and tests.
#[derive(Debug, Clone)]
pub struct DropOutcome {
    pub deployment: Deployment,
    pub association: Option<AssociationMap>,
    pub schedule: Schedule,
    pub samples: Vec<UplinkSample>,
}

impl DropOutcome {
    pub fn summary(&self, drop_index: u64) -> DropResult {
        DropResult {
            drop_index,
            n_bs: self.deployment.bs_points.len(),
            n_ue: self.deployment.ue_points.len(),
            n_active_bs: self.schedule.len(),
            area_km2: self.deployment.region.area_km2(),
            sinr_samples_db: self.samples.iter().map(UplinkSample::sinr_db).collect(),
        }
    }
}

/// Runs the full drop pipeline and keeps the intermediate products.
pub fn simulate_drop(cfg: &ScenarioConfig, point: &SweepPoint, drop_index: u64) -> Result<DropOutcome> {
    let pcfg = point.apply(cfg);
    let region = resolve_region(&pcfg)?;
    let key = DropKey::new(cfg.master_seed, point.id, drop_index);

    let bs_points = match point.deployment {
        DeploymentKind::Hppp => sample_hppp(point.bs_density, &region, &mut key.stream(Substream::BsPositions)),
        DeploymentKind::Hexagonal => {
            let mut rng = key.stream(Substream::HexOffset);
            let side = region.side_km();
            let offset = Point::new(rng.random::<f64>() * side, rng.random::<f64>() * side);
            generate_hexagonal(point.bs_density, &region, offset)?
        }
    };
    let ue_points = sample_hppp(pcfg.ue_density, &region, &mut key.stream(Substream::UePositions));
    let deployment = Deployment {
        bs_points,
        ue_points,
        region,
    };
    if deployment.bs_points.is_empty() || deployment.ue_points.is_empty() {
        return Ok(DropOutcome {
            deployment,
            association: None,
            schedule: Schedule {
                active_bs: Vec::new(),
                scheduled_ue: Vec::new(),
            },
            samples: Vec::new(),
        });
    }

    let shadow = (point.variant == ChannelVariant::Gpp3Advanced).then(|| {
        ShadowModel::sample(
            pcfg.shadow.sigma_shad,
            pcfg.shadow.tau,
            deployment.bs_points.len(),
            deployment.ue_points.len(),
            &mut key.stream(Substream::Shadow),
        )
    });
    let model = PathLossModel::from_config(&pcfg.pathloss)?;
    let field = LinkField::new(&deployment, &model, point.antenna_height_m, shadow.as_ref(), key);

    let association = associate_field(&field)?;
    let schedule = build_schedule(&association, &mut key.stream(Substream::Scheduling));
    let variant = point.variant;
    let samples = compute_uplink_sinrs(
        &schedule,
        |bs, ue| field.link(bs, ue),
        |rx, tx, link| {
            let mut s = key.pair_stream(Substream::Fading, rx as u64, tx as u64);
            sample_fading_power(link.is_los, k_factor_linear(link.w_km), variant, &mut s)
        },
        &UplinkParams::from(&pcfg),
    )?;

    Ok(DropOutcome {
        deployment,
        association: Some(association),
        schedule,
        samples,
    })
}

/// One Monte Carlo drop of `point`, deterministic in
/// `(master_seed, point.id, drop_index)`.
pub fn run_drop(cfg: &ScenarioConfig, point: &SweepPoint, drop_index: u64) -> Result<DropResult> {
    Ok(simulate_drop(cfg, point, drop_index)?.summary(drop_index))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct EngineOptions {
    pub workers: usize,
    /// Overrides `stopping.max_drops`.
    pub max_drops: Option<u64>,
}

impl Default for EngineOptions {
    fn default() -> Self {
        EngineOptions {
            workers: std::thread::available_parallelism().map_or(1, |n| n.get()),
            max_drops: None,
        }
    }
}

impl EngineOptions {
    pub fn with_workers(workers: usize) -> Self {
        EngineOptions {
            workers,
            ..EngineOptions::default()
        }
    }

    fn pool(&self) -> Result<rayon::ThreadPool> {
        rayon::ThreadPoolBuilder::new()
            .num_threads(self.workers.max(1))
            .build()
            .map_err(|e| SimError::config("workers", e.to_string()))
    }
}

/// Runs drops of one point until at least `drops` have completed and every
/// coverage CI is within `stopping.ci_target`, or the budget runs out.
pub fn run_point(cfg: &ScenarioConfig, point: &SweepPoint, opts: &EngineOptions) -> Result<SweepPointResult> {
    let pool = opts.pool()?;
    run_point_in(cfg, point, opts, &pool)
}

fn run_point_in(
    cfg: &ScenarioConfig,
    point: &SweepPoint,
    opts: &EngineOptions,
    pool: &rayon::ThreadPool,
) -> Result<SweepPointResult> {
    cfg.validate()?;
    let max_drops = opts.max_drops.unwrap_or(cfg.stopping.max_drops).max(1);
    let min_drops = cfg.drops.min(max_drops);
    let target = cfg.stopping.ci_target;
    let batch = cfg.stopping.batch_drops;

    let mut acc = PointAccumulator::new(&cfg.sinr_thresholds_db);
    let mut next = 0u64;
    while next < max_drops && !(next >= min_drops && acc.widest_ci() <= target) {
        let end = (next + batch).min(max_drops);
        let drops = pool.install(|| {
            (next..end)
                .into_par_iter()
                .map(|d| run_drop(cfg, point, d))
                .collect::<Result<Vec<_>>>()
        })?;
        for d in &drops {
            acc.add(d);
        }
        log::debug!("point {}: {} drops, widest CI {:.4}", point.id, end, acc.widest_ci());
        next = end;
    }

    let (active_density, active_density_se) = acc.active_density();
    let budget_exhausted = acc.widest_ci() > target;
    if budget_exhausted {
        log::warn!(
            "point {} (λ = {}) stopped at {} drops with CI {:.4} > {}",
            point.id,
            point.bs_density,
            acc.n_drops(),
            acc.widest_ci(),
            target
        );
    }
    Ok(SweepPointResult {
        point_id: point.id,
        bs_density: point.bs_density,
        variant: point.variant,
        deployment: point.deployment,
        antenna_height_m: point.antenna_height_m,
        active_density,
        active_density_se,
        analytical_active_density: analytical_active_density(point.bs_density, cfg.ue_density, cfg.idle_mode_q),
        thresholds: acc.thresholds(),
        n_drops: acc.n_drops(),
        budget_exhausted,
    })
}

/// Runs every point of `grid`; results come back in grid order.
pub fn run_sweep(cfg: &ScenarioConfig, grid: &SweepGrid, opts: &EngineOptions) -> Result<Vec<SweepPointResult>> {
    cfg.validate()?;
    grid.validate()?;
    let pool = opts.pool()?;
    let points = grid.points();
    let total = points.len();
    points
        .iter()
        .map(|p| {
            let r = run_point_in(cfg, p, opts, &pool)?;
            log::info!(
                "[{}/{}] {} {} L={} m λ={}: {} drops, λ̃={:.3}",
                p.id + 1,
                total,
                p.variant,
                p.deployment,
                p.antenna_height_m,
                p.bs_density,
                r.n_drops,
                r.active_density
            );
            Ok(r)
        })
        .collect()
}
