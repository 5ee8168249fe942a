//! Scenario configuration.
//!
//! The on-disk form is TOML whose keys mirror the field names below
//! verbatim (`pathloss.A_los`, `pc.P0_dbm`, ...). Every key is optional; an
//! empty file yields the 3GPP Case parameter set. Unknown keys are rejected.

use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Result, SimError};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum DeploymentKind {
    /// Homogeneous Poisson point process.
    #[serde(rename = "hppp")]
    Hppp,
    /// Triangular lattice of hexagonal cell centres.
    #[serde(rename = "hexagonal")]
    Hexagonal,
}

impl DeploymentKind {
    pub fn as_str(self) -> &'static str {
        match self {
            DeploymentKind::Hppp => "hppp",
            DeploymentKind::Hexagonal => "hexagonal",
        }
    }
}

impl fmt::Display for DeploymentKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ChannelVariant {
    /// Rayleigh fading on every link, no shadowing.
    #[serde(rename = "3gpp")]
    Gpp3,
    /// Rician fading on LoS links and correlated log-normal shadowing.
    #[serde(rename = "3gpp-advanced")]
    Gpp3Advanced,
}

impl ChannelVariant {
    pub fn as_str(self) -> &'static str {
        match self {
            ChannelVariant::Gpp3 => "3gpp",
            ChannelVariant::Gpp3Advanced => "3gpp-advanced",
        }
    }
}

impl fmt::Display for ChannelVariant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum PathLossPreset {
    #[serde(rename = "3gpp-case")]
    Gpp3Case,
}

/// Two-piece 3GPP path loss and LoS probability constants.
///
/// `A_los`/`A_nlos` are linear gains at a 3D distance of 1 km; `R1`, `R2`
/// and `d1` are in meters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PathLossConfig {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub preset: Option<PathLossPreset>,
    #[serde(rename = "A_los")]
    pub a_los: f64,
    #[serde(rename = "A_nlos")]
    pub a_nlos: f64,
    pub alpha_los: f64,
    pub alpha_nlos: f64,
    #[serde(rename = "R1")]
    pub r1: f64,
    #[serde(rename = "R2")]
    pub r2: f64,
    /// Break distance between the two pieces; `R1 / ln 10` when absent.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub d1: Option<f64>,
}

impl PathLossConfig {
    pub fn gpp3_case() -> Self {
        PathLossConfig {
            preset: None,
            a_los: 10f64.powf(-10.38),
            a_nlos: 10f64.powf(-14.54),
            alpha_los: 2.09,
            alpha_nlos: 3.75,
            r1: 156.0,
            r2: 30.0,
            d1: None,
        }
    }

    pub fn d1_m(&self) -> f64 {
        self.d1.unwrap_or(self.r1 / std::f64::consts::LN_10)
    }
}

impl Default for PathLossConfig {
    fn default() -> Self {
        PathLossConfig::gpp3_case()
    }
}

/// Correlated shadow fading, `S_bu = sqrt(tau) S_u + sqrt(1 - tau) S_b`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ShadowConfig {
    /// Standard deviation of each component, dB.
    pub sigma_shad: f64,
    pub tau: f64,
}

impl Default for ShadowConfig {
    fn default() -> Self {
        ShadowConfig {
            sigma_shad: 10.0,
            tau: 0.5,
        }
    }
}

/// Fractional path loss compensation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PowerControlConfig {
    #[serde(rename = "P0_dbm")]
    pub p0_dbm: f64,
    pub eta: f64,
    pub n_rb: u32,
    /// Optional UE transmit power cap, dBm. Off unless set.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub max_tx_dbm: Option<f64>,
}

impl Default for PowerControlConfig {
    fn default() -> Self {
        PowerControlConfig {
            p0_dbm: -76.0,
            eta: 0.8,
            n_rb: 55,
            max_tx_dbm: None,
        }
    }
}

/// How large the simulated torus is for a given pair of densities.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RegionPolicy {
    pub min_expected_bs: u64,
    pub min_expected_ue: u64,
    pub max_bs_cap: u64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub fixed_side_km: Option<f64>,
}

impl Default for RegionPolicy {
    fn default() -> Self {
        RegionPolicy {
            min_expected_bs: 200,
            min_expected_ue: 100,
            max_bs_cap: 20_000,
            fixed_side_km: None,
        }
    }
}

/// Adaptive stopping of a sweep point.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct StoppingConfig {
    /// Target 95% half-width of every coverage estimate.
    pub ci_target: f64,
    pub max_drops: u64,
    /// Drops run between two stopping checks. Fixed so that results do not
    /// depend on the number of workers.
    pub batch_drops: u64,
}

impl Default for StoppingConfig {
    fn default() -> Self {
        StoppingConfig {
            ci_target: 0.01,
            max_drops: 20_000,
            batch_drops: 50,
        }
    }
}

/// Sweep grids. An empty grid means "the single value from the scenario".
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SweepConfig {
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub bs_densities: Vec<f64>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub variants: Vec<ChannelVariant>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub deployments: Vec<DeploymentKind>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub antenna_height_diffs: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ScenarioConfig {
    /// BSs/km².
    pub bs_density: f64,
    /// Active UEs/km².
    pub ue_density: f64,
    pub deployment: DeploymentKind,
    /// BS-UE antenna height difference, meters.
    pub antenna_height_diff: f64,
    pub channel_variant: ChannelVariant,
    pub noise_dbm: f64,
    /// Shape parameter of the active BS density approximation.
    pub idle_mode_q: f64,
    pub sinr_thresholds_db: Vec<f64>,
    /// Minimum number of drops per sweep point.
    pub drops: u64,
    /// Full 64-bit range; values above `i64::MAX` are written as strings.
    #[serde(with = "seed_repr")]
    pub master_seed: u64,
    pub pathloss: PathLossConfig,
    pub shadow: ShadowConfig,
    pub pc: PowerControlConfig,
    pub region_policy: RegionPolicy,
    pub stopping: StoppingConfig,
    pub sweep: SweepConfig,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        ScenarioConfig {
            bs_density: 300.0,
            ue_density: 300.0,
            deployment: DeploymentKind::Hppp,
            antenna_height_diff: 0.0,
            channel_variant: ChannelVariant::Gpp3,
            noise_dbm: -91.0,
            idle_mode_q: 3.5,
            sinr_thresholds_db: vec![0.0, 10.0],
            drops: 200,
            master_seed: 1,
            pathloss: PathLossConfig::default(),
            shadow: ShadowConfig::default(),
            pc: PowerControlConfig::default(),
            region_policy: RegionPolicy::default(),
            stopping: StoppingConfig::default(),
            sweep: SweepConfig::default(),
        }
    }
}

fn positive(key: &str, v: f64) -> Result<()> {
    if v.is_finite() && v > 0.0 {
        Ok(())
    } else {
        Err(SimError::config(key, format!("must be a finite value > 0, got {v}")))
    }
}

fn non_negative(key: &str, v: f64) -> Result<()> {
    if v.is_finite() && v >= 0.0 {
        Ok(())
    } else {
        Err(SimError::config(key, format!("must be a finite value >= 0, got {v}")))
    }
}

fn finite(key: &str, v: f64) -> Result<()> {
    if v.is_finite() {
        Ok(())
    } else {
        Err(SimError::config(key, format!("must be finite, got {v}")))
    }
}

impl ScenarioConfig {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        Self::parse_named(text, Path::new("<string>"))
    }

    /// Reads, parses and validates a configuration file.
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| SimError::io(path, e))?;
        Self::parse_named(&text, path)
    }

    fn parse_named(text: &str, path: &Path) -> Result<Self> {
        let cfg: ScenarioConfig = toml::from_str(text).map_err(|e| SimError::Parse {
            path: path.to_path_buf(),
            message: e.to_string(),
        })?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string(self).expect("configuration always serializes")
    }

    pub fn validate(&self) -> Result<()> {
        positive("bs_density", self.bs_density)?;
        positive("ue_density", self.ue_density)?;
        non_negative("antenna_height_diff", self.antenna_height_diff)?;
        finite("noise_dbm", self.noise_dbm)?;
        positive("idle_mode_q", self.idle_mode_q)?;
        if self.sinr_thresholds_db.is_empty() {
            return Err(SimError::config("sinr_thresholds_db", "at least one threshold is required"));
        }
        for &g in &self.sinr_thresholds_db {
            finite("sinr_thresholds_db", g)?;
        }
        if self.drops == 0 {
            return Err(SimError::config("drops", "must be a positive integer"));
        }

        let pl = &self.pathloss;
        positive("pathloss.A_los", pl.a_los)?;
        positive("pathloss.A_nlos", pl.a_nlos)?;
        positive("pathloss.alpha_los", pl.alpha_los)?;
        positive("pathloss.alpha_nlos", pl.alpha_nlos)?;
        positive("pathloss.R1", pl.r1)?;
        positive("pathloss.R2", pl.r2)?;
        if let Some(d1) = pl.d1 {
            positive("pathloss.d1", d1)?;
        }
        if pl.preset == Some(PathLossPreset::Gpp3Case) {
            let reference = PathLossConfig::gpp3_case();
            let pairs = [
                ("pathloss.A_los", pl.a_los, reference.a_los),
                ("pathloss.A_nlos", pl.a_nlos, reference.a_nlos),
                ("pathloss.alpha_los", pl.alpha_los, reference.alpha_los),
                ("pathloss.alpha_nlos", pl.alpha_nlos, reference.alpha_nlos),
                ("pathloss.R1", pl.r1, reference.r1),
                ("pathloss.R2", pl.r2, reference.r2),
                ("pathloss.d1", pl.d1_m(), reference.d1_m()),
            ];
            for (key, got, want) in pairs {
                if got != want {
                    return Err(SimError::config(
                        key,
                        format!("conflicts with pathloss.preset = \"3gpp-case\" ({got} != {want})"),
                    ));
                }
            }
        }

        non_negative("shadow.sigma_shad", self.shadow.sigma_shad)?;
        let tau = self.shadow.tau;
        if !(0.0..=1.0).contains(&tau) {
            return Err(SimError::config("shadow.tau", format!("must lie in [0, 1], got {tau}")));
        }

        finite("pc.P0_dbm", self.pc.p0_dbm)?;
        let eta = self.pc.eta;
        if !(eta > 0.0 && eta <= 1.0) {
            return Err(SimError::config("pc.eta", format!("must lie in (0, 1], got {eta}")));
        }
        if self.pc.n_rb == 0 {
            return Err(SimError::config("pc.n_rb", "must be a positive integer"));
        }
        if let Some(cap) = self.pc.max_tx_dbm {
            finite("pc.max_tx_dbm", cap)?;
        }

        let rp = &self.region_policy;
        if rp.min_expected_bs == 0 {
            return Err(SimError::config("region_policy.min_expected_bs", "must be positive"));
        }
        if rp.min_expected_ue == 0 {
            return Err(SimError::config("region_policy.min_expected_ue", "must be positive"));
        }
        if rp.max_bs_cap == 0 {
            return Err(SimError::config("region_policy.max_bs_cap", "must be positive"));
        }
        if let Some(side) = rp.fixed_side_km {
            positive("region_policy.fixed_side_km", side)?;
        }

        let st = &self.stopping;
        positive("stopping.ci_target", st.ci_target)?;
        if st.batch_drops == 0 {
            return Err(SimError::config("stopping.batch_drops", "must be positive"));
        }
        if st.max_drops < self.drops {
            return Err(SimError::config(
                "stopping.max_drops",
                format!("must be >= drops ({})", self.drops),
            ));
        }

        for &l in &self.sweep.bs_densities {
            positive("sweep.bs_densities", l)?;
        }
        for &l in &self.sweep.antenna_height_diffs {
            non_negative("sweep.antenna_height_diffs", l)?;
        }
        Ok(())
    }

    /// Grid of BS densities, falling back to `bs_density`.
    pub fn bs_density_grid(&self) -> Vec<f64> {
        or_single(&self.sweep.bs_densities, self.bs_density)
    }

    pub fn variant_grid(&self) -> Vec<ChannelVariant> {
        or_single(&self.sweep.variants, self.channel_variant)
    }

    pub fn deployment_grid(&self) -> Vec<DeploymentKind> {
        or_single(&self.sweep.deployments, self.deployment)
    }

    pub fn antenna_height_grid(&self) -> Vec<f64> {
        or_single(&self.sweep.antenna_height_diffs, self.antenna_height_diff)
    }
}

mod seed_repr {
    use serde::de::{self, Visitor};
    use serde::{Deserializer, Serializer};

    pub fn serialize<S: Serializer>(seed: &u64, s: S) -> Result<S::Ok, S::Error> {
        match i64::try_from(*seed) {
            Ok(v) => s.serialize_i64(v),
            Err(_) => s.serialize_str(&seed.to_string()),
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<u64, D::Error> {
        struct SeedVisitor;

        impl Visitor<'_> for SeedVisitor {
            type Value = u64;

            fn expecting(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
                f.write_str("a non-negative integer or a decimal string")
            }

            fn visit_i64<E: de::Error>(self, v: i64) -> Result<u64, E> {
                u64::try_from(v).map_err(|_| E::custom(format!("master_seed must be >= 0, got {v}")))
            }

            fn visit_u64<E: de::Error>(self, v: u64) -> Result<u64, E> {
                Ok(v)
            }

            fn visit_str<E: de::Error>(self, v: &str) -> Result<u64, E> {
                v.parse()
                    .map_err(|_| E::custom(format!("master_seed is not a 64-bit unsigned integer: {v:?}")))
            }
        }

        d.deserialize_any(SeedVisitor)
    }
}

fn or_single<T: Clone>(grid: &[T], single: T) -> Vec<T> {
    if grid.is_empty() {
        vec![single]
    } else {
        grid.to_vec()
    }
}
