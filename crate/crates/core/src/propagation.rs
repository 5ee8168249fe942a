//! Per-link channel realization.
//!
//! Distances fed to the path loss are in km (the `A` constants are the gains
//! at 1 km). LoS probabilities and the Rician K-factor take their
//! distance constants in meters and convert internally.

use rand::{Rng, RngCore};
use rand_distr::{Exp1, StandardNormal};

use crate::config::{ChannelVariant, PathLossConfig, ScenarioConfig};
use crate::error::{Result, SimError};
use crate::rng::{open01, DropKey, Substream, IMPOSSIBLE_PROBABILITY};
use crate::scenario::{torus_distance_2d, Deployment};

/// 3D BS-UE distance in km from the 2D distance `r_km` and the antenna
/// height difference `l_m` (meters).
#[inline]
pub fn distance_3d(r_km: f64, l_m: f64) -> f64 {
    r_km.hypot(l_m / 1000.0)
}

/// LoS probability of one path loss piece as a function of 3D distance.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum LosProbability {
    /// `1 - 5 exp(-R1 / w)`.
    OneMinusFiveExp { r1_m: f64 },
    /// `5 exp(-w / R2)`.
    FiveExp { r2_m: f64 },
    Constant(f64),
}

impl LosProbability {
    /// Probability at 3D distance `w_km`, clamped to [0, 1].
    #[inline]
    pub fn eval(&self, w_km: f64) -> f64 {
        let w_m = w_km * 1000.0;
        let p = match *self {
            LosProbability::OneMinusFiveExp { r1_m } => 1.0 - 5.0 * (-r1_m / w_m).exp(),
            LosProbability::FiveExp { r2_m } => 5.0 * (-w_m / r2_m).exp(),
            LosProbability::Constant(p) => p,
        };
        p.clamp(0.0, 1.0)
    }
}

/// One piece `A w^-alpha` of the multi-piece path loss, valid up to
/// `upper_km` (inclusive).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PathLossPiece {
    pub upper_km: f64,
    pub a_los: f64,
    pub a_nlos: f64,
    pub alpha_los: f64,
    pub alpha_nlos: f64,
    pub los_prob: LosProbability,
}

impl PathLossPiece {
    #[inline]
    fn gain(&self, w_km: f64, is_los: bool) -> f64 {
        if is_los {
            self.a_los * w_km.powf(-self.alpha_los)
        } else {
            self.a_nlos * w_km.powf(-self.alpha_nlos)
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PathLossModel {
    pieces: Vec<PathLossPiece>,
    /// Beyond this 3D distance a LoS draw can never succeed.
    los_cutoff_km: f64,
}

impl PathLossModel {
    /// Builds a model from pieces ordered by break distance. The last piece
    /// must be unbounded.
    pub fn new(pieces: Vec<PathLossPiece>) -> Result<Self> {
        let Some(last) = pieces.last() else {
            return Err(SimError::config("pathloss", "at least one piece is required"));
        };
        if last.upper_km != f64::INFINITY {
            return Err(SimError::config("pathloss", "the last piece must be unbounded"));
        }
        let mut previous = 0.0;
        for (n, p) in pieces.iter().enumerate() {
            if !(p.upper_km > previous) {
                return Err(SimError::config(
                    "pathloss",
                    format!("break distances must increase strictly (piece {n})"),
                ));
            }
            previous = p.upper_km;
            for (name, v) in [
                ("A_los", p.a_los),
                ("A_nlos", p.a_nlos),
                ("alpha_los", p.alpha_los),
                ("alpha_nlos", p.alpha_nlos),
            ] {
                if !(v.is_finite() && v > 0.0) {
                    return Err(SimError::config(format!("pathloss.{name}"), format!("must be > 0, got {v}")));
                }
            }
        }
        let los_cutoff_km = los_cutoff(&pieces);
        Ok(PathLossModel {
            pieces,
            los_cutoff_km,
        })
    }

    /// The two-piece 3GPP model: shared LoS/NLoS constants, LoS probability
    /// `1 - 5 exp(-R1/w)` up to `d1` and `5 exp(-w/R2)` beyond.
    pub fn from_config(pl: &PathLossConfig) -> Result<Self> {
        let shared = |upper_km, los_prob| PathLossPiece {
            upper_km,
            a_los: pl.a_los,
            a_nlos: pl.a_nlos,
            alpha_los: pl.alpha_los,
            alpha_nlos: pl.alpha_nlos,
            los_prob,
        };
        PathLossModel::new(vec![
            shared(pl.d1_m() / 1000.0, LosProbability::OneMinusFiveExp { r1_m: pl.r1 }),
            shared(f64::INFINITY, LosProbability::FiveExp { r2_m: pl.r2 }),
        ])
    }

    pub fn gpp3_case() -> Self {
        PathLossModel::from_config(&PathLossConfig::gpp3_case()).expect("preset constants are valid")
    }

    pub fn pieces(&self) -> &[PathLossPiece] {
        &self.pieces
    }

    pub fn los_cutoff_km(&self) -> f64 {
        self.los_cutoff_km
    }

    #[inline]
    fn piece(&self, w_km: f64) -> &PathLossPiece {
        self.pieces
            .iter()
            .find(|p| w_km <= p.upper_km)
            .unwrap_or_else(|| self.pieces.last().expect("non-empty"))
    }

    #[inline]
    pub fn los_probability(&self, w_km: f64) -> f64 {
        self.piece(w_km).los_prob.eval(w_km)
    }

    /// Linear path loss gain at 3D distance `w_km` in the given LoS state.
    pub fn path_loss(&self, w_km: f64, is_los: bool) -> Result<f64> {
        check_distance(w_km)?;
        Ok(self.piece(w_km).gain(w_km, is_los))
    }

    /// Upper bound of the gain of any link at 3D distance `>= w_km`, over
    /// both LoS states where LoS is still possible.
    pub fn max_gain_beyond(&self, w_km: f64) -> f64 {
        let mut lower = 0.0;
        let mut best = 0.0f64;
        for p in &self.pieces {
            if p.upper_km >= w_km {
                let w = w_km.max(lower);
                if w > 0.0 {
                    best = best.max(p.gain(w, false));
                    if w < self.los_cutoff_km {
                        best = best.max(p.gain(w, true));
                    }
                } else {
                    return f64::INFINITY;
                }
            }
            lower = p.upper_km;
        }
        best
    }
}

/// Smallest distance beyond which every LoS probability is at most
/// [`IMPOSSIBLE_PROBABILITY`], assuming the last piece is non-increasing.
fn los_cutoff(pieces: &[PathLossPiece]) -> f64 {
    let last = pieces.last().expect("non-empty");
    let start = if pieces.len() > 1 {
        pieces[pieces.len() - 2].upper_km
    } else {
        0.0
    };
    let impossible = |w: f64| last.los_prob.eval(w) <= IMPOSSIBLE_PROBABILITY;
    let mut hi = start.max(1e-3);
    while !impossible(hi) {
        hi *= 2.0;
        if hi > 1e9 {
            return f64::INFINITY;
        }
    }
    let mut lo = start;
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if impossible(mid) {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    hi
}

fn check_distance(w_km: f64) -> Result<()> {
    if w_km > 0.0 && w_km.is_finite() {
        Ok(())
    } else {
        Err(SimError::Domain(format!("path loss is singular at w = {w_km} km")))
    }
}

/// 3GPP Case LoS probability with `R1 = 156 m`, `R2 = 30 m`, `d1 = R1/ln 10`.
pub fn los_probability_3gpp(w_km: f64) -> Result<f64> {
    check_distance(w_km)?;
    let pl = PathLossConfig::gpp3_case();
    let p = if w_km * 1000.0 <= pl.d1_m() {
        LosProbability::OneMinusFiveExp { r1_m: pl.r1 }
    } else {
        LosProbability::FiveExp { r2_m: pl.r2 }
    };
    Ok(p.eval(w_km))
}

/// Linear gain `A w^-alpha` of the piece containing `w_km`.
pub fn path_loss(w_km: f64, is_los: bool, model: &PathLossModel) -> Result<f64> {
    model.path_loss(w_km, is_los)
}

/// Rician K-factor (linear) for LoS links, `K[dB] = 13 - 0.03 w` with `w` in
/// meters, floored at 0 dB.
#[inline]
pub fn k_factor_linear(w_km: f64) -> f64 {
    let k_db = (13.0 - 0.03 * w_km * 1000.0).max(0.0);
    10f64.powf(k_db / 10.0)
}

/// Unit-mean multi-path fading power.
///
/// Rayleigh (exponential power) everywhere for the 3GPP Case; in the
/// Advanced case LoS links are Rician with factor `k`, built directly from
/// a complex Gaussian around the direct-path phasor.
pub fn sample_fading_power<R: Rng + ?Sized>(
    is_los: bool,
    k: f64,
    variant: ChannelVariant,
    rng: &mut R,
) -> f64 {
    match (variant, is_los) {
        (ChannelVariant::Gpp3Advanced, true) => rician_power(k, rng),
        _ => rng.sample(Exp1),
    }
}

fn rician_power<R: Rng + ?Sized>(k: f64, rng: &mut R) -> f64 {
    let direct = (k / (k + 1.0)).sqrt();
    let scatter = (0.5 / (k + 1.0)).sqrt();
    let re = direct + scatter * rng.sample::<f64, _>(StandardNormal);
    let im = scatter * rng.sample::<f64, _>(StandardNormal);
    re * re + im * im
}

/// Correlated shadowing components of one drop, in dB.
#[derive(Debug, Clone, PartialEq)]
pub struct ShadowModel {
    pub sigma_db: f64,
    pub tau: f64,
    pub ue_db: Vec<f64>,
    pub bs_db: Vec<f64>,
    ue_weight: f64,
    bs_weight: f64,
}

impl ShadowModel {
    pub fn new(sigma_db: f64, tau: f64, ue_db: Vec<f64>, bs_db: Vec<f64>) -> Self {
        ShadowModel {
            sigma_db,
            tau,
            ue_db,
            bs_db,
            ue_weight: tau.sqrt(),
            bs_weight: (1.0 - tau).sqrt(),
        }
    }

    /// Draws `n_bs` BS components and then `n_ue` UE components.
    pub fn sample<R: Rng + ?Sized>(sigma_db: f64, tau: f64, n_bs: usize, n_ue: usize, rng: &mut R) -> Self {
        let mut draw = |n| -> Vec<f64> {
            (0..n)
                .map(|_| sigma_db * rng.sample::<f64, _>(StandardNormal))
                .collect()
        };
        let bs_db = draw(n_bs);
        let ue_db = draw(n_ue);
        ShadowModel::new(sigma_db, tau, ue_db, bs_db)
    }

    /// `S_bu = sqrt(tau) S_u + sqrt(1 - tau) S_b`.
    #[inline]
    pub fn link_db(&self, bs: usize, ue: usize) -> f64 {
        self.ue_weight * self.ue_db[ue] + self.bs_weight * self.bs_db[bs]
    }

    pub fn ue_term_db(&self, ue: usize) -> f64 {
        self.ue_weight * self.ue_db[ue]
    }

    /// Largest BS term over the drop.
    pub fn max_bs_term_db(&self) -> f64 {
        self.bs_db
            .iter()
            .fold(f64::NEG_INFINITY, |m, &s| m.max(self.bs_weight * s))
    }
}

/// Long-term state of one BS-UE link within a drop.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinkRealization {
    pub r_km: f64,
    pub w_km: f64,
    pub is_los: bool,
    pub shadow_db: f64,
    /// `zeta(w) * 10^(S/10)`, linear.
    pub long_term_gain: f64,
}

impl LinkRealization {
    /// Link with a given LoS state.
    pub fn with_state(
        r_km: f64,
        l_m: f64,
        model: &PathLossModel,
        is_los: bool,
        shadow_db: f64,
    ) -> Result<Self> {
        let w_km = distance_3d(r_km, l_m);
        let zeta = model.path_loss(w_km, is_los)?;
        Ok(LinkRealization {
            r_km,
            w_km,
            is_los,
            shadow_db,
            long_term_gain: zeta * db_to_linear(shadow_db),
        })
    }
}

/// Realizes a link: one Bernoulli LoS draw from `rng`, then path loss and
/// the given shadowing (0 dB in the 3GPP Case).
pub fn realize_link<R: RngCore + ?Sized>(
    r_km: f64,
    l_m: f64,
    model: &PathLossModel,
    shadow_db: f64,
    rng: &mut R,
) -> Result<LinkRealization> {
    let w_km = distance_3d(r_km, l_m);
    let is_los = open01(rng.next_u64()) < model.los_probability(w_km);
    LinkRealization::with_state(r_km, l_m, model, is_los, shadow_db)
}

#[inline]
pub fn db_to_linear(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

/// Lazily realized links of one drop.
///
/// Each link's LoS draw comes from a counter-based stream addressed by
/// `(bs, ue)`, so `link(b, u)` returns the same realization however often
/// and in whatever order it is called.
#[derive(Debug)]
pub struct LinkField<'a> {
    pub deployment: &'a Deployment,
    pub model: &'a PathLossModel,
    pub antenna_height_m: f64,
    pub shadow: Option<&'a ShadowModel>,
    pub key: DropKey,
    min_w_km: f64,
    max_bs_term_db: f64,
}

impl<'a> LinkField<'a> {
    pub fn new(
        deployment: &'a Deployment,
        model: &'a PathLossModel,
        antenna_height_m: f64,
        shadow: Option<&'a ShadowModel>,
        key: DropKey,
    ) -> Self {
        let max_bs_term_db = shadow.map_or(0.0, ShadowModel::max_bs_term_db);
        LinkField {
            deployment,
            model,
            antenna_height_m,
            shadow,
            key,
            min_w_km: antenna_height_m / 1000.0,
            max_bs_term_db,
        }
    }

    pub fn n_bs(&self) -> usize {
        self.deployment.bs_points.len()
    }

    pub fn n_ue(&self) -> usize {
        self.deployment.ue_points.len()
    }

    /// 2D torus distance between `bs` and `ue`, km.
    #[inline]
    pub fn distance(&self, bs: usize, ue: usize) -> f64 {
        torus_distance_2d(
            self.deployment.bs_points[bs],
            self.deployment.ue_points[ue],
            &self.deployment.region,
        )
    }

    #[inline]
    pub fn link(&self, bs: usize, ue: usize) -> LinkRealization {
        let r = self.distance(bs, ue);
        let shadow_db = self.shadow.map_or(0.0, |s| s.link_db(bs, ue));
        let mut stream = self.key.pair_stream(Substream::LosDraws, bs as u64, ue as u64);
        // Coincident points at L = 0 have probability zero; keep them 1 mm
        // apart rather than fail the drop on the singularity.
        let r = if self.antenna_height_m == 0.0 { r.max(1e-6) } else { r };
        realize_link(r, self.antenna_height_m, self.model, shadow_db, &mut stream)
            .expect("positive distance")
    }

    /// Upper bound of `link(b, ue).long_term_gain` over all BSs at 2D
    /// distance `>= r_min_km` from `ue`.
    #[inline]
    pub fn gain_bound(&self, ue: usize, r_min_km: f64) -> f64 {
        let w = distance_3d(r_min_km, self.antenna_height_m).max(self.min_w_km);
        let shadow = self
            .shadow
            .map_or(0.0, |s| s.ue_term_db(ue) + self.max_bs_term_db);
        self.model.max_gain_beyond(w) * db_to_linear(shadow) * (1.0 + 1e-9)
    }
}

/// Path loss model selected by the configuration.
pub fn model_for(cfg: &ScenarioConfig) -> Result<PathLossModel> {
    PathLossModel::from_config(&cfg.pathloss)
}
