//! Fractional power control and uplink SINR.
//!
//! All powers are in mW. The transmit power is the whole FPC product
//! `10^(P0/10) · g^-η · N_RB`, where `g` is the serving link's long-term
//! gain (path loss and shadowing, no multi-path fading).

use crate::config::ScenarioConfig;
use crate::error::{Result, SimError};
use crate::propagation::{db_to_linear, LinkRealization};
use crate::association::Schedule;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UplinkParams {
    pub p0_dbm: f64,
    pub eta: f64,
    pub n_rb: u32,
    pub noise_dbm: f64,
    /// Transmit power cap, dBm. `None` leaves FPC uncapped.
    pub max_tx_dbm: Option<f64>,
}

impl From<&ScenarioConfig> for UplinkParams {
    fn from(cfg: &ScenarioConfig) -> Self {
        UplinkParams {
            p0_dbm: cfg.pc.p0_dbm,
            eta: cfg.pc.eta,
            n_rb: cfg.pc.n_rb,
            noise_dbm: cfg.noise_dbm,
            max_tx_dbm: cfg.pc.max_tx_dbm,
        }
    }
}

impl UplinkParams {
    pub fn noise_mw(&self) -> f64 {
        db_to_linear(self.noise_dbm)
    }

    fn tx_power(&self, gain: f64) -> Result<f64> {
        let p = ue_tx_power(gain, self.p0_dbm, self.eta, self.n_rb)?;
        Ok(match self.max_tx_dbm {
            Some(cap) => p.min(db_to_linear(cap)),
            None => p,
        })
    }
}

/// FPC transmit power in mW, `10^(P0/10) · gain^-η · N_RB`.
pub fn ue_tx_power(long_term_gain: f64, p0_dbm: f64, eta: f64, n_rb: u32) -> Result<f64> {
    if !(long_term_gain > 0.0 && long_term_gain.is_finite()) {
        return Err(SimError::Domain(format!(
            "power control needs a positive gain, got {long_term_gain}"
        )));
    }
    Ok(db_to_linear(p0_dbm) * long_term_gain.powf(-eta) * n_rb as f64)
}

/// SINR of one scheduled UE at its serving BS.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UplinkSample {
    pub ue_index: usize,
    pub serving_bs: usize,
    pub tx_power_mw: f64,
    pub signal_mw: f64,
    pub interference_mw: f64,
    pub noise_mw: f64,
    pub sinr_linear: f64,
}

impl UplinkSample {
    pub fn sinr_db(&self) -> f64 {
        10.0 * self.sinr_linear.log10()
    }
}

/// Evaluates the uplink SINR of every scheduled UE.
///
/// `link(bs, ue)` supplies the drop's long-term link state and
/// `fading(rx_bs, tx_ue, link)` a multi-path fading power for one
/// transmitter/receiver pair. Interference at a BS is the sum, in schedule
/// order, over the scheduled UEs of every other active BS.
pub fn compute_uplink_sinrs(
    schedule: &Schedule,
    link: impl Fn(usize, usize) -> LinkRealization,
    fading: impl Fn(usize, usize, &LinkRealization) -> f64,
    params: &UplinkParams,
) -> Result<Vec<UplinkSample>> {
    let noise_mw = params.noise_mw();
    let tx_power = schedule
        .pairs()
        .map(|(bs, ue)| params.tx_power(link(bs, ue).long_term_gain))
        .collect::<Result<Vec<f64>>>()?;

    let samples = schedule
        .pairs()
        .enumerate()
        .map(|(o, (rx, ue))| {
            let own = link(rx, ue);
            let signal_mw = tx_power[o] * own.long_term_gain * fading(rx, ue, &own);
            let mut interference_mw = 0.0;
            for (i, (_, tx)) in schedule.pairs().enumerate() {
                if i == o {
                    continue;
                }
                let cross = link(rx, tx);
                interference_mw += tx_power[i] * cross.long_term_gain * fading(rx, tx, &cross);
            }
            UplinkSample {
                ue_index: ue,
                serving_bs: rx,
                tx_power_mw: tx_power[o],
                signal_mw,
                interference_mw,
                noise_mw,
                sinr_linear: signal_mw / (interference_mw + noise_mw),
            }
        })
        .collect();
    Ok(samples)
}
