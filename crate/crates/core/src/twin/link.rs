//! Path loss and the analytic link-quality proxy.
//!
//! Only trends are meaningful here: the proxy replaces a full RF simulator
//! and traffic generator, so absolute SNR and throughput are not calibrated
//! against any real stack.

use serde::{Deserialize, Serialize};

use super::los::LosStatus;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LinkModel {
    /// Extra loss when the obstacle blocks the path, dB.
    #[serde(rename = "A_obs_db")]
    pub a_obs_db: f64,
    #[serde(rename = "tx_dbm")]
    pub tx_power_dbm: f64,
    #[serde(rename = "noise_dbm")]
    pub noise_floor_dbm: f64,
    pub bandwidth_hz: f64,
    #[serde(default = "default_d_min")]
    pub d_min_m: f64,
    /// Below this SNR the proxy reports zero throughput.
    #[serde(default = "default_demod_threshold")]
    pub demod_threshold_db: f64,
}

fn default_d_min() -> f64 {
    0.1
}

fn default_demod_threshold() -> f64 {
    -5.0
}

impl LinkModel {
    pub fn is_valid(&self) -> bool {
        self.a_obs_db >= 0.0 && self.d_min_m > 0.0 && self.bandwidth_hz > 0.0
    }
}

impl Default for LinkModel {
    fn default() -> Self {
        Self {
            a_obs_db: 25.0,
            tx_power_dbm: -40.0,
            noise_floor_dbm: -90.0,
            bandwidth_hz: 20e6,
            d_min_m: default_d_min(),
            demod_threshold_db: default_demod_threshold(),
        }
    }
}

/// Free-space term resolution. Snapping to a 2⁻³² dB grid keeps
/// `PL + A_obs` exact for any integral `A_obs`.
const DB_GRID: f64 = 4_294_967_296.0;

/// `PL = 20·log10(d) + A_obs·L`, with `d` clamped to `d_min`.
///
/// ```
/// use visionran::twin::{path_loss, LinkModel, LosStatus};
/// let link = LinkModel::default();
/// assert_eq!(path_loss(10.0, LosStatus::Nlos, &link), 45.0);
/// ```
pub fn path_loss(d: f64, los: LosStatus, link: &LinkModel) -> f64 {
    let d = d.max(link.d_min_m);
    let free = (20.0 * d.log10() * DB_GRID).round() / DB_GRID;
    free + link.a_obs_db * los.as_f64()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LinkQuality {
    pub snr_db: f64,
    pub throughput_bps: f64,
}

/// Shannon-capacity proxy for the emulated radio link.
pub fn link_quality(pl_db: f64, link: &LinkModel) -> LinkQuality {
    let snr_db = link.tx_power_dbm - pl_db - link.noise_floor_dbm;
    let throughput_bps = if snr_db < link.demod_threshold_db {
        0.0
    } else {
        link.bandwidth_hz * (1.0 + 10f64.powf(snr_db / 10.0)).log2()
    };
    LinkQuality { snr_db, throughput_bps }
}
