use serde::Serialize;

use super::run::RunReport;
use super::HarnessError;

/// `1 − ctrl / static`, or 0 when the baseline has no NLoS time.
pub fn nlos_reduction(static_nlos_s: f64, ctrl_nlos_s: f64) -> f64 {
    if static_nlos_s <= 0.0 {
        return 0.0;
    }
    1.0 - ctrl_nlos_s / static_nlos_s
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CompareRow {
    pub tick: u64,
    pub t_s: f64,
    pub gnb_x_static: f64,
    pub gnb_x_ctrl: f64,
    #[serde(rename = "L_static")]
    pub l_static: u8,
    #[serde(rename = "L_ctrl")]
    pub l_ctrl: u8,
    pub pl_static: f64,
    pub pl_ctrl: f64,
    pub snr_static: f64,
    pub snr_ctrl: f64,
    pub thr_static: f64,
    pub thr_ctrl: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Comparison {
    pub duration_s: f64,
    pub nlos_static_s: f64,
    pub nlos_ctrl_s: f64,
    /// Fraction in `(−∞, 1]`; 0.75 means a 75% reduction.
    pub nlos_reduction: f64,
    pub mean_pl_static: f64,
    pub mean_pl_ctrl: f64,
    pub mean_snr_static: f64,
    pub mean_snr_ctrl: f64,
    pub mean_thr_static: f64,
    pub mean_thr_ctrl: f64,
    #[serde(skip)]
    pub rows: Vec<CompareRow>,
}

/// Pairs two runs of the same scenario tick by tick.
pub fn compare(baseline: &RunReport, ctrl: &RunReport) -> Result<Comparison, HarnessError> {
    if baseline.ticks.len() != ctrl.ticks.len() || baseline.duration_s != ctrl.duration_s {
        return Err(HarnessError::DurationMismatch {
            baseline_s: baseline.duration_s,
            other_s: ctrl.duration_s,
        });
    }
    let rows = baseline
        .ticks
        .iter()
        .zip(&ctrl.ticks)
        .map(|(s, c)| CompareRow {
            tick: s.tick,
            t_s: s.t_s,
            gnb_x_static: s.gnb_x,
            gnb_x_ctrl: c.gnb_x,
            l_static: s.l_status,
            l_ctrl: c.l_status,
            pl_static: s.pl_db,
            pl_ctrl: c.pl_db,
            snr_static: s.snr_db,
            snr_ctrl: c.snr_db,
            thr_static: s.thr_bps,
            thr_ctrl: c.thr_bps,
        })
        .collect();
    Ok(Comparison {
        duration_s: baseline.duration_s,
        nlos_static_s: baseline.nlos_s,
        nlos_ctrl_s: ctrl.nlos_s,
        nlos_reduction: nlos_reduction(baseline.nlos_s, ctrl.nlos_s),
        mean_pl_static: baseline.mean_pl_db,
        mean_pl_ctrl: ctrl.mean_pl_db,
        mean_snr_static: baseline.mean_snr_db,
        mean_snr_ctrl: ctrl.mean_snr_db,
        mean_thr_static: baseline.mean_thr_bps,
        mean_thr_ctrl: ctrl.mean_thr_bps,
        rows,
    })
}
