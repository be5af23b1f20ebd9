use std::io::Read;

use super::localization::LocalizationAccumulator;
use super::output::decision_header;
use super::run::{apply_control, record, Mode, NoiseProfile, RunReport};
use super::HarnessError;
use crate::dqn::Policy;
use crate::sm::PosControl;
use crate::twin::{step_world, Action, Scene, ScenarioConfig};
use crate::units::{meters_to_cm, tick_to_micros};
use crate::xapp::{decide_and_control, ControllerConfig, StateVector, STATE_DIM};

/// One parsed row of a decision log.
#[derive(Debug, Clone, PartialEq)]
pub struct LoggedDecision {
    pub tick: u64,
    pub state: StateVector,
    pub q: [f64; 3],
    pub action: Action,
    pub x_target: f64,
    pub ctrl_x_cm: i32,
}

fn bad(row: usize, what: &str) -> HarnessError {
    HarnessError::Replay(format!("row {row}: {what}"))
}

pub fn read_decisions<R: Read>(input: R) -> Result<Vec<LoggedDecision>, HarnessError> {
    let mut rd = csv::Reader::from_reader(input);
    let header: Vec<String> = rd.headers().map_err(|e| HarnessError::Replay(e.to_string()))?.iter().map(String::from).collect();
    if header != decision_header() {
        return Err(HarnessError::Replay(format!("unexpected header {header:?}")));
    }
    let mut out = Vec::new();
    for (i, rec) in rd.records().enumerate() {
        let rec = rec.map_err(|e| HarnessError::Replay(e.to_string()))?;
        let f = |j: usize| rec[j].parse::<f64>().map_err(|_| bad(i, &format!("column {j} is not a number")));
        let tick = rec[0].parse::<u64>().map_err(|_| bad(i, "bad tick"))?;
        let mut a = [0.0; STATE_DIM];
        for (k, v) in a.iter_mut().enumerate() {
            *v = f(2 + k)?;
        }
        let state = StateVector::from_array(&a).ok_or_else(|| bad(i, "L_status must be 0 or 1"))?;
        let q = [f(13)?, f(14)?, f(15)?];
        let action = rec[16].parse::<usize>().ok().and_then(Action::from_index).ok_or_else(|| bad(i, "bad action"))?;
        let x_target = f(18)?;
        let ctrl_x_cm = rec[19].parse::<i32>().map_err(|_| bad(i, "bad ctrl_x_cm"))?;
        out.push(LoggedDecision { tick, state, q, action, x_target, ctrl_x_cm });
    }
    Ok(out)
}

#[derive(Debug, Clone)]
pub struct ReplayOutcome {
    pub report: RunReport,
    /// Ticks where the supplied policy would have chosen differently.
    pub mismatches: Vec<u64>,
}

/// Re-drives the twin with the logged commands, bypassing perception and
/// the xApp. With a policy, also re-decides every logged state and reports
/// disagreements.
pub fn replay(cfg: &ScenarioConfig, log: &[LoggedDecision], policy: Option<&Policy>) -> Result<ReplayOutcome, HarnessError> {
    cfg.validate().map_err(|e| HarnessError::Scenario(e.to_string()))?;
    let scene = Scene::from_config(cfg);
    let ctl = ControllerConfig::from_scenario(cfg);
    let dt = cfg.frame_period();
    let mut world = scene.initial_state();
    let mut target = world.gnb.position.x;
    let mut ticks = Vec::new();
    let mut controls = Vec::new();
    let mut next = log.iter().peekable();
    for k in 0..cfg.frame_count() {
        while let Some(d) = next.next_if(|d| d.tick == k) {
            let ctrl = PosControl {
                x: d.ctrl_x_cm,
                y: meters_to_cm(world.gnb.position.y),
                z: meters_to_cm(world.gnb.position.z),
                tstamp: tick_to_micros(k, cfg.fps),
            };
            apply_control(&ctrl, &mut world, &scene);
            target = crate::units::cm_to_meters(ctrl.x);
            controls.push((k, ctrl));
        }
        ticks.push(record(&world, &scene, cfg.fps));
        world = step_world(&scene, &world, target, dt);
    }
    if let Some(d) = next.next() {
        return Err(HarnessError::Replay(format!("decision at tick {} is outside the scenario", d.tick)));
    }

    let mut mismatches = Vec::new();
    if let Some(p) = policy {
        p.check_controller(&ctl).map_err(|e| HarnessError::Policy(e.to_string()))?;
        for d in log {
            let again = decide_and_control(&d.state, &ctl, Some(p), (0, 0), 0).map_err(|e| HarnessError::Replay(e.to_string()))?;
            if again.action != d.action || again.control.x != d.ctrl_x_cm {
                mismatches.push(d.tick);
            }
        }
    }

    let mut report = RunReport {
        scenario: cfg.name.clone(),
        mode: Mode::Controlled,
        seed: 0,
        noise: NoiseProfile::Zero,
        fps: cfg.fps,
        duration_s: cfg.frame_count() as f64 * dt,
        nlos_s: 0.0,
        los_s: 0.0,
        mean_pl_db: 0.0,
        mean_snr_db: 0.0,
        mean_thr_bps: 0.0,
        transitions_s: Vec::new(),
        xapp_start_tick: log.first().map(|d| d.tick),
        first_move_tick: None,
        localization: LocalizationAccumulator::new(world.obstacle.center).finish(),
        ticks,
        decisions: Vec::new(),
        controls,
    };
    report.summarize(dt);
    Ok(ReplayOutcome { report, mismatches })
}
