//! Closed-loop emulation: agents, bus, xApp and twin in lockstep, plus the
//! comparison, localization and output tooling around it.

mod compare;
mod localization;
mod output;
mod replay;
mod run;

use thiserror::Error;

pub use compare::{compare, nlos_reduction, CompareRow, Comparison};
pub use localization::{eval_localization, AxisStats, LocalizationStats};
pub use output::{
    decision_header, emit_outputs, line_plot, metric_plots, write_compare_csv, write_decisions_csv,
    write_localization_csv, write_run_csv, Marker, Series, RUN_HEADER,
};
pub use replay::{read_decisions, replay, LoggedDecision, ReplayOutcome};
pub use run::{
    bindings, first_tick_at, is_control_epoch, nlos_ticks, run_scenario, run_with, Mode, NoiseProfile,
    RunOptions, RunReport, TickRecord,
};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum HarnessError {
    #[error("scenario: {0}")]
    Scenario(String),
    #[error("policy: {0}")]
    Policy(String),
    #[error("controlled mode needs a policy")]
    PolicyRequired,
    #[error("runs differ in length: baseline {baseline_s} s, other {other_s} s")]
    DurationMismatch { baseline_s: f64, other_s: f64 },
    #[error("bus: {0}")]
    Bus(String),
    #[error("replay: {0}")]
    Replay(String),
    #[error("io: {0}")]
    Io(String),
}
