use std::fs::File;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};

use visionran::dqn::{random_baseline, train, twin_training_env, write_log_csv, Policy, TrainConfig};
use visionran::harness::{
    compare, emit_outputs, eval_localization, read_decisions, replay, run_scenario, write_run_csv, Mode,
    NoiseProfile, RunOptions,
};
use visionran::twin::ScenarioConfig;
use visionran::xapp::Normalization;

#[derive(Parser)]
#[command(name = "visionran", version, about = "Vision-aided gNB mobility emulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Train a DQN policy on the scenario's twin.
    Train(TrainArgs),
    /// Run the closed loop once.
    Run(RunArgs),
    /// Run static and controlled back to back and compare them.
    Compare(CompareArgs),
    /// Obstacle localization accuracy over every frame.
    EvalLoc(LocArgs),
    /// Re-drive the twin from a decision log.
    Replay(ReplayArgs),
}

#[derive(Args)]
struct Common {
    #[arg(long)]
    scenario: PathBuf,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value = "out")]
    out_dir: PathBuf,
}

#[derive(Clone, Copy, ValueEnum)]
enum ModeArg {
    Static,
    Controlled,
}

#[derive(Clone, Copy, ValueEnum)]
enum NoiseArg {
    Zero,
    Calibrated,
}

impl From<NoiseArg> for NoiseProfile {
    fn from(n: NoiseArg) -> Self {
        match n {
            NoiseArg::Zero => NoiseProfile::Zero,
            NoiseArg::Calibrated => NoiseProfile::Calibrated,
        }
    }
}

#[derive(Args)]
struct TrainArgs {
    #[command(flatten)]
    common: Common,
    /// Where to write the policy; defaults to `<out-dir>/policy.json`.
    #[arg(long)]
    policy: Option<PathBuf>,
    #[arg(long)]
    episodes: Option<usize>,
}

#[derive(Args)]
struct RunArgs {
    #[command(flatten)]
    common: Common,
    #[arg(long, value_enum)]
    mode: ModeArg,
    #[arg(long)]
    policy: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "calibrated")]
    noise_profile: NoiseArg,
}

#[derive(Args)]
struct CompareArgs {
    #[command(flatten)]
    common: Common,
    #[arg(long)]
    policy: PathBuf,
    #[arg(long, value_enum, default_value = "calibrated")]
    noise_profile: NoiseArg,
}

#[derive(Args)]
struct LocArgs {
    #[command(flatten)]
    common: Common,
    #[arg(long, value_enum, default_value = "calibrated")]
    noise_profile: NoiseArg,
}

#[derive(Args)]
struct ReplayArgs {
    #[command(flatten)]
    common: Common,
    /// Decision log written by `run` or `compare`.
    #[arg(long)]
    decisions: PathBuf,
    /// Optional policy to re-check every logged decision against.
    #[arg(long)]
    policy: Option<PathBuf>,
}

fn load_scenario(path: &Path) -> Result<ScenarioConfig> {
    ScenarioConfig::load(path).with_context(|| format!("loading scenario {}", path.display()))
}

fn load_policy(path: &Path) -> Result<Policy> {
    Policy::load(path).with_context(|| format!("loading policy {}", path.display()))
}

fn print_written(paths: &[PathBuf]) {
    for p in paths {
        println!("wrote {}", p.display());
    }
}

fn cmd_train(a: &TrainArgs) -> Result<()> {
    let scenario = load_scenario(&a.common.scenario)?;
    let mut cfg = TrainConfig { seed: a.common.seed, ..TrainConfig::default() };
    if let Some(e) = a.episodes {
        cfg.episodes = e;
    }
    let mut env = twin_training_env(&scenario)?;
    let out = train(&mut env, &cfg)?;
    let baseline = random_baseline(&mut env, 100, cfg.seed)?;

    std::fs::create_dir_all(&a.common.out_dir)?;
    let log_path = a.common.out_dir.join("train_log.csv");
    write_log_csv(&out.log, File::create(&log_path)?)?;
    let policy_path = a.policy.clone().unwrap_or_else(|| a.common.out_dir.join("policy.json"));
    if let Some(dir) = policy_path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir)?;
    }
    let policy = Policy::new(out.net, Normalization::from_scenario(&scenario), &scenario.control)?;
    policy.save(&policy_path)?;

    let tail = out.log.len().min(100);
    let trained = out.log[out.log.len() - tail..].iter().map(|l| l.nlos_fraction).sum::<f64>() / tail.max(1) as f64;
    let random = baseline.iter().map(|l| l.nlos_fraction).sum::<f64>() / baseline.len().max(1) as f64;
    println!("steps {} updates {}", out.env_steps, out.updates);
    println!("nlos fraction: last {tail} episodes {trained:.4}, random policy {random:.4}");
    print_written(&[log_path, policy_path]);
    Ok(())
}

fn cmd_run(a: &RunArgs) -> Result<()> {
    let scenario = load_scenario(&a.common.scenario)?;
    let mode = match a.mode {
        ModeArg::Static => Mode::Static,
        ModeArg::Controlled => Mode::Controlled,
    };
    let policy = match (&a.policy, mode) {
        (Some(p), _) => Some(load_policy(p)?),
        (None, Mode::Controlled) => bail!("--mode controlled needs --policy"),
        (None, Mode::Static) => None,
    };
    let opts = RunOptions { mode, seed: a.common.seed, noise: a.noise_profile.into() };
    let report = run_scenario(&scenario, &opts, policy.as_ref())?;
    println!("{}: NLoS {:.3} s of {:.3} s, mean throughput {:.4e} bit/s", mode.as_str(), report.nlos_s, report.duration_s, report.mean_thr_bps);
    print_written(&emit_outputs(&a.common.out_dir, &[&report], None, None)?);
    Ok(())
}

fn cmd_compare(a: &CompareArgs) -> Result<()> {
    let scenario = load_scenario(&a.common.scenario)?;
    let policy = load_policy(&a.policy)?;
    let noise = a.noise_profile.into();
    let seed = a.common.seed;
    let base = run_scenario(&scenario, &RunOptions { mode: Mode::Static, seed, noise }, None)?;
    let ctrl = run_scenario(&scenario, &RunOptions { mode: Mode::Controlled, seed, noise }, Some(&policy))?;
    let c = compare(&base, &ctrl)?;
    println!(
        "NLoS static {:.3} s, controlled {:.3} s, reduction {:.1}%",
        c.nlos_static_s,
        c.nlos_ctrl_s,
        100.0 * c.nlos_reduction
    );
    println!("mean throughput static {:.4e}, controlled {:.4e} bit/s", c.mean_thr_static, c.mean_thr_ctrl);
    print_written(&emit_outputs(&a.common.out_dir, &[&base, &ctrl], Some(&c), None)?);
    Ok(())
}

fn cmd_eval_loc(a: &LocArgs) -> Result<()> {
    let scenario = load_scenario(&a.common.scenario)?;
    let s = eval_localization(&scenario, a.noise_profile.into(), a.common.seed)?;
    println!("frames {} (with estimate {})", s.frames, s.estimated_frames);
    for (axis, v) in [("x", s.x), ("y", s.y)] {
        println!(
            "{axis}: gt {:.3} mean {:.3} max {:.3} min {:.3} mean deviation {:.4}",
            v.gt, v.mean, v.max, v.min, v.mean_deviation
        );
    }
    print_written(&emit_outputs(&a.common.out_dir, &[], None, Some(&s))?);
    Ok(())
}

fn cmd_replay(a: &ReplayArgs) -> Result<()> {
    let scenario = load_scenario(&a.common.scenario)?;
    let log = read_decisions(File::open(&a.decisions).with_context(|| format!("opening {}", a.decisions.display()))?)?;
    let policy = a.policy.as_deref().map(load_policy).transpose()?;
    let out = replay(&scenario, &log, policy.as_ref())?;
    std::fs::create_dir_all(&a.common.out_dir)?;
    let path = a.common.out_dir.join("run_replay.csv");
    write_run_csv(&out.report, File::create(&path)?)?;
    println!("replayed {} decisions: NLoS {:.3} s", log.len(), out.report.nlos_s);
    if policy.is_some() {
        println!("policy disagreements: {}", out.mismatches.len());
    }
    print_written(&[path]);
    if !out.mismatches.is_empty() {
        bail!("policy disagrees with the log at ticks {:?}", out.mismatches);
    }
    Ok(())
}

fn main() -> Result<()> {
    let cli = Cli::parse();
    match &cli.command {
        Command::Train(a) => cmd_train(a),
        Command::Run(a) => cmd_run(a),
        Command::Compare(a) => cmd_compare(a),
        Command::EvalLoc(a) => cmd_eval_loc(a),
        Command::Replay(a) => cmd_replay(a),
    }
}
