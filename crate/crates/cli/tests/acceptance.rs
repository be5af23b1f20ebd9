//! End-to-end acceptance checks. Prints one `[PASS]`/`[FAIL]` line per
//! criterion and exits non-zero if any fails.

use std::path::{Path, PathBuf};
use std::process::Command;
use std::time::{Duration, Instant};

use proptest::prelude::*;
use proptest::test_runner::{Config, TestRunner};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use visionran::dqn::{td_loss, train, DqnError, Environment, Outcome, QNetwork, TrainConfig, Transition};
use visionran::geom::{Vec2, Vec3};
use visionran::harness::{run_scenario, Mode, NoiseProfile, RunOptions};
use visionran::sm::{
    PosControl, PosDataEntry, PosIndication, ServiceModelMessage, VisDataEntry, VisIndication, PHI_LIMIT,
    THETA_LIMIT,
};
use visionran::twin::{compute_los, link_quality, path_loss, Action, LinkModel, LosStatus, ObstacleBox, ScenarioConfig};
use visionran::xapp::{decide_and_control, estimate_position, ControllerConfig, StateVector};

const MIN_NLOS_REDUCTION: f64 = 0.60;
const MAX_RUN_WALL: Duration = Duration::from_secs(10);
const MAX_TRAIN_WALL: Duration = Duration::from_secs(15 * 60);
const LOC_ZERO_NOISE_M: f64 = 0.01;
const LOC_CALIBRATED_M: f64 = 0.15;
const LOC_FRAMES: usize = 300;
const CTRL_QUANT_M: f64 = 0.01;
const ROUND_TRIP_CASES: u32 = 10_000;
const LOS_CONFIGS: usize = 1000;
const LOS_BAND_M: f64 = 1e-6;
const LOS_SAMPLES: usize = 200_000;
const TRANSFORM_TOL_M: f64 = 1e-9;
const GRAD_REL_TOL: f64 = 1e-4;
const GRAD_H: f64 = 1e-5;
const GRAD_PARAMS: usize = 100;
const BANDIT_MAX_UPDATES: u64 = 500;

type Check = Result<String, String>;
type Criterion<'a> = (&'static str, Box<dyn Fn() -> Check + 'a>);

fn root() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../..")
}

fn scenario() -> ScenarioConfig {
    ScenarioConfig::load(root().join("scenarios/paper_v.json")).unwrap()
}

const SCENARIO: &str = "scenarios/paper_v.json";
const POLICY: &str = "policies/paper_v.policy.json";

/// Runs the CLI; returns wall time.
fn cli(args: &[&str], out: &Path) -> Result<Duration, String> {
    let t = Instant::now();
    let o = Command::new(env!("CARGO_BIN_EXE_visionran"))
        .current_dir(root())
        .args(args)
        .arg("--out-dir")
        .arg(out)
        .output()
        .map_err(|e| e.to_string())?;
    if !o.status.success() {
        return Err(format!("{args:?} failed: {}", String::from_utf8_lossy(&o.stderr)));
    }
    Ok(t.elapsed())
}

fn read_csv(path: &Path) -> Result<(csv::StringRecord, Vec<csv::StringRecord>), String> {
    let mut r = csv::Reader::from_path(path).map_err(|e| format!("{}: {e}", path.display()))?;
    let header = r.headers().map_err(|e| e.to_string())?.clone();
    let rows = r.records().collect::<Result<Vec<_>, _>>().map_err(|e| e.to_string())?;
    Ok((header, rows))
}

fn column(path: &Path, name: &str) -> Result<Vec<f64>, String> {
    let (h, rows) = read_csv(path)?;
    let i = h.iter().position(|c| c == name).ok_or_else(|| format!("no column {name}"))?;
    rows.iter().map(|r| r[i].parse::<f64>().map_err(|e| e.to_string())).collect()
}

/// NLoS reduction computed from the two run CSVs.
fn reduction_from_runs(dir: &Path) -> Result<(f64, f64, f64), String> {
    let s: f64 = column(&dir.join("run_static.csv"), "L_status")?.iter().sum();
    let c: f64 = column(&dir.join("run_controlled.csv"), "L_status")?.iter().sum();
    Ok((1.0 - c / s, s / 12.0, c / 12.0))
}

fn c1_nlos_reduction(tmp: &Path) -> Check {
    let dir = tmp.join("c1");
    let t_static = cli(&["run", "--scenario", SCENARIO, "--mode", "static"], &dir)?;
    let t_ctrl = cli(&["run", "--scenario", SCENARIO, "--mode", "controlled", "--policy", POLICY], &dir)?;
    let (red, s, c) = reduction_from_runs(&dir)?;
    let msg = format!(
        "NLoS static {s:.3} s, controlled {c:.3} s, reduction {:.1}% (>= {:.0}%); wall {:.2?} / {:.2?}",
        100.0 * red,
        100.0 * MIN_NLOS_REDUCTION,
        t_static,
        t_ctrl
    );
    if red >= MIN_NLOS_REDUCTION && t_static <= MAX_RUN_WALL && t_ctrl <= MAX_RUN_WALL {
        Ok(msg)
    } else {
        Err(msg)
    }
}

fn c2_localization(tmp: &Path) -> Check {
    let mut notes = Vec::new();
    let mut ok = true;
    for (profile, bound) in [("zero", LOC_ZERO_NOISE_M), ("calibrated", LOC_CALIBRATED_M)] {
        let dir = tmp.join(format!("c2-{profile}"));
        cli(&["eval-loc", "--scenario", SCENARIO, "--noise-profile", profile], &dir)?;
        let (h, rows) = read_csv(&dir.join("localization.csv"))?;
        let col = |name: &str| h.iter().position(|c| c == name).unwrap();
        for r in &rows {
            let f = |name: &str| r[col(name)].parse::<f64>().unwrap();
            let (min, mean, max, dev) = (f("min"), f("mean"), f("max"), f("mean_deviation"));
            let frames = r[col("frames")].parse::<usize>().unwrap();
            ok &= dev <= bound && min <= mean && mean <= max && frames == LOC_FRAMES;
            notes.push(format!("{profile} {} dev {dev:.4} m (<= {bound})", &r[col("axis")]));
        }
    }
    let msg = notes.join(", ");
    if ok {
        Ok(msg)
    } else {
        Err(msg)
    }
}

fn c3_path_loss() -> Check {
    let link = LinkModel::default();
    let pl = path_loss(10.0, LosStatus::Nlos, &link);
    let mut rng = ChaCha8Rng::seed_from_u64(31);
    let off = (0..1000)
        .filter(|_| {
            let d = rng.gen_range(0.1..20.0);
            path_loss(d, LosStatus::Nlos, &link) - path_loss(d, LosStatus::Los, &link) != 25.0
        })
        .count();
    let msg = format!("PL(10 m, NLoS) = {pl} dB; NLoS-LoS gap != 25 dB in {off}/1000 draws");
    if pl == 45.0 && off == 0 {
        Ok(msg)
    } else {
        Err(msg)
    }
}

fn c4_control_formula() -> Check {
    let cfg = ControllerConfig::from_scenario(&scenario());
    let mut rng = ChaCha8Rng::seed_from_u64(41);
    let mut worst = 0.0f64;
    let mut exact = true;
    for _ in 0..1000 {
        let mut a: [f64; 11] = std::array::from_fn(|_| rng.gen_range(-8.0..8.0));
        a[0] = rng.gen_range(0.0..8.0);
        a[5] = rng.gen_range(-1.0..=1.0);
        a[10] = f64::from(rng.gen_range(0..2u8));
        let sv = StateVector::from_array(&a).unwrap();
        for act in Action::ALL {
            let pick = move |_: &StateVector| {
                let mut q = [0.0; 3];
                q[act.index()] = 1.0;
                q
            };
            let d = decide_and_control(&sv, &cfg, Some(&pick), (0, 0), 0).map_err(|e| e.to_string())?;
            exact &= d.action == act && d.x_target == sv.x_gnb + d.v_new * cfg.t_ctrl_s;
            worst = worst.max((f64::from(d.control.x) / 100.0 - (sv.x_gnb + d.v_new * cfg.t_ctrl_s)).abs());
        }
    }
    let msg = format!("3000 decisions, x_target exact: {exact}, worst control quantization {worst:.4} m (<= {CTRL_QUANT_M})");
    if exact && worst <= CTRL_QUANT_M {
        Ok(msg)
    } else {
        Err(msg)
    }
}

fn pos_entry() -> impl Strategy<Value = PosDataEntry> {
    (any::<i16>(), any::<[i32; 6]>(), -THETA_LIMIT..=THETA_LIMIT, -PHI_LIMIT..=PHI_LIMIT).prop_map(
        |(id, v, theta, phi)| PosDataEntry { id, x: v[0], y: v[1], z: v[2], vx: v[3], vy: v[4], vz: v[5], theta, phi },
    )
}

fn vis_entry() -> impl Strategy<Value = VisDataEntry> {
    (any::<i16>(), 0..2i32, any::<[i32; 2]>(), 1..=i32::MAX, 1..=i32::MAX, -THETA_LIMIT..=THETA_LIMIT, -PHI_LIMIT..=PHI_LIMIT, 0..=i32::MAX)
        .prop_map(|(id, cls, b, bbw, bbh, theta, phi, r)| VisDataEntry { id, cls, bbx: b[0], bby: b[1], bbw, bbh, theta, phi, r })
}

fn round_trips<M, S>(strategy: S) -> Result<(), String>
where
    M: ServiceModelMessage + PartialEq + std::fmt::Debug,
    S: Strategy<Value = M>,
{
    let mut runner = TestRunner::new(Config { cases: ROUND_TRIP_CASES, failure_persistence: None, ..Config::default() });
    runner
        .run(&strategy, |m| {
            let bytes = m.encode();
            let back = M::decode(&bytes).map_err(|e| TestCaseError::fail(e.to_string()))?;
            prop_assert_eq!(&back, &m);
            prop_assert_eq!(back.encode(), bytes);
            Ok(())
        })
        .map_err(|e| e.to_string())
}

fn c5_protocol() -> Check {
    round_trips(pos_entry())?;
    round_trips((prop::collection::vec(pos_entry(), 0..8), any::<i64>()).prop_map(|(v, t)| PosIndication::new(v, t)))?;
    round_trips(any::<[i32; 3]>().prop_flat_map(|p| any::<i64>().prop_map(move |tstamp| PosControl { x: p[0], y: p[1], z: p[2], tstamp })))?;
    round_trips(vis_entry())?;
    round_trips((prop::collection::vec(vis_entry(), 0..8), any::<i64>()).prop_map(|(v, t)| VisIndication::new(v, t)))?;

    let dir = root().join("testdata/sm");
    let mut stable = 0;
    for entry in std::fs::read_dir(&dir).map_err(|e| e.to_string())? {
        let path = entry.map_err(|e| e.to_string())?.path();
        let bytes = std::fs::read(&path).map_err(|e| e.to_string())?;
        let name = path.file_name().unwrap().to_string_lossy().to_string();
        let again = match name.as_str() {
            n if n.starts_with("pos_data_entry") => PosDataEntry::decode(&bytes).map(|m| m.encode()),
            n if n.starts_with("pos_indication") => PosIndication::decode(&bytes).map(|m| m.encode()),
            n if n.starts_with("pos_control") => PosControl::decode(&bytes).map(|m| m.encode()),
            n if n.starts_with("vis_data_entry") => VisDataEntry::decode(&bytes).map(|m| m.encode()),
            n if n.starts_with("vis_indication") => VisIndication::decode(&bytes).map(|m| m.encode()),
            _ => continue,
        }
        .map_err(|e| format!("{name}: {e}"))?;
        if again != bytes {
            return Err(format!("{name} re-encodes differently"));
        }
        stable += 1;
    }
    Ok(format!("5 x {ROUND_TRIP_CASES} round trips, {stable} golden files byte-stable"))
}

fn sampled_hit(a: Vec3, b: Vec3, o: &ObstacleBox, grow: f64) -> bool {
    (0..=LOS_SAMPLES).any(|i| {
        let p = a + (b - a) * (i as f64 / LOS_SAMPLES as f64);
        (p.x - o.center.x).abs() <= o.half_extents.x + grow
            && (p.y - o.center.y).abs() <= o.half_extents.y + grow
            && p.z <= o.height + grow
    })
}

fn rot(m: [[f64; 3]; 3], v: [f64; 3]) -> [f64; 3] {
    std::array::from_fn(|i| (0..3).map(|k| m[i][k] * v[k]).sum())
}

/// Rz(az) · Ry(−el) applied to `v`, as explicit matrices.
fn turn(el: f64, az: f64, v: [f64; 3]) -> [f64; 3] {
    let (se, ce) = (-el).sin_cos();
    let (sa, ca) = az.sin_cos();
    let ry = [[ce, 0.0, se], [0.0, 1.0, 0.0], [-se, 0.0, ce]];
    let rz = [[ca, -sa, 0.0], [sa, ca, 0.0], [0.0, 0.0, 1.0]];
    rot(rz, rot(ry, v))
}

fn c6_geometry() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(61);
    let (mut disagree, mut band) = (0, 0);
    for _ in 0..LOS_CONFIGS {
        let obs = ObstacleBox {
            center: Vec2::new(rng.gen_range(2.0..6.0), rng.gen_range(2.0..8.0)),
            half_extents: Vec2::new(rng.gen_range(0.05..1.0), rng.gen_range(0.05..1.0)),
            height: rng.gen_range(0.3..2.8),
            velocity: Vec2::default(),
        };
        let mut point = || Vec3::new(rng.gen_range(0.0..8.0), rng.gen_range(0.0..10.0), rng.gen_range(0.0..3.0));
        let (a, b) = (point(), point());
        let got = compute_los(a, b, &obs).map_err(|e| e.to_string())?;
        if sampled_hit(a, b, &obs, -LOS_BAND_M) {
            disagree += usize::from(got != LosStatus::Nlos);
        } else if !sampled_hit(a, b, &obs, LOS_BAND_M) {
            disagree += usize::from(got != LosStatus::Los);
        } else {
            band += 1;
        }
    }

    let mut worst = 0.0f64;
    for _ in 0..1000 {
        let cam = PosDataEntry {
            x: rng.gen_range(-1000..1000),
            y: rng.gen_range(-1000..1000),
            z: rng.gen_range(0..400),
            theta: rng.gen_range(-THETA_LIMIT..=THETA_LIMIT),
            phi: rng.gen_range(-PHI_LIMIT..=PHI_LIMIT),
            ..Default::default()
        };
        let det = VisDataEntry {
            theta: rng.gen_range(-THETA_LIMIT..=THETA_LIMIT),
            phi: rng.gen_range(-PHI_LIMIT..=PHI_LIMIT),
            r: rng.gen_range(0..2000),
            bbw: 1,
            bbh: 1,
            ..Default::default()
        };
        let c = |v: i32| f64::from(v) / 100.0;
        let ray = turn(c(det.theta), c(det.phi), [c(det.r), 0.0, 0.0]);
        let g = turn(c(cam.theta), c(cam.phi), ray);
        let want = [g[0] + c(cam.x), g[1] + c(cam.y), g[2] + c(cam.z)];
        let got = estimate_position(&cam, &det);
        for (x, y) in [got.x, got.y, got.z].into_iter().zip(want) {
            worst = worst.max((x - y).abs());
        }
    }
    let msg = format!(
        "LoS: {disagree} disagreements in {LOS_CONFIGS} configs ({band} in tangency band); transform worst error {worst:.1e} m"
    );
    if disagree == 0 && worst <= TRANSFORM_TOL_M {
        Ok(msg)
    } else {
        Err(msg)
    }
}

fn input(rng: &mut ChaCha8Rng) -> Vec<f64> {
    (0..11).map(|_| rng.gen_range(-1.5..1.5)).collect()
}

struct Bandit;

impl Environment for Bandit {
    fn obs_dim(&self) -> usize {
        2
    }
    fn num_actions(&self) -> usize {
        3
    }
    fn reset(&mut self, _seed: u64) -> Vec<f64> {
        vec![0.5, -0.5]
    }
    fn step(&mut self, action: usize) -> Result<Outcome, DqnError> {
        Ok(Outcome { obs: vec![0.5, -0.5], reward: f64::from(u8::from(action == 1)), terminal: true, truncated: false, nlos: false })
    }
}

fn c7_learning(tmp: &Path) -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(71);
    let mut net = QNetwork::new(&[11, 64, 64, 3], &mut rng);
    let target = QNetwork::new(&[11, 64, 64, 3], &mut rng);
    let batch: Vec<Transition> = (0..16)
        .map(|i| Transition {
            state: input(&mut rng),
            action: i % 3,
            reward: 0.1 * i as f64 - 0.8,
            next_state: input(&mut rng),
            done: i % 5 == 0,
        })
        .collect();
    let (_, grads) = td_loss(&net, &target, &batch, 0.99).map_err(|e| e.to_string())?;
    let mut worst = 0.0f64;
    let mut checked = 0;
    for _ in 0..20 * GRAD_PARAMS {
        if checked == GRAD_PARAMS {
            break;
        }
        let k = rng.gen_range(0..net.param_count());
        let g = grads.get(k).unwrap();
        if g.abs() < 1e-6 {
            // Dead unit or vanishing gradient; relative error is meaningless there.
            continue;
        }
        let orig = *net.param_mut(k).unwrap();
        *net.param_mut(k).unwrap() = orig + GRAD_H;
        let up = td_loss(&net, &target, &batch, 0.99).map_err(|e| e.to_string())?.0;
        *net.param_mut(k).unwrap() = orig - GRAD_H;
        let down = td_loss(&net, &target, &batch, 0.99).map_err(|e| e.to_string())?.0;
        *net.param_mut(k).unwrap() = orig;
        let fd = (up - down) / (2.0 * GRAD_H);
        worst = worst.max((g - fd).abs() / g.abs().max(fd.abs()));
        checked += 1;
    }

    let bandit_cfg = TrainConfig {
        batch_size: 32,
        warmup_steps: 100,
        episodes: 600,
        eps_decay_steps: 300,
        target_sync: 50,
        hidden: vec![16, 16],
        ..TrainConfig::default()
    };
    let b = train(&mut Bandit, &bandit_cfg).map_err(|e| e.to_string())?;
    let q = b.net.forward(&[0.5, -0.5]).map_err(|e| e.to_string())?;
    let bandit_ok = b.updates <= BANDIT_MAX_UPDATES && q[1] > q[0] && q[1] > q[2];

    let dir = tmp.join("c7");
    let policy = dir.join("policy.json");
    let policy_s = policy.to_str().unwrap();
    let wall = cli(&["train", "--scenario", SCENARIO, "--seed", "0", "--policy", policy_s], &dir)?;
    cli(&["run", "--scenario", SCENARIO, "--mode", "static"], &dir)?;
    cli(&["run", "--scenario", SCENARIO, "--mode", "controlled", "--policy", policy_s], &dir)?;
    let (red, _, _) = reduction_from_runs(&dir)?;
    let same_as_shipped = std::fs::read(&policy).ok() == std::fs::read(root().join(POLICY)).ok();

    let msg = format!(
        "grad check worst rel {worst:.1e} over {checked} params (<= {GRAD_REL_TOL:.0e}); bandit greedy {} after {} updates; \
         training {wall:.1?} (<= 15 min), fresh policy reduction {:.1}%, identical to shipped: {same_as_shipped}",
        visionran::dqn::greedy(&q),
        b.updates,
        100.0 * red
    );
    if worst <= GRAD_REL_TOL && checked == GRAD_PARAMS && bandit_ok && wall <= MAX_TRAIN_WALL && red >= MIN_NLOS_REDUCTION {
        Ok(msg)
    } else {
        Err(msg)
    }
}

fn csvs_identical(a: &Path, b: &Path) -> Result<usize, String> {
    let list = |d: &Path| -> Result<Vec<PathBuf>, String> {
        let mut v: Vec<PathBuf> = std::fs::read_dir(d)
            .map_err(|e| e.to_string())?
            .filter_map(|e| e.ok().map(|e| e.path()))
            .filter(|p| p.extension().is_some_and(|e| e == "csv"))
            .collect();
        v.sort();
        Ok(v)
    };
    let (fa, fb) = (list(a)?, list(b)?);
    if fa.is_empty() || fa.len() != fb.len() {
        return Err(format!("{} vs {} CSV files", fa.len(), fb.len()));
    }
    for (x, y) in fa.iter().zip(&fb) {
        if x.file_name() != y.file_name() || std::fs::read(x).ok() != std::fs::read(y).ok() {
            return Err(format!("{} differs", x.display()));
        }
    }
    Ok(fa.len())
}

fn c8_determinism(tmp: &Path) -> Check {
    let first = tmp.join("c1").join("decisions_controlled.csv");
    let first = first.to_str().unwrap().to_string();
    let commands: Vec<Vec<&str>> = vec![
        vec!["train", "--scenario", SCENARIO, "--episodes", "20", "--seed", "5"],
        vec!["run", "--scenario", SCENARIO, "--mode", "static", "--seed", "5"],
        vec!["run", "--scenario", SCENARIO, "--mode", "controlled", "--policy", POLICY, "--seed", "5"],
        vec!["compare", "--scenario", SCENARIO, "--policy", POLICY, "--seed", "5"],
        vec!["eval-loc", "--scenario", SCENARIO, "--seed", "5"],
        vec!["replay", "--scenario", SCENARIO, "--decisions", &first, "--policy", POLICY],
    ];
    let mut files = 0;
    for (i, args) in commands.iter().enumerate() {
        let (a, b) = (tmp.join(format!("c8-{i}-a")), tmp.join(format!("c8-{i}-b")));
        cli(args, &a)?;
        cli(args, &b)?;
        files += csvs_identical(&a, &b).map_err(|e| format!("{}: {e}", args[0]))?;
    }
    Ok(format!("{} subcommand invocations repeated, {files} CSV files byte-identical", commands.len()))
}

fn trend_checks() -> Check {
    let cfg = scenario();
    let policy = visionran::dqn::Policy::load(&root().join(POLICY)).map_err(|e| e.to_string())?;
    let opts = |mode| RunOptions { mode, seed: 0, noise: NoiseProfile::Calibrated };
    let s = run_scenario(&cfg, &opts(Mode::Static), None).map_err(|e| e.to_string())?;
    let c = run_scenario(&cfg, &opts(Mode::Controlled), Some(&policy)).map_err(|e| e.to_string())?;
    let mut bad_drops = 0;
    let mut nlos = 0;
    for r in [&s, &c] {
        for t in r.ticks.iter().filter(|t| t.l_status == 1) {
            nlos += 1;
            let gnb = Vec3::new(t.gnb_x, cfg.gnb.start.y, cfg.gnb.start.z);
            let ue = Vec3::new(t.ue_x, t.ue_y, cfg.ue.z);
            let clear = link_quality(path_loss((ue - gnb).norm(), LosStatus::Los, &cfg.link), &cfg.link);
            bad_drops += usize::from(clear.snr_db - t.snr_db != cfg.link.a_obs_db);
        }
    }
    let msg = format!(
        "mean throughput controlled {:.3e} vs static {:.3e} bit/s; SNR drop != A_obs in {bad_drops}/{nlos} NLoS frames",
        c.mean_thr_bps, s.mean_thr_bps
    );
    if c.mean_thr_bps > s.mean_thr_bps && bad_drops == 0 && nlos > 0 {
        Ok(msg)
    } else {
        Err(msg)
    }
}

fn main() {
    let tmp = tempfile::tempdir().expect("temp dir");
    let t = tmp.path();
    let checks: Vec<Criterion> = vec![
        ("1 NLoS reduction", Box::new(|| c1_nlos_reduction(t))),
        ("2 localization accuracy", Box::new(|| c2_localization(t))),
        ("3 path-loss model", Box::new(c3_path_loss)),
        ("4 control formula", Box::new(c4_control_formula)),
        ("5 protocol conformance", Box::new(c5_protocol)),
        ("6 geometry oracles", Box::new(c6_geometry)),
        ("7 learning correctness", Box::new(|| c7_learning(t))),
        ("8 determinism", Box::new(|| c8_determinism(t))),
        ("trend: throughput and SNR", Box::new(trend_checks)),
    ];
    let mut failed = 0;
    for (name, check) in checks {
        match check() {
            Ok(m) => println!("[PASS] {name}: {m}"),
            Err(m) => {
                failed += 1;
                println!("[FAIL] {name}: {m}");
            }
        }
    }
    if failed > 0 {
        println!("{failed} acceptance check(s) failed");
        std::process::exit(1);
    }
}
