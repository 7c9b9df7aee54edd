use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use magswim::brackets::{certificate_report, evaluate_bracket, BracketWord, DifferentiationScheme, SwimmerFields};
use magswim::export::{endpoints_csv, trajectory_csv, SvgPlot};
use magswim::integrate::{integrate, ConstantControl, Control, IntegrateOptions, Method, Tolerance, ZeroControl};
use magswim::reach::{max_endpoint_radius, monte_carlo, occupancy, ReachabilityConfig};
use magswim::track::{
    baseline_sinusoidal, ellipse_reference, optimize, CostWeights, OptimizerConfig, SplineControl, TrackingProblem,
};
use magswim::{SwimmerParams, Trajectory};
use serde::{Deserialize, Serialize};

#[derive(Parser)]
#[command(name = "magswim", version, about = "Planar magnetic microswimmer experiments", allow_negative_numbers = true)]
struct Cli {
    /// JSON run configuration; unknown keys are rejected.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[arg(long, global = true)]
    output_dir: Option<PathBuf>,
    /// Worker threads (default: available parallelism).
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Print the effective swimmer parameters.
    Params,
    /// Run the bracket certificates and write report.json.
    Verify,
    /// Integrate one control and write trajectory.csv plus a plot.
    Simulate {
        #[arg(long, value_enum)]
        control: Option<ControlKind>,
        #[arg(long = "T")]
        horizon: Option<f64>,
        /// JSON with `u1`/`u2` control points (a tracking_result.json works).
        #[arg(long)]
        spline_file: Option<PathBuf>,
    },
    /// Monte Carlo endpoints under random oscillatory fields.
    Reach {
        #[arg(long = "N")]
        n_links: Option<usize>,
        #[arg(long)]
        n_mc: Option<usize>,
    },
    /// Optimize spline controls to follow an ellipse.
    Track {
        #[arg(long = "b-over-L")]
        b_over_l: Option<f64>,
        #[arg(long)]
        budget: Option<usize>,
    },
    /// Evaluate one bracket word, e.g. "[2,[0,2]]".
    Bracket {
        #[arg(long)]
        word: String,
        /// `origin` or comma-separated state coordinates.
        #[arg(long, default_value = "origin")]
        at: String,
    },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
enum ControlKind {
    Zero,
    Constant,
    Sinusoidal,
    SplineFile,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
struct SimulateConfig {
    control: ControlKind,
    #[serde(rename = "T")]
    horizon: f64,
    constant: [f64; 2],
    /// Sinusoid amplitude and frequency; the carrier follows the tracking ellipse.
    amplitude: f64,
    freq_hz: f64,
    b_over_l: f64,
    spline_file: Option<PathBuf>,
    method: Method,
    tol: Tolerance,
}

impl Default for SimulateConfig {
    fn default() -> Self {
        Self {
            control: ControlKind::Zero,
            horizon: 1.0,
            constant: [0.0, 0.01],
            amplitude: 0.01,
            freq_hz: 0.7,
            b_over_l: 1.0,
            spline_file: None,
            method: Method::Rodas4,
            tol: Tolerance { abs: 1e-9, rel: 1e-6 },
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
struct TrackConfig {
    b_over_l: f64,
    /// Reference arc length as a multiple of the swimmer length.
    arc_over_l: f64,
    #[serde(rename = "T")]
    horizon: f64,
    n_ctrl: usize,
    degree: usize,
    amplitude_bound: f64,
    baseline_freq_hz: f64,
    q_diag: Option<Vec<f64>>,
    s_diag: Option<Vec<f64>>,
    method: Method,
    tol: Tolerance,
    optimizer: OptimizerConfig,
}

impl Default for TrackConfig {
    fn default() -> Self {
        let p = TrackingProblem::standard(SwimmerParams::default(), 1.0).expect("default problem");
        Self {
            b_over_l: 1.0,
            arc_over_l: 1.0,
            horizon: p.reference.horizon,
            n_ctrl: p.n_ctrl,
            degree: p.degree,
            amplitude_bound: p.amplitude_bound,
            baseline_freq_hz: p.baseline_freq_hz,
            q_diag: None,
            s_diag: None,
            method: p.method,
            tol: p.tol,
            optimizer: OptimizerConfig::default(),
        }
    }
}

#[derive(Clone, Debug, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
struct VerifyConfig {
    scheme: DifferentiationScheme,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
struct RunConfig {
    params: SwimmerParams,
    seed: u64,
    output_dir: PathBuf,
    verify: VerifyConfig,
    simulate: SimulateConfig,
    reach: ReachabilityConfig,
    track: TrackConfig,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            params: SwimmerParams::default(),
            seed: 2024,
            output_dir: PathBuf::from("out"),
            verify: VerifyConfig::default(),
            simulate: SimulateConfig::default(),
            reach: ReachabilityConfig::default(),
            track: TrackConfig::default(),
        }
    }
}

enum Failure {
    Config(String),
    Numerical(String),
    Certificate,
}

impl Failure {
    fn code(&self) -> u8 {
        match self {
            Failure::Config(_) => 1,
            Failure::Numerical(_) => 2,
            Failure::Certificate => 3,
        }
    }
}

fn config_err(e: impl std::fmt::Display) -> Failure {
    Failure::Config(e.to_string())
}

fn num_err(e: impl std::fmt::Display) -> Failure {
    Failure::Numerical(e.to_string())
}

fn load_config(cli: &Cli) -> Result<RunConfig, Failure> {
    let mut cfg = match &cli.config {
        Some(path) => {
            let text = fs::read_to_string(path).map_err(|e| config_err(format!("{}: {e}", path.display())))?;
            serde_json::from_str::<RunConfig>(&text).map_err(|e| config_err(format!("{}: {e}", path.display())))?
        }
        None => RunConfig::default(),
    };
    if let Some(seed) = cli.seed {
        cfg.seed = seed;
    }
    if cli.seed.is_some() || cli.config.is_none() {
        cfg.reach.seed = cfg.seed;
        cfg.track.optimizer.seed = cfg.seed;
    }
    if let Some(dir) = &cli.output_dir {
        cfg.output_dir = dir.clone();
    }
    match &cli.command {
        Command::Simulate { control, horizon, spline_file } => {
            if let Some(c) = control {
                cfg.simulate.control = *c;
            }
            if let Some(t) = horizon {
                cfg.simulate.horizon = *t;
            }
            if let Some(f) = spline_file {
                cfg.simulate.spline_file = Some(f.clone());
                if control.is_none() {
                    cfg.simulate.control = ControlKind::SplineFile;
                }
            }
        }
        Command::Reach { n_links, n_mc } => {
            if let Some(n) = n_links {
                cfg.reach.n_links = *n;
            }
            if let Some(n) = n_mc {
                cfg.reach.n_mc = *n;
            }
        }
        Command::Track { b_over_l, budget } => {
            if let Some(b) = b_over_l {
                cfg.track.b_over_l = *b;
            }
            if let Some(b) = budget {
                cfg.track.optimizer.budget = *b;
                cfg.track.optimizer.n_init = cfg.track.optimizer.n_init.min(*b);
            }
        }
        _ => {}
    }
    cfg.params.validated().map_err(config_err)?;
    Ok(cfg)
}

fn write(dir: &Path, name: &str, contents: &str) -> Result<(), Failure> {
    fs::create_dir_all(dir).map_err(|e| config_err(format!("{}: {e}", dir.display())))?;
    let path = dir.join(name);
    fs::write(&path, contents).map_err(|e| config_err(format!("{}: {e}", path.display())))
}

fn to_json<T: Serialize>(v: &T) -> String {
    serde_json::to_string_pretty(v).expect("serializable") + "\n"
}

#[derive(Serialize)]
struct Envelope<'a, T: Serialize> {
    config: &'a RunConfig,
    seed: u64,
    result: T,
}

fn envelope<T: Serialize>(cfg: &RunConfig, result: T) -> String {
    to_json(&Envelope {
        config: cfg,
        seed: cfg.seed,
        result,
    })
}

fn xy(traj: &Trajectory) -> Vec<[f64; 2]> {
    traj.states.iter().map(|s| [s[0], s[1]]).collect()
}

fn controls_plot(traj: &Trajectory, title: &str) -> String {
    let mut plot = SvgPlot::new(title, "t (s)", "field");
    let u1 = traj.times.iter().zip(&traj.controls).map(|(t, u)| [*t, u[0]]).collect();
    let u2 = traj.times.iter().zip(&traj.controls).map(|(t, u)| [*t, u[1]]).collect();
    plot.line(u1, "red", false, Some("u1"));
    plot.line(u2, "green", false, Some("u2"));
    plot.render()
}

#[derive(Deserialize)]
struct SplineFile {
    #[serde(alias = "best_u1")]
    u1: Vec<f64>,
    #[serde(alias = "best_u2")]
    u2: Vec<f64>,
    #[serde(default = "cubic")]
    degree: usize,
}

fn cubic() -> usize {
    3
}

fn run_simulate(cfg: &RunConfig) -> Result<(), Failure> {
    let sc = &cfg.simulate;
    if !(sc.horizon > 0.0) {
        return Err(config_err("T must be positive"));
    }
    let params = &cfg.params;
    let control: Box<dyn Control<f64>> = match sc.control {
        ControlKind::Zero => Box::new(ZeroControl),
        ControlKind::Constant => Box::new(ConstantControl(sc.constant)),
        ControlKind::Sinusoidal => {
            let l = params.total_length;
            let reference = ellipse_reference(l, sc.b_over_l * l, l, sc.horizon).map_err(config_err)?;
            Box::new(baseline_sinusoidal(reference, sc.amplitude, sc.freq_hz).map_err(config_err)?)
        }
        ControlKind::SplineFile => {
            let path = sc.spline_file.as_ref().ok_or_else(|| config_err("spline-file control needs --spline-file"))?;
            let text = fs::read_to_string(path).map_err(|e| config_err(format!("{}: {e}", path.display())))?;
            let s: SplineFile = serde_json::from_str(&text).map_err(|e| config_err(format!("{}: {e}", path.display())))?;
            Box::new(SplineControl::clamped_uniform(s.u1, s.u2, s.degree, sc.horizon).map_err(config_err)?)
        }
    };
    let opts = IntegrateOptions {
        method: sc.method,
        tol: sc.tol,
        ..Default::default()
    };
    let p0 = vec![0.0; params.state_dim()];
    let traj = integrate(params, control.as_ref(), &p0, sc.horizon, &opts).map_err(num_err)?;
    let cfg_json = to_json(cfg);
    write(&cfg.output_dir, "trajectory.csv", &trajectory_csv(&traj, &cfg_json))?;
    let mut plot = SvgPlot::new("Head trajectory", "x (m)", "y (m)").equal_aspect();
    plot.line(xy(&traj), "blue", false, None);
    write(&cfg.output_dir, "trajectory.svg", &plot.render())?;
    write(&cfg.output_dir, "controls.svg", &controls_plot(&traj, "Applied field"))?;
    let end = traj.final_state();
    println!("final state {:?} ({} steps)", end, traj.stats.accepted);
    Ok(())
}

#[derive(Serialize)]
struct ReachSummary<'a> {
    runs: usize,
    failures: usize,
    max_endpoint_radius: f64,
    occupancy: &'a magswim::reach::OccupancyGrid,
}

fn run_reach(cfg: &RunConfig) -> Result<(), Failure> {
    let mut params = cfg.params;
    params.n_links = cfg.reach.n_links;
    params.validated().map_err(config_err)?;
    let cloud = monte_carlo(&params, &cfg.reach).map_err(config_err)?;
    let cfg_json = to_json(cfg);
    write(&cfg.output_dir, "endpoints.csv", &endpoints_csv(&cloud, &cfg_json))?;
    let occ = occupancy(&cloud, &cfg.reach.grid).map_err(num_err)?;
    let summary = ReachSummary {
        runs: cloud.records.len(),
        failures: cloud.failures.len(),
        max_endpoint_radius: max_endpoint_radius(&cloud),
        occupancy: &occ,
    };
    write(&cfg.output_dir, "occupancy.json", &envelope(cfg, &summary))?;
    let pts: Vec<[f64; 2]> = cloud.records.iter().map(|r| [r.endpoint[0], r.endpoint[1]]).collect();
    let mut full = SvgPlot::new("Endpoints", "x (m)", "y (m)").equal_aspect();
    full.points(pts.clone(), "black", 1.2, None);
    write(&cfg.output_dir, "endpoints.svg", &full.render())?;
    let g = &cfg.reach.grid;
    let mut zoom = SvgPlot::new("Endpoints near the origin", "x (m)", "y (m)").window([g.x_min, g.x_max, g.y_min, g.y_max]);
    zoom.points(pts, "black", 1.5, None);
    if let Some(region) = &occ.flagged_region {
        let b = region.bounds;
        zoom.line(vec![[b[0], b[2]], [b[1], b[2]], [b[1], b[3]], [b[0], b[3]], [b[0], b[2]]], "red", true, Some("empty, x>0"));
    }
    write(&cfg.output_dir, "endpoints_zoom.svg", &zoom.render())?;
    println!(
        "{} runs, {} failures, flagged x>0 region: {}",
        summary.runs,
        summary.failures,
        occ.flagged_region.as_ref().map_or(0, |r| r.cells.len())
    );
    if !cloud.failures.is_empty() {
        return Err(Failure::Numerical(format!("{} integration failures", cloud.failures.len())));
    }
    Ok(())
}

fn run_track(cfg: &RunConfig) -> Result<(), Failure> {
    let tc = &cfg.track;
    let params = cfg.params;
    let l = params.total_length;
    let reference = ellipse_reference(l, tc.b_over_l * l, tc.arc_over_l * l, tc.horizon).map_err(config_err)?;
    let mut weights = CostWeights::position_only(params.n_links);
    if let Some(q) = &tc.q_diag {
        weights.q_diag = q.clone();
    }
    if let Some(s) = &tc.s_diag {
        weights.s_diag = s.clone();
    }
    let problem = TrackingProblem {
        params,
        reference,
        weights,
        n_ctrl: tc.n_ctrl,
        degree: tc.degree,
        amplitude_bound: tc.amplitude_bound,
        p0: vec![0.0; params.state_dim()],
        method: tc.method,
        tol: tc.tol,
        baseline_freq_hz: tc.baseline_freq_hz,
    };
    problem.validate().map_err(config_err)?;
    tc.optimizer.validate().map_err(config_err)?;
    let result = optimize(&problem, &tc.optimizer).map_err(num_err)?;
    write(&cfg.output_dir, "tracking_result.json", &envelope(cfg, &result))?;
    let traj = result.trajectory.as_ref().expect("optimize returns the trajectory");
    let base = result.baseline_trajectory.as_ref().expect("optimize returns the baseline");
    write(&cfg.output_dir, "trajectory.csv", &trajectory_csv(traj, &to_json(cfg)))?;
    let reference_path: Vec<[f64; 2]> = (0..=400)
        .map(|k| {
            use magswim::track::ReferencePath;
            reference.position(reference.horizon * k as f64 / 400.0)
        })
        .collect();
    let mut plot = SvgPlot::new("Tracking", "x (m)", "y (m)").equal_aspect();
    plot.line(reference_path, "black", false, Some("reference"));
    plot.line(xy(traj), "blue", false, Some("optimized"));
    plot.line(xy(base), "gray", true, Some("baseline"));
    write(&cfg.output_dir, "tracking.svg", &plot.render())?;
    write(&cfg.output_dir, "controls.svg", &controls_plot(traj, "Optimized field"))?;
    println!(
        "optimized J = {:.6e}, baseline J = {:.6e}, terminal error {:.3e} (baseline {:.3e})",
        result.best_cost, result.baseline_cost, result.terminal_error, result.baseline_terminal_error
    );
    Ok(())
}

fn run_verify(cfg: &RunConfig) -> Result<(), Failure> {
    let report = certificate_report(&cfg.params, &cfg.verify.scheme).map_err(num_err)?;
    write(&cfg.output_dir, "report.json", &envelope(cfg, &report))?;
    for c in &report.checks {
        println!("{} {}: {}", if c.pass { "PASS" } else { "FAIL" }, c.name, c.detail);
    }
    if report.all_pass() {
        Ok(())
    } else {
        Err(Failure::Certificate)
    }
}

fn run_bracket(cfg: &RunConfig, word: &str, at: &str) -> Result<(), Failure> {
    let word: BracketWord = word.parse().map_err(config_err)?;
    let dim = cfg.params.state_dim();
    let point = if at == "origin" {
        vec![0.0; dim]
    } else {
        let p = at
            .split(',')
            .map(|s| s.trim().parse::<f64>())
            .collect::<Result<Vec<_>, _>>()
            .map_err(config_err)?;
        if p.len() != dim {
            return Err(config_err(format!("--at needs {dim} coordinates")));
        }
        p
    };
    let fields = SwimmerFields { params: &cfg.params };
    let v = evaluate_bracket(&word, &fields, &point, &cfg.verify.scheme).map_err(num_err)?;
    println!("{}", serde_json::to_string(&v).expect("serializable"));
    Ok(())
}

fn run(cli: &Cli) -> Result<(), Failure> {
    let cfg = load_config(cli)?;
    match &cli.command {
        Command::Params => {
            print!("{}", to_json(&cfg.params));
            Ok(())
        }
        Command::Verify => run_verify(&cfg),
        Command::Simulate { .. } => run_simulate(&cfg),
        Command::Reach { .. } => run_reach(&cfg),
        Command::Track { .. } => run_track(&cfg),
        Command::Bracket { word, at } => run_bracket(&cfg, word, at),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            // usage errors share the config-error exit code
            return ExitCode::from(if e.use_stderr() { 1 } else { 0 });
        }
    };
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(n) = cli.threads {
        builder = builder.num_threads(n);
    }
    let pool = match builder.build() {
        Ok(p) => p,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(1);
        }
    };
    match pool.install(|| run(&cli)) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            match &f {
                Failure::Config(m) => eprintln!("config error: {m}"),
                Failure::Numerical(m) => eprintln!("numerical failure: {m}"),
                Failure::Certificate => eprintln!("certificate assertion failed"),
            }
            ExitCode::from(f.code())
        }
    }
}
