//! Command-line front end: scenario-driven planning, the stability
//! benchmark, the standalone connector, and re-rendering from CSVs.
//!
//! Exit status contract: 0 success, 1 parse/usage error, 2 no path,
//! 3 connector infeasible.

use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, Parser, Subcommand};

use crate::connector::{
    append_connection, connect, junction_state, write_connector_csv, ConnectError,
    ConnectorConfig, ConnectorResult, PathPoint,
};
use crate::dynamics::{PointMassState, ReducedState};
use crate::geom::{polyline_length, wrap_angle, Point2};
use crate::integrators::{
    predict_stability, stability_experiment, write_stability_csv, SchemeId, Verdict,
};
use crate::params::VehicleParams;
use crate::planner::{plan, write_path_csv, write_tree_csv, PlanError, PlannerConfig, Tree};
use crate::render::render_svg;
use crate::world::{ScenarioSpec, OccupancyGrid};

pub const EXIT_OK: i32 = 0;
pub const EXIT_PARSE: i32 = 1;
pub const EXIT_NO_PATH: i32 = 2;
pub const EXIT_CONNECTOR: i32 = 3;

#[derive(Parser)]
#[command(
    name = "arcplan",
    about = "Arc-sampling path planner for a non-holonomic vehicle",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Plan a scenario end to end and write CSV/SVG artifacts.
    Plan(PlanArgs),
    /// Run the integrator stability benchmark and write its CSV report.
    Stability(StabilityArgs),
    /// Solve a single minimum-time connection between two states.
    Connect(ConnectArgs),
    /// Re-render the SVG from previously written CSVs.
    Render(RenderArgs),
}

#[derive(Args)]
struct PlanArgs {
    /// Scenario file (key=value).
    #[arg(long)]
    scenario: PathBuf,
    /// Output directory for artifacts.
    #[arg(long)]
    out: PathBuf,
    /// Seed override (beats scenario file and PLANNER_SEED).
    #[arg(long)]
    seed: Option<u64>,
    /// Also write the tree dump CSV.
    #[arg(long)]
    tree_csv: bool,
    /// Vehicle parameter file.
    #[arg(long)]
    params: Option<PathBuf>,
}

#[derive(Args)]
struct StabilityArgs {
    /// Vehicle parameter file.
    #[arg(long)]
    params: Option<PathBuf>,
    /// Comma-separated step sizes; default log-spaced 1e-3..1 (25 values).
    #[arg(long)]
    h_list: Option<String>,
    /// Integration horizon per cell, s.
    #[arg(long, default_value_t = 10.0)]
    horizon_t: f64,
    /// Output directory.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct ConnectArgs {
    /// Initial state as "x,y,theta,v".
    #[arg(long)]
    from: String,
    /// Final state as "x,y,theta,v".
    #[arg(long)]
    to: String,
    #[arg(long)]
    params: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct RenderArgs {
    /// Scenario file providing the map and markers.
    #[arg(long)]
    scenario: PathBuf,
    /// Path CSV as written by `plan`.
    #[arg(long)]
    path_csv: PathBuf,
    /// Optional tree CSV as written by `plan --tree-csv`.
    #[arg(long)]
    tree_csv_in: Option<PathBuf>,
    #[arg(long)]
    out: PathBuf,
}

/// Per-run summary written next to the other artifacts.
#[derive(Debug, Clone)]
pub struct RunReport {
    pub scenario: String,
    pub reached: bool,
    pub expansions: usize,
    pub path_length_m: f64,
    pub connector_tf_s: Option<f64>,
    pub plan_time_s: f64,
    pub connect_time_s: f64,
}

impl RunReport {
    fn to_key_values(&self) -> String {
        let mut out = String::new();
        out.push_str(&format!("scenario={}\n", self.scenario));
        out.push_str(&format!("reached={}\n", self.reached));
        out.push_str(&format!("expansions={}\n", self.expansions));
        out.push_str(&format!("path_length_m={:.6}\n", self.path_length_m));
        match self.connector_tf_s {
            Some(tf) => out.push_str(&format!("connector_tf_s={tf:.6}\n")),
            None => out.push_str("connector_tf_s=nan\n"),
        }
        out.push_str(&format!("plan_time_s={:.6}\n", self.plan_time_s));
        out.push_str(&format!("connect_time_s={:.6}\n", self.connect_time_s));
        out
    }
}

/// Parse argv and run; returns the process exit status.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(err) => {
            use clap::error::ErrorKind;
            let code = match err.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => EXIT_OK,
                _ => EXIT_PARSE,
            };
            let _ = err.print();
            return code;
        }
    };
    match cli.command {
        Command::Plan(args) => cmd_plan(&args),
        Command::Stability(args) => cmd_stability(&args),
        Command::Connect(args) => cmd_connect(&args),
        Command::Render(args) => cmd_render(&args),
    }
}

fn fail(code: i32, message: impl std::fmt::Display) -> i32 {
    eprintln!("error: {message}");
    code
}

fn load_params(path: &Option<PathBuf>) -> Result<VehicleParams, String> {
    match path {
        Some(p) => VehicleParams::from_file(p).map_err(|e| e.to_string()),
        None => Ok(VehicleParams::default()),
    }
}

fn env_seed() -> Option<u64> {
    std::env::var("PLANNER_SEED").ok()?.trim().parse().ok()
}

/// Seed precedence: built-in default < scenario file < PLANNER_SEED < flag.
fn resolve_seed(scenario: Option<u64>, flag: Option<u64>) -> u64 {
    flag.or_else(env_seed).or(scenario).unwrap_or(0)
}

fn write_file(dir: &Path, name: &str, bytes: &[u8]) -> Result<(), String> {
    fs::create_dir_all(dir).map_err(|e| format!("cannot create {}: {e}", dir.display()))?;
    let path = dir.join(name);
    fs::write(&path, bytes).map_err(|e| format!("cannot write {}: {e}", path.display()))
}

fn planner_config(spec: &ScenarioSpec, params: &VehicleParams, seed: u64) -> PlannerConfig {
    let mut cfg = PlannerConfig::defaults(params);
    let o = &spec.overrides;
    if let Some(v) = o.n_arc_points {
        cfg.n_arc_points = v;
    }
    if let Some(v) = o.horizon {
        cfg.horizon = v;
        cfg.arc_radius = params.v_x * v;
    }
    if let Some(v) = o.arc_radius {
        cfg.arc_radius = v;
    }
    if let Some(v) = o.n_goal_bias {
        cfg.n_goal_bias = v;
    }
    if let Some(v) = o.mindist {
        cfg.mindist = v;
        cfg.goal_bias_radius = 2.0 * v;
    }
    if let Some(v) = o.goal_bias_radius {
        cfg.goal_bias_radius = v;
    }
    if let Some(v) = o.step {
        cfg.step = v;
    }
    if let Some(v) = o.margin {
        cfg.margin = v;
    }
    if let Some(v) = o.max_expansions {
        cfg.max_expansions = v;
    }
    cfg.rng_seed = seed;
    cfg
}

fn connector_config(
    spec: &ScenarioSpec,
    params: &VehicleParams,
    grid: &OccupancyGrid,
    seed: u64,
) -> ConnectorConfig {
    let mut cfg = ConnectorConfig::defaults(params);
    let (lo, hi) = grid.extent();
    cfg.x_bounds = (lo.x, hi.x);
    cfg.y_bounds = (lo.y, hi.y);
    let o = &spec.overrides;
    if let Some(v) = o.shooting_intervals {
        cfg.intervals = v;
    }
    if let Some(v) = o.v_max {
        cfg.v_max = v;
    }
    if let Some(v) = o.force_bound {
        cfg.force_bound = v;
    }
    if let Some(v) = o.tol_pos {
        cfg.tol_pos = v;
    }
    if let Some(v) = o.tol_theta {
        cfg.tol_theta = v;
    }
    if let Some(v) = o.tol_v {
        cfg.tol_v = v;
    }
    if let Some(v) = o.max_solver_iters {
        cfg.max_solver_iters = v;
    }
    cfg.rng_seed = seed;
    cfg
}

fn cmd_plan(args: &PlanArgs) -> i32 {
    let spec = match ScenarioSpec::from_file(&args.scenario) {
        Ok(s) => s,
        Err(e) => return fail(EXIT_PARSE, e),
    };
    let params = match load_params(&args.params) {
        Ok(p) => p,
        Err(e) => return fail(EXIT_PARSE, e),
    };
    let grid = match spec.load_map() {
        Ok(g) => g,
        Err(e) => return fail(EXIT_PARSE, e),
    };
    if let Err(e) = spec.validate_against(&grid) {
        return fail(EXIT_NO_PATH, e);
    }
    let seed = resolve_seed(spec.overrides.seed, args.seed);
    let cfg = planner_config(&spec, &params, seed);
    let scenario_id = args
        .scenario
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "scenario".to_string());

    let start = ReducedState::new(spec.start.0, spec.start.1, spec.start.2, 0.0, 0.0);
    let goal = spec.goal;

    let plan_clock = Instant::now();
    let result = match plan(&grid, start, goal, &cfg, &params) {
        Ok(r) => r,
        Err(PlanError::NoPath {
            expansions, tree, ..
        }) => {
            // keep the partial tree for diagnostics
            let mut tree_bytes = Vec::new();
            let _ = write_tree_csv(&tree, &mut tree_bytes);
            if let Err(e) = write_file(&args.out, "tree.csv", &tree_bytes) {
                return fail(EXIT_PARSE, e);
            }
            let svg = render_svg(
                &grid,
                Some(&tree),
                &[],
                Point2::new(start.x, start.y),
                goal,
                cfg.mindist,
            );
            let _ = write_file(&args.out, "plan.svg", svg.as_bytes());
            return fail(
                EXIT_NO_PATH,
                format!("no path after {expansions} expansions"),
            );
        }
        Err(e) => return fail(EXIT_NO_PATH, e),
    };
    let plan_time = plan_clock.elapsed().as_secs_f64();

    let mut path_bytes = Vec::new();
    if write_path_csv(&result.path, &mut path_bytes).is_err() {
        return fail(EXIT_PARSE, "cannot serialize path");
    }
    if let Err(e) = write_file(&args.out, "path.csv", &path_bytes) {
        return fail(EXIT_PARSE, e);
    }
    if args.tree_csv {
        let mut tree_bytes = Vec::new();
        let _ = write_tree_csv(&result.tree, &mut tree_bytes);
        if let Err(e) = write_file(&args.out, "tree.csv", &tree_bytes) {
            return fail(EXIT_PARSE, e);
        }
    }

    // connect the goal-region node to the exact goal state
    let connect_clock = Instant::now();
    let conn_cfg = connector_config(&spec, &params, &grid, seed);
    let s_init = junction_state(&result, &params);
    let goal_theta = spec.overrides.goal_theta.unwrap_or_else(|| {
        // arrive along the bearing of the final approach
        let end = result.path.last().unwrap();
        if (goal.x - end.x).abs() + (goal.y - end.y).abs() < 1e-9 {
            wrap_angle(end.theta)
        } else {
            (goal.y - end.y).atan2(goal.x - end.x)
        }
    });
    let s_final = PointMassState::new(
        goal.x,
        goal.y,
        goal_theta,
        spec.overrides.goal_v.unwrap_or(params.v_x),
    );
    let connection = match connect(s_init, s_final, &conn_cfg, &params) {
        Ok(c) => c,
        Err(e) => {
            let svg = render_partial(&grid, &result.tree, &result.path, start, goal, &cfg);
            let _ = write_file(&args.out, "plan.svg", svg.as_bytes());
            return fail(EXIT_CONNECTOR, e);
        }
    };
    let connect_time = connect_clock.elapsed().as_secs_f64();

    let full_path = match append_connection(&result, &connection) {
        Ok(p) => p,
        Err(e) => return fail(EXIT_CONNECTOR, e),
    };
    // the shooting problem knows nothing about obstacles; reject the
    // connection if it cuts through one
    let conn_points: Vec<Point2> = connection
        .trajectory
        .iter()
        .map(|s| Point2::new(s.x, s.y))
        .collect();
    if grid.trajectory_collides(&conn_points, cfg.margin) {
        let svg = render_partial(&grid, &result.tree, &result.path, start, goal, &cfg);
        let _ = write_file(&args.out, "plan.svg", svg.as_bytes());
        return fail(
            EXIT_CONNECTOR,
            ConnectorCollision {
                t_f: connection.t_f,
            },
        );
    }

    let mut conn_bytes = Vec::new();
    let _ = write_connector_csv(&connection, &mut conn_bytes);
    if let Err(e) = write_file(&args.out, "connector.csv", &conn_bytes) {
        return fail(EXIT_PARSE, e);
    }

    let svg = render_svg(
        &grid,
        Some(&result.tree),
        &full_path,
        Point2::new(start.x, start.y),
        goal,
        cfg.mindist,
    );
    if let Err(e) = write_file(&args.out, "plan.svg", svg.as_bytes()) {
        return fail(EXIT_PARSE, e);
    }

    let positions: Vec<Point2> = full_path.iter().map(|p| Point2::new(p.x, p.y)).collect();
    let report = RunReport {
        scenario: scenario_id,
        reached: true,
        expansions: result.stats.expansions,
        path_length_m: polyline_length(&positions),
        connector_tf_s: Some(connection.t_f),
        plan_time_s: plan_time,
        connect_time_s: connect_time,
    };
    if let Err(e) = write_file(&args.out, "report.txt", report.to_key_values().as_bytes()) {
        return fail(EXIT_PARSE, e);
    }
    println!(
        "planned {}: expansions={} path_length={:.2} m t_f={:.3} s",
        report.scenario, report.expansions, report.path_length_m, connection.t_f
    );
    EXIT_OK
}

#[derive(Debug, thiserror::Error)]
#[error("connector trajectory (t_f={t_f:.3}) collides with the map")]
struct ConnectorCollision {
    t_f: f64,
}

fn render_partial(
    grid: &OccupancyGrid,
    tree: &Tree,
    path: &[ReducedState],
    start: ReducedState,
    goal: Point2,
    cfg: &PlannerConfig,
) -> String {
    let points: Vec<PathPoint> = path
        .iter()
        .map(|s| PathPoint {
            x: s.x,
            y: s.y,
            theta: s.theta,
        })
        .collect();
    render_svg(
        grid,
        Some(tree),
        &points,
        Point2::new(start.x, start.y),
        goal,
        cfg.mindist,
    )
}

fn cmd_stability(args: &StabilityArgs) -> i32 {
    let params = match load_params(&args.params) {
        Ok(p) => p,
        Err(e) => return fail(EXIT_PARSE, e),
    };
    let h_values = match &args.h_list {
        Some(list) => {
            let mut out = Vec::new();
            for item in list.split(',') {
                match item.trim().parse::<f64>() {
                    Ok(v) if v > 0.0 => out.push(v),
                    _ => return fail(EXIT_PARSE, format!("bad step size {item:?} in --h-list")),
                }
            }
            out
        }
        None => crate::integrators::log_spaced(1e-3, 1.0, 25),
    };
    if args.horizon_t <= 0.0 {
        return fail(EXIT_PARSE, "--horizon-t must be positive");
    }

    let verdicts = stability_experiment(&SchemeId::ALL, &h_values, args.horizon_t, &params);
    let mut empirical = Vec::new();
    if write_stability_csv(&verdicts, &mut empirical).is_err() {
        return fail(EXIT_PARSE, "cannot serialize stability report");
    }
    if let Err(e) = write_file(&args.out, "stability.csv", &empirical) {
        return fail(EXIT_PARSE, e);
    }

    // combined report: empirical verdict plus the analytic one where the
    // scheme admits an amplification factor
    let mut combined = String::from("scheme,h,verdict,max_norm,analytic_verdict\n");
    for v in &verdicts {
        let analytic = if v.scheme.is_one_step() {
            predict_stability(v.scheme, v.step, std::f64::consts::FRAC_PI_4, &params)
                .map(|p| p.verdict.name())
                .unwrap_or("")
        } else {
            ""
        };
        combined.push_str(&format!(
            "{},{:.6e},{},{:.6e},{}\n",
            v.scheme, v.step, v.verdict, v.max_norm, analytic
        ));
    }
    if let Err(e) = write_file(&args.out, "stability_combined.csv", combined.as_bytes()) {
        return fail(EXIT_PARSE, e);
    }

    let unstable: Vec<String> = verdicts
        .iter()
        .filter(|v| v.verdict == Verdict::Unstable)
        .map(|v| format!("{}@{:.3}", v.scheme, v.step))
        .collect();
    println!(
        "stability sweep: {} cells, {} unstable",
        verdicts.len(),
        unstable.len()
    );
    EXIT_OK
}

fn parse_state(text: &str) -> Result<PointMassState, String> {
    let parts: Vec<&str> = text.split(',').map(str::trim).collect();
    if parts.len() != 4 {
        return Err(format!("expected x,y,theta,v — got {text:?}"));
    }
    let mut vals = [0.0f64; 4];
    for (i, p) in parts.iter().enumerate() {
        vals[i] = p
            .parse()
            .map_err(|_| format!("bad number {p:?} in state {text:?}"))?;
    }
    Ok(PointMassState::new(vals[0], vals[1], vals[2], vals[3]))
}

fn cmd_connect(args: &ConnectArgs) -> i32 {
    let params = match load_params(&args.params) {
        Ok(p) => p,
        Err(e) => return fail(EXIT_PARSE, e),
    };
    let from = match parse_state(&args.from) {
        Ok(s) => s,
        Err(e) => return fail(EXIT_PARSE, e),
    };
    let to = match parse_state(&args.to) {
        Ok(s) => s,
        Err(e) => return fail(EXIT_PARSE, e),
    };
    let mut cfg = ConnectorConfig::defaults(&params);
    cfg.rng_seed = resolve_seed(None, args.seed);
    let result: ConnectorResult = match connect(from, to, &cfg, &params) {
        Ok(r) => r,
        Err(e @ ConnectError::Infeasible { .. }) | Err(e @ ConnectError::OutsideBounds { .. }) => {
            return fail(EXIT_CONNECTOR, e)
        }
        Err(e) => return fail(EXIT_CONNECTOR, e),
    };
    let mut bytes = Vec::new();
    let _ = write_connector_csv(&result, &mut bytes);
    if let Err(e) = write_file(&args.out, "connector.csv", &bytes) {
        return fail(EXIT_PARSE, e);
    }
    println!("connected in t_f={:.4} s over {} intervals", result.t_f, result.controls.len());
    EXIT_OK
}

fn read_path_csv(path: &Path) -> Result<Vec<PathPoint>, String> {
    let text = fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()))?;
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        if i == 0 {
            if !line.starts_with("t_index,") {
                return Err(format!("{}: not a path CSV", path.display()));
            }
            continue;
        }
        let cols: Vec<&str> = line.split(',').collect();
        if cols.len() < 4 {
            return Err(format!("{}: short row {}", path.display(), i + 1));
        }
        let parse = |s: &str| {
            s.parse::<f64>()
                .map_err(|_| format!("{}: bad number {s:?} on row {}", path.display(), i + 1))
        };
        out.push(PathPoint {
            x: parse(cols[1])?,
            y: parse(cols[2])?,
            theta: parse(cols[3])?,
        });
    }
    Ok(out)
}

fn read_tree_csv(path: &Path) -> Result<Tree, String> {
    let text = fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()))?;
    let mut tree = Tree::default();
    for (i, line) in text.lines().enumerate() {
        if i == 0 {
            if !line.starts_with("node_index,") {
                return Err(format!("{}: not a tree CSV", path.display()));
            }
            continue;
        }
        let cols: Vec<&str> = line.split(',').collect();
        if cols.len() < 7 {
            return Err(format!("{}: short row {}", path.display(), i + 1));
        }
        let parse = |s: &str| {
            s.parse::<f64>()
                .map_err(|_| format!("{}: bad number {s:?} on row {}", path.display(), i + 1))
        };
        let parent: i64 = cols[1]
            .parse()
            .map_err(|_| format!("{}: bad parent {:?} on row {}", path.display(), cols[1], i + 1))?;
        let state = ReducedState::new(parse(cols[2])?, parse(cols[3])?, 0.0, 0.0, 0.0);
        tree.nodes.push(crate::planner::TreeNode {
            state,
            parent: (parent >= 0).then_some(parent as usize),
            g: parse(cols[4])?,
            heuristic: parse(cols[5])?,
            f: parse(cols[6])?,
            steer: 0.0,
            segment: vec![state],
        });
    }
    Ok(tree)
}

fn cmd_render(args: &RenderArgs) -> i32 {
    let spec = match ScenarioSpec::from_file(&args.scenario) {
        Ok(s) => s,
        Err(e) => return fail(EXIT_PARSE, e),
    };
    let grid = match spec.load_map() {
        Ok(g) => g,
        Err(e) => return fail(EXIT_PARSE, e),
    };
    let path = match read_path_csv(&args.path_csv) {
        Ok(p) => p,
        Err(e) => return fail(EXIT_PARSE, e),
    };
    let tree = match &args.tree_csv_in {
        Some(p) => match read_tree_csv(p) {
            Ok(t) => Some(t),
            Err(e) => return fail(EXIT_PARSE, e),
        },
        None => None,
    };
    let mindist = spec.overrides.mindist.unwrap_or(3.0);
    let svg = render_svg(
        &grid,
        tree.as_ref(),
        &path,
        Point2::new(spec.start.0, spec.start.1),
        spec.goal,
        mindist,
    );
    if let Err(e) = write_file(&args.out, "plan.svg", svg.as_bytes()) {
        return fail(EXIT_PARSE, e);
    }
    println!("rendered {} path points", path.len());
    EXIT_OK
}
