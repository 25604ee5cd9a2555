//! Minimum-time connection from the tree's goal-region node to the exact
//! goal state, posed as a single-shooting problem over the point mass
//! model: decision variables are the final time and a piecewise-constant
//! control sequence, states follow by explicit Euler rollout.
//!
//! The solver is a seeded multi-start compass (pattern) search on the
//! exact-penalty scalarization `t_f + mu * sum(violations)` with a
//! geometrically escalated penalty weight. Controls are kept inside their
//! boxes by projection, so returned controls always satisfy the bounds.

use std::io::Write;

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::dynamics::{point_mass_derivative, PointMassControl, PointMassState};
use crate::geom::{wrap_angle, Point2};
use crate::params::VehicleParams;
use crate::planner::PlanResult;

const GRAVITY: f64 = 9.81;
const T_MIN: f64 = 1e-3;
const T_MAX: f64 = 1e4;
/// Box excursions above this total are treated as infeasible.
const BOX_FEASIBILITY_EPS: f64 = 1e-9;
/// Position/heading agreement demanded where the tree hands over to the
/// connector.
const JUNCTION_TOL: f64 = 1e-6;

/// Connector settings.
#[derive(Debug, Clone, PartialEq)]
pub struct ConnectorConfig {
    /// Number of shooting intervals N (the rollout has N+1 states).
    pub intervals: usize,
    pub x_bounds: (f64, f64),
    pub y_bounds: (f64, f64),
    /// Speed bound: `0 <= v <= v_max`, m/s.
    pub v_max: f64,
    /// Steering bound `|delta| <= delta_bound`, rad.
    pub delta_bound: f64,
    /// Drive-force bound `|F| <= force_bound`, N.
    pub force_bound: f64,
    /// Terminal tolerance on X and Y, m.
    pub tol_pos: f64,
    /// Terminal tolerance on heading, rad.
    pub tol_theta: f64,
    /// Terminal tolerance on speed, m/s.
    pub tol_v: f64,
    /// Pattern-search sweep budget per penalty phase.
    pub max_solver_iters: usize,
    pub rng_seed: u64,
}

impl ConnectorConfig {
    /// Defaults for a given vehicle: N = 20, speed cap 25 m/s, steering
    /// bound pi/4, force bound 10 m g, and a wide world box that callers
    /// normally tighten to the map extent.
    pub fn defaults(params: &VehicleParams) -> Self {
        ConnectorConfig {
            intervals: 20,
            x_bounds: (-1e4, 1e4),
            y_bounds: (-1e4, 1e4),
            v_max: 25.0,
            delta_bound: std::f64::consts::FRAC_PI_4,
            force_bound: 10.0 * params.m * GRAVITY,
            tol_pos: 0.2,
            tol_theta: 0.05,
            tol_v: 0.5,
            max_solver_iters: 60,
            rng_seed: 0,
        }
    }

    fn validate(&self) {
        assert!(self.intervals >= 2, "need at least two shooting intervals");
        assert!(self.v_max > 0.0);
        assert!(self.tol_pos > 0.0 && self.tol_theta > 0.0 && self.tol_v > 0.0);
        assert!(self.delta_bound > 0.0 && self.force_bound > 0.0);
    }

    fn state_in_box(&self, s: &PointMassState) -> bool {
        s.x >= self.x_bounds.0
            && s.x <= self.x_bounds.1
            && s.y >= self.y_bounds.0
            && s.y <= self.y_bounds.1
            && s.v >= 0.0
            && s.v <= self.v_max
            && s.theta.abs() <= std::f64::consts::PI
    }
}

/// Decision variables of the shooting problem.
#[derive(Debug, Clone, PartialEq)]
pub struct ShootingVariables {
    /// Final time, s.
    pub t_f: f64,
    /// Piecewise-constant controls, one per interval.
    pub controls: Vec<PointMassControl>,
}

/// A solved connection.
#[derive(Debug, Clone)]
pub struct ConnectorResult {
    pub t_f: f64,
    /// The N+1 rollout states.
    pub trajectory: Vec<PointMassState>,
    pub controls: Vec<PointMassControl>,
    /// Signed terminal residuals (dx, dy, wrapped dtheta, dv).
    pub terminal_error: [f64; 4],
    pub trace: SolveTrace,
}

/// Accepted penalized-objective values, one list per (start, penalty)
/// phase; non-increasing within each phase by construction.
#[derive(Debug, Clone, Default)]
pub struct SolveTrace {
    pub phases: Vec<Vec<f64>>,
    pub evaluations: usize,
}

#[derive(Debug, Error)]
pub enum ConnectError {
    #[error("rollout diverged to a non-finite state")]
    Diverged,
    #[error("endpoint state ({x:.3}, {y:.3}, v={v:.3}) violates the box bounds")]
    OutsideBounds { x: f64, y: f64, v: f64 },
    #[error(
        "no feasible connection after {evaluations} evaluations; best violation sum {best_violation:.3e}"
    )]
    Infeasible {
        evaluations: usize,
        best_violation: f64,
    },
    #[error(
        "junction mismatch: plan ends at ({px:.4}, {py:.4}, {ptheta:.4}) but the connection starts at ({cx:.4}, {cy:.4}, {ctheta:.4})"
    )]
    JunctionMismatch {
        px: f64,
        py: f64,
        ptheta: f64,
        cx: f64,
        cy: f64,
        ctheta: f64,
    },
}

/// Explicit-Euler rollout `x_{n+1} = x_n + f(x_n, u_n) dt`, `dt = t_f/N`.
pub fn rollout(
    vars: &ShootingVariables,
    s0: PointMassState,
    params: &VehicleParams,
) -> Result<Vec<PointMassState>, ConnectError> {
    let n = vars.controls.len();
    let dt = vars.t_f / n as f64;
    let mut states = Vec::with_capacity(n + 1);
    states.push(s0);
    let mut s = s0;
    for u in &vars.controls {
        let d = point_mass_derivative(s, *u, params);
        s = PointMassState {
            x: s.x + d.x * dt,
            y: s.y + d.y * dt,
            theta: s.theta + d.theta * dt,
            v: s.v + d.v * dt,
        };
        if !(s.x.is_finite() && s.y.is_finite() && s.theta.is_finite() && s.v.is_finite()) {
            return Err(ConnectError::Diverged);
        }
        states.push(s);
    }
    Ok(states)
}

/// Objective and violation vector of a candidate.
///
/// The violations are the four absolute terminal residuals (heading
/// wrapped to `(-pi, pi]`) followed by the positive parts of the state-box
/// excursions along the rollout, one entry per bound
/// (x low/high, y low/high, |theta| <= pi, v low/high).
pub fn evaluate(
    vars: &ShootingVariables,
    s_init: PointMassState,
    s_final: PointMassState,
    cfg: &ConnectorConfig,
    params: &VehicleParams,
) -> (f64, Vec<f64>) {
    let mut violations = vec![f64::INFINITY; 11];
    let Ok(states) = rollout(vars, s_init, params) else {
        return (vars.t_f, violations);
    };
    let end = states.last().unwrap();
    violations[0] = (end.x - s_final.x).abs();
    violations[1] = (end.y - s_final.y).abs();
    violations[2] = wrap_angle(end.theta - s_final.theta).abs();
    violations[3] = (end.v - s_final.v).abs();
    for slot in violations[4..].iter_mut() {
        *slot = 0.0;
    }
    for s in &states {
        violations[4] += (cfg.x_bounds.0 - s.x).max(0.0);
        violations[5] += (s.x - cfg.x_bounds.1).max(0.0);
        violations[6] += (cfg.y_bounds.0 - s.y).max(0.0);
        violations[7] += (s.y - cfg.y_bounds.1).max(0.0);
        violations[8] += (s.theta.abs() - std::f64::consts::PI).max(0.0);
        violations[9] += (-s.v).max(0.0);
        violations[10] += (s.v - cfg.v_max).max(0.0);
    }
    (vars.t_f, violations)
}

fn is_feasible(violations: &[f64], cfg: &ConnectorConfig) -> bool {
    violations[0] <= cfg.tol_pos
        && violations[1] <= cfg.tol_pos
        && violations[2] <= cfg.tol_theta
        && violations[3] <= cfg.tol_v
        && violations[4..].iter().sum::<f64>() <= BOX_FEASIBILITY_EPS
}

/// Solve the shooting problem. Returns the best feasible variables found
/// together with the solver trace, or the smallest violation sum seen.
pub fn solve(
    s_init: PointMassState,
    s_final: PointMassState,
    cfg: &ConnectorConfig,
    params: &VehicleParams,
) -> Result<(ShootingVariables, SolveTrace), ConnectError> {
    cfg.validate();
    let n = cfg.intervals;
    let dim = 1 + 2 * n;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.rng_seed);

    let clamp_vars = |x: &mut [f64]| {
        x[0] = x[0].clamp(T_MIN, T_MAX);
        for i in 0..n {
            x[1 + 2 * i] = x[1 + 2 * i].clamp(-cfg.force_bound, cfg.force_bound);
            x[2 + 2 * i] = x[2 + 2 * i].clamp(-cfg.delta_bound, cfg.delta_bound);
        }
    };
    let to_vars = |x: &[f64]| ShootingVariables {
        t_f: x[0],
        controls: (0..n)
            .map(|i| PointMassControl {
                force: x[1 + 2 * i],
                delta: x[2 + 2 * i],
            })
            .collect(),
    };

    let mut evaluations = 0usize;
    let mut penalized = |x: &[f64], mu: f64| -> (f64, f64, bool) {
        evaluations += 1;
        let vars = to_vars(x);
        let (objective, violations) = evaluate(&vars, s_init, s_final, cfg, params);
        let total: f64 = violations.iter().sum();
        (objective + mu * total, total, is_feasible(&violations, cfg))
    };

    let dist = Point2::new(s_init.x, s_init.y).distance(Point2::new(s_final.x, s_final.y));
    let v_avg = (0.5 * (s_init.v + s_final.v)).max(0.1);
    let t_nominal = (dist / v_avg).max(0.2);

    // four deterministic-by-seed starting profiles
    let mut starts: Vec<Vec<f64>> = Vec::new();
    starts.push({
        let mut x = vec![0.0; dim];
        x[0] = t_nominal;
        x
    });
    starts.push({
        let mut x = vec![0.0; dim];
        x[0] = (2.0 * dist / cfg.v_max).max(0.2);
        for i in 0..n {
            x[1 + 2 * i] = if i < n / 2 { 0.5 } else { -0.5 } * cfg.force_bound;
        }
        x
    });
    starts.push({
        let mut x = vec![0.0; dim];
        x[0] = 1.5 * t_nominal;
        let bearing = (s_final.y - s_init.y).atan2(s_final.x - s_init.x);
        let steer = wrap_angle(bearing - s_init.theta).clamp(-cfg.delta_bound, cfg.delta_bound);
        for i in 0..n {
            x[2 + 2 * i] = 0.5 * steer;
        }
        x
    });
    starts.push({
        let mut x = vec![0.0; dim];
        x[0] = t_nominal * (0.75 + 0.5 * rng.random::<f64>());
        for i in 0..n {
            x[1 + 2 * i] = (rng.random::<f64>() - 0.5) * 0.2 * cfg.force_bound;
            x[2 + 2 * i] = (rng.random::<f64>() - 0.5) * 0.4 * cfg.delta_bound;
        }
        x
    });

    let mut scale = vec![0.0; dim];
    scale[0] = (0.25 * t_nominal).max(0.05);
    for i in 0..n {
        scale[1 + 2 * i] = cfg.force_bound / 4.0;
        scale[2 + 2 * i] = cfg.delta_bound / 2.0;
    }

    let mu_schedule = [1e1, 1e2, 1e3, 1e4, 1e5];
    let mut trace = SolveTrace::default();
    let mut best_feasible: Option<(f64, Vec<f64>)> = None;
    let mut best_violation = f64::INFINITY;

    for mut x in starts {
        clamp_vars(&mut x);
        for &mu in &mu_schedule {
            let mut phase = Vec::new();
            let (mut current, mut violation, mut feasible) = penalized(&x, mu);
            phase.push(current);
            if feasible && best_feasible.as_ref().map_or(true, |(t, _)| x[0] < *t) {
                best_feasible = Some((x[0], x.clone()));
            }
            best_violation = best_violation.min(violation);

            let mut sigma = 1.0;
            for _sweep in 0..cfg.max_solver_iters {
                let mut improved = false;
                for k in 0..dim {
                    for dir in [1.0, -1.0] {
                        let mut probe = x.clone();
                        probe[k] += dir * sigma * scale[k];
                        clamp_vars(&mut probe);
                        if probe == x {
                            continue;
                        }
                        let (value, vio, feas) = penalized(&probe, mu);
                        if value < current {
                            x = probe;
                            current = value;
                            violation = vio;
                            feasible = feas;
                            improved = true;
                            phase.push(current);
                            best_violation = best_violation.min(violation);
                            if feasible
                                && best_feasible.as_ref().map_or(true, |(t, _)| x[0] < *t)
                            {
                                best_feasible = Some((x[0], x.clone()));
                            }
                            break;
                        }
                    }
                }
                if !improved {
                    sigma *= 0.5;
                    if sigma < 1e-3 {
                        break;
                    }
                }
            }
            let _ = (violation, feasible);
            trace.phases.push(phase);
        }
    }

    trace.evaluations = evaluations;
    match best_feasible {
        Some((_, x)) => Ok((to_vars(&x), trace)),
        None => Err(ConnectError::Infeasible {
            evaluations,
            best_violation,
        }),
    }
}

/// Solve the minimum-time connection between two point-mass states.
pub fn connect(
    s_init: PointMassState,
    s_final: PointMassState,
    cfg: &ConnectorConfig,
    params: &VehicleParams,
) -> Result<ConnectorResult, ConnectError> {
    for s in [&s_init, &s_final] {
        if !cfg.state_in_box(s) {
            return Err(ConnectError::OutsideBounds {
                x: s.x,
                y: s.y,
                v: s.v,
            });
        }
    }
    let (vars, trace) = solve(s_init, s_final, cfg, params)?;
    let trajectory = rollout(&vars, s_init, params)?;
    let end = trajectory.last().unwrap();
    let terminal_error = [
        end.x - s_final.x,
        end.y - s_final.y,
        wrap_angle(end.theta - s_final.theta),
        end.v - s_final.v,
    ];
    Ok(ConnectorResult {
        t_f: vars.t_f,
        trajectory,
        controls: vars.controls,
        terminal_error,
        trace,
    })
}

/// A pose along the final concatenated path.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PathPoint {
    pub x: f64,
    pub y: f64,
    pub theta: f64,
}

/// The connector's starting state for a finished plan: position and
/// (wrapped) heading of the tree's goal-region node, speed pinned to the
/// constant planner speed.
pub fn junction_state(plan: &PlanResult, params: &VehicleParams) -> PointMassState {
    let end = plan.path.last().expect("plan paths are never empty");
    PointMassState {
        x: end.x,
        y: end.y,
        theta: wrap_angle(end.theta),
        v: params.v_x,
    }
}

/// Concatenate the tree path and the connector trajectory into the full
/// start-to-goal path, dropping the duplicated junction state.
pub fn append_connection(
    plan: &PlanResult,
    conn: &ConnectorResult,
) -> Result<Vec<PathPoint>, ConnectError> {
    let end = plan.path.last().expect("plan paths are never empty");
    let head = conn.trajectory.first().expect("rollouts are never empty");
    if (end.x - head.x).abs() > JUNCTION_TOL
        || (end.y - head.y).abs() > JUNCTION_TOL
        || wrap_angle(end.theta - head.theta).abs() > JUNCTION_TOL
    {
        return Err(ConnectError::JunctionMismatch {
            px: end.x,
            py: end.y,
            ptheta: end.theta,
            cx: head.x,
            cy: head.y,
            ctheta: head.theta,
        });
    }
    let mut full: Vec<PathPoint> = plan
        .path
        .iter()
        .map(|s| PathPoint {
            x: s.x,
            y: s.y,
            theta: s.theta,
        })
        .collect();
    full.extend(conn.trajectory.iter().skip(1).map(|s| PathPoint {
        x: s.x,
        y: s.y,
        theta: s.theta,
    }));
    Ok(full)
}

/// Connector trajectory CSV: `n,t,X,Y,theta,v,F,delta`; the final row has
/// no control (controls act on intervals).
pub fn write_connector_csv<W: Write>(
    result: &ConnectorResult,
    writer: &mut W,
) -> std::io::Result<()> {
    writeln!(writer, "n,t,X,Y,theta,v,F,delta")?;
    let dt = result.t_f / result.controls.len() as f64;
    for (i, s) in result.trajectory.iter().enumerate() {
        let controls = result
            .controls
            .get(i)
            .map(|u| format!("{:.6},{:.6}", u.force, u.delta))
            .unwrap_or_else(|| ",".to_string());
        writeln!(
            writer,
            "{},{:.6},{:.6},{:.6},{:.6},{:.6},{}",
            i,
            i as f64 * dt,
            s.x,
            s.y,
            s.theta,
            s.v,
            controls
        )?;
    }
    Ok(())
}
