//! Fixed-step integration schemes, the adaptive Dormand-Prince reference,
//! and the stability classification of each scheme on the reduced vehicle
//! model.
//!
//! Eight schemes are supported: forward/backward Euler, trapezoidal,
//! Runge-Kutta of orders 3, 4 and 6, Dormand-Prince 5(4), and the
//! four-step Adams-Bashforth method.

mod adaptive;
mod stability;
mod tableau;

pub use adaptive::{integrate_adaptive, integrate_adaptive_at};
pub use stability::{
    amplification_factor, eigenvalues_2x2, log_spaced, predict_stability, stability_boundary,
    stability_experiment, write_stability_csv, StabilityVerdict, Verdict,
    EXPERIMENT_DIVERGENCE_NORM,
};

use std::fmt;
use std::str::FromStr;

use thiserror::Error;

use tableau::{ExplicitTableau, DOPRI5, EULER_FORWARD, RK3, RK4, RK6};

/// State norm beyond which `integrate` stops and flags divergence.
pub const INTEGRATE_DIVERGENCE_NORM: f64 = 1e9;

/// The eight integration schemes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SchemeId {
    EulerForward,
    EulerBackward,
    Trapezoidal,
    Rk3,
    Rk4,
    Rk6,
    DormandPrince,
    AdamsBashforth4,
}

impl SchemeId {
    pub const ALL: [SchemeId; 8] = [
        SchemeId::EulerForward,
        SchemeId::EulerBackward,
        SchemeId::Trapezoidal,
        SchemeId::Rk3,
        SchemeId::Rk4,
        SchemeId::Rk6,
        SchemeId::DormandPrince,
        SchemeId::AdamsBashforth4,
    ];

    pub fn name(self) -> &'static str {
        match self {
            SchemeId::EulerForward => "euler_forward",
            SchemeId::EulerBackward => "euler_backward",
            SchemeId::Trapezoidal => "trapezoidal",
            SchemeId::Rk3 => "rk3",
            SchemeId::Rk4 => "rk4",
            SchemeId::Rk6 => "rk6",
            SchemeId::DormandPrince => "dormand_prince",
            SchemeId::AdamsBashforth4 => "adams_bashforth_4",
        }
    }

    /// Classical order of accuracy.
    pub fn order(self) -> usize {
        match self {
            SchemeId::EulerForward | SchemeId::EulerBackward => 1,
            SchemeId::Trapezoidal => 2,
            SchemeId::Rk3 => 3,
            SchemeId::Rk4 | SchemeId::AdamsBashforth4 => 4,
            SchemeId::DormandPrince => 5,
            SchemeId::Rk6 => 6,
        }
    }

    /// One-step schemes have a closed-form amplification factor; the
    /// multistep and adaptive schemes are classified empirically only.
    pub fn is_one_step(self) -> bool {
        !matches!(self, SchemeId::DormandPrince | SchemeId::AdamsBashforth4)
    }

    pub fn is_implicit(self) -> bool {
        matches!(self, SchemeId::EulerBackward | SchemeId::Trapezoidal)
    }
}

impl fmt::Display for SchemeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for SchemeId {
    type Err = IntegrateError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        SchemeId::ALL
            .into_iter()
            .find(|id| id.name() == s)
            .ok_or_else(|| IntegrateError::UnknownScheme(s.to_string()))
    }
}

/// A time-stamped state sequence produced by an integrator.
#[derive(Debug, Clone)]
pub struct Trajectory<const N: usize> {
    /// Strictly increasing sample times starting at 0.
    pub times: Vec<f64>,
    /// States aligned with `times`.
    pub states: Vec<[f64; N]>,
    /// Set when integration stopped early because the state norm exceeded
    /// the divergence bound (the offending state is not stored).
    pub diverged: bool,
}

impl<const N: usize> Trajectory<N> {
    pub fn final_state(&self) -> [f64; N] {
        *self.states.last().expect("trajectory holds the initial state")
    }

    pub fn final_time(&self) -> f64 {
        *self.times.last().expect("trajectory holds the initial time")
    }

    /// Largest Euclidean state norm along the trajectory; infinite if the
    /// trajectory diverged.
    pub fn max_norm(&self) -> f64 {
        if self.diverged {
            return f64::INFINITY;
        }
        self.states
            .iter()
            .map(|s| norm(s))
            .fold(0.0f64, f64::max)
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }
}

/// Errors raised by the integrators.
#[derive(Debug, Error)]
pub enum IntegrateError {
    #[error("unknown scheme {0:?}")]
    UnknownScheme(String),
    #[error("scheme {scheme} is not valid here: {role} expects {expects}")]
    WrongScheme {
        scheme: SchemeId,
        role: &'static str,
        expects: &'static str,
    },
    #[error("implicit solver failed at t={t}: residual {residual:.3e} after {iterations} iterations")]
    SolverFailure {
        t: f64,
        residual: f64,
        iterations: usize,
    },
    #[error("multistep history too short: need {needed} derivative values, got {got}")]
    InsufficientHistory { needed: usize, got: usize },
    #[error("adaptive step size underflow at t={t} (h={h:.3e}): problem too stiff")]
    StepSizeUnderflow { t: f64, h: f64 },
    #[error("amplification factor pole at z={z}")]
    Pole { z: num_complex::Complex64 },
}

pub(crate) fn norm<const N: usize>(s: &[f64; N]) -> f64 {
    s.iter().map(|v| v * v).sum::<f64>().sqrt()
}

fn is_finite<const N: usize>(s: &[f64; N]) -> bool {
    s.iter().all(|v| v.is_finite())
}

fn tableau_for(scheme: SchemeId) -> Option<&'static ExplicitTableau> {
    match scheme {
        SchemeId::EulerForward => Some(&EULER_FORWARD),
        SchemeId::Rk3 => Some(&RK3),
        SchemeId::Rk4 => Some(&RK4),
        SchemeId::Rk6 => Some(&RK6),
        SchemeId::DormandPrince => Some(&DOPRI5),
        _ => None,
    }
}

pub(crate) fn amplification_tableau(
    scheme: SchemeId,
) -> Option<&'static ExplicitTableau> {
    tableau_for(scheme)
}

/// One step of an explicit one-step scheme (`euler_forward`, `rk3`, `rk4`,
/// `rk6`). A non-finite result is the caller's divergence signal.
pub fn step_explicit<const N: usize, F>(
    scheme: SchemeId,
    f: &F,
    t: f64,
    s: &[f64; N],
    h: f64,
) -> Result<[f64; N], IntegrateError>
where
    F: Fn(f64, &[f64; N]) -> [f64; N] + ?Sized,
{
    let tab = match scheme {
        SchemeId::EulerForward | SchemeId::Rk3 | SchemeId::Rk4 | SchemeId::Rk6 => {
            tableau_for(scheme).unwrap()
        }
        _ => {
            return Err(IntegrateError::WrongScheme {
                scheme,
                role: "step_explicit",
                expects: "euler_forward, rk3, rk4 or rk6",
            })
        }
    };
    Ok(tableau::rk_step(tab, f, t, s, h))
}

/// One step of an implicit scheme, solved by damped Newton iteration with
/// a finite-difference Jacobian. On non-convergence the step is bisected
/// and retried before giving up.
pub fn step_implicit<const N: usize, F>(
    scheme: SchemeId,
    f: &F,
    t: f64,
    s: &[f64; N],
    h: f64,
    tol: f64,
) -> Result<[f64; N], IntegrateError>
where
    F: Fn(f64, &[f64; N]) -> [f64; N] + ?Sized,
{
    if !matches!(scheme, SchemeId::EulerBackward | SchemeId::Trapezoidal) {
        return Err(IntegrateError::WrongScheme {
            scheme,
            role: "step_implicit",
            expects: "euler_backward or trapezoidal",
        });
    }
    step_implicit_inner(scheme, f, t, s, h, tol, 0)
}

const NEWTON_MAX_ITERATIONS: usize = 50;
const BISECTION_MAX_DEPTH: usize = 6;

fn step_implicit_inner<const N: usize, F>(
    scheme: SchemeId,
    f: &F,
    t: f64,
    s: &[f64; N],
    h: f64,
    tol: f64,
    depth: usize,
) -> Result<[f64; N], IntegrateError>
where
    F: Fn(f64, &[f64; N]) -> [f64; N] + ?Sized,
{
    let f_at_s = f(t, s);
    // residual of the implicit update equation
    let residual = |candidate: &[f64; N]| -> [f64; N] {
        let fc = f(t + h, candidate);
        let mut g = [0.0; N];
        for n in 0..N {
            g[n] = match scheme {
                SchemeId::EulerBackward => candidate[n] - s[n] - h * fc[n],
                SchemeId::Trapezoidal => {
                    candidate[n] - s[n] - 0.5 * h * (f_at_s[n] + fc[n])
                }
                _ => unreachable!(),
            };
        }
        g
    };

    match newton_solve(&residual, *s, tol) {
        Ok(next) => Ok(next),
        Err((res, iters)) => {
            if depth < BISECTION_MAX_DEPTH {
                let half = step_implicit_inner(scheme, f, t, s, h / 2.0, tol, depth + 1)?;
                step_implicit_inner(scheme, f, t + h / 2.0, &half, h / 2.0, tol, depth + 1)
            } else {
                Err(IntegrateError::SolverFailure {
                    t,
                    residual: res,
                    iterations: iters,
                })
            }
        }
    }
}

/// Damped Newton on `g(x) = 0`. Returns the last residual norm and
/// iteration count on failure.
fn newton_solve<const N: usize>(
    g: &dyn Fn(&[f64; N]) -> [f64; N],
    mut x: [f64; N],
    tol: f64,
) -> Result<[f64; N], (f64, usize)> {
    let mut gx = g(&x);
    let mut res = norm(&gx);
    for iter in 0..NEWTON_MAX_ITERATIONS {
        if res <= tol {
            return Ok(x);
        }
        if !res.is_finite() {
            return Err((res, iter));
        }
        // finite-difference Jacobian, column by column
        let mut jac = [[0.0f64; N]; N];
        for j in 0..N {
            let eps = 1e-7 * (1.0 + x[j].abs());
            let mut xp = x;
            xp[j] += eps;
            let gp = g(&xp);
            for i in 0..N {
                jac[i][j] = (gp[i] - gx[i]) / eps;
            }
        }
        let mut rhs = [0.0f64; N];
        for i in 0..N {
            rhs[i] = -gx[i];
        }
        let Some(delta) = solve_linear(jac, rhs) else {
            return Err((res, iter));
        };
        // backtracking damping: insist on residual decrease
        let mut lambda = 1.0;
        let mut improved = false;
        for _ in 0..30 {
            let mut trial = x;
            for n in 0..N {
                trial[n] += lambda * delta[n];
            }
            let gt = g(&trial);
            let rt = norm(&gt);
            if rt < res {
                x = trial;
                gx = gt;
                res = rt;
                improved = true;
                break;
            }
            lambda *= 0.5;
        }
        if !improved {
            return Err((res, iter + 1));
        }
    }
    if res <= tol {
        Ok(x)
    } else {
        Err((res, NEWTON_MAX_ITERATIONS))
    }
}

/// Gaussian elimination with partial pivoting; N is small (state size).
fn solve_linear<const N: usize>(mut a: [[f64; N]; N], mut b: [f64; N]) -> Option<[f64; N]> {
    for col in 0..N {
        let pivot = (col..N).max_by(|&i, &j| {
            a[i][col].abs().partial_cmp(&a[j][col].abs()).unwrap()
        })?;
        if a[pivot][col].abs() < 1e-300 {
            return None;
        }
        a.swap(col, pivot);
        b.swap(col, pivot);
        for row in col + 1..N {
            let factor = a[row][col] / a[col][col];
            if factor != 0.0 {
                for k in col..N {
                    a[row][k] -= factor * a[col][k];
                }
                b[row] -= factor * b[col];
            }
        }
    }
    let mut x = [0.0f64; N];
    for row in (0..N).rev() {
        let mut sum = b[row];
        for k in row + 1..N {
            sum -= a[row][k] * x[k];
        }
        x[row] = sum / a[row][row];
    }
    Some(x)
}

/// One step of the four-step Adams-Bashforth method. `history` holds the
/// derivative at the four most recent grid points, oldest first.
pub fn step_ab4<const N: usize>(
    history: &[[f64; N]],
    s: &[f64; N],
    h: f64,
) -> Result<[f64; N], IntegrateError> {
    if history.len() < 4 {
        return Err(IntegrateError::InsufficientHistory {
            needed: 4,
            got: history.len(),
        });
    }
    let tail = &history[history.len() - 4..];
    let (f3, f2, f1, f0) = (&tail[3], &tail[2], &tail[1], &tail[0]);
    let mut out = *s;
    for n in 0..N {
        out[n] += h * (55.0 * f3[n] - 59.0 * f2[n] + 37.0 * f1[n] - 9.0 * f0[n]) / 24.0;
    }
    Ok(out)
}

/// Fixed-step integration over `ceil(t_final / h)` steps.
///
/// Dormand-Prince runs at the fixed step with its fifth-order weights.
/// Adams-Bashforth starts with three Runge-Kutta 4 steps to fill its
/// history. Stops early with the `diverged` flag when the state norm
/// exceeds [`INTEGRATE_DIVERGENCE_NORM`].
pub fn integrate<const N: usize, F>(
    scheme: SchemeId,
    f: &F,
    s0: [f64; N],
    h: f64,
    t_final: f64,
) -> Result<Trajectory<N>, IntegrateError>
where
    F: Fn(f64, &[f64; N]) -> [f64; N] + ?Sized,
{
    assert!(h > 0.0, "step size must be positive");
    assert!(t_final >= h, "horizon must cover at least one step");
    let steps = (t_final / h).ceil() as usize;
    let mut traj = Trajectory {
        times: Vec::with_capacity(steps + 1),
        states: Vec::with_capacity(steps + 1),
        diverged: false,
    };
    traj.times.push(0.0);
    traj.states.push(s0);

    let mut s = s0;
    let mut history: Vec<[f64; N]> = Vec::new();
    for step in 0..steps {
        let t = step as f64 * h;
        let next = match scheme {
            SchemeId::EulerForward | SchemeId::Rk3 | SchemeId::Rk4 | SchemeId::Rk6 => {
                step_explicit(scheme, f, t, &s, h)?
            }
            SchemeId::DormandPrince => tableau::rk_step(&DOPRI5, f, t, &s, h),
            SchemeId::EulerBackward | SchemeId::Trapezoidal => {
                step_implicit(scheme, f, t, &s, h, 1e-10)?
            }
            SchemeId::AdamsBashforth4 => {
                history.push(f(t, &s));
                if history.len() < 4 {
                    step_explicit(SchemeId::Rk4, f, t, &s, h)?
                } else {
                    step_ab4(&history, &s, h)?
                }
            }
        };
        if !is_finite(&next) || norm(&next) > INTEGRATE_DIVERGENCE_NORM {
            traj.diverged = true;
            return Ok(traj);
        }
        s = next;
        traj.times.push((step + 1) as f64 * h);
        traj.states.push(s);
    }
    Ok(traj)
}
