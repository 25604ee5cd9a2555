//! Adaptive Dormand-Prince 5(4) with PI step-size control and fourth-order
//! dense output. Serves as the reference solution for the fixed-step
//! schemes.

use super::{norm, IntegrateError, Trajectory};

// Stage coefficients of the 5(4) pair.
const C: [f64; 7] = [0.0, 0.2, 0.3, 0.8, 8.0 / 9.0, 1.0, 1.0];
const A: [[f64; 6]; 6] = [
    [0.2, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [
        19372.0 / 6561.0,
        -25360.0 / 2187.0,
        64448.0 / 6561.0,
        -212.0 / 729.0,
        0.0,
        0.0,
    ],
    [
        9017.0 / 3168.0,
        -355.0 / 33.0,
        46732.0 / 5247.0,
        49.0 / 176.0,
        -5103.0 / 18656.0,
        0.0,
    ],
    [
        35.0 / 384.0,
        0.0,
        500.0 / 1113.0,
        125.0 / 192.0,
        -2187.0 / 6784.0,
        11.0 / 84.0,
    ],
];
/// Fifth-order weights (FSAL: equal to the last A row, b7 = 0).
const B5: [f64; 7] = [
    35.0 / 384.0,
    0.0,
    500.0 / 1113.0,
    125.0 / 192.0,
    -2187.0 / 6784.0,
    11.0 / 84.0,
    0.0,
];
/// Embedded fourth-order weights.
const B4: [f64; 7] = [
    5179.0 / 57600.0,
    0.0,
    7571.0 / 16695.0,
    393.0 / 640.0,
    -92097.0 / 339200.0,
    187.0 / 2100.0,
    1.0 / 40.0,
];
/// Dense-output coefficients.
const D: [f64; 7] = [
    -12715105075.0 / 11282082432.0,
    0.0,
    87487479700.0 / 32700410799.0,
    -10690763975.0 / 1880347072.0,
    701980252875.0 / 199316789632.0,
    -1453857185.0 / 822651844.0,
    69997945.0 / 29380423.0,
];

const SAFETY: f64 = 0.9;
const BETA: f64 = 0.04;
const EXPO1: f64 = 0.2 - BETA * 0.75;
const MAX_GROW: f64 = 10.0;
const MAX_SHRINK: f64 = 0.2;

struct DenseSegment<const N: usize> {
    t: f64,
    h: f64,
    rcont: [[f64; N]; 5],
}

impl<const N: usize> DenseSegment<N> {
    fn eval(&self, t: f64) -> [f64; N] {
        let theta = (t - self.t) / self.h;
        let theta1 = 1.0 - theta;
        let mut out = [0.0; N];
        for n in 0..N {
            out[n] = self.rcont[0][n]
                + theta
                    * (self.rcont[1][n]
                        + theta1
                            * (self.rcont[2][n]
                                + theta * (self.rcont[3][n] + theta1 * self.rcont[4][n])));
        }
        out
    }
}

struct Dopri<'a, const N: usize, F: ?Sized> {
    f: &'a F,
    rel_tol: f64,
    abs_tol: f64,
}

impl<'a, const N: usize, F> Dopri<'a, N, F>
where
    F: Fn(f64, &[f64; N]) -> [f64; N] + ?Sized,
{
    fn scaled_error(&self, y: &[f64; N], ynew: &[f64; N], diff: &[f64; N]) -> f64 {
        let mut acc = 0.0;
        for n in 0..N {
            let scale = self.abs_tol + self.rel_tol * y[n].abs().max(ynew[n].abs());
            let e = diff[n] / scale;
            acc += e * e;
        }
        (acc / N as f64).sqrt()
    }

    /// First-step estimate from the derivative magnitude and a cheap Euler
    /// trial; a zero derivative at the start tries the whole horizon at
    /// once (rejections shrink it if the field wakes up later).
    fn initial_step(&self, s0: &[f64; N], t_final: f64) -> f64 {
        let f0 = (self.f)(0.0, s0);
        let scale = |y: &[f64; N]| {
            let mut acc = 0.0;
            for n in 0..N {
                let s = self.abs_tol + self.rel_tol * s0[n].abs();
                acc += (y[n] / s).powi(2);
            }
            (acc / N as f64).sqrt()
        };
        let d0 = scale(s0);
        let d1 = scale(&f0);
        if d1 == 0.0 {
            return t_final;
        }
        let h0 = if d0 < 1e-5 || d1 < 1e-5 {
            1e-6
        } else {
            0.01 * d0 / d1
        }
        .min(t_final);
        let mut y1 = *s0;
        for n in 0..N {
            y1[n] += h0 * f0[n];
        }
        let f1 = (self.f)(h0, &y1);
        let mut diff = [0.0; N];
        for n in 0..N {
            diff[n] = f1[n] - f0[n];
        }
        let d2 = scale(&diff) / h0;
        let h1 = if d1.max(d2) <= 1e-15 {
            (h0 * 1e-3).max(1e-6)
        } else {
            (0.01 / d1.max(d2)).powf(0.2)
        };
        (100.0 * h0).min(h1).min(t_final)
    }

    /// Integrate from 0 to `t_final`, invoking `on_step` after every
    /// accepted step with the dense-output segment.
    fn run(
        &self,
        s0: [f64; N],
        t_final: f64,
        mut on_step: impl FnMut(f64, &[f64; N], &DenseSegment<N>),
    ) -> Result<(), IntegrateError> {
        assert!(self.rel_tol > 0.0 && self.abs_tol > 0.0, "tolerances must be positive");
        assert!(t_final > 0.0, "horizon must be positive");
        let mut t = 0.0;
        let mut y = s0;
        let mut k1 = (self.f)(0.0, &y);
        let mut h = self.initial_step(&s0, t_final);
        let mut facold: f64 = 1e-4;
        let mut rejected_last = false;

        while t < t_final {
            if h < 1e-12 * t_final {
                return Err(IntegrateError::StepSizeUnderflow { t, h });
            }
            h = h.min(t_final - t);

            // six new stage evaluations (k1 carried over, FSAL)
            let mut k = [[0.0; N]; 7];
            k[0] = k1;
            for stage in 1..7 {
                let mut ys = y;
                for (j, kj) in k.iter().enumerate().take(stage) {
                    let a = A[stage - 1][j];
                    if a != 0.0 {
                        for n in 0..N {
                            ys[n] += h * a * kj[n];
                        }
                    }
                }
                k[stage] = (self.f)(t + C[stage] * h, &ys);
            }

            let mut ynew = y;
            let mut err_vec = [0.0; N];
            for (j, kj) in k.iter().enumerate() {
                for n in 0..N {
                    ynew[n] += h * B5[j] * kj[n];
                    err_vec[n] += h * (B5[j] - B4[j]) * kj[n];
                }
            }
            // FSAL stage: derivative at the candidate endpoint
            let k_last = (self.f)(t + h, &ynew);

            let err = self.scaled_error(&y, &ynew, &err_vec);
            let finite = ynew.iter().all(|v| v.is_finite()) && err.is_finite();

            if finite && err <= 1.0 {
                let mut rcont = [[0.0; N]; 5];
                for n in 0..N {
                    let ydiff = ynew[n] - y[n];
                    let bspl = h * k[0][n] - ydiff;
                    rcont[0][n] = y[n];
                    rcont[1][n] = ydiff;
                    rcont[2][n] = bspl;
                    rcont[3][n] = ydiff - h * k_last[n] - bspl;
                    rcont[4][n] = h
                        * (D[0] * k[0][n]
                            + D[2] * k[2][n]
                            + D[3] * k[3][n]
                            + D[4] * k[4][n]
                            + D[5] * k[5][n]
                            + D[6] * k_last[n]);
                }
                let segment = DenseSegment { t, h, rcont };
                t += h;
                y = ynew;
                k1 = k_last;
                on_step(t, &y, &segment);

                let fac11 = err.max(1e-16).powf(EXPO1);
                let mut fac = fac11 / facold.powf(BETA);
                fac = (fac / SAFETY).clamp(1.0 / MAX_GROW, 1.0 / MAX_SHRINK);
                let mut h_new = h / fac;
                if rejected_last {
                    h_new = h_new.min(h);
                }
                facold = err.max(1e-4);
                rejected_last = false;
                h = h_new;
            } else {
                let fac11 = if finite { err.powf(EXPO1) } else { 1.0 / MAX_SHRINK };
                h /= (fac11 / SAFETY).min(1.0 / MAX_SHRINK);
                rejected_last = true;
            }
        }
        Ok(())
    }
}

/// Adaptive integration from 0 to `t_final`; the trajectory holds every
/// accepted step.
pub fn integrate_adaptive<const N: usize, F>(
    f: &F,
    s0: [f64; N],
    t_final: f64,
    rel_tol: f64,
    abs_tol: f64,
) -> Result<Trajectory<N>, IntegrateError>
where
    F: Fn(f64, &[f64; N]) -> [f64; N] + ?Sized,
{
    let driver = Dopri { f, rel_tol, abs_tol };
    let mut traj = Trajectory {
        times: vec![0.0],
        states: vec![s0],
        diverged: false,
    };
    driver.run(s0, t_final, |t, y, _| {
        traj.times.push(t);
        traj.states.push(*y);
    })?;
    Ok(traj)
}

/// Adaptive integration sampled at `sample_times` (ascending, within
/// `[0, max]`) via the fourth-order dense output.
pub fn integrate_adaptive_at<const N: usize, F>(
    f: &F,
    s0: [f64; N],
    sample_times: &[f64],
    rel_tol: f64,
    abs_tol: f64,
) -> Result<Trajectory<N>, IntegrateError>
where
    F: Fn(f64, &[f64; N]) -> [f64; N] + ?Sized,
{
    assert!(
        sample_times.windows(2).all(|w| w[0] < w[1]),
        "sample times must be strictly increasing"
    );
    let t_final = *sample_times.last().expect("at least one sample time");
    let driver = Dopri { f, rel_tol, abs_tol };
    let mut traj = Trajectory {
        times: Vec::with_capacity(sample_times.len()),
        states: Vec::with_capacity(sample_times.len()),
        diverged: false,
    };
    let mut next = 0usize;
    if sample_times[0] == 0.0 {
        traj.times.push(0.0);
        traj.states.push(s0);
        next = 1;
    }
    driver.run(s0, t_final, |t, y, segment| {
        while next < sample_times.len() && sample_times[next] <= t {
            let ts = sample_times[next];
            let state = if ts == t { *y } else { segment.eval(ts) };
            traj.times.push(ts);
            traj.states.push(state);
            next += 1;
        }
    })?;
    Ok(traj)
}

#[allow(dead_code)]
fn state_norm<const N: usize>(s: &[f64; N]) -> f64 {
    norm(s)
}
