//! Stability classification of the integration schemes on the cornering
//! test problem: empirically by integrating the reduced model, and
//! analytically through the amplification factor applied to the
//! eigenvalues of the exact affine lateral subsystem.

use std::f64::consts::FRAC_PI_4;
use std::io::Write;

use num_complex::Complex64;

use super::{amplification_tableau, integrate, IntegrateError, SchemeId};
use crate::dynamics::{lateral_system_matrix, reduced_ode};
use crate::params::VehicleParams;

/// Max-norm bound separating instability from benign transients in the
/// empirical experiment.
pub const EXPERIMENT_DIVERGENCE_NORM: f64 = 1e6;

/// Steer angle of the cornering test.
const TEST_STEER: f64 = FRAC_PI_4;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Verdict {
    Stable,
    Unstable,
}

impl Verdict {
    pub fn name(self) -> &'static str {
        match self {
            Verdict::Stable => "stable",
            Verdict::Unstable => "unstable",
        }
    }

    pub fn is_stable(self) -> bool {
        matches!(self, Verdict::Stable)
    }
}

impl std::fmt::Display for Verdict {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

/// Outcome of one (scheme, step) stability cell.
#[derive(Debug, Clone, Copy)]
pub struct StabilityVerdict {
    pub scheme: SchemeId,
    /// Step size, s.
    pub step: f64,
    pub verdict: Verdict,
    /// Empirical cells: largest state norm along the trajectory.
    /// Analytic cells: largest amplification magnitude per step.
    pub max_norm: f64,
}

/// Eigenvalues of a real 2x2 matrix as a complex pair.
pub fn eigenvalues_2x2(a: [[f64; 2]; 2]) -> (Complex64, Complex64) {
    let trace = a[0][0] + a[1][1];
    let det = a[0][0] * a[1][1] - a[0][1] * a[1][0];
    let disc = trace * trace - 4.0 * det;
    if disc >= 0.0 {
        let root = disc.sqrt();
        (
            Complex64::new((trace + root) / 2.0, 0.0),
            Complex64::new((trace - root) / 2.0, 0.0),
        )
    } else {
        let root = (-disc).sqrt();
        (
            Complex64::new(trace / 2.0, root / 2.0),
            Complex64::new(trace / 2.0, -root / 2.0),
        )
    }
}

/// Amplification factor `R(z)` of a one-step scheme on `x' = lambda x`
/// with `z = h lambda`.
pub fn amplification_factor(scheme: SchemeId, z: Complex64) -> Result<Complex64, IntegrateError> {
    let one = Complex64::new(1.0, 0.0);
    match scheme {
        SchemeId::EulerBackward => {
            let denom = one - z;
            if denom.norm() == 0.0 {
                return Err(IntegrateError::Pole { z });
            }
            Ok(one / denom)
        }
        SchemeId::Trapezoidal => {
            let half = z * 0.5;
            let denom = one - half;
            if denom.norm() == 0.0 {
                return Err(IntegrateError::Pole { z });
            }
            Ok((one + half) / denom)
        }
        SchemeId::EulerForward | SchemeId::Rk3 | SchemeId::Rk4 | SchemeId::Rk6 => Ok(
            super::tableau::rk_amplification(amplification_tableau(scheme).unwrap(), z),
        ),
        SchemeId::DormandPrince | SchemeId::AdamsBashforth4 => Err(IntegrateError::WrongScheme {
            scheme,
            role: "amplification_factor",
            expects: "a one-step scheme",
        }),
    }
}

/// Analytic stability verdict for a one-step scheme on the cornering
/// problem: stable iff `|R(h lambda)| <= 1` for both eigenvalues of the
/// lateral subsystem matrix.
pub fn predict_stability(
    scheme: SchemeId,
    h: f64,
    delta: f64,
    params: &VehicleParams,
) -> Result<StabilityVerdict, IntegrateError> {
    let (a, _) = lateral_system_matrix(delta, params);
    let (l1, l2) = eigenvalues_2x2(a);
    let r1 = amplification_factor(scheme, l1 * h)?.norm();
    let r2 = amplification_factor(scheme, l2 * h)?.norm();
    let max = r1.max(r2);
    Ok(StabilityVerdict {
        scheme,
        step: h,
        verdict: if max <= 1.0 {
            Verdict::Stable
        } else {
            Verdict::Unstable
        },
        max_norm: max,
    })
}

/// Smallest step at which the analytic verdict flips to unstable within
/// `[h_lo, h_hi]`, or `None` when the scheme is stable across the whole
/// range (the A-stable schemes). Located by scan plus bisection.
pub fn stability_boundary(
    scheme: SchemeId,
    delta: f64,
    params: &VehicleParams,
    h_lo: f64,
    h_hi: f64,
) -> Result<Option<f64>, IntegrateError> {
    let growth = |h: f64| -> Result<f64, IntegrateError> {
        Ok(predict_stability(scheme, h, delta, params)?.max_norm - 1.0)
    };
    let samples = 512;
    let mut prev_h = h_lo;
    let mut prev_g = growth(h_lo)?;
    if prev_g > 0.0 {
        return Ok(Some(h_lo));
    }
    for i in 1..=samples {
        let h = h_lo * (h_hi / h_lo).powf(i as f64 / samples as f64);
        let g = growth(h)?;
        if g > 0.0 {
            // bisect the bracket [prev_h, h]
            let (mut lo, mut hi) = (prev_h, h);
            for _ in 0..80 {
                let mid = 0.5 * (lo + hi);
                if growth(mid)? > 0.0 {
                    hi = mid;
                } else {
                    lo = mid;
                }
            }
            return Ok(Some(0.5 * (lo + hi)));
        }
        prev_h = h;
        prev_g = g;
    }
    let _ = prev_g;
    Ok(None)
}

/// Empirical stability sweep: integrate the reduced model at the cornering
/// test point (`delta = pi/4`, `v_x` from params) from rest for each
/// (scheme, step) and classify by the largest state norm observed.
///
/// Divergence is a verdict here, not an error; an implicit-solver failure
/// is likewise recorded as unstable.
pub fn stability_experiment(
    schemes: &[SchemeId],
    h_values: &[f64],
    t_final: f64,
    params: &VehicleParams,
) -> Vec<StabilityVerdict> {
    assert!(t_final > 0.0);
    let f = reduced_ode(TEST_STEER, *params);
    let mut out = Vec::with_capacity(schemes.len() * h_values.len());
    for &scheme in schemes {
        for &h in h_values {
            let max_norm = match integrate(scheme, &f, [0.0; 5], h, t_final) {
                Ok(traj) => traj.max_norm(),
                Err(_) => f64::INFINITY,
            };
            let verdict = if max_norm > EXPERIMENT_DIVERGENCE_NORM {
                Verdict::Unstable
            } else {
                Verdict::Stable
            };
            out.push(StabilityVerdict {
                scheme,
                step: h,
                verdict,
                max_norm,
            });
        }
    }
    out
}

/// Write the stability report CSV: `scheme,h,verdict,max_norm`.
pub fn write_stability_csv<W: Write>(
    verdicts: &[StabilityVerdict],
    writer: &mut W,
) -> std::io::Result<()> {
    writeln!(writer, "scheme,h,verdict,max_norm")?;
    for v in verdicts {
        writeln!(
            writer,
            "{},{:.6e},{},{:.6e}",
            v.scheme, v.step, v.verdict, v.max_norm
        )?;
    }
    Ok(())
}

/// Log-spaced step sizes, inclusive of both endpoints.
pub fn log_spaced(lo: f64, hi: f64, count: usize) -> Vec<f64> {
    assert!(count >= 2 && lo > 0.0 && hi > lo);
    (0..count)
        .map(|i| lo * (hi / lo).powf(i as f64 / (count - 1) as f64))
        .collect()
}
