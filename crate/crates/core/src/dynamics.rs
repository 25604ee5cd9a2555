//! Continuous-time vehicle models: the full single-track (bicycle) model,
//! its constant-speed reduction, the linear tire relations, and the point
//! mass model used by the goal connector.
//!
//! All functions here are pure; the types are plain `Copy` values.

use crate::params::VehicleParams;

/// State of the reduced bicycle model: global pose plus the lateral
/// velocity and yaw rate. Longitudinal speed is fixed at `params.v_x`.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct ReducedState {
    /// Global x position, m.
    pub x: f64,
    /// Global y position, m.
    pub y: f64,
    /// Heading angle, rad (kept unwrapped during integration).
    pub theta: f64,
    /// Lateral speed in the body frame, m/s.
    pub v_y: f64,
    /// Yaw rate, rad/s.
    pub r: f64,
}

impl ReducedState {
    pub const fn new(x: f64, y: f64, theta: f64, v_y: f64, r: f64) -> Self {
        ReducedState { x, y, theta, v_y, r }
    }

    pub fn is_finite(&self) -> bool {
        let a: [f64; 5] = (*self).into();
        a.iter().all(|v| v.is_finite())
    }
}

impl From<[f64; 5]> for ReducedState {
    fn from(a: [f64; 5]) -> Self {
        ReducedState::new(a[0], a[1], a[2], a[3], a[4])
    }
}

impl From<ReducedState> for [f64; 5] {
    fn from(s: ReducedState) -> Self {
        [s.x, s.y, s.theta, s.v_y, s.r]
    }
}

/// State of the full bicycle model: `ReducedState` plus a free
/// longitudinal speed.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct FullState {
    pub x: f64,
    pub y: f64,
    pub theta: f64,
    /// Longitudinal speed, m/s.
    pub v_x: f64,
    pub v_y: f64,
    pub r: f64,
}

impl From<[f64; 6]> for FullState {
    fn from(a: [f64; 6]) -> Self {
        FullState {
            x: a[0],
            y: a[1],
            theta: a[2],
            v_x: a[3],
            v_y: a[4],
            r: a[5],
        }
    }
}

impl From<FullState> for [f64; 6] {
    fn from(s: FullState) -> Self {
        [s.x, s.y, s.theta, s.v_x, s.v_y, s.r]
    }
}

/// Front and rear tire slip angles, rad.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SlipAngles {
    pub alpha_f: f64,
    pub alpha_r: f64,
}

/// Tire forces in the body frame, N. The reduced model keeps
/// `f_xf = f_xr = 0`.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct TireForces {
    pub f_yf: f64,
    pub f_yr: f64,
    pub f_xf: f64,
    pub f_xr: f64,
}

/// State of the point mass model used by the connector.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct PointMassState {
    pub x: f64,
    pub y: f64,
    pub theta: f64,
    /// Speed along the heading, m/s.
    pub v: f64,
}

impl PointMassState {
    pub const fn new(x: f64, y: f64, theta: f64, v: f64) -> Self {
        PointMassState { x, y, theta, v }
    }
}

impl From<[f64; 4]> for PointMassState {
    fn from(a: [f64; 4]) -> Self {
        PointMassState::new(a[0], a[1], a[2], a[3])
    }
}

impl From<PointMassState> for [f64; 4] {
    fn from(s: PointMassState) -> Self {
        [s.x, s.y, s.theta, s.v]
    }
}

/// Control input of the point mass model.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct PointMassControl {
    /// Drive force, N.
    pub force: f64,
    /// Steer angle, rad.
    pub delta: f64,
}

/// Slip angles of front and rear wheels for the linear tire model:
/// `alpha_f = (v_y + l_f r)/v_x - delta`, `alpha_r = (v_y - l_r r)/v_x`.
pub fn slip_angles(v_y: f64, r: f64, delta: f64, params: &VehicleParams) -> SlipAngles {
    SlipAngles {
        alpha_f: (v_y + params.l_f * r) / params.v_x - delta,
        alpha_r: (v_y - params.l_r * r) / params.v_x,
    }
}

/// Lateral forces from the linear tire model: `F_y = -C_alpha * alpha`.
/// Longitudinal forces are zero in this model.
pub fn lateral_forces(slip: SlipAngles, params: &VehicleParams) -> TireForces {
    TireForces {
        f_yf: -params.c_alpha_f * slip.alpha_f,
        f_yr: -params.c_alpha_r * slip.alpha_r,
        f_xf: 0.0,
        f_xr: 0.0,
    }
}

/// Time derivative of the reduced (constant `v_x`) bicycle model under a
/// fixed steer angle.
pub fn reduced_derivative(s: ReducedState, delta: f64, params: &VehicleParams) -> ReducedState {
    let forces = lateral_forces(slip_angles(s.v_y, s.r, delta, params), params);
    let (sin_t, cos_t) = s.theta.sin_cos();
    let cos_d = delta.cos();
    ReducedState {
        x: params.v_x * cos_t - s.v_y * sin_t,
        y: params.v_x * sin_t + s.v_y * cos_t,
        theta: s.r,
        v_y: (forces.f_yf * cos_d + forces.f_yr) / params.m - params.v_x * s.r,
        r: (params.l_f * (forces.f_yf * cos_d) - params.l_r * forces.f_yr) / params.i_z,
    }
}

/// Time derivative of the full bicycle model with longitudinal tire
/// forces as free inputs. Slip angles are evaluated at the state's own
/// `v_x`.
pub fn full_derivative(
    s: FullState,
    delta: f64,
    f_xf: f64,
    f_xr: f64,
    params: &VehicleParams,
) -> FullState {
    let mut p = *params;
    p.v_x = s.v_x;
    let slip = slip_angles(s.v_y, s.r, delta, &p);
    let forces = lateral_forces(slip, &p);
    let (sin_t, cos_t) = s.theta.sin_cos();
    let (sin_d, cos_d) = delta.sin_cos();
    FullState {
        x: s.v_x * cos_t - s.v_y * sin_t,
        y: s.v_x * sin_t + s.v_y * cos_t,
        theta: s.r,
        v_x: (-f_xf * cos_d - forces.f_yf * sin_d - f_xr) / p.m + s.v_y * s.r,
        v_y: (forces.f_yf * cos_d - f_xf * sin_d + forces.f_yr) / p.m - s.v_x * s.r,
        r: (p.l_f * (forces.f_yf * cos_d - f_xf * sin_d) - p.l_r * forces.f_yr) / p.i_z,
    }
}

/// Time derivative of the point mass model; wheelbase `L = l_f + l_r`.
pub fn point_mass_derivative(
    s: PointMassState,
    u: PointMassControl,
    params: &VehicleParams,
) -> PointMassState {
    let (sin_t, cos_t) = s.theta.sin_cos();
    PointMassState {
        x: s.v * cos_t,
        y: s.v * sin_t,
        theta: s.v * u.delta.tan() / params.wheelbase(),
        v: u.force / params.m,
    }
}

/// Exact affine form of the `(v_y, r)` subsystem at fixed steer angle:
/// `(v_y', r') = A (v_y, r) + b`.
///
/// Obtained by substituting the slip and force relations into the reduced
/// model; serves as the analytic oracle for the integrator stability study.
pub fn lateral_system_matrix(delta: f64, params: &VehicleParams) -> ([[f64; 2]; 2], [f64; 2]) {
    let cos_d = delta.cos();
    let cf = params.c_alpha_f;
    let cr = params.c_alpha_r;
    let (m, iz, lf, lr, vx) = (params.m, params.i_z, params.l_f, params.l_r, params.v_x);
    let a = [
        [
            -(cf * cos_d + cr) / (m * vx),
            (-cf * lf * cos_d + cr * lr) / (m * vx) - vx,
        ],
        [
            (-lf * cf * cos_d + lr * cr) / (iz * vx),
            -(lf * lf * cf * cos_d + lr * lr * cr) / (iz * vx),
        ],
    ];
    let b = [cf * delta * cos_d / m, lf * cf * delta * cos_d / iz];
    (a, b)
}

/// Closure adapter: the reduced model as an autonomous ODE over `[f64; 5]`
/// (state order x, y, theta, v_y, r), suitable for the integrators.
pub fn reduced_ode(
    delta: f64,
    params: VehicleParams,
) -> impl Fn(f64, &[f64; 5]) -> [f64; 5] + Clone {
    move |_t, s| reduced_derivative(ReducedState::from(*s), delta, &params).into()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn params() -> VehicleParams {
        VehicleParams::default()
    }

    #[test]
    fn slip_angles_straight_line_equilibrium() {
        let s = slip_angles(0.0, 0.0, 0.0, &params());
        assert_eq!(s.alpha_f, 0.0);
        assert_eq!(s.alpha_r, 0.0);
    }

    #[test]
    fn slip_angles_pure_steer_offset() {
        let s = slip_angles(0.0, 0.0, 0.1, &params());
        assert_relative_eq!(s.alpha_f, -0.1, max_relative = 1e-15);
        assert_eq!(s.alpha_r, 0.0);
    }

    #[test]
    fn slip_angles_hand_evaluated() {
        // v_y=1, r=0.1, delta=0 at v_x=15, l_f=1.2, l_r=1.4:
        // alpha_f = (1 + 0.12)/15 = 0.0746667, alpha_r = (1 - 0.14)/15 = 0.0573333
        let s = slip_angles(1.0, 0.1, 0.0, &params());
        assert_relative_eq!(s.alpha_f, 0.074666666666666666, epsilon = 1e-12);
        assert_relative_eq!(s.alpha_r, 0.057333333333333333, epsilon = 1e-12);
    }

    #[test]
    fn lateral_forces_hand_evaluated() {
        let p = params();
        let zero = lateral_forces(SlipAngles { alpha_f: 0.0, alpha_r: 0.0 }, &p);
        assert_eq!((zero.f_yf, zero.f_yr), (0.0, 0.0));

        let f = lateral_forces(SlipAngles { alpha_f: 0.01, alpha_r: 0.0 }, &p);
        assert_relative_eq!(f.f_yf, -800.0, epsilon = 1e-9);
        assert_eq!(f.f_yr, 0.0);

        let f = lateral_forces(SlipAngles { alpha_f: -0.1, alpha_r: 0.05 }, &p);
        assert_relative_eq!(f.f_yf, 8000.0, epsilon = 1e-9);
        assert_relative_eq!(f.f_yr, -4000.0, epsilon = 1e-9);
        assert_eq!((f.f_xf, f.f_xr), (0.0, 0.0));
    }

    #[test]
    fn reduced_derivative_straight_line() {
        let p = params();
        let d = reduced_derivative(ReducedState::default(), 0.0, &p);
        assert_eq!(
            (d.x, d.y, d.theta, d.v_y, d.r),
            (p.v_x, 0.0, 0.0, 0.0, 0.0)
        );
    }

    #[test]
    fn reduced_derivative_rotated_straight_line() {
        let p = params();
        let s = ReducedState::new(0.0, 0.0, std::f64::consts::FRAC_PI_2, 0.0, 0.0);
        let d = reduced_derivative(s, 0.0, &p);
        assert_relative_eq!(d.x, 0.0, epsilon = 1e-12);
        assert_relative_eq!(d.y, p.v_x, epsilon = 1e-12);
        assert_eq!((d.theta, d.v_y, d.r), (0.0, 0.0, 0.0));
    }

    #[test]
    fn reduced_derivative_matches_affine_form() {
        let p = params();
        let s = ReducedState::new(0.0, 0.0, 0.0, 1.0, 0.1);
        let d = reduced_derivative(s, 0.0, &p);
        let (a, b) = lateral_system_matrix(0.0, &p);
        let vy_dot = a[0][0] * s.v_y + a[0][1] * s.r + b[0];
        let r_dot = a[1][0] * s.v_y + a[1][1] * s.r + b[1];
        assert_relative_eq!(d.v_y, vy_dot, epsilon = 1e-12);
        assert_relative_eq!(d.r, r_dot, epsilon = 1e-12);
    }

    #[test]
    fn full_derivative_longitudinal_force_only() {
        let p = params();
        let rest = FullState {
            v_x: p.v_x,
            ..FullState::default()
        };
        let d = full_derivative(rest, 0.0, 0.0, 100.0, &p);
        assert_relative_eq!(d.v_x, -100.0 / p.m, epsilon = 1e-12);
    }

    #[test]
    fn full_reduces_to_reduced_when_unforced() {
        let p = params();
        let d = full_derivative(
            FullState {
                v_x: p.v_x,
                ..FullState::default()
            },
            0.0,
            0.0,
            0.0,
            &p,
        );
        assert_eq!(d.v_x, 0.0);
        let dr = reduced_derivative(ReducedState::default(), 0.0, &p);
        assert_eq!((d.x, d.y, d.theta, d.v_y, d.r), (dr.x, dr.y, dr.theta, dr.v_y, dr.r));
    }

    #[test]
    fn point_mass_hand_evaluated() {
        let p = params();
        let coast = point_mass_derivative(
            PointMassState::new(0.0, 0.0, 0.0, 10.0),
            PointMassControl::default(),
            &p,
        );
        assert_eq!((coast.x, coast.y, coast.theta, coast.v), (10.0, 0.0, 0.0, 0.0));

        let accel = point_mass_derivative(
            PointMassState::new(0.0, 0.0, 0.0, 10.0),
            PointMassControl { force: 1500.0, delta: 0.0 },
            &p,
        );
        assert_relative_eq!(accel.v, 1.0, epsilon = 1e-12);

        let turn = point_mass_derivative(
            PointMassState::new(0.0, 0.0, 0.0, 10.0),
            PointMassControl { force: 0.0, delta: std::f64::consts::FRAC_PI_4 },
            &p,
        );
        assert_relative_eq!(turn.theta, 10.0 / 2.6, epsilon = 1e-12);
    }

    #[test]
    fn lateral_matrix_zero_steer_has_zero_offset() {
        let (_, b) = lateral_system_matrix(0.0, &params());
        assert_eq!(b, [0.0, 0.0]);
    }

    #[test]
    fn lateral_matrix_residual_on_random_states() {
        // The (v_y, r) subsystem is exactly affine, so the residual against
        // the nonlinear evaluation must be at machine precision.
        let p = params();
        let mut seed = 0x9e3779b97f4a7c15u64;
        let mut next = move || {
            seed = seed.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            (seed >> 11) as f64 / (1u64 << 53) as f64 * 10.0 - 5.0
        };
        for _ in 0..100 {
            let (v_y, r, delta) = (next(), next(), next() * 0.15);
            let (a, b) = lateral_system_matrix(delta, &p);
            let d = reduced_derivative(ReducedState::new(0.0, 0.0, 0.0, v_y, r), delta, &p);
            let vy_dot = a[0][0] * v_y + a[0][1] * r + b[0];
            let r_dot = a[1][0] * v_y + a[1][1] * r + b[1];
            assert!((d.v_y - vy_dot).abs() <= 1e-12 * (1.0 + vy_dot.abs()));
            assert!((d.r - r_dot).abs() <= 1e-12 * (1.0 + r_dot.abs()));
        }
    }

    #[test]
    fn lateral_matrix_matches_finite_difference_jacobian() {
        let p = params();
        let delta = 0.2;
        let (a, _) = lateral_system_matrix(delta, &p);
        let eps = 1e-6;
        let f = |v_y: f64, r: f64| {
            let d = reduced_derivative(ReducedState::new(0.0, 0.0, 0.0, v_y, r), delta, &p);
            (d.v_y, d.r)
        };
        let (vy_p, r_p) = f(eps, 0.0);
        let (vy_m, r_m) = f(-eps, 0.0);
        assert_relative_eq!((vy_p - vy_m) / (2.0 * eps), a[0][0], max_relative = 1e-6);
        assert_relative_eq!((r_p - r_m) / (2.0 * eps), a[1][0], max_relative = 1e-6);
        let (vy_p, r_p) = f(0.0, eps);
        let (vy_m, r_m) = f(0.0, -eps);
        assert_relative_eq!((vy_p - vy_m) / (2.0 * eps), a[0][1], max_relative = 1e-6);
        assert_relative_eq!((r_p - r_m) / (2.0 * eps), a[1][1], max_relative = 1e-6);
    }

    proptest! {
        #[test]
        fn straight_line_equilibrium_for_any_heading(theta in -10.0f64..10.0) {
            let d = reduced_derivative(
                ReducedState::new(0.0, 0.0, theta, 0.0, 0.0), 0.0, &params());
            prop_assert_eq!(d.v_y, 0.0);
            prop_assert_eq!(d.r, 0.0);
        }

        #[test]
        fn lateral_map_is_linear_at_zero_steer(
            v1 in -5.0f64..5.0, r1 in -2.0f64..2.0,
            v2 in -5.0f64..5.0, r2 in -2.0f64..2.0,
            a in -3.0f64..3.0, b in -3.0f64..3.0,
        ) {
            let p = params();
            let f = |v_y: f64, r: f64| {
                let d = reduced_derivative(ReducedState::new(0.0, 0.0, 0.0, v_y, r), 0.0, &p);
                (d.v_y, d.r)
            };
            let (fv1, fr1) = f(v1, r1);
            let (fv2, fr2) = f(v2, r2);
            let (fvc, frc) = f(a * v1 + b * v2, a * r1 + b * r2);
            let scale = 1.0 + fvc.abs().max(frc.abs());
            prop_assert!((fvc - (a * fv1 + b * fv2)).abs() <= 1e-9 * scale);
            prop_assert!((frc - (a * fr1 + b * fr2)).abs() <= 1e-9 * scale);
        }

        #[test]
        fn mirror_symmetry(
            x in -50.0f64..50.0, y in -50.0f64..50.0, theta in -3.0f64..3.0,
            v_y in -5.0f64..5.0, r in -2.0f64..2.0, delta in -0.7f64..0.7,
        ) {
            let p = params();
            let d = reduced_derivative(ReducedState::new(x, y, theta, v_y, r), delta, &p);
            let dm = reduced_derivative(
                ReducedState::new(x, -y, -theta, -v_y, -r), -delta, &p);
            prop_assert!((dm.x - d.x).abs() <= 1e-9 * (1.0 + d.x.abs()));
            prop_assert!((dm.y + d.y).abs() <= 1e-9 * (1.0 + d.y.abs()));
            prop_assert!((dm.theta + d.theta).abs() <= 1e-9 * (1.0 + d.theta.abs()));
            prop_assert!((dm.v_y + d.v_y).abs() <= 1e-9 * (1.0 + d.v_y.abs()));
            prop_assert!((dm.r + d.r).abs() <= 1e-9 * (1.0 + d.r.abs()));
        }

        #[test]
        fn full_matches_reduced_without_longitudinal_force(
            x in -50.0f64..50.0, y in -50.0f64..50.0, theta in -3.0f64..3.0,
            v_y in -5.0f64..5.0, r in -2.0f64..2.0, delta in -0.7f64..0.7,
        ) {
            let p = params();
            let full = full_derivative(
                FullState { x, y, theta, v_x: p.v_x, v_y, r }, delta, 0.0, 0.0, &p);
            let red = reduced_derivative(ReducedState::new(x, y, theta, v_y, r), delta, &p);
            prop_assert_eq!(full.x, red.x);
            prop_assert_eq!(full.y, red.y);
            prop_assert_eq!(full.theta, red.theta);
            prop_assert_eq!(full.v_y, red.v_y);
            prop_assert_eq!(full.r, red.r);
        }
    }
}
