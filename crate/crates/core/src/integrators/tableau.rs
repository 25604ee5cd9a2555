//! Butcher tableaus of the explicit one-step schemes and the generic
//! stage evaluation they share.
//!
//! The same coefficients drive both the real-vector step and the complex
//! amplification-factor evaluation, so the analytic stability function is
//! by construction the one the stepper realizes.

use num_complex::Complex64;

pub(crate) struct ExplicitTableau {
    /// Strictly-lower-triangular stage coefficients; row `i` holds the
    /// `i` coefficients feeding stage `i + 1`.
    pub a: &'static [&'static [f64]],
    pub b: &'static [f64],
    pub c: &'static [f64],
}

pub(crate) static EULER_FORWARD: ExplicitTableau = ExplicitTableau {
    a: &[],
    b: &[1.0],
    c: &[0.0],
};

/// Kutta's third-order method.
pub(crate) static RK3: ExplicitTableau = ExplicitTableau {
    a: &[&[0.5], &[-1.0, 2.0]],
    b: &[1.0 / 6.0, 2.0 / 3.0, 1.0 / 6.0],
    c: &[0.0, 0.5, 1.0],
};

/// The classical fourth-order method.
pub(crate) static RK4: ExplicitTableau = ExplicitTableau {
    a: &[&[0.5], &[0.0, 0.5], &[0.0, 0.0, 1.0]],
    b: &[1.0 / 6.0, 1.0 / 3.0, 1.0 / 3.0, 1.0 / 6.0],
    c: &[0.0, 0.5, 0.5, 1.0],
};

/// Butcher's seven-stage sixth-order method.
pub(crate) static RK6: ExplicitTableau = ExplicitTableau {
    a: &[
        &[0.5],
        &[2.0 / 9.0, 4.0 / 9.0],
        &[7.0 / 36.0, 2.0 / 9.0, -1.0 / 12.0],
        &[-35.0 / 144.0, -55.0 / 36.0, 35.0 / 48.0, 15.0 / 8.0],
        &[-1.0 / 360.0, -11.0 / 36.0, -1.0 / 8.0, 0.5, 0.1],
        &[
            -41.0 / 260.0,
            22.0 / 13.0,
            43.0 / 156.0,
            -118.0 / 39.0,
            32.0 / 195.0,
            80.0 / 39.0,
        ],
    ],
    b: &[
        13.0 / 200.0,
        0.0,
        11.0 / 40.0,
        11.0 / 40.0,
        4.0 / 25.0,
        4.0 / 25.0,
        13.0 / 200.0,
    ],
    c: &[0.0, 0.5, 2.0 / 3.0, 1.0 / 3.0, 5.0 / 6.0, 1.0 / 6.0, 1.0],
};

/// Dormand-Prince 5(4): the fifth-order weights, used when the pair is
/// driven at a fixed step. The embedded fourth-order weights live in the
/// adaptive driver.
pub(crate) static DOPRI5: ExplicitTableau = ExplicitTableau {
    a: &[
        &[1.0 / 5.0],
        &[3.0 / 40.0, 9.0 / 40.0],
        &[44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0],
        &[19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0],
        &[9017.0 / 3168.0, -355.0 / 33.0, 46732.0 / 5247.0, 49.0 / 176.0, -5103.0 / 18656.0],
        &[35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0],
    ],
    b: &[
        35.0 / 384.0,
        0.0,
        500.0 / 1113.0,
        125.0 / 192.0,
        -2187.0 / 6784.0,
        11.0 / 84.0,
        0.0,
    ],
    c: &[0.0, 0.2, 0.3, 0.8, 8.0 / 9.0, 1.0, 1.0],
};

/// One step of an explicit Runge-Kutta scheme.
pub(crate) fn rk_step<const N: usize, F>(
    tab: &ExplicitTableau,
    f: &F,
    t: f64,
    s: &[f64; N],
    h: f64,
) -> [f64; N]
where
    F: Fn(f64, &[f64; N]) -> [f64; N] + ?Sized,
{
    let stages = tab.b.len();
    let mut k: Vec<[f64; N]> = Vec::with_capacity(stages);
    for i in 0..stages {
        let mut y = *s;
        if i > 0 {
            for (j, kj) in k.iter().enumerate() {
                let aij = tab.a[i - 1][j];
                if aij != 0.0 {
                    for n in 0..N {
                        y[n] += h * aij * kj[n];
                    }
                }
            }
        }
        k.push(f(t + tab.c[i] * h, &y));
    }
    let mut out = *s;
    for (i, ki) in k.iter().enumerate() {
        let bi = tab.b[i];
        if bi != 0.0 {
            for n in 0..N {
                out[n] += h * bi * ki[n];
            }
        }
    }
    out
}

/// Amplification factor of an explicit scheme: the scheme applied to the
/// scalar test equation `x' = lambda x` with `z = h lambda`, `x0 = 1`.
pub(crate) fn rk_amplification(tab: &ExplicitTableau, z: Complex64) -> Complex64 {
    let stages = tab.b.len();
    let one = Complex64::new(1.0, 0.0);
    // stage values y_i; h f(y_i) = z y_i
    let mut y: Vec<Complex64> = Vec::with_capacity(stages);
    for i in 0..stages {
        let mut yi = one;
        if i > 0 {
            for (j, yj) in y.iter().enumerate() {
                yi += z * tab.a[i - 1][j] * yj;
            }
        }
        y.push(yi);
    }
    let mut r = one;
    for (i, yi) in y.iter().enumerate() {
        r += z * tab.b[i] * yi;
    }
    r
}

#[cfg(test)]
mod tests {
    use super::*;

    fn row_sums_match_c(tab: &ExplicitTableau) {
        for (i, &ci) in tab.c.iter().enumerate().skip(1) {
            let sum: f64 = tab.a[i - 1].iter().sum();
            assert!(
                (sum - ci).abs() < 1e-14,
                "stage {i}: row sum {sum} != c {ci}"
            );
        }
        let bsum: f64 = tab.b.iter().sum();
        assert!((bsum - 1.0).abs() < 1e-14);
    }

    #[test]
    fn tableaus_are_consistent() {
        for tab in [&EULER_FORWARD, &RK3, &RK4, &RK6, &DOPRI5] {
            row_sums_match_c(tab);
        }
    }

    #[test]
    fn amplification_matches_taylor_coefficients() {
        // For an order-p scheme the z^k coefficients of R(z) are 1/k! for
        // k <= p. Extract them by evaluating the stage recursion with
        // nilpotent "powers of z" bookkeeping: use polynomial arithmetic.
        fn poly_of(tab: &ExplicitTableau) -> Vec<f64> {
            let stages = tab.b.len();
            // Each stage value is a polynomial in z of degree < stages.
            let mut y: Vec<Vec<f64>> = Vec::new();
            for i in 0..stages {
                let mut yi = vec![0.0; stages + 1];
                yi[0] = 1.0;
                if i > 0 {
                    for (j, yj) in y.iter().enumerate() {
                        let aij = tab.a[i - 1][j];
                        for d in 0..stages {
                            yi[d + 1] += aij * yj[d];
                        }
                    }
                }
                y.push(yi);
            }
            let mut r = vec![0.0; stages + 1];
            r[0] = 1.0;
            for (i, yi) in y.iter().enumerate() {
                for d in 0..stages {
                    r[d + 1] += tab.b[i] * yi[d];
                }
            }
            r
        }
        for (tab, order) in [
            (&EULER_FORWARD, 1),
            (&RK3, 3),
            (&RK4, 4),
            (&RK6, 6),
            (&DOPRI5, 5),
        ] {
            let poly = poly_of(tab);
            let mut fact = 1.0;
            for k in 0..=order {
                if k > 0 {
                    fact *= k as f64;
                }
                assert!(
                    (poly[k] - 1.0 / fact).abs() < 1e-13,
                    "order {order} tableau: z^{k} coeff {} != 1/{k}!",
                    poly[k]
                );
            }
        }
    }
}
