//! Tanh-sinh quadrature on (0, 1), used as the independent oracle for the
//! integral identities behind the toll-error bound. Internal only.
//!
//! The integrand receives both `x` and `1 - x` so endpoint-singular factors
//! like `ln(1 - x)` keep full precision near `x = 1`.

/// Integrates `f(x, 1 - x)` over (0, 1), refining the step until two
/// successive levels agree to `tol` (relative, floored at absolute `tol`).
pub(crate) fn integrate_01<F: Fn(f64, f64) -> f64>(f: F, tol: f64) -> f64 {
    const T_MAX: f64 = 6.9;
    let eval = |t: f64| -> f64 {
        let s = std::f64::consts::FRAC_PI_2 * t.sinh();
        let e = (-2.0 * s.abs()).exp();
        let sech2 = 4.0 * e / ((1.0 + e) * (1.0 + e));
        let weight = std::f64::consts::FRAC_PI_4 * t.cosh() * sech2;
        if weight == 0.0 || !weight.is_finite() {
            return 0.0;
        }
        // distance to the nearer endpoint, computed without cancellation
        let near = e / (1.0 + e);
        let (x, one_minus_x) = if t >= 0.0 {
            (1.0 - near, near)
        } else {
            (near, 1.0 - near)
        };
        let value = f(x, one_minus_x);
        if value.is_finite() {
            value * weight
        } else {
            0.0
        }
    };

    let mut h = 1.0f64;
    let mut sum = eval(0.0);
    let mut k = 1;
    while k as f64 * h <= T_MAX {
        sum += eval(k as f64 * h) + eval(-(k as f64) * h);
        k += 1;
    }
    let mut integral = h * sum;

    for level in 1..=12 {
        h *= 0.5;
        let mut midpoints = 0.0;
        let mut k = 1;
        while k as f64 * h <= T_MAX {
            midpoints += eval(k as f64 * h) + eval(-(k as f64) * h);
            k += 2;
        }
        let refined = integral / 2.0 + h * midpoints;
        let close = (refined - integral).abs() <= tol * refined.abs().max(1.0);
        integral = refined;
        if close && level >= 3 {
            break;
        }
    }
    integral
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::consts::SIGMA_SQ;
    use std::f64::consts::PI;

    const TOL: f64 = 1e-10;

    #[test]
    fn polynomial() {
        let got = integrate_01(|x, _| x * x, TOL);
        assert!((got - 1.0 / 3.0).abs() < 1e-12);
    }

    #[test]
    fn log_square() {
        // integral of (ln x)^2 over (0,1) is 2
        let got = integrate_01(|x, _| x.ln().powi(2), TOL);
        assert!((got - 2.0).abs() < 1e-9, "got {got}");
    }

    #[test]
    fn log_cross_product() {
        // integral of ln(x) ln(1-x) is 2 - pi^2/6
        let got = integrate_01(|x, omx| x.ln() * omx.ln(), TOL);
        assert!((got - (2.0 - PI * PI / 6.0)).abs() < 1e-9, "got {got}");
    }

    #[test]
    fn toll_derivative_square() {
        // integral of |C'(x)|^2 = |2 ln x - 2 ln(1-x)|^2 is 4 pi^2 / 3
        let got = integrate_01(
            |x, omx| {
                let d = 2.0 * x.ln() - 2.0 * omx.ln();
                d * d
            },
            TOL,
        );
        assert!((got - 4.0 * PI * PI / 3.0).abs() < 1e-8, "got {got}");
    }

    #[test]
    fn toll_square_is_sigma_sq_third() {
        let got = integrate_01(
            |x, omx| {
                let c = 2.0 * x * x.ln() + 2.0 * omx * omx.ln() + 1.0;
                c * c
            },
            TOL,
        );
        assert!((got - SIGMA_SQ / 3.0).abs() < 1e-9, "got {got}");
    }
}
