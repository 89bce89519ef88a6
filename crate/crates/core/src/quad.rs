//! Double-exponential quadrature for the one-dimensional integrals behind the
//! potential norms. Integrable endpoint singularities and exponentially
//! decaying tails are both handled without special casing.

use std::f64::consts::FRAC_PI_2;

const MAX_LEVEL: u32 = 12;
const MIN_LEVEL: u32 = 3;

/// Trapezoidal sums of `g(t)` on `[-t_max, t_max]`, halving the step until two
/// levels agree to `tol` relative. Returns NaN if any sample is non-finite.
fn refine(g: impl Fn(f64) -> f64, t_max: f64, tol: f64) -> f64 {
    let mut h = 1.0;
    let mut sum = g(0.0);
    let mut k = 1;
    while k as f64 * h <= t_max {
        let t = k as f64 * h;
        sum += g(t) + g(-t);
        k += 1;
    }
    let mut estimate = h * sum;
    for level in 1..=MAX_LEVEL {
        h *= 0.5;
        let mut k = 1;
        while k as f64 * h <= t_max {
            let t = k as f64 * h;
            sum += g(t) + g(-t);
            k += 2;
        }
        let next = h * sum;
        if !next.is_finite() {
            return f64::NAN;
        }
        let done = level >= MIN_LEVEL && (next - estimate).abs() <= tol * next.abs().max(f64::MIN_POSITIVE);
        estimate = next;
        if done {
            break;
        }
    }
    estimate
}

/// `∫_a^b f(x) dx` by the tanh-sinh rule. `f` is never evaluated at the
/// endpoints themselves.
pub fn tanh_sinh(f: impl Fn(f64) -> f64, a: f64, b: f64, tol: f64) -> f64 {
    if a == b {
        return 0.0;
    }
    let half = 0.5 * (b - a);
    let g = |t: f64| {
        let u = FRAC_PI_2 * t.sinh();
        // distance to the nearer endpoint, computed without cancellation
        let gap = 2.0 * half / (1.0 + (2.0 * u.abs()).exp());
        if gap == 0.0 {
            return 0.0;
        }
        let x = if t < 0.0 { a + gap } else { b - gap };
        let w = half * FRAC_PI_2 * t.cosh() / (u.cosh() * u.cosh());
        if w == 0.0 {
            0.0
        } else {
            w * f(x)
        }
    };
    refine(g, 6.5, tol)
}

/// `∫_a^∞ f(x) dx` by the exp-sinh rule; `f` must decay at infinity.
pub fn exp_sinh(f: impl Fn(f64) -> f64, a: f64, tol: f64) -> f64 {
    let g = |t: f64| {
        let u = FRAC_PI_2 * t.sinh();
        // keep the offsets inside a range where typical integrands stay finite
        if u.abs() > 600.0 {
            return 0.0;
        }
        let y = u.exp();
        let w = y * FRAC_PI_2 * t.cosh();
        w * f(a + y)
    };
    refine(g, 6.7, tol)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use std::f64::consts::PI;

    #[test]
    fn polynomial_and_trig() {
        assert_relative_eq!(tanh_sinh(|x| x * x, 0.0, 3.0, 1e-14), 9.0, max_relative = 1e-13);
        assert_relative_eq!(tanh_sinh(f64::sin, 0.0, PI, 1e-14), 2.0, max_relative = 1e-13);
        assert_eq!(tanh_sinh(|x| x, 1.0, 1.0, 1e-12), 0.0);
    }

    #[test]
    fn endpoint_singularity() {
        // ∫_0^1 x^{-1/2} = 2
        assert_relative_eq!(tanh_sinh(|x| x.powf(-0.5), 0.0, 1.0, 1e-13), 2.0, max_relative = 1e-10);
        // ∫_0^1 ln x = -1
        assert_relative_eq!(tanh_sinh(f64::ln, 0.0, 1.0, 1e-13), -1.0, max_relative = 1e-10);
    }

    #[test]
    fn half_line() {
        assert_relative_eq!(exp_sinh(|x| (-x).exp(), 0.0, 1e-13), 1.0, max_relative = 1e-11);
        assert_relative_eq!(exp_sinh(|x| (-x * x).exp(), 0.0, 1e-13), PI.sqrt() / 2.0, max_relative = 1e-11);
        // Γ(1/2) = √π with a singular origin
        assert_relative_eq!(exp_sinh(|x| x.powf(-0.5) * (-x).exp(), 0.0, 1e-13), PI.sqrt(), max_relative = 1e-10);
        assert_relative_eq!(exp_sinh(|x| (-x).exp(), 2.0, 1e-13), (-2.0f64).exp(), max_relative = 1e-11);
        assert_relative_eq!(exp_sinh(|x| 1.0 / (1.0 + x * x), 0.0, 1e-12), PI / 2.0, max_relative = 1e-9);
    }
}
