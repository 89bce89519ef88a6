//! Adaptive Dormand–Prince 5(4) integration for small autonomous-in-shape
//! systems, stepping exactly onto caller-chosen stations.

/// Outcome of advancing to a station.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Advance {
    Reached,
    /// The step size fell below the floor before the station was reached.
    Underflow,
    /// The right-hand side or the state became non-finite.
    NonFinite,
    /// The observer asked to stop early; the state is at the returned point.
    Stopped,
}

const C2: f64 = 1.0 / 5.0;
const C3: f64 = 3.0 / 10.0;
const C4: f64 = 4.0 / 5.0;
const C5: f64 = 8.0 / 9.0;
const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const B1: f64 = 35.0 / 384.0;
const B3: f64 = 500.0 / 1113.0;
const B4: f64 = 125.0 / 192.0;
const B5: f64 = -2187.0 / 6784.0;
const B6: f64 = 11.0 / 84.0;
const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;

/// State of a two-component integration `y′ = f(x, y)`.
#[derive(Debug, Clone)]
pub struct Dopri5<F> {
    f: F,
    pub x: f64,
    pub y: [f64; 2],
    h: f64,
    rtol: f64,
    atol: f64,
}

fn axpy(y: &[f64; 2], h: f64, terms: &[(f64, &[f64; 2])]) -> [f64; 2] {
    let mut out = *y;
    for (c, k) in terms {
        out[0] += h * c * k[0];
        out[1] += h * c * k[1];
    }
    out
}

impl<F: Fn(f64, &[f64; 2]) -> [f64; 2]> Dopri5<F> {
    pub fn new(f: F, x: f64, y: [f64; 2], h: f64, rtol: f64, atol: f64) -> Self {
        Self { f, x, y, h, rtol, atol }
    }

    /// Advances to `target`, calling `observe(x, y)` after every accepted
    /// step; a `true` return stops the integration at that step.
    pub fn advance_to(&mut self, target: f64, mut observe: impl FnMut(f64, &[f64; 2]) -> bool) -> Advance {
        let f = &self.f;
        while self.x < target {
            let floor = 1e-14 * self.x.abs().max(1e-300);
            let mut h = self.h.min(target - self.x);
            let last = h >= target - self.x;
            let (x, y) = (self.x, self.y);
            let k1 = f(x, &y);
            let k2 = f(x + C2 * h, &axpy(&y, h, &[(A21, &k1)]));
            let k3 = f(x + C3 * h, &axpy(&y, h, &[(A31, &k1), (A32, &k2)]));
            let k4 = f(x + C4 * h, &axpy(&y, h, &[(A41, &k1), (A42, &k2), (A43, &k3)]));
            let k5 = f(x + C5 * h, &axpy(&y, h, &[(A51, &k1), (A52, &k2), (A53, &k3), (A54, &k4)]));
            let k6 = f(x + h, &axpy(&y, h, &[(A61, &k1), (A62, &k2), (A63, &k3), (A64, &k4), (A65, &k5)]));
            let y_new = axpy(&y, h, &[(B1, &k1), (B3, &k3), (B4, &k4), (B5, &k5), (B6, &k6)]);
            let k7 = f(x + h, &y_new);
            if !(y_new[0].is_finite() && y_new[1].is_finite() && k7[0].is_finite() && k7[1].is_finite()) {
                if h <= floor {
                    return Advance::NonFinite;
                }
                self.h = 0.25 * h;
                continue;
            }
            let mut err = 0.0;
            for i in 0..2 {
                let e = h * (E1 * k1[i] + E3 * k3[i] + E4 * k4[i] + E5 * k5[i] + E6 * k6[i] + E7 * k7[i]);
                let sc = self.atol + self.rtol * y[i].abs().max(y_new[i].abs());
                err += (e / sc) * (e / sc);
            }
            let err = (0.5 * err).sqrt();
            let factor = if err == 0.0 { 5.0 } else { (0.9 * err.powf(-0.2)).clamp(0.2, 5.0) };
            if err <= 1.0 {
                self.x = if last { target } else { x + h };
                self.y = y_new;
                // keep the pre-truncation step so stations do not shrink it
                if !last {
                    self.h = h * factor;
                } else {
                    self.h = self.h.max(h * factor);
                }
                if observe(self.x, &self.y) {
                    return Advance::Stopped;
                }
            } else {
                h *= factor.min(1.0);
                if h <= floor {
                    return Advance::Underflow;
                }
                self.h = h;
            }
        }
        Advance::Reached
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn harmonic_oscillator() {
        let mut s = Dopri5::new(|_x, y: &[f64; 2]| [y[1], -y[0]], 0.0, [1.0, 0.0], 0.1, 1e-11, 1e-13);
        for k in 1..=20 {
            let t = 0.5 * k as f64;
            assert_eq!(s.advance_to(t, |_, _| false), Advance::Reached);
            assert_eq!(s.x, t);
            assert_relative_eq!(s.y[0], t.cos(), epsilon = 1e-9);
        }
    }

    #[test]
    fn observer_can_stop() {
        let mut s = Dopri5::new(|_x, y: &[f64; 2]| [y[1], -y[0]], 0.0, [1.0, 0.0], 0.1, 1e-10, 1e-12);
        let r = s.advance_to(10.0, |_, y| y[0] < 0.0);
        assert_eq!(r, Advance::Stopped);
        assert!(s.x > std::f64::consts::FRAC_PI_2 && s.x < 3.0);
    }

    #[test]
    fn reports_blow_up() {
        // y′ = y² from y(0) = 1 blows up at x = 1
        let mut s = Dopri5::new(|_x, y: &[f64; 2]| [y[0] * y[0], 0.0], 0.0, [1.0, 0.0], 0.01, 1e-10, 1e-12);
        let r = s.advance_to(2.0, |_, _| false);
        assert!(matches!(r, Advance::Underflow | Advance::NonFinite));
        assert!(s.x < 1.0);
    }
}
