//! Radial potentials: the Yukawa family, its Kato and Lebesgue norms (closed
//! form and by quadrature), admissibility certificates and the coercivity
//! checks they imply.

use statrs::function::gamma::gamma;

use crate::error::{Error, Result};
use crate::grid::{grad_norm_sq, weighted_mass, BallVolume, Field, RadialGrid};
use crate::quad::{exp_sinh, tanh_sinh};

const QUAD_TOL: f64 = 1e-12;
/// Relative band around the threshold treated as equality.
const BOUNDARY_TOL: f64 = 1e-12;

/// A radially symmetric potential `V(|x|)` on ℝᴺ.
pub trait RadialPotential: Send + Sync {
    fn dim(&self) -> usize;

    /// `V(r)` for `r > 0`.
    fn value(&self, r: f64) -> f64;

    /// `V′(r)` for `r > 0`.
    fn derivative(&self, r: f64) -> f64;

    /// Exponent `σ ≥ 0` with `r^σ V(r)` bounded near the origin.
    fn singularity(&self) -> f64 {
        0.0
    }

    /// `r^σ V(r)` with `σ = singularity()`; override when the product can be
    /// evaluated without overflow.
    fn regular_part(&self, r: f64) -> f64 {
        self.value(r) * r.powf(self.singularity())
    }

    /// True when `V ≡ 0`.
    fn is_zero(&self) -> bool {
        false
    }
}

/// `V(r) = c·r^{-σ}·e^{-ar}` in dimension `dim`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct YukawaPotential {
    pub c: f64,
    pub sigma: f64,
    pub a: f64,
    pub dim: usize,
}

impl YukawaPotential {
    pub fn new(c: f64, sigma: f64, a: f64, dim: usize) -> Result<Self> {
        let p = Self { c, sigma, a, dim };
        p.validate()?;
        Ok(p)
    }

    /// The zero potential, written as a Yukawa potential with `c = 0`.
    pub fn zero(dim: usize) -> Self {
        Self { c: 0.0, sigma: 1.0, a: 1.0, dim }
    }

    pub fn validate(&self) -> Result<()> {
        if !(3..=5).contains(&self.dim) {
            return Err(Error::Domain(format!("dimension {} outside 3..=5", self.dim)));
        }
        if !self.c.is_finite() {
            return Err(Error::Domain(format!("coupling must be finite, got {}", self.c)));
        }
        if !(self.a.is_finite() && self.a > 0.0) {
            return Err(Error::Domain(format!("decay rate must be positive, got {}", self.a)));
        }
        let top = self.dim as f64 - 1.0;
        if !(self.sigma > 0.0 && self.sigma < top) {
            return Err(Error::Domain(format!("sigma must lie in (0, {top}), got {}", self.sigma)));
        }
        Ok(())
    }

    /// The same potential with `c` replaced by `min(c, 0)`.
    pub fn negative_part(&self) -> Self {
        Self { c: self.c.min(0.0), ..*self }
    }
}

impl RadialPotential for YukawaPotential {
    fn dim(&self) -> usize {
        self.dim
    }

    fn value(&self, r: f64) -> f64 {
        if self.c == 0.0 {
            return 0.0;
        }
        self.c * r.powf(-self.sigma) * (-self.a * r).exp()
    }

    fn derivative(&self, r: f64) -> f64 {
        if self.c == 0.0 {
            return 0.0;
        }
        self.c * (-self.a * r).exp() * (-self.sigma * r.powf(-self.sigma - 1.0) - self.a * r.powf(-self.sigma))
    }

    fn singularity(&self) -> f64 {
        self.sigma
    }

    fn regular_part(&self, r: f64) -> f64 {
        self.c * (-self.a * r).exp()
    }

    fn is_zero(&self) -> bool {
        self.c == 0.0
    }
}

/// `c·r^{-σ}·e^{-ar}`.
pub fn yukawa_eval(p: &YukawaPotential, r: f64) -> Result<f64> {
    if !(r > 0.0 && r.is_finite()) {
        return Err(Error::Domain(format!("radius must be positive and finite, got {r}")));
    }
    Ok(p.value(r))
}

/// `2(N−1)α(N−1)|c|a^{σ−N+1}Γ(N−1−σ)`.
pub fn kato_norm_closed(p: &YukawaPotential) -> Result<f64> {
    let n = p.dim as f64;
    if p.sigma >= n - 1.0 {
        return Err(Error::Domain(format!("sigma = {} must be below N−1 = {}", p.sigma, n - 1.0)));
    }
    p.validate()?;
    if p.c == 0.0 {
        return Ok(0.0);
    }
    let lower = BallVolume::new(p.dim - 1).alpha;
    Ok(2.0 * (n - 1.0) * lower * p.c.abs() * p.a.powf(p.sigma - n + 1.0) * gamma(n - 1.0 - p.sigma))
}

/// `|c|[Nα(N)(aq)^{qσ−N}Γ(N−qσ)]^{1/q}`.
pub fn lq_norm_closed(p: &YukawaPotential, q: f64) -> Result<f64> {
    let n = p.dim as f64;
    if !(q.is_finite() && q >= 1.0) {
        return Err(Error::Domain(format!("exponent must be finite and ≥ 1, got {q}")));
    }
    if q * p.sigma >= n {
        return Err(Error::Domain(format!("qσ = {} must be below N = {n}", q * p.sigma)));
    }
    p.validate()?;
    if p.c == 0.0 {
        return Ok(0.0);
    }
    let area = BallVolume::new(p.dim).sphere_area;
    Ok(p.c.abs() * (area * (p.a * q).powf(q * p.sigma - n) * gamma(n - q * p.sigma)).powf(1.0 / q))
}

/// `∫_0^∞ |r^σ V(r)|^q · r^{k−qσ} dr` with the origin singularity removed by
/// the substitution `s = r^{k−qσ+1}`. Infinite when the power is not
/// integrable at the origin or the result is not finite.
fn radial_moment(v: &dyn RadialPotential, q: f64, k: f64) -> f64 {
    let e = k - q * v.singularity() + 1.0;
    if e <= 0.0 {
        return f64::INFINITY;
    }
    let p = 1.0 / e;
    let val = exp_sinh(|s| v.regular_part(s.powf(p)).abs().powf(q), 0.0, QUAD_TOL) / e;
    if val.is_finite() {
        val
    } else {
        f64::INFINITY
    }
}

/// `(∫|V|^q dx)^{1/q}` by quadrature.
pub fn lq_norm_quadrature(v: &dyn RadialPotential, q: f64) -> Result<f64> {
    if !(q.is_finite() && q >= 1.0) {
        return Err(Error::Domain(format!("exponent must be finite and ≥ 1, got {q}")));
    }
    if v.is_zero() {
        return Ok(0.0);
    }
    let area = BallVolume::new(v.dim()).sphere_area;
    Ok((area * radial_moment(v, q, v.dim() as f64 - 1.0)).powf(1.0 / q))
}

/// Result of the Kato-norm quadrature.
#[derive(Debug, Clone, PartialEq)]
pub struct KatoQuadrature {
    /// `sup_x ∫|V(y)|/|x−y| dy` over the sampled points and the origin limit.
    pub value: f64,
    /// The `|x| → 0` limit `|S^{N−1}|∫|V|r^{N−2}dr`.
    pub origin_limit: f64,
    /// `(|x|, ∫|V(y)|/|x−y| dy)` on the log-spaced sweep.
    pub profile: Vec<(f64, f64)>,
    /// Set when the defining integral diverges.
    pub divergent: bool,
}

/// Number of log-spaced `|x|` samples in the Kato sweep.
pub const KATO_SWEEP_POINTS: usize = 64;

/// `r · ∫_{S^{N−1}} |x − rω|^{-1} dω` for `|x| = x`.
fn sphere_mean_kernel(dim: usize, x: f64, r: f64) -> f64 {
    if dim == 3 {
        return 4.0 * std::f64::consts::PI * r / x.max(r);
    }
    let lower = BallVolume::new(dim - 1).sphere_area;
    let pw = dim as i32 - 2;
    let inner = tanh_sinh(
        |t: f64| {
            let d = (x - r).hypot(2.0 * (x * r).sqrt() * (0.5 * t).sin());
            t.sin().powi(pw) / d
        },
        0.0,
        std::f64::consts::PI,
        QUAD_TOL,
    );
    r * lower * inner
}

/// Evaluates `sup_x ∫|V(y)|/|x−y| dy` as the larger of the `|x| → 0` limit
/// and a sweep of `KATO_SWEEP_POINTS` radii log-spaced in `[10⁻³, r_max]`.
pub fn kato_norm_quadrature(v: &dyn RadialPotential, r_max: f64) -> KatoQuadrature {
    let dim = v.dim();
    if v.is_zero() {
        return KatoQuadrature { value: 0.0, origin_limit: 0.0, profile: Vec::new(), divergent: false };
    }
    let area = BallVolume::new(dim).sphere_area;
    let k = dim as f64 - 2.0;
    let origin_limit = area * radial_moment(v, 1.0, k);
    if !origin_limit.is_finite() {
        return KatoQuadrature { value: f64::INFINITY, origin_limit, profile: Vec::new(), divergent: true };
    }
    let e = k - v.singularity() + 1.0;
    let p = 1.0 / e;
    let lo = 1e-3f64.ln();
    let hi = r_max.max(2e-3).ln();
    let profile: Vec<(f64, f64)> = (0..KATO_SWEEP_POINTS)
        .map(|i| {
            let x = (lo + (hi - lo) * i as f64 / (KATO_SWEEP_POINTS - 1) as f64).exp();
            let integrand = |s: f64| {
                let r = s.powf(p);
                let h = v.regular_part(r).abs();
                if h == 0.0 {
                    0.0
                } else {
                    h * sphere_mean_kernel(dim, x, r)
                }
            };
            let split = x.powf(e);
            let inner = tanh_sinh(integrand, 0.0, split, QUAD_TOL);
            let outer = exp_sinh(integrand, split, QUAD_TOL);
            (x, (inner + outer) / e)
        })
        .collect();
    let divergent = profile.iter().any(|(_, y)| !y.is_finite());
    let value = if divergent {
        f64::INFINITY
    } else {
        profile.iter().map(|(_, y)| *y).fold(origin_limit, f64::max)
    };
    KatoQuadrature { value, origin_limit, profile, divergent }
}

/// Admissibility certificate for a potential.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PotentialCertificate {
    pub kato_norm: f64,
    pub kato_norm_negative_part: f64,
    /// `‖V‖_{L^{N/2}}`; `+∞` when the singularity is not `N/2`-integrable.
    pub lq_norm: f64,
    /// `‖V₋‖_{L^{N/2}}`.
    pub lq_norm_negative_part: f64,
    /// `N(N−2)α(N)`.
    pub threshold: f64,
    pub admissible: bool,
    /// `threshold − ‖V₋‖_K`.
    pub margin: f64,
}

/// `N(N−2)α(N)`.
pub fn admissibility_threshold(dim: usize) -> f64 {
    let n = dim as f64;
    n * (n - 2.0) * BallVolume::new(dim).alpha
}

/// Certifies a Yukawa potential from its closed-form norms.
pub fn certify(p: &YukawaPotential) -> Result<PotentialCertificate> {
    p.validate()?;
    let kato_norm = kato_norm_closed(p)?;
    let kato_norm_negative_part = if p.c < 0.0 { kato_norm } else { 0.0 };
    let q = p.dim as f64 / 2.0;
    let lq = |v: &YukawaPotential| if q * v.sigma < v.dim as f64 { lq_norm_closed(v, q) } else { Ok(f64::INFINITY) };
    let lq_norm = if p.c == 0.0 { 0.0 } else { lq(p)? };
    let lq_norm_negative_part = if p.c < 0.0 { lq_norm } else { 0.0 };
    let threshold = admissibility_threshold(p.dim);
    let margin = threshold - kato_norm_negative_part;
    let admissible = kato_norm.is_finite() && lq_norm.is_finite() && margin > BOUNDARY_TOL * threshold;
    Ok(PotentialCertificate {
        kato_norm,
        kato_norm_negative_part,
        lq_norm,
        lq_norm_negative_part,
        threshold,
        admissible,
        margin,
    })
}

/// A potential sampled on a grid together with its radial derivative.
#[derive(Debug, Clone, PartialEq)]
pub struct SampledPotential {
    grid: RadialGrid,
    values: Vec<f64>,
    radial_derivative: Option<Vec<f64>>,
}

impl SampledPotential {
    pub fn new(grid: RadialGrid, values: Vec<f64>, radial_derivative: Option<Vec<f64>>) -> Result<Self> {
        if values.len() != grid.len() || radial_derivative.as_ref().is_some_and(|d| d.len() != grid.len()) {
            return Err(Error::GridMismatch("potential samples do not match grid".into()));
        }
        let finite = values.iter().chain(radial_derivative.iter().flatten()).all(|v| v.is_finite());
        if !finite {
            return Err(Error::Domain("potential samples must be finite".into()));
        }
        Ok(Self { grid, values, radial_derivative })
    }

    pub fn zero(grid: RadialGrid) -> Self {
        Self { grid, values: vec![0.0; grid.len()], radial_derivative: Some(vec![0.0; grid.len()]) }
    }

    pub fn grid(&self) -> &RadialGrid {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn radial_derivative(&self) -> Option<&[f64]> {
        self.radial_derivative.as_deref()
    }

    /// `V′` or a precondition error when it was not sampled.
    pub fn require_derivative(&self) -> Result<&[f64]> {
        self.radial_derivative
            .as_deref()
            .ok_or_else(|| Error::Precondition("potential has no radial derivative".into()))
    }

    /// Pointwise `min(V, 0)`.
    pub fn negative_part(&self) -> Vec<f64> {
        self.values.iter().map(|v| v.min(0.0)).collect()
    }

    pub fn is_zero(&self) -> bool {
        self.values.iter().all(|v| *v == 0.0)
    }
}

/// Samples `V` and `V′` at the grid nodes.
pub fn sample_potential(v: &dyn RadialPotential, grid: RadialGrid) -> Result<SampledPotential> {
    if v.dim() != grid.dim() {
        return Err(Error::GridMismatch(format!(
            "potential in dimension {} sampled on a grid of dimension {}",
            v.dim(),
            grid.dim()
        )));
    }
    let values = grid.radii().map(|r| v.value(r)).collect();
    let deriv = grid.radii().map(|r| v.derivative(r)).collect();
    SampledPotential::new(grid, values, Some(deriv))
}

/// `∫ V|u|² dx`.
pub fn potential_energy(v: &SampledPotential, u: &Field) -> Result<f64> {
    v.grid().check_same(u.grid())?;
    weighted_mass(u, v.values())
}

/// Outcome of the Kato–Hardy bound `∫|V||u|² ≤ ‖V‖_K/thr · ‖∇u‖²`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HardyReport {
    pub lhs: f64,
    pub rhs: f64,
    pub holds: bool,
}

/// Relative slack allowed in the discrete inequality checks.
pub const CHECK_TOL: f64 = 1e-9;

pub fn hardy_check(v: &SampledPotential, u: &Field, cert: &PotentialCertificate) -> Result<HardyReport> {
    v.grid().check_same(u.grid())?;
    let abs: Vec<f64> = v.values().iter().map(|x| x.abs()).collect();
    let lhs = weighted_mass(u, &abs)?;
    let rhs = cert.kato_norm / cert.threshold * grad_norm_sq(u);
    Ok(HardyReport { lhs, rhs, holds: lhs <= rhs * (1.0 + CHECK_TOL) })
}

/// The two-sided bound on the quadratic form of `−Δ + V`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SandwichReport {
    pub lower: f64,
    pub form: f64,
    pub upper: f64,
    pub lower_holds: bool,
    pub upper_holds: bool,
}

pub fn sandwich_check(v: &SampledPotential, u: &Field, cert: &PotentialCertificate) -> Result<SandwichReport> {
    if !cert.admissible {
        return Err(Error::Precondition("sandwich bound needs an admissible potential".into()));
    }
    v.grid().check_same(u.grid())?;
    let grad = grad_norm_sq(u);
    let form = grad + weighted_mass(u, v.values())?;
    let lower = (1.0 - cert.kato_norm_negative_part / cert.threshold) * grad;
    let upper = (1.0 + cert.kato_norm / cert.threshold) * grad;
    let slack = CHECK_TOL * grad;
    Ok(SandwichReport {
        lower,
        form,
        upper,
        lower_holds: lower <= form + slack,
        upper_holds: form <= upper + slack,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use std::f64::consts::PI;

    fn yk(c: f64, sigma: f64, a: f64, dim: usize) -> YukawaPotential {
        YukawaPotential::new(c, sigma, a, dim).unwrap()
    }

    #[test]
    fn evaluation() {
        assert_relative_eq!(yukawa_eval(&yk(1.0, 1.0, 1.0, 3), 1.0).unwrap(), (-1.0f64).exp(), max_relative = 1e-15);
        assert_relative_eq!(yukawa_eval(&yk(-0.5, 1.0, 1.0, 3), 2.0).unwrap(), -0.033833820809153176, max_relative = 1e-14);
        let z = YukawaPotential::zero(3);
        for r in [0.1, 1.0, 7.0] {
            assert_eq!(yukawa_eval(&z, r).unwrap(), 0.0);
        }
        assert!(yukawa_eval(&z, 0.0).is_err());
        assert!(yukawa_eval(&z, -1.0).is_err());
    }

    #[test]
    fn parameter_range() {
        assert!(YukawaPotential::new(1.0, 2.0, 1.0, 3).is_err());
        assert!(YukawaPotential::new(1.0, 0.0, 1.0, 3).is_err());
        assert!(YukawaPotential::new(1.0, 1.0, 0.0, 3).is_err());
        assert!(YukawaPotential::new(1.0, 3.5, 1.0, 5).is_ok());
        let bad = YukawaPotential { c: 1.0, sigma: 2.0, a: 1.0, dim: 3 };
        assert!(kato_norm_closed(&bad).is_err());
    }

    #[test]
    fn kato_closed_values() {
        assert_relative_eq!(kato_norm_closed(&yk(1.0, 1.0, 1.0, 3)).unwrap(), 4.0 * PI, max_relative = 1e-14);
        assert_relative_eq!(kato_norm_closed(&yk(-0.5, 1.0, 1.0, 3)).unwrap(), 2.0 * PI, max_relative = 1e-14);
        assert_relative_eq!(kato_norm_closed(&yk(1.0, 1.0, 2.0, 3)).unwrap(), 2.0 * PI, max_relative = 1e-14);
    }

    #[test]
    fn kato_quadrature_matches_closed_form_in_three_dimensions() {
        for (c, s, a) in [(1.0, 1.0, 1.0), (-0.3, 0.5, 2.0), (2.0, 1.7, 0.4), (1.0, 0.05, 1.0)] {
            let p = yk(c, s, a, 3);
            let q = kato_norm_quadrature(&p, 30.0);
            assert!(!q.divergent);
            assert_relative_eq!(q.value, kato_norm_closed(&p).unwrap(), max_relative = 1e-8);
        }
    }

    #[test]
    fn kato_profile_is_maximal_at_the_origin() {
        let q = kato_norm_quadrature(&yk(1.0, 1.0, 1.0, 3), 30.0);
        assert_eq!(q.profile.len(), KATO_SWEEP_POINTS);
        for w in q.profile.windows(2) {
            assert!(w[1].1 < w[0].1);
        }
        assert!(q.profile[0].1 < q.origin_limit);
        assert_eq!(q.value, q.origin_limit);
    }

    #[test]
    fn kato_quadrature_in_higher_dimensions() {
        // the exact norm carries |S^{N−1}| where the closed form has
        // 2(N−1)α(N−1); the latter is larger, so certification is conservative
        for (dim, s) in [(4usize, 1.0), (5usize, 2.5)] {
            let p = yk(0.7, s, 1.3, dim);
            let q = kato_norm_quadrature(&p, 30.0);
            let n = dim as f64;
            let exact = BallVolume::new(dim).sphere_area * 0.7 * 1.3f64.powf(s - n + 1.0) * gamma(n - 1.0 - s);
            assert_relative_eq!(q.value, exact, max_relative = 1e-8);
            assert!(q.value < kato_norm_closed(&p).unwrap());
            for w in q.profile.windows(2) {
                assert!(w[1].1 <= w[0].1 * (1.0 + 1e-10));
            }
        }
    }

    #[test]
    fn kato_quadrature_of_zero() {
        let q = kato_norm_quadrature(&YukawaPotential::zero(3), 30.0);
        assert_eq!(q.value, 0.0);
        assert!(!q.divergent);
    }

    struct Coulombic;
    impl RadialPotential for Coulombic {
        fn dim(&self) -> usize {
            3
        }
        fn value(&self, r: f64) -> f64 {
            r.powi(-2)
        }
        fn derivative(&self, r: f64) -> f64 {
            -2.0 * r.powi(-3)
        }
        fn singularity(&self) -> f64 {
            2.0
        }
    }

    #[test]
    fn kato_quadrature_flags_divergence() {
        let q = kato_norm_quadrature(&Coulombic, 30.0);
        assert!(q.divergent);
        assert!(q.value.is_infinite());
    }

    #[test]
    fn lq_closed_matches_quadrature() {
        let expected = (4.0 * PI * 1.5f64.powf(-1.5) * gamma(1.5)).powf(2.0 / 3.0);
        assert_relative_eq!(lq_norm_closed(&yk(1.0, 1.0, 1.0, 3), 1.5).unwrap(), expected, max_relative = 1e-14);
        for (c, s, a, dim, q) in [
            (1.0, 1.0, 1.0, 3usize, 1.5),
            (-0.25, 1.5, 0.5, 3, 1.5),
            (3.0, 0.3, 2.0, 3, 2.0),
            (0.8, 1.2, 1.0, 4, 2.0),
            (-1.1, 1.5, 0.7, 5, 2.5),
        ] {
            let p = yk(c, s, a, dim);
            assert_relative_eq!(
                lq_norm_quadrature(&p, q).unwrap(),
                lq_norm_closed(&p, q).unwrap(),
                max_relative = 1e-9
            );
        }
        assert_eq!(lq_norm_closed(&YukawaPotential::zero(3), 1.5).unwrap(), 0.0);
        let a = lq_norm_closed(&yk(0.5, 1.0, 1.0, 3), 1.5).unwrap();
        let b = lq_norm_closed(&yk(1.0, 1.0, 1.0, 3), 1.5).unwrap();
        assert_relative_eq!(b, 2.0 * a, max_relative = 1e-14);
        assert!(lq_norm_closed(&yk(1.0, 1.9, 1.0, 3), 1.6).is_err());
    }

    #[test]
    fn certificates() {
        let c = certify(&yk(-0.5, 1.0, 1.0, 3)).unwrap();
        assert!(c.admissible);
        assert_relative_eq!(c.threshold, 4.0 * PI, max_relative = 1e-14);
        assert_relative_eq!(c.margin, 2.0 * PI, max_relative = 1e-12);

        let border = certify(&yk(-1.0, 1.0, 1.0, 3)).unwrap();
        assert!(!border.admissible);
        assert_relative_eq!(border.kato_norm_negative_part, border.threshold, max_relative = 1e-14);

        let pos = certify(&yk(5.0, 1.0, 1.0, 3)).unwrap();
        assert!(pos.admissible);
        assert_eq!(pos.kato_norm_negative_part, 0.0);
        assert_eq!(pos.margin, pos.threshold);

        // N = 5 with σ ≥ 2 has an infinite L^{5/2} norm
        let wide = certify(&yk(0.1, 2.5, 1.0, 5)).unwrap();
        assert!(wide.lq_norm.is_infinite());
        assert!(!wide.admissible);
    }

    #[test]
    fn margin_decreases_with_attraction() {
        let mut prev = f64::INFINITY;
        for k in 1..20 {
            let c = -0.1 * k as f64;
            let m = certify(&yk(c, 1.0, 1.0, 3)).unwrap().margin;
            assert!(m < prev);
            prev = m;
        }
    }

    #[test]
    fn sampling() {
        let g = RadialGrid::new(3, 10.0, 999).unwrap();
        let p = yk(-0.5, 1.0, 1.0, 3);
        let s = sample_potential(&p, g).unwrap();
        for r in [0.5, 1.0, 2.0] {
            let i = g.index_at_or_above(r);
            let ri = g.radius(i);
            assert_relative_eq!(s.values()[i], yukawa_eval(&p, ri).unwrap(), max_relative = 1e-15);
            let d = -0.5 * (-ri).exp() * (-1.0 / (ri * ri) - 1.0 / ri);
            assert_relative_eq!(s.radial_derivative().unwrap()[i], d, max_relative = 1e-14);
        }
        assert!(sample_potential(&yk(1.0, 1.0, 1.0, 4), g).is_err());
        assert!(SampledPotential::new(g, vec![0.0; 3], None).is_err());
        let no_deriv = SampledPotential::new(g, vec![0.0; g.len()], None).unwrap();
        assert!(no_deriv.require_derivative().is_err());
    }

    #[test]
    fn hardy_and_sandwich() {
        let g = RadialGrid::default_for(3).unwrap();
        let u = Field::from_real_fn(g, |r| (-r * r / 2.0).exp()).unwrap();

        let rep = yk(1.0, 1.0, 1.0, 3);
        let cert = certify(&rep).unwrap();
        let v = sample_potential(&rep, g).unwrap();
        let h = hardy_check(&v, &u, &cert).unwrap();
        assert!(h.holds && h.lhs < 0.9 * h.rhs);
        let h2 = hardy_check(&v, &u.scaled(1e-3), &cert).unwrap();
        assert_relative_eq!(h2.lhs / h2.rhs, h.lhs / h.rhs, max_relative = 1e-12);

        let z = SampledPotential::zero(g);
        let zc = certify(&YukawaPotential::zero(3)).unwrap();
        let hz = hardy_check(&z, &u, &zc).unwrap();
        assert_eq!((hz.lhs, hz.rhs, hz.holds), (0.0, 0.0, true));
        let sz = sandwich_check(&z, &u, &zc).unwrap();
        assert_eq!(sz.lower, sz.form);
        assert_eq!(sz.form, sz.upper);

        let att = yk(-0.5, 1.0, 1.0, 3);
        let ac = certify(&att).unwrap();
        let av = sample_potential(&att, g).unwrap();
        let s = sandwich_check(&av, &u, &ac).unwrap();
        assert!(s.lower_holds && s.upper_holds && s.lower > 0.0);
        let s2 = sandwich_check(&av, &u.scaled(3.0), &ac).unwrap();
        assert_relative_eq!(s2.form, 9.0 * s.form, max_relative = 1e-12);
        assert_eq!((s2.lower_holds, s2.upper_holds), (s.lower_holds, s.upper_holds));

        let bad = certify(&yk(-1.0, 1.0, 1.0, 3)).unwrap();
        assert!(sandwich_check(&av, &u, &bad).is_err());
    }
}
