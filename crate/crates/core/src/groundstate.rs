//! Positive radial solutions of `−ΔW + VW = W^{(N+2)/(N−2)}` by shooting,
//! their variational identities and the scattering threshold they define.

use crate::error::{Error, Result};
use crate::grid::{grad_norm_sq, lp_integral, smooth_step, weighted_mass, Field, RadialGrid};
use crate::ode::{Advance, Dopri5};
use crate::potentials::{certify, sample_potential, RadialPotential, SampledPotential, YukawaPotential};

/// Smallest and largest amplitude scanned for a bracket.
pub const B_MIN: f64 = 1e-3;
pub const B_MAX: f64 = 1e3;
/// Points in the logarithmic amplitude scan.
pub const B_SCAN_POINTS: usize = 61;
/// Bisection iteration cap.
pub const MAX_BISECTIONS: usize = 60;
/// Default absolute bracket width on `b`.
pub const DEFAULT_BRACKET_TOL: f64 = 1e-10;

const RTOL: f64 = 1e-11;
/// Relative size of the far-field Emden–Fowler energy treated as zero.
const CLEAN_TOL: f64 = 1e-6;

/// `[N(N−2)]^{(N−2)/4} (ε/(ε²+r²))^{(N−2)/2}`.
pub fn bubble_value(dim: usize, eps: f64, r: f64) -> f64 {
    let n = dim as f64;
    (n * (n - 2.0)).powf((n - 2.0) / 4.0) * (eps / (eps * eps + r * r)).powf((n - 2.0) / 2.0)
}

/// The Aubin–Talenti bubble `U_ε` centred at the origin.
pub fn aubin_talenti(eps: f64, grid: RadialGrid) -> Result<Field> {
    if !(eps.is_finite() && eps > 0.0) {
        return Err(Error::Domain(format!("bubble width must be positive, got {eps}")));
    }
    Field::from_real_fn(grid, |r| bubble_value(grid.dim(), eps, r))
}

/// Width of the bubble whose central value is `b`.
pub fn bubble_width_for_amplitude(dim: usize, b: f64) -> f64 {
    let n = dim as f64;
    ((n * (n - 2.0)).powf((n - 2.0) / 4.0) / b).powf(2.0 / (n - 2.0))
}

/// The sharp Sobolev constant `S` from `‖∇U₁‖² = S^{N/2}` on `grid`.
pub fn sobolev_constant(grid: RadialGrid) -> f64 {
    let u = aubin_talenti(1.0, grid).expect("unit width is valid");
    grad_norm_sq(&u).powf(2.0 / grid.dim() as f64)
}

/// Fate of a single shot.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ShootClass {
    /// The profile changes sign: the amplitude is too large.
    CrossesZero,
    /// The profile decays like `r^{2−N}`: a ground-state candidate.
    DecaysClean,
    /// `|W|` exceeded ten times the initial value.
    GrowsUnbounded,
    /// The profile stays positive but keeps a positive far-field constant,
    /// so it decays more slowly than `r^{2−N}`: the amplitude is too small.
    PlateausPositive,
    /// The integrator could not resolve the shot.
    Indeterminate,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ShootOutcome {
    pub classification: ShootClass,
    pub crossing_radius: Option<f64>,
    /// Far-field constant `α` in `W ≈ α + βr^{2−N}`.
    pub tail_value: f64,
    /// Conserved Emden–Fowler energy in the potential-free far field,
    /// relative to the size of its terms.
    pub far_field_energy: f64,
    /// Samples on the grid nodes reached before the shot stopped.
    pub profile: Vec<f64>,
}

impl ShootOutcome {
    /// `Some(true)` when `b` is above the ground-state amplitude,
    /// `Some(false)` when below, `None` when undecided or clean.
    fn side(&self) -> Option<bool> {
        match self.classification {
            ShootClass::CrossesZero => Some(true),
            ShootClass::PlateausPositive | ShootClass::GrowsUnbounded => Some(false),
            ShootClass::DecaysClean | ShootClass::Indeterminate => None,
        }
    }
}

/// Series start `W = b + A r^{2−σ} + B r^{3−σ} + C r²` near the origin.
fn series_start(v: &YukawaPotential, b: f64, p: f64, r: f64) -> [f64; 2] {
    let n = v.dim as f64;
    let s = v.sigma;
    let c2 = -b.powf(p) / (2.0 * n);
    let mut w = b + c2 * r * r;
    let mut dw = 2.0 * c2 * r;
    if v.c != 0.0 {
        let a1 = v.c * b / ((2.0 - s) * (n - s));
        let b1 = -v.a * v.c * b / ((3.0 - s) * (n + 1.0 - s));
        w += a1 * r.powf(2.0 - s) + b1 * r.powf(3.0 - s);
        dw += a1 * (2.0 - s) * r.powf(1.0 - s) + b1 * (3.0 - s) * r.powf(2.0 - s);
    }
    [w, dw]
}

/// Integrates `W″ + (N−1)/r W′ − V W + |W|^{p−1}W = 0`, `W(0) = b`,
/// sampling on the grid and classifying the far field.
pub fn shoot(v: &YukawaPotential, grid: &RadialGrid, b: f64) -> Result<ShootOutcome> {
    if !(b.is_finite() && b > 0.0) {
        return Err(Error::Domain(format!("shooting amplitude must be positive, got {b}")));
    }
    v.validate()?;
    if v.dim != grid.dim() {
        return Err(Error::GridMismatch("potential and grid dimensions differ".into()));
    }
    if v.c != 0.0 && v.sigma >= 2.0 {
        return Err(Error::Domain(format!("shooting needs sigma < 2, got {}", v.sigma)));
    }
    let dim = v.dim;
    let n = dim as f64;
    let p = (n + 2.0) / (n - 2.0);
    let k = (n - 2.0) / 2.0;
    let eps = bubble_width_for_amplitude(dim, b);
    let r0 = (1e-3 * eps).min(1e-6);
    let rhs = |r: f64, y: &[f64; 2]| {
        let w = y[0];
        [y[1], -(n - 1.0) / r * y[1] + v.value(r) * w - w.abs().powf(p - 1.0) * w]
    };
    let mut ode = Dopri5::new(rhs, r0, series_start(v, b, p, r0), r0, RTOL, 1e-13 * b);

    let mut profile = Vec::with_capacity(grid.len());
    let mut crossing: Option<f64> = None;
    let mut grew = false;
    let mut prev = (r0, b);
    let mut watch = |r: f64, y: &[f64; 2]| -> bool {
        if y[0] < 0.0 {
            let (r_prev, w_prev) = prev;
            crossing = Some(r_prev + (r - r_prev) * w_prev / (w_prev - y[0]));
            return true;
        }
        if y[0].abs() > 10.0 * b {
            grew = true;
            return true;
        }
        prev = (r, y[0]);
        false
    };

    let finish = |class: ShootClass, crossing: Option<f64>, profile: Vec<f64>| ShootOutcome {
        classification: class,
        crossing_radius: crossing,
        tail_value: f64::NAN,
        far_field_energy: f64::NAN,
        profile,
    };

    for r in grid.radii() {
        match ode.advance_to(r, &mut watch) {
            Advance::Reached => profile.push(ode.y[0]),
            Advance::Stopped => {
                let class = if grew { ShootClass::GrowsUnbounded } else { ShootClass::CrossesZero };
                return Ok(finish(class, crossing, profile));
            }
            Advance::Underflow | Advance::NonFinite => {
                return Ok(finish(ShootClass::Indeterminate, None, profile));
            }
        }
    }

    // continue until the potential is negligible
    let r_far = grid.r_max().max(100.0).max(50.0 / v.a);
    match ode.advance_to(r_far, &mut watch) {
        Advance::Reached => {}
        Advance::Stopped => {
            let class = if grew { ShootClass::GrowsUnbounded } else { ShootClass::CrossesZero };
            return Ok(finish(class, crossing, profile));
        }
        Advance::Underflow | Advance::NonFinite => return Ok(finish(ShootClass::Indeterminate, None, profile)),
    }

    let (r, w, dw) = (ode.x, ode.y[0], ode.y[1]);
    let alpha0 = w + r * dw / (n - 2.0);
    let beta = (w - alpha0) * r.powf(n - 2.0);
    let alpha = alpha0 - beta.abs().powf(p) * beta.signum() * r.powf(-n) / (n * (n - 2.0));

    // Emden–Fowler variables: t = ln r, φ = r^k W, φ_t = r^k (kW + rW′)
    let phi = r.powf(k) * w;
    let phi_t = r.powf(k) * (k * w + r * dw);
    let kin = 0.5 * phi_t * phi_t;
    let lin = 0.5 * k * k * phi * phi;
    let nl = phi.abs().powf(p + 1.0) / (p + 1.0);
    let energy = (kin - lin + nl) / (kin + lin + nl);

    let mut out = ShootOutcome {
        classification: ShootClass::DecaysClean,
        crossing_radius: None,
        tail_value: alpha,
        far_field_energy: energy,
        profile,
    };
    if energy.abs() <= CLEAN_TOL {
        return Ok(out);
    }
    if energy < 0.0 {
        out.classification = ShootClass::PlateausPositive;
        return Ok(out);
    }
    // positive energy: the orbit must cross zero further out
    let mut crossing_far: Option<f64> = None;
    let mut prev = (r, w);
    let reach = ode.advance_to(r_far * 1e12, |r, y| {
        if y[0] < 0.0 {
            let (r_prev, w_prev) = prev;
            crossing_far = Some(r_prev + (r - r_prev) * w_prev / (w_prev - y[0]));
            return true;
        }
        prev = (r, y[0]);
        false
    });
    out.crossing_radius = match (reach, crossing_far) {
        (_, Some(c)) => Some(c),
        _ if alpha < 0.0 && beta > 0.0 => Some((beta / -alpha).powf(1.0 / (n - 2.0))),
        _ => None,
    };
    out.classification = if out.crossing_radius.is_some() { ShootClass::CrossesZero } else { ShootClass::Indeterminate };
    Ok(out)
}

/// `I(u) = ½∫(|∇u|² + V|u|²) − (1/2*)∫|u|^{2*}`.
pub fn static_energy(u: &Field, v: &SampledPotential) -> Result<f64> {
    v.grid().check_same(u.grid())?;
    let q = u.grid().critical_exponent();
    Ok(0.5 * (grad_norm_sq(u) + weighted_mass(u, v.values())?) - lp_integral(u, q) / q)
}

/// `(N−2)/(2N)∫|∇W|² + (1/2N)∫(rV′)|W|² + ½∫V|W|² − (1/2*)∫|W|^{2*}`.
pub fn pohozaev_residual(w: &Field, v: &SampledPotential) -> Result<f64> {
    v.grid().check_same(w.grid())?;
    let dv = v.require_derivative()?;
    let g = w.grid();
    let n = g.dim() as f64;
    let q = g.critical_exponent();
    let rdv: Vec<f64> = dv.iter().zip(g.radii()).map(|(d, r)| r * d).collect();
    Ok((n - 2.0) / (2.0 * n) * grad_norm_sq(w) + weighted_mass(w, &rdv)? / (2.0 * n) + 0.5 * weighted_mass(w, v.values())?
        - lp_integral(w, q) / q)
}

/// `∫(|∇W|² + V|W|²) − ∫|W|^{2*}`.
pub fn nehari_residual(w: &Field, v: &SampledPotential) -> Result<f64> {
    v.grid().check_same(w.grid())?;
    let q = w.grid().critical_exponent();
    Ok(grad_norm_sq(w) + weighted_mass(w, v.values())? - lp_integral(w, q))
}

/// The pair `(E(W), ‖∇W‖²)` that bounds the scattering region.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Threshold {
    pub energy: f64,
    pub grad_sq: f64,
}

/// A positive radial ground state and its identities.
#[derive(Debug, Clone, PartialEq)]
pub struct GroundState {
    pub profile: Field,
    pub shoot_amplitude: f64,
    pub energy: f64,
    pub grad_sq: f64,
    pub pohozaev_residual: f64,
    pub nehari_residual: f64,
    pub potential: YukawaPotential,
    /// Bisection iterations spent (zero for the explicit bubble).
    pub iterations: usize,
}

impl GroundState {
    /// Both identity residuals below `rel_tol · ‖∇W‖²`.
    pub fn accepted(&self, rel_tol: f64) -> bool {
        self.pohozaev_residual.abs() < rel_tol * self.grad_sq && self.nehari_residual.abs() < rel_tol * self.grad_sq
    }

    /// True when the profile never increases along the grid.
    pub fn is_monotone(&self) -> bool {
        let v = self.profile.values();
        v.windows(2).all(|w| w[1].re <= w[0].re * (1.0 + 1e-12))
    }

    fn from_profile(profile: Field, b: f64, potential: YukawaPotential, iterations: usize) -> Result<Self> {
        let sampled = sample_potential(&potential, *profile.grid())?;
        Ok(Self {
            energy: static_energy(&profile, &sampled)?,
            grad_sq: grad_norm_sq(&profile),
            pohozaev_residual: pohozaev_residual(&profile, &sampled)?,
            nehari_residual: nehari_residual(&profile, &sampled)?,
            profile,
            shoot_amplitude: b,
            potential,
            iterations,
        })
    }
}

/// `E(W) = (1/N)∫|∇W|² − (1/2N)∫(rV′)|W|²` and `‖∇W‖²`.
pub fn threshold(w: &GroundState, v: &SampledPotential) -> Result<Threshold> {
    let dv = v.require_derivative()?;
    let g = w.profile.grid();
    v.grid().check_same(g)?;
    let n = g.dim() as f64;
    let rdv: Vec<f64> = dv.iter().zip(g.radii()).map(|(d, r)| r * d).collect();
    Ok(Threshold {
        energy: w.grad_sq / n - weighted_mass(&w.profile, &rdv)? / (2.0 * n),
        grad_sq: w.grad_sq,
    })
}

/// Finds the ground state by bisection on `W(0)` between shots that cross
/// zero and shots that stay positive without decaying. `V = 0` returns the
/// unit-width bubble.
pub fn find_ground_state(v: &YukawaPotential, grid: RadialGrid, bracket_tol: f64) -> Result<GroundState> {
    v.validate()?;
    if v.dim != grid.dim() {
        return Err(Error::GridMismatch("potential and grid dimensions differ".into()));
    }
    if v.is_zero() {
        let n = grid.dim() as f64;
        let b = (n * (n - 2.0)).powf((n - 2.0) / 4.0);
        return GroundState::from_profile(aubin_talenti(1.0, grid)?, b, *v, 0);
    }
    let cert = certify(v)?;
    if !cert.admissible {
        return Err(Error::Precondition("ground state needs an admissible potential".into()));
    }
    let s = sobolev_constant(grid);
    if cert.lq_norm_negative_part > s {
        return Err(Error::Precondition(format!(
            "negative part has L^(N/2) norm {} above the Sobolev constant {s}",
            cert.lq_norm_negative_part
        )));
    }

    let ratio = (B_MAX / B_MIN).ln() / (B_SCAN_POINTS - 1) as f64;
    let mut trace = Vec::new();
    let mut prev: Option<(f64, bool)> = None;
    let mut bracket = None;
    for i in 0..B_SCAN_POINTS {
        let b = B_MIN * (ratio * i as f64).exp();
        let shot = shoot(v, &grid, b)?;
        trace.push(format!("{b:.3e}:{:?}", shot.classification));
        if shot.classification == ShootClass::DecaysClean && shot.profile.len() == grid.len() {
            return GroundState::from_profile(Field::from_real_values(grid, shot.profile)?, b, *v, 0);
        }
        if let Some(side) = shot.side() {
            if let Some((b_prev, side_prev)) = prev {
                if side != side_prev {
                    bracket = Some(if side { (b_prev, b) } else { (b, b_prev) });
                    break;
                }
            }
            prev = Some((b, side));
        }
    }
    let (mut under, mut over) = bracket.ok_or_else(|| Error::NoGroundStateBracket {
        lo: B_MIN,
        hi: B_MAX,
        trace: trace.join(" "),
    })?;

    let mut iterations = 0;
    while (over - under).abs() > bracket_tol && iterations < MAX_BISECTIONS {
        let mid = 0.5 * (under + over);
        iterations += 1;
        match shoot(v, &grid, mid)?.side() {
            Some(true) => over = mid,
            Some(false) => under = mid,
            None => {
                under = mid;
                over = mid;
            }
        }
    }
    if (over - under).abs() > bracket_tol {
        return Err(Error::NoGroundStateBracket { lo: under.min(over), hi: under.max(over), trace: trace.join(" ") });
    }
    // the under side stays positive on the whole grid
    let b = under;
    let shot = shoot(v, &grid, b)?;
    if shot.profile.len() != grid.len() {
        return Err(Error::Domain(format!("shot at b = {b} stopped inside the grid")));
    }
    GroundState::from_profile(Field::from_real_values(grid, shot.profile)?, b, *v, iterations)
}

/// Rebuilds the ground state found earlier at shooting amplitude `b`
/// without repeating the search. Gives the same profile as
/// [`find_ground_state`] did when `b` came from it.
pub fn ground_state_at(v: &YukawaPotential, grid: RadialGrid, b: f64, iterations: usize) -> Result<GroundState> {
    v.validate()?;
    if v.dim != grid.dim() {
        return Err(Error::GridMismatch("potential and grid dimensions differ".into()));
    }
    if v.is_zero() {
        return GroundState::from_profile(aubin_talenti(1.0, grid)?, b, *v, iterations);
    }
    let shot = shoot(v, &grid, b)?;
    if shot.profile.len() != grid.len() {
        return Err(Error::Domain(format!("shot at b = {b} stopped inside the grid")));
    }
    GroundState::from_profile(Field::from_real_values(grid, shot.profile)?, b, *v, iterations)
}

/// Mountain-pass level estimate along the ray `t ↦ t·U_ε`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MountainPass {
    /// `max_{t>0} I(t·U_ε)`.
    pub level: f64,
    /// Maximiser `t_ε`.
    pub t_star: f64,
    /// `S^{N/2}/N` for comparison.
    pub reference: f64,
}

/// `max_{t>0} I(t·u)` for `u = U_ε`, optionally multiplied by a smooth cutoff
/// equal to one on `r ≤ cutoff` and vanishing beyond `2·cutoff`.
pub fn mountain_pass_diagnostic(v: &SampledPotential, eps: f64, cutoff: Option<f64>) -> Result<MountainPass> {
    let grid = *v.grid();
    let mut u = aubin_talenti(eps, grid)?;
    if let Some(rc) = cutoff {
        let prof: Vec<f64> = grid.radii().map(|r| smooth_step((2.0 * rc - r) / rc)).collect();
        u = u.multiplied_by(&prof)?;
    }
    let q = grid.critical_exponent();
    let a = grad_norm_sq(&u) + weighted_mass(&u, v.values())?;
    let b = lp_integral(&u, q);
    if a <= 0.0 || b <= 0.0 {
        return Err(Error::Domain("quadratic part is not positive along the test ray".into()));
    }
    // h(t) = t²a/2 − t^q b/q peaks at t* = (a/b)^{1/(q−2)}
    let t_star = (a / b).powf(1.0 / (q - 2.0));
    let level = 0.5 * a * t_star * t_star - b * t_star.powf(q) / q;
    let n = grid.dim() as f64;
    let reference = sobolev_constant(grid).powf(n / 2.0) / n;
    Ok(MountainPass { level, t_star, reference })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::potentials::YukawaPotential;
    use approx::assert_relative_eq;

    fn grid() -> RadialGrid {
        RadialGrid::default_for(3).unwrap()
    }

    #[test]
    fn bubble_values() {
        assert_relative_eq!(bubble_value(3, 1.0, 0.0), 3f64.powf(0.25), max_relative = 1e-15);
        let g = grid();
        let u1 = aubin_talenti(1.0, g).unwrap();
        assert!(u1.is_real_nonnegative());
        let u2 = aubin_talenti(2.0, g).unwrap();
        assert_relative_eq!(grad_norm_sq(&u1), grad_norm_sq(&u2), max_relative = 1e-3);
        // decay like r^{2−N}
        let far = |r: f64| bubble_value(3, 1.0, r) * r;
        assert_relative_eq!(far(1e3), far(2e3), max_relative = 1e-6);
        assert!(aubin_talenti(0.0, g).is_err());
    }

    #[test]
    fn bubble_identities() {
        let g = grid();
        let u = aubin_talenti(1.0, g).unwrap();
        let s32 = sobolev_constant(g).powf(1.5);
        assert_relative_eq!(grad_norm_sq(&u), s32, max_relative = 1e-12);
        assert_relative_eq!(lp_integral(&u, 6.0), s32, max_relative = 1e-3);
        let z = SampledPotential::zero(g);
        assert_relative_eq!(static_energy(&u, &z).unwrap(), s32 / 3.0, max_relative = 1e-3);
        // S^{3/2} = 3^{3/2}·(π²/4)·... ≈ 12.82 in three dimensions
        assert!((s32 - 12.82).abs() < 0.05, "S^(3/2) = {s32}");
    }

    #[test]
    fn nehari_scan_peaks_at_one() {
        let g = grid();
        let u = aubin_talenti(1.0, g).unwrap();
        let z = SampledPotential::zero(g);
        let vals: Vec<(f64, f64)> = (0..=100)
            .map(|i| {
                let t = 0.5 + 0.01 * i as f64;
                (t, static_energy(&u.scaled(t), &z).unwrap())
            })
            .collect();
        let best = vals.iter().cloned().fold((0.0, f64::MIN), |a, b| if b.1 > a.1 { b } else { a });
        assert!((best.0 - 1.0).abs() <= 0.011, "maximiser {}", best.0);
        assert_eq!(static_energy(&Field::zeros(g), &z).unwrap(), 0.0);
    }

    #[test]
    fn residuals_detect_non_solutions() {
        let g = grid();
        let u = aubin_talenti(1.0, g).unwrap();
        let z = SampledPotential::zero(g);
        let s32 = grad_norm_sq(&u);
        assert!(pohozaev_residual(&u, &z).unwrap().abs() < 1e-4 * s32);
        assert!(nehari_residual(&u, &z).unwrap().abs() < 1e-4 * s32);
        assert!(pohozaev_residual(&u.scaled(2.0), &z).unwrap() < -1.0);
        assert!(nehari_residual(&u.scaled(0.5), &z).unwrap() > 1.0);
        let no_deriv = SampledPotential::new(g, vec![0.0; g.len()], None).unwrap();
        assert!(pohozaev_residual(&u, &no_deriv).is_err());
    }

    #[test]
    fn free_shots_are_bubbles() {
        let g = grid();
        let z = YukawaPotential::zero(3);
        for b in [0.3, 1.0, 3f64.powf(0.25), 4.0] {
            let shot = shoot(&z, &g, b).unwrap();
            assert_eq!(shot.classification, ShootClass::DecaysClean, "b = {b}: {shot:?}");
            let eps = bubble_width_for_amplitude(3, b);
            for (i, w) in shot.profile.iter().enumerate().step_by(97) {
                let exact = bubble_value(3, eps, g.radius(i));
                assert_relative_eq!(*w, exact, max_relative = 1e-7);
            }
        }
        assert!(shoot(&z, &g, 0.0).is_err());
        assert!(shoot(&z, &g, f64::NAN).is_err());
    }

    #[test]
    fn free_shots_are_scale_covariant() {
        // W_b(r) = λ^{(N−2)/2} W_{b'}(λ r) with b = λ^{1/2} b' in N = 3
        let g = grid();
        let z = YukawaPotential::zero(3);
        let lambda: f64 = 4.0;
        let w1 = shoot(&z, &g, 1.0).unwrap().profile;
        let w2 = shoot(&z, &g, lambda.sqrt()).unwrap().profile;
        for i in (0..g.len() / 8).step_by(31) {
            let r = g.radius(i);
            let j = ((lambda * r) / g.dr()).round() as usize - 1;
            assert_relative_eq!(w2[i], lambda.sqrt() * w1[j], max_relative = 1e-7);
        }
    }

    #[test]
    fn attractive_branches_differ() {
        let g = grid();
        let v = YukawaPotential::new(-0.25, 1.0, 1.0, 3).unwrap();
        let low = shoot(&v, &g, B_MIN).unwrap();
        let high = shoot(&v, &g, B_MAX).unwrap();
        assert_ne!(low.classification, high.classification);
        assert_eq!(high.classification, ShootClass::CrossesZero);
        assert!(high.crossing_radius.is_some());
    }

    #[test]
    fn ground_state_without_potential() {
        let g = grid();
        let z = YukawaPotential::zero(3);
        let gs = find_ground_state(&z, g, DEFAULT_BRACKET_TOL).unwrap();
        let s32 = sobolev_constant(g).powf(1.5);
        assert_relative_eq!(gs.grad_sq, s32, max_relative = 1e-12);
        assert_relative_eq!(gs.energy, s32 / 3.0, max_relative = 1e-3);
        assert!(gs.accepted(1e-4));
        let th = threshold(&gs, &SampledPotential::zero(g)).unwrap();
        assert_relative_eq!(th.energy, s32 / 3.0, max_relative = 1e-12);
    }

    #[test]
    fn attractive_ground_state() {
        let g = grid();
        let v = YukawaPotential::new(-0.25, 1.0, 1.0, 3).unwrap();
        let gs = find_ground_state(&v, g, DEFAULT_BRACKET_TOL).unwrap();
        assert!(gs.accepted(1e-4), "{gs:?}");
        assert!(gs.is_monotone());
        assert!(gs.profile.is_real_nonnegative());
        assert!(gs.iterations <= MAX_BISECTIONS);
        let sv = sample_potential(&v, g).unwrap();
        let th = threshold(&gs, &sv).unwrap();
        assert_relative_eq!(th.energy, gs.energy, max_relative = 1e-4);
        let again = ground_state_at(&v, g, gs.shoot_amplitude, gs.iterations).unwrap();
        assert_eq!(again, gs);
    }

    #[test]
    fn mountain_pass() {
        let g = grid();
        let z = SampledPotential::zero(g);
        let mp = mountain_pass_diagnostic(&z, 1.0, None).unwrap();
        assert_relative_eq!(mp.level, mp.reference, max_relative = 1e-3);
        assert!(mp.t_star > 0.0 && mp.t_star.is_finite());
        let v = sample_potential(&YukawaPotential::new(-0.5, 1.0, 1.0, 3).unwrap(), g).unwrap();
        let mv = mountain_pass_diagnostic(&v, 1.0, None).unwrap();
        assert!(mv.level <= mv.reference * (1.0 + 1e-3));
        // a concentrated bubble with a cutoff far outside its core
        let mc = mountain_pass_diagnostic(&v, 0.05, Some(5.0)).unwrap();
        assert!(mc.level <= mc.reference * (1.0 + 1e-3), "{mc:?}");
    }
}
