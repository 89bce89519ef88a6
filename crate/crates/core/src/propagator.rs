//! The free Schrödinger flow `u ↦ e^{itΔ}u` restricted to radial fields.
//!
//! In three dimensions `v = r·u` solves the one-dimensional equation on the
//! half line with `v(0) = 0`; the finite-difference Laplacian of `v` is
//! diagonalised by the type-I sine transform, so the semi-discrete flow is
//! applied exactly, mode by mode. In four and five dimensions the flux-form
//! radial Laplacian is advanced with Crank–Nicolson, which is unitary in the
//! weighted inner product used by [`crate::grid::mass`].

use num_complex::Complex64;
use rustdct::{Dst1, DctPlanner};
use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::grid::{Field, RadialGrid};

/// Largest Crank–Nicolson substep; longer requests are subdivided.
pub const CN_MAX_SUBSTEP: f64 = 1e-2;

#[derive(Clone)]
enum Scheme {
    Sine { plan: Arc<dyn Dst1<f64>>, eigen: Vec<f64> },
    CrankNicolson { weight: Vec<f64>, face: Vec<f64> },
}

/// Reusable free propagator for one grid.
#[derive(Clone)]
pub struct KineticPropagator {
    grid: RadialGrid,
    scheme: Scheme,
}

impl fmt::Debug for KineticPropagator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let kind = match self.scheme {
            Scheme::Sine { .. } => "sine",
            Scheme::CrankNicolson { .. } => "crank-nicolson",
        };
        f.debug_struct("KineticPropagator").field("grid", &self.grid).field("scheme", &kind).finish()
    }
}

impl KineticPropagator {
    pub fn new(grid: RadialGrid) -> Self {
        let m = grid.len();
        let dr = grid.dr();
        let scheme = if grid.dim() == 3 {
            let plan = DctPlanner::new().plan_dst1(m);
            let eigen = (0..m)
                .map(|k| {
                    let s = (std::f64::consts::PI * (k as f64 + 1.0) / (2.0 * (m as f64 + 1.0))).sin();
                    4.0 * s * s / (dr * dr)
                })
                .collect();
            Scheme::Sine { plan, eigen }
        } else {
            let p = grid.dim() as i32 - 1;
            let weight = grid.radii().map(|r| r.powi(p)).collect();
            // face[j] couples nodes j and j+1; the last entry is the face
            // towards the Dirichlet ghost node at r_max
            let face = (0..m).map(|j| ((j as f64 + 1.5) * dr).powi(p)).collect();
            Scheme::CrankNicolson { weight, face }
        };
        Self { grid, scheme }
    }

    pub fn grid(&self) -> &RadialGrid {
        &self.grid
    }

    /// Precomputes the propagator for a fixed time increment.
    pub fn step(&self, dt: f64) -> Result<KineticStep> {
        if !dt.is_finite() {
            return Err(Error::Domain(format!("time step must be finite, got {dt}")));
        }
        let inner = match &self.scheme {
            Scheme::Sine { plan, eigen } => {
                let scale = 2.0 / (self.grid.len() as f64 + 1.0);
                let factors = eigen.iter().map(|l| Complex64::from_polar(scale, -l * dt)).collect();
                StepKind::Sine { plan: plan.clone(), factors }
            }
            Scheme::CrankNicolson { weight, face } => {
                let substeps = (dt.abs() / CN_MAX_SUBSTEP).ceil().max(1.0) as usize;
                let h = dt / substeps as f64;
                let dr = self.grid.dr();
                let tau = Complex64::new(0.0, 0.5 * h / (dr * dr));
                StepKind::CrankNicolson {
                    weight: weight.clone(),
                    face: face.clone(),
                    tau,
                    substeps,
                }
            }
        };
        Ok(KineticStep { grid: self.grid, dt, inner })
    }

    /// Applies `e^{i·dt·Δ}` to `u`.
    pub fn apply(&self, u: &Field, dt: f64) -> Result<Field> {
        self.grid.check_same(u.grid())?;
        if dt == 0.0 {
            return Ok(u.clone());
        }
        let mut out = u.clone();
        self.step(dt)?.apply_in_place(out.values_mut());
        Ok(out)
    }
}

#[derive(Clone)]
enum StepKind {
    Sine { plan: Arc<dyn Dst1<f64>>, factors: Vec<Complex64> },
    CrankNicolson { weight: Vec<f64>, face: Vec<f64>, tau: Complex64, substeps: usize },
}

/// The free flow over one fixed increment, ready to apply repeatedly.
#[derive(Clone)]
pub struct KineticStep {
    grid: RadialGrid,
    dt: f64,
    inner: StepKind,
}

impl fmt::Debug for KineticStep {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("KineticStep").field("grid", &self.grid).field("dt", &self.dt).finish()
    }
}

impl KineticStep {
    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub(crate) fn apply_in_place(&self, u: &mut [Complex64]) {
        if self.dt == 0.0 {
            return;
        }
        match &self.inner {
            StepKind::Sine { plan, factors } => sine_flow(&self.grid, plan.as_ref(), factors, u),
            StepKind::CrankNicolson { weight, face, tau, substeps } => {
                let mut rhs = vec![Complex64::new(0.0, 0.0); u.len()];
                let mut c = vec![Complex64::new(0.0, 0.0); u.len()];
                for _ in 0..*substeps {
                    crank_nicolson(weight, face, 0.0, None, *tau, 0.0, u, &mut rhs, &mut c);
                }
            }
        }
    }

    pub fn apply(&self, u: &Field) -> Result<Field> {
        self.grid.check_same(u.grid())?;
        let mut out = u.clone();
        self.apply_in_place(out.values_mut());
        Ok(out)
    }
}

fn sine_flow(grid: &RadialGrid, plan: &dyn Dst1<f64>, factors: &[Complex64], u: &mut [Complex64]) {
    let m = u.len();
    let mut re: Vec<f64> = Vec::with_capacity(m);
    let mut im: Vec<f64> = Vec::with_capacity(m);
    for (i, z) in u.iter().enumerate() {
        let r = grid.radius(i);
        re.push(z.re * r);
        im.push(z.im * r);
    }
    let mut scratch = vec![0.0; plan.get_scratch_len()];
    plan.process_dst1_with_scratch(&mut re, &mut scratch);
    plan.process_dst1_with_scratch(&mut im, &mut scratch);
    for k in 0..m {
        let z = Complex64::new(re[k], im[k]) * factors[k];
        re[k] = z.re;
        im[k] = z.im;
    }
    plan.process_dst1_with_scratch(&mut re, &mut scratch);
    plan.process_dst1_with_scratch(&mut im, &mut scratch);
    for (i, z) in u.iter_mut().enumerate() {
        let r = grid.radius(i);
        *z = Complex64::new(re[i] / r, im[i] / r);
    }
}

/// One step of `(W − B)u⁺ = (W + B)u` with `B = τA − iκ·diag(wv)`, where
/// `A` is the symmetric flux Laplacian, `W` the radial weights,
/// `τ = i·h/(2dr²)`, `κ = h/2` and `wv` the weighted potential.
/// `inner_face` couples the first node to a zero value at the origin
/// (zero for the flux form, one for the `v = r·u` form).
#[allow(clippy::too_many_arguments)]
fn crank_nicolson(
    weight: &[f64],
    face: &[f64],
    inner_face: f64,
    wv: Option<&[f64]>,
    tau: Complex64,
    kappa: f64,
    u: &mut [Complex64],
    rhs: &mut [Complex64],
    c: &mut [Complex64],
) {
    let m = u.len();
    let zero = Complex64::new(0.0, 0.0);
    let pot = |j: usize| wv.map_or(0.0, |w| w[j]);
    let left_face = |j: usize| if j > 0 { face[j - 1] } else { inner_face };
    // (A u)_j = face[j](u_{j+1} − u_j) − face[j−1](u_j − u_{j−1}),
    // with u_{−1} = 0 behind the inner face and u_m = 0 beyond the last node
    for j in 0..m {
        let prev = if j > 0 { u[j - 1] } else { zero };
        let next = if j + 1 < m { u[j + 1] } else { zero };
        let au = face[j] * (next - u[j]) - left_face(j) * (u[j] - prev);
        rhs[j] = weight[j] * u[j] + tau * au - Complex64::new(0.0, kappa * pot(j)) * u[j];
    }
    let diag = |j: usize| Complex64::new(weight[j], kappa * pot(j)) + tau * (face[j] + left_face(j));
    let off = |j: usize| -tau * face[j];
    // Thomas forward sweep
    let mut denom = diag(0);
    c[0] = if m > 1 { off(0) / denom } else { zero };
    rhs[0] /= denom;
    for j in 1..m {
        let lower = off(j - 1);
        denom = diag(j) - lower * c[j - 1];
        c[j] = if j + 1 < m { off(j) / denom } else { zero };
        rhs[j] = (rhs[j] - lower * rhs[j - 1]) / denom;
    }
    u[m - 1] = rhs[m - 1];
    for j in (0..m - 1).rev() {
        u[j] = rhs[j] - c[j] * u[j + 1];
    }
}

/// The linear flow `e^{−it(−Δ+V)}` by Crank–Nicolson on the spatial
/// operator of [`KineticPropagator`]. The scheme conserves mass and the
/// discrete quadratic form `∫(|∇u|² + V|u|²)` exactly, whatever the
/// singularity of `V` at the origin.
#[derive(Debug, Clone)]
pub struct LinearPropagator {
    grid: RadialGrid,
    weight: Vec<f64>,
    face: Vec<f64>,
    inner_face: f64,
    wv: Vec<f64>,
}

impl LinearPropagator {
    pub fn new(grid: RadialGrid, potential: &[f64]) -> Result<Self> {
        if potential.len() != grid.len() {
            return Err(Error::GridMismatch("potential length differs from grid".into()));
        }
        if potential.iter().any(|v| !v.is_finite()) {
            return Err(Error::Domain("potential samples must be finite".into()));
        }
        let m = grid.len();
        let dr = grid.dr();
        let (weight, face, inner_face) = if grid.dim() == 3 {
            (vec![1.0; m], vec![1.0; m], 1.0)
        } else {
            let p = grid.dim() as i32 - 1;
            (
                grid.radii().map(|r| r.powi(p)).collect::<Vec<_>>(),
                (0..m).map(|j| ((j as f64 + 1.5) * dr).powi(p)).collect(),
                0.0,
            )
        };
        let wv = weight.iter().zip(potential).map(|(w, v)| w * v).collect();
        Ok(Self { grid, weight, face, inner_face, wv })
    }

    pub fn grid(&self) -> &RadialGrid {
        &self.grid
    }

    /// Applies `e^{−i·dt·ℒ}` in place, in substeps of at most
    /// [`CN_MAX_SUBSTEP`].
    pub(crate) fn apply_in_place(&self, u: &mut [Complex64], dt: f64) {
        if dt == 0.0 {
            return;
        }
        let substeps = (dt.abs() / CN_MAX_SUBSTEP).ceil().max(1.0) as usize;
        let h = dt / substeps as f64;
        let dr = self.grid.dr();
        let tau = Complex64::new(0.0, 0.5 * h / (dr * dr));
        let radial = self.grid.dim() == 3;
        if radial {
            for (i, z) in u.iter_mut().enumerate() {
                *z *= self.grid.radius(i);
            }
        }
        let mut rhs = vec![Complex64::new(0.0, 0.0); u.len()];
        let mut c = vec![Complex64::new(0.0, 0.0); u.len()];
        for _ in 0..substeps {
            crank_nicolson(&self.weight, &self.face, self.inner_face, Some(&self.wv), tau, 0.5 * h, u, &mut rhs, &mut c);
        }
        if radial {
            for (i, z) in u.iter_mut().enumerate() {
                *z /= self.grid.radius(i);
            }
        }
    }

    pub fn apply(&self, u: &Field, dt: f64) -> Result<Field> {
        self.grid.check_same(u.grid())?;
        if !dt.is_finite() {
            return Err(Error::Domain(format!("time step must be finite, got {dt}")));
        }
        let mut out = u.clone();
        self.apply_in_place(out.values_mut(), dt);
        Ok(out)
    }
}

/// `e^{i·dt·Δ}u` on the grid of `u`.
pub fn free_half_step(u: &Field, dt: f64) -> Result<Field> {
    if !dt.is_finite() {
        return Err(Error::Domain(format!("time step must be finite, got {dt}")));
    }
    if dt == 0.0 {
        return Ok(u.clone());
    }
    KineticPropagator::new(*u.grid()).apply(u, dt)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::mass;
    use approx::assert_relative_eq;

    fn gaussian(grid: RadialGrid) -> Field {
        Field::from_real_fn(grid, |r| (-r * r).exp()).unwrap()
    }

    #[test]
    fn zero_step_is_identity() {
        let g = RadialGrid::new(3, 20.0, 511).unwrap();
        let u = gaussian(g).with_phase(0.3);
        assert_eq!(free_half_step(&u, 0.0).unwrap(), u);
        assert!(free_half_step(&u, f64::NAN).is_err());
        assert!(free_half_step(&u, f64::INFINITY).is_err());
    }

    #[test]
    fn matches_free_gaussian() {
        let g = RadialGrid::default_for(3).unwrap();
        let u = gaussian(g);
        let t = 0.5;
        let out = free_half_step(&u, t).unwrap();
        let mut worst: f64 = 0.0;
        for (i, z) in out.values().iter().enumerate() {
            let r = g.radius(i);
            if r > 10.0 {
                break;
            }
            let d = Complex64::new(1.0, 4.0 * t);
            let exact = d.powf(-1.5) * (-(r * r) / d).exp();
            worst = worst.max((z - exact).norm());
        }
        assert!(worst < 1e-4, "max error {worst}");
    }

    #[test]
    fn sine_flow_preserves_mass_and_reverses() {
        let g = RadialGrid::default_for(3).unwrap();
        let u = Field::from_fn(g, |r| Complex64::new((-r * r / 4.0).exp(), r * (-r * r).exp())).unwrap();
        let m0 = mass(&u);
        let fwd = free_half_step(&u, 0.37).unwrap();
        let tol = 10.0 * f64::EPSILON * g.len() as f64;
        assert!(((mass(&fwd) - m0) / m0).abs() < tol);
        let back = free_half_step(&fwd, -0.37).unwrap();
        let err = u.values().iter().zip(back.values()).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max);
        assert!(err < 100.0 * f64::EPSILON * g.len() as f64, "reversal error {err}");
    }

    #[test]
    fn crank_nicolson_is_unitary_and_reversible() {
        for dim in [4usize, 5] {
            let g = RadialGrid::new(dim, 20.0, 2000).unwrap();
            let u = Field::from_fn(g, |r| Complex64::new((-r * r / 2.0).exp(), 0.2 * (-r * r).exp())).unwrap();
            let m0 = mass(&u);
            let fwd = free_half_step(&u, 0.003).unwrap();
            assert_relative_eq!(mass(&fwd), m0, max_relative = 1e-12);
            let back = free_half_step(&fwd, -0.003).unwrap();
            let err = u.values().iter().zip(back.values()).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max);
            assert!(err < 1e-12, "dim {dim}: reversal error {err}");
        }
    }

    #[test]
    fn crank_nicolson_tracks_free_gaussian() {
        // e^{-r²} in N dimensions evolves to (1+4it)^{-N/2} e^{-r²/(1+4it)}
        for dim in [4usize, 5] {
            let g = RadialGrid::new(dim, 20.0, 4000).unwrap();
            let prop = KineticPropagator::new(g);
            let step = prop.step(0.002).unwrap();
            let mut u = gaussian(g);
            for _ in 0..100 {
                u = step.apply(&u).unwrap();
            }
            let t = 0.2;
            let d = Complex64::new(1.0, 4.0 * t);
            let mut worst: f64 = 0.0;
            for (i, z) in u.values().iter().enumerate() {
                let r = g.radius(i);
                let exact = d.powf(-(dim as f64) / 2.0) * (-(r * r) / d).exp();
                worst = worst.max((z - exact).norm());
            }
            assert!(worst < 2e-3, "dim {dim}: max error {worst}");
        }
    }

    #[test]
    fn linear_propagator_without_potential_matches_free_flow() {
        let g = RadialGrid::new(3, 20.0, 2047).unwrap();
        let u = gaussian(g);
        let lin = LinearPropagator::new(g, &vec![0.0; g.len()]).unwrap();
        let mut a = u.clone();
        for _ in 0..100 {
            lin.apply_in_place(a.values_mut(), 1e-3);
        }
        let b = free_half_step(&u, 0.1).unwrap();
        let err = a.values().iter().zip(b.values()).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max);
        assert!(err < 1e-4, "{err}");
    }

    #[test]
    fn linear_propagator_conserves_quadratic_form() {
        use crate::grid::grad_norm_sq;
        for dim in [3usize, 4, 5] {
            let g = RadialGrid::new(dim, 20.0, 2047).unwrap();
            let v: Vec<f64> = g.radii().map(|r| -0.5 * (-r).exp() / r).collect();
            let lin = LinearPropagator::new(g, &v).unwrap();
            let u = Field::from_fn(g, |r| Complex64::new((-r * r / 2.0).exp(), 0.3 * r * (-r * r).exp())).unwrap();
            let form = |w: &Field| grad_norm_sq(w) + crate::grid::weighted_mass(w, &v).unwrap();
            let f0 = form(&u);
            let m0 = mass(&u);
            let out = lin.apply(&u, 0.5).unwrap();
            assert_relative_eq!(mass(&out), m0, max_relative = 1e-12);
            assert_relative_eq!(form(&out), f0, max_relative = 1e-10);
            let back = lin.apply(&out, -0.5).unwrap();
            let err = u.values().iter().zip(back.values()).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max);
            assert!(err < 1e-11, "dim {dim}: {err}");
        }
    }

    #[test]
    fn rejects_foreign_grid() {
        let g = RadialGrid::new(3, 20.0, 511).unwrap();
        let h = RadialGrid::new(3, 20.0, 255).unwrap();
        let prop = KineticPropagator::new(g);
        assert!(prop.apply(&gaussian(h), 0.1).is_err());
    }
}
