//! Strang-split time integration of the focusing energy-critical equation
//! `i u_t + Δu − V u + |u|^{4/(N−2)} u = 0`, with per-record diagnostics.

use num_complex::Complex64;

use crate::diagnostics::{grad_lp_integral, make_psi, strichartz_companion_exponent, strichartz_exponent, virial_m, VirialProfile};
use crate::error::{Error, Result};
use crate::grid::{grad_norm_sq, h1_norm_sq, lp_integral, mass, smooth_step, Field, RadialGrid};
use crate::groundstate::{bubble_value, static_energy};
use crate::potentials::SampledPotential;
use crate::propagator::{KineticPropagator, KineticStep, LinearPropagator};

/// Largest admissible time step.
pub const MAX_DT: f64 = 1e-2;

/// Inner radius of the outer shell watched for mass reaching the boundary,
/// as a fraction of `r_max`.
pub const BOUNDARY_SHELL: f64 = 0.9;

/// Growth of the outer-shell mass fraction above its initial value that
/// marks a run as boundary-contaminated.
pub const BOUNDARY_GROWTH_TOL: f64 = 1e-4;

/// Step size used by [`linear_evolve`].
pub const DEFAULT_LINEAR_STEP: f64 = 1e-3;

/// Time-stepping parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct EvolutionConfig {
    pub dt: f64,
    pub t_end: f64,
    /// Steps between records.
    pub record_stride: usize,
    /// Blow-up is declared once `‖∇u‖²` exceeds this multiple of its
    /// initial value.
    pub blowup_grad_factor: f64,
    /// Smallest step accepted by [`EvolutionConfig::validate`].
    pub dt_floor: f64,
    /// Cutoff radius of the virial weight recorded as `virial_M`.
    pub virial_radius: f64,
    /// Keep a snapshot every this many records (0 keeps none).
    pub snapshot_every: usize,
    /// Also propagate the linear flow from the same data and record the
    /// `H¹` distance to it.
    pub track_linear: bool,
    /// Switch the nonlinearity off.
    pub linear: bool,
}

impl Default for EvolutionConfig {
    fn default() -> Self {
        Self {
            dt: 1e-3,
            t_end: 1.0,
            record_stride: 10,
            blowup_grad_factor: 25.0,
            dt_floor: 1e-8,
            virial_radius: 5.0,
            snapshot_every: 0,
            track_linear: false,
            linear: false,
        }
    }
}

impl EvolutionConfig {
    /// Number of steps, once `t_end/dt` is checked to be an integer.
    pub fn steps(&self) -> Result<usize> {
        self.validate()?;
        Ok((self.t_end / self.dt).round() as usize)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Config(m));
        if !(self.dt.is_finite() && self.dt > 0.0) {
            return bad(format!("dt must be positive, got {}", self.dt));
        }
        if self.dt > MAX_DT {
            return bad(format!("dt = {} exceeds {MAX_DT}", self.dt));
        }
        if !(self.dt_floor > 0.0) || self.dt < self.dt_floor {
            return bad(format!("dt = {} is below the floor {}", self.dt, self.dt_floor));
        }
        if !(self.t_end.is_finite() && self.t_end >= 0.0) {
            return bad(format!("t_end must be finite and nonnegative, got {}", self.t_end));
        }
        let n = (self.t_end / self.dt).round();
        if (n * self.dt - self.t_end).abs() > 1e-9 * self.t_end.max(self.dt) {
            return bad(format!("t_end = {} is not a whole number of steps of {}", self.t_end, self.dt));
        }
        if self.record_stride == 0 {
            return bad("record_stride must be at least 1".into());
        }
        if !(self.blowup_grad_factor > 1.0) {
            return bad(format!("blowup_grad_factor must exceed 1, got {}", self.blowup_grad_factor));
        }
        if !(self.virial_radius.is_finite() && self.virial_radius > 0.0) {
            return bad(format!("virial_radius must be positive, got {}", self.virial_radius));
        }
        Ok(())
    }
}

/// Diagnostics at one record time.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrajectoryRecord {
    pub t: f64,
    pub mass: f64,
    pub energy: f64,
    pub grad_sq: f64,
    pub virial_m: f64,
    /// Centred difference of `virial_m` over the neighbouring records; one
    /// sided at the ends, absent with fewer than two records.
    pub virial_dm_fd: Option<f64>,
    /// Running trapezoidal integral of `‖u‖^q_{L^q}`, `q = 2(N+2)/(N−2)`.
    pub strichartz_accum: f64,
    /// `‖u(t) − e^{−itℒ}u₀‖_{H¹}` when the linear flow is tracked.
    pub h1_vs_linear: Option<f64>,
    /// `∫|u|^{2*}`.
    pub critical_integral: f64,
    /// Mass fraction in `r ≥ 0.9 r_max`.
    pub boundary_fraction: f64,
}

/// CSV header matching [`TrajectoryRecord::csv_row`].
pub const CSV_HEADER: &str = "t,mass,energy,grad_sq,virial_M,virial_dM_fd,strichartz_accum,h1_vs_linear";

impl TrajectoryRecord {
    /// Comma-separated values in the order of [`CSV_HEADER`]; absent values
    /// are written as `nan`.
    pub fn csv_row(&self) -> String {
        let opt = |x: Option<f64>| x.map_or_else(|| "nan".to_string(), |v| format!("{v:.12e}"));
        format!(
            "{:.12e},{:.12e},{:.12e},{:.12e},{:.12e},{},{:.12e},{}",
            self.t,
            self.mass,
            self.energy,
            self.grad_sq,
            self.virial_m,
            opt(self.virial_dm_fd),
            self.strichartz_accum,
            opt(self.h1_vs_linear)
        )
    }
}

/// How a run ended.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Termination {
    Completed,
    BlowupDetected,
    NumericalBreakdown,
}

/// Result of [`evolve`].
#[derive(Debug, Clone)]
pub struct EvolutionResult {
    pub termination: Termination,
    pub final_time: f64,
    pub final_state: Field,
    pub records: Vec<TrajectoryRecord>,
    pub snapshots: Vec<(f64, Field)>,
    /// Time integral of `‖∂_r u‖^q_{L^r}` with the companion exponents.
    pub strichartz_gradient_accum: f64,
    /// Largest growth of the outer-shell mass fraction above its initial
    /// value.
    pub boundary_growth: f64,
}

impl EvolutionResult {
    pub fn boundary_contaminated(&self) -> bool {
        self.boundary_growth > BOUNDARY_GROWTH_TOL
    }
}

/// Multiplies by `exp(i·dt·(|u|^{4/(N−2)} − V))`, or `exp(−i·dt·V)` when the
/// nonlinearity is off. The modulus is unchanged.
fn phase_in_place(u: &mut [Complex64], v: &[f64], dt: f64, half_power: Option<f64>) {
    for (z, vj) in u.iter_mut().zip(v) {
        let nl = match half_power {
            Some(p) => z.norm_sqr().powf(p),
            None => 0.0,
        };
        let theta = dt * (nl - vj);
        *z *= Complex64::new(theta.cos(), theta.sin());
    }
}

/// Exact flow of `i u_t − V u + |u|^{4/(N−2)} u = 0` over `dt`.
pub fn phase_step(u: &Field, v: &SampledPotential, dt: f64) -> Result<Field> {
    v.grid().check_same(u.grid())?;
    let mut out = u.clone();
    phase_in_place(out.values_mut(), v.values(), dt, Some(nonlinear_half_power(u.grid().dim())));
    Ok(out)
}

fn nonlinear_half_power(dim: usize) -> f64 {
    2.0 / (dim as f64 - 2.0)
}

/// The linear part of a splitting step.
#[derive(Debug, Clone)]
enum LinearPart {
    /// Exact free flow; the potential, if any, rides with the phase.
    Free { half: KineticStep, full: KineticStep, potential: Option<Vec<f64>> },
    /// Crank–Nicolson for `−Δ + V`.
    WithPotential(LinearPropagator),
}

/// Symmetric splitting `L(dt/2)·P(dt)·L(dt/2)` for a fixed step, with the
/// adjacent half linear steps of consecutive steps merged.
///
/// With `V = 0`, `L` is the exact free flow and `P` the nonlinear phase. With
/// a potential, `L` is the Crank–Nicolson flow of `−Δ + V` and `P` carries
/// the nonlinearity alone: splitting a Coulomb-like `V` off the Laplacian
/// loses an order of accuracy at the origin.
#[derive(Debug, Clone)]
pub struct Splitting {
    linear: LinearPart,
    dt: f64,
    half_power: Option<f64>,
}

impl Splitting {
    pub fn new(v: &SampledPotential, dt: f64, nonlinear: bool) -> Result<Self> {
        let linear = if v.is_zero() {
            let prop = KineticPropagator::new(*v.grid());
            LinearPart::Free { half: prop.step(0.5 * dt)?, full: prop.step(dt)?, potential: None }
        } else {
            LinearPart::WithPotential(LinearPropagator::new(*v.grid(), v.values())?)
        };
        Ok(Self { linear, dt, half_power: nonlinear.then(|| nonlinear_half_power(v.grid().dim())) })
    }

    /// Splitting with the potential in the phase step and the exact free
    /// flow as the linear part.
    pub fn with_potential_in_phase(v: &SampledPotential, dt: f64, nonlinear: bool) -> Result<Self> {
        let prop = KineticPropagator::new(*v.grid());
        Ok(Self {
            linear: LinearPart::Free { half: prop.step(0.5 * dt)?, full: prop.step(dt)?, potential: Some(v.values().to_vec()) },
            dt,
            half_power: nonlinear.then(|| nonlinear_half_power(v.grid().dim())),
        })
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    fn linear(&self, u: &mut [Complex64], full: bool) {
        match &self.linear {
            LinearPart::Free { half, full: f, .. } => {
                if full { f.apply_in_place(u) } else { half.apply_in_place(u) }
            }
            LinearPart::WithPotential(p) => p.apply_in_place(u, if full { self.dt } else { 0.5 * self.dt }),
        }
    }

    fn phase(&self, u: &mut [Complex64]) {
        let pot = match &self.linear {
            LinearPart::Free { potential: Some(p), .. } => Some(p.as_slice()),
            _ => None,
        };
        if pot.is_none() && self.half_power.is_none() {
            return;
        }
        for (j, z) in u.iter_mut().enumerate() {
            let nl = self.half_power.map_or(0.0, |p| z.norm_sqr().powf(p));
            let theta = self.dt * (nl - pot.map_or(0.0, |p| p[j]));
            *z *= Complex64::new(theta.cos(), theta.sin());
        }
    }

    /// Advances `n` steps in place.
    pub fn advance(&self, u: &mut [Complex64], n: usize) {
        if n == 0 {
            return;
        }
        self.linear(u, false);
        for k in 0..n {
            self.phase(u);
            if k + 1 < n {
                self.linear(u, true);
            }
        }
        self.linear(u, false);
    }
}

/// One Strang step `K(dt/2)·P(dt)·K(dt/2)` of the full equation, with the
/// potential in the phase step.
pub fn strang_step(u: &Field, v: &SampledPotential, dt: f64) -> Result<Field> {
    v.grid().check_same(u.grid())?;
    let s = Splitting::with_potential_in_phase(v, dt, true)?;
    let mut out = u.clone();
    s.advance(out.values_mut(), 1);
    Ok(out)
}

/// `e^{−itℒ}u₀` with `ℒ = −Δ + V`, split with steps of at most `max_step`.
/// Negative `t` runs the flow backwards.
pub fn linear_evolve_with_step(u0: &Field, v: &SampledPotential, t: f64, max_step: f64) -> Result<Field> {
    v.grid().check_same(u0.grid())?;
    if !(t.is_finite() && max_step.is_finite() && max_step > 0.0) {
        return Err(Error::Domain(format!("invalid linear evolution time {t} or step {max_step}")));
    }
    if t == 0.0 {
        return Ok(u0.clone());
    }
    if v.is_zero() {
        return KineticPropagator::new(*u0.grid()).apply(u0, t);
    }
    let n = (t.abs() / max_step * (1.0 - 1e-12)).ceil().max(1.0) as usize;
    let s = Splitting::new(v, t / n as f64, false)?;
    let mut out = u0.clone();
    s.advance(out.values_mut(), n);
    Ok(out)
}

pub fn linear_evolve(u0: &Field, v: &SampledPotential, t: f64) -> Result<Field> {
    linear_evolve_with_step(u0, v, t, DEFAULT_LINEAR_STEP)
}

fn boundary_fraction(u: &Field, m_total: f64) -> f64 {
    if m_total <= 0.0 {
        return 0.0;
    }
    let g = u.grid();
    let start = g.index_at_or_above(BOUNDARY_SHELL * g.r_max());
    let p = g.dim() as i32 - 1;
    let outer: f64 = (start..g.len()).map(|i| u.values()[i].norm_sqr() * g.radius(i).powi(p)).sum();
    g.ball().sphere_area * g.dr() * outer / m_total
}

struct Probe<'a> {
    v: &'a SampledPotential,
    psi: Option<VirialProfile>,
    q: f64,
    r_comp: f64,
}

impl Probe<'_> {
    fn record(&self, t: f64, u: &Field) -> Result<(TrajectoryRecord, f64, f64)> {
        let m = mass(u);
        let grad_sq = grad_norm_sq(u);
        let crit = lp_integral(u, u.grid().critical_exponent());
        let energy = static_energy(u, self.v)?;
        let vm = match &self.psi {
            Some(p) => virial_m(u, p)?,
            None => 0.0,
        };
        let lq = lp_integral(u, self.q);
        let grad_r = grad_lp_integral(u, self.r_comp).powf(self.q / self.r_comp);
        Ok((
            TrajectoryRecord {
                t,
                mass: m,
                energy,
                grad_sq,
                virial_m: vm,
                virial_dm_fd: None,
                strichartz_accum: 0.0,
                h1_vs_linear: None,
                critical_integral: crit,
                boundary_fraction: boundary_fraction(u, m),
            },
            lq,
            grad_r,
        ))
    }
}

/// Integrates from `u0` to `cfg.t_end`, stopping early on blow-up or
/// non-finite values. Records are produced at `t = 0`, every
/// `record_stride` steps and at the final time; `sink` sees each one as
/// soon as its finite-difference slope is known, in time order.
pub fn evolve(
    u0: &Field,
    v: &SampledPotential,
    cfg: &EvolutionConfig,
    mut sink: impl FnMut(&TrajectoryRecord),
) -> Result<EvolutionResult> {
    v.grid().check_same(u0.grid())?;
    let total = cfg.steps()?;
    if !u0.is_finite() {
        return Err(Error::Domain("initial data is not finite".into()));
    }
    let grid = *u0.grid();
    let psi = if 2.0 * cfg.virial_radius < grid.r_max() { Some(make_psi(cfg.virial_radius, grid)?) } else { None };
    let probe = Probe {
        v,
        psi,
        q: strichartz_exponent(grid.dim()),
        r_comp: strichartz_companion_exponent(grid.dim()),
    };
    let split = Splitting::new(v, cfg.dt, !cfg.linear)?;
    let lin_split = if cfg.track_linear { Some(Splitting::new(v, cfg.dt, false)?) } else { None };

    let mut u = u0.clone();
    let mut lin = u0.clone();
    let mut records: Vec<TrajectoryRecord> = Vec::new();
    let mut snapshots = Vec::new();
    let mut pending: Option<usize>;
    let emit = |records: &mut Vec<TrajectoryRecord>, pending: &mut Option<usize>, sink: &mut dyn FnMut(&TrajectoryRecord)| {
        if let Some(k) = pending.take() {
            sink(&records[k]);
        }
    };

    let (mut rec, mut lq_prev, mut gr_prev) = probe.record(0.0, &u)?;
    if cfg.track_linear {
        rec.h1_vs_linear = Some(0.0);
    }
    let grad0 = rec.grad_sq;
    let bf0 = rec.boundary_fraction;
    let mut boundary_growth: f64 = 0.0;
    let mut accum = 0.0;
    let mut grad_accum = 0.0;
    records.push(rec);
    if cfg.snapshot_every > 0 {
        snapshots.push((0.0, u.clone()));
    }
    pending = Some(0);

    let mut done = 0usize;
    let mut termination = Termination::Completed;
    while done < total {
        let n = cfg.record_stride.min(total - done);
        split.advance(u.values_mut(), n);
        if let Some(ls) = &lin_split {
            ls.advance(lin.values_mut(), n);
        }
        let t_prev = done as f64 * cfg.dt;
        done += n;
        let t = done as f64 * cfg.dt;
        if !u.is_finite() {
            termination = Termination::NumericalBreakdown;
            break;
        }
        let (mut rec, lq, gr) = probe.record(t, &u)?;
        if !(rec.energy.is_finite() && rec.grad_sq.is_finite() && rec.mass.is_finite()) {
            termination = Termination::NumericalBreakdown;
            break;
        }
        accum += 0.5 * (t - t_prev) * (lq + lq_prev);
        grad_accum += 0.5 * (t - t_prev) * (gr + gr_prev);
        lq_prev = lq;
        gr_prev = gr;
        rec.strichartz_accum = accum;
        if cfg.track_linear {
            rec.h1_vs_linear = Some(h1_norm_sq(&u.sub(&lin)?).sqrt());
        }
        boundary_growth = boundary_growth.max(rec.boundary_fraction - bf0);
        let k = records.len();
        let prev = &records[k - 1];
        let dm_back = (rec.virial_m - prev.virial_m) / (t - prev.t);
        rec.virial_dm_fd = Some(dm_back);
        // finish the slope of the previous record now that its right
        // neighbour exists
        let fd_prev = if k >= 2 {
            let pp = &records[k - 2];
            (rec.virial_m - pp.virial_m) / (t - pp.t)
        } else {
            dm_back
        };
        records[k - 1].virial_dm_fd = Some(fd_prev);
        emit(&mut records, &mut pending, &mut sink);
        records.push(rec);
        pending = Some(k);
        if cfg.snapshot_every > 0 && k.is_multiple_of(cfg.snapshot_every) {
            snapshots.push((t, u.clone()));
        }
        if rec.grad_sq > cfg.blowup_grad_factor * grad0 && rec.grad_sq > 0.0 {
            termination = Termination::BlowupDetected;
            break;
        }
    }
    emit(&mut records, &mut pending, &mut sink);
    let final_time = records.last().map_or(0.0, |r| r.t);
    if cfg.snapshot_every > 0 && snapshots.last().map(|s| s.0) != Some(final_time) && termination != Termination::NumericalBreakdown {
        snapshots.push((final_time, u.clone()));
    }
    Ok(EvolutionResult {
        termination,
        final_time,
        final_state: u,
        records,
        snapshots,
        strichartz_gradient_accum: grad_accum,
        boundary_growth,
    })
}

/// Divergence of two nearby trajectories.
#[derive(Debug, Clone, PartialEq)]
pub struct PerturbationReport {
    pub times: Vec<f64>,
    /// `‖u(t) − ũ(t)‖_{H¹}` at each record time.
    pub divergence: Vec<f64>,
    pub initial_distance: f64,
    /// `max_t divergence / initial_distance`, or 0 for an exact copy.
    pub amplification: f64,
}

/// Evolves `u0` and `u0 + delta` in lockstep and reports their `H¹`
/// distance. Requires `‖delta‖_{H¹} ≤ 10⁻³‖u0‖_{H¹}`.
pub fn perturbation_check(u0: &Field, delta: &Field, v: &SampledPotential, cfg: &EvolutionConfig) -> Result<PerturbationReport> {
    v.grid().check_same(u0.grid())?;
    u0.grid().check_same(delta.grid())?;
    let d0 = h1_norm_sq(delta).sqrt();
    let base = h1_norm_sq(u0).sqrt();
    if d0 > 1e-3 * base {
        return Err(Error::Precondition(format!("perturbation {d0:e} exceeds 1e-3 of the data norm {base:e}")));
    }
    let total = cfg.steps()?;
    let split = Splitting::new(v, cfg.dt, !cfg.linear)?;
    let mut a = u0.clone();
    let mut b = u0.add(delta)?;
    let mut times = vec![0.0];
    let mut divergence = vec![d0];
    let mut done = 0;
    while done < total {
        let n = cfg.record_stride.min(total - done);
        split.advance(a.values_mut(), n);
        split.advance(b.values_mut(), n);
        done += n;
        if !(a.is_finite() && b.is_finite()) {
            return Err(Error::Domain(format!("trajectory became non-finite at t = {}", done as f64 * cfg.dt)));
        }
        times.push(done as f64 * cfg.dt);
        divergence.push(h1_norm_sq(&a.sub(&b)?).sqrt());
    }
    let amplification = if d0 > 0.0 { divergence.iter().fold(0.0f64, |m, d| m.max(*d)) / d0 } else { 0.0 };
    Ok(PerturbationReport { times, divergence, initial_distance: d0, amplification })
}

/// Taper equal to one for `r ≤ r_max/2` and zero from `3r_max/4` on.
pub fn taper(grid: &RadialGrid, r: f64) -> f64 {
    let r_max = grid.r_max();
    1.0 - smooth_step((r - 0.5 * r_max) / (0.25 * r_max))
}

/// `A·exp(−r²/(2w²))`, tapered.
pub fn gaussian_data(grid: RadialGrid, amplitude: f64, width: f64) -> Result<Field> {
    Field::from_real_fn(grid, |r| amplitude * (-(r * r) / (2.0 * width * width)).exp() * taper(&grid, r))
}

/// `λ·U_ε`, tapered.
pub fn bubble_data(grid: RadialGrid, lambda: f64, eps: f64) -> Result<Field> {
    if !(eps.is_finite() && eps > 0.0) {
        return Err(Error::Domain(format!("bubble width must be positive, got {eps}")));
    }
    Field::from_real_fn(grid, |r| lambda * bubble_value(grid.dim(), eps, r) * taper(&grid, r))
}

/// `λ·W`, tapered.
pub fn scaled_profile_data(profile: &Field, lambda: f64) -> Result<Field> {
    let grid = *profile.grid();
    let w: Vec<f64> = grid.radii().map(|r| lambda * taper(&grid, r)).collect();
    profile.multiplied_by(&w)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::potentials::{sample_potential, YukawaPotential};
    use approx::assert_relative_eq;

    fn grid() -> RadialGrid {
        RadialGrid::default_for(3).unwrap()
    }

    #[test]
    fn config_validation() {
        let ok = EvolutionConfig { dt: 1e-3, t_end: 0.5, ..Default::default() };
        assert_eq!(ok.steps().unwrap(), 500);
        assert!(EvolutionConfig { dt: 2e-2, ..ok.clone() }.validate().is_err());
        assert!(EvolutionConfig { t_end: 0.5005, ..ok.clone() }.validate().is_err());
        assert!(EvolutionConfig { record_stride: 0, ..ok.clone() }.validate().is_err());
        assert!(EvolutionConfig { blowup_grad_factor: 1.0, ..ok.clone() }.validate().is_err());
        assert!(EvolutionConfig { dt: -1e-3, ..ok }.validate().is_err());
    }

    #[test]
    fn phase_step_preserves_modulus() {
        let g = grid();
        let v = sample_potential(&YukawaPotential::new(-0.5, 1.0, 1.0, 3).unwrap(), g).unwrap();
        let u = gaussian_data(g, 0.8, 1.5).unwrap();
        let w = phase_step(&u, &v, 0.01).unwrap();
        for (a, b) in u.values().iter().zip(w.values()) {
            assert_relative_eq!(a.norm(), b.norm(), max_relative = 1e-14);
        }
        assert!(phase_step(&Field::zeros(g), &v, 0.01).unwrap().values().iter().all(|z| z.norm() == 0.0));
    }

    #[test]
    fn fused_steps_match_single_steps() {
        let g = RadialGrid::new(3, 20.0, 1023).unwrap();
        let v = sample_potential(&YukawaPotential::new(-0.3, 1.0, 1.0, 3).unwrap(), g).unwrap();
        let u = gaussian_data(g, 0.6, 1.0).unwrap();
        let mut a = u.clone();
        for _ in 0..5 {
            a = strang_step(&a, &v, 1e-3).unwrap();
        }
        let s = Splitting::with_potential_in_phase(&v, 1e-3, true).unwrap();
        let mut b = u.clone();
        s.advance(b.values_mut(), 5);
        assert!(h1_norm_sq(&a.sub(&b).unwrap()).sqrt() < 1e-11);
    }

    #[test]
    fn splitting_is_second_order_for_smooth_data() {
        let g = RadialGrid::new(3, 20.0, 1023).unwrap();
        let v = SampledPotential::zero(g);
        let u = gaussian_data(g, 1.0, 1.0).unwrap();
        let run = |dt: f64| {
            let s = Splitting::new(&v, dt, true).unwrap();
            let mut w = u.clone();
            s.advance(w.values_mut(), (0.2 / dt).round() as usize);
            w
        };
        let reference = run(0.02 / 32.0);
        let errs: Vec<f64> = [0.02, 0.01, 0.005].iter().map(|&dt| h1_norm_sq(&run(dt).sub(&reference).unwrap()).sqrt()).collect();
        for w in errs.windows(2) {
            let order = (w[0] / w[1]).log2();
            assert!((1.8..2.3).contains(&order), "errors {errs:?}");
        }
    }

    #[test]
    fn strang_is_time_reversible() {
        let g = RadialGrid::new(3, 20.0, 1023).unwrap();
        let v = sample_potential(&YukawaPotential::new(-0.3, 1.0, 1.0, 3).unwrap(), g).unwrap();
        let u = gaussian_data(g, 0.6, 1.0).unwrap();
        let f = strang_step(&u, &v, 2e-3).unwrap();
        // the nonlinear phase depends only on |u|, which both phase steps see
        let b = strang_step(&f, &v, -2e-3).unwrap();
        assert!(h1_norm_sq(&b.sub(&u).unwrap()).sqrt() < 1e-10);
    }

    #[test]
    fn small_gaussian_conserves_mass_and_energy() {
        let g = grid();
        let v = sample_potential(&YukawaPotential::new(-0.5, 1.0, 1.0, 3).unwrap(), g).unwrap();
        let u = gaussian_data(g, 0.2, 1.0).unwrap();
        let cfg = EvolutionConfig { dt: 1e-3, t_end: 2.0, record_stride: 100, ..Default::default() };
        let mut seen = Vec::new();
        let res = evolve(&u, &v, &cfg, |r| seen.push(r.t)).unwrap();
        assert_eq!(res.termination, Termination::Completed);
        assert_eq!(res.records.len(), 21);
        assert_eq!(seen, res.records.iter().map(|r| r.t).collect::<Vec<_>>());
        let m0 = res.records[0].mass;
        let e0 = res.records[0].energy;
        for r in &res.records {
            assert!((r.mass - m0).abs() / m0 < 1e-8, "{r:?}");
            assert!((r.energy - e0).abs() / e0.abs() < 1e-6, "{} vs {e0}", r.energy);
        }
        assert!(!res.boundary_contaminated());
    }

    #[test]
    fn linear_flow_round_trip() {
        let g = RadialGrid::new(3, 20.0, 1023).unwrap();
        let v = sample_potential(&YukawaPotential::new(-0.3, 1.0, 1.0, 3).unwrap(), g).unwrap();
        let u = gaussian_data(g, 1.0, 1.0).unwrap();
        let f = linear_evolve(&u, &v, 0.25).unwrap();
        let b = linear_evolve(&f, &v, -0.25).unwrap();
        assert!(h1_norm_sq(&b.sub(&u).unwrap()).sqrt() < 1e-10);
        assert_relative_eq!(mass(&f), mass(&u), max_relative = 1e-12);
    }

    #[test]
    fn perturbation_of_zero_is_zero() {
        let g = RadialGrid::new(3, 20.0, 1023).unwrap();
        let v = SampledPotential::zero(g);
        let u = gaussian_data(g, 0.5, 1.0).unwrap();
        let cfg = EvolutionConfig { dt: 1e-3, t_end: 0.1, record_stride: 20, ..Default::default() };
        let rep = perturbation_check(&u, &Field::zeros(g), &v, &cfg).unwrap();
        assert!(rep.divergence.iter().all(|d| *d == 0.0));
        let big = u.scaled(0.1);
        assert!(matches!(perturbation_check(&u, &big, &v, &cfg), Err(Error::Precondition(_))));
    }
}
