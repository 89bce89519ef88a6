//! Localised virial functionals, Strichartz accumulation and the energy
//! trapping and equivalence checks evaluated along trajectories.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::evolution::TrajectoryRecord;
use crate::grid::{grad_norm_sq, lp_integral, weighted_mass, Field, RadialGrid};
use crate::groundstate::Threshold;
use crate::potentials::{PotentialCertificate, SampledPotential};

/// Certificate slack for the cutoff inequalities.
pub const CERT_TOL: f64 = 1e-12;

/// `ψ_R′(r)/R` on the transition layer `s = (r−R)/R ∈ [0, 1]`.
fn q(s: f64) -> f64 {
    1.0 + s + s.powi(4) * (-55.0 + s * (129.0 + s * (-106.0 + 30.0 * s)))
}

fn q1(s: f64) -> f64 {
    1.0 + s.powi(3) * (-220.0 + s * (645.0 + s * (-636.0 + 210.0 * s)))
}

fn q2(s: f64) -> f64 {
    s * s * (-660.0 + s * (2580.0 + s * (-3180.0 + 1260.0 * s)))
}

fn q3(s: f64) -> f64 {
    s * (-1320.0 + s * (7740.0 + s * (-12720.0 + 6300.0 * s)))
}

/// `∫_0^s q`.
fn q_int(s: f64) -> f64 {
    s + 0.5 * s * s + s.powi(5) * (-11.0 + s * (129.0 / 6.0 + s * (-106.0 / 7.0 + 3.75 * s)))
}

/// Values of `ψ_R` and its derivatives at one radius.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PsiPoint {
    pub psi: f64,
    pub d1: f64,
    pub d2: f64,
    pub d3: f64,
    pub d4: f64,
}

/// `ψ_R` at `r`: `r²/2` on `[0, R]`, a degree-eight polynomial on `[R, 2R]`
/// whose derivative falls to zero with three vanishing derivatives, and the
/// constant `31R²/28` beyond `2R`.
pub fn psi_at(big_r: f64, r: f64) -> PsiPoint {
    if r <= big_r {
        return PsiPoint { psi: 0.5 * r * r, d1: r, d2: 1.0, d3: 0.0, d4: 0.0 };
    }
    let s = ((r - big_r) / big_r).min(1.0);
    PsiPoint {
        psi: big_r * big_r * (0.5 + q_int(s)),
        d1: big_r * q(s),
        d2: q1(s),
        d3: q2(s) / big_r,
        d4: q3(s) / (big_r * big_r),
    }
}

/// `ψ_R` sampled on a grid, with the derived radial operators.
#[derive(Debug, Clone, PartialEq)]
pub struct VirialProfile {
    pub radius: f64,
    grid: RadialGrid,
    pub psi: Vec<f64>,
    pub psi_prime: Vec<f64>,
    pub psi_second: Vec<f64>,
    pub psi_third: Vec<f64>,
    pub laplacian_psi: Vec<f64>,
    pub bilaplacian_psi: Vec<f64>,
    /// `ψ_R′` at the cell faces `r_{j+1/2}`, `j = 0..m−1`.
    face_prime: Vec<f64>,
    /// `ψ_R″` and `Δψ_R` at the faces `r_{j−1/2}`, `j = 0..m`.
    face_second: Vec<f64>,
    face_laplacian: Vec<f64>,
    /// `(Δψ_R)′` at the nodes.
    laplacian_prime: Vec<f64>,
}

/// Smallest values of `1 − ψ″`, `1 − ψ′/r` and `N − Δψ` over the grid; the
/// certificate holds when none is negative.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PsiCertificate {
    pub second: f64,
    pub slope: f64,
    pub laplacian: f64,
}

impl PsiCertificate {
    pub fn holds(&self) -> bool {
        self.second >= -CERT_TOL && self.slope >= -CERT_TOL && self.laplacian >= -CERT_TOL
    }
}

impl VirialProfile {
    pub fn grid(&self) -> &RadialGrid {
        &self.grid
    }

    /// Minimum over the nodes of each certified quantity.
    pub fn certificate(&self) -> PsiCertificate {
        let n = self.grid.dim() as f64;
        let mut c = PsiCertificate { second: f64::INFINITY, slope: f64::INFINITY, laplacian: f64::INFINITY };
        for (i, r) in self.grid.radii().enumerate() {
            c.second = c.second.min(1.0 - self.psi_second[i]);
            c.slope = c.slope.min(1.0 - self.psi_prime[i] / r);
            c.laplacian = c.laplacian.min(n - self.laplacian_psi[i]);
        }
        c
    }
}

/// Builds `ψ_R` on `grid` and verifies the three cutoff certificates.
pub fn make_psi(big_r: f64, grid: RadialGrid) -> Result<VirialProfile> {
    if !(big_r.is_finite() && big_r > 0.0) {
        return Err(Error::Domain(format!("cutoff radius must be positive, got {big_r}")));
    }
    if 2.0 * big_r >= grid.r_max() {
        return Err(Error::Domain(format!("2R = {} must be below r_max = {}", 2.0 * big_r, grid.r_max())));
    }
    let nm1 = grid.dim() as f64 - 1.0;
    let m = grid.len();
    let mut psi = Vec::with_capacity(m);
    let mut d1 = Vec::with_capacity(m);
    let mut d2 = Vec::with_capacity(m);
    let mut d3 = Vec::with_capacity(m);
    let mut lap = Vec::with_capacity(m);
    let mut lap1 = Vec::with_capacity(m);
    let mut bilap = Vec::with_capacity(m);
    for r in grid.radii() {
        let p = psi_at(big_r, r);
        psi.push(p.psi);
        d1.push(p.d1);
        d2.push(p.d2);
        d3.push(p.d3);
        lap.push(p.d2 + nm1 * p.d1 / r);
        // Δg = g″ + (N−1)g′/r with g = Δψ
        let g1 = p.d3 + nm1 * (p.d2 / r - p.d1 / (r * r));
        let g2 = p.d4 + nm1 * (p.d3 / r - 2.0 * p.d2 / (r * r) + 2.0 * p.d1 / (r * r * r));
        lap1.push(g1);
        bilap.push(g2 + nm1 * g1 / r);
    }
    let dr = grid.dr();
    let face_prime = (0..m).map(|j| psi_at(big_r, (j as f64 + 1.5) * dr).d1).collect();
    let mut face_second = Vec::with_capacity(m + 1);
    let mut face_laplacian = Vec::with_capacity(m + 1);
    for j in 0..=m {
        let r = (j as f64 + 0.5) * dr;
        let p = psi_at(big_r, r);
        face_second.push(p.d2);
        face_laplacian.push(p.d2 + nm1 * p.d1 / r);
    }
    let prof = VirialProfile {
        radius: big_r,
        grid,
        psi,
        psi_prime: d1,
        psi_second: d2,
        psi_third: d3,
        laplacian_psi: lap,
        bilaplacian_psi: bilap,
        face_prime,
        face_second,
        face_laplacian,
        laplacian_prime: lap1,
    };
    let cert = prof.certificate();
    if !cert.holds() {
        return Err(Error::Domain(format!("cutoff certificates fail: {cert:?}")));
    }
    Ok(prof)
}

/// `M_ψ[u] = 2 Im ∫ ū ∇ψ·∇u dx`.
///
/// The products `Im(ū_j u_{j+1})` live on the cell faces; in three
/// dimensions they are formed from `v = r·u`, for which
/// `Im(ū ∂_r u) r² = Im(v̄ ∂_r v)` exactly.
pub fn virial_m(u: &Field, p: &VirialProfile) -> Result<f64> {
    p.grid.check_same(u.grid())?;
    let g = u.grid();
    let vals = u.values();
    let area = g.ball().sphere_area;
    let mut sum = 0.0;
    if g.dim() == 3 {
        for j in 0..vals.len() - 1 {
            let a = vals[j] * g.radius(j);
            let b = vals[j + 1] * g.radius(j + 1);
            sum += p.face_prime[j] * (a.conj() * b).im;
        }
        Ok(2.0 * area * sum)
    } else {
        let pw = g.dim() as i32 - 1;
        for j in 0..vals.len() - 1 {
            let face = (j as f64 + 1.5) * g.dr();
            sum += p.face_prime[j] * face.powi(pw) * (vals[j].conj() * vals[j + 1]).im;
        }
        Ok(2.0 * area * sum)
    }
}

/// `∫ψ|u|² dx`, whose time derivative is `M_ψ`.
pub fn psi_moment(u: &Field, p: &VirialProfile) -> Result<f64> {
    p.grid.check_same(u.grid())?;
    weighted_mass(u, &p.psi)
}

/// `∫f|∂_r u|² dx` with `f` given on the faces `r_{j−1/2}`, `j = 0..m`, and
/// `f′` on the nodes. In three dimensions this uses
/// `∫f|u_r|² r² dr = ∫f|v_r|² dr + ∫f′|v|²/r dr`, `v = r·u`, matching the
/// discretisation of [`grad_norm_sq`]; no exterior closure is needed since
/// `f` vanishes well inside the grid.
fn weighted_kinetic(u: &Field, face_f: &[f64], node_fprime: &[f64]) -> f64 {
    let g = u.grid();
    let vals = u.values();
    let dr = g.dr();
    let area = g.ball().sphere_area;
    if g.dim() == 3 {
        let mut prev = Complex64::new(0.0, 0.0);
        let mut faces = 0.0;
        let mut cells = 0.0;
        for (j, z) in vals.iter().enumerate() {
            let r = g.radius(j);
            let v = z * r;
            faces += face_f[j] * (v - prev).norm_sqr();
            cells += node_fprime[j] * v.norm_sqr() / r;
            prev = v;
        }
        area * (faces / dr + cells * dr)
    } else {
        let pw = g.dim() as i32 - 1;
        let mut faces = 0.0;
        for j in 0..vals.len() - 1 {
            let face = (j as f64 + 1.5) * dr;
            faces += face_f[j + 1] * face.powi(pw) * (vals[j + 1] - vals[j]).norm_sqr();
        }
        area * faces / dr
    }
}

/// The four terms of a virial right-hand side and their sum.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VirialTerms {
    pub kinetic: f64,
    pub potential: f64,
    pub bilaplacian: f64,
    pub nonlinear: f64,
    pub total: f64,
}

fn common_terms(u: &Field, v: &SampledPotential, p: &VirialProfile) -> Result<(f64, f64, f64)> {
    p.grid.check_same(u.grid())?;
    v.grid().check_same(u.grid())?;
    let dv = v.require_derivative()?;
    let g = u.grid();
    let psi_dv: Vec<f64> = p.psi_prime.iter().zip(dv).map(|(a, b)| a * b).collect();
    let potential = -2.0 * weighted_mass(u, &psi_dv)?;
    let bilaplacian = -weighted_mass(u, &p.bilaplacian_psi)?;
    let q = g.critical_exponent();
    let lap_u: Vec<f64> = u
        .values()
        .iter()
        .zip(&p.laplacian_psi)
        .map(|(z, l)| l * z.norm_sqr().powf(0.5 * q))
        .collect();
    let nonlinear = -4.0 / g.dim() as f64 * g.integrate(&lap_u)?;
    Ok((potential, bilaplacian, nonlinear))
}

/// `4∫Δψ|∇u|² − 2∫∇ψ·∇V|u|² − ∫Δ²ψ|u|² − (4/N)∫Δψ|u|^{2*}`, the form whose
/// leading term weights the gradient by the Laplacian of the cutoff.
pub fn virial_rhs_laplacian(u: &Field, v: &SampledPotential, p: &VirialProfile) -> Result<VirialTerms> {
    let (potential, bilaplacian, nonlinear) = common_terms(u, v, p)?;
    let grad_weighted = weighted_kinetic(u, &p.face_laplacian, &p.laplacian_prime);
    let kinetic = 4.0 * grad_weighted;
    Ok(VirialTerms { kinetic, potential, bilaplacian, nonlinear, total: kinetic + potential + bilaplacian + nonlinear })
}

/// `4∫ψ″|∂_r u|² − 2∫ψ′V′|u|² − ∫Δ²ψ|u|² − (4/N)∫Δψ|u|^{2*}`, the form
/// obtained from the Hessian of the cutoff.
pub fn virial_rhs_hessian(u: &Field, v: &SampledPotential, p: &VirialProfile) -> Result<VirialTerms> {
    let (potential, bilaplacian, nonlinear) = common_terms(u, v, p)?;
    let kinetic = 4.0 * weighted_kinetic(u, &p.face_second, &p.psi_third);
    Ok(VirialTerms { kinetic, potential, bilaplacian, nonlinear, total: kinetic + potential + bilaplacian + nonlinear })
}

/// One row of the finite-difference virial table.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VirialRow {
    pub t: f64,
    /// Centred second difference of `∫ψ|u|²`.
    pub fd_second: f64,
    pub laplacian_form: f64,
    pub hessian_form: f64,
    /// Centred first difference of `∫ψ|u|²`.
    pub fd_first: f64,
    pub virial_m: f64,
}

/// Compares both virial forms and `M_ψ` with centred differences of
/// `∫ψ|u|²` over uniformly spaced snapshots. One row per interior snapshot.
pub fn virial_fd_table(snapshots: &[(f64, Field)], v: &SampledPotential, p: &VirialProfile) -> Result<Vec<VirialRow>> {
    if snapshots.len() < 3 {
        return Err(Error::TooFewSamples { needed: 3, got: snapshots.len() });
    }
    let moments = snapshots.iter().map(|(_, u)| psi_moment(u, p)).collect::<Result<Vec<_>>>()?;
    let mut rows = Vec::with_capacity(snapshots.len() - 2);
    for k in 1..snapshots.len() - 1 {
        let (t0, t1, t2) = (snapshots[k - 1].0, snapshots[k].0, snapshots[k + 1].0);
        let h = 0.5 * (t2 - t0);
        if ((t1 - t0) - (t2 - t1)).abs() > 1e-9 * h {
            return Err(Error::Precondition("snapshots must be uniformly spaced".into()));
        }
        let u = &snapshots[k].1;
        rows.push(VirialRow {
            t: t1,
            fd_second: (moments[k + 1] - 2.0 * moments[k] + moments[k - 1]) / (h * h),
            laplacian_form: virial_rhs_laplacian(u, v, p)?.total,
            hessian_form: virial_rhs_hessian(u, v, p)?.total,
            fd_first: (moments[k + 1] - moments[k - 1]) / (2.0 * h),
            virial_m: virial_m(u, p)?,
        });
    }
    Ok(rows)
}

/// Which virial form tracks the finite-difference oracle.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum VirialMatch {
    Laplacian,
    Hessian,
    Both,
    Neither,
}

/// Verdict over a virial table.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VirialAdjudication {
    pub max_rel_laplacian: f64,
    pub max_rel_hessian: f64,
    pub max_rel_first_order: f64,
    pub samples: usize,
    pub matching: VirialMatch,
}

pub fn adjudicate_virial(rows: &[VirialRow], tol: f64) -> VirialAdjudication {
    let rel = |a: f64, b: f64| (a - b).abs() / b.abs().max(f64::MIN_POSITIVE);
    let mut a = VirialAdjudication {
        max_rel_laplacian: 0.0,
        max_rel_hessian: 0.0,
        max_rel_first_order: 0.0,
        samples: rows.len(),
        matching: VirialMatch::Neither,
    };
    for r in rows {
        a.max_rel_laplacian = a.max_rel_laplacian.max(rel(r.laplacian_form, r.fd_second));
        a.max_rel_hessian = a.max_rel_hessian.max(rel(r.hessian_form, r.fd_second));
        a.max_rel_first_order = a.max_rel_first_order.max(rel(r.virial_m, r.fd_first));
    }
    a.matching = match (a.max_rel_laplacian <= tol, a.max_rel_hessian <= tol) {
        (true, true) => VirialMatch::Both,
        (true, false) => VirialMatch::Laplacian,
        (false, true) => VirialMatch::Hessian,
        (false, false) => VirialMatch::Neither,
    };
    a
}

/// Slopes of `M_ψ` along a trajectory.
#[derive(Debug, Clone, PartialEq)]
pub struct SlopeReport {
    pub slopes: Vec<f64>,
    /// Every slope is negative.
    pub slopes_negative: bool,
    /// `slopes_negative` and `E(u₀) < 0`.
    pub all_negative: bool,
    pub max_abs_slope: f64,
    /// Least-squares slope of `M(t)`; `A* = −fitted_slope`.
    pub fitted_slope: f64,
    /// `A*` from the fit.
    pub a_star: f64,
    /// True when `M(t) ≤ M(0) − A*t/2` for every sample after the first
    /// quarter of the run.
    pub below_half_line: bool,
    /// True when `M(t) ≤ −A*t/2` for every sample after the first quarter.
    pub below_origin_line: bool,
}

/// Finite-difference slopes of the recorded `M_ψ`; `all_negative` is only
/// meaningful when `e0 < 0`.
pub fn virial_slope_check(records: &[TrajectoryRecord], e0: f64) -> Result<SlopeReport> {
    if records.len() < 3 {
        return Err(Error::TooFewSamples { needed: 3, got: records.len() });
    }
    let slopes: Vec<f64> = records
        .windows(2)
        .map(|w| (w[1].virial_m - w[0].virial_m) / (w[1].t - w[0].t))
        .collect();
    let n = records.len() as f64;
    let tm = records.iter().map(|r| r.t).sum::<f64>() / n;
    let mm = records.iter().map(|r| r.virial_m).sum::<f64>() / n;
    let sxy: f64 = records.iter().map(|r| (r.t - tm) * (r.virial_m - mm)).sum();
    let sxx: f64 = records.iter().map(|r| (r.t - tm) * (r.t - tm)).sum();
    let fitted_slope = if sxx > 0.0 { sxy / sxx } else { 0.0 };
    let a_star = -fitted_slope;
    let t0 = records[0].t;
    let t_end = records[records.len() - 1].t;
    let m0 = records[0].virial_m;
    let tail = records.iter().filter(|r| r.t - t0 >= 0.25 * (t_end - t0));
    let mut below_half_line = a_star > 0.0;
    let mut below_origin_line = a_star > 0.0;
    for r in tail {
        let s = r.t - t0;
        below_half_line &= r.virial_m <= m0 - 0.5 * a_star * s;
        below_origin_line &= r.virial_m <= -0.5 * a_star * s;
    }
    let slopes_negative = slopes.iter().all(|s| *s < 0.0);
    Ok(SlopeReport {
        slopes_negative,
        all_negative: e0 < 0.0 && slopes_negative,
        max_abs_slope: slopes.iter().fold(0.0f64, |a, s| a.max(s.abs())),
        slopes,
        fitted_slope,
        a_star,
        below_half_line,
        below_origin_line,
    })
}

/// The Strichartz space–time exponent `q = 2(N+2)/(N−2)`.
pub fn strichartz_exponent(dim: usize) -> f64 {
    let n = dim as f64;
    2.0 * (n + 2.0) / (n - 2.0)
}

/// Spatial exponent `r = 2N(N+2)/(N²+4)` of the derivative companion norm.
pub fn strichartz_companion_exponent(dim: usize) -> f64 {
    let n = dim as f64;
    2.0 * n * (n + 2.0) / (n * n + 4.0)
}

/// `‖∂_r u‖^p_{L^p}` on the cell faces.
pub fn grad_lp_integral(u: &Field, p: f64) -> f64 {
    let g = u.grid();
    let vals = u.values();
    let dr = g.dr();
    let pw = g.dim() as i32 - 1;
    let mut s = 0.0;
    for j in 0..vals.len() - 1 {
        let face = (j as f64 + 1.5) * dr;
        s += face.powi(pw) * ((vals[j + 1] - vals[j]).norm() / dr).powf(p);
    }
    g.ball().sphere_area * dr * s
}

/// Trapezoidal time integral of `‖u(t)‖^q_{L^q}`, `q = 2(N+2)/(N−2)`, over
/// snapshots at nondecreasing times.
pub fn strichartz_accumulate(snapshots: &[(f64, Field)]) -> f64 {
    if snapshots.len() < 2 {
        return 0.0;
    }
    let q = strichartz_exponent(snapshots[0].1.grid().dim());
    let vals: Vec<f64> = snapshots.iter().map(|(_, u)| lp_integral(u, q)).collect();
    snapshots
        .windows(2)
        .zip(vals.windows(2))
        .map(|(w, v)| 0.5 * (w[1].0 - w[0].0) * (v[0] + v[1]))
        .sum()
}

/// Ratio of the accumulator increment over the second half of the recorded
/// time span to the increment over the first half. Values well below one
/// indicate saturation.
pub fn strichartz_saturation(records: &[TrajectoryRecord]) -> Option<f64> {
    if records.len() < 3 {
        return None;
    }
    let t0 = records[0].t;
    let t1 = records[records.len() - 1].t;
    let mid = 0.5 * (t0 + t1);
    let at = |t: f64| {
        let k = records.partition_point(|r| r.t < t).min(records.len() - 1);
        if k == 0 {
            return records[0].strichartz_accum;
        }
        let (a, b) = (&records[k - 1], &records[k]);
        let w = if b.t > a.t { (t - a.t) / (b.t - a.t) } else { 1.0 };
        a.strichartz_accum + w * (b.strichartz_accum - a.strichartz_accum)
    };
    let first = at(mid) - at(t0);
    let second = at(t1) - at(mid);
    if first <= 0.0 {
        return if second <= 0.0 { Some(0.0) } else { Some(f64::INFINITY) };
    }
    Some(second / first)
}

/// Energy-trapping verdict along a trajectory.
#[derive(Debug, Clone, PartialEq)]
pub struct TrappingReport {
    /// `1 − E(u₀)/E_W`, the initial energy gap.
    pub delta0: f64,
    /// `min_t (1 − ‖∇u(t)‖²/‖∇W‖²)`.
    pub delta1: f64,
    /// `min_t (‖∇u‖² − ∫|u|^{2*}) / ‖∇u‖²` over nonzero samples.
    pub delta_bar: f64,
    pub gradient_bound: Vec<bool>,
    pub coercivity: Vec<bool>,
    pub energy_nonnegative: Vec<bool>,
    /// Set when the initial data is not strictly below the threshold.
    pub hypothesis_violated: bool,
}

impl TrappingReport {
    pub fn all_hold(&self) -> bool {
        !self.hypothesis_violated
            && self.gradient_bound.iter().all(|b| *b)
            && self.coercivity.iter().all(|b| *b)
            && self.energy_nonnegative.iter().all(|b| *b)
            && self.delta1 > 0.0
            && self.delta_bar > 0.0
    }
}

/// Absolute tolerance for `E(u(t)) ≥ 0`.
pub const ENERGY_FLOOR_TOL: f64 = 1e-8;

pub fn trapping_check(records: &[TrajectoryRecord], threshold: &Threshold) -> TrappingReport {
    let mut rep = TrappingReport {
        delta0: f64::NAN,
        delta1: f64::INFINITY,
        delta_bar: f64::INFINITY,
        gradient_bound: Vec::with_capacity(records.len()),
        coercivity: Vec::with_capacity(records.len()),
        energy_nonnegative: Vec::with_capacity(records.len()),
        hypothesis_violated: true,
    };
    let Some(first) = records.first() else {
        return rep;
    };
    rep.delta0 = 1.0 - first.energy / threshold.energy;
    rep.hypothesis_violated = !(first.energy < threshold.energy && first.grad_sq < threshold.grad_sq);
    for r in records {
        let d1 = 1.0 - r.grad_sq / threshold.grad_sq;
        rep.delta1 = rep.delta1.min(d1);
        rep.gradient_bound.push(d1 > 0.0);
        if r.grad_sq > 0.0 {
            let db = (r.grad_sq - r.critical_integral) / r.grad_sq;
            rep.delta_bar = rep.delta_bar.min(db);
            rep.coercivity.push(db > 0.0);
        } else {
            rep.coercivity.push(true);
        }
        rep.energy_nonnegative.push(r.energy >= -ENERGY_FLOOR_TOL);
    }
    rep
}

/// Comparability of `E(u(t))` and `‖∇u(t)‖²`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EquivalenceReport {
    pub min_ratio: f64,
    pub max_ratio: f64,
    pub lower_band: f64,
    pub upper_band: f64,
    pub within_band: bool,
    /// No sample had a nonzero gradient.
    pub empty: bool,
}

/// Ratios `E/‖∇u‖²` against the band
/// `[½(1 − ‖V₋‖_{N/2}/S) − G^{2/(N−2)}/(2*·S^{N/(N−2)}), ½(1 + ‖V‖_{N/2}/S)]`
/// with `G` the largest sampled gradient norm.
pub fn equivalence_check(records: &[TrajectoryRecord], cert: &PotentialCertificate, sobolev: f64, dim: usize) -> EquivalenceReport {
    let n = dim as f64;
    let crit = 2.0 * n / (n - 2.0);
    let mut min_ratio = f64::INFINITY;
    let mut max_ratio = f64::NEG_INFINITY;
    let mut g_max: f64 = 0.0;
    for r in records.iter().filter(|r| r.grad_sq > 0.0) {
        let x = r.energy / r.grad_sq;
        min_ratio = min_ratio.min(x);
        max_ratio = max_ratio.max(x);
        g_max = g_max.max(r.grad_sq);
    }
    let empty = !min_ratio.is_finite();
    let lower_band =
        0.5 * (1.0 - cert.lq_norm_negative_part / sobolev) - g_max.powf(2.0 / (n - 2.0)) / (crit * sobolev.powf(n / (n - 2.0)));
    let upper_band = 0.5 * (1.0 + cert.lq_norm / sobolev);
    EquivalenceReport {
        min_ratio,
        max_ratio,
        lower_band,
        upper_band,
        within_band: !empty && min_ratio >= lower_band * (1.0 - 1e-9) && max_ratio <= upper_band * (1.0 + 1e-9),
        empty,
    }
}

/// Kinetic-energy check used in tests: `4∫|∇u|² − 4∫|u|^{2*}` for fields
/// supported where `ψ = r²/2` and `V = 0` (three dimensions).
pub fn parabolic_virial_reference(u: &Field) -> f64 {
    4.0 * grad_norm_sq(u) - 4.0 * lp_integral(u, u.grid().critical_exponent())
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn grid() -> RadialGrid {
        RadialGrid::default_for(3).unwrap()
    }

    #[test]
    fn polynomial_layer_is_consistent() {
        assert_eq!(q(0.0), 1.0);
        assert!(q(1.0).abs() < 1e-12);
        assert!((q1(0.0) - 1.0).abs() < 1e-15 && q1(1.0).abs() < 1e-12);
        assert!(q2(1.0).abs() < 1e-9 && q3(1.0).abs() < 1e-9);
        assert_relative_eq!(0.5 + q_int(1.0), 31.0 / 28.0, max_relative = 1e-14);
        // derivatives agree with differences
        let h = 1e-6;
        for s in [0.1, 0.4, 0.77] {
            assert_relative_eq!((q(s + h) - q(s - h)) / (2.0 * h), q1(s), max_relative = 1e-7);
            assert_relative_eq!((q1(s + h) - q1(s - h)) / (2.0 * h), q2(s), max_relative = 1e-6);
            assert_relative_eq!((q2(s + h) - q2(s - h)) / (2.0 * h), q3(s), max_relative = 1e-6);
            assert_relative_eq!((q_int(s + h) - q_int(s - h)) / (2.0 * h), q(s), max_relative = 1e-7);
        }
    }

    #[test]
    fn psi_regions() {
        let r_big = 5.0;
        let p = psi_at(r_big, 2.5);
        assert_eq!(p.psi, 2.5 * 2.5 / 2.0);
        assert_eq!(p.d2, 1.0);
        let far = psi_at(r_big, 11.0);
        assert_eq!((far.d1, far.d2, far.d3, far.d4), (0.0, 0.0, 0.0, 0.0));
        assert_relative_eq!(far.psi, 31.0 / 28.0 * 25.0, max_relative = 1e-14);
        // C⁴ across r = R
        let a = psi_at(r_big, r_big * (1.0 - 1e-9));
        let b = psi_at(r_big, r_big * (1.0 + 1e-9));
        assert!((a.psi - b.psi).abs() < 1e-7 && (a.d1 - b.d1).abs() < 1e-7 && (a.d2 - b.d2).abs() < 1e-7);
    }

    #[test]
    fn certificates_on_default_grid() {
        for r_big in [5.0, 8.0, 10.0] {
            let p = make_psi(r_big, grid()).unwrap();
            assert!(p.certificate().holds());
            // Δ²ψ vanishes on the parabolic core
            for (i, r) in p.grid().radii().enumerate() {
                if r < r_big {
                    assert!(p.bilaplacian_psi[i].abs() < 1e-9);
                    assert_relative_eq!(p.laplacian_psi[i], 3.0, max_relative = 1e-14);
                }
            }
        }
        assert!(make_psi(15.0, grid()).is_err());
        assert!(make_psi(-1.0, grid()).is_err());
    }

    #[test]
    fn virial_m_properties() {
        let g = grid();
        let p = make_psi(8.0, g).unwrap();
        let real = Field::from_real_fn(g, |r| (-r * r / 2.0).exp()).unwrap();
        assert_eq!(virial_m(&real, &p).unwrap(), 0.0);
        let moving = Field::from_fn(g, |r| Complex64::from_polar((-r * r / 2.0).exp(), r)).unwrap();
        let m = virial_m(&moving, &p).unwrap();
        assert_relative_eq!(virial_m(&moving.with_phase(0.7), &p).unwrap(), m, max_relative = 1e-12);
        // e^{ir}g: M = 2∫g²ψ′ dx
        let oracle: Vec<f64> = g.radii().map(|r| 2.0 * (-r * r).exp() * psi_at(8.0, r).d1).collect();
        assert_relative_eq!(m, g.integrate(&oracle).unwrap(), max_relative = 1e-4);
    }

    #[test]
    fn virial_forms_on_core_supported_fields() {
        let g = grid();
        let p = make_psi(10.0, g).unwrap();
        let z = SampledPotential::zero(g);
        let u = Field::from_real_fn(g, |r| 0.8 * (-r * r).exp()).unwrap();
        let h = virial_rhs_hessian(&u, &z, &p).unwrap();
        assert_relative_eq!(h.total, parabolic_virial_reference(&u), max_relative = 1e-8);
        let pf = virial_rhs_laplacian(&u, &z, &p).unwrap();
        assert_relative_eq!(pf.kinetic, 12.0 * grad_norm_sq(&u), max_relative = 1e-8);
        assert_eq!(virial_rhs_hessian(&Field::zeros(g), &z, &p).unwrap().total, 0.0);
        assert_eq!(virial_rhs_laplacian(&Field::zeros(g), &z, &p).unwrap().total, 0.0);
    }

    #[test]
    fn strichartz_basics() {
        assert_eq!(strichartz_exponent(3), 10.0);
        assert_relative_eq!(strichartz_companion_exponent(3), 30.0 / 13.0);
        let g = RadialGrid::new(3, 10.0, 255).unwrap();
        let snaps = vec![(0.0, Field::zeros(g)), (0.5, Field::zeros(g)), (1.0, Field::zeros(g))];
        assert_eq!(strichartz_accumulate(&snaps), 0.0);
    }

    fn record(t: f64, accum: f64, energy: f64, grad_sq: f64) -> TrajectoryRecord {
        TrajectoryRecord {
            t,
            mass: 1.0,
            energy,
            grad_sq,
            virial_m: -t,
            virial_dm_fd: None,
            strichartz_accum: accum,
            h1_vs_linear: None,
            critical_integral: 0.5 * grad_sq,
            boundary_fraction: 0.0,
        }
    }

    #[test]
    fn strichartz_saturation_ratio() {
        let linear: Vec<_> = (0..=10).map(|i| record(i as f64, i as f64, 1.0, 1.0)).collect();
        assert_relative_eq!(strichartz_saturation(&linear).unwrap(), 1.0, max_relative = 1e-12);
        let saturating: Vec<_> = (0..=10).map(|i| record(i as f64, 1.0 - (-(i as f64)).exp(), 1.0, 1.0)).collect();
        assert!(strichartz_saturation(&saturating).unwrap() < 0.01);
        assert!(strichartz_saturation(&linear[..2]).is_none());
    }

    #[test]
    fn trapping_and_slopes_on_synthetic_records() {
        let th = Threshold { energy: 4.0, grad_sq: 12.0 };
        let below: Vec<_> = (0..5).map(|i| record(i as f64, 0.0, 2.0, 6.0)).collect();
        let rep = trapping_check(&below, &th);
        assert!(rep.all_hold());
        assert_relative_eq!(rep.delta0, 0.5);
        assert_relative_eq!(rep.delta1, 0.5);
        let above: Vec<_> = (0..5).map(|i| record(i as f64, 0.0, 5.0, 13.0)).collect();
        let rep = trapping_check(&above, &th);
        assert!(rep.hypothesis_violated && !rep.all_hold());
        assert!(!trapping_check(&[], &th).all_hold());

        let s = virial_slope_check(&below, -1.0).unwrap();
        assert!(s.slopes_negative && s.all_negative);
        assert_relative_eq!(s.fitted_slope, -1.0, max_relative = 1e-12);
        assert!(s.below_half_line);
        assert!(virial_slope_check(&below[..2], -1.0).is_err());
    }
}
