//! Scattering / blow-up classification of radial initial data.

use std::fmt;

use crate::diagnostics::{strichartz_saturation, trapping_check, virial_slope_check, TrappingReport};
use crate::error::{Error, Result};
use crate::evolution::{evolve, scaled_profile_data, bubble_data, gaussian_data, EvolutionConfig, Splitting, Termination, TrajectoryRecord};
use crate::exec::Execution;
use crate::grid::{grad_norm_sq, h1_norm_sq, Field, RadialGrid};
use crate::groundstate::{find_ground_state, sobolev_constant, static_energy, threshold, GroundState, Threshold, DEFAULT_BRACKET_TOL};
use crate::potentials::{certify, sample_potential, PotentialCertificate, SampledPotential, YukawaPotential};

/// Relative energy drift (against `max(|E0|, ‖∇u0‖²)`) beyond which a
/// trajectory record is no longer considered resolved.
pub const RESOLVED_ENERGY_TOL: f64 = 1e-3;

/// Leading records whose energy stays within [`RESOLVED_ENERGY_TOL`] of the
/// initial energy.
pub fn resolved_prefix(records: &[TrajectoryRecord]) -> &[TrajectoryRecord] {
    let Some(first) = records.first() else { return records };
    let scale = first.energy.abs().max(first.grad_sq).max(f64::MIN_POSITIVE);
    let n = records
        .iter()
        .position(|r| !((r.energy - first.energy).abs() <= RESOLVED_ENERGY_TOL * scale))
        .unwrap_or(records.len());
    &records[..n]
}

/// Residual drop factor required for scattering evidence.
pub const RESIDUAL_DROP: f64 = 2.0;

/// Largest second-half / first-half Strichartz increment ratio counted as
/// saturation.
pub const SATURATION_MAX: f64 = 0.5;

/// Everything derived from a potential on a grid that classification needs.
#[derive(Debug, Clone)]
pub struct Setup {
    pub potential: YukawaPotential,
    pub sampled: SampledPotential,
    pub certificate: PotentialCertificate,
    pub ground_state: GroundState,
    pub threshold: Threshold,
    pub sobolev: f64,
}

impl Setup {
    /// Certifies `potential`, finds its ground state and the threshold.
    pub fn new(potential: YukawaPotential, grid: RadialGrid) -> Result<Self> {
        let certificate = certify(&potential)?;
        if !certificate.admissible {
            return Err(Error::Precondition(format!("potential is not admissible (margin {:e})", certificate.margin)));
        }
        let sampled = sample_potential(&potential, grid)?;
        let ground_state = find_ground_state(&potential, grid, DEFAULT_BRACKET_TOL)?;
        let threshold = threshold(&ground_state, &sampled)?;
        Ok(Self { potential, sampled, certificate, ground_state, threshold, sobolev: sobolev_constant(grid) })
    }

    pub fn grid(&self) -> &RadialGrid {
        self.sampled.grid()
    }
}

/// Structural hypotheses on the potential needed for the scattering
/// half of the dichotomy.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct HypothesisFlags {
    /// `V` is continuous (bounded at the origin).
    pub continuous: bool,
    /// `x·∇V ≤ 0` everywhere.
    pub radially_nonincreasing: bool,
    /// `‖V₋‖_{N/2} ≤ S`.
    pub negative_part_small: bool,
    pub admissible: bool,
}

impl HypothesisFlags {
    pub fn all(&self) -> bool {
        self.continuous && self.radially_nonincreasing && self.negative_part_small && self.admissible
    }
}

/// Where the initial data sits relative to the threshold.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RegimeFlags {
    pub energy: f64,
    pub grad_sq: f64,
    /// `E(u₀) < 0`.
    pub energy_negative: bool,
    /// `E(u₀) < E_W` and `‖∇u₀‖² < ‖∇W‖²`.
    pub below_threshold: bool,
    pub hypotheses: HypothesisFlags,
}

/// Relative slack below which a quantity counts as equal to its threshold.
const THRESHOLD_TOL: f64 = 1e-9;

pub fn classify_initial(u0: &Field, setup: &Setup) -> Result<RegimeFlags> {
    let energy = static_energy(u0, &setup.sampled)?;
    let grad_sq = grad_norm_sq(u0);
    let th = setup.threshold;
    let p = &setup.potential;
    let hypotheses = HypothesisFlags {
        continuous: p.c == 0.0,
        radially_nonincreasing: p.c >= 0.0,
        negative_part_small: setup.certificate.lq_norm_negative_part <= setup.sobolev,
        admissible: setup.certificate.admissible,
    };
    Ok(RegimeFlags {
        energy,
        grad_sq,
        energy_negative: energy < 0.0,
        below_threshold: energy < th.energy - THRESHOLD_TOL * th.energy.abs()
            && grad_sq < th.grad_sq * (1.0 - THRESHOLD_TOL),
        hypotheses,
    })
}

/// Undoes the linear part of [`evolve`]'s step structure from time zero to
/// `steps·cfg.dt`, chunk by chunk in reverse, so that with the
/// nonlinearity switched off the result is `u₀` up to round-off.
fn back_propagate(u: &Field, v: &SampledPotential, cfg: &EvolutionConfig, steps: usize) -> Result<Field> {
    let back = Splitting::new(v, -cfg.dt, false)?;
    let mut out = u.clone();
    let mut chunks = Vec::new();
    let mut done = 0;
    while done < steps {
        let n = cfg.record_stride.min(steps - done);
        chunks.push(n);
        done += n;
    }
    let mut vals = out.clone().into_values();
    for n in chunks.into_iter().rev() {
        back.advance(&mut vals, n);
    }
    out = Field::from_values(*u.grid(), vals)?;
    Ok(out)
}

/// `‖w(t_{k+1}) − w(t_k)‖_{H¹}` for consecutive snapshots, where `w(t)` is
/// `u(t)` carried back to time zero by the linear flow. Snapshots must come
/// from [`evolve`] with `cfg`, at record times.
pub fn scattering_residual(snapshots: &[(f64, Field)], v: &SampledPotential, cfg: &EvolutionConfig, exec: Execution) -> Result<Vec<f64>> {
    if snapshots.len() < 3 {
        return Err(Error::TooFewSamples { needed: 3, got: snapshots.len() });
    }
    if snapshots.windows(2).any(|w| w[1].0 <= w[0].0) {
        return Err(Error::Precondition("snapshot times must increase".into()));
    }
    let back: Vec<Result<Field>> = exec.map(snapshots, |(t, u)| {
        let steps = (t / cfg.dt).round() as usize;
        back_propagate(u, v, cfg, steps)
    });
    let back = back.into_iter().collect::<Result<Vec<_>>>()?;
    back.windows(2).map(|w| Ok(h1_norm_sq(&w[1].sub(&w[0])?).sqrt())).collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Outcome {
    ScatteringEvidence,
    BlowUpEvidence,
    Undecided,
}

impl Outcome {
    /// Plot code: −1 scattering, 0 undecided, 1 blow-up.
    pub fn code(self) -> i32 {
        match self {
            Outcome::ScatteringEvidence => -1,
            Outcome::Undecided => 0,
            Outcome::BlowUpEvidence => 1,
        }
    }
}

impl fmt::Display for Outcome {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Outcome::ScatteringEvidence => "scattering",
            Outcome::BlowUpEvidence => "blowup",
            Outcome::Undecided => "undecided",
        })
    }
}

impl fmt::Display for Termination {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Termination::Completed => "completed",
            Termination::BlowupDetected => "blowup_detected",
            Termination::NumericalBreakdown => "numerical_breakdown",
        })
    }
}

/// Measurements behind a verdict.
#[derive(Debug, Clone, PartialEq)]
pub struct Evidence {
    /// `‖∇u(t_final)‖² / ‖∇u₀‖²`.
    pub final_grad_ratio: f64,
    /// See [`strichartz_saturation`].
    pub strichartz_saturation: Option<f64>,
    pub residuals: Vec<f64>,
    /// First residual over last residual.
    pub residual_drop: Option<f64>,
    pub virial_slopes_negative: bool,
    pub virial_below_half_line: bool,
    pub trapping_holds: Option<bool>,
    pub boundary_growth: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Verdict {
    pub outcome: Outcome,
    pub flags: RegimeFlags,
    pub termination: Termination,
    pub final_time: f64,
    pub evidence: Evidence,
    /// Why the run ended undecided.
    pub reason: Option<String>,
    /// The trajectory the verdict was read from.
    pub records: Vec<TrajectoryRecord>,
}

/// Evolution settings for [`run_dichotomy`].
#[derive(Debug, Clone, PartialEq)]
pub struct DichotomyConfig {
    pub evolution: EvolutionConfig,
    /// Snapshots used for the scattering residual (at least 3).
    pub residual_samples: usize,
}

impl Default for DichotomyConfig {
    fn default() -> Self {
        Self { evolution: EvolutionConfig { dt: 1e-3, t_end: 4.0, record_stride: 20, ..Default::default() }, residual_samples: 8 }
    }
}

/// Evolves `u0` and weighs the evidence for scattering or blow-up.
pub fn run_dichotomy(u0: &Field, setup: &Setup, cfg: &DichotomyConfig) -> Result<Verdict> {
    run_dichotomy_with(u0, setup, cfg, Execution::Sequential)
}

/// [`run_dichotomy`] with the residual back-propagation spread over `exec`.
pub fn run_dichotomy_with(u0: &Field, setup: &Setup, cfg: &DichotomyConfig, exec: Execution) -> Result<Verdict> {
    if cfg.residual_samples < 3 {
        return Err(Error::Config(format!("residual_samples must be at least 3, got {}", cfg.residual_samples)));
    }
    let flags = classify_initial(u0, setup)?;
    let total = cfg.evolution.steps()?;
    let n_records = total.div_ceil(cfg.evolution.record_stride);
    let mut ecfg = cfg.evolution.clone();
    ecfg.snapshot_every = (n_records / (cfg.residual_samples - 1)).max(1);
    let run = evolve(u0, &setup.sampled, &ecfg, |_| {})?;

    let grad0 = run.records[0].grad_sq;
    let last = run.records[run.records.len() - 1];
    // near collapse the profile drops below grid scale and energy stops
    // being conserved; the virial evidence uses only the resolved prefix
    let resolved = resolved_prefix(&run.records);
    let slope = virial_slope_check(resolved, flags.energy).ok();
    let mut ev = Evidence {
        final_grad_ratio: if grad0 > 0.0 { last.grad_sq / grad0 } else { 0.0 },
        strichartz_saturation: strichartz_saturation(&run.records),
        residuals: Vec::new(),
        residual_drop: None,
        virial_slopes_negative: slope.as_ref().is_some_and(|s| s.slopes_negative),
        virial_below_half_line: slope.as_ref().is_some_and(|s| s.below_half_line),
        trapping_holds: None,
        boundary_growth: run.boundary_growth,
    };
    let verdict = |outcome, reason: Option<String>, ev: Evidence| Verdict {
        outcome,
        flags,
        termination: run.termination,
        final_time: run.final_time,
        evidence: ev,
        reason,
        records: run.records.clone(),
    };

    if run.boundary_contaminated() {
        let why = format!("mass reached the outer shell (growth {:.3e})", run.boundary_growth);
        return Ok(verdict(Outcome::Undecided, Some(why), ev));
    }
    match run.termination {
        Termination::NumericalBreakdown => Ok(verdict(Outcome::Undecided, Some("numerical breakdown".into()), ev)),
        Termination::BlowupDetected => {
            if ev.virial_slopes_negative {
                Ok(verdict(Outcome::BlowUpEvidence, None, ev))
            } else if slope.is_none() {
                let why = format!("collapse within {} resolved records; shorten dt or record_stride", resolved.len());
                Ok(verdict(Outcome::Undecided, Some(why), ev))
            } else {
                Ok(verdict(Outcome::Undecided, Some("gradient growth without a decreasing virial".into()), ev))
            }
        }
        Termination::Completed => {
            let trap: TrappingReport = trapping_check(&run.records, &setup.threshold);
            ev.trapping_holds = Some(trap.all_hold());
            if run.snapshots.len() >= 3 {
                ev.residuals = scattering_residual(&run.snapshots, &setup.sampled, &ecfg, exec)?;
                let first = ev.residuals[0];
                let lastr = ev.residuals[ev.residuals.len() - 1];
                ev.residual_drop = Some(if lastr > 0.0 { first / lastr } else if first > 0.0 { f64::INFINITY } else { 0.0 });
            }
            let mut missing = Vec::new();
            if !flags.below_threshold {
                missing.push("data not below threshold");
            }
            if ev.trapping_holds != Some(true) {
                missing.push("trapping bounds fail");
            }
            if !ev.residual_drop.is_some_and(|d| d >= RESIDUAL_DROP) {
                missing.push("residuals do not decrease");
            }
            if !ev.strichartz_saturation.is_some_and(|s| s <= SATURATION_MAX) {
                missing.push("Strichartz accumulator not saturating");
            }
            if missing.is_empty() {
                Ok(verdict(Outcome::ScatteringEvidence, None, ev))
            } else {
                Ok(verdict(Outcome::Undecided, Some(missing.join("; ")), ev))
            }
        }
    }
}

/// Shapes of initial data, scaled by the cell amplitude.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum InitialShape {
    Gaussian { width: f64 },
    Bubble { eps: f64 },
    GroundState,
}

impl InitialShape {
    /// The tapered data `amplitude · shape`.
    pub fn build(&self, amplitude: f64, setup: &Setup) -> Result<Field> {
        match *self {
            InitialShape::Gaussian { width } => gaussian_data(*setup.grid(), amplitude, width),
            InitialShape::Bubble { eps } => bubble_data(*setup.grid(), amplitude, eps),
            InitialShape::GroundState => scaled_profile_data(&setup.ground_state.profile, amplitude),
        }
    }
}

/// One sweep cell.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepCell {
    pub potential: YukawaPotential,
    pub amplitude: f64,
    pub shape: InitialShape,
}

/// Result of one cell, with the threshold it was judged against.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub cell: SweepCell,
    pub threshold: Option<Threshold>,
    pub verdict: std::result::Result<Verdict, String>,
}

/// Runs every cell, in parallel under `exec`, returning rows in input
/// order. Failures are recorded per cell.
pub fn sweep(cells: &[SweepCell], grid: RadialGrid, cfg: &DichotomyConfig, exec: Execution) -> Vec<SweepRow> {
    let mut potentials: Vec<YukawaPotential> = Vec::new();
    for c in cells {
        if !potentials.contains(&c.potential) {
            potentials.push(c.potential);
        }
    }
    let setups: Vec<std::result::Result<Setup, String>> =
        exec.map(&potentials, |p| Setup::new(*p, grid).map_err(|e| e.to_string()));
    exec.map(cells, |cell| {
        let k = potentials.iter().position(|p| *p == cell.potential).expect("potential collected above");
        match &setups[k] {
            Err(e) => SweepRow { cell: *cell, threshold: None, verdict: Err(e.clone()) },
            Ok(setup) => {
                let verdict = cell
                    .shape
                    .build(cell.amplitude, setup)
                    .and_then(|u0| run_dichotomy(&u0, setup, cfg))
                    .map_err(|e| e.to_string());
                SweepRow { cell: *cell, threshold: Some(setup.threshold), verdict }
            }
        }
    })
}

/// Header of [`sweep_csv`].
pub const SWEEP_CSV_HEADER: &str = "c,sigma,a,dim,amplitude,E0,E_W,grad0,grad_W,outcome,final_grad_ratio,strichartz_saturation,residual_drop,virial_slopes_negative,termination,final_time,note";

fn num(x: Option<f64>) -> String {
    x.map_or_else(|| "nan".to_string(), |v| format!("{v:.10e}"))
}

/// One CSV line per row, in order, after [`SWEEP_CSV_HEADER`].
pub fn sweep_csv(rows: &[SweepRow]) -> String {
    let mut out = String::from(SWEEP_CSV_HEADER);
    out.push('\n');
    for row in rows {
        let p = row.cell.potential;
        let (ew, gw) = row.threshold.map_or((None, None), |t| (Some(t.energy), Some(t.grad_sq)));
        let cells = match &row.verdict {
            Ok(v) => vec![
                num(Some(v.flags.energy)),
                num(ew),
                num(Some(v.flags.grad_sq)),
                num(gw),
                v.outcome.to_string(),
                num(Some(v.evidence.final_grad_ratio)),
                num(v.evidence.strichartz_saturation),
                num(v.evidence.residual_drop),
                v.evidence.virial_slopes_negative.to_string(),
                v.termination.to_string(),
                num(Some(v.final_time)),
                csv_text(v.reason.as_deref().unwrap_or("")),
            ],
            Err(e) => vec![
                num(None),
                num(ew),
                num(None),
                num(gw),
                "error".into(),
                num(None),
                num(None),
                num(None),
                "false".into(),
                "none".into(),
                num(None),
                csv_text(e),
            ],
        };
        out.push_str(&format!("{},{},{},{},{},{}\n", p.c, p.sigma, p.a, p.dim, row.cell.amplitude, cells.join(",")));
    }
    out
}

fn csv_text(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

/// Number of changes of outcome along the rows, ignoring failed cells.
pub fn verdict_transitions(rows: &[SweepRow]) -> usize {
    let outcomes: Vec<Outcome> = rows.iter().filter_map(|r| r.verdict.as_ref().ok().map(|v| v.outcome)).collect();
    outcomes.windows(2).filter(|w| w[0] != w[1]).count()
}
