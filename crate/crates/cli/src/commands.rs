//! The five subcommands. Each writes its data files into the output
//! directory plus a `<command>.meta.toml` sidecar; data files carry no
//! timestamps, so identical inputs give identical bytes.

use std::fmt::Write as _;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::PathBuf;
use std::time::{Instant, SystemTime, UNIX_EPOCH};

use critnls::classifier::{sweep, sweep_csv, Outcome, SweepCell, SweepRow, Verdict};
use critnls::diagnostics::make_psi;
use critnls::evolution::{bubble_data, evolve, gaussian_data, scaled_profile_data, TrajectoryRecord, CSV_HEADER};
use critnls::exec::{with_thread_cap, Execution};
use critnls::grid::Field;
use critnls::groundstate::{find_ground_state, ground_state_at, threshold, GroundState};
use critnls::potentials::{certify, kato_norm_quadrature, lq_norm_quadrature, sample_potential, YukawaPotential};
use serde::Serialize;

use crate::cache::{self, CacheRow};
use crate::config::{InitialKind, RunConfig};
use crate::{CliError, Status};

pub const CACHE_FILE: &str = "ground_state.cache";
pub const THREADS_ENV: &str = "CRITNLS_NUM_THREADS";

/// Settings shared by every subcommand.
#[derive(Debug, Clone)]
pub struct Context {
    pub config_path: PathBuf,
    pub config: RunConfig,
    pub out: PathBuf,
    pub seed: Option<u64>,
    pub quiet: bool,
    pub threads: Option<usize>,
}

impl Context {
    /// `out` overrides the directory named in the config.
    pub fn new(config_path: PathBuf, out: Option<PathBuf>, seed: Option<u64>, quiet: bool, threads: Option<usize>) -> Result<Self, CliError> {
        let config = RunConfig::load(&config_path)?;
        let out = out.unwrap_or_else(|| config.output.dir.clone());
        Ok(Self { config_path, config, out, seed, quiet, threads })
    }

    fn say(&self, text: &str) {
        if !self.quiet {
            println!("{text}");
        }
    }
}

/// Parses the thread cap from the environment value.
pub fn threads_from_env(value: Option<&str>) -> Result<Option<usize>, CliError> {
    match value {
        None => Ok(None),
        Some(v) => match v.trim().parse::<usize>() {
            Ok(n) if n > 0 => Ok(Some(n)),
            _ => Err(CliError::Usage(format!("{THREADS_ENV} must be a positive integer, got {v:?}"))),
        },
    }
}

#[derive(Serialize)]
struct Meta<'a> {
    command: &'a str,
    version: &'a str,
    config_path: String,
    seed: Option<u64>,
    threads: Option<usize>,
    parallel_build: bool,
    started_unix: u64,
    wall_seconds: f64,
    status: &'a str,
    files: Vec<String>,
    config: String,
}

/// Collects written files and emits the sidecar at the end.
struct Outputs<'a> {
    ctx: &'a Context,
    command: &'a str,
    files: Vec<String>,
    started: Instant,
    started_unix: u64,
}

impl<'a> Outputs<'a> {
    fn new(ctx: &'a Context, command: &'a str) -> Result<Self, CliError> {
        std::fs::create_dir_all(&ctx.out).map_err(|e| CliError::Io(format!("{}: {e}", ctx.out.display())))?;
        let started_unix = SystemTime::now().duration_since(UNIX_EPOCH).map_or(0, |d| d.as_secs());
        Ok(Self { ctx, command, files: Vec::new(), started: Instant::now(), started_unix })
    }

    fn path(&mut self, name: &str) -> PathBuf {
        if !self.files.iter().any(|f| f == name) {
            self.files.push(name.to_string());
        }
        self.ctx.out.join(name)
    }

    fn write(&mut self, name: &str, text: &str) -> Result<(), CliError> {
        let p = self.path(name);
        std::fs::write(&p, text).map_err(|e| CliError::Io(format!("{}: {e}", p.display())))
    }

    fn finish(self, status: &str) -> Result<(), CliError> {
        let meta = Meta {
            command: self.command,
            version: env!("CARGO_PKG_VERSION"),
            config_path: self.ctx.config_path.display().to_string(),
            seed: self.ctx.seed,
            threads: self.ctx.threads,
            parallel_build: Execution::parallel_available(),
            started_unix: self.started_unix,
            wall_seconds: self.started.elapsed().as_secs_f64(),
            status,
            files: self.files,
            config: self.ctx.config.to_canonical(),
        };
        let text = toml::to_string(&meta).map_err(|e| CliError::Io(e.to_string()))?;
        let p = self.ctx.out.join(format!("{}.meta.toml", self.command));
        std::fs::write(&p, text).map_err(|e| CliError::Io(format!("{}: {e}", p.display())))
    }
}

fn e12(x: f64) -> String {
    format!("{x:.12e}")
}

fn key_value_csv(rows: &[(String, String)]) -> String {
    let mut s = String::from("key,value\n");
    for (k, v) in rows {
        let _ = writeln!(s, "{k},{v}");
    }
    s
}

fn rel_diff(a: f64, b: f64) -> f64 {
    if a == b {
        0.0
    } else {
        (a - b).abs() / b.abs().max(a.abs())
    }
}

pub fn potential_info(ctx: &Context) -> Result<Status, CliError> {
    let cfg = &ctx.config;
    let p = cfg.potential()?;
    let grid = cfg.grid()?;
    let mut out = Outputs::new(ctx, "potential-info")?;
    let cert = certify(&p)?;
    let q = p.dim as f64 / 2.0;
    let kq = kato_norm_quadrature(&p, grid.r_max());
    let lq = if cert.lq_norm.is_finite() { lq_norm_quadrature(&p, q)? } else { f64::INFINITY };
    let mut rows: Vec<(String, String)> = vec![
        ("dim".into(), p.dim.to_string()),
        ("c".into(), e12(p.c)),
        ("sigma".into(), e12(p.sigma)),
        ("a".into(), e12(p.a)),
        ("kato_norm_closed".into(), e12(cert.kato_norm)),
        ("kato_norm_quadrature".into(), e12(kq.value)),
        ("kato_norm_rel_diff".into(), e12(rel_diff(kq.value, cert.kato_norm))),
        ("kato_norm_negative_part".into(), e12(cert.kato_norm_negative_part)),
        ("lq_norm_closed".into(), e12(cert.lq_norm)),
        ("lq_norm_quadrature".into(), e12(lq)),
        ("lq_norm_rel_diff".into(), e12(rel_diff(lq, cert.lq_norm))),
        ("lq_norm_negative_part".into(), e12(cert.lq_norm_negative_part)),
        ("threshold".into(), e12(cert.threshold)),
        ("margin".into(), e12(cert.margin)),
        ("admissible".into(), cert.admissible.to_string()),
    ];
    for &r in &cfg.diagnostics.virial_radii {
        let c = make_psi(r, grid)?.certificate();
        rows.push((format!("psi_R{r}_margin_second"), e12(c.second)));
        rows.push((format!("psi_R{r}_margin_slope"), e12(c.slope)));
        rows.push((format!("psi_R{r}_margin_laplacian"), e12(c.laplacian)));
        rows.push((format!("psi_R{r}_holds"), c.holds().to_string()));
    }
    out.write("potential_info.csv", &key_value_csv(&rows))?;
    let width = rows.iter().map(|(k, _)| k.len()).max().unwrap_or(0);
    ctx.say(&rows.iter().map(|(k, v)| format!("{k:<width$}  {v}")).collect::<Vec<_>>().join("\n"));
    let status = if cert.admissible { Status::Success } else { Status::Negative };
    out.finish(if cert.admissible { "admissible" } else { "inadmissible" })?;
    Ok(status)
}

fn cache_probe(p: &YukawaPotential, ctx: &Context) -> CacheRow {
    let g = &ctx.config.grid;
    CacheRow {
        dim: p.dim,
        c: p.c,
        sigma: p.sigma,
        a: p.a,
        r_max: g.r_max,
        m: g.m,
        shoot_amplitude: 0.0,
        energy: 0.0,
        grad_sq: 0.0,
        pohozaev: 0.0,
        nehari: 0.0,
        iterations: 0,
    }
}

/// Ground state from the cache when present, otherwise by search. The
/// second value says whether the cache was used.
fn ground_state(ctx: &Context, p: &YukawaPotential) -> Result<(GroundState, bool), CliError> {
    let grid = ctx.config.grid()?;
    let path = ctx.out.join(CACHE_FILE);
    let probe = cache_probe(p, ctx);
    if let Some(row) = cache::lookup(&path, &probe)? {
        return Ok((ground_state_at(p, grid, row.shoot_amplitude, row.iterations)?, true));
    }
    Ok((find_ground_state(p, grid, ctx.config.diagnostics.bracket_tol)?, false))
}

pub fn ground_state_cmd(ctx: &Context) -> Result<Status, CliError> {
    let cfg = &ctx.config;
    let p = cfg.potential()?;
    let mut out = Outputs::new(ctx, "ground-state")?;
    let (gs, cached) = match ground_state(ctx, &p) {
        Ok(x) => x,
        Err(e) => {
            eprintln!("ground state search failed: {e}");
            out.finish("no_ground_state")?;
            return Ok(Status::Negative);
        }
    };
    let sampled = sample_potential(&p, *gs.profile.grid())?;
    let th = threshold(&gs, &sampled)?;
    let accepted = gs.accepted(cfg.diagnostics.ground_state_tol);
    let row = CacheRow {
        shoot_amplitude: gs.shoot_amplitude,
        energy: gs.energy,
        grad_sq: gs.grad_sq,
        pohozaev: gs.pohozaev_residual,
        nehari: gs.nehari_residual,
        iterations: gs.iterations,
        ..cache_probe(&p, ctx)
    };
    if accepted {
        let path = out.path(CACHE_FILE);
        cache::store(&path, row)?;
    }
    let rows: Vec<(String, String)> = vec![
        ("shoot_amplitude".into(), e12(gs.shoot_amplitude)),
        ("energy".into(), e12(gs.energy)),
        ("grad_sq".into(), e12(gs.grad_sq)),
        ("threshold_energy".into(), e12(th.energy)),
        ("pohozaev_residual".into(), e12(gs.pohozaev_residual)),
        ("nehari_residual".into(), e12(gs.nehari_residual)),
        ("relative_residual_limit".into(), e12(cfg.diagnostics.ground_state_tol * gs.grad_sq)),
        ("accepted".into(), accepted.to_string()),
        ("monotone".into(), gs.is_monotone().to_string()),
        ("bisections".into(), gs.iterations.to_string()),
    ];
    out.write("ground_state.csv", &key_value_csv(&rows))?;
    let mut profile = String::from("r,W\n");
    let g = gs.profile.grid();
    for (i, w) in gs.profile.values().iter().enumerate() {
        let _ = writeln!(profile, "{},{}", e12(g.radius(i)), e12(w.re));
    }
    out.write("ground_state_profile.csv", &profile)?;
    let width = rows.iter().map(|(k, _)| k.len()).max().unwrap_or(0);
    let mut report: Vec<String> = rows.iter().map(|(k, v)| format!("{k:<width$}  {v}")).collect();
    report.push(format!("{:<width$}  {}", "source", if cached { "cache" } else { "search" }));
    ctx.say(&report.join("\n"));
    out.finish(if accepted { "accepted" } else { "rejected" })?;
    Ok(if accepted { Status::Success } else { Status::Negative })
}

fn initial_data(ctx: &Context, p: &YukawaPotential) -> Result<Field, CliError> {
    let cfg = &ctx.config;
    let grid = cfg.grid()?;
    let init = &cfg.initial;
    let width = init.width.unwrap_or(1.0);
    Ok(match init.kind {
        InitialKind::Gaussian => gaussian_data(grid, init.amplitude, width)?,
        InitialKind::Bubble => bubble_data(grid, init.amplitude, width)?,
        InitialKind::ScaledGroundState => scaled_profile_data(&ground_state(ctx, p)?.0.profile, init.amplitude)?,
    })
}

const SERIES: [(&str, fn(&TrajectoryRecord) -> f64); 5] = [
    ("mass", |r| r.mass),
    ("energy", |r| r.energy),
    ("grad_sq", |r| r.grad_sq),
    ("virial_M", |r| r.virial_m),
    ("strichartz_accum", |r| r.strichartz_accum),
];

fn write_series(out: &mut Outputs, records: &[TrajectoryRecord]) -> Result<(), CliError> {
    if !out.ctx.config.output.plot_data {
        return Ok(());
    }
    for (name, get) in SERIES {
        let mut s = format!("# t {name}\n");
        for r in records {
            let _ = writeln!(s, "{} {}", e12(r.t), e12(get(r)));
        }
        out.write(&format!("series_{name}.dat"), &s)?;
    }
    Ok(())
}

pub fn evolve_cmd(ctx: &Context) -> Result<Status, CliError> {
    let cfg = &ctx.config;
    let p = cfg.potential()?;
    let grid = cfg.grid()?;
    let v = sample_potential(&p, grid)?;
    let u0 = initial_data(ctx, &p)?;
    let mut out = Outputs::new(ctx, "evolve")?;
    let path = out.path("trajectory.csv");
    let file = File::create(&path).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
    let mut w = BufWriter::new(file);
    let io = |e: std::io::Error| CliError::Io(format!("{}: {e}", path.display()));
    writeln!(w, "{CSV_HEADER},status").map_err(io)?;
    // rows are written as they arrive and flushed so that a crash keeps
    // them; the last one is held back to carry the termination status
    let mut held: Option<TrajectoryRecord> = None;
    let mut write_err: Option<std::io::Error> = None;
    let mut ecfg = cfg.evolution_config();
    ecfg.track_linear = cfg.evolution.track_linear;
    let result = evolve(&u0, &v, &ecfg, |r| {
        if let Some(prev) = held.replace(*r) {
            if let Err(e) = writeln!(w, "{},running", prev.csv_row()).and_then(|_| w.flush()) {
                write_err.get_or_insert(e);
            }
        }
    });
    if let Some(e) = write_err {
        return Err(io(e));
    }
    let run = match result {
        Ok(run) => run,
        Err(e) => {
            if let Some(prev) = held {
                writeln!(w, "{},error", prev.csv_row()).map_err(io)?;
            }
            w.flush().map_err(io)?;
            out.finish("error")?;
            return Err(e.into());
        }
    };
    if let Some(last) = held {
        writeln!(w, "{},{}", last.csv_row(), run.termination).map_err(io)?;
    }
    w.flush().map_err(io)?;
    drop(w);
    write_series(&mut out, &run.records)?;
    let first = run.records[0];
    let last = run.records[run.records.len() - 1];
    let drift = |a: f64, b: f64| if b != 0.0 { (a - b).abs() / b.abs() } else { (a - b).abs() };
    ctx.say(&format!(
        "termination      {}\nfinal_time       {}\nrecords          {}\nmass_drift       {}\nenergy_drift     {}\ngrad_ratio       {}\nboundary_growth  {}",
        run.termination,
        e12(run.final_time),
        run.records.len(),
        e12(drift(last.mass, first.mass)),
        e12(drift(last.energy, first.energy)),
        e12(if first.grad_sq > 0.0 { last.grad_sq / first.grad_sq } else { 0.0 }),
        e12(run.boundary_growth),
    ));
    let status = run.termination.to_string();
    out.finish(&status)?;
    Ok(match run.termination {
        critnls::evolution::Termination::NumericalBreakdown => Status::Negative,
        _ => Status::Success,
    })
}

fn sweep_rows(ctx: &Context, cells: &[SweepCell]) -> Result<Vec<SweepRow>, CliError> {
    let cfg = &ctx.config;
    let grid = cfg.grid()?;
    let dcfg = cfg.dichotomy_config();
    Ok(with_thread_cap(ctx.threads, || sweep(cells, grid, &dcfg, Execution::Parallel)))
}

fn outcome_dat(rows: &[SweepRow]) -> String {
    let mut s = String::new();
    let mut current: Option<YukawaPotential> = None;
    for row in rows {
        if current != Some(row.cell.potential) {
            if current.is_some() {
                s.push_str("\n\n");
            }
            let p = row.cell.potential;
            let _ = writeln!(s, "# c={} sigma={} a={} dim={}\n# amplitude outcome_code", p.c, p.sigma, p.a, p.dim);
            current = Some(p);
        }
        let code = row.verdict.as_ref().map_or("nan".to_string(), |v: &Verdict| v.outcome.code().to_string());
        let _ = writeln!(s, "{} {code}", e12(row.cell.amplitude));
    }
    s
}

fn summary(rows: &[SweepRow]) -> String {
    rows.iter()
        .map(|r| {
            let what = match &r.verdict {
                Ok(v) => match &v.reason {
                    Some(why) => format!("{} ({why})", v.outcome),
                    None => v.outcome.to_string(),
                },
                Err(e) => format!("error: {e}"),
            };
            format!("c={:<8} amplitude={:<10} {what}", r.cell.potential.c, r.cell.amplitude)
        })
        .collect::<Vec<_>>()
        .join("\n")
}

pub fn classify_cmd(ctx: &Context) -> Result<Status, CliError> {
    let cfg = &ctx.config;
    let cell = SweepCell { potential: cfg.potential()?, amplitude: cfg.initial.amplitude, shape: cfg.shape() };
    let mut out = Outputs::new(ctx, "classify")?;
    let rows = sweep_rows(ctx, &[cell])?;
    out.write("verdict.csv", &sweep_csv(&rows))?;
    if cfg.output.plot_data {
        out.write("outcome.dat", &outcome_dat(&rows))?;
    }
    ctx.say(&summary(&rows));
    match &rows[0].verdict {
        Ok(v) => {
            write_series(&mut out, &v.records)?;
            out.finish(&v.outcome.to_string())?;
            Ok(Status::Success)
        }
        Err(e) => {
            eprintln!("classification failed: {e}");
            out.finish("error")?;
            Ok(Status::Negative)
        }
    }
}

pub fn sweep_cmd(ctx: &Context) -> Result<Status, CliError> {
    let cfg = &ctx.config;
    let section = cfg.sweep.as_ref().ok_or_else(|| CliError::Usage("config: the sweep command needs a [sweep] section".into()))?;
    let shape = cfg.shape();
    let cells: Vec<SweepCell> = cfg
        .sweep_potentials()?
        .into_iter()
        .flat_map(|potential| section.amplitudes.iter().map(move |&amplitude| SweepCell { potential, amplitude, shape }))
        .collect();
    let mut out = Outputs::new(ctx, "sweep")?;
    let rows = sweep_rows(ctx, &cells)?;
    out.write("sweep.csv", &sweep_csv(&rows))?;
    if cfg.output.plot_data {
        out.write("outcomes.dat", &outcome_dat(&rows))?;
    }
    ctx.say(&summary(&rows));
    let failed = rows.iter().filter(|r| r.verdict.is_err()).count();
    let undecided = rows.iter().filter(|r| matches!(&r.verdict, Ok(v) if v.outcome == Outcome::Undecided)).count();
    ctx.say(&format!("cells {}  failed {failed}  undecided {undecided}", rows.len()));
    out.finish(if failed == 0 { "ok" } else { "cell_failures" })?;
    Ok(if failed == 0 { Status::Success } else { Status::Negative })
}

/// Cache location used by the commands for `ctx`.
pub fn cache_path(ctx: &Context) -> PathBuf {
    ctx.out.join(CACHE_FILE)
}
