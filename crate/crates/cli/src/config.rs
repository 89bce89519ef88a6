//! Run configuration: a sectioned TOML file parsed strictly.

use std::path::{Path, PathBuf};

use critnls::classifier::{DichotomyConfig, InitialShape};
use critnls::evolution::EvolutionConfig;
use critnls::grid::RadialGrid;
use critnls::groundstate::DEFAULT_BRACKET_TOL;
use critnls::potentials::YukawaPotential;
use serde::{Deserialize, Serialize};

use crate::CliError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub grid: GridSection,
    pub potential: PotentialSection,
    pub initial: InitialSection,
    pub evolution: EvolutionSection,
    #[serde(default)]
    pub diagnostics: DiagnosticsSection,
    #[serde(default)]
    pub output: OutputSection,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sweep: Option<SweepSection>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSection {
    pub dim: usize,
    #[serde(default = "default_r_max")]
    pub r_max: f64,
    #[serde(default = "default_nodes")]
    pub m: usize,
}

fn default_r_max() -> f64 {
    critnls::grid::DEFAULT_R_MAX
}

fn default_nodes() -> usize {
    critnls::grid::DEFAULT_NODES
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PotentialKind {
    None,
    Yukawa,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PotentialSection {
    pub kind: PotentialKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub c: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sigma: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub a: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InitialKind {
    Gaussian,
    Bubble,
    ScaledGroundState,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InitialSection {
    pub kind: InitialKind,
    pub amplitude: f64,
    /// Gaussian width or bubble concentration; unused for the ground state.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub width: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EvolutionSection {
    pub dt: f64,
    pub t_end: f64,
    #[serde(default = "default_stride")]
    pub record_stride: usize,
    #[serde(default = "default_blowup_factor")]
    pub blowup_grad_factor: f64,
    /// Record the `H¹` distance to the linear flow from the same data.
    #[serde(default)]
    pub track_linear: bool,
}

fn default_stride() -> usize {
    10
}

fn default_blowup_factor() -> f64 {
    25.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DiagnosticsSection {
    /// Cutoff radii of the virial weights. The first one drives the
    /// recorded `virial_M`; all of them are certified in reports.
    pub virial_radii: Vec<f64>,
    pub residual_samples: usize,
    pub bracket_tol: f64,
    /// Relative identity-residual tolerance for accepting a ground state.
    pub ground_state_tol: f64,
}

impl Default for DiagnosticsSection {
    fn default() -> Self {
        Self { virial_radii: vec![5.0], residual_samples: 8, bracket_tol: DEFAULT_BRACKET_TOL, ground_state_tol: 1e-4 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSection {
    pub dir: PathBuf,
    /// Also write gnuplot-ready two-column `.dat` files.
    pub plot_data: bool,
}

impl Default for OutputSection {
    fn default() -> Self {
        Self { dir: PathBuf::from("critnls-out"), plot_data: true }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSection {
    pub amplitudes: Vec<f64>,
    /// Couplings `c` swept with the `sigma` and `a` of the potential section.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub couplings: Option<Vec<f64>>,
}

impl RunConfig {
    pub fn parse(text: &str) -> Result<Self, CliError> {
        let cfg: RunConfig = toml::from_str(text).map_err(|e| CliError::Usage(format!("config: {}", e.to_string().trim_end())))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::Usage(format!("cannot read {}: {e}", path.display())))?;
        Self::parse(&text)
    }

    /// Canonical text: every default spelled out, fixed section order.
    pub fn to_canonical(&self) -> String {
        toml::to_string(self).expect("config serialises")
    }

    fn validate(&self) -> Result<(), CliError> {
        let bad = |key: &str, why: String| Err(CliError::Usage(format!("config: {key}: {why}")));
        self.grid()?;
        let p = &self.potential;
        match p.kind {
            PotentialKind::None => {
                for (k, v) in [("c", p.c), ("sigma", p.sigma), ("a", p.a)] {
                    if v.is_some() {
                        return bad(&format!("potential.{k}"), "not allowed with kind = \"none\"".into());
                    }
                }
            }
            PotentialKind::Yukawa => {
                for (k, v) in [("c", p.c), ("sigma", p.sigma), ("a", p.a)] {
                    if v.is_none() {
                        return bad(&format!("potential.{k}"), "required with kind = \"yukawa\"".into());
                    }
                }
                self.potential()?;
            }
        }
        match (self.initial.kind, self.initial.width) {
            (InitialKind::ScaledGroundState, Some(_)) => {
                return bad("initial.width", "not used with kind = \"scaled_ground_state\"".into());
            }
            (InitialKind::Gaussian | InitialKind::Bubble, None) => {
                return bad("initial.width", "required for gaussian and bubble data".into());
            }
            (_, Some(w)) if !(w.is_finite() && w > 0.0) => return bad("initial.width", format!("must be positive, got {w}")),
            _ => {}
        }
        if !self.initial.amplitude.is_finite() {
            return bad("initial.amplitude", "must be finite".into());
        }
        self.evolution_config().validate().map_err(|e| CliError::Usage(format!("config: evolution: {e}")))?;
        let d = &self.diagnostics;
        if d.virial_radii.is_empty() {
            return bad("diagnostics.virial_radii", "needs at least one radius".into());
        }
        for &r in &d.virial_radii {
            if !(r > 0.0 && 2.0 * r < self.grid.r_max) {
                return bad("diagnostics.virial_radii", format!("radius {r} must satisfy 0 < 2R < r_max"));
            }
        }
        if d.residual_samples < 3 {
            return bad("diagnostics.residual_samples", format!("must be at least 3, got {}", d.residual_samples));
        }
        if !(d.bracket_tol > 0.0) {
            return bad("diagnostics.bracket_tol", "must be positive".into());
        }
        if !(d.ground_state_tol > 0.0) {
            return bad("diagnostics.ground_state_tol", "must be positive".into());
        }
        if let Some(s) = &self.sweep {
            if s.amplitudes.is_empty() || s.amplitudes.iter().any(|a| !a.is_finite()) {
                return bad("sweep.amplitudes", "needs finite values".into());
            }
            if let Some(cs) = &s.couplings {
                if p.kind != PotentialKind::Yukawa {
                    return bad("sweep.couplings", "needs kind = \"yukawa\" in the potential section".into());
                }
                if cs.is_empty() {
                    return bad("sweep.couplings", "must not be empty".into());
                }
                for &c in cs {
                    YukawaPotential::new(c, p.sigma.unwrap_or(1.0), p.a.unwrap_or(1.0), self.grid.dim)
                        .map_err(|e| CliError::Usage(format!("config: sweep.couplings: {e}")))?;
                }
            }
        }
        Ok(())
    }

    pub fn grid(&self) -> Result<RadialGrid, CliError> {
        RadialGrid::new(self.grid.dim, self.grid.r_max, self.grid.m).map_err(|e| CliError::Usage(format!("config: grid: {e}")))
    }

    pub fn potential(&self) -> Result<YukawaPotential, CliError> {
        let p = &self.potential;
        match p.kind {
            PotentialKind::None => Ok(YukawaPotential::zero(self.grid.dim)),
            PotentialKind::Yukawa => YukawaPotential::new(p.c.unwrap_or(0.0), p.sigma.unwrap_or(1.0), p.a.unwrap_or(1.0), self.grid.dim)
                .map_err(|e| CliError::Usage(format!("config: potential: {e}"))),
        }
    }

    /// Potentials of the sweep, in order.
    pub fn sweep_potentials(&self) -> Result<Vec<YukawaPotential>, CliError> {
        let base = self.potential()?;
        match self.sweep.as_ref().and_then(|s| s.couplings.as_ref()) {
            None => Ok(vec![base]),
            Some(cs) => cs
                .iter()
                .map(|&c| YukawaPotential::new(c, base.sigma, base.a, base.dim).map_err(|e| CliError::Usage(format!("config: sweep.couplings: {e}"))))
                .collect(),
        }
    }

    pub fn shape(&self) -> InitialShape {
        let w = self.initial.width.unwrap_or(1.0);
        match self.initial.kind {
            InitialKind::Gaussian => InitialShape::Gaussian { width: w },
            InitialKind::Bubble => InitialShape::Bubble { eps: w },
            InitialKind::ScaledGroundState => InitialShape::GroundState,
        }
    }

    pub fn evolution_config(&self) -> EvolutionConfig {
        let e = &self.evolution;
        EvolutionConfig {
            dt: e.dt,
            t_end: e.t_end,
            record_stride: e.record_stride,
            blowup_grad_factor: e.blowup_grad_factor,
            virial_radius: self.diagnostics.virial_radii.first().copied().unwrap_or(5.0),
            ..Default::default()
        }
    }

    pub fn dichotomy_config(&self) -> DichotomyConfig {
        DichotomyConfig { evolution: self.evolution_config(), residual_samples: self.diagnostics.residual_samples }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"
[grid]
dim = 3

[potential]
kind = "yukawa"
c = -0.5
sigma = 1.0
a = 1.0

[initial]
kind = "gaussian"
amplitude = 0.1
width = 1.0

[evolution]
dt = 1e-3
t_end = 0.5
"#;

    #[test]
    fn canonical_form_is_a_fixed_point() {
        let cfg = RunConfig::parse(MINIMAL).unwrap();
        let text = cfg.to_canonical();
        let again = RunConfig::parse(&text).unwrap();
        assert_eq!(cfg, again);
        assert_eq!(text, again.to_canonical());
        assert!(text.contains("[diagnostics]") && text.contains("m = 4096"));
    }

    #[test]
    fn unknown_keys_are_named() {
        let err = RunConfig::parse(&MINIMAL.replace("t_end = 0.5", "t_end = 0.5\nt_stop = 1.0")).unwrap_err();
        assert!(err.to_string().contains("t_stop"), "{err}");
        let err = RunConfig::parse(&format!("{MINIMAL}\n[extra]\nx = 1\n")).unwrap_err();
        assert!(err.to_string().contains("extra"), "{err}");
    }

    #[test]
    fn cross_field_checks() {
        let no_width = MINIMAL.replace("width = 1.0\n", "");
        assert!(RunConfig::parse(&no_width).unwrap_err().to_string().contains("initial.width"));
        let gs = MINIMAL.replace("kind = \"gaussian\"", "kind = \"scaled_ground_state\"");
        assert!(RunConfig::parse(&gs).unwrap_err().to_string().contains("initial.width"));
        let missing_c = MINIMAL.replace("c = -0.5\n", "");
        assert!(RunConfig::parse(&missing_c).unwrap_err().to_string().contains("potential.c"));
        let bad_dt = MINIMAL.replace("dt = 1e-3", "dt = 3e-3");
        assert!(RunConfig::parse(&bad_dt).is_err());
        let bad_r = format!("{MINIMAL}\n[diagnostics]\nvirial_radii = [20.0]\nresidual_samples = 8\nbracket_tol = 1e-10\nground_state_tol = 1e-4\n");
        assert!(RunConfig::parse(&bad_r).unwrap_err().to_string().contains("virial_radii"));
    }
}
