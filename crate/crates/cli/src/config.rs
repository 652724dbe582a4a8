//! Experiment configuration, built-in grid presets and validation.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use fd_core::{DirectionSpec, GridSpec, PotentialSpec};
use fd_dbar::OperatorConfig;
use fd_forward::ForwardConfig;
use fd_geometry::{Frame, GammaChoice};

use crate::RunError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Mode {
    Forward,
    Restrict,
    Invert,
    Roundtrip,
    TruncationSweep,
    DbarCheck,
    ProbeBounds,
    Calibrate,
}

impl Mode {
    pub fn name(&self) -> &'static str {
        match self {
            Mode::Forward => "forward",
            Mode::Restrict => "restrict",
            Mode::Invert => "invert",
            Mode::Roundtrip => "roundtrip",
            Mode::TruncationSweep => "truncation-sweep",
            Mode::DbarCheck => "dbar-check",
            Mode::ProbeBounds => "probe-bounds",
            Mode::Calibrate => "calibrate",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Preset {
    Tiny,
    Desk,
}

impl Preset {
    /// tiny: 3 radii × 42 directions = 126 p-nodes, 16 ξ-nodes per axis.
    /// desk: 6 radii × 42 directions = 252 p-nodes, 6 × 8 λ-nodes.
    pub fn grid(&self) -> GridSpec {
        match self {
            Preset::Tiny => GridSpec {
                p_radii: vec![0.5, 1.5, 3.0],
                p_directions: DirectionSpec::Icosphere { icosphere_level: 1 },
                lambda_moduli: vec![0.4, 0.8, 1.25, 2.5],
                lambda_args: 6,
                phi_nodes: 16,
                xi_nodes_per_axis: 16,
                xi_max: 6.0,
            },
            Preset::Desk => GridSpec {
                p_radii: vec![0.25, 0.75, 1.5, 2.5, 4.0, 6.0],
                p_directions: DirectionSpec::Icosphere { icosphere_level: 1 },
                lambda_moduli: vec![0.3, 0.6, 0.85, 1.2, 1.7, 3.0],
                lambda_args: 8,
                phi_nodes: 16,
                xi_nodes_per_axis: 12,
                xi_max: 6.0,
            },
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GaussianShorthand {
    pub amplitude: f64,
    pub width: f64,
    pub mu: f64,
    pub mu_star: f64,
}

/// Either a full Gaussian-mixture spec or a centred isotropic Gaussian.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum PotentialInput {
    Spec(PotentialSpec),
    Gaussian { gaussian: GaussianShorthand },
}

impl PotentialInput {
    pub fn resolve(&self) -> PotentialSpec {
        match self {
            PotentialInput::Spec(s) => s.clone(),
            PotentialInput::Gaussian { gaussian: g } => PotentialSpec::gaussian(g.amplitude, g.width, g.mu, g.mu_star),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FrameSpec {
    #[serde(default = "default_nu")]
    pub nu: [f64; 3],
    #[serde(default)]
    pub gamma_choice: GammaChoice,
}

fn default_nu() -> [f64; 3] {
    fd_core::DEFAULT_NU
}

impl Default for FrameSpec {
    fn default() -> Self {
        Self { nu: default_nu(), gamma_choice: GammaChoice::Theta }
    }
}

/// Iteration controls of the forward solver; the ξ-rule comes from the grid spec.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ForwardSection {
    #[serde(default = "default_forward_tol")]
    pub tol: f64,
    #[serde(default = "default_forward_iter")]
    pub max_iter: usize,
    #[serde(default)]
    pub fixed_iterations: Option<usize>,
}

fn default_forward_tol() -> f64 {
    1e-12
}
fn default_forward_iter() -> usize {
    60
}

impl Default for ForwardSection {
    fn default() -> Self {
        Self { tol: default_forward_tol(), max_iter: default_forward_iter(), fixed_iterations: None }
    }
}

/// Inverse-solver settings; a missing `r` is derived from the calibrated ĉ₁ as
/// 2C/(1 − ĉ₁C), or else set to 4|||R|||_μ.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InverseSection {
    #[serde(default)]
    pub r: Option<f64>,
    #[serde(default)]
    pub tol: Option<f64>,
    #[serde(default)]
    pub max_iter: Option<usize>,
    #[serde(default)]
    pub c1_hat: Option<f64>,
    #[serde(default)]
    pub c2_hat: Option<f64>,
    #[serde(default)]
    pub c6_hat: Option<f64>,
    #[serde(default)]
    pub operator: Option<OperatorConfig>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ForwardPoints {
    pub p0: [f64; 3],
    /// λ values as [re, im].
    pub lambdas: Vec<[f64; 2]>,
}

impl Default for ForwardPoints {
    fn default() -> Self {
        Self { p0: [1.0, 0.4, 0.3], lambdas: vec![[0.5, 0.0], [2.0, 0.0], [0.0, 1.5]] }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BornSpec {
    #[serde(default = "default_born_p0")]
    pub p0: [f64; 3],
    #[serde(default = "default_born_taus")]
    pub taus: Vec<f64>,
}

fn default_born_p0() -> [f64; 3] {
    [1.0, 0.4, 0.3]
}
fn default_born_taus() -> Vec<f64> {
    vec![4.0, 8.0, 16.0, 32.0]
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NoiseSpec {
    /// Noise sizes; each is also run at half size to measure the scaling.
    pub levels: Vec<f64>,
    #[serde(default = "default_trials")]
    pub trials: usize,
}

fn default_trials() -> usize {
    10
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ResidualSpec {
    #[serde(default = "default_points")]
    pub points: usize,
    #[serde(default = "default_fd_step")]
    pub fd_step: f64,
    #[serde(default = "default_residual_phi")]
    pub phi_nodes: usize,
    /// Also run with doubled φ-nodes and halved step.
    #[serde(default = "yes")]
    pub refine: bool,
}

fn default_points() -> usize {
    20
}
fn default_fd_step() -> f64 {
    0.1
}
fn default_residual_phi() -> usize {
    8
}
fn yes() -> bool {
    true
}

impl Default for ResidualSpec {
    fn default() -> Self {
        Self { points: default_points(), fd_step: default_fd_step(), phi_nodes: default_residual_phi(), refine: true }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProbeSpec {
    #[serde(default = "default_ab")]
    pub ab_samples: usize,
    #[serde(default = "default_i4")]
    pub i4_samples: usize,
    #[serde(default = "default_j")]
    pub j_samples: usize,
}

fn default_ab() -> usize {
    1000
}
fn default_i4() -> usize {
    40
}
fn default_j() -> usize {
    64
}

impl Default for ProbeSpec {
    fn default() -> Self {
        Self { ab_samples: default_ab(), i4_samples: default_i4(), j_samples: default_j() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CalibrateSpec {
    #[serde(default = "default_kernel_samples")]
    pub kernel_samples: usize,
    #[serde(default = "default_c6_trials")]
    pub c6_trials: usize,
    #[serde(default = "default_bracket_pairs")]
    pub bracket_pairs: usize,
    #[serde(default = "default_bracket_points")]
    pub bracket_points: usize,
}

fn default_kernel_samples() -> usize {
    800
}
fn default_c6_trials() -> usize {
    6
}
fn default_bracket_pairs() -> usize {
    6
}
fn default_bracket_points() -> usize {
    1000
}

impl Default for CalibrateSpec {
    fn default() -> Self {
        Self {
            kernel_samples: default_kernel_samples(),
            c6_trials: default_c6_trials(),
            bracket_pairs: default_bracket_pairs(),
            bracket_points: default_bracket_points(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AcceptanceSpec {
    /// Largest tolerated ‖v̂_rec − v̂‖_μ/‖v̂‖_μ; exceeding it exits with code 4.
    #[serde(default)]
    pub max_relative_error: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub potential: PotentialInput,
    #[serde(default)]
    pub grids: Option<GridSpec>,
    #[serde(default)]
    pub preset: Option<Preset>,
    #[serde(default)]
    pub frame: FrameSpec,
    #[serde(default)]
    pub forward: ForwardSection,
    #[serde(default)]
    pub inverse: InverseSection,
    pub mode: Mode,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_output")]
    pub output_dir: PathBuf,
    /// calibration.json written by the calibrate mode; fills unset ĉ values.
    #[serde(default)]
    pub calibration: Option<PathBuf>,
    #[serde(default)]
    pub forward_points: Option<ForwardPoints>,
    #[serde(default)]
    pub born: Option<BornSpec>,
    /// Scatter-data CSV read by the invert mode.
    #[serde(default)]
    pub data_path: Option<PathBuf>,
    #[serde(default)]
    pub taus: Option<Vec<f64>>,
    #[serde(default)]
    pub noise: Option<NoiseSpec>,
    #[serde(default)]
    pub residual: Option<ResidualSpec>,
    #[serde(default)]
    pub probes: Option<ProbeSpec>,
    #[serde(default)]
    pub calibrate: Option<CalibrateSpec>,
    #[serde(default)]
    pub acceptance: Option<AcceptanceSpec>,
}

fn default_output() -> PathBuf {
    PathBuf::from("out")
}

/// Command-line and environment overrides applied after parsing.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub preset: Option<Preset>,
    pub out: Option<PathBuf>,
    pub seed: Option<u64>,
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self, RunError> {
        serde_json::from_str(text).map_err(|e| RunError::Validation(format!("config: {e}")))
    }

    pub fn load(path: &Path) -> Result<Self, RunError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| RunError::Validation(format!("cannot read {}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    pub fn apply(&mut self, o: &Overrides) {
        if let Some(p) = o.preset {
            self.preset = Some(p);
            self.grids = None;
        }
        if let Some(d) = &o.out {
            self.output_dir = d.clone();
        }
        if let Some(s) = o.seed {
            self.seed = s;
        }
    }

    /// Explicit grids win over the preset.
    pub fn grid_spec(&self) -> Result<GridSpec, RunError> {
        match (&self.grids, self.preset) {
            (Some(g), _) => Ok(g.clone()),
            (None, Some(p)) => Ok(p.grid()),
            (None, None) => Err(RunError::Validation("either grids or preset must be given".into())),
        }
    }

    pub fn frame(&self) -> Frame<f64> {
        Frame::new(self.frame.nu, self.frame.gamma_choice)
    }

    pub fn forward_config(&self, grid: &GridSpec, c1_hat: Option<f64>) -> ForwardConfig {
        ForwardConfig {
            xi_nodes: grid.xi_nodes_per_axis,
            xi_max: grid.xi_max,
            tol: self.forward.tol,
            max_iter: self.forward.max_iter,
            fixed_iterations: self.forward.fixed_iterations,
            c1_hat,
        }
    }

    pub fn validate(&self) -> Result<(), RunError> {
        let bad = |m: String| Err(RunError::Validation(m));
        let v = self.potential.resolve();
        v.validate().map_err(|e| RunError::Validation(format!("potential: {e}")))?;
        self.grid_spec()?;
        let n = self.frame.nu;
        if !(n.iter().all(|x| x.is_finite()) && n.iter().any(|x| *x != 0.0)) {
            return bad(format!("frame.nu must be a finite nonzero vector, got {n:?}"));
        }
        if !(self.forward.tol > 0.0) || self.forward.max_iter == 0 {
            return bad("forward.tol must be positive and forward.max_iter nonzero".into());
        }
        if let Some(r) = self.inverse.r {
            if !(r > 0.0 && r.is_finite()) {
                return bad(format!("inverse.r must be positive, got {r}"));
            }
        }
        match self.mode {
            Mode::Invert if self.data_path.is_none() => return bad("mode invert requires data_path".into()),
            Mode::TruncationSweep => {
                let taus = match &self.taus {
                    Some(t) if !t.is_empty() => t,
                    _ => return bad("mode truncation-sweep requires a nonempty taus list".into()),
                };
                if taus.iter().any(|t| !(*t > 0.0 && t.is_finite())) {
                    return bad(format!("taus must be positive, got {taus:?}"));
                }
                if !(v.mu_star > v.mu) {
                    return bad(format!("truncation-sweep needs mu_star > mu, got {} <= {}", v.mu_star, v.mu));
                }
            }
            _ => {}
        }
        if let Some(noise) = &self.noise {
            if noise.levels.iter().any(|l| !(*l > 0.0)) || noise.trials == 0 {
                return bad("noise levels must be positive and trials nonzero".into());
            }
        }
        if let Some(b) = &self.born {
            if b.taus.iter().any(|t| !(*t > 0.0)) {
                return bad("born.taus must be positive".into());
            }
        }
        if let Some(r) = &self.residual {
            if r.points == 0 || !(r.fd_step > 0.0) || r.phi_nodes == 0 {
                return bad("residual needs points > 0, fd_step > 0 and phi_nodes > 0".into());
            }
        }
        Ok(())
    }
}

/// Constants read from a calibration.json file.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct Calibrated {
    pub c1_hat: Option<f64>,
    pub c2_hat: Option<f64>,
    pub c6_hat: Option<f64>,
}

impl Calibrated {
    pub fn read(path: &Path) -> Result<Self, RunError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| RunError::Validation(format!("cannot read calibration {}: {e}", path.display())))?;
        let doc: serde_json::Value = serde_json::from_str(&text)
            .map_err(|e| RunError::Validation(format!("calibration {}: {e}", path.display())))?;
        let get = |k: &str| doc.get(k).and_then(|v| v.get("estimate")).and_then(|v| v.as_f64());
        Ok(Self { c1_hat: get("c1"), c2_hat: get("c2"), c6_hat: get("c6") })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"{"potential": {"gaussian": {"amplitude": 0.01, "width": 1, "mu": 2, "mu_star": 4}},
        "preset": "tiny", "mode": "roundtrip"}"#;

    #[test]
    fn minimal_config_parses_with_defaults() {
        let c = ExperimentConfig::from_json(MINIMAL).unwrap();
        assert_eq!(c.mode, Mode::Roundtrip);
        assert_eq!(c.seed, 0);
        assert_eq!(c.output_dir, PathBuf::from("out"));
        c.validate().unwrap();
        assert_eq!(c.grid_spec().unwrap(), Preset::Tiny.grid());
    }

    #[test]
    fn unknown_fields_and_missing_modes_are_rejected() {
        assert!(ExperimentConfig::from_json(r#"{"potential": {}, "mode": "roundtrip"}"#).is_err());
        let extra = MINIMAL.replace("\"mode\"", "\"bogus\": 1, \"mode\"");
        assert!(ExperimentConfig::from_json(&extra).is_err());
        let c = ExperimentConfig::from_json(&MINIMAL.replace("roundtrip", "invert")).unwrap();
        assert!(matches!(c.validate(), Err(RunError::Validation(_))));
        let c = ExperimentConfig::from_json(&MINIMAL.replace("roundtrip", "truncation-sweep")).unwrap();
        assert!(c.validate().is_err());
    }

    #[test]
    fn overrides_replace_grid_output_and_seed() {
        let mut c = ExperimentConfig::from_json(MINIMAL).unwrap();
        c.grids = Some(Preset::Tiny.grid());
        c.apply(&Overrides { preset: Some(Preset::Desk), out: Some("x".into()), seed: Some(9) });
        assert_eq!(c.grid_spec().unwrap(), Preset::Desk.grid());
        assert_eq!(c.output_dir, PathBuf::from("x"));
        assert_eq!(c.seed, 9);
    }

    #[test]
    fn tiny_preset_has_about_128_p_nodes() {
        let g = fd_core::make_grids(&Preset::Tiny.grid(), &fd_core::DEFAULT_NU).unwrap();
        assert_eq!(g.n_p(), 126);
    }
}
