//! Experiment configuration. Every table rejects unknown keys so that a typo
//! surfaces as an error instead of a silently applied default.

use std::path::{Path, PathBuf};

use hmhf_core::estimates::{GrowthVerdict, ScanMode, Verdict};
use hmhf_core::flows::FlowConfig;
use hmhf_core::maps::Scheme;
use hmhf_core::radial::Classification;
use hmhf_core::reduced::Backend;
use serde::Deserialize;

use crate::error::CliError;

/// Shown by `hmhf-lab run --help`.
pub const CONFIG_HELP: &str = "\
Config file (TOML). Unknown keys anywhere are rejected.

  scenario = reduced | assumptions | hmhf | radial | kato | estimates | full

  [flow]                 dimension (required), base_curvature (required, -1|0|1),
                         tau_max = 1.0
  [flow.scale]           kind = static | affine | shrinking_sphere | sampled,
                         c0 = 1.0, slope = 0.0, knots = [] ([[tau, c], ...])
  [target]               n = flow.dimension, kappa = 1.0
  [map]                  preset = constant | dilation | su_import | cap_relaxation | bump | csv
                         (default dilation), r_max = 10.0, nr = 1001,
                         slope = 1.0 (dilation slope, or rho'(0) for su_import),
                         boundary = 0.5235987755982988 (cap_relaxation),
                         amplitude = 0.5 (bump: amplitude * sin(pi r / (2 r_max))),
                         path (csv: profile with columns r,t,rho)
  [numerics]
    reduced              radii = [0.5, 1, 2, 3], taus = [0.25, 0.5, 1],
                         backends = [\"closed_form\", \"variational\"], K = 0.0,
                         check_radii = 10 points on [0.2, 2], check_taus = 5 points on [0.2, 1]
    hmhf                 dt = 1e-3, t_end = 0.2, scheme = semi_implicit | explicit,
                         frame_stride = 8, dr_levels = [0.1, 0.05, 0.025],
                         bochner_r = r_max / 2, bochner_t = t_end / 2
                         (refinement levels step with min(dt / dr_0^2, 0.5) dr^2)
    radial               m = flow.dimension, epsilon = 1e-6, t_span = [-20, 20],
                         rtol = 1e-12, fit_window (optional [t_a, t_b])
    kato                 seed = 42, samples = 100000, m_range = [2, 6], n_range = [1, 4],
                         eh_q = 2 m - 2, eh_dr_levels = [0.04, 0.02, 0.01],
                         eh_r_max = 4.0, harmonic_threshold = 0.1
    estimates            R_list = [10, 20, 40], T_list = R^2 per window, K = 0.0,
                         C34, C (optional: measured on the cutoff grid when absent),
                         scan_radii = [] (no scan when empty),
                         scan_mode = npc_growth | pos_growth | static_linear
  [output]               directory = \"out\", formats = [\"json\", \"csv\"]
  [expect]               gate = pass | fail, reduced_estimate = true|false,
                         energy_decreasing = true|false, bochner_min_order,
                         classification = NodeConvergent | SpiralCrossing | NotConvergent,
                         exponent_tolerance, kato_max_violations, eh_min_order,
                         estimate = Holds | Vacuous | Fails,
                         scan = HypothesisSatisfied | HypothesisViolated
                         (absent keys are not checked)
";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scenario {
    Reduced,
    Assumptions,
    Hmhf,
    Radial,
    Kato,
    Estimates,
    Full,
}

impl Scenario {
    pub const SINGLE: [Scenario; 6] = [
        Scenario::Reduced,
        Scenario::Assumptions,
        Scenario::Hmhf,
        Scenario::Radial,
        Scenario::Kato,
        Scenario::Estimates,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Scenario::Reduced => "reduced",
            Scenario::Assumptions => "assumptions",
            Scenario::Hmhf => "hmhf",
            Scenario::Radial => "radial",
            Scenario::Kato => "kato",
            Scenario::Estimates => "estimates",
            Scenario::Full => "full",
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub scenario: Scenario,
    pub flow: FlowConfig,
    #[serde(default)]
    pub target: TargetConfig,
    #[serde(default)]
    pub map: MapConfig,
    #[serde(default)]
    pub numerics: Numerics,
    #[serde(default)]
    pub output: OutputConfig,
    #[serde(default)]
    pub expect: Expectations,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TargetConfig {
    pub n: Option<usize>,
    #[serde(default = "one")]
    pub kappa: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MapPreset {
    Constant,
    Dilation,
    SuImport,
    CapRelaxation,
    Bump,
    Csv,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MapConfig {
    #[serde(default = "default_preset")]
    pub preset: MapPreset,
    #[serde(default = "default_r_max")]
    pub r_max: f64,
    #[serde(default = "default_nr")]
    pub nr: usize,
    #[serde(default = "one")]
    pub slope: f64,
    #[serde(default = "default_boundary")]
    pub boundary: f64,
    #[serde(default = "half")]
    pub amplitude: f64,
    pub path: Option<PathBuf>,
}

impl Default for MapConfig {
    fn default() -> Self {
        Self {
            preset: default_preset(),
            r_max: default_r_max(),
            nr: default_nr(),
            slope: 1.0,
            boundary: default_boundary(),
            amplitude: 0.5,
            path: None,
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Numerics {
    #[serde(default = "default_radii")]
    pub radii: Vec<f64>,
    #[serde(default = "default_taus")]
    pub taus: Vec<f64>,
    #[serde(default = "default_backends")]
    pub backends: Vec<Backend>,
    #[serde(default, rename = "K")]
    pub k: f64,
    #[serde(default = "default_check_radii")]
    pub check_radii: Vec<f64>,
    #[serde(default = "default_check_taus")]
    pub check_taus: Vec<f64>,

    #[serde(default = "default_dt")]
    pub dt: f64,
    #[serde(default = "default_t_end")]
    pub t_end: f64,
    #[serde(default = "default_scheme")]
    pub scheme: Scheme,
    #[serde(default = "default_frame_stride")]
    pub frame_stride: usize,
    #[serde(default = "default_dr_levels")]
    pub dr_levels: Vec<f64>,
    pub bochner_r: Option<f64>,
    pub bochner_t: Option<f64>,

    pub m: Option<usize>,
    #[serde(default = "default_epsilon")]
    pub epsilon: f64,
    #[serde(default = "default_t_span")]
    pub t_span: [f64; 2],
    #[serde(default = "default_rtol")]
    pub rtol: f64,
    pub fit_window: Option<[f64; 2]>,

    #[serde(default = "default_seed")]
    pub seed: u64,
    #[serde(default = "default_samples")]
    pub samples: usize,
    #[serde(default = "default_m_range")]
    pub m_range: [usize; 2],
    #[serde(default = "default_n_range")]
    pub n_range: [usize; 2],
    pub eh_q: Option<f64>,
    #[serde(default = "default_eh_dr_levels")]
    pub eh_dr_levels: Vec<f64>,
    #[serde(default = "default_eh_r_max")]
    pub eh_r_max: f64,
    #[serde(default = "default_harmonic_threshold")]
    pub harmonic_threshold: f64,

    #[serde(default = "default_r_list", rename = "R_list")]
    pub r_list: Vec<f64>,
    #[serde(rename = "T_list")]
    pub t_list: Option<Vec<f64>>,
    #[serde(rename = "C34")]
    pub c34: Option<f64>,
    #[serde(rename = "C")]
    pub c: Option<f64>,
    #[serde(default)]
    pub scan_radii: Vec<f64>,
    #[serde(default = "default_scan_mode")]
    pub scan_mode: ScanMode,
}

impl Default for Numerics {
    fn default() -> Self {
        toml::from_str("").expect("empty numerics table uses defaults")
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Format {
    Json,
    Csv,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputConfig {
    #[serde(default = "default_directory")]
    pub directory: PathBuf,
    #[serde(default = "default_formats")]
    pub formats: Vec<Format>,
}

impl Default for OutputConfig {
    fn default() -> Self {
        Self {
            directory: default_directory(),
            formats: default_formats(),
        }
    }
}

impl OutputConfig {
    pub fn wants(&self, f: Format) -> bool {
        self.formats.contains(&f)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GateExpectation {
    Pass,
    Fail,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Expectations {
    pub gate: Option<GateExpectation>,
    pub reduced_estimate: Option<bool>,
    pub energy_decreasing: Option<bool>,
    pub bochner_min_order: Option<f64>,
    pub classification: Option<Classification>,
    pub exponent_tolerance: Option<f64>,
    pub kato_max_violations: Option<usize>,
    pub eh_min_order: Option<f64>,
    pub estimate: Option<Verdict>,
    pub scan: Option<GrowthVerdict>,
}

fn one() -> f64 {
    1.0
}
fn half() -> f64 {
    0.5
}
fn default_preset() -> MapPreset {
    MapPreset::Dilation
}
fn default_r_max() -> f64 {
    10.0
}
fn default_nr() -> usize {
    1001
}
fn default_boundary() -> f64 {
    std::f64::consts::FRAC_PI_6
}
fn default_radii() -> Vec<f64> {
    vec![0.5, 1.0, 2.0, 3.0]
}
fn default_taus() -> Vec<f64> {
    vec![0.25, 0.5, 1.0]
}
fn default_backends() -> Vec<Backend> {
    vec![Backend::ClosedForm, Backend::Variational]
}
fn default_check_radii() -> Vec<f64> {
    hmhf_core::numerics::linspace(0.2, 2.0, 10)
}
fn default_check_taus() -> Vec<f64> {
    hmhf_core::numerics::linspace(0.2, 1.0, 5)
}
fn default_dt() -> f64 {
    1e-3
}
fn default_t_end() -> f64 {
    0.2
}
fn default_scheme() -> Scheme {
    Scheme::SemiImplicit
}
fn default_frame_stride() -> usize {
    8
}
fn default_dr_levels() -> Vec<f64> {
    vec![0.1, 0.05, 0.025]
}
fn default_epsilon() -> f64 {
    hmhf_core::radial::DEFAULT_EPSILON
}
fn default_t_span() -> [f64; 2] {
    let (a, b) = hmhf_core::radial::DEFAULT_T_SPAN;
    [a, b]
}
fn default_rtol() -> f64 {
    1e-12
}
fn default_seed() -> u64 {
    42
}
fn default_samples() -> usize {
    100_000
}
fn default_m_range() -> [usize; 2] {
    [2, 6]
}
fn default_n_range() -> [usize; 2] {
    [1, 4]
}
fn default_eh_dr_levels() -> Vec<f64> {
    vec![0.04, 0.02, 0.01]
}
fn default_eh_r_max() -> f64 {
    4.0
}
fn default_harmonic_threshold() -> f64 {
    0.1
}
fn default_r_list() -> Vec<f64> {
    vec![10.0, 20.0, 40.0]
}
fn default_scan_mode() -> ScanMode {
    ScanMode::NpcGrowth
}
fn default_directory() -> PathBuf {
    PathBuf::from("out")
}
fn default_formats() -> Vec<Format> {
    vec![Format::Json, Format::Csv]
}

impl ExperimentConfig {
    pub fn parse(text: &str) -> Result<Self, CliError> {
        let cfg: Self = toml::from_str(text).map_err(|e| CliError::ConfigInvalid(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    /// Reads a config and resolves relative output and profile paths against
    /// the config file's directory.
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        let mut cfg = Self::parse(&text)?;
        let base = path.parent().unwrap_or(Path::new("."));
        if cfg.output.directory.is_relative() {
            cfg.output.directory = base.join(&cfg.output.directory);
        }
        if let Some(p) = &cfg.map.path {
            if p.is_relative() {
                cfg.map.path = Some(base.join(p));
            }
        }
        Ok(cfg)
    }

    fn validate(&self) -> Result<(), CliError> {
        let bad = |key: &str, why: String| Err(CliError::ConfigInvalid(format!("`{key}`: {why}")));
        let m = self.flow.dimension;
        if let Some(n) = self.target.n {
            if n != m {
                return bad("target.n", format!("must equal flow.dimension = {m} for equivariant maps, got {n}"));
            }
        }
        if !self.target.kappa.is_finite() {
            return bad("target.kappa", "expected a finite float".into());
        }
        if self.map.nr < 3 || !(self.map.r_max > 0.0) {
            return bad("map", "need nr >= 3 and r_max > 0".into());
        }
        if self.map.preset == MapPreset::Csv && self.map.path.is_none() {
            return bad("map.path", "required for preset = csv".into());
        }
        let n = &self.numerics;
        if n.m_range[0] < 1 || n.m_range[0] > n.m_range[1] || n.n_range[0] < 1 || n.n_range[0] > n.n_range[1] {
            return bad("numerics.m_range / n_range", "expected [lo, hi] with 1 <= lo <= hi".into());
        }
        if let Some(t) = &n.t_list {
            if t.len() != n.r_list.len() {
                return bad("numerics.T_list", format!("expected {} entries to match R_list", n.r_list.len()));
            }
        }
        if n.t_span[0] >= n.t_span[1] {
            return bad("numerics.t_span", "expected [t_min, t_max] with t_min < t_max".into());
        }
        if !(n.dt > 0.0 && n.t_end > 0.0) {
            return bad("numerics.dt / t_end", "expected positive floats".into());
        }
        if n.dr_levels.is_empty() || n.eh_dr_levels.is_empty() || n.backends.is_empty() {
            return bad("numerics", "dr_levels, eh_dr_levels and backends must be non-empty".into());
        }
        Ok(())
    }

    pub fn radial_m(&self) -> usize {
        self.numerics.m.unwrap_or(self.flow.dimension)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = "scenario = \"radial\"\n[flow]\ndimension = 7\nbase_curvature = 0\n[flow.scale]\nkind = \"static\"\n";

    #[test]
    fn minimal_config_fills_defaults() {
        let cfg = ExperimentConfig::parse(MINIMAL).unwrap();
        assert_eq!(cfg.scenario, Scenario::Radial);
        assert_eq!(cfg.numerics.samples, 100_000);
        assert_eq!(cfg.numerics.r_list, vec![10.0, 20.0, 40.0]);
        assert_eq!(cfg.radial_m(), 7);
    }

    #[test]
    fn unknown_key_names_the_key() {
        let text = format!("{MINIMAL}[numerics]\nsaemples = 3\n");
        let err = ExperimentConfig::parse(&text).unwrap_err().to_string();
        assert!(err.contains("saemples"), "{err}");
    }

    #[test]
    fn wrong_type_is_reported() {
        let text = format!("{MINIMAL}[numerics]\nseed = \"forty-two\"\n");
        let err = ExperimentConfig::parse(&text).unwrap_err().to_string();
        assert!(err.contains("seed") || err.contains("integer"), "{err}");
    }

    #[test]
    fn mismatched_target_dimension() {
        let text = format!("{MINIMAL}[target]\nn = 3\n");
        assert!(matches!(ExperimentConfig::parse(&text), Err(CliError::ConfigInvalid(_))));
    }
}
