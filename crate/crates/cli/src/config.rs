//! Run configuration (TOML).
//!
//! ```toml
//! experiment = "stage1"      # optional; must match the CLI experiment
//! seed = 0                   # optional; --seed overrides
//!
//! [grid]                     # required
//! dimension = 1
//! extents = [1.0]
//! counts = [201]
//!
//! [omega]                    # control box as fractions of each extent
//! fraction = 0.25            # centred box, or explicit lo/hi below
//! # lo = [0.375]
//! # hi = [0.625]
//!
//! [initial]
//! preset = "tilted-cone"     # constant | tilted-cone | random-smooth | file
//! cone_deg = 60.0
//! axis = [0.0, 0.0, 1.0]     # hemisphere axis e
//!
//! [schedule]
//! t0 = 0.05                  # stage length (stage1)
//! horizon = 1.2              # total T (steer)
//! eps4 = 1e-3
//! target = [1.0, 0.0, 0.0]   # final state p (steer)
//!
//! [solver]
//! dt_max = 5e-4
//! penalty = 1e-8
//!
//! [output]
//! dir = "out"
//! ```
//!
//! Every section except `[grid]` is optional; unknown keys are rejected.

use std::path::PathBuf;

use magsteer_core::grid_pde::{Axis, ControlRegion, Grid};
use magsteer_core::null_control::{HumConfig, PicardConfig};
use magsteer_core::presets::InitialPreset;
use magsteer_core::UnitVector3;
use serde::Deserialize;

use crate::error::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Experiment {
    VerifyGeometry,
    Stage1,
    Equivalence,
    Hum,
    Steer,
}

impl Experiment {
    pub const ALL: [Experiment; 5] = [
        Experiment::VerifyGeometry,
        Experiment::Stage1,
        Experiment::Equivalence,
        Experiment::Hum,
        Experiment::Steer,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            Experiment::VerifyGeometry => "verify-geometry",
            Experiment::Stage1 => "stage1",
            Experiment::Equivalence => "equivalence",
            Experiment::Hum => "hum",
            Experiment::Steer => "steer",
        }
    }
}

impl std::str::FromStr for Experiment {
    type Err = CliError;

    fn from_str(s: &str) -> Result<Self, CliError> {
        Experiment::ALL
            .into_iter()
            .find(|e| e.name() == s)
            .ok_or_else(|| CliError::Config(format!("unknown experiment `{s}`")))
    }
}

#[derive(Debug, Clone, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub experiment: Option<String>,
    pub seed: Option<u64>,
    pub grid: GridSpec,
    #[serde(default)]
    pub omega: OmegaSpec,
    #[serde(default)]
    pub initial: InitialSpec,
    #[serde(default)]
    pub schedule: ScheduleSpec,
    #[serde(default)]
    pub solver: SolverSpec,
    #[serde(default)]
    pub output: OutputSpec,
    #[serde(default)]
    pub geometry: GeometrySpec,
    #[serde(default)]
    pub equivalence: EquivalenceSpec,
    #[serde(default)]
    pub hum: HumSpec,
}

#[derive(Debug, Clone, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct GridSpec {
    pub dimension: usize,
    pub extents: Vec<f64>,
    pub counts: Vec<usize>,
}

impl GridSpec {
    pub fn line(count: usize) -> Self {
        Self {
            dimension: 1,
            extents: vec![1.0],
            counts: vec![count],
        }
    }

    pub fn square(count: usize) -> Self {
        Self {
            dimension: 2,
            extents: vec![1.0, 1.0],
            counts: vec![count, count],
        }
    }
}

#[derive(Debug, Clone, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct OmegaSpec {
    #[serde(default = "d_fraction")]
    pub fraction: f64,
    pub lo: Option<Vec<f64>>,
    pub hi: Option<Vec<f64>>,
}

impl Default for OmegaSpec {
    fn default() -> Self {
        Self {
            fraction: d_fraction(),
            lo: None,
            hi: None,
        }
    }
}

#[derive(Debug, Clone, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct InitialSpec {
    #[serde(default = "d_preset")]
    pub preset: String,
    pub cone_deg: Option<f64>,
    pub modes: Option<usize>,
    pub path: Option<PathBuf>,
    #[serde(default = "d_axis")]
    pub axis: [f64; 3],
}

impl Default for InitialSpec {
    fn default() -> Self {
        Self {
            preset: d_preset(),
            cone_deg: None,
            modes: None,
            path: None,
            axis: d_axis(),
        }
    }
}

impl InitialSpec {
    pub fn preset(&self) -> Result<InitialPreset, CliError> {
        let cone_deg = self.cone_deg.unwrap_or(60.0);
        let unused = |field: &str, present: bool| {
            if present {
                Err(CliError::Config(format!(
                    "[initial] `{field}` does not apply to preset `{}`",
                    self.preset
                )))
            } else {
                Ok(())
            }
        };
        let preset = match self.preset.as_str() {
            "constant" => {
                unused("cone_deg", self.cone_deg.is_some())?;
                unused("modes", self.modes.is_some())?;
                unused("path", self.path.is_some())?;
                InitialPreset::Constant
            }
            "tilted-cone" => {
                unused("modes", self.modes.is_some())?;
                unused("path", self.path.is_some())?;
                InitialPreset::TiltedCone { cone_deg }
            }
            "random-smooth" => {
                unused("path", self.path.is_some())?;
                InitialPreset::RandomSmooth {
                    cone_deg,
                    modes: self.modes.unwrap_or(3),
                }
            }
            "file" => {
                unused("cone_deg", self.cone_deg.is_some())?;
                unused("modes", self.modes.is_some())?;
                let path = self
                    .path
                    .clone()
                    .ok_or_else(|| CliError::Config("[initial] preset `file` needs `path`".into()))?;
                InitialPreset::File { path }
            }
            other => return Err(CliError::Config(format!("unknown initial preset `{other}`"))),
        };
        if let InitialPreset::TiltedCone { cone_deg } | InitialPreset::RandomSmooth { cone_deg, .. } = preset {
            if !(0.0..90.0).contains(&cone_deg) {
                return Err(CliError::Config(format!(
                    "[initial] cone_deg = {cone_deg} violates the hemisphere condition (needs 0 ≤ angle < 90)"
                )));
            }
        }
        Ok(preset)
    }
}

#[derive(Debug, Clone, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct ScheduleSpec {
    #[serde(default = "d_t0")]
    pub t0: f64,
    #[serde(default = "d_horizon")]
    pub horizon: f64,
    #[serde(default = "d_eps4")]
    pub eps4: f64,
    /// Plateau amplitude; computed from `eps4` when absent.
    pub lambda: Option<f64>,
    /// Margin used to size Λ; measured from d₀ when absent.
    pub eps0: Option<f64>,
    #[serde(default = "d_target")]
    pub target: [f64; 3],
    /// stage1: amplitude multipliers of the sweep; the first is the reference.
    #[serde(default = "d_factors")]
    pub lambda_factors: Vec<f64>,
}

impl Default for ScheduleSpec {
    fn default() -> Self {
        Self {
            t0: d_t0(),
            horizon: d_horizon(),
            eps4: d_eps4(),
            lambda: None,
            eps0: None,
            target: d_target(),
            lambda_factors: d_factors(),
        }
    }
}

#[derive(Debug, Clone, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct SolverSpec {
    #[serde(default = "d_dt_max")]
    pub dt_max: f64,
    #[serde(default = "d_penalty")]
    pub penalty: f64,
    #[serde(default = "d_hum_tol")]
    pub hum_tol: f64,
    #[serde(default = "d_hum_maxit")]
    pub hum_maxit: usize,
    #[serde(default = "d_picard_tol")]
    pub picard_tol: f64,
    #[serde(default = "d_picard_maxit")]
    pub picard_maxit: usize,
    #[serde(default = "d_terminal_ratio")]
    pub terminal_ratio: f64,
    #[serde(default = "d_terminal_floor")]
    pub terminal_floor: f64,
    #[serde(default = "d_final_tol")]
    pub final_tol: f64,
    #[serde(default = "d_slack")]
    pub slack: f64,
}

impl Default for SolverSpec {
    fn default() -> Self {
        Self {
            dt_max: d_dt_max(),
            penalty: d_penalty(),
            hum_tol: d_hum_tol(),
            hum_maxit: d_hum_maxit(),
            picard_tol: d_picard_tol(),
            picard_maxit: d_picard_maxit(),
            terminal_ratio: d_terminal_ratio(),
            terminal_floor: d_terminal_floor(),
            final_tol: d_final_tol(),
            slack: d_slack(),
        }
    }
}

impl SolverSpec {
    pub fn hum(&self) -> HumConfig {
        HumConfig {
            penalty: self.penalty,
            tol: self.hum_tol,
            maxit: self.hum_maxit,
        }
    }

    pub fn picard(&self) -> PicardConfig {
        PicardConfig {
            outer_tol: self.picard_tol,
            outer_maxit: self.picard_maxit,
            terminal_ratio: self.terminal_ratio,
            terminal_floor: self.terminal_floor,
            hum: self.hum(),
        }
    }
}

#[derive(Debug, Clone, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct OutputSpec {
    #[serde(default = "d_out")]
    pub dir: PathBuf,
    #[serde(default = "d_true")]
    pub snapshots: bool,
}

impl Default for OutputSpec {
    fn default() -> Self {
        Self {
            dir: d_out(),
            snapshots: true,
        }
    }
}

#[derive(Debug, Clone, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct GeometrySpec {
    #[serde(default = "d_samples")]
    pub samples: usize,
    /// Chart samples are drawn from `[-radius, radius]²`.
    #[serde(default = "d_radius")]
    pub radius: f64,
}

impl Default for GeometrySpec {
    fn default() -> Self {
        Self {
            samples: d_samples(),
            radius: d_radius(),
        }
    }
}

#[derive(Debug, Clone, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct EquivalenceSpec {
    #[serde(default = "d_eq_horizon")]
    pub horizon: f64,
    #[serde(default = "d_eq_cone")]
    pub cone_deg: f64,
    /// Peak of the smooth control bump inside ω.
    #[serde(default = "d_one")]
    pub amplitude: f64,
    /// Adds the Δx (dt ∝ Δx²) and dt refinement study.
    #[serde(default)]
    pub refine: bool,
}

impl Default for EquivalenceSpec {
    fn default() -> Self {
        Self {
            horizon: d_eq_horizon(),
            cone_deg: d_eq_cone(),
            amplitude: 1.0,
            refine: false,
        }
    }
}

#[derive(Debug, Clone, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct HumSpec {
    #[serde(default = "d_hum_horizon")]
    pub horizon: f64,
    /// Penalties of the trade-off sweep, in decreasing order.
    #[serde(default = "d_penalties")]
    pub penalties: Vec<f64>,
    /// W^{1,∞} size of the chart data for the Picard runs.
    #[serde(default = "d_picard_sizes")]
    pub picard_sizes: Vec<f64>,
    #[serde(default = "d_picard_horizon")]
    pub picard_horizon: f64,
    /// Extra sizes probed for the empirical basin; reported, never checked.
    #[serde(default)]
    pub basin_sizes: Vec<f64>,
}

impl Default for HumSpec {
    fn default() -> Self {
        Self {
            horizon: d_hum_horizon(),
            penalties: d_penalties(),
            picard_sizes: d_picard_sizes(),
            picard_horizon: d_picard_horizon(),
            basin_sizes: Vec::new(),
        }
    }
}

fn d_fraction() -> f64 {
    magsteer_core::grid_pde::DEFAULT_OMEGA_FRACTION
}
fn d_preset() -> String {
    "tilted-cone".into()
}
fn d_axis() -> [f64; 3] {
    [0.0, 0.0, 1.0]
}
fn d_t0() -> f64 {
    0.05
}
fn d_horizon() -> f64 {
    1.2
}
fn d_eps4() -> f64 {
    1e-3
}
fn d_target() -> [f64; 3] {
    [1.0, 0.0, 0.0]
}
fn d_factors() -> Vec<f64> {
    vec![1.0, 2.0]
}
fn d_dt_max() -> f64 {
    5e-4
}
fn d_penalty() -> f64 {
    1e-8
}
fn d_hum_tol() -> f64 {
    1e-11
}
fn d_hum_maxit() -> usize {
    2000
}
fn d_picard_tol() -> f64 {
    1e-8
}
fn d_picard_maxit() -> usize {
    10
}
fn d_terminal_ratio() -> f64 {
    1e-2
}
fn d_terminal_floor() -> f64 {
    1e-10
}
fn d_final_tol() -> f64 {
    1e-2
}
fn d_slack() -> f64 {
    magsteer_core::monitors::GRID_SLACK
}
fn d_out() -> PathBuf {
    PathBuf::from("out")
}
fn d_true() -> bool {
    true
}
fn d_samples() -> usize {
    10_000
}
fn d_radius() -> f64 {
    3.0
}
fn d_eq_horizon() -> f64 {
    0.05
}
fn d_eq_cone() -> f64 {
    25.0
}
fn d_one() -> f64 {
    1.0
}
fn d_hum_horizon() -> f64 {
    0.1
}
fn d_penalties() -> Vec<f64> {
    vec![1e-4, 5e-5, 2.5e-5, 1e-6]
}
fn d_picard_sizes() -> Vec<f64> {
    vec![1e-3]
}
fn d_picard_horizon() -> f64 {
    0.05
}

impl RunConfig {
    /// Minimal config on `grid` with every other section at its default.
    pub fn with_grid(grid: GridSpec) -> Self {
        Self {
            experiment: None,
            seed: None,
            grid,
            omega: OmegaSpec::default(),
            initial: InitialSpec::default(),
            schedule: ScheduleSpec::default(),
            solver: SolverSpec::default(),
            output: OutputSpec::default(),
            geometry: GeometrySpec::default(),
            equivalence: EquivalenceSpec::default(),
            hum: HumSpec::default(),
        }
    }

    pub fn parse(text: &str) -> Result<Self, CliError> {
        toml::from_str(text).map_err(|e| CliError::Config(e.to_string()))
    }

    pub fn build_grid(&self) -> Result<Grid, CliError> {
        let g = &self.grid;
        if !(1..=2).contains(&g.dimension) {
            return Err(CliError::Config(format!("[grid] dimension must be 1 or 2, got {}", g.dimension)));
        }
        if g.extents.len() != g.dimension || g.counts.len() != g.dimension {
            return Err(CliError::Config("[grid] extents and counts need one entry per dimension".into()));
        }
        if g.extents.iter().any(|l| !(*l > 0.0 && l.is_finite())) {
            return Err(CliError::Config("[grid] extents must be positive".into()));
        }
        let axes = g.extents.iter().zip(&g.counts).map(|(&l, &n)| Axis::new(l, n)).collect();
        let region = match (&self.omega.lo, &self.omega.hi) {
            (None, None) => ControlRegion::centered(g.dimension, self.omega.fraction),
            (Some(lo), Some(hi)) => ControlRegion {
                lo: lo.clone(),
                hi: hi.clone(),
            },
            _ => return Err(CliError::Config("[omega] give both lo and hi, or neither".into())),
        };
        Grid::new(axes, region).map_err(|e| CliError::Config(format!("[grid]/[omega]: {e}")))
    }

    pub fn axis(&self) -> Result<UnitVector3, CliError> {
        unit(self.initial.axis, "[initial] axis")
    }

    pub fn target(&self) -> Result<UnitVector3, CliError> {
        unit(self.schedule.target, "[schedule] target")
    }

    /// Checks everything an experiment needs before any output is created.
    pub fn validate(&self, experiment: Experiment) -> Result<(), CliError> {
        if let Some(name) = &self.experiment {
            if name != experiment.name() {
                return Err(CliError::Config(format!(
                    "config is for experiment `{name}`, invoked as `{}`",
                    experiment.name()
                )));
            }
        }
        self.build_grid()?;
        let p = self.initial.preset()?;
        if let InitialPreset::File { path } = &p {
            if !path.is_file() {
                return Err(CliError::Config(format!("[initial] file {} not found", path.display())));
            }
        }
        self.axis()?;
        let s = &self.schedule;
        positive(s.t0, "[schedule] t0")?;
        positive(s.horizon, "[schedule] horizon")?;
        if !(s.eps4 > 0.0 && s.eps4 < 1.0) {
            return Err(CliError::Config(format!("[schedule] eps4 must lie in (0, 1), got {}", s.eps4)));
        }
        if let Some(l) = s.lambda {
            if !(l >= 0.0 && l.is_finite()) {
                return Err(CliError::Config(format!("[schedule] lambda must be nonnegative, got {l}")));
            }
        }
        if let Some(e) = s.eps0 {
            if !(e > 0.0 && e <= 1.0) {
                return Err(CliError::Config(format!("[schedule] eps0 must lie in (0, 1], got {e}")));
            }
        }
        if s.lambda_factors.is_empty() || s.lambda_factors.iter().any(|f| !(*f > 0.0)) {
            return Err(CliError::Config("[schedule] lambda_factors must be positive and nonempty".into()));
        }
        if experiment == Experiment::Steer {
            let e = self.axis()?;
            let t = self.target()?;
            if e.dot(&t) <= -1.0 + 1e-9 {
                return Err(CliError::Config("[schedule] target is antipodal to the initial axis".into()));
            }
        }
        let v = &self.solver;
        for (x, name) in [
            (v.dt_max, "dt_max"),
            (v.penalty, "penalty"),
            (v.hum_tol, "hum_tol"),
            (v.picard_tol, "picard_tol"),
            (v.terminal_ratio, "terminal_ratio"),
            (v.terminal_floor, "terminal_floor"),
            (v.final_tol, "final_tol"),
        ] {
            positive(x, &format!("[solver] {name}"))?;
        }
        if !(v.slack >= 0.0) {
            return Err(CliError::Config("[solver] slack must be nonnegative".into()));
        }
        if v.hum_maxit == 0 || v.picard_maxit == 0 {
            return Err(CliError::Config("[solver] iteration limits must be positive".into()));
        }
        if self.geometry.samples == 0 {
            return Err(CliError::Config("[geometry] samples must be positive".into()));
        }
        positive(self.geometry.radius, "[geometry] radius")?;
        positive(self.equivalence.horizon, "[equivalence] horizon")?;
        if !(0.0..90.0).contains(&self.equivalence.cone_deg) {
            return Err(CliError::Config("[equivalence] cone_deg must lie in [0, 90)".into()));
        }
        if experiment == Experiment::Equivalence
            && self.equivalence.refine
            && self.grid.counts.iter().any(|n| (n - 1) % 4 != 0 || *n < 17)
        {
            return Err(CliError::Config(
                "[equivalence] refine needs counts with (n - 1) divisible by 4 and n ≥ 17".into(),
            ));
        }
        positive(self.hum.horizon, "[hum] horizon")?;
        positive(self.hum.picard_horizon, "[hum] picard_horizon")?;
        if self.hum.penalties.iter().any(|p| !(*p > 0.0)) || self.hum.penalties.windows(2).any(|w| w[1] > w[0]) {
            return Err(CliError::Config("[hum] penalties must be positive and non-increasing".into()));
        }
        Ok(())
    }
}

fn positive(x: f64, name: &str) -> Result<(), CliError> {
    if x > 0.0 && x.is_finite() {
        Ok(())
    } else {
        Err(CliError::Config(format!("{name} must be positive, got {x}")))
    }
}

fn unit(a: [f64; 3], name: &str) -> Result<UnitVector3, CliError> {
    UnitVector3::normalize(a.into()).map_err(|e| CliError::Config(format!("{name}: {e}")))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimal_config_parses() {
        let c = RunConfig::parse("[grid]\ndimension = 1\nextents = [1.0]\ncounts = [201]\n").unwrap();
        assert_eq!(c.grid, GridSpec::line(201));
        assert_eq!(c.solver, SolverSpec::default());
        c.validate(Experiment::Stage1).unwrap();
    }

    #[test]
    fn missing_grid_and_unknown_keys_fail() {
        assert!(RunConfig::parse("seed = 3\n").is_err());
        assert!(RunConfig::parse("[grid]\ndimension = 1\nextents = [1.0]\ncounts = [201]\nbogus = 1\n").is_err());
    }

    #[test]
    fn hemisphere_violation_is_config_error() {
        let mut c = RunConfig::with_grid(GridSpec::line(51));
        c.initial.cone_deg = Some(95.0);
        assert!(matches!(c.validate(Experiment::Stage1), Err(CliError::Config(_))));
    }

    #[test]
    fn experiment_name_mismatch() {
        let mut c = RunConfig::with_grid(GridSpec::line(51));
        c.experiment = Some("hum".into());
        assert!(c.validate(Experiment::Stage1).is_err());
        assert!(c.validate(Experiment::Hum).is_ok());
    }
}
