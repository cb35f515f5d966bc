//! Typed experiment configuration, read from TOML.
//!
//! Every section is optional and falls back to documented defaults; unknown
//! keys anywhere are rejected. `workers` is deliberately left out of the
//! echoed configuration because it must not influence results.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use spherization_core::dynamics::{ChordSearch, IntegratorConfig, NewtonConfig, NonCrossingConfig};
use spherization_core::entropy::{CensusConfig, VolumeGrowthConfig};
use spherization_core::geometry::{SolQuotient, Torus2};
use spherization_core::growth::{IntMatrix, MAX_SEMIDIRECT_RADIUS};
use spherization_core::starshape::{CalibrationSampling, RadialProfile};
use spherization_core::{LabError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Experiment {
    SolEntropy,
    SolSweep,
    ChordCensus,
    VolumeGrowth,
    ActionCheck,
    NoncrossingCheck,
    GroupGrowth,
    Mpp,
}

impl Experiment {
    pub fn as_str(&self) -> &'static str {
        match self {
            Experiment::SolEntropy => "sol-entropy",
            Experiment::SolSweep => "sol-sweep",
            Experiment::ChordCensus => "chord-census",
            Experiment::VolumeGrowth => "volume-growth",
            Experiment::ActionCheck => "action-check",
            Experiment::NoncrossingCheck => "noncrossing-check",
            Experiment::GroupGrowth => "group-growth",
            Experiment::Mpp => "mpp",
        }
    }

    fn default_manifold(&self) -> ManifoldConfig {
        match self {
            Experiment::SolEntropy | Experiment::SolSweep | Experiment::GroupGrowth => ManifoldConfig::Sol {
                monodromy: default_monodromy(),
            },
            _ => ManifoldConfig::Torus { basis: identity_basis() },
        }
    }
}

fn default_monodromy() -> IntMatrix {
    [[2, 1], [1, 1]]
}

fn identity_basis() -> [[f64; 2]; 2] {
    [[1.0, 0.0], [0.0, 1.0]]
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum ManifoldConfig {
    /// Flat torus; the columns of `basis` generate the lattice.
    Torus {
        #[serde(default = "identity_basis")]
        basis: [[f64; 2]; 2],
    },
    /// `Γ\Sol` with hyperbolic monodromy `A`.
    Sol {
        #[serde(default = "default_monodromy")]
        monodromy: IntMatrix,
    },
}

impl ManifoldConfig {
    pub fn dimension(&self) -> usize {
        match self {
            ManifoldConfig::Torus { .. } => 2,
            ManifoldConfig::Sol { .. } => 3,
        }
    }

    pub fn torus(&self) -> Result<Torus2> {
        match self {
            ManifoldConfig::Torus { basis } => Torus2::new(*basis),
            ManifoldConfig::Sol { .. } => Err(LabError::InvalidInput("this experiment needs a torus manifold".into())),
        }
    }

    pub fn sol(&self) -> Result<SolQuotient> {
        match self {
            ManifoldConfig::Sol { monodromy } => SolQuotient::new(*monodromy),
            ManifoldConfig::Torus { .. } => Err(LabError::InvalidInput("this experiment needs a sol manifold".into())),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SandwichSection {
    pub eps: f64,
    pub safety: f64,
    pub calibration_directions: usize,
    pub calibration_base_points: usize,
}

impl Default for SandwichSection {
    fn default() -> Self {
        let sampling = CalibrationSampling::default();
        Self {
            eps: 0.2,
            safety: 1.1,
            calibration_directions: sampling.directions,
            calibration_base_points: sampling.base_points,
        }
    }
}

impl SandwichSection {
    pub fn sampling(&self) -> CalibrationSampling {
        CalibrationSampling {
            directions: self.calibration_directions,
            base_points: self.calibration_base_points,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolSection {
    /// Energy level of `sol-entropy`, `volume-growth`, `chord-census` and `mpp`.
    pub k: f64,
    /// Levels of `sol-sweep`.
    pub k_values: Vec<f64>,
    /// Random initial conditions per level.
    pub samples: usize,
    pub horizon: f64,
    pub burn_in: f64,
    /// Also integrate the orbit through the fixed point `p₊` when it exists.
    pub fixed_point: bool,
}

impl Default for SolSection {
    fn default() -> Self {
        Self {
            k: 1.0,
            k_values: vec![0.3, 0.5, 0.75, 1.0, 1.5],
            samples: 50,
            horizon: 100.0,
            burn_in: 0.1,
            fixed_point: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CensusSection {
    pub horizon: f64,
    pub resolution: usize,
    pub sample_dt: f64,
    pub refine_threshold: f64,
    pub vertex_budget: usize,
    pub cell_slack: f64,
    pub newton_tol: f64,
    pub newton_max_iter: u32,
    pub dedup_radius: f64,
    pub jitter: f64,
    /// Number of `(q, q′)` pairs; the first uses `q0`/`q1` when given, the
    /// rest are drawn from the seed.
    pub pairs: usize,
    pub q0: Option<Vec<f64>>,
    pub q1: Option<Vec<f64>>,
    /// Counts at `t < fit_start` are left out of the fit and the checks.
    pub fit_start: f64,
}

impl Default for CensusSection {
    fn default() -> Self {
        let core = CensusConfig::default();
        Self {
            horizon: core.horizon,
            resolution: core.resolution,
            sample_dt: core.sample_dt,
            refine_threshold: core.refine_threshold,
            vertex_budget: core.vertex_budget,
            cell_slack: core.cell_slack,
            newton_tol: core.newton_tol,
            newton_max_iter: core.newton_max_iter,
            dedup_radius: core.dedup_radius,
            jitter: core.jitter,
            pairs: 1,
            q0: None,
            q1: None,
            fit_start: 1.0,
        }
    }
}

impl CensusSection {
    pub fn core(&self, seed: u64) -> CensusConfig {
        CensusConfig {
            horizon: self.horizon,
            resolution: self.resolution,
            sample_dt: self.sample_dt,
            refine_threshold: self.refine_threshold,
            vertex_budget: self.vertex_budget,
            cell_slack: self.cell_slack,
            newton_tol: self.newton_tol,
            newton_max_iter: self.newton_max_iter,
            dedup_radius: self.dedup_radius,
            jitter: self.jitter,
            seed,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct VolumeSection {
    pub n_max: usize,
    pub refine_threshold: f64,
    pub vertex_budget: usize,
    pub fit_window: usize,
    /// Minimum vertex count of the initial sphere mesh.
    pub resolution: usize,
    pub q0: Option<Vec<f64>>,
}

impl Default for VolumeSection {
    fn default() -> Self {
        let core = VolumeGrowthConfig::default();
        Self {
            n_max: core.n_max,
            refine_threshold: core.refine_threshold,
            vertex_budget: core.vertex_budget,
            fit_window: core.fit_window,
            resolution: 64,
            q0: None,
        }
    }
}

impl VolumeSection {
    pub fn core(&self) -> VolumeGrowthConfig {
        VolumeGrowthConfig {
            n_max: self.n_max,
            refine_threshold: self.refine_threshold,
            vertex_budget: self.vertex_budget,
            fit_window: self.fit_window,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ActionSection {
    pub levels: Vec<u32>,
    pub q0: [f64; 2],
    pub q1: [f64; 2],
    pub scaling_factors: Vec<f64>,
    pub scaling_chords: usize,
    pub homogeneous_samples: usize,
    pub time_change_samples: usize,
    pub sandwich_samples: usize,
    /// Output spacing for action quadrature.
    pub max_step: f64,
}

impl Default for ActionSection {
    fn default() -> Self {
        Self {
            levels: vec![1, 2, 3],
            q0: [0.0, 0.0],
            q1: [0.311, 0.173],
            scaling_factors: vec![2.0, 3.0],
            scaling_chords: 10,
            homogeneous_samples: 20,
            time_change_samples: 1000,
            sandwich_samples: 100_000,
            max_step: 0.01,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GrowthSection {
    pub n_max: usize,
    /// Radius of the abelian control ball.
    pub control_n_max: usize,
    pub fit_window: usize,
    pub element_budget: usize,
}

impl Default for GrowthSection {
    fn default() -> Self {
        Self {
            n_max: 12,
            control_n_max: 48,
            fit_window: 6,
            element_budget: spherization_core::growth::DEFAULT_ELEMENT_BUDGET,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MppSection {
    /// Sources and targets per axis: `grid²` pairs.
    pub grid: usize,
    pub fit_window: usize,
}

impl Default for MppSection {
    fn default() -> Self {
        Self { grid: 2, fit_window: 6 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub experiment: Experiment,
    #[serde(default)]
    pub seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output_dir: Option<PathBuf>,
    #[serde(default = "one", skip_serializing)]
    pub workers: usize,
    #[serde(default)]
    pub manifold: Option<ManifoldConfig>,
    #[serde(default = "round")]
    pub profile: RadialProfile,
    #[serde(default)]
    pub sandwich: SandwichSection,
    #[serde(default)]
    pub integrator: IntegratorConfig,
    #[serde(default)]
    pub newton: NewtonConfig,
    #[serde(default)]
    pub chords: ChordSearch,
    #[serde(default)]
    pub sol: SolSection,
    #[serde(default)]
    pub census: CensusSection,
    #[serde(default)]
    pub volume: VolumeSection,
    #[serde(default)]
    pub action: ActionSection,
    #[serde(default)]
    pub noncrossing: NonCrossingConfig,
    #[serde(default)]
    pub growth: GrowthSection,
    #[serde(default)]
    pub mpp: MppSection,
}

fn one() -> usize {
    1
}

fn round() -> RadialProfile {
    RadialProfile::Round
}

const MAX_WORKERS: usize = 256;

fn invalid(msg: impl Into<String>) -> LabError {
    LabError::InvalidInput(msg.into())
}

fn positive(name: &str, v: f64) -> Result<()> {
    if v.is_finite() && v > 0.0 {
        Ok(())
    } else {
        Err(invalid(format!("{name} must be positive and finite, got {v}")))
    }
}

fn check_point(name: &str, q: &Option<Vec<f64>>, dim: usize) -> Result<()> {
    match q {
        Some(v) if v.len() != dim => Err(invalid(format!("{name} needs {dim} coordinates, got {}", v.len()))),
        Some(v) if v.iter().any(|c| !c.is_finite()) => Err(invalid(format!("{name} has a non-finite coordinate"))),
        _ => Ok(()),
    }
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let mut cfg: Self = toml::from_str(text).map_err(|e| invalid(format!("config parse error: {e}")))?;
        if cfg.manifold.is_none() {
            cfg.manifold = Some(cfg.experiment.default_manifold());
        }
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| invalid(format!("cannot read {}: {e}", path.display())))?;
        Self::from_toml(&text)
    }

    pub fn manifold(&self) -> ManifoldConfig {
        self.manifold.clone().unwrap_or_else(|| self.experiment.default_manifold())
    }

    /// Range checks for every field the selected experiment reads.
    pub fn validate(&self) -> Result<()> {
        if self.workers == 0 || self.workers > MAX_WORKERS {
            return Err(invalid(format!("workers must lie in 1..={MAX_WORKERS}, got {}", self.workers)));
        }
        let manifold = self.manifold();
        match &manifold {
            ManifoldConfig::Torus { .. } => {
                manifold.torus()?;
            }
            ManifoldConfig::Sol { .. } => {
                manifold.sol()?;
            }
        }
        let dim = manifold.dimension();
        self.integrator.validate()?;
        let needs = |wanted: usize| -> Result<()> {
            if dim == wanted {
                Ok(())
            } else {
                Err(invalid(format!(
                    "{} runs on the {} model only",
                    self.experiment.as_str(),
                    if wanted == 2 { "torus" } else { "sol" }
                )))
            }
        };
        match self.experiment {
            Experiment::SolEntropy | Experiment::SolSweep => {
                needs(3)?;
                self.validate_sol()?;
            }
            Experiment::ChordCensus | Experiment::Mpp => {
                self.validate_census(dim)?;
                if dim == 2 {
                    self.validate_profile()?;
                } else {
                    positive("sol.k", self.sol.k)?;
                }
                if self.experiment == Experiment::Mpp {
                    if self.mpp.grid == 0 || self.mpp.grid > 64 {
                        return Err(invalid("mpp.grid must lie in 1..=64"));
                    }
                    if self.mpp.fit_window < 3 {
                        return Err(invalid("mpp.fit_window must be at least 3"));
                    }
                }
            }
            Experiment::VolumeGrowth => {
                let v = &self.volume;
                if v.n_max == 0 || v.n_max > 64 {
                    return Err(invalid("volume.n_max must lie in 1..=64"));
                }
                positive("volume.refine_threshold", v.refine_threshold)?;
                if v.fit_window < 3 {
                    return Err(invalid("volume.fit_window must be at least 3"));
                }
                if v.resolution < 3 || v.vertex_budget <= v.resolution {
                    return Err(invalid("volume.vertex_budget must exceed volume.resolution ≥ 3"));
                }
                check_point("volume.q0", &v.q0, dim)?;
                if dim == 2 {
                    self.validate_profile()?;
                } else {
                    positive("sol.k", self.sol.k)?;
                }
            }
            Experiment::ActionCheck => {
                needs(2)?;
                self.validate_profile()?;
                self.validate_chords()?;
                let a = &self.action;
                if a.levels.is_empty() || a.levels.iter().any(|n| *n == 0 || *n > 100) {
                    return Err(invalid("action.levels must be in 1..=100 and non-empty"));
                }
                for c in &a.scaling_factors {
                    positive("action.scaling_factors", *c)?;
                }
                positive("action.max_step", a.max_step)?;
                if a.q0.iter().chain(&a.q1).any(|v| !v.is_finite()) {
                    return Err(invalid("action.q0/q1 must be finite"));
                }
            }
            Experiment::NoncrossingCheck => {
                needs(2)?;
                self.validate_profile()?;
                let n = &self.noncrossing;
                if n.levels.is_empty() || n.levels.contains(&0) {
                    return Err(invalid("noncrossing.levels must be positive and non-empty"));
                }
                if n.s_points < 2 || n.scan_points < 16 {
                    return Err(invalid("noncrossing grids are too coarse"));
                }
                positive("noncrossing.r_cap", n.r_cap)?;
                positive("noncrossing.band", n.band)?;
            }
            Experiment::GroupGrowth => {
                needs(3)?;
                let g = &self.growth;
                if g.n_max < 3 || g.n_max > MAX_SEMIDIRECT_RADIUS {
                    return Err(invalid(format!("growth.n_max must lie in 3..={MAX_SEMIDIRECT_RADIUS}")));
                }
                if g.control_n_max < 3 || g.control_n_max > 4096 {
                    return Err(invalid("growth.control_n_max must lie in 3..=4096"));
                }
                if g.fit_window < 3 || g.fit_window > g.n_max.min(g.control_n_max) {
                    return Err(invalid("growth.fit_window must lie in 3..=min(n_max, control_n_max)"));
                }
            }
        }
        Ok(())
    }

    fn validate_sol(&self) -> Result<()> {
        let s = &self.sol;
        positive("sol.horizon", s.horizon)?;
        if !(0.0..1.0).contains(&s.burn_in) {
            return Err(invalid("sol.burn_in must lie in [0, 1)"));
        }
        positive("sol.k", s.k)?;
        if self.experiment == Experiment::SolSweep && s.k_values.is_empty() {
            return Err(invalid("sol.k_values must not be empty"));
        }
        for k in &s.k_values {
            positive("sol.k_values", *k)?;
        }
        if s.samples == 0 && !s.fixed_point {
            return Err(invalid("sol.samples must be positive when fixed_point is off"));
        }
        Ok(())
    }

    fn validate_profile(&self) -> Result<()> {
        self.profile.validate(2)?;
        positive("sandwich.eps", self.sandwich.eps)?;
        if self.sandwich.eps >= 1.0 {
            return Err(invalid("sandwich.eps must be below 1"));
        }
        if !(self.sandwich.safety >= 1.0 && self.sandwich.safety.is_finite()) {
            return Err(invalid("sandwich.safety must be at least 1"));
        }
        if self.sandwich.calibration_directions < 8 || self.sandwich.calibration_base_points == 0 {
            return Err(invalid("sandwich calibration sampling is too coarse"));
        }
        Ok(())
    }

    fn validate_chords(&self) -> Result<()> {
        let c = &self.chords;
        if c.deck_radius < 0 || c.deck_radius > 16 {
            return Err(invalid("chords.deck_radius must lie in 0..=16"));
        }
        if c.radii.is_empty() || c.tilts.is_empty() {
            return Err(invalid("chords.radii and chords.tilts must not be empty"));
        }
        for r in &c.radii {
            positive("chords.radii", *r)?;
        }
        positive("chords.dedup_tol", c.dedup_tol)?;
        positive("newton.tol", self.newton.tol)?;
        positive("newton.fd_step", self.newton.fd_step)?;
        if self.newton.max_iter == 0 {
            return Err(invalid("newton.max_iter must be positive"));
        }
        Ok(())
    }

    fn validate_census(&self, dim: usize) -> Result<()> {
        let c = &self.census;
        self.census.core(self.seed).validate()?;
        if c.pairs == 0 || c.pairs > 1024 {
            return Err(invalid("census.pairs must lie in 1..=1024"));
        }
        if !(c.fit_start >= 0.0 && c.fit_start < c.horizon) {
            return Err(invalid("census.fit_start must lie in [0, horizon)"));
        }
        check_point("census.q0", &c.q0, dim)?;
        check_point("census.q1", &c.q1, dim)?;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimal_config_uses_defaults() {
        let cfg = ExperimentConfig::from_toml("experiment = \"group-growth\"\n").unwrap();
        assert_eq!(cfg.seed, 0);
        assert_eq!(cfg.workers, 1);
        assert_eq!(cfg.growth, GrowthSection::default());
        assert!(matches!(cfg.manifold(), ManifoldConfig::Sol { .. }));
        cfg.validate().unwrap();
    }

    #[test]
    fn unknown_keys_are_rejected() {
        for text in [
            "experiment = \"mpp\"\nbogus = 1\n",
            "experiment = \"mpp\"\n[census]\nhorizon = 3.0\nhorizn = 4.0\n",
            "experiment = \"mpp\"\n[integrator]\nrtol = 1e-3\n",
            "experiment = \"mpp\"\n[manifold]\nkind = \"torus\"\nmonodromy = [[2,1],[1,1]]\n",
            "experiment = \"nothing\"\n",
        ] {
            assert!(ExperimentConfig::from_toml(text).is_err(), "{text}");
        }
    }

    #[test]
    fn range_violations_are_reported() {
        let mut cfg = ExperimentConfig::from_toml("experiment = \"sol-entropy\"\n[sol]\nhorizon = -1.0\n").unwrap();
        assert!(cfg.validate().is_err());
        cfg.sol.horizon = 10.0;
        cfg.validate().unwrap();
        cfg.workers = 0;
        assert!(cfg.validate().is_err());
    }

    #[test]
    fn experiments_refuse_the_wrong_manifold() {
        let cfg = ExperimentConfig::from_toml(
            "experiment = \"noncrossing-check\"\n[manifold]\nkind = \"sol\"\n",
        )
        .unwrap();
        assert!(cfg.validate().is_err());
        let cfg = ExperimentConfig::from_toml("experiment = \"chord-census\"\n[census]\nq0 = [0.1, 0.2, 0.3]\n").unwrap();
        assert!(cfg.validate().is_err());
    }

    #[test]
    fn profile_and_manifold_sections_parse() {
        let cfg = ExperimentConfig::from_toml(
            "experiment = \"action-check\"\n\
             [manifold]\nkind = \"torus\"\nbasis = [[1.0, 0.0], [0.5, 1.0]]\n\
             [profile]\nkind = \"ellipse\"\naxes = [1.0, 2.0]\n",
        )
        .unwrap();
        assert_eq!(cfg.profile, RadialProfile::Ellipse { axes: vec![1.0, 2.0] });
        cfg.validate().unwrap();
    }
}
