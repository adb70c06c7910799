//! Scenario configuration files.
//!
//! ```toml
//! name = "stationary"
//! description = "..."
//!
//! [params]
//! dim = 3
//! p = 4.0
//!
//! [grid]
//! nodes = 129
//!
//! [run]
//! mode = "similarity"
//! initial = "stationary"
//! s_end = 5.0
//!
//! [checks]
//! dissipation = true
//!
//! [output]
//! max_snapshots = 40
//! ```

use std::path::Path;

use blowup_core::{Params, PerturbationSpec};
use serde::{Deserialize, Serialize};

use crate::LabError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Config {
    pub name: String,
    #[serde(default)]
    pub description: String,
    pub params: ParamsSection,
    #[serde(default)]
    pub grid: GridSection,
    pub run: RunSection,
    #[serde(default)]
    pub checks: ChecksSection,
    #[serde(default)]
    pub output: OutputSection,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Perturbation {
    #[default]
    None,
    /// `f(u) = -u`.
    KleinGordon,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ParamsSection {
    pub dim: u32,
    pub p: f64,
    #[serde(default)]
    pub perturbation: Perturbation,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GridSection {
    /// Nodes of the similarity grid on the unit ball.
    pub nodes: usize,
    pub physical_nodes: usize,
    pub physical_radius: f64,
}

impl Default for GridSection {
    fn default() -> Self {
        Self {
            nodes: 129,
            physical_nodes: 1025,
            physical_radius: 2.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Mode {
    /// Evolve the similarity equation directly.
    Similarity,
    /// Physical run up to blow-up, with physical-space diagnostics.
    Physical,
    /// Physical run, then transform into similarity variables at `T_hat`.
    Pipeline,
    /// Physical run seen from the frames `T_hat - δ`.
    FrameShift,
    /// Convergence orders over `run.refinement`.
    Refinement,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Initial {
    Stationary,
    Perturbed,
    OdeExact,
    Gaussian,
}

impl Initial {
    fn is_physical(self) -> bool {
        matches!(self, Self::OdeExact | Self::Gaussian)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunSection {
    pub mode: Mode,
    pub initial: Initial,
    #[serde(default)]
    pub s0: f64,
    #[serde(default = "defaults::s_end")]
    pub s_end: f64,
    #[serde(default = "defaults::epsilon")]
    pub epsilon: f64,
    #[serde(default = "defaults::one_u32")]
    pub perturbation_mode: u32,
    #[serde(default = "defaults::one")]
    pub blowup_time: f64,
    #[serde(default = "defaults::amplitude")]
    pub amplitude: f64,
    #[serde(default = "defaults::one")]
    pub width: f64,
    /// `Δs / h` of the similarity solver.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub step_ratio: Option<f64>,
    /// `Δt / h` of the physical solver.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cfl: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub snapshot_stride: Option<usize>,
    /// Spacing in `s` of transformed samples; defaults to the similarity step.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sample_spacing: Option<f64>,
    #[serde(default = "defaults::deltas")]
    pub deltas: Vec<f64>,
    #[serde(default = "defaults::refinement")]
    pub refinement: Vec<usize>,
    #[serde(default)]
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ChecksSection {
    pub drift: bool,
    pub dissipation: bool,
    pub lemma_identities: bool,
    pub monotonicity: bool,
    pub positivity: bool,
    pub cor_diagnostics: bool,
    pub blowup_time: bool,
    pub blowup_rate: bool,
    pub theorem1: bool,
    pub lower_bound: bool,
    pub frame_shift: bool,
    pub kg_increase: bool,
    pub identity_order: bool,
    pub operator_order: bool,
    pub noisy_fit: bool,
    pub drift_tolerance: f64,
    pub identity_tolerance: f64,
    pub blowup_time_tolerance: f64,
    pub rate_tolerance: f64,
    pub kg_increase_limit: f64,
    pub min_order: f64,
}

impl Default for ChecksSection {
    fn default() -> Self {
        Self {
            drift: false,
            dissipation: false,
            lemma_identities: false,
            monotonicity: false,
            positivity: false,
            cor_diagnostics: false,
            blowup_time: false,
            blowup_rate: false,
            theorem1: false,
            lower_bound: false,
            frame_shift: false,
            kg_increase: false,
            identity_order: false,
            operator_order: false,
            noisy_fit: false,
            drift_tolerance: 1e-6,
            identity_tolerance: 1e-2,
            blowup_time_tolerance: 1e-3,
            rate_tolerance: 0.02,
            kg_increase_limit: 0.05,
            min_order: 1.8,
        }
    }
}

impl ChecksSection {
    /// Names of the enabled checks, in declaration order.
    pub fn enabled(&self) -> Vec<&'static str> {
        [
            ("drift", self.drift),
            ("dissipation", self.dissipation),
            ("lemma_identities", self.lemma_identities),
            ("monotonicity", self.monotonicity),
            ("positivity", self.positivity),
            ("cor_diagnostics", self.cor_diagnostics),
            ("blowup_time", self.blowup_time),
            ("blowup_rate", self.blowup_rate),
            ("theorem1", self.theorem1),
            ("lower_bound", self.lower_bound),
            ("frame_shift", self.frame_shift),
            ("kg_increase", self.kg_increase),
            ("identity_order", self.identity_order),
            ("operator_order", self.operator_order),
            ("noisy_fit", self.noisy_fit),
        ]
        .into_iter()
        .filter_map(|(name, on)| on.then_some(name))
        .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OutputSection {
    pub snapshots: bool,
    /// Snapshots written per trajectory, evenly thinned.
    pub max_snapshots: usize,
}

impl Default for OutputSection {
    fn default() -> Self {
        Self {
            snapshots: true,
            max_snapshots: 40,
        }
    }
}

mod defaults {
    pub fn s_end() -> f64 {
        3.0
    }
    pub fn epsilon() -> f64 {
        0.1
    }
    pub fn one_u32() -> u32 {
        1
    }
    pub fn one() -> f64 {
        1.0
    }
    pub fn amplitude() -> f64 {
        3.0
    }
    pub fn deltas() -> Vec<f64> {
        vec![0.1, 0.01]
    }
    pub fn refinement() -> Vec<usize> {
        vec![129, 257, 513]
    }
}

/// Checks each mode can evaluate.
fn applicable(mode: Mode) -> &'static [&'static str] {
    match mode {
        Mode::Similarity => &[
            "drift",
            "dissipation",
            "lemma_identities",
            "monotonicity",
            "positivity",
            "cor_diagnostics",
        ],
        Mode::Physical => &["blowup_time", "blowup_rate", "theorem1", "lower_bound"],
        Mode::Pipeline => &[
            "blowup_time",
            "blowup_rate",
            "theorem1",
            "lower_bound",
            "monotonicity",
            "positivity",
            "cor_diagnostics",
            "kg_increase",
        ],
        Mode::FrameShift => &["blowup_time", "blowup_rate", "frame_shift"],
        Mode::Refinement => &["drift", "identity_order", "operator_order", "noisy_fit"],
    }
}

impl Config {
    pub fn from_toml(text: &str) -> Result<Self, LabError> {
        let config: Self = toml::from_str(text).map_err(|e| LabError::Config(e.to_string()))?;
        config.validate()?;
        Ok(config)
    }

    pub fn from_path(path: &Path) -> Result<Self, LabError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| LabError::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::from_toml(&text)
    }

    /// Validated core parameters.
    pub fn core_params(&self) -> Result<Params, LabError> {
        let perturbation = match self.params.perturbation {
            Perturbation::None => PerturbationSpec::None,
            Perturbation::KleinGordon => PerturbationSpec::KleinGordon,
        };
        Ok(Params::new(self.params.dim, self.params.p, perturbation)?)
    }

    /// Structural checks that need no solver: band membership, mode and
    /// initial data compatibility, check applicability, positive sizes.
    pub fn validate(&self) -> Result<(), LabError> {
        self.core_params()?;
        let run = &self.run;
        let fail = |msg: String| Err(LabError::Config(msg));
        let wants_physical = matches!(run.mode, Mode::Physical | Mode::Pipeline | Mode::FrameShift);
        if wants_physical != run.initial.is_physical() && run.mode != Mode::Refinement {
            return fail(format!(
                "initial data {:?} cannot drive mode {:?}",
                run.initial, run.mode
            ));
        }
        if run.mode == Mode::FrameShift && run.initial != Initial::OdeExact {
            return fail("frame-shift runs use ode-exact data".into());
        }
        if self.params.perturbation != Perturbation::None && !matches!(run.mode, Mode::Physical | Mode::Pipeline) {
            return fail("perturbed equations are only run in physical space".into());
        }
        let allowed = applicable(run.mode);
        if let Some(bad) = self.checks.enabled().into_iter().find(|c| !allowed.contains(c)) {
            return fail(format!("check {bad} does not apply to mode {:?}", run.mode));
        }
        if self.checks.drift && run.mode == Mode::Similarity && run.initial != Initial::Stationary {
            return fail("drift is measured from the stationary solution".into());
        }
        if self.checks.blowup_time && run.initial != Initial::OdeExact {
            return fail("blowup_time needs ode-exact data with a known blow-up time".into());
        }
        if self.checks.kg_increase && self.params.perturbation != Perturbation::KleinGordon {
            return fail("kg_increase applies to the klein-gordon perturbation".into());
        }
        if self.grid.nodes < 5 || self.grid.physical_nodes < 5 {
            return fail("grids need at least 5 nodes".into());
        }
        if run.mode == Mode::Refinement && (run.refinement.len() < 2 || run.refinement.iter().any(|&n| n < 5)) {
            return fail("refinement needs at least two grids of 5 or more nodes".into());
        }
        if run.mode == Mode::FrameShift && (run.deltas.is_empty() || run.deltas.iter().any(|d| !(*d > 0.0))) {
            return fail("frame shifts must be positive".into());
        }
        if self.output.max_snapshots == 0 {
            return fail("output.max_snapshots must be positive".into());
        }
        for (name, value) in [
            ("step_ratio", run.step_ratio),
            ("cfl", run.cfl),
            ("sample_spacing", run.sample_spacing),
        ] {
            if value.is_some_and(|v| !(v > 0.0)) {
                return fail(format!("run.{name} must be positive"));
            }
        }
        if run.snapshot_stride == Some(0) {
            return fail("run.snapshot_stride must be positive".into());
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"
name = "x"
[params]
dim = 3
p = 4.0
[run]
mode = "similarity"
initial = "stationary"
"#;

    #[test]
    fn defaults_fill_in() {
        let c = Config::from_toml(MINIMAL).unwrap();
        assert_eq!(c.grid, GridSection::default());
        assert_eq!(c.run.s_end, 3.0);
        assert!(c.checks.enabled().is_empty());
    }

    #[test]
    fn sobolev_exponent_is_a_config_error() {
        let text = MINIMAL.replace("p = 4.0", "p = 5.0");
        assert!(matches!(Config::from_toml(&text), Err(LabError::Core(_))));
    }

    #[test]
    fn unknown_keys_are_rejected() {
        let text = MINIMAL.replace("[run]", "[run]\nspeed = 2");
        assert!(matches!(Config::from_toml(&text), Err(LabError::Config(_))));
    }

    #[test]
    fn checks_must_fit_the_mode() {
        let text = format!("{MINIMAL}[checks]\ntheorem1 = true\n");
        assert!(matches!(Config::from_toml(&text), Err(LabError::Config(_))));
        let text = MINIMAL.replace("initial = \"stationary\"", "initial = \"gaussian\"");
        assert!(matches!(Config::from_toml(&text), Err(LabError::Config(_))));
    }

    #[test]
    fn round_trips_through_toml() {
        let c = Config::from_toml(MINIMAL).unwrap();
        let text = toml::to_string(&c).unwrap();
        assert_eq!(Config::from_toml(&text).unwrap(), c);
    }
}
