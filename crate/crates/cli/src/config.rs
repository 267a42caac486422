//! Experiment configuration, read from TOML.
//!
//! ```toml
//! schema_version = 1
//! experiment = "berry-conformance"
//! seed = 42
//!
//! [field]
//! kind = "flat"
//! energy = 1105
//!
//! [params]
//! windows = 2000
//! n = 3
//!
//! [expect]
//! berry = "pass"
//!
//! [output]
//! dir = "out/flat-1105"
//! ```

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::CliError;

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ExperimentKind {
    ShellCensus,
    LocalStats,
    BerryConformance,
    NodalCensus,
    Cns,
    QueCheck,
    Sandwich,
}

impl ExperimentKind {
    pub fn name(self) -> &'static str {
        match self {
            ExperimentKind::ShellCensus => "shell-census",
            ExperimentKind::LocalStats => "local-stats",
            ExperimentKind::BerryConformance => "berry-conformance",
            ExperimentKind::NodalCensus => "nodal-census",
            ExperimentKind::Cns => "cns",
            ExperimentKind::QueCheck => "que-check",
            ExperimentKind::Sandwich => "sandwich",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum FieldSpec {
    /// Toral eigenfunction with equal coefficients.
    Flat { energy: u64 },
    /// Toral eigenfunction with Gaussian coefficients drawn from the seed.
    Random { energy: u64 },
    /// `cos(2 pi n x_1)` with unit amplitude.
    PlaneWave { n: u64 },
    /// Eigenfunction or Berry sample stored as JSON.
    File { path: PathBuf },
    /// Independent Berry samples drawn from the seed.
    Berry {
        #[serde(default)]
        n_trunc: Option<usize>,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Expect {
    Pass,
    Fail,
    #[default]
    Any,
}

impl Expect {
    pub fn accepts(self, passed: bool) -> bool {
        match self {
            Expect::Pass => passed,
            Expect::Fail => !passed,
            Expect::Any => true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Expectations {
    pub berry: Option<Expect>,
    pub plane_wave: Option<Expect>,
    pub sandwich: Option<Expect>,
    pub condition: Option<Expect>,
}

/// Numeric parameters; unset values take per-experiment defaults.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Params {
    /// Number of windows (or Berry samples for conformance).
    pub windows: Option<usize>,
    /// Highest local coefficient index `N`.
    pub n: Option<usize>,
    /// Torus grid size `M`.
    pub grid: Option<usize>,
    /// `R` for nodal counts in a disk.
    pub radius: Option<f64>,
    /// `R'`, the diameter filter.
    pub radius_prime: Option<f64>,
    /// Sweep of `R` values for `cns`.
    pub radii: Option<Vec<f64>>,
    /// Berry samples for `cns` and `sandwich`.
    pub samples: Option<usize>,
    pub cells_per_unit: Option<f64>,
    /// Sandwich ball radius, in units of `h` for toral fields.
    pub r: Option<f64>,
    pub r_prime: Option<f64>,
    /// Radius of the disk carrying Berry samples in `sandwich`.
    pub omega_radius: Option<f64>,
    pub sectors: Option<usize>,
    pub dyadic_levels: Option<u32>,
    pub max_len: Option<usize>,
    pub gamma: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSpec {
    pub dir: PathBuf,
}

impl Default for OutputSpec {
    fn default() -> Self {
        Self {
            dir: PathBuf::from("out"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub schema_version: u32,
    pub experiment: ExperimentKind,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub field: Option<FieldSpec>,
    #[serde(default)]
    pub params: Params,
    #[serde(default)]
    pub expect: Expectations,
    #[serde(default)]
    pub output: OutputSpec,
}

fn fill<T: Clone>(slot: &mut Option<T>, value: T) {
    if slot.is_none() {
        *slot = Some(value);
    }
}

impl ExperimentConfig {
    pub fn new(experiment: ExperimentKind) -> Self {
        Self {
            schema_version: SCHEMA_VERSION,
            experiment,
            seed: 0,
            field: None,
            params: Params::default(),
            expect: Expectations::default(),
            output: OutputSpec::default(),
        }
    }

    pub fn from_toml(text: &str) -> Result<Self, CliError> {
        toml::from_str(text).map_err(|e| CliError::Config(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        Self::from_toml(&text)
    }

    /// Fills defaults and checks parameter ranges. The result is what the
    /// report records.
    pub fn resolve(&self) -> Result<Self, CliError> {
        if self.schema_version != SCHEMA_VERSION {
            return Err(CliError::Config(format!(
                "schema_version {} unsupported (expected {SCHEMA_VERSION})",
                self.schema_version
            )));
        }
        let mut c = self.clone();
        let p = &mut c.params;
        match c.experiment {
            ExperimentKind::ShellCensus => {
                fill(&mut p.max_len, 4);
                fill(&mut p.gamma, 0.25);
                fill(&mut c.expect.condition, Expect::Any);
            }
            ExperimentKind::LocalStats => {
                fill(&mut p.windows, 2000);
                fill(&mut p.n, 3);
            }
            ExperimentKind::BerryConformance => {
                fill(&mut p.windows, 2000);
                fill(&mut p.n, 3);
                fill(&mut c.expect.berry, Expect::Pass);
                fill(&mut c.expect.plane_wave, Expect::Any);
            }
            ExperimentKind::NodalCensus => {
                fill(&mut p.cells_per_unit, wavelab::nodal::BERRY_CELLS_PER_UNIT);
                fill(&mut p.radius, 10.0);
            }
            ExperimentKind::Cns => {
                fill(&mut p.samples, 200);
                fill(&mut p.radius_prime, 10.0);
                let radius = p.radius.unwrap_or(10.0);
                fill(&mut p.radii, vec![radius]);
                fill(&mut p.radius, radius);
                fill(&mut p.cells_per_unit, wavelab::nodal::BERRY_CELLS_PER_UNIT);
                fill(&mut p.grid, 2048);
            }
            ExperimentKind::QueCheck => {
                fill(&mut p.sectors, 8);
                fill(&mut p.dyadic_levels, 4);
            }
            ExperimentKind::Sandwich => {
                let berry = matches!(c.field, Some(FieldSpec::Berry { .. }) | None);
                fill(&mut p.r, if berry { 10.0 } else { 8.0 });
                fill(&mut p.r_prime, if berry { 5.0 } else { 4.0 });
                fill(&mut p.samples, 50);
                fill(&mut p.omega_radius, 15.0);
                fill(&mut p.cells_per_unit, 8.0);
                fill(&mut p.grid, 512);
                fill(&mut c.expect.sandwich, Expect::Pass);
            }
        }
        c.validate()?;
        Ok(c)
    }

    fn validate(&self) -> Result<(), CliError> {
        let p = &self.params;
        let bad = |m: String| Err(CliError::Config(m));
        let needs_field = !matches!(self.experiment, ExperimentKind::Cns | ExperimentKind::Sandwich);
        if needs_field && self.field.is_none() {
            return bad(format!("[field] is required for {}", self.experiment.name()));
        }
        if let (Some(r), Some(rp)) = (p.radius, p.radius_prime) {
            if !(rp > 0.0 && r > 0.0) {
                return bad(format!(
                    "params.radius = {r} and params.radius_prime = {rp} must be positive"
                ));
            }
            if rp > r {
                return bad(format!("params.radius_prime = {rp} exceeds params.radius = {r}"));
            }
        }
        if let Some(radii) = &p.radii {
            let rp = p.radius_prime.unwrap_or(0.0);
            if radii.is_empty() || radii.iter().any(|r| !(*r >= rp && *r > 0.0)) {
                return bad(format!(
                    "params.radii = {radii:?} must be non-empty and at least radius_prime"
                ));
            }
        }
        if let (Some(r), Some(rp)) = (p.r, p.r_prime) {
            if !(r > rp && rp > 0.0) {
                return bad(format!("params.r = {r} must exceed params.r_prime = {rp} > 0"));
            }
        }
        if p.windows == Some(0) || p.samples == Some(0) {
            return bad("params.windows and params.samples must be positive".into());
        }
        if p.sectors == Some(0) {
            return bad("params.sectors must be positive".into());
        }
        if let Some(c) = p.cells_per_unit {
            if !(c > 0.0) {
                return bad(format!("params.cells_per_unit = {c} must be positive"));
            }
        }
        if let Some(g) = p.gamma {
            if !(g > 0.0 && g < 0.5) {
                return bad(format!("params.gamma = {g} outside (0, 1/2)"));
            }
        }
        Ok(())
    }
}
