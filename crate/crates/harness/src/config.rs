//! Experiment configuration (TOML).
//!
//! Lengths are in units of the potential range `r_V`, energies in
//! `ħ²/(m r_V²)`.

use std::path::{Path, PathBuf};
use std::str::FromStr;

use anyhow::{bail, Context, Result};
use fewbody::few_body::SvmSettings;
use fewbody::two_body::{CriticalitySettings, RadialPotential};
use serde::{Deserialize, Serialize};

/// Unit-depth radial profile; the tuner finds the multiplier `g*`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum Profile {
    SquareWell { range: f64 },
    GaussianWell { range: f64 },
    Custom { potential: RadialPotential },
}

impl Profile {
    pub fn potential(&self) -> Result<RadialPotential> {
        Ok(match self {
            Profile::SquareWell { range } => RadialPotential::square_well(-1.0, *range)?,
            Profile::GaussianWell { range } => RadialPotential::gaussian_well(-1.0, *range)?,
            Profile::Custom { potential } => potential.clone(),
        })
    }
}

/// `V_λ = g* V + λ chi_R - B(λ) eta_R` on top of the tuned profile.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Perturbation {
    pub lambda: f64,
    pub r: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ShapeConfig {
    pub name: String,
    pub profile: Profile,
    /// Bracket for the depth multiplier.
    pub bracket: (f64, f64),
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub perturbation: Option<Perturbation>,
}

/// Basis growth settings without the seed, which comes from the run.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BasisConfig {
    pub target_size: usize,
    pub pool: usize,
    pub correlation_range: (f64, f64),
    pub rejection_threshold: f64,
}

impl BasisConfig {
    pub fn defaults_for(n: usize) -> Self {
        let s = SvmSettings::defaults_for(n);
        Self {
            target_size: s.target_size,
            pool: s.pool,
            correlation_range: s.correlation_range,
            rejection_threshold: s.rejection_threshold,
        }
    }

    pub fn with_seed(&self, seed: u64) -> SvmSettings {
        SvmSettings {
            target_size: self.target_size,
            pool: self.pool,
            seed,
            correlation_range: self.correlation_range,
            rejection_threshold: self.rejection_threshold,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BasisSizes {
    pub n3: BasisConfig,
    pub n4: BasisConfig,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OutputFormat {
    Csv,
    Json,
}

impl OutputFormat {
    pub fn extension(self) -> &'static str {
        match self {
            OutputFormat::Csv => "csv",
            OutputFormat::Json => "json",
        }
    }
}

impl FromStr for OutputFormat {
    type Err = anyhow::Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "csv" => Ok(OutputFormat::Csv),
            "json" => Ok(OutputFormat::Json),
            other => bail!(
                "config error: unknown output format {other:?} (expected \"csv\" or \"json\")"
            ),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub seed: u64,
    pub output_dir: PathBuf,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub threads: Option<usize>,
    pub formats: Vec<OutputFormat>,
    pub shapes: Vec<ShapeConfig>,
    /// Shape whose critical depth defines `V0` for the contradiction diagnostic.
    pub core_shape: String,
    pub r_values: Vec<f64>,
    pub lambda_values: Vec<f64>,
    /// `B(λ)/λ` rows deviating from `B'(0)` by more than this fraction are flagged.
    pub linearity_window: f64,
    /// Probe coupling for the extrapolated slope is `slope_probe / R²`.
    pub slope_probe: f64,
    /// Central-difference step in `λ` for the frozen-basis derivatives.
    pub fd_step: f64,
    pub criticality: CriticalitySettings,
    pub basis: BasisSizes,
}

pub const DEFAULT_CONFIG: &str = include_str!("../configs/default.toml");

impl ExperimentConfig {
    pub fn default_config() -> Self {
        Self::from_toml(DEFAULT_CONFIG).expect("bundled default config parses")
    }

    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: Self = toml::from_str(text).context("config error")?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_toml(&self) -> Result<String> {
        Ok(toml::to_string(self)?)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .with_context(|| format!("reading config {}", path.display()))?;
        Self::from_toml(&text).with_context(|| format!("in {}", path.display()))
    }

    /// Checks every field that does not depend on the subcommand.
    pub fn validate(&self) -> Result<()> {
        if self.formats.is_empty() {
            bail!("config error: formats is empty");
        }
        let mut names = std::collections::HashSet::new();
        for s in &self.shapes {
            if !names.insert(s.name.as_str()) {
                bail!("config error: duplicate shape name {:?}", s.name);
            }
            let (lo, hi) = s.bracket;
            if !(lo > 0.0 && hi > lo) {
                bail!(
                    "config error: shape {:?} bracket must satisfy 0 < lo < hi",
                    s.name
                );
            }
            s.profile
                .potential()
                .with_context(|| format!("config error: shape {:?}", s.name))?;
            if let Some(p) = s.perturbation {
                if !(p.r > 0.0 && p.lambda >= 0.0) {
                    bail!(
                        "config error: shape {:?} perturbation needs r > 0 and lambda >= 0",
                        s.name
                    );
                }
            }
        }
        if self.r_values.iter().any(|r| !(*r > 0.0)) {
            bail!("config error: r_values must be positive");
        }
        if self.lambda_values.iter().any(|l| !(*l >= 0.0)) {
            bail!("config error: lambda_values must be nonnegative");
        }
        if !(self.fd_step > 0.0 && self.slope_probe > 0.0 && self.linearity_window > 0.0) {
            bail!("config error: fd_step, slope_probe and linearity_window must be positive");
        }
        if self.threads == Some(0) {
            bail!("config error: threads must be at least 1");
        }
        for b in [&self.basis.n3, &self.basis.n4] {
            if b.target_size == 0 || b.pool == 0 {
                bail!("config error: basis target_size and pool must be positive");
            }
        }
        Ok(())
    }

    pub fn require_shapes(&self) -> Result<()> {
        if self.shapes.is_empty() {
            bail!("config error: shape list is empty");
        }
        Ok(())
    }

    pub fn require_r_values(&self) -> Result<()> {
        if self.r_values.is_empty() {
            bail!("config error: r_values is empty");
        }
        Ok(())
    }

    pub fn require_lambda_values(&self) -> Result<()> {
        if self.lambda_values.is_empty() {
            bail!("config error: lambda_values is empty");
        }
        Ok(())
    }

    pub fn shape(&self, name: &str) -> Result<&ShapeConfig> {
        self.shapes
            .iter()
            .find(|s| s.name == name)
            .with_context(|| format!("config error: no shape named {name:?}"))
    }
}
