//! Experiment configuration: a TOML file with `[model]`, `[engine]`,
//! `[scan]` and `[output]` tables. Everything is checked before any compute.

use std::path::{Path, PathBuf};

use forge_core::fermion::{build_fh, build_nsm};
use forge_core::{Hamiltonian, SectorSpec};
use serde::Deserialize;

use crate::error::{CliError, Result};

#[derive(Clone, Debug, Deserialize, PartialEq)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
pub enum ModelConfig {
    Hubbard {
        sites: usize,
        #[serde(default = "one")]
        t: f64,
        t_m: f64,
        u: f64,
        n_up: usize,
        n_down: usize,
    },
    Shell {
        interaction: PathBuf,
        protons: usize,
        neutrons: usize,
        #[serde(default)]
        twice_jz: i32,
    },
}

fn one() -> f64 {
    1.0
}

#[derive(Clone, Copy, Debug, Default, Deserialize, PartialEq, Eq)]
#[serde(rename_all = "lowercase")]
pub enum LambdaChoice {
    #[default]
    Fixed,
    Variational,
}

/// Optional overrides of the engine defaults. Missing keys keep the
/// defaults of the command being run.
#[derive(Clone, Debug, Default, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct EngineConfig {
    pub cuts: Option<usize>,
    pub max_iterations: Option<usize>,
    pub gradient_tol: Option<f64>,
    /// Negative disables the target.
    pub infidelity_target: Option<f64>,
    /// Negative disables the bound stop.
    pub bound_rel_tol: Option<f64>,
    /// Full re-optimization period `l`.
    pub lazy_every: Option<usize>,
    /// Circuit exclusion period `φ`; 0 disables.
    pub exclude_every: Option<usize>,
    /// Number of kept Schmidt terms; checked against the forging layout.
    pub chi_cut: Option<usize>,
    #[serde(default)]
    pub lambda: LambdaChoice,
    /// 0 keeps the rayon default.
    #[serde(default)]
    pub threads: usize,
    /// Record wall-clock times in traces (makes them non-reproducible).
    #[serde(default)]
    pub timing: bool,
}

#[derive(Clone, Debug, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct ScanConfig {
    /// Explicit grid of central hoppings; overrides start/stop/steps.
    pub t_m: Option<Vec<f64>>,
    #[serde(default)]
    pub start: f64,
    #[serde(default = "two")]
    pub stop: f64,
    #[serde(default = "default_steps")]
    pub steps: usize,
    /// Singular values and truncation infidelities written per row.
    #[serde(default = "eight")]
    pub values: usize,
}

fn two() -> f64 {
    2.0
}
fn default_steps() -> usize {
    21
}
fn eight() -> usize {
    8
}

impl Default for ScanConfig {
    fn default() -> Self {
        Self {
            t_m: None,
            start: 0.0,
            stop: 2.0,
            steps: default_steps(),
            values: eight(),
        }
    }
}

impl ScanConfig {
    pub fn grid(&self) -> Vec<f64> {
        match &self.t_m {
            Some(v) => v.clone(),
            None if self.steps == 1 => vec![self.start],
            None => (0..self.steps)
                .map(|i| self.start + (self.stop - self.start) * i as f64 / (self.steps - 1) as f64)
                .collect(),
        }
    }
}

#[derive(Clone, Debug, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct OutputConfig {
    #[serde(default = "default_dir")]
    pub dir: PathBuf,
    /// Write a checkpoint after every iteration.
    #[serde(default = "yes")]
    pub checkpoint: bool,
}

fn default_dir() -> PathBuf {
    PathBuf::from("out")
}
fn yes() -> bool {
    true
}

impl Default for OutputConfig {
    fn default() -> Self {
        Self {
            dir: default_dir(),
            checkpoint: true,
        }
    }
}

#[derive(Clone, Debug, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub model: ModelConfig,
    #[serde(default)]
    pub engine: EngineConfig,
    #[serde(default)]
    pub scan: ScanConfig,
    #[serde(default)]
    pub output: OutputConfig,
}

fn bad(msg: impl Into<String>) -> CliError {
    CliError::Config(msg.into())
}

impl ExperimentConfig {
    /// Parses and validates; relative paths are resolved against `base`.
    pub fn from_toml(text: &str, base: &Path) -> Result<Self> {
        let mut cfg: ExperimentConfig = toml::from_str(text).map_err(|e| bad(e.to_string()))?;
        if let ModelConfig::Shell { interaction, .. } = &mut cfg.model {
            if interaction.is_relative() {
                *interaction = base.join(&*interaction);
            }
        }
        if cfg.output.dir.is_relative() {
            cfg.output.dir = base.join(&cfg.output.dir);
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| bad(format!("{}: {e}", path.display())))?;
        Self::from_toml(&text, path.parent().unwrap_or(Path::new(".")))
    }

    fn validate(&self) -> Result<()> {
        let finite = |name: &str, x: f64| {
            if x.is_finite() {
                Ok(())
            } else {
                Err(bad(format!("{name} must be finite")))
            }
        };
        match &self.model {
            ModelConfig::Hubbard {
                sites,
                t,
                t_m,
                u,
                n_up,
                n_down,
            } => {
                if *sites < 2 || sites % 2 != 0 {
                    return Err(bad(format!("sites must be even and at least 2, got {sites}")));
                }
                if *sites > 12 {
                    return Err(bad("more than 12 sites does not fit a statevector here"));
                }
                if n_up > sites || n_down > sites {
                    return Err(bad("more electrons of one spin than sites"));
                }
                if n_up + n_down == 0 {
                    return Err(bad("no electrons"));
                }
                for (k, x) in [("t", *t), ("t_m", *t_m), ("u", *u)] {
                    finite(k, x)?;
                }
            }
            ModelConfig::Shell {
                interaction,
                protons,
                neutrons,
                ..
            } => {
                if !interaction.is_file() {
                    return Err(bad(format!("interaction file {} not found", interaction.display())));
                }
                if protons + neutrons == 0 {
                    return Err(bad("no valence nucleons"));
                }
            }
        }
        let e = &self.engine;
        if let Some(c) = e.cuts {
            if c > 2 {
                return Err(bad(format!("cuts must be 0, 1 or 2, got {c}")));
            }
            if c == 2 && matches!(self.model, ModelConfig::Hubbard { .. }) {
                return Err(bad("two cuts are only defined for the shell model"));
            }
        }
        if e.max_iterations == Some(0) {
            return Err(bad("max_iterations must be positive"));
        }
        if e.lazy_every == Some(0) {
            return Err(bad("lazy_every must be positive"));
        }
        for (k, x) in [
            ("gradient_tol", e.gradient_tol),
            ("infidelity_target", e.infidelity_target),
            ("bound_rel_tol", e.bound_rel_tol),
        ] {
            if let Some(x) = x {
                finite(k, x)?;
            }
        }
        if let Some(g) = e.gradient_tol {
            if g <= 0.0 {
                return Err(bad("gradient_tol must be positive"));
            }
        }
        if let Some(chi) = e.chi_cut {
            let expected = match self.model {
                ModelConfig::Hubbard { .. } => 5,
                ModelConfig::Shell { .. } => 6,
            };
            if chi != expected {
                return Err(bad(format!(
                    "chi_cut {chi} unsupported; this model forges with {expected} terms"
                )));
            }
        }
        let grid = self.scan.grid();
        if grid.is_empty() || grid.iter().any(|x| !x.is_finite()) {
            return Err(bad("scan grid must be nonempty and finite"));
        }
        if self.scan.values == 0 {
            return Err(bad("scan.values must be positive"));
        }
        Ok(())
    }

    pub fn hamiltonian(&self) -> Result<Hamiltonian> {
        match &self.model {
            ModelConfig::Hubbard { sites, t, t_m, u, .. } => Ok(build_fh(*sites, *t, *t_m, *u)?),
            ModelConfig::Shell { interaction, .. } => {
                let text = std::fs::read_to_string(interaction)?;
                Ok(build_nsm(&text)?)
            }
        }
    }

    /// Same model with another central hopping (Hubbard only).
    pub fn hubbard_with(&self, new_tm: f64) -> Result<Hamiltonian> {
        match &self.model {
            ModelConfig::Hubbard { sites, t, u, .. } => Ok(build_fh(*sites, *t, new_tm, *u)?),
            ModelConfig::Shell { .. } => Err(bad("scan needs a hubbard model")),
        }
    }

    pub fn sector(&self) -> SectorSpec {
        match &self.model {
            ModelConfig::Hubbard { n_up, n_down, .. } => SectorSpec::new(*n_up, *n_down),
            ModelConfig::Shell {
                protons,
                neutrons,
                twice_jz,
                ..
            } => SectorSpec::new(*protons, *neutrons).with_twice_jz(*twice_jz),
        }
    }

    pub fn is_hubbard(&self) -> bool {
        matches!(self.model, ModelConfig::Hubbard { .. })
    }
}
