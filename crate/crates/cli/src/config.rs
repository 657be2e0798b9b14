//! Run configuration: JSON schema, command-line overrides and validation.

use std::path::{Path, PathBuf};

use clap::ValueEnum;
use serde::{Deserialize, Serialize};

use fraclab::optim::SearchBudget;
use fraclab::quadrature::{HardyWeight, QuadratureSpec, TrialFunction};
use fraclab::verify::BumpFamily;
use fraclab::{Domain, FracParams};

use crate::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Command {
    Constants,
    Mdist,
    Seminorm,
    GsrCheck,
    Onedim,
    VerifyHardy,
    VerifyHsm,
    EstimateSigma,
    DecompositionCheck,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    #[default]
    Json,
    Csv,
}

/// Sub-task of the `onedim` command.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum OnedimTask {
    /// W_{p,s} sweep and endpoint slopes
    WPotential,
    /// randomized Garsia–Rodemich–Rumsey suite
    #[default]
    Grr,
    /// interval Hardy inequality with remainder, one- and two-sided
    Interval,
    /// empirical constant of the key L^∞ inequality
    Key,
}

fn default_params() -> FracParams {
    FracParams {
        dim: 2,
        p: 2.0,
        s: 0.75,
    }
}

fn default_count() -> usize {
    20
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrialsSpec {
    #[serde(default)]
    pub family: BumpFamily,
    #[serde(default = "default_count")]
    pub count: usize,
    #[serde(default)]
    pub seed: u64,
}

impl Default for TrialsSpec {
    fn default() -> Self {
        Self {
            family: BumpFamily::default(),
            count: default_count(),
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSpec {
    #[serde(default)]
    pub path: Option<PathBuf>,
    #[serde(default)]
    pub format: Format,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default)]
    pub command: Option<Command>,
    #[serde(default = "default_params")]
    pub params: FracParams,
    /// Defaults: (−1, 1) for N = 1, the unit ball otherwise; `gsr-check` uses {x_N > 0}.
    #[serde(default)]
    pub domain: Option<Domain>,
    #[serde(default)]
    pub quad: QuadratureSpec,
    #[serde(default)]
    pub trials: TrialsSpec,
    #[serde(default)]
    pub output: OutputSpec,
    /// Hardy weight; the pseudodistance m_{ps} unless set.
    #[serde(default)]
    pub weight_mode: Option<HardyWeight>,
    #[serde(default)]
    pub task: Option<OnedimTask>,
    /// Trial function for single-function commands.
    #[serde(default)]
    pub trial: Option<TrialFunction>,
    /// Evaluation points for `mdist`.
    #[serde(default)]
    pub points: Option<Vec<Vec<f64>>>,
    /// Exponent α of m_α for `mdist`; ps unless set.
    #[serde(default)]
    pub alpha: Option<f64>,
    /// Integrability exponent of the key inequality; the Sobolev exponent unless set.
    #[serde(default)]
    pub q: Option<f64>,
    /// Coefficient of the weighted seminorm in remainder inequalities.
    #[serde(default)]
    pub c_p: Option<f64>,
    #[serde(default)]
    pub search: Option<SearchBudget>,
    /// Values of s for sweeps (`constants`, `estimate-sigma`).
    #[serde(default)]
    pub sweep: Option<Vec<f64>>,
}

impl Default for RunConfig {
    fn default() -> Self {
        serde_json::from_str("{}").expect("all fields have defaults")
    }
}

/// Values given on the command line; each one replaces the config entry.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub dim: Option<usize>,
    pub p: Option<f64>,
    pub s: Option<f64>,
    pub resolution: Option<usize>,
    pub seed: Option<u64>,
    pub out: Option<PathBuf>,
    pub format: Option<Format>,
    pub task: Option<OnedimTask>,
    pub count: Option<usize>,
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::config(format!("cannot read config {}: {e}", path.display())))?;
        serde_json::from_str(&text).map_err(|e| CliError::config(format!("invalid config {}: {e}", path.display())))
    }

    pub fn apply(&mut self, command: Command, o: &Overrides) -> Result<(), CliError> {
        if let Some(c) = self.command {
            if c != command {
                return Err(CliError::config(format!(
                    "config is for command {c:?} but {command:?} was requested"
                )));
            }
        }
        self.command = Some(command);
        if let Some(n) = o.dim {
            self.params.dim = n;
        }
        if let Some(p) = o.p {
            self.params.p = p;
        }
        if let Some(s) = o.s {
            self.params.s = s;
        }
        if let Some(r) = o.resolution {
            self.quad.resolution = r;
        }
        if let Some(seed) = o.seed {
            self.trials.seed = seed;
        }
        if let Some(out) = &o.out {
            self.output.path = Some(out.clone());
        }
        if let Some(f) = o.format {
            self.output.format = f;
        }
        if let Some(t) = o.task {
            self.task = Some(t);
        }
        if let Some(c) = o.count {
            self.trials.count = c;
        }
        Ok(())
    }

    /// Schema-level invariants; violations are configuration errors.
    pub fn validate(&self) -> Result<(), CliError> {
        self.params.validate()?;
        self.quad.validate()?;
        if let Some(d) = &self.domain {
            d.validate()?;
            if d.dim() != self.params.dim {
                return Err(CliError::config(format!(
                    "domain dimension {} does not match N = {}",
                    d.dim(),
                    self.params.dim
                )));
            }
        }
        if let Some(sw) = &self.sweep {
            if sw.is_empty() {
                return Err(CliError::config("sweep must list at least one value of s"));
            }
            for s in sw {
                FracParams { s: *s, ..self.params }.validate()?;
            }
        }
        Ok(())
    }

    pub fn domain_or_default(&self) -> Domain {
        self.domain.clone().unwrap_or_else(|| match self.params.dim {
            1 => Domain::interval(-1.0, 1.0),
            n => Domain::unit_ball(n),
        })
    }

    pub fn weight(&self) -> HardyWeight {
        self.weight_mode.unwrap_or_default()
    }

    pub fn budget(&self) -> SearchBudget {
        self.search.clone().unwrap_or_else(|| SearchBudget {
            seed: self.trials.seed,
            ..SearchBudget::default()
        })
    }
}
