use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use serde::Deserialize;
use tieq_core::anneal::{Schedule, Thresholds};
use tieq_core::fixedpoint::SolverConfig;
use tieq_core::model::json_pointer;
use tieq_core::verify::BruteForceConfig;
use tieq_core::Mode;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum Command {
    Solve,
    Anneal,
    Bridge,
    Verify,
    Scan,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Solve => "solve",
            Command::Anneal => "anneal",
            Command::Bridge => "bridge",
            Command::Verify => "verify",
            Command::Scan => "scan",
        }
    }
}

/// Run description. Paths are relative to the config file.
#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    /// Optional; must match the subcommand when given.
    #[serde(default)]
    pub command: Option<Command>,
    pub model: PathBuf,
    /// Defaults to the mode of the model's kernel.
    #[serde(default)]
    pub mode: Option<Mode>,
    /// Entropy weight for `solve` and `bridge`.
    #[serde(default)]
    pub lambda: Option<f64>,
    #[serde(default)]
    pub schedule: Schedule,
    #[serde(default)]
    pub solver: SolverConfig,
    #[serde(default)]
    pub thresholds: Thresholds,
    /// Step sizes for `bridge`, strictly decreasing.
    #[serde(default)]
    pub steps: Vec<f64>,
    /// Relative argmax tolerance for `scan` and the brute-force check.
    #[serde(default = "default_scan_tol")]
    pub scan_tol: f64,
    #[serde(default)]
    pub verify: VerifyConfig,
    #[serde(default)]
    pub out: Option<PathBuf>,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VerifyConfig {
    /// Policy to check: a bare policy or a report holding `final_policy`.
    /// Without it the policy is obtained by annealing.
    #[serde(default)]
    pub policy: Option<PathBuf>,
    #[serde(default)]
    pub brute_force: Option<BruteForceConfig>,
    /// Tolerance of the value comparisons (Bellman, mean action).
    #[serde(default = "default_value_tol")]
    pub value_tol: f64,
}

impl Default for VerifyConfig {
    fn default() -> Self {
        VerifyConfig {
            policy: None,
            brute_force: None,
            value_tol: default_value_tol(),
        }
    }
}

fn default_scan_tol() -> f64 {
    1e-9
}

fn default_value_tol() -> f64 {
    1e-6
}

impl RunConfig {
    pub fn from_str(text: &str) -> Result<Self> {
        let de = &mut serde_json::Deserializer::from_str(text);
        let cfg: RunConfig = serde_path_to_error::deserialize(de).map_err(|e| {
            let msg = e.inner().to_string();
            anyhow::anyhow!("{}: {msg}", json_pointer(e.path(), &msg))
        })?;
        cfg.check()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("cannot read {}", path.display()))?;
        let mut cfg = Self::from_str(&text).with_context(|| format!("config {}", path.display()))?;
        let base = path.parent().unwrap_or(Path::new("."));
        cfg.model = base.join(&cfg.model);
        if let Some(p) = &cfg.verify.policy {
            cfg.verify.policy = Some(base.join(p));
        }
        if let Some(o) = &cfg.out {
            cfg.out = Some(base.join(o));
        }
        if !cfg.model.exists() {
            bail!("/model: {} does not exist", cfg.model.display());
        }
        if let Some(p) = &cfg.verify.policy {
            if !p.exists() {
                bail!("/verify/policy: {} does not exist", p.display());
            }
        }
        Ok(cfg)
    }

    fn check(&self) -> Result<()> {
        if let Some(l) = self.lambda {
            if !(l > 0.0 && l.is_finite()) {
                bail!("/lambda: must be positive, got {l}");
            }
        }
        let s = &self.solver;
        if !(s.damping > 0.0 && s.damping <= 1.0) {
            bail!("/solver/damping: must lie in (0, 1], got {}", s.damping);
        }
        if !(s.tol > 0.0) {
            bail!("/solver/tol: must be positive, got {}", s.tol);
        }
        if s.max_iter == 0 {
            bail!("/solver/max_iter: must be at least 1");
        }
        if s.multistart == 0 {
            bail!("/solver/multistart: must be at least 1");
        }
        if let Some((k, h)) = self.steps.iter().enumerate().find(|(_, h)| !(**h > 0.0)) {
            bail!("/steps/{k}: must be positive, got {h}");
        }
        if !(self.scan_tol >= 0.0) {
            bail!("/scan_tol: must be >= 0, got {}", self.scan_tol);
        }
        Ok(())
    }

    pub fn lambda(&self) -> Result<f64> {
        self.lambda.context("/lambda: required for this command")
    }
}
