//! Declarative experiment configuration (TOML).
//!
//! ```toml
//! alphas = [0.1, 0.3]
//! horizon = 8000
//! repetitions = 100
//! base_seed = 0
//! filter_window = 30
//! output = "results/study.csv"
//! means = [3.0, 3.1]
//!
//! [[policy]]
//! id = "inf-clip"
//!
//! [[policy]]
//! id = "skip-inf"
//! lambda = 3.5
//! ```
//!
//! Unknown keys are rejected.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PolicyId {
    InfClip,
    SkipInf,
    RobustUcb,
}

impl PolicyId {
    pub fn as_str(self) -> &'static str {
        match self {
            PolicyId::InfClip => "inf-clip",
            PolicyId::SkipInf => "skip-inf",
            PolicyId::RobustUcb => "robust-ucb",
        }
    }
}

/// One policy entry with optional overrides of the planner defaults.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PolicySpec {
    pub id: PolicyId,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lambda: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mu: Option<f64>,
    /// Tsallis exponent (INF-clip and Skip-INF only).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub q: Option<f64>,
    /// Confidence constant (robust UCB only).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub c: Option<f64>,
}

fn default_window() -> usize {
    30
}

fn default_means() -> Vec<f64> {
    vec![3.0, 3.1]
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub alphas: Vec<f64>,
    pub horizon: usize,
    pub repetitions: usize,
    #[serde(default)]
    pub base_seed: u64,
    #[serde(default = "default_window")]
    pub filter_window: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output: Option<PathBuf>,
    /// Arm mean losses; each arm is a scaled log-Pareto law.
    #[serde(default = "default_means")]
    pub means: Vec<f64>,
    /// Also dump per-run traces next to the CSV.
    #[serde(default)]
    pub raw_traces: bool,
    #[serde(rename = "policy")]
    pub policies: Vec<PolicySpec>,
}

impl ExperimentConfig {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let cfg: Self = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
        Self::from_toml_str(&text).map_err(|e| match e {
            Error::Config(msg) => Error::Config(format!("{}: {msg}", path.display())),
            other => other,
        })
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |field: &str, msg: String| Err(Error::Config(format!("field `{field}`: {msg}")));
        if self.horizon == 0 {
            return bad("horizon", "must be >= 1".into());
        }
        if self.repetitions == 0 {
            return bad("repetitions", "must be >= 1".into());
        }
        if self.filter_window == 0 {
            return bad("filter_window", "must be >= 1".into());
        }
        if self.alphas.is_empty() {
            return bad("alphas", "needs at least one value".into());
        }
        for &a in &self.alphas {
            if !(a > 0.0 && a <= 1.0) {
                return bad("alphas", format!("{a} not in (0, 1]"));
            }
        }
        if self.means.is_empty() || self.means.iter().any(|m| !(*m > 0.0 && m.is_finite())) {
            return bad("means", "need at least one positive finite mean".into());
        }
        if self.policies.is_empty() {
            return bad("policy", "needs at least one [[policy]] table".into());
        }
        for p in &self.policies {
            for (name, v) in [("lambda", p.lambda), ("mu", p.mu), ("c", p.c)] {
                if let Some(v) = v {
                    if !(v > 0.0 && v.is_finite()) {
                        return bad(name, format!("{v} must be > 0 (policy {})", p.id.as_str()));
                    }
                }
            }
            if let Some(q) = p.q {
                if !(q > 0.0 && q < 1.0) {
                    return bad("q", format!("{q} not in (0, 1)"));
                }
            }
        }
        Ok(())
    }
}
