//! Flat key-value experiment configuration (TOML), shared by config files,
//! command-line overrides and the provenance manifest written next to every
//! output.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::cost::{ClassParams, ReplacementMode};
use crate::events::p_from_rho_r;
use crate::harness::ExperimentConfig;
use crate::rcd::StepRule;
use crate::{Error, Result};

pub const DEFAULT_N: usize = 5;
pub const DEFAULT_ALPHA: f64 = 1.0;
pub const DEFAULT_KAPPA: f64 = 10.0;
pub const DEFAULT_RHO_R: f64 = 0.0125;
pub const DEFAULT_HORIZON: u64 = 10_000;
pub const DEFAULT_TRIALS: u64 = 200;

/// Unresolved configuration; keys mirror the command-line flag names.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", deny_unknown_fields)]
pub struct ConfigFile {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub n: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub alpha: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub beta: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub kappa: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub p: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub rho_r: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub t: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub trials: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub mode: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub step: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub workers: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub out: Option<String>,
    /// Provenance only; ignored when resolving.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub code_version: Option<String>,
}

impl ConfigFile {
    pub fn read(path: &Path) -> Result<Self> {
        Self::parse(&std::fs::read_to_string(path)?)
    }

    pub fn parse(text: &str) -> Result<Self> {
        Ok(toml::from_str(text)?)
    }

    pub fn to_toml(&self) -> Result<String> {
        Ok(toml::to_string(self)?)
    }

    /// Layers `overrides` on top of `self`. Setting one member of a mutually
    /// exclusive pair (`p`/`rho-r`, `beta`/`kappa`) clears the other one.
    pub fn merged(mut self, overrides: &ConfigFile) -> Self {
        macro_rules! take {
            ($($field:ident),*) => {
                $(if overrides.$field.is_some() {
                    self.$field = overrides.$field.clone();
                })*
            };
        }
        if overrides.p.is_some() {
            self.rho_r = None;
        }
        if overrides.rho_r.is_some() {
            self.p = None;
        }
        if overrides.beta.is_some() {
            self.kappa = None;
        }
        if overrides.kappa.is_some() {
            self.beta = None;
        }
        take!(n, alpha, beta, kappa, p, rho_r, t, trials, seed, mode, step, workers, out, code_version);
        self
    }

    /// Applies defaults and validates into an [`ExperimentConfig`].
    pub fn resolve(&self) -> Result<ExperimentConfig> {
        let n = self.n.unwrap_or(DEFAULT_N);
        let alpha = self.alpha.unwrap_or(DEFAULT_ALPHA);
        let class = match (self.beta, self.kappa) {
            (Some(_), Some(_)) => {
                return Err(Error::config("kappa", "give either beta or kappa, not both"))
            }
            (Some(beta), None) => ClassParams::new(alpha, beta),
            (None, kappa) => {
                let kappa = kappa.unwrap_or(DEFAULT_KAPPA);
                if !(kappa >= 1.0 && kappa.is_finite()) {
                    return Err(Error::config("kappa", format!("must be >= 1, got {kappa}")));
                }
                ClassParams::from_kappa(alpha, kappa)
            }
        }
        .map_err(|e| Error::config("alpha", e.to_string()))?;
        let p = match (self.p, self.rho_r) {
            (Some(_), Some(_)) => {
                return Err(Error::config("rho-r", "give either p or rho-r, not both"))
            }
            (Some(p), None) => p,
            (None, rho_r) => {
                let rho_r = rho_r.unwrap_or(DEFAULT_RHO_R);
                if !(rho_r >= 0.0 && rho_r.is_finite()) {
                    return Err(Error::config("rho-r", format!("must be finite and >= 0, got {rho_r}")));
                }
                p_from_rho_r(rho_r)
            }
        };
        let mode = match &self.mode {
            Some(m) => m.parse::<ReplacementMode>()?,
            None => ReplacementMode::Adversarial,
        };
        let step = match &self.step {
            Some(s) => s.parse::<StepRule>()?,
            None => StepRule::TwoBeta,
        };
        let mut cfg = ExperimentConfig::new(
            n,
            class,
            p,
            self.t.unwrap_or(DEFAULT_HORIZON),
            self.trials.unwrap_or(DEFAULT_TRIALS),
            self.seed.unwrap_or(0),
            mode,
        )?
        .with_step(step);
        if let Some(w) = self.workers {
            if w == 0 {
                return Err(Error::config("workers", "must be at least 1"));
            }
            cfg = cfg.with_workers(w);
        }
        Ok(cfg)
    }

    /// Manifest echoing a resolved configuration; re-resolving it yields the
    /// same effective configuration.
    pub fn manifest(cfg: &ExperimentConfig, out: Option<&str>) -> Self {
        Self {
            n: Some(cfg.n),
            alpha: Some(cfg.class.alpha()),
            beta: Some(cfg.class.beta()),
            p: Some(cfg.p),
            t: Some(cfg.horizon),
            trials: Some(cfg.trials),
            seed: Some(cfg.master_seed),
            mode: Some(cfg.mode.to_string()),
            step: Some(cfg.step.to_string()),
            workers: cfg.workers,
            out: out.map(str::to_owned),
            code_version: Some(env!("CARGO_PKG_VERSION").to_owned()),
            ..Self::default()
        }
    }
}
