use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::agent::AgentConfig;
use crate::envs::EnvSpec;
use crate::error::{Error, Result};
use crate::masp::MaspConfig;

/// Which of the three compared agents to train.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    /// Primitive actions only, no penalty.
    Baseline,
    /// Macro-augmented action space, no penalty.
    Macro,
    /// Macro-augmented action space with the similarity penalty.
    #[default]
    Masp,
}

/// Where the macro set comes from: a manifest written by `mine`, or mining
/// parameters applied to a corpus file or to freshly generated scripted
/// rollouts.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MacroSource {
    pub manifest: Option<PathBuf>,
    pub k: usize,
    pub l_min: usize,
    pub l_max: usize,
    /// Trajectory JSONL file. When absent a scripted corpus is generated.
    pub corpus: Option<PathBuf>,
    /// Episodes in a generated corpus.
    pub corpus_episodes: usize,
    pub corpus_seed: u64,
}

impl Default for MacroSource {
    fn default() -> Self {
        Self {
            manifest: None,
            k: 8,
            l_min: 2,
            l_max: 4,
            corpus: None,
            corpus_episodes: 200,
            corpus_seed: 0,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepAxis {
    K,
    PReplace,
    Eta,
}

impl SweepAxis {
    pub fn name(self) -> &'static str {
        match self {
            SweepAxis::K => "k",
            SweepAxis::PReplace => "p_replace",
            SweepAxis::Eta => "eta",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepConfig {
    pub axis: SweepAxis,
    pub values: Vec<f64>,
}

/// A whole experiment, as one JSON document. Unknown keys are rejected.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub env: EnvSpec,
    pub seeds: Vec<u64>,
    /// Budget per run, in primitive environment steps.
    pub total_steps: usize,
    pub mode: Mode,
    pub macros: Option<MacroSource>,
    pub p_replace: f64,
    pub masp: MaspConfig,
    pub agent: AgentConfig,
    /// Checkpoint (`.json`) or exported `Σ` (`.csv`) to keep frozen.
    pub frozen_sigma: Option<PathBuf>,
    pub eval_episodes: usize,
    /// Checkpoint read by `eval` and, as the `Σ` source, by `transfer`.
    pub checkpoint: Option<PathBuf>,
    pub sweep: Option<SweepConfig>,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            env: EnvSpec::default(),
            seeds: vec![0],
            total_steps: 500_000,
            mode: Mode::Masp,
            macros: Some(MacroSource::default()),
            p_replace: 0.0,
            masp: MaspConfig::default(),
            agent: AgentConfig::default(),
            frozen_sigma: None,
            eval_episodes: 100,
            checkpoint: None,
            sweep: None,
        }
    }
}

impl ExperimentConfig {
    /// Parses a config document. Relative paths inside it are resolved
    /// against `base` (usually the config file's directory).
    pub fn from_json(text: &str, base: &Path) -> Result<Self> {
        let mut cfg: Self = serde_json::from_str(text).map_err(|e| Error::config("config", e.to_string()))?;
        cfg.resolve_paths(base);
        cfg.normalize()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|source| Error::File {
            path: path.to_path_buf(),
            source,
            hint: " (pass an existing JSON config with --config)",
        })?;
        let base = path.parent().unwrap_or(Path::new("."));
        Self::from_json(&text, base)
    }

    fn resolve_paths(&mut self, base: &Path) {
        let fix = |p: &mut Option<PathBuf>| {
            if let Some(path) = p {
                if path.is_relative() {
                    *path = base.join(&*path);
                }
            }
        };
        fix(&mut self.frozen_sigma);
        fix(&mut self.checkpoint);
        if let Some(m) = &mut self.macros {
            fix(&mut m.manifest);
            fix(&mut m.corpus);
        }
    }

    /// Checks field ranges and enforces the mode exclusions. Must run before
    /// any compute starts.
    pub fn normalize(&mut self) -> Result<()> {
        if self.seeds.is_empty() {
            return Err(Error::config("seeds", "at least one seed is required"));
        }
        if self.total_steps == 0 {
            return Err(Error::config("total_steps", "must be positive"));
        }
        if self.eval_episodes == 0 {
            return Err(Error::config("eval_episodes", "must be at least 1"));
        }
        if !(0.0..=1.0).contains(&self.p_replace) {
            return Err(Error::config("p_replace", "must lie in [0, 1]"));
        }
        if let Some(m) = &self.macros {
            if m.manifest.is_none() {
                if m.k == 0 {
                    return Err(Error::config("macros.k", "must be at least 1"));
                }
                if m.l_min < 2 || m.l_min > m.l_max {
                    return Err(Error::config("macros.l_min", "need 2 <= l_min <= l_max"));
                }
                if m.corpus.is_none() && m.corpus_episodes == 0 {
                    return Err(Error::config("macros.corpus_episodes", "must be positive"));
                }
            }
        }
        if let Some(s) = &self.sweep {
            if s.values.is_empty() {
                return Err(Error::config("sweep.values", "at least one value is required"));
            }
            for &v in &s.values {
                let ok = match s.axis {
                    SweepAxis::K => v >= 1.0 && v.fract() == 0.0,
                    SweepAxis::PReplace => (0.0..=1.0).contains(&v),
                    SweepAxis::Eta => v >= 0.0 && v.is_finite(),
                };
                if !ok {
                    return Err(Error::config("sweep.values", format!("{v} is not a valid {}", s.axis.name())));
                }
            }
            if s.axis != SweepAxis::Eta && self.mode == Mode::Baseline {
                return Err(Error::config("sweep.axis", "baseline runs have no macros to sweep over"));
            }
        }
        self.agent.validate()?;
        self.masp.validate()?;

        match self.mode {
            Mode::Baseline => {
                if self.macros.take().is_some() {
                    log::warn!("mode=baseline: ignoring the macro section");
                }
                self.force_no_penalty("baseline");
            }
            Mode::Macro => {
                if self.macros.is_none() {
                    return Err(Error::config("macros", "mode=macro needs a macro source"));
                }
                self.force_no_penalty("macro");
            }
            Mode::Masp => {}
        }
        if self.frozen_sigma.is_some() && self.masp.beta != 0.0 {
            log::warn!("frozen sigma: forcing masp.beta from {} to 0", self.masp.beta);
            self.masp.beta = 0.0;
        }
        Ok(())
    }

    fn force_no_penalty(&mut self, mode: &str) {
        if self.masp.eta != 0.0 || self.masp.beta != 0.0 {
            log::warn!("mode={mode}: forcing masp.eta and masp.beta to 0");
        }
        self.masp.eta = 0.0;
        self.masp.beta = 0.0;
    }

    /// Applies one sweep coordinate.
    pub fn with_axis(&self, axis: SweepAxis, value: f64) -> Result<Self> {
        let mut cfg = self.clone();
        cfg.sweep = None;
        match axis {
            SweepAxis::K => {
                let m = cfg
                    .macros
                    .as_mut()
                    .ok_or_else(|| Error::config("macros", "a k sweep needs mining parameters"))?;
                if m.manifest.is_some() {
                    return Err(Error::config("macros.manifest", "a k sweep mines macros; drop the manifest"));
                }
                m.k = value as usize;
            }
            SweepAxis::PReplace => cfg.p_replace = value,
            SweepAxis::Eta => cfg.masp.eta = value,
        }
        cfg.normalize()?;
        Ok(cfg)
    }
}
