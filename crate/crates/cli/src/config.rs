//! Flat `section.key = value` configuration.
//!
//! One text format serves the config file, the command-line overrides and
//! the manifest: diff-friendly, zero dependencies, and every key checked
//! against the known set so typos fail fast instead of silently running
//! the wrong experiment.

use std::collections::BTreeMap;
use std::path::Path;

use fairlink::graph::SbmParams;
use fairlink::mpa::{MpaConfig, MpaVariant};
use fairlink::ranking::LogBase;
use fairlink::scoring::ScoringParams;
use fairlink::simulator::{ConnectRule, Intervention, SimConfig};

use crate::error::{CliError, CliResult};

/// Every key the tool understands, with a short description for --help and
/// the manifest.
pub const KNOWN_KEYS: &[(&str, &str)] = &[
    ("sim.n", "member count"),
    ("sim.t_max", "simulation steps"),
    ("sim.m", "recommendation slots per query"),
    ("sim.minority_rate", "minority fraction in (0, 0.5]"),
    ("sim.covariate_dim", "covariate dimensions"),
    ("sim.covariate_var", "covariate variance around group means"),
    ("sim.runs", "repetitions per intervention arm"),
    ("sim.base_seed", "suite seed"),
    ("sim.intervention", "arms to run: none | dp | dyn | all"),
    ("sim.connect_rule", "threshold | bernoulli"),
    ("sim.log_base", "position bias log base: e | 2"),
    ("sim.normalizer_pairs", "pairs sampled to freeze the similarity range"),
    ("sim.snapshot_stride", "write graph snapshots every k steps (0 = final only)"),
    ("sbm.p_within_majority", "initial edge probability inside the majority"),
    ("sbm.p_within_minority", "initial edge probability inside the minority"),
    ("sbm.p_cross", "initial edge probability across groups"),
    ("scoring.beta0", "logistic intercept"),
    ("scoring.beta1", "network size coefficient"),
    ("scoring.beta2", "common connections coefficient"),
    ("scoring.beta3", "dissimilarity coefficient"),
    ("scoring.noise_var", "scoring noise variance"),
    ("mpa.variant", "baseline | dp | dynamic"),
    ("mpa.r", "minority arrival rate"),
    ("mpa.p0", "majority in-group connection probability"),
    ("mpa.p1", "minority in-group connection probability"),
    ("mpa.d0", "initial total degree (even)"),
    ("mpa.t_max", "urn steps"),
    ("mpa.runs", "urn repetitions"),
    ("mpa.seed", "urn seed"),
    ("mpa.record_stride", "record the degree share every k steps"),
    ("limits.r", "minority rate for the limit grid"),
    ("limits.resolution", "grid points per mixing axis"),
    ("report.window", "rolling-average window"),
];

/// Ordered key-value store with provenance-free semantics: last write wins.
#[derive(Debug, Clone, Default)]
pub struct FlatConfig {
    values: BTreeMap<String, String>,
}

impl FlatConfig {
    pub fn new() -> Self {
        Self::default()
    }

    fn check_key(key: &str) -> CliResult<()> {
        if KNOWN_KEYS.iter().any(|(k, _)| *k == key) {
            Ok(())
        } else {
            Err(CliError::config(format!(
                "unknown config key {key:?}; known keys: {}",
                KNOWN_KEYS
                    .iter()
                    .map(|(k, _)| *k)
                    .collect::<Vec<_>>()
                    .join(", ")
            )))
        }
    }

    pub fn set(&mut self, key: &str, value: &str) -> CliResult<()> {
        Self::check_key(key)?;
        self.values.insert(key.to_string(), value.to_string());
        Ok(())
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.values.get(key).map(String::as_str)
    }

    /// Parses `key = value` lines; '#' starts a comment, blank lines skip.
    pub fn merge_text(&mut self, text: &str, origin: &str) -> CliResult<()> {
        for (idx, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let Some((key, value)) = line.split_once('=') else {
                return Err(CliError::config(format!(
                    "{origin}:{}: expected `key = value`, got {raw:?}",
                    idx + 1
                )));
            };
            self.set(key.trim(), value.trim())?;
        }
        Ok(())
    }

    pub fn merge_file(&mut self, path: &Path) -> CliResult<()> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::config(format!("cannot read {}: {e}", path.display())))?;
        self.merge_text(&text, &path.display().to_string())
    }

    /// Canonical text form: sorted `key = value` lines.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for (k, v) in &self.values {
            out.push_str(&format!("{k} = {v}\n"));
        }
        out
    }

    fn parse<T: std::str::FromStr>(&self, key: &str, default: T) -> CliResult<T>
    where
        T::Err: std::fmt::Display,
    {
        match self.get(key) {
            None => Ok(default),
            Some(raw) => raw
                .parse()
                .map_err(|e| CliError::config(format!("bad value for {key}: {e} ({raw:?})"))),
        }
    }

    /// Builds the simulator configuration, starting from the given profile.
    pub fn sim_config(&self, profile: &SimConfig) -> CliResult<SimConfig> {
        let base = profile.clone();
        let connect_rule = match self.get("sim.connect_rule").unwrap_or("threshold") {
            "threshold" => ConnectRule::Threshold,
            "bernoulli" => ConnectRule::Bernoulli,
            other => {
                return Err(CliError::config(format!(
                    "sim.connect_rule must be threshold or bernoulli, got {other:?}"
                )))
            }
        };
        let log_base = match self.get("sim.log_base").unwrap_or("e") {
            "e" => LogBase::Natural,
            "2" => LogBase::Base2,
            other => {
                return Err(CliError::config(format!(
                    "sim.log_base must be e or 2, got {other:?}"
                )))
            }
        };
        let config = SimConfig {
            n: self.parse("sim.n", base.n)?,
            t_max: self.parse("sim.t_max", base.t_max)?,
            m: self.parse("sim.m", base.m)?,
            minority_rate: self.parse("sim.minority_rate", base.minority_rate)?,
            covariate_dim: self.parse("sim.covariate_dim", base.covariate_dim)?,
            covariate_var: self.parse("sim.covariate_var", base.covariate_var)?,
            sbm: SbmParams::new(
                self.parse("sbm.p_within_majority", base.sbm.p_within_majority)?,
                self.parse("sbm.p_within_minority", base.sbm.p_within_minority)?,
                self.parse("sbm.p_cross", base.sbm.p_cross)?,
            )
            .map_err(|e| CliError::config(e.to_string()))?,
            scoring: ScoringParams {
                beta0: self.parse("scoring.beta0", base.scoring.beta0)?,
                beta1: self.parse("scoring.beta1", base.scoring.beta1)?,
                beta2: self.parse("scoring.beta2", base.scoring.beta2)?,
                beta3: self.parse("scoring.beta3", base.scoring.beta3)?,
                noise_var: self.parse("scoring.noise_var", base.scoring.noise_var)?,
            },
            runs: self.parse("sim.runs", base.runs)?,
            base_seed: self.parse("sim.base_seed", base.base_seed)?,
            connect_rule,
            log_base,
            normalizer_pairs: self.parse("sim.normalizer_pairs", base.normalizer_pairs)?,
        };
        config
            .validate()
            .map_err(|e| CliError::config(e.to_string()))?;
        Ok(config)
    }

    /// Which intervention arms a simulate invocation covers.
    pub fn interventions(&self) -> CliResult<Vec<Intervention>> {
        match self.get("sim.intervention").unwrap_or("all") {
            "all" => Ok(Intervention::ALL.to_vec()),
            tag => Intervention::from_tag(tag).map(|i| vec![i]).ok_or_else(|| {
                CliError::config(format!(
                    "sim.intervention must be none, dp, dyn or all, got {tag:?}"
                ))
            }),
        }
    }

    pub fn snapshot_stride(&self) -> CliResult<u32> {
        self.parse("sim.snapshot_stride", 0u32)
    }

    pub fn report_window(&self) -> CliResult<usize> {
        let window: usize = self.parse("report.window", 500)?;
        if window == 0 {
            return Err(CliError::config("report.window must be at least 1"));
        }
        Ok(window)
    }

    pub fn mpa_config(&self) -> CliResult<MpaConfig> {
        let base = MpaConfig::default();
        let variant = match self.get("mpa.variant").unwrap_or("baseline") {
            "baseline" => MpaVariant::Baseline,
            "dp" => MpaVariant::DemographicParity,
            "dynamic" => MpaVariant::Dynamic,
            other => {
                return Err(CliError::config(format!(
                    "mpa.variant must be baseline, dp or dynamic, got {other:?}"
                )))
            }
        };
        let config = MpaConfig {
            minority_rate: self.parse("mpa.r", base.minority_rate)?,
            p0: self.parse("mpa.p0", base.p0)?,
            p1: self.parse("mpa.p1", base.p1)?,
            d0: self.parse("mpa.d0", base.d0)?,
            variant,
            t_max: self.parse("mpa.t_max", base.t_max)?,
            seed: self.parse("mpa.seed", base.seed)?,
            record_stride: self.parse("mpa.record_stride", base.record_stride)?,
        };
        config
            .validate()
            .map_err(|e| CliError::config(e.to_string()))?;
        Ok(config)
    }

    pub fn mpa_runs(&self) -> CliResult<u32> {
        self.parse("mpa.runs", 1u32)
    }

    pub fn limits_params(&self) -> CliResult<(f64, usize)> {
        let r: f64 = self.parse("limits.r", 0.35)?;
        let resolution: usize = self.parse("limits.resolution", 50)?;
        if resolution < 2 {
            return Err(CliError::config("limits.resolution must be at least 2"));
        }
        if !(r > 0.0 && r < 1.0) {
            return Err(CliError::config("limits.r must lie in (0, 1)"));
        }
        Ok((r, resolution))
    }
}
