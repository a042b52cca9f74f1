//! Run configuration.
//!
//! Config files are flat `key = value` text with dotted key paths:
//!
//! ```text
//! # offspring model
//! model.kind = sibuya_uniform
//! model.alpha_min = 0.2
//! model.alpha_max = 0.7
//! seed = 42
//! replicates = 2000
//! s_grid = 0.25, 0.5, 1, 2, 4
//! ```
//!
//! Unknown keys are rejected with their full path, duplicate keys are
//! an error, and command-line flags override file values. The
//! effective configuration is echoed (fully expanded, defaults
//! included) into the run record, so any record can be replayed by
//! feeding its echo back in as a config file.

use std::collections::BTreeMap;
use std::collections::HashSet;
use std::path::{Path, PathBuf};

use thiserror::Error;

use crate::environment::EnvironmentModel;
use crate::limitlab::{CnRule, NormalizationScheme, UMap};
use crate::pgf::LawDescriptor;
use crate::population::SimulationConfig;
use crate::regularity::ClassifyConfig;
use crate::report::format_float;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read config {path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("config line {line}: expected `key = value`, got `{text}`")]
    Syntax { line: usize, text: String },
    #[error("unknown config key `{key}`")]
    UnknownKey { key: String },
    #[error("duplicate config key `{key}`")]
    DuplicateKey { key: String },
    #[error("config key `{key}`: cannot parse `{value}` as {expected}")]
    BadValue {
        key: String,
        value: String,
        expected: &'static str,
    },
    #[error("config key `{key}`: {message}")]
    Invalid { key: String, message: String },
}

/// Which c_n rule the normalization scheme uses, in config-file terms.
const SCHEME_RULES: &str = "sibuya_product | linear | constant | double_exponential | reciprocal_h";

/// Fully resolved configuration for one command invocation.
#[derive(Debug, Clone)]
pub struct RunConfig {
    pub model: EnvironmentModel,
    pub seed: u64,
    pub replicates: u64,
    pub generations: usize,
    pub workers: usize,
    pub out: PathBuf,
    pub s: f64,
    pub s_grid: Vec<f64>,
    pub u_grid: Vec<f64>,
    pub sim: SimulationConfig,
    pub classify: ClassifyConfig,
    pub atoms_n: usize,
    pub scheme: NormalizationScheme,
    pub fe_environments: u64,
}

/// Raw key-value state before cross-field resolution.
#[derive(Debug, Clone)]
pub struct ConfigBuilder {
    model_kind: String,
    alpha_min: f64,
    alpha_max: f64,
    cycle_alphas: Vec<f64>,
    cycle_weights: Vec<f64>,
    seed: u64,
    replicates: u64,
    generations: usize,
    workers: usize,
    out: PathBuf,
    s: f64,
    s_grid: Vec<f64>,
    u_grid: Vec<f64>,
    exact_budget: u64,
    y_tol: f64,
    asymptotic: bool,
    classify_n_max: usize,
    classify_threshold: f64,
    atoms_n: usize,
    scheme_rule: String,
    scheme_constant: f64,
    scheme_rate: f64,
    scheme_s0: f64,
    fe_environments: u64,
    seen: HashSet<String>,
}

impl Default for ConfigBuilder {
    fn default() -> Self {
        let sim = SimulationConfig::default();
        let classify = ClassifyConfig::default();
        ConfigBuilder {
            model_kind: "sibuya_uniform".to_string(),
            alpha_min: 0.2,
            alpha_max: 0.7,
            cycle_alphas: Vec::new(),
            cycle_weights: Vec::new(),
            seed: 42,
            replicates: 2000,
            generations: sim.n_max,
            workers: 1,
            out: PathBuf::from("out"),
            s: std::f64::consts::LN_2,
            s_grid: vec![0.25, 0.5, 1.0, 2.0, 4.0],
            u_grid: (1..=50).map(|k| 0.1 * k as f64).collect(),
            exact_budget: sim.exact_budget,
            y_tol: sim.y_tol,
            asymptotic: sim.asymptotic_enabled,
            classify_n_max: classify.n_max,
            classify_threshold: classify.regular_threshold,
            atoms_n: 12,
            scheme_rule: "sibuya_product".to_string(),
            scheme_constant: 1.0,
            scheme_rate: 1.0,
            scheme_s0: 1.0,
            fe_environments: 100,
            seen: HashSet::new(),
        }
    }
}

fn parse_scalar<T: std::str::FromStr>(
    key: &str,
    value: &str,
    expected: &'static str,
) -> Result<T, ConfigError> {
    value.trim().parse().map_err(|_| ConfigError::BadValue {
        key: key.to_string(),
        value: value.to_string(),
        expected,
    })
}

fn parse_list(key: &str, value: &str) -> Result<Vec<f64>, ConfigError> {
    value
        .split(',')
        .map(|piece| parse_scalar(key, piece, "a comma-separated list of numbers"))
        .collect()
}

impl ConfigBuilder {
    /// Apply one `key = value` pair from a config file. Duplicates are
    /// rejected here; overrides from flags go through [`set`].
    pub fn set_from_file(&mut self, key: &str, value: &str) -> Result<(), ConfigError> {
        if !self.seen.insert(key.to_string()) {
            return Err(ConfigError::DuplicateKey {
                key: key.to_string(),
            });
        }
        self.set(key, value)
    }

    /// Apply one key-value pair, replacing any previous value.
    pub fn set(&mut self, key: &str, value: &str) -> Result<(), ConfigError> {
        match key {
            "model.kind" => self.model_kind = value.trim().to_string(),
            "model.alpha_min" => self.alpha_min = parse_scalar(key, value, "a number")?,
            "model.alpha_max" => self.alpha_max = parse_scalar(key, value, "a number")?,
            "model.cycle_alphas" => self.cycle_alphas = parse_list(key, value)?,
            "model.cycle_weights" => self.cycle_weights = parse_list(key, value)?,
            "seed" => self.seed = parse_scalar(key, value, "an unsigned integer")?,
            "replicates" => self.replicates = parse_scalar(key, value, "an unsigned integer")?,
            "generations" => self.generations = parse_scalar(key, value, "an unsigned integer")?,
            "workers" => self.workers = parse_scalar(key, value, "an unsigned integer")?,
            "out" => self.out = PathBuf::from(value.trim()),
            "s" => self.s = parse_scalar(key, value, "a number")?,
            "s_grid" => self.s_grid = parse_list(key, value)?,
            "u_grid" => self.u_grid = parse_list(key, value)?,
            "sim.exact_budget" => {
                self.exact_budget = parse_scalar(key, value, "an unsigned integer")?
            }
            "sim.y_tol" => self.y_tol = parse_scalar(key, value, "a number")?,
            "sim.asymptotic" => self.asymptotic = parse_scalar(key, value, "true or false")?,
            "classify.n_max" => {
                self.classify_n_max = parse_scalar(key, value, "an unsigned integer")?
            }
            "classify.threshold" => {
                self.classify_threshold = parse_scalar(key, value, "a number")?
            }
            "atoms.n" => self.atoms_n = parse_scalar(key, value, "an unsigned integer")?,
            "scheme.rule" => self.scheme_rule = value.trim().to_string(),
            "scheme.constant" => self.scheme_constant = parse_scalar(key, value, "a number")?,
            "scheme.rate" => self.scheme_rate = parse_scalar(key, value, "a number")?,
            "scheme.s0" => self.scheme_s0 = parse_scalar(key, value, "a number")?,
            "fe.environments" => {
                self.fe_environments = parse_scalar(key, value, "an unsigned integer")?
            }
            _ => {
                return Err(ConfigError::UnknownKey {
                    key: key.to_string(),
                })
            }
        }
        Ok(())
    }

    /// Parse a config file into this builder.
    pub fn load_file(&mut self, path: &Path) -> Result<(), ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        for (idx, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| ConfigError::Syntax {
                line: idx + 1,
                text: line.to_string(),
            })?;
            self.set_from_file(key.trim(), value.trim())?;
        }
        Ok(())
    }

    fn build_model(&self) -> Result<EnvironmentModel, ConfigError> {
        match self.model_kind.as_str() {
            "sibuya" | "sibuya_uniform" => Ok(EnvironmentModel::SibuyaUniform {
                alpha_min: self.alpha_min,
                alpha_max: self.alpha_max,
            }),
            "cycle" => {
                let laws: Vec<LawDescriptor> = if !self.cycle_alphas.is_empty() {
                    if !self.cycle_weights.is_empty() {
                        return Err(ConfigError::Invalid {
                            key: "model.cycle_weights".to_string(),
                            message: "set either model.cycle_alphas or model.cycle_weights, not both"
                                .to_string(),
                        });
                    }
                    self.cycle_alphas
                        .iter()
                        .map(|&alpha| LawDescriptor::Sibuya { alpha })
                        .collect()
                } else if !self.cycle_weights.is_empty() {
                    vec![LawDescriptor::Finite {
                        weights: self.cycle_weights.clone(),
                    }]
                } else {
                    return Err(ConfigError::Invalid {
                        key: "model.kind".to_string(),
                        message: "cycle model needs model.cycle_alphas or model.cycle_weights"
                            .to_string(),
                    });
                };
                Ok(EnvironmentModel::Cycle { laws })
            }
            other => Err(ConfigError::Invalid {
                key: "model.kind".to_string(),
                message: format!("unknown model kind `{other}` (expected sibuya_uniform | cycle)"),
            }),
        }
    }

    fn build_scheme(&self) -> Result<NormalizationScheme, ConfigError> {
        let c_n = match self.scheme_rule.as_str() {
            "sibuya_product" => CnRule::SibuyaProduct,
            "linear" => CnRule::Linear,
            "constant" => CnRule::Constant {
                value: self.scheme_constant,
            },
            "double_exponential" => CnRule::DoubleExponential {
                rate: self.scheme_rate,
            },
            "reciprocal_h" => CnRule::ReciprocalH { s0: self.scheme_s0 },
            other => {
                return Err(ConfigError::Invalid {
                    key: "scheme.rule".to_string(),
                    message: format!("unknown rule `{other}` (expected {SCHEME_RULES})"),
                })
            }
        };
        Ok(NormalizationScheme { u: UMap::Log, c_n })
    }

    /// Resolve into a validated [`RunConfig`].
    pub fn finish(self) -> Result<RunConfig, ConfigError> {
        let model = self.build_model()?;
        model.validate().map_err(|err| ConfigError::Invalid {
            key: "model".to_string(),
            message: err.to_string(),
        })?;
        let scheme = self.build_scheme()?;
        if self.replicates == 0 {
            return Err(ConfigError::Invalid {
                key: "replicates".to_string(),
                message: "must be positive".to_string(),
            });
        }
        if !(self.s.is_finite() && self.s > 0.0) {
            return Err(ConfigError::Invalid {
                key: "s".to_string(),
                message: "must be a positive finite number".to_string(),
            });
        }
        if self.s_grid.is_empty() || self.s_grid.iter().any(|&s| !(s.is_finite() && s > 0.0)) {
            return Err(ConfigError::Invalid {
                key: "s_grid".to_string(),
                message: "needs at least one positive finite value".to_string(),
            });
        }
        if self.u_grid.is_empty() || self.u_grid.iter().any(|&u| !(u.is_finite() && u > 0.0)) {
            return Err(ConfigError::Invalid {
                key: "u_grid".to_string(),
                message: "needs at least one positive finite value".to_string(),
            });
        }
        if self.workers == 0 || self.workers > 512 {
            return Err(ConfigError::Invalid {
                key: "workers".to_string(),
                message: "must be between 1 and 512".to_string(),
            });
        }
        let sim = SimulationConfig {
            n_max: self.generations,
            y_tol: self.y_tol,
            exact_budget: self.exact_budget,
            asymptotic_enabled: self.asymptotic,
        };
        let classify = ClassifyConfig {
            n_max: self.classify_n_max,
            regular_threshold: self.classify_threshold,
            ..ClassifyConfig::default()
        };
        Ok(RunConfig {
            model,
            seed: self.seed,
            replicates: self.replicates,
            generations: self.generations,
            workers: self.workers,
            out: self.out,
            s: self.s,
            s_grid: self.s_grid,
            u_grid: self.u_grid,
            sim,
            classify,
            atoms_n: self.atoms_n,
            scheme,
            fe_environments: self.fe_environments,
        })
    }
}

impl RunConfig {
    /// The effective configuration as a sorted flat key map. Feeding
    /// the echo back as a config file reproduces this configuration
    /// exactly, except for the worker count and output directory:
    /// results never depend on either, so they stay out of the echo
    /// (and hence out of every byte-compared artifact). Worker count
    /// is recorded in the timing file; the output directory is where
    /// the artifact already lives.
    pub fn echo(&self) -> BTreeMap<String, String> {
        let mut map = BTreeMap::new();
        let list = |values: &[f64]| {
            values
                .iter()
                .map(|&v| format_float(v))
                .collect::<Vec<_>>()
                .join(",")
        };
        match &self.model {
            EnvironmentModel::SibuyaUniform {
                alpha_min,
                alpha_max,
            } => {
                map.insert("model.kind".into(), "sibuya_uniform".into());
                map.insert("model.alpha_min".into(), format_float(*alpha_min));
                map.insert("model.alpha_max".into(), format_float(*alpha_max));
            }
            EnvironmentModel::Cycle { laws } => {
                map.insert("model.kind".into(), "cycle".into());
                let alphas: Vec<f64> = laws
                    .iter()
                    .filter_map(|law| match law {
                        LawDescriptor::Sibuya { alpha } => Some(*alpha),
                        _ => None,
                    })
                    .collect();
                if alphas.len() == laws.len() {
                    map.insert("model.cycle_alphas".into(), list(&alphas));
                } else if let Some(LawDescriptor::Finite { weights }) = laws.first() {
                    map.insert("model.cycle_weights".into(), list(weights));
                }
            }
            other => {
                // Mixture models are library-only; record their JSON form
                // so the echo stays lossless even without a flat spelling.
                map.insert("model.kind".into(), "json".into());
                map.insert(
                    "model.json".into(),
                    serde_json::to_string(other).unwrap_or_default(),
                );
            }
        }
        map.insert("seed".into(), self.seed.to_string());
        map.insert("replicates".into(), self.replicates.to_string());
        map.insert("generations".into(), self.generations.to_string());
        map.insert("s".into(), format_float(self.s));
        map.insert("s_grid".into(), list(&self.s_grid));
        map.insert("u_grid".into(), list(&self.u_grid));
        map.insert("sim.exact_budget".into(), self.sim.exact_budget.to_string());
        map.insert("sim.y_tol".into(), format_float(self.sim.y_tol));
        map.insert(
            "sim.asymptotic".into(),
            self.sim.asymptotic_enabled.to_string(),
        );
        map.insert("classify.n_max".into(), self.classify.n_max.to_string());
        map.insert(
            "classify.threshold".into(),
            format_float(self.classify.regular_threshold),
        );
        map.insert("atoms.n".into(), self.atoms_n.to_string());
        match &self.scheme.c_n {
            CnRule::SibuyaProduct => {
                map.insert("scheme.rule".into(), "sibuya_product".into());
            }
            CnRule::Linear => {
                map.insert("scheme.rule".into(), "linear".into());
            }
            CnRule::Constant { value } => {
                map.insert("scheme.rule".into(), "constant".into());
                map.insert("scheme.constant".into(), format_float(*value));
            }
            CnRule::DoubleExponential { rate } => {
                map.insert("scheme.rule".into(), "double_exponential".into());
                map.insert("scheme.rate".into(), format_float(*rate));
            }
            CnRule::ReciprocalH { s0 } => {
                map.insert("scheme.rule".into(), "reciprocal_h".into());
                map.insert("scheme.s0".into(), format_float(*s0));
            }
        }
        map.insert("fe.environments".into(), self.fe_environments.to_string());
        map
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Write;

    fn write_config(text: &str) -> tempfile::NamedTempFile {
        let mut file = tempfile::NamedTempFile::new().unwrap();
        file.write_all(text.as_bytes()).unwrap();
        file
    }

    #[test]
    fn defaults_resolve() {
        let config = ConfigBuilder::default().finish().unwrap();
        assert_eq!(config.seed, 42);
        assert_eq!(config.replicates, 2000);
        assert_eq!(config.generations, SimulationConfig::default().n_max);
        assert!(matches!(
            config.model,
            EnvironmentModel::SibuyaUniform { .. }
        ));
        assert!(matches!(config.scheme.c_n, CnRule::SibuyaProduct));
        assert_eq!(config.u_grid.len(), 50);
    }

    #[test]
    fn file_values_parse_and_flags_override() {
        let file = write_config(
            "# demo\nseed = 7\nreplicates = 50\ns_grid = 0.5, 1.0\nmodel.alpha_min = 0.3\n",
        );
        let mut builder = ConfigBuilder::default();
        builder.load_file(file.path()).unwrap();
        builder.set("seed", "9").unwrap();
        let config = builder.finish().unwrap();
        assert_eq!(config.seed, 9, "flag wins over file");
        assert_eq!(config.replicates, 50);
        assert_eq!(config.s_grid, vec![0.5, 1.0]);
    }

    #[test]
    fn unknown_key_is_rejected_with_path() {
        let file = write_config("model.alpha_mid = 0.5\n");
        let mut builder = ConfigBuilder::default();
        let err = builder.load_file(file.path()).unwrap_err();
        assert!(matches!(
            err,
            ConfigError::UnknownKey { ref key } if key == "model.alpha_mid"
        ));
        assert!(err.to_string().contains("model.alpha_mid"));
    }

    #[test]
    fn duplicate_and_malformed_lines_are_rejected() {
        let file = write_config("seed = 1\nseed = 2\n");
        let mut builder = ConfigBuilder::default();
        assert!(matches!(
            builder.load_file(file.path()),
            Err(ConfigError::DuplicateKey { .. })
        ));

        let file = write_config("just words\n");
        let mut builder = ConfigBuilder::default();
        assert!(matches!(
            builder.load_file(file.path()),
            Err(ConfigError::Syntax { line: 1, .. })
        ));
    }

    #[test]
    fn bad_values_name_key_and_expectation() {
        let mut builder = ConfigBuilder::default();
        let err = builder.set("replicates", "many").unwrap_err();
        let text = err.to_string();
        assert!(text.contains("replicates") && text.contains("many"), "{text}");
    }

    #[test]
    fn model_validation_runs_at_finish() {
        let mut builder = ConfigBuilder::default();
        builder.set("model.kind", "cycle").unwrap();
        builder.set("model.cycle_weights", "0.1, 0.9").unwrap();
        // weight on zero offspring violates the extinction-free requirement
        let err = builder.finish().unwrap_err();
        assert!(matches!(err, ConfigError::Invalid { .. }), "{err}");
    }

    #[test]
    fn echo_round_trips_through_the_parser() {
        let mut builder = ConfigBuilder::default();
        builder.set("scheme.rule", "reciprocal_h").unwrap();
        builder.set("scheme.s0", "2.5").unwrap();
        builder.set("model.kind", "cycle").unwrap();
        builder.set("model.cycle_alphas", "0.5,0.25").unwrap();
        let config = builder.finish().unwrap();
        let echo = config.echo();

        let mut rebuilt = ConfigBuilder::default();
        for (key, value) in &echo {
            rebuilt.set(key, value).unwrap();
        }
        let config2 = rebuilt.finish().unwrap();
        assert_eq!(config.echo(), config2.echo());
        assert_eq!(config2.scheme.c_n, CnRule::ReciprocalH { s0: 2.5 });
    }
}
