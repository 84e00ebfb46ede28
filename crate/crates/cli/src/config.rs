use std::fmt;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use seqlab_core::bayes::PriorSpec;
use seqlab_core::cstar::HardCaseConstants;
use seqlab_core::risk::EstimatorSpec;
use seqlab_core::{ConstraintSet, PenaltySpec, SolveOptions};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Experiment {
    Solve,
    Width,
    Ttheta,
    Risk,
    Tail,
    Smoothness,
    Bayes,
    Cstar,
    CheckAll,
}

impl Experiment {
    pub fn as_str(self) -> &'static str {
        match self {
            Experiment::Solve => "solve",
            Experiment::Width => "width",
            Experiment::Ttheta => "ttheta",
            Experiment::Risk => "risk",
            Experiment::Tail => "tail",
            Experiment::Smoothness => "smoothness",
            Experiment::Bayes => "bayes",
            Experiment::Cstar => "cstar",
            Experiment::CheckAll => "check-all",
        }
    }

    fn needs_seed(self) -> bool {
        !matches!(self, Experiment::Solve | Experiment::Cstar | Experiment::CheckAll)
    }
}

impl fmt::Display for Experiment {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    #[default]
    Json,
    Csv,
}

/// One experiment run. Which fields are required depends on `experiment`;
/// see [`ExperimentConfig::validate`].
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub experiment: Option<Experiment>,
    /// Label hashed with the seed; defaults to the experiment name.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub set: Option<ConstraintSet>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub penalty: Option<PenaltySpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub theta: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub theta2: Option<Vec<f64>>,
    /// Observation for `solve`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub x: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub reps: Option<usize>,
    /// Noise batch size for width profiles and `t_θ`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub batch: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tgrid: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub deltas: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub estimator: Option<EstimatorSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub prior: Option<PriorSpec>,
    /// χ² radius for the small-ball bound; computed from the prior when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub info: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub quad_points: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub constants: Option<HardCaseConstants>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub clip_levels: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub solve: Option<SolveOptions>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bracket_rel_tol: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub format: Option<Format>,
}

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}: field `{field}`: {message}")]
    Parse {
        path: PathBuf,
        field: String,
        message: String,
    },
    #[error("experiment `{experiment}` requires field `{field}`")]
    Missing { experiment: Experiment, field: &'static str },
    #[error("no experiment given: set `experiment` in the config or on the command line")]
    NoExperiment,
    #[error("command line asks for `{cli}` but the config says `{config}`")]
    ExperimentMismatch { cli: Experiment, config: Experiment },
    #[error("field `{field}`: {source}")]
    Invalid {
        field: &'static str,
        #[source]
        source: seqlab_core::Error,
    },
    #[error("{0}")]
    Suite(String),
}

pub fn parse_config(text: &str, path: &Path) -> Result<ExperimentConfig, ConfigError> {
    let de = &mut serde_json::Deserializer::from_str(text);
    serde_path_to_error::deserialize(de).map_err(|e| {
        let field = e.path().to_string();
        ConfigError::Parse {
            path: path.to_path_buf(),
            field: if field.is_empty() { ".".into() } else { field },
            message: e.into_inner().to_string(),
        }
    })
}

pub fn load_config(path: &Path) -> Result<ExperimentConfig, ConfigError> {
    let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    parse_config(&text, path)
}

fn invalid(field: &'static str) -> impl FnOnce(seqlab_core::Error) -> ConfigError {
    move |source| ConfigError::Invalid { field, source }
}

impl ExperimentConfig {
    pub fn label(&self) -> String {
        self.name
            .clone()
            .unwrap_or_else(|| self.experiment.map_or("run", |e| e.as_str()).to_string())
    }

    pub fn penalty_or_zero(&self) -> PenaltySpec {
        self.penalty.clone().unwrap_or(PenaltySpec::Zero)
    }

    fn need<'a, T>(&'a self, exp: Experiment, field: &'static str, v: &'a Option<T>) -> Result<&'a T, ConfigError> {
        v.as_ref().ok_or(ConfigError::Missing { experiment: exp, field })
    }

    /// Checks that every field `experiment` reads is present and consistent.
    pub fn validate(&self) -> Result<Experiment, ConfigError> {
        let exp = self.experiment.ok_or(ConfigError::NoExperiment)?;
        if exp.needs_seed() && self.seed.is_none() && !matches!(exp, Experiment::Bayes) {
            return Err(ConfigError::Missing {
                experiment: exp,
                field: "seed",
            });
        }
        if let Some(o) = &self.solve {
            o.validate().map_err(invalid("solve"))?;
        }
        if let Some(r) = self.reps {
            if r < 2 {
                return Err(ConfigError::Invalid {
                    field: "reps",
                    source: seqlab_core::Error::Invalid {
                        what: "reps",
                        reason: "need at least 2 replications".into(),
                    },
                });
            }
        }
        let set_dim = match &self.set {
            Some(s) => Some(s.validate().map_err(invalid("set"))?),
            None => None,
        };
        if let (Some(n), Some(p)) = (set_dim, &self.penalty) {
            p.validate(n).map_err(invalid("penalty"))?;
        }
        let vector_dim = |field: &'static str, v: &Vec<f64>| -> Result<(), ConfigError> {
            if let Some(n) = set_dim {
                if v.len() != n {
                    return Err(ConfigError::Invalid {
                        field,
                        source: seqlab_core::Error::DimensionMismatch {
                            expected: n,
                            got: v.len(),
                        },
                    });
                }
            }
            Ok(())
        };
        for (field, v) in [("theta", &self.theta), ("theta2", &self.theta2), ("x", &self.x)] {
            if let Some(v) = v {
                vector_dim(field, v)?;
            }
        }
        match exp {
            Experiment::Solve => {
                self.need(exp, "set", &self.set)?;
                self.need(exp, "x", &self.x)?;
            }
            Experiment::Width => {
                self.need(exp, "set", &self.set)?;
                self.need(exp, "theta", &self.theta)?;
                self.need(exp, "tgrid", &self.tgrid)?;
            }
            Experiment::Ttheta | Experiment::Tail => {
                self.need(exp, "set", &self.set)?;
                self.need(exp, "theta", &self.theta)?;
            }
            Experiment::Risk => {
                let theta = self.need(exp, "theta", &self.theta)?;
                match &self.estimator {
                    Some(e) => e.validate(theta.len()).map_err(invalid("estimator"))?,
                    None => {
                        self.need(exp, "set", &self.set)?;
                    }
                }
            }
            Experiment::Smoothness => {
                self.need(exp, "set", &self.set)?;
                self.need(exp, "theta", &self.theta)?;
                self.need(exp, "theta2", &self.theta2)?;
            }
            Experiment::Bayes => {
                let prior = self.need(exp, "prior", &self.prior)?;
                let n = prior.validate().map_err(invalid("prior"))?;
                let stochastic = self.estimator.is_some() || matches!(prior, PriorSpec::Pushforward { .. });
                if stochastic && self.seed.is_none() {
                    return Err(ConfigError::Missing {
                        experiment: exp,
                        field: "seed",
                    });
                }
                if let Some(e) = &self.estimator {
                    e.validate(n).map_err(invalid("estimator"))?;
                }
            }
            Experiment::Cstar => {
                if let Some(c) = &self.constants {
                    c.validate().map_err(invalid("constants"))?;
                }
            }
            Experiment::CheckAll => {
                if let Some(c) = &self.constants {
                    c.validate().map_err(invalid("constants"))?;
                }
                if self.set.is_some() {
                    self.need(exp, "theta", &self.theta)?;
                    self.need(exp, "seed", &self.seed)?;
                }
            }
        }
        Ok(exp)
    }
}
