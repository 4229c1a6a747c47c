//! Flat `key=value` experiment configuration.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use crate::client::ClientConfig;
use crate::data::SynthSpec;
use crate::error::{Error, Result};
use crate::model::Dims;
use crate::server::SelectionMode;

/// Where samples come from.
#[derive(Debug, Clone, PartialEq)]
pub enum DatasetSource {
    /// Gaussian clusters built from the synth keys.
    Synth,
    /// A feature file (`C F` header, then `label f_1 … f_F` lines).
    File(PathBuf),
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub seed: u64,
    pub features: usize,
    pub hidden: usize,
    pub repr: usize,
    pub classes: usize,
    pub dataset: DatasetSource,
    pub per_class_counts: Vec<usize>,
    pub separation: f64,
    pub noise: f64,
    pub clients: usize,
    pub alpha: f64,
    pub min_samples: usize,
    pub rounds: usize,
    pub local_epochs: usize,
    pub batch_size: usize,
    pub learning_rate: f64,
    pub mu: f64,
    pub mode: SelectionMode,
    /// Fraction of each class held out as the IID test set.
    pub eval_split: f64,
}

impl Default for ExperimentConfig {
    /// The desk-scale scenario: 8 moderately imbalanced classes, about
    /// 2000 samples, 10 clients at alpha = 0.05, 30 rounds.
    fn default() -> Self {
        ExperimentConfig {
            seed: 42,
            features: 32,
            hidden: 64,
            repr: 16,
            classes: 8,
            dataset: DatasetSource::Synth,
            per_class_counts: vec![400, 340, 290, 250, 210, 190, 170, 150],
            separation: 3.0,
            noise: 1.0,
            clients: 10,
            alpha: 0.05,
            min_samples: 10,
            rounds: 30,
            local_epochs: 1,
            batch_size: 8,
            learning_rate: 0.003,
            mu: 1.0,
            mode: SelectionMode::Major,
            eval_split: 0.2,
        }
    }
}

pub const KEYS: [&str; 19] = [
    "seed",
    "features",
    "hidden",
    "repr",
    "classes",
    "dataset",
    "per_class_counts",
    "separation",
    "noise",
    "clients",
    "alpha",
    "min_samples",
    "rounds",
    "local_epochs",
    "batch_size",
    "learning_rate",
    "mu",
    "mode",
    "eval_split",
];

fn parse_value<T: std::str::FromStr>(key: &str, value: &str, line: usize) -> Result<T> {
    value.parse().map_err(|_| Error::Parse {
        line,
        msg: format!("invalid value {value:?} for {key}"),
    })
}

impl ExperimentConfig {
    pub fn dims(&self) -> Dims {
        Dims::new(self.features, self.hidden, self.repr, self.classes)
    }

    pub fn client_config(&self) -> ClientConfig {
        ClientConfig::new(
            self.learning_rate,
            self.local_epochs,
            self.batch_size,
            self.effective_mu(),
        )
    }

    /// `mu` as applied: the `none` mode trains without the contrastive
    /// term whatever `mu` says.
    pub fn effective_mu(&self) -> f64 {
        if self.mode == SelectionMode::None {
            0.0
        } else {
            self.mu
        }
    }

    pub fn synth_spec(&self) -> SynthSpec {
        SynthSpec {
            classes: self.classes,
            features: self.features,
            per_class_counts: self.per_class_counts.clone(),
            separation: self.separation,
            noise: self.noise,
        }
    }

    /// Parses a config file body. Later keys override earlier ones; keys
    /// not given keep their defaults.
    pub fn parse(text: &str) -> Result<Self> {
        let mut cfg = ExperimentConfig::default();
        for (i, raw) in text.lines().enumerate() {
            let line = i + 1;
            let trimmed = raw.trim();
            if trimmed.is_empty() || trimmed.starts_with('#') {
                continue;
            }
            let (key, value) = trimmed.split_once('=').ok_or_else(|| Error::Parse {
                line,
                msg: format!("expected key=value, got {trimmed:?}"),
            })?;
            cfg.set(key.trim(), value.trim(), line)?;
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        ExperimentConfig::parse(&std::fs::read_to_string(path)?)
    }

    /// Sets one key; unknown keys are an error.
    pub fn set(&mut self, key: &str, value: &str, line: usize) -> Result<()> {
        match key {
            "seed" => self.seed = parse_value(key, value, line)?,
            "features" => self.features = parse_value(key, value, line)?,
            "hidden" => self.hidden = parse_value(key, value, line)?,
            "repr" => self.repr = parse_value(key, value, line)?,
            "classes" => self.classes = parse_value(key, value, line)?,
            "dataset" => {
                self.dataset = if value == "synth" {
                    DatasetSource::Synth
                } else {
                    DatasetSource::File(PathBuf::from(value))
                }
            }
            "per_class_counts" => {
                self.per_class_counts = value
                    .split(',')
                    .map(|v| parse_value(key, v.trim(), line))
                    .collect::<Result<_>>()?
            }
            "separation" => self.separation = parse_value(key, value, line)?,
            "noise" => self.noise = parse_value(key, value, line)?,
            "clients" => self.clients = parse_value(key, value, line)?,
            "alpha" => self.alpha = parse_value(key, value, line)?,
            "min_samples" => self.min_samples = parse_value(key, value, line)?,
            "rounds" => self.rounds = parse_value(key, value, line)?,
            "local_epochs" => self.local_epochs = parse_value(key, value, line)?,
            "batch_size" => self.batch_size = parse_value(key, value, line)?,
            "learning_rate" => self.learning_rate = parse_value(key, value, line)?,
            "mu" => self.mu = parse_value(key, value, line)?,
            "mode" => {
                self.mode = value.parse().map_err(|e: Error| Error::Parse {
                    line,
                    msg: e.to_string(),
                })?
            }
            "eval_split" => self.eval_split = parse_value(key, value, line)?,
            other => {
                return Err(Error::Parse {
                    line,
                    msg: format!("unknown key {other:?}"),
                })
            }
        }
        Ok(())
    }

    pub fn validate(&self) -> Result<()> {
        self.dims().validate()?;
        if self.dataset == DatasetSource::Synth {
            if self.per_class_counts.len() != self.classes {
                return Err(Error::Config(format!(
                    "per_class_counts has {} entries for {} classes",
                    self.per_class_counts.len(),
                    self.classes
                )));
            }
            if self.per_class_counts.contains(&0) {
                return Err(Error::Config("per_class_counts must all be >= 1".into()));
            }
            if !(self.separation > 0.0) || !(self.noise > 0.0) {
                return Err(Error::Config("separation and noise must be positive".into()));
            }
        }
        if self.clients < 2 {
            return Err(Error::Config(format!(
                "clients must be >= 2, got {}",
                self.clients
            )));
        }
        if !(self.alpha > 0.0) {
            return Err(Error::Config(format!("alpha must be > 0, got {}", self.alpha)));
        }
        if !(self.eval_split > 0.0 && self.eval_split < 1.0) {
            return Err(Error::Config(format!(
                "eval_split must be in (0, 1), got {}",
                self.eval_split
            )));
        }
        self.client_config().validate()?;
        if !(self.mu >= 0.0) {
            return Err(Error::Config(format!("mu must be >= 0, got {}", self.mu)));
        }
        Ok(())
    }

    /// Canonical `key=value` lines in [`KEYS`] order; parses back to an
    /// equal config.
    pub fn to_kv(&self) -> String {
        let mut out = String::new();
        for key in KEYS {
            let _ = writeln!(out, "{key}={}", self.value_of(key));
        }
        out
    }

    fn value_of(&self, key: &str) -> String {
        match key {
            "seed" => self.seed.to_string(),
            "features" => self.features.to_string(),
            "hidden" => self.hidden.to_string(),
            "repr" => self.repr.to_string(),
            "classes" => self.classes.to_string(),
            "dataset" => match &self.dataset {
                DatasetSource::Synth => "synth".into(),
                DatasetSource::File(p) => p.display().to_string(),
            },
            "per_class_counts" => self
                .per_class_counts
                .iter()
                .map(usize::to_string)
                .collect::<Vec<_>>()
                .join(","),
            "separation" => self.separation.to_string(),
            "noise" => self.noise.to_string(),
            "clients" => self.clients.to_string(),
            "alpha" => self.alpha.to_string(),
            "min_samples" => self.min_samples.to_string(),
            "rounds" => self.rounds.to_string(),
            "local_epochs" => self.local_epochs.to_string(),
            "batch_size" => self.batch_size.to_string(),
            "learning_rate" => self.learning_rate.to_string(),
            "mu" => self.mu.to_string(),
            "mode" => self.mode.to_string(),
            "eval_split" => self.eval_split.to_string(),
            _ => unreachable!("unknown key {key}"),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_round_trips() {
        let cfg = ExperimentConfig::default();
        cfg.validate().unwrap();
        assert_eq!(ExperimentConfig::parse(&cfg.to_kv()).unwrap(), cfg);
    }

    #[test]
    fn parses_overrides_and_comments() {
        let text = "# scenario\nseed = 7\nmode=minor\n\nper_class_counts=5, 6,7\nclasses=3\ndataset=feats.txt\nmu=0.5\n";
        let cfg = ExperimentConfig::parse(text).unwrap();
        assert_eq!(cfg.seed, 7);
        assert_eq!(cfg.mode, SelectionMode::Minor);
        assert_eq!(cfg.per_class_counts, vec![5, 6, 7]);
        assert_eq!(cfg.dataset, DatasetSource::File("feats.txt".into()));
        assert_eq!(cfg.mu, 0.5);
        assert_eq!(ExperimentConfig::parse(&cfg.to_kv()).unwrap(), cfg);
    }

    #[test]
    fn rejects_unknown_and_malformed() {
        let e = ExperimentConfig::parse("seed=1\ntemperature=2\n").unwrap_err();
        assert!(matches!(e, Error::Parse { line: 2, .. }), "{e}");
        assert!(matches!(
            ExperimentConfig::parse("seed 1\n"),
            Err(Error::Parse { line: 1, .. })
        ));
        assert!(matches!(
            ExperimentConfig::parse("clients=many\n"),
            Err(Error::Parse { line: 1, .. })
        ));
        assert!(matches!(
            ExperimentConfig::parse("mode=best\n"),
            Err(Error::Parse { line: 1, .. })
        ));
    }

    #[test]
    fn validation() {
        for bad in [
            "clients=1",
            "alpha=0",
            "eval_split=1.0",
            "classes=1",
            "classes=9",
            "batch_size=0",
            "mu=-1",
            "noise=0",
        ] {
            assert!(
                matches!(ExperimentConfig::parse(bad), Err(Error::Config(_))),
                "{bad}"
            );
        }
    }

    #[test]
    fn none_mode_disables_contrastive_term() {
        let cfg = ExperimentConfig {
            mode: SelectionMode::None,
            mu: 1.0,
            ..Default::default()
        };
        assert_eq!(cfg.client_config().mu, 0.0);
    }
}
