//! Engine configuration, read from JSON. Every field has a default, so a
//! config file only needs the values it changes.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::classify::ClassifierConfig;
use crate::error::{Error, Result};
use crate::hin::KMeansConfig;
use crate::ingest::{open, ConflictPolicy};
use crate::prune::PruneConfig;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Mode {
    /// Benign against malicious; every family collapses to class 1.
    #[default]
    Binary,
    /// One column per class.
    Multiclass,
    /// Binary first, then families among predicted-malicious domains.
    TwoStage,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct Paths {
    /// Log file, or a directory whose files are all read in name order.
    pub logs: Option<PathBuf>,
    /// pDNS file or directory, as for `logs`.
    pub pdns: Option<PathBuf>,
    /// Manual and public label lists.
    pub labels: Vec<PathBuf>,
    pub segments: Option<PathBuf>,
    /// Ground truth for metrics, in label-list format.
    pub truth: Option<PathBuf>,
    pub output: PathBuf,
}

impl Default for Paths {
    fn default() -> Self {
        Self {
            logs: None,
            pdns: None,
            labels: Vec::new(),
            segments: None,
            truth: None,
            output: PathBuf::from("out"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ExperimentConfig {
    pub fractions: Vec<f64>,
    pub repeats: usize,
    pub noise_percents: Vec<f64>,
    /// Fraction of labels retained before noise is applied.
    pub noise_keep_fraction: f64,
    /// Fraction of labels retained for the per-metapath comparison.
    pub per_metapath_keep_fraction: f64,
    pub seed: u64,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            fractions: vec![0.9, 0.7, 0.5, 0.3, 0.1],
            repeats: 10,
            noise_percents: vec![0.0, 10.0, 20.0, 30.0, 40.0, 50.0],
            noise_keep_fraction: 0.7,
            per_metapath_keep_fraction: 0.7,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct EngineConfig {
    pub window_seconds: i64,
    pub prune: PruneConfig,
    pub kmeans: KMeansConfig,
    pub knn_k: usize,
    pub classifier: ClassifierConfig,
    /// Class ids accepted in label files: 0 is benign, 1.. are families.
    pub classes: usize,
    pub mode: Mode,
    pub conflict_policy: ConflictPolicy,
    pub paths: Paths,
    pub experiments: ExperimentConfig,
}

impl Default for EngineConfig {
    fn default() -> Self {
        Self {
            window_seconds: 3600,
            prune: PruneConfig::default(),
            kmeans: KMeansConfig::new(20, 0),
            knn_k: 5,
            classifier: ClassifierConfig::default(),
            classes: 2,
            mode: Mode::Binary,
            conflict_policy: ConflictPolicy::default(),
            paths: Paths::default(),
            experiments: ExperimentConfig::default(),
        }
    }
}

impl EngineConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let config: Self = serde_json::from_reader(open(path)?)?;
        Ok(config)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    pub fn validate(&self) -> Result<()> {
        if self.window_seconds <= 0 {
            return Err(Error::Config(format!(
                "window_seconds must be positive, got {}",
                self.window_seconds
            )));
        }
        self.prune.validate()?;
        self.classifier.validate()?;
        if self.kmeans.k == 0 || self.kmeans.restarts == 0 {
            return Err(Error::Config("kmeans k and restarts must be at least 1".into()));
        }
        if self.knn_k == 0 {
            return Err(Error::Config("knn_k must be at least 1".into()));
        }
        if self.classes < 2 {
            return Err(Error::Config(format!("classes must be at least 2, got {}", self.classes)));
        }
        if self.mode == Mode::TwoStage && self.classes < 3 {
            return Err(Error::Config("two-stage mode needs classes >= 3".into()));
        }
        let e = &self.experiments;
        for &f in e.fractions.iter().chain([&e.noise_keep_fraction, &e.per_metapath_keep_fraction]) {
            if !(0.0..=1.0).contains(&f) {
                return Err(Error::Config(format!("label fraction {f} outside [0, 1]")));
            }
        }
        for &p in &e.noise_percents {
            if !(0.0..=100.0).contains(&p) {
                return Err(Error::Config(format!("noise percent {p} outside [0, 100]")));
            }
        }
        if e.repeats == 0 {
            return Err(Error::Config("experiment repeats must be at least 1".into()));
        }
        Ok(())
    }

    /// Width of the label matrix the classifier sees.
    pub fn label_columns(&self) -> usize {
        match self.mode {
            Mode::Binary => 2,
            Mode::Multiclass | Mode::TwoStage => self.classes,
        }
    }
}
