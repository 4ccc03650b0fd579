//! Evaluation protocols over labeled scenes: label-fraction sweep, label
//! noise sweep, and single-metapath against combined classification.
//!
//! Each trial hides part of the truth, classifies with the rest as manual
//! priors, and scores the hidden domains that survive pruning.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::classify::{evaluate, malicious_scores, Metrics};
use crate::config::EngineConfig;
use crate::error::{Error, Result};
use crate::hin::HinGraph;
use crate::ingest::{load_labels, LabelIndex, LabelSource, Prior};
use crate::metapath::MetapathId;
use crate::pipeline::{analyze, classify, load_inputs, truth_class, Analysis, Classification};

/// Built graphs of every non-empty window plus the truth restricted to
/// domains that appear in them.
pub struct Prepared {
    graphs: Vec<HinGraph>,
    /// Domain → truth class id as listed; mapped onto a mode when scored.
    truth: BTreeMap<String, usize>,
}

impl Prepared {
    pub fn truth(&self) -> &BTreeMap<String, usize> {
        &self.truth
    }

    pub fn graphs(&self) -> &[HinGraph] {
        &self.graphs
    }
}

pub fn prepare(config: &EngineConfig) -> Result<Prepared> {
    config.validate()?;
    let truth_path = config
        .paths
        .truth
        .as_ref()
        .ok_or_else(|| Error::Config("experiments need a truth file".into()))?;
    let index = LabelIndex::new(&load_labels(truth_path, config.classes)?, config.conflict_policy);
    let inputs = load_inputs(config)?;
    let mut graphs = Vec::new();
    let mut truth = BTreeMap::new();
    for batch in inputs.windows.iter().filter(|b| !b.is_empty()) {
        let (graph, _) = HinGraph::build(batch, &inputs.segments, &config.kmeans).map_err(|e| {
            Error::Window {
                start: batch.window_start,
                source: Box::new(e),
            }
        })?;
        for d in graph.registry.domains.names() {
            if let Some(p) = index.prior(d) {
                truth.insert(d.clone(), p.class_id);
            }
        }
        graphs.push(graph);
    }
    if truth.is_empty() {
        return Err(Error::EmptyTruth);
    }
    Ok(Prepared { graphs, truth })
}

fn trial_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Keeps `round(fraction · n)` truth labels, chosen uniformly.
pub fn retain(truth: &BTreeMap<String, usize>, fraction: f64, rng: &mut ChaCha8Rng) -> BTreeMap<String, usize> {
    let mut names: Vec<&String> = truth.keys().collect();
    names.shuffle(rng);
    let keep = (fraction * names.len() as f64).round() as usize;
    names
        .into_iter()
        .take(keep)
        .map(|n| (n.clone(), truth[n]))
        .collect()
}

/// Reassigns `round(percent% · n)` of the labels to a uniformly drawn wrong
/// class among `classes`.
pub fn flip(labels: &mut BTreeMap<String, usize>, percent: f64, classes: usize, rng: &mut ChaCha8Rng) {
    let mut names: Vec<String> = labels.keys().cloned().collect();
    names.shuffle(rng);
    let count = (percent / 100.0 * names.len() as f64).round() as usize;
    for name in names.into_iter().take(count) {
        let old = labels[&name];
        let mut new = rng.random_range(0..classes - 1);
        if new >= old {
            new += 1;
        }
        labels.insert(name, new);
    }
}

/// One classified window of a trial.
struct WindowTrial {
    analysis: Analysis,
    /// Pruned-graph rows under evaluation.
    test: Vec<usize>,
}

fn run_trial(prepared: &Prepared, labels: &BTreeMap<String, usize>, config: &EngineConfig) -> Result<Vec<WindowTrial>> {
    let mut out = Vec::new();
    for graph in &prepared.graphs {
        let priors: Vec<Option<Prior>> = graph
            .registry
            .domains
            .names()
            .iter()
            .map(|d| {
                labels.get(d).map(|&class_id| Prior {
                    class_id,
                    source: LabelSource::Manual,
                })
            })
            .collect();
        let analysis = match analyze(graph, &priors, config) {
            Ok(a) => a,
            Err(Error::EmptyGraph) => continue,
            Err(e) => return Err(e),
        };
        let domains = analysis.domains();
        let hidden: Vec<usize> = (0..domains.len())
            .filter(|&i| prepared.truth.contains_key(&domains[i]) && !labels.contains_key(&domains[i]))
            .collect();
        // with every label kept, score the labeled rows instead
        let test = if hidden.is_empty() {
            (0..domains.len()).filter(|&i| prepared.truth.contains_key(&domains[i])).collect()
        } else {
            hidden
        };
        out.push(WindowTrial { analysis, test });
    }
    Ok(out)
}

#[derive(Debug, Clone, Serialize)]
pub struct TrialResult {
    pub metrics: Metrics,
    /// Fraction of evaluated domains whose score row stayed zero.
    pub unlabeled_rate: f64,
}

fn score(
    prepared: &Prepared,
    trial: &[WindowTrial],
    pick: impl Fn(&WindowTrial) -> Result<Classification>,
    config: &EngineConfig,
) -> Result<TrialResult> {
    let (mut predicted, mut scores, mut actual) = (Vec::new(), Vec::new(), Vec::new());
    let mut unreached = 0;
    for w in trial {
        let c = pick(w)?;
        let lean = malicious_scores(&c.scores);
        let domains = w.analysis.domains();
        for &i in &w.test {
            predicted.push(c.verdicts[i].class_id);
            scores.push(lean[i]);
            actual.push(truth_class(config, prepared.truth[&domains[i]]));
            unreached += usize::from(c.unreached[i]);
        }
    }
    let metrics = evaluate(&predicted, Some(&scores), &actual, config.label_columns())?;
    Ok(TrialResult {
        unlabeled_rate: unreached as f64 / actual.len() as f64,
        metrics,
    })
}

fn combined(trial: &[WindowTrial], prepared: &Prepared, config: &EngineConfig) -> Result<TrialResult> {
    score(prepared, trial, |w| Ok(w.analysis.classification.clone()), config)
}

#[derive(Debug, Clone, Default, Serialize)]
pub struct Summary {
    pub runs: usize,
    pub mean_accuracy: f64,
    pub std_accuracy: f64,
    pub mean_precision: f64,
    pub mean_recall: f64,
    pub mean_f1: f64,
    /// Mean over runs that had both classes among evaluated domains.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub mean_auc: Option<f64>,
    pub mean_unlabeled_rate: f64,
    pub mean_evaluated: f64,
}

impl Summary {
    pub fn of(results: &[TrialResult]) -> Self {
        let n = results.len() as f64;
        if results.is_empty() {
            return Self::default();
        }
        let mean = |f: &dyn Fn(&TrialResult) -> f64| results.iter().map(f).sum::<f64>() / n;
        let acc = mean(&|r| r.metrics.accuracy);
        let var = mean(&|r| (r.metrics.accuracy - acc).powi(2));
        let aucs: Vec<f64> = results.iter().filter_map(|r| r.metrics.auc).collect();
        Self {
            runs: results.len(),
            mean_accuracy: acc,
            std_accuracy: var.sqrt(),
            mean_precision: mean(&|r| r.metrics.precision),
            mean_recall: mean(&|r| r.metrics.recall),
            mean_f1: mean(&|r| r.metrics.f1),
            mean_auc: (!aucs.is_empty()).then(|| aucs.iter().sum::<f64>() / aucs.len() as f64),
            mean_unlabeled_rate: mean(&|r| r.unlabeled_rate),
            mean_evaluated: mean(&|r| r.metrics.n as f64),
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct SweepRow {
    /// Label fraction or noise percent, depending on the sweep.
    pub setting: f64,
    pub summary: Summary,
    pub accuracies: Vec<f64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct Sweep {
    pub kind: String,
    pub repeats: usize,
    pub rows: Vec<SweepRow>,
}

impl Sweep {
    pub fn row(&self, setting: f64) -> Option<&SweepRow> {
        self.rows.iter().find(|r| (r.setting - setting).abs() < 1e-12)
    }

    pub fn to_text(&self) -> String {
        let mut out = format!(
            "{} ({} repeats)\n{:>8}  {:>8}  {:>8}  {:>8}  {:>8}  {:>8}  {:>8}\n",
            self.kind, self.repeats, "setting", "acc", "acc_sd", "prec", "recall", "f1", "tested"
        );
        for r in &self.rows {
            let s = &r.summary;
            out.push_str(&format!(
                "{:>8.3}  {:>8.4}  {:>8.4}  {:>8.4}  {:>8.4}  {:>8.4}  {:>8.1}\n",
                r.setting, s.mean_accuracy, s.std_accuracy, s.mean_precision, s.mean_recall, s.mean_f1, s.mean_evaluated
            ));
        }
        out
    }
}

fn sweep(
    prepared: &Prepared,
    config: &EngineConfig,
    kind: &str,
    settings: &[f64],
    make_labels: impl Fn(usize, usize) -> BTreeMap<String, usize> + Sync,
) -> Result<Sweep> {
    if settings.is_empty() {
        return Err(Error::Config(format!("{kind}: no settings to sweep")));
    }
    let repeats = config.experiments.repeats;
    let jobs: Vec<(usize, usize)> = (0..settings.len())
        .flat_map(|s| (0..repeats).map(move |r| (s, r)))
        .collect();
    let results: Vec<TrialResult> = jobs
        .par_iter()
        .map(|&(s, r)| {
            let labels = make_labels(s, r);
            let trial = run_trial(prepared, &labels, config)?;
            combined(&trial, prepared, config)
        })
        .collect::<Result<_>>()?;
    let rows = settings
        .iter()
        .enumerate()
        .map(|(s, &setting)| {
            let mine = &results[s * repeats..(s + 1) * repeats];
            SweepRow {
                setting,
                summary: Summary::of(mine),
                accuracies: mine.iter().map(|r| r.metrics.accuracy).collect(),
            }
        })
        .collect();
    Ok(Sweep {
        kind: kind.to_string(),
        repeats,
        rows,
    })
}

/// Accuracy and F1 as the retained label fraction shrinks.
pub fn label_sweep(prepared: &Prepared, config: &EngineConfig) -> Result<Sweep> {
    let fractions = &config.experiments.fractions;
    let seed = config.experiments.seed;
    sweep(prepared, config, "label fraction", fractions, |s, r| {
        let mut rng = trial_rng(seed, ((r as u64) << 32) | s as u64);
        retain(&prepared.truth, fractions[s], &mut rng)
    })
}

/// Accuracy with a share of the retained labels flipped. The retained set
/// depends only on the repeat, so every noise level perturbs the same
/// labels.
pub fn noise_sweep(prepared: &Prepared, config: &EngineConfig) -> Result<Sweep> {
    let e = &config.experiments;
    let percents = &e.noise_percents;
    let columns = config.label_columns();
    sweep(prepared, config, "label noise percent", percents, |s, r| {
        let mut rng = trial_rng(e.seed, (1 << 62) | r as u64);
        let mut labels = retain(&prepared.truth, e.noise_keep_fraction, &mut rng);
        for class in labels.values_mut() {
            *class = truth_class(config, *class);
        }
        flip(&mut labels, percents[s], columns, &mut rng);
        labels
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct PathRow {
    pub path: String,
    pub formula: String,
    /// Mean combination weight; absent for the combined row.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub mean_weight: Option<f64>,
    pub summary: Summary,
}

#[derive(Debug, Clone, Serialize)]
pub struct PerMetapath {
    pub keep_fraction: f64,
    pub repeats: usize,
    pub rows: Vec<PathRow>,
}

impl PerMetapath {
    pub fn row(&self, path: &str) -> Option<&PathRow> {
        self.rows.iter().find(|r| r.path == path)
    }

    pub fn to_text(&self) -> String {
        let mut out = format!(
            "per-metapath ({} repeats, {:.0}% labels kept)\n{:>8}  {:>6}  {:>8}  {:>8}  {:>8}  {:>8}  {:>10}\n",
            self.repeats,
            self.keep_fraction * 100.0,
            "path",
            "weight",
            "acc",
            "prec",
            "recall",
            "f1",
            "unlabeled"
        );
        for r in &self.rows {
            let s = &r.summary;
            let weight = r.mean_weight.map_or("-".to_string(), |w| format!("{w:.4}"));
            out.push_str(&format!(
                "{:>8}  {:>6}  {:>8.4}  {:>8.4}  {:>8.4}  {:>8.4}  {:>10.4}\n",
                r.path, weight, s.mean_accuracy, s.mean_precision, s.mean_recall, s.mean_f1, s.mean_unlabeled_rate
            ));
        }
        out
    }
}

/// Classifies with each single PathSim matrix and with the weighted
/// combination, on the same retained labels per repeat.
pub fn per_metapath(prepared: &Prepared, config: &EngineConfig) -> Result<PerMetapath> {
    let e = &config.experiments;
    let per_repeat: Vec<(Vec<TrialResult>, [f64; 6])> = (0..e.repeats)
        .into_par_iter()
        .map(|r| {
            let mut rng = trial_rng(e.seed, (1 << 61) | r as u64);
            let labels = retain(&prepared.truth, e.per_metapath_keep_fraction, &mut rng);
            let trial = run_trial(prepared, &labels, config)?;
            let mut results = Vec::new();
            for pid in MetapathId::ALL {
                results.push(score(
                    prepared,
                    &trial,
                    |w| {
                        classify(
                            &w.analysis.similarities.pathsims[pid.index()].matrix,
                            &w.analysis.priors,
                            config,
                        )
                    },
                    config,
                )?);
            }
            results.push(combined(&trial, prepared, config)?);
            let mut weights = [0.0; 6];
            for w in &trial {
                for (k, x) in w.analysis.similarities.weights.weights.iter().enumerate() {
                    weights[k] += x / trial.len() as f64;
                }
            }
            Ok((results, weights))
        })
        .collect::<Result<_>>()?;
    let mut rows = Vec::new();
    for (k, pid) in MetapathId::ALL.iter().enumerate() {
        let results: Vec<TrialResult> = per_repeat.iter().map(|(r, _)| r[k].clone()).collect();
        rows.push(PathRow {
            path: pid.to_string(),
            formula: pid.formula().to_string(),
            mean_weight: Some(per_repeat.iter().map(|(_, w)| w[k]).sum::<f64>() / per_repeat.len() as f64),
            summary: Summary::of(&results),
        });
    }
    let results: Vec<TrialResult> = per_repeat.iter().map(|(r, _)| r[6].clone()).collect();
    rows.push(PathRow {
        path: "combined".into(),
        formula: "sum w_k PathSim_k".into(),
        mean_weight: None,
        summary: Summary::of(&results),
    });
    Ok(PerMetapath {
        keep_fraction: e.per_metapath_keep_fraction,
        repeats: e.repeats,
        rows,
    })
}

/// Writes `<stem>.json` and `<stem>.txt` into `dir`.
pub fn write_outputs<T: Serialize>(dir: &Path, stem: &str, value: &T, text: &str) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let json = dir.join(format!("{stem}.json"));
    fs::write(&json, serde_json::to_string_pretty(value)? + "\n").map_err(|e| Error::io(&json, e))?;
    let txt = dir.join(format!("{stem}.txt"));
    fs::write(&txt, text).map_err(|e| Error::io(&txt, e))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn truth(n: usize) -> BTreeMap<String, usize> {
        (0..n).map(|i| (format!("d{i}.test"), i % 2)).collect()
    }

    #[test]
    fn retain_keeps_rounded_share() {
        let t = truth(101);
        let mut rng = trial_rng(0, 0);
        let kept = retain(&t, 0.3, &mut rng);
        assert_eq!(kept.len(), 30);
        assert!(kept.iter().all(|(k, v)| t[k] == *v));
        assert_eq!(retain(&t, 1.0, &mut rng).len(), 101);
    }

    #[test]
    fn flip_changes_exact_count_to_wrong_classes() {
        let t = truth(200);
        let mut labels = t.clone();
        flip(&mut labels, 20.0, 3, &mut trial_rng(1, 0));
        let changed: Vec<_> = labels.iter().filter(|(k, v)| t[*k] != **v).collect();
        assert_eq!(changed.len(), 40);
        assert!(labels.values().all(|&v| v < 3));
        let mut zero = t.clone();
        flip(&mut zero, 0.0, 2, &mut trial_rng(1, 0));
        assert_eq!(zero, t);
    }

    #[test]
    fn binary_flip_is_inversion() {
        let t = truth(50);
        let mut labels = t.clone();
        flip(&mut labels, 100.0, 2, &mut trial_rng(2, 0));
        assert!(labels.iter().all(|(k, v)| *v == 1 - t[k]));
    }

    #[test]
    fn summary_statistics() {
        let mk = |acc: f64| TrialResult {
            metrics: evaluate(&[0], None, &[0], 2).map(|mut m| {
                m.accuracy = acc;
                m
            }).unwrap(),
            unlabeled_rate: 0.0,
        };
        let s = Summary::of(&[mk(0.9), mk(1.0)]);
        assert!((s.mean_accuracy - 0.95).abs() < 1e-15);
        assert!((s.std_accuracy - 0.05).abs() < 1e-15);
    }
}
