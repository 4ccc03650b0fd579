//! End-to-end window processing: build, prune, metapaths, combine,
//! classify, report.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::Serialize;

use crate::classify::{
    evaluate, malicious_scores, normalize, propagate, two_stage, LabelMatrix, LocalListStore,
    Metrics, ScoreMatrix, Verdict,
};
use crate::combine::{build_features, combine, laplacian_score, scores_to_weights, MetapathFeatures, MetapathWeights};
use crate::config::{EngineConfig, Mode};
use crate::error::{Error, Result};
use crate::hin::{load_segments, BuildStats, HinGraph};
use crate::ingest::{
    load_labels, read_log_file, read_pdns_file, window, DnsLogRecord, IngestStats, LabelEntry,
    LabelIndex, LabelSource, PassiveDnsRecord, Prior, WindowBatch,
};
use crate::metapath::{all_commuting, pathsim, SimilarityMatrix};
use crate::prune::{prune, PruneReport, Pruned};
use crate::sparse::SparseMatrix;

/// The six PathSim matrices, their Laplacian-Score weights and the
/// combined similarity.
#[derive(Debug, Clone)]
pub struct Similarities {
    pub pathsims: Vec<SimilarityMatrix>,
    pub features: MetapathFeatures,
    pub weights: MetapathWeights,
    pub combined: SimilarityMatrix,
}

impl Similarities {
    pub fn clamped(&self) -> usize {
        self.pathsims.iter().map(|p| p.clamped).sum()
    }
}

pub fn similarities(graph: &HinGraph, knn_k: usize) -> Result<Similarities> {
    let commuting = all_commuting(graph)?;
    let pathsims: Vec<SimilarityMatrix> = commuting.par_iter().map(pathsim).collect();
    let features = build_features(&commuting)?;
    let weights = scores_to_weights(&laplacian_score(&features, knn_k));
    let combined = combine(&weights, &pathsims)?;
    Ok(Similarities {
        pathsims,
        features,
        weights,
        combined,
    })
}

#[derive(Debug, Clone)]
pub struct Classification {
    /// Benign/malicious scores in binary and two-stage mode, per-class
    /// scores in multi-class mode.
    pub scores: ScoreMatrix,
    pub verdicts: Vec<Verdict>,
    pub unreached: Vec<bool>,
}

/// Classifies every row of `m` given per-row priors, in the configured mode.
pub fn classify(m: &SparseMatrix, priors: &[Option<Prior>], config: &EngineConfig) -> Result<Classification> {
    let labels: Vec<Option<usize>> = priors.iter().map(|p| p.map(|p| p.class_id)).collect();
    let (scores, verdicts) = match config.mode {
        Mode::Binary => {
            let binary: Vec<Option<usize>> = labels.iter().map(|l| l.map(|c| c.min(1))).collect();
            let y = LabelMatrix::from_classes(&binary, 2)?;
            let f = propagate(&normalize(m), &y, &config.classifier)?;
            let v = crate::classify::verdicts(&f, config.classifier.theta);
            (f, v)
        }
        Mode::Multiclass => {
            let y = LabelMatrix::from_classes(&labels, config.classes)?;
            let f = propagate(&normalize(m), &y, &config.classifier)?;
            let v = crate::classify::verdicts(&f, config.classifier.theta);
            (f, v)
        }
        Mode::TwoStage => {
            let y = LabelMatrix::from_classes(&labels, config.classes)?;
            let out = two_stage(m, &y, &config.classifier)?;
            (out.binary, out.verdicts)
        }
    };
    Ok(Classification {
        unreached: scores.unreached(),
        scores,
        verdicts,
    })
}

#[derive(Debug, Clone)]
pub struct Analysis {
    pub pruned: Pruned,
    pub similarities: Similarities,
    /// Priors of the surviving domains, in pruned order.
    pub priors: Vec<Option<Prior>>,
    pub classification: Classification,
}

impl Analysis {
    pub fn domains(&self) -> &[String] {
        self.pruned.graph.registry.domains.names()
    }
}

/// Prune, weigh and classify one built graph. `priors` is indexed like the
/// unpruned graph's domains.
pub fn analyze(graph: &HinGraph, priors: &[Option<Prior>], config: &EngineConfig) -> Result<Analysis> {
    let pruned = prune(graph, priors, &config.prune)?;
    let kept: Vec<Option<Prior>> = pruned.kept_domains.iter().map(|&d| priors[d]).collect();
    let sims = similarities(&pruned.graph, config.knn_k)?;
    let classification = classify(&sims.combined.matrix, &kept, config)?;
    Ok(Analysis {
        pruned,
        similarities: sims,
        priors: kept,
        classification,
    })
}

/// Reads a file, or every regular file of a directory in name order.
fn input_files(path: &Path) -> Result<Vec<PathBuf>> {
    if path.is_dir() {
        let mut files: Vec<PathBuf> = fs::read_dir(path)
            .map_err(|e| Error::io(path, e))?
            .filter_map(|e| e.ok().map(|e| e.path()))
            .filter(|p| p.is_file())
            .collect();
        files.sort();
        Ok(files)
    } else {
        Ok(vec![path.to_path_buf()])
    }
}

#[derive(Debug, Clone, Default, Serialize)]
pub struct InputStats {
    pub logs: IngestStats,
    pub pdns: IngestStats,
}

#[derive(Debug, Clone)]
pub struct Inputs {
    pub windows: Vec<WindowBatch>,
    pub segments: BTreeMap<String, String>,
    pub stats: InputStats,
}

pub fn load_inputs(config: &EngineConfig) -> Result<Inputs> {
    let mut logs: Vec<DnsLogRecord> = Vec::new();
    let mut pdns: Vec<PassiveDnsRecord> = Vec::new();
    let mut stats = InputStats::default();
    if let Some(path) = &config.paths.logs {
        for file in input_files(path)? {
            let (records, s) = read_log_file(&file)?;
            logs.extend(records);
            stats.logs.merge(&s);
        }
    }
    if let Some(path) = &config.paths.pdns {
        for file in input_files(path)? {
            let (records, s) = read_pdns_file(&file)?;
            pdns.extend(records);
            stats.pdns.merge(&s);
        }
    }
    let segments = match &config.paths.segments {
        Some(p) => load_segments(p)?,
        None => BTreeMap::new(),
    };
    Ok(Inputs {
        windows: window(logs, &pdns, config.window_seconds)?,
        segments,
        stats,
    })
}

pub fn load_label_entries(paths: &[PathBuf], classes: usize) -> Result<Vec<LabelEntry>> {
    let mut out = Vec::new();
    for p in paths {
        out.extend(load_labels(p, classes)?);
    }
    Ok(out)
}

#[derive(Debug, Clone, Default, Serialize)]
pub struct VerdictCounts {
    pub benign: usize,
    pub malicious: usize,
    pub solid: usize,
    pub unreached: usize,
}

#[derive(Debug, Clone, Serialize)]
pub struct WindowReport {
    pub window_start: i64,
    pub window_end: i64,
    /// Why the window produced no verdicts, if it did not.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub skipped: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub build: Option<BuildStats>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub prune: Option<PruneReport>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub weights: Option<MetapathWeights>,
    pub pathsim_clamped: usize,
    pub labeled: usize,
    pub iterations: usize,
    pub converged: bool,
    pub verdicts: VerdictCounts,
}

impl WindowReport {
    fn skipped(batch: &WindowBatch, reason: &str) -> Self {
        Self {
            window_start: batch.window_start,
            window_end: batch.window_end,
            skipped: Some(reason.to_string()),
            build: None,
            prune: None,
            weights: None,
            pathsim_clamped: 0,
            labeled: 0,
            iterations: 0,
            converged: false,
            verdicts: VerdictCounts::default(),
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct RunReport {
    pub status: String,
    pub mode: Mode,
    pub inputs: InputStats,
    pub windows: Vec<WindowReport>,
    pub local_list_entries: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub metrics: Option<Metrics>,
}

/// One classified domain, for evaluation against truth.
struct Scored {
    domain: String,
    predicted: usize,
    score: f64,
}

pub fn verdicts_csv(domains: &[String], verdicts: &[Verdict]) -> String {
    let mut out = String::from("domain,class_id,confidence,solid\n");
    for (d, v) in domains.iter().zip(verdicts) {
        out.push_str(&format!("{d},{},{},{}\n", v.class_id, v.confidence, v.solid));
    }
    out
}

pub fn roc_csv(metrics: &Metrics) -> String {
    let mut out = String::from("fpr,tpr,threshold\n");
    for p in &metrics.roc {
        out.push_str(&format!("{},{},{}\n", p.fpr, p.tpr, p.threshold));
    }
    out
}

fn write(path: &Path, text: &str) -> Result<()> {
    if let Some(parent) = path.parent() {
        fs::create_dir_all(parent).map_err(|e| Error::io(parent, e))?;
    }
    fs::write(path, text).map_err(|e| Error::io(path, e))
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    write(path, &(serde_json::to_string_pretty(value)? + "\n"))
}

/// Maps truth class ids onto the columns the configured mode predicts.
pub fn truth_class(config: &EngineConfig, class: usize) -> usize {
    match config.mode {
        Mode::Binary => class.min(1),
        Mode::Multiclass | Mode::TwoStage => class,
    }
}

/// Processes every window in order, feeding solid verdicts of each window
/// into the local lists used as priors by the next. Writes per-window
/// verdicts, prune reports and weights plus the run report, the local
/// lists, and metrics when truth is configured.
pub fn run(config: &EngineConfig) -> Result<RunReport> {
    config.validate()?;
    let inputs = load_inputs(config)?;
    let base = load_label_entries(&config.paths.labels, config.classes)?;
    let truth = match &config.paths.truth {
        Some(p) => Some(LabelIndex::new(&load_labels(p, config.classes)?, config.conflict_policy)),
        None => None,
    };
    let out = &config.paths.output;
    fs::create_dir_all(out).map_err(|e| Error::io(out, e))?;

    let mut local = LocalListStore::default();
    let mut reports = Vec::new();
    let mut scored: Vec<Scored> = Vec::new();
    for batch in &inputs.windows {
        if batch.is_empty() {
            reports.push(WindowReport::skipped(batch, "no records"));
            continue;
        }
        let wrap = |e: Error| Error::Window {
            start: batch.window_start,
            source: Box::new(e),
        };
        let (graph, build) = HinGraph::build(batch, &inputs.segments, &config.kmeans).map_err(wrap)?;
        let mut index = LabelIndex::new(&base, config.conflict_policy);
        for e in local.entries() {
            index.insert(e);
        }
        let priors: Vec<Option<Prior>> = graph
            .registry
            .domains
            .names()
            .iter()
            .map(|d| index.prior(d))
            .collect();
        let analysis = match analyze(&graph, &priors, config) {
            Ok(a) => a,
            Err(Error::EmptyGraph) => {
                log::warn!("window {} is empty after pruning", batch.window_start);
                let mut r = WindowReport::skipped(batch, "empty after pruning");
                r.build = Some(build);
                reports.push(r);
                continue;
            }
            Err(e) => return Err(wrap(e)),
        };
        let domains = analysis.domains().to_vec();
        let c = &analysis.classification;
        let dir = out.join("windows").join(batch.window_start.to_string());
        write(&dir.join("verdicts.csv"), &verdicts_csv(&domains, &c.verdicts))?;
        write_json(&dir.join("prune_report.json"), &analysis.pruned.report)?;
        write_json(&dir.join("weights.json"), &analysis.similarities.weights)?;

        let externally_labeled = |p: &Option<Prior>| {
            p.is_some_and(|p| matches!(p.source, LabelSource::Manual | LabelSource::Public))
        };
        local.update(
            domains
                .iter()
                .zip(&c.verdicts)
                .zip(&analysis.priors)
                .filter(|(_, p)| !externally_labeled(p))
                .map(|((d, v), _)| (d.as_str(), v)),
            batch.window_end,
        );
        let lean = malicious_scores(&c.scores);
        for (i, d) in domains.iter().enumerate() {
            if !externally_labeled(&analysis.priors[i]) {
                scored.push(Scored {
                    domain: d.clone(),
                    predicted: c.verdicts[i].class_id,
                    score: lean[i],
                });
            }
        }
        let malicious = c.verdicts.iter().filter(|v| v.is_malicious()).count();
        reports.push(WindowReport {
            window_start: batch.window_start,
            window_end: batch.window_end,
            skipped: None,
            build: Some(build),
            prune: Some(analysis.pruned.report.clone()),
            weights: Some(analysis.similarities.weights.clone()),
            pathsim_clamped: analysis.similarities.clamped(),
            labeled: analysis.priors.iter().filter(|p| p.is_some()).count(),
            iterations: c.scores.iterations_used,
            converged: c.scores.converged,
            verdicts: VerdictCounts {
                benign: c.verdicts.len() - malicious,
                malicious,
                solid: c.verdicts.iter().filter(|v| v.solid).count(),
                unreached: c.unreached.iter().filter(|&&u| u).count(),
            },
        });
    }
    local.save(&out.join("local_labels.csv"))?;

    let metrics = match &truth {
        Some(index) => {
            let mut predicted = Vec::new();
            let mut scores = Vec::new();
            let mut actual = Vec::new();
            for s in &scored {
                if let Some(p) = index.prior(&s.domain) {
                    predicted.push(s.predicted);
                    scores.push(s.score);
                    actual.push(truth_class(config, p.class_id));
                }
            }
            match evaluate(&predicted, Some(&scores), &actual, config.label_columns()) {
                Ok(m) => {
                    write_json(&out.join("metrics.json"), &m)?;
                    write(&out.join("roc.csv"), &roc_csv(&m))?;
                    Some(m)
                }
                Err(Error::EmptyTruth) => {
                    log::warn!("no classified domain without a prior has a truth label");
                    None
                }
                Err(e) => return Err(e),
            }
        }
        None => None,
    };

    let status = if reports.iter().any(|r| r.skipped.is_none()) {
        "ok"
    } else {
        "no windows"
    };
    let report = RunReport {
        status: status.to_string(),
        mode: config.mode,
        inputs: inputs.stats,
        windows: reports,
        local_list_entries: local.len(),
        metrics,
    };
    write_json(&out.join("report.json"), &report)?;
    Ok(report)
}

#[derive(Debug, serde::Deserialize)]
struct VerdictRow {
    domain: String,
    class_id: usize,
    confidence: f64,
}

/// Scores verdict CSVs against a truth list and writes `metrics.json` and
/// `roc.csv` into `out`. A verdict's ranking score is its confidence,
/// negated when benign. Later files override earlier ones per domain;
/// domains without truth are skipped.
pub fn evaluate_verdicts(verdict_files: &[PathBuf], truth: &Path, config: &EngineConfig, out: &Path) -> Result<Metrics> {
    let index = LabelIndex::new(&load_labels(truth, config.classes)?, config.conflict_policy);
    let mut latest: BTreeMap<String, VerdictRow> = BTreeMap::new();
    for path in verdict_files {
        let mut reader = csv::Reader::from_reader(crate::ingest::open(path)?);
        for row in reader.deserialize() {
            let row: VerdictRow = row?;
            latest.insert(row.domain.clone(), row);
        }
    }
    let (mut predicted, mut scores, mut actual) = (Vec::new(), Vec::new(), Vec::new());
    for (domain, row) in &latest {
        if let Some(p) = index.prior(domain) {
            predicted.push(row.class_id);
            scores.push(if row.class_id == 0 { -row.confidence } else { row.confidence });
            actual.push(truth_class(config, p.class_id));
        }
    }
    let m = evaluate(&predicted, Some(&scores), &actual, config.label_columns())?;
    write_json(&out.join("metrics.json"), &m)?;
    write(&out.join("roc.csv"), &roc_csv(&m))?;
    Ok(m)
}
