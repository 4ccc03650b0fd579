//! Detection metrics with malicious as the positive class.

use serde::Serialize;

use crate::error::{Error, Result};

use super::ScoreMatrix;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RocPoint {
    pub fpr: f64,
    pub tpr: f64,
    pub threshold: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ClassMetrics {
    pub class_id: usize,
    pub support: usize,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MulticlassMetrics {
    /// `confusion[truth][predicted]`.
    pub confusion: Vec<Vec<usize>>,
    pub per_class: Vec<ClassMetrics>,
    pub weighted_precision: f64,
    pub weighted_recall: f64,
    pub weighted_f1: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Metrics {
    pub n: usize,
    pub tp: usize,
    pub fp: usize,
    pub tn: usize,
    #[serde(rename = "fn")]
    pub fn_: usize,
    pub accuracy: f64,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    /// Absent when the truth holds only one of benign/malicious or no scores
    /// were supplied.
    pub auc: Option<f64>,
    #[serde(skip)]
    pub roc: Vec<RocPoint>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub multiclass: Option<MulticlassMetrics>,
}

fn ratio(num: usize, den: usize) -> f64 {
    if den == 0 {
        0.0
    } else {
        num as f64 / den as f64
    }
}

fn harmonic(p: f64, r: f64) -> f64 {
    if p + r == 0.0 {
        0.0
    } else {
        2.0 * p * r / (p + r)
    }
}

/// `max(F[i,1..]) − F[i,0]`: how far a domain leans malicious.
pub fn malicious_scores(f: &ScoreMatrix) -> Vec<f64> {
    (0..f.n())
        .map(|i| {
            let row = f.row(i);
            row[1..].iter().copied().fold(f64::NEG_INFINITY, f64::max) - row[0]
        })
        .collect()
}

/// ROC by sweeping a threshold down through the distinct scores; a point is
/// emitted after each group of tied scores. Also returns the trapezoid AUC.
pub fn roc_curve(scores: &[f64], positive: &[bool]) -> Option<(Vec<RocPoint>, f64)> {
    let pos = positive.iter().filter(|&&p| p).count();
    let neg = positive.len() - pos;
    if pos == 0 || neg == 0 {
        return None;
    }
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]).then(a.cmp(&b)));
    let mut points = vec![RocPoint {
        fpr: 0.0,
        tpr: 0.0,
        threshold: f64::INFINITY,
    }];
    let (mut tp, mut fp) = (0usize, 0usize);
    let mut auc = 0.0;
    let mut k = 0;
    while k < order.len() {
        let threshold = scores[order[k]];
        while k < order.len() && scores[order[k]] == threshold {
            if positive[order[k]] {
                tp += 1;
            } else {
                fp += 1;
            }
            k += 1;
        }
        let prev = *points.last().expect("seeded with origin");
        let point = RocPoint {
            fpr: ratio(fp, neg),
            tpr: ratio(tp, pos),
            threshold,
        };
        auc += (point.fpr - prev.fpr) * (point.tpr + prev.tpr) / 2.0;
        points.push(point);
    }
    Some((points, auc))
}

/// Binary metrics (any class ≥ 1 counts as malicious), ROC when scores are
/// given, and a support-weighted multi-class breakdown when `classes > 2`.
pub fn evaluate(
    predicted: &[usize],
    scores: Option<&[f64]>,
    truth: &[usize],
    classes: usize,
) -> Result<Metrics> {
    if truth.is_empty() {
        return Err(Error::EmptyTruth);
    }
    if predicted.len() != truth.len() || scores.is_some_and(|s| s.len() != truth.len()) {
        return Err(Error::DimensionMismatch(format!(
            "{} predictions for {} truth labels",
            predicted.len(),
            truth.len()
        )));
    }
    let (mut tp, mut fp, mut tn, mut fn_) = (0, 0, 0, 0);
    for (&p, &t) in predicted.iter().zip(truth) {
        match (p >= 1, t >= 1) {
            (true, true) => tp += 1,
            (true, false) => fp += 1,
            (false, false) => tn += 1,
            (false, true) => fn_ += 1,
        }
    }
    let precision = ratio(tp, tp + fp);
    let recall = ratio(tp, tp + fn_);
    let positive: Vec<bool> = truth.iter().map(|&t| t >= 1).collect();
    let (roc, auc) = match scores.and_then(|s| roc_curve(s, &positive)) {
        Some((points, auc)) => (points, Some(auc)),
        None => (Vec::new(), None),
    };
    let multiclass = (classes > 2).then(|| multiclass_metrics(predicted, truth, classes));
    Ok(Metrics {
        n: truth.len(),
        tp,
        fp,
        tn,
        fn_,
        accuracy: ratio(tp + tn, truth.len()),
        precision,
        recall,
        f1: harmonic(precision, recall),
        auc,
        roc,
        multiclass,
    })
}

fn multiclass_metrics(predicted: &[usize], truth: &[usize], classes: usize) -> MulticlassMetrics {
    let width = classes
        .max(predicted.iter().max().map_or(0, |m| m + 1))
        .max(truth.iter().max().map_or(0, |m| m + 1));
    let mut confusion = vec![vec![0usize; width]; width];
    for (&p, &t) in predicted.iter().zip(truth) {
        confusion[t][p] += 1;
    }
    let per_class: Vec<ClassMetrics> = (0..width)
        .map(|c| {
            let hit = confusion[c][c];
            let support: usize = confusion[c].iter().sum();
            let claimed: usize = confusion.iter().map(|row| row[c]).sum();
            let precision = ratio(hit, claimed);
            let recall = ratio(hit, support);
            ClassMetrics {
                class_id: c,
                support,
                precision,
                recall,
                f1: harmonic(precision, recall),
            }
        })
        .collect();
    let total = truth.len() as f64;
    let weighted = |f: fn(&ClassMetrics) -> f64| {
        per_class.iter().map(|m| f(m) * m.support as f64).sum::<f64>() / total
    };
    MulticlassMetrics {
        weighted_precision: weighted(|m| m.precision),
        weighted_recall: weighted(|m| m.recall),
        weighted_f1: weighted(|m| m.f1),
        confusion,
        per_class,
    }
}
