//! Laplacian-Score weighting of the six metapath similarities into one
//! combined similarity matrix.
//!
//! Each domain is described by six numbers, the row sums of the six
//! commuting matrices. A k-nearest-neighbour graph over those rows scores
//! every column by how well it respects local structure (lower is better);
//! reciprocal scores, normalized, become the metapath weights.

use rayon::prelude::*;
use serde::{Serialize, Serializer};

use crate::error::{Error, Result};
use crate::metapath::SimilarityMatrix;
use crate::sparse::SparseMatrix;

pub const PATHS: usize = 6;
const SCORE_EPSILON: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub struct MetapathFeatures {
    /// One row per domain; column k is the row sum of commuting matrix k.
    pub rows: Vec<[f64; PATHS]>,
}

impl MetapathFeatures {
    pub fn column(&self, k: usize) -> Vec<f64> {
        self.rows.iter().map(|r| r[k]).collect()
    }
}

pub fn build_features(commuting: &[SparseMatrix]) -> Result<MetapathFeatures> {
    if commuting.len() != PATHS {
        return Err(Error::DimensionMismatch(format!(
            "expected {PATHS} commuting matrices, got {}",
            commuting.len()
        )));
    }
    let n = commuting[0].rows();
    if commuting.iter().any(|m| m.rows() != n || m.cols() != n) {
        return Err(Error::DimensionMismatch(
            "commuting matrices must share one square dimension".into(),
        ));
    }
    let sums: Vec<Vec<f64>> = commuting.iter().map(SparseMatrix::row_sums).collect();
    let rows = (0..n)
        .map(|i| std::array::from_fn(|k| sums[k][i]))
        .collect();
    Ok(MetapathFeatures { rows })
}

/// Symmetric 0/1 kNN graph over L2-normalized rows (Euclidean distance,
/// ties to the lower index, OR-mutualized). Returned as sorted neighbour
/// lists.
pub fn knn_graph(rows: &[Vec<f64>], k: usize) -> Vec<Vec<usize>> {
    let n = rows.len();
    let k = k.min(n.saturating_sub(1));
    let unit: Vec<Vec<f64>> = rows
        .iter()
        .map(|r| {
            let norm = r.iter().map(|v| v * v).sum::<f64>().sqrt();
            if norm > 0.0 {
                r.iter().map(|v| v / norm).collect()
            } else {
                r.clone()
            }
        })
        .collect();
    let nearest: Vec<Vec<usize>> = (0..n)
        .into_par_iter()
        .map(|i| {
            if k == 0 {
                return Vec::new();
            }
            let mut cand: Vec<(f64, usize)> = (0..n)
                .filter(|&j| j != i)
                .map(|j| {
                    let d: f64 = unit[i]
                        .iter()
                        .zip(&unit[j])
                        .map(|(a, b)| (a - b).powi(2))
                        .sum();
                    (d, j)
                })
                .collect();
            let cmp = |a: &(f64, usize), b: &(f64, usize)| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1));
            cand.select_nth_unstable_by(k - 1, cmp);
            cand.truncate(k);
            cand.into_iter().map(|(_, j)| j).collect()
        })
        .collect();
    let mut adj: Vec<Vec<usize>> = vec![Vec::new(); n];
    for (i, near) in nearest.iter().enumerate() {
        for &j in near {
            adj[i].push(j);
            adj[j].push(i);
        }
    }
    for list in &mut adj {
        list.sort_unstable();
        list.dedup();
    }
    adj
}

/// Laplacian Score of one feature over a fixed 0/1 graph. Infinite for a
/// feature with no weighted variance.
pub fn laplacian_score_on(adjacency: &[Vec<usize>], feature: &[f64]) -> f64 {
    let degree: Vec<f64> = adjacency.iter().map(|a| a.len() as f64).collect();
    let total: f64 = degree.iter().sum();
    if total == 0.0 {
        return f64::INFINITY;
    }
    let mean = feature.iter().zip(&degree).map(|(f, d)| f * d).sum::<f64>() / total;
    let centered: Vec<f64> = feature.iter().map(|f| f - mean).collect();
    let spread: f64 = centered.iter().zip(&degree).map(|(f, d)| d * f * f).sum();
    let scale: f64 = feature.iter().zip(&degree).map(|(f, d)| d * f * f).sum();
    if spread <= 1e-10 * scale || spread == 0.0 {
        return f64::INFINITY;
    }
    let smooth: f64 = adjacency
        .iter()
        .enumerate()
        .map(|(i, nbrs)| nbrs.iter().map(|&j| centered[i] * centered[j]).sum::<f64>())
        .sum();
    ((spread - smooth) / spread).max(0.0)
}

/// One score per column of `rows`, all over the same kNN graph of the rows.
pub fn laplacian_scores(rows: &[Vec<f64>], knn_k: usize) -> Vec<f64> {
    let dims = rows.first().map_or(0, Vec::len);
    let adjacency = knn_graph(rows, knn_k);
    (0..dims)
        .map(|k| {
            let column: Vec<f64> = rows.iter().map(|r| r[k]).collect();
            laplacian_score_on(&adjacency, &column)
        })
        .collect()
}

pub fn laplacian_score(features: &MetapathFeatures, knn_k: usize) -> [f64; PATHS] {
    let rows: Vec<Vec<f64>> = features.rows.iter().map(|r| r.to_vec()).collect();
    let scores = laplacian_scores(&rows, knn_k);
    std::array::from_fn(|k| scores.get(k).copied().unwrap_or(f64::INFINITY))
}

fn finite_or_null<S: Serializer>(v: &[f64; PATHS], s: S) -> std::result::Result<S::Ok, S::Error> {
    let out: Vec<Option<f64>> = v.iter().map(|x| x.is_finite().then_some(*x)).collect();
    out.serialize(s)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MetapathWeights {
    pub weights: [f64; PATHS],
    /// Raw Laplacian scores; degenerate (infinite) scores serialize as null.
    #[serde(serialize_with = "finite_or_null")]
    pub scores: [f64; PATHS],
    /// Every score was degenerate and uniform weights were used instead.
    pub fallback_uniform: bool,
}

pub fn scores_to_weights(scores: &[f64; PATHS]) -> MetapathWeights {
    let finite: Vec<usize> = (0..PATHS).filter(|&k| scores[k].is_finite()).collect();
    let mut weights = [0.0; PATHS];
    if finite.is_empty() {
        log::warn!("all metapath features are degenerate; using uniform weights");
        return MetapathWeights {
            weights: [1.0 / PATHS as f64; PATHS],
            scores: *scores,
            fallback_uniform: true,
        };
    }
    let perfect: Vec<usize> = finite
        .iter()
        .copied()
        .filter(|&k| scores[k] <= SCORE_EPSILON)
        .collect();
    if !perfect.is_empty() {
        for &k in &perfect {
            weights[k] = 1.0 / perfect.len() as f64;
        }
    } else {
        let total: f64 = finite.iter().map(|&k| 1.0 / scores[k]).sum();
        for &k in &finite {
            weights[k] = (1.0 / scores[k]) / total;
        }
    }
    MetapathWeights {
        weights,
        scores: *scores,
        fallback_uniform: false,
    }
}

/// `Σ ω_k · PathSim_k`, clamped to `[0, 1]` against rounding.
pub fn combine(weights: &MetapathWeights, pathsims: &[SimilarityMatrix]) -> Result<SimilarityMatrix> {
    if pathsims.len() != PATHS {
        return Err(Error::DimensionMismatch(format!(
            "expected {PATHS} similarity matrices, got {}",
            pathsims.len()
        )));
    }
    let n = pathsims[0].matrix.rows();
    if pathsims
        .iter()
        .any(|p| p.matrix.rows() != n || p.matrix.cols() != n)
    {
        return Err(Error::DimensionMismatch(
            "similarity matrices must share one square dimension".into(),
        ));
    }
    let triplets = pathsims
        .iter()
        .zip(weights.weights)
        .filter(|(_, w)| *w > 0.0)
        .flat_map(|(p, w)| p.matrix.iter().map(move |(i, j, v)| (i, j, w * v)));
    let summed = SparseMatrix::from_triplets(n, n, triplets)?;
    Ok(SimilarityMatrix {
        matrix: summed.map_entries(|_, _, v| v.clamp(0.0, 1.0)),
        clamped: 0,
    })
}
