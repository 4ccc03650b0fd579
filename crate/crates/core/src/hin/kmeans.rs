use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::sparse::SparseMatrix;

use super::DomainFeatureMatrix;

const MAX_ITERATIONS: usize = 100;
const SHIFT_TOLERANCE: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct KMeansConfig {
    pub k: usize,
    pub seed: u64,
    /// Independent k-means++ restarts; the lowest-inertia run wins.
    #[serde(default = "default_restarts")]
    pub restarts: usize,
}

fn default_restarts() -> usize {
    5
}

impl KMeansConfig {
    pub fn new(k: usize, seed: u64) -> Self {
        Self {
            k,
            seed,
            restarts: default_restarts(),
        }
    }
}

impl Default for KMeansConfig {
    fn default() -> Self {
        Self::new(20, 0)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Clustering {
    pub assignments: Vec<usize>,
    /// Cluster count actually used; below the configured value when there
    /// are fewer domains than clusters.
    pub k: usize,
    pub iterations: usize,
    /// Same-cluster indicator, zero diagonal.
    pub matrix: SparseMatrix,
}

fn normalized_rows(points: &SparseMatrix) -> Vec<(Vec<usize>, Vec<f64>)> {
    (0..points.rows())
        .map(|i| {
            let (cols, vals) = points.row(i);
            let norm = vals.iter().map(|v| v * v).sum::<f64>().sqrt();
            let scale = if norm > 0.0 { 1.0 / norm } else { 0.0 };
            (cols.to_vec(), vals.iter().map(|v| v * scale).collect())
        })
        .collect()
}

fn sq_distance(point: &(Vec<usize>, Vec<f64>), centroid: &[f64], centroid_sq: f64) -> f64 {
    let point_sq: f64 = point.1.iter().map(|v| v * v).sum();
    let dot: f64 = point.0.iter().zip(&point.1).map(|(&c, &v)| v * centroid[c]).sum();
    (point_sq + centroid_sq - 2.0 * dot).max(0.0)
}

fn dense(point: &(Vec<usize>, Vec<f64>), dim: usize) -> Vec<f64> {
    let mut out = vec![0.0; dim];
    for (&c, &v) in point.0.iter().zip(&point.1) {
        out[c] = v;
    }
    out
}

fn plus_plus_init(
    rows: &[(Vec<usize>, Vec<f64>)],
    dim: usize,
    k: usize,
    rng: &mut ChaCha8Rng,
) -> Vec<Vec<f64>> {
    let n = rows.len();
    let mut chosen = vec![false; n];
    let first = rng.random_range(0..n);
    chosen[first] = true;
    let mut centroids = vec![dense(&rows[first], dim)];
    let mut best: Vec<f64> = rows
        .iter()
        .map(|p| sq_distance(p, &centroids[0], norm_sq(&centroids[0])))
        .collect();
    while centroids.len() < k {
        let total: f64 = best.iter().sum();
        let next = if total > 0.0 {
            let mut target = rng.random::<f64>() * total;
            let mut pick = n - 1;
            for (i, &d) in best.iter().enumerate() {
                if d <= 0.0 {
                    continue;
                }
                if target < d {
                    pick = i;
                    break;
                }
                target -= d;
            }
            if best[pick] <= 0.0 {
                pick = best.iter().rposition(|&d| d > 0.0).unwrap_or(pick);
            }
            pick
        } else {
            // every point coincides with a centre already
            let free: Vec<usize> = (0..n).filter(|&i| !chosen[i]).collect();
            free[rng.random_range(0..free.len())]
        };
        chosen[next] = true;
        let c = dense(&rows[next], dim);
        let c_sq = norm_sq(&c);
        for (b, p) in best.iter_mut().zip(rows) {
            *b = b.min(sq_distance(p, &c, c_sq));
        }
        centroids.push(c);
    }
    centroids
}

fn norm_sq(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum()
}

/// Lloyd's K-means on L2-normalized rows with k-means++ seeding, best of
/// `restarts` runs by inertia. Returns the assignment and the iteration
/// count of the winning run. Ties go to the lowest cluster.
pub fn kmeans(points: &SparseMatrix, k: usize, seed: u64, restarts: usize) -> (Vec<usize>, usize) {
    let n = points.rows();
    if n == 0 || k == 0 {
        return (Vec::new(), 0);
    }
    let k = k.min(n);
    let rows = normalized_rows(points);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut best: Option<(f64, Vec<usize>, usize)> = None;
    for _ in 0..restarts.max(1) {
        let (assignments, iterations, inertia) = lloyd(&rows, points.cols(), k, &mut rng);
        if best.as_ref().is_none_or(|b| inertia < b.0) {
            best = Some((inertia, assignments, iterations));
        }
    }
    let (_, assignments, iterations) = best.expect("at least one run");
    (assignments, iterations)
}

fn lloyd(
    rows: &[(Vec<usize>, Vec<f64>)],
    dim: usize,
    k: usize,
    rng: &mut ChaCha8Rng,
) -> (Vec<usize>, usize, f64) {
    let n = rows.len();
    let mut centroids = plus_plus_init(rows, dim, k, rng);
    let mut assignments = vec![0usize; n];
    let mut iterations = 0;
    for _ in 0..MAX_ITERATIONS {
        iterations += 1;
        let norms: Vec<f64> = centroids.iter().map(|c| norm_sq(c)).collect();
        assignments = rows
            .par_iter()
            .map(|p| {
                let mut best = (f64::INFINITY, 0);
                for (j, c) in centroids.iter().enumerate() {
                    let d = sq_distance(p, c, norms[j]);
                    if d < best.0 {
                        best = (d, j);
                    }
                }
                best.1
            })
            .collect();
        let mut sums = vec![vec![0.0; dim]; k];
        let mut sizes = vec![0usize; k];
        for (p, &a) in rows.iter().zip(&assignments) {
            sizes[a] += 1;
            for (&c, &v) in p.0.iter().zip(&p.1) {
                sums[a][c] += v;
            }
        }
        let mut shift: f64 = 0.0;
        for j in 0..k {
            if sizes[j] == 0 {
                continue; // empty cluster keeps its centre
            }
            let inv = 1.0 / sizes[j] as f64;
            let moved: f64 = sums[j]
                .iter_mut()
                .zip(&centroids[j])
                .map(|(s, &old)| {
                    *s *= inv;
                    (*s - old).powi(2)
                })
                .sum();
            shift = shift.max(moved.sqrt());
            std::mem::swap(&mut centroids[j], &mut sums[j]);
        }
        if shift < SHIFT_TOLERANCE {
            break;
        }
    }
    let norms: Vec<f64> = centroids.iter().map(|c| norm_sq(c)).collect();
    let inertia = rows
        .iter()
        .zip(&assignments)
        .map(|(p, &a)| sq_distance(p, &centroids[a], norms[a]))
        .sum();
    (assignments, iterations, inertia)
}

/// Clusters domain n-gram vectors and turns co-membership into the
/// domain-similar-domain relation.
pub fn build_s(features: &DomainFeatureMatrix, config: &KMeansConfig) -> Clustering {
    let n = features.counts.rows();
    let mut k = config.k.max(1);
    if n < k {
        if n > 0 {
            log::warn!("only {n} domains for {k} clusters; clustering with k = {n}");
        }
        k = n;
    }
    let (assignments, iterations) = kmeans(&features.counts, k, config.seed, config.restarts);
    let mut members: Vec<Vec<usize>> = vec![Vec::new(); k];
    for (i, &a) in assignments.iter().enumerate() {
        members[a].push(i);
    }
    let pairs = members.iter().flat_map(|m| {
        m.iter()
            .flat_map(move |&a| m.iter().filter(move |&&b| b != a).map(move |&b| (a, b)))
    });
    let matrix = SparseMatrix::indicator(n, n, pairs).expect("cluster members are in range");
    Clustering {
        assignments,
        k,
        iterations,
        matrix,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hin::{featurize_domains, NodeRegistry};

    fn features(names: &[&str]) -> DomainFeatureMatrix {
        featurize_domains(&NodeRegistry {
            domains: names.iter().map(|s| s.to_string()).collect::<Vec<_>>().into(),
            ..Default::default()
        })
    }

    #[test]
    fn single_cluster_is_complete_graph() {
        let f = features(&["a.test", "bb.test", "qqq.org", "zz.cn"]);
        let c = build_s(&f, &KMeansConfig::new(1, 3));
        assert_eq!(c.matrix.nnz(), 4 * 3);
        assert!(c.matrix.diagonal().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn singleton_clusters_give_empty_relation() {
        let f = features(&["a.test", "bb.test", "qqq.org", "zz.cn"]);
        let c = build_s(&f, &KMeansConfig::new(4, 3));
        assert_eq!(c.matrix.nnz(), 0);
    }

    #[test]
    fn too_few_domains_falls_back() {
        let f = features(&["a.test", "b.test"]);
        let c = build_s(&f, &KMeansConfig::new(20, 1));
        assert_eq!(c.k, 2);
    }

    #[test]
    fn deterministic_given_seed() {
        let names: Vec<String> = (0..40).map(|i| format!("host{i}.x{}.com", i % 7)).collect();
        let refs: Vec<&str> = names.iter().map(String::as_str).collect();
        let f = features(&refs);
        let cfg = KMeansConfig::new(5, 9);
        assert_eq!(build_s(&f, &cfg), build_s(&f, &cfg));
    }

    fn sse(rows: &[(Vec<usize>, Vec<f64>)], dim: usize, part: &[usize]) -> f64 {
        let mut total = 0.0;
        for cluster in 0..2 {
            let members: Vec<_> = (0..rows.len()).filter(|&i| part[i] == cluster).collect();
            if members.is_empty() {
                continue;
            }
            let mut mean = vec![0.0; dim];
            for &i in &members {
                for (&c, &v) in rows[i].0.iter().zip(&rows[i].1) {
                    mean[c] += v / members.len() as f64;
                }
            }
            for &i in &members {
                let d = dense(&rows[i], dim);
                total += d.iter().zip(&mean).map(|(a, b)| (a - b).powi(2)).sum::<f64>();
            }
        }
        total
    }

    #[test]
    fn separates_word_and_hex_families() {
        let names = [
            "garden.com",
            "sunshine.net",
            "weather.org",
            "football.com",
            "travelguide.net",
            "recipes.org",
            "9f3a7c1e0b2d4a6f.cc",
            "0e4b8d2f6a1c3e5b.cc",
            "a7c3e1f9b5d0286e.cc",
            "5d2f8b0e4a6c1397.cc",
            "e1c5a9f3d7b20846.cc",
            "3b7f1d5e9a0c2468.cc",
        ];
        let f = features(&names);
        let c = build_s(&f, &KMeansConfig::new(2, 4));
        // exhaustive oracle over all 2-partitions
        let rows = normalized_rows(&f.counts);
        let dim = f.counts.cols();
        let n = names.len();
        let mut best = (f64::INFINITY, Vec::new());
        for mask in 0u32..(1 << (n - 1)) {
            let part: Vec<usize> = (0..n).map(|i| ((mask >> i) & 1) as usize).collect();
            let e = sse(&rows, dim, &part);
            if e < best.0 - 1e-12 {
                best = (e, part);
            }
        }
        let same = |p: &[usize], i: usize, j: usize| p[i] == p[j];
        for i in 0..n {
            for j in 0..n {
                assert_eq!(same(&c.assignments, i, j), same(&best.1, i, j), "({i},{j})");
                assert_eq!(same(&best.1, i, j), (i < 6) == (j < 6));
                if i != j {
                    assert_eq!(c.matrix.get(i, j) == 1.0, (i < 6) == (j < 6));
                }
            }
        }
    }
}
