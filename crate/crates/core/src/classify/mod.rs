//! Transductive classification over the combined domain similarity.
//!
//! Label scores spread along `S = D^-1/2 M' D^-1/2` with the iteration
//! `F(t+1) = αSF(t) + βY`, `α = 1/(1+μ)`, `β = μ/(1+μ)`, whose fixed point is
//! `F* = β(I − αS)^-1 Y`. Rows of `F` are raw scores and are never
//! renormalized.

mod local;
mod metrics;

pub use local::{LocalListStore, LOCAL_RETENTION_SECS};
pub use metrics::{
    evaluate, malicious_scores, roc_curve, ClassMetrics, Metrics, MulticlassMetrics, RocPoint,
};

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ingest::Prior;
use crate::sparse::SparseMatrix;

/// Pre-labeled class distribution: one-hot rows for labeled domains, zero
/// rows otherwise. Column 0 is benign.
#[derive(Debug, Clone, PartialEq)]
pub struct LabelMatrix {
    classes: usize,
    y: Vec<f64>,
    mask: Vec<bool>,
}

impl LabelMatrix {
    pub fn new(n: usize, classes: usize) -> Result<Self> {
        if classes < 2 {
            return Err(Error::Config(format!("need at least 2 classes, got {classes}")));
        }
        Ok(Self {
            classes,
            y: vec![0.0; n * classes],
            mask: vec![false; n],
        })
    }

    pub fn from_classes(labels: &[Option<usize>], classes: usize) -> Result<Self> {
        let mut m = Self::new(labels.len(), classes)?;
        for (i, label) in labels.iter().enumerate() {
            if let Some(c) = *label {
                m.set(i, c)?;
            }
        }
        Ok(m)
    }

    pub fn from_priors(priors: &[Option<Prior>], classes: usize) -> Result<Self> {
        let labels: Vec<Option<usize>> = priors.iter().map(|p| p.map(|p| p.class_id)).collect();
        Self::from_classes(&labels, classes)
    }

    pub fn set(&mut self, i: usize, class: usize) -> Result<()> {
        if class >= self.classes {
            return Err(Error::Config(format!(
                "class {class} outside {} classes",
                self.classes
            )));
        }
        let row = &mut self.y[i * self.classes..(i + 1) * self.classes];
        row.fill(0.0);
        row[class] = 1.0;
        self.mask[i] = true;
        Ok(())
    }

    pub fn n(&self) -> usize {
        self.mask.len()
    }

    pub fn classes(&self) -> usize {
        self.classes
    }

    pub fn is_labeled(&self, i: usize) -> bool {
        self.mask[i]
    }

    pub fn labeled_count(&self) -> usize {
        self.mask.iter().filter(|&&m| m).count()
    }

    pub fn label(&self, i: usize) -> Option<usize> {
        self.mask[i].then(|| self.row(i).iter().position(|&v| v == 1.0).unwrap_or(0))
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.y[i * self.classes..(i + 1) * self.classes]
    }

    pub fn values(&self) -> &[f64] {
        &self.y
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ClassifierConfig {
    pub mu: f64,
    pub theta: f64,
    pub epsilon: f64,
    pub max_iters: usize,
    /// Largest domain count the dense closed-form solve accepts.
    pub closed_form_cap: usize,
}

impl Default for ClassifierConfig {
    fn default() -> Self {
        Self {
            mu: 0.3,
            theta: 0.2,
            epsilon: 1e-6,
            max_iters: 1000,
            closed_form_cap: 2000,
        }
    }
}

impl ClassifierConfig {
    pub fn with_mu(mu: f64) -> Self {
        Self {
            mu,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.mu > 0.0 && self.mu.is_finite()) {
            return Err(Error::Config(format!("mu must be positive, got {}", self.mu)));
        }
        if !(self.theta >= 0.0) {
            return Err(Error::Config(format!("theta must be non-negative, got {}", self.theta)));
        }
        if !(self.epsilon > 0.0) {
            return Err(Error::Config(format!("epsilon must be positive, got {}", self.epsilon)));
        }
        if self.max_iters == 0 {
            return Err(Error::Config("max_iters must be at least 1".into()));
        }
        Ok(())
    }

    pub fn alpha(&self) -> f64 {
        1.0 / (1.0 + self.mu)
    }

    pub fn beta(&self) -> f64 {
        self.mu / (1.0 + self.mu)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScoreMatrix {
    pub classes: usize,
    /// Row-major `n x classes`.
    pub f: Vec<f64>,
    pub iterations_used: usize,
    pub converged: bool,
}

impl ScoreMatrix {
    pub fn n(&self) -> usize {
        self.f.len() / self.classes
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.f[i * self.classes..(i + 1) * self.classes]
    }

    pub fn max_abs_diff(&self, other: &ScoreMatrix) -> f64 {
        self.f
            .iter()
            .zip(&other.f)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }

    /// Rows with no score mass at all: the domain was never reached.
    pub fn unreached(&self) -> Vec<bool> {
        (0..self.n()).map(|i| self.row(i).iter().all(|&v| v == 0.0)).collect()
    }
}

/// `D^-1/2 M' D^-1/2`; zero-degree rows stay zero.
pub fn normalize(m: &SparseMatrix) -> SparseMatrix {
    let inv_sqrt: Vec<f64> = m
        .row_sums()
        .into_iter()
        .map(|d| if d > 0.0 { 1.0 / d.sqrt() } else { 0.0 })
        .collect();
    m.map_entries(|i, j, v| v * inv_sqrt[i] * inv_sqrt[j])
}

fn check_shapes(s: &SparseMatrix, y: &LabelMatrix) -> Result<()> {
    if s.rows() != s.cols() || s.rows() != y.n() {
        return Err(Error::DimensionMismatch(format!(
            "similarity {}x{} against {} label rows",
            s.rows(),
            s.cols(),
            y.n()
        )));
    }
    Ok(())
}

/// Fixed-point iteration from `F(0) = Y` until the max-abs change drops
/// below `epsilon` or `max_iters` steps have run.
pub fn propagate(s: &SparseMatrix, y: &LabelMatrix, config: &ClassifierConfig) -> Result<ScoreMatrix> {
    config.validate()?;
    check_shapes(s, y)?;
    let (alpha, beta) = (config.alpha(), config.beta());
    let width = y.classes();
    let mut f = y.values().to_vec();
    let mut iterations = 0;
    let mut converged = false;
    while iterations < config.max_iters {
        let sf = s.mul_dense(&f, width)?;
        let next: Vec<f64> = sf
            .iter()
            .zip(y.values())
            .map(|(a, b)| alpha * a + beta * b)
            .collect();
        let change = next
            .iter()
            .zip(&f)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        f = next;
        iterations += 1;
        if change < config.epsilon {
            converged = true;
            break;
        }
    }
    if !converged {
        log::warn!("propagation stopped after {iterations} iterations without converging");
    }
    Ok(ScoreMatrix {
        classes: width,
        f,
        iterations_used: iterations,
        converged,
    })
}

/// Dense solve of `(I − αS)F = βY`.
pub fn closed_form(s: &SparseMatrix, y: &LabelMatrix, config: &ClassifierConfig) -> Result<ScoreMatrix> {
    config.validate()?;
    check_shapes(s, y)?;
    let n = y.n();
    if n > config.closed_form_cap {
        return Err(Error::TooLarge {
            n,
            cap: config.closed_form_cap,
        });
    }
    let width = y.classes();
    let alpha = config.alpha();
    let mut a = DMatrix::<f64>::identity(n, n);
    for (i, j, v) in s.iter() {
        a[(i, j)] -= alpha * v;
    }
    let rhs = DMatrix::from_row_slice(n, width, y.values());
    let solved = a
        .lu()
        .solve(&rhs)
        .ok_or_else(|| Error::DimensionMismatch("I - alpha*S is singular".into()))?;
    let beta = config.beta();
    let mut f = Vec::with_capacity(n * width);
    for i in 0..n {
        for k in 0..width {
            f.push((beta * solved[(i, k)]).max(0.0));
        }
    }
    Ok(ScoreMatrix {
        classes: width,
        f,
        iterations_used: 0,
        converged: true,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Verdict {
    pub class_id: usize,
    /// Gap between the two highest class scores.
    pub confidence: f64,
    pub solid: bool,
}

impl Verdict {
    pub fn is_malicious(&self) -> bool {
        self.class_id >= 1
    }
}

/// Argmax per row; ties go to the lowest class index, so benign wins any
/// tie it is part of.
pub fn verdicts(f: &ScoreMatrix, theta: f64) -> Vec<Verdict> {
    (0..f.n())
        .map(|i| {
            let row = f.row(i);
            let mut best = 0;
            for k in 1..row.len() {
                if row[k] > row[best] {
                    best = k;
                }
            }
            let runner_up = row
                .iter()
                .enumerate()
                .filter(|&(k, _)| k != best)
                .map(|(_, &v)| v)
                .fold(f64::NEG_INFINITY, f64::max);
            let confidence = row[best] - runner_up;
            Verdict {
                class_id: best,
                confidence,
                solid: confidence >= theta,
            }
        })
        .collect()
}

/// Collapses every malicious class onto column 1.
pub fn binary_labels(y: &LabelMatrix) -> LabelMatrix {
    let labels: Vec<Option<usize>> = (0..y.n()).map(|i| y.label(i).map(|c| c.min(1))).collect();
    LabelMatrix::from_classes(&labels, 2).expect("two classes")
}

#[derive(Debug, Clone)]
pub struct TwoStage {
    /// Benign/malicious scores over every domain.
    pub binary: ScoreMatrix,
    pub verdicts: Vec<Verdict>,
    /// Domains handed to the family stage, in input order.
    pub malicious: Vec<usize>,
}

/// Binary propagation first; family propagation then runs only on the
/// subgraph induced by domains predicted malicious. Final class ids keep
/// the multi-class numbering. Confidence and solidity come from the binary
/// stage.
pub fn two_stage(m: &SparseMatrix, y: &LabelMatrix, config: &ClassifierConfig) -> Result<TwoStage> {
    if y.classes() < 3 {
        return Err(Error::Config("two-stage mode needs at least one family beyond benign/malicious".into()));
    }
    let binary_y = binary_labels(y);
    let binary = propagate(&normalize(m), &binary_y, config)?;
    let mut out = verdicts(&binary, config.theta);
    let malicious: Vec<usize> = (0..out.len()).filter(|&i| out[i].is_malicious()).collect();
    if !malicious.is_empty() {
        let sub = m.submatrix(&malicious, &malicious);
        let families = y.classes() - 1;
        let labels: Vec<Option<usize>> = malicious
            .iter()
            .map(|&i| y.label(i).filter(|&c| c >= 1).map(|c| c - 1))
            .collect();
        let family_y = LabelMatrix::from_classes(&labels, families.max(2))?;
        let family = propagate(&normalize(&sub), &family_y, config)?;
        for (row, fv) in malicious.iter().zip(verdicts(&family, config.theta)) {
            out[*row].class_id = fv.class_id + 1;
        }
    }
    Ok(TwoStage {
        binary,
        verdicts: out,
        malicious,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_symmetric(rng: &mut ChaCha8Rng, n: usize, density: f64) -> SparseMatrix {
        let mut t = Vec::new();
        for i in 0..n {
            for j in i..n {
                if rng.random_bool(density) {
                    let v: f64 = rng.random_range(0.05..1.0);
                    t.push((i, j, v));
                    if i != j {
                        t.push((j, i, v));
                    }
                }
            }
        }
        SparseMatrix::from_triplets(n, n, t).unwrap()
    }

    fn random_labels(rng: &mut ChaCha8Rng, n: usize, classes: usize, frac: f64) -> LabelMatrix {
        let labels: Vec<Option<usize>> = (0..n)
            .map(|_| rng.random_bool(frac).then(|| rng.random_range(0..classes)))
            .collect();
        LabelMatrix::from_classes(&labels, classes).unwrap()
    }

    fn dense(s: &SparseMatrix) -> Vec<Vec<f64>> {
        s.to_dense()
    }

    #[test]
    fn normalize_swap_pair() {
        let m = SparseMatrix::from_dense(&[vec![0.0, 1.0], vec![1.0, 0.0]]).unwrap();
        assert_eq!(normalize(&m).to_dense(), m.to_dense());
    }

    #[test]
    fn normalize_isolated_node() {
        let m = SparseMatrix::from_dense(&[
            vec![0.0, 0.5, 0.0],
            vec![0.5, 0.0, 0.0],
            vec![0.0, 0.0, 0.0],
        ])
        .unwrap();
        let s = normalize(&m).to_dense();
        assert_eq!(s[2], vec![0.0; 3]);
        assert_eq!(s[0][2], 0.0);
    }

    #[test]
    fn normalize_matches_dense_oracle() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let m = random_symmetric(&mut rng, 8, 0.4);
        let d = dense(&m);
        let deg: Vec<f64> = d.iter().map(|r| r.iter().sum()).collect();
        let s = normalize(&m).to_dense();
        for i in 0..8 {
            for j in 0..8 {
                let want = if deg[i] > 0.0 && deg[j] > 0.0 {
                    d[i][j] / (deg[i] * deg[j]).sqrt()
                } else {
                    0.0
                };
                assert!((s[i][j] - want).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn no_edges_gives_beta_y() {
        let y = LabelMatrix::from_classes(&[Some(0), None, Some(1)], 2).unwrap();
        let cfg = ClassifierConfig::default();
        let f = propagate(&SparseMatrix::zeros(3, 3), &y, &cfg).unwrap();
        assert!(f.converged);
        for (a, b) in f.f.iter().zip(y.values()) {
            assert!((a - cfg.beta() * b).abs() < 1e-15);
        }
        let cf = closed_form(&SparseMatrix::zeros(3, 3), &y, &cfg).unwrap();
        assert!(cf.max_abs_diff(&f) < 1e-15);
    }

    #[test]
    fn two_node_inverse_by_hand() {
        let s = SparseMatrix::from_dense(&[vec![0.0, 1.0], vec![1.0, 0.0]]).unwrap();
        let y = LabelMatrix::from_classes(&[Some(0), None], 2).unwrap();
        let cfg = ClassifierConfig::with_mu(0.3);
        let (a, b) = (cfg.alpha(), cfg.beta());
        // (I − αS)^-1 = 1/(1−α²) [[1, α], [α, 1]]
        let det = 1.0 - a * a;
        let want = [b / det, 0.0, b * a / det, 0.0];
        let f = propagate(&s, &y, &cfg).unwrap();
        for (x, w) in f.f.iter().zip(want) {
            assert!((x - w).abs() < 1e-5);
        }
        assert!(f.row(1)[0] > 0.0);
        let cf = closed_form(&s, &y, &cfg).unwrap();
        for (x, w) in cf.f.iter().zip(want) {
            assert!((x - w).abs() < 1e-14);
        }
    }

    #[test]
    fn zero_labels_stay_zero() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let s = normalize(&random_symmetric(&mut rng, 10, 0.3));
        let y = LabelMatrix::new(10, 2).unwrap();
        let f = propagate(&s, &y, &ClassifierConfig::default()).unwrap();
        assert!(f.f.iter().all(|&v| v == 0.0));
        assert!(f.unreached().iter().all(|&u| u));
    }

    #[test]
    fn diagonal_only_scalar_solve() {
        let diag = [0.2, 0.9, 0.5];
        let s = SparseMatrix::from_triplets(3, 3, diag.iter().enumerate().map(|(i, &v)| (i, i, v))).unwrap();
        let y = LabelMatrix::from_classes(&[Some(0), Some(1), Some(1)], 2).unwrap();
        let cfg = ClassifierConfig::default();
        let f = closed_form(&s, &y, &cfg).unwrap();
        for i in 0..3 {
            let scale = cfg.beta() / (1.0 - cfg.alpha() * diag[i]);
            for k in 0..2 {
                assert!((f.row(i)[k] - scale * y.row(i)[k]).abs() < 1e-14);
            }
        }
    }

    #[test]
    fn iterative_matches_closed_form_n50() {
        let mut rng = ChaCha8Rng::seed_from_u64(50);
        let s = normalize(&random_symmetric(&mut rng, 50, 0.1));
        let y = random_labels(&mut rng, 50, 3, 0.4);
        let cfg = ClassifierConfig {
            epsilon: 1e-12,
            ..ClassifierConfig::default()
        };
        let it = propagate(&s, &y, &cfg).unwrap();
        let cf = closed_form(&s, &y, &cfg).unwrap();
        assert!(it.converged);
        assert!(it.max_abs_diff(&cf) <= 1e-8);
    }

    #[test]
    fn contraction_toward_fixed_point() {
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        let s = normalize(&random_symmetric(&mut rng, 30, 0.2));
        let y = random_labels(&mut rng, 30, 2, 0.5);
        let cfg = ClassifierConfig::default();
        let star = closed_form(&s, &y, &cfg).unwrap();
        let mut prev = f64::INFINITY;
        for t in 1..15 {
            let step = propagate(
                &s,
                &y,
                &ClassifierConfig {
                    max_iters: t,
                    epsilon: 1e-300,
                    ..cfg.clone()
                },
            )
            .unwrap();
            let err = step.max_abs_diff(&star);
            assert!(err <= prev * cfg.alpha() * (1.0 + 1e-9) + 1e-15 || prev.is_infinite());
            prev = err;
        }
    }

    #[test]
    fn closed_form_refuses_large() {
        let cfg = ClassifierConfig {
            closed_form_cap: 3,
            ..ClassifierConfig::default()
        };
        let y = LabelMatrix::new(4, 2).unwrap();
        assert!(matches!(
            closed_form(&SparseMatrix::zeros(4, 4), &y, &cfg),
            Err(Error::TooLarge { n: 4, cap: 3 })
        ));
    }

    #[test]
    fn config_rejects_nonpositive_mu() {
        assert!(ClassifierConfig::with_mu(0.0).validate().is_err());
        assert!(ClassifierConfig::with_mu(-1.0).validate().is_err());
        let cfg = ClassifierConfig::with_mu(0.3);
        assert!((cfg.alpha() + cfg.beta() - 1.0).abs() < 1e-15);
    }

    fn scores(rows: &[&[f64]]) -> ScoreMatrix {
        ScoreMatrix {
            classes: rows[0].len(),
            f: rows.iter().flat_map(|r| r.iter().copied()).collect(),
            iterations_used: 0,
            converged: true,
        }
    }

    #[test]
    fn verdict_rules() {
        let v = verdicts(&scores(&[&[0.6, 0.2], &[0.3, 0.3], &[0.1, 0.25]]), 0.2);
        assert_eq!(v[0].class_id, 0);
        assert!((v[0].confidence - 0.4).abs() < 1e-15);
        assert!(v[0].solid);
        assert_eq!(v[1].class_id, 0);
        assert_eq!(v[1].confidence, 0.0);
        assert_eq!(v[2].class_id, 1);
        assert!(!v[2].solid);
        let m = verdicts(&scores(&[&[0.1, 0.5, 0.9], &[0.4, 0.4, 0.4], &[0.0, 0.7, 0.7]]), 0.2);
        assert_eq!(m[0].class_id, 2);
        assert_eq!(m[1].class_id, 0);
        assert_eq!(m[2].class_id, 1);
    }

    /// A node carrying a wrong malicious prior but tied far more strongly to
    /// benign-labeled neighbours ends up benign.
    #[test]
    fn strong_benign_neighbourhood_corrects_prior() {
        // node 0: mislabeled malicious; nodes 1..=4 benign; node 5 malicious,
        // weakly linked to 0
        let mut t = Vec::new();
        for b in 1..=4 {
            t.push((0, b, 1.0));
            t.push((b, 0, 1.0));
            for c in 1..=4 {
                if b != c {
                    t.push((b, c, 1.0));
                }
            }
        }
        t.push((0, 5, 0.1));
        t.push((5, 0, 0.1));
        let m = SparseMatrix::from_triplets(6, 6, t).unwrap();
        let labels = [Some(1), Some(0), Some(0), Some(0), Some(0), Some(1)];
        let y = LabelMatrix::from_classes(&labels, 2).unwrap();
        let cfg = ClassifierConfig::with_mu(0.3);
        let f = closed_form(&normalize(&m), &y, &cfg).unwrap();
        assert_eq!(verdicts(&f, cfg.theta)[0].class_id, 0);
        let it = propagate(&normalize(&m), &y, &cfg).unwrap();
        assert_eq!(verdicts(&it, cfg.theta)[0].class_id, 0);
    }

    #[test]
    fn two_stage_assigns_families_within_malicious() {
        // two malicious cliques (families 1, 2) and one benign clique
        let groups = [[0, 1, 2], [3, 4, 5], [6, 7, 8]];
        let mut t = Vec::new();
        for g in &groups {
            for &a in g {
                for &b in g {
                    if a != b {
                        t.push((a, b, 1.0));
                    }
                }
            }
        }
        let m = SparseMatrix::from_triplets(9, 9, t).unwrap();
        let labels = [Some(0), None, None, Some(1), None, None, Some(2), None, None];
        let y = LabelMatrix::from_classes(&labels, 3).unwrap();
        let out = two_stage(&m, &y, &ClassifierConfig::default()).unwrap();
        let classes: Vec<usize> = out.verdicts.iter().map(|v| v.class_id).collect();
        assert_eq!(classes, vec![0, 0, 0, 1, 1, 1, 2, 2, 2]);
        assert_eq!(out.malicious, vec![3, 4, 5, 6, 7, 8]);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]

        #[test]
        fn more_labels_never_lower_scores(seed in any::<u64>()) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let n = 15;
            let s = normalize(&random_symmetric(&mut rng, n, 0.25));
            let y = random_labels(&mut rng, n, 2, 0.3);
            let mut bigger = y.clone();
            for i in 0..n {
                if !bigger.is_labeled(i) && rng.random_bool(0.5) {
                    bigger.set(i, rng.random_range(0..2)).unwrap();
                }
            }
            let cfg = ClassifierConfig::default();
            let f = closed_form(&s, &y, &cfg).unwrap();
            let g = closed_form(&s, &bigger, &cfg).unwrap();
            for (a, b) in f.f.iter().zip(&g.f) {
                prop_assert!(*b >= *a - 1e-12);
            }
        }

        #[test]
        fn classification_is_permutation_equivariant(seed in any::<u64>()) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let n = 12;
            let m = random_symmetric(&mut rng, n, 0.3);
            let labels: Vec<Option<usize>> = (0..n).map(|_| rng.random_bool(0.4).then(|| rng.random_range(0..2))).collect();
            let mut perm: Vec<usize> = (0..n).collect();
            for i in (1..n).rev() {
                perm.swap(i, rng.random_range(0..=i));
            }
            let cfg = ClassifierConfig::default();
            let f = closed_form(&normalize(&m), &LabelMatrix::from_classes(&labels, 2).unwrap(), &cfg).unwrap();
            let pm = m.submatrix(&perm, &perm);
            let plabels: Vec<Option<usize>> = perm.iter().map(|&i| labels[i]).collect();
            let g = closed_form(&normalize(&pm), &LabelMatrix::from_classes(&plabels, 2).unwrap(), &cfg).unwrap();
            for (new, &old) in perm.iter().enumerate() {
                for k in 0..2 {
                    prop_assert!((g.row(new)[k] - f.row(old)[k]).abs() < 1e-12);
                }
            }
        }

        #[test]
        fn isolated_rows_get_beta_y(seed in any::<u64>()) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let n = 10;
            let m = random_symmetric(&mut rng, n, 0.3);
            let isolated = rng.random_range(0..n);
            let m = m.map_entries(|i, j, v| if i == isolated || j == isolated { 0.0 } else { v });
            let y = random_labels(&mut rng, n, 2, 0.5);
            let cfg = ClassifierConfig::default();
            let f = propagate(&normalize(&m), &y, &cfg).unwrap();
            for k in 0..2 {
                prop_assert!((f.row(isolated)[k] - cfg.beta() * y.row(isolated)[k]).abs() < 1e-15);
            }
        }
    }
}
