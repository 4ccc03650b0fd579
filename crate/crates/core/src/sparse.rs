//! Compressed sparse row matrices.
//!
//! Every relation, commuting and similarity matrix in the engine is a
//! [`SparseMatrix`]. Only nonzeros are stored; dimensions are explicit so
//! an empty relation between populated node sets is still representable.

use std::io::{BufRead, Write};

use rayon::prelude::*;

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct SparseMatrix {
    rows: usize,
    cols: usize,
    indptr: Vec<usize>,
    indices: Vec<usize>,
    values: Vec<f64>,
}

impl SparseMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            indptr: vec![0; rows + 1],
            indices: Vec::new(),
            values: Vec::new(),
        }
    }

    pub fn identity(n: usize) -> Self {
        Self {
            rows: n,
            cols: n,
            indptr: (0..=n).collect(),
            indices: (0..n).collect(),
            values: vec![1.0; n],
        }
    }

    /// Builds a matrix from `(row, col, value)` triplets. Duplicate
    /// coordinates are summed and exact zeros are dropped.
    pub fn from_triplets<I>(rows: usize, cols: usize, triplets: I) -> Result<Self>
    where
        I: IntoIterator<Item = (usize, usize, f64)>,
    {
        let mut per_row: Vec<Vec<(usize, f64)>> = vec![Vec::new(); rows];
        for (r, c, v) in triplets {
            if r >= rows || c >= cols {
                return Err(Error::DimensionMismatch(format!(
                    "entry ({r}, {c}) outside {rows}x{cols}"
                )));
            }
            if !v.is_finite() {
                return Err(Error::DimensionMismatch(format!(
                    "non-finite value at ({r}, {c})"
                )));
            }
            per_row[r].push((c, v));
        }
        Ok(Self::from_rows(rows, cols, per_row))
    }

    /// Builds a 0/1 indicator matrix; repeated coordinates collapse to 1.
    pub fn indicator<I>(rows: usize, cols: usize, pairs: I) -> Result<Self>
    where
        I: IntoIterator<Item = (usize, usize)>,
    {
        let mut per_row: Vec<Vec<(usize, f64)>> = vec![Vec::new(); rows];
        for (r, c) in pairs {
            if r >= rows || c >= cols {
                return Err(Error::DimensionMismatch(format!(
                    "entry ({r}, {c}) outside {rows}x{cols}"
                )));
            }
            per_row[r].push((c, 1.0));
        }
        for row in &mut per_row {
            row.sort_unstable_by_key(|&(c, _)| c);
            row.dedup_by_key(|&mut (c, _)| c);
        }
        Ok(Self::from_rows(rows, cols, per_row))
    }

    fn from_rows(rows: usize, cols: usize, mut per_row: Vec<Vec<(usize, f64)>>) -> Self {
        let mut indptr = Vec::with_capacity(rows + 1);
        let mut indices = Vec::new();
        let mut values = Vec::new();
        indptr.push(0);
        for row in &mut per_row {
            row.sort_by_key(|&(c, _)| c);
            let mut iter = row.iter().copied().peekable();
            while let Some((c, mut v)) = iter.next() {
                while let Some(&(c2, v2)) = iter.peek() {
                    if c2 != c {
                        break;
                    }
                    v += v2;
                    iter.next();
                }
                if v != 0.0 {
                    indices.push(c);
                    values.push(v);
                }
            }
            indptr.push(indices.len());
        }
        Self {
            rows,
            cols,
            indptr,
            indices,
            values,
        }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    /// Column indices and values of row `i`, sorted by column.
    pub fn row(&self, i: usize) -> (&[usize], &[f64]) {
        let (lo, hi) = (self.indptr[i], self.indptr[i + 1]);
        (&self.indices[lo..hi], &self.values[lo..hi])
    }

    pub fn row_nnz(&self, i: usize) -> usize {
        self.indptr[i + 1] - self.indptr[i]
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        let (cols, vals) = self.row(i);
        match cols.binary_search(&j) {
            Ok(k) => vals[k],
            Err(_) => 0.0,
        }
    }

    pub fn iter(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        (0..self.rows).flat_map(move |i| {
            let (cols, vals) = self.row(i);
            cols.iter().zip(vals).map(move |(&j, &v)| (i, j, v))
        })
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn transpose(&self) -> Self {
        let mut counts = vec![0usize; self.cols + 1];
        for &c in &self.indices {
            counts[c + 1] += 1;
        }
        for k in 0..self.cols {
            counts[k + 1] += counts[k];
        }
        let indptr = counts.clone();
        let mut next = counts;
        let mut indices = vec![0; self.nnz()];
        let mut values = vec![0.0; self.nnz()];
        for (i, j, v) in self.iter() {
            let slot = next[j];
            indices[slot] = i;
            values[slot] = v;
            next[j] += 1;
        }
        Self {
            rows: self.cols,
            cols: self.rows,
            indptr,
            indices,
            values,
        }
    }

    /// Sparse-sparse product, row by row with a dense accumulator
    /// (Gustavson). Rows are computed in parallel; each row's summation
    /// order is fixed, so results are bit-reproducible.
    pub fn matmul(&self, other: &SparseMatrix) -> Result<SparseMatrix> {
        if self.cols != other.rows {
            return Err(Error::DimensionMismatch(format!(
                "{}x{} * {}x{}",
                self.rows, self.cols, other.rows, other.cols
            )));
        }
        let width = other.cols;
        let rows: Vec<(Vec<usize>, Vec<f64>)> = (0..self.rows)
            .into_par_iter()
            .map_init(
                || (vec![0.0f64; width], vec![false; width]),
                |(acc, seen), i| {
                    let mut touched = Vec::new();
                    let (a_cols, a_vals) = self.row(i);
                    for (&k, &a) in a_cols.iter().zip(a_vals) {
                        let (b_cols, b_vals) = other.row(k);
                        for (&j, &b) in b_cols.iter().zip(b_vals) {
                            if !seen[j] {
                                seen[j] = true;
                                touched.push(j);
                            }
                            acc[j] += a * b;
                        }
                    }
                    touched.sort_unstable();
                    let mut vals = Vec::with_capacity(touched.len());
                    let mut cols = Vec::with_capacity(touched.len());
                    for &j in &touched {
                        let v = acc[j];
                        acc[j] = 0.0;
                        seen[j] = false;
                        if v != 0.0 {
                            cols.push(j);
                            vals.push(v);
                        }
                    }
                    (cols, vals)
                },
            )
            .collect();
        Ok(Self::assemble(self.rows, width, rows))
    }

    fn assemble(rows: usize, cols: usize, parts: Vec<(Vec<usize>, Vec<f64>)>) -> Self {
        let total = parts.iter().map(|(c, _)| c.len()).sum();
        let mut indptr = Vec::with_capacity(rows + 1);
        let mut indices = Vec::with_capacity(total);
        let mut values = Vec::with_capacity(total);
        indptr.push(0);
        for (c, v) in parts {
            indices.extend(c);
            values.extend(v);
            indptr.push(indices.len());
        }
        Self {
            rows,
            cols,
            indptr,
            indices,
            values,
        }
    }

    /// Multiplies by a dense row-major `cols x width` block.
    pub fn mul_dense(&self, dense: &[f64], width: usize) -> Result<Vec<f64>> {
        if dense.len() != self.cols * width {
            return Err(Error::DimensionMismatch(format!(
                "dense block has {} values, expected {}x{}",
                dense.len(),
                self.cols,
                width
            )));
        }
        let mut out = vec![0.0; self.rows * width];
        out.par_chunks_mut(width.max(1))
            .enumerate()
            .for_each(|(i, out_row)| {
                let (cols, vals) = self.row(i);
                for (&k, &a) in cols.iter().zip(vals) {
                    let src = &dense[k * width..(k + 1) * width];
                    for (o, &s) in out_row.iter_mut().zip(src) {
                        *o += a * s;
                    }
                }
            });
        Ok(out)
    }

    pub fn row_sums(&self) -> Vec<f64> {
        (0..self.rows).map(|i| self.row(i).1.iter().sum()).collect()
    }

    pub fn diagonal(&self) -> Vec<f64> {
        (0..self.rows.min(self.cols))
            .map(|i| self.get(i, i))
            .collect()
    }

    pub fn is_symmetric(&self) -> bool {
        self.rows == self.cols && *self == self.transpose()
    }

    /// Entry-wise sum.
    pub fn add(&self, other: &SparseMatrix) -> Result<SparseMatrix> {
        if self.rows != other.rows || self.cols != other.cols {
            return Err(Error::DimensionMismatch(format!(
                "{}x{} + {}x{}",
                self.rows, self.cols, other.rows, other.cols
            )));
        }
        Self::from_triplets(self.rows, self.cols, self.iter().chain(other.iter()))
    }

    /// Applies `f(row, col, value)` to every stored entry; zero results are
    /// dropped.
    pub fn map_entries(&self, mut f: impl FnMut(usize, usize, f64) -> f64) -> SparseMatrix {
        let mut indptr = Vec::with_capacity(self.rows + 1);
        let mut indices = Vec::with_capacity(self.nnz());
        let mut values = Vec::with_capacity(self.nnz());
        indptr.push(0);
        for i in 0..self.rows {
            let (cols, vals) = self.row(i);
            for (&j, &v) in cols.iter().zip(vals) {
                let w = f(i, j, v);
                if w != 0.0 {
                    indices.push(j);
                    values.push(w);
                }
            }
            indptr.push(indices.len());
        }
        Self {
            rows: self.rows,
            cols: self.cols,
            indptr,
            indices,
            values,
        }
    }

    /// Keeps rows `row_keep` and columns `col_keep` (old indices, listed in
    /// their new order).
    pub fn submatrix(&self, row_keep: &[usize], col_keep: &[usize]) -> SparseMatrix {
        let mut remap = vec![usize::MAX; self.cols];
        for (new, &old) in col_keep.iter().enumerate() {
            remap[old] = new;
        }
        let parts = row_keep
            .iter()
            .map(|&i| {
                let (cols, vals) = self.row(i);
                let mut entries: Vec<(usize, f64)> = cols
                    .iter()
                    .zip(vals)
                    .filter(|(&j, _)| remap[j] != usize::MAX)
                    .map(|(&j, &v)| (remap[j], v))
                    .collect();
                entries.sort_unstable_by_key(|&(c, _)| c);
                entries.into_iter().unzip()
            })
            .collect();
        Self::assemble(row_keep.len(), col_keep.len(), parts)
    }

    pub fn to_dense(&self) -> Vec<Vec<f64>> {
        let mut out = vec![vec![0.0; self.cols]; self.rows];
        for (i, j, v) in self.iter() {
            out[i][j] = v;
        }
        out
    }

    pub fn from_dense(dense: &[Vec<f64>]) -> Result<SparseMatrix> {
        let rows = dense.len();
        let cols = dense.first().map_or(0, Vec::len);
        Self::from_triplets(
            rows,
            cols,
            dense.iter().enumerate().flat_map(|(i, row)| {
                row.iter()
                    .enumerate()
                    .filter(|(_, &v)| v != 0.0)
                    .map(move |(j, &v)| (i, j, v))
            }),
        )
    }

    /// Writes `row col value` lines.
    pub fn write_coo<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        for (i, j, v) in self.iter() {
            writeln!(out, "{i} {j} {v}")?;
        }
        Ok(())
    }

    pub fn read_coo<R: BufRead>(input: R, rows: usize, cols: usize) -> Result<SparseMatrix> {
        let mut triplets = Vec::new();
        for (n, line) in input.lines().enumerate() {
            let line = line.map_err(|e| Error::malformed(n + 1, e.to_string()))?;
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let mut parts = line.split_whitespace();
            let mut field = |name: &str| {
                parts
                    .next()
                    .ok_or_else(|| Error::malformed(n + 1, format!("missing {name}")))
            };
            let r = field("row")?
                .parse::<usize>()
                .map_err(|e| Error::malformed(n + 1, e.to_string()))?;
            let c = field("col")?
                .parse::<usize>()
                .map_err(|e| Error::malformed(n + 1, e.to_string()))?;
            let v = field("value")?
                .parse::<f64>()
                .map_err(|e| Error::malformed(n + 1, e.to_string()))?;
            triplets.push((r, c, v));
        }
        Self::from_triplets(rows, cols, triplets)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random(rows: usize, cols: usize, density: f64, rng: &mut ChaCha8Rng) -> SparseMatrix {
        let mut t = Vec::new();
        for i in 0..rows {
            for j in 0..cols {
                if rng.random_bool(density) {
                    t.push((i, j, rng.random_range(1..5) as f64));
                }
            }
        }
        SparseMatrix::from_triplets(rows, cols, t).unwrap()
    }

    fn dense_mul(a: &[Vec<f64>], b: &[Vec<f64>], m: usize) -> Vec<Vec<f64>> {
        let n = a.len();
        let k = b.len();
        let mut out = vec![vec![0.0; m]; n];
        for i in 0..n {
            for p in 0..k {
                for j in 0..m {
                    out[i][j] += a[i][p] * b[p][j];
                }
            }
        }
        out
    }

    #[test]
    fn duplicates_sum_and_zeros_drop() {
        let m = SparseMatrix::from_triplets(2, 2, [(0, 1, 1.0), (0, 1, 2.0), (1, 0, 0.0)]).unwrap();
        assert_eq!(m.nnz(), 1);
        assert_eq!(m.get(0, 1), 3.0);
    }

    #[test]
    fn indicator_collapses_repeats() {
        let m = SparseMatrix::indicator(2, 3, [(0, 2), (0, 2), (1, 0)]).unwrap();
        assert_eq!(m.nnz(), 2);
        assert_eq!(m.get(0, 2), 1.0);
    }

    #[test]
    fn out_of_bounds_rejected() {
        assert!(SparseMatrix::indicator(2, 2, [(2, 0)]).is_err());
    }

    #[test]
    fn matmul_matches_dense() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..10 {
            let a = random(13, 9, 0.2, &mut rng);
            let b = random(9, 11, 0.3, &mut rng);
            let got = a.matmul(&b).unwrap().to_dense();
            assert_eq!(got, dense_mul(&a.to_dense(), &b.to_dense(), 11));
        }
    }

    #[test]
    fn matmul_rejects_bad_shapes() {
        let a = SparseMatrix::zeros(2, 3);
        assert!(matches!(a.matmul(&a), Err(Error::DimensionMismatch(_))));
    }

    #[test]
    fn transpose_round_trips() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let a = random(7, 5, 0.3, &mut rng);
        assert_eq!(a.transpose().transpose(), a);
        assert_eq!(a.transpose().get(2, 4), a.get(4, 2));
    }

    #[test]
    fn submatrix_reindexes() {
        let a = SparseMatrix::from_dense(&[
            vec![1.0, 2.0, 3.0],
            vec![4.0, 5.0, 6.0],
            vec![7.0, 8.0, 9.0],
        ])
        .unwrap();
        let s = a.submatrix(&[2, 0], &[0, 2]);
        assert_eq!(s.to_dense(), vec![vec![7.0, 9.0], vec![1.0, 3.0]]);
    }

    #[test]
    fn coo_text_round_trip() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let a = random(6, 4, 0.4, &mut rng);
        let mut buf = Vec::new();
        a.write_coo(&mut buf).unwrap();
        let back = SparseMatrix::read_coo(&buf[..], 6, 4).unwrap();
        assert_eq!(back, a);
    }

    #[test]
    fn mul_dense_matches_dense() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let a = random(6, 4, 0.5, &mut rng);
        let x: Vec<f64> = (0..8).map(|v| v as f64 * 0.5).collect();
        let got = a.mul_dense(&x, 2).unwrap();
        let d = a.to_dense();
        for i in 0..6 {
            for c in 0..2 {
                let want: f64 = (0..4).map(|k| d[i][k] * x[k * 2 + c]).sum();
                assert!((got[i * 2 + c] - want).abs() < 1e-12);
            }
        }
    }
}
