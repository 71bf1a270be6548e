//! Compressed sparse row storage for symmetric matrices.
//!
//! Both triangles are stored so products need no transposition. Column
//! indices are sorted within each row.

use crate::error::{Error, Result};
use std::io::{BufRead, Write};
use std::sync::Arc;

/// Structure shared between matrices assembled on the same space.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Pattern {
    n: usize,
    row_ptr: Vec<usize>,
    cols: Vec<u32>,
}

impl Pattern {
    /// Pattern in which every DOF of a group couples with every other DOF of
    /// the same group.
    pub fn from_groups<'a>(n: usize, groups: impl IntoIterator<Item = &'a [usize]>) -> Self {
        let mut rows: Vec<Vec<u32>> = vec![Vec::new(); n];
        for group in groups {
            for &i in group {
                rows[i].extend(group.iter().map(|&j| j as u32));
            }
        }
        let mut row_ptr = Vec::with_capacity(n + 1);
        row_ptr.push(0);
        let mut cols = Vec::new();
        for (i, mut row) in rows.into_iter().enumerate() {
            row.push(i as u32);
            row.sort_unstable();
            row.dedup();
            cols.extend_from_slice(&row);
            row_ptr.push(cols.len());
        }
        Self { n, row_ptr, cols }
    }

    /// Diagonal pattern.
    pub fn diagonal(n: usize) -> Self {
        Self {
            n,
            row_ptr: (0..=n).collect(),
            cols: (0..n as u32).collect(),
        }
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn nnz(&self) -> usize {
        self.cols.len()
    }

    pub fn row(&self, i: usize) -> &[u32] {
        &self.cols[self.row_ptr[i]..self.row_ptr[i + 1]]
    }

    pub fn row_range(&self, i: usize) -> std::ops::Range<usize> {
        self.row_ptr[i]..self.row_ptr[i + 1]
    }

    /// Storage position of entry `(i, j)`, if structurally present.
    pub fn position(&self, i: usize, j: usize) -> Option<usize> {
        let r = self.row_range(i);
        self.cols[r.clone()]
            .binary_search(&(j as u32))
            .ok()
            .map(|k| r.start + k)
    }
}

/// Symmetric linear map `y = A x`.
pub trait LinearOperator: Sync {
    fn dim(&self) -> usize;
    /// Overwrites `y` with `A x`.
    fn apply(&self, x: &[f64], y: &mut [f64]);

    /// `xᵀ A x`.
    fn quadratic(&self, x: &[f64]) -> f64 {
        let mut y = vec![0.0; x.len()];
        self.apply(x, &mut y);
        x.iter().zip(&y).map(|(a, b)| a * b).sum()
    }
}

impl LinearOperator for SparseSymmetric {
    fn dim(&self) -> usize {
        self.pattern.n
    }

    fn apply(&self, x: &[f64], y: &mut [f64]) {
        self.mul_vec_into(x, y);
    }
}

/// Symmetric sparse matrix.
#[derive(Clone, Debug)]
pub struct SparseSymmetric {
    pattern: Arc<Pattern>,
    values: Vec<f64>,
}

impl SparseSymmetric {
    pub fn zeros(pattern: Arc<Pattern>) -> Self {
        let nnz = pattern.nnz();
        Self {
            pattern,
            values: vec![0.0; nnz],
        }
    }

    /// Diagonal matrix.
    pub fn from_diagonal(d: &[f64]) -> Self {
        Self {
            pattern: Arc::new(Pattern::diagonal(d.len())),
            values: d.to_vec(),
        }
    }

    /// Builds a matrix from `(i, j, v)` triplets. Both `(i, j)` and `(j, i)`
    /// receive `v` when `symmetrize` is set; duplicates are summed.
    pub fn from_triplets(n: usize, triplets: &[(usize, usize, f64)], symmetrize: bool) -> Self {
        let pairs: Vec<[usize; 2]> = triplets.iter().map(|&(i, j, _)| [i, j]).collect();
        let pattern = Arc::new(Pattern::from_groups(n, pairs.iter().map(|p| &p[..])));
        let mut m = Self::zeros(pattern);
        for &(i, j, v) in triplets {
            if symmetrize && i != j {
                m.add(i, j, v);
                m.add(j, i, v);
            } else {
                m.add(i, j, v);
            }
        }
        m
    }

    pub fn dim(&self) -> usize {
        self.pattern.n
    }

    /// Copy without the off-diagonal entries that are exactly zero.
    pub fn pruned(&self) -> SparseSymmetric {
        let n = self.dim();
        let mut row_ptr = Vec::with_capacity(n + 1);
        row_ptr.push(0);
        let mut cols = Vec::new();
        let mut values = Vec::new();
        for i in 0..n {
            for k in self.pattern.row_range(i) {
                let j = self.pattern.cols[k] as usize;
                if j == i || self.values[k] != 0.0 {
                    cols.push(j as u32);
                    values.push(self.values[k]);
                }
            }
            row_ptr.push(cols.len());
        }
        SparseSymmetric {
            pattern: Arc::new(Pattern { n, row_ptr, cols }),
            values,
        }
    }

    pub fn pattern(&self) -> &Arc<Pattern> {
        &self.pattern
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    /// Adds `v` to entry `(i, j)`; the entry must be in the pattern.
    #[inline]
    pub fn add(&mut self, i: usize, j: usize, v: f64) {
        let k = self
            .pattern
            .position(i, j)
            .unwrap_or_else(|| panic!("entry ({i}, {j}) is not in the sparsity pattern"));
        self.values[k] += v;
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.pattern.position(i, j).map_or(0.0, |k| self.values[k])
    }

    pub fn diagonal(&self) -> Vec<f64> {
        (0..self.dim()).map(|i| self.get(i, i)).collect()
    }

    /// Iterates `(column, value)` over row `i`.
    pub fn row(&self, i: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let r = self.pattern.row_range(i);
        self.pattern.cols[r.clone()]
            .iter()
            .zip(&self.values[r])
            .map(|(&j, &v)| (j as usize, v))
    }

    /// `y = self · x`.
    pub fn mul_vec_into(&self, x: &[f64], y: &mut [f64]) {
        let p = &*self.pattern;
        for (i, yi) in y.iter_mut().enumerate().take(p.n) {
            let mut s = 0.0;
            for k in p.row_ptr[i]..p.row_ptr[i + 1] {
                s += self.values[k] * x[p.cols[k] as usize];
            }
            *yi = s;
        }
    }

    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        let mut y = vec![0.0; self.dim()];
        self.mul_vec_into(x, &mut y);
        y
    }

    /// `xᵀ · self · x`.
    pub fn quadratic_form(&self, x: &[f64]) -> f64 {
        let y = self.mul_vec(x);
        y.iter().zip(x).map(|(a, b)| a * b).sum()
    }

    /// `self + alpha · other` on a shared pattern.
    pub fn add_scaled(&self, other: &SparseSymmetric, alpha: f64) -> Result<SparseSymmetric> {
        if self.dim() != other.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                found: other.dim(),
            });
        }
        if Arc::ptr_eq(&self.pattern, &other.pattern) || self.pattern == other.pattern {
            let values = self
                .values
                .iter()
                .zip(&other.values)
                .map(|(a, b)| a + alpha * b)
                .collect();
            return Ok(SparseSymmetric {
                pattern: self.pattern.clone(),
                values,
            });
        }
        let mut triplets = Vec::with_capacity(self.nnz() + other.nnz());
        for i in 0..self.dim() {
            triplets.extend(self.row(i).map(|(j, v)| (i, j, v)));
            triplets.extend(other.row(i).map(|(j, v)| (i, j, alpha * v)));
        }
        Ok(Self::from_triplets(self.dim(), &triplets, false))
    }

    pub fn scaled(&self, alpha: f64) -> SparseSymmetric {
        SparseSymmetric {
            pattern: self.pattern.clone(),
            values: self.values.iter().map(|v| alpha * v).collect(),
        }
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// `max |a_ij - a_ji|`.
    pub fn asymmetry(&self) -> f64 {
        let mut worst: f64 = 0.0;
        for i in 0..self.dim() {
            for (j, v) in self.row(i) {
                if j > i {
                    worst = worst.max((v - self.get(j, i)).abs());
                }
            }
        }
        worst
    }

    /// Principal submatrix on `keep` (in the given order).
    pub fn submatrix(&self, keep: &[usize]) -> SparseSymmetric {
        let mut new_index = vec![usize::MAX; self.dim()];
        for (k, &i) in keep.iter().enumerate() {
            new_index[i] = k;
        }
        let mut triplets = Vec::new();
        for (k, &i) in keep.iter().enumerate() {
            for (j, v) in self.row(i) {
                if new_index[j] != usize::MAX {
                    triplets.push((k, new_index[j], v));
                }
            }
        }
        Self::from_triplets(keep.len(), &triplets, false)
    }

    pub fn to_dense(&self) -> nalgebra::DMatrix<f64> {
        let n = self.dim();
        let mut d = nalgebra::DMatrix::zeros(n, n);
        for i in 0..n {
            for (j, v) in self.row(i) {
                d[(i, j)] = v;
            }
        }
        d
    }

    /// Writes the lower triangle in Matrix Market coordinate format.
    pub fn write_matrix_market(&self, mut w: impl Write) -> Result<()> {
        let n = self.dim();
        let lower: usize = (0..n).map(|i| self.row(i).filter(|&(j, _)| j <= i).count()).sum();
        writeln!(w, "%%MatrixMarket matrix coordinate real symmetric")?;
        writeln!(w, "{n} {n} {lower}")?;
        for i in 0..n {
            for (j, v) in self.row(i) {
                if j <= i {
                    writeln!(w, "{} {} {:.17e}", i + 1, j + 1, v)?;
                }
            }
        }
        Ok(())
    }

    /// Reads a real Matrix Market coordinate matrix, `symmetric` or `general`.
    pub fn read_matrix_market(r: impl BufRead) -> Result<Self> {
        let mut lines = r.lines();
        let header = lines
            .next()
            .ok_or_else(|| Error::Parse("empty Matrix Market file".into()))??;
        let lower = header.to_ascii_lowercase();
        if !lower.starts_with("%%matrixmarket matrix coordinate real") {
            return Err(Error::Parse(format!("unsupported header: {header}")));
        }
        let symmetric = lower.contains("symmetric");
        let mut size: Option<(usize, usize)> = None;
        let mut triplets = Vec::new();
        for line in lines {
            let line = line?;
            let t = line.trim();
            if t.is_empty() || t.starts_with('%') {
                continue;
            }
            let fields: Vec<&str> = t.split_whitespace().collect();
            let parse_usize = |s: &str| {
                s.parse::<usize>()
                    .map_err(|e| Error::Parse(format!("bad index '{s}': {e}")))
            };
            if size.is_none() {
                if fields.len() != 3 {
                    return Err(Error::Parse(format!("bad size line: {t}")));
                }
                let (rows, cols) = (parse_usize(fields[0])?, parse_usize(fields[1])?);
                if rows != cols {
                    return Err(Error::Parse("matrix is not square".into()));
                }
                size = Some((rows, parse_usize(fields[2])?));
                continue;
            }
            if fields.len() != 3 {
                return Err(Error::Parse(format!("bad entry line: {t}")));
            }
            let i = parse_usize(fields[0])?;
            let j = parse_usize(fields[1])?;
            let v: f64 = fields[2]
                .parse()
                .map_err(|e| Error::Parse(format!("bad value '{}': {e}", fields[2])))?;
            if i == 0 || j == 0 {
                return Err(Error::Parse("indices are 1-based".into()));
            }
            triplets.push((i - 1, j - 1, v));
        }
        let (n, count) = size.ok_or_else(|| Error::Parse("missing size line".into()))?;
        if triplets.len() != count {
            return Err(Error::Parse(format!(
                "expected {count} entries, found {}",
                triplets.len()
            )));
        }
        if triplets.iter().any(|&(i, j, _)| i >= n || j >= n) {
            return Err(Error::Parse("index out of range".into()));
        }
        Ok(Self::from_triplets(n, &triplets, symmetric))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn product_and_quadratic_form() {
        let m = SparseSymmetric::from_triplets(3, &[(0, 0, 2.0), (1, 0, 1.0), (2, 2, 3.0), (1, 1, 2.0)], true);
        assert_eq!(m.mul_vec(&[1.0, 1.0, 1.0]), vec![3.0, 3.0, 3.0]);
        assert_eq!(m.quadratic_form(&[1.0, 0.0, 1.0]), 5.0);
        assert_eq!(m.asymmetry(), 0.0);
    }

    #[test]
    fn matrix_market_round_trip() {
        let m = SparseSymmetric::from_triplets(
            3,
            &[(0, 0, 2.5), (2, 0, -1.0 / 3.0), (1, 1, 1e-300), (2, 2, 4.0)],
            true,
        );
        let mut buf = Vec::new();
        m.write_matrix_market(&mut buf).unwrap();
        let back = SparseSymmetric::read_matrix_market(&buf[..]).unwrap();
        assert_eq!(back.to_dense(), m.to_dense());
    }

    #[test]
    fn malformed_matrix_market_is_rejected() {
        let text = "%%MatrixMarket matrix coordinate real symmetric\n2 2 2\n1 1 1.0\n";
        assert!(SparseSymmetric::read_matrix_market(text.as_bytes()).is_err());
        assert!(SparseSymmetric::read_matrix_market("hello\n".as_bytes()).is_err());
    }

    #[test]
    fn pruning_drops_explicit_zeros() {
        let m = SparseSymmetric::from_triplets(3, &[(0, 0, 2.0), (0, 1, 0.0), (1, 1, 1.0), (1, 2, -1.0), (2, 2, 3.0)], true);
        let p = m.pruned();
        assert_eq!(p.nnz(), 5);
        assert_eq!(p.to_dense(), m.to_dense());
    }
}
