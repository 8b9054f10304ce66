use num_complex::Complex64;

use super::dense::ComplexMatrix;
use super::vector::ComplexVector;
use crate::error::{Error, Result};

const ZERO: Complex64 = Complex64::new(0.0, 0.0);

/// Compressed sparse row matrix. Ladder-operator polynomials of low degree
/// have O(1) entries per row, so they live here rather than in dense storage.
#[derive(Clone, Debug, PartialEq)]
pub struct SparseMatrix {
    rows: usize,
    cols: usize,
    indptr: Vec<usize>,
    indices: Vec<usize>,
    values: Vec<Complex64>,
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
        Self::from_diag(&vec![Complex64::new(1.0, 0.0); n])
    }

    pub fn from_diag(diag: &[Complex64]) -> Self {
        let n = diag.len();
        let mut t = Vec::with_capacity(n);
        for (i, &d) in diag.iter().enumerate() {
            t.push((i, i, d));
        }
        Self::from_triplets(n, n, t)
    }

    /// Builds from `(row, col, value)` triplets; duplicates are summed and
    /// exact zeros dropped.
    pub fn from_triplets(
        rows: usize,
        cols: usize,
        mut triplets: Vec<(usize, usize, Complex64)>,
    ) -> Self {
        triplets.sort_by_key(|&(i, j, _)| (i, j));
        let mut indptr = vec![0; rows + 1];
        let mut indices = Vec::with_capacity(triplets.len());
        let mut values: Vec<Complex64> = Vec::with_capacity(triplets.len());
        let mut last: Option<(usize, usize)> = None;
        let mut row_counts = vec![0usize; rows];
        for (i, j, v) in triplets {
            assert!(i < rows && j < cols, "triplet ({i},{j}) out of range");
            if last == Some((i, j)) {
                *values.last_mut().unwrap() += v;
            } else {
                indices.push(j);
                values.push(v);
                row_counts[i] += 1;
                last = Some((i, j));
            }
        }
        for i in 0..rows {
            indptr[i + 1] = indptr[i] + row_counts[i];
        }
        let mut m = Self {
            rows,
            cols,
            indptr,
            indices,
            values,
        };
        m.prune();
        m
    }

    pub fn from_dense(a: &ComplexMatrix) -> Self {
        let mut t = Vec::new();
        for i in 0..a.rows() {
            for (j, &v) in a.row(i).iter().enumerate() {
                if v != ZERO {
                    t.push((i, j, v));
                }
            }
        }
        Self::from_triplets(a.rows(), a.cols(), t)
    }

    fn prune(&mut self) {
        let mut indptr = vec![0; self.rows + 1];
        let mut indices = Vec::with_capacity(self.indices.len());
        let mut values = Vec::with_capacity(self.values.len());
        for i in 0..self.rows {
            for k in self.indptr[i]..self.indptr[i + 1] {
                if self.values[k] != ZERO {
                    indices.push(self.indices[k]);
                    values.push(self.values[k]);
                }
            }
            indptr[i + 1] = indices.len();
        }
        self.indptr = indptr;
        self.indices = indices;
        self.values = values;
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

    /// Iterator over `(col, value)` of row `i`.
    pub fn row(&self, i: usize) -> impl Iterator<Item = (usize, Complex64)> + '_ {
        let r = self.indptr[i]..self.indptr[i + 1];
        self.indices[r.clone()]
            .iter()
            .copied()
            .zip(self.values[r].iter().copied())
    }

    pub fn get(&self, i: usize, j: usize) -> Complex64 {
        self.row(i)
            .find(|&(c, _)| c == j)
            .map(|(_, v)| v)
            .unwrap_or(ZERO)
    }

    pub fn triplets(&self) -> impl Iterator<Item = (usize, usize, Complex64)> + '_ {
        (0..self.rows).flat_map(move |i| self.row(i).map(move |(j, v)| (i, j, v)))
    }

    pub fn to_dense(&self) -> ComplexMatrix {
        let mut m = ComplexMatrix::zeros(self.rows, self.cols);
        for (i, j, v) in self.triplets() {
            m[(i, j)] = v;
        }
        m
    }

    pub fn adjoint(&self) -> Self {
        let t = self.triplets().map(|(i, j, v)| (j, i, v.conj())).collect();
        Self::from_triplets(self.cols, self.rows, t)
    }

    pub fn conj(&self) -> Self {
        let mut out = self.clone();
        for v in &mut out.values {
            *v = v.conj();
        }
        out
    }

    pub fn scale(&self, s: Complex64) -> Self {
        let mut out = self.clone();
        for v in &mut out.values {
            *v *= s;
        }
        out.prune();
        out
    }

    /// `self + s * other`
    pub fn add_scaled(&self, s: Complex64, other: &SparseMatrix) -> Result<Self> {
        if (self.rows, self.cols) != (other.rows, other.cols) {
            return Err(Error::usage(format!(
                "sparse add: {}x{} vs {}x{}",
                self.rows, self.cols, other.rows, other.cols
            )));
        }
        let t = self
            .triplets()
            .chain(other.triplets().map(|(i, j, v)| (i, j, s * v)))
            .collect();
        Ok(Self::from_triplets(self.rows, self.cols, t))
    }

    pub fn add_identity(&self, s: Complex64) -> Result<Self> {
        if self.rows != self.cols {
            return Err(Error::usage("add_identity on non-square matrix"));
        }
        self.add_scaled(s, &SparseMatrix::identity(self.rows))
    }

    pub fn matmul(&self, other: &SparseMatrix) -> Result<Self> {
        if self.cols != other.rows {
            return Err(Error::usage(format!(
                "sparse matmul: {}x{} times {}x{}",
                self.rows, self.cols, other.rows, other.cols
            )));
        }
        let mut scratch = vec![ZERO; other.cols];
        let mut touched: Vec<usize> = Vec::new();
        let mut mark = vec![false; other.cols];
        let mut t = Vec::new();
        for i in 0..self.rows {
            for (k, a) in self.row(i) {
                for (j, b) in other.row(k) {
                    if !mark[j] {
                        mark[j] = true;
                        touched.push(j);
                    }
                    scratch[j] += a * b;
                }
            }
            for &j in &touched {
                t.push((i, j, scratch[j]));
                scratch[j] = ZERO;
                mark[j] = false;
            }
            touched.clear();
        }
        Ok(Self::from_triplets(self.rows, other.cols, t))
    }

    pub fn matvec(&self, v: &[Complex64]) -> Result<ComplexVector> {
        if v.len() != self.cols {
            return Err(Error::usage(format!(
                "sparse matvec: {}x{} times vector of length {}",
                self.rows,
                self.cols,
                v.len()
            )));
        }
        Ok((0..self.rows)
            .map(|i| self.row(i).map(|(j, a)| a * v[j]).sum::<Complex64>())
            .collect())
    }

    /// Sparse times dense block.
    pub fn matmul_dense(&self, y: &ComplexMatrix) -> Result<ComplexMatrix> {
        if self.cols != y.rows() {
            return Err(Error::usage(format!(
                "sparse matmul: {}x{} times {}x{}",
                self.rows,
                self.cols,
                y.rows(),
                y.cols()
            )));
        }
        let k = y.cols();
        let mut out = ComplexMatrix::zeros(self.rows, k);
        let data = out.as_mut_slice();
        for i in 0..self.rows {
            let orow = &mut data[i * k..(i + 1) * k];
            for (j, a) in self.row(i) {
                for (o, &b) in orow.iter_mut().zip(y.row(j)) {
                    *o += a * b;
                }
            }
        }
        Ok(out)
    }

    pub fn frob_norm(&self) -> f64 {
        self.values.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    pub fn is_finite(&self) -> bool {
        self.values
            .iter()
            .all(|z| z.re.is_finite() && z.im.is_finite())
    }
}

pub fn kron_sparse(a: &SparseMatrix, b: &SparseMatrix) -> Result<SparseMatrix> {
    if a.rows == 0 || a.cols == 0 || b.rows == 0 || b.cols == 0 {
        return Err(Error::usage("kron: empty operand"));
    }
    let rows = a
        .rows
        .checked_mul(b.rows)
        .ok_or_else(|| Error::config(None, "kron: dimension overflow"))?;
    let cols = a
        .cols
        .checked_mul(b.cols)
        .ok_or_else(|| Error::config(None, "kron: dimension overflow"))?;
    let mut t = Vec::with_capacity(a.nnz() * b.nnz());
    for (i, j, x) in a.triplets() {
        for (k, l, y) in b.triplets() {
            t.push((i * b.rows + k, j * b.cols + l, x * y));
        }
    }
    Ok(SparseMatrix::from_triplets(rows, cols, t))
}
