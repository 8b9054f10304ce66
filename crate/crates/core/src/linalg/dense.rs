use std::ops::{Add, Index, IndexMut, Mul, Sub};

use num_complex::Complex64;

use super::vector::ComplexVector;
use crate::error::{Error, Result};

const ZERO: Complex64 = Complex64::new(0.0, 0.0);
const ONE: Complex64 = Complex64::new(1.0, 0.0);

/// Dense complex matrix, row-major.
#[derive(Clone, Debug, PartialEq)]
pub struct ComplexMatrix {
    rows: usize,
    cols: usize,
    data: Vec<Complex64>,
}

impl ComplexMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![ZERO; rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m.data[i * n + i] = ONE;
        }
        m
    }

    pub fn from_diag(diag: &[Complex64]) -> Self {
        let n = diag.len();
        let mut m = Self::zeros(n, n);
        for (i, &d) in diag.iter().enumerate() {
            m.data[i * n + i] = d;
        }
        m
    }

    pub fn from_real_diag(diag: &[f64]) -> Self {
        let d: Vec<_> = diag.iter().map(|&x| Complex64::new(x, 0.0)).collect();
        Self::from_diag(&d)
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> Complex64) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(f(i, j));
            }
        }
        Self { rows, cols, data }
    }

    pub fn from_row_major(rows: usize, cols: usize, data: Vec<Complex64>) -> Result<Self> {
        if rows * cols != data.len() {
            return Err(Error::usage(format!(
                "from_row_major: {rows}x{cols} needs {} entries, got {}",
                rows * cols,
                data.len()
            )));
        }
        Ok(Self { rows, cols, data })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    pub fn as_slice(&self) -> &[Complex64] {
        &self.data
    }

    pub fn as_mut_slice(&mut self) -> &mut [Complex64] {
        &mut self.data
    }

    pub fn row(&self, i: usize) -> &[Complex64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn column(&self, j: usize) -> ComplexVector {
        (0..self.rows).map(|i| self.data[i * self.cols + j]).collect()
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|z| z.re.is_finite() && z.im.is_finite())
    }

    pub fn adjoint(&self) -> Self {
        let mut out = Self::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                out.data[j * self.rows + i] = self.data[i * self.cols + j].conj();
            }
        }
        out
    }

    pub fn transpose(&self) -> Self {
        let mut out = Self::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                out.data[j * self.rows + i] = self.data[i * self.cols + j];
            }
        }
        out
    }

    pub fn conj(&self) -> Self {
        Self {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|z| z.conj()).collect(),
        }
    }

    pub fn scale(&self, s: Complex64) -> Self {
        Self {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|&z| z * s).collect(),
        }
    }

    pub fn trace(&self) -> Complex64 {
        (0..self.rows.min(self.cols))
            .map(|i| self.data[i * self.cols + i])
            .sum()
    }

    pub fn frob_norm(&self) -> f64 {
        self.data.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    /// Maximum absolute column sum.
    pub fn one_norm(&self) -> f64 {
        let mut sums = vec![0.0; self.cols];
        for i in 0..self.rows {
            for (j, z) in self.row(i).iter().enumerate() {
                sums[j] += z.norm();
            }
        }
        sums.into_iter().fold(0.0, f64::max)
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    pub fn max_abs_diff(&self, other: &ComplexMatrix) -> f64 {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        self.data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }

    /// Matrix product. Zero entries of `self` are skipped, so products with a
    /// sparse left factor cost `nnz(self) * cols(other)`.
    pub fn matmul(&self, other: &ComplexMatrix) -> Result<ComplexMatrix> {
        if self.cols != other.rows {
            return Err(Error::usage(format!(
                "matmul: {}x{} times {}x{}",
                self.rows, self.cols, other.rows, other.cols
            )));
        }
        let n = other.cols;
        let mut out = ComplexMatrix::zeros(self.rows, n);
        let kernel = |(i, out_row): (usize, &mut [Complex64])| {
            for (k, &a) in self.row(i).iter().enumerate() {
                if a == ZERO {
                    continue;
                }
                for (o, &b) in out_row.iter_mut().zip(other.row(k)) {
                    *o += a * b;
                }
            }
        };
        if n == 0 {
            return Ok(out);
        }
        #[cfg(feature = "parallel")]
        {
            use rayon::prelude::*;
            if self.rows * self.cols * n > 1 << 18 {
                out.data.par_chunks_mut(n).enumerate().for_each(kernel);
                return Ok(out);
            }
        }
        out.data.chunks_mut(n).enumerate().for_each(kernel);
        Ok(out)
    }

    pub fn matvec(&self, v: &ComplexVector) -> Result<ComplexVector> {
        if self.cols != v.len() {
            return Err(Error::usage(format!(
                "matvec: {}x{} times vector of length {}",
                self.rows,
                self.cols,
                v.len()
            )));
        }
        Ok((0..self.rows)
            .map(|i| {
                self.row(i)
                    .iter()
                    .zip(v.iter())
                    .map(|(a, b)| a * b)
                    .sum::<Complex64>()
            })
            .collect())
    }

    /// Rows `idx` of `self`, in order.
    pub fn select_rows(&self, idx: &[usize]) -> ComplexMatrix {
        let mut data = Vec::with_capacity(idx.len() * self.cols);
        for &i in idx {
            data.extend_from_slice(self.row(i));
        }
        ComplexMatrix {
            rows: idx.len(),
            cols: self.cols,
            data,
        }
    }

    /// Columns `idx` of `self`, in order.
    pub fn select_cols(&self, idx: &[usize]) -> ComplexMatrix {
        ComplexMatrix::from_fn(self.rows, idx.len(), |i, j| self[(i, idx[j])])
    }

    /// Principal submatrix on the given index set.
    pub fn submatrix(&self, idx: &[usize]) -> ComplexMatrix {
        ComplexMatrix::from_fn(idx.len(), idx.len(), |i, j| self[(idx[i], idx[j])])
    }

    pub fn checked_add(&self, other: &ComplexMatrix) -> Result<ComplexMatrix> {
        self.zip_with(other, |a, b| a + b)
    }

    pub fn checked_sub(&self, other: &ComplexMatrix) -> Result<ComplexMatrix> {
        self.zip_with(other, |a, b| a - b)
    }

    fn zip_with(
        &self,
        other: &ComplexMatrix,
        f: impl Fn(Complex64, Complex64) -> Complex64,
    ) -> Result<ComplexMatrix> {
        if (self.rows, self.cols) != (other.rows, other.cols) {
            return Err(Error::usage(format!(
                "shape mismatch {}x{} vs {}x{}",
                self.rows, self.cols, other.rows, other.cols
            )));
        }
        Ok(ComplexMatrix {
            rows: self.rows,
            cols: self.cols,
            data: self
                .data
                .iter()
                .zip(&other.data)
                .map(|(&a, &b)| f(a, b))
                .collect(),
        })
    }
}

impl Index<(usize, usize)> for ComplexMatrix {
    type Output = Complex64;
    fn index(&self, (i, j): (usize, usize)) -> &Complex64 {
        debug_assert!(i < self.rows && j < self.cols);
        &self.data[i * self.cols + j]
    }
}

impl IndexMut<(usize, usize)> for ComplexMatrix {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut Complex64 {
        debug_assert!(i < self.rows && j < self.cols);
        &mut self.data[i * self.cols + j]
    }
}

// Operator sugar for code paths where shapes are known to agree. Mismatches
// panic; use the `checked_*` / `matmul` methods when shapes come from input.
impl Add for &ComplexMatrix {
    type Output = ComplexMatrix;
    fn add(self, rhs: &ComplexMatrix) -> ComplexMatrix {
        self.checked_add(rhs).expect("matrix add")
    }
}

impl Sub for &ComplexMatrix {
    type Output = ComplexMatrix;
    fn sub(self, rhs: &ComplexMatrix) -> ComplexMatrix {
        self.checked_sub(rhs).expect("matrix sub")
    }
}

impl Mul for &ComplexMatrix {
    type Output = ComplexMatrix;
    fn mul(self, rhs: &ComplexMatrix) -> ComplexMatrix {
        self.matmul(rhs).expect("matrix mul")
    }
}

/// Kronecker product. Row `(i, k)` of the result is `i * rows(b) + k`, which
/// is the flat-index convention `(n1, n2) -> n1 * dim2 + n2` used throughout.
pub fn kron(a: &ComplexMatrix, b: &ComplexMatrix) -> Result<ComplexMatrix> {
    if a.rows == 0 || a.cols == 0 || b.rows == 0 || b.cols == 0 {
        return Err(Error::usage("kron: empty operand"));
    }
    let rows = a
        .rows
        .checked_mul(b.rows)
        .ok_or_else(|| Error::config(None, "kron: row dimension overflow"))?;
    let cols = a
        .cols
        .checked_mul(b.cols)
        .ok_or_else(|| Error::config(None, "kron: column dimension overflow"))?;
    rows.checked_mul(cols)
        .ok_or_else(|| Error::config(None, "kron: entry count overflow"))?;
    let mut out = ComplexMatrix::zeros(rows, cols);
    for i in 0..a.rows {
        for j in 0..a.cols {
            let s = a[(i, j)];
            if s == ZERO {
                continue;
            }
            for k in 0..b.rows {
                let dst = (i * b.rows + k) * cols + j * b.cols;
                for (o, &v) in out.data[dst..dst + b.cols].iter_mut().zip(b.row(k)) {
                    *o = s * v;
                }
            }
        }
    }
    Ok(out)
}

/// Applies `left ⊗ right` to a flat two-mode vector without forming the
/// Kronecker product: the vector is reshaped to a `cols(left) x cols(right)`
/// block `X` and mapped to `left · X · rightᵀ`.
pub fn kron_apply(
    left: &ComplexMatrix,
    right: &ComplexMatrix,
    v: &[Complex64],
) -> Result<ComplexVector> {
    let (c1, c2) = (left.cols, right.cols);
    if v.len() != c1 * c2 {
        return Err(Error::usage(format!(
            "kron_apply: vector length {} != {}*{}",
            v.len(),
            c1,
            c2
        )));
    }
    // tmp = X · rightᵀ  (c1 x r2)
    let r2 = right.rows;
    let mut tmp = vec![ZERO; c1 * r2];
    for i in 0..c1 {
        let xrow = &v[i * c2..(i + 1) * c2];
        for k in 0..r2 {
            tmp[i * r2 + k] = xrow.iter().zip(right.row(k)).map(|(x, r)| x * r).sum();
        }
    }
    // out = left · tmp  (r1 x r2)
    let r1 = left.rows;
    let mut out = vec![ZERO; r1 * r2];
    for i in 0..r1 {
        let orow = &mut out[i * r2..(i + 1) * r2];
        for (j, &l) in left.row(i).iter().enumerate() {
            if l == ZERO {
                continue;
            }
            for (o, &t) in orow.iter_mut().zip(&tmp[j * r2..(j + 1) * r2]) {
                *o += l * t;
            }
        }
    }
    Ok(ComplexVector::from_vec(out))
}

/// Applies `left ⊗ right` to every column of `y`, a `(cols(left)·cols(right)) x k`
/// block, by two mode-wise matrix products.
pub fn kron_apply_block(
    left: &ComplexMatrix,
    right: &ComplexMatrix,
    y: &ComplexMatrix,
) -> Result<ComplexMatrix> {
    let (c1, c2) = (left.cols, right.cols);
    let (r1, r2) = (left.rows, right.rows);
    let k = y.cols;
    if y.rows != c1 * c2 {
        return Err(Error::usage(format!(
            "kron_apply_block: block has {} rows, expected {}*{}",
            y.rows, c1, c2
        )));
    }
    let mut tmp = Vec::with_capacity(c1 * r2 * k);
    for n1 in 0..c1 {
        let slab = ComplexMatrix {
            rows: c2,
            cols: k,
            data: y.data[n1 * c2 * k..(n1 + 1) * c2 * k].to_vec(),
        };
        tmp.extend(right.matmul(&slab)?.data);
    }
    let tmp = ComplexMatrix {
        rows: c1,
        cols: r2 * k,
        data: tmp,
    };
    let out = left.matmul(&tmp)?;
    Ok(ComplexMatrix {
        rows: r1 * r2,
        cols: k,
        data: out.data,
    })
}

pub fn frob_norm(a: &ComplexMatrix) -> f64 {
    a.frob_norm()
}

/// Largest singular value by power iteration on `A†A`.
pub fn spectral_norm(a: &ComplexMatrix) -> f64 {
    let n = a.cols;
    if n == 0 || a.rows == 0 {
        return 0.0;
    }
    let ah = a.adjoint();
    // Deterministic, non-degenerate start vector.
    let mut v: ComplexVector = (0..n)
        .map(|k| Complex64::new(1.0 + 0.1 * (k as f64).sin(), 0.05 * k as f64))
        .collect();
    let nv = v.norm();
    v = v.scale(Complex64::new(1.0 / nv, 0.0));
    let mut sigma2 = 0.0;
    for _ in 0..2000 {
        let w = ah.matvec(&a.matvec(&v).unwrap()).unwrap();
        let nw = w.norm();
        if nw == 0.0 {
            return 0.0;
        }
        let converged = ((nw - sigma2) / nw).abs() < 1e-14;
        sigma2 = nw;
        v = w.scale(Complex64::new(1.0 / nw, 0.0));
        if converged {
            break;
        }
    }
    sigma2.sqrt()
}
