use num_complex::Complex64;

use super::dense::ComplexMatrix;
use super::vector::ComplexVector;
use crate::error::{Error, Result};

/// LU factorization with partial pivoting, `P A = L U`, stored packed.
#[derive(Clone, Debug)]
pub struct LuFactors {
    n: usize,
    lu: ComplexMatrix,
    perm: Vec<usize>,
}

impl LuFactors {
    pub fn new(a: &ComplexMatrix) -> Result<Self> {
        if !a.is_square() {
            return Err(Error::usage(format!(
                "lu: matrix is {}x{}, not square",
                a.rows(),
                a.cols()
            )));
        }
        let n = a.rows();
        let mut lu = a.clone();
        let mut perm: Vec<usize> = (0..n).collect();
        // Pivots below this are treated as exact rank deficiency.
        let floor = f64::EPSILON * a.max_abs() * n as f64;
        for k in 0..n {
            let (p, pmag) = (k..n)
                .map(|i| (i, lu[(i, k)].norm()))
                .fold((k, -1.0), |acc, x| if x.1 > acc.1 { x } else { acc });
            if !(pmag > floor) || !pmag.is_finite() {
                return Err(Error::Singular {
                    pivot: pmag.max(0.0),
                    column: k,
                });
            }
            if p != k {
                perm.swap(p, k);
                let s = lu.as_mut_slice();
                for j in 0..n {
                    s.swap(p * n + j, k * n + j);
                }
            }
            let inv = Complex64::new(1.0, 0.0) / lu[(k, k)];
            let s = lu.as_mut_slice();
            let (head, tail) = s.split_at_mut((k + 1) * n);
            let pivot_row = &head[k * n..(k + 1) * n];
            for row in tail.chunks_mut(n) {
                let f = row[k] * inv;
                row[k] = f;
                if f == Complex64::new(0.0, 0.0) {
                    continue;
                }
                for j in k + 1..n {
                    row[j] -= f * pivot_row[j];
                }
            }
        }
        Ok(Self { n, lu, perm })
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn solve_in_place(&self, b: &mut [Complex64]) -> Result<()> {
        let n = self.n;
        if b.len() != n {
            return Err(Error::usage(format!(
                "solve: rhs length {} != {}",
                b.len(),
                n
            )));
        }
        let permuted: Vec<Complex64> = self.perm.iter().map(|&p| b[p]).collect();
        b.copy_from_slice(&permuted);
        for i in 0..n {
            let row = self.lu.row(i);
            let mut acc = b[i];
            for j in 0..i {
                acc -= row[j] * b[j];
            }
            b[i] = acc;
        }
        for i in (0..n).rev() {
            let row = self.lu.row(i);
            let mut acc = b[i];
            for j in i + 1..n {
                acc -= row[j] * b[j];
            }
            b[i] = acc / row[i];
        }
        Ok(())
    }

    pub fn solve(&self, b: &ComplexVector) -> Result<ComplexVector> {
        let mut x = b.clone();
        self.solve_in_place(x.as_mut_slice())?;
        Ok(x)
    }

    /// Solves `A X = B` where `B` is stored row-major in `data` as an
    /// `n x width` block; the solution overwrites `data`.
    pub fn solve_rows_in_place(&self, data: &mut [Complex64], width: usize) -> Result<()> {
        let n = self.n;
        if data.len() != n * width {
            return Err(Error::usage(format!(
                "solve: block of {} entries is not {}x{}",
                data.len(),
                n,
                width
            )));
        }
        let mut permuted = Vec::with_capacity(data.len());
        for &p in &self.perm {
            permuted.extend_from_slice(&data[p * width..(p + 1) * width]);
        }
        data.copy_from_slice(&permuted);
        for i in 0..n {
            let (head, tail) = data.split_at_mut(i * width);
            let target = &mut tail[..width];
            for (j, &l) in self.lu.row(i)[..i].iter().enumerate() {
                if l == Complex64::new(0.0, 0.0) {
                    continue;
                }
                for (t, &s) in target.iter_mut().zip(&head[j * width..(j + 1) * width]) {
                    *t -= l * s;
                }
            }
        }
        for i in (0..n).rev() {
            let (head, tail) = data.split_at_mut((i + 1) * width);
            let target = &mut head[i * width..];
            let row = self.lu.row(i);
            for (off, &u) in row[i + 1..].iter().enumerate() {
                if u == Complex64::new(0.0, 0.0) {
                    continue;
                }
                let j = off;
                for (t, &s) in target.iter_mut().zip(&tail[j * width..(j + 1) * width]) {
                    *t -= u * s;
                }
            }
            let inv = Complex64::new(1.0, 0.0) / row[i];
            for t in target.iter_mut() {
                *t *= inv;
            }
        }
        Ok(())
    }

    /// Solves `A X = B` column by column.
    pub fn solve_matrix(&self, b: &ComplexMatrix) -> Result<ComplexMatrix> {
        if b.rows() != self.n {
            return Err(Error::usage("solve_matrix: row mismatch"));
        }
        let mut out = ComplexMatrix::zeros(b.rows(), b.cols());
        for j in 0..b.cols() {
            let mut col = b.column(j);
            self.solve_in_place(col.as_mut_slice())?;
            for i in 0..self.n {
                out[(i, j)] = col[i];
            }
        }
        Ok(out)
    }
}

/// Solves `A x = b` by LU with partial pivoting.
pub fn solve(a: &ComplexMatrix, b: &ComplexVector) -> Result<ComplexVector> {
    if b.len() != a.rows() {
        return Err(Error::usage(format!(
            "solve: rhs length {} != {}",
            b.len(),
            a.rows()
        )));
    }
    LuFactors::new(a)?.solve(b)
}
