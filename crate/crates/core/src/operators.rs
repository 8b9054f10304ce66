//! Operators on the truncated two-mode Fock space.
//!
//! Ladder polynomials are stored sparse. Exponentials of linear combinations
//! of `â_i`, `â_i†` are stored as a Kronecker product of one matrix per
//! bosonic mode: since `â = L·A` with `L = [[1, i], [−i, −1]]/√2` unitary,
//!
//! ```text
//! exp(Σ_i c_i â_i + d_i â_i†) = ⊗_j exp(c'_j A_j + d'_j A_j†),
//! c'_j = Σ_i c_i L_ij,   d'_j = Σ_i d_i conj(L_ij).
//! ```

use std::f64::consts::FRAC_1_SQRT_2;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::linalg::{
    kron_apply, kron_apply_block, kron_sparse, matexp, ComplexMatrix, ComplexVector, LuFactors,
    SparseMatrix,
};
use crate::model::{DerivedConstants, ModelParams, TruncationSpec, ENVELOPE_DELTA, ENVELOPE_SHIFT};

const ZERO: Complex64 = Complex64::new(0.0, 0.0);
const ONE: Complex64 = Complex64::new(1.0, 0.0);
const I: Complex64 = Complex64::new(0.0, 1.0);

fn re(x: f64) -> Complex64 {
    Complex64::new(x, 0.0)
}

/// Rows of `L` in `â_i = Σ_j L_ij A_j`.
pub const MODE_MIX: [[Complex64; 2]; 2] = [
    [Complex64::new(FRAC_1_SQRT_2, 0.0), Complex64::new(0.0, FRAC_1_SQRT_2)],
    [Complex64::new(0.0, -FRAC_1_SQRT_2), Complex64::new(-FRAC_1_SQRT_2, 0.0)],
];

#[derive(Clone, Debug)]
pub enum Repr {
    Sparse(SparseMatrix),
    /// `scale · left ⊗ right`
    Kron {
        scale: Complex64,
        left: ComplexMatrix,
        right: ComplexMatrix,
    },
    Dense(ComplexMatrix),
}

#[derive(Clone, Debug)]
pub struct FockOperator {
    repr: Repr,
    trunc: TruncationSpec,
    label: String,
    warning: Option<String>,
}

impl FockOperator {
    pub fn from_sparse(trunc: TruncationSpec, label: impl Into<String>, m: SparseMatrix) -> Self {
        debug_assert_eq!(m.rows(), trunc.dim());
        Self {
            repr: Repr::Sparse(m),
            trunc,
            label: label.into(),
            warning: None,
        }
    }

    pub fn from_kron(
        trunc: TruncationSpec,
        label: impl Into<String>,
        scale: Complex64,
        left: ComplexMatrix,
        right: ComplexMatrix,
    ) -> Self {
        debug_assert_eq!((left.rows(), right.rows()), (trunc.dim1, trunc.dim2));
        Self {
            repr: Repr::Kron { scale, left, right },
            trunc,
            label: label.into(),
            warning: None,
        }
    }

    pub fn from_dense(trunc: TruncationSpec, label: impl Into<String>, m: ComplexMatrix) -> Self {
        debug_assert_eq!(m.rows(), trunc.dim());
        Self {
            repr: Repr::Dense(m),
            trunc,
            label: label.into(),
            warning: None,
        }
    }

    pub fn identity(trunc: TruncationSpec) -> Self {
        Self::from_sparse(trunc, "I", SparseMatrix::identity(trunc.dim()))
    }

    pub fn repr(&self) -> &Repr {
        &self.repr
    }

    pub fn trunc(&self) -> &TruncationSpec {
        &self.trunc
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn warning(&self) -> Option<&str> {
        self.warning.as_deref()
    }

    pub fn with_label(mut self, label: impl Into<String>) -> Self {
        self.label = label.into();
        self
    }

    fn with_warning(mut self, w: Option<String>) -> Self {
        self.warning = w;
        self
    }

    pub fn dim(&self) -> usize {
        self.trunc.dim()
    }

    pub fn as_sparse(&self) -> Option<&SparseMatrix> {
        match &self.repr {
            Repr::Sparse(s) => Some(s),
            _ => None,
        }
    }

    /// Dense matrix in the flat basis.
    pub fn matrix(&self) -> ComplexMatrix {
        match &self.repr {
            Repr::Sparse(s) => s.to_dense(),
            Repr::Kron { scale, left, right } => {
                crate::linalg::kron(left, right).expect("kron of mode factors").scale(*scale)
            }
            Repr::Dense(m) => m.clone(),
        }
    }

    pub fn apply(&self, v: &ComplexVector) -> Result<ComplexVector> {
        if v.len() != self.dim() {
            return Err(Error::usage(format!(
                "{}: vector length {} != {}",
                self.label,
                v.len(),
                self.dim()
            )));
        }
        match &self.repr {
            Repr::Sparse(s) => s.matvec(v.as_slice()),
            Repr::Kron { scale, left, right } => {
                Ok(kron_apply(left, right, v.as_slice())?.scale(*scale))
            }
            Repr::Dense(m) => m.matvec(v),
        }
    }

    /// Applies the operator to each column of `y`.
    pub fn apply_block(&self, y: &ComplexMatrix) -> Result<ComplexMatrix> {
        match &self.repr {
            Repr::Sparse(s) => s.matmul_dense(y),
            Repr::Kron { scale, left, right } => {
                let out = kron_apply_block(left, right, y)?;
                Ok(if *scale == ONE { out } else { out.scale(*scale) })
            }
            Repr::Dense(m) => m.matmul(y),
        }
    }

    pub fn adjoint(&self) -> Self {
        let repr = match &self.repr {
            Repr::Sparse(s) => Repr::Sparse(s.adjoint()),
            Repr::Kron { scale, left, right } => Repr::Kron {
                scale: scale.conj(),
                left: left.adjoint(),
                right: right.adjoint(),
            },
            Repr::Dense(m) => Repr::Dense(m.adjoint()),
        };
        Self {
            repr,
            trunc: self.trunc,
            label: format!("{}†", self.label),
            warning: self.warning.clone(),
        }
    }

    /// Entrywise complex conjugate in the flat basis.
    pub fn conj(&self) -> Self {
        let repr = match &self.repr {
            Repr::Sparse(s) => Repr::Sparse(s.conj()),
            Repr::Kron { scale, left, right } => Repr::Kron {
                scale: scale.conj(),
                left: left.conj(),
                right: right.conj(),
            },
            Repr::Dense(m) => Repr::Dense(m.conj()),
        };
        Self {
            repr,
            trunc: self.trunc,
            label: format!("conj({})", self.label),
            warning: self.warning.clone(),
        }
    }

    pub fn scale(&self, s: Complex64) -> Self {
        let repr = match &self.repr {
            Repr::Sparse(m) => Repr::Sparse(m.scale(s)),
            Repr::Kron { scale, left, right } => Repr::Kron {
                scale: scale * s,
                left: left.clone(),
                right: right.clone(),
            },
            Repr::Dense(m) => Repr::Dense(m.scale(s)),
        };
        Self {
            repr,
            ..self.clone()
        }
    }

    fn check_same_space(&self, other: &FockOperator) -> Result<()> {
        if (self.trunc.dim1, self.trunc.dim2) != (other.trunc.dim1, other.trunc.dim2) {
            return Err(Error::usage(format!(
                "{} on {} and {} on {} live on different spaces",
                self.label, self.trunc, other.label, other.trunc
            )));
        }
        Ok(())
    }

    /// `self · other`. Sparse products stay sparse and Kronecker products stay
    /// factored; mixed products are materialized.
    pub fn compose(&self, other: &FockOperator) -> Result<FockOperator> {
        self.check_same_space(other)?;
        let repr = match (&self.repr, &other.repr) {
            (Repr::Sparse(a), Repr::Sparse(b)) => Repr::Sparse(a.matmul(b)?),
            (
                Repr::Kron {
                    scale: s1,
                    left: l1,
                    right: r1,
                },
                Repr::Kron {
                    scale: s2,
                    left: l2,
                    right: r2,
                },
            ) => Repr::Kron {
                scale: s1 * s2,
                left: l1.matmul(l2)?,
                right: r1.matmul(r2)?,
            },
            _ => Repr::Dense(self.matrix().matmul(&other.matrix())?),
        };
        let warning = self.warning.clone().or_else(|| other.warning.clone());
        Ok(FockOperator {
            repr,
            trunc: self.trunc,
            label: format!("{}·{}", self.label, other.label),
            warning,
        })
    }

    /// `Σ c_k op_k`; sparse when every term is sparse.
    pub fn lincomb(terms: &[(Complex64, &FockOperator)]) -> Result<FockOperator> {
        let first = terms
            .first()
            .ok_or_else(|| Error::usage("lincomb of no terms"))?
            .1;
        for (_, t) in terms {
            first.check_same_space(t)?;
        }
        let label = terms
            .iter()
            .map(|(_, t)| t.label.as_str())
            .collect::<Vec<_>>()
            .join("+");
        if terms.iter().all(|(_, t)| t.as_sparse().is_some()) {
            let mut acc = SparseMatrix::zeros(first.dim(), first.dim());
            for (c, t) in terms {
                acc = acc.add_scaled(*c, t.as_sparse().unwrap())?;
            }
            Ok(FockOperator::from_sparse(first.trunc, label, acc))
        } else {
            let mut acc = ComplexMatrix::zeros(first.dim(), first.dim());
            for (c, t) in terms {
                acc = acc.checked_add(&t.matrix().scale(*c))?;
            }
            Ok(FockOperator::from_dense(first.trunc, label, acc))
        }
    }

    /// `self + s·I`
    pub fn shift(&self, s: Complex64) -> Result<FockOperator> {
        let id = FockOperator::identity(self.trunc);
        Ok(FockOperator::lincomb(&[(ONE, self), (s, &id)])?.with_label(self.label.clone()))
    }

    pub fn factor(&self) -> Result<FockSolver> {
        match &self.repr {
            Repr::Kron { scale, left, right } => {
                if *scale == ZERO {
                    return Err(Error::Singular { pivot: 0.0, column: 0 });
                }
                Ok(FockSolver::Kron {
                    scale: *scale,
                    left: LuFactors::new(left)?,
                    right: LuFactors::new(right)?,
                })
            }
            _ => Ok(FockSolver::Dense(LuFactors::new(&self.matrix())?)),
        }
    }

    /// `‖P(self − other)P‖_F` over the interior of `self`'s truncation.
    pub fn interior_distance(&self, other: &FockOperator) -> Result<f64> {
        self.check_same_space(other)?;
        let basis = interior_basis(&self.trunc);
        let idx = self.trunc.interior_indices();
        let x = self.apply_block(&basis)?.select_rows(&idx);
        let y = other.apply_block(&basis)?.select_rows(&idx);
        Ok(x.checked_sub(&y)?.frob_norm())
    }

    /// `‖P self P‖_F`.
    pub fn interior_norm(&self) -> Result<f64> {
        let basis = interior_basis(&self.trunc);
        let idx = self.trunc.interior_indices();
        Ok(self.apply_block(&basis)?.select_rows(&idx).frob_norm())
    }
}

/// Factored inverse of a [`FockOperator`].
#[derive(Clone, Debug)]
pub enum FockSolver {
    Kron {
        scale: Complex64,
        left: LuFactors,
        right: LuFactors,
    },
    Dense(LuFactors),
}

impl FockSolver {
    pub fn solve(&self, b: &ComplexVector) -> Result<ComplexVector> {
        let m = ComplexMatrix::from_row_major(b.len(), 1, b.as_slice().to_vec())?;
        Ok(ComplexVector::from_vec(self.solve_block(&m)?.as_slice().to_vec()))
    }

    pub fn solve_block(&self, b: &ComplexMatrix) -> Result<ComplexMatrix> {
        match self {
            FockSolver::Dense(lu) => lu.solve_matrix(b),
            FockSolver::Kron { scale, left, right } => {
                let (d1, d2, k) = (left.dim(), right.dim(), b.cols());
                if b.rows() != d1 * d2 {
                    return Err(Error::usage("solve_block: row mismatch"));
                }
                let mut x = b.clone();
                let data = x.as_mut_slice();
                // (L ⊗ I) Z = B, then (I ⊗ R) X = Z slab by slab.
                left.solve_rows_in_place(data, d2 * k)?;
                for slab in data.chunks_mut(d2 * k) {
                    right.solve_rows_in_place(slab, k)?;
                }
                let inv = ONE / scale;
                if inv != ONE {
                    for z in data.iter_mut() {
                        *z *= inv;
                    }
                }
                Ok(x)
            }
        }
    }
}

/// Columns `e_n` for every interior state `n`, as a `dim x |interior|` block.
pub fn interior_basis(trunc: &TruncationSpec) -> ComplexMatrix {
    let idx = trunc.interior_indices();
    let mut e = ComplexMatrix::zeros(trunc.dim(), idx.len());
    for (j, &i) in idx.iter().enumerate() {
        e[(i, j)] = ONE;
    }
    e
}

/// Diagonal 0/1 projector onto `n_i ≤ dim_i − 1 − margin`. Any margin below
/// both dimensions is accepted, including 0.
pub fn interior_projector(trunc: &TruncationSpec, margin: usize) -> Result<FockOperator> {
    if margin >= trunc.dim1 || margin >= trunc.dim2 {
        return Err(Error::usage(format!(
            "margin {margin} leaves no interior in {trunc}"
        )));
    }
    let diag: Vec<Complex64> = (0..trunc.dim())
        .map(|k| {
            let (n1, n2) = trunc.unflat(k);
            if n1 + margin < trunc.dim1 && n2 + margin < trunc.dim2 {
                ONE
            } else {
                ZERO
            }
        })
        .collect();
    Ok(FockOperator::from_sparse(
        *trunc,
        format!("P[margin={margin}]"),
        SparseMatrix::from_diag(&diag),
    ))
}

/// Single-mode `(lower, raise)`: `lower` has `√n` at `(n−1, n)`.
pub fn mode_ladder(dim: usize) -> Result<(ComplexMatrix, ComplexMatrix)> {
    let (lo, ra) = mode_ladder_sparse(dim)?;
    Ok((lo.to_dense(), ra.to_dense()))
}

fn mode_ladder_sparse(dim: usize) -> Result<(SparseMatrix, SparseMatrix)> {
    if dim < 2 {
        return Err(Error::usage(format!("mode dimension {dim} < 2")));
    }
    let t = (1..dim)
        .map(|n| (n - 1, n, re((n as f64).sqrt())))
        .collect();
    let lower = SparseMatrix::from_triplets(dim, dim, t);
    let raise = lower.adjoint();
    Ok((lower, raise))
}

/// Bosonic `A_1, A_2` and their adjoints.
#[derive(Clone, Debug)]
pub struct Bosonic {
    pub a: [FockOperator; 2],
    pub a_dag: [FockOperator; 2],
}

pub fn build_bosonic(trunc: &TruncationSpec) -> Result<Bosonic> {
    let (l1, _) = mode_ladder_sparse(trunc.dim1)?;
    let (l2, _) = mode_ladder_sparse(trunc.dim2)?;
    let a1 = kron_sparse(&l1, &SparseMatrix::identity(trunc.dim2))?;
    let a2 = kron_sparse(&SparseMatrix::identity(trunc.dim1), &l2)?;
    let a1 = FockOperator::from_sparse(*trunc, "A1", a1);
    let a2 = FockOperator::from_sparse(*trunc, "A2", a2);
    Ok(Bosonic {
        a_dag: [a1.adjoint(), a2.adjoint()],
        a: [a1, a2],
    })
}

/// Canonical positions and momenta.
#[derive(Clone, Debug)]
pub struct CanonicalXp {
    pub x: [FockOperator; 2],
    pub p: [FockOperator; 2],
}

/// `x_i = √(ħ/2Mω)(A_i + A_i†)`, `p_i = −i√(ħMω/2)(A_i − A_i†)`.
pub fn build_xp(
    trunc: &TruncationSpec,
    d: &DerivedConstants,
    p: &ModelParams,
) -> Result<CanonicalXp> {
    let bos = build_bosonic(trunc)?;
    let sx = (p.hbar / (2.0 * d.mass_eff * p.omega)).sqrt();
    let sp = (p.hbar * d.mass_eff * p.omega / 2.0).sqrt();
    let mk = |i: usize| -> Result<(FockOperator, FockOperator)> {
        let x = FockOperator::lincomb(&[(re(sx), &bos.a[i]), (re(sx), &bos.a_dag[i])])?
            .with_label(format!("x{}", i + 1));
        let pm = FockOperator::lincomb(&[(-I * sp, &bos.a[i]), (I * sp, &bos.a_dag[i])])?
            .with_label(format!("p{}", i + 1));
        Ok((x, pm))
    };
    let (x1, p1) = mk(0)?;
    let (x2, p2) = mk(1)?;
    Ok(CanonicalXp {
        x: [x1, x2],
        p: [p1, p2],
    })
}

/// Rotated bosons `â_i`, their adjoints, and the pseudo-bosons
/// `a_i = â_i + ν_i`, `b_i = â_i† + μ̄_i`.
#[derive(Clone, Debug)]
pub struct PseudoBosons {
    pub ahat: [FockOperator; 2],
    pub ahat_dag: [FockOperator; 2],
    pub a: [FockOperator; 2],
    pub b: [FockOperator; 2],
}

/// Rotated bosons `â_i = Σ_j L_ij A_j`.
pub fn build_rotated(trunc: &TruncationSpec) -> Result<[FockOperator; 2]> {
    let bos = build_bosonic(trunc)?;
    let mk = |i: usize| -> Result<FockOperator> {
        Ok(FockOperator::lincomb(&[
            (MODE_MIX[i][0], &bos.a[0]),
            (MODE_MIX[i][1], &bos.a[1]),
        ])?
        .with_label(format!("â{}", i + 1)))
    };
    Ok([mk(0)?, mk(1)?])
}

/// Pseudo-bosons written directly in `A_i`, `A_i†` and `β`:
/// `a₁ = (A₁+iA₂)/√2 + iβ₁`, `a₂ = −(iA₁+A₂)/√2 + β₂`,
/// `b₁ = (A₁†−iA₂†)/√2 + iβ₃`, `b₂ = (iA₁†−A₂†)/√2 + β₄`.
pub fn build_pseudo(trunc: &TruncationSpec, d: &DerivedConstants) -> Result<PseudoBosons> {
    let bos = build_bosonic(trunc)?;
    let id = FockOperator::identity(*trunc);
    let s = re(FRAC_1_SQRT_2);
    let [b1, b2, b3, b4] = d.beta;
    let [a1, a2] = &bos.a;
    let [a1d, a2d] = &bos.a_dag;
    let pa1 = FockOperator::lincomb(&[(s, a1), (I * s, a2), (I * b1, &id)])?.with_label("a1");
    let pa2 = FockOperator::lincomb(&[(-I * s, a1), (-s, a2), (b2, &id)])?.with_label("a2");
    let pb1 = FockOperator::lincomb(&[(s, a1d), (-I * s, a2d), (I * b3, &id)])?.with_label("b1");
    let pb2 = FockOperator::lincomb(&[(I * s, a1d), (-s, a2d), (b4, &id)])?.with_label("b2");
    let ahat = build_rotated(trunc)?;
    let ahat_dag = [ahat[0].adjoint(), ahat[1].adjoint()];
    Ok(PseudoBosons {
        ahat,
        ahat_dag,
        a: [pa1, pa2],
        b: [pb1, pb2],
    })
}

/// The same operators built as `â_i + ν_i` and `â_i† + μ̄_i`.
pub fn build_pseudo_shifted(trunc: &TruncationSpec, d: &DerivedConstants) -> Result<PseudoBosons> {
    let ahat = build_rotated(trunc)?;
    let ahat_dag = [ahat[0].adjoint(), ahat[1].adjoint()];
    let a = [
        ahat[0].shift(d.nu[0])?.with_label("a1"),
        ahat[1].shift(d.nu[1])?.with_label("a2"),
    ];
    let b = [
        ahat_dag[0].shift(d.mu[0].conj())?.with_label("b1"),
        ahat_dag[1].shift(d.mu[1].conj())?.with_label("b2"),
    ];
    Ok(PseudoBosons {
        ahat,
        ahat_dag,
        a,
        b,
    })
}

/// `N = b·a`
pub fn build_number(a: &FockOperator, b: &FockOperator) -> Result<FockOperator> {
    Ok(b.compose(a)?.with_label(format!("N[{}]", a.label())))
}

/// `[x, y] = xy − yx`
pub fn commutator(x: &FockOperator, y: &FockOperator) -> Result<FockOperator> {
    let xy = x.compose(y)?;
    let yx = y.compose(x)?;
    Ok(FockOperator::lincomb(&[(ONE, &xy), (-ONE, &yx)])?
        .with_label(format!("[{},{}]", x.label(), y.label())))
}

/// Hamiltonian assembled from canonical variables after the Bopp shift.
pub fn build_h_canonical(
    p: &ModelParams,
    d: &DerivedConstants,
    trunc: &TruncationSpec,
) -> Result<FockOperator> {
    let xp = build_xp(trunc, d, p)?;
    let [x1, x2] = &xp.x;
    let [p1, p2] = &xp.p;
    let (m, w, hb, th) = (p.m, p.omega, p.hbar, p.theta);
    let [al1, al2, al3, al4] = p.alpha;
    let kin = 1.0 / (2.0 * m) + m * w * w * th * th / (8.0 * hb * hb);
    let pot = m * w * w / 2.0;
    let ang = m * w * w * th / (2.0 * hb);
    let p1p1 = p1.compose(p1)?;
    let p2p2 = p2.compose(p2)?;
    let x1x1 = x1.compose(x1)?;
    let x2x2 = x2.compose(x2)?;
    let x2p1 = x2.compose(p1)?;
    let x1p2 = x1.compose(p2)?;
    let h = FockOperator::lincomb(&[
        (re(kin), &p1p1),
        (re(kin), &p2p2),
        (re(pot), &x1x1),
        (re(pot), &x2x2),
        (re(ang), &x2p1),
        (re(-ang), &x1p2),
        (I * al1, x1),
        (al2, x2),
        (al3 + al2 * th / (2.0 * hb), p1),
        (I * (al4 - al1 * th / (2.0 * hb)), p2),
    ])?;
    Ok(h.with_label("H[canonical]"))
}

/// `γ₁N₁ + γ₂N₂ + γ₀`
pub fn build_h_pseudoboson(d: &DerivedConstants, trunc: &TruncationSpec) -> Result<FockOperator> {
    let pb = build_pseudo(trunc, d)?;
    let n1 = build_number(&pb.a[0], &pb.b[0])?;
    let n2 = build_number(&pb.a[1], &pb.b[1])?;
    let id = FockOperator::identity(*trunc);
    Ok(
        FockOperator::lincomb(&[(re(d.gamma1), &n1), (re(d.gamma2), &n2), (d.gamma0, &id)])?
            .with_label("H[pseudo-boson]"),
    )
}

/// Per-mode coefficients of `Σ_i c_i â_i + d_i â_i†` in `A_j`, `A_j†`.
pub fn mode_coefficients(c: [Complex64; 2], d: [Complex64; 2]) -> ([Complex64; 2], [Complex64; 2]) {
    let mut cp = [ZERO; 2];
    let mut dp = [ZERO; 2];
    for j in 0..2 {
        for i in 0..2 {
            cp[j] += c[i] * MODE_MIX[i][j];
            dp[j] += d[i] * MODE_MIX[i][j].conj();
        }
    }
    (cp, dp)
}

fn mode_generator(dim: usize, c: Complex64, d: Complex64) -> Result<ComplexMatrix> {
    let (lo, ra) = mode_ladder(dim)?;
    lo.scale(c).checked_add(&ra.scale(d))
}

/// `exp(Σ_i c_i â_i + d_i â_i†)` as a per-mode Kronecker product.
pub fn exp_linear(
    trunc: &TruncationSpec,
    label: impl Into<String>,
    c: [Complex64; 2],
    d: [Complex64; 2],
) -> Result<FockOperator> {
    let (cp, dp) = mode_coefficients(c, d);
    let left = matexp(&mode_generator(trunc.dim1, cp[0], dp[0])?)?;
    let right = matexp(&mode_generator(trunc.dim2, cp[1], dp[1])?)?;
    Ok(FockOperator::from_kron(*trunc, label, ONE, left, right))
}

fn envelope_warning(nu: [Complex64; 2], mu: [Complex64; 2]) -> Option<String> {
    let delta = (0..2).map(|i| (nu[i] - mu[i]).norm()).fold(0.0, f64::max);
    let shift = nu.iter().chain(&mu).map(|z| z.norm()).fold(0.0, f64::max);
    if delta > ENVELOPE_DELTA || shift > ENVELOPE_SHIFT {
        Some(format!(
            "outside accuracy envelope: max|ν−μ| = {delta:.3} (limit {ENVELOPE_DELTA}), \
             max|ν|,|μ| = {shift:.3} (limit {ENVELOPE_SHIFT})"
        ))
    } else {
        None
    }
}

/// `D(z) = exp(Σ z̄_i â_i − z_i â_i†)`, unitary.
pub fn build_d(z: [Complex64; 2], trunc: &TruncationSpec) -> Result<FockOperator> {
    exp_linear(trunc, "D", [z[0].conj(), z[1].conj()], [-z[0], -z[1]])
}

/// `V(ν,μ) = exp(Σ μ̄_i â_i − ν_i â_i†)`.
pub fn build_v(nu: [Complex64; 2], mu: [Complex64; 2], trunc: &TruncationSpec) -> Result<FockOperator> {
    Ok(
        exp_linear(trunc, "V", [mu[0].conj(), mu[1].conj()], [-nu[0], -nu[1]])?
            .with_warning(envelope_warning(nu, mu)),
    )
}

/// `V⁻¹(ν,μ) = exp(−Σ μ̄_i â_i − ν_i â_i†)`, the exact inverse of the
/// truncated [`build_v`].
pub fn build_v_inverse(
    nu: [Complex64; 2],
    mu: [Complex64; 2],
    trunc: &TruncationSpec,
) -> Result<FockOperator> {
    Ok(
        exp_linear(trunc, "V⁻¹", [-mu[0].conj(), -mu[1].conj()], [nu[0], nu[1]])?
            .with_warning(envelope_warning(nu, mu)),
    )
}

/// `T(ν,μ) = V(ν,μ)·V⁻¹(μ,ν)`
pub fn build_t(nu: [Complex64; 2], mu: [Complex64; 2], trunc: &TruncationSpec) -> Result<FockOperator> {
    let v = build_v(nu, mu, trunc)?;
    let vi = build_v_inverse(mu, nu, trunc)?;
    Ok(v.compose(&vi)?.with_label("T"))
}

/// `κ` with `κ⁻¹ = ⟨D(ν)e₀, K D(ν)e₀⟩` for the product `K` in [`build_theta`].
pub fn theta_prefactor(nu: [Complex64; 2], mu: [Complex64; 2]) -> f64 {
    let s: f64 = (0..2).map(|i| ((nu[i] - mu[i]).conj() * nu[i]).re).sum();
    (2.0 * s).exp()
}

/// `Θ(ν,μ) = κ ∏_i exp(δ_i â_i†) exp(δ̄_i â_i)` with `δ = ν − μ`.
///
/// Each factor is a triangular exponential of a nilpotent mode matrix, so the
/// truncated `Θ` is the exact compression of the full operator.
pub fn build_theta(nu: [Complex64; 2], mu: [Complex64; 2], trunc: &TruncationSpec) -> Result<FockOperator> {
    let delta = [nu[0] - mu[0], nu[1] - mu[1]];
    let (cp, dp) = mode_coefficients([delta[0].conj(), delta[1].conj()], delta);
    let factor = |dim: usize, c: Complex64, d: Complex64| -> Result<ComplexMatrix> {
        let (lo, ra) = mode_ladder(dim)?;
        Ok(matexp(&ra.scale(d))?.matmul(&matexp(&lo.scale(c))?)?)
    };
    let left = factor(trunc.dim1, cp[0], dp[0])?;
    let right = factor(trunc.dim2, cp[1], dp[1])?;
    Ok(
        FockOperator::from_kron(*trunc, "Θ", re(theta_prefactor(nu, mu)), left, right)
            .with_warning(envelope_warning(nu, mu)),
    )
}

/// All operators needed by the verification suite at one truncation.
#[derive(Clone, Debug)]
pub struct System {
    pub params: ModelParams,
    pub consts: DerivedConstants,
    pub trunc: TruncationSpec,
    pub pseudo: PseudoBosons,
    pub number: [FockOperator; 2],
    pub h_canonical: FockOperator,
    pub h_pseudo: FockOperator,
}

impl System {
    pub fn new(params: &ModelParams, consts: &DerivedConstants, trunc: &TruncationSpec) -> Result<Self> {
        trunc.validate()?;
        let pseudo = build_pseudo(trunc, consts)?;
        let number = [
            build_number(&pseudo.a[0], &pseudo.b[0])?,
            build_number(&pseudo.a[1], &pseudo.b[1])?,
        ];
        Ok(Self {
            params: *params,
            consts: *consts,
            trunc: *trunc,
            h_canonical: build_h_canonical(params, consts, trunc)?,
            h_pseudo: build_h_pseudoboson(consts, trunc)?,
            pseudo,
            number,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::inner;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn small(dim: usize, margin: usize) -> TruncationSpec {
        TruncationSpec::new(dim, dim, margin).unwrap()
    }

    #[test]
    fn ladder_entries() {
        let (lo, ra) = mode_ladder(2).unwrap();
        assert_eq!(lo[(0, 1)], c(1.0, 0.0));
        assert_eq!(lo[(1, 0)], c(0.0, 0.0));
        let (lo4, _) = mode_ladder(4).unwrap();
        assert_eq!(lo4[(2, 3)], c(3f64.sqrt(), 0.0));
        assert_eq!(ra, lo.adjoint());
        assert!(mode_ladder(1).is_err());
    }

    #[test]
    fn truncated_commutator_has_corner_defect() {
        let (lo, ra) = mode_ladder(5).unwrap();
        let comm = &(&lo * &ra) - &(&ra * &lo);
        for n in 0..4 {
            assert!((comm[(n, n)] - 1.0).norm() < 1e-15);
        }
        assert!((comm[(4, 4)] + 4.0).norm() < 1e-14);
    }

    #[test]
    fn bosonic_structure() {
        let t = small(3, 1);
        let b = build_bosonic(&t).unwrap();
        let v = b.a[1].apply(&ComplexVector::basis(9, t.flat(0, 1))).unwrap();
        assert_eq!(v[t.flat(0, 0)], c(1.0, 0.0));
        for n2 in 0..3 {
            assert_eq!(b.a[0].apply(&ComplexVector::basis(9, t.flat(0, n2))).unwrap().norm(), 0.0);
        }
        let comm = commutator(&b.a[0], &b.a[1]).unwrap();
        assert_eq!(comm.as_sparse().unwrap().nnz(), 0);
    }

    #[test]
    fn xp_canonical_relations() {
        let t = small(8, 2);
        let p = ModelParams::default();
        let d = DerivedConstants::derive(&p).unwrap();
        let xp = build_xp(&t, &d, &p).unwrap();
        let comm = commutator(&xp.x[0], &xp.p[0]).unwrap();
        let ihbar = FockOperator::identity(t).scale(c(0.0, 1.0));
        assert!(comm.interior_distance(&ihbar).unwrap() < 1e-14);
        assert_eq!(commutator(&xp.x[0], &xp.x[1]).unwrap().as_sparse().unwrap().nnz(), 0);
        let x1 = xp.x[0].matrix();
        assert!((x1[(t.flat(1, 0), t.flat(2, 0))] - 1.0).norm() < 1e-15);
        assert!((x1[(t.flat(0, 3), t.flat(1, 3))] - 0.5f64.sqrt()).norm() < 1e-15);
    }

    #[test]
    fn pseudo_routes_agree() {
        let t = small(6, 2);
        let p = reduce_to_hhat_params();
        let d = DerivedConstants::derive(&p).unwrap();
        let x = build_pseudo(&t, &d).unwrap();
        let y = build_pseudo_shifted(&t, &d).unwrap();
        for i in 0..2 {
            assert!(x.a[i].matrix().max_abs_diff(&y.a[i].matrix()) < 1e-15);
            assert!(x.b[i].matrix().max_abs_diff(&y.b[i].matrix()) < 1e-15);
        }
    }

    fn reduce_to_hhat_params() -> ModelParams {
        crate::model::reduce_to_hhat(0.4, 0.7, 0.3)
    }

    #[test]
    fn pseudo_commutators_on_interior() {
        let t = small(4, 1);
        let p = ModelParams::atomic_real(0.3, [0.2, 0.1, 0.1, 0.2]);
        let d = DerivedConstants::derive(&p).unwrap();
        let pb = build_pseudo(&t, &d).unwrap();
        let id = FockOperator::identity(t);
        let zero = id.scale(c(0.0, 0.0));
        for j in 0..2 {
            for k in 0..2 {
                let ab = commutator(&pb.a[j], &pb.b[k]).unwrap();
                let want = if j == k { &id } else { &zero };
                assert!(ab.interior_distance(want).unwrap() < 1e-14);
            }
        }
        // Off the top levels the cross commutator vanishes identically; the
        // truncation corner defect of [A_j, A_j†] survives only at n_j = dim − 1.
        let ab = commutator(&pb.a[0], &pb.b[1]).unwrap().matrix();
        for k in 0..t.dim() {
            for l in 0..t.dim() {
                let (n1, n2) = t.unflat(k);
                if n1 < 3 && n2 < 3 {
                    assert!(ab[(k, l)].norm() < 1e-15);
                }
            }
        }
    }

    #[test]
    fn number_operator_trace_on_interior() {
        let t = small(4, 1);
        let d = DerivedConstants::derive(&ModelParams::default()).unwrap();
        let pb = build_pseudo(&t, &d).unwrap();
        let n1 = build_number(&pb.a[0], &pb.b[0]).unwrap().matrix();
        let idx = t.interior_indices();
        let tr: Complex64 = idx.iter().map(|&k| n1[(k, k)]).sum();
        // Interior n1, n2 ∈ {0,1,2}; N₁ = â₁†â₁ has diagonal (n₁ + n₂)/2.
        let want: f64 = idx
            .iter()
            .map(|&k| {
                let (a, b) = t.unflat(k);
                (a + b) as f64 / 2.0
            })
            .sum();
        assert!((tr.re - want).abs() < 1e-14 && tr.im.abs() < 1e-14);
    }

    #[test]
    fn free_hamiltonians_coincide() {
        let t = small(6, 2);
        let p = ModelParams::default();
        let d = DerivedConstants::derive(&p).unwrap();
        let hc = build_h_canonical(&p, &d, &t).unwrap();
        let hp = build_h_pseudoboson(&d, &t).unwrap();
        assert!(hc.interior_distance(&hp).unwrap() < 1e-13);
        let m = hc.matrix();
        for k in t.interior_indices() {
            let (n1, n2) = t.unflat(k);
            assert!((m[(k, k)] - (n1 + n2 + 1) as f64).norm() < 1e-13);
        }
    }

    #[test]
    fn canonical_hamiltonian_is_non_normal() {
        let t = small(6, 2);
        let p = ModelParams::atomic_real(0.5, [0.2, 0.1, 0.3, -0.1]);
        let d = DerivedConstants::derive(&p).unwrap();
        let h = build_h_canonical(&p, &d, &t).unwrap().matrix();
        let comm = &(&h * &h.adjoint()) - &(&h.adjoint() * &h);
        assert!(comm.frob_norm() > 1e-3);
    }

    #[test]
    fn displacement_is_unitary_with_coherent_overlap() {
        let t = small(32, 8);
        let z = [c(0.6, -0.3), c(0.0, 0.0)];
        let dz = build_d(z, &t).unwrap();
        let m = dz.matrix();
        let u = &m * &m.adjoint();
        assert!(u.max_abs_diff(&ComplexMatrix::identity(t.dim())) < 1e-12);
        let e0 = ComplexVector::basis(t.dim(), 0);
        let ov = inner(&e0, &dz.apply(&e0).unwrap()).unwrap();
        assert!((ov - (-z[0].norm_sqr() / 2.0).exp()).norm() < 1e-10);
    }

    #[test]
    fn v_reduces_to_d_and_theta_to_identity() {
        let t = small(10, 2);
        let nu = [c(0.1, 0.2), c(-0.3, 0.05)];
        let v = build_v(nu, nu, &t).unwrap();
        let dn = build_d(nu, &t).unwrap();
        assert!(v.matrix().max_abs_diff(&dn.matrix()) < 1e-14);
        let theta = build_theta(nu, nu, &t).unwrap();
        assert_eq!(theta.matrix(), ComplexMatrix::identity(t.dim()));
    }

    #[test]
    fn kron_solver_round_trip() {
        let t = small(8, 2);
        let nu = [c(0.1, 0.2), c(-0.3, 0.05)];
        let mu = [c(0.2, -0.1), c(0.1, 0.0)];
        let theta = build_theta(nu, mu, &t).unwrap();
        let x: ComplexVector = (0..t.dim()).map(|k| c(k as f64 * 0.01, 1.0)).collect();
        let b = theta.apply(&x).unwrap();
        let got = theta.factor().unwrap().solve(&b).unwrap();
        assert!(got.sub(&x).norm() / x.norm() < 1e-12);
    }

    #[test]
    fn projector_ranks() {
        let t = small(5, 1);
        let rank = |m: usize| {
            interior_projector(&t, m)
                .unwrap()
                .as_sparse()
                .unwrap()
                .nnz()
        };
        assert_eq!(rank(0), 25);
        assert_eq!(rank(4), 1);
        assert_eq!(rank(2), 9);
        assert!(interior_projector(&t, 5).is_err());
    }
}
