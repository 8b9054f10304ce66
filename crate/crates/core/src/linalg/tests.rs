use approx::assert_relative_eq;
use num_complex::Complex64;

use super::*;
use crate::error::Error;

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

fn creation(dim: usize) -> ComplexMatrix {
    ComplexMatrix::from_fn(dim, dim, |i, j| {
        if i == j + 1 {
            c((i as f64).sqrt(), 0.0)
        } else {
            c(0.0, 0.0)
        }
    })
}

#[test]
fn kron_maps_flat_index() {
    let a = creation(3);
    let k = kron(&a, &ComplexMatrix::identity(3)).unwrap();
    // (n1, n2) = (0, 1) has flat index 1 and lands on (1, 1), flat 4.
    let out = k.matvec(&ComplexVector::basis(9, 1)).unwrap();
    assert_relative_eq!(out[4].re, 1.0);
    assert_relative_eq!(out.norm(), 1.0);
}

#[test]
fn kron_rejects_empty() {
    let e = ComplexMatrix::zeros(0, 0);
    assert!(kron(&e, &ComplexMatrix::identity(2)).is_err());
}

#[test]
fn kron_apply_matches_kron() {
    let a = ComplexMatrix::from_fn(3, 3, |i, j| c(i as f64 + 0.5, j as f64 - 1.0));
    let b = ComplexMatrix::from_fn(2, 2, |i, j| c((i * j) as f64, 1.0));
    let v: ComplexVector = (0..6).map(|k| c(k as f64, -(k as f64) / 3.0)).collect();
    let full = kron(&a, &b).unwrap().matvec(&v).unwrap();
    let fast = kron_apply(&a, &b, v.as_slice()).unwrap();
    assert!(full.sub(&fast).norm() < 1e-13);
}

#[test]
fn matexp_of_creation_column_zero() {
    let e = matexp(&creation(3)).unwrap();
    assert_relative_eq!(e[(0, 0)].re, 1.0, epsilon = 1e-14);
    assert_relative_eq!(e[(1, 0)].re, 1.0, epsilon = 1e-14);
    assert_relative_eq!(e[(2, 0)].re, std::f64::consts::FRAC_1_SQRT_2, epsilon = 1e-14);
}

#[test]
fn matexp_diagonal_and_large_norm() {
    let d = ComplexMatrix::from_diag(&[c(0.0, 1.0), c(-3.0, 0.0), c(7.5, 0.25)]);
    let e = matexp(&d).unwrap();
    for (i, z) in [c(0.0, 1.0), c(-3.0, 0.0), c(7.5, 0.25)].iter().enumerate() {
        let want = z.exp();
        assert!((e[(i, i)] - want).norm() < 1e-12 * want.norm());
    }
    // Rotation generator: exp([[0, -t], [t, 0]]) with t beyond every Padé threshold.
    let t = 20.0;
    let g = ComplexMatrix::from_fn(2, 2, |i, j| match (i, j) {
        (0, 1) => c(-t, 0.0),
        (1, 0) => c(t, 0.0),
        _ => c(0.0, 0.0),
    });
    let r = matexp(&g).unwrap();
    assert!((r[(0, 0)].re - t.cos()).abs() < 1e-12);
    assert!((r[(1, 0)].re - t.sin()).abs() < 1e-12);
}

#[test]
fn matexp_inverse_pair() {
    let a = ComplexMatrix::from_fn(4, 4, |i, j| c(0.1 * (i as f64 - j as f64), 0.05 * (i + j) as f64));
    let prod = &matexp(&a).unwrap() * &matexp(&a.scale(c(-1.0, 0.0))).unwrap();
    assert!(prod.max_abs_diff(&ComplexMatrix::identity(4)) < 1e-13);
}

#[test]
fn matexp_rejects_bad_input() {
    assert!(matches!(matexp(&ComplexMatrix::zeros(2, 3)), Err(Error::Usage(_))));
    let mut m = ComplexMatrix::identity(2);
    m[(0, 1)] = c(f64::NAN, 0.0);
    assert!(matches!(matexp(&m), Err(Error::Numeric { .. })));
}

#[test]
fn solve_round_trip() {
    let a = ComplexMatrix::from_fn(5, 5, |i, j| {
        if i == j {
            c(4.0, 1.0)
        } else {
            c(1.0 / (1.0 + i as f64 + j as f64), -0.3)
        }
    });
    let x: ComplexVector = (0..5).map(|k| c(k as f64, 1.0)).collect();
    let b = a.matvec(&x).unwrap();
    let got = solve(&a, &b).unwrap();
    assert!(got.sub(&x).norm() < 1e-12);
}

#[test]
fn solve_detects_singular() {
    let mut a = ComplexMatrix::identity(3);
    a[(2, 2)] = c(0.0, 0.0);
    assert!(matches!(LuFactors::new(&a), Err(Error::Singular { column: 2, .. })));
}

#[test]
fn inner_conjugates_first_slot() {
    let e0 = ComplexVector::basis(2, 0);
    let ie0 = e0.scale(c(0.0, 1.0));
    let z = inner(&ie0, &e0).unwrap();
    assert_eq!(z, c(0.0, -1.0));
    assert!(inner(&e0, &ComplexVector::basis(3, 0)).is_err());
}

#[test]
fn frob_norm_identity() {
    assert_relative_eq!(frob_norm(&ComplexMatrix::identity(4)), 2.0);
}

#[test]
fn spectral_norm_of_creation() {
    // Largest singular value of the truncated creation operator is sqrt(dim - 1).
    assert_relative_eq!(spectral_norm(&creation(6)), 5f64.sqrt(), epsilon = 1e-8);
}

#[test]
fn sparse_round_trip_and_products() {
    let a = creation(5);
    let s = SparseMatrix::from_dense(&a);
    assert_eq!(s.nnz(), 4);
    assert_eq!(s.to_dense(), a);
    let prod = s.adjoint().matmul(&s).unwrap().to_dense();
    let dense = &a.adjoint() * &a;
    assert!(prod.max_abs_diff(&dense) < 1e-15);
    let ks = kron_sparse(&s, &SparseMatrix::identity(2)).unwrap().to_dense();
    assert_eq!(ks, kron(&a, &ComplexMatrix::identity(2)).unwrap());
    let v: ComplexVector = (0..5).map(|k| c(1.0, k as f64)).collect();
    assert!(s.matvec(v.as_slice()).unwrap().sub(&a.matvec(&v).unwrap()).norm() < 1e-15);
}

#[test]
fn sparse_sums_duplicates_and_drops_zeros() {
    let s = SparseMatrix::from_triplets(
        2,
        2,
        vec![(0, 0, c(1.0, 0.0)), (0, 0, c(-1.0, 0.0)), (1, 0, c(2.0, 0.0)), (1, 0, c(0.5, 0.0))],
    );
    assert_eq!(s.nnz(), 1);
    assert_eq!(s.get(1, 0), c(2.5, 0.0));
    assert_eq!(s.get(0, 0), c(0.0, 0.0));
}
