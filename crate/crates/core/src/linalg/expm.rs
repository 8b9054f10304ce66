//! Matrix exponential by scaling and squaring with a diagonal Padé core
//! (degree 3, 5, 7, 9 or 13 chosen from the 1-norm, Higham 2005).

use num_complex::Complex64;

use super::dense::ComplexMatrix;
use super::lu::LuFactors;
use crate::error::{Error, Result};

const PADE3: [f64; 4] = [120.0, 60.0, 12.0, 1.0];
const PADE5: [f64; 6] = [30240.0, 15120.0, 3360.0, 420.0, 30.0, 1.0];
const PADE7: [f64; 8] = [
    17297280.0, 8648640.0, 1995840.0, 277200.0, 25200.0, 1512.0, 56.0, 1.0,
];
const PADE9: [f64; 10] = [
    17643225600.0,
    8821612800.0,
    2075673600.0,
    302702400.0,
    30270240.0,
    2162160.0,
    110880.0,
    3960.0,
    90.0,
    1.0,
];
const PADE13: [f64; 14] = [
    64764752532480000.0,
    32382376266240000.0,
    7771770303897600.0,
    1187353796428800.0,
    129060195264000.0,
    10559470521600.0,
    670442572800.0,
    33522128640.0,
    1323241920.0,
    40840800.0,
    960960.0,
    16380.0,
    182.0,
    1.0,
];

// Largest 1-norms for which each degree meets unit-roundoff backward error.
const THETA3: f64 = 1.495585217958292e-2;
const THETA5: f64 = 2.539398330063230e-1;
const THETA7: f64 = 9.504178996162932e-1;
const THETA9: f64 = 2.097847961257068;
const THETA13: f64 = 5.371920351148152;

fn c(x: f64) -> Complex64 {
    Complex64::new(x, 0.0)
}

fn axpy_into(acc: &mut ComplexMatrix, s: f64, m: &ComplexMatrix) {
    for (a, b) in acc.as_mut_slice().iter_mut().zip(m.as_slice()) {
        *a += b * s;
    }
}

fn add_identity(m: &mut ComplexMatrix, s: f64) {
    for i in 0..m.rows() {
        m[(i, i)] += c(s);
    }
}

/// Returns (U, V) with U odd and V even in `a`.
fn pade_low(a: &ComplexMatrix, coeffs: &[f64]) -> (ComplexMatrix, ComplexMatrix) {
    let n = a.rows();
    let a2 = a * a;
    let mut powers = vec![ComplexMatrix::identity(n), a2.clone()];
    let m = coeffs.len() - 1;
    while powers.len() * 2 <= m + 1 {
        let next = powers.last().unwrap() * &a2;
        powers.push(next);
    }
    let mut u_inner = ComplexMatrix::zeros(n, n);
    let mut v = ComplexMatrix::zeros(n, n);
    for (k, p) in powers.iter().enumerate() {
        if 2 * k + 1 <= m {
            axpy_into(&mut u_inner, coeffs[2 * k + 1], p);
        }
        if 2 * k <= m {
            axpy_into(&mut v, coeffs[2 * k], p);
        }
    }
    (a * &u_inner, v)
}

fn pade13(a: &ComplexMatrix) -> (ComplexMatrix, ComplexMatrix) {
    let b = &PADE13;
    let a2 = a * a;
    let a4 = &a2 * &a2;
    let a6 = &a2 * &a4;

    let mut w1 = a6.scale(c(b[13]));
    axpy_into(&mut w1, b[11], &a4);
    axpy_into(&mut w1, b[9], &a2);
    let mut w = &a6 * &w1;
    axpy_into(&mut w, b[7], &a6);
    axpy_into(&mut w, b[5], &a4);
    axpy_into(&mut w, b[3], &a2);
    add_identity(&mut w, b[1]);
    let u = a * &w;

    let mut z1 = a6.scale(c(b[12]));
    axpy_into(&mut z1, b[10], &a4);
    axpy_into(&mut z1, b[8], &a2);
    let mut v = &a6 * &z1;
    axpy_into(&mut v, b[6], &a6);
    axpy_into(&mut v, b[4], &a4);
    axpy_into(&mut v, b[2], &a2);
    add_identity(&mut v, b[0]);
    (u, v)
}

pub fn matexp(a: &ComplexMatrix) -> Result<ComplexMatrix> {
    if !a.is_square() {
        return Err(Error::usage(format!(
            "matexp: matrix is {}x{}, not square",
            a.rows(),
            a.cols()
        )));
    }
    let norm = a.one_norm();
    if !norm.is_finite() {
        return Err(Error::Numeric {
            message: "matexp: non-finite input".into(),
            norm,
        });
    }
    let n = a.rows();
    if n == 0 {
        return Ok(ComplexMatrix::zeros(0, 0));
    }

    let (u, v, squarings) = if norm <= THETA3 {
        let (u, v) = pade_low(a, &PADE3);
        (u, v, 0)
    } else if norm <= THETA5 {
        let (u, v) = pade_low(a, &PADE5);
        (u, v, 0)
    } else if norm <= THETA7 {
        let (u, v) = pade_low(a, &PADE7);
        (u, v, 0)
    } else if norm <= THETA9 {
        let (u, v) = pade_low(a, &PADE9);
        (u, v, 0)
    } else {
        let s = (norm / THETA13).log2().ceil().max(0.0) as i32;
        let scaled = a.scale(c(0.5f64.powi(s)));
        let (u, v) = pade13(&scaled);
        (u, v, s)
    };

    // exp ≈ (V - U)^{-1} (V + U)
    let q = &v - &u;
    let p = &v + &u;
    let lu = LuFactors::new(&q).map_err(|_| Error::Numeric {
        message: "matexp: Padé denominator is singular".into(),
        norm,
    })?;
    let mut r = lu.solve_matrix(&p)?;
    for _ in 0..squarings {
        r = &r * &r;
    }
    if !r.is_finite() {
        return Err(Error::Numeric {
            message: "matexp: overflow while squaring".into(),
            norm,
        });
    }
    Ok(r)
}
