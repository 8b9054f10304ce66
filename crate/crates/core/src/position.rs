//! Coordinate representation: Hermite synthesis, closed-form Gaussian vacua,
//! finite-difference annihilation residuals and quadrature overlaps.
//!
//! Lengths carry the scale `λ = √(Mω/ħ)`, so `ξ = λx` and
//! `A_j = (λx_j + λ⁻¹∂_j)/√2`. Grid values are stored row-major with `x₁`
//! as the slow index.

use num_complex::Complex64;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::linalg::{ComplexMatrix, ComplexVector};
use crate::model::DerivedConstants;
use crate::operators::MODE_MIX;
use crate::states::{FamilyKind, FockState};

const I: Complex64 = Complex64::new(0.0, 1.0);

/// Below this many points per axis the finite-difference residual is flagged.
pub const COARSE_POINTS: usize = 41;

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct GridSpec {
    pub x_min: f64,
    pub x_max: f64,
    pub points: usize,
}

impl GridSpec {
    pub fn new(x_min: f64, x_max: f64, points: usize) -> Result<Self> {
        let g = Self { x_min, x_max, points };
        g.validate()?;
        Ok(g)
    }

    /// `[−extent/λ, extent/λ]`.
    pub fn scaled(extent: f64, points: usize, d: &DerivedConstants) -> Result<Self> {
        let half = extent / d.length_scale;
        Self::new(-half, half, points)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.x_min < self.x_max) || !self.x_min.is_finite() || !self.x_max.is_finite() {
            return Err(Error::usage(format!("grid needs x_min < x_max, got [{}, {}]", self.x_min, self.x_max)));
        }
        if self.points < 3 || self.points % 2 == 0 {
            return Err(Error::usage(format!("grid needs an odd point count ≥ 3, got {}", self.points)));
        }
        Ok(())
    }

    pub fn step(&self) -> f64 {
        (self.x_max - self.x_min) / (self.points - 1) as f64
    }

    pub fn coords(&self) -> Vec<f64> {
        let h = self.step();
        (0..self.points).map(|i| self.x_min + h * i as f64).collect()
    }

    /// Same interval with `2(points − 1) + 1` points.
    pub fn refined(&self) -> Self {
        Self {
            points: 2 * (self.points - 1) + 1,
            ..*self
        }
    }
}

#[derive(Clone, Debug)]
pub struct GridFunction {
    pub grid: GridSpec,
    pub values: Vec<Complex64>,
}

impl GridFunction {
    pub fn from_fn(grid: GridSpec, f: impl Fn(f64, f64) -> Complex64) -> Self {
        let xs = grid.coords();
        let values = xs
            .iter()
            .flat_map(|&x1| xs.iter().map(move |&x2| (x1, x2)))
            .map(|(x1, x2)| f(x1, x2))
            .collect();
        Self { grid, values }
    }

    pub fn at(&self, i1: usize, i2: usize) -> Complex64 {
        self.values[i1 * self.grid.points + i2]
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    pub fn norm(&self) -> f64 {
        overlap(self, self).map(|z| z.re.max(0.0).sqrt()).unwrap_or(f64::NAN)
    }

    pub fn scale(&self, s: Complex64) -> Self {
        Self {
            grid: self.grid,
            values: self.values.iter().map(|z| z * s).collect(),
        }
    }

    /// Rows `(x1, x2, re, im)`.
    pub fn rows(&self) -> impl Iterator<Item = (f64, f64, f64, f64)> + '_ {
        let xs = self.grid.coords();
        let n = self.grid.points;
        self.values.iter().enumerate().map(move |(k, z)| (xs[k / n], xs[k % n], z.re, z.im))
    }
}

/// Orthonormal Hermite function `ψ_n(ξ)` by the three-term recurrence.
pub fn hermite_function(n: usize, xi: f64) -> f64 {
    hermite_all(n, xi)[n]
}

/// `ψ_0(ξ) … ψ_n(ξ)`.
pub fn hermite_all(n: usize, xi: f64) -> Vec<f64> {
    let mut out = Vec::with_capacity(n + 1);
    out.push(std::f64::consts::PI.powf(-0.25) * (-0.5 * xi * xi).exp());
    if n >= 1 {
        out.push(std::f64::consts::SQRT_2 * xi * out[0]);
    }
    for k in 1..n {
        let kf = k as f64;
        let next = xi * (2.0 / (kf + 1.0)).sqrt() * out[k] - (kf / (kf + 1.0)).sqrt() * out[k - 1];
        out.push(next);
    }
    out
}

/// `√λ ψ_n(λx)` for `n < levels`, as a `levels × points` table.
fn hermite_table(levels: usize, xs: &[f64], lambda: f64) -> ComplexMatrix {
    let mut m = ComplexMatrix::zeros(levels, xs.len());
    for (j, &x) in xs.iter().enumerate() {
        for (n, v) in hermite_all(levels - 1, lambda * x).into_iter().enumerate() {
            m[(n, j)] = Complex64::new(lambda.sqrt() * v, 0.0);
        }
    }
    m
}

/// `Σ c(n₁,n₂) ψ_{n₁}(x₁)ψ_{n₂}(x₂)` on the grid.
pub fn synthesize(s: &FockState, g: &GridSpec, d: &DerivedConstants) -> Result<GridFunction> {
    g.validate()?;
    let t = s.trunc;
    let xs = g.coords();
    let h1 = hermite_table(t.dim1, &xs, d.length_scale);
    let h2 = if t.dim2 == t.dim1 {
        h1.clone()
    } else {
        hermite_table(t.dim2, &xs, d.length_scale)
    };
    let c = ComplexMatrix::from_row_major(t.dim1, t.dim2, s.coeffs.as_slice().to_vec())?;
    let values = h1.transpose().matmul(&c)?.matmul(&h2)?;
    Ok(GridFunction {
        grid: *g,
        values: values.as_slice().to_vec(),
    })
}

/// Linear coefficients `(c₁, c₂)` of the Gaussian `exp(−λ²|x|²/2 + c₁x₁ + c₂x₂)`
/// annihilated by `a₁, a₂` (`Phi`) or by `b₁†, b₂†` (`Psi`).
pub fn gaussian_coefficients(d: &DerivedConstants, kind: FamilyKind) -> [Complex64; 2] {
    let l = d.length_scale;
    let [b1, b2, b3, b4] = d.beta;
    match kind {
        FamilyKind::Phi => [-I * l * (b1 + b2), l * (b2 - b1)],
        FamilyKind::Psi => [I * l * (b3.conj() - b4.conj()), l * (b3.conj() + b4.conj())],
    }
}

/// Unit-norm closed-form `(φ₀, Ψ₀)`.
pub fn closed_form_vacua(d: &DerivedConstants, g: &GridSpec) -> Result<(GridFunction, GridFunction)> {
    g.validate()?;
    let gaussian = |kind| {
        let [c1, c2] = gaussian_coefficients(d, kind);
        let l2 = d.length_scale * d.length_scale;
        let f = GridFunction::from_fn(*g, |x1, x2| {
            (Complex64::new(-0.5 * l2 * (x1 * x1 + x2 * x2), 0.0) + c1 * x1 + c2 * x2).exp()
        });
        let n = f.norm();
        f.scale(Complex64::new(1.0 / n, 0.0))
    };
    Ok((gaussian(FamilyKind::Phi), gaussian(FamilyKind::Psi)))
}

#[derive(Clone, Debug, Serialize)]
pub struct PdeResidual {
    /// `max |(Kf)(x)| / max |f|` over interior grid points and both operators.
    pub residual: f64,
    pub warning: Option<String>,
}

/// Applies the two annihilation operators (`a₁, a₂` for `Phi`, `b₁†, b₂†`
/// for `Psi`) by second-order central differences.
pub fn pde_residual(f: &GridFunction, d: &DerivedConstants, kind: FamilyKind) -> PdeResidual {
    let g = f.grid;
    let n = g.points;
    let h = g.step();
    let l = d.length_scale;
    let xs = g.coords();
    // a_i = Σ_j L_ij A_j + ν_i and b_i† = Σ_j L_ij A_j + μ_i.
    let shifts = match kind {
        FamilyKind::Phi => d.nu,
        FamilyKind::Psi => d.mu,
    };
    let mut worst: f64 = 0.0;
    for i1 in 1..n - 1 {
        for i2 in 1..n - 1 {
            let fv = f.at(i1, i2);
            let d1 = (f.at(i1 + 1, i2) - f.at(i1 - 1, i2)) / (2.0 * h);
            let d2 = (f.at(i1, i2 + 1) - f.at(i1, i2 - 1)) / (2.0 * h);
            let a = [
                (fv * (l * xs[i1]) + d1 / l) * std::f64::consts::FRAC_1_SQRT_2,
                (fv * (l * xs[i2]) + d2 / l) * std::f64::consts::FRAC_1_SQRT_2,
            ];
            for i in 0..2 {
                let r = MODE_MIX[i][0] * a[0] + MODE_MIX[i][1] * a[1] + shifts[i] * fv;
                worst = worst.max(r.norm());
            }
        }
    }
    let scale = f.max_abs();
    PdeResidual {
        residual: if scale == 0.0 { 0.0 } else { worst / scale },
        warning: (n < COARSE_POINTS).then(|| format!("{n} points per axis is too coarse for the difference stencil")),
    }
}

/// Observed order `log₂(r_h / r_{h/2})` of the residual under grid doubling.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct Convergence {
    pub coarse: f64,
    pub fine: f64,
    pub order: f64,
}

pub fn pde_convergence(d: &DerivedConstants, g: &GridSpec, kind: FamilyKind) -> Result<Convergence> {
    let pick = |grid: &GridSpec| -> Result<f64> {
        let (phi, psi) = closed_form_vacua(d, grid)?;
        let f = if kind == FamilyKind::Phi { phi } else { psi };
        Ok(pde_residual(&f, d, kind).residual)
    };
    let coarse = pick(g)?;
    let fine = pick(&g.refined())?;
    Ok(Convergence {
        coarse,
        fine,
        order: (coarse / fine).log2(),
    })
}

/// 2D trapezoid rule for `∫ conj(f)·h`.
pub fn overlap(f: &GridFunction, h: &GridFunction) -> Result<Complex64> {
    if f.grid != h.grid {
        return Err(Error::usage("overlap of functions on different grids"));
    }
    let n = f.grid.points;
    let w = |i: usize| if i == 0 || i == n - 1 { 0.5 } else { 1.0 };
    let step = f.grid.step();
    let mut acc = Complex64::new(0.0, 0.0);
    for i1 in 0..n {
        for i2 in 0..n {
            acc += f.at(i1, i2).conj() * h.at(i1, i2) * (w(i1) * w(i2));
        }
    }
    Ok(acc * step * step)
}

/// Relative L² distance `‖s·f − reference‖/‖reference‖` after fitting the
/// complex scalar `s` by least squares.
pub fn aligned_distance(f: &GridFunction, reference: &GridFunction) -> Result<(f64, Complex64)> {
    let ff = overlap(f, f)?;
    if ff.re == 0.0 {
        return Err(Error::usage("cannot align a zero function"));
    }
    let s = overlap(f, reference)? / ff;
    let diff = GridFunction {
        grid: f.grid,
        values: f
            .values
            .iter()
            .zip(&reference.values)
            .map(|(a, b)| a * s - b)
            .collect(),
    };
    Ok((diff.norm() / reference.norm(), s))
}

/// Coefficient vector back in the Fock basis by quadrature, `c_n = ⟨e_n, f⟩`.
pub fn project(f: &GridFunction, d: &DerivedConstants, dim1: usize, dim2: usize) -> Result<ComplexVector> {
    let xs = f.grid.coords();
    let n = f.grid.points;
    let h1 = hermite_table(dim1, &xs, d.length_scale);
    let h2 = hermite_table(dim2, &xs, d.length_scale);
    let w: Vec<f64> = (0..n)
        .map(|i| f.grid.step() * if i == 0 || i == n - 1 { 0.5 } else { 1.0 })
        .collect();
    let weighted = ComplexMatrix::from_fn(n, n, |i, j| f.at(i, j) * (w[i] * w[j]));
    let c = h1.matmul(&weighted)?.matmul(&h2.transpose())?;
    Ok(ComplexVector::from_vec(c.as_slice().to_vec()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{reduce_to_hhat, ModelParams, TruncationSpec};
    use crate::states::{vacuum_phi, vacuum_psi};

    fn unit() -> DerivedConstants {
        DerivedConstants::derive(&ModelParams::default()).unwrap()
    }

    #[test]
    fn hermite_values() {
        assert!((hermite_function(0, 0.0) - std::f64::consts::PI.powf(-0.25)).abs() < 1e-15);
        assert_eq!(hermite_function(1, 0.0), 0.0);
        // ψ₂(ξ) = (2ξ² − 1) π^{-1/4} e^{-ξ²/2} / √2
        let xi: f64 = 0.7;
        let expected = (2.0 * xi * xi - 1.0) * std::f64::consts::PI.powf(-0.25) * (-0.5 * xi * xi).exp()
            / std::f64::consts::SQRT_2;
        assert!((hermite_function(2, xi) - expected).abs() < 1e-15);
    }

    #[test]
    fn hermite_orthonormal_by_trapezoid() {
        let g = GridSpec::new(-8.0, 8.0, 401).unwrap();
        let xs = g.coords();
        let h = g.step();
        let table: Vec<Vec<f64>> = xs.iter().map(|&x| hermite_all(10, x)).collect();
        for a in 0..=10 {
            for b in 0..=10 {
                let s: f64 = table.iter().map(|r| r[a] * r[b]).sum::<f64>() * h;
                let want = if a == b { 1.0 } else { 0.0 };
                assert!((s - want).abs() < 1e-8, "({a},{b}) {s}");
            }
        }
    }

    #[test]
    fn grid_validation() {
        assert!(GridSpec::new(-1.0, 1.0, 4).is_err());
        assert!(GridSpec::new(1.0, -1.0, 5).is_err());
        let g = GridSpec::new(-1.0, 1.0, 5).unwrap();
        assert_eq!(g.coords()[2], 0.0);
        assert_eq!(g.refined().points, 9);
    }

    #[test]
    fn ground_state_gaussian() {
        let d = unit();
        let g = GridSpec::scaled(6.0, 61, &d).unwrap();
        let t = TruncationSpec::square(8).unwrap();
        let e0 = FockState::new(ComplexVector::basis(t.dim(), 0), t, "e0");
        let s = synthesize(&e0, &g, &d).unwrap();
        let (phi, psi) = closed_form_vacua(&d, &g).unwrap();
        assert!(aligned_distance(&s, &phi).unwrap().0 < 1e-10);
        assert!(aligned_distance(&psi, &phi).unwrap().0 < 1e-12);
        let mid = g.points / 2;
        assert!((s.at(mid, mid).re - 1.0 / std::f64::consts::PI.sqrt()).abs() < 1e-14);
    }

    #[test]
    fn gaussian_ansatz_solves_the_linear_conditions() {
        // Substituting exp(−λ²r²/2 + c·x) turns A_j into multiplication by
        // c_j/(√2 λ); solve the resulting 2×2 system directly.
        let p = ModelParams::atomic(
            0.4,
            [Complex64::new(0.2, 0.1), Complex64::new(-0.1, 0.3), Complex64::new(0.05, 0.0), Complex64::new(0.1, -0.2)],
        );
        let d = DerivedConstants::derive(&p).unwrap();
        let l = d.length_scale;
        let solve = |rows: [[Complex64; 2]; 2], rhs: [Complex64; 2]| {
            // rows · (c / (√2 λ)) = rhs
            let det = rows[0][0] * rows[1][1] - rows[0][1] * rows[1][0];
            let y0 = (rhs[0] * rows[1][1] - rows[0][1] * rhs[1]) / det;
            let y1 = (rows[0][0] * rhs[1] - rhs[0] * rows[1][0]) / det;
            [y0 * std::f64::consts::SQRT_2 * l, y1 * std::f64::consts::SQRT_2 * l]
        };
        let phi = solve(MODE_MIX, [-d.nu[0], -d.nu[1]]);
        let psi = solve(MODE_MIX, [-d.mu[0], -d.mu[1]]);
        let got_phi = gaussian_coefficients(&d, FamilyKind::Phi);
        let got_psi = gaussian_coefficients(&d, FamilyKind::Psi);
        for i in 0..2 {
            assert!((phi[i] - got_phi[i]).norm() < 1e-14);
            assert!((psi[i] - got_psi[i]).norm() < 1e-14);
        }
    }

    #[test]
    fn unit_scale_matches_the_printed_exponents() {
        let d = DerivedConstants::derive(&ModelParams::atomic_real(0.0, [0.1, 0.2, 0.3, -0.1])).unwrap();
        let [b1, b2, b3, b4] = d.beta;
        let [c1, c2] = gaussian_coefficients(&d, FamilyKind::Phi);
        assert!((c1 - (-I * (b1 + b2))).norm() < 1e-15);
        assert!((c2 - (-(b1 - b2))).norm() < 1e-15);
        let [e1, e2] = gaussian_coefficients(&d, FamilyKind::Psi);
        assert!((e1 - I * (b3 - b4)).norm() < 1e-15);
        assert!((e2 - (b3 + b4)).norm() < 1e-15);
    }

    #[test]
    fn fock_vacua_match_closed_forms() {
        let p = reduce_to_hhat(0.21, 0.2, 0.0);
        let d = DerivedConstants::derive(&p).unwrap();
        let t = TruncationSpec::new(32, 32, 8).unwrap();
        let g = GridSpec::scaled(6.0, 201, &d).unwrap();
        let (phi_c, psi_c) = closed_form_vacua(&d, &g).unwrap();
        let phi = synthesize(&vacuum_phi(&d, &t).unwrap(), &g, &d).unwrap();
        let (psi0, _) = vacuum_psi(&d, &t).unwrap();
        let psi = synthesize(&psi0, &g, &d).unwrap();
        assert!(aligned_distance(&phi, &phi_c).unwrap().0 < 1e-6);
        assert!(aligned_distance(&psi, &psi_c).unwrap().0 < 1e-6);
        let fock = crate::linalg::inner(&vacuum_phi(&d, &t).unwrap().coeffs, &psi0.coeffs).unwrap();
        assert!((overlap(&phi, &psi).unwrap() - fock).norm() < 1e-5);
    }

    #[test]
    fn difference_residual_is_second_order() {
        let d = DerivedConstants::derive(&ModelParams::atomic_real(0.3, [0.32, 0.1, -0.1, -0.15])).unwrap();
        let g = GridSpec::scaled(6.0, 201, &d).unwrap();
        for kind in [FamilyKind::Phi, FamilyKind::Psi] {
            let c = pde_convergence(&d, &g, kind).unwrap();
            assert!(c.coarse < 1e-3, "{c:?}");
            assert!((c.order - 2.0).abs() < 0.05, "{c:?}");
        }
        let (phi, _) = closed_form_vacua(&d, &GridSpec::scaled(6.0, 21, &d).unwrap()).unwrap();
        assert!(pde_residual(&phi, &d, FamilyKind::Phi).warning.is_some());
    }

    #[test]
    fn projection_recovers_coefficients() {
        let d = unit();
        let t = TruncationSpec::square(6).unwrap();
        let mut v = ComplexVector::zeros(t.dim());
        v[t.flat(1, 2)] = Complex64::new(0.6, 0.0);
        v[t.flat(0, 0)] = Complex64::new(0.0, 0.8);
        let s = FockState::new(v.clone(), t, "mix");
        let g = GridSpec::scaled(8.0, 161, &d).unwrap();
        let back = project(&synthesize(&s, &g, &d).unwrap(), &d, 6, 6).unwrap();
        assert!(back.sub(&v).norm() < 1e-8);
    }
}
