//! Physical parameters, derived constants and the closed-form spectrum.

use std::fmt;

use num_complex::Complex64;
use serde::Serialize;

use crate::error::{Error, Result};

const I: Complex64 = Complex64::new(0.0, 1.0);

/// Tolerance for the bosonic-case test `β₁ = −β̄₃`, `β₂ = β̄₄`.
pub const BOSONIC_TOL: f64 = 1e-12;

/// Largest `|ν_i − μ_i|` for which the non-unitary exponentials are trusted.
pub const ENVELOPE_DELTA: f64 = 0.6;
/// Largest `|ν_i|`, `|μ_i|` for which the non-unitary exponentials are trusted.
pub const ENVELOPE_SHIFT: f64 = 1.0;

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct ModelParams {
    pub m: f64,
    pub omega: f64,
    pub hbar: f64,
    pub theta: f64,
    pub alpha: [Complex64; 4],
}

impl Default for ModelParams {
    fn default() -> Self {
        Self::atomic(0.0, [Complex64::new(0.0, 0.0); 4])
    }
}

impl ModelParams {
    /// `m = ω = ħ = 1`.
    pub fn atomic(theta: f64, alpha: [Complex64; 4]) -> Self {
        Self {
            m: 1.0,
            omega: 1.0,
            hbar: 1.0,
            theta,
            alpha,
        }
    }

    pub fn atomic_real(theta: f64, alpha: [f64; 4]) -> Self {
        Self::atomic(theta, alpha.map(|a| Complex64::new(a, 0.0)))
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in [("m", self.m), ("omega", self.omega), ("hbar", self.hbar)] {
            if !(v > 0.0) || !v.is_finite() {
                return Err(Error::config(None, format!("{name} must be positive, got {v}")));
            }
        }
        if !self.theta.is_finite() {
            return Err(Error::config(None, "theta must be finite"));
        }
        if self.alpha.iter().any(|a| !a.re.is_finite() || !a.im.is_finite()) {
            return Err(Error::config(None, "alpha coefficients must be finite"));
        }
        Ok(())
    }

    pub fn has_real_alpha(&self) -> bool {
        self.alpha.iter().all(|a| a.im == 0.0)
    }

    /// `α = (A, iA, iB, B)` for real `A, B` in atomic units.
    pub fn is_hhat_form(&self) -> bool {
        let [a1, a2, a3, a4] = self.alpha;
        self.m == 1.0
            && self.omega == 1.0
            && self.hbar == 1.0
            && a1.im == 0.0
            && a4.im == 0.0
            && a2 == Complex64::new(0.0, a1.re)
            && a3 == Complex64::new(0.0, a4.re)
    }
}

impl fmt::Display for ModelParams {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "m={} omega={} hbar={} theta={} alpha=({}, {}, {}, {})",
            self.m,
            self.omega,
            self.hbar,
            self.theta,
            fmt_complex(self.alpha[0]),
            fmt_complex(self.alpha[1]),
            fmt_complex(self.alpha[2]),
            fmt_complex(self.alpha[3]),
        )
    }
}

pub(crate) fn fmt_complex(z: Complex64) -> String {
    if z.im == 0.0 {
        format!("{}", z.re)
    } else if z.im < 0.0 {
        format!("{}-{}i", z.re, -z.im)
    } else {
        format!("{}+{}i", z.re, z.im)
    }
}

/// Parameters of the reduced model: atomic units with
/// `α = (A, iA, iB, B)`.
pub fn reduce_to_hhat(a: f64, b: f64, theta: f64) -> ModelParams {
    ModelParams::atomic(
        theta,
        [
            Complex64::new(a, 0.0),
            Complex64::new(0.0, a),
            Complex64::new(0.0, b),
            Complex64::new(b, 0.0),
        ],
    )
}

/// How `β₁..β₄` are obtained from the linear coefficients.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Constraints {
    /// Matched term by term against the canonical Hamiltonian, including the
    /// momentum terms `α₂θ/2ħ`, `α₁θ/2ħ` produced by the Bopp shift. The
    /// `α₁ ± α₂` terms carry `Ω ± θmω`.
    #[default]
    Matched,
    /// The same matching with the shifted momentum terms dropped: `Ω` in place
    /// of `Ω ± θmω` in the `α₁ ± α₂` terms. Agrees with `Matched` only when
    /// `θ = 0` or `α₁ = α₂ = 0`.
    Unshifted,
}

impl fmt::Display for Constraints {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Constraints::Matched => "matched",
            Constraints::Unshifted => "unshifted",
        })
    }
}

impl std::str::FromStr for Constraints {
    type Err = String;
    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "matched" => Ok(Constraints::Matched),
            "unshifted" => Ok(Constraints::Unshifted),
            _ => Err(format!("unknown constraint form {s:?} (expected matched|unshifted)")),
        }
    }
}

/// Mutation hook for exercising the verification pipeline.
#[doc(hidden)]
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum Fault {
    #[default]
    None,
    /// Flips the sign of the `2ħmω` term in β₃.
    FlipBeta3Sign,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct DerivedConstants {
    /// `Ω = √(4ħ² + θ²m²ω²)`
    pub omega_big: f64,
    /// Effective mass `M = 2mħ/Ω`.
    pub mass_eff: f64,
    /// Inverse oscillator length `λ = √(Mω/ħ)`.
    pub length_scale: f64,
    pub beta: [Complex64; 4],
    pub gamma0: Complex64,
    pub gamma1: f64,
    pub gamma2: f64,
    /// `ν = (iβ₁, β₂)`
    pub nu: [Complex64; 2],
    /// `μ = (−iβ̄₃, β̄₄)`
    pub mu: [Complex64; 2],
    /// `1/⟨D(ν)e₀, D(μ)e₀⟩` in closed form.
    pub n_psi: Complex64,
}

impl DerivedConstants {
    pub fn derive(p: &ModelParams) -> Result<Self> {
        Self::derive_with(p, Constraints::Matched, Fault::None)
    }

    #[doc(hidden)]
    pub fn derive_with(p: &ModelParams, form: Constraints, fault: Fault) -> Result<Self> {
        p.validate()?;
        let (m, w, hb, th) = (p.m, p.omega, p.hbar, p.theta);
        let [a1, a2, a3, a4] = p.alpha;
        let omega_big = (4.0 * hb * hb + th * th * m * m * w * w).sqrt();
        let tmw = th * m * w;
        let s = (2.0 * m * omega_big * w.powi(3)).sqrt();
        let k = 2.0 * hb * m * w;
        let plus = (omega_big + tmw) * s;
        let minus = (omega_big - tmw) * s;
        let k3 = if fault == Fault::FlipBeta3Sign { -k } else { k };
        let (wp, wm) = match form {
            Constraints::Matched => (omega_big + tmw, omega_big - tmw),
            Constraints::Unshifted => (omega_big, omega_big),
        };

        let b1 = (wp * (a1 + a2) + k * (a3 - a4)) / plus;
        let b2 = (wm * (a1 - a2) + k * (a3 + a4)) / minus;
        let b3 = (wp * (a1 - a2) - k3 * (a3 + a4)) / plus;
        let b4 = (-wm * (a1 + a2) + k * (a3 - a4)) / minus;

        let gamma0 = 0.5
            * w
            * (omega_big * (1.0 + b1 * b3 - b2 * b4) + tmw * (b1 * b3 + b2 * b4));
        let gamma1 = 0.5 * w * (omega_big + tmw);
        let gamma2 = 0.5 * w * (omega_big - tmw);
        let mass_eff = 2.0 * m * hb / omega_big;
        let length_scale = (mass_eff * w / hb).sqrt();

        let nu = [I * b1, b2];
        let mu = [-I * b3.conj(), b4.conj()];
        let n_psi = closed_form_n_psi(nu, mu);
        let d = Self {
            omega_big,
            mass_eff,
            length_scale,
            beta: [b1, b2, b3, b4],
            gamma0,
            gamma1,
            gamma2,
            nu,
            mu,
            n_psi,
        };
        if !d.is_finite() {
            return Err(Error::Numeric {
                message: "derived constants are not finite".into(),
                norm: d.beta.iter().map(|b| b.norm()).fold(0.0, f64::max),
            });
        }
        Ok(d)
    }

    fn is_finite(&self) -> bool {
        let c = |z: &Complex64| z.re.is_finite() && z.im.is_finite();
        self.beta.iter().all(c) && c(&self.gamma0) && c(&self.n_psi)
    }

    /// `E = γ₁n₁ + γ₂n₂ + γ₀`
    pub fn energy(&self, n1: usize, n2: usize) -> Complex64 {
        self.gamma0 + self.gamma1 * n1 as f64 + self.gamma2 * n2 as f64
    }

    pub fn is_bosonic(&self) -> bool {
        let [b1, b2, b3, b4] = self.beta;
        (b1 + b3.conj()).norm() <= BOSONIC_TOL && (b2 - b4.conj()).norm() <= BOSONIC_TOL
    }

    /// `ν − μ`
    pub fn delta(&self) -> [Complex64; 2] {
        [self.nu[0] - self.mu[0], self.nu[1] - self.mu[1]]
    }

    /// Whether `V`, `Θ` and the ladder families are inside the validated
    /// accuracy envelope.
    pub fn within_envelope(&self) -> bool {
        let delta = self.delta();
        delta.iter().all(|d| d.norm() <= ENVELOPE_DELTA)
            && self
                .nu
                .iter()
                .chain(&self.mu)
                .all(|z| z.norm() <= ENVELOPE_SHIFT)
    }

    /// `exp(|β₁|²+|β₂|²−|β₃|²−|β₄|²−2Re(β₁β₂)−2Re(β₃β₄))`, an alternative
    /// expression for `N_Ψ²`. Reported next to the enforced value, never used.
    pub fn exponential_n_psi_squared(&self) -> f64 {
        let [b1, b2, b3, b4] = self.beta;
        (b1.norm_sqr() + b2.norm_sqr() - b3.norm_sqr() - b4.norm_sqr()
            - 2.0 * (b1 * b2).re
            - 2.0 * (b3 * b4).re)
            .exp()
    }

    /// Normalization of `Θ = κ ∏ exp(δ_i â_i†) exp(δ̄_i â_i)`, chosen so that
    /// `⟨φ₀, Θφ₀⟩ = 1`.
    pub fn theta_prefactor(&self) -> f64 {
        let delta = self.delta();
        let s: f64 = (0..2).map(|i| (delta[i].conj() * self.nu[i]).re).sum();
        (2.0 * s).exp()
    }
}

/// `1/⟨D(ν)e₀, D(μ)e₀⟩ = exp(Σ |ν_i|²/2 + |μ_i|²/2 − ν̄_i μ_i)`.
pub fn closed_form_n_psi(nu: [Complex64; 2], mu: [Complex64; 2]) -> Complex64 {
    (0..2)
        .map(|i| 0.5 * nu[i].norm_sqr() + 0.5 * mu[i].norm_sqr() - nu[i].conj() * mu[i])
        .sum::<Complex64>()
        .exp()
}

/// Truncated two-mode Fock space with an interior buffer of `margin` levels.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct TruncationSpec {
    pub dim1: usize,
    pub dim2: usize,
    pub margin: usize,
}

impl TruncationSpec {
    pub fn new(dim1: usize, dim2: usize, margin: usize) -> Result<Self> {
        let t = Self { dim1, dim2, margin };
        t.validate()?;
        Ok(t)
    }

    /// Square truncation with the default margin (a quarter of `dim`, at least 2).
    pub fn square(dim: usize) -> Result<Self> {
        Self::new(dim, dim, default_margin(dim))
    }

    pub fn validate(&self) -> Result<()> {
        if self.margin < 1 {
            return Err(Error::config(None, "margin must be at least 1"));
        }
        for (name, d) in [("dim1", self.dim1), ("dim2", self.dim2)] {
            if d < self.margin + 2 {
                return Err(Error::config(
                    None,
                    format!("{name} = {d} is smaller than margin + 2 = {}", self.margin + 2),
                ));
            }
        }
        Ok(())
    }

    pub fn dim(&self) -> usize {
        self.dim1 * self.dim2
    }

    pub fn flat(&self, n1: usize, n2: usize) -> usize {
        debug_assert!(n1 < self.dim1 && n2 < self.dim2);
        n1 * self.dim2 + n2
    }

    pub fn unflat(&self, k: usize) -> (usize, usize) {
        (k / self.dim2, k % self.dim2)
    }

    /// Highest interior level per mode.
    pub fn interior_max(&self) -> (usize, usize) {
        (self.dim1 - 1 - self.margin, self.dim2 - 1 - self.margin)
    }

    pub fn is_interior(&self, n1: usize, n2: usize) -> bool {
        let (m1, m2) = self.interior_max();
        n1 <= m1 && n2 <= m2
    }

    /// Flat indices of the interior states in flat order.
    pub fn interior_indices(&self) -> Vec<usize> {
        let (m1, m2) = self.interior_max();
        (0..=m1)
            .flat_map(|n1| (0..=m2).map(move |n2| n1 * self.dim2 + n2))
            .collect()
    }

    /// Same interior, `extra` more levels per mode beyond it.
    pub fn padded(&self, extra: usize) -> Self {
        Self {
            dim1: self.dim1 + extra,
            dim2: self.dim2 + extra,
            margin: self.margin + extra,
        }
    }
}

pub fn default_margin(dim: usize) -> usize {
    (dim / 4).max(2)
}

impl fmt::Display for TruncationSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "dim=({},{}) margin={}", self.dim1, self.dim2, self.margin)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn free_oscillator_constants() {
        let d = DerivedConstants::derive(&ModelParams::default()).unwrap();
        assert_eq!(d.omega_big, 2.0);
        assert_eq!(d.mass_eff, 1.0);
        assert_eq!(d.gamma0, c(1.0, 0.0));
        assert_eq!((d.gamma1, d.gamma2), (1.0, 1.0));
        assert_eq!(d.n_psi, c(1.0, 0.0));
        assert!(d.beta.iter().all(|b| *b == c(0.0, 0.0)));
        assert_eq!(d.energy(2, 3), c(6.0, 0.0));
    }

    #[test]
    fn noncommutative_only_constants() {
        let d = DerivedConstants::derive(&ModelParams::atomic_real(0.5, [0.0; 4])).unwrap();
        let om = 4.25f64.sqrt();
        assert_relative_eq!(d.omega_big, om, epsilon = 1e-15);
        assert_relative_eq!(d.omega_big, 2.0615528128088303, epsilon = 1e-12);
        assert_relative_eq!(d.gamma1, 1.2807764064044151, epsilon = 1e-12);
        assert_relative_eq!(d.gamma2, 0.7807764064044151, epsilon = 1e-12);
        assert_relative_eq!(d.gamma0.re, 1.0307764064044151, epsilon = 1e-12);
        assert_relative_eq!(d.energy(1, 0).re, 2.3115528128088303, epsilon = 1e-12);
    }

    #[test]
    fn gamma_sum_and_difference() {
        for &(m, w, hb, th) in &[(1.0, 1.0, 1.0, 0.3), (2.0, 0.7, 1.3, -0.8), (0.5, 3.0, 0.2, 2.0)] {
            let p = ModelParams {
                m,
                omega: w,
                hbar: hb,
                theta: th,
                alpha: [c(0.1, 0.0), c(-0.2, 0.0), c(0.3, 0.0), c(0.05, 0.0)],
            };
            let d = DerivedConstants::derive(&p).unwrap();
            assert!((d.gamma1 - d.gamma2 - th * m * w * w).abs() < 1e-12);
            assert!((d.gamma1 + d.gamma2 - w * d.omega_big).abs() < 1e-12);
            assert!(d.gamma0.im.abs() < 1e-12);
        }
    }

    #[test]
    fn bosonic_cases() {
        let free = DerivedConstants::derive(&ModelParams::default()).unwrap();
        assert!(free.is_bosonic());
        let p = ModelParams::atomic_real(0.0, [0.0, 0.3, 0.2, 0.0]);
        let d = DerivedConstants::derive(&p).unwrap();
        assert!(d.is_bosonic());
        assert!((d.beta[0] + d.beta[2].conj()).norm() < 1e-15);
        assert!((d.nu[0] - d.mu[0]).norm() < 1e-12 && (d.nu[1] - d.mu[1]).norm() < 1e-12);
        let q = DerivedConstants::derive(&ModelParams::atomic_real(0.0, [0.3, 0.0, 0.0, 0.2])).unwrap();
        assert!(!q.is_bosonic());
    }

    #[test]
    fn hhat_reduction() {
        let p = reduce_to_hhat(1.0, 0.0, 0.0);
        assert_eq!(p.alpha, [c(1.0, 0.0), c(0.0, 1.0), c(0.0, 0.0), c(0.0, 0.0)]);
        assert_eq!(reduce_to_hhat(0.0, 0.0, 0.0).alpha, [c(0.0, 0.0); 4]);
        for theta in [0.0, 0.3] {
            let d = DerivedConstants::derive(&reduce_to_hhat(0.4, 0.7, theta)).unwrap();
            assert!((d.beta[0] - d.beta[2].conj()).norm() < 1e-14);
            assert!((d.beta[1] + d.beta[3].conj()).norm() < 1e-14);
            for n1 in 0..=10 {
                for n2 in 0..=10 {
                    assert!(d.energy(n1, n2).im.abs() < 1e-10);
                }
            }
        }
    }

    #[test]
    fn n_psi_closed_form_matches_series_overlap() {
        // ⟨D(ν)e₀, D(μ)e₀⟩ from the coherent-state series in each mode.
        let nu = [c(0.2, -0.1), c(0.05, 0.3)];
        let mu = [c(-0.1, 0.25), c(0.4, 0.0)];
        let mut overlap = c(1.0, 0.0);
        for i in 0..2 {
            let mut s = c(0.0, 0.0);
            let mut term = c(1.0, 0.0);
            for n in 0..60 {
                s += term;
                term = term * nu[i].conj() * mu[i] / (n as f64 + 1.0);
            }
            overlap *= s * (-(nu[i].norm_sqr() + mu[i].norm_sqr()) / 2.0).exp();
        }
        let got = closed_form_n_psi(nu, mu);
        assert!((got * overlap - 1.0).norm() < 1e-14);
    }

    #[test]
    fn truncation_rules() {
        assert!(TruncationSpec::new(4, 4, 0).is_err());
        assert!(TruncationSpec::new(3, 4, 2).is_err());
        let t = TruncationSpec::new(4, 5, 1).unwrap();
        assert_eq!(t.flat(1, 2), 7);
        assert_eq!(t.unflat(7), (1, 2));
        assert_eq!(t.interior_indices().len(), 3 * 4);
        assert_eq!(TruncationSpec::square(32).unwrap().margin, 8);
        assert_eq!(TruncationSpec::square(6).unwrap().margin, 2);
        let p = TruncationSpec::new(32, 32, 8).unwrap().padded(32);
        assert_eq!(p.interior_max(), (23, 23));
    }

    #[test]
    fn hhat_form_detection() {
        assert!(reduce_to_hhat(0.4, 0.7, 0.1).is_hhat_form());
        assert!(ModelParams::default().is_hhat_form());
        assert!(!ModelParams::atomic_real(0.0, [0.4, 0.4, 0.0, 0.0]).is_hhat_form());
    }

    #[test]
    fn constraint_forms_agree_without_shift_terms() {
        let both = |p: &ModelParams| {
            let a = DerivedConstants::derive(p).unwrap();
            let b = DerivedConstants::derive_with(p, Constraints::Unshifted, Fault::None).unwrap();
            (0..4).map(|i| (a.beta[i] - b.beta[i]).norm()).fold(0.0, f64::max)
        };
        assert!(both(&ModelParams::atomic_real(0.0, [0.3, -0.2, 0.1, 0.4])) < 1e-15);
        assert!(both(&ModelParams::atomic_real(0.7, [0.0, 0.0, 0.1, 0.4])) < 1e-15);
        assert!(both(&ModelParams::atomic_real(0.7, [0.3, 0.0, 0.1, 0.4])) > 1e-3);
        assert_eq!("unshifted".parse::<Constraints>().unwrap(), Constraints::Unshifted);
        assert!("other".parse::<Constraints>().is_err());
    }

    #[test]
    fn invalid_params_rejected() {
        let mut p = ModelParams::default();
        p.m = 0.0;
        assert!(DerivedConstants::derive(&p).is_err());
        p.m = 1.0;
        p.alpha[1] = c(f64::NAN, 0.0);
        assert!(DerivedConstants::derive(&p).is_err());
    }
}
