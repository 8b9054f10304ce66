//! Vacua, biorthogonal ladder families and the diagnostics built on them.

use std::collections::BTreeMap;
use std::fmt;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::linalg::{inner, ComplexMatrix, ComplexVector};
use crate::model::{DerivedConstants, TruncationSpec};
use crate::operators::{build_d, build_pseudo, build_rotated, build_v, FockOperator};

const ONE: Complex64 = Complex64::new(1.0, 0.0);

/// Largest fraction of a state's norm allowed outside the interior before
/// the state is excluded from assertions.
pub const TAIL_GATE: f64 = 1e-6;
/// Largest `‖a_i φ₀‖` (and `‖b_i†Ψ₀‖/‖Ψ₀‖`) accepted for a vacuum.
pub const VACUUM_TOL: f64 = 1e-9;
/// Smallest `|⟨φ₀, D(μ)e₀⟩|` accepted when normalizing `Ψ₀`.
pub const OVERLAP_FLOOR: f64 = 1e-12;

#[derive(Clone, Debug)]
pub struct FockState {
    pub coeffs: ComplexVector,
    pub trunc: TruncationSpec,
    pub tag: String,
}

impl FockState {
    pub fn new(coeffs: ComplexVector, trunc: TruncationSpec, tag: impl Into<String>) -> Self {
        Self {
            coeffs,
            trunc,
            tag: tag.into(),
        }
    }

    pub fn norm(&self) -> f64 {
        self.coeffs.norm()
    }

    /// `‖(1 − P)v‖ / ‖v‖` for the interior projector `P`.
    pub fn tail_fraction(&self) -> f64 {
        let mut outside = 0.0;
        for (k, z) in self.coeffs.iter().enumerate() {
            let (n1, n2) = self.trunc.unflat(k);
            if !self.trunc.is_interior(n1, n2) {
                outside += z.norm_sqr();
            }
        }
        let total = self.coeffs.norm_sqr();
        if total == 0.0 {
            0.0
        } else {
            (outside / total).sqrt()
        }
    }

    pub fn passes_tail_gate(&self) -> bool {
        self.tail_fraction() <= TAIL_GATE
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum FamilyKind {
    /// `φ_n = b^n φ₀ / √n!`
    Phi,
    /// `Ψ_n = (a†)^n Ψ₀ / √n!`
    Psi,
}

impl fmt::Display for FamilyKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            FamilyKind::Phi => "phi",
            FamilyKind::Psi => "psi",
        })
    }
}

/// Which two-mode indices a family carries.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum IndexSet {
    /// `n₁, n₂ ≤ n_max`
    Square(usize),
    /// `n₁ + n₂ ≤ total`
    Shell(usize),
    /// `(k, 0)` for `k ≤ k_max`
    RayMode1(usize),
    /// `(0, k)` for `k ≤ k_max`
    RayMode2(usize),
}

impl IndexSet {
    pub fn indices(&self) -> Vec<(usize, usize)> {
        match *self {
            IndexSet::Square(n) => (0..=n).flat_map(|a| (0..=n).map(move |b| (a, b))).collect(),
            IndexSet::Shell(t) => (0..=t).flat_map(|a| (0..=t - a).map(move |b| (a, b))).collect(),
            IndexSet::RayMode1(k) => (0..=k).map(|a| (a, 0)).collect(),
            IndexSet::RayMode2(k) => (0..=k).map(|b| (0, b)).collect(),
        }
    }

    fn max_levels(&self) -> (usize, usize) {
        match *self {
            IndexSet::Square(n) => (n, n),
            IndexSet::Shell(t) => (t, t),
            IndexSet::RayMode1(k) => (k, 0),
            IndexSet::RayMode2(k) => (0, k),
        }
    }
}

#[derive(Clone, Debug)]
pub struct LadderFamily {
    pub kind: FamilyKind,
    pub states: BTreeMap<(usize, usize), FockState>,
    pub consts: DerivedConstants,
}

impl LadderFamily {
    pub fn get(&self, n1: usize, n2: usize) -> Option<&FockState> {
        self.states.get(&(n1, n2))
    }

    fn state(&self, n: (usize, usize)) -> Result<&FockState> {
        self.states
            .get(&n)
            .ok_or_else(|| Error::usage(format!("{} family has no state {:?}", self.kind, n)))
    }

    pub fn indices(&self) -> Vec<(usize, usize)> {
        self.states.keys().copied().collect()
    }

    /// The states with indices in `set`, missing ones ignored.
    pub fn subset(&self, set: &IndexSet) -> LadderFamily {
        let states = set
            .indices()
            .into_iter()
            .filter_map(|n| self.states.get(&n).map(|s| (n, s.clone())))
            .collect();
        LadderFamily {
            kind: self.kind,
            states,
            consts: self.consts,
        }
    }

    /// Indices whose states pass the truncation-tail gate.
    pub fn gated_indices(&self) -> Vec<(usize, usize)> {
        self.states
            .iter()
            .filter(|(_, s)| s.passes_tail_gate())
            .map(|(k, _)| *k)
            .collect()
    }
}

fn residual_norm(op: &FockOperator, v: &ComplexVector) -> Result<f64> {
    Ok(op.apply(v)?.norm())
}

/// `φ₀ = D(ν)e₀`, unit norm.
pub fn vacuum_phi(d: &DerivedConstants, trunc: &TruncationSpec) -> Result<FockState> {
    let e0 = ComplexVector::basis(trunc.dim(), 0);
    let phi0 = build_d(d.nu, trunc)?.apply(&e0)?;
    let pb = build_pseudo(trunc, d)?;
    for (i, a) in pb.a.iter().enumerate() {
        let r = residual_norm(a, &phi0)?;
        if !(r <= VACUUM_TOL) {
            return Err(Error::Truncation(format!(
                "‖a{} φ₀‖ = {r:.3e} exceeds {VACUUM_TOL:.0e} at {trunc}; increase dim",
                i + 1
            )));
        }
    }
    Ok(FockState::new(phi0, *trunc, "phi(0,0)"))
}

/// Normalization data for `Ψ₀`.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct NormalizationReport {
    /// `1/⟨φ₀, D(μ)e₀⟩` from the truncated vectors.
    pub n_psi: Complex64,
    /// The same quantity in closed form.
    pub n_psi_closed: Complex64,
    /// `|N_Ψ|²`
    pub n_psi_sq: f64,
    /// The exponential expression for `N_Ψ²`, for comparison only.
    pub exponential_sq: f64,
    /// `|N_Ψ|²` divided by the exponential expression.
    pub ratio: f64,
}

/// `Ψ₀ = N_Ψ D(μ)e₀` with `N_Ψ` fixed by `⟨φ₀, Ψ₀⟩ = 1`.
pub fn vacuum_psi(
    d: &DerivedConstants,
    trunc: &TruncationSpec,
) -> Result<(FockState, NormalizationReport)> {
    let phi0 = vacuum_phi(d, trunc)?;
    vacuum_psi_from(d, trunc, &phi0)
}

fn vacuum_psi_from(
    d: &DerivedConstants,
    trunc: &TruncationSpec,
    phi0: &FockState,
) -> Result<(FockState, NormalizationReport)> {
    let e0 = ComplexVector::basis(trunc.dim(), 0);
    let raw = build_d(d.mu, trunc)?.apply(&e0)?;
    let overlap = inner(&phi0.coeffs, &raw)?;
    if !(overlap.norm() >= OVERLAP_FLOOR) {
        return Err(Error::IllConditioned(overlap.norm()));
    }
    let n_psi = ONE / overlap;
    let psi0 = raw.scale(n_psi);
    let pb = build_pseudo(trunc, d)?;
    for (i, b) in pb.b.iter().enumerate() {
        let r = residual_norm(&b.adjoint(), &psi0)? / psi0.norm();
        if !(r <= VACUUM_TOL) {
            return Err(Error::Truncation(format!(
                "‖b{}† Ψ₀‖/‖Ψ₀‖ = {r:.3e} exceeds {VACUUM_TOL:.0e} at {trunc}; increase dim",
                i + 1
            )));
        }
    }
    let n_psi_sq = n_psi.norm_sqr();
    let exponential_sq = d.exponential_n_psi_squared();
    let report = NormalizationReport {
        n_psi,
        n_psi_closed: d.n_psi,
        n_psi_sq,
        exponential_sq,
        ratio: n_psi_sq / exponential_sq,
    };
    Ok((FockState::new(psi0, *trunc, "psi(0,0)"), report))
}

fn check_indices(trunc: &TruncationSpec, set: &IndexSet) -> Result<()> {
    let (m1, m2) = set.max_levels();
    let (i1, i2) = trunc.interior_max();
    if m1 > i1 || m2 > i2 {
        return Err(Error::usage(format!(
            "index set {set:?} reaches past the interior (n ≤ ({i1},{i2})) of {trunc}"
        )));
    }
    Ok(())
}

/// Applies `raise[0]` along mode 1 and `raise[1]` along mode 2 with the
/// `1/√n` normalization, starting from `seed` at `(0,0)`.
fn ladder_states(
    raise: [&FockOperator; 2],
    seed: &ComplexVector,
    set: &IndexSet,
    trunc: &TruncationSpec,
    kind: FamilyKind,
) -> Result<BTreeMap<(usize, usize), FockState>> {
    let wanted = set.indices();
    let max2 = wanted.iter().map(|n| n.1).max().unwrap_or(0);
    let mut out = BTreeMap::new();
    let mut column = seed.clone();
    for n2 in 0..=max2 {
        if n2 > 0 {
            column = raise[1].apply(&column)?.scale(Complex64::new(1.0 / (n2 as f64).sqrt(), 0.0));
        }
        let max1 = wanted.iter().filter(|n| n.1 == n2).map(|n| n.0).max();
        let Some(max1) = max1 else { continue };
        let mut v = column.clone();
        for n1 in 0..=max1 {
            if n1 > 0 {
                v = raise[0].apply(&v)?.scale(Complex64::new(1.0 / (n1 as f64).sqrt(), 0.0));
            }
            if wanted.contains(&(n1, n2)) {
                out.insert(
                    (n1, n2),
                    FockState::new(v.clone(), *trunc, format!("{kind}({n1},{n2})")),
                );
            }
        }
    }
    Ok(out)
}

/// `φ_n` by repeated `b_i`, or `Ψ_n` by repeated `a_i†`.
pub fn ladder_family(
    kind: FamilyKind,
    d: &DerivedConstants,
    trunc: &TruncationSpec,
    set: &IndexSet,
) -> Result<LadderFamily> {
    check_indices(trunc, set)?;
    let pb = build_pseudo(trunc, d)?;
    let phi0 = vacuum_phi(d, trunc)?;
    let states = match kind {
        FamilyKind::Phi => ladder_states([&pb.b[0], &pb.b[1]], &phi0.coeffs, set, trunc, kind)?,
        FamilyKind::Psi => {
            let (psi0, _) = vacuum_psi_from(d, trunc, &phi0)?;
            let ad = [pb.a[0].adjoint(), pb.a[1].adjoint()];
            ladder_states([&ad[0], &ad[1]], &psi0.coeffs, set, trunc, kind)?
        }
    };
    Ok(LadderFamily {
        kind,
        states,
        consts: *d,
    })
}

/// `φ_n = V(ν,μ)e_n` or `Ψ_n = N_Ψ V(μ,ν)e_n`, where `e_n` are number states
/// of the rotated bosons `â_i`. `N_Ψ` is the closed-form value.
pub fn family_via_v(
    kind: FamilyKind,
    d: &DerivedConstants,
    trunc: &TruncationSpec,
    set: &IndexSet,
) -> Result<LadderFamily> {
    check_indices(trunc, set)?;
    let ahat = build_rotated(trunc)?;
    let ahat_dag = [ahat[0].adjoint(), ahat[1].adjoint()];
    let e0 = ComplexVector::basis(trunc.dim(), 0);
    let basis = ladder_states([&ahat_dag[0], &ahat_dag[1]], &e0, set, trunc, kind)?;
    let (v, scale) = match kind {
        FamilyKind::Phi => (build_v(d.nu, d.mu, trunc)?, ONE),
        FamilyKind::Psi => (build_v(d.mu, d.nu, trunc)?, d.n_psi),
    };
    let mut states = BTreeMap::new();
    for (n, e) in basis {
        let coeffs = v.apply(&e.coeffs)?.scale(scale);
        states.insert(n, FockState::new(coeffs, *trunc, format!("V{kind}({},{})", n.0, n.1)));
    }
    Ok(LadderFamily {
        kind,
        states,
        consts: *d,
    })
}

/// Result of matching one family to another with a single complex scalar.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct Alignment {
    /// `s` minimizing `‖s·other₀ − reference₀‖`.
    pub scalar: Complex64,
    /// `max_n ‖s·other_n − reference_n‖ / ‖reference_n‖`
    pub max_residual: f64,
}

/// Fits one scalar at `(0,0)` and measures every common state with it.
pub fn align_families(reference: &LadderFamily, other: &LadderFamily) -> Result<Alignment> {
    let r0 = &reference.state((0, 0))?.coeffs;
    let o0 = &other.state((0, 0))?.coeffs;
    let scalar = inner(o0, r0)? / o0.norm_sqr();
    let mut worst: f64 = 0.0;
    for (n, r) in &reference.states {
        if let Some(o) = other.states.get(n) {
            let res = o.coeffs.scale(scalar).sub(&r.coeffs).norm() / r.norm();
            worst = worst.max(res);
        }
    }
    Ok(Alignment {
        scalar,
        max_residual: worst,
    })
}

/// Gram matrix `G[i][j] = ⟨φ_{n_i}, Ψ_{n_j}⟩` over the indices common to
/// both families, in index order.
pub fn gram(phi: &LadderFamily, psi: &LadderFamily) -> Result<(Vec<(usize, usize)>, ComplexMatrix)> {
    let idx: Vec<_> = phi
        .indices()
        .into_iter()
        .filter(|n| psi.states.contains_key(n))
        .collect();
    let mut g = ComplexMatrix::zeros(idx.len(), idx.len());
    for (i, n) in idx.iter().enumerate() {
        let f = &phi.state(*n)?.coeffs;
        for (j, m) in idx.iter().enumerate() {
            g[(i, j)] = inner(f, &psi.state(*m)?.coeffs)?;
        }
    }
    Ok((idx, g))
}

/// `max |G − I|`
pub fn gram_defect(g: &ComplexMatrix) -> f64 {
    g.max_abs_diff(&ComplexMatrix::identity(g.rows()))
}

/// Partial sums `S_N = Σ_{n₁+n₂ ≤ N} ⟨f, φ_n⟩⟨Ψ_n, g⟩` for `N = 0..=n_total`.
pub fn quasi_basis_partial(
    f: &FockState,
    g: &FockState,
    phi: &LadderFamily,
    psi: &LadderFamily,
    n_total: usize,
) -> Result<Vec<Complex64>> {
    let mut out = Vec::with_capacity(n_total + 1);
    let mut acc = Complex64::new(0.0, 0.0);
    for shell in 0..=n_total {
        for n1 in 0..=shell {
            let n = (n1, shell - n1);
            let a = inner(&f.coeffs, &phi.state(n)?.coeffs)?;
            let b = inner(&psi.state(n)?.coeffs, &g.coeffs)?;
            acc += a * b;
        }
        out.push(acc);
    }
    Ok(out)
}

#[derive(Clone, Copy, Debug, Serialize)]
pub struct RieszRow {
    pub k: usize,
    pub norm_phi: f64,
    pub norm_psi: f64,
    pub product: f64,
}

/// `‖φ_n‖`, `‖Ψ_n‖` and their product along the indices both families share,
/// ordered by total level.
pub fn riesz_diagnostic(phi: &LadderFamily, psi: &LadderFamily) -> Result<Vec<RieszRow>> {
    let mut rows = Vec::new();
    for (n, p) in &phi.states {
        if let Some(q) = psi.states.get(n) {
            let (a, b) = (p.norm(), q.norm());
            rows.push(RieszRow {
                k: n.0 + n.1,
                norm_phi: a,
                norm_psi: b,
                product: a * b,
            });
        }
    }
    rows.sort_by_key(|r| r.k);
    Ok(rows)
}

/// Coherent state of the bosonic modes `A_1`, `A_2` with eigenvalues
/// `(z₁, z₂)`, normalized on the truncated space.
pub fn coherent_test_vector(z: [Complex64; 2], trunc: &TruncationSpec) -> FockState {
    let amplitudes = |z: Complex64, dim: usize| -> Vec<Complex64> {
        let mut v = Vec::with_capacity(dim);
        let mut term = ONE;
        for n in 0..dim {
            v.push(term);
            term = term * z / ((n + 1) as f64).sqrt();
        }
        v
    };
    let c1 = amplitudes(z[0], trunc.dim1);
    let c2 = amplitudes(z[1], trunc.dim2);
    let mut v: ComplexVector = c1
        .iter()
        .flat_map(|a| c2.iter().map(move |b| a * b))
        .collect();
    let n = v.norm();
    v = v.scale(Complex64::new(1.0 / n, 0.0));
    FockState::new(v, *trunc, format!("coherent({},{})", z[0], z[1]))
}

/// Status of a check in a report.
#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum CheckStatus {
    Evaluated,
    Skipped(String),
}

#[derive(Clone, Debug, Serialize)]
pub struct Check {
    pub check: String,
    /// `None` when the check was skipped.
    pub residual: Option<f64>,
    pub tolerance: f64,
    pub pass: bool,
    pub context: String,
    #[serde(skip_serializing_if = "is_evaluated")]
    pub status: CheckStatus,
}

fn is_evaluated(s: &CheckStatus) -> bool {
    *s == CheckStatus::Evaluated
}

impl Check {
    /// `pass` is `residual ≤ tolerance`; NaN fails.
    pub fn new(check: impl Into<String>, residual: f64, tolerance: f64, context: impl Into<String>) -> Self {
        Self {
            check: check.into(),
            residual: Some(residual),
            tolerance,
            pass: residual <= tolerance,
            context: context.into(),
            status: CheckStatus::Evaluated,
        }
    }

    /// A skipped check neither passes nor fails the run.
    pub fn skipped(
        check: impl Into<String>,
        tolerance: f64,
        context: impl Into<String>,
        reason: impl Into<String>,
    ) -> Self {
        Self {
            check: check.into(),
            residual: None,
            tolerance,
            pass: true,
            context: context.into(),
            status: CheckStatus::Skipped(reason.into()),
        }
    }

    pub fn is_skipped(&self) -> bool {
        matches!(self.status, CheckStatus::Skipped(_))
    }
}

#[derive(Clone, Debug, Default, Serialize)]
#[serde(transparent)]
pub struct VerificationReport {
    pub checks: Vec<Check>,
}

impl VerificationReport {
    pub fn push(&mut self, c: Check) {
        self.checks.push(c);
    }

    pub fn extend(&mut self, other: VerificationReport) {
        self.checks.extend(other.checks);
    }

    pub fn all_pass(&self) -> bool {
        self.checks.iter().all(|c| c.pass)
    }

    pub fn failures(&self) -> impl Iterator<Item = &Check> {
        self.checks.iter().filter(|c| !c.pass)
    }

    pub fn find(&self, name: &str) -> impl Iterator<Item = &Check> {
        let name = name.to_owned();
        self.checks.iter().filter(move |c| c.check == name)
    }
}

/// `max_n ‖Ψ_n − Θφ_n‖ / ‖Ψ_n‖` over gated indices of `phi`.
pub fn metric_residual(phi: &LadderFamily, psi: &LadderFamily, theta: &FockOperator) -> Result<f64> {
    let mut worst: f64 = 0.0;
    for n in phi.gated_indices() {
        let Some(target) = psi.states.get(&n) else { continue };
        let image = theta.apply(&phi.state(n)?.coeffs)?;
        worst = worst.max(image.sub(&target.coeffs).norm() / target.norm());
    }
    Ok(worst)
}

/// Smallest Rayleigh quotient `Re⟨f, Θf⟩/‖f‖²` and the largest
/// `|Im⟨f, Θf⟩|/‖f‖²` over `count` seeded random interior vectors.
pub fn positivity_samples(theta: &FockOperator, seed: u64, count: usize) -> Result<(f64, f64)> {
    let trunc = *theta.trunc();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut min_re = f64::INFINITY;
    let mut max_im: f64 = 0.0;
    for _ in 0..count {
        let mut f = ComplexVector::zeros(trunc.dim());
        for k in trunc.interior_indices() {
            f[k] = Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0));
        }
        let q = inner(&f, &theta.apply(&f)?)? / f.norm_sqr();
        min_re = min_re.min(q.re);
        max_im = max_im.max(q.im.abs());
    }
    Ok((min_re, max_im))
}

/// Metric diagnostics for one pair of families: `Ψ_n = Θφ_n` and positivity
/// of `Θ` on `samples` seeded vectors.
pub fn metric_check(
    phi: &LadderFamily,
    psi: &LadderFamily,
    theta: &FockOperator,
    seed: u64,
    samples: usize,
    tol: f64,
    context: &str,
) -> Result<VerificationReport> {
    let mut report = VerificationReport::default();
    report.push(Check::new("metric_maps_phi_to_psi", metric_residual(phi, psi, theta)?, tol, context));
    let (min_re, max_im) = positivity_samples(theta, seed, samples)?;
    report.push(Check::new(
        "metric_positive",
        if min_re > 0.0 { 0.0 } else { -min_re + f64::MIN_POSITIVE },
        0.0,
        format!("{context}; min Rayleigh quotient {min_re:e}, max |Im| {max_im:e}, seed {seed}"),
    ));
    Ok(report)
}
