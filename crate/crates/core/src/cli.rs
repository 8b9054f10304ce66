//! Command runners behind the `ncosc` binary. Each returns the full output
//! text so results can be compared byte for byte.

use std::fmt::Write as _;
use std::str::FromStr;

use num_complex::Complex64;
use serde::Serialize;

use crate::config::RunConfig;
use crate::error::{Error, Result};
use crate::linalg::inner;
use crate::model::{fmt_complex, DerivedConstants};
use crate::position::{synthesize, GridSpec};
use crate::states::{coherent_test_vector, ladder_family, quasi_basis_partial, FamilyKind, IndexSet, VerificationReport};
use crate::symmetry::{pt_defect, pt_eigenstate_table, AntilinearSymmetry};
use crate::verify::{
    default_grid, riesz_rows, verify_grid, verify_set, PT_N_MAX, QUASI_F, QUASI_G, QUASI_SHELLS, RIESZ_DIM,
    RIESZ_MARGIN,
};

pub const EXIT_PASS: i32 = 0;
pub const EXIT_FAIL: i32 = 1;
pub const EXIT_USAGE: i32 = 2;

/// Grid half-width (units of `1/λ`) and points per axis for wavefunction export.
pub const EXPORT_EXTENT: f64 = 6.0;
pub const EXPORT_POINTS: usize = 81;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum Format {
    #[default]
    Csv,
    Json,
}

impl FromStr for Format {
    type Err = String;
    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "csv" => Ok(Format::Csv),
            "json" => Ok(Format::Json),
            _ => Err(format!("unknown format {s:?} (expected csv|json)")),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum DiagnoseKind {
    Riesz,
    Quasi,
    Pt,
    Wavefunction,
}

impl FromStr for DiagnoseKind {
    type Err = String;
    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "riesz" => Ok(DiagnoseKind::Riesz),
            "quasi" => Ok(DiagnoseKind::Quasi),
            "pt" => Ok(DiagnoseKind::Pt),
            "wavefunction" => Ok(DiagnoseKind::Wavefunction),
            _ => Err(format!("unknown diagnostic {s:?} (expected riesz|quasi|pt|wavefunction)")),
        }
    }
}

/// Which state to sample on the grid.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct WavefunctionRequest {
    pub kind: FamilyKind,
    pub n: (usize, usize),
    pub points: usize,
    pub extent: f64,
}

impl Default for WavefunctionRequest {
    fn default() -> Self {
        Self {
            kind: FamilyKind::Phi,
            n: (0, 0),
            points: EXPORT_POINTS,
            extent: EXPORT_EXTENT,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Outcome {
    pub output: String,
    pub exit_code: i32,
    /// For standard error, never part of `output`.
    pub warnings: Vec<String>,
}

impl Outcome {
    fn ok(output: String, warnings: Vec<String>) -> Self {
        Self {
            output,
            exit_code: EXIT_PASS,
            warnings,
        }
    }
}

/// Exit code for an error that escaped a runner.
pub fn exit_code_for(e: &Error) -> i32 {
    match e {
        Error::Usage(_) | Error::Config { .. } | Error::Truncation(_) => EXIT_USAGE,
        _ => EXIT_FAIL,
    }
}

fn num(x: f64) -> String {
    format!("{x:.16e}")
}

fn cnum(z: Complex64) -> String {
    format!("{} {}", num(z.re), num(z.im))
}

fn csv_table(comments: &[String], header: &[&str], rows: impl IntoIterator<Item = Vec<String>>) -> Result<String> {
    let mut out = String::new();
    for c in comments {
        writeln!(out, "# {c}").expect("write to String");
    }
    let mut w = csv::Writer::from_writer(Vec::new());
    let io = |e: csv::Error| Error::Io(std::io::Error::other(e));
    w.write_record(header).map_err(io)?;
    for r in rows {
        w.write_record(&r).map_err(io)?;
    }
    let bytes = w.into_inner().map_err(|e| Error::Io(std::io::Error::other(e.to_string())))?;
    out.push_str(&String::from_utf8(bytes).expect("csv output is UTF-8"));
    Ok(out)
}

fn json<T: Serialize>(value: &T) -> Result<String> {
    let mut s = serde_json::to_string_pretty(value).map_err(|e| Error::Io(std::io::Error::other(e)))?;
    s.push('\n');
    Ok(s)
}

fn derive(cfg: &RunConfig) -> Result<DerivedConstants> {
    DerivedConstants::derive_with(&cfg.params, cfg.constraints, Default::default())
}

fn envelope_warning(d: &DerivedConstants) -> Vec<String> {
    if d.within_envelope() {
        Vec::new()
    } else {
        vec!["shifts outside the accuracy envelope; truncated-space values are unreliable".into()]
    }
}

fn constant_comments(cfg: &RunConfig, d: &DerivedConstants) -> Vec<String> {
    let mut c = vec![
        format!("params: {}", cfg.params),
        format!("constraints = {}", cfg.constraints),
        format!("Omega = {}", num(d.omega_big)),
        format!("M = {}", num(d.mass_eff)),
        format!("lambda = {}", num(d.length_scale)),
    ];
    for (i, b) in d.beta.iter().enumerate() {
        c.push(format!("beta{} = {}", i + 1, cnum(*b)));
    }
    c.push(format!("gamma0 = {}", cnum(d.gamma0)));
    c.push(format!("gamma1 = {}", num(d.gamma1)));
    c.push(format!("gamma2 = {}", num(d.gamma2)));
    c
}

#[derive(Serialize)]
struct Level {
    n1: usize,
    n2: usize,
    energy_re: f64,
    energy_im: f64,
}

#[derive(Serialize)]
struct SpectrumJson<'a> {
    params: &'a crate::model::ModelParams,
    constraints: crate::model::Constraints,
    constants: &'a DerivedConstants,
    levels: Vec<Level>,
}

/// `E_{n₁,n₂}` for `n₁, n₂ ≤ n_max`.
pub fn run_spectrum(cfg: &RunConfig, format: Format) -> Result<Outcome> {
    let d = derive(cfg)?;
    let levels: Vec<Level> = IndexSet::Square(cfg.n_max)
        .indices()
        .into_iter()
        .map(|(n1, n2)| {
            let e = d.energy(n1, n2);
            Level {
                n1,
                n2,
                energy_re: e.re,
                energy_im: e.im,
            }
        })
        .collect();
    let output = match format {
        Format::Csv => csv_table(
            &constant_comments(cfg, &d),
            &["n1", "n2", "energy_re", "energy_im"],
            levels
                .iter()
                .map(|l| vec![l.n1.to_string(), l.n2.to_string(), num(l.energy_re), num(l.energy_im)]),
        )?,
        Format::Json => json(&SpectrumJson {
            params: &cfg.params,
            constraints: cfg.constraints,
            constants: &d,
            levels,
        })?,
    };
    Ok(Outcome::ok(output, Vec::new()))
}

fn report_text(report: &VerificationReport, format: Format) -> Result<String> {
    match format {
        Format::Json => json(report),
        Format::Csv => csv_table(
            &[],
            &["check", "residual", "tolerance", "pass", "context", "status"],
            report.checks.iter().map(|c| {
                vec![
                    c.check.clone(),
                    c.residual.map(num).unwrap_or_default(),
                    num(c.tolerance),
                    c.pass.to_string(),
                    c.context.clone(),
                    match &c.status {
                        crate::states::CheckStatus::Evaluated => "evaluated".into(),
                        crate::states::CheckStatus::Skipped(r) => format!("skipped: {r}"),
                    },
                ]
            }),
        ),
    }
}

/// The five-set grid when `grid` is set, otherwise the configured set alone.
/// Exit code 0 iff every evaluated check passes.
pub fn run_verify(cfg: &RunConfig, grid: bool, format: Format) -> Result<Outcome> {
    let opts = cfg.verify_options();
    let (report, warnings) = if grid {
        verify_grid(&default_grid(), &opts)?
    } else {
        let out = verify_set(&cfg.parameter_set(), &opts)?;
        (out.report, out.warnings)
    };
    Ok(Outcome {
        output: report_text(&report, format)?,
        exit_code: if report.all_pass() { EXIT_PASS } else { EXIT_FAIL },
        warnings,
    })
}

#[derive(Serialize)]
struct Table<M: Serialize, R: Serialize> {
    meta: M,
    rows: Vec<R>,
}

#[derive(Serialize)]
struct RieszMeta {
    dim: usize,
    margin: usize,
    bosonic: bool,
}

#[derive(Serialize)]
struct QuasiMeta {
    f: [Complex64; 2],
    g: [Complex64; 2],
    exact_re: f64,
    exact_im: f64,
    trunc: crate::model::TruncationSpec,
}

#[derive(Serialize)]
struct QuasiRow {
    #[serde(rename = "N")]
    n: usize,
    partial_re: f64,
    partial_im: f64,
    defect: f64,
}

#[derive(Serialize)]
struct PtMeta {
    pt_defect: f64,
    real_alpha: bool,
    trunc: crate::model::TruncationSpec,
}

#[derive(Serialize)]
struct PtRow {
    n1: usize,
    n2: usize,
    phi_residual: f64,
    psi_residual: f64,
}

#[derive(Serialize)]
struct GridMeta {
    state: String,
    grid: GridSpec,
}

#[derive(Serialize)]
struct GridRow {
    x1: f64,
    x2: f64,
    re: f64,
    im: f64,
}

pub fn run_diagnose(cfg: &RunConfig, kind: DiagnoseKind, format: Format) -> Result<Outcome> {
    match kind {
        DiagnoseKind::Riesz => diagnose_riesz(cfg, format),
        DiagnoseKind::Quasi => diagnose_quasi(cfg, format),
        DiagnoseKind::Pt => diagnose_pt(cfg, format),
        DiagnoseKind::Wavefunction => export_wavefunction(cfg, &WavefunctionRequest::default(), format),
    }
}

fn diagnose_riesz(cfg: &RunConfig, format: Format) -> Result<Outcome> {
    let d = derive(cfg)?;
    let rows = riesz_rows(&d, 1)?;
    let meta = RieszMeta {
        dim: RIESZ_DIM,
        margin: RIESZ_MARGIN,
        bosonic: d.is_bosonic(),
    };
    let output = match format {
        Format::Csv => csv_table(
            &[
                format!("params: {}", cfg.params),
                format!("dim = {RIESZ_DIM}, margin = {RIESZ_MARGIN}, states (k, 0)"),
                format!("bosonic = {}", meta.bosonic),
            ],
            &["k", "norm_phi", "norm_psi", "product"],
            rows.iter()
                .map(|r| vec![r.k.to_string(), num(r.norm_phi), num(r.norm_psi), num(r.product)]),
        )?,
        Format::Json => json(&Table { meta, rows })?,
    };
    Ok(Outcome::ok(output, envelope_warning(&d)))
}

fn diagnose_quasi(cfg: &RunConfig, format: Format) -> Result<Outcome> {
    let d = derive(cfg)?;
    let t = cfg.trunc;
    let (i1, i2) = t.interior_max();
    let shells = QUASI_SHELLS.min(i1).min(i2);
    let z = |p: [(f64, f64); 2]| p.map(|(re, im)| Complex64::new(re, im));
    let (fz, gz) = (z(QUASI_F), z(QUASI_G));
    let f = coherent_test_vector(fz, &t);
    let g = coherent_test_vector(gz, &t);
    let exact = inner(&f.coeffs, &g.coeffs)?;
    let set = IndexSet::Shell(shells);
    let phi = ladder_family(FamilyKind::Phi, &d, &t, &set)?;
    let psi = ladder_family(FamilyKind::Psi, &d, &t, &set)?;
    let sums = quasi_basis_partial(&f, &g, &phi, &psi, shells)?;
    let rows: Vec<QuasiRow> = sums
        .iter()
        .enumerate()
        .map(|(n, s)| QuasiRow {
            n,
            partial_re: s.re,
            partial_im: s.im,
            defect: (s - exact).norm(),
        })
        .collect();
    let output = match format {
        Format::Csv => csv_table(
            &[
                format!("params: {}", cfg.params),
                format!("{t}"),
                format!("f = coherent({}, {})", fmt_complex(fz[0]), fmt_complex(fz[1])),
                format!("g = coherent({}, {})", fmt_complex(gz[0]), fmt_complex(gz[1])),
                format!("exact = {}", cnum(exact)),
            ],
            &["N", "partial_re", "partial_im", "defect"],
            rows.iter()
                .map(|r| vec![r.n.to_string(), num(r.partial_re), num(r.partial_im), num(r.defect)]),
        )?,
        Format::Json => json(&Table {
            meta: QuasiMeta {
                f: fz,
                g: gz,
                exact_re: exact.re,
                exact_im: exact.im,
                trunc: t,
            },
            rows,
        })?,
    };
    Ok(Outcome::ok(output, envelope_warning(&d)))
}

fn diagnose_pt(cfg: &RunConfig, format: Format) -> Result<Outcome> {
    let d = derive(cfg)?;
    let t = cfg.trunc;
    let s = AntilinearSymmetry::new(&t);
    let h = crate::operators::build_h_canonical(&cfg.params, &d, &t)?;
    let defect = pt_defect(&h, &s)?;
    let set = IndexSet::Square(PT_N_MAX.min(cfg.n_max));
    let phi = ladder_family(FamilyKind::Phi, &d, &t, &set)?;
    let psi = ladder_family(FamilyKind::Psi, &d, &t, &set)?;
    let rows: Vec<PtRow> = pt_eigenstate_table(&phi, &psi, &s)?
        .into_iter()
        .map(|((n1, n2), a, b)| PtRow {
            n1,
            n2,
            phi_residual: a,
            psi_residual: b,
        })
        .collect();
    let meta = PtMeta {
        pt_defect: defect,
        real_alpha: cfg.params.has_real_alpha(),
        trunc: t,
    };
    let output = match format {
        Format::Csv => csv_table(
            &[
                format!("params: {}", cfg.params),
                format!("{t}"),
                format!("pt_defect = {}", num(defect)),
                format!("real_alpha = {}", meta.real_alpha),
            ],
            &["n1", "n2", "phi_residual", "psi_residual"],
            rows.iter()
                .map(|r| vec![r.n1.to_string(), r.n2.to_string(), num(r.phi_residual), num(r.psi_residual)]),
        )?,
        Format::Json => json(&Table { meta, rows })?,
    };
    Ok(Outcome::ok(output, envelope_warning(&d)))
}

/// Samples `φ_n` or `Ψ_n`, synthesized from its Fock coefficients, on a
/// square grid.
pub fn export_wavefunction(cfg: &RunConfig, req: &WavefunctionRequest, format: Format) -> Result<Outcome> {
    let d = derive(cfg)?;
    let t = cfg.trunc;
    if !t.is_interior(req.n.0, req.n.1) {
        return Err(Error::usage(format!("state {:?} is outside the interior of {t}", req.n)));
    }
    let g = GridSpec::scaled(req.extent, req.points, &d)?;
    let set = IndexSet::Square(req.n.0.max(req.n.1));
    let family = ladder_family(req.kind, &d, &t, &set)?;
    let state = family.get(req.n.0, req.n.1).expect("requested index built");
    let f = synthesize(state, &g, &d)?;
    let label = format!("{}_({},{})", req.kind, req.n.0, req.n.1);
    let output = match format {
        Format::Csv => csv_table(
            &[
                format!("params: {}", cfg.params),
                format!("state = {label}"),
                format!("grid = [{}, {}]^2, {} points per axis", num(g.x_min), num(g.x_max), g.points),
            ],
            &["x1", "x2", "re", "im"],
            f.rows().map(|(x1, x2, re, im)| vec![num(x1), num(x2), num(re), num(im)]),
        )?,
        Format::Json => json(&Table {
            meta: GridMeta { state: label, grid: g },
            rows: f.rows().map(|(x1, x2, re, im)| GridRow { x1, x2, re, im }).collect(),
        })?,
    };
    Ok(Outcome::ok(output, envelope_warning(&d)))
}
