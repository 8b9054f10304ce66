//! Run configuration: one `key = value` per line, `#` starts a comment.
//!
//! ```text
//! theta  = 0.3
//! alpha1 = 0.32
//! alpha2 = 0.1+0.05i
//! dim    = 32        # both modes; dim1/dim2 set them separately
//! tol.ladder = 1e-9
//! ```

use std::collections::HashMap;
use std::path::Path;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::model::{default_margin, Constraints, ModelParams, TruncationSpec};
use crate::verify::{ParameterSet, Tolerances, VerifyOptions, DEFAULT_SEED};

pub const DEFAULT_DIM: usize = 32;
pub const DEFAULT_N_MAX: usize = 6;
/// Largest per-mode dimension accepted from a config or the command line.
pub const MAX_DIM: usize = 48;

#[derive(Clone, Debug, PartialEq)]
pub struct RunConfig {
    pub params: ModelParams,
    pub trunc: TruncationSpec,
    pub n_max: usize,
    pub seed: u64,
    pub tolerances: Tolerances,
    pub constraints: Constraints,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            params: ModelParams::default(),
            trunc: TruncationSpec::new(DEFAULT_DIM, DEFAULT_DIM, default_margin(DEFAULT_DIM))
                .expect("default truncation"),
            n_max: DEFAULT_N_MAX,
            seed: DEFAULT_SEED,
            tolerances: Tolerances::default(),
            constraints: Constraints::Matched,
        }
    }
}

/// `"a"`, `"bi"`, `"a+bi"`, `"a-bi"`; whitespace is ignored and a bare `i`
/// means a unit coefficient.
pub fn parse_complex(s: &str) -> std::result::Result<Complex64, String> {
    let t: String = s.chars().filter(|c| !c.is_whitespace()).collect();
    let bad = || format!("malformed complex literal {s:?}");
    let num = |x: &str| x.parse::<f64>().ok().filter(|v| v.is_finite()).ok_or_else(bad);
    if t.is_empty() {
        return Err(bad());
    }
    let Some(body) = t.strip_suffix('i') else {
        return num(&t).map(|re| Complex64::new(re, 0.0));
    };
    let unit = |x: &str| match x {
        "" | "+" => Ok(1.0),
        "-" => Ok(-1.0),
        _ => num(x),
    };
    // Split before the last sign that is not leading and not an exponent sign.
    let bytes = body.as_bytes();
    let split = (1..bytes.len())
        .rev()
        .find(|&k| matches!(bytes[k], b'+' | b'-') && !matches!(bytes[k - 1], b'e' | b'E'));
    match split {
        Some(k) => Ok(Complex64::new(num(&body[..k])?, unit(&body[k..])?)),
        None => Ok(Complex64::new(0.0, unit(body)?)),
    }
}

fn positive_real(v: &str) -> std::result::Result<f64, String> {
    match v.parse::<f64>() {
        Ok(x) if x > 0.0 && x.is_finite() => Ok(x),
        Ok(x) => Err(format!("must be positive and finite, got {x}")),
        Err(_) => Err(format!("not a number: {v:?}")),
    }
}

fn count(v: &str) -> std::result::Result<usize, String> {
    v.parse::<usize>().map_err(|_| format!("not a non-negative integer: {v:?}"))
}

impl RunConfig {
    pub fn from_path(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::config(None, format!("cannot read {}: {e}", path.display())))?;
        Self::parse(&text)
    }

    pub fn parse(text: &str) -> Result<Self> {
        let mut cfg = RunConfig::default();
        let mut seen: HashMap<String, usize> = HashMap::new();
        let (mut dim, mut dim1, mut dim2, mut margin) = (None, None, None, None);
        for (i, raw) in text.lines().enumerate() {
            let line = i + 1;
            let content = raw.split('#').next().unwrap_or("").trim();
            if content.is_empty() {
                continue;
            }
            let err = |msg: String| Error::config(Some(line), msg);
            let (key, value) = content
                .split_once('=')
                .ok_or_else(|| err(format!("expected `key = value`, got {content:?}")))?;
            let (key, value) = (key.trim(), value.trim());
            if let Some(first) = seen.insert(key.to_string(), line) {
                return Err(err(format!("duplicate key {key:?} (first set on line {first})")));
            }
            let with_key = |m: String| err(format!("{key}: {m}"));
            match key {
                "m" => cfg.params.m = positive_real(value).map_err(with_key)?,
                "omega" => cfg.params.omega = positive_real(value).map_err(with_key)?,
                "hbar" => cfg.params.hbar = positive_real(value).map_err(with_key)?,
                "theta" => {
                    cfg.params.theta = value
                        .parse::<f64>()
                        .ok()
                        .filter(|x| x.is_finite())
                        .ok_or_else(|| with_key(format!("not a finite number: {value:?}")))?
                }
                "alpha1" | "alpha2" | "alpha3" | "alpha4" => {
                    let k = key.as_bytes()[5] - b'1';
                    cfg.params.alpha[k as usize] = parse_complex(value).map_err(with_key)?;
                }
                "dim" => dim = Some((count(value).map_err(with_key)?, line)),
                "dim1" => dim1 = Some((count(value).map_err(with_key)?, line)),
                "dim2" => dim2 = Some((count(value).map_err(with_key)?, line)),
                "margin" => margin = Some((count(value).map_err(with_key)?, line)),
                "n_max" => cfg.n_max = count(value).map_err(with_key)?,
                "seed" => cfg.seed = value.parse().map_err(|_| with_key(format!("not a u64: {value:?}")))?,
                "constraints" => cfg.constraints = value.parse().map_err(with_key)?,
                _ => match key.strip_prefix("tol.") {
                    Some(name) => {
                        let v: f64 = value.parse().map_err(|_| with_key(format!("not a number: {value:?}")))?;
                        cfg.tolerances.set(name, v).map_err(|e| with_key(strip_usage(e)))?;
                    }
                    None => return Err(err(format!("unknown key {key:?}"))),
                },
            }
        }
        if dim.is_some() && (dim1.is_some() || dim2.is_some()) {
            let line = dim.map(|d| d.1);
            return Err(Error::config(line, "`dim` cannot be combined with `dim1`/`dim2`"));
        }
        let d1 = dim.or(dim1).map_or(DEFAULT_DIM, |d| d.0);
        let d2 = dim.or(dim2).map_or(DEFAULT_DIM, |d| d.0);
        let k = margin.map_or_else(|| default_margin(d1.min(d2)), |m| m.0);
        let blame = margin.or(dim).or(dim1).or(dim2).map(|d| d.1);
        cfg.trunc = TruncationSpec::new(d1, d2, k).map_err(|e| Error::config(blame, strip_any(e)))?;
        if d1.max(d2) > MAX_DIM {
            return Err(Error::config(dim.or(dim1).or(dim2).map(|d| d.1), format!("dimension above {MAX_DIM} per mode")));
        }
        cfg.validate().map_err(|e| match e {
            Error::Config { line: None, message } => Error::config(seen.get("n_max").copied(), message),
            other => other,
        })?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        self.params.validate()?;
        if self.trunc.dim1.max(self.trunc.dim2) > MAX_DIM {
            return Err(Error::config(None, format!("dimension above {MAX_DIM} per mode: {}", self.trunc)));
        }
        self.trunc.validate().map_err(|e| Error::config(None, strip_any(e)))?;
        self.verify_options().validate().map_err(|e| Error::config(None, strip_any(e)))
    }

    /// Applies command-line overrides and revalidates. `dim` sets both modes.
    pub fn with_overrides(mut self, dim: Option<usize>, margin: Option<usize>, n_max: Option<usize>) -> Result<Self> {
        let (d1, d2) = match dim {
            Some(d) => (d, d),
            None => (self.trunc.dim1, self.trunc.dim2),
        };
        let k = match (margin, dim) {
            (Some(k), _) => k,
            (None, Some(d)) => default_margin(d),
            (None, None) => self.trunc.margin,
        };
        self.trunc = TruncationSpec::new(d1, d2, k).map_err(|e| Error::usage(strip_any(e)))?;
        if let Some(n) = n_max {
            self.n_max = n;
        }
        self.validate().map_err(|e| Error::usage(strip_any(e)))?;
        Ok(self)
    }

    pub fn verify_options(&self) -> VerifyOptions {
        VerifyOptions {
            trunc: self.trunc,
            n_max: self.n_max,
            seed: self.seed,
            tolerances: self.tolerances.clone(),
            constraints: self.constraints,
            ..VerifyOptions::default()
        }
    }

    pub fn parameter_set(&self) -> ParameterSet {
        ParameterSet::new("config", self.params)
    }
}

fn strip_usage(e: Error) -> String {
    match e {
        Error::Usage(m) => m,
        other => other.to_string(),
    }
}

fn strip_any(e: Error) -> String {
    match e {
        Error::Usage(m) | Error::Truncation(m) => m,
        Error::Config { message, .. } => message,
        other => other.to_string(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn complex_literals() {
        assert_eq!(parse_complex("0.0+1.0i").unwrap(), c(0.0, 1.0));
        assert_eq!(parse_complex("1.5-2i").unwrap(), c(1.5, -2.0));
        assert_eq!(parse_complex("-3").unwrap(), c(-3.0, 0.0));
        assert_eq!(parse_complex("-i").unwrap(), c(0.0, -1.0));
        assert_eq!(parse_complex("2.5i").unwrap(), c(0.0, 2.5));
        assert_eq!(parse_complex("1e-3+2E+1i").unwrap(), c(1e-3, 20.0));
        assert_eq!(parse_complex(" 1 + i ").unwrap(), c(1.0, 1.0));
        for bad in ["", "i+1", "1+2j", "abc", "1++2i", "nan", "inf+1i"] {
            assert!(parse_complex(bad).is_err(), "{bad}");
        }
    }

    #[test]
    fn empty_file_gives_defaults() {
        let cfg = RunConfig::parse("# nothing\n\n").unwrap();
        assert_eq!(cfg, RunConfig::default());
        assert_eq!(cfg.trunc, TruncationSpec::new(32, 32, 8).unwrap());
        assert_eq!(cfg.n_max, 6);
    }

    #[test]
    fn theta_only() {
        let cfg = RunConfig::parse("theta = 0.5").unwrap();
        assert_eq!(cfg.params, ModelParams::atomic_real(0.5, [0.0; 4]));
    }

    #[test]
    fn imaginary_alpha() {
        let cfg = RunConfig::parse("alpha2 = 0.0+1.0i  # comment").unwrap();
        assert_eq!(cfg.params.alpha[1], c(0.0, 1.0));
        assert!(!cfg.params.has_real_alpha());
    }

    #[test]
    fn truncation_keys() {
        let cfg = RunConfig::parse("dim1 = 24\ndim2 = 28\nmargin = 6\nn_max = 5").unwrap();
        assert_eq!(cfg.trunc, TruncationSpec::new(24, 28, 6).unwrap());
        let cfg = RunConfig::parse("dim = 40").unwrap();
        assert_eq!(cfg.trunc, TruncationSpec::new(40, 40, 10).unwrap());
    }

    #[test]
    fn errors_carry_line_numbers() {
        let line_of = |text: &str| match RunConfig::parse(text) {
            Err(Error::Config { line, .. }) => line,
            other => panic!("expected config error, got {other:?}"),
        };
        assert_eq!(line_of("theta = 0.1\nbogus = 3"), Some(2));
        assert_eq!(line_of("\n\nalpha1 = 1+2j"), Some(3));
        assert_eq!(line_of("m = -1"), Some(1));
        assert_eq!(line_of("theta = 1\ntheta = 2"), Some(2));
        assert_eq!(line_of("tol.ladder = 1e-20"), Some(1));
        assert_eq!(line_of("tol.nonexistent = 1e-6"), Some(1));
        assert_eq!(line_of("no equals sign"), Some(1));
        assert_eq!(line_of("dim = 8\nmargin = 8"), Some(2));
        assert_eq!(line_of("dim = 16\nn_max = 14"), Some(2));
        assert_eq!(line_of("theta = 0\ndim1 = 400"), Some(2));
    }

    #[test]
    fn tolerance_override() {
        let cfg = RunConfig::parse("tol.ladder = 1e-9").unwrap();
        assert_eq!(cfg.tolerances.get("ladder"), 1e-9);
        assert_eq!(cfg.verify_options().tolerances.get("ladder"), 1e-9);
    }

    #[test]
    fn overrides_revalidate() {
        let cfg = RunConfig::default().with_overrides(Some(24), None, Some(4)).unwrap();
        assert_eq!(cfg.trunc, TruncationSpec::new(24, 24, 6).unwrap());
        assert_eq!(cfg.n_max, 4);
        assert!(RunConfig::default().with_overrides(Some(8), None, None).is_err());
    }
}
