//! Problem configuration files.
//!
//! ```toml
//! [problem]
//! builtin = "kamke"            # or give p, q, r below
//! p = "exp(-2*y)"              # expression in y
//! q = { table = "q.csv" }      # two-column samples, relative to this file
//! r = "(y^2 + 1)*exp(-2*y)"
//! a = 0.0
//! b = 2.0
//!
//! [boundary]                   # a1 v(A) + a2 v'(A) = 0, b1 v(B) + b2 v'(B) = 0
//! a1 = 1.0
//! a2 = -1.0
//! b1 = 1.0
//! b2 = 1.0
//!
//! [numerics]
//! grid = 2001                  # odd, at least 201
//! terms = 50                   # coefficients computed
//! n = "auto"                   # truncation used, or an integer
//!
//! [output]
//! cache = "coefficients.bin"
//! ```

use std::fs;
use std::path::{Path, PathBuf};

use serde::Deserialize;

use nsbf::oracles::catalog;
use nsbf::{BoundarySpec, Coefficient, Error, Result, SLProblem};

pub const DEFAULT_GRID: usize = 2001;
pub const DEFAULT_TERMS: usize = 50;
pub const MIN_GRID: usize = 201;

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    #[serde(default)]
    pub problem: ProblemSection,
    pub boundary: Option<BoundarySection>,
    #[serde(default)]
    pub numerics: NumericsSection,
    #[serde(default)]
    pub output: OutputSection,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemSection {
    pub builtin: Option<String>,
    pub p: Option<CoefficientSource>,
    pub q: Option<CoefficientSource>,
    pub r: Option<CoefficientSource>,
    pub a: Option<f64>,
    pub b: Option<f64>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(untagged)]
pub enum CoefficientSource {
    Expression(String),
    Table { table: PathBuf },
}

#[derive(Debug, Clone, Copy, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BoundarySection {
    pub a1: f64,
    pub a2: f64,
    pub b1: f64,
    pub b2: f64,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NumericsSection {
    pub grid: Option<usize>,
    pub terms: Option<usize>,
    pub n: Option<TruncationSetting>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(untagged)]
pub enum TruncationSetting {
    Fixed(usize),
    Named(String),
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSection {
    pub cache: Option<PathBuf>,
}

/// Fully resolved run configuration.
#[derive(Debug, Clone)]
pub struct ProblemConfig {
    pub problem: SLProblem,
    pub boundary: BoundarySpec,
    pub grid: usize,
    pub terms: usize,
    /// `None` selects the optimal truncation automatically.
    pub truncation: Option<usize>,
    pub cache: Option<PathBuf>,
}

/// Command-line overrides applied on top of the file.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub builtin: Option<String>,
    pub grid: Option<usize>,
    pub truncation: Option<String>,
    pub cache: Option<PathBuf>,
}

/// `"auto"` or a nonnegative integer.
pub fn parse_truncation(s: &str) -> Result<Option<usize>> {
    if s.eq_ignore_ascii_case("auto") {
        return Ok(None);
    }
    s.parse()
        .map(Some)
        .map_err(|_| Error::InvalidInput(format!("N must be \"auto\" or an integer, got {s:?}")))
}

fn coefficient(source: &CoefficientSource, base: &Path) -> Result<Coefficient> {
    match source {
        CoefficientSource::Expression(e) => Coefficient::parse(e),
        CoefficientSource::Table { table } => {
            let path = base.join(table);
            if !path.is_file() {
                return Err(Error::InvalidInput(format!(
                    "table file {} does not exist",
                    path.display()
                )));
            }
            Coefficient::from_table_file(path)
        }
    }
}

impl FileConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path)
            .map_err(|e| Error::InvalidInput(format!("{}: {e}", path.display())))?;
        toml::from_str(&text).map_err(|e| Error::InvalidInput(format!("{}: {e}", path.display())))
    }

    /// Resolves the file (paths relative to `base`) with `overrides`.
    pub fn resolve(&self, base: &Path, overrides: &Overrides) -> Result<ProblemConfig> {
        let section = &self.problem;
        let builtin = overrides.builtin.clone().or_else(|| section.builtin.clone());
        let explicit = [&section.p, &section.q, &section.r];
        let (problem, default_boundary) = match builtin {
            Some(name) => {
                if explicit.iter().any(|c| c.is_some()) {
                    return Err(Error::InvalidInput(
                        "give either a built-in problem or p, q, r, not both".into(),
                    ));
                }
                let (a, b) = match name.as_str() {
                    "kamke" => (0.0, 2.0),
                    _ => (section.a.unwrap_or(0.0), section.b.unwrap_or(std::f64::consts::PI)),
                };
                let problem = catalog::builtin(&name, a, b).ok_or_else(|| {
                    Error::InvalidInput(format!(
                        "unknown built-in problem {name:?} (known: {})",
                        catalog::BUILTINS.join(", ")
                    ))
                })?;
                let bc = if name == "kamke" {
                    catalog::kamke_boundary()
                } else {
                    BoundarySpec::dirichlet()
                };
                (problem, Some(bc))
            }
            None => {
                let missing = || Error::InvalidInput("p, q and r are all required".into());
                let p = coefficient(section.p.as_ref().ok_or_else(missing)?, base)?;
                let q = coefficient(section.q.as_ref().ok_or_else(missing)?, base)?;
                let r = coefficient(section.r.as_ref().ok_or_else(missing)?, base)?;
                let (a, b) = section
                    .a
                    .zip(section.b)
                    .ok_or_else(|| Error::InvalidInput("the interval needs both a and b".into()))?;
                (SLProblem::new(p, q, r, a, b)?, None)
            }
        };
        let boundary = match (self.boundary, default_boundary) {
            (Some(s), _) => BoundarySpec::new(s.a1, s.a2, s.b1, s.b2)?,
            (None, Some(bc)) => bc,
            (None, None) => BoundarySpec::dirichlet(),
        };
        let grid = overrides.grid.or(self.numerics.grid).unwrap_or(DEFAULT_GRID);
        if grid < MIN_GRID || grid.is_multiple_of(2) {
            return Err(Error::InvalidInput(format!(
                "grid size must be odd and at least {MIN_GRID}, got {grid}"
            )));
        }
        let terms = self.numerics.terms.unwrap_or(DEFAULT_TERMS);
        let truncation = match (&overrides.truncation, &self.numerics.n) {
            (Some(s), _) => parse_truncation(s)?,
            (None, Some(TruncationSetting::Fixed(n))) => Some(*n),
            (None, Some(TruncationSetting::Named(s))) => parse_truncation(s)?,
            (None, None) => None,
        };
        let terms = terms.max(truncation.unwrap_or(0));
        let cache = overrides
            .cache
            .clone()
            .or_else(|| self.output.cache.as_ref().map(|c| base.join(c)));
        Ok(ProblemConfig {
            problem,
            boundary,
            grid,
            terms,
            truncation,
            cache,
        })
    }
}
