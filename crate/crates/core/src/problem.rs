//! Problem definition: `(p v')' - q v = -λ r v` on a finite interval `[A, B]`.

use std::fmt;
use std::path::Path;
use std::sync::Arc;

use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::expr::Expr;

type RealFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

/// One coefficient function of the equation.
#[derive(Clone)]
pub enum Coefficient {
    /// Parsed expression with symbolic first and second derivatives.
    Expr {
        source: String,
        f: Expr,
        df: Expr,
        d2f: Expr,
    },
    /// Native closure; derivatives are optional.
    Native {
        name: String,
        f: RealFn,
        df: Option<RealFn>,
        d2f: Option<RealFn>,
    },
    /// Samples `(y_i, v_i)` with strictly increasing `y_i`, interpolated locally.
    /// Derivatives are always taken numerically on the working grid.
    Tabulated { nodes: Vec<f64>, values: Vec<f64> },
}

const TABLE_STENCIL: usize = 6;

impl Coefficient {
    pub fn parse(source: &str) -> Result<Self> {
        let f = Expr::parse(source)?;
        let df = f.derivative();
        let d2f = df.derivative();
        Ok(Coefficient::Expr {
            source: source.to_string(),
            f,
            df,
            d2f,
        })
    }

    pub fn constant(c: f64) -> Self {
        Self::native(format!("{c:?}"), move |_| c, Some(|_| 0.0), Some(|_| 0.0))
    }

    pub fn native(
        name: impl Into<String>,
        f: impl Fn(f64) -> f64 + Send + Sync + 'static,
        df: Option<impl Fn(f64) -> f64 + Send + Sync + 'static>,
        d2f: Option<impl Fn(f64) -> f64 + Send + Sync + 'static>,
    ) -> Self {
        Coefficient::Native {
            name: name.into(),
            f: Arc::new(f),
            df: df.map(|d| Arc::new(d) as RealFn),
            d2f: d2f.map(|d| Arc::new(d) as RealFn),
        }
    }

    pub fn tabulated(nodes: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        if nodes.len() != values.len() || nodes.len() < TABLE_STENCIL {
            return Err(Error::InvalidInput(format!(
                "a table needs at least {TABLE_STENCIL} (y, value) pairs of equal length"
            )));
        }
        if nodes.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::InvalidInput(
                "table abscissae must be strictly increasing".into(),
            ));
        }
        if nodes.iter().chain(&values).any(|v| !v.is_finite()) {
            return Err(Error::InvalidInput("table contains non-finite values".into()));
        }
        Ok(Coefficient::Tabulated { nodes, values })
    }

    /// Reads a two-column table (`y, value`); `#` starts a comment.
    pub fn from_table_file(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let mut reader = csv::ReaderBuilder::new()
            .has_headers(false)
            .comment(Some(b'#'))
            .trim(csv::Trim::All)
            .from_path(path)
            .map_err(|e| Error::InvalidInput(format!("{}: {e}", path.display())))?;
        let mut nodes = Vec::new();
        let mut values = Vec::new();
        for (line, record) in reader.records().enumerate() {
            let record =
                record.map_err(|e| Error::InvalidInput(format!("{}: {e}", path.display())))?;
            let field = |k: usize| -> Result<f64> {
                record
                    .get(k)
                    .and_then(|s| s.parse::<f64>().ok())
                    .ok_or_else(|| {
                        Error::InvalidInput(format!(
                            "{}: record {} needs two numeric columns",
                            path.display(),
                            line + 1
                        ))
                    })
            };
            nodes.push(field(0)?);
            values.push(field(1)?);
        }
        Self::tabulated(nodes, values)
    }

    pub fn value(&self, y: f64) -> f64 {
        match self {
            Coefficient::Expr { f, .. } => f.eval(y),
            Coefficient::Native { f, .. } => f(y),
            Coefficient::Tabulated { nodes, values } => table_value(nodes, values, y),
        }
    }

    pub fn derivative(&self, y: f64) -> Option<f64> {
        match self {
            Coefficient::Expr { df, .. } => Some(df.eval(y)),
            Coefficient::Native { df, .. } => df.as_ref().map(|d| d(y)),
            Coefficient::Tabulated { .. } => None,
        }
    }

    pub fn second_derivative(&self, y: f64) -> Option<f64> {
        match self {
            Coefficient::Expr { d2f, .. } => Some(d2f.eval(y)),
            Coefficient::Native { d2f, .. } => d2f.as_ref().map(|d| d(y)),
            Coefficient::Tabulated { .. } => None,
        }
    }

    pub fn has_derivatives(&self) -> bool {
        match self {
            Coefficient::Expr { .. } => true,
            Coefficient::Native { df, d2f, .. } => df.is_some() && d2f.is_some(),
            Coefficient::Tabulated { .. } => false,
        }
    }

    pub fn is_tabulated(&self) -> bool {
        matches!(self, Coefficient::Tabulated { .. })
    }

    /// Stable textual identity, used to key coefficient caches.
    pub fn fingerprint(&self) -> String {
        match self {
            Coefficient::Expr { source, .. } => format!("expr:{source}"),
            Coefficient::Native { name, .. } => format!("native:{name}"),
            Coefficient::Tabulated { nodes, values } => {
                let mut h = Sha256::new();
                for v in nodes.iter().chain(values) {
                    h.update(v.to_le_bytes());
                }
                format!("table:{}", hex(&h.finalize()))
            }
        }
    }
}

impl fmt::Debug for Coefficient {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Coefficient({})", self.fingerprint())
    }
}

pub(crate) fn hex(bytes: &[u8]) -> String {
    bytes.iter().map(|b| format!("{b:02x}")).collect()
}

fn table_value(nodes: &[f64], values: &[f64], y: f64) -> f64 {
    let n = nodes.len();
    let i = nodes.partition_point(|&t| t <= y);
    let start = i.saturating_sub(TABLE_STENCIL / 2).min(n - TABLE_STENCIL);
    let xs = &nodes[start..start + TABLE_STENCIL];
    let vs = &values[start..start + TABLE_STENCIL];
    let mut total = 0.0;
    for j in 0..TABLE_STENCIL {
        if y == xs[j] {
            return vs[j];
        }
        let mut basis = 1.0;
        for k in 0..TABLE_STENCIL {
            if k != j {
                basis *= (y - xs[k]) / (xs[j] - xs[k]);
            }
        }
        total += basis * vs[j];
    }
    total
}

/// The equation `(p v')' - q v = -λ r v` on `[a, b]`.
#[derive(Clone, Debug)]
pub struct SLProblem {
    pub p: Coefficient,
    pub q: Coefficient,
    pub r: Coefficient,
    pub a: f64,
    pub b: f64,
}

impl SLProblem {
    pub fn new(p: Coefficient, q: Coefficient, r: Coefficient, a: f64, b: f64) -> Result<Self> {
        if !(a.is_finite() && b.is_finite() && a < b) {
            return Err(Error::InvalidInput(format!(
                "interval must satisfy A < B, got [{a}, {b}]"
            )));
        }
        for (name, c) in [("p", &p), ("q", &q), ("r", &r)] {
            if let Coefficient::Tabulated { nodes, .. } = c {
                if nodes[0] > a || nodes[nodes.len() - 1] < b {
                    return Err(Error::InvalidInput(format!(
                        "table for {name} does not cover [{a}, {b}]"
                    )));
                }
            }
        }
        Ok(Self { p, q, r, a, b })
    }

    pub fn from_expressions(p: &str, q: &str, r: &str, a: f64, b: f64) -> Result<Self> {
        Self::new(
            Coefficient::parse(p)?,
            Coefficient::parse(q)?,
            Coefficient::parse(r)?,
            a,
            b,
        )
    }

    pub fn has_tabulated(&self) -> bool {
        self.p.is_tabulated() || self.q.is_tabulated() || self.r.is_tabulated()
    }

    /// Hex digest identifying the problem (coefficients and interval).
    pub fn fingerprint(&self) -> String {
        let mut h = Sha256::new();
        for c in [&self.p, &self.q, &self.r] {
            h.update(c.fingerprint().as_bytes());
            h.update([0u8]);
        }
        h.update(self.a.to_le_bytes());
        h.update(self.b.to_le_bytes());
        hex(&h.finalize())
    }
}

/// Separated boundary conditions `a1 v(A) + a2 v'(A) = 0`, `b1 v(B) + b2 v'(B) = 0`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BoundarySpec {
    pub a1: f64,
    pub a2: f64,
    pub b1: f64,
    pub b2: f64,
}

impl BoundarySpec {
    pub fn new(a1: f64, a2: f64, b1: f64, b2: f64) -> Result<Self> {
        if (a1 == 0.0 && a2 == 0.0) || (b1 == 0.0 && b2 == 0.0) {
            return Err(Error::InvalidInput(
                "each boundary condition needs a nonzero coefficient".into(),
            ));
        }
        if ![a1, a2, b1, b2].iter().all(|v| v.is_finite()) {
            return Err(Error::InvalidInput(
                "boundary coefficients must be finite".into(),
            ));
        }
        Ok(Self { a1, a2, b1, b2 })
    }

    pub fn dirichlet() -> Self {
        Self {
            a1: 1.0,
            a2: 0.0,
            b1: 1.0,
            b2: 0.0,
        }
    }

    /// Unit-norm initial data `(v(A), v'(A))` satisfying the left condition.
    pub fn left_initial_data(&self) -> (f64, f64) {
        let norm = self.a1.hypot(self.a2);
        (self.a2 / norm, -self.a1 / norm)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn table_interpolation_reproduces_polynomials() {
        let nodes: Vec<f64> = (0..20).map(|i| (i as f64 * 0.1).powf(1.2)).collect();
        let values: Vec<f64> = nodes.iter().map(|y| 1.0 + y - 0.5 * y * y * y).collect();
        let c = Coefficient::tabulated(nodes.clone(), values.clone()).unwrap();
        assert_eq!(c.value(nodes[7]), values[7]);
        for y in [0.01, 0.33, 1.0, 1.9] {
            let expected = 1.0 + y - 0.5 * y * y * y;
            assert!((c.value(y) - expected).abs() < 1e-12);
        }
        assert!(c.derivative(0.5).is_none());
    }

    #[test]
    fn table_validation() {
        assert!(Coefficient::tabulated(vec![0.0, 1.0], vec![1.0, 1.0]).is_err());
        let nodes = vec![0.0, 0.2, 0.1, 0.3, 0.4, 0.5];
        assert!(Coefficient::tabulated(nodes, vec![1.0; 6]).is_err());
        let table = Coefficient::tabulated((0..6).map(|i| i as f64 * 0.1).collect(), vec![1.0; 6]).unwrap();
        let one = Coefficient::constant(1.0);
        assert!(SLProblem::new(table, one.clone(), one, 0.0, 1.0).is_err());
    }

    #[test]
    fn boundary_initial_data_satisfies_condition() {
        let bc = BoundarySpec::new(1.0, -1.0, 1.0, 1.0).unwrap();
        let (u, du) = bc.left_initial_data();
        assert!((bc.a1 * u + bc.a2 * du).abs() < 1e-15);
        assert!((u.hypot(du) - 1.0).abs() < 1e-15);
        assert!(BoundarySpec::new(0.0, 0.0, 1.0, 0.0).is_err());
    }

    #[test]
    fn fingerprint_tracks_definition() {
        let a = SLProblem::from_expressions("1", "0", "1", 0.0, 1.0).unwrap();
        let b = SLProblem::from_expressions("1", "0", "1", 0.0, 1.0).unwrap();
        let c = SLProblem::from_expressions("1", "y", "1", 0.0, 1.0).unwrap();
        assert_eq!(a.fingerprint(), b.fingerprint());
        assert_ne!(a.fingerprint(), c.fingerprint());
    }
}
