use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("point {y} lies outside [{a}, {b}]")]
    Domain { y: f64, a: f64, b: f64 },

    #[error("coefficient {name} must be positive on the interval, got {value} at y = {y} (node {node})")]
    NonPositive {
        name: &'static str,
        node: usize,
        y: f64,
        value: f64,
    },

    #[error("non-finite value in {what} at node {node}")]
    NonFinite { what: String, node: usize },

    #[error("seed solution nearly vanishes: |g| = {min_abs:e} at node {node} (max |g| = {max_abs:e})")]
    VanishingSeed {
        node: usize,
        min_abs: f64,
        max_abs: f64,
    },

    #[error("formal power ladder overflowed at order {0}; request fewer powers")]
    LadderOverflow(usize),

    #[error("direct coefficient formula is limited to n <= {cap}, got n = {n}")]
    DirectFormulaCap { n: usize, cap: usize },

    #[error("spherical Bessel order {order} exceeds the supported maximum {cap}")]
    BesselOrder { order: usize, cap: usize },

    #[error("the spectral parameter must be nonzero here; use the lambda = 0 basis")]
    ZeroOmega,

    #[error("parse error at column {column}: {message}")]
    Parse { column: usize, message: String },

    #[error("integrator step size underflow at y = {0}")]
    StepUnderflow(f64),

    #[error("|z| = {0} exceeds the series cap; use the reference integrator")]
    SeriesCap(f64),

    #[error("truncation N = {requested} exceeds the {available} computed coefficients")]
    Truncation { requested: usize, available: usize },

    #[error("cache: {0}")]
    Cache(String),

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}
