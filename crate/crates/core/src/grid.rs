//! Uniform grids and sampled functions.
//!
//! Every function of the independent variable (coefficients, seed solution,
//! formal powers, series coefficients) is carried as a [`SampledFn`] on a shared
//! uniform [`Grid`]. Integration, differentiation and off-grid evaluation all use
//! local Lagrange stencils that slide along the grid and shift inwards at the
//! endpoints, so the order of accuracy is the same everywhere.

use std::ops::{Add, Div, Mul, Neg, Sub};
use std::sync::{Arc, OnceLock};

use num_complex::Complex64;

use crate::error::{Error, Result};

/// Number of grid points used when nothing else is requested.
pub const DEFAULT_POINTS: usize = 2001;

/// Nodes per stencil of the cumulative quadrature (degree 7, order 8).
pub const QUADRATURE_STENCIL: usize = 8;
/// Nodes per stencil of the finite-difference derivative (order 6).
pub const DIFFERENTIATION_STENCIL: usize = 7;
/// Nodes per stencil of the interpolant (degree 7).
pub const INTERPOLATION_STENCIL: usize = 8;

/// A uniform grid `a = y_0 < y_1 < ... < y_{m-1} = b`.
#[derive(Debug, Clone, PartialEq)]
pub struct Grid {
    a: f64,
    b: f64,
    step: f64,
    points: Vec<f64>,
}

impl Grid {
    /// Builds a grid of `m` points. `m` must be odd and at least 5.
    pub fn new(a: f64, b: f64, m: usize) -> Result<Self> {
        if !(a.is_finite() && b.is_finite()) || a >= b {
            return Err(Error::InvalidGrid(format!(
                "endpoints must be finite with a < b, got [{a}, {b}]"
            )));
        }
        if m < 5 || m % 2 == 0 {
            return Err(Error::InvalidGrid(format!(
                "number of points must be odd and >= 5, got {m}"
            )));
        }
        let step = (b - a) / (m - 1) as f64;
        let mut points: Vec<f64> = (0..m).map(|i| a + i as f64 * step).collect();
        points[m - 1] = b;
        Ok(Self { a, b, step, points })
    }

    /// Same as [`Grid::new`] but wrapped for sharing between sampled functions.
    pub fn shared(a: f64, b: f64, m: usize) -> Result<Arc<Self>> {
        Self::new(a, b, m).map(Arc::new)
    }

    pub fn a(&self) -> f64 {
        self.a
    }

    pub fn b(&self) -> f64 {
        self.b
    }

    pub fn step(&self) -> f64 {
        self.step
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn points(&self) -> &[f64] {
        &self.points
    }

    /// Index of the last node not exceeding `y`, together with `y` in units of
    /// the step measured from that node.
    fn locate(&self, y: f64) -> Result<(usize, f64)> {
        if !(y >= self.a && y <= self.b) {
            return Err(Error::Domain {
                y,
                a: self.a,
                b: self.b,
            });
        }
        let s = (y - self.a) / self.step;
        let i = (s.floor() as usize).min(self.len() - 2);
        Ok((i, s - i as f64))
    }

    fn require(&self, width: usize) -> Result<()> {
        if self.len() < width {
            return Err(Error::InvalidGrid(format!(
                "{} points cannot hold a stencil of width {width}",
                self.len()
            )));
        }
        Ok(())
    }
}

/// First node of the stencil of `width` nodes centred on interval/node `i`.
fn stencil_start(i: usize, width: usize, len: usize, left: usize) -> usize {
    i.saturating_sub(left).min(len - width)
}

/// A complex function sampled on every node of a [`Grid`].
#[derive(Debug, Clone)]
pub struct SampledFn {
    grid: Arc<Grid>,
    values: Vec<Complex64>,
    real: bool,
}

impl SampledFn {
    pub fn new(grid: Arc<Grid>, values: Vec<Complex64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::InvalidGrid(format!(
                "{} samples supplied for a grid of {} points",
                values.len(),
                grid.len()
            )));
        }
        let real = values.iter().all(|v| v.im == 0.0);
        Ok(Self { grid, values, real })
    }

    pub fn from_real(grid: Arc<Grid>, values: Vec<f64>) -> Result<Self> {
        let mut f = Self::new(grid, values.into_iter().map(Complex64::from).collect())?;
        f.real = true;
        Ok(f)
    }

    pub fn from_fn(grid: &Arc<Grid>, f: impl Fn(f64) -> Complex64) -> Self {
        let values: Vec<Complex64> = grid.points().iter().map(|&y| f(y)).collect();
        let real = values.iter().all(|v| v.im == 0.0);
        Self {
            grid: Arc::clone(grid),
            values,
            real,
        }
    }

    pub fn from_real_fn(grid: &Arc<Grid>, f: impl Fn(f64) -> f64) -> Self {
        Self {
            grid: Arc::clone(grid),
            values: grid.points().iter().map(|&y| f(y).into()).collect(),
            real: true,
        }
    }

    pub fn constant(grid: &Arc<Grid>, c: Complex64) -> Self {
        Self {
            grid: Arc::clone(grid),
            values: vec![c; grid.len()],
            real: c.im == 0.0,
        }
    }

    pub fn zeros(grid: &Arc<Grid>) -> Self {
        Self::constant(grid, Complex64::new(0.0, 0.0))
    }

    pub fn grid(&self) -> &Arc<Grid> {
        &self.grid
    }

    pub fn values(&self) -> &[Complex64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [Complex64] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<Complex64> {
        self.values
    }

    /// True when every sample has zero imaginary part.
    pub fn is_real(&self) -> bool {
        self.real
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn first(&self) -> Complex64 {
        self.values[0]
    }

    pub fn last(&self) -> Complex64 {
        self.values[self.values.len() - 1]
    }

    pub fn re(&self) -> Vec<f64> {
        self.values.iter().map(|v| v.re).collect()
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().map(|v| v.norm()).fold(0.0, f64::max)
    }

    pub fn min_abs(&self) -> f64 {
        self.values.iter().map(|v| v.norm()).fold(f64::INFINITY, f64::min)
    }

    pub fn map(&self, f: impl Fn(Complex64) -> Complex64) -> Self {
        Self::with_values(&self.grid, self.values.iter().map(|&v| f(v)).collect())
    }

    /// Pointwise combination of two functions on the same grid.
    ///
    /// Panics when the grids differ.
    pub fn zip_map(&self, other: &Self, f: impl Fn(Complex64, Complex64) -> Complex64) -> Self {
        self.assert_same_grid(other);
        Self::with_values(
            &self.grid,
            self.values
                .iter()
                .zip(&other.values)
                .map(|(&a, &b)| f(a, b))
                .collect(),
        )
    }

    pub fn scale(&self, c: Complex64) -> Self {
        self.map(|v| v * c)
    }

    pub fn recip(&self) -> Self {
        self.map(|v| v.inv())
    }

    pub fn same_grid(&self, other: &Self) -> bool {
        Arc::ptr_eq(&self.grid, &other.grid) || *self.grid == *other.grid
    }

    fn assert_same_grid(&self, other: &Self) {
        assert!(
            self.same_grid(other),
            "sampled functions live on different grids"
        );
    }

    pub(crate) fn with_values(grid: &Arc<Grid>, values: Vec<Complex64>) -> Self {
        let real = values.iter().all(|v| v.im == 0.0);
        Self {
            grid: Arc::clone(grid),
            values,
            real,
        }
    }
}

macro_rules! pointwise_op {
    ($trait:ident, $method:ident, $op:tt) => {
        impl $trait<&SampledFn> for &SampledFn {
            type Output = SampledFn;
            fn $method(self, rhs: &SampledFn) -> SampledFn {
                self.zip_map(rhs, |a, b| a $op b)
            }
        }
        impl $trait<Complex64> for &SampledFn {
            type Output = SampledFn;
            fn $method(self, rhs: Complex64) -> SampledFn {
                self.map(|a| a $op rhs)
            }
        }
        impl $trait<f64> for &SampledFn {
            type Output = SampledFn;
            fn $method(self, rhs: f64) -> SampledFn {
                self.map(|a| a $op rhs)
            }
        }
    };
}

pointwise_op!(Add, add, +);
pointwise_op!(Sub, sub, -);
pointwise_op!(Mul, mul, *);
pointwise_op!(Div, div, /);

impl Neg for &SampledFn {
    type Output = SampledFn;
    fn neg(self) -> SampledFn {
        self.map(|a| -a)
    }
}

// Four-point Gauss-Legendre rule on [0, 1]; exact for the degree-7 basis polynomials.
const GAUSS_NODES: [f64; 4] = [
    0.069_431_844_202_973_71,
    0.330_009_478_207_571_87,
    0.669_990_521_792_428_1,
    0.930_568_155_797_026_3,
];
const GAUSS_WEIGHTS: [f64; 4] = [
    0.173_927_422_568_726_93,
    0.326_072_577_431_273_07,
    0.326_072_577_431_273_07,
    0.173_927_422_568_726_93,
];

/// Lagrange basis polynomial `j` on the integer nodes `0..width`, evaluated at `x`.
fn lagrange_basis(j: usize, width: usize, x: f64) -> f64 {
    (0..width)
        .filter(|&i| i != j)
        .map(|i| (x - i as f64) / (j as f64 - i as f64))
        .product()
}

/// `weights[t][j] = ∫_t^{t+1} L_j(x) dx` for the quadrature stencil.
fn quadrature_weights() -> &'static [[f64; QUADRATURE_STENCIL]; QUADRATURE_STENCIL - 1] {
    static WEIGHTS: OnceLock<[[f64; QUADRATURE_STENCIL]; QUADRATURE_STENCIL - 1]> =
        OnceLock::new();
    WEIGHTS.get_or_init(|| {
        let mut w = [[0.0; QUADRATURE_STENCIL]; QUADRATURE_STENCIL - 1];
        for (t, row) in w.iter_mut().enumerate() {
            for (j, wj) in row.iter_mut().enumerate() {
                *wj = GAUSS_NODES
                    .iter()
                    .zip(GAUSS_WEIGHTS)
                    .map(|(&x, gw)| gw * lagrange_basis(j, QUADRATURE_STENCIL, t as f64 + x))
                    .sum();
            }
        }
        w
    })
}

/// `weights[t][j] = L_j'(t)` for the differentiation stencil.
fn differentiation_weights() -> &'static [[f64; DIFFERENTIATION_STENCIL]; DIFFERENTIATION_STENCIL]
{
    static WEIGHTS: OnceLock<[[f64; DIFFERENTIATION_STENCIL]; DIFFERENTIATION_STENCIL]> =
        OnceLock::new();
    WEIGHTS.get_or_init(|| {
        let n = DIFFERENTIATION_STENCIL;
        let mut w = [[0.0; DIFFERENTIATION_STENCIL]; DIFFERENTIATION_STENCIL];
        for (t, row) in w.iter_mut().enumerate() {
            for (j, wj) in row.iter_mut().enumerate() {
                *wj = if j == t {
                    (0..n)
                        .filter(|&i| i != t)
                        .map(|i| 1.0 / (t as f64 - i as f64))
                        .sum()
                } else {
                    let num: f64 = (0..n)
                        .filter(|&i| i != j && i != t)
                        .map(|i| t as f64 - i as f64)
                        .product();
                    let den: f64 = (0..n)
                        .filter(|&i| i != j)
                        .map(|i| j as f64 - i as f64)
                        .product();
                    num / den
                };
            }
        }
        w
    })
}

/// Compensated (Neumaier) running sum.
#[derive(Default, Clone, Copy)]
struct Compensated {
    sum: Complex64,
    carry: Complex64,
}

impl Compensated {
    fn add(&mut self, x: Complex64) {
        let t = self.sum + x;
        let part = |s: f64, x: f64, t: f64| {
            if s.abs() >= x.abs() {
                (s - t) + x
            } else {
                (x - t) + s
            }
        };
        self.carry += Complex64::new(
            part(self.sum.re, x.re, t.re),
            part(self.sum.im, x.im, t.im),
        );
        self.sum = t;
    }

    fn value(&self) -> Complex64 {
        self.sum + self.carry
    }
}

/// `F(y) = ∫_a^y f(s) ds` at every node, with `F(a) = 0`.
///
/// Each cell is integrated with the degree-7 interpolant through the eight
/// nearest nodes, so the rule is exact for polynomials up to degree 7.
pub fn cumulative_integral(f: &SampledFn) -> Result<SampledFn> {
    let grid = f.grid();
    grid.require(QUADRATURE_STENCIL)?;
    let weights = quadrature_weights();
    let m = grid.len();
    let h = grid.step();
    let v = f.values();
    let mut out = Vec::with_capacity(m);
    out.push(Complex64::new(0.0, 0.0));
    let mut acc = Compensated::default();
    for i in 0..m - 1 {
        let start = stencil_start(i, QUADRATURE_STENCIL, m, QUADRATURE_STENCIL / 2 - 1);
        let w = &weights[i - start];
        let cell: Complex64 = w
            .iter()
            .zip(&v[start..start + QUADRATURE_STENCIL])
            .map(|(&wj, &fj)| fj * wj)
            .sum();
        acc.add(cell * h);
        out.push(acc.value());
    }
    let mut integral = SampledFn::with_values(grid, out);
    integral.real = f.real;
    Ok(integral)
}

/// `∫_a^b f(s) ds`.
pub fn integral(f: &SampledFn) -> Result<Complex64> {
    cumulative_integral(f).map(|prim| prim.last())
}

/// Sixth-order finite-difference derivative, centred in the interior and
/// one-sided near the endpoints.
pub fn differentiate(f: &SampledFn) -> Result<SampledFn> {
    let grid = f.grid();
    grid.require(DIFFERENTIATION_STENCIL)?;
    let weights = differentiation_weights();
    let m = grid.len();
    let inv_h = 1.0 / grid.step();
    let v = f.values();
    let out = (0..m)
        .map(|i| {
            let start = stencil_start(i, DIFFERENTIATION_STENCIL, m, DIFFERENTIATION_STENCIL / 2);
            let w = &weights[i - start];
            let d: Complex64 = w
                .iter()
                .zip(&v[start..start + DIFFERENTIATION_STENCIL])
                .map(|(&wj, &fj)| fj * wj)
                .sum();
            d * inv_h
        })
        .collect();
    let mut derivative = SampledFn::with_values(grid, out);
    derivative.real = f.real;
    Ok(derivative)
}

/// Barycentric weights `(-1)^j C(n-1, j)` of equispaced interpolation.
fn barycentric_weights() -> &'static [f64; INTERPOLATION_STENCIL] {
    static WEIGHTS: OnceLock<[f64; INTERPOLATION_STENCIL]> = OnceLock::new();
    WEIGHTS.get_or_init(|| {
        let mut w = [0.0; INTERPOLATION_STENCIL];
        let mut binom = 1.0;
        for (j, wj) in w.iter_mut().enumerate() {
            *wj = if j % 2 == 0 { binom } else { -binom };
            binom = binom * (INTERPOLATION_STENCIL - 1 - j) as f64 / (j + 1) as f64;
        }
        w
    })
}

/// Degree-7 local interpolation of `f` at an arbitrary `y` in the grid range.
/// Returns the stored sample exactly when `y` is a node.
pub fn interpolate(f: &SampledFn, y: f64) -> Result<Complex64> {
    let grid = f.grid();
    grid.require(INTERPOLATION_STENCIL)?;
    let (i, frac) = grid.locate(y)?;
    if frac == 0.0 {
        return Ok(f.values()[i]);
    }
    if frac == 1.0 {
        return Ok(f.values()[i + 1]);
    }
    let m = grid.len();
    let start = stencil_start(i, INTERPOLATION_STENCIL, m, INTERPOLATION_STENCIL / 2 - 1);
    let s = (i - start) as f64 + frac;
    Ok(barycentric(&f.values()[start..start + INTERPOLATION_STENCIL], s))
}

fn barycentric(v: &[Complex64], s: f64) -> Complex64 {
    let w = barycentric_weights();
    let mut num = Complex64::new(0.0, 0.0);
    let mut den = 0.0;
    for (j, (&wj, &fj)) in w.iter().zip(v).enumerate() {
        let d = s - j as f64;
        if d == 0.0 {
            return fj;
        }
        let c = wj / d;
        num += fj * c;
        den += c;
    }
    num / den
}
