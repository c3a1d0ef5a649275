//! Liouville change of variables `x = l(y)`, `u = ρ v`, which maps the
//! Sturm–Liouville equation onto `u'' - Q(x) u = -λ u` on `[0, b]`.
//!
//! Nothing here builds an explicit `x` grid: every quantity is sampled on the
//! `y` grid, and `x` only appears through `l(y)`.

use std::sync::Arc;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::grid::{cumulative_integral, differentiate, interpolate, Grid, SampledFn};
use crate::problem::SLProblem;

/// Sampled change-of-variables data on the `y` grid.
#[derive(Debug, Clone)]
pub struct LiouvilleData {
    pub grid: Arc<Grid>,
    pub p: SampledFn,
    pub q: SampledFn,
    pub r: SampledFn,
    /// `l(y) = ∫_A^y √(r/p)`.
    pub l: SampledFn,
    /// `l(B)`, the length of the transformed interval.
    pub b: f64,
    /// `ρ = (p r)^{1/4}`.
    pub rho: SampledFn,
    pub rho_prime: SampledFn,
    pub sqrt_r_over_p: SampledFn,
    pub sqrt_p_over_r: SampledFn,
    /// Transformed potential `Q(l(y))`.
    pub potential: SampledFn,
    /// `[p (1/ρ)']'`, needed by the verification identities.
    pub flux_curvature: SampledFn,
    /// Whether `ρ'` and `Q` came from analytic derivatives.
    pub analytic: bool,
}

impl LiouvilleData {
    pub fn rho_at_a(&self) -> f64 {
        self.rho.first().re
    }
}

fn sample_positive(
    name: &'static str,
    c: &crate::problem::Coefficient,
    grid: &Arc<Grid>,
    positive: bool,
) -> Result<SampledFn> {
    let values: Vec<f64> = grid.points().iter().map(|&y| c.value(y)).collect();
    for (node, (&v, &y)) in values.iter().zip(grid.points()).enumerate() {
        if !v.is_finite() {
            return Err(Error::NonFinite {
                what: format!("coefficient {name}"),
                node,
            });
        }
        if positive && v <= 0.0 {
            return Err(Error::NonPositive {
                name,
                node,
                y,
                value: v,
            });
        }
    }
    SampledFn::from_real(Arc::clone(grid), values)
}

/// Samples the coefficients and builds `l`, `ρ`, `ρ'` and `Q`.
pub fn build_liouville(problem: &SLProblem, grid: &Arc<Grid>) -> Result<LiouvilleData> {
    if grid.a() != problem.a || grid.b() != problem.b {
        return Err(Error::InvalidGrid(format!(
            "grid [{}, {}] does not match the problem interval [{}, {}]",
            grid.a(),
            grid.b(),
            problem.a,
            problem.b
        )));
    }
    let p = sample_positive("p", &problem.p, grid, true)?;
    let r = sample_positive("r", &problem.r, grid, true)?;
    let q = sample_positive("q", &problem.q, grid, false)?;

    let sqrt_r_over_p = r.zip_map(&p, |r, p| (r / p).sqrt());
    let sqrt_p_over_r = sqrt_r_over_p.recip();
    let l = cumulative_integral(&sqrt_r_over_p)?;
    let b = l.last().re;
    let rho = r.zip_map(&p, |r, p| (r * p).sqrt().sqrt());

    let analytic = problem.p.has_derivatives() && problem.r.has_derivatives();
    let rho_prime = if analytic {
        let log_derivative = SampledFn::from_real_fn(grid, |y| {
            let (pv, rv) = (problem.p.value(y), problem.r.value(y));
            0.25 * (problem.p.derivative(y).unwrap_or(0.0) / pv
                + problem.r.derivative(y).unwrap_or(0.0) / rv)
        });
        &rho * &log_derivative
    } else {
        if problem.has_tabulated() {
            log::warn!(
                "tabulated coefficients: derivatives are numerical and accuracy may be lower"
            );
        }
        differentiate(&rho)?
    };

    let mut data = LiouvilleData {
        grid: Arc::clone(grid),
        p,
        q,
        r,
        l,
        b,
        rho,
        rho_prime,
        sqrt_r_over_p,
        sqrt_p_over_r,
        potential: SampledFn::zeros(grid),
        flux_curvature: SampledFn::zeros(grid),
        analytic,
    };
    let bracket = potential_bracket(problem, &data)?;
    data.potential = data
        .q
        .zip_map(&data.r, |q, r| q / r)
        .zip_map(&(&(&data.p / &data.r) * &bracket), |a, b| a + b * 0.25);
    data.flux_curvature = (&(&data.p / &data.rho) * &bracket).scale((-0.25).into());
    Ok(data)
}

/// `(a+c)' + ¾a² + ½ac - ¼c²` with `a = p'/p`, `c = r'/r`.
fn potential_bracket(problem: &SLProblem, data: &LiouvilleData) -> Result<SampledFn> {
    let grid = &data.grid;
    let analytic_second = problem.p.has_derivatives() && problem.r.has_derivatives();
    let bracket = if analytic_second {
        SampledFn::from_real_fn(grid, |y| {
            let (p, r) = (problem.p.value(y), problem.r.value(y));
            let a = problem.p.derivative(y).unwrap_or(0.0) / p;
            let c = problem.r.derivative(y).unwrap_or(0.0) / r;
            let da = problem.p.second_derivative(y).unwrap_or(0.0) / p - a * a;
            let dc = problem.r.second_derivative(y).unwrap_or(0.0) / r - c * c;
            da + dc + 0.75 * a * a + 0.5 * a * c - 0.25 * c * c
        })
    } else {
        let a = &differentiate(&data.p)? / &data.p;
        let c = &differentiate(&data.r)? / &data.r;
        let sum_prime = differentiate(&(&a + &c))?;
        let quadratic = a.zip_map(&c, |a, c| 0.75 * a * a + 0.5 * a * c - 0.25 * c * c);
        &sum_prime + &quadratic
    };
    if let Some(node) = bracket.values().iter().position(|v| !v.is_finite()) {
        return Err(Error::NonFinite {
            what: "transformed potential".into(),
            node,
        });
    }
    Ok(bracket)
}

/// `Q(l(y))` from the `p'/p`, `r'/r` form.
pub fn transformed_potential(problem: &SLProblem, data: &LiouvilleData) -> Result<SampledFn> {
    let bracket = potential_bracket(problem, data)?;
    Ok(data
        .q
        .zip_map(&data.r, |q, r| q / r)
        .zip_map(&(&(&data.p / &data.r) * &bracket), |a, b| a + b * 0.25))
}

/// `Q(l(y))` from the `q/r - (ρ/r)[p(1/ρ)']'` form, differentiating numerically.
/// Its distance from [`transformed_potential`] measures derivative quality.
pub fn transformed_potential_divergence_form(data: &LiouvilleData) -> Result<SampledFn> {
    let inv_rho_prime = data
        .rho_prime
        .zip_map(&data.rho, |dr, r| -dr / (r * r));
    let flux = differentiate(&(&data.p * &inv_rho_prime))?;
    let correction = &(&data.rho / &data.r) * &flux;
    Ok(&data.q.zip_map(&data.r, |q, r| q / r) - &correction)
}

/// `v(y) = u(l(y)) / ρ(y)` for `u` sampled on a grid over `[0, b]`.
pub fn apply_l_inverse(u: &SampledFn, data: &LiouvilleData) -> Result<SampledFn> {
    let xg = u.grid();
    if xg.a() != 0.0 || (xg.b() - data.b).abs() > 1e-12 * data.b.max(1.0) {
        return Err(Error::InvalidGrid(format!(
            "expected a grid over [0, {}], got [{}, {}]",
            data.b,
            xg.a(),
            xg.b()
        )));
    }
    let values = data
        .l
        .values()
        .iter()
        .zip(data.rho.values())
        .map(|(x, rho)| Ok(interpolate(u, x.re.min(xg.b()))? / rho))
        .collect::<Result<Vec<Complex64>>>()?;
    SampledFn::new(Arc::clone(&data.grid), values)
}
