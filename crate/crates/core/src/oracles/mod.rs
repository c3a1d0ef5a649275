//! Reference machinery independent of the series representation: a
//! high-order ODE integrator, the closed-form solution of the built-in test
//! problem, reference eigenvalues and the problem catalog.

pub mod catalog;
pub mod integrator;
pub mod kummer;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::grid::{integral, Grid, SampledFn};
use crate::problem::{BoundarySpec, SLProblem};
use crate::roots;

pub use integrator::{integrate_reference, integrate_to_end, ReferenceSolution};
pub use kummer::exact_kamke_solution;

/// Integrator tolerance used for reference eigenvalues.
pub const EIGEN_TOLERANCE: f64 = 1e-14;
pub const MAX_REFERENCE_COUNT: usize = 200;

/// `∫_A^B √(r/p)`, the length of the transformed interval.
pub fn transformed_length(problem: &SLProblem) -> Result<f64> {
    let grid = Grid::shared(problem.a, problem.b, 4001)?;
    let f = SampledFn::from_real_fn(&grid, |y| (problem.r.value(y) / problem.p.value(y)).sqrt());
    Ok(integral(&f)?.re)
}

/// Boundary form at `B` of the solution satisfying the left condition, for
/// `λ = sign · s²`.
fn characteristic(problem: &SLProblem, bc: &BoundarySpec, lambda: f64, tol: f64) -> f64 {
    let (ua, upa) = bc.left_initial_data();
    match integrate_to_end(problem, lambda.into(), ua.into(), upa.into(), tol) {
        Ok((u, up)) => (bc.b1 * u + bc.b2 * up).re,
        Err(_) => f64::NAN,
    }
}

/// First `count` eigenvalues `λ` in increasing order, found by shooting with
/// the reference integrator. Negative eigenvalues down to `-negative_floor²`
/// are included.
pub fn reference_eigenvalues(
    problem: &SLProblem,
    bc: &BoundarySpec,
    count: usize,
) -> Result<Vec<f64>> {
    reference_eigenvalues_with(problem, bc, count, EIGEN_TOLERANCE, 10.0)
}

pub fn reference_eigenvalues_with(
    problem: &SLProblem,
    bc: &BoundarySpec,
    count: usize,
    tol: f64,
    negative_floor: f64,
) -> Result<Vec<f64>> {
    if count > MAX_REFERENCE_COUNT {
        return Err(Error::InvalidInput(format!(
            "at most {MAX_REFERENCE_COUNT} reference eigenvalues, got {count}"
        )));
    }
    if count == 0 {
        return Ok(Vec::new());
    }
    let b = transformed_length(problem)?;
    let spacing = std::f64::consts::PI / b;
    let mut step = 0.2 * spacing;
    let refine_tol = roots::default_tolerance;

    // λ = -κ², κ in (0, negative_floor]
    let neg = |kappa: f64| characteristic(problem, bc, -kappa * kappa, tol);
    let mut out: Vec<f64> = Vec::new();
    for br in roots::scan(neg, 0.0, negative_floor, step) {
        if br.lo == 0.0 && br.hi == 0.0 {
            continue;
        }
        let k = roots::refine(neg, br, 1e-6, refine_tol).x;
        if k > 0.0 {
            out.push(-k * k);
        }
    }
    out.sort_by(f64::total_cmp);

    let pos = |omega: f64| characteristic(problem, bc, omega * omega, tol);
    let mut omega_max = (count as f64 + 3.0) * spacing + 2.0;
    loop {
        let brackets = roots::scan(pos, 0.0, omega_max, step);
        let mut found: Vec<f64> = Vec::with_capacity(brackets.len());
        for br in brackets {
            let w = roots::refine(pos, br, 1e-6, refine_tol).x;
            if w > 0.0 && found.last().map_or(true, |&last| w - last > 1e-9) {
                found.push(w);
            }
        }
        let simple = found.windows(2).all(|w| w[1] - w[0] >= 0.5 * spacing);
        if !simple {
            step *= 0.5;
            if step < 1e-4 * spacing {
                return Err(Error::InvalidInput("eigenvalue scan failed to separate roots".into()));
            }
            continue;
        }
        if out.len() + found.len() >= count {
            out.extend(found.iter().map(|w| w * w));
            out.truncate(count);
            return Ok(out);
        }
        omega_max *= 1.25;
    }
}

/// Relative distance between two values, `|a - b| / max(|b|, 1)`.
pub fn relative_gap(a: Complex64, b: Complex64) -> f64 {
    (a - b).norm() / b.norm().max(1.0)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn dirichlet_squares() {
        let problem = catalog::degenerate(0.0, std::f64::consts::PI);
        let eig = reference_eigenvalues(&problem, &BoundarySpec::dirichlet(), 8).unwrap();
        for (k, l) in eig.iter().enumerate() {
            let exact = ((k + 1) * (k + 1)) as f64;
            assert!((l - exact).abs() < 1e-10 * exact, "{l} vs {exact}");
        }
    }

    #[test]
    fn rejects_large_counts() {
        let problem = catalog::degenerate(0.0, 1.0);
        assert!(reference_eigenvalues(&problem, &BoundarySpec::dirichlet(), 201).is_err());
    }
}
