//! Adaptive Gragg–Bulirsch–Stoer extrapolation for the first-order system
//! `v' = w / p`, `w' = (q - λ r) v` with `w = p v'`.

use std::sync::Arc;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::grid::{Grid, SampledFn};
use crate::problem::SLProblem;

/// Substep counts of the extrapolation table; the last column has order 16.
const SEQUENCE: [usize; 8] = [2, 4, 6, 8, 10, 12, 14, 16];
const SAFETY: f64 = 0.8;

type State = [Complex64; 2];

pub const MIN_TOLERANCE: f64 = 1e-14;

struct System<'a> {
    problem: &'a SLProblem,
    lambda: Complex64,
}

impl System<'_> {
    fn rhs(&self, y: f64, s: &State) -> State {
        let p = self.problem.p.value(y);
        let q = self.problem.q.value(y);
        let r = self.problem.r.value(y);
        [s[1] / p, (q - self.lambda * r) * s[0]]
    }

    /// Modified midpoint rule over `[y, y + h]` with `n` substeps.
    fn midpoint(&self, y: f64, s: &State, f0: &State, h: f64, n: usize) -> State {
        let sub = h / n as f64;
        let mut prev = *s;
        let mut cur = [s[0] + f0[0] * sub, s[1] + f0[1] * sub];
        for k in 1..n {
            let f = self.rhs(y + k as f64 * sub, &cur);
            let next = [prev[0] + f[0] * (2.0 * sub), prev[1] + f[1] * (2.0 * sub)];
            prev = cur;
            cur = next;
        }
        let f = self.rhs(y + h, &cur);
        [
            (cur[0] + prev[0] + f[0] * sub) * 0.5,
            (cur[1] + prev[1] + f[1] * sub) * 0.5,
        ]
    }

    /// One extrapolated step. Returns the new state and the scaled error.
    fn step(&self, y: f64, s: &State, h: f64, tol: f64) -> (State, f64) {
        let f0 = self.rhs(y, s);
        let mut prev_row: Vec<State> = Vec::new();
        let mut err = f64::INFINITY;
        for (j, &nj) in SEQUENCE.iter().enumerate() {
            let mut row = Vec::with_capacity(j + 1);
            row.push(self.midpoint(y, s, &f0, h, nj));
            for k in 1..=j {
                let ratio = (nj as f64 / SEQUENCE[j - k] as f64).powi(2) - 1.0;
                let (a, b) = (row[k - 1], prev_row[k - 1]);
                row.push([a[0] + (a[0] - b[0]) / ratio, a[1] + (a[1] - b[1]) / ratio]);
            }
            if j > 0 {
                let (t, last) = (row[j], row[j - 1]);
                err = (0..2)
                    .map(|i| {
                        let scale = tol * (1.0 + s[i].norm().max(t[i].norm()));
                        (t[i] - last[i]).norm() / scale
                    })
                    .fold(0.0, f64::max);
            }
            prev_row = row;
        }
        (prev_row[SEQUENCE.len() - 1], err)
    }

    /// Integrates from `y0` to `y1`, adapting the step; `h` carries the
    /// suggested step between calls.
    fn advance(&self, y0: f64, y1: f64, s: &mut State, h: &mut f64, tol: f64) -> Result<()> {
        let mut y = y0;
        let min_step = 1e-12 * (self.problem.b - self.problem.a);
        while y < y1 {
            let last = *h >= y1 - y;
            let step = if last { y1 - y } else { *h };
            let (next, err) = self.step(y, s, step, tol);
            let finite = next.iter().all(|v| v.is_finite());
            if finite && err <= 1.0 {
                *s = next;
                y = if last { y1 } else { y + step };
                let factor = if err == 0.0 {
                    4.0
                } else {
                    (SAFETY * err.powf(-1.0 / 15.0)).clamp(0.2, 4.0)
                };
                if !last || factor < 1.0 {
                    *h = step * factor;
                }
            } else {
                *h = step * 0.25;
                if *h < min_step {
                    return Err(Error::StepUnderflow(y));
                }
            }
        }
        Ok(())
    }
}

/// Dense reference solution on a grid.
#[derive(Debug, Clone)]
pub struct ReferenceSolution {
    pub u: SampledFn,
    pub u_prime: SampledFn,
    pub tolerance: f64,
    pub method: &'static str,
    /// Relative endpoint change when the run is repeated at half the tolerance.
    pub consistency: f64,
}

fn check_tolerance(tol: f64) -> Result<()> {
    if tol.is_finite() && tol >= MIN_TOLERANCE {
        Ok(())
    } else {
        Err(Error::InvalidInput(format!(
            "integrator tolerance must be at least {MIN_TOLERANCE:e}, got {tol:e}"
        )))
    }
}

fn initial_state(problem: &SLProblem, u_a: Complex64, up_a: Complex64) -> State {
    [u_a, up_a * problem.p.value(problem.a)]
}

/// Solution at the grid nodes, stepping exactly onto each node.
fn dense(
    problem: &SLProblem,
    lambda: Complex64,
    u_a: Complex64,
    up_a: Complex64,
    tol: f64,
    grid: &Arc<Grid>,
) -> Result<(Vec<Complex64>, Vec<Complex64>)> {
    let sys = System { problem, lambda };
    let mut s = initial_state(problem, u_a, up_a);
    let points = grid.points();
    let mut u = Vec::with_capacity(points.len());
    let mut up = Vec::with_capacity(points.len());
    let mut h = grid.step();
    u.push(s[0]);
    up.push(s[1] / problem.p.value(points[0]));
    for w in points.windows(2) {
        sys.advance(w[0], w[1], &mut s, &mut h, tol)?;
        u.push(s[0]);
        up.push(s[1] / problem.p.value(w[1]));
    }
    Ok((u, up))
}

/// Reference solution of `(p u')' - q u = -λ r u`, `u(A) = u_a`, `u'(A) = up_a`
/// sampled on `grid`.
pub fn integrate_reference(
    problem: &SLProblem,
    lambda: Complex64,
    u_a: Complex64,
    up_a: Complex64,
    tol: f64,
    grid: &Arc<Grid>,
) -> Result<ReferenceSolution> {
    check_tolerance(tol)?;
    if grid.a() != problem.a || grid.b() != problem.b {
        return Err(Error::InvalidGrid("grid does not span the problem interval".into()));
    }
    let (u, up) = dense(problem, lambda, u_a, up_a, tol, grid)?;
    let half = integrate_to_end(problem, lambda, u_a, up_a, (tol / 2.0).max(MIN_TOLERANCE))?;
    let end = (u[u.len() - 1], up[up.len() - 1]);
    let consistency = ((end.0 - half.0).norm() / end.0.norm().max(1.0))
        .max((end.1 - half.1).norm() / end.1.norm().max(1.0));
    if consistency > 10.0 * tol.max(1e-12) {
        log::warn!("reference integration is not self-consistent: {consistency:e}");
    }
    Ok(ReferenceSolution {
        u: SampledFn::new(Arc::clone(grid), u)?,
        u_prime: SampledFn::new(Arc::clone(grid), up)?,
        tolerance: tol,
        method: "gbs-extrapolation",
        consistency,
    })
}

/// `(u(B), u'(B))` without dense output.
pub fn integrate_to_end(
    problem: &SLProblem,
    lambda: Complex64,
    u_a: Complex64,
    up_a: Complex64,
    tol: f64,
) -> Result<(Complex64, Complex64)> {
    check_tolerance(tol)?;
    let sys = System { problem, lambda };
    let mut s = initial_state(problem, u_a, up_a);
    let mut h = (problem.b - problem.a) / 64.0;
    sys.advance(problem.a, problem.b, &mut s, &mut h, tol)?;
    Ok((s[0], s[1] / problem.p.value(problem.b)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::oracles::catalog;

    #[test]
    fn cosine_for_degenerate_problem() {
        let problem = catalog::degenerate(0.0, 3.0);
        let grid = Grid::shared(0.0, 3.0, 301).unwrap();
        let sol =
            integrate_reference(&problem, 1.0.into(), 1.0.into(), 0.0.into(), 1e-13, &grid).unwrap();
        for ((u, up), &y) in sol.u.values().iter().zip(sol.u_prime.values()).zip(grid.points()) {
            assert!((u - y.cos()).norm() < 1e-12);
            assert!((up + y.sin()).norm() < 1e-12);
        }
    }

    #[test]
    fn linear_in_initial_data() {
        let problem = catalog::kamke();
        let lambda = Complex64::new(100.0, 0.0);
        let a = integrate_to_end(&problem, lambda, 1.0.into(), 1.0.into(), 1e-13).unwrap();
        let b = integrate_to_end(&problem, lambda, 2.0.into(), 2.0.into(), 1e-13).unwrap();
        assert!((b.0 - a.0 * 2.0).norm() < 1e-12 * a.0.norm().max(1.0));
    }

    #[test]
    fn kamke_endpoint_is_stable() {
        let problem = catalog::kamke();
        let lambda = Complex64::new(52.0 * 52.0, 0.0);
        let grid = Grid::shared(0.0, 2.0, 2001).unwrap();
        let sol = integrate_reference(&problem, lambda, 1.0.into(), 1.0.into(), 1e-12, &grid).unwrap();
        assert!(sol.consistency <= 1e-10, "{}", sol.consistency);
    }

    #[test]
    fn rejects_tiny_tolerance() {
        let problem = catalog::kamke();
        assert!(integrate_to_end(&problem, 1.0.into(), 1.0.into(), 0.0.into(), 1e-16).is_err());
    }
}
