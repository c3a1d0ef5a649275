//! Truncated Bessel-series solutions, initial value problems and eigenvalues.

use std::sync::Arc;

use num_complex::Complex64;
use rayon::prelude::*;

use crate::bessel::j_batch;
use crate::coefficients::{compute_coefficients, CoefficientSet};
use crate::error::{Error, Result};
use crate::grid::{cumulative_integral, interpolate, Grid, SampledFn};
use crate::liouville::{build_liouville, LiouvilleData};
use crate::problem::{BoundarySpec, SLProblem};
use crate::roots;
use crate::seed::{compute_seed, SeedSolution};

/// `ω`-independent quantities at one point.
#[derive(Debug, Clone)]
struct PointData {
    l: f64,
    rho: f64,
    log_rho_prime: f64,
    sqrt_r_over_p: f64,
    g1: Complex64,
    g2: Complex64,
    alpha: Vec<Complex64>,
    mu: Vec<Complex64>,
}

/// `v_1, v_2` and their derivatives at one point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BasisValues {
    pub v1: Complex64,
    pub v2: Complex64,
    pub v1_prime: Complex64,
    pub v2_prime: Complex64,
}

/// Basis sampled on the grid.
#[derive(Debug, Clone)]
pub struct Basis {
    pub v1: SampledFn,
    pub v2: SampledFn,
    pub v1_prime: SampledFn,
    pub v2_prime: SampledFn,
}

/// Solution of an initial value problem on the grid.
#[derive(Debug, Clone)]
pub struct DenseSolution {
    pub u: SampledFn,
    pub u_prime: SampledFn,
}

/// One eigenvalue. For `λ < 0`, `omega` holds `√|λ|` (the spectral parameter
/// is `i·omega`).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EigenResult {
    pub index: usize,
    pub omega: f64,
    pub lambda: f64,
    pub residual: f64,
    pub iterations: usize,
}

#[derive(Debug, Clone)]
pub struct EigenOptions {
    pub omega_max: f64,
    /// Keep extending the scan until this many eigenvalues are found.
    pub count: Option<usize>,
    /// Also sweep `λ ∈ [-negative_floor², 0)`.
    pub negative_floor: Option<f64>,
}

#[derive(Debug, Clone)]
pub struct EigenScan {
    pub eigenvalues: Vec<EigenResult>,
    /// Whether the count matched the asymptotic estimate `⌊ω b / π⌋ ± 2`.
    pub count_consistent: bool,
    pub step: f64,
}

/// Everything needed to evaluate solutions for any `ω`.
#[derive(Debug, Clone)]
pub struct SolutionEvaluator {
    pub data: LiouvilleData,
    pub seed: SeedSolution,
    pub coeffs: Arc<CoefficientSet>,
    terms: usize,
    nodes: Vec<PointData>,
    /// `∫_A^y ds / (p g²)` for the `λ = 0` basis.
    zero_integral: SampledFn,
}

impl SolutionEvaluator {
    /// Runs the whole pipeline: transformation, seed, coefficients. The
    /// truncation defaults to the optimal one found by the identities.
    pub fn build(problem: &SLProblem, points: usize, n_max: usize) -> Result<Self> {
        let grid = Grid::shared(problem.a, problem.b, points)?;
        let data = build_liouville(problem, &grid)?;
        let seed = compute_seed(&data)?;
        let coeffs = compute_coefficients(&seed, &data, n_max)?;
        let n_opt = coeffs.n_opt();
        Self::from_parts(data, seed, Arc::new(coeffs), n_opt)
    }

    pub fn from_parts(
        data: LiouvilleData,
        seed: SeedSolution,
        coeffs: Arc<CoefficientSet>,
        terms: usize,
    ) -> Result<Self> {
        if terms > coeffs.n_max() {
            return Err(Error::Truncation {
                requested: terms,
                available: coeffs.n_max(),
            });
        }
        if !coeffs.alpha[0].same_grid(&data.l) {
            return Err(Error::InvalidGrid("coefficients live on a different grid".into()));
        }
        let zero_integral = cumulative_integral(&(&(&seed.g * &seed.g) * &data.p).recip())?;
        let nodes = (0..data.grid.len())
            .map(|i| PointData {
                l: data.l.values()[i].re,
                rho: data.rho.values()[i].re,
                log_rho_prime: (data.rho_prime.values()[i] / data.rho.values()[i]).re,
                sqrt_r_over_p: data.sqrt_r_over_p.values()[i].re,
                g1: coeffs.g1.values()[i],
                g2: coeffs.g2.values()[i],
                alpha: coeffs.alpha.iter().map(|f| f.values()[i]).collect(),
                mu: coeffs.mu.iter().map(|f| f.values()[i]).collect(),
            })
            .collect();
        Ok(Self {
            data,
            seed,
            coeffs,
            terms,
            nodes,
            zero_integral,
        })
    }

    pub fn terms(&self) -> usize {
        self.terms
    }

    /// Changes the truncation `N`.
    pub fn with_terms(mut self, terms: usize) -> Result<Self> {
        if terms > self.coeffs.n_max() {
            return Err(Error::Truncation {
                requested: terms,
                available: self.coeffs.n_max(),
            });
        }
        self.terms = terms;
        Ok(self)
    }

    pub fn grid(&self) -> &Arc<Grid> {
        &self.data.grid
    }

    fn combine(&self, omega: Complex64, d: &PointData) -> Result<BasisValues> {
        let n = self.terms;
        let z = omega * d.l;
        let j = j_batch(z, n)?.values;
        let zero = Complex64::new(0.0, 0.0);
        let (mut s_a1, mut s_a2, mut s_m1, mut s_m2) = (zero, zero, zero, zero);
        for (k, jk) in j.iter().enumerate() {
            let sign = if (k / 2) % 2 == 0 { 2.0 } else { -2.0 };
            let (a, m) = (d.alpha[k] * jk * sign, d.mu[k] * jk * sign);
            if k % 2 == 0 {
                s_a1 += a;
                s_m1 += m;
            } else {
                s_a2 += a;
                s_m2 += m;
            }
        }
        let (cos, sin) = (z.cos(), z.sin());
        let v1 = cos / d.rho + s_a1;
        let v2 = sin / d.rho + s_a2;
        let v1_prime =
            ((d.g1 * cos - omega * sin) / d.rho + s_m1) * d.sqrt_r_over_p - v1 * d.log_rho_prime;
        let v2_prime =
            ((d.g2 * sin + omega * cos) / d.rho + s_m2) * d.sqrt_r_over_p - v2 * d.log_rho_prime;
        Ok(BasisValues {
            v1,
            v2,
            v1_prime,
            v2_prime,
        })
    }

    fn check_omega(omega: Complex64) -> Result<()> {
        if omega == Complex64::new(0.0, 0.0) {
            Err(Error::ZeroOmega)
        } else {
            Ok(())
        }
    }

    /// Basis at grid node `i`.
    pub fn basis_at_node(&self, omega: Complex64, i: usize) -> Result<BasisValues> {
        Self::check_omega(omega)?;
        self.combine(omega, &self.nodes[i])
    }

    /// Basis at an arbitrary point, interpolating the `ω`-independent data.
    pub fn basis_at(&self, omega: Complex64, y: f64) -> Result<BasisValues> {
        Self::check_omega(omega)?;
        let d = &self.data;
        let c = &self.coeffs;
        let log_rho_prime = &d.rho_prime / &d.rho;
        let point = PointData {
            l: interpolate(&d.l, y)?.re,
            rho: interpolate(&d.rho, y)?.re,
            log_rho_prime: interpolate(&log_rho_prime, y)?.re,
            sqrt_r_over_p: interpolate(&d.sqrt_r_over_p, y)?.re,
            g1: interpolate(&c.g1, y)?,
            g2: interpolate(&c.g2, y)?,
            alpha: c.alpha[..=self.terms]
                .iter()
                .map(|f| interpolate(f, y))
                .collect::<Result<_>>()?,
            mu: c.mu[..=self.terms]
                .iter()
                .map(|f| interpolate(f, y))
                .collect::<Result<_>>()?,
        };
        self.combine(omega, &point)
    }

    /// Basis on the whole grid.
    pub fn eval_basis(&self, omega: Complex64) -> Result<Basis> {
        Self::check_omega(omega)?;
        let values: Vec<BasisValues> = self
            .nodes
            .par_iter()
            .map(|d| self.combine(omega, d))
            .collect::<Result<_>>()?;
        let grid = self.grid();
        let pick = |f: fn(&BasisValues) -> Complex64| {
            SampledFn::new(Arc::clone(grid), values.iter().map(f).collect())
        };
        Ok(Basis {
            v1: pick(|b| b.v1)?,
            v2: pick(|b| b.v2)?,
            v1_prime: pick(|b| b.v1_prime)?,
            v2_prime: pick(|b| b.v2_prime)?,
        })
    }

    /// `(c_1, c_2)` such that `u = c_1 v_1 + c_2 v_2` (or the `λ = 0` basis)
    /// meets the initial data.
    fn ivp_constants(&self, omega: Complex64, u_a: Complex64, up_a: Complex64) -> (Complex64, Complex64) {
        let rho_a = self.data.rho_at_a();
        let g_prime_a = self.seed.g_prime.first();
        let c1 = u_a * rho_a;
        let residual = up_a - c1 * g_prime_a;
        if omega == Complex64::new(0.0, 0.0) {
            (c1, residual * self.data.p.first().re * self.seed.g.first())
        } else {
            (c1, residual * rho_a * self.data.sqrt_p_over_r.first().re / omega)
        }
    }

    /// Solution with `u(A) = u_a`, `u'(A) = up_a` on the grid.
    pub fn solve_ivp(&self, omega: Complex64, u_a: Complex64, up_a: Complex64) -> Result<DenseSolution> {
        let (c1, c2) = self.ivp_constants(omega, u_a, up_a);
        if omega == Complex64::new(0.0, 0.0) {
            let g = &self.seed.g;
            let second = g * &self.zero_integral;
            let second_prime = &(&self.seed.g_prime * &self.zero_integral)
                + &(&self.data.p * g).recip();
            return Ok(DenseSolution {
                u: &g.scale(c1) + &second.scale(c2),
                u_prime: &self.seed.g_prime.scale(c1) + &second_prime.scale(c2),
            });
        }
        let b = self.eval_basis(omega)?;
        Ok(DenseSolution {
            u: &b.v1.scale(c1) + &b.v2.scale(c2),
            u_prime: &b.v1_prime.scale(c1) + &b.v2_prime.scale(c2),
        })
    }

    /// `(u(B), u'(B))` for the given initial data.
    pub fn endpoint(&self, omega: Complex64, u_a: Complex64, up_a: Complex64) -> Result<(Complex64, Complex64)> {
        let (c1, c2) = self.ivp_constants(omega, u_a, up_a);
        let last = self.nodes.len() - 1;
        if omega == Complex64::new(0.0, 0.0) {
            let g = self.seed.g.last();
            let gp = self.seed.g_prime.last();
            let w = self.zero_integral.last();
            let pb = self.data.p.last().re;
            return Ok((c1 * g + c2 * g * w, c1 * gp + c2 * (gp * w + 1.0 / (pb * g))));
        }
        let b = self.basis_at_node(omega, last)?;
        Ok((c1 * b.v1 + c2 * b.v2, c1 * b.v1_prime + c2 * b.v2_prime))
    }

    /// `Δ(ω) = b_1 u(B) + b_2 u'(B)` for the solution meeting the left condition.
    pub fn characteristic(&self, omega: Complex64, bc: &BoundarySpec) -> Result<Complex64> {
        let (ua, upa) = bc.left_initial_data();
        let (u, up) = self.endpoint(omega, ua.into(), upa.into())?;
        Ok(bc.b1 * u + bc.b2 * up)
    }

    fn real_characteristic(&self, omega: Complex64, bc: &BoundarySpec) -> f64 {
        self.characteristic(omega, bc).map_or(f64::NAN, |d| d.re)
    }

    /// Eigenvalues from sign changes of `Re Δ` on the real `ω` axis (and the
    /// imaginary axis when requested).
    pub fn find_eigenvalues(&self, bc: &BoundarySpec, opts: &EigenOptions) -> Result<EigenScan> {
        let b = self.data.b;
        let spacing = std::f64::consts::PI / b;
        let mut step = 0.2 * spacing;
        let refine_tol = roots::default_tolerance;
        let mut omega_max = opts.omega_max.max(0.0);
        if let Some(count) = opts.count {
            omega_max = omega_max.max((count as f64 + 3.0) * spacing);
        }

        let mut negative = Vec::new();
        if let Some(floor) = opts.negative_floor {
            let f = |k: f64| self.real_characteristic(Complex64::new(0.0, k), bc);
            for br in roots::scan(f, 0.0, floor, step) {
                let root = roots::refine(f, br, 1e-6, refine_tol);
                if root.x > 0.0 {
                    negative.push(EigenResult {
                        index: 0,
                        omega: root.x,
                        lambda: -root.x * root.x,
                        residual: root.value.abs(),
                        iterations: root.iterations,
                    });
                }
            }
            negative.sort_by(|a, b| a.lambda.total_cmp(&b.lambda));
        }

        let f = |w: f64| self.real_characteristic(w.into(), bc);
        let mut rescans = 0;
        loop {
            let brackets = if omega_max > 0.0 {
                roots::scan(f, 0.0, omega_max, step)
            } else {
                Vec::new()
            };
            let mut positive: Vec<EigenResult> = brackets
                .par_iter()
                .map(|br| {
                    let root = roots::refine(f, *br, 1e-6, refine_tol);
                    EigenResult {
                        index: 0,
                        omega: root.x,
                        lambda: root.x * root.x,
                        residual: root.value.abs(),
                        iterations: root.iterations,
                    }
                })
                .collect();
            positive.retain(|e| e.omega > 0.0 || e.lambda == 0.0);
            positive.dedup_by(|a, b| (a.omega - b.omega).abs() <= 1e-9 * a.omega.max(1.0));
            let expected = (omega_max * b / std::f64::consts::PI).floor();
            let found = positive.len() as f64;
            let consistent = omega_max == 0.0 || (found - expected).abs() <= 2.0;
            if !consistent && rescans < 3 {
                log::warn!(
                    "found {found} eigenvalues below ω = {omega_max}, expected about {expected}; rescanning at half step"
                );
                step *= 0.5;
                rescans += 1;
                continue;
            }
            if let Some(count) = opts.count {
                if negative.len() + positive.len() < count {
                    omega_max = omega_max * 1.25 + spacing;
                    continue;
                }
            }
            let mut all: Vec<EigenResult> = negative.iter().copied().chain(positive).collect();
            if let Some(count) = opts.count {
                all.truncate(count);
            }
            for (k, e) in all.iter_mut().enumerate() {
                e.index = k + 1;
            }
            return Ok(EigenScan {
                eigenvalues: all,
                count_consistent: consistent,
                step,
            });
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::oracles::catalog;

    #[test]
    fn degenerate_basis_is_trigonometric() {
        let problem = catalog::degenerate(0.5, 2.0);
        let ev = SolutionEvaluator::build(&problem, 301, 10).unwrap();
        for &w in &[1.0, 10.0, 100.0] {
            let b = ev.eval_basis(w.into()).unwrap();
            for (i, &y) in ev.grid().points().iter().enumerate() {
                let t = w * (y - 0.5);
                assert!((b.v1.values()[i] - t.cos()).norm() < 1e-13);
                assert!((b.v2.values()[i] - t.sin()).norm() < 1e-13);
                assert!((b.v1_prime.values()[i] + w * t.sin()).norm() < 1e-13 * w);
            }
        }
    }

    #[test]
    fn zero_omega_is_rejected_by_the_series() {
        let problem = catalog::degenerate(0.0, 1.0);
        let ev = SolutionEvaluator::build(&problem, 101, 4).unwrap();
        assert!(matches!(ev.eval_basis(0.0.into()), Err(Error::ZeroOmega)));
        let sol = ev.solve_ivp(0.0.into(), 2.0.into(), 3.0.into()).unwrap();
        for (u, &y) in sol.u.values().iter().zip(ev.grid().points()) {
            assert!((u - (2.0 + 3.0 * y)).norm() < 1e-13);
        }
    }

    #[test]
    fn degenerate_dirichlet_eigenvalues() {
        let problem = catalog::degenerate(0.0, std::f64::consts::PI);
        let ev = SolutionEvaluator::build(&problem, 201, 4).unwrap();
        let scan = ev
            .find_eigenvalues(
                &BoundarySpec::dirichlet(),
                &EigenOptions {
                    omega_max: 10.5,
                    count: None,
                    negative_floor: None,
                },
            )
            .unwrap();
        assert_eq!(scan.eigenvalues.len(), 10);
        for e in &scan.eigenvalues {
            assert!((e.omega - e.index as f64).abs() < 1e-12);
        }
        assert!(scan.count_consistent);
    }

    #[test]
    fn empty_scan() {
        let problem = catalog::degenerate(0.0, 1.0);
        let ev = SolutionEvaluator::build(&problem, 101, 4).unwrap();
        let scan = ev
            .find_eigenvalues(
                &BoundarySpec::dirichlet(),
                &EigenOptions {
                    omega_max: 0.0,
                    count: None,
                    negative_floor: None,
                },
            )
            .unwrap();
        assert!(scan.eigenvalues.is_empty());
    }

    #[test]
    fn truncation_is_bounded() {
        let problem = catalog::degenerate(0.0, 1.0);
        let ev = SolutionEvaluator::build(&problem, 101, 4).unwrap();
        assert!(matches!(ev.with_terms(5), Err(Error::Truncation { .. })));
    }
}
