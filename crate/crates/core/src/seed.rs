//! Non-vanishing solution `g` of `(p g')' - q g = 0` and the formal powers
//! generated by it.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::grid::{cumulative_integral, differentiate, SampledFn};
use crate::liouville::LiouvilleData;

/// Use the real solution alone when `min|g1| / max|g1|` is at least this.
pub const REAL_SEED_RATIO: f64 = 1e-2;
/// Below `VANISHING_RATIO * max|g|` the seed counts as vanishing.
pub const VANISHING_RATIO: f64 = 1e-12;

const MAX_SWEEPS: usize = 400;

#[derive(Debug, Clone)]
pub struct SeedSolution {
    pub g: SampledFn,
    pub g_prime: SampledFn,
    /// `√(p/r)(g'/g + ρ'/ρ)` at `A`.
    pub h: Complex64,
    pub min_abs_g: f64,
    /// Whether `g` is the real solution alone.
    pub real: bool,
}

impl SeedSolution {
    /// Relative residual of `(p g')' - q g` on the grid.
    pub fn residual(&self, data: &LiouvilleData) -> Result<f64> {
        let flux = differentiate(&(&data.p * &self.g_prime))?;
        let res = &flux - &(&data.q * &self.g);
        let scale = (&data.q * &self.g).max_abs().max(flux.max_abs()).max(1.0);
        Ok(res.max_abs() / scale)
    }
}

/// Solves `(p u')' = q u` with `u(A) = u0`, `(p u')(A) = w0` by summing the
/// Volterra (Picard) series on the grid. Returns `(u, p u')`.
fn volterra_solution(data: &LiouvilleData, u0: f64, w0: f64) -> Result<(SampledFn, SampledFn)> {
    let grid = &data.grid;
    let inv_p = data.p.recip();
    let mut u_term = if w0 == 0.0 {
        SampledFn::constant(grid, u0.into())
    } else {
        &SampledFn::constant(grid, u0.into()) + &cumulative_integral(&inv_p)?.scale(w0.into())
    };
    let mut w_term = SampledFn::constant(grid, w0.into());
    let mut u = u_term.clone();
    let mut w = w_term.clone();
    for _ in 0..MAX_SWEEPS {
        w_term = cumulative_integral(&(&data.q * &u_term))?;
        u_term = cumulative_integral(&(&w_term * &inv_p))?;
        u = &u + &u_term;
        w = &w + &w_term;
        let size = u.max_abs().max(w.max_abs());
        if !size.is_finite() {
            return Err(Error::NonFinite {
                what: "seed solution".into(),
                node: u.values().iter().position(|v| !v.is_finite()).unwrap_or(0),
            });
        }
        if u_term.max_abs().max(w_term.max_abs()) <= 1e-18 * size {
            return Ok((u, w));
        }
    }
    log::warn!("seed series did not settle after {MAX_SWEEPS} sweeps");
    Ok((u, w))
}

/// Builds the seed `g` with `g(A) = 1/ρ(A)`.
pub fn compute_seed(data: &LiouvilleData) -> Result<SeedSolution> {
    let rho_a = data.rho_at_a();
    let (g1, w1) = volterra_solution(data, 1.0, 0.0)?;
    let real = g1.min_abs() >= REAL_SEED_RATIO * g1.max_abs();
    let (g, flux) = if real {
        (g1.scale((1.0 / rho_a).into()), w1.scale((1.0 / rho_a).into()))
    } else {
        let (g2, w2) = volterra_solution(data, 0.0, 1.0)?;
        let i = Complex64::i();
        (
            (&g1 + &g2.scale(i)).scale((1.0 / rho_a).into()),
            (&w1 + &w2.scale(i)).scale((1.0 / rho_a).into()),
        )
    };
    let g_prime = &flux / &data.p;
    let (min_abs_g, max_abs_g) = (g.min_abs(), g.max_abs());
    if min_abs_g < VANISHING_RATIO * max_abs_g {
        let node = g
            .values()
            .iter()
            .enumerate()
            .min_by(|a, b| a.1.norm().total_cmp(&b.1.norm()))
            .map(|(i, _)| i)
            .unwrap_or(0);
        return Err(Error::VanishingSeed {
            node,
            min_abs: min_abs_g,
            max_abs: max_abs_g,
        });
    }
    let h = seed_constant(data, g.first(), g_prime.first());
    Ok(SeedSolution {
        g,
        g_prime,
        h,
        min_abs_g,
        real,
    })
}

fn seed_constant(data: &LiouvilleData, g_a: Complex64, dg_a: Complex64) -> Complex64 {
    let rho_a = data.rho_at_a();
    data.sqrt_p_over_r.first().re * (dg_a / g_a + data.rho_prime.first().re / rho_a)
}

/// Formal powers `Φ_k`, `Ψ_k` and the ladders that produce them.
#[derive(Debug, Clone)]
pub struct FormalPowers {
    /// `Y^(n) / n!`.
    ladder: Vec<SampledFn>,
    /// `Ỹ^(n) / n!`.
    ladder_tilde: Vec<SampledFn>,
    g: SampledFn,
}

impl FormalPowers {
    pub fn order(&self) -> usize {
        self.ladder.len() - 1
    }

    fn factorial(n: usize) -> f64 {
        (1..=n).map(|k| k as f64).product()
    }

    pub fn y(&self, n: usize) -> SampledFn {
        self.ladder[n].scale(Self::factorial(n).into())
    }

    pub fn y_tilde(&self, n: usize) -> SampledFn {
        self.ladder_tilde[n].scale(Self::factorial(n).into())
    }

    pub fn phi(&self, k: usize) -> SampledFn {
        let y = if k % 2 == 1 { self.y(k) } else { self.y_tilde(k) };
        &self.g * &y
    }

    pub fn psi(&self, k: usize) -> SampledFn {
        let y = if k % 2 == 0 { self.y(k) } else { self.y_tilde(k) };
        &y / &self.g
    }
}

/// Builds the ladders up to order `k`.
pub fn formal_powers(seed: &SeedSolution, data: &LiouvilleData, k: usize) -> Result<FormalPowers> {
    let grid = &data.grid;
    let g2 = &seed.g * &seed.g;
    let w_odd = (&g2 * &data.p).recip();
    let w_even = &g2 * &data.r;
    let mut ladder = vec![SampledFn::constant(grid, 1.0.into())];
    let mut ladder_tilde = ladder.clone();
    let mut log_fact = 0.0f64;
    for n in 1..=k {
        let (w, wt) = if n % 2 == 1 {
            (&w_odd, &w_even)
        } else {
            (&w_even, &w_odd)
        };
        let next = cumulative_integral(&(&ladder[n - 1] * w))?;
        let next_tilde = cumulative_integral(&(&ladder_tilde[n - 1] * wt))?;
        log_fact += (n as f64).log10();
        let size = next.max_abs().max(next_tilde.max_abs());
        if !size.is_finite() || size.log10() + log_fact > 300.0 {
            return Err(Error::LadderOverflow(n));
        }
        ladder.push(next);
        ladder_tilde.push(next_tilde);
    }
    Ok(FormalPowers {
        ladder,
        ladder_tilde,
        g: seed.g.clone(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{integral, Grid};
    use crate::liouville::build_liouville;
    use crate::oracles::catalog;
    use approx::assert_abs_diff_eq;

    fn kamke_data() -> LiouvilleData {
        let problem = catalog::kamke();
        let grid = Grid::shared(0.0, 2.0, 2001).unwrap();
        build_liouville(&problem, &grid).unwrap()
    }

    #[test]
    fn degenerate_seed_is_real_constant() {
        let problem = catalog::degenerate(0.0, 1.0);
        let grid = Grid::shared(0.0, 1.0, 201).unwrap();
        let data = build_liouville(&problem, &grid).unwrap();
        let seed = compute_seed(&data).unwrap();
        assert!(seed.real);
        assert!(seed.g.values().iter().all(|v| *v == 1.0.into()));
        assert_eq!(seed.h, Complex64::new(0.0, 0.0));
    }

    #[test]
    fn kamke_seed_matches_closed_form() {
        let data = kamke_data();
        let seed = compute_seed(&data).unwrap();
        assert!(!seed.real);
        let i = Complex64::i();
        for ((g, dg), &y) in seed
            .g
            .values()
            .iter()
            .zip(seed.g_prime.values())
            .zip(data.grid.points())
        {
            let exact = (1.0 + (i - 1.0) * y) * y.exp();
            let exact_prime = (i + (i - 1.0) * y) * y.exp();
            assert!((g - exact).norm() < 1e-12 * exact.norm().max(1.0));
            assert!((dg - exact_prime).norm() < 1e-11 * exact_prime.norm().max(1.0));
        }
        assert!((seed.h - (i - 1.0)).norm() < 1e-13);
        assert_abs_diff_eq!(seed.g.first().re, 1.0 / data.rho_at_a(), epsilon = 1e-12);
        assert!(seed.residual(&data).unwrap() < 1e-6);
    }

    #[test]
    fn h_is_scale_free() {
        let data = kamke_data();
        let seed = compute_seed(&data).unwrap();
        let c = Complex64::new(2.5, -0.75);
        let h = seed_constant(&data, seed.g.first() * c, seed.g_prime.first() * c);
        assert!((h - seed.h).norm() < 1e-14);
    }

    #[test]
    fn degenerate_formal_powers_are_monomials() {
        let problem = catalog::degenerate(0.5, 1.5);
        let grid = Grid::shared(0.5, 1.5, 2001).unwrap();
        let data = build_liouville(&problem, &grid).unwrap();
        let seed = compute_seed(&data).unwrap();
        let powers = formal_powers(&seed, &data, 6).unwrap();
        for k in 0..=6 {
            let phi = powers.phi(k);
            for (v, &y) in phi.values().iter().zip(grid.points()) {
                assert!((v.re - (y - 0.5).powi(k as i32)).abs() < 1e-10, "k = {k}");
            }
        }
        let psi0 = powers.psi(0);
        assert!(psi0.values().iter().all(|v| *v == 1.0.into()));
    }

    #[test]
    fn first_ladder_matches_fine_quadrature() {
        let data = kamke_data();
        let seed = compute_seed(&data).unwrap();
        let powers = formal_powers(&seed, &data, 3).unwrap();
        // independent quadrature of 1/(g² p) on a finer grid with the closed-form seed
        let fine = Grid::shared(0.0, 2.0, 8001).unwrap();
        let i = Complex64::i();
        let integrand = SampledFn::from_fn(&fine, |y| {
            let g = (1.0 + (i - 1.0) * y) * y.exp();
            1.0 / (g * g * (-2.0 * y).exp())
        });
        let exact = integral(&integrand).unwrap();
        assert!((powers.y(1).last() - exact).norm() < 1e-10);
        for k in 1..=3 {
            assert!(powers.phi(k).first().norm() == 0.0);
            assert!(powers.psi(k).first().norm() == 0.0);
        }
    }

    #[test]
    fn ladder_overflow_is_reported() {
        let problem = crate::problem::SLProblem::from_expressions("1e-3", "0", "1e3", 0.0, 50.0)
            .unwrap();
        let grid = Grid::shared(0.0, 50.0, 201).unwrap();
        let data = build_liouville(&problem, &grid).unwrap();
        let seed = compute_seed(&data).unwrap();
        assert!(matches!(
            formal_powers(&seed, &data, 200),
            Err(Error::LadderOverflow(_))
        ));
    }
}
