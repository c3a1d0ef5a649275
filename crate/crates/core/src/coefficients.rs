//! Coefficients `α_n`, `μ_n` of the Bessel-series representation, computed by
//! recurrent integration, cleaned near the left endpoint and checked against
//! summation identities.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::grid::{cumulative_integral, SampledFn};
use crate::liouville::LiouvilleData;
use crate::seed::{FormalPowers, SeedSolution};

pub const DEFAULT_TERMS: usize = 50;
/// Largest index accepted by [`direct_alpha`] and [`direct_mu`].
pub const DIRECT_FORMULA_CAP: usize = 12;
/// Fraction of `[A, B]` excluded on the left when measuring identity residuals.
pub const TRIM_FRACTION: f64 = 0.05;
/// Fraction of `[A, B]` searched for a cut point.
pub const CUT_SEARCH_FRACTION: f64 = 0.25;
/// A cut point candidate is accepted when `|α_n|` there is below this times
/// its trimmed maximum.
pub const CUT_ACCEPT_RATIO: f64 = 1e-2;

/// `G1 = h + ½∫Q dx` and `G2 = G1 - h`, sampled on the grid.
pub fn compute_g(seed: &SeedSolution, data: &LiouvilleData) -> Result<(SampledFn, SampledFn)> {
    let rho_term = &(&data.rho * &data.rho_prime) / &data.r.scale(2.0.into());
    let rho_term_a = rho_term.first();
    let integrand = &(&data.q / &(&data.rho * &data.rho))
        + &(&(&data.rho_prime * &data.rho_prime) / &data.r);
    let integral = cumulative_integral(&integrand)?.scale(0.5.into());
    let g2 = &rho_term.map(|v| v - rho_term_a) + &integral;
    let g1 = g2.map(|v| v + seed.h);
    Ok((g1, g2))
}

/// Index `-1` and `0` members of both families.
#[derive(Debug, Clone)]
pub struct SeedCoefficients {
    pub alpha_m1: SampledFn,
    pub alpha_0: SampledFn,
    pub mu_m1: SampledFn,
    pub mu_0: SampledFn,
}

/// `(gρ)'`.
fn g_rho_prime(seed: &SeedSolution, data: &LiouvilleData) -> SampledFn {
    &(&seed.g_prime * &data.rho) + &(&seed.g * &data.rho_prime)
}

pub fn seed_coefficients(
    seed: &SeedSolution,
    data: &LiouvilleData,
    g1: &SampledFn,
    g2: &SampledFn,
) -> SeedCoefficients {
    let two_rho = data.rho.scale(2.0.into());
    let inv_rho = data.rho.recip();
    SeedCoefficients {
        alpha_m1: two_rho.recip(),
        alpha_0: (&seed.g - &inv_rho).scale(0.5.into()),
        mu_m1: g2 / &two_rho,
        mu_0: &(&(&data.sqrt_p_over_r * &g_rho_prime(seed, data)) / &two_rho) - &(g1 / &two_rho),
    }
}

/// `μ_1` from `α_1` by differentiation. Less accurate than the recurrence;
/// kept as a cross-check.
pub fn mu_1_from_alpha_1(
    alpha_1: &SampledFn,
    data: &LiouvilleData,
    g2: &SampledFn,
) -> Result<SampledFn> {
    let d_alpha = crate::grid::differentiate(alpha_1)?;
    let log_rho = &data.rho_prime / &data.rho;
    let bracket = &d_alpha + &(&log_rho * alpha_1);
    let mut out = &(&(alpha_1 / &data.l) + &(&data.sqrt_p_over_r * &bracket))
        - &(g2 / &data.rho).scale(1.5.into());
    out.values_mut()[0] = Complex64::new(0.0, 0.0);
    Ok(out)
}

/// Grid functions shared by every recurrence step.
#[derive(Debug, Clone)]
pub struct RecurrenceContext {
    l: SampledFn,
    g: SampledFn,
    rho: SampledFn,
    g_rho: SampledFn,
    g_rho_prime: SampledFn,
    sqrt_r_over_p: SampledFn,
    sqrt_p_over_r: SampledFn,
    inv_p_g2: SampledFn,
    g2: SampledFn,
}

impl RecurrenceContext {
    pub fn new(seed: &SeedSolution, data: &LiouvilleData, g2: &SampledFn) -> Self {
        Self {
            l: data.l.clone(),
            g: seed.g.clone(),
            rho: data.rho.clone(),
            g_rho: &seed.g * &data.rho,
            g_rho_prime: g_rho_prime(seed, data),
            sqrt_r_over_p: data.sqrt_r_over_p.clone(),
            sqrt_p_over_r: data.sqrt_p_over_r.clone(),
            inv_p_g2: (&(&seed.g * &seed.g) * &data.p).recip(),
            g2: g2.clone(),
        }
    }
}

/// `(η̃_n, θ̃_n, Σ_n, Υ_n)` for one index.
#[derive(Debug, Clone)]
pub struct RecurrenceTerms {
    pub eta: SampledFn,
    pub theta: SampledFn,
    pub sigma: SampledFn,
    pub upsilon: SampledFn,
}

/// Multiplier `c_n` of the recurrence.
pub fn recurrence_constant(n: usize) -> f64 {
    if n == 1 {
        1.0
    } else {
        2.0 * (2.0 * n as f64 - 1.0)
    }
}

fn check_finite(f: &SampledFn, what: &str, n: usize) -> Result<()> {
    match f.values().iter().position(|v| !v.is_finite()) {
        Some(node) => Err(Error::NonFinite {
            what: format!("{what} for n = {n}"),
            node,
        }),
        None => Ok(()),
    }
}

/// One step of the recurrence. `prev` holds `(Σ_{n-2}, Υ_{n-2})` and is
/// ignored for `n = 1`, where the index `-1` members enter in closed form.
pub fn recurrence_step(
    n: usize,
    prev: (&SampledFn, &SampledFn),
    ctx: &RecurrenceContext,
) -> Result<RecurrenceTerms> {
    assert!(n >= 1, "recurrence starts at n = 1");
    let l = &ctx.l;
    let two_rho = ctx.rho.scale(2.0.into());
    let rho2 = &ctx.rho * &ctx.rho;
    let terms = if n == 1 {
        let eta = ctx.g_rho.map(|v| (v - 1.0) * 0.5);
        let theta = cumulative_integral(&ctx.inv_p_g2)?.scale((-0.5).into());
        let sigma = (&(l / &two_rho) + &(&ctx.g * &theta)).scale((-3.0).into());
        let upsilon = (&(&(&(l * &ctx.g2) / &two_rho)
            + &(&(&(&ctx.sqrt_p_over_r * &ctx.g_rho_prime) * &theta) / &ctx.rho))
            + &(&eta / &(&rho2 * &ctx.g)))
            .scale((-3.0).into());
        RecurrenceTerms {
            eta,
            theta,
            sigma,
            upsilon,
        }
    } else {
        let (sigma_prev, upsilon_prev) = prev;
        let nf = n as f64;
        let c = recurrence_constant(n);
        let k = (2.0 * nf + 1.0) / (2.0 * nf - 3.0);
        let eta_integrand = &(&(&(l * &ctx.g_rho_prime)
            + &(&ctx.g_rho * &ctx.sqrt_r_over_p).scale((nf - 1.0).into()))
            * &ctx.rho)
            * sigma_prev;
        let eta = cumulative_integral(&eta_integrand)?;
        let theta_integrand = &(&(&eta / &(&rho2 * &(&ctx.g * &ctx.g)))
            - &(&(l * sigma_prev) / &ctx.g))
            * &ctx.sqrt_r_over_p;
        let theta = cumulative_integral(&theta_integrand)?;
        let l2 = l * l;
        let sigma = (&(&l2 * sigma_prev) + &(&ctx.g * &theta).scale(c.into())).scale(k.into());
        let inner = &(&(&(&ctx.sqrt_p_over_r * &ctx.g_rho_prime) * &theta) / &ctx.rho)
            + &(&eta / &(&rho2 * &ctx.g));
        let upsilon = (&(&(&l2 * upsilon_prev) + &inner.scale(c.into()))
            - &(l * sigma_prev).scale((c - 2.0 * nf + 1.0).into()))
            .scale(k.into());
        RecurrenceTerms {
            eta,
            theta,
            sigma,
            upsilon,
        }
    };
    check_finite(&terms.sigma, "Σ", n)?;
    check_finite(&terms.upsilon, "Υ", n)?;
    Ok(terms)
}

/// `Σ_n = l^n α_n` and `Υ_n = l^n μ_n` for `n = 0..=n_max`, with the even and
/// odd chains run concurrently.
pub fn recurrent_sums(
    seeds: &SeedCoefficients,
    ctx: &RecurrenceContext,
    n_max: usize,
) -> Result<(Vec<SampledFn>, Vec<SampledFn>)> {
    let chain = |start: usize| -> Result<Vec<(usize, SampledFn, SampledFn)>> {
        let mut out = Vec::new();
        let (mut sigma, mut upsilon) = if start == 0 {
            (seeds.alpha_0.clone(), seeds.mu_0.clone())
        } else {
            if n_max == 0 {
                return Ok(out);
            }
            let t = recurrence_step(1, (&seeds.alpha_m1, &seeds.mu_m1), ctx)?;
            (t.sigma, t.upsilon)
        };
        out.push((start, sigma.clone(), upsilon.clone()));
        let mut n = start + 2;
        while n <= n_max {
            let t = recurrence_step(n, (&sigma, &upsilon), ctx)?;
            sigma = t.sigma;
            upsilon = t.upsilon;
            out.push((n, sigma.clone(), upsilon.clone()));
            n += 2;
        }
        Ok(out)
    };
    let (even, odd) = rayon::join(|| chain(0), || chain(1));
    let mut all: Vec<_> = even?.into_iter().chain(odd?).collect();
    all.sort_by_key(|t| t.0);
    let (sigma, upsilon) = all.into_iter().map(|(_, s, u)| (s, u)).unzip();
    Ok((sigma, upsilon))
}

/// `Σ_n / l^n` with the value at `A` set to zero (for `n ≥ 1`).
pub fn divide_by_l_power(sum: &SampledFn, l: &SampledFn, n: usize) -> SampledFn {
    if n == 0 {
        return sum.clone();
    }
    let mut out = sum.zip_map(l, |s, l| s / l.re.powi(n as i32));
    out.values_mut()[0] = Complex64::new(0.0, 0.0);
    out
}

/// Zeroes every value at nodes `y <= cut`.
pub fn apply_cut(f: &SampledFn, cut: f64) -> SampledFn {
    let mut out = f.clone();
    let points = f.grid().points().to_vec();
    for (v, y) in out.values_mut().iter_mut().zip(points) {
        if y <= cut {
            *v = Complex64::new(0.0, 0.0);
        }
    }
    out
}

fn trim_start(f: &SampledFn) -> usize {
    let grid = f.grid();
    let limit = grid.a() + TRIM_FRACTION * (grid.b() - grid.a());
    grid.points().iter().position(|&y| y >= limit).unwrap_or(0)
}

fn search_end(f: &SampledFn) -> usize {
    let grid = f.grid();
    let limit = grid.a() + CUT_SEARCH_FRACTION * (grid.b() - grid.a());
    grid.points().iter().rposition(|&y| y <= limit).unwrap_or(0)
}

/// Cut point from the smallest nonzero `|f|` near `A`. Returns `None` when the
/// minimum is not small compared with the rest of `f`, and `A` itself (nothing
/// zeroed) when the minimum sits at the first interior node.
pub fn minimum_cut(f: &SampledFn) -> Option<f64> {
    let values = f.values();
    if values.iter().all(|v| v.norm() == 0.0) {
        return Some(f.grid().a());
    }
    let reference = values[trim_start(f)..]
        .iter()
        .map(|v| v.norm())
        .fold(0.0, f64::max);
    let (node, min) = (1..=search_end(f))
        .map(|i| (i, values[i].norm()))
        .filter(|&(_, m)| m > 0.0)
        .min_by(|a, b| a.1.total_cmp(&b.1))?;
    if node == 1 {
        // decays all the way to A: nothing to clean
        return Some(f.grid().a());
    }
    (min <= CUT_ACCEPT_RATIO * reference).then(|| f.grid().points()[node])
}

/// Cut point from the identity residuals: the last node near `A` where the
/// partial sums stop improving before index `n`. `best_terms[i]` is the
/// partial-sum length minimising the residual at node `i`.
pub fn plateau_cut(best_terms: &[usize], n: usize, points: &[f64]) -> f64 {
    let end = {
        let (a, b) = (points[0], points[points.len() - 1]);
        let limit = a + CUT_SEARCH_FRACTION * (b - a);
        points.iter().rposition(|&y| y <= limit).unwrap_or(0)
    };
    (1..=end)
        .rev()
        .find(|&i| best_terms[i] < n)
        .map_or(points[0], |i| points[i])
}

/// Residuals of the four summation identities.
#[derive(Debug, Clone, Default)]
pub struct ResidualReport {
    /// `rows[m]` holds the sup-norm residuals of the partial sums with terms
    /// `0..=m`, in the order: sum of `α_n`, alternating `α_n`, sum of `μ_n`,
    /// alternating `μ_n`.
    pub rows: Vec<[f64; 4]>,
    pub n_opt: usize,
}

impl ResidualReport {
    pub fn max_at(&self, m: usize) -> f64 {
        self.rows[m].iter().copied().fold(0.0, f64::max)
    }
}

/// Right-hand sides of the identities.
fn identity_targets(
    seed: &SeedSolution,
    data: &LiouvilleData,
    g1: &SampledFn,
    g2: &SampledFn,
) -> [SampledFn; 4] {
    let h = seed.h;
    let two_rho = data.rho.scale(2.0.into());
    let four_rho = data.rho.scale(4.0.into());
    let alpha_sum = &(g1 + g2) / &two_rho;
    let alpha_alt = two_rho.recip().scale(h);
    let hg2 = g2.scale(h);
    let mu_sum = &(&(&data.q / &(&four_rho * &data.r))
        - &(&data.flux_curvature / &data.r.scale(4.0.into())))
        + &(&(&hg2 + &(g2 * g2)) / &two_rho);
    let (qa, ra, rho_a, fa) = (
        data.q.first(),
        data.r.first(),
        data.rho.first(),
        data.flux_curvature.first(),
    );
    let constant = qa / ra - rho_a / ra * fa;
    let mu_alt = &four_rho.recip().scale(constant) + &(&hg2 / &two_rho);
    [alpha_sum, alpha_alt, mu_sum, mu_alt]
}

/// Per-node residual tables `[family][m][node]` (trimmed nodes only for the
/// report, all nodes for plateau detection).
fn identity_residuals(
    alpha: &[SampledFn],
    mu: &[SampledFn],
    targets: &[SampledFn; 4],
    data: &LiouvilleData,
) -> Vec<[Vec<f64>; 4]> {
    let len = data.grid.len();
    let mut partial = [vec![Complex64::new(0.0, 0.0); len], vec![Complex64::new(0.0, 0.0); len],
        vec![Complex64::new(0.0, 0.0); len], vec![Complex64::new(0.0, 0.0); len]];
    let l = data.l.values();
    let mut out = Vec::with_capacity(alpha.len());
    for (m, (a, u)) in alpha.iter().zip(mu).enumerate() {
        let sign = if m % 2 == 0 { 1.0 } else { -1.0 };
        let mut rows: [Vec<f64>; 4] = Default::default();
        for i in 0..len {
            if i == 0 {
                for row in rows.iter_mut() {
                    row.push(0.0);
                }
                continue;
            }
            let (av, uv) = (a.values()[i] / l[i], u.values()[i] / l[i]);
            partial[0][i] += av;
            partial[1][i] += av * sign;
            partial[2][i] += uv;
            partial[3][i] += uv * sign;
            for f in 0..4 {
                rows[f].push((partial[f][i] - targets[f].values()[i]).norm());
            }
        }
        out.push(rows);
    }
    out
}

/// Residual report and the optimal truncation `N_opt`: the length at which
/// the last of the four residuals reaches its floor.
pub fn verify_coefficients(
    alpha: &[SampledFn],
    mu: &[SampledFn],
    seed: &SeedSolution,
    data: &LiouvilleData,
    g1: &SampledFn,
    g2: &SampledFn,
) -> ResidualReport {
    let targets = identity_targets(seed, data, g1, g2);
    let tables = identity_residuals(alpha, mu, &targets, data);
    let start = trim_start(&data.l);
    let rows: Vec<[f64; 4]> = tables
        .iter()
        .map(|t| {
            let mut row = [0.0; 4];
            for f in 0..4 {
                row[f] = t[f][start..].iter().copied().fold(0.0, f64::max);
            }
            row
        })
        .collect();
    let n_opt = (0..4)
        .map(|f| floor_index(&rows.iter().map(|r| r[f]).collect::<Vec<_>>()))
        .max()
        .unwrap_or(0);
    ResidualReport { rows, n_opt }
}

/// Tie tolerance when locating a residual floor.
pub const PLATEAU_TOLERANCE: f64 = 1.0;

/// First index whose value is within `PLATEAU_TOLERANCE` relative of the
/// minimum, i.e. where the sequence reaches its floor.
pub fn floor_index(residuals: &[f64]) -> usize {
    let best = residuals.iter().copied().fold(f64::INFINITY, f64::min);
    if best == 0.0 {
        return residuals.iter().position(|&w| w == 0.0).unwrap_or(0);
    }
    residuals
        .iter()
        .position(|&w| w <= best * (1.0 + PLATEAU_TOLERANCE))
        .unwrap_or(0)
}

/// Partial-sum length minimising the residual of the `α` (or `μ`) identities
/// at each node, computed on the raw coefficients.
fn best_terms_per_node(tables: &[[Vec<f64>; 4]], families: [usize; 2]) -> Vec<usize> {
    let len = tables[0][0].len();
    (0..len)
        .map(|i| {
            let mut best = (0, f64::INFINITY);
            for (m, t) in tables.iter().enumerate() {
                let r = t[families[0]][i].max(t[families[1]][i]);
                if r < best.1 {
                    best = (m, r);
                }
            }
            best.0
        })
        .collect()
}

/// How each cut point was chosen.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CutRule {
    None,
    Minimum,
    Plateau,
}

/// Everything the solver needs, independent of `ω`.
#[derive(Debug, Clone)]
pub struct CoefficientSet {
    pub alpha: Vec<SampledFn>,
    pub mu: Vec<SampledFn>,
    pub alpha_m1: SampledFn,
    pub mu_m1: SampledFn,
    pub g1: SampledFn,
    pub g2: SampledFn,
    pub h: Complex64,
    pub cut_alpha: Vec<f64>,
    pub cut_mu: Vec<f64>,
    pub cut_rule_alpha: Vec<CutRule>,
    pub cut_rule_mu: Vec<CutRule>,
    pub report: ResidualReport,
}

impl CoefficientSet {
    /// Number of computed terms minus one.
    pub fn n_max(&self) -> usize {
        self.alpha.len() - 1
    }

    pub fn n_opt(&self) -> usize {
        self.report.n_opt
    }
}

/// Raw (uncleaned) coefficient arrays and the data used to build them.
#[derive(Debug, Clone)]
pub struct RawCoefficients {
    pub sigma: Vec<SampledFn>,
    pub upsilon: Vec<SampledFn>,
    pub alpha: Vec<SampledFn>,
    pub mu: Vec<SampledFn>,
    pub seeds: SeedCoefficients,
    pub g1: SampledFn,
    pub g2: SampledFn,
}

pub fn raw_coefficients(
    seed: &SeedSolution,
    data: &LiouvilleData,
    n_max: usize,
) -> Result<RawCoefficients> {
    let (g1, g2) = compute_g(seed, data)?;
    let seeds = seed_coefficients(seed, data, &g1, &g2);
    let ctx = RecurrenceContext::new(seed, data, &g2);
    let (sigma, upsilon) = recurrent_sums(&seeds, &ctx, n_max)?;
    let alpha = sigma
        .iter()
        .enumerate()
        .map(|(n, s)| divide_by_l_power(s, &data.l, n))
        .collect();
    let mu = upsilon
        .iter()
        .enumerate()
        .map(|(n, s)| divide_by_l_power(s, &data.l, n))
        .collect();
    Ok(RawCoefficients {
        sigma,
        upsilon,
        alpha,
        mu,
        seeds,
        g1,
        g2,
    })
}

/// Full pipeline: recurrences, cleanup and verification.
pub fn compute_coefficients(
    seed: &SeedSolution,
    data: &LiouvilleData,
    n_max: usize,
) -> Result<CoefficientSet> {
    let raw = raw_coefficients(seed, data, n_max)?;
    let targets = identity_targets(seed, data, &raw.g1, &raw.g2);
    let tables = identity_residuals(&raw.alpha, &raw.mu, &targets, data);
    let points = data.grid.points();
    let cut = |family: &[SampledFn], best: &[usize]| -> (Vec<f64>, Vec<CutRule>) {
        family
            .iter()
            .enumerate()
            .map(|(n, f)| {
                if n == 0 {
                    (points[0], CutRule::None)
                } else if let Some(y) = minimum_cut(f) {
                    (y, CutRule::Minimum)
                } else {
                    (plateau_cut(best, n, points), CutRule::Plateau)
                }
            })
            .unzip()
    };
    let (cut_alpha, cut_rule_alpha) = cut(&raw.alpha, &best_terms_per_node(&tables, [0, 1]));
    let (cut_mu, cut_rule_mu) = cut(&raw.mu, &best_terms_per_node(&tables, [2, 3]));
    let alpha: Vec<SampledFn> = raw
        .alpha
        .iter()
        .zip(&cut_alpha)
        .map(|(f, &c)| apply_cut(f, c))
        .collect();
    let mu: Vec<SampledFn> = raw.mu.iter().zip(&cut_mu).map(|(f, &c)| apply_cut(f, c)).collect();
    let report = verify_coefficients(&alpha, &mu, seed, data, &raw.g1, &raw.g2);
    Ok(CoefficientSet {
        alpha,
        mu,
        alpha_m1: raw.seeds.alpha_m1,
        mu_m1: raw.seeds.mu_m1,
        g1: raw.g1,
        g2: raw.g2,
        h: seed.h,
        cut_alpha,
        cut_mu,
        cut_rule_alpha,
        cut_rule_mu,
        report,
    })
}

/// Coefficients of the Legendre polynomials, `coefficient(k, n)` being the
/// coefficient of `x^k` in `P_n`.
#[derive(Debug, Clone)]
pub struct LegendreCoeffTable {
    rows: Vec<Vec<f64>>,
}

impl LegendreCoeffTable {
    /// Rows `0..=n_max`. Entries are `integer / 2^n` and exact for `n ≤ 40`.
    pub fn new(n_max: usize) -> Self {
        let rows = (0..=n_max)
            .map(|n| {
                let mut row = vec![0.0; n + 1];
                for m in 0..=n / 2 {
                    // (-1)^m (2n-2m)! / (2^n m! (n-m)! (n-2m)!)
                    let mut value = 1.0f64;
                    for j in (n - 2 * m + 1)..=(2 * n - 2 * m) {
                        value *= j as f64;
                    }
                    for j in 1..=m {
                        value /= j as f64;
                    }
                    for j in 1..=(n - m) {
                        value /= j as f64;
                    }
                    value /= 2f64.powi(n as i32);
                    row[n - 2 * m] = if m % 2 == 0 { value } else { -value };
                }
                row
            })
            .collect();
        Self { rows }
    }

    pub fn coefficient(&self, k: usize, n: usize) -> f64 {
        self.rows[n].get(k).copied().unwrap_or(0.0)
    }

    pub fn row(&self, n: usize) -> &[f64] {
        &self.rows[n]
    }
}

/// `α_n` from the Legendre sum over formal powers.
pub fn direct_alpha(n: usize, powers: &FormalPowers, data: &LiouvilleData) -> Result<SampledFn> {
    if n > DIRECT_FORMULA_CAP {
        return Err(Error::DirectFormulaCap {
            n,
            cap: DIRECT_FORMULA_CAP,
        });
    }
    if powers.order() < n {
        return Err(Error::Truncation {
            requested: n,
            available: powers.order(),
        });
    }
    let table = LegendreCoeffTable::new(n);
    let mut sum = data.rho.recip().scale((-1.0).into());
    for k in 0..=n {
        let c = table.coefficient(k, n);
        if c != 0.0 {
            sum = &sum + &divide_by_l_power(&powers.phi(k), &data.l, k).scale(c.into());
        }
    }
    let mut out = sum.scale(((2 * n + 1) as f64 / 2.0).into());
    if n > 0 {
        out.values_mut()[0] = Complex64::new(0.0, 0.0);
    }
    Ok(out)
}

/// `μ_n` from the Legendre sum over formal powers.
pub fn direct_mu(
    n: usize,
    powers: &FormalPowers,
    seed: &SeedSolution,
    data: &LiouvilleData,
    g2: &SampledFn,
) -> Result<SampledFn> {
    if n > DIRECT_FORMULA_CAP {
        return Err(Error::DirectFormulaCap {
            n,
            cap: DIRECT_FORMULA_CAP,
        });
    }
    if powers.order() < n {
        return Err(Error::Truncation {
            requested: n,
            available: powers.order(),
        });
    }
    let table = LegendreCoeffTable::new(n);
    let log_derivative = &(&seed.g_prime / &seed.g) + &(&data.rho_prime / &data.rho);
    let phi_weight = &(&data.rho * &data.sqrt_p_over_r) * &log_derivative;
    let mut sum = SampledFn::zeros(&data.grid);
    for k in 0..=n {
        let c = table.coefficient(k, n);
        if c == 0.0 {
            continue;
        }
        let mut term = &phi_weight * &powers.phi(k);
        if k > 0 {
            term = &term + &(&powers.psi(k - 1) / &data.rho).scale((k as f64).into());
        }
        sum = &sum + &divide_by_l_power(&term, &data.l, k).scale(c.into());
    }
    let nf = n as f64;
    let mut tail = g2.map(|v| -v - seed.h * 0.5 * (1.0 + if n % 2 == 0 { 1.0 } else { -1.0 }));
    if n > 0 {
        tail = &tail - &divide_by_l_power(&SampledFn::constant(&data.grid, (nf * (nf + 1.0) / 2.0).into()), &data.l, 1);
    }
    let mut out = &(&sum + &tail) / &data.rho.scale((2.0 / (2.0 * nf + 1.0)).into());
    if n > 0 {
        out.values_mut()[0] = Complex64::new(0.0, 0.0);
    }
    Ok(out)
}
