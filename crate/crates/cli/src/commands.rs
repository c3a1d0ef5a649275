//! Subcommand implementations. Each writes its primary output to `out` and
//! returns the exit code.

use std::fmt::Write as _;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use num_complex::Complex64;

use nsbf::acceptance::{self, Suite};
use nsbf::cache::{build_cached, CacheStatus};
use nsbf::coefficients::CutRule;
use nsbf::oracles::{catalog, integrate_reference, MAX_REFERENCE_COUNT};
use nsbf::solver::{EigenOptions, SolutionEvaluator};
use nsbf::{Error, Result};

use crate::config::ProblemConfig;

pub const EXIT_OK: i32 = 0;
pub const EXIT_NUMERICAL: i32 = 1;
pub const EXIT_INPUT: i32 = 2;

/// Cache file written by `coeffs` when no other path is configured.
pub const DEFAULT_CACHE_NAME: &str = "coefficients.bin";
const ORACLE_TOLERANCE: f64 = 1e-12;

/// Fixed CSV number format: 17 significant digits.
pub fn num(x: f64) -> String {
    format!("{x:.16e}")
}

/// Parses `3`, `-2.5`, `5+0.5i`, `0.5i`, `1e-3-2e-1i`.
pub fn parse_complex(s: &str) -> Result<Complex64> {
    let bad = || Error::InvalidInput(format!("not a number: {s:?}"));
    let t: String = s.chars().filter(|c| !c.is_whitespace()).collect();
    let Some(body) = t.strip_suffix('i') else {
        return t.parse::<f64>().map(Complex64::from).map_err(|_| bad());
    };
    // the split is the last sign that is neither leading nor part of an exponent
    let bytes = body.as_bytes();
    let split = (1..bytes.len())
        .rev()
        .find(|&k| (bytes[k] == b'+' || bytes[k] == b'-') && !matches!(bytes[k - 1], b'e' | b'E'));
    let (re, im) = match split {
        Some(k) => (&body[..k], &body[k..]),
        None => ("0", body),
    };
    let im = match im {
        "" | "+" => "1",
        "-" => "-1",
        other => other,
    };
    Ok(Complex64::new(
        re.parse().map_err(|_| bad())?,
        im.parse().map_err(|_| bad())?,
    ))
}

pub fn exit_code(e: &Error) -> i32 {
    match e {
        Error::Parse { .. }
        | Error::InvalidInput(_)
        | Error::InvalidGrid(_)
        | Error::Domain { .. }
        | Error::NonPositive { .. }
        | Error::Truncation { .. }
        | Error::Io(_) => EXIT_INPUT,
        _ => EXIT_NUMERICAL,
    }
}

fn evaluator(config: &ProblemConfig, cache: Option<&Path>) -> Result<SolutionEvaluator> {
    let (ev, status) = build_cached(
        &config.problem,
        config.grid,
        config.terms,
        config.truncation,
        cache,
    )?;
    match status {
        CacheStatus::Hit => log::info!("coefficients loaded from cache"),
        CacheStatus::Rejected(reason) => log::warn!("cache rebuilt: {reason}"),
        CacheStatus::Miss | CacheStatus::Disabled => log::info!("coefficients computed"),
    }
    Ok(ev)
}

fn rule_name(rule: CutRule) -> &'static str {
    match rule {
        CutRule::None => "none",
        CutRule::Minimum => "minimum",
        CutRule::Plateau => "plateau",
    }
}

/// Text report: residual table, optimal truncation and cut points.
pub fn coefficient_report(ev: &SolutionEvaluator) -> String {
    let c = &ev.coeffs;
    let mut s = String::new();
    let _ = writeln!(s, "grid points: {}", ev.grid().len());
    let _ = writeln!(s, "computed terms: {}", c.n_max());
    let _ = writeln!(s, "optimal N: {}", c.n_opt());
    let _ = writeln!(s, "truncation used: {}", ev.terms());
    let _ = writeln!(s);
    let _ = writeln!(s, "M,alpha_sum,alpha_alternating,mu_sum,mu_alternating");
    for (m, row) in c.report.rows.iter().enumerate() {
        let cells: Vec<String> = row.iter().map(|&v| num(v)).collect();
        let _ = writeln!(s, "{m},{}", cells.join(","));
    }
    let _ = writeln!(s);
    let _ = writeln!(s, "n,alpha_cut,alpha_rule,mu_cut,mu_rule");
    for n in 0..=c.n_max() {
        let _ = writeln!(
            s,
            "{n},{},{},{},{}",
            num(c.cut_alpha[n]),
            rule_name(c.cut_rule_alpha[n]),
            num(c.cut_mu[n]),
            rule_name(c.cut_rule_mu[n])
        );
    }
    s
}

pub fn coeffs(config: &ProblemConfig, out_dir: Option<&Path>, out: &mut dyn Write) -> Result<i32> {
    let cache: PathBuf = match (&config.cache, out_dir) {
        (Some(path), _) => path.clone(),
        (None, Some(dir)) => dir.join(DEFAULT_CACHE_NAME),
        (None, None) => PathBuf::from(DEFAULT_CACHE_NAME),
    };
    if let Some(dir) = out_dir {
        fs::create_dir_all(dir)?;
    }
    let ev = evaluator(config, Some(&cache))?;
    let report = coefficient_report(&ev);
    if let Some(dir) = out_dir {
        fs::write(dir.join("report.csv"), &report)?;
    }
    out.write_all(report.as_bytes())?;
    Ok(EXIT_OK)
}

pub struct EigsArgs {
    pub omega_max: Option<f64>,
    pub count: Option<usize>,
    pub negative_floor: Option<f64>,
    pub strict: bool,
    pub check: bool,
}

pub fn eigs(config: &ProblemConfig, args: &EigsArgs, out: &mut dyn Write) -> Result<i32> {
    if args.omega_max.is_none() && args.count.is_none() {
        return Err(Error::InvalidInput("give --omega-max or --count".into()));
    }
    if let Some(w) = args.omega_max {
        if !(w >= 0.0 && w.is_finite()) {
            return Err(Error::InvalidInput(format!("--omega-max must be nonnegative, got {w}")));
        }
    }
    let ev = evaluator(config, config.cache.as_deref())?;
    let scan = ev.find_eigenvalues(
        &config.boundary,
        &EigenOptions {
            omega_max: args.omega_max.unwrap_or(0.0),
            count: args.count,
            negative_floor: args.negative_floor,
        },
    )?;
    let reference = if args.check && !scan.eigenvalues.is_empty() {
        let count = scan.eigenvalues.len().min(MAX_REFERENCE_COUNT);
        let floor = args.negative_floor.unwrap_or(10.0);
        Some(nsbf::oracles::reference_eigenvalues_with(
            &config.problem,
            &config.boundary,
            count,
            nsbf::oracles::EIGEN_TOLERANCE,
            floor,
        )?)
    } else {
        None
    };
    let mut text = String::from("k,omega,lambda,residual");
    if reference.is_some() {
        text.push_str(",reference,abs_error");
    }
    text.push('\n');
    let mut worst = 0.0f64;
    for (i, e) in scan.eigenvalues.iter().enumerate() {
        let _ = write!(text, "{},{},{},{}", e.index, num(e.omega), num(e.lambda), num(e.residual));
        if let Some(r) = reference.as_ref().and_then(|r| r.get(i)) {
            let d = (e.lambda - r).abs();
            worst = worst.max(d);
            let _ = write!(text, ",{},{}", num(*r), num(d));
        }
        text.push('\n');
    }
    out.write_all(text.as_bytes())?;
    if reference.is_some() {
        eprintln!("max |lambda - reference| = {worst:.3e}");
    }
    if !scan.count_consistent {
        eprintln!("warning: eigenvalue count differs from the asymptotic estimate");
        if args.strict {
            return Ok(EXIT_NUMERICAL);
        }
    }
    Ok(EXIT_OK)
}

pub struct SolveArgs {
    pub omega: Complex64,
    pub u_a: Complex64,
    pub up_a: Complex64,
    pub check: bool,
}

pub fn solve(config: &ProblemConfig, args: &SolveArgs, out: &mut dyn Write) -> Result<i32> {
    let ev = evaluator(config, config.cache.as_deref())?;
    let sol = ev.solve_ivp(args.omega, args.u_a, args.up_a)?;
    let oracle = if args.check {
        Some(integrate_reference(
            &config.problem,
            args.omega * args.omega,
            args.u_a,
            args.up_a,
            ORACLE_TOLERANCE,
            ev.grid(),
        )?)
    } else {
        None
    };
    let mut text = String::from("y,u_re,u_im,u_prime_re,u_prime_im");
    if oracle.is_some() {
        text.push_str(",oracle_error");
    }
    text.push('\n');
    let mut worst = 0.0f64;
    for (i, &y) in ev.grid().points().iter().enumerate() {
        let (u, up) = (sol.u.values()[i], sol.u_prime.values()[i]);
        let _ = write!(text, "{},{},{},{},{}", num(y), num(u.re), num(u.im), num(up.re), num(up.im));
        if let Some(o) = &oracle {
            let d = (u - o.u.values()[i]).norm();
            worst = worst.max(d);
            let _ = write!(text, ",{}", num(d));
        }
        text.push('\n');
    }
    out.write_all(text.as_bytes())?;
    if oracle.is_some() {
        eprintln!("max |u - oracle| = {worst:.3e}");
    }
    Ok(EXIT_OK)
}

/// Runs the acceptance suite on the built-in test problem.
pub fn selftest(quick: bool, cache: Option<&Path>, out: &mut dyn Write) -> Result<i32> {
    let problem = catalog::kamke();
    let outcomes = match build_cached(
        &problem,
        acceptance::GRID_POINTS,
        acceptance::COMPUTED_TERMS,
        None,
        cache,
    ) {
        Ok((ev, status)) => {
            if let CacheStatus::Rejected(reason) = status {
                writeln!(out, "cache ignored ({reason}); coefficients recomputed")?;
            }
            Suite::new(ev, quick).run()
        }
        Err(e) => {
            writeln!(out, "setup failed: {e}")?;
            return Ok(EXIT_NUMERICAL);
        }
    };
    let failed = outcomes.iter().filter(|o| !o.passed).count();
    for o in &outcomes {
        writeln!(out, "{o}")?;
    }
    writeln!(out, "{} of {} criteria passed", outcomes.len() - failed, outcomes.len())?;
    Ok(if failed == 0 { EXIT_OK } else { EXIT_NUMERICAL })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn complex_literals() {
        assert_eq!(parse_complex("3").unwrap(), Complex64::new(3.0, 0.0));
        assert_eq!(parse_complex("5+0.5i").unwrap(), Complex64::new(5.0, 0.5));
        assert_eq!(parse_complex("-5-0.5i").unwrap(), Complex64::new(-5.0, -0.5));
        assert_eq!(parse_complex("0.5i").unwrap(), Complex64::new(0.0, 0.5));
        assert_eq!(parse_complex("-i").unwrap(), Complex64::new(0.0, -1.0));
        assert_eq!(parse_complex("1e-3-2e-1i").unwrap(), Complex64::new(1e-3, -0.2));
        assert_eq!(parse_complex("2e+1+1i").unwrap(), Complex64::new(20.0, 1.0));
        assert!(parse_complex("abc").is_err());
        assert!(parse_complex("1+xi").is_err());
    }

    #[test]
    fn number_format_has_seventeen_digits() {
        assert_eq!(num(1.0), "1.0000000000000000e0");
        assert_eq!(num(-0.1), "-1.0000000000000001e-1");
    }
}
