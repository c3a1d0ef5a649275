//! Binary cache for coefficient sets.
//!
//! Layout (little endian): magic `NSBFCOEF`, format version `u32`, 32-byte
//! problem key, grid size `u64`, term count `u64`, `h`, the sampled arrays as
//! `(re, im)` pairs, cut points, cut rules, residual rows, `N_opt`, and a
//! trailing SHA-256 of everything before it.

use std::fs;
use std::path::Path;
use std::sync::Arc;

use num_complex::Complex64;
use sha2::{Digest, Sha256};

use crate::coefficients::{CoefficientSet, CutRule, ResidualReport};
use crate::error::{Error, Result};
use crate::grid::{Grid, SampledFn};
use crate::liouville::build_liouville;
use crate::problem::SLProblem;
use crate::seed::compute_seed;
use crate::solver::SolutionEvaluator;

pub const MAGIC: &[u8; 8] = b"NSBFCOEF";
pub const FORMAT_VERSION: u32 = 1;

/// Key identifying the problem, grid size and number of terms.
pub fn cache_key(problem: &SLProblem, points: usize, n_max: usize) -> [u8; 32] {
    let mut hasher = Sha256::new();
    hasher.update(problem.fingerprint().as_bytes());
    hasher.update((points as u64).to_le_bytes());
    hasher.update((n_max as u64).to_le_bytes());
    hasher.finalize().into()
}

fn rule_code(rule: CutRule) -> u8 {
    match rule {
        CutRule::None => 0,
        CutRule::Minimum => 1,
        CutRule::Plateau => 2,
    }
}

fn rule_from_code(code: u8) -> Result<CutRule> {
    match code {
        0 => Ok(CutRule::None),
        1 => Ok(CutRule::Minimum),
        2 => Ok(CutRule::Plateau),
        _ => Err(Error::Cache(format!("unknown cut rule {code}"))),
    }
}

/// Serialised form of `coeffs`.
pub fn encode(key: &[u8; 32], coeffs: &CoefficientSet) -> Vec<u8> {
    let mut out = Vec::new();
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&FORMAT_VERSION.to_le_bytes());
    out.extend_from_slice(key);
    let m = coeffs.g1.len();
    let n = coeffs.n_max();
    out.extend_from_slice(&(m as u64).to_le_bytes());
    out.extend_from_slice(&(n as u64).to_le_bytes());
    let put = |z: Complex64, out: &mut Vec<u8>| {
        out.extend_from_slice(&z.re.to_le_bytes());
        out.extend_from_slice(&z.im.to_le_bytes());
    };
    put(coeffs.h, &mut out);
    let arrays = coeffs
        .alpha
        .iter()
        .chain(&coeffs.mu)
        .chain([&coeffs.alpha_m1, &coeffs.mu_m1, &coeffs.g1, &coeffs.g2]);
    for f in arrays {
        for &z in f.values() {
            put(z, &mut out);
        }
    }
    for &c in coeffs.cut_alpha.iter().chain(&coeffs.cut_mu) {
        out.extend_from_slice(&c.to_le_bytes());
    }
    for &r in coeffs.cut_rule_alpha.iter().chain(&coeffs.cut_rule_mu) {
        out.push(rule_code(r));
    }
    for row in &coeffs.report.rows {
        for v in row {
            out.extend_from_slice(&v.to_le_bytes());
        }
    }
    out.extend_from_slice(&(coeffs.report.n_opt as u64).to_le_bytes());
    let digest = Sha256::digest(&out);
    out.extend_from_slice(&digest);
    out
}

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        let end = self
            .pos
            .checked_add(n)
            .filter(|&e| e <= self.bytes.len())
            .ok_or_else(|| Error::Cache("truncated file".into()))?;
        let slice = &self.bytes[self.pos..end];
        self.pos = end;
        Ok(slice)
    }

    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }

    fn u64(&mut self) -> Result<u64> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }

    fn f64(&mut self) -> Result<f64> {
        Ok(f64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }

    fn complex(&mut self) -> Result<Complex64> {
        Ok(Complex64::new(self.f64()?, self.f64()?))
    }
}

/// Parses a cache produced by [`encode`], checking the magic, version, key,
/// sizes and checksum.
pub fn decode(bytes: &[u8], key: &[u8; 32], grid: &Arc<Grid>) -> Result<CoefficientSet> {
    if bytes.len() < MAGIC.len() + 4 + 32 || &bytes[..8] != MAGIC {
        return Err(Error::Cache("not a coefficient cache".into()));
    }
    let (body, digest) = bytes.split_at(bytes.len() - 32);
    let mut r = Reader { bytes: body, pos: 8 };
    let version = r.u32()?;
    if version != FORMAT_VERSION {
        return Err(Error::Cache(format!(
            "format version {version}, expected {FORMAT_VERSION}"
        )));
    }
    if Sha256::digest(body).as_slice() != digest {
        return Err(Error::Cache("checksum mismatch".into()));
    }
    if r.take(32)? != key {
        return Err(Error::Cache("cache belongs to a different problem".into()));
    }
    let m = r.u64()? as usize;
    let n = r.u64()? as usize;
    if m != grid.len() {
        return Err(Error::Cache(format!("grid size {m}, expected {}", grid.len())));
    }
    let h = r.complex()?;
    let array = |r: &mut Reader| -> Result<SampledFn> {
        let values = (0..m).map(|_| r.complex()).collect::<Result<Vec<_>>>()?;
        SampledFn::new(Arc::clone(grid), values)
    };
    let alpha = (0..=n).map(|_| array(&mut r)).collect::<Result<Vec<_>>>()?;
    let mu = (0..=n).map(|_| array(&mut r)).collect::<Result<Vec<_>>>()?;
    let alpha_m1 = array(&mut r)?;
    let mu_m1 = array(&mut r)?;
    let g1 = array(&mut r)?;
    let g2 = array(&mut r)?;
    let cut_alpha = (0..=n).map(|_| r.f64()).collect::<Result<Vec<_>>>()?;
    let cut_mu = (0..=n).map(|_| r.f64()).collect::<Result<Vec<_>>>()?;
    let rules = r.take(2 * (n + 1))?;
    let cut_rule_alpha = rules[..=n].iter().map(|&c| rule_from_code(c)).collect::<Result<_>>()?;
    let cut_rule_mu = rules[n + 1..].iter().map(|&c| rule_from_code(c)).collect::<Result<_>>()?;
    let rows = (0..=n)
        .map(|_| Ok([r.f64()?, r.f64()?, r.f64()?, r.f64()?]))
        .collect::<Result<Vec<_>>>()?;
    let n_opt = r.u64()? as usize;
    if r.pos != body.len() || n_opt > n {
        return Err(Error::Cache("inconsistent layout".into()));
    }
    Ok(CoefficientSet {
        alpha,
        mu,
        alpha_m1,
        mu_m1,
        g1,
        g2,
        h,
        cut_alpha,
        cut_mu,
        cut_rule_alpha,
        cut_rule_mu,
        report: ResidualReport { rows, n_opt },
    })
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum CacheStatus {
    /// No cache path was given.
    Disabled,
    Hit,
    Miss,
    /// The file existed but could not be used; it was rewritten.
    Rejected(String),
}

/// Builds an evaluator, reusing the coefficient cache at `path` when it is
/// valid and (re)writing it otherwise. `terms` overrides `N_opt`.
pub fn build_cached(
    problem: &SLProblem,
    points: usize,
    n_max: usize,
    terms: Option<usize>,
    path: Option<&Path>,
) -> Result<(SolutionEvaluator, CacheStatus)> {
    let grid = Grid::shared(problem.a, problem.b, points)?;
    let data = build_liouville(problem, &grid)?;
    let seed = compute_seed(&data)?;
    let key = cache_key(problem, points, n_max);
    let mut status = CacheStatus::Disabled;
    let mut coeffs = None;
    if let Some(path) = path {
        status = match fs::read(path) {
            Ok(bytes) => match decode(&bytes, &key, &grid) {
                Ok(c) => {
                    coeffs = Some(c);
                    CacheStatus::Hit
                }
                Err(e) => {
                    log::warn!("ignoring cache {}: {e}", path.display());
                    CacheStatus::Rejected(e.to_string())
                }
            },
            Err(_) => CacheStatus::Miss,
        };
    }
    let coeffs = match coeffs {
        Some(c) => c,
        None => {
            let c = crate::coefficients::compute_coefficients(&seed, &data, n_max)?;
            if let Some(path) = path {
                fs::write(path, encode(&key, &c))?;
            }
            c
        }
    };
    let terms = terms.unwrap_or(coeffs.n_opt());
    let ev = SolutionEvaluator::from_parts(data, seed, Arc::new(coeffs), terms)?;
    Ok((ev, status))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::oracles::catalog;

    fn sample() -> (SLProblem, Arc<Grid>, CoefficientSet) {
        let problem = catalog::kamke();
        let grid = Grid::shared(0.0, 2.0, 201).unwrap();
        let data = build_liouville(&problem, &grid).unwrap();
        let seed = compute_seed(&data).unwrap();
        let c = crate::coefficients::compute_coefficients(&seed, &data, 8).unwrap();
        (problem, grid, c)
    }

    #[test]
    fn round_trip_is_exact() {
        let (problem, grid, c) = sample();
        let key = cache_key(&problem, 201, 8);
        let back = decode(&encode(&key, &c), &key, &grid).unwrap();
        for (a, b) in c.alpha.iter().zip(&back.alpha) {
            assert_eq!(a.values(), b.values());
        }
        assert_eq!(c.report.rows, back.report.rows);
        assert_eq!(c.cut_rule_mu, back.cut_rule_mu);
        assert_eq!(c.h, back.h);
    }

    #[test]
    fn rejects_corruption_and_foreign_keys() {
        let (problem, grid, c) = sample();
        let key = cache_key(&problem, 201, 8);
        let mut bytes = encode(&key, &c);
        assert!(decode(&bytes, &cache_key(&problem, 201, 9), &grid).is_err());
        let mid = bytes.len() / 2;
        bytes[mid] ^= 1;
        assert!(matches!(decode(&bytes, &key, &grid), Err(Error::Cache(_))));
        assert!(decode(&bytes[..100], &key, &grid).is_err());
    }

    #[test]
    fn refuses_other_versions() {
        let (problem, grid, c) = sample();
        let key = cache_key(&problem, 201, 8);
        let mut bytes = encode(&key, &c);
        bytes[8] = 2;
        let err = decode(&bytes, &key, &grid).unwrap_err();
        assert!(err.to_string().contains("version"));
    }
}
