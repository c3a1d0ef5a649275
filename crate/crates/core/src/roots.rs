//! Sign-change scanning and bracketed root refinement for real functions.

use rayon::prelude::*;

/// Interval `[lo, hi]` over which `f` changes sign (or `lo == hi` for an
/// exact zero at a sample).
#[derive(Debug, Clone, Copy)]
pub struct Bracket {
    pub lo: f64,
    pub hi: f64,
    pub f_lo: f64,
    pub f_hi: f64,
}

/// Samples `f` on `[start, end]` with spacing at most `step` (in parallel) and
/// returns the sign-change brackets in increasing order.
pub fn scan<F>(f: F, start: f64, end: f64, step: f64) -> Vec<Bracket>
where
    F: Fn(f64) -> f64 + Sync,
{
    if end <= start {
        return Vec::new();
    }
    let cells = ((end - start) / step).ceil().max(1.0) as usize;
    let xs: Vec<f64> = (0..=cells)
        .map(|i| start + (end - start) * i as f64 / cells as f64)
        .collect();
    let fs: Vec<f64> = xs.par_iter().map(|&x| f(x)).collect();
    let mut out = Vec::new();
    for i in 0..cells {
        let (a, b) = (fs[i], fs[i + 1]);
        if a == 0.0 {
            out.push(Bracket {
                lo: xs[i],
                hi: xs[i],
                f_lo: 0.0,
                f_hi: 0.0,
            });
        } else if a * b < 0.0 {
            out.push(Bracket {
                lo: xs[i],
                hi: xs[i + 1],
                f_lo: a,
                f_hi: b,
            });
        }
    }
    if fs[cells] == 0.0 {
        out.push(Bracket {
            lo: xs[cells],
            hi: xs[cells],
            f_lo: 0.0,
            f_hi: 0.0,
        });
    }
    out
}

/// Relative secant step at which [`refine`] stops by default.
pub const STEP_TOLERANCE: f64 = 1e-15;

/// `STEP_TOLERANCE · max(1, |x|)`.
pub fn default_tolerance(x: f64) -> f64 {
    STEP_TOLERANCE * x.abs().max(1.0)
}

/// Outcome of [`refine`].
#[derive(Debug, Clone, Copy)]
pub struct Root {
    pub x: f64,
    pub value: f64,
    pub iterations: usize,
}

/// Bisection until the bracket is narrower than `coarse`, then secant steps
/// (falling back to bisection whenever the secant leaves the bracket) until
/// the update is below `tol(x)`.
pub fn refine<F>(f: F, bracket: Bracket, coarse: f64, tol: impl Fn(f64) -> f64) -> Root
where
    F: Fn(f64) -> f64,
{
    let Bracket {
        mut lo,
        mut hi,
        mut f_lo,
        mut f_hi,
    } = bracket;
    if lo == hi {
        return Root {
            x: lo,
            value: f_lo,
            iterations: 0,
        };
    }
    let mut iterations = 0;
    while hi - lo > coarse && iterations < 200 {
        let mid = 0.5 * (lo + hi);
        let fm = f(mid);
        iterations += 1;
        if fm == 0.0 {
            return Root {
                x: mid,
                value: 0.0,
                iterations,
            };
        }
        if (fm < 0.0) == (f_lo < 0.0) {
            lo = mid;
            f_lo = fm;
        } else {
            hi = mid;
            f_hi = fm;
        }
    }
    let (mut x0, mut f0, mut x1, mut f1) = (lo, f_lo, hi, f_hi);
    let mut best = if f_lo.abs() < f_hi.abs() { (lo, f_lo) } else { (hi, f_hi) };
    for _ in 0..100 {
        let mut x = x1 - f1 * (x1 - x0) / (f1 - f0);
        if !(x > lo && x < hi) {
            x = 0.5 * (lo + hi);
        }
        let fx = f(x);
        iterations += 1;
        if fx.abs() <= best.1.abs() {
            best = (x, fx);
        }
        let step = (x - x1).abs();
        if fx == 0.0 || step <= tol(x) || hi - lo <= tol(x) {
            return Root {
                x,
                value: fx,
                iterations,
            };
        }
        if (fx < 0.0) == (f_lo < 0.0) {
            lo = x;
            f_lo = fx;
        } else {
            hi = x;
        }
        (x0, f0, x1, f1) = (x1, f1, x, fx);
    }
    Root {
        x: best.0,
        value: best.1,
        iterations,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn finds_sine_roots() {
        let brackets = scan(f64::sin, 0.5, 10.0, 0.3);
        assert_eq!(brackets.len(), 3);
        for (k, b) in brackets.iter().enumerate() {
            let root = refine(f64::sin, *b, 1e-6, |x| 1e-13 * x.max(1.0));
            let exact = (k + 1) as f64 * std::f64::consts::PI;
            assert!((root.x - exact).abs() < 1e-12);
        }
    }

    #[test]
    fn exact_zero_at_sample() {
        let brackets = scan(|x| x - 1.0, 0.0, 2.0, 0.5);
        assert_eq!(brackets.len(), 1);
        assert_eq!(brackets[0].lo, 1.0);
    }

    #[test]
    fn empty_range() {
        assert!(scan(f64::sin, 1.0, 1.0, 0.1).is_empty());
    }
}
