//! Built-in problems.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::problem::{BoundarySpec, Coefficient, SLProblem};

/// `v'' = -λ v` on `[a, b]`.
pub fn degenerate(a: f64, b: f64) -> SLProblem {
    SLProblem::new(
        Coefficient::constant(1.0),
        Coefficient::constant(0.0),
        Coefficient::constant(1.0),
        a,
        b,
    )
    .expect("valid interval")
}

/// `(e^{-2y} v')' + e^{-2y} v = -λ (1 + y²) e^{-2y} v` on `[0, 2]`, which has
/// solutions in terms of Kummer's function.
pub fn kamke() -> SLProblem {
    let e = |y: f64| (-2.0 * y).exp();
    let p = Coefficient::native(
        "kamke:p",
        move |y| e(y),
        Some(move |y| -2.0 * e(y)),
        Some(move |y| 4.0 * e(y)),
    );
    let q = Coefficient::native(
        "kamke:q",
        move |y| -e(y),
        Some(move |y| 2.0 * e(y)),
        Some(move |y| -4.0 * e(y)),
    );
    let r = Coefficient::native(
        "kamke:r",
        move |y| (y * y + 1.0) * e(y),
        Some(move |y| (-2.0 * y * y + 2.0 * y - 2.0) * e(y)),
        Some(move |y| (4.0 * y * y - 8.0 * y + 6.0) * e(y)),
    );
    SLProblem::new(p, q, r, 0.0, 2.0).expect("valid interval")
}

/// `u(0) - u'(0) = 0`, `u(2) + u'(2) = 0`.
pub fn kamke_boundary() -> BoundarySpec {
    BoundarySpec {
        a1: 1.0,
        a2: -1.0,
        b1: 1.0,
        b2: 1.0,
    }
}

/// Trigonometric sum `c + Σ a_k sin(k y + φ_k)` with its derivatives.
#[derive(Debug, Clone)]
struct TrigSum {
    c: f64,
    terms: Vec<(f64, f64, f64)>,
}

impl TrigSum {
    fn random(rng: &mut ChaCha8Rng, c: f64, amplitude: f64) -> Self {
        let terms = (1..=3)
            .map(|k| {
                (
                    rng.gen_range(-amplitude..amplitude) / k as f64,
                    k as f64,
                    rng.gen_range(0.0..std::f64::consts::TAU),
                )
            })
            .collect();
        Self { c, terms }
    }

    fn eval(&self, y: f64, order: u32) -> f64 {
        let base = if order == 0 { self.c } else { 0.0 };
        base + self
            .terms
            .iter()
            .map(|&(a, k, phi)| {
                let t = k * y + phi;
                a * k.powi(order as i32)
                    * match order % 4 {
                        0 => t.sin(),
                        1 => t.cos(),
                        2 => -t.sin(),
                        _ => -t.cos(),
                    }
            })
            .sum::<f64>()
    }
}

fn exp_of(name: String, s: TrigSum) -> Coefficient {
    let (s0, s1, s2) = (s.clone(), s.clone(), s);
    Coefficient::native(
        name,
        move |y| s0.eval(y, 0).exp(),
        Some(move |y| s1.eval(y, 1) * s1.eval(y, 0).exp()),
        Some(move |y| {
            let d = s2.eval(y, 1);
            (s2.eval(y, 2) + d * d) * s2.eval(y, 0).exp()
        }),
    )
}

/// Reproducible smooth problem on `[0, 1]` with `p, r` positive.
pub fn random_smooth(seed: u64) -> SLProblem {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let p = exp_of(format!("random:{seed}:p"), TrigSum::random(&mut rng, 0.0, 0.5));
    let r = exp_of(format!("random:{seed}:r"), TrigSum::random(&mut rng, 0.0, 0.5));
    let q_mean = rng.gen_range(-1.0..1.0);
    let qs = TrigSum::random(&mut rng, q_mean, 2.0);
    let (q0, q1, q2) = (qs.clone(), qs.clone(), qs);
    let q = Coefficient::native(
        format!("random:{seed}:q"),
        move |y| q0.eval(y, 0),
        Some(move |y| q1.eval(y, 1)),
        Some(move |y| q2.eval(y, 2)),
    );
    SLProblem::new(p, q, r, 0.0, 1.0).expect("valid interval")
}

/// Names accepted by [`builtin`].
pub const BUILTINS: &[&str] = &["degenerate", "kamke"];

/// Built-in problem by name. `degenerate` takes the interval from the caller.
pub fn builtin(name: &str, a: f64, b: f64) -> Option<SLProblem> {
    match name {
        "degenerate" => SLProblem::new(
            Coefficient::constant(1.0),
            Coefficient::constant(0.0),
            Coefficient::constant(1.0),
            a,
            b,
        )
        .ok(),
        "kamke" => Some(kamke()),
        _ => None,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn check_derivatives(c: &Coefficient) {
        for &y in &[0.1, 0.4, 0.9] {
            let h = 1e-5;
            let fd = (c.value(y + h) - c.value(y - h)) / (2.0 * h);
            let fd2 = (c.value(y + h) - 2.0 * c.value(y) + c.value(y - h)) / (h * h);
            let d = c.derivative(y).unwrap();
            let d2 = c.second_derivative(y).unwrap();
            assert!((fd - d).abs() < 1e-7 * d.abs().max(1.0));
            assert!((fd2 - d2).abs() < 1e-3 * d2.abs().max(1.0));
        }
    }

    #[test]
    fn kamke_derivatives() {
        let p = kamke();
        for c in [&p.p, &p.q, &p.r] {
            check_derivatives(c);
        }
    }

    #[test]
    fn random_problems_are_reproducible_and_valid() {
        let a = random_smooth(7);
        let b = random_smooth(7);
        assert_eq!(a.fingerprint(), b.fingerprint());
        assert_eq!(a.p.value(0.3), b.p.value(0.3));
        assert_ne!(random_smooth(8).p.value(0.3), a.p.value(0.3));
        for c in [&a.p, &a.q, &a.r] {
            check_derivatives(c);
        }
        assert!(a.p.value(0.5) > 0.0 && a.r.value(0.5) > 0.0);
    }
}
