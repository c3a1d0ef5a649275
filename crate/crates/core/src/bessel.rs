//! Spherical Bessel functions `j_0(z), …, j_N(z)` of complex argument.

use num_complex::Complex64;

use crate::error::{Error, Result};

/// Largest order accepted by [`j_batch`].
pub const MAX_ORDER: usize = 512;
const SMALL_ARGUMENT: f64 = 1e-4;
const RESCALE: f64 = 1e250;

#[derive(Debug, Clone)]
pub struct BesselBatch {
    pub z: Complex64,
    pub values: Vec<Complex64>,
}

impl BesselBatch {
    pub fn order(&self) -> usize {
        self.values.len() - 1
    }
}

fn j0(z: Complex64) -> Complex64 {
    z.sin() / z
}

fn j1(z: Complex64) -> Complex64 {
    z.sin() / (z * z) - z.cos() / z
}

/// `√π |z/2|^n e^{|Im z|} / Γ(n + 3/2)`.
pub fn magnitude_bound(z: Complex64, n: usize) -> f64 {
    let log = 0.5 * std::f64::consts::PI.ln() + n as f64 * (z.norm() / 2.0).ln() + z.im.abs()
        - ln_gamma_half(n);
    log.exp()
}

/// `ln Γ(n + 3/2)` from `Γ(3/2) = √π / 2`.
fn ln_gamma_half(n: usize) -> f64 {
    let mut acc = (std::f64::consts::PI.sqrt() / 2.0).ln();
    for k in 1..=n {
        acc += (k as f64 + 0.5).ln();
    }
    acc
}

/// Ascending series `j_n(z) = z^n / (2n+1)!! Σ_k (-z²/2)^k / (k! (2n+3)(2n+5)…(2n+2k+1))`.
fn series(z: Complex64, n_max: usize) -> Vec<Complex64> {
    let w = -z * z * 0.5;
    let mut lead = Complex64::new(1.0, 0.0);
    (0..=n_max)
        .map(|n| {
            if n > 0 {
                lead *= z / (2 * n + 1) as f64;
            }
            let mut term = Complex64::new(1.0, 0.0);
            let mut sum = term;
            for k in 1..=6 {
                term *= w / (k as f64 * (2 * n + 2 * k + 1) as f64);
                sum += term;
            }
            lead * sum
        })
        .collect()
}

/// Upward recurrence from the closed forms of `j_0`, `j_1`.
pub fn j_upward(z: Complex64, n_max: usize) -> Vec<Complex64> {
    let mut out = Vec::with_capacity(n_max + 1);
    out.push(j0(z));
    if n_max >= 1 {
        out.push(j1(z));
    }
    for n in 1..n_max {
        let next = out[n] * ((2 * n + 1) as f64) / z - out[n - 1];
        out.push(next);
    }
    out
}

/// Miller's downward recurrence, normalised by whichever of `j_0`, `j_1` is
/// larger in magnitude. The start order carries an extra `√(40 max(N, |z|))`
/// so the neglected tail is below rounding when `|z|` exceeds `N`.
pub fn j_downward(z: Complex64, n_max: usize) -> Vec<Complex64> {
    let reach = (n_max as f64).max(z.norm());
    let start = n_max + 15usize.max(z.norm().ceil() as usize) + (40.0 * reach).sqrt().ceil() as usize;
    let mut out = vec![Complex64::new(0.0, 0.0); n_max.max(1) + 1];
    let mut above = Complex64::new(0.0, 0.0);
    let mut current = Complex64::new(1e-300, 0.0);
    for n in (1..=start).rev() {
        // j_{n-1} = (2n+1)/z j_n - j_{n+1}
        let below = current * ((2 * n + 1) as f64) / z - above;
        above = current;
        current = below;
        if n <= out.len() - 1 {
            out[n] = above;
        }
        if current.norm() > RESCALE {
            current /= RESCALE;
            above /= RESCALE;
            for v in out.iter_mut() {
                *v /= RESCALE;
            }
        }
    }
    out[0] = current;
    let (e0, e1) = (j0(z), j1(z));
    let (exact, computed) = if e0.norm() >= e1.norm() {
        (e0, out[0])
    } else {
        (e1, out[1])
    };
    // divide through the modulus first so tiny values do not underflow
    let m = computed.norm();
    let scale = exact / (computed / m) / m;
    let mut values: Vec<Complex64> = out.into_iter().map(|v| v * scale).collect();
    values.truncate(n_max + 1);
    values
}

/// `j_0(z), …, j_N(z)`.
pub fn j_batch(z: Complex64, n_max: usize) -> Result<BesselBatch> {
    if n_max > MAX_ORDER {
        return Err(Error::BesselOrder {
            order: n_max,
            cap: MAX_ORDER,
        });
    }
    let r = z.norm();
    let values = if r == 0.0 {
        let mut v = vec![Complex64::new(0.0, 0.0); n_max + 1];
        v[0] = Complex64::new(1.0, 0.0);
        v
    } else if r < SMALL_ARGUMENT {
        series(z, n_max)
    } else if r >= n_max.max(1) as f64 && z.im.abs() <= 0.5 * r {
        j_upward(z, n_max)
    } else {
        j_downward(z, n_max)
    };
    Ok(BesselBatch { z, values })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn c(re: f64) -> Complex64 {
        Complex64::new(re, 0.0)
    }

    #[test]
    fn closed_forms() {
        let b = j_batch(c(1.0), 3).unwrap();
        assert!((b.values[0].re - 0.8414709848078965).abs() < 1e-15);
        // j_2(1) = (3/z² - 1) sin z / z - 3 cos z / z²
        let j2 = 2.0 * 1f64.sin() - 3.0 * 1f64.cos();
        assert!((b.values[2].re - j2).abs() < 1e-15);
    }

    #[test]
    fn at_zero() {
        let b = j_batch(c(0.0), 5).unwrap();
        assert_eq!(b.values[0], c(1.0));
        assert!(b.values[1..].iter().all(|v| v.norm() == 0.0));
    }

    #[test]
    fn order_forty_magnitudes() {
        let a = j_batch(c(1.0), 40).unwrap().values[40].re;
        let b = j_batch(c(10.0), 40).unwrap().values[40].re;
        assert!((a / 1.5e-61 - 1.0).abs() < 0.05, "{a:e}");
        assert!((b / 8.4e-22 - 1.0).abs() < 0.05, "{b:e}");
    }

    #[test]
    fn small_argument_series() {
        let z = Complex64::new(3e-5, 1e-5);
        let b = j_batch(z, 4).unwrap();
        let d = j_downward(Complex64::new(3e-3, 1e-3), 4);
        assert!((b.values[0] - j0(z)).norm() < 1e-15);
        // j_1(z) ≈ z/3 for tiny z
        assert!((b.values[1] / (z / 3.0) - 1.0).norm() < 1e-9);
        assert!(d.iter().all(|v| v.is_finite()));
    }

    #[test]
    fn rejects_large_orders() {
        assert!(matches!(
            j_batch(c(1.0), 513),
            Err(Error::BesselOrder { order: 513, cap: 512 })
        ));
    }

    #[test]
    fn large_order_small_argument_is_finite() {
        let b = j_batch(c(0.5), 512).unwrap();
        assert!(b.values.iter().all(|v| v.is_finite()));
        assert_eq!(b.values[512].re, 0.0);
    }

    proptest! {
        #[test]
        fn first_order_identity(r in 0.1f64..100.0, phase in -0.3f64..0.3) {
            let z = Complex64::from_polar(r, phase);
            let b = j_batch(z, 30).unwrap();
            let expected = b.values[0] / z - z.cos() / z;
            let scale = b.values[1].norm().max(expected.norm()).max(1e-300);
            prop_assert!((b.values[1] - expected).norm() <= 1e-13 * scale.max(1.0));
        }

        #[test]
        fn crossover_agreement(n in 2usize..60, t in 1.0f64..2.0) {
            let z = c(n as f64 * t);
            let up = j_upward(z, n);
            let down = j_downward(z, n);
            for k in 0..=n {
                // relative to the local size, floored at a fraction of the 1/|z| envelope
                let scale = up[k].norm().max(down[k].norm()).max(1e-2 / z.norm());
                prop_assert!((up[k] - down[k]).norm() <= 1e-10 * scale,
                    "k = {}: {} vs {}", k, up[k], down[k]);
            }
        }

        #[test]
        fn magnitude_bound_holds(re in -150.0f64..150.0, im in -3.0f64..3.0, n in 0usize..80) {
            let z = Complex64::new(re, im);
            let b = j_batch(z, n).unwrap();
            for (k, v) in b.values.iter().enumerate() {
                prop_assert!(v.norm() <= magnitude_bound(z, k) * (1.0 + 1e-10) + 1e-300);
            }
        }
    }
}
