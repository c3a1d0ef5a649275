//! Exact solution of the built-in Kummer-type test problem,
//! `u = exp(y - i y² ω / 2) ₁F₁((1 + iω)/4; 1/2; i y² ω)`, with `u(0) = u'(0) = 1`.
//!
//! The ascending series has terms far larger than its sum when `|z|` is large,
//! so it is summed in binary fixed point with `FRACTION_BITS` fractional bits.

use num_bigint::BigInt;
use num_complex::Complex64;
use num_traits::{ToPrimitive, Zero};

use crate::error::{Error, Result};

/// Largest `|y² ω|` accepted.
pub const SERIES_CAP: f64 = 200.0;
const FRACTION_BITS: u32 = 512;

/// Complex fixed-point number `(re + i im) / 2^FRACTION_BITS`.
#[derive(Debug, Clone)]
struct Fixed {
    re: BigInt,
    im: BigInt,
}

fn to_fixed(x: f64) -> BigInt {
    if x == 0.0 {
        return BigInt::zero();
    }
    let bits = x.to_bits();
    let sign = if bits >> 63 == 0 { 1 } else { -1 };
    let exponent = ((bits >> 52) & 0x7ff) as i64;
    let mantissa = if exponent == 0 {
        (bits & 0xf_ffff_ffff_ffff) << 1
    } else {
        (bits & 0xf_ffff_ffff_ffff) | (1 << 52)
    };
    // x = mantissa * 2^(exponent - 1075)
    let shift = exponent - 1075 + FRACTION_BITS as i64;
    let m = BigInt::from(mantissa) * sign;
    if shift >= 0 {
        m << shift as usize
    } else {
        m >> (-shift) as usize
    }
}

fn to_f64(x: &BigInt) -> f64 {
    // keep the top bits only so the conversion cannot overflow
    let bits = x.bits() as i64;
    let drop = (bits - 64).max(0);
    let top = (x >> drop as usize).to_f64().unwrap_or(0.0);
    top * 2f64.powi((drop - FRACTION_BITS as i64) as i32)
}

impl Fixed {
    fn from_complex(z: Complex64) -> Self {
        Self {
            re: to_fixed(z.re),
            im: to_fixed(z.im),
        }
    }

    fn one() -> Self {
        Self {
            re: BigInt::from(1) << FRACTION_BITS as usize,
            im: BigInt::zero(),
        }
    }

    fn mul(&self, other: &Fixed) -> Fixed {
        let re = (&self.re * &other.re - &self.im * &other.im) >> FRACTION_BITS as usize;
        let im = (&self.re * &other.im + &self.im * &other.re) >> FRACTION_BITS as usize;
        Fixed { re, im }
    }

    fn add(&self, other: &Fixed) -> Fixed {
        Fixed {
            re: &self.re + &other.re,
            im: &self.im + &other.im,
        }
    }

    fn div_int(&self, d: u64) -> Fixed {
        Fixed {
            re: &self.re / d,
            im: &self.im / d,
        }
    }

    fn double(&self) -> Fixed {
        Fixed {
            re: &self.re << 1usize,
            im: &self.im << 1usize,
        }
    }

    fn add_int(&self, k: u64) -> Fixed {
        Fixed {
            re: &self.re + (BigInt::from(k) << FRACTION_BITS as usize),
            im: self.im.clone(),
        }
    }

    fn is_negligible(&self) -> bool {
        // below 2^-200 in value
        self.re.bits().max(self.im.bits()) < (FRACTION_BITS - 200) as u64
    }

    fn to_complex(&self) -> Complex64 {
        Complex64::new(to_f64(&self.re), to_f64(&self.im))
    }
}

/// `₁F₁(a; b; z)` for `b = twice_b / 2`.
fn hypergeometric(a: &Fixed, twice_b: u64, z: &Fixed, z_abs: f64) -> Complex64 {
    let mut term = Fixed::one();
    let mut sum = Fixed::one();
    let mut k: u64 = 0;
    loop {
        // term *= (a + k) z / ((b + k)(k + 1)) = 2 (a + k) z / ((2b + 2k)(k + 1))
        term = term
            .mul(&a.add_int(k))
            .mul(z)
            .div_int((twice_b + 2 * k) * (k + 1))
            .double();
        sum = sum.add(&term);
        k += 1;
        if k as f64 > 2.0 * z_abs + 10.0 && term.is_negligible() {
            break;
        }
    }
    sum.to_complex()
}

/// `(u(y), u'(y))` at spectral parameter `ω` (real), `λ = ω²`.
pub fn exact_kamke_solution(omega: f64, y: f64) -> Result<(Complex64, Complex64)> {
    let z_abs = y * y * omega.abs();
    if !(z_abs <= SERIES_CAP) {
        return Err(Error::SeriesCap(z_abs));
    }
    let a = Complex64::new(0.25, omega / 4.0);
    let yf = Fixed::from_complex(y.into());
    let z = yf
        .mul(&yf)
        .mul(&Fixed::from_complex(Complex64::new(0.0, omega)));
    let fa = Fixed::from_complex(a);
    let f = hypergeometric(&fa, 1, &z, z_abs);
    let f_next = hypergeometric(&fa.add_int(1), 3, &z, z_abs);
    let i = Complex64::i();
    let prefactor = (y - i * y * y * omega / 2.0).exp();
    let u = prefactor * f;
    let up = prefactor * ((1.0 - i * y * omega) * f + 2.0 * i * y * omega * 2.0 * a * f_next);
    Ok((u, up))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fixed_point_round_trip() {
        for &x in &[1.0, -0.375, 3.0e-20, 12345.678, -7.0e10] {
            assert_eq!(to_f64(&to_fixed(x)), x);
        }
    }

    #[test]
    fn initial_values() {
        for &omega in &[0.0, 1.0, 52.0, 210.0] {
            let (u, up) = exact_kamke_solution(omega, 0.0).unwrap();
            assert!((u - 1.0).norm() < 1e-15);
            assert!((up - 1.0).norm() < 1e-15);
        }
    }

    #[test]
    fn zero_frequency_is_exponential() {
        for &y in &[0.3, 1.0, 2.0] {
            let (u, up) = exact_kamke_solution(0.0, y).unwrap();
            assert!((u - y.exp()).norm() < 1e-14 * y.exp());
            assert!((up - y.exp()).norm() < 1e-14 * y.exp());
        }
    }

    #[test]
    fn small_argument_matches_double_series() {
        // ₁F₁(a; 1/2; z) by a plain series where cancellation is harmless
        let (omega, y) = (0.7, 0.9);
        let a = Complex64::new(0.25, omega / 4.0);
        let z = Complex64::new(0.0, y * y * omega);
        let (mut term, mut sum) = (Complex64::new(1.0, 0.0), Complex64::new(1.0, 0.0));
        for k in 0..60 {
            let kf = k as f64;
            term *= (a + kf) * z / ((0.5 + kf) * (kf + 1.0));
            sum += term;
        }
        let i = Complex64::i();
        let expected = (y - i * y * y * omega / 2.0).exp() * sum;
        let (u, _) = exact_kamke_solution(omega, y).unwrap();
        assert!((u - expected).norm() < 1e-14);
    }

    #[test]
    fn real_for_real_data() {
        let (u, up) = exact_kamke_solution(52.0, 1.7).unwrap();
        assert!(u.im.abs() < 1e-12 * u.norm().max(1.0));
        assert!(up.im.abs() < 1e-12 * up.norm().max(1.0));
    }

    #[test]
    fn cap_is_enforced() {
        assert!(matches!(
            exact_kamke_solution(210.0, 2.0),
            Err(Error::SeriesCap(_))
        ));
    }
}
