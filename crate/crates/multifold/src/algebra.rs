//! Complex scalars, the binomial series of `(1 - w)^(-1/2)` and the
//! principal square root used by the chart maps.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, ToPrimitive};

use crate::error::{Error, Result};

/// Complex scalar used for every chart coordinate, parameter and integral value.
pub type Complex = num_complex::Complex64;

pub const I: Complex = Complex::new(0.0, 1.0);

/// Rejects NaN or infinite components.
pub fn ensure_finite(name: &'static str, value: Complex) -> Result<Complex> {
    if value.re.is_finite() && value.im.is_finite() {
        Ok(value)
    } else {
        Err(Error::NonFinite { name })
    }
}

/// Coefficient `b_k` of `(1 - w)^(-1/2) = Σ b_k w^k`, as an exact rational.
///
/// Evaluated from the falling product `(-1)^k (-1/2)(-3/2)...(-1/2-(k-1)) / k!`,
/// which reduces to `C(2k, k) / 4^k`. Big integers are used so large `k`
/// never wraps.
pub fn series_coefficient_bk(k: u32) -> BigRational {
    let mut value = BigRational::one();
    for j in 0..k {
        // (-1) * (-1/2 - j) / (j + 1) = (2j + 1) / (2j + 2)
        let num = BigInt::from(2 * u64::from(j) + 1);
        let den = BigInt::from(2 * u64::from(j) + 2);
        value *= BigRational::new(num, den);
    }
    value
}

/// `b_k` rounded to `f64`.
pub fn series_coefficient_f64(k: u32) -> f64 {
    series_coefficient_bk(k).to_f64().expect("b_k lies in (0, 1]")
}

/// Melnikov constant `c_m = π b_m`.
pub fn melnikov_constant(m: u32) -> f64 {
    std::f64::consts::PI * series_coefficient_f64(m)
}

/// Square root with non-negative real part. On the negative real axis the
/// root with positive imaginary part is returned regardless of the sign of
/// the zero imaginary component.
pub fn principal_sqrt(x: Complex) -> Complex {
    if x.im == 0.0 {
        if x.re >= 0.0 {
            return Complex::new(x.re.sqrt(), 0.0);
        }
        return Complex::new(0.0, (-x.re).sqrt());
    }
    let r = x.sqrt();
    if r.re < 0.0 {
        -r
    } else {
        r
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_integer::binomial;
    use proptest::prelude::*;

    fn rational(n: i64, d: i64) -> BigRational {
        BigRational::new(BigInt::from(n), BigInt::from(d))
    }

    /// Taylor coefficients of (1-w)^(-1/2) from repeated differentiation:
    /// d^k/dw^k (1-w)^(-1/2) at 0 = (1/2)(3/2)...((2k-1)/2), divided by k!.
    fn taylor_oracle(k: u32) -> BigRational {
        let mut deriv = BigRational::one();
        let mut fact = BigInt::one();
        for j in 0..k {
            deriv *= rational(2 * j as i64 + 1, 2);
            fact *= BigInt::from(j + 1);
        }
        deriv / BigRational::from_integer(fact)
    }

    #[test]
    fn small_coefficients() {
        assert_eq!(series_coefficient_bk(0), BigRational::one());
        assert_eq!(series_coefficient_bk(1), rational(1, 2));
        assert_eq!(series_coefficient_bk(2), rational(3, 8));
        assert_eq!(series_coefficient_bk(3), rational(5, 16));
        assert_eq!(series_coefficient_bk(4), rational(35, 128));
        for k in 0..12 {
            assert_eq!(series_coefficient_bk(k), taylor_oracle(k));
        }
    }

    #[test]
    fn matches_central_binomial_over_four_pow() {
        for k in 0..=30u32 {
            let central = binomial(BigInt::from(2 * k), BigInt::from(k));
            let four_pow = num_traits::pow(BigInt::from(4), k as usize);
            assert_eq!(series_coefficient_bk(k), BigRational::new(central, four_pow), "k={k}");
        }
    }

    #[test]
    fn large_index_does_not_overflow() {
        let b = series_coefficient_bk(200);
        let approx = b.to_f64().unwrap();
        // b_k ~ 1/sqrt(pi k)
        assert!((approx * (std::f64::consts::PI * 200.0).sqrt() - 1.0).abs() < 1e-2);
    }

    #[test]
    fn sqrt_examples() {
        assert_eq!(principal_sqrt(Complex::new(4.0, 0.0)), Complex::new(2.0, 0.0));
        assert_eq!(principal_sqrt(Complex::new(-1.0, 0.0)), I);
        assert_eq!(principal_sqrt(Complex::new(-1.0, -0.0)), I);
        assert_eq!(principal_sqrt(Complex::new(0.0, 0.0)), Complex::new(0.0, 0.0));
        let r = principal_sqrt(Complex::new(0.96, 0.0));
        assert!((r.re - 0.979_795_897_113_271_2).abs() < 1e-15 && r.im == 0.0);
    }

    #[test]
    fn non_finite_rejected() {
        assert!(ensure_finite("x", Complex::new(f64::NAN, 0.0)).is_err());
        assert!(ensure_finite("x", Complex::new(0.0, f64::INFINITY)).is_err());
        assert!(ensure_finite("x", Complex::new(1.0, 2.0)).is_ok());
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(10_000))]
        #[test]
        fn sqrt_squares_back(log_mod in -6.0f64..6.0, arg in -std::f64::consts::PI..std::f64::consts::PI) {
            let x = Complex::from_polar(10f64.powf(log_mod), arg);
            let r = principal_sqrt(x);
            prop_assert!(r.re >= 0.0);
            let err = (r * r - x).norm();
            prop_assert!(err <= 4.0 * f64::EPSILON * x.norm(), "err={err:e} |x|={}", x.norm());
        }
    }
}
