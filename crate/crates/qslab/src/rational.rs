//! Helpers around `num`'s big rationals: robust conversion to `f64`,
//! the canonical `"numerator/denominator"` text form, and serde adapters.

use num_bigint::{BigInt, Sign};
use num_traits::{Signed, ToPrimitive, Zero};

use crate::error::Error;

pub use num_rational::BigRational;

/// Shorthand for a small rational.
pub fn rat(numer: i64, denom: i64) -> BigRational {
    BigRational::new(BigInt::from(numer), BigInt::from(denom))
}

/// Shorthand for an integer rational.
pub fn rat_int(value: i64) -> BigRational {
    BigRational::from(BigInt::from(value))
}

/// Converts a big rational to `f64` with ~80 bits of working precision.
///
/// `ToPrimitive` on `Ratio<BigInt>` divides the converted numerator and
/// denominator, which degenerates to `inf/inf` once either side exceeds the
/// f64 range; the ratios produced by the pmf recursion blow past that at
/// n ~ 30. This routine scales by a power of two so the integer quotient
/// carries 80 significant bits before the final rounding.
pub fn to_f64(r: &BigRational) -> f64 {
    big_ratio_to_f64(r.numer(), r.denom())
}

/// Directed-rounding conversion: a pair `(lo, hi)` of floats certified to
/// bracket the exact value. Used when an inequality check compares an exact
/// quantity against a floating-point one.
pub fn to_f64_bounds(r: &BigRational) -> (f64, f64) {
    let mid = to_f64(r);
    // nearest conversion is within 1 ulp; widen by two to be safe
    (mid.next_down().next_down(), mid.next_up().next_up())
}

pub(crate) fn big_ratio_to_f64(numer: &BigInt, denom: &BigInt) -> f64 {
    if numer.is_zero() {
        return 0.0;
    }
    let negative = (numer.sign() == Sign::Minus) != (denom.sign() == Sign::Minus);
    let num = numer.abs();
    let den = denom.abs();

    let shift: i64 = 80 - (num.bits() as i64 - den.bits() as i64);
    let quotient = if shift >= 0 {
        (num << shift as u64) / &den
    } else {
        num / (den << (-shift) as u64)
    };
    // quotient has ~80 bits and converts with a single rounding
    let magnitude = scale_pow2(quotient.to_f64().unwrap_or(f64::INFINITY), -shift);
    if negative {
        -magnitude
    } else {
        magnitude
    }
}

/// `x * 2^e` without overflowing the intermediate exponent.
fn scale_pow2(x: f64, e: i64) -> f64 {
    let mut result = x;
    let mut remaining = e;
    while remaining > 1000 {
        result *= 2f64.powi(1000);
        remaining -= 1000;
    }
    while remaining < -1000 {
        result *= 2f64.powi(-1000);
        remaining += 1000;
    }
    result * 2f64.powi(remaining as i32)
}

/// Canonical text form `"numerator/denominator"` in lowest terms, e.g.
/// `"29/6"`, `"0/1"`, `"-5/24"`.
pub fn format_rat(r: &BigRational) -> String {
    format!("{}/{}", r.numer(), r.denom())
}

/// Parses the canonical text form. A bare integer is accepted as `k/1`.
pub fn parse_rat(s: &str) -> Result<BigRational, Error> {
    let bad = || Error::BadRational(s.to_string());
    match s.split_once('/') {
        Some((n, d)) => {
            let numer: BigInt = n.trim().parse().map_err(|_| bad())?;
            let denom: BigInt = d.trim().parse().map_err(|_| bad())?;
            if denom.is_zero() {
                return Err(bad());
            }
            Ok(BigRational::new(numer, denom))
        }
        None => {
            let numer: BigInt = s.trim().parse().map_err(|_| bad())?;
            Ok(BigRational::from(numer))
        }
    }
}

/// Serde adapter: a single rational as its canonical string.
pub mod rat_serde {
    use super::*;
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(r: &BigRational, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&format_rat(r))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<BigRational, D::Error> {
        let text = String::deserialize(d)?;
        parse_rat(&text).map_err(serde::de::Error::custom)
    }
}

/// Serde adapter: a vector of rationals as canonical strings.
pub mod rat_vec_serde {
    use super::*;
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(v: &[BigRational], s: S) -> Result<S::Ok, S::Error> {
        s.collect_seq(v.iter().map(format_rat))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<BigRational>, D::Error> {
        let texts = Vec::<String>::deserialize(d)?;
        texts
            .iter()
            .map(|t| parse_rat(t).map_err(serde::de::Error::custom))
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_traits::One;
    use proptest::prelude::*;

    #[test]
    fn conversion_handles_huge_components() {
        // 100!-sized denominator, the regime where naive to_f64 NaNs out
        let mut den = BigInt::one();
        for k in 1..=100u32 {
            den *= k;
        }
        let r = BigRational::new(BigInt::from(3), den.clone());
        let f = to_f64(&r);
        assert!(f > 0.0 && f.is_finite());
        let back = BigRational::new(BigInt::from(3), den);
        let (lo, hi) = to_f64_bounds(&back);
        assert!(lo <= f && f <= hi);
    }

    #[test]
    fn format_and_parse_round_trip() {
        let r = rat(-5, 24);
        assert_eq!(format_rat(&r), "-5/24");
        assert_eq!(parse_rat("-5/24").unwrap(), r);
        assert_eq!(parse_rat("7").unwrap(), rat_int(7));
        assert!(parse_rat("1/0").is_err());
        assert!(parse_rat("x/2").is_err());
    }

    proptest! {
        #[test]
        fn conversion_matches_exact_small(n in -1_000_000i64..1_000_000, d in 1i64..1_000_000) {
            let r = rat(n, d);
            let expected = n as f64 / d as f64;
            let got = to_f64(&r);
            prop_assert!((got - expected).abs() <= expected.abs() * 1e-15 + 1e-300);
        }

        #[test]
        fn text_round_trip(n in any::<i64>(), d in 1i64..=i64::MAX) {
            let r = rat(n, d);
            prop_assert_eq!(parse_rat(&format_rat(&r)).unwrap(), r);
        }

        #[test]
        fn bounds_bracket(n in any::<i32>(), d in 1i32..=i32::MAX) {
            let r = rat(n as i64, d as i64);
            let (lo, hi) = to_f64_bounds(&r);
            let exact = n as f64 / d as f64; // both exact in f64? not exactly, but within 1 ulp
            prop_assert!(lo <= exact + exact.abs() * 1e-15 + f64::MIN_POSITIVE);
            prop_assert!(hi >= exact - exact.abs() * 1e-15 - f64::MIN_POSITIVE);
        }
    }
}
